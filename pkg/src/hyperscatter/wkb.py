"""Quasiclassical solutions of the lowest-channel equation and the constant Xi.

    phi_pm(R) = C_pm / sqrt(lambda_0(R)) * exp(+- I(R)),   I(R) = int_0^R lambda_0(R')/R' dR'

with ``C_+ = 1/(2 sqrt(pi))`` and ``C_- = sqrt(pi)/2``, fixed by the large-z
forms of ``I_0(2 sqrt(beta R))`` and ``K_0(2 sqrt(beta R))``.  At large cR,
``I(R) - 3 ln(cR) -> ln(Xi)``.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channels import BETA_PER_C, SQRT2, lambda0
from .couplings import dlambda_dr
from .errors import ConvergenceError, ParameterError
from .specfun import bessel_i0

C_PLUS = 1.0 / (2.0 * math.sqrt(math.pi))
C_MINUS = math.sqrt(math.pi) / 2.0
#: First-order tail: lambda_0(x) - 3 ~ -TAIL / x.
TAIL = 18.0 * SQRT2 / math.pi
XI_NODES = (1e3, 1e4, 1e5)
_QUAD = dict(epsabs=0.0, epsrel=1e-13, limit=400)


def _quad(f, a, b):
    val, err = integrate.quad(f, a, b, **_QUAD)
    if not err <= 1e-10 * max(abs(val), 1e-300) + 1e-14:
        raise ConvergenceError(f"quadrature on [{a}, {b}] reached only {err:.2g}")
    return val


@functools.lru_cache(maxsize=4096)
def _exponent_x(x):
    """``int_0^x lambda_0(t)/t dt`` in the dimensionless variable."""
    if x <= 1.0:
        # t = u^2 removes the 1/sqrt(t) endpoint behaviour
        return _quad(lambda u: 2.0 * lambda0(u * u) / u if u > 0 else 2.0 * math.sqrt(BETA_PER_C),
                     0.0, math.sqrt(x))
    head = _exponent_x(1.0)
    # t = e^v over [0, ln x]; split into unit pieces to keep quad adaptive
    top = math.log(x)
    edges = np.append(np.arange(0.0, top, 1.0), top)
    return head + sum(_quad(lambda v: lambda0(math.exp(v)), a, b)
                      for a, b in zip(edges[:-1], edges[1:]))


def wkb_exponent(c, R):
    """``I(R) = int_0^R lambda_0(R')/R' dR'``; depends on ``c`` and ``R`` only through ``cR``."""
    if not R > 0:
        raise ParameterError(f"R must be > 0, got {R}")
    if not c > 0:
        raise ParameterError(f"c must be > 0, got {c}")
    return _exponent_x(float(c * R))


@dataclass(frozen=True)
class XiResult:
    """Xi and the table of its estimates.

    ``table`` rows are ``(cR, I - 3 ln(cR), tail corrected, extrapolated)``;
    the extrapolated column is NaN in the first row.
    """

    xi: float
    omega: float
    log_xi: float
    table: tuple
    spread: float


def _tail_corrected(x):
    return _exponent_x(x) - 3.0 * math.log(x) - TAIL / x


@functools.lru_cache(maxsize=16)
def xi_constant(c=1.0):
    """``Xi = exp(lim [I(R) - 3 ln(cR)])`` and ``Omega = 384 (Xi/pi)^2``.

    The known ``-TAIL/(cR)`` remainder of the limit is removed analytically;
    the rest converges like ``(cR)^-2`` and is Richardson-extrapolated from
    ``cR`` in {1e3, 1e4, 1e5}.
    """
    if not c > 0:
        raise ParameterError(f"c must be > 0, got {c}")
    rows = []
    prev = None
    extrap = []
    for x in XI_NODES:
        R = x / c
        xx = c * R
        raw = _exponent_x(xx) - 3.0 * math.log(xx)
        corr = raw - TAIL / xx
        ex = math.nan
        if prev is not None:
            ratio = (xx / prev[0]) ** 2
            ex = (ratio * corr - prev[1]) / (ratio - 1.0)
            extrap.append(ex)
        rows.append((xx, raw, corr, ex))
        prev = (xx, corr)
    log_xi = extrap[-1]
    spread = abs(extrap[-1] - extrap[-2])
    if spread > 1e-8:
        raise ConvergenceError(f"Xi extrapolation unsettled: successive estimates differ by {spread:.3g}")
    xi = math.exp(log_xi)
    return XiResult(xi=xi, omega=384.0 * (xi / math.pi) ** 2, log_xi=log_xi,
                    table=tuple(rows), spread=spread)


def validity(c, R):
    """``|d(R/lambda_0)/dR|``; the quasiclassical forms need this to be small."""
    lam = lambda0(c * R)
    return abs(1.0 / lam - R * dlambda_dr(0, c, R) / lam**2)


@dataclass(frozen=True)
class QcValue:
    value: float
    validity: float


def qc_solution(sign, c, R):
    """Quasiclassical solution ``phi_+`` (``sign=+1``) or ``phi_-`` (``sign=-1``) at ``R``.

    The validity indicator is returned alongside; values with an indicator
    above 1 are outside the quasiclassical window.
    """
    if sign not in (1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign}")
    lam = lambda0(c * R)
    expo = wkb_exponent(c, R)
    pref = C_PLUS if sign > 0 else C_MINUS
    return QcValue(value=pref / math.sqrt(lam) * math.exp(sign * expo), validity=validity(c, R))


@dataclass(frozen=True)
class WkbProfile:
    c: float
    grid: np.ndarray
    exponent: np.ndarray
    C_plus: float = C_PLUS
    C_minus: float = C_MINUS

    def phi(self, sign):
        lam = np.array([lambda0(self.c * r) for r in self.grid])
        pref = self.C_plus if sign > 0 else self.C_minus
        return pref / np.sqrt(lam) * np.exp(sign * self.exponent)


def wkb_profile(c, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be positive and strictly increasing")
    return WkbProfile(c=float(c), grid=grid,
                      exponent=np.array([wkb_exponent(c, r) for r in grid]))


@dataclass(frozen=True)
class TailoringRow:
    cR: float
    validity: float
    bessel_factor: float
    numeric_factor: float


def tailoring_sensitivity(c, cR_values=(0.5, 0.75, 1.0, 1.5, 2.0), plus=None):
    """Mismatch factors when switching to ``phi_+`` at each matching radius.

    ``bessel_factor`` is ``I_0(2 sqrt(beta R)) / phi_+(R)``; with a numerical
    ``F+`` solution supplied, ``numeric_factor`` is ``F+(R)/phi_+(R)``.
    Either factor multiplies the quasiclassical prediction of the large-R
    ``J_3`` coefficient ``8 sqrt(3) Xi / sqrt(pi) (c/k)^3``.  Raises
    :class:`ParameterError` where the validity indicator exceeds 1.
    """
    rows = []
    for x in cR_values:
        R = x / c
        qc = qc_solution(1, c, R)
        if qc.validity > 1.0:
            raise ParameterError(f"cR = {x}: quasiclassical validity indicator {qc.validity:.3g} > 1")
        z = 2.0 * math.sqrt(BETA_PER_C * x)
        num = math.nan
        if plus is not None:
            num = float(plus.evaluate(R)[0][0]) / qc.value
        rows.append(TailoringRow(cR=float(x), validity=qc.validity,
                                 bessel_factor=float(bessel_i0(z)) / qc.value, numeric_factor=num))
    return rows
