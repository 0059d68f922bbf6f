"""Non-adiabatic coupling matrices W, Y and the three-body matrix U.

The hyperradial derivatives of the sector eigenfunction factor through the
derivatives of ``lambda_n(R)``:

    d/dR chi_n   = lambda_n'   * g_n(alpha),   g_n = -sin(phi_n) (pi/6 - alpha)
    d2/dR2 chi_n = lambda_n'^2 * h_n(alpha) + lambda_n'' * g_n(alpha),
                                               h_n = -cos(phi_n) (pi/6 - alpha)^2

with ``phi_n = lambda_n (pi/6 - alpha) - pi n/2``.  The remaining angular
integrals over ``[0, pi/3]`` are O(1) and are done by adaptive quadrature.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .channels import SQRT2, lambda_trig, normalization_b
from .errors import ConvergenceError, ParameterError

MAX_CHANNELS = 8
_QUAD_EPS = 1e-12
_QUAD_ABS_TOL = 1e-9


def _dlam_ds(n, s):
    """First and second derivative of lambda_n with respect to s = cR/sqrt(2)."""
    lam, st, ct = lambda_trig(n, s * SQRT2)
    p6 = math.pi / 6
    d = st + p6 * (lam * ct + s * st)
    d1 = ct / d
    dd_dlam = p6 * ct + p6 * (ct - lam * p6 * st + s * p6 * ct)
    dd_ds = p6 * st
    dh_dlam = (-p6 * st * d - ct * dd_dlam) / d**2
    dh_ds = -ct * dd_ds / d**2
    d2 = dh_dlam * d1 + dh_ds
    return lam, d1, d2


def dlambda_dr(n, c, R):
    """``d lambda_n / dR`` by implicit differentiation of the eigenvalue equation."""
    if c == 0:
        return 0.0
    if not R > 0 or c < 0:
        raise ParameterError("dlambda_dr requires R > 0 and c >= 0")
    return c / SQRT2 * _dlam_ds(n, c * R / SQRT2)[1]


def d2lambda_dr2(n, c, R):
    """``d^2 lambda_n / dR^2``."""
    if c == 0:
        return 0.0
    if not R > 0 or c < 0:
        raise ParameterError("d2lambda_dr2 requires R > 0 and c >= 0")
    return 0.5 * c * c * _dlam_ds(n, c * R / SQRT2)[2]


@dataclass(frozen=True)
class CouplingMatrices:
    c: float
    R: float
    N: int
    W: np.ndarray
    Y: np.ndarray
    U: np.ndarray
    lambdas: np.ndarray
    B: np.ndarray


def _quad(f, what):
    with warnings.catch_warnings():
        # near-zero (orthogonal) entries cannot meet a relative target; judge by the
        # absolute error estimate instead
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0.0, math.pi / 3, epsabs=_QUAD_EPS, epsrel=_QUAD_EPS,
                                  limit=200)
    if not err <= _QUAD_ABS_TOL:
        raise ConvergenceError(f"quadrature for {what} did not converge: error estimate {err:.3g}")
    return val


def coupling_matrices(c, R, N, potential=None):
    """Matrices ``W[n, n']``, ``Y[n, n']`` and ``U[n, n']`` for ``n, n' < N`` at radius ``R``.

    Parameters
    ----------
    c : float
        Pairwise coupling, ``c >= 0``.
    R : float
        Hyperradius, ``R > 0``.
    N : int
        Number of channels, ``1 <= N <= 8``.
    potential : optional
        Three-body potential object providing ``three_body(R, alpha)``
        (e.g. :class:`hyperscatter.radial.ModelPotential`).  ``U`` is zero
        when omitted.
    """
    if not R > 0:
        raise ParameterError(f"R must be > 0, got {R}")
    if c < 0:
        raise ParameterError(f"c must be >= 0, got {c}")
    if not 1 <= N <= MAX_CHANNELS:
        raise ParameterError(f"N must be in 1..{MAX_CHANNELS}, got {N}")

    s = c * R / SQRT2
    lam = np.empty(N)
    d1 = np.zeros(N)
    d2 = np.zeros(N)
    for n in range(N):
        if c == 0:
            lam[n] = 3.0 * n
        else:
            lam[n], ds1, ds2 = _dlam_ds(n, s)
            d1[n] = c / SQRT2 * ds1
            d2[n] = 0.5 * c * c * ds2
    B = np.array([float(normalization_b(n, lam[n])) for n in range(N)])

    def phase(n, a):
        return lam[n] * (math.pi / 6 - a) - 0.5 * math.pi * n

    def chi(n, a):
        return math.cos(phase(n, a))

    def g(n, a):
        return -math.sin(phase(n, a)) * (math.pi / 6 - a)

    def h(n, a):
        return -math.cos(phase(n, a)) * (math.pi / 6 - a) ** 2

    W = np.zeros((N, N))
    Y = np.zeros((N, N))
    U = np.zeros((N, N))
    for n in range(N):
        for m in range(N):
            if d1[m] != 0.0 or d2[m] != 0.0:
                ig = _quad(lambda a: chi(n, a) * g(m, a), f"W[{n},{m}]")
                ih = _quad(lambda a: chi(n, a) * h(m, a), f"Y[{n},{m}]")
                W[n, m] = 2.0 * d1[m] * ig / B[n]
                Y[n, m] = (d1[m] ** 2 * ih + (d2[m] + d1[m] / R) * ig) / B[n]
            if potential is not None:
                iu = _quad(lambda a: chi(n, a) * potential.three_body(R, a) * chi(m, a),
                           f"U[{n},{m}]")
                U[n, m] = iu / B[n]
    return CouplingMatrices(c=float(c), R=float(R), N=N, W=W, Y=Y, U=U, lambdas=lam, B=B)


@dataclass
class AdiabaticityReport:
    c: float
    R: np.ndarray
    y00_ratio: np.ndarray
    w00_ratio: np.ndarray
    lambdas: np.ndarray
    decay_exponents: dict = field(default_factory=dict)

    @property
    def max_y00_ratio(self):
        return float(np.max(self.y00_ratio)) if self.R.size else 0.0


def _decay_exponents(c, channels):
    """Log-log slopes of the diagonal and off-diagonal couplings over cR in [1e2, 1e4]."""
    R = np.logspace(2, 4, 9) / c
    series = {"adiabatic_potential": [], "Y00": [], "W00": []}
    if channels > 1:
        series.update({"Y01": [], "W01": []})
    for r in R:
        m = coupling_matrices(c, r, min(channels, 2))
        series["adiabatic_potential"].append(m.lambdas[0] ** 2 / r**2)
        series["Y00"].append(abs(m.Y[0, 0]))
        series["W00"].append(abs(m.W[0, 0]))
        if channels > 1:
            series["Y01"].append(abs(m.Y[0, 1]))
            series["W01"].append(abs(m.W[0, 1]))
    logr = np.log(R)
    return {name: float(stats.linregress(logr, np.log(vals)).slope)
            for name, vals in series.items()}


def adiabaticity_report(c, R_grid, channels=3):
    """Size of the neglected diagonal terms relative to the adiabatic potential.

    Per radius: ``|Y00| R^2 / lambda_0^2`` and ``|W00| R / lambda_0``.  With
    ``c > 0`` the large-R decay exponents of the couplings and of
    ``lambda_0^2 / R^2`` are fitted over ``cR in [1e2, 1e4]``.
    """
    R = np.asarray(R_grid, dtype=float)
    if R.ndim != 1 or np.any(R <= 0) or np.any(np.diff(R) <= 0):
        raise ParameterError("R_grid must be positive and strictly increasing")
    y_ratio = np.zeros(R.size)
    w_ratio = np.zeros(R.size)
    lams = np.zeros((R.size, channels))
    for i, r in enumerate(R):
        m = coupling_matrices(c, r, channels)
        lams[i] = m.lambdas
        if c > 0:
            y_ratio[i] = abs(m.Y[0, 0]) * r**2 / m.lambdas[0] ** 2
            w_ratio[i] = abs(m.W[0, 0]) * r / m.lambdas[0]
    exps = _decay_exponents(c, channels) if c > 0 else {}
    return AdiabaticityReport(c=float(c), R=R, y00_ratio=y_ratio, w00_ratio=w_ratio,
                              lambdas=lams, decay_exponents=exps)
