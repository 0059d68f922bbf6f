"""Hyperspherical coordinates and the hyperangular eigenproblem.

Lengths are in units where hbar = 1 and the particle mass is 1/2.  The
eigenvalue equation for channel ``n`` is

    lambda * tan(pi*lambda/6 - pi*n/2) = c*R / sqrt(2),

with exactly one root in ``(3n, 3n + 3)`` for ``c*R > 0``.  Writing
``theta = pi*lambda/6 - pi*n/2`` maps the bracket onto ``(0, pi/2)``, where
``tan`` has no pole; the solver works with ``theta`` (small ``c*R``) or with
``pi/2 - theta`` (large ``c*R``) so that ``cos(theta)`` stays accurate.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError

SQRT2 = math.sqrt(2.0)
#: beta / c, where beta = 3*sqrt(2)*c/pi sets the small-R potential beta/R.
BETA_PER_C = 3.0 * SQRT2 / math.pi

_SWITCH_S = 1.5
_MAX_ITER = 100


@dataclass(frozen=True)
class HyperCoords:
    X: float
    R: float
    alpha: float


def to_hyperspherical(x1, x2, x3):
    """Map three positions on a line to centre of mass ``X``, ``R`` and ``alpha``.

    ``R sin(alpha) = (x1 - x2)/sqrt(2)`` and
    ``R cos(alpha) = sqrt(2/3) (x3 - (x1 + x2)/2)``; ``alpha`` lies in
    ``(-pi, pi]`` and is 0 for coincident particles.
    """
    rho1 = (x1 - x2) / SQRT2
    rho2 = math.sqrt(2.0 / 3.0) * (x3 - 0.5 * (x1 + x2))
    R = math.hypot(rho1, rho2)
    if R == 0.0:
        alpha = 0.0
    else:
        alpha = math.atan2(rho1, rho2)
        if alpha <= -math.pi:
            alpha = math.pi
    return HyperCoords(X=(x1 + x2 + x3) / 3.0, R=R, alpha=alpha)


def from_hyperspherical(coords):
    """Inverse of :func:`to_hyperspherical`; returns ``(x1, x2, x3)``."""
    rho1 = coords.R * math.sin(coords.alpha)
    rho2 = coords.R * math.cos(coords.alpha)
    pair_sum = 2.0 * coords.X - math.sqrt(2.0 / 3.0) * rho2
    x3 = coords.X + math.sqrt(2.0 / 3.0) * rho2
    return 0.5 * (pair_sum + SQRT2 * rho1), 0.5 * (pair_sum - SQRT2 * rho1), x3


def relative_momentum(k1, k2, k3):
    """Relative wavenumber ``k`` with ``k^2 = [(k1-k2)^2 + (k2-k3)^2 + (k3-k1)^2] / 3``."""
    return math.sqrt(((k1 - k2) ** 2 + (k2 - k3) ** 2 + (k3 - k1) ** 2) / 3.0)


def reduce_angle(alpha):
    """Reduce angles to the principal interval ``(-pi, pi]``."""
    a = np.asarray(alpha, dtype=float)
    r = np.pi - np.mod(np.pi - a, 2 * np.pi)
    return r if r.ndim else float(r)


# --- eigenvalues -------------------------------------------------------------

def _root(n, s):
    """Solve for channel ``n`` at ``s = cR/sqrt(2)``.

    Returns ``(lam, sin_theta, cos_theta, iterations)``.  Safeguarded Newton
    iteration in a bracket where the residual is monotone.
    """
    if s == 0.0:
        return 3.0 * n, 0.0, 1.0, 0
    base = 3.0 * n
    k6 = 6.0 / math.pi
    use_theta = s <= _SWITCH_S
    if use_theta:
        # g(theta) = lam sin(theta) - s cos(theta), increasing on [0, pi/2]
        if n == 0:
            v = min(math.sqrt(s / k6), 1.5)
        else:
            v = math.atan(s / (base + 1.5))
    else:
        # h(eps) = lam cos(eps) - s sin(eps), decreasing on [0, pi/2]
        v = math.atan((base + 3.0) / (s + k6))
    lo, hi = 0.0, 0.5 * math.pi
    for it in range(1, _MAX_ITER + 1):
        sv, cv = math.sin(v), math.cos(v)
        if use_theta:
            lam = base + k6 * v
            f = lam * sv - s * cv
            df = k6 * sv + lam * cv + s * sv
            if f > 0:
                hi = v
            else:
                lo = v
        else:
            lam = base + 3.0 - k6 * v
            f = -(lam * cv - s * sv)
            df = k6 * cv + lam * sv + s * cv
            if f > 0:
                hi = v
            else:
                lo = v
        step = f / df
        new = v - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if abs(new - v) <= 4e-16 * max(v, 1e-300) or hi - lo <= 1e-300:
            v = new
            break
        v = new
    else:
        raise ConvergenceError(
            f"eigenvalue iteration for n={n}, cR={s * SQRT2} did not converge; "
            f"bracket=({lo!r}, {hi!r}) in {'theta' if use_theta else 'pi/2-theta'}")
    if use_theta:
        return base + k6 * v, math.sin(v), math.cos(v), it
    return base + 3.0 - k6 * v, math.cos(v), math.sin(v), it


def lambda0(cR):
    """Lowest eigenvalue ``lambda_0`` at a single value of ``cR`` (fast path)."""
    return _root(0, cR / SQRT2)[0]


def lambda_residual(n, lam, cR):
    """Normalised residual of the eigenvalue equation.

    Evaluated in the pole-free form ``lam*sin(theta) - s*cos(theta)`` divided
    by ``max(lam, s)``; vanishes exactly at a root.
    """
    s = cR / SQRT2
    sin_t = math.sin(math.pi * (lam - 3.0 * n) / 6.0)
    cos_t = math.sin(math.pi * (3.0 * (n + 1) - lam) / 6.0)
    return (lam * sin_t - s * cos_t) / max(lam, s, 1e-300)


@dataclass(frozen=True)
class ChannelEigenvalue:
    n: int
    cR: float
    lam: float
    residual: float
    iterations: int = 0


def solve_lambda(n, cR):
    """Root ``lambda_n`` of the eigenvalue equation at dimensionless ``cR >= 0``."""
    if n < 0 or int(n) != n:
        raise ParameterError(f"channel index must be a nonnegative integer, got {n}")
    if not cR >= 0:
        raise ParameterError(f"cR must be >= 0, got {cR}")
    lam, _, _, it = _root(int(n), cR / SQRT2)
    return ChannelEigenvalue(n=int(n), cR=float(cR), lam=lam,
                             residual=lambda_residual(n, lam, cR), iterations=it)


def lambda_trig(n, cR):
    """Return ``(lam, sin(theta), cos(theta))`` with full relative accuracy in both."""
    return _root(int(n), cR / SQRT2)[:3]


# --- eigenfunctions ----------------------------------------------------------

def chi_tilde(n, lam, alpha):
    """Single-sector eigenfunction, nonzero only for ``|alpha| <= pi/3``."""
    a = np.abs(reduce_angle(alpha))
    val = np.where(a <= np.pi / 3,
                   np.cos(lam * (np.pi / 6 - a) - 0.5 * np.pi * n), 0.0)
    return val if val.ndim else float(val)


def chi_full(n, lam, alpha):
    """Symmetrised eigenfunction: sum of the three sector copies at 0 and +-2pi/3.

    The copies have disjoint supports up to their shared endpoints, so each
    angle is mapped into ``[-pi/3, pi/3]`` and evaluated once.
    """
    a = np.asarray(alpha, dtype=float)
    sector = np.round(a / (2 * np.pi / 3))
    red = a - sector * (2 * np.pi / 3)
    val = np.cos(lam * (np.pi / 6 - np.abs(red)) - 0.5 * np.pi * n)
    return val if val.ndim else float(val)


def normalization_b(n, lam):
    """``B_n = int_0^{pi/3} chi_tilde_n^2 dalpha = pi/6 + (-1)^n sin(pi lam/3)/(2 lam)``."""
    sign = -1.0 if n % 2 else 1.0
    # sin(pi lam/3)/(2 lam) = (pi/6) sinc(lam/3), finite as lam -> 0
    return np.pi / 6 * (1.0 + sign * np.sinc(np.asarray(lam, dtype=float) / 3.0))


@dataclass(frozen=True)
class AdiabaticChannel:
    n: int
    c: float
    grid: np.ndarray
    lambdas: np.ndarray

    def potential(self):
        """Adiabatic hyperspherical potential ``lambda_n^2 / R^2`` on the grid."""
        return self.lambdas**2 / self.grid**2


def adiabatic_channel(n, c, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be positive and strictly increasing")
    if c < 0:
        raise ParameterError(f"c must be >= 0 (repulsive), got {c}")
    lams = np.array([_root(n, c * R / SQRT2)[0] for R in grid])
    return AdiabaticChannel(n=n, c=float(c), grid=grid, lambdas=lams)
