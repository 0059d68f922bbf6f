"""Lowest-channel hyperradial equation with the square-well three-body potential.

The equation ``-(1/R) (R F')' + [lambda_0^2/R^2 + U(R)] F = k^2 F`` is
integrated in the logarithmic variable ``tau = ln(cR)``, where it reads

    F_tt = [lambda_0(x)^2 + x^2 (u(x) - kappa^2)] F,    x = cR,

with ``u = U/c^2`` and ``kappa = k/c``.  There is no first-derivative term,
so ``F1 dF2/dtau - dF1/dtau F2 = R W(F1, F2)`` is conserved.  For ``c = 0``
the scale ``k`` replaces ``c``.

Solutions are produced by DOP853 with dense output; the potential's jump at
``r0`` is a segment boundary.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .channels import BETA_PER_C, lambda0
from .errors import ConvergenceError, ExtractionError, ParameterError, ResonanceError
from .specfun import bessel_i0, bessel_i1, bessel_j, bessel_jy_derivatives, bessel_k0, bessel_y

DEFAULT_RTOL = 1e-12
MAX_CR0 = 0.05
#: Fit windows in units of k*R: the amplitude is read off beyond kR = 20.
DEFAULT_WINDOWS_KR = ((20.0, 30.0), (30.0, 40.0))
_WINDOW_NODES = 48
_MAX_PHASE_STEP = 0.05
_WINDOW_TOL = 0.05


@dataclass(frozen=True)
class ModelPotential:
    """Square well ``U(R) = -q^2 - beta/R`` for ``R < r0`` and zero beyond.

    The ``-beta/R`` piece cancels the small-R adiabatic potential, so the
    total effective potential inside the well tends to ``-q^2``.
    """

    q: float
    r0: float
    c: float

    def __post_init__(self):
        if not self.q > 0:
            raise ParameterError(f"q must be > 0, got {self.q}")
        if not self.r0 > 0:
            raise ParameterError(f"r0 must be > 0, got {self.r0}")
        if not self.c >= 0:
            raise ParameterError(f"c must be >= 0, got {self.c}")
        if self.r0 * self.c > MAX_CR0:
            raise ParameterError(
                f"range too large: r0*c = {self.r0 * self.c:g} violates r0*c <= {MAX_CR0}")

    @property
    def beta(self):
        return BETA_PER_C * self.c

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        inside = -self.q**2 - self.beta / np.where(R > 0, R, np.inf)
        val = np.where(R < self.r0, inside, 0.0)
        return val if val.ndim else float(val)

    def three_body(self, R, alpha):
        """Hyperangle-resolved potential; this model is isotropic in ``alpha``."""
        return self(R)


def potential_value(p, R):
    """``U(R)`` for a :class:`ModelPotential`; ``R > 0``."""
    if np.any(np.asarray(R) <= 0):
        raise ParameterError("potential_value requires R > 0")
    return p(R)


# --- the ODE -----------------------------------------------------------------

def _scale(c, k):
    return c if c > 0 else k


def _make_q(c, k, potential):
    """Coefficient ``Q(x)`` of ``F_tt = Q F`` in the dimensionless variable ``x``."""
    s = _scale(c, k)
    kappa2 = (k / s) ** 2
    if potential is None:
        qhat2 = beta_hat = 0.0
        x0 = math.inf
    else:
        qhat2 = (potential.q / s) ** 2
        beta_hat = potential.beta / s
        x0 = s * potential.r0
    with_channel = c > 0

    def q_of_x(x, inside):
        lam2 = lambda0(x) ** 2 if with_channel else 0.0
        if inside:
            return lam2 - x * x * (qhat2 + kappa2) - beta_hat * x
        return lam2 - x * x * kappa2

    return q_of_x, x0


def _rhs(q_of_x, inside):
    def f(t, y):
        return [y[1], q_of_x(math.exp(t), inside) * y[0]]
    return f


@dataclass(frozen=True)
class _Segment:
    t0: float
    t1: float
    sol: object
    inside: bool


@dataclass(frozen=True)
class RadialSolution:
    """Dense solution ``F_0(R)`` with samples on a grid uniform in ``ln R``.

    ``F`` and ``dF`` (= dF/dR) are sampled on ``grid``.  :meth:`evaluate`
    interpolates with the integrator's dense output.
    """

    grid: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    k: float
    c: float
    potential: ModelPotential | None
    stats: dict
    _segments: tuple = field(repr=False, default=())
    _scale: float = field(repr=False, default=1.0)

    def evaluate(self, R):
        """Return ``(F, dF/dR)`` at ``R`` inside the integration range."""
        R = np.atleast_1d(np.asarray(R, dtype=float))
        t = np.log(self._scale * R)
        F = np.empty(R.shape)
        Ft = np.empty(R.shape)
        done = np.zeros(R.shape, dtype=bool)
        for seg in self._segments:
            lo, hi = min(seg.t0, seg.t1), max(seg.t0, seg.t1)
            tol = 1e-12 * max(1.0, abs(lo), abs(hi))
            mask = (~done) & (t >= lo - tol) & (t <= hi + tol)
            if np.any(mask):
                y = seg.sol(np.clip(t[mask], lo, hi))
                F[mask] = y[0]
                Ft[mask] = y[1]
                done |= mask
        if not np.all(done):
            raise ParameterError("evaluation point outside the integrated range")
        return F, Ft / R

    def residual(self):
        """Local residual of the radial equation at interior grid nodes.

        Numerov consistency ``F[i+1] - 2F[i] + F[i-1] - h^2/12 (Q F)[...]``
        on the uniform ``ln R`` grid, divided by
        ``|F[i+1]| + 2|F[i]| + |F[i-1]|``.  Nodes straddling the jump of
        the potential are set to zero.
        """
        q_of_x, x0 = _make_q(self.c, self.k, self.potential)
        x = self._scale * self.grid
        t = np.log(x)
        inside = x < x0
        qv = np.array([q_of_x(xi, ins) for xi, ins in zip(x, inside)])
        g = qv * self.F
        res = np.zeros(self.grid.size)
        h = np.diff(t)
        for i in range(1, self.grid.size - 1):
            if inside[i - 1] != inside[i + 1] or abs(h[i] - h[i - 1]) > 1e-9 * h[i]:
                continue
            hh = h[i] ** 2 / 12.0
            num = (self.F[i + 1] - 2 * self.F[i] + self.F[i - 1]
                   - hh * (g[i + 1] + 10 * g[i] + g[i - 1]))
            den = abs(self.F[i + 1]) + 2 * abs(self.F[i]) + abs(self.F[i - 1])
            res[i] = abs(num) / den if den > 0 else 0.0
        return res


def wronskian(u, v, R):
    """Weighted Wronskian ``R (u' v - v' u)`` of two solutions at ``R``."""
    fu, du = u.evaluate(R)
    fv, dv = v.evaluate(R)
    return R * (du * fv - dv * fu)


def _grid_step(q_of_x, x_lo, x_hi, inside, points_per_efold):
    xs = np.geomspace(x_lo, x_hi, 64)
    omega = max(math.sqrt(abs(q_of_x(xi, inside))) for xi in xs)
    return min(1.0 / points_per_efold, _MAX_PHASE_STEP / max(omega, 1e-300))


def _integrate(q_of_x, x0, t_start, t_end, y0, rtol):
    """Integrate from ``t_start`` to ``t_end`` (either direction), splitting at ``x0``."""
    breaks = [t_start]
    t_jump = math.log(x0) if math.isfinite(x0) else None
    if t_jump is not None and min(t_start, t_end) < t_jump < max(t_start, t_end):
        breaks.append(t_jump)
    breaks.append(t_end)
    segments = []
    y = np.asarray(y0, dtype=float)
    nfev = 0
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid = math.exp(0.5 * (a + b))
        inside = mid < x0
        out = solve_ivp(_rhs(q_of_x, inside), (a, b), y, method="DOP853", rtol=rtol,
                        atol=1e-300, dense_output=True)
        if not out.success:
            raise ConvergenceError(f"radial integration failed on tau in [{a}, {b}]: {out.message}")
        if not np.all(np.isfinite(out.y[:, -1])):
            raise ConvergenceError("radial solution overflowed")
        nfev += out.nfev
        segments.append(_Segment(a, b, out.sol, inside))
        y = out.y[:, -1]
    return segments, y, nfev


def _sample(segments, scale, q_of_x, x_lo, x_hi, points_per_efold):
    """Uniform-in-tau samples per segment, joined at segment ends."""
    ts = []
    for seg in sorted(segments, key=lambda s: min(s.t0, s.t1)):
        lo, hi = min(seg.t0, seg.t1), max(seg.t0, seg.t1)
        h = _grid_step(q_of_x, math.exp(lo), math.exp(hi), seg.inside, points_per_efold)
        n = max(2, int(math.ceil((hi - lo) / h)) + 1)
        tt = np.linspace(lo, hi, n)
        ts.append(tt if not ts else tt[1:])
    t = np.concatenate(ts)
    F = np.empty(t.size)
    Ft = np.empty(t.size)
    pos = 0
    for seg, tt in zip(sorted(segments, key=lambda s: min(s.t0, s.t1)), ts):
        y = seg.sol(tt)
        F[pos:pos + tt.size] = y[0]
        Ft[pos:pos + tt.size] = y[1]
        pos += tt.size
    R = np.exp(t) / scale
    return R, F, Ft / R


def default_r_min(c, potential):
    lengths = [1.0 / c] if c > 0 else []
    if potential is not None:
        lengths.append(potential.r0)
    if not lengths:
        return None
    return 1e-6 * min(lengths)


def _regular_start(c, k, potential, x_min):
    """Small-R regular solution and its tau-derivative at ``x_min``."""
    s = _scale(c, k)
    if potential is not None and x_min < s * potential.r0:
        K = math.sqrt((potential.q / s) ** 2 + (k / s) ** 2)
        z = K * x_min
        return [bessel_j(0, z), -z * bessel_j(1, z)]
    if c > 0:
        z = 2.0 * math.sqrt(BETA_PER_C * x_min)
        return [bessel_i0(z), 0.5 * z * bessel_i1(z)]
    z = x_min
    return [bessel_j(0, z), -z * bessel_j(1, z)]


def integrate_radial(c, k, potential=None, R_min=None, R_max=None, rtol=DEFAULT_RTOL,
                     points_per_efold=400):
    """Regular solution of the radial equation, integrated outward.

    Parameters
    ----------
    c : float
        Pairwise coupling, ``c >= 0``.
    k : float
        Relative wavenumber, ``k > 0``.
    potential : ModelPotential, optional
        Three-body well; the solution starts as ``J_0(qR)`` inside it.
        Without it the start is ``I_0(2 sqrt(beta R))`` (or ``J_0(kR)`` at
        ``c = 0``).
    R_min, R_max : float, optional
        Defaults ``1e-6 min(r0, 1/c)`` and ``40/k``.
    rtol : float
        Relative tolerance of the integrator.
    points_per_efold : int
        Minimum sampling density of the output grid in ``ln R``.

    Returns
    -------
    RadialSolution
    """
    if not k > 0:
        raise ParameterError(f"k must be > 0, got {k}")
    if c < 0:
        raise ParameterError(f"c must be >= 0, got {c}")
    if potential is not None and potential.c != c:
        raise ParameterError("potential was built for a different c")
    if R_min is None:
        R_min = default_r_min(c, potential) or 1e-6 / k
    if R_max is None:
        R_max = 40.0 / k
    if not 0 < R_min < R_max:
        raise ParameterError(f"need 0 < R_min < R_max, got {R_min}, {R_max}")
    if potential is not None and not R_min < potential.r0:
        raise ParameterError("R_min must lie inside the well (R_min < r0)")
    if potential is None and c > 0 and R_min > 1e-4 / c:
        raise ParameterError("R_min must satisfy R_min <= 1e-4/c")

    s = _scale(c, k)
    q_of_x, x0 = _make_q(c, k, potential)
    x_min, x_max = s * R_min, s * R_max
    y0 = _regular_start(c, k, potential, x_min)
    segments, _, nfev = _integrate(q_of_x, x0, math.log(x_min), math.log(x_max), y0, rtol)
    R, F, dF = _sample(segments, s, q_of_x, x_min, x_max, points_per_efold)
    return RadialSolution(grid=R, F=F, dF=dF, k=float(k), c=float(c), potential=potential,
                          stats={"method": "DOP853", "rtol": rtol, "nfev": nfev,
                                 "segments": len(segments), "direction": "outward"},
                          _segments=tuple(segments), _scale=s)


def _integrate_inward(c, k, y_end, R_lo, R_max, rtol, points_per_efold):
    s = _scale(c, k)
    q_of_x, x0 = _make_q(c, k, None)
    segments, _, nfev = _integrate(q_of_x, x0, math.log(s * R_max), math.log(s * R_lo),
                                   y_end, rtol)
    R, F, dF = _sample(segments, s, q_of_x, s * R_lo, s * R_max, points_per_efold)
    return RadialSolution(grid=R, F=F, dF=dF, k=float(k), c=float(c), potential=None,
                          stats={"method": "DOP853", "rtol": rtol, "nfev": nfev,
                                 "segments": len(segments), "direction": "inward"},
                          _segments=tuple(segments), _scale=s)


# --- asymptotic fits ---------------------------------------------------------

def window_nodes(k, window_kr, n=_WINDOW_NODES):
    lo, hi = window_kr
    return np.linspace(lo, hi, n) / k


def fit_bessel_pair(sol, order, R):
    """Least-squares ``F = a J_n(kR) + b Y_n(kR)`` at nodes ``R``; returns ``(a, b)``."""
    F, _ = sol.evaluate(R)
    kr = sol.k * np.asarray(R)
    A = np.column_stack([bessel_j(order, kr), bessel_y(order, kr)])
    coef, *_ = np.linalg.lstsq(A, F, rcond=None)
    return float(coef[0]), float(coef[1])


@dataclass(frozen=True)
class FBasis:
    """Pair of potential-free solutions ``F+`` (regular) and ``F-``.

    ``F+`` starts as ``I_0(2 sqrt(beta R))``; at large R it equals
    ``norm_plus [cos(d) J_3(kR) - sin(d) Y_3(kR)]`` with ``d = background_phase``.
    ``F-`` is the solution that is a pure phase-rotated irregular wave
    ``sin(d) J_3 + cos(d) Y_3`` at large R, scaled by ``minus_scale`` so
    that ``R (F+ F-' - F+' F-) = -1/2`` (the value for ``I_0``, ``K_0``).  At small R,
    ``F- = K_0 + kappa_mix I_0`` to leading order.
    """

    c: float
    k: float
    plus: RadialSolution
    minus: RadialSolution
    norm_plus: float
    background_phase: float
    minus_scale: float
    kappa_mix: float
    b_equivalent: float
    #: mean of ``R (F+' F- - F-' F+)``; differs from 1/2 by the fit error of ``norm_plus``
    wronskian: float
    wronskian_drift: float
    window_spread: float
    windows: tuple


def construct_f_basis(c, k, R_min=None, R_max=None, windows=DEFAULT_WINDOWS_KR,
                      rtol=DEFAULT_RTOL, strict=True, points_per_efold=400):
    """Build ``F+`` and ``F-`` for the potential-free equation.

    ``k <= c/50`` is required unless ``strict=False``.  Raises
    :class:`ExtractionError` if the large-R coefficients of ``F+`` differ
    by more than 5% between fit windows, and :class:`ConvergenceError` if
    the Wronskian of the pair drifts by more than 1e-6.
    """
    if not c > 0:
        raise ParameterError(f"the F+/F- basis needs c > 0, got {c}")
    if strict and k > c / 50:
        raise ParameterError(f"k/c = {k / c:g} violates k <= c/50")
    if R_max is None:
        R_max = 40.0 / k
    if R_min is None:
        R_min = 1e-8 / c
    if k * R_max < max(w[1] for w in windows) * (1 - 1e-12):
        raise ParameterError("R_max does not cover the fit windows")

    plus = integrate_radial(c, k, None, R_min=R_min, R_max=R_max, rtol=rtol,
                            points_per_efold=points_per_efold)
    fits = [fit_bessel_pair(plus, 3, window_nodes(k, w)) for w in windows]
    norms = [math.hypot(a, b) for a, b in fits]
    a, b = fits[-1]
    norm = norms[-1]
    spread = max(abs(n - norm) for n in norms) / norm
    if spread > _WINDOW_TOL:
        raise ExtractionError(f"F+ normalisation varies by {spread:.3g} between windows")
    delta = math.atan2(-b, a)

    x = k * R_max
    j, y, jp, yp = bessel_jy_derivatives(3, x)
    sd, cd = math.sin(delta), math.cos(delta)
    g_end = [sd * j + cd * y, x * (sd * jp + cd * yp)]
    g = _integrate_inward(c, k, g_end, R_min, R_max, rtol, points_per_efold)
    m = -math.pi / (4.0 * norm)
    minus = RadialSolution(grid=g.grid, F=m * g.F, dF=m * g.dF, k=g.k, c=g.c, potential=None,
                           stats=g.stats,
                           _segments=tuple(_ScaledSegment(sg, m) for sg in g._segments),
                           _scale=g._scale)

    probe = np.geomspace(R_min * 10, R_max * 0.9, 25)
    w = wronskian(plus, minus, probe)
    w_mean = float(np.mean(w))
    drift = float(np.max(np.abs(w - w_mean)) / abs(w_mean))
    if drift > 1e-6:
        raise ConvergenceError(f"Wronskian of F+ and F- drifts by {drift:.3g}")

    r_probe = 10 * R_min
    z = 2.0 * math.sqrt(BETA_PER_C * c * r_probe)
    f_minus, _ = minus.evaluate(r_probe)
    kappa_mix = float((f_minus[0] - bessel_k0(z)) / bessel_i0(z))
    return FBasis(c=float(c), k=float(k), plus=plus, minus=minus, norm_plus=norm,
                  background_phase=delta, minus_scale=m, kappa_mix=kappa_mix,
                  b_equivalent=kappa_mix * 4.0 / math.pi * norm**2,
                  wronskian=w_mean, wronskian_drift=drift,
                  window_spread=spread, windows=tuple(windows))


class _ScaledSegment:
    """Segment view with its dense output multiplied by a constant."""

    def __init__(self, seg, factor):
        self.t0, self.t1, self.inside = seg.t0, seg.t1, seg.inside
        self._sol = seg.sol
        self._factor = factor

    def sol(self, t):
        return self._factor * self._sol(t)


# --- matching ----------------------------------------------------------------

@dataclass(frozen=True)
class MatchResult:
    """Ratio ``C1/C2`` of the ``F+``/``F-`` coefficients of the solution with the well.

    ``c1_over_c2`` is the closed-form small-argument value;
    ``numeric`` (``None`` unless requested) is the match of the integrated
    inner solution to the numerical ``F+``/``F-`` basis.
    """

    c1_over_c2: float
    inner_logderiv: float
    numeric: float | None = None
    numeric_logderiv: float | None = None
    relative_difference: float | None = None


def closed_form_ratio(p):
    """``ln(2 sqrt(beta r0)) + J_0(q r0) / (2 q r0 J_1(q r0))``."""
    x = p.q * p.r0
    j1 = bessel_j(1, x)
    if abs(j1) < 1e-10:
        raise ResonanceError(f"J_1(q r0) vanishes at q r0 = {x}")
    if not p.beta > 0:
        raise ParameterError("closed-form matching needs c > 0")
    return math.log(2.0 * math.sqrt(p.beta * p.r0)) + bessel_j(0, x) / (2.0 * x * j1)


def inner_log_derivative(p, k, R_min=None, rtol=DEFAULT_RTOL):
    """``F'/F`` at ``r0`` of the regular solution inside the well (integrated)."""
    if R_min is None:
        R_min = default_r_min(p.c, p)
    s = _scale(p.c, k)
    q_of_x, x0 = _make_q(p.c, k, p)
    y0 = _regular_start(p.c, k, p, s * R_min)
    _, y, _ = _integrate(q_of_x, math.inf, math.log(s * R_min), math.log(x0), y0, rtol)
    if y[0] == 0:
        raise ResonanceError("inner solution has a node exactly at r0")
    return y[1] / y[0] / p.r0


def numeric_ratio_g(p, k, basis, rtol=DEFAULT_RTOL):
    """``C1/C2`` in the unscaled basis ``(F+, G)``, ``G = F-/minus_scale``."""
    L = inner_log_derivative(p, k, rtol=rtol)
    fp, dfp = basis.plus.evaluate(p.r0)
    fm, dfm = basis.minus.evaluate(p.r0)
    g, dg = fm[0] / basis.minus_scale, dfm[0] / basis.minus_scale
    den = dfp[0] - L * fp[0]
    if den == 0:
        raise ResonanceError("F+ satisfies the inner boundary condition; C2 = 0")
    return -(dg - L * g) / den, L


def match_ratio(p, k, basis=None, numeric=True, rtol=DEFAULT_RTOL):
    """Coefficient ratio ``C1/C2`` at the well edge.

    Requires ``k <= q/100``.  The closed form is always returned; with
    ``numeric=True`` the integrated solution is also matched to the
    numerical basis (built here if not supplied, which needs ``k <= c/50``).
    """
    if k > p.q / 100:
        raise ParameterError(f"k = {k:g} violates k <= q/100 = {p.q / 100:g}")
    x = p.q * p.r0
    closed = closed_form_ratio(p)
    inner_closed = -p.q * bessel_j(1, x) / bessel_j(0, x)
    if not numeric:
        return MatchResult(c1_over_c2=closed, inner_logderiv=inner_closed)
    if basis is None:
        basis = construct_f_basis(p.c, k, rtol=rtol)
    ratio_g, L = numeric_ratio_g(p, k, basis, rtol=rtol)
    num = basis.minus_scale * ratio_g
    return MatchResult(c1_over_c2=closed, inner_logderiv=inner_closed, numeric=num,
                       numeric_logderiv=L, relative_difference=abs(num - closed) / abs(closed))
