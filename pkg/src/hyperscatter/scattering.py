"""Partial amplitude f0, its analytic low-energy form, and scaling studies.

Amplitude convention: at large R the lowest-channel solution is proportional
to ``J_3(kR) - i f0 H^(1)_3(kR)``.  For a real solution ``a J_3 + b Y_3`` this
gives ``f0 = 1/(a/b + i)``, so ``Im(1/f0) = 1`` identically.

For ``k << c`` the J_3 coefficient ratio grows like ``(c/k)^6`` and cannot be
resolved by fitting a single solution in double precision.  The numeric
amplitude is then assembled from the potential-free basis ``F+``, ``F-``:
``a/b = N+ * (C1/C2)`` relative to the background phase of ``F+``, where
``N+`` is the large-R amplitude of ``F+`` and ``C1/C2`` comes from matching
at the well edge.
"""

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import radial
from .errors import ExtractionError, ParameterError, ResonanceError, NearResonanceWarning
from .specfun import bessel_j, bessel_y
from .wkb import xi_constant

OMEGA_PINNED = 1.26
_ZERO_RATIO = 1e-9
_STABILITY_TOL = 0.05
_NEAR_RESONANCE = 1e-2
_FIT_RMS_TOL = 1e-2


class ValidityWarning(UserWarning):
    """An input lies outside the regime where the model is justified."""


@dataclass(frozen=True)
class Amplitude:
    """Extracted amplitude.

    ``coeff_ratio`` is ``a/b`` (J over Y coefficient, after removing any
    background phase); ``f0 = 1/(coeff_ratio + i)``.  ``stability`` is the
    largest relative change of ``f0`` across fit windows and methods.
    """

    f0: complex
    coeff_ratio: float
    fit_window: tuple
    stability: float
    no_scattering: bool = False
    method: str = "fit"
    diagnostics: dict = field(default_factory=dict)


def amplitude_from_ratio(ratio):
    """``1/(ratio + i)``; ``ratio = inf`` maps to 0."""
    if math.isinf(ratio):
        return 0j
    return 1.0 / complex(ratio, 1.0)


def _basis(order, kr):
    return np.column_stack([bessel_j(order, kr), bessel_y(order, kr)])


def _rotate(a, b, phase):
    """Coefficients in the basis rotated by ``phase`` (see module docstring)."""
    s, c = math.sin(phase), math.cos(phase)
    return a * c - b * s, a * s + b * c


def _window_estimates(sol, order, R):
    """Linear estimators of ``(a, b)`` on nodes ``R``: least squares and mean of 2x2 solves."""
    F, _ = sol.evaluate(R)
    A = _basis(order, sol.k * R)
    (a, b), *_ = np.linalg.lstsq(A, F, rcond=None)
    out = {"lstsq": (float(a), float(b))}
    # node pairs about a quarter period apart
    step = max(1, int(round(0.5 * math.pi / (sol.k * (R[1] - R[0])))))
    pairs = []
    for i in range(0, R.size - step, step):
        M = A[[i, i + step]]
        if abs(np.linalg.det(M)) >= 1e-3 * np.abs(M).max() ** 2:
            pairs.append(np.linalg.solve(M, F[[i, i + step]]))
    if pairs:
        a2, b2 = np.mean(np.array(pairs), axis=0)
        out["pairs"] = (float(a2), float(b2))
    return out


def extract_amplitude(sol, order=3, windows=None, background=None, n_nodes=40):
    """Fit ``F = a J_n(kR) + b Y_n(kR)`` at large R and return the amplitude.

    Parameters
    ----------
    sol : RadialSolution
        Real solution with ``k R_max >= 25``.
    order : int
        Bessel order of the asymptotic channel: 3 for ``c > 0`` and 0 for the
        free ``c = 0`` channel.
    windows : sequence of (R_lo, R_hi), optional
        At least two fit windows.  Default: the last 40% of the range split
        in two.
    background : RadialSolution or float, optional
        Phase removed before forming the ratio.  A solution is fitted with
        the same estimator in every window and its phase is used there,
        which cancels any imperfection of the Bessel basis common to both.
    n_nodes : int
        Least-squares nodes per window (>= 20).

    Raises
    ------
    ExtractionError
        If ``f0`` changes by more than 5% between windows or between the
        least-squares and pointwise 2x2 estimates.
    """
    R_max = sol.grid[-1]
    if sol.k * R_max < 25:
        raise ParameterError(f"k R_max = {sol.k * R_max:g} < 25")
    if n_nodes < 20:
        raise ParameterError("need at least 20 fit nodes per window")
    if windows is None:
        windows = ((0.6 * R_max, 0.8 * R_max), (0.8 * R_max, R_max))
    if len(windows) < 2:
        raise ParameterError("need at least two fit windows")
    if sol.potential is not None and min(w[0] for w in windows) <= sol.potential.r0:
        raise ParameterError("fit window overlaps the potential")

    estimates = []
    for lo, hi in windows:
        R = np.linspace(lo, hi, n_nodes)
        ests = _window_estimates(sol, order, R)
        refs = _window_estimates(background, order, R) if hasattr(background, "evaluate") else {}
        for name, (a, b) in ests.items():
            if name in refs:
                phase = math.atan2(-refs[name][1], refs[name][0])
            else:
                phase = float(background or 0.0)
            estimates.append((name, (lo, hi), *_rotate(a, b, phase), phase))

    _, window, a, b, phase = estimates[0]
    diag = {"a": a, "b": b, "background": phase}
    if abs(b) <= _ZERO_RATIO * abs(a):
        return Amplitude(f0=0j, coeff_ratio=math.inf, fit_window=window, stability=0.0,
                         no_scattering=True, method="fit", diagnostics=diag)
    f_ref = amplitude_from_ratio(a / b)
    spread = 0.0
    for _, _, ai, bi, _ in estimates:
        fi = amplitude_from_ratio(ai / bi) if bi != 0 else 0j
        spread = max(spread, abs(fi - f_ref) / abs(f_ref))
    if spread > _STABILITY_TOL:
        raise ExtractionError(f"amplitude changes by {spread:.3g} between fit windows")
    return Amplitude(f0=f_ref, coeff_ratio=a / b, fit_window=window, stability=spread,
                     method="fit", diagnostics=diag)


def numeric_amplitude(potential, k, basis=None, strict=True):
    """Amplitude from the ODE pipeline relative to the potential-free background.

    ``a/b = norm_plus * (C1/C2)`` with ``C1/C2`` the match of the inner
    solution to ``F+`` and the unscaled irregular partner at ``r0``.
    """
    c = potential.c
    if k > potential.q / 100:
        raise ParameterError(f"k = {k:g} violates k <= q/100")
    if basis is None:
        basis = radial.construct_f_basis(c, k, strict=strict)
    ratio_g, L = radial.numeric_ratio_g(potential, k, basis)
    A = ratio_g * basis.norm_plus
    return Amplitude(f0=amplitude_from_ratio(A), coeff_ratio=A,
                     fit_window=tuple(w for w in basis.windows[-1]),
                     stability=basis.window_spread, method="distorted_wave",
                     diagnostics={"norm_plus": basis.norm_plus,
                                  "background_phase": basis.background_phase,
                                  "c1_over_c2": basis.minus_scale * ratio_g,
                                  "inner_logderiv": L,
                                  "kappa_mix": basis.kappa_mix,
                                  "b_equivalent": basis.b_equivalent,
                                  "wronskian_drift": basis.wronskian_drift})


@dataclass(frozen=True)
class AnalyticAmplitudeParams:
    c: float
    k: float
    q: float
    r0: float
    b: float = 0.0
    pin_omega: bool = False

    def __post_init__(self):
        for name in ("c", "k", "q", "r0"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")
        if abs(self.b) > 1:
            raise ParameterError(f"|b| <= 1 required, got {self.b}")
        if not self.k < self.c / 10:
            raise ParameterError(f"k/c = {self.k / self.c:g} violates k < c/10")

    @property
    def beta(self):
        return radial.BETA_PER_C * self.c

    @property
    def omega(self):
        return OMEGA_PINNED if self.pin_omega else xi_constant().omega

    @property
    def j_ratio(self):
        x = self.q * self.r0
        j1 = bessel_j(1, x)
        if abs(j1) < 1e-10:
            raise ResonanceError(f"J_1(q r0) vanishes at q r0 = {x}")
        return bessel_j(0, x) / (x * j1)

    @property
    def bracket(self):
        return math.log(4.0 * self.beta * self.r0) + self.j_ratio


def analytic_ratio(p):
    return -p.omega * (p.c / p.k) ** 6 * p.bracket + p.b


def analytic_amplitude(p):
    """``1/(-Omega (c/k)^6 [ln(4 beta r0) + J] + b + i)``."""
    br = p.bracket
    if abs(br) < _NEAR_RESONANCE:
        warnings.warn(f"near resonance: ln(4 beta r0) + J = {br:.3g}", NearResonanceWarning,
                      stacklevel=2)
    return amplitude_from_ratio(analytic_ratio(p))


# --- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    k: float
    c: float
    f0_numeric: complex | None
    f0_analytic: complex | None

    @property
    def k_over_c(self):
        return self.k / self.c

    @property
    def f0(self):
        return self.f0_numeric if self.f0_numeric is not None else self.f0_analytic

    @property
    def rate(self):
        return abs(self.f0) ** 2


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    ci95: tuple
    rms: float
    flagged: bool


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    mode: str
    slopes: dict

    CSV_COLUMNS = ("k", "c", "k_over_c", "re_f0", "im_f0", "abs_f0", "rate",
                   "f0_analytic_re", "f0_analytic_im")

    def table(self):
        out = []
        for r in self.rows:
            fa = r.f0_analytic if r.f0_analytic is not None else complex(math.nan, math.nan)
            f = r.f0
            out.append((r.k, r.c, r.k_over_c, f.real, f.imag, abs(f), r.rate, fa.real, fa.imag))
        return out


def fit_power_law(x, y):
    """Least-squares slope of ``log y`` against ``log x`` with a 95% interval."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    res = stats.linregress(lx, ly)
    n = lx.size
    tq = stats.t.ppf(0.975, n - 2) if n > 2 else math.inf
    rms = float(np.sqrt(np.mean((ly - res.intercept - res.slope * lx) ** 2)))
    return SlopeFit(slope=float(res.slope), stderr=float(res.stderr),
                    ci95=(float(res.slope - tq * res.stderr), float(res.slope + tq * res.stderr)),
                    rms=rms, flagged=rms > _FIT_RMS_TOL)


def _sweep_point(args):
    c, k, q, r0, mode, b, pin_omega = args
    fn = fa = None
    if mode in ("numeric", "both"):
        fn = numeric_amplitude(radial.ModelPotential(q, r0, c), k).f0
    if mode in ("analytic", "both"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearResonanceWarning)
            fa = analytic_amplitude(AnalyticAmplitudeParams(c, k, q, r0, b=b, pin_omega=pin_omega))
    return SweepRow(k=k, c=c, f0_numeric=fn, f0_analytic=fa)


def worker_count(n_tasks, threads=None):
    if threads is None:
        env = os.environ.get("HYPERSCATTER_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(int(threads), n_tasks))


def scaling_sweep(c, k_values, potential, mode="both", b=0.0, pin_omega=False, threads=None):
    """Amplitudes over ``k_values`` and power-law fits of ``|f0|`` and ``|f0|^2``.

    ``k_values`` must be log-ordered, contain at least 8 points and lie in
    ``[1e-3 c, 1e-1 c]``.  Points run in parallel (``HYPERSCATTER_THREADS``
    caps the worker count); rows keep the input order.
    """
    if mode not in ("numeric", "analytic", "both"):
        raise ParameterError(f"mode must be numeric, analytic or both, got {mode!r}")
    k_values = [float(k) for k in k_values]
    if len(k_values) < 8:
        raise ParameterError("a sweep needs at least 8 k values")
    if any(b2 <= a2 for a2, b2 in zip(k_values[:-1], k_values[1:])):
        raise ParameterError("k values must be increasing")
    lo, hi = 1e-3 * c * (1 - 1e-12), 1e-1 * c * (1 + 1e-12)
    if k_values[0] < lo or k_values[-1] > hi:
        raise ParameterError("k values must lie in [1e-3 c, 1e-1 c]")
    if potential.c != c:
        raise ParameterError("potential was built for a different c")

    tasks = [(c, k, potential.q, potential.r0, mode, b, pin_omega) for k in k_values]
    workers = worker_count(len(tasks), threads)
    if workers == 1:
        rows = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, tasks))

    slopes = {}
    ks = np.array(k_values)
    if mode in ("numeric", "both"):
        amp = np.array([abs(r.f0_numeric) for r in rows])
        slopes["numeric"] = fit_power_law(ks, amp)
        slopes["numeric_rate"] = fit_power_law(ks, amp**2)
    if mode in ("analytic", "both"):
        amp = np.array([abs(r.f0_analytic) for r in rows])
        slopes["analytic"] = fit_power_law(ks, amp)
        slopes["analytic_rate"] = fit_power_law(ks, amp**2)
    return SweepResult(rows=tuple(rows), mode=mode, slopes=slopes)


def log_spaced(k_min, k_max, n):
    if not 0 < k_min < k_max or n < 2:
        raise ParameterError("need 0 < k_min < k_max and at least two points")
    return np.geomspace(k_min, k_max, n)


# --- gas-level scalings ------------------------------------------------------

GAMMA_COLUMNS = ("c", "gamma", "k", "suppression", "g3_ref", "g3_squared_ref", "ratio")


def gamma_report(n1d, c_values):
    """Suppression ``(k/c)^12`` at ``k = n1d`` next to the ``g3(0)^2 ~ gamma^-12`` reference.

    Rows: ``(c, gamma, k, (k/c)^12, gamma^-6, gamma^-12, ratio)``.  Requires
    ``gamma = c/n1d >= 10``.
    """
    if not n1d > 0:
        raise ParameterError(f"n1d must be > 0, got {n1d}")
    rows = []
    for c in c_values:
        gamma = c / n1d
        if gamma < 10:
            raise ParameterError(f"gamma = {gamma:g} violates gamma >= 10")
        k = n1d
        supp = (k / c) ** 12
        g3 = gamma ** -6.0
        rows.append((float(c), gamma, k, supp, g3, g3 * g3, supp / (g3 * g3)))
    return rows


def coupling_from_3d(a_s, l_perp):
    """Effective 1D coupling ``c = 2 a_s / l_perp^2`` from 3D scattering length and trap width."""
    if a_s < 0:
        raise ParameterError(f"a_s must be >= 0, got {a_s}")
    if not l_perp > 0:
        raise ParameterError(f"l_perp must be > 0, got {l_perp}")
    if a_s > 0 and l_perp < 10 * a_s:
        warnings.warn(f"l_perp = {l_perp:g} is not >> a_s = {a_s:g}", ValidityWarning,
                      stacklevel=2)
    return 2.0 * a_s / l_perp**2
