import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from hyperscatter import radial, scattering
from hyperscatter.errors import NearResonanceWarning, ParameterError, ResonanceError
from hyperscatter.specfun import bessel_j

C, R0 = 1.0, 0.01


def well(qr0=1.0, c=C, r0=R0):
    return radial.ModelPotential(qr0 / r0, r0, c)


def params(k=0.01, qr0=1.0, **kw):
    return scattering.AnalyticAmplitudeParams(C, k, qr0 / R0, R0, **kw)


@settings(max_examples=500, deadline=None)
@given(st.floats(-1e18, 1e18, allow_nan=False))
def test_unitarity_circle_for_any_ratio(ratio):
    f = scattering.amplitude_from_ratio(ratio)
    assert abs((1 / f).imag - 1) <= 1e-12
    assert abs(f) <= 1


def test_infinite_ratio_means_no_scattering():
    assert scattering.amplitude_from_ratio(math.inf) == 0


def test_free_channel_extraction_gives_zero():
    sol = radial.integrate_radial(0.0, 0.5, None)
    amp = scattering.extract_amplitude(sol, order=0)
    assert amp.no_scattering and amp.f0 == 0


@pytest.mark.parametrize("k", [0.1, 0.05])
def test_direct_fit_agrees_with_distorted_wave_route(k):
    p = well()
    basis = radial.construct_f_basis(C, k, strict=False)
    dw = scattering.numeric_amplitude(p, k, basis=basis)
    sol = radial.integrate_radial(C, k, p)
    fit = scattering.extract_amplitude(sol, background=basis.plus,
                                       windows=[(20 / k, 30 / k), (30 / k, 40 / k)])
    assert fit.coeff_ratio == pytest.approx(dw.coeff_ratio, rel=1e-3)
    assert fit.stability < 1e-3
    for f in (fit.f0, dw.f0):
        assert abs((1 / f).imag - 1) <= 1e-12


def test_extraction_preconditions():
    sol = radial.integrate_radial(C, 0.01, well(), R_max=1000.0)
    with pytest.raises(ParameterError):
        scattering.extract_amplitude(sol)
    sol = radial.integrate_radial(C, 0.01, well())
    with pytest.raises(ParameterError):
        scattering.extract_amplitude(sol, windows=[(1e-3, 10.0), (10.0, 20.0)])
    with pytest.raises(ParameterError):
        scattering.extract_amplitude(sol, windows=[(2000.0, 4000.0)])


def test_pipeline_against_analytic_at_k002():
    k = 0.02
    num = scattering.numeric_amplitude(well(), k)
    ana = scattering.analytic_amplitude(params(k))
    assert abs(num.f0) == pytest.approx(abs(ana), rel=0.3)


def test_analytic_example_with_pinned_constant():
    f = scattering.analytic_amplitude(params(0.01, pin_omega=True))
    bracket = math.log(4 * 3 * math.sqrt(2) / math.pi * R0) + 0.7651976865579666 / 0.44005058574493355
    assert bracket == pytest.approx(-1.180, abs=1e-3)
    assert f.real == pytest.approx(1 / (1.26e12 * -bracket), rel=1e-12)
    assert f.real == pytest.approx(6.7e-13, rel=1e-2)
    assert abs((1 / f).imag - 1) <= 1e-12


def test_analytic_vanishes_as_k_goes_to_zero():
    vals = [abs(scattering.analytic_amplitude(params(k))) for k in (1e-2, 1e-3, 1e-4)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-20


def test_analytic_sixth_power():
    ratio = abs(scattering.analytic_amplitude(params(2e-3))) / abs(scattering.analytic_amplitude(params(1e-3)))
    assert ratio == pytest.approx(64.0, rel=1e-3)


def test_analytic_pole_and_validation():
    zero = 3.8317059702075125
    with pytest.raises(ResonanceError):
        scattering.analytic_amplitude(params(qr0=zero))
    with pytest.raises(ParameterError):
        params(b=1.5)
    with pytest.raises(ParameterError):
        params(k=0.2)


def test_near_resonance_warns():
    lnb = math.log(4 * 3 * math.sqrt(2) / math.pi * R0)
    x = brentq(lambda x: lnb + bessel_j(0, x) / (x * bessel_j(1, x)), 0.3, 1.5, xtol=1e-15)
    with pytest.warns(NearResonanceWarning):
        f = scattering.analytic_amplitude(params(qr0=x))
    assert abs(f) > 1e-3


def test_b_shifts_the_real_part():
    f0 = scattering.analytic_amplitude(params(0.05))
    f1 = scattering.analytic_amplitude(params(0.05, b=1.0))
    assert (1 / f1).real - (1 / f0).real == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("scale", [2.0, 3.0])
def test_scale_covariance(scale):
    k = 0.01
    base_n = scattering.numeric_amplitude(well(), k).f0
    base_a = scattering.analytic_amplitude(params(k))
    p = radial.ModelPotential(100.0 / scale, R0 * scale, C / scale)
    num = scattering.numeric_amplitude(p, k / scale).f0
    ana = scattering.analytic_amplitude(scattering.AnalyticAmplitudeParams(C / scale, k / scale, 100.0 / scale, R0 * scale))
    assert abs(num - base_n) <= 1e-10 * abs(base_n)
    assert abs(ana - base_a) <= 1e-10 * abs(base_a)


def test_analytic_sweep_slopes():
    res = scattering.scaling_sweep(C, scattering.log_spaced(1e-3, 1e-2, 10), well(), mode="analytic")
    fit = res.slopes["analytic"]
    assert fit.slope == pytest.approx(6.0, abs=1e-6)
    assert fit.ci95[0] <= fit.slope <= fit.ci95[1]
    assert res.slopes["analytic_rate"].slope == pytest.approx(2 * fit.slope, rel=1e-12)
    assert [r.k for r in res.rows] == list(scattering.log_spaced(1e-3, 1e-2, 10))
    table = res.table()
    assert len(table[0]) == len(res.CSV_COLUMNS)
    assert all(np.isfinite(table[0]))


def test_sweep_order_independent_of_workers():
    ks = scattering.log_spaced(2e-3, 1e-2, 8)
    serial = scattering.scaling_sweep(C, ks, well(), mode="numeric", threads=1)
    parallel = scattering.scaling_sweep(C, ks, well(), mode="numeric", threads=2)
    assert [r.f0_numeric for r in serial.rows] == [r.f0_numeric for r in parallel.rows]
    amps = [abs(r.f0_numeric) for r in serial.rows]
    assert amps == sorted(amps)


@pytest.mark.parametrize("ks", [scattering.log_spaced(1e-3, 1e-2, 5),
                                scattering.log_spaced(1e-4, 1e-2, 10),
                                scattering.log_spaced(1e-3, 2e-1, 10),
                                scattering.log_spaced(1e-3, 1e-2, 10)[::-1]])
def test_sweep_preconditions(ks):
    with pytest.raises(ParameterError):
        scattering.scaling_sweep(C, ks, well(), mode="analytic")


def test_worker_count_honours_environment(monkeypatch):
    monkeypatch.setenv("HYPERSCATTER_THREADS", "3")
    assert scattering.worker_count(16) == 3
    assert scattering.worker_count(2) == 2
    assert scattering.worker_count(16, threads=1) == 1


def test_gamma_report():
    rows = scattering.gamma_report(1.0, [10.0, 20.0, 40.0])
    assert rows[0][3] == pytest.approx(1e-12, rel=1e-12)
    assert rows[1][3] / rows[0][3] == pytest.approx(1 / 4096, rel=1e-12)
    ratios = [r[6] for r in rows]
    assert max(ratios) - min(ratios) < 1e-12
    with pytest.raises(ParameterError, match="gamma >= 10"):
        scattering.gamma_report(1.0, [5.0])


def test_coupling_from_3d():
    assert scattering.coupling_from_3d(0.0, 1.0) == 0.0
    assert scattering.coupling_from_3d(0.005, 1.0) == pytest.approx(0.01)
    assert scattering.coupling_from_3d(0.005, 2.0) == pytest.approx(0.01 / 4)
    with pytest.warns(scattering.ValidityWarning):
        scattering.coupling_from_3d(0.5, 1.0)
    for bad in ((-1.0, 1.0), (0.1, 0.0)):
        with pytest.raises(ParameterError):
            scattering.coupling_from_3d(*bad)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        scattering.coupling_from_3d(0.01, 1.0)
