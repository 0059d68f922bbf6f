import math
import re

import numpy as np
import pytest

from hyperscatter import radial
from hyperscatter.channels import BETA_PER_C, lambda0
from hyperscatter.errors import ParameterError, ResonanceError
from hyperscatter.specfun import bessel_i0, bessel_j, bessel_k0, bessel_y
from hyperscatter.wkb import xi_constant

C, R0 = 1.0, 0.01


def well(qr0=1.0, c=C, r0=R0):
    return radial.ModelPotential(qr0 / r0, r0, c)


def test_potential_values():
    p = well()
    assert radial.potential_value(p, 2 * R0) == 0.0
    assert radial.potential_value(p, R0 / 2) == pytest.approx(-p.q**2 - 2 * p.beta / R0)
    assert p.beta == pytest.approx(3 * math.sqrt(2) / math.pi)
    assert p.three_body(R0 / 2, 0.7) == p(R0 / 2)
    with pytest.raises(ParameterError):
        radial.potential_value(p, 0.0)


def test_potential_cancels_small_r_channel_potential():
    p = well()
    R = 1e-6 / C
    total = lambda0(C * R) ** 2 / R**2 + p(R)
    assert total == pytest.approx(-p.q**2, rel=1e-2)


@pytest.mark.parametrize("kwargs, fragment", [
    (dict(q=1.0, r0=0.2, c=1.0), "r0*c <= 0.05"),
    (dict(q=0.0, r0=0.01, c=1.0), "q must be"),
    (dict(q=1.0, r0=-1.0, c=1.0), "r0 must be"),
])
def test_potential_validation(kwargs, fragment):
    with pytest.raises(ParameterError, match=re.escape(fragment)):
        radial.ModelPotential(**kwargs)


def test_free_channel_is_bessel_j0():
    k = 0.5
    sol = radial.integrate_radial(0.0, k, None)
    sel = sol.grid > 1.0
    ref = bessel_j(0, k * sol.grid[sel])
    assert np.max(np.abs(sol.F[sel] - ref)) < 1e-8


def test_free_channel_has_no_irregular_part():
    k = 0.5
    sol = radial.integrate_radial(0.0, k, None)
    R = np.linspace(30 / k, 40 / k, 60)
    F, _ = sol.evaluate(R)
    A = np.column_stack([bessel_j(0, k * R), bessel_y(0, k * R)])
    (a, b), *_ = np.linalg.lstsq(A, F, rcond=None)
    assert abs(b) < 1e-8 * abs(a)


def test_residual_is_small(basis_001):
    sol = radial.integrate_radial(C, 0.01, well())
    for s in (sol, basis_001.plus, basis_001.minus):
        assert s.residual().max() <= 1e-8
        assert np.all(np.isfinite(s.F))


def test_refinement_in_oscillatory_region():
    k = 0.01
    fine = radial.integrate_radial(C, k, well(), rtol=1e-12)
    coarse = radial.integrate_radial(C, k, well(), rtol=1e-10)
    R = np.linspace(10 / k, 40 / k, 200)
    a, _ = fine.evaluate(R)
    b, _ = coarse.evaluate(R)
    assert np.max(np.abs(a - b)) / np.max(np.abs(a)) < 1e-7


def test_small_r_regularity_inside_well():
    p = well()
    sol = radial.integrate_radial(C, 0.01, p)
    r = sol.grid[0]
    f = sol.evaluate([r, 2 * r])[0]
    K = math.sqrt(p.q**2 + 0.01**2)
    assert f[0] / f[1] == pytest.approx(bessel_j(0, K * r) / bessel_j(0, 2 * K * r), rel=1e-4)


def test_integration_preconditions():
    with pytest.raises(ParameterError):
        radial.integrate_radial(C, 0.0)
    with pytest.raises(ParameterError):
        radial.integrate_radial(C, 0.01, well(), R_min=2 * R0)
    with pytest.raises(ParameterError):
        radial.integrate_radial(C, 0.01, None, R_min=1e-3)
    with pytest.raises(ParameterError):
        radial.integrate_radial(2.0, 0.01, well())


def test_plus_solution_small_r_form(basis_001):
    R = 0.1 / C
    z = 2 * math.sqrt(BETA_PER_C * C * R)
    assert basis_001.plus.evaluate(R)[0][0] == pytest.approx(bessel_i0(z), rel=5e-3)


def test_minus_solution_small_r_form_with_admixture(basis_001):
    # F- = K_0 + kappa I_0 with kappa read off deep inside; the combination holds at cR = 0.1
    R = 0.1 / C
    z = 2 * math.sqrt(BETA_PER_C * C * R)
    f = basis_001.minus.evaluate(R)[0][0]
    assert f - basis_001.kappa_mix * bessel_i0(z) == pytest.approx(bessel_k0(z), rel=5e-3)


@pytest.mark.xfail(strict=True, reason="F- carries an I_0 admixture of about 0.8% of K_0 at cR = 0.1")
def test_minus_solution_is_pure_k0_at_small_r(basis_001):
    R = 0.1 / C
    z = 2 * math.sqrt(BETA_PER_C * C * R)
    # best normalisation over cR in [1e-4, 0.1]
    Rs = np.geomspace(1e-4, 0.1, 20) / C
    zs = 2 * np.sqrt(BETA_PER_C * C * Rs)
    f = basis_001.minus.evaluate(Rs)[0]
    scale = np.dot(f, bessel_k0(zs)) / np.dot(bessel_k0(zs), bessel_k0(zs))
    assert basis_001.minus.evaluate(R)[0][0] == pytest.approx(scale * bessel_k0(z), rel=5e-3)


def test_wronskian_conserved(basis_001):
    R = np.geomspace(1e-7, 3999.0, 200)
    w = radial.wronskian(basis_001.plus, basis_001.minus, R)
    assert np.max(np.abs(w / w.mean() - 1)) < 1e-6
    # normalisation of F- targets the I_0, K_0 value
    assert w.mean() == pytest.approx(0.5, rel=1e-5)


def test_wronskian_of_solutions_with_well():
    p = well()
    k = 0.01
    u = radial.integrate_radial(C, k, p)
    v = radial.integrate_radial(C, k, p, R_min=u.grid[0] * 3)
    # two regular solutions are proportional; their Wronskian vanishes relative to |u||v|/R
    R = np.geomspace(R0 * 2, 3000.0, 50)
    fu, _ = u.evaluate(R)
    fv, _ = v.evaluate(R)
    w = radial.wronskian(u, v, R)
    assert np.max(np.abs(w) / (np.abs(fu * fv).max())) < 1e-6


def test_plus_amplitude_scaling(basis_001):
    # the large-R J_3 amplitude of F+ scales as (c/k)^3
    other = radial.construct_f_basis(C, 0.002)
    a = basis_001.norm_plus * 0.01**3
    b = other.norm_plus * 0.002**3
    assert a == pytest.approx(b, rel=1e-3)


def test_plus_amplitude_against_quasiclassical_prefactor(basis_001):
    xi = xi_constant().xi
    pred = 8 * math.sqrt(3) * xi / math.sqrt(math.pi)
    assert basis_001.norm_plus * (0.01 / C) ** 3 == pytest.approx(pred, rel=0.1)


@pytest.mark.xfail(strict=True, reason="with Xi = 0.18 the prefactor is 1.407, 29% below the integrated 1.977")
def test_plus_amplitude_with_two_digit_constant(basis_001):
    assert basis_001.norm_plus * (0.01 / C) ** 3 == pytest.approx(0.876, rel=0.1)


def test_background_phase_is_small_and_scales_with_k(basis_001):
    other = radial.construct_f_basis(C, 0.002)
    assert basis_001.background_phase / other.background_phase == pytest.approx(5.0, rel=1e-2)


def test_basis_precondition():
    with pytest.raises(ParameterError, match="k <= c/50"):
        radial.construct_f_basis(C, 0.05)


def test_closed_form_example():
    m = radial.match_ratio(well(1.0), 0.01, numeric=False)
    beta = 3 * math.sqrt(2) / math.pi
    expect = math.log(2 * math.sqrt(beta * R0)) + 0.7651976865579666 / (2 * 0.44005058574493355)
    assert m.c1_over_c2 == pytest.approx(expect, rel=1e-12)
    assert m.c1_over_c2 == pytest.approx(-0.590, abs=0.012)
    assert m.inner_logderiv == pytest.approx(-100 * 0.44005058574493355 / 0.7651976865579666)


def test_closed_form_at_j0_zero():
    p = well(2.404825557695773)
    assert radial.match_ratio(p, 0.01, numeric=False).c1_over_c2 == pytest.approx(
        math.log(2 * math.sqrt(p.beta * R0)), abs=1e-12)


def test_resonance_detected():
    with pytest.raises(ResonanceError):
        radial.match_ratio(well(3.8317059702075125), 0.01, numeric=False)


def test_match_requires_small_k():
    with pytest.raises(ParameterError, match="k <= q/100"):
        radial.match_ratio(well(1.0), 2.0, numeric=False)


def test_numeric_match_is_energy_independent(basis_001):
    m1 = radial.match_ratio(well(1.0), 0.01, basis=basis_001)
    m2 = radial.match_ratio(well(1.0), 0.002)
    assert m1.numeric == pytest.approx(m2.numeric, rel=1e-4)
    # inner log-derivative of the integrated solution is close to -q J_1/J_0 for k << q
    assert m1.numeric_logderiv == pytest.approx(m1.inner_logderiv, rel=1e-2)


def test_admixture_diagnostics(basis_001):
    assert 0 < basis_001.kappa_mix < 0.02
    assert basis_001.b_equivalent == pytest.approx(
        basis_001.kappa_mix * 4 / math.pi * basis_001.norm_plus**2)
