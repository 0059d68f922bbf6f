import math

import numpy as np
import pytest

from hyperscatter import channels, couplings
from hyperscatter.errors import ParameterError
from hyperscatter.radial import ModelPotential

SQRT2 = math.sqrt(2)
BETA = 3 * SQRT2 / math.pi


def five_point(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def fd_lambda(n, c, R, h):
    f = lambda r: channels.solve_lambda(n, c * r).lam
    return five_point(f, R, h), (f(R + h) - 2 * f(R) + f(R - h)) / h**2


@pytest.mark.parametrize("n", [0, 1, 3])
@pytest.mark.parametrize("R", [1e-3, 0.3, 1.0, 7.0, 200.0])
def test_first_derivative_matches_finite_difference(n, R):
    d1, _ = fd_lambda(n, 1.3, R, 1e-3 * R)
    assert couplings.dlambda_dr(n, 1.3, R) == pytest.approx(d1, rel=1e-8)


@pytest.mark.parametrize("R", [0.05, 1.0, 20.0])
def test_second_derivative_matches_finite_difference(R):
    _, d2 = fd_lambda(0, 1.0, R, 1e-3 * R)
    assert couplings.d2lambda_dr2(0, 1.0, R) == pytest.approx(d2, rel=1e-5)


def test_derivative_asymptotes():
    c = 1.0
    R = 1e-4
    assert couplings.dlambda_dr(0, c, R) == pytest.approx(0.5 * math.sqrt(BETA * c / R), rel=1e-2)
    R = 1e4
    assert couplings.dlambda_dr(0, c, R) == pytest.approx(18 * SQRT2 / (math.pi * c * R**2), rel=1e-2)


def test_zero_coupling_has_no_couplings():
    assert couplings.dlambda_dr(0, 0.0, 1.0) == 0.0
    m = couplings.coupling_matrices(0.0, 1.0, 4)
    assert np.all(m.W == 0) and np.all(m.Y == 0) and np.all(m.U == 0)
    assert list(m.lambdas) == [0.0, 3.0, 6.0, 9.0]


def _oracle(c, R, N, nodes=96, h=1e-4):
    """W and Y from Gauss-Legendre quadrature with R-derivatives by finite differences."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    a = (x + 1) * math.pi / 6
    w = w * math.pi / 6
    lam = lambda n, r: channels.solve_lambda(n, c * r).lam
    chi = lambda n, r: channels.chi_tilde(n, lam(n, r), a)
    hh = h * R
    W = np.zeros((N, N))
    Y = np.zeros((N, N))
    for n in range(N):
        B = np.sum(w * chi(n, R) ** 2)
        for m in range(N):
            p, z, q = chi(m, R + hh), chi(m, R), chi(m, R - hh)
            d1 = (p - q) / (2 * hh)
            d2 = (p - 2 * z + q) / hh**2
            W[n, m] = 2 * np.sum(w * chi(n, R) * d1) / B
            Y[n, m] = np.sum(w * chi(n, R) * (d2 + d1 / R)) / B
    return W, Y


@pytest.mark.parametrize("R", [0.2, 1.0, 5.0])
def test_matrices_against_independent_quadrature(R):
    m = couplings.coupling_matrices(1.0, R, 3)
    W, Y = _oracle(1.0, R, 3)
    assert np.allclose(m.W, W, rtol=0, atol=1e-8)
    assert np.allclose(m.Y, Y, rtol=0, atol=2e-5)


@pytest.mark.parametrize("R", [0.01, 1.0, 100.0])
def test_diagonal_identity(R):
    c = 1.0
    b = lambda r: float(channels.normalization_b(0, channels.lambda0(c * r)))
    m = couplings.coupling_matrices(c, R, 1)
    assert m.W[0, 0] == pytest.approx(five_point(b, R, 1e-3 * R) / m.B[0], rel=1e-8)


def test_quadrature_refinement():
    # analytic R-derivatives with 64 vs 128 Gauss nodes agree with adaptive quadrature
    c, R, N = 1.0, 0.8, 4
    m = couplings.coupling_matrices(c, R, N)
    for nodes in (64, 128):
        x, w = np.polynomial.legendre.leggauss(nodes)
        a = (x + 1) * math.pi / 6
        w = w * math.pi / 6
        for n in range(N):
            for k in range(N):
                lam_k = m.lambdas[k]
                phase = lam_k * (math.pi / 6 - a) - math.pi * k / 2
                g = -np.sin(phase) * (math.pi / 6 - a)
                chi_n = np.cos(m.lambdas[n] * (math.pi / 6 - a) - math.pi * n / 2)
                Wnk = 2 * couplings.dlambda_dr(k, c, R) * np.sum(w * chi_n * g) / m.B[n]
                assert Wnk == pytest.approx(m.W[n, k], abs=1e-9)


def test_three_body_matrix_weighted_symmetry():
    p = ModelPotential(100.0, 0.01, 1.0)
    m = couplings.coupling_matrices(1.0, 0.005, 4, potential=p)
    weighted = m.U * m.B[:, None]
    assert np.allclose(weighted, weighted.T, rtol=1e-10, atol=1e-10 * np.abs(weighted).max())
    assert m.U[0, 0] == pytest.approx(float(p(0.005)), rel=1e-12)


def test_three_body_matrix_vanishes_outside_range():
    p = ModelPotential(100.0, 0.01, 1.0)
    m = couplings.coupling_matrices(1.0, 0.02, 3, potential=p)
    assert np.all(m.U == 0)
    assert np.all(couplings.coupling_matrices(1.0, 0.005, 3).U == 0)


def test_y00_correction_at_unit_coupling():
    m = couplings.coupling_matrices(1.0, 1.0, 1)
    assert abs(m.Y[0, 0]) * 1.0**2 / m.lambdas[0] ** 2 < 0.05


def test_adiabaticity_report():
    grid = np.geomspace(1e-4, 1.0, 25)
    rep = couplings.adiabaticity_report(1.0, grid)
    assert rep.max_y00_ratio <= 0.05
    # small-cR limit of the ratio is (pi/6)^2/6
    assert rep.y00_ratio[0] == pytest.approx((math.pi / 6) ** 2 / 6, rel=1e-2)
    ex = rep.decay_exponents
    assert ex["Y00"] - ex["adiabatic_potential"] == pytest.approx(-1.0, abs=0.05)
    assert ex["W00"] - ex["W01"] < 0


def test_adiabaticity_report_without_coupling():
    rep = couplings.adiabaticity_report(0.0, [0.5, 1.0])
    assert np.all(rep.y00_ratio == 0) and np.all(rep.w00_ratio == 0)


@pytest.mark.parametrize("args", [(1.0, 0.0, 2), (1.0, 1.0, 9), (-1.0, 1.0, 2), (1.0, 1.0, 0)])
def test_invalid_matrix_requests(args):
    with pytest.raises(ParameterError):
        couplings.coupling_matrices(*args)


def test_invalid_report_grid():
    with pytest.raises(ParameterError):
        couplings.adiabaticity_report(1.0, [1.0, 0.5])
