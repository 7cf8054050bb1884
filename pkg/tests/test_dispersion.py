import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotwave.coeffs import SystemCoefficients
from rotwave.discretize import Grid
from rotwave.dispersion import (
    DispersionError,
    DispersionQuery,
    apply_semigroup,
    default_eta_grid,
    density_classifier,
    detect_rational,
    dispersion_eigenvalues,
    heat_kernel,
    rotation_matrix,
    sample_dispersion_set,
)
from rotwave.model_qcgl import QcglParams, system_coefficients

S2 = np.array([[0.0, 1.027], [-1.027, 0.0]])
QCGL2 = system_coefficients(QcglParams(), d=2, S=S2)


def test_eta_zero_gives_farfield_jacobian_spectrum():
    lam = dispersion_eigenvalues(QCGL2, 0.0, [0])
    assert np.allclose(sorted(lam.real), [-0.5, -0.5])


def test_rotation_shift_is_exact():
    base = dispersion_eigenvalues(QCGL2, 0.7, [0])
    shifted = dispersion_eigenvalues(QCGL2, 0.7, [3])
    np.testing.assert_array_equal(shifted, base - 3j * 1.027)


def test_fast_and_generic_paths_agree():
    for eta in (0.0, 0.5, 2.0):
        f = dispersion_eigenvalues(QCGL2, eta, [1], path="fast")
        g = dispersion_eigenvalues(QCGL2, eta, [1], path="generic")
        np.testing.assert_allclose(f, g, atol=1e-12)


def test_fast_path_requires_joint_diagonalizability():
    sc = SystemCoefficients(A=np.diag([1.0, 2.0]),
                            S=np.zeros((2, 2)),
                            Dfinf=np.array([[-1.0, 1.0], [0.0, -1.0]]),
                            d=2, m=2)
    with pytest.raises(DispersionError):
        dispersion_eigenvalues(sc, 1.0, [], path="fast")


def test_negative_eta_rejected():
    with pytest.raises(DispersionError):
        dispersion_eigenvalues(QCGL2, -1.0, [0])


def test_sampled_set_max_real_part():
    eta = default_eta_grid(QCGL2)
    curves, tips = sample_dispersion_set(DispersionQuery(QCGL2, eta, 5))
    max_re = max(float(np.max(c.lam.real)) for c in curves)
    assert max_re == pytest.approx(-0.5, abs=1e-12)
    assert len(tips) == 11
    tips_sorted = sorted(t.imag for t in tips)
    np.testing.assert_allclose(np.diff(tips_sorted), 1.027, atol=1e-12)
    assert all(t.real == pytest.approx(-0.5, abs=1e-12) for t in tips)


def test_curve_ordering_lexicographic():
    eta = np.linspace(0, 1, 5)
    curves, _ = sample_dispersion_set(DispersionQuery(QCGL2, eta, 2))
    assert [c.n for c in curves] == [(-2,), (-1,), (0,), (1,), (2,)]


def test_eta_grid_pushes_below_threshold():
    eta = default_eta_grid(QCGL2, re_min=-3.0)
    lam = dispersion_eigenvalues(QCGL2, float(eta[-1]), [0])
    assert np.max(lam.real) < -3.0


class TestRationality:
    def test_simple_fractions(self):
        ok, p, q = detect_rational(1.5)
        assert ok and (p, q) == (3, 2)
        ok, p, q = detect_rational(2.0 / 7.0)
        assert ok and (p, q) == (2, 7)

    def test_irrationals(self):
        assert detect_rational(math.e / 2.0)[0] is False
        assert detect_rational(math.sqrt(2))[0] is False
        assert detect_rational(math.pi)[0] is False

    def test_near_rational_with_huge_denominator(self):
        # only denominators up to the cap count as rational
        assert detect_rational(1.0 / 3.0)[0] is True
        assert detect_rational(355.0 / 113.0)[0] is True

    @given(st.integers(1, 999), st.integers(1, 999))
    @settings(max_examples=150, deadline=None)
    def test_property_fractions_detected(self, a, b):
        ok, p, q = detect_rational(a / b)
        assert ok
        assert abs(p / q - a / b) < 1e-9


def test_density_classifier_pairs():
    assert density_classifier([1.0, 1.5]) == "discrete-subgroup"
    assert density_classifier([1.0, math.e / 2.0]) == "dense-halfplane"
    assert density_classifier([1.027]) == "discrete-subgroup"


def test_density_classifier_validation():
    with pytest.raises(DispersionError):
        density_classifier([1.0, -2.0])


def test_rotation_matrix_orthogonal_periodic():
    R = rotation_matrix(S2, 2 * math.pi / 1.027)
    np.testing.assert_allclose(R, np.eye(2), atol=1e-10)
    R = rotation_matrix(S2, 0.37)
    np.testing.assert_allclose(R @ R.T, np.eye(2), atol=1e-12)


class TestHeatKernel:
    A = [[1.0]]
    B0 = [[0.0]]
    S0 = np.zeros((2, 2))

    def test_scalar_mass(self):
        g = Grid(d=2, R=8.0, N=64)
        Z = g.node_coords()
        vals = np.array([heat_kernel(self.A, self.S0, self.B0,
                                     np.zeros(2), z, 0.5)[0, 0] for z in Z])
        assert np.sum(vals) * g.h**2 == pytest.approx(1.0, abs=1e-6)

    def test_chapman_kolmogorov(self):
        S = np.array([[0.0, 1.0], [-1.0, 0.0]])
        g = Grid(d=2, R=6.0, N=64)
        Z = g.node_coords()
        x = np.array([0.5, -0.3])
        xi = np.array([-0.2, 0.8])
        t, s = 0.25, 0.35
        Ht = np.array([heat_kernel(self.A, S, self.B0, x, z, t)[0, 0] for z in Z])
        Hs = np.array([heat_kernel(self.A, S, self.B0, z, xi, s)[0, 0] for z in Z])
        lhs = np.sum(Ht * Hs) * g.h**2
        rhs = heat_kernel(self.A, S, self.B0, x, xi, t + s)[0, 0]
        assert abs(lhs - rhs) <= 1e-4

    def test_decay_factor(self):
        k0 = heat_kernel(self.A, self.S0, self.B0, np.zeros(2), np.zeros(2), 1.0)
        kb = heat_kernel(self.A, self.S0, [[0.7]], np.zeros(2), np.zeros(2), 1.0)
        assert kb[0, 0] == pytest.approx(k0[0, 0] * math.exp(-0.7), rel=1e-12)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(DispersionError):
            heat_kernel(self.A, self.S0, self.B0, np.zeros(2), np.zeros(2), 0.0)


class TestApplySemigroup:
    def test_identity_at_zero(self):
        g = Grid(d=2, R=4.0, N=16)
        v = np.random.default_rng(0).standard_normal((1, g.n_nodes))
        out, err = apply_semigroup(v, 0.0, [[1.0]], np.zeros((2, 2)), [[0.0]], g)
        np.testing.assert_array_equal(out, v.astype(complex))
        assert err == 0.0

    def test_gaussian_widening_analytic(self):
        g = Grid(d=2, R=10.0, N=96)
        r2 = g.radii() ** 2
        w0, t = 1.0, 0.5
        v0 = np.exp(-r2 / (2 * w0**2))[None, :]
        out, _ = apply_semigroup(v0, t, [[1.0]], np.zeros((2, 2)), [[0.0]], g)
        ana = (w0**2 / (w0**2 + 2 * t)) * np.exp(-r2 / (2 * (w0**2 + 2 * t)))
        assert np.max(np.abs(out.real - ana)) < 1e-12

    def test_rotation_transport(self):
        # pure rotation of a displaced bump: small diffusion, quarter turn
        g = Grid(d=2, R=6.0, N=80)
        X = g.node_coords()
        S = np.array([[0.0, 1.0], [-1.0, 0.0]])
        c = np.array([2.0, 0.0])
        v0 = np.exp(-np.sum((X - c) ** 2, axis=1))[None, :]
        t = math.pi / 2
        out, _ = apply_semigroup(v0, t, [[0.01]], S, [[0.0]], g)
        peak = X[np.argmax(np.abs(out[0]))]
        # the kernel contains exp(tS) x - xi, so the bump travels along the
        # backward flow: it peaks where exp(tS) x = c
        target = rotation_matrix(S, -t) @ c
        assert np.linalg.norm(peak - target) < 2 * g.h
