import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotwave.coeffs import (
    CoefficientError,
    SystemCoefficients,
    admissible_p_range,
    check_conditions,
    first_antieigenvalue,
    simultaneous_diagonalization,
    spectral_constants,
)
from rotwave.model_qcgl import QcglParams, system_coefficients

QCGL = system_coefficients(QcglParams(), d=2)
SQRT2 = math.sqrt(2.0)


def test_qcgl_constants():
    c = spectral_constants(QCGL)
    assert c.a0 == pytest.approx(0.5, abs=1e-12)
    assert c.b0 == pytest.approx(0.5, abs=1e-12)
    assert c.a_min == pytest.approx(SQRT2 / 2, abs=1e-5)
    assert c.a_max == pytest.approx(SQRT2 / 2, abs=1e-5)


def test_a1_constant_3d():
    c = spectral_constants(system_coefficients(QcglParams(), d=3))
    # (a_max^2 / (a_min a0))^(d/2) = sqrt 2 ^ (3/2) = 2^(3/4)
    assert c.a1 == pytest.approx(2.0 ** 0.75, abs=1e-3)
    assert c.a1 == pytest.approx(1.6818, abs=1e-3)


def test_constants_identity_matrix():
    sc = SystemCoefficients(A=np.eye(2), S=np.zeros((2, 2)), Dfinf=-np.eye(2), d=2, m=2)
    c = spectral_constants(sc)
    assert c.a_min == c.a_max == c.a0 == 1.0
    assert c.a1 == 1.0
    assert c.b0 == 1.0


def test_singular_A_rejected():
    with pytest.raises(CoefficientError):
        SystemCoefficients(A=np.diag([1.0, 0.0]), S=np.zeros((2, 2)),
                           Dfinf=-np.eye(2), d=2, m=2)


def test_nonskew_S_rejected():
    S = np.array([[0.0, 1.0], [-1.0 + 1e-15, 0.0]])
    with pytest.raises(CoefficientError):
        SystemCoefficients(A=np.eye(2), S=S, Dfinf=-np.eye(2), d=2, m=2)


class TestAntieigenvalue:
    def test_identity(self):
        assert first_antieigenvalue(np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_diag_1_2(self):
        # classical value 2 sqrt 2 / 3 for the real diagonal pair (1, 2)
        mu = first_antieigenvalue(np.diag([1.0, 2.0]))
        assert mu == pytest.approx(2.0 * SQRT2 / 3.0, abs=1e-10)

    def test_qcgl_diffusion(self):
        mu = first_antieigenvalue(QCGL.A)
        assert mu == pytest.approx(SQRT2 / 2.0, abs=1e-6)

    def test_rotation_by_alpha(self):
        # normal matrix with spectrum on a ray: mu_1 = cos(angle)
        for ang in (0.3, 0.6, 1.0):
            M = np.exp(1j * ang) * np.diag([1.0, 1.0, 1.0])
            assert first_antieigenvalue(M) == pytest.approx(math.cos(ang), abs=1e-9)

    def test_singular_normal(self):
        # kernel direction mixing drives the quotient down to 0
        assert first_antieigenvalue(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)

    def test_nonnormal_below_normal_part(self):
        M = np.array([[1.0, 5.0], [0.0, 1.0]])
        mu = first_antieigenvalue(M)
        assert -1.0 <= mu < 1.0
        # brute-force check on a dense sample of unit vectors
        rng = np.random.default_rng(7)
        w = rng.standard_normal((20000, 2)) + 1j * rng.standard_normal((20000, 2))
        Mw = w @ M.T
        q = np.real(np.einsum("ij,ij->i", w.conj(), Mw)) / (
            np.linalg.norm(w, axis=1) * np.linalg.norm(Mw, axis=1))
        assert mu <= np.min(q) + 1e-6

    def test_zero_matrix_rejected(self):
        with pytest.raises(CoefficientError):
            first_antieigenvalue(np.zeros((2, 2)))

    @given(st.floats(0.1, 10.0), st.integers(0, 5))
    @settings(max_examples=40, deadline=None)
    def test_scale_invariance(self, c, k):
        rng = np.random.default_rng(k)
        M = rng.standard_normal((3, 3)) + np.eye(3) * 4.0
        assert first_antieigenvalue(c * M) == pytest.approx(
            first_antieigenvalue(M), abs=1e-6)


def test_p_range_qcgl():
    lo, hi = admissible_p_range(QCGL.A)
    assert lo == pytest.approx(2.0 / (1.0 + SQRT2 / 2.0), abs=1e-6)
    assert hi == pytest.approx(2.0 / (1.0 - SQRT2 / 2.0), abs=1e-6)
    assert lo == pytest.approx(1.1716, abs=1e-3)
    assert hi == pytest.approx(6.8284, abs=1e-3)


def test_p_range_identity_is_all_p():
    assert admissible_p_range(np.eye(2)) == (1.0, math.inf)


def test_p_range_empty():
    # an eigenvalue in the left half-plane makes mu_1 negative
    assert admissible_p_range(np.diag([1.0, -1.0])) is None


class TestSimultaneousDiagonalization:
    def test_qcgl_pair(self):
        ok, Y, kappa = simultaneous_diagonalization(QCGL.A, QCGL.Dfinf)
        assert ok
        assert kappa < 1.0 + 1e-8
        Yi = np.linalg.inv(Y)
        for M in (QCGL.A, QCGL.Dfinf):
            D = Yi @ M @ Y
            assert np.max(np.abs(D - np.diag(np.diag(D)))) < 1e-10

    def test_noncommuting(self):
        A = np.diag([1.0, 2.0])
        B = np.array([[0.0, 1.0], [1.0, 0.0]])
        ok, Y, kappa = simultaneous_diagonalization(A, B)
        assert not ok and Y is None and kappa == math.inf

    def test_shared_eigenspace_with_degeneracy(self):
        # A has a double eigenvalue; B picks the basis inside that eigenspace
        A = np.diag([3.0, 3.0, 5.0])
        B = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
        ok, Y, _ = simultaneous_diagonalization(A, B)
        assert ok
        Yi = np.linalg.inv(Y)
        D = Yi @ B @ Y
        assert np.max(np.abs(D - np.diag(np.diag(D)))) < 1e-8


def test_conditions_qcgl_all_pass_for_admissible_p():
    for p in (2.0, 3.0, 4.0, 5.0, 6.0):
        rep = check_conditions(QCGL, p)
        assert rep.all_pass, f"p={p}: {rep.to_json_obj()}"


def test_conditions_qcgl_fail_outside_range():
    rep = check_conditions(QCGL, 7.0)
    assert not rep["A5_p"].passed
    assert not rep["A4_p"].passed


def test_conditions_identity_model():
    sc = SystemCoefficients(A=np.eye(2), S=np.zeros((2, 2)), Dfinf=-np.eye(2), d=2, m=2)
    assert check_conditions(sc, 3.0).all_pass


def test_condition_report_json_shape():
    obj = check_conditions(QCGL, 2.0).to_json_obj()
    names = {c["name"] for c in obj["conditions"]}
    assert {"A1", "A2", "A3", "A4_p", "A4_q", "A5_p", "A5_q",
            "A6", "A7", "A8", "A9", "A10", "A11"} <= names
    assert obj["external_constants"] == {"C_0_eps": "external", "K1": "external"}
    assert obj["all_pass"] is True


def test_p_out_of_domain():
    with pytest.raises(CoefficientError):
        check_conditions(QCGL, 1.0)


def test_sampled_form_estimate_positive_at_p2():
    # at p = 2 the sampled form reduces to Re<w, Aw> whose min is beta_A > 0
    rep = check_conditions(QCGL, 2.0)
    assert rep["A4_p"].estimate is not None
    assert rep["A4_p"].estimate > 0.0
