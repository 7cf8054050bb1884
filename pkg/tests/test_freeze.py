import numpy as np
import pytest

from rotwave.discretize import Grid, l2_norm
from rotwave.dispersion import apply_semigroup
from rotwave.freeze import (
    FreezeConfig,
    FreezeError,
    FreezeState,
    Workspace,
    initial_guess,
    plane_generator_matrix,
    rotation_planes,
    run_freezing,
    solve_phase_velocities,
    step_imex,
    velocity_matrix,
    write_history_csv,
)
from rotwave.model_qcgl import QcglParams, diffusion_matrix, f_real


def f_zero(u):
    return np.zeros_like(u)


def f_linear(u):
    return -u


def test_rotation_planes_count():
    assert rotation_planes(2) == [(0, 1)]
    assert rotation_planes(3) == [(0, 1), (0, 2), (1, 2)]
    assert len(rotation_planes(5)) == 10


def test_velocity_matrix_skew():
    S = velocity_matrix(3, [1.0, 2.0, -0.5])
    np.testing.assert_array_equal(S, -S.T)
    assert S[0, 1] == 1.0 and S[0, 2] == 2.0 and S[1, 2] == -0.5


def test_plane_generator_action():
    S0 = plane_generator_matrix(2, (0, 1))
    x = np.array([3.0, 4.0])
    np.testing.assert_array_equal(S0 @ x, [4.0, -3.0])


class TestInitialGuess:
    def test_vortex_zero_at_origin(self):
        g = Grid(d=2, R=8.0, N=65)      # odd N puts a node at the origin
        v = initial_guess(g, "vortex")
        i0 = int(np.argmin(g.radii()))
        assert g.radii()[i0] == 0.0
        np.testing.assert_allclose(v[:, i0], 0.0, atol=1e-14)

    def test_vortex_radial_magnitude(self):
        g = Grid(d=2, R=8.0, N=64)
        v = initial_guess(g, "vortex", amplitude=3.0, width=4.0)
        mag = np.hypot(v[0], v[1])
        r = g.radii()
        expected = 3.0 * r * np.exp(-(r**2) / 16.0)
        np.testing.assert_allclose(mag, expected, atol=1e-12)

    def test_vortex_winding_number(self):
        g = Grid(d=2, R=8.0, N=128)
        v = initial_guess(g, "vortex", width=4.0)
        X = g.node_coords()
        r = g.radii()
        shell = np.where(np.abs(r - 4.0) < g.h)[0]
        order = np.argsort(np.arctan2(X[shell, 1], X[shell, 0]))
        phases = np.angle(v[0, shell][order] + 1j * v[1, shell][order])
        winding = np.sum(np.angle(np.exp(1j * np.diff(
            np.concatenate([phases, phases[:1]]))))) / (2 * np.pi)
        assert round(float(winding)) == 1

    def test_file_roundtrip(self, tmp_path):
        from rotwave.discretize import save_field
        g = Grid(d=2, R=4.0, N=16)
        v = initial_guess(g, "gaussian")
        save_field(tmp_path / "ic.bin", v, g)
        w = initial_guess(g, "file", path=tmp_path / "ic.bin")
        np.testing.assert_allclose(w, v)

    def test_unknown_kind(self):
        with pytest.raises(FreezeError):
            initial_guess(Grid(d=2, R=4.0, N=16), "banana")


class TestPhaseVelocities:
    def test_radial_profile_zero_velocities(self):
        g = Grid(d=2, R=6.0, N=48)
        v = initial_guess(g, "gaussian", amplitude=1.0, width=2.0)
        s, tau, info = solve_phase_velocities(v, g, [[1.0]], f_linear)
        assert abs(s[0]) < 1e-10
        assert np.max(np.abs(tau)) < 1e-10

    def test_mirror_flips_translation_sign(self):
        g = Grid(d=2, R=6.0, N=49)
        X = g.node_coords()
        v = np.exp(-np.sum((X - [0.7, 0.0]) ** 2, axis=1))[None, :]
        v_m = np.exp(-np.sum((X + [0.7, 0.0]) ** 2, axis=1))[None, :]
        _, tau, _ = solve_phase_velocities(v, g, [[1.0]], f_zero)
        _, tau_m, _ = solve_phase_velocities(v_m, g, [[1.0]], f_zero)
        assert tau[0] == pytest.approx(-tau_m[0], abs=1e-8)

    def test_orthogonality_residual(self):
        g = Grid(d=2, R=6.0, N=48)
        X = g.node_coords()
        rng = np.random.default_rng(0)
        v = np.exp(-np.sum((X - [0.5, -0.3]) ** 2, axis=1))[None, :] \
            + 0.1 * np.exp(-np.sum((X - [-1.0, 1.0]) ** 2, axis=1))[None, :]
        _, _, info = solve_phase_velocities(v, g, [[1.0]], f_linear)
        assert info["orthogonality"] <= 1e-8

    def test_constant_field_rejected(self):
        g = Grid(d=2, R=4.0, N=16)
        with pytest.raises(FreezeError):
            solve_phase_velocities(np.ones((1, g.n_nodes)), g, [[1.0]], f_zero)


class TestStepImex:
    def test_constant_field_invariant(self):
        g = Grid(d=2, R=4.0, N=24)
        cfg = FreezeConfig(grid=g, dt=1e-2, solve_velocities=False)
        ws = Workspace(g, [[1.0]], cfg.dt)
        st = FreezeState(v=np.ones((1, g.n_nodes)), s=np.zeros(1),
                         tau=np.zeros(2), t=0.0, vt_norm=np.inf)
        st2 = step_imex(st, cfg, [[1.0]], f_zero, ws)
        assert np.max(np.abs(st2.v - 1.0)) < 1e-14

    def test_dissipative_norm_decay(self):
        g = Grid(d=2, R=4.0, N=24)
        cfg = FreezeConfig(grid=g, dt=1e-2, solve_velocities=False)
        ws = Workspace(g, [[1.0]], cfg.dt)
        st = FreezeState(v=initial_guess(g, "gaussian"), s=np.zeros(1),
                         tau=np.zeros(2), t=0.0, vt_norm=np.inf)
        norms = [l2_norm(st.v, g)]
        for _ in range(5):
            st = step_imex(st, cfg, [[1.0]], f_linear, ws)
            norms.append(l2_norm(st.v, g))
        assert all(b < a for a, b in zip(norms, norms[1:]))

    def test_heat_equation_matches_semigroup_oracle(self):
        g = Grid(d=2, R=12.0, N=64)
        dt = 1e-3
        cfg = FreezeConfig(grid=g, dt=dt, solve_velocities=False)
        ws = Workspace(g, [[1.0]], dt)
        v0 = initial_guess(g, "gaussian", amplitude=1.0, width=4.0)
        st = FreezeState(v=v0.copy(), s=np.zeros(1), tau=np.zeros(2),
                         t=0.0, vt_norm=np.inf)
        for _ in range(500):
            st = step_imex(st, cfg, [[1.0]], f_zero, ws)
        exact, _ = apply_semigroup(v0, 0.5, [[1.0]], np.zeros((2, 2)), [[0.0]], g)
        assert np.max(np.abs(st.v - exact.real)) <= 1e-3

    def test_cfl_violation_raises_when_strict(self):
        g = Grid(d=2, R=8.0, N=64)
        cfg = FreezeConfig(grid=g, dt=0.5, solve_velocities=False,
                           clamp_transient=False)
        ws = Workspace(g, [[1.0]], cfg.dt)
        st = FreezeState(v=initial_guess(g, "gaussian"), s=np.array([5.0]),
                         tau=np.zeros(2), t=0.0, vt_norm=np.inf)
        with pytest.raises(FreezeError):
            step_imex(st, cfg, [[1.0]], f_zero, ws)


class TestRunFreezing:
    def test_zero_initial_data_stays_zero(self):
        g = Grid(d=2, R=4.0, N=16)
        cfg = FreezeConfig(grid=g, dt=1e-2, t_end=0.5, phase_tolerance=1e-7,
                           initial_kind="vortex", initial_amplitude=0.0,
                           warmup_t=0.0)
        p = QcglParams()
        # amplitude zero gives the zero field; the trivial equilibrium
        # persists and the frame is kept still
        res = run_freezing(cfg, diffusion_matrix(p),
                           lambda u: f_real(u, p))
        assert np.max(np.abs(res.profile)) < 1e-12

    def test_gaussian_decays_under_linear_damping(self):
        g = Grid(d=2, R=4.0, N=20)
        cfg = FreezeConfig(grid=g, dt=5e-3, t_end=2.0, phase_tolerance=1e-10,
                           initial_kind="gaussian", warmup_t=0.0)
        res = run_freezing(cfg, [[1.0]], f_linear)
        assert l2_norm(res.profile, g) < 0.2 * l2_norm(
            initial_guess(g, "gaussian"), g)
        assert len(res.history) > 0

    def test_refine_equilibrium_recovers_from_perturbation(self, soliton,
                                                           qcgl_params):
        from rotwave.freeze import refine_equilibrium
        from rotwave.model_qcgl import jacobian_Df
        rng = np.random.default_rng(0)
        g = soliton["grid"]
        v = soliton["profile"] + 1e-3 * rng.standard_normal(
            soliton["profile"].shape)
        w, s, res, ok = refine_equilibrium(
            v, soliton["s"] * 1.01, g, diffusion_matrix(qcgl_params),
            lambda u: f_real(u, qcgl_params),
            lambda u: jacobian_Df(u, qcgl_params), tol=1e-9)
        assert ok and res <= 1e-9
        assert s == pytest.approx(soliton["s"], abs=1e-6)
        assert np.max(np.abs(w)) == pytest.approx(
            np.max(np.abs(soliton["profile"])), rel=1e-3)

    def test_history_csv_format(self, tmp_path):
        history = [(0.1, 0.5, 0.0, 0.0, 1e-3), (0.2, 0.6, 0.0, 0.0, 5e-4)]
        path = tmp_path / "h.csv"
        write_history_csv(path, history, d=2)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,s_12,tau_1,tau_2,vt_norm"
        assert len(lines) == 3
