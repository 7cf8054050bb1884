"""Freezing method: co-moving evolution with algebraic phase conditions.

The profile and its group velocities (one rotation rate per coordinate
plane, d translation rates) are computed together: each IMEX Euler step
first solves a small Gram system so that the update direction is
orthogonal to the group generators, then treats diffusion implicitly and
drift plus reaction explicitly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .discretize import (
    Grid,
    _diff1d,
    _lift,
    gradient_fields,
    l2_norm,
    laplacian,
    load_field,
    save_field,
)

_CFL_LIMIT = 0.9
_GRAM_COND_MAX = 1e12
_GENERATOR_DROP_TOL = 1e-9


class FreezeError(RuntimeError):
    pass


def rotation_planes(d: int) -> list[tuple[int, int]]:
    """Coordinate planes (i, j), i < j, carrying one rotation rate each."""
    return [(i, j) for i in range(d) for j in range(i + 1, d)]


def plane_generator_matrix(d: int, plane: tuple[int, int]) -> np.ndarray:
    """Unit-speed skew generator S0 of the plane: (S0 x)_i = x_j, (S0 x)_j = -x_i."""
    i, j = plane
    S0 = np.zeros((d, d))
    S0[i, j], S0[j, i] = 1.0, -1.0
    return S0


def velocity_matrix(grid_d: int, s) -> np.ndarray:
    """Assemble S = sum_l s_l S0_l from the per-plane rotation rates."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    planes = rotation_planes(grid_d)
    if s.size != len(planes):
        raise FreezeError(f"expected {len(planes)} rotation rates, got {s.size}")
    S = np.zeros((grid_d, grid_d))
    for rate, plane in zip(s, planes):
        S += rate * plane_generator_matrix(grid_d, plane)
    return S


@dataclass(frozen=True)
class FreezeConfig:
    grid: Grid
    dt: float = 5e-3
    t_end: float = 300.0
    phase_tolerance: float = 1e-6
    scheme: str = "imex-euler"
    initial_kind: str = "vortex"
    initial_amplitude: float = 3.0
    initial_width: float = 4.0
    initial_path: str | None = None
    solve_velocities: bool = True
    clamp_transient: bool = True     # scale velocities down to the CFL bound
    warmup_t: float = 1.0            # initial phase integrated at warmup_dt
    warmup_dt: float | None = None   # defaults to dt / 20
    snapshot_every: int = 0          # steps between snapshots, 0 = none
    snapshot_dir: str | None = None

    def __post_init__(self):
        if self.dt <= 0.0:
            raise FreezeError("dt must be positive")
        if self.scheme != "imex-euler":
            raise FreezeError(f"unknown scheme {self.scheme!r}")


@dataclass
class FreezeState:
    v: np.ndarray            # (m, n_nodes)
    s: np.ndarray            # rotation rate per plane
    tau: np.ndarray          # (d,) translation rates
    t: float
    vt_norm: float


@dataclass
class FreezeResult:
    profile: np.ndarray
    history: list            # rows (t, *s, *tau, vt_norm)
    final: FreezeState
    converged: bool
    grid: Grid


def initial_guess(grid: Grid, kind: str = "vortex", amplitude: float = 3.0,
                  width: float = 4.0, path=None) -> np.ndarray:
    """Starting field as a real (m, n_nodes) array.

    vortex: u0 = a * r * exp(i phi) * exp(-r^2/w^2) in the first coordinate
    plane (winding number 1), the shape that feeds the spinning soliton.
    gaussian: single-component radial bump for linear tests.
    file: reload a persisted field.
    """
    X = grid.node_coords()
    r2 = np.sum(X**2, axis=1)
    if kind == "vortex":
        r = np.sqrt(X[:, 0] ** 2 + X[:, 1] ** 2)
        phi = np.arctan2(X[:, 1], X[:, 0])
        u = amplitude * r * np.exp(1j * phi) * np.exp(-r2 / width**2)
        return np.stack([u.real, u.imag])
    if kind == "gaussian":
        return amplitude * np.exp(-r2 / width**2)[None, :]
    if kind == "file":
        if path is None:
            raise FreezeError("file initial condition needs a path")
        v, g = load_field(path)
        if (g.d, g.N, g.R) != (grid.d, grid.N, grid.R):
            raise FreezeError("stored field does not match the requested grid")
        return np.real(v)
    raise FreezeError(f"unknown initial condition kind {kind!r}")


class Workspace:
    """Cached sparse pieces for one (grid, A, dt) combination.

    Holds the Laplacian, the lifted one-sided difference matrices per axis,
    the node coordinates and the LU factorization of the implicit diffusion
    system I - dt * kron(A, Lap).
    """

    def __init__(self, grid: Grid, A: np.ndarray, dt: float):
        self.grid = grid
        self.A = np.asarray(A, dtype=float)
        self.m = self.A.shape[0]
        self.dt = dt
        self.Lap = laplacian(grid)
        self.F = [_lift(_diff1d(grid.N, grid.h, "forward"), grid, ax)
                  for ax in range(grid.d)]
        self.B = [_lift(_diff1d(grid.N, grid.h, "backward"), grid, ax)
                  for ax in range(grid.d)]
        self.X = grid.node_coords()
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            n = self.grid.n_nodes
            M = sparse.identity(self.m * n, format="csr") - self.dt * sparse.kron(
                sparse.csr_matrix(self.A), self.Lap, format="csr"
            )
            self._lu = splu(M.tocsc())
        return self._lu

    def diffusion(self, v: np.ndarray) -> np.ndarray:
        """A lap(v) componentwise-mixed, field shape (m, n_nodes)."""
        lap = np.stack([self.Lap @ v[c] for c in range(self.m)])
        return self.A @ lap

    def drift(self, v: np.ndarray, S: np.ndarray, tau: np.ndarray) -> np.ndarray:
        """<(S x + tau), grad v> with per-node upwinding in each direction."""
        C = self.X @ np.asarray(S, dtype=float).T + np.asarray(tau, dtype=float)
        out = np.zeros_like(v)
        for ax in range(self.grid.d):
            c = C[:, ax]
            up = np.maximum(c, 0.0)
            dn = np.minimum(c, 0.0)
            for comp in range(self.m):
                out[comp] += up * (self.F[ax] @ v[comp]) + dn * (self.B[ax] @ v[comp])
        return out

    def cfl_number(self, S: np.ndarray, tau: np.ndarray) -> float:
        C = self.X @ np.asarray(S, dtype=float).T + np.asarray(tau, dtype=float)
        return self.dt * float(np.max(np.abs(C))) / self.grid.h


def solve_phase_velocities(v: np.ndarray, grid: Grid, A: np.ndarray, f):
    """Least-squares velocities from the Gram system of group generators.

    Generators: one rotation field <S0_l x, grad v> per coordinate plane and
    one translation field per axis.  Solving G mu = c with
    c_j = <g_j, A lap v + f(v)> makes the co-moving time derivative
    orthogonal to every generator.  Near-zero generators (symmetric
    profiles) are dropped and their rate reported as zero.

    Returns (s, tau, info) with info = {"cond", "orthogonality", "dropped"}.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m = v.shape[0]
    if float(np.max(np.abs(v - v[:, :1]))) == 0.0:
        raise FreezeError("phase conditions need a nonconstant field")

    grads = gradient_fields(v, grid)
    X = grid.node_coords()
    planes = rotation_planes(grid.d)

    gens = []
    for (i, j) in planes:
        gens.append(X[:, j] * grads[i] - X[:, i] * grads[j])
    gens.extend(grads)

    lap = np.stack([laplacian(grid) @ v[c] for c in range(m)])
    rhs_field = A @ lap + f(np.moveaxis(v, 0, -1)).reshape(-1, m).T

    hd = grid.h**grid.d
    norms = np.array([math.sqrt(float(np.sum(g * g)) * hd) for g in gens])
    scale = max(float(np.max(norms)), 1e-300)
    active = [k for k in range(len(gens)) if norms[k] > _GENERATOR_DROP_TOL * scale]
    mu = np.zeros(len(gens))
    info = {"cond": 0.0, "orthogonality": 0.0,
            "dropped": [k for k in range(len(gens)) if k not in active]}
    if active:
        G = np.array([[float(np.sum(gens[a] * gens[b])) * hd for b in active]
                      for a in active])
        c = np.array([float(np.sum(gens[a] * rhs_field)) * hd for a in active])
        cond = float(np.linalg.cond(G))
        if cond > _GRAM_COND_MAX:
            raise FreezeError("orbit degenerate: Gram matrix condition "
                              f"{cond:.3e} exceeds {_GRAM_COND_MAX:.0e}")
        sol = np.linalg.solve(G, c)
        mu[active] = -sol
        vt = rhs_field + sum(mu[k] * gens[k] for k in range(len(gens)))
        vt_norm = max(math.sqrt(float(np.sum(vt * vt)) * hd), 1e-300)
        ortho = max(
            abs(float(np.sum(gens[a] * vt)) * hd) / (norms[a] * vt_norm)
            for a in active
        )
        info["cond"] = cond
        info["orthogonality"] = ortho

    k = len(planes)
    return mu[:k].copy(), mu[k:].copy(), info


def step_imex(state: FreezeState, config: FreezeConfig, A: np.ndarray, f,
              workspace: Workspace | None = None) -> FreezeState:
    """One IMEX Euler step: implicit diffusion, explicit drift and reaction.

    Velocities are refreshed through the phase conditions first (unless the
    config freezes them), then the advective CFL bound is enforced.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if workspace is None or workspace.dt != config.dt:
        workspace = Workspace(config.grid, A, config.dt)
    grid, dt, m = config.grid, config.dt, workspace.m

    s, tau = state.s, state.tau
    if config.solve_velocities:
        if float(np.max(np.abs(state.v - state.v[:, :1]))) == 0.0:
            # constant field: no phase information, keep the frame still
            s = np.zeros_like(np.atleast_1d(s))
            tau = np.zeros_like(tau)
        else:
            s, tau, _ = solve_phase_velocities(state.v, grid, A, f)
    S = velocity_matrix(grid.d, s) if len(s) else np.zeros((grid.d, grid.d))

    cfl = workspace.cfl_number(S, tau)
    if cfl > _CFL_LIMIT and config.clamp_transient and config.solve_velocities:
        # the co-moving frame speed is a gauge choice, so scaling the whole
        # velocity vector only slows the frame during the transient; near a
        # relative equilibrium the clamp is inactive
        factor = 0.95 * _CFL_LIMIT / cfl
        s = np.atleast_1d(np.asarray(s, float)) * factor
        tau = np.asarray(tau, float) * factor
        S = S * factor
        cfl = workspace.cfl_number(S, tau)
    if cfl > _CFL_LIMIT:
        raise FreezeError(
            f"advective CFL number {cfl:.3f} exceeds {_CFL_LIMIT} at t={state.t:.3f} "
            f"(s={np.array2string(np.atleast_1d(s), precision=3)}); reduce dt"
        )

    explicit = workspace.drift(state.v, S, tau) \
        + f(np.moveaxis(state.v, 0, -1)).reshape(-1, m).T
    rhs = (state.v + dt * explicit).reshape(-1)
    v_new = workspace.lu.solve(rhs).reshape(m, grid.n_nodes)
    if not np.all(np.isfinite(v_new)):
        raise FreezeError(f"field blew up at t={state.t + dt:.3f} "
                          f"(dt={dt}, max|v|={np.max(np.abs(state.v)):.3e})")

    vt_norm = l2_norm((v_new - state.v) / dt, grid)
    return FreezeState(v=v_new, s=np.atleast_1d(np.asarray(s, float)),
                       tau=np.asarray(tau, float), t=state.t + dt, vt_norm=vt_norm)


def refine_equilibrium(v: np.ndarray, s: float, grid: Grid, A: np.ndarray,
                       f, df, tol: float = 1e-10, max_iter: int = 15,
                       scheme: str = "upwind"):
    """Newton solve of the steady co-moving equation for (profile, rate).

    Solves A lap w + s <S0 x, grad w> + f(w) = 0 with the rotation rate s as
    the extra unknown and one phase row pinning the rotation/gauge direction.
    Time stepping alone stalls at a relative periodic orbit when the wave
    carries an internal phase symmetry (the drift along that orbit is not
    spanned by the spatial generators on a grid); the bordered Newton system
    lands on the genuine discrete equilibrium.  2-plane case (d = 2) only.

    df maps fields of shape (..., m) to Jacobians (..., m, m).
    Returns (w, s, residual_norm, converged).
    """
    if grid.d != 2:
        raise FreezeError("equilibrium refinement implemented for d = 2 only")
    from .discretize import assemble_linearized, drift_matrix

    A = np.atleast_2d(np.asarray(A, dtype=float))
    m = A.shape[0]
    n = m * grid.n_nodes
    ws = Workspace(grid, A, dt=1.0)
    S0 = plane_generator_matrix(2, (0, 1))

    w = np.array(v, dtype=float)
    s = float(s)
    grads = gradient_fields(w, grid)
    X = ws.X
    phase = (X[:, 1] * grads[0] - X[:, 0] * grads[1]).reshape(-1)

    if scheme == "centered":
        # the centered drift is linear in the velocity matrix, so one
        # unit-rate matrix serves both the residual and the border column
        D_unit = drift_matrix(grid, S0, "centered")

        def drift_apply(w, rate):
            return rate * np.stack([D_unit @ w[i] for i in range(m)])
    else:
        def drift_apply(w, rate):
            return ws.drift(w, rate * S0, np.zeros(2))

    def residual(w, s):
        return ws.diffusion(w) + drift_apply(w, s) \
            + f(np.moveaxis(w, 0, -1)).reshape(-1, m).T

    res = residual(w, s)
    res_norm = l2_norm(res, grid)
    for _ in range(max_iter):
        if res_norm < tol:
            return w, s, res_norm, True
        reaction = df(np.moveaxis(w, 0, -1))
        L = assemble_linearized(grid, A, s * S0, reaction, scheme=scheme).matrix
        # dF/ds: drift with unit-rate coefficients; the upwind branch choice
        # matches the current sign pattern as long as s does not cross 0
        b = drift_apply(w, 1.0)
        M = sparse.bmat(
            [[L, sparse.csc_matrix(b.reshape(-1, 1))],
             [sparse.csc_matrix(phase.reshape(1, -1)), None]],
            format="csc",
        )
        rhs = np.concatenate([-res.reshape(-1), [0.0]])
        try:
            sol = splu(M).solve(rhs)
        except RuntimeError as exc:
            raise FreezeError(f"refinement factorization failed: {exc}") from exc
        # backtracking keeps the iteration inside the basin when the start
        # is still O(h) away from the equilibrium
        alpha = 1.0
        while True:
            w_new = w + alpha * sol[:n].reshape(m, grid.n_nodes)
            s_new = s + alpha * float(sol[n])
            res_new = residual(w_new, s_new)
            new_norm = l2_norm(res_new, grid)
            if (np.isfinite(new_norm) and new_norm < res_norm) or alpha < 1e-3:
                break
            alpha *= 0.5
        if not np.isfinite(new_norm):
            raise FreezeError("refinement diverged")
        w, s, res, res_norm = w_new, s_new, res_new, new_norm
    return w, s, res_norm, res_norm < tol


def run_freezing(config: FreezeConfig, A: np.ndarray, f,
                 df=None) -> FreezeResult:
    """Evolve until the co-moving time derivative drops below tolerance.

    When df (Jacobian of f) is supplied and the time stepper stalls on a
    plateau, the run finishes with a bordered Newton refinement of the
    steady equation.  Non-convergence is reported through the flag, not
    raised.
    """
    grid = config.grid
    A = np.atleast_2d(np.asarray(A, dtype=float))
    v0 = initial_guess(grid, config.initial_kind, config.initial_amplitude,
                       config.initial_width, config.initial_path)
    k = len(rotation_planes(grid.d))
    state = FreezeState(v=v0, s=np.zeros(k), tau=np.zeros(grid.d),
                        t=0.0, vt_norm=math.inf)
    workspace = Workspace(grid, A, config.dt)

    history = []
    converged = False
    snap_dir = Path(config.snapshot_dir) if config.snapshot_dir else None
    if snap_dir is not None:
        snap_dir.mkdir(parents=True, exist_ok=True)

    # the raw initial guess can make the explicit reaction stiff (large
    # amplitude, strong quintic damping); integrate the first stretch with
    # a reduced step before switching to the cruise step
    if config.warmup_t > 0.0:
        wdt = config.warmup_dt if config.warmup_dt is not None else config.dt / 20.0
        wcfg = replace(config, dt=wdt, warmup_t=0.0)
        wws = Workspace(grid, A, wdt)
        for _ in range(int(round(config.warmup_t / wdt))):
            state = step_imex(state, wcfg, A, f, wws)
            history.append((state.t, *state.s, *state.tau, state.vt_norm))

    n_steps = int(round((config.t_end - state.t) / config.dt))
    plateau_window = 400
    for step in range(1, n_steps + 1):
        state = step_imex(state, config, A, f, workspace)
        history.append((state.t, *state.s, *state.tau, state.vt_norm))
        if snap_dir is not None and config.snapshot_every > 0 \
                and step % config.snapshot_every == 0:
            save_field(snap_dir / f"snapshot_{step:07d}.bin", state.v, grid)
        if state.vt_norm < config.phase_tolerance:
            converged = True
            break
        # stalled residual: the transient has died and only a neutral drift
        # (internal phase) remains, which refinement handles better than
        # further stepping
        if df is not None and step > 2 * plateau_window \
                and step % plateau_window == 0:
            past = history[-plateau_window][-1]
            if math.isfinite(past) and state.vt_norm > 0.995 * past \
                    and state.vt_norm < 0.5:
                break

    if df is not None and not converged and grid.d == 2 \
            and len(np.atleast_1d(state.s)) == 1:
        w, s_ref, res_norm, ok = refine_equilibrium(
            state.v, float(np.atleast_1d(state.s)[0]), grid, A, f, df,
            tol=min(config.phase_tolerance, 1e-8))
        if ok:
            state = FreezeState(v=w, s=np.array([s_ref]), tau=np.zeros(grid.d),
                                t=state.t, vt_norm=res_norm)
            history.append((state.t, *state.s, *state.tau, res_norm))
            converged = res_norm < config.phase_tolerance

    return FreezeResult(profile=state.v, history=history, final=state,
                        converged=converged, grid=grid)


def write_history_csv(path, history, d: int):
    """Velocity history as CSV: t, per-plane rates, translations, vt_norm."""
    planes = rotation_planes(d)
    header = ["t"] + [f"s_{i+1}{j+1}" for (i, j) in planes] \
        + [f"tau_{i+1}" for i in range(d)] + ["vt_norm"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in history:
            w.writerow([repr(float(x)) for x in row])


def steady_residual(v: np.ndarray, s, tau, grid: Grid, A: np.ndarray, f) -> float:
    """Discrete L^2 norm of A lap v + <(Sx + tau), grad v> + f(v)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    ws = Workspace(grid, A, dt=1.0)
    S = velocity_matrix(grid.d, s) if np.atleast_1d(s).size else np.zeros((grid.d, grid.d))
    res = ws.diffusion(v) + ws.drift(v, S, np.asarray(tau, float)) \
        + f(np.moveaxis(np.atleast_2d(v), 0, -1)).reshape(-1, ws.m).T
    return l2_norm(res, grid)
