"""Uniform-grid finite differences on [-R, R]^d with Neumann boundary.

Fields are arrays of shape (m, N^d): one block per component, nodes in
C-order (axis x1 slowest).  Operators act on the flattened component-block
vector of length m * N^d.

The drift term <Sx, grad v> is discretized with per-node, per-direction
first-order upwinding by default (the coefficient grows linearly in |x|);
a centered variant is kept for convergence studies.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on [-R, R]^d with N points per dimension."""

    d: int
    R: float
    N: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise GridError("only d = 2 or 3 supported")
        if self.N < 8:
            raise GridError("N must be >= 8")
        if self.R <= 0:
            raise GridError("R must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.N - 1)

    @property
    def n_nodes(self) -> int:
        return self.N**self.d

    def axis(self) -> np.ndarray:
        return -self.R + self.h * np.arange(self.N)

    def node_coords(self) -> np.ndarray:
        """(n_nodes, d) coordinates in C-order."""
        mesh = np.meshgrid(*([self.axis()] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.node_coords(), axis=1)

    def reshape(self, comp: np.ndarray) -> np.ndarray:
        return comp.reshape((self.N,) * self.d)


@dataclass
class DiscreteOperator:
    """Sparse operator on component-block vectors of length m * N^d."""

    matrix: sparse.csr_matrix
    grid: Grid
    m: int
    scheme: str
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.m * self.grid.n_nodes

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply to a field of shape (m, n_nodes); returns the same shape."""
        return (self.matrix @ v.reshape(self.dim)).reshape(self.m, self.grid.n_nodes)


# -- 1-d building blocks ---------------------------------------------------

def _lap1d_neumann(N: int, h: float) -> sparse.csr_matrix:
    """Second difference with mirrored ghost nodes (u_{-1} = u_1)."""
    main = np.full(N, -2.0)
    off = np.ones(N - 1)
    L = sparse.diags([off, main, off], [-1, 0, 1], format="lil")
    L[0, 1] = 2.0
    L[N - 1, N - 2] = 2.0
    return (L / h**2).tocsr()


def _diff1d(N: int, h: float, kind: str) -> sparse.csr_matrix:
    """First difference; rows whose stencil leaves the domain are zeroed
    (forward/backward) or vanish by the mirror ghost (centered)."""
    D = sparse.lil_matrix((N, N))
    if kind == "forward":
        for j in range(N - 1):
            D[j, j], D[j, j + 1] = -1.0, 1.0
    elif kind == "backward":
        for j in range(1, N):
            D[j, j - 1], D[j, j] = -1.0, 1.0
    elif kind == "centered":
        for j in range(1, N - 1):
            D[j, j - 1], D[j, j + 1] = -0.5, 0.5
    else:
        raise GridError(f"unknown difference kind {kind!r}")
    return (D / h).tocsr()


def _lift(op1d: sparse.spmatrix, grid: Grid, axis: int) -> sparse.csr_matrix:
    """Kronecker-lift a 1-d operator onto the tensor grid along `axis`."""
    mats = [sparse.identity(grid.N, format="csr")] * grid.d
    mats[axis] = op1d.tocsr()
    out = mats[0]
    for Mtx in mats[1:]:
        out = sparse.kron(out, Mtx, format="csr")
    return out


_LAP_CACHE: dict = {}


def laplacian(grid: Grid) -> sparse.csr_matrix:
    # assembled once per grid; the kron assembly dominates tight loops
    key = (grid.d, grid.N, grid.R)
    if key not in _LAP_CACHE:
        L1 = _lap1d_neumann(grid.N, grid.h)
        out = _lift(L1, grid, 0)
        for ax in range(1, grid.d):
            out = out + _lift(L1, grid, ax)
        _LAP_CACHE[key] = out.tocsr()
    return _LAP_CACHE[key]


def drift_matrix(grid: Grid, S: np.ndarray, scheme: str = "upwind") -> sparse.csr_matrix:
    """Scalar discretization of v -> <Sx, grad v>."""
    X = grid.node_coords()
    C = X @ np.asarray(S, dtype=float).T      # (n_nodes, d), column i = (Sx)_i
    out = sparse.csr_matrix((grid.n_nodes, grid.n_nodes))
    for ax in range(grid.d):
        c = C[:, ax]
        if scheme == "upwind":
            F = _lift(_diff1d(grid.N, grid.h, "forward"), grid, ax)
            B = _lift(_diff1d(grid.N, grid.h, "backward"), grid, ax)
            out = out + sparse.diags(np.maximum(c, 0.0)) @ F
            out = out + sparse.diags(np.minimum(c, 0.0)) @ B
        elif scheme == "centered":
            Dc = _lift(_diff1d(grid.N, grid.h, "centered"), grid, ax)
            out = out + sparse.diags(c) @ Dc
        else:
            raise GridError(f"unknown drift scheme {scheme!r}")
    return out.tocsr()


# -- assembly --------------------------------------------------------------

def _check_reaction(reaction: np.ndarray, grid: Grid, m: int):
    reaction = np.asarray(reaction)
    if reaction.shape != (grid.n_nodes, m, m):
        raise GridError(
            f"reaction must have shape ({grid.n_nodes}, {m}, {m}), got {reaction.shape}"
        )
    return reaction


def assemble_linearized(
    grid: Grid,
    A: np.ndarray,
    S: np.ndarray,
    reaction: np.ndarray,
    scheme: str = "upwind",
) -> DiscreteOperator:
    """Sparse matrix of v -> A lap(v) + <Sx, grad v> + reaction(x) v."""
    A = np.asarray(A)
    m = A.shape[0]
    reaction = _check_reaction(reaction, grid, m)
    Lap = laplacian(grid)
    Drift = drift_matrix(grid, S, scheme)
    blocks = []
    for i in range(m):
        row = []
        for j in range(m):
            blk = sparse.csr_matrix((grid.n_nodes, grid.n_nodes), dtype=complex)
            if A[i, j] != 0:
                blk = blk + A[i, j] * Lap
            if i == j:
                blk = blk + Drift
            rij = reaction[:, i, j]
            if np.any(rij != 0):
                blk = blk + sparse.diags(rij)
            row.append(blk)
        blocks.append(row)
    M = sparse.bmat(blocks, format="csr")
    if np.max(np.abs(M.data.imag)) == 0.0 and np.isrealobj(A) and np.isrealobj(reaction):
        M = M.real.tocsr()
    return DiscreteOperator(M, grid, m, scheme, meta={"kind": "linearized"})


def assemble_adjoint(
    grid: Grid,
    A: np.ndarray,
    S: np.ndarray,
    reaction: np.ndarray,
    scheme: str = "upwind",
) -> DiscreteOperator:
    """Discrete adjoint: exact conjugate transpose of the forward assembly."""
    fwd = assemble_linearized(grid, A, S, reaction, scheme)
    M = fwd.matrix.conj().T.tocsr()
    return DiscreteOperator(M, grid, fwd.m, scheme, meta={"kind": "discrete-adjoint"})


def assemble_adjoint_direct(
    grid: Grid,
    A: np.ndarray,
    S: np.ndarray,
    reaction: np.ndarray,
    scheme: str = "upwind",
) -> DiscreteOperator:
    """Direct assembly of A^H lap - <Sx, grad .> + reaction(x)^H.

    Differs from the discrete adjoint by O(h) on smooth fields; used for
    consistency testing only.
    """
    A = np.asarray(A)
    m = A.shape[0]
    reaction = _check_reaction(reaction, grid, m)
    reaction_H = np.conj(np.swapaxes(reaction, 1, 2))
    op = assemble_linearized(grid, A.conj().T, -np.asarray(S, dtype=float),
                             reaction_H, scheme)
    op.meta["kind"] = "adjoint-direct"
    return op


# -- field utilities -------------------------------------------------------

def gradient_fields(v: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """d partial-derivative fields: centered interior, one-sided at the boundary."""
    v = np.atleast_2d(v)
    m = v.shape[0]
    grads = [np.empty_like(v) for _ in range(grid.d)]
    for c in range(m):
        cube = grid.reshape(v[c])
        for ax in range(grid.d):
            grads[ax][c] = np.gradient(cube, grid.h, axis=ax, edge_order=1).ravel()
    return grads


def weight_field(grid: Grid, mu: float) -> np.ndarray:
    """Radial weight exp(mu * sqrt(|x|^2 + 1)) per node."""
    return np.exp(mu * np.sqrt(grid.radii() ** 2 + 1.0))


def weighted_norm(v: np.ndarray, theta: np.ndarray, p: float, grid: Grid) -> float:
    """Discrete weighted L^p norm (sum |theta v|^p h^d)^(1/p).

    |v| at a node is the Euclidean norm over the m components.
    """
    v = np.atleast_2d(v)
    mag = np.linalg.norm(v, axis=0) * np.asarray(theta)
    return float((np.sum(mag**p) * grid.h**grid.d) ** (1.0 / p))


def l2_norm(v: np.ndarray, grid: Grid) -> float:
    return weighted_norm(v, np.ones(grid.n_nodes), 2.0, grid)


def inner(u: np.ndarray, v: np.ndarray, grid: Grid) -> complex:
    """Discrete L^2 inner product over nodes and components."""
    return complex(np.vdot(np.atleast_2d(u), np.atleast_2d(v)) * grid.h**grid.d)


# -- persistence -----------------------------------------------------------

def save_field(path, v: np.ndarray, grid: Grid, components=None):
    """Raw little-endian float64 (component blocks, C-order nodes) + JSON sidecar."""
    path = Path(path)
    v = np.atleast_2d(v)
    is_complex = np.iscomplexobj(v)
    data = np.concatenate([v.real, v.imag], axis=0) if is_complex else v
    data.astype("<f8").tofile(path)
    sidecar = {
        "d": grid.d,
        "N": grid.N,
        "R": grid.R,
        "m": int(v.shape[0]),
        "complex": is_complex,
        "components": components or [f"u{i+1}" for i in range(v.shape[0])],
        "ordering": "component blocks, C-order nodes, little-endian float64",
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))


def load_field(path):
    """Inverse of save_field; returns (field, Grid)."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = Grid(d=sidecar["d"], R=sidecar["R"], N=sidecar["N"])
    m = sidecar["m"]
    raw = np.fromfile(path, dtype="<f8")
    if sidecar.get("complex", False):
        raw = raw.reshape(2 * m, grid.n_nodes)
        v = raw[:m] + 1j * raw[m:]
    else:
        v = raw.reshape(m, grid.n_nodes)
    return v, grid
