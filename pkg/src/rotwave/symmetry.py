"""Point spectrum forced by Euclidean symmetry.

A skew-symmetric velocity matrix S pins d(d+1)/2 purely imaginary
eigenvalues of the linearized operator.  This module computes the unitary
diagonalization of S with a deterministic ordering convention, enumerates
the resulting eigenvalue multiset, constructs the finite-dimensional
eigentriples (lambda, E, b) and evaluates the associated eigenfunction
fields <Ex + b, grad v*> on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

_SKEW_ATOL = 1e-12
_TRIPLE_RTOL = 1e-10
_MERGE_TOL = 1e-9

_PAIR_LIFT = np.array([[1.0, 1.0], [1.0j, -1.0j]]) / np.sqrt(2.0)


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class SkewSpectrum:
    """Unitary diagonalization U^H S U = diag(LambdaS) of a skew-symmetric S.

    Columns come in adjacent conjugate pairs (+i sigma_l branch first, sigma_l
    descending), the kernel block last.
    """

    U: np.ndarray            # d x d complex unitary
    LambdaS: np.ndarray      # d purely imaginary eigenvalues
    sigma: np.ndarray        # k positive angular velocities, descending
    k: int

    @property
    def d(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class SymmetryEigentriple:
    """Solution (lambda, E, b) of lambda E = [E, S], lambda b = -S b.

    Translation triples carry E = 0, rotation-pair triples carry b = 0.
    """

    lam: complex
    E: np.ndarray
    b: np.ndarray
    kind: str  # "translation" | "rotation-pair"

    def to_json_obj(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "E": [[[z.real, z.imag] for z in row] for row in self.E],
            "b": [[z.real, z.imag] for z in self.b],
            "kind": self.kind,
        }


def _canonical_plane(p1: np.ndarray, p2: np.ndarray):
    """Rotate an orthonormal plane basis so the dominant row is (positive, 0).

    Planar rotations commute with the 2x2 rotation generator, so this leaves
    the block structure intact while fixing the column signs deterministically.
    """
    norms = p1**2 + p2**2
    i = int(np.argmax(norms))
    r = np.hypot(p1[i], p2[i])
    if r == 0.0:
        return p1, p2
    c, s = p1[i] / r, p2[i] / r
    return c * p1 + s * p2, -s * p1 + c * p2


def skew_eigendecomposition(S: np.ndarray) -> SkewSpectrum:
    """Unitary diagonalization of a real skew-symmetric matrix.

    Builds the real block form via a real Schur decomposition, then lifts each
    2x2 rotation block with (1/sqrt 2) [[1, 1], [i, -i]].
    """
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    scale = max(np.max(np.abs(S)), 1.0)
    if S.shape != (d, d) or np.max(np.abs(S + S.T)) > _SKEW_ATOL * scale:
        raise SymmetryError("S must be square and skew-symmetric")

    if np.max(np.abs(S)) == 0.0:
        return SkewSpectrum(
            U=np.eye(d, dtype=complex),
            LambdaS=np.zeros(d, dtype=complex),
            sigma=np.zeros(0),
            k=0,
        )

    T, Z = linalg.schur(S, output="real")
    zero_tol = 1e-10 * scale

    pairs = []   # (sigma, p_plus_first, p_second)
    kernel = []
    j = 0
    while j < d:
        if j + 1 < d and abs(T[j + 1, j]) > zero_tol:
            sig = T[j, j + 1]
            p1, p2 = Z[:, j].copy(), Z[:, j + 1].copy()
            if sig < 0.0:
                p1, p2, sig = p2, p1, -sig
            p1, p2 = _canonical_plane(p1, p2)
            pairs.append((sig, p1, p2))
            j += 2
        else:
            v = Z[:, j].copy()
            i = int(np.argmax(np.abs(v)))
            if v[i] < 0.0:
                v = -v
            kernel.append(v)
            j += 1

    pairs.sort(key=lambda t: -t[0])
    kernel.sort(key=lambda v: tuple(np.round(v, 12)))

    cols = []
    lams = []
    for sig, p1, p2 in pairs:
        cols.append((p1 + 1j * p2) / np.sqrt(2.0))
        cols.append((p1 - 1j * p2) / np.sqrt(2.0))
        lams.extend([1j * sig, -1j * sig])
    for v in kernel:
        cols.append(v.astype(complex))
        lams.append(0.0 + 0.0j)

    U = np.column_stack(cols)
    LambdaS = np.array(lams, dtype=complex)

    if np.max(np.abs(U @ np.diag(LambdaS) @ U.conj().T - S)) > 1e-10 * scale:
        raise SymmetryError("skew eigendecomposition failed to reproduce S")
    return SkewSpectrum(
        U=U, LambdaS=LambdaS, sigma=np.array([p[0] for p in pairs]), k=len(pairs)
    )


def symmetry_set(S: np.ndarray) -> list[tuple[complex, int]]:
    """sigma(S) together with all pairwise sums lambda_i + lambda_j (i < j).

    Returned as (value, multiplicity) with nearby values merged; the total
    multiplicity is d(d+1)/2.
    """
    spec = skew_eigendecomposition(S)
    lams = spec.LambdaS
    d = len(lams)
    values = list(lams) + [lams[i] + lams[j] for i in range(d) for j in range(i + 1, d)]
    merged: list[list] = []
    for v in sorted(values, key=lambda z: (z.imag, z.real)):
        if merged and abs(v - merged[-1][0]) <= _MERGE_TOL:
            merged[-1][1] += 1
        else:
            merged.append([v, 1])
    out = []
    for v, mult in merged:
        if abs(v) <= _MERGE_TOL:
            v = 0.0 + 0.0j
        out.append((complex(v), mult))
    return out


def symmetry_eigentriples(S: np.ndarray) -> list[SymmetryEigentriple]:
    """All d(d+1)/2 eigentriples of the finite-dimensional symmetry problem.

    Translation triples (-lambda_l, 0, U e_l) and rotation-pair triples
    (-(lambda_i + lambda_j), U (I_ij - I_ji) U^T, 0); every triple is residual
    checked before return.
    """
    spec = skew_eigendecomposition(S)
    S = np.asarray(S, dtype=float)
    d = spec.d
    U, lams = spec.U, spec.LambdaS
    scale = max(np.max(np.abs(S)), 1.0)

    triples = []
    for l in range(d):
        triples.append(
            SymmetryEigentriple(
                lam=complex(-lams[l]),
                E=np.zeros((d, d), dtype=complex),
                b=U[:, l].copy(),
                kind="translation",
            )
        )
    for i in range(d):
        for j in range(i + 1, d):
            K = np.zeros((d, d))
            K[i, j], K[j, i] = 1.0, -1.0
            E = U @ K @ U.T
            triples.append(
                SymmetryEigentriple(
                    lam=complex(-(lams[i] + lams[j])),
                    E=E,
                    b=np.zeros(d, dtype=complex),
                    kind="rotation-pair",
                )
            )

    for t in triples:
        res_E = np.max(np.abs(t.lam * t.E - (t.E @ S - S @ t.E)))
        res_b = np.max(np.abs(t.lam * t.b + S @ t.b)) if t.kind == "translation" else 0.0
        if max(res_E, res_b) > _TRIPLE_RTOL * scale:
            raise SymmetryError(
                f"eigentriple residual {max(res_E, res_b):.3e} exceeds tolerance "
                "(decomposition bug)"
            )
    return triples


def eigenfunction_field(gradients, E: np.ndarray, b: np.ndarray, grid):
    """Pointwise field v(x) = sum_i (Ex + b)_i d_i v*(x).

    `gradients` are the d partial-derivative fields of the profile, each of
    shape (m, n_nodes) on the same grid.
    """
    d = grid.d
    if len(gradients) != d:
        raise SymmetryError("need one gradient field per spatial direction")
    shape = gradients[0].shape
    for g in gradients:
        if g.shape != shape:
            raise SymmetryError("gradient fields disagree in shape")
    if shape[-1] != grid.n_nodes:
        raise SymmetryError("gradient fields do not match the grid")

    X = grid.node_coords()                       # (n_nodes, d)
    coeff = X @ np.asarray(E, dtype=complex).T + np.asarray(b, dtype=complex)
    out = np.zeros(shape, dtype=complex)
    for i in range(d):
        out += coeff[:, i] * gradients[i]
    return out
