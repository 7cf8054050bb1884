"""Dispersion relation, dispersion-set sampling and the heat-kernel oracle.

The far-field linearization turns into the m-dimensional eigenvalue problem
eig(Dfinf - eta^2 A) - i<n, sigma> parametrized by a radial frequency
eta >= 0 and an integer vector n over the rotation planes.  Sampling these
curves traces the cone structure of the essential spectrum; the
constant-coefficient heat kernel provides an independent semigroup oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeffs import SystemCoefficients, simultaneous_diagonalization
from .discretize import Grid
from .symmetry import skew_eigendecomposition

_MAX_DENOMINATOR = 10**6
_RATIONAL_TOL = 1e-9


class DispersionError(ValueError):
    pass


@dataclass(frozen=True)
class DispersionQuery:
    """Sampling request: eta values and the integer box |n_l| <= n_box."""

    coeffs: SystemCoefficients
    eta_grid: np.ndarray
    n_box: int

    def __post_init__(self):
        eta = np.asarray(self.eta_grid, dtype=float)
        if eta.size == 0 or np.any(np.diff(eta) < 0) or eta[0] < 0:
            raise DispersionError("eta_grid must be nonempty, sorted and >= 0")
        if self.n_box < 0:
            raise DispersionError("n_box must be >= 0")
        object.__setattr__(self, "eta_grid", eta)


@dataclass(frozen=True)
class DispersionCurve:
    n: tuple[int, ...]
    eta: np.ndarray          # (n_eta,)
    lam: np.ndarray          # (n_eta, m) complex


def _angular_velocities(coeffs: SystemCoefficients) -> np.ndarray:
    return skew_eigendecomposition(coeffs.S).sigma


def _joint_eigenvalues(coeffs: SystemCoefficients):
    ok, Y, _ = simultaneous_diagonalization(coeffs.A, coeffs.Dfinf)
    if not ok:
        return None
    Yi = np.linalg.inv(Y)
    a = np.diag(Yi @ coeffs.A @ Y)
    dd = np.diag(Yi @ coeffs.Dfinf @ Y)
    return a, dd


def dispersion_eigenvalues(
    coeffs: SystemCoefficients, eta: float, n, path: str = "auto"
) -> np.ndarray:
    """The m eigenvalues eig(Dfinf - eta^2 A) - i<n, sigma>, deterministically sorted.

    When A and Dfinf are simultaneously diagonalizable the joint eigenvalues
    give the values directly (fast path); otherwise a dense eigensolve is used.
    The shift -i<n, sigma> is applied after sorting, so the translation
    structure in n is exact.
    """
    if eta < 0:
        raise DispersionError("eta must be >= 0")
    sigma = _angular_velocities(coeffs)
    n = np.atleast_1d(np.asarray(n, dtype=int))
    if n.size != len(sigma):
        raise DispersionError(f"n must have one entry per rotation plane ({len(sigma)})")

    core = None
    if path in ("auto", "fast"):
        joint = _joint_eigenvalues(coeffs)
        if joint is not None:
            a, dd = joint
            core = dd - eta**2 * a
        elif path == "fast":
            raise DispersionError("fast path requires simultaneous diagonalizability")
    if core is None:
        core = np.linalg.eigvals(coeffs.Dfinf - eta**2 * coeffs.A)
    core = core[np.lexsort((core.imag, -core.real))]
    return core - 1j * float(n @ sigma)


def default_eta_grid(coeffs: SystemCoefficients, re_min: float = -3.0, n: int = 400):
    """eta samples on [0, eta_max] with eta_max pushing Re(lambda) below re_min."""
    from .coeffs import spectral_constants

    c = spectral_constants(coeffs)
    span = max(abs(re_min) - c.b0, 1.0)
    eta_max = math.sqrt(span / max(c.a0, 1e-12)) * 1.2
    return np.linspace(0.0, eta_max, n)


def sample_dispersion_set(query: DispersionQuery):
    """All curves over the integer box, plus the cone tips s(Dfinf) - i<n, sigma>.

    Curves are ordered lexicographically in n; returns (curves, tips).
    """
    coeffs = query.coeffs
    sigma = _angular_velocities(coeffs)
    k = len(sigma)
    s_inf = float(np.max(np.linalg.eigvals(coeffs.Dfinf).real))

    base = np.stack(
        [dispersion_eigenvalues(coeffs, e, np.zeros(k, dtype=int)) for e in query.eta_grid]
    )
    rng = range(-query.n_box, query.n_box + 1)
    ns = [()] if k == 0 else None
    if k > 0:
        mesh = np.meshgrid(*([list(rng)] * k), indexing="ij")
        ns = sorted(tuple(int(v) for v in row) for row in np.stack(mesh, -1).reshape(-1, k))

    curves = []
    tips = []
    for n in ns:
        shift = 1j * float(np.dot(n, sigma)) if k else 0.0
        curves.append(DispersionCurve(n=n, eta=query.eta_grid, lam=base - shift))
        tips.append(complex(s_inf) - shift)
    return curves, tips


def detect_rational(x: float, max_denominator: int = _MAX_DENOMINATOR,
                    tol: float = _RATIONAL_TOL):
    """Continued-fraction rationality probe.

    Expands x until either the remainder drops below `tol` (declared rational,
    returning the convergent p/q) or the convergent denominator exceeds
    `max_denominator` (declared irrational).  Floating-point inputs make true
    rationality undecidable; both caps are part of the contract.
    """
    if x < 0:
        x = -x
    p_prev, q_prev = 1, 0
    p, q = int(math.floor(x)), 1
    frac = x - math.floor(x)
    while True:
        if frac < tol:
            return True, p, q
        if q > max_denominator:
            return False, None, None
        x = 1.0 / frac
        a = int(math.floor(x))
        frac = x - a
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q


def density_classifier(sigma) -> str:
    """"dense-halfplane" iff some ratio of angular velocities is irrational.

    A single rotation frequency always yields a discrete subgroup.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if sigma.size < 1 or np.any(sigma <= 0):
        raise DispersionError("sigma must be positive angular velocities")
    if sigma.size == 1:
        return "discrete-subgroup"
    for i in range(len(sigma)):
        for j in range(len(sigma)):
            if i == j:
                continue
            rational, _, _ = detect_rational(sigma[i] / sigma[j])
            if not rational:
                return "dense-halfplane"
    return "discrete-subgroup"


# -- heat kernel / semigroup oracle ---------------------------------------

def rotation_matrix(S: np.ndarray, t: float) -> np.ndarray:
    """exp(tS) via the skew eigendecomposition (exactly orthogonal up to rounding)."""
    spec = skew_eigendecomposition(S)
    return np.real(spec.U @ np.diag(np.exp(t * spec.LambdaS)) @ spec.U.conj().T)


def _joint_channels(A: np.ndarray, Binf: np.ndarray):
    ok, Y, _ = simultaneous_diagonalization(A, Binf)
    if not ok:
        raise DispersionError("not simultaneously diagonalizable")
    Yi = np.linalg.inv(Y)
    a = np.diag(Yi @ np.asarray(A, dtype=complex) @ Y)
    b = np.diag(Yi @ np.asarray(Binf, dtype=complex) @ Y)
    return Y, Yi, a, b


def heat_kernel(A, S, Binf, x, xi, t: float) -> np.ndarray:
    """Heat kernel (4 pi t A)^(-d/2) exp(-Binf t - |exp(tS) x - xi|^2 / (4 t A)).

    Matrix functions are taken on the joint eigenvalues of A and Binf
    (principal branch; the eigenvalues of A sit in the right half-plane).
    """
    if t <= 0:
        raise DispersionError("t must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    Binf = np.atleast_2d(np.asarray(Binf, dtype=complex))
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    Y, Yi, a, b = _joint_channels(A, Binf)
    r2 = float(np.sum((rotation_matrix(S, t) @ np.asarray(x, float)
                       - np.asarray(xi, float)) ** 2))
    diag = (4.0 * np.pi * t * a) ** (-d / 2.0) * np.exp(-b * t - r2 / (4.0 * t * a))
    return Y @ np.diag(diag) @ Yi


def apply_semigroup(v: np.ndarray, t: float, A, S, Binf, grid: Grid,
                    chunk: int = 256):
    """Quadrature of the kernel integral on the grid; identity at t = 0.

    Returns (field, truncation_error) where the error is the worst deviation
    of the quadratured kernel mass from its analytic value (1 per channel,
    before the exp(-b t) factor), probing how much mass leaks off the box.
    """
    v = np.atleast_2d(np.asarray(v, dtype=complex))
    if v.shape[1] != grid.n_nodes:
        raise DispersionError("field does not match grid")
    if t == 0.0:
        return v.copy(), 0.0
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    Binf = np.atleast_2d(np.asarray(Binf, dtype=complex))
    Y, Yi, a, b = _joint_channels(A, Binf)
    d = grid.d

    Xi = grid.node_coords()
    Xr = grid.node_coords() @ rotation_matrix(np.asarray(S, float), t).T
    vt = Yi @ v
    out = np.empty_like(vt)
    xi_sq = np.sum(Xi**2, axis=1)
    mass_dev = 0.0
    hd = grid.h**d
    pref = (4.0 * np.pi * t * a) ** (-d / 2.0)
    for start in range(0, grid.n_nodes, chunk):
        sl = slice(start, min(start + chunk, grid.n_nodes))
        r2 = (
            np.sum(Xr[sl] ** 2, axis=1)[:, None]
            + xi_sq[None, :]
            - 2.0 * Xr[sl] @ Xi.T
        )
        for j in range(len(a)):
            G = pref[j] * np.exp(-r2 / (4.0 * t * a[j]))
            mass = G.sum(axis=1) * hd
            mass_dev = max(mass_dev, float(np.max(np.abs(mass - 1.0))))
            out[j, sl] = np.exp(-b[j] * t) * (G @ vt[j]) * hd
    res = Y @ out
    if np.max(np.abs(res.imag)) < 1e-13 * max(np.max(np.abs(res.real)), 1e-300):
        res = res.real.astype(complex)
    return res, mass_dev
