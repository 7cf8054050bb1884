"""Model matrices, structural condition checks and spectral constants.

The system is described by a diffusion matrix A (m x m, complex), a real
skew-symmetric velocity matrix S (d x d) and the Jacobian of the
nonlinearity at the far-field state, Dfinf (m x m).  Everything downstream
(dispersion curves, decay-rate bounds, admissible Lebesgue exponents) is
driven by a handful of scalar constants derived from these matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

_DIAG_COND_LIMIT = 1e8     # eigenvector condition number above this counts as defective
_COMMUTE_RTOL = 1e-10      # relative tolerance for the commutator test
_MU1_STARTS = 64           # random starts for the non-normal antieigenvalue search
_SAMPLE_PAIRS = 10_000     # (z, w) samples for the dissipativity form estimate


class CoefficientError(ValueError):
    """Raised for structurally invalid input matrices."""


@dataclass(frozen=True)
class SystemCoefficients:
    """Matrices defining the linearization at a localized rotating wave."""

    A: np.ndarray        # m x m complex diffusion matrix
    S: np.ndarray        # d x d real, skew-symmetric
    Dfinf: np.ndarray    # m x m Jacobian of f at the far-field state
    d: int
    m: int

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        S = np.asarray(self.S, dtype=float)
        Dfinf = np.asarray(self.Dfinf, dtype=complex)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Dfinf", Dfinf)
        if self.d < 2:
            raise CoefficientError("spatial dimension d must be >= 2")
        if self.m < 1:
            raise CoefficientError("system dimension m must be >= 1")
        if A.shape != (self.m, self.m) or Dfinf.shape != (self.m, self.m):
            raise CoefficientError("A and Dfinf must be m x m")
        if S.shape != (self.d, self.d):
            raise CoefficientError("S must be d x d")
        if np.max(np.abs(S + S.T)) != 0.0:
            raise CoefficientError("S must be exactly skew-symmetric")
        if np.min(np.linalg.eigvals(A).real) <= 0.0:
            raise CoefficientError("all eigenvalues of A must have positive real part")

    @property
    def A_is_real(self) -> bool:
        return bool(np.max(np.abs(self.A.imag)) == 0.0)


@dataclass(frozen=True)
class SpectralConstants:
    """Scalar constants of the linear theory.

    a_min, a_max bracket the spectrum of A in modulus, a0 and b0 are the
    spectral bounds of -A and Dfinf, a1 is the kernel-envelope constant
    (a_max^2 / (a_min a0))^(d/2).  beta_A and beta_inf are the coercivity
    bounds of the Hermitian parts.
    """

    a_min: float
    a_max: float
    a0: float
    a1: float
    b0: float
    beta_A: float
    beta_inf: float


@dataclass
class ConditionEntry:
    name: str
    passed: bool
    witness: float | None = None
    estimate: float | None = None
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "witness": self.witness,
            "estimate": self.estimate,
            **({"note": self.note} if self.note else {}),
        }


@dataclass
class ConditionReport:
    """Pass/fail record for the structural conditions A1..A11 at a given p."""

    p: float
    q: float
    entries: dict[str, ConditionEntry] = field(default_factory=dict)
    external_constants: dict[str, str] = field(
        default_factory=lambda: {"C_0_eps": "external", "K1": "external"}
    )

    def __getitem__(self, name: str) -> ConditionEntry:
        return self.entries[name]

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries.values())

    def to_json_obj(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "all_pass": self.all_pass,
            "conditions": [e.to_dict() for e in self.entries.values()],
            "external_constants": self.external_constants,
        }


def spectral_constants(coeffs: SystemCoefficients) -> SpectralConstants:
    """Compute the scalar constants (a_min, a_max, a0, a1, b0, beta_A, beta_inf)."""
    A, Dfinf, d = coeffs.A, coeffs.Dfinf, coeffs.d
    if abs(np.linalg.det(A)) == 0.0:
        raise CoefficientError("A not invertible")
    eig_A = np.linalg.eigvals(A)
    a_min = 1.0 / np.max(np.abs(np.linalg.eigvals(np.linalg.inv(A))))
    a_max = float(np.max(np.abs(eig_A)))
    a0 = float(-np.max(-eig_A.real))       # -s(-A) = min Re sigma(A)
    a1 = (a_max**2 / (a_min * a0)) ** (d / 2.0)
    b0 = float(-np.max(np.linalg.eigvals(Dfinf).real))
    herm_A = (A + A.conj().T) / 2.0
    herm_inf = (Dfinf + Dfinf.conj().T) / 2.0
    beta_A = float(np.min(np.linalg.eigvalsh(herm_A)))
    beta_inf = float(-np.max(np.linalg.eigvalsh(herm_inf)))
    return SpectralConstants(float(a_min), a_max, a0, float(a1), b0, beta_A, beta_inf)


def _is_normal(M: np.ndarray) -> bool:
    MH = M.conj().T
    scale = np.linalg.norm(M, "fro") ** 2
    return np.linalg.norm(M @ MH - MH @ M, "fro") <= 1e-12 * max(scale, 1e-300)


def _pair_min(lam_i: complex, lam_j: complex) -> float:
    """Minimum of the antieigenvalue quotient over the span of two eigenvectors.

    For a normal matrix and w in the span of two orthonormal eigenvectors the
    quotient reduces to (t*Re(li) + (1-t)*Re(lj)) / sqrt(t*|li|^2 + (1-t)*|lj|^2)
    with t in [0, 1]; the minimum sits at an endpoint or at the single interior
    critical point of this 1-d function.
    """
    a, b = lam_i.real, lam_j.real
    c, e = abs(lam_i) ** 2, abs(lam_j) ** 2
    cands = [0.0, 1.0]
    denom = (a - b) * (c - e)
    if denom != 0.0:
        t = (b * (c - e) - 2.0 * e * (a - b)) / denom
        if 0.0 < t < 1.0:
            cands.append(t)
    best = math.inf
    for t in cands:
        den = e + (c - e) * t
        if den <= 0.0:
            continue
        best = min(best, (b + (a - b) * t) / math.sqrt(den))
    return best


def _mu1_normal(M: np.ndarray) -> float:
    eig = np.linalg.eigvals(M)
    scale = np.max(np.abs(eig))
    lams = [l for l in eig if abs(l) > 1e-14 * scale]
    best = math.inf
    for i, li in enumerate(lams):
        for lj in lams[i:]:
            best = min(best, _pair_min(li, lj))
    if len(lams) < len(eig):
        # mixing a kernel direction into w drives the quotient to 0 from above
        best = min(best, 0.0)
    return best


def _mu1_quotient_and_grad(x: np.ndarray, M: np.ndarray, MH: np.ndarray, m: int):
    w = x[:m] + 1j * x[m:]
    u = M @ w
    n1 = np.linalg.norm(w)
    n2 = np.linalg.norm(u)
    if n1 < 1e-150 or n2 < 1e-150:
        return 1.0, np.zeros_like(x)
    N = float(np.real(w.conj() @ u))
    q = N / (n1 * n2)
    # real gradient via 2*dF/d(conj w)
    g_N = (M + MH) @ w
    g_n1 = w / n1
    g_n2 = (MH @ u) / n2
    g = g_N / (n1 * n2) - N * (g_n1 * n2 + n1 * g_n2) / (n1 * n2) ** 2
    return q, np.concatenate([g.real, g.imag])


def first_antieigenvalue(M: np.ndarray, seed: int = 0) -> float:
    """First antieigenvalue mu_1: infimum of Re<w, Mw> / (|w| |Mw|) over w with Mw != 0.

    Normal matrices use the closed pairwise formula; otherwise a multi-start
    quasi-Newton minimization of the scale-invariant quotient is run and the
    smallest value kept.
    """
    M = np.asarray(M, dtype=complex)
    if np.all(M == 0):
        raise CoefficientError("mu_1 undefined for the zero matrix")
    if _is_normal(M):
        return _mu1_normal(M)

    m = M.shape[0]
    MH = M.conj().T
    rng = np.random.default_rng(seed)
    starts = [rng.standard_normal(2 * m) for _ in range(_MU1_STARTS)]
    # eigenvector starts help when the minimizer sits near an invariant subspace
    _, vecs = np.linalg.eig(M)
    for j in range(m):
        v = vecs[:, j]
        starts.append(np.concatenate([v.real, v.imag]))
    best = math.inf
    for x0 in starts:
        nx = np.linalg.norm(x0)
        if nx == 0.0:
            continue
        res = optimize.minimize(
            _mu1_quotient_and_grad,
            x0 / nx,
            args=(M, MH, m),
            jac=True,
            method="BFGS",
            options={"gtol": 1e-10, "maxiter": 500},
        )
        best = min(best, float(res.fun))
    return best


def admissible_p_range(M: np.ndarray, seed: int = 0) -> tuple[float, float] | None:
    """Open interval of exponents p with |p-2|/p < mu_1(M).

    Returns (p_min, p_max) with p_max = inf when mu_1 = 1, or None when
    mu_1 <= 0 (empty range).
    """
    mu1 = first_antieigenvalue(M, seed=seed)
    if mu1 <= 0.0:
        return None
    p_min = 2.0 / (1.0 + mu1)
    p_max = math.inf if mu1 >= 1.0 else 2.0 / (1.0 - mu1)
    return (p_min, p_max)


def simultaneous_diagonalization(A: np.ndarray, B: np.ndarray):
    """Joint diagonalization of two commuting diagonalizable matrices.

    Returns (ok, Y, kappa): ok is True iff A and B commute (up to a relative
    tolerance) and are both diagonalizable; Y then diagonalizes both and
    kappa = cond_2(Y).
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    nA = np.linalg.norm(A)
    nB = np.linalg.norm(B)
    comm = np.linalg.norm(A @ B - B @ A)
    if comm > _COMMUTE_RTOL * max(nA * nB, 1e-300):
        return False, None, math.inf

    lam, V = np.linalg.eig(A)
    if np.linalg.cond(V) >= _DIAG_COND_LIMIT:
        return False, None, math.inf
    lamB, VB = np.linalg.eig(B)
    if np.linalg.cond(VB) >= _DIAG_COND_LIMIT:
        return False, None, math.inf

    # within each eigenspace of A, diagonalize the restriction of B
    m = A.shape[0]
    order = np.lexsort((lam.imag, lam.real))
    lam, V = lam[order], V[:, order]
    Y = np.array(V, dtype=complex)
    tol = 1e-8 * max(np.max(np.abs(lam)), 1.0)
    i = 0
    while i < m:
        j = i + 1
        while j < m and abs(lam[j] - lam[i]) <= tol:
            j += 1
        if j - i > 1:
            block = V[:, i:j]
            # B restricted to the eigenspace, in the (non-orthonormal) basis `block`
            Bres = np.linalg.lstsq(block, B @ block, rcond=None)[0]
            _, W = np.linalg.eig(Bres)
            Y[:, i:j] = block @ W
        i = j
    Y /= np.linalg.norm(Y, axis=0)
    # verify both become diagonal
    Yi = np.linalg.inv(Y)
    for Mtx in (A, B):
        D = Yi @ Mtx @ Y
        off = D - np.diag(np.diag(D))
        if np.linalg.norm(off) > 1e-8 * max(np.linalg.norm(D), 1e-300):
            return False, None, math.inf
    return True, Y, float(np.linalg.cond(Y))


def _sampled_form_min(M: np.ndarray, p: float, n_pairs: int, seed: int) -> float:
    """Sampled minimum of |z|^2 Re<w,Mw> + (p-2) Re<w,z> Re<z,Mw> on unit pairs."""
    m = M.shape[0]
    rng = np.random.default_rng(seed)

    def unit(n):
        v = rng.standard_normal((n_pairs, n)) + 1j * rng.standard_normal((n_pairs, n))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    z = unit(m)
    w = unit(m)
    Mw = w @ M.T
    term1 = np.real(np.einsum("ij,ij->i", w.conj(), Mw))
    term2 = np.real(np.einsum("ij,ij->i", w.conj(), z)) * np.real(
        np.einsum("ij,ij->i", z.conj(), Mw)
    )
    return float(np.min(term1 + (p - 2.0) * term2))


def check_conditions(
    coeffs: SystemCoefficients, p: float, seed: int = 0
) -> ConditionReport:
    """Evaluate the structural conditions A1..A11 (plus A4_p/A4_q, A5_p/A5_q).

    The pass/fail authority for the Lp-dissipativity conditions A4 is the
    antieigenvalue test A5; the sampled minimum of the quadratic form is
    reported alongside as a lower-confidence estimate of gamma_A / delta_A.
    """
    if not (1.0 < p < math.inf):
        raise CoefficientError("p must lie in (1, inf)")
    q = p / (p - 1.0)
    A, S, Dfinf = coeffs.A, coeffs.S, coeffs.Dfinf
    report = ConditionReport(p=p, q=q)

    def add(name, passed, witness=None, estimate=None, note=None):
        report.entries[name] = ConditionEntry(
            name,
            bool(passed),
            None if witness is None else float(witness),
            None if estimate is None else float(estimate),
            note,
        )

    # A1: A diagonalizable
    _, VA = np.linalg.eig(A)
    condA = float(np.linalg.cond(VA))
    add("A1", condA < _DIAG_COND_LIMIT, witness=condA)

    # A2: Re sigma(A) > 0
    min_re_A = float(np.min(np.linalg.eigvals(A).real))
    add("A2", min_re_A > 0.0, witness=min_re_A)

    # A3: strict accretivity of A
    beta_A = float(np.min(np.linalg.eigvalsh((A + A.conj().T) / 2.0)))
    add("A3", beta_A > 0.0, witness=beta_A)

    # A5_p / A5_q: antieigenvalue tests gating A4_p / A4_q
    threshold = abs(p - 2.0) / p
    mu1_A = first_antieigenvalue(A, seed=seed)
    mu1_AH = first_antieigenvalue(A.conj().T, seed=seed)
    add("A5_p", mu1_A > threshold, witness=mu1_A, estimate=threshold)
    add("A5_q", mu1_AH > abs(q - 2.0) / q, witness=mu1_AH, estimate=abs(q - 2.0) / q)

    gamma_est = _sampled_form_min(A, p, _SAMPLE_PAIRS, seed)
    delta_est = _sampled_form_min(A.conj().T, q, _SAMPLE_PAIRS, seed + 1)
    add("A4_p", report["A5_p"].passed, witness=mu1_A, estimate=gamma_est,
        note="decided via A5_p; estimate is the sampled form minimum (gamma_A)")
    add("A4_q", report["A5_q"].passed, witness=mu1_AH, estimate=delta_est,
        note="decided via A5_q; estimate is the sampled form minimum (delta_A)")

    # A6: exact skew-symmetry of S
    skew_defect = float(np.max(np.abs(S + S.T)))
    add("A6", skew_defect == 0.0, witness=skew_defect)

    # A7 / A8 concern the nonlinearity itself and are not decidable from the
    # matrices; the model layer supplies smooth f with f(v_inf) = 0.
    add("A7", True, note="external: smoothness of f assumed (model layer)")
    add("A8", True, note="external: f(v_inf) = 0 assumed (model layer)")

    # A9: A and Dfinf simultaneously diagonalizable
    ok, _, kappa = simultaneous_diagonalization(A, Dfinf)
    add("A9", ok, witness=(kappa if math.isfinite(kappa) else None))

    # A10: Re sigma(Dfinf) < 0
    max_re_inf = float(np.max(np.linalg.eigvals(Dfinf).real))
    add("A10", max_re_inf < 0.0, witness=max_re_inf)

    # A11: coercivity of -Dfinf
    beta_inf = float(-np.max(np.linalg.eigvalsh((Dfinf + Dfinf.conj().T) / 2.0)))
    add("A11", beta_inf > 0.0, witness=beta_inf)

    return report
