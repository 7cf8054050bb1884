"""Cubic-quintic complex Ginzburg-Landau model.

Scalar complex equation u_t = alpha * lap(u) + u (delta + beta |u|^2 +
gamma |u|^4), plus the equivalent real 2-component formulation used by the
discretization and the linearized operators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import SystemCoefficients


@dataclass(frozen=True)
class QcglParams:
    """Complex coefficients of the cubic-quintic nonlinearity.

    Defaults are the spinning-soliton parameter set
    alpha = (1+i)/2, beta = 5/2 + i, gamma = -1 - i/10, delta = -1/2.
    delta is stored as complex because the real formulation carries its
    imaginary part explicitly.
    """

    alpha: complex = 0.5 + 0.5j
    beta: complex = 2.5 + 1.0j
    gamma: complex = -1.0 - 0.1j
    delta: complex = -0.5 + 0.0j

    def __post_init__(self):
        if self.alpha.real <= 0.0:
            raise ValueError("Re(alpha) must be positive")
        if self.delta.real >= 0.0:
            raise ValueError("Re(delta) must be negative")


def f_complex(u, p: QcglParams):
    """f(u) = u (delta + beta |u|^2 + gamma |u|^4)."""
    u = np.asarray(u, dtype=complex)
    a2 = np.abs(u) ** 2
    return u * (p.delta + p.beta * a2 + p.gamma * a2**2)


def f_real(u, p: QcglParams):
    """Real 2-component version of f; u has shape (..., 2)."""
    u = np.asarray(u, dtype=float)
    u1, u2 = u[..., 0], u[..., 1]
    w = u1**2 + u2**2
    b1, b2 = p.beta.real, p.beta.imag
    g1, g2 = p.gamma.real, p.gamma.imag
    d1, d2 = p.delta.real, p.delta.imag
    f1 = (u1 * d1 - u2 * d2) + (u1 * b1 - u2 * b2) * w + (u1 * g1 - u2 * g2) * w**2
    f2 = (u1 * d2 + u2 * d1) + (u1 * b2 + u2 * b1) * w + (u1 * g2 + u2 * g1) * w**2
    return np.stack([f1, f2], axis=-1)


def jacobian_Df(u, p: QcglParams):
    """Jacobian of f_real in the real sense; u of shape (..., 2) -> (..., 2, 2)."""
    u = np.asarray(u, dtype=float)
    u1, u2 = u[..., 0], u[..., 1]
    w = u1**2 + u2**2
    b1, b2 = p.beta.real, p.beta.imag
    g1, g2 = p.gamma.real, p.gamma.imag
    d1, d2 = p.delta.real, p.delta.imag

    c1 = u1 * b1 - u2 * b2      # cubic row-1 coefficient
    c2 = u1 * b2 + u2 * b1
    q1 = u1 * g1 - u2 * g2      # quintic row-1 coefficient
    q2 = u1 * g2 + u2 * g1

    J = np.empty(u.shape[:-1] + (2, 2))
    J[..., 0, 0] = d1 + b1 * w + 2.0 * u1 * c1 + g1 * w**2 + 4.0 * u1 * w * q1
    J[..., 0, 1] = -d2 - b2 * w + 2.0 * u2 * c1 - g2 * w**2 + 4.0 * u2 * w * q1
    J[..., 1, 0] = d2 + b2 * w + 2.0 * u1 * c2 + g2 * w**2 + 4.0 * u1 * w * q2
    J[..., 1, 1] = d1 + b1 * w + 2.0 * u2 * c2 + g1 * w**2 + 4.0 * u2 * w * q2
    return J


def diffusion_matrix(p: QcglParams) -> np.ndarray:
    """Real 2x2 diffusion matrix [[a1, -a2], [a2, a1]] for alpha = a1 + i a2."""
    a1, a2 = p.alpha.real, p.alpha.imag
    return np.array([[a1, -a2], [a2, a1]])


def limit_jacobian(p: QcglParams) -> np.ndarray:
    """Df at the far-field state v_inf = 0: [[d1, -d2], [d2, d1]]."""
    d1, d2 = p.delta.real, p.delta.imag
    return np.array([[d1, -d2], [d2, d1]])


def system_coefficients(p: QcglParams, d: int, S: np.ndarray | None = None) -> SystemCoefficients:
    """Bundle the QCGL matrices into SystemCoefficients (S defaults to zero)."""
    if S is None:
        S = np.zeros((d, d))
    return SystemCoefficients(A=diffusion_matrix(p), S=np.asarray(S, dtype=float),
                              Dfinf=limit_jacobian(p), d=d, m=2)
