"""High-temperature equilibrium free energy of the committee student.

The scaled free energy per site is

    beta*f = alpha * K * eps_g(state) - s(state)

where alpha is the scaled load (examples per weight times inverse
temperature) and s is the log-volume entropy of weight configurations
with the given overlaps.  In site-symmetric coordinates the entropy is

    s = (1/2) ln A + ((K-1)/2) ln B,
    A = 1 + (K-1) C - D^2,   D = R + (K-1) S,
    B = 1 - C - (R - S)^2,

whose domain A > 0 and B > 0 is exactly positive definiteness of the
joint correlation matrix.  All derivatives used by the equilibrium
solvers are analytic; finite differences appear only in the oracle
cross-checks and in the full (non-symmetric) stability spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activations import get_activation
from .gen_error import eps_g_general, eps_g_site, eps_g_site_grad, eps_g_site_hess
from .order_params import FullOverlapMatrix, SiteSymmetricState, embed

__all__ = [
    "EntropyDomainError",
    "FreeEnergyPoint",
    "entropy_site",
    "entropy_site_grad",
    "entropy_site_hess",
    "entropy_full",
    "beta_f",
    "beta_f_value",
    "grad_beta_f",
    "hessian_site",
    "full_stability_spectrum",
]


class EntropyDomainError(ValueError):
    """Raised when overlaps leave the domain where the entropy is finite."""


def _site_factors(state: SiteSymmetricState) -> tuple[float, float, float]:
    """Return (A, B, D); raises if the state is on or past the domain boundary."""
    K, R, S, C = state.K, state.R, state.S, state.C
    if K == 1:
        A = 1.0 - R * R
        if A <= 0.0:
            raise EntropyDomainError(f"1 - R^2 = {A} not positive (R={R})")
        return A, 1.0, R
    D = R + (K - 1) * S
    A = 1.0 + (K - 1) * C - D * D
    B = 1.0 - C - (R - S) ** 2
    if A <= 0.0 or B <= 0.0:
        raise EntropyDomainError(
            f"entropy factors must be positive, got A={A:.6g}, B={B:.6g} "
            f"at (K={K}, R={R}, S={S}, C={C})"
        )
    return A, B, D


def entropy_site(state: SiteSymmetricState) -> float:
    """Entropy of a site-symmetric state; domain error on or outside the boundary."""
    A, B, _ = _site_factors(state)
    if state.K == 1:
        return 0.5 * math.log(A)
    return 0.5 * math.log(A) + ((state.K - 1) / 2.0) * math.log(B)


def entropy_site_grad(state: SiteSymmetricState) -> np.ndarray:
    """Analytic gradient of entropy_site in (R, S, C)."""
    A, B, D = _site_factors(state)
    K, R, S = state.K, state.R, state.S
    if K == 1:
        return np.array([-R / A, 0.0, 0.0])
    dR = -D / A - (K - 1) * (R - S) / B
    dS = -(K - 1) * D / A + (K - 1) * (R - S) / B
    dC = (K - 1) / (2.0 * A) - (K - 1) / (2.0 * B)
    return np.array([dR, dS, dC])


def entropy_site_hess(state: SiteSymmetricState) -> np.ndarray:
    """Analytic Hessian of entropy_site in (R, S, C) (K >= 2)."""
    A, B, D = _site_factors(state)
    K, R, S = state.K, state.R, state.S
    if K == 1:
        raise ValueError("site Hessian is defined for K >= 2")
    Km1 = K - 1
    # first and second partials of the factors A and B
    dA = np.array([-2.0 * D, -2.0 * Km1 * D, Km1])
    dB = np.array([-2.0 * (R - S), 2.0 * (R - S), -1.0])
    ddA = np.array([[-2.0, -2.0 * Km1, 0.0],
                    [-2.0 * Km1, -2.0 * Km1 * Km1, 0.0],
                    [0.0, 0.0, 0.0]])
    ddB = np.array([[-2.0, 2.0, 0.0],
                    [2.0, -2.0, 0.0],
                    [0.0, 0.0, 0.0]])
    H = 0.5 * (ddA / A - np.outer(dA, dA) / (A * A))
    H += (Km1 / 2.0) * (ddB / B - np.outer(dB, dB) / (B * B))
    return H


def entropy_full(m: FullOverlapMatrix) -> float:
    """Entropy from explicit overlaps: half log-determinant of the joint correlation.

    Uses a Cholesky factorization for stability; failure to factorize means
    the matrix is outside the domain.
    """
    corr = m.correlation_matrix()
    try:
        L = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as exc:
        raise EntropyDomainError(f"joint correlation matrix not positive definite: {exc}")
    return float(np.sum(np.log(np.diag(L))))


@dataclass(frozen=True)
class FreeEnergyPoint:
    """A state evaluated at a load: beta*f together with its two ingredients."""

    state: SiteSymmetricState
    alpha: float
    beta_f: float
    eps_g: float
    entropy: float


def beta_f_value(activation, state: SiteSymmetricState, alpha: float) -> float:
    """Scalar beta*f = alpha*K*eps_g - entropy."""
    return alpha * state.K * eps_g_site(activation, state) - entropy_site(state)


def beta_f(activation, state: SiteSymmetricState, alpha: float) -> FreeEnergyPoint:
    """Evaluate the free energy and its decomposition at one (state, alpha)."""
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    eps = eps_g_site(activation, state)
    s = entropy_site(state)
    return FreeEnergyPoint(state=state, alpha=alpha, beta_f=alpha * state.K * eps - s,
                           eps_g=eps, entropy=s)


def grad_beta_f(activation, state: SiteSymmetricState, alpha: float) -> np.ndarray:
    """Analytic gradient of beta*f in (R, S, C); S and C components are 0 for K=1."""
    a = get_activation(activation)
    return alpha * state.K * eps_g_site_grad(a, state) - entropy_site_grad(state)


def hessian_site(activation, state: SiteSymmetricState, alpha: float) -> np.ndarray:
    """Analytic 3x3 Hessian of beta*f in (R, S, C) for K >= 2."""
    a = get_activation(activation)
    return alpha * state.K * eps_g_site_hess(a, state) - entropy_site_hess(state)


def _unpack_full(K: int, x: np.ndarray) -> FullOverlapMatrix:
    R = x[: K * K].reshape(K, K)
    Q = np.eye(K)
    iu = np.triu_indices(K, k=1)
    Q[iu] = x[K * K:]
    Q[(iu[1], iu[0])] = x[K * K:]
    return FullOverlapMatrix(Q=Q, R=R, T=np.eye(K))


def full_stability_spectrum(activation, state: SiteSymmetricState, alpha: float,
                            step: float = 1e-5) -> float:
    """Smallest eigenvalue of the beta*f Hessian over all overlap directions.

    The site-symmetric ansatz constrains the K x K student-teacher matrix
    and the student-student matrix; here beta*f is treated as a function of
    all K^2 + K(K-1)/2 independent entries (unit self-overlaps stay fixed)
    and the Hessian is taken by central finite differences at the embedded
    state.  A nonnegative return value (up to FD noise) certifies stability
    against all symmetry-breaking perturbations.
    """
    a = get_activation(activation)
    K = state.K
    m0 = embed(state)
    iu = np.triu_indices(K, k=1)
    x0 = np.concatenate([m0.R.ravel(), np.asarray(m0.Q[iu]).ravel()])
    n = x0.size

    def F(x: np.ndarray) -> float:
        m = _unpack_full(K, x)
        return alpha * K * eps_g_general(a, m, check=False) - entropy_full(m)

    h = step
    H = np.empty((n, n))
    f0 = F(x0)
    fp = np.empty(n)
    fm = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fp[i] = F(x0 + e)
        fm[i] = F(x0 - e)
        H[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / (h * h)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            val = (F(x0 + ei + ej) - F(x0 + ei - ej)
                   - F(x0 - ei + ej) + F(x0 - ei - ej)) / (4.0 * h * h)
            H[i, j] = val
            H[j, i] = val
    return float(np.linalg.eigvalsh(H).min())
