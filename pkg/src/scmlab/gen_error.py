"""Generalization error of a committee student against a committee teacher.

The error is eps_g = (1/2) E[(sigma - tau)^2] over a fresh Gaussian input,
where sigma and tau are the student and teacher outputs with 1/sqrt(K) and
1/sqrt(M) scalings.  Because both outputs are sums of unit responses, the
average reduces to sums of pair kernels (see :mod:`scmlab.activations`)
evaluated at entries of the overlap matrices.  When K = M this equals the
familiar (1/2K) * (sum of student-student kernels - 2 * cross kernels +
teacher-teacher kernels).

Three entry points, by increasing structure:

* :func:`eps_g_general` -- any admissible :class:`FullOverlapMatrix`.
* :func:`eps_g_site` -- closed form on a :class:`SiteSymmetricState`.
* :func:`eps_g_single` -- K = M = 1, a function of the single overlap R.
"""

from __future__ import annotations

import math

import numpy as np

from .activations import Activation, get_activation
from .order_params import FullOverlapMatrix, InvalidStateError, SiteSymmetricState, validate

__all__ = [
    "eps_g_general",
    "eps_g_site",
    "eps_g_single",
    "eps_g_site_grad",
    "eps_g_site_hess",
    "relu_phi",
    "relu_phi_prime",
]

_PI = math.pi


def relu_phi(u: float) -> float:
    """ReLU pair kernel at unit variances: E[g(x)g(y)] with correlation u."""
    u = min(1.0, max(-1.0, u))
    return u / 4.0 + (math.sqrt(max(1.0 - u * u, 0.0)) + u * math.asin(u)) / (2.0 * _PI)


def relu_phi_prime(u: float) -> float:
    u = min(1.0, max(-1.0, u))
    return 0.25 + math.asin(u) / (2.0 * _PI)


def _relu_phi_second(u: float) -> float:
    return 1.0 / (2.0 * _PI * math.sqrt(max(1.0 - u * u, 1e-300)))


def eps_g_single(activation, R: float) -> float:
    """Generalization error of a single unit with teacher overlap R in [-1, 1]."""
    if not -1.0 <= R <= 1.0:
        raise InvalidStateError(f"R={R} outside [-1, 1]")
    a = get_activation(activation)
    if a.name == "erf":
        return 1.0 / 3.0 - (2.0 / _PI) * math.asin(R / 2.0)
    return 0.5 - relu_phi(R)


def eps_g_site(activation, state: SiteSymmetricState) -> float:
    """Closed-form error of a site-symmetric K-unit state (K=1 falls back to single)."""
    a = get_activation(activation)
    K, R, S, C = state.K, state.R, state.S, state.C
    if K == 1:
        return eps_g_single(a, R)
    if a.name == "erf":
        return (
            1.0 / 3.0
            + ((K - 1) / _PI) * (math.asin(C / 2.0) - 2.0 * math.asin(S / 2.0))
            - (2.0 / _PI) * math.asin(R / 2.0)
        )
    return (
        0.5
        + ((K - 1) / 2.0) * (relu_phi(C) + relu_phi(0.0) - 2.0 * relu_phi(S))
        - relu_phi(R)
    )


def eps_g_site_grad(activation, state: SiteSymmetricState) -> np.ndarray:
    """Gradient of eps_g_site with respect to (R, S, C); zeros in S, C for K=1."""
    a = get_activation(activation)
    K, R, S, C = state.K, state.R, state.S, state.C
    if a.name == "erf":
        dR = -(2.0 / _PI) / math.sqrt(4.0 - R * R)
        if K == 1:
            return np.array([dR, 0.0, 0.0])
        dS = -(2.0 * (K - 1) / _PI) / math.sqrt(4.0 - S * S)
        dC = ((K - 1) / _PI) / math.sqrt(4.0 - C * C)
        return np.array([dR, dS, dC])
    dR = -relu_phi_prime(R)
    if K == 1:
        return np.array([dR, 0.0, 0.0])
    dS = -(K - 1) * relu_phi_prime(S)
    dC = ((K - 1) / 2.0) * relu_phi_prime(C)
    return np.array([dR, dS, dC])


def eps_g_site_hess(activation, state: SiteSymmetricState) -> np.ndarray:
    """Hessian of eps_g_site in (R, S, C); diagonal because the form is separable."""
    a = get_activation(activation)
    K, R, S, C = state.K, state.R, state.S, state.C
    if a.name == "erf":
        dRR = -(2.0 / _PI) * R * (4.0 - R * R) ** -1.5
        dSS = 0.0 if K == 1 else -(2.0 * (K - 1) / _PI) * S * (4.0 - S * S) ** -1.5
        dCC = 0.0 if K == 1 else ((K - 1) / _PI) * C * (4.0 - C * C) ** -1.5
    else:
        dRR = -_relu_phi_second(R)
        dSS = 0.0 if K == 1 else -(K - 1) * _relu_phi_second(S)
        dCC = 0.0 if K == 1 else ((K - 1) / 2.0) * _relu_phi_second(C)
    return np.diag([dRR, dSS, dCC])


def eps_g_general(activation, m: FullOverlapMatrix, check: bool = True) -> float:
    """Generalization error from explicit overlap matrices.

    With ``check`` (the default) the matrix is validated first and an
    :class:`InvalidStateError` is raised for inadmissible input.  Callers
    evaluating dense finite-difference stencils around a known interior
    state may disable the check.
    """
    if check:
        ok, diag = validate(m)
        if not ok:
            raise InvalidStateError(diag)
    a: Activation = get_activation(activation)
    K, M = m.K, m.M
    qd = np.diag(m.Q)
    td = np.diag(m.T)
    ss = a.pair_average_arrays(qd[:, None], qd[None, :], m.Q).sum()
    st = a.pair_average_arrays(qd[:, None], td[None, :], m.R).sum()
    tt = a.pair_average_arrays(td[:, None], td[None, :], m.T).sum()
    return float(ss / (2.0 * K) - st / math.sqrt(K * M) + tt / (2.0 * M))
