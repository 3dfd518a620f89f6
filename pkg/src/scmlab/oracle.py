"""Independent brute-force validators for the analytic kernels.

The estimators here deliberately avoid the closed forms they are meant to
check: pair averages are reproduced by dense quadrature, the generalization
error by direct Gaussian sampling of the joint local potentials, and the
low-order response expansions by least squares on simulated data.  Agreement
is therefore evidence, not tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss

from .activations import ERF_SIGMOID, RELU, Activation, PairCovariance, get_activation, pair_average
from .free_energy import entropy_full, entropy_site, grad_beta_f, hessian_site
from .gen_error import eps_g_general, eps_g_site
from .order_params import FullOverlapMatrix, InvalidStateError, SiteSymmetricState, embed, validate

__all__ = [
    "OracleEstimate",
    "ConditionalResponse",
    "NegativeAlignmentCheck",
    "mc_eps_g",
    "quad_pair_average",
    "conditional_response",
    "negative_alignment_identity_check",
    "fd_gradient",
    "fd_hessian",
    "random_full_state",
    "VERIFY_SCOPES",
    "run_verification",
]

_PSD_TOL = 1e-10
SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class OracleEstimate:
    """Sample mean of an estimator together with its standard error."""

    mean: float
    std_error: float
    samples: int

    def agrees(self, value: float, n_se: float = 3.0, extra: float = 0.0) -> bool:
        """True when value lies within n_se standard errors plus a fixed band."""
        return abs(self.mean - value) <= n_se * self.std_error + extra


class _RunningMoments:
    """Streaming mean and second moment with stable chunk merging."""

    __slots__ = ("count", "mean", "_m2")

    def __init__(self) -> None:
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def add(self, values: np.ndarray) -> None:
        n = int(values.size)
        if n == 0:
            return
        bmean = float(values.mean())
        bm2 = float(((values - bmean) ** 2).sum())
        total = self.count + n
        delta = bmean - self.mean
        self.mean += delta * n / total
        self._m2 += bm2 + delta * delta * self.count * n / total
        self.count = total

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self._m2 / (self.count - 1) / self.count)

    def estimate(self) -> OracleEstimate:
        return OracleEstimate(mean=self.mean, std_error=self.std_error, samples=self.count)


def _gaussian_factor(cov: np.ndarray) -> np.ndarray:
    """Factor F with F F^T = cov, valid for singular PSD matrices."""
    evals, evecs = np.linalg.eigh(cov)
    floor = -_PSD_TOL * max(1.0, float(evals[-1]))
    if evals[0] < floor:
        raise InvalidStateError(
            "correlation matrix is not positive semidefinite "
            f"(min eigenvalue {evals[0]:.3e})"
        )
    return evecs * np.sqrt(np.clip(evals, 0.0, None))


def mc_eps_g(
    activation: Activation | str,
    m: FullOverlapMatrix,
    samples: int = 10**6,
    seed: int = 0,
    chunk: int = 1 << 19,
) -> OracleEstimate:
    """Estimate the generalization error by sampling joint local potentials.

    Draws (teacher, student) potential vectors from the centered Gaussian
    with the state's correlation matrix and averages half the squared output
    difference.  The sampling dimension is K+M, never the input dimension,
    so the estimate is exact in distribution and fast.
    """
    act = get_activation(activation)
    ok, msg = validate(m)
    if not ok:
        raise InvalidStateError(msg)
    factor = _gaussian_factor(m.correlation_matrix())
    kdim, mdim = m.K, m.M
    scale_t = 1.0 / math.sqrt(mdim)
    scale_s = 1.0 / math.sqrt(kdim)
    rng = np.random.default_rng(seed)
    acc = _RunningMoments()
    while acc.count < samples:
        n = min(chunk, samples - acc.count)
        z = rng.standard_normal((n, mdim + kdim)) @ factor.T
        g = act.eval(z)
        diff = scale_s * g[:, mdim:].sum(axis=1) - scale_t * g[:, :mdim].sum(axis=1)
        acc.add(0.5 * diff**2)
    return acc.estimate()


def _gauss_hermite(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermegauss(nodes)
    return x, w / SQRT_2PI


def _quad_mean(act: Activation, variance: float, nodes: int) -> float:
    u, w = _gauss_hermite(nodes)
    return float(w @ act.eval(math.sqrt(variance) * u))


def _quad_tensor(act: Activation, c11: float, c22: float, c12: float, nodes: int) -> float:
    l11 = math.sqrt(c11)
    l21 = c12 / l11
    l22 = math.sqrt(c22 - l21 * l21)
    u, w = _gauss_hermite(nodes)
    gx = act.eval(l11 * u)
    gy = act.eval(l21 * u[:, None] + l22 * u[None, :])
    return float(w @ (gx[:, None] * gy) @ w)


def _quad_relu_wedge(c11: float, c22: float, c12: float, nodes: int) -> float:
    # polar integration over the wedge where both rectified factors are
    # positive; the angular integrand is smooth there, unlike the kinked
    # integrand a tensor rule sees
    l11 = math.sqrt(c11)
    l21 = c12 / l11
    l22 = math.sqrt(max(c22 - l21 * l21, 0.0))
    lo = math.atan2(l22, l21) - 0.5 * math.pi
    hi = 0.5 * math.pi
    if hi <= lo:
        return 0.0
    t, wt = leggauss(nodes)
    theta = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    q = l11 * np.cos(theta) * (l21 * np.cos(theta) + l22 * np.sin(theta))
    # the radial factor integrates to 2, and the angular normalization is 1/(2*pi)
    return float((hi - lo) * 0.5 * (wt @ q) / math.pi)


def quad_pair_average(activation: Activation | str, cov: PairCovariance, nodes: int = 96) -> float:
    """Dense quadrature for E[g(x) g(y)] under a centered bivariate Gaussian.

    The smooth activation uses a tensor Gauss-Hermite rule after a Cholesky
    whitening.  The rectifier is integrated in polar coordinates over the
    wedge where the product is nonzero, restoring spectral accuracy that the
    kink would otherwise destroy.  Degenerate covariances (zero variance or
    perfect correlation) reduce to one-dimensional rules.
    """
    act = get_activation(activation)
    c11, c22, c12 = cov.c11, cov.c22, cov.c12
    if c11 <= 0.0 or c22 <= 0.0:
        g0 = float(act.eval(0.0))
        if c11 <= 0.0 and c22 <= 0.0:
            return g0 * g0
        return g0 * _quad_mean(act, c22 if c11 <= 0.0 else c11, nodes)
    rho = c12 / math.sqrt(c11 * c22)
    if abs(rho) >= 1.0 - 1e-12:
        slope = math.copysign(math.sqrt(c22 / c11), rho)
        u, w = _gauss_hermite(nodes)
        x = math.sqrt(c11) * u
        return float(w @ (act.eval(x) * act.eval(slope * x)))
    if act.name == "relu":
        return _quad_relu_wedge(c11, c22, c12, nodes)
    return _quad_tensor(act, c11, c22, c12, nodes)


@dataclass(frozen=True)
class ConditionalResponse:
    """Least-squares line fitted to a rectified response against a correlated potential."""

    intercept: float
    slope: float
    intercept_se: float
    slope_se: float
    samples: int


def conditional_response(s: float, samples: int = 10**6, seed: int = 0) -> ConditionalResponse:
    """Fit the conditional mean response of a weakly aligned rectifier unit.

    Samples pairs (x, x*) of unit-variance Gaussians with covariance s,
    regresses max(0, x) on x*, and returns the fitted line with standard
    errors.  For small s the line estimates intercept 1/sqrt(2*pi) and
    slope s/2.
    """
    if abs(s) > 0.2:
        raise ValueError("overlap outside the expansion regime (|s| <= 0.2)")
    rng = np.random.default_rng(seed)
    xstar = rng.standard_normal(samples)
    x = s * xstar + math.sqrt(1.0 - s * s) * rng.standard_normal(samples)
    y = np.maximum(x, 0.0)
    xbar = float(xstar.mean())
    xc = xstar - xbar
    sxx = float(xc @ xc)
    slope = float(xc @ y) / sxx
    intercept = float(y.mean()) - slope * xbar
    resid = y - intercept - slope * xstar
    s2 = float(resid @ resid) / (samples - 2)
    return ConditionalResponse(
        intercept=intercept,
        slope=slope,
        intercept_se=math.sqrt(s2 * (1.0 / samples + xbar * xbar / sxx)),
        slope_se=math.sqrt(s2 / sxx),
        samples=samples,
    )


@dataclass(frozen=True)
class NegativeAlignmentCheck:
    """Result of the anti-aligned response identity check.

    pointwise_max_deviation covers the exact rectifier identity
    max(0, x) - max(0, -x) - x = 0.  The statistical fields compare the
    sampled mean total response of one anti-aligned unit plus K-1 weakly
    aligned ones against max(0, x*) + (K-1)/sqrt(2*pi); they are None when
    the compensating overlap 2/(K-1) is not a valid correlation (K < 4).
    """

    K: int
    compensating_overlap: float
    samples: int
    pointwise_max_deviation: float
    mean_deviation: Optional[float]
    std_error: Optional[float]


def negative_alignment_identity_check(
    samples: int = 10**6, K: int = 11, seed: int = 0
) -> NegativeAlignmentCheck:
    """Check that anti-alignment plus weak compensation mimics perfect alignment.

    One unit carries overlap -1 with its potential, so its response is
    max(0, -x*) = max(0, x*) - x* exactly; the other K-1 units carry
    overlap 2/(K-1) each and contribute 1/sqrt(2*pi) + x*/(K-1) in
    conditional mean to leading order.  The sampled total is compared to
    the perfectly aligned prediction max(0, x*) + (K-1)/sqrt(2*pi).
    """
    if K < 2:
        raise ValueError("need at least two units")
    if samples < 2:
        raise ValueError("need at least two samples")
    s = 2.0 / (K - 1)
    rng = np.random.default_rng(seed)
    pointwise = 0.0
    acc = _RunningMoments()
    root = math.sqrt(1.0 - s * s) if s < 1.0 else 0.0
    offset = (K - 1) / SQRT_2PI
    chunk = max(1, (1 << 22) // max(K, 2))
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        xs = rng.standard_normal(n)
        dev = np.maximum(xs, 0.0) - np.maximum(-xs, 0.0) - xs
        pointwise = max(pointwise, float(np.abs(dev).max()))
        if s < 1.0:
            others = s * xs[:, None] + root * rng.standard_normal((n, K - 1))
            total = np.maximum(-xs, 0.0) + np.maximum(others, 0.0).sum(axis=1)
            acc.add(total - np.maximum(xs, 0.0) - offset)
        done += n
    if s < 1.0:
        return NegativeAlignmentCheck(
            K=K,
            compensating_overlap=s,
            samples=samples,
            pointwise_max_deviation=pointwise,
            mean_deviation=abs(acc.mean),
            std_error=acc.std_error,
        )
    return NegativeAlignmentCheck(
        K=K,
        compensating_overlap=s,
        samples=samples,
        pointwise_max_deviation=pointwise,
        mean_deviation=None,
        std_error=None,
    )


def _shifted(x: np.ndarray, *moves: tuple[int, float]) -> np.ndarray:
    out = x.copy()
    for idx, delta in moves:
        out[idx] += delta
    return out


def fd_gradient(func: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.empty(x.size)
    for i in range(x.size):
        grad[i] = (func(_shifted(x, (i, step))) - func(_shifted(x, (i, -step)))) / (2.0 * step)
    return grad


def fd_hessian(func: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    n = x.size
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i + 1):
            fpp = func(_shifted(x, (i, step), (j, step)))
            fpm = func(_shifted(x, (i, step), (j, -step)))
            fmp = func(_shifted(x, (i, -step), (j, step)))
            fmm = func(_shifted(x, (i, -step), (j, -step)))
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * step * step)
    return hess


def random_full_state(rng: np.random.Generator, kdim: int, mdim: int, ambient_extra: int = 3) -> FullOverlapMatrix:
    """Random valid overlap state built from explicit unit-norm weight vectors.

    Construction guarantees positive semidefiniteness, unit student norms,
    and an orthonormal teacher, so every draw passes validation.
    """
    n = kdim + mdim + ambient_extra
    teacher = np.linalg.qr(rng.standard_normal((n, mdim)))[0].T
    w = rng.standard_normal((kdim, n))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return FullOverlapMatrix(Q=w @ w.T, R=w @ teacher.T, T=teacher @ teacher.T)


def random_site_state(rng: np.random.Generator, K: int, margin: float = 0.05) -> SiteSymmetricState:
    """Random site-symmetric state kept safely inside the log-det domain."""
    while True:
        r = float(rng.uniform(-0.9, 0.9))
        s = float(rng.uniform(-0.9, 0.9)) if K > 1 else 0.0
        c = float(rng.uniform(-0.9, 0.9)) if K > 1 else 0.0
        try:
            state = SiteSymmetricState(K=K, R=r, S=s, C=c)
        except InvalidStateError:
            continue
        d = r + (K - 1) * s
        a = 1.0 + (K - 1) * c - d * d
        b = 1.0 - c - (r - s) ** 2
        if K == 1:
            b = 1.0
        if a > margin and b > margin:
            return state


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _verify_activations(seed: int, samples: int) -> list[dict]:
    checks = []
    for name in ("erf", "relu"):
        act = get_activation(name)
        worst = 0.0
        for c11 in (0.25, 1.0, 4.0):
            for c22 in (0.25, 1.0, 4.0):
                for rho in (-0.99, -0.5, 0.0, 0.5, 0.99):
                    cov = PairCovariance(c11=c11, c22=c22, c12=rho * math.sqrt(c11 * c22))
                    dev = abs(quad_pair_average(act, cov) - pair_average(act, cov))
                    worst = max(worst, dev)
        checks.append(_check(f"quad-pair-average-{name}", worst < 1e-8, f"max deviation {worst:.3e}"))
    dev0 = abs(quad_pair_average(RELU, PairCovariance(0.0, 1.0, 0.0)))
    dev1 = abs(quad_pair_average(ERF_SIGMOID, PairCovariance(0.0, 1.0, 0.0)) - 1.0)
    checks.append(_check("quad-zero-variance", dev0 < 1e-12 and dev1 < 1e-12,
                         f"relu {dev0:.3e}, erf {dev1:.3e}"))
    dev2 = abs(quad_pair_average(RELU, PairCovariance(1.0, 1.0, 1.0)) - 0.5)
    checks.append(_check("quad-perfect-correlation", dev2 < 1e-10, f"deviation {dev2:.3e}"))
    return checks


def _verify_gen_error(seed: int, samples: int) -> list[dict]:
    checks = []
    rng = np.random.default_rng(seed)
    for name in ("erf", "relu"):
        act = get_activation(name)
        worst = 0.0
        all_ok = True
        for kdim, mdim in ((2, 2), (4, 4), (3, 5)):
            for _ in range(2):
                m = random_full_state(rng, kdim, mdim)
                closed = eps_g_general(act, m)
                est = mc_eps_g(act, m, samples=samples, seed=int(rng.integers(2**31)))
                pull = abs(est.mean - closed) / max(est.std_error, 1e-300)
                worst = max(worst, pull)
                all_ok = all_ok and est.agrees(closed)
        checks.append(_check(f"sampled-eps-g-{name}", all_ok, f"worst pull {worst:.2f} se"))
    m0 = embed(SiteSymmetricState(K=3, R=1.0, S=0.0, C=0.0))
    est0 = mc_eps_g("relu", m0, samples=10_000, seed=seed)
    checks.append(_check("sampled-eps-g-perfect-alignment",
                         abs(est0.mean) < 1e-16 and est0.std_error < 1e-16,
                         f"mean {est0.mean:.3e}"))
    return checks


def _verify_free_energy(seed: int, samples: int) -> list[dict]:
    checks = []
    rng = np.random.default_rng(seed)
    worst_g = 0.0
    worst_h = 0.0
    worst_s = 0.0
    worst_e = 0.0
    for K in (2, 3, 5, 10):
        for name in ("erf", "relu"):
            act = get_activation(name)
            for _ in range(3):
                state = random_site_state(rng, K)
                alpha = float(rng.uniform(0.5, 40.0))

                def f(x: np.ndarray) -> float:
                    from .free_energy import beta_f_value

                    return beta_f_value(act, SiteSymmetricState(K=K, R=x[0], S=x[1], C=x[2]), alpha)

                x0 = np.array([state.R, state.S, state.C])
                g = grad_beta_f(act, state, alpha)
                gfd = fd_gradient(f, x0)
                worst_g = max(worst_g, float(np.linalg.norm(g - gfd)) / max(1.0, float(np.linalg.norm(g))))
                h = hessian_site(act, state, alpha)
                hfd = fd_hessian(f, x0)
                worst_h = max(worst_h, float(np.abs(h - hfd).max()) / max(1.0, float(np.abs(h).max())))
                worst_s = max(worst_s, abs(entropy_site(state) - entropy_full(embed(state))))
                worst_e = max(worst_e, abs(eps_g_site(act, state) - eps_g_general(act, embed(state))))
    checks.append(_check("fd-gradient", worst_g < 1e-6, f"worst relative error {worst_g:.3e}"))
    checks.append(_check("fd-hessian", worst_h < 1e-4, f"worst relative error {worst_h:.3e}"))
    checks.append(_check("entropy-site-vs-full", worst_s < 1e-10, f"worst deviation {worst_s:.3e}"))
    checks.append(_check("eps-g-site-vs-general", worst_e < 1e-12, f"worst deviation {worst_e:.3e}"))
    return checks


def _verify_alignment(seed: int, samples: int) -> list[dict]:
    checks = []
    base = negative_alignment_identity_check(samples=samples, K=11, seed=seed)
    checks.append(_check("pointwise-rectifier-identity", base.pointwise_max_deviation == 0.0,
                         f"max deviation {base.pointwise_max_deviation:.3e}"))
    r0 = conditional_response(0.0, samples=samples, seed=seed)
    ok0 = (abs(r0.intercept - 1.0 / SQRT_2PI) <= 3.0 * r0.intercept_se
           and abs(r0.slope) <= 3.0 * r0.slope_se)
    checks.append(_check("conditional-response-orthogonal", ok0,
                         f"intercept {r0.intercept:.5f}, slope {r0.slope:.2e}"))
    ok_slope = True
    for s in (0.1, -0.1):
        r = conditional_response(s, samples=samples, seed=seed + 1)
        ok_slope = ok_slope and abs(r.slope - s / 2.0) <= 3.0 * r.slope_se + 0.01
    checks.append(_check("conditional-response-slope", ok_slope, "slope within band at s = +/-0.1"))
    for K, band in ((11, 0.04), (101, 4e-4)):
        res = negative_alignment_identity_check(samples=samples, K=K, seed=seed + K)
        ok = res.mean_deviation is not None and res.mean_deviation <= band + 3.0 * res.std_error
        checks.append(_check(f"negative-alignment-K{K}", ok,
                             f"mean deviation {res.mean_deviation:.2e} vs band {band:g} + 3se"))
    return checks


VERIFY_SCOPES = ("activations", "gen-error", "free-energy", "alignment")

_VERIFIERS = {
    "activations": _verify_activations,
    "gen-error": _verify_gen_error,
    "free-energy": _verify_free_energy,
    "alignment": _verify_alignment,
}


def run_verification(scope: str = "all", seed: int = 0, samples: int = 200_000) -> dict:
    """Run the oracle suite and return a JSON-ready report.

    scope selects one named check group or "all".  Every check entry carries
    a name, a boolean, and a one-line detail string; the report's "passed"
    field is the conjunction.
    """
    if scope == "all":
        scopes = VERIFY_SCOPES
    elif scope in _VERIFIERS:
        scopes = (scope,)
    else:
        raise ValueError(f"unknown scope {scope!r}; expected one of {('all',) + VERIFY_SCOPES}")
    checks: list[dict] = []
    for name in scopes:
        checks.extend(_VERIFIERS[name](seed, samples))
    failed = sum(1 for c in checks if not c["passed"])
    return {
        "scope": scope,
        "passed": failed == 0,
        "counts": {"total": len(checks), "failed": failed},
        "checks": checks,
    }
