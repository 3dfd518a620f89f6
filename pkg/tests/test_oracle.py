"""Independent numerical oracles: quadrature, sampling, finite differences."""

import math

import numpy as np
import pytest

from scmlab.activations import PairCovariance, pair_average
from scmlab.gen_error import eps_g_general
from scmlab.oracle import (
    VERIFY_SCOPES,
    OracleEstimate,
    conditional_response,
    fd_gradient,
    fd_hessian,
    mc_eps_g,
    negative_alignment_identity_check,
    quad_pair_average,
    random_full_state,
    random_site_state,
    run_verification,
)
from scmlab.order_params import (
    FullOverlapMatrix,
    InvalidStateError,
    SiteSymmetricState,
    embed,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)

# quadrature value for the rectifier at c11 = c22 = 1, c12 = 0.5,
# frozen before the closed form existed
RELU_HALF_CORR = 0.30449889052211465


def test_estimate_agreement_band():
    est = OracleEstimate(mean=1.0, std_error=0.1, samples=100)
    assert est.agrees(1.25)
    assert not est.agrees(1.35)
    assert est.agrees(1.35, extra=0.1)
    assert est.agrees(1.05, n_se=1.0)
    assert not est.agrees(1.15, n_se=1.0)


def test_fd_derivatives_on_closed_form():
    def f(x):
        return x[0] ** 2 * x[1] + math.sin(x[2])

    x = np.array([0.7, -1.2, 0.3])
    grad = np.array([2 * x[0] * x[1], x[0] ** 2, math.cos(x[2])])
    hess = np.array([
        [2 * x[1], 2 * x[0], 0.0],
        [2 * x[0], 0.0, 0.0],
        [0.0, 0.0, -math.sin(x[2])],
    ])
    assert np.abs(fd_gradient(f, x) - grad).max() < 1e-8
    assert np.abs(fd_hessian(f, x) - hess).max() < 1e-6


def test_quadrature_frozen_and_limits():
    got = quad_pair_average("relu", PairCovariance(1.0, 1.0, 0.5))
    assert abs(got - RELU_HALF_CORR) < 1e-10
    assert abs(pair_average("relu", PairCovariance(1.0, 1.0, 0.5)) - RELU_HALF_CORR) < 1e-12

    assert abs(quad_pair_average("relu", PairCovariance(1.0, 1.0, 1.0)) - 0.5) < 1e-10
    assert abs(quad_pair_average("erf", PairCovariance(1.0, 1.0, 0.0)) - 1.0) < 1e-12
    assert abs(quad_pair_average("relu", PairCovariance(0.0, 1.0, 0.0))) < 1e-12


def test_quadrature_matches_closed_form_spot():
    rng = np.random.default_rng(77)
    for act in ("erf", "relu"):
        for _ in range(6):
            c11, c22 = rng.uniform(0.2, 3.0, 2)
            rho = rng.uniform(-0.95, 0.95)
            cov = PairCovariance(c11=c11, c22=c22, c12=rho * math.sqrt(c11 * c22))
            assert abs(quad_pair_average(act, cov) - pair_average(act, cov)) < 1e-8


def test_mc_eps_g_perfect_alignment_is_exact_zero():
    m = embed(SiteSymmetricState(K=4, R=1.0, S=0.0, C=0.0))
    est = mc_eps_g("erf", m, samples=5000, seed=1)
    assert est.mean == 0.0 and est.std_error == 0.0
    assert est.samples == 5000


def test_mc_eps_g_matches_closed_form():
    rng = np.random.default_rng(3)
    for act in ("erf", "relu"):
        for kdim, mdim in ((2, 2), (3, 4)):
            m = random_full_state(rng, kdim, mdim)
            closed = eps_g_general(act, m)
            est = mc_eps_g(act, m, samples=200_000, seed=9)
            assert est.agrees(closed, n_se=4.0), (act, kdim, mdim, est, closed)


def test_mc_eps_g_deterministic():
    m = embed(SiteSymmetricState(K=2, R=0.4, S=0.1, C=0.2))
    a = mc_eps_g("relu", m, samples=50_000, seed=5)
    b = mc_eps_g("relu", m, samples=50_000, seed=5)
    c = mc_eps_g("relu", m, samples=50_000, seed=6)
    assert a == b
    assert a.mean != c.mean


def test_mc_eps_g_rejects_invalid_state():
    Q = np.eye(2)
    R = np.array([[0.9, 0.0], [0.9, 0.0]])
    m = FullOverlapMatrix(Q=Q, R=R, T=np.eye(2))
    with pytest.raises(InvalidStateError):
        mc_eps_g("relu", m, samples=100)


def test_conditional_response_regimes():
    r0 = conditional_response(0.0, samples=400_000, seed=11)
    assert abs(r0.intercept - 1.0 / SQRT_2PI) < 4.0 * r0.intercept_se
    assert abs(r0.slope) < 4.0 * r0.slope_se
    for s in (0.1, -0.1):
        r = conditional_response(s, samples=400_000, seed=12)
        assert abs(r.slope - s / 2.0) < 4.0 * r.slope_se + 0.01
    with pytest.raises(ValueError):
        conditional_response(0.3)


def test_negative_alignment_check():
    res = negative_alignment_identity_check(samples=200_000, K=11, seed=4)
    assert res.pointwise_max_deviation == 0.0
    assert res.compensating_overlap == pytest.approx(0.2)
    assert res.mean_deviation is not None
    assert res.mean_deviation <= 0.04 + 3.0 * res.std_error

    # K = 3 needs compensating overlap 1.0, outside the statistical regime
    res3 = negative_alignment_identity_check(samples=10_000, K=3, seed=4)
    assert res3.mean_deviation is None and res3.std_error is None
    assert res3.pointwise_max_deviation == 0.0

    with pytest.raises(ValueError):
        negative_alignment_identity_check(K=1)
    with pytest.raises(ValueError):
        negative_alignment_identity_check(samples=1)


def test_random_state_generators():
    rng = np.random.default_rng(21)
    from scmlab.order_params import validate

    for _ in range(20):
        m = random_full_state(rng, 3, 4)
        ok, msg = validate(m)
        assert ok, msg
    st = random_site_state(rng, 1)
    assert st.S == 0.0 and st.C == 0.0
    for _ in range(50):
        st = random_site_state(rng, 4, margin=0.05)
        d = st.R + 3 * st.S
        assert 1.0 + 3 * st.C - d * d > 0.05
        assert 1.0 - st.C - (st.R - st.S) ** 2 > 0.05


def test_run_verification_all_green():
    report = run_verification("all", seed=0, samples=100_000)
    failing = [c for c in report["checks"] if not c["passed"]]
    assert report["passed"], failing
    assert report["counts"]["total"] == len(report["checks"])
    assert report["counts"]["failed"] == 0
    names = [c["name"] for c in report["checks"]]
    assert len(names) == len(set(names))
    for c in report["checks"]:
        assert set(c) == {"name", "passed", "detail"}


def test_run_verification_scopes():
    rep = run_verification("activations", seed=1, samples=1000)
    assert rep["scope"] == "activations"
    assert all("quad" in c["name"] for c in rep["checks"])
    with pytest.raises(ValueError):
        run_verification("spectra")
    assert set(VERIFY_SCOPES) == {"activations", "gen-error", "free-energy", "alignment"}


def test_run_verification_deterministic():
    a = run_verification("gen-error", seed=7, samples=20_000)
    b = run_verification("gen-error", seed=7, samples=20_000)
    assert a == b
