"""Entropy, scaled free energy, analytic derivatives, stability spectrum."""

import math

import numpy as np
import pytest

from scmlab.equilibrium import multistart, symmetric_stability_loss
from scmlab.free_energy import (
    EntropyDomainError,
    beta_f,
    beta_f_value,
    entropy_full,
    entropy_site,
    full_stability_spectrum,
    grad_beta_f,
    hessian_site,
)
from scmlab.gen_error import eps_g_general
from scmlab.oracle import fd_gradient, fd_hessian, random_site_state
from scmlab.order_params import FullOverlapMatrix, SiteSymmetricState, embed


def test_entropy_anchor_values():
    assert entropy_site(SiteSymmetricState(K=3, R=0.0, S=0.0, C=0.0)) == 0.0
    got = entropy_site(SiteSymmetricState(K=2, R=0.5, S=0.0, C=0.0))
    assert got == pytest.approx(math.log(0.75), abs=1e-14)


def test_entropy_boundary_domain_error():
    with pytest.raises(EntropyDomainError):
        entropy_site(SiteSymmetricState(K=4, R=1.0, S=0.0, C=0.0))
    with pytest.raises(EntropyDomainError):
        entropy_site(SiteSymmetricState(K=3, R=0.0, S=0.0, C=1.0))
    with pytest.raises(EntropyDomainError):
        entropy_full(embed(SiteSymmetricState(K=2, R=1.0, S=0.0, C=0.0)))


def test_entropy_full_identity_is_zero():
    assert entropy_full(embed(SiteSymmetricState(K=4, R=0.0, S=0.0, C=0.0))) == 0.0


def test_entropy_full_matches_site_differences():
    # the additive constant between the two forms is state independent
    # (and exactly zero under the orthonormal-teacher convention)
    rng = np.random.default_rng(11)
    for K in (2, 3, 5):
        states = [random_site_state(rng, K) for _ in range(20)]
        diffs = [entropy_full(embed(s)) - entropy_site(s) for s in states]
        assert max(diffs) - min(diffs) < 1e-10
        assert abs(diffs[0]) < 1e-10


def test_beta_f_composition_anchors():
    pt = beta_f("erf", SiteSymmetricState(K=5, R=0.0, S=0.0, C=0.0), 0.0)
    assert pt.beta_f == 0.0
    pt = beta_f("erf", SiteSymmetricState(K=5, R=0.0, S=0.0, C=0.0), 1.0)
    assert pt.beta_f == pytest.approx(5.0 / 3.0, abs=1e-12)
    pt = beta_f("relu", SiteSymmetricState(K=2, R=0.0, S=0.0, C=0.0), 1.0)
    assert pt.beta_f == pytest.approx(2.0 * (0.5 - 1.0 / (2.0 * math.pi)), abs=1e-12)
    assert pt.beta_f == pytest.approx(pt.alpha * 2 * pt.eps_g - pt.entropy, abs=1e-14)
    with pytest.raises(ValueError):
        beta_f("erf", SiteSymmetricState(K=2, R=0.0), -1.0)


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(4)
    for act in ("erf", "relu"):
        for K in (2, 3, 5, 10):
            for _ in range(6):
                st = random_site_state(rng, K)
                alpha = float(rng.uniform(0.5, 40.0))
                x = np.array([st.R, st.S, st.C])

                def func(v, K=K, act=act, alpha=alpha):
                    return beta_f_value(
                        act, SiteSymmetricState(K=K, R=v[0], S=v[1], C=v[2]), alpha)

                num = fd_gradient(func, x)
                ana = grad_beta_f(act, st, alpha)
                denom = max(1.0, float(np.linalg.norm(num)))
                assert np.linalg.norm(ana - num) / denom < 1e-6, (act, K, st)


def test_hessian_matches_finite_differences():
    rng = np.random.default_rng(6)
    for act in ("erf", "relu"):
        for K in (2, 5):
            for _ in range(4):
                st = random_site_state(rng, K)
                alpha = float(rng.uniform(0.5, 30.0))
                x = np.array([st.R, st.S, st.C])

                def func(v, K=K, act=act, alpha=alpha):
                    return beta_f_value(
                        act, SiteSymmetricState(K=K, R=v[0], S=v[1], C=v[2]), alpha)

                num = fd_hessian(func, x)
                ana = hessian_site(act, st, alpha)
                scale = max(1.0, float(np.abs(num).max()))
                assert np.abs(ana - num).max() / scale < 1e-4, (act, K, st)


def test_hessian_equals_full_matrix_restriction():
    """Second derivatives along the three site-symmetric directions of the
    general (eps_g_general + entropy_full) free energy agree with the
    analytic site Hessian."""
    st = SiteSymmetricState(K=3, R=0.35, S=0.05, C=0.1)
    alpha = 12.0
    for act in ("erf", "relu"):
        def func(v, act=act):
            K = 3
            Q = np.full((K, K), v[2]); np.fill_diagonal(Q, 1.0)
            R = np.full((K, K), v[1]); np.fill_diagonal(R, v[0])
            m = FullOverlapMatrix(Q=Q, R=R, T=np.eye(K))
            return alpha * K * eps_g_general(act, m, check=False) - entropy_full(m)

        num = fd_hessian(func, np.array([st.R, st.S, st.C]))
        ana = hessian_site(act, st, alpha)
        scale = max(1.0, float(np.abs(num).max()))
        assert np.abs(ana - num).max() / scale < 1e-4


def test_single_unit_stationarity_closed_forms():
    # alpha(R) for the K=1 branch; the analytic gradient must vanish there
    for R in (0.1, 0.3, 0.6, 0.9):
        alpha_erf = math.pi * R * math.sqrt(4.0 - R * R) / (2.0 * (1.0 - R * R))
        g = grad_beta_f("erf", SiteSymmetricState(K=1, R=R), alpha_erf)
        assert abs(g[0]) < 1e-10 * max(1.0, alpha_erf)
        alpha_relu = 4.0 * math.pi * R / (
            (1.0 - R * R) * (math.pi + 2.0 * math.asin(R)))
        g = grad_beta_f("relu", SiteSymmetricState(K=1, R=R), alpha_relu)
        assert abs(g[0]) < 1e-10 * max(1.0, alpha_relu)


def test_gradient_vanishes_at_located_minimum():
    for act, K, alpha in (("erf", 5, 30.0), ("relu", 10, 10.0)):
        for res in multistart(act, K, alpha):
            if not res.is_minimum:
                continue
            g = grad_beta_f(act, res.state, alpha)
            assert np.linalg.norm(g) < 1e-6
            evals = np.linalg.eigvalsh(hessian_site(act, res.state, alpha))
            assert evals.min() > 0.0


def test_full_spectrum_signs():
    from scmlab.equilibrium import BranchLabel, symmetric_stationary

    # a located specialized minimum is stable against all overlap directions
    best = None
    for res in multistart("relu", 5, 10.0):
        if res.is_minimum and res.label is BranchLabel.POSITIVE_SPECIALIZED:
            best = res if best is None or res.beta_f < best.beta_f else best
    assert best is not None
    assert full_stability_spectrum("relu", best.state, 10.0) > -1e-8

    # the symmetric stationary state above the continuous transition is a saddle
    stab = symmetric_stability_loss("relu", 10)
    assert stab < 10.0
    sym = symmetric_stationary("relu", 10, 10.0)
    assert full_stability_spectrum("relu", sym.state, 10.0) < -1e-3

    # past the erf disappearance load the symmetric point is a saddle as well
    sym = symmetric_stationary("erf", 5, 64.0)
    assert sym.min_eig < 0.0
    assert full_stability_spectrum("erf", sym.state, 64.0) < -1e-3
