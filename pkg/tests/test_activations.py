"""Pointwise activation values and analytic Gaussian pair kernels."""

import math

import numpy as np
import pytest

from scmlab.activations import (
    ACTIVATIONS,
    ERF_SIGMOID,
    RELU,
    PairCovariance,
    get_activation,
    pair_average,
)
from scmlab.oracle import quad_pair_average

GRID_RHO = (-0.99, -0.5, 0.0, 0.5, 0.99)
GRID_VAR = (0.25, 1.0, 4.0)


def grid_covariances():
    for c11 in GRID_VAR:
        for c22 in GRID_VAR:
            for rho in GRID_RHO:
                yield PairCovariance(c11, c22, rho * math.sqrt(c11 * c22))


def test_eval_anchor_values():
    assert RELU.eval(-1.0) == 0.0
    assert RELU.eval(2.0) == 2.0
    assert ERF_SIGMOID.eval(0.0) == 1.0


def test_eval_vectorized_and_ranges():
    x = np.linspace(-6.0, 6.0, 101)
    ge = ERF_SIGMOID.eval(x)
    gr = RELU.eval(x)
    assert ge.shape == x.shape and gr.shape == x.shape
    assert np.all((ge > 0.0) & (ge < 2.0))
    assert np.all(np.diff(ge) > 0.0)
    assert np.all(gr >= 0.0)
    assert np.array_equal(gr, np.maximum(0.0, x))


def test_pair_average_closed_anchors():
    assert RELU.pair_average(PairCovariance(1.0, 1.0, 0.0)) == pytest.approx(
        1.0 / (2.0 * math.pi), abs=1e-15)
    assert RELU.pair_average(PairCovariance(1.0, 1.0, 1.0)) == pytest.approx(
        0.5, abs=1e-15)
    assert ERF_SIGMOID.pair_average(PairCovariance(1.0, 1.0, 0.0)) == 1.0


def test_pair_average_matches_quadrature_grid():
    # the independent quadrature oracle pins both kernels to 1e-8
    for act in (ERF_SIGMOID, RELU):
        for cov in grid_covariances():
            ref = quad_pair_average(act.name, cov)
            got = act.pair_average(cov)
            assert got == pytest.approx(ref, rel=1e-8, abs=1e-8), (act.name, cov)


def test_pair_average_symmetry_in_variances():
    for act in (ERF_SIGMOID, RELU):
        for cov in grid_covariances():
            assert act.pair_average(cov) == pytest.approx(
                act.pair_average(cov.swapped()), abs=1e-14)


def test_pair_average_monotone_in_c12():
    for act in (ERF_SIGMOID, RELU):
        for c11 in GRID_VAR:
            for c22 in GRID_VAR:
                bound = math.sqrt(c11 * c22)
                vals = [act.pair_average(PairCovariance(c11, c22, u * bound))
                        for u in np.linspace(-0.999, 0.999, 21)]
                assert all(b > a for a, b in zip(vals, vals[1:])), (act.name, c11, c22)


def test_relu_positive_homogeneity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        c11, c22 = rng.uniform(0.1, 3.0, 2)
        rho = rng.uniform(-0.99, 0.99)
        c12 = rho * math.sqrt(c11 * c22)
        gamma2 = rng.uniform(0.2, 5.0)
        base = RELU.pair_average(PairCovariance(c11, c22, c12))
        scaled = RELU.pair_average(
            PairCovariance(gamma2 * c11, gamma2 * c22, gamma2 * c12))
        assert scaled == pytest.approx(gamma2 * base, rel=1e-12)


def test_degenerate_covariance_no_domain_error():
    # perfectly (anti)correlated pairs must evaluate despite rounding on asin
    for act in (ERF_SIGMOID, RELU):
        for c in (0.25, 1.0, 4.0):
            for sgn in (1.0, -1.0):
                val = act.pair_average(PairCovariance(c, c, sgn * c))
                assert math.isfinite(val)
    assert RELU.pair_average(PairCovariance(1.0, 1.0, 1.0)) == pytest.approx(0.5)
    assert RELU.pair_average(PairCovariance(0.0, 1.0, 0.0)) == 0.0


def test_pair_covariance_validation():
    with pytest.raises(ValueError):
        PairCovariance(-1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        PairCovariance(1.0, 1.0, 1.5)
    PairCovariance(1.0, 1.0, 1.0)  # boundary allowed


def test_pair_average_arrays_matches_scalar():
    rng = np.random.default_rng(3)
    c11 = rng.uniform(0.1, 4.0, 200)
    c22 = rng.uniform(0.1, 4.0, 200)
    rho = rng.uniform(-1.0, 1.0, 200)
    c12 = rho * np.sqrt(c11 * c22)
    for act in (ERF_SIGMOID, RELU):
        vec = act.pair_average_arrays(c11, c22, c12)
        for i in range(200):
            ref = act.pair_average(PairCovariance(c11[i], c22[i], c12[i]))
            assert vec[i] == pytest.approx(ref, abs=1e-13)


def test_get_activation_dispatch():
    assert get_activation("erf") is ERF_SIGMOID
    assert get_activation("relu") is RELU
    assert get_activation(RELU) is RELU
    assert set(ACTIVATIONS) == {"erf", "relu"}
    with pytest.raises(ValueError):
        get_activation("tanh")
    cov = PairCovariance(1.0, 1.0, 0.3)
    assert pair_average("relu", cov) == RELU.pair_average(cov)
