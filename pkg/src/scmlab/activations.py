"""Hidden-unit transfer functions and their bivariate Gaussian pair averages.

Every macroscopic quantity in this package (generalization error, free
energy, phase boundaries) is assembled from one scalar building block: the
average E[g(x) g(y)] of a product of unit responses under a zero-mean
bivariate normal with covariance [[c11, c12], [c12, c22]].  The closed
forms implemented here are the ground truth that the rest of the package
trusts, so they are cross-checked against quadrature oracles that share no
code with them (see :mod:`scmlab.oracle`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "PairCovariance",
    "Activation",
    "ErfSigmoid",
    "ReLU",
    "ERF_SIGMOID",
    "RELU",
    "ACTIVATIONS",
    "get_activation",
    "pair_average",
]

_SQRT2 = math.sqrt(2.0)


def _clamped_asin(u: float) -> float:
    # rounding can push |u| infinitesimally past 1; the formulas are exact at the boundary
    return math.asin(min(1.0, max(-1.0, u)))


@dataclass(frozen=True)
class PairCovariance:
    """Covariance of a zero-mean bivariate normal (c11, c22 variances, c12 cross)."""

    c11: float
    c22: float
    c12: float

    def __post_init__(self) -> None:
        if self.c11 < 0.0 or self.c22 < 0.0:
            raise ValueError(f"variances must be nonnegative, got {self.c11}, {self.c22}")
        bound = math.sqrt(self.c11 * self.c22)
        if abs(self.c12) > bound * (1.0 + 1e-12) + 1e-300:
            raise ValueError(
                f"|c12|={abs(self.c12)} exceeds sqrt(c11*c22)={bound}; matrix not PSD"
            )

    def swapped(self) -> "PairCovariance":
        return PairCovariance(self.c22, self.c11, self.c12)


class Activation:
    """A transfer function g together with its Gaussian pair kernel.

    Subclasses provide the pointwise map ``eval`` and the closed-form
    second moment ``pair_average``.  Both accept scalars or arrays.
    """

    name: str = ""

    def eval(self, x):
        raise NotImplementedError

    def pair_average(self, cov: PairCovariance) -> float:
        raise NotImplementedError

    def pair_average_arrays(self, c11, c22, c12):
        """Vectorized kernel over aligned arrays of covariance entries."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class ErfSigmoid(Activation):
    """g(x) = 1 + erf(x / sqrt(2)), a sigmoid saturating at 0 and 2."""

    name = "erf"

    def eval(self, x):
        return 1.0 + special.erf(np.asarray(x, dtype=float) / _SQRT2)

    def pair_average(self, cov: PairCovariance) -> float:
        u = cov.c12 / math.sqrt((1.0 + cov.c11) * (1.0 + cov.c22))
        return 1.0 + (2.0 / math.pi) * _clamped_asin(u)

    def pair_average_arrays(self, c11, c22, c12):
        u = np.clip(c12 / np.sqrt((1.0 + c11) * (1.0 + c22)), -1.0, 1.0)
        return 1.0 + (2.0 / np.pi) * np.arcsin(u)


class ReLU(Activation):
    """g(x) = max(0, x)."""

    name = "relu"

    def eval(self, x):
        return np.maximum(0.0, np.asarray(x, dtype=float))

    def pair_average(self, cov: PairCovariance) -> float:
        c11, c22, c12 = cov.c11, cov.c22, cov.c12
        if c11 == 0.0 or c22 == 0.0:
            return 0.0
        disc = max(c11 * c22 - c12 * c12, 0.0)
        rho = c12 / math.sqrt(c11 * c22)
        return c12 / 4.0 + (math.sqrt(disc) + c12 * _clamped_asin(rho)) / (2.0 * math.pi)

    def pair_average_arrays(self, c11, c22, c12):
        c11 = np.asarray(c11, dtype=float)
        c22 = np.asarray(c22, dtype=float)
        c12 = np.asarray(c12, dtype=float)
        prod = c11 * c22
        disc = np.sqrt(np.maximum(prod - c12 * c12, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(prod > 0.0, c12 / np.sqrt(np.maximum(prod, 1e-300)), 0.0)
        rho = np.clip(rho, -1.0, 1.0)
        out = c12 / 4.0 + (disc + c12 * np.arcsin(rho)) / (2.0 * np.pi)
        return np.where(prod > 0.0, out, 0.0)


ERF_SIGMOID = ErfSigmoid()
RELU = ReLU()

ACTIVATIONS = {a.name: a for a in (ERF_SIGMOID, RELU)}


def get_activation(name) -> Activation:
    """Resolve an activation by name ('erf' or 'relu'); instances pass through."""
    if isinstance(name, Activation):
        return name
    try:
        return ACTIVATIONS[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}")


def pair_average(activation, cov: PairCovariance) -> float:
    """E[g(x) g(y)] for (x, y) zero-mean bivariate normal with covariance ``cov``."""
    return get_activation(activation).pair_average(cov)
