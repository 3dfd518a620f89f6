"""Macroscopic order parameters for a committee of hidden units.

Two representations are used throughout:

* :class:`SiteSymmetricState` -- the three-number description (R, S, C)
  of a K-unit student against a matched orthonormal teacher, where each
  unit has self-overlap 1, diagonal teacher overlap R, off-diagonal
  teacher overlap S, and student-student overlap C.
* :class:`FullOverlapMatrix` -- the general (Q, R, T) description with no
  symmetry assumed.

``embed`` maps the first into the second; ``validate`` checks that a full
matrix is structurally admissible (correct shapes, unit student norms,
positive semidefinite joint correlation matrix).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidStateError",
    "SiteSymmetricState",
    "FullOverlapMatrix",
    "embed",
    "validate",
]

PSD_TOL = -1e-10  # smallest eigenvalue allowed for the joint correlation matrix


class InvalidStateError(ValueError):
    """Raised when order parameters violate a structural constraint."""


def _check_box(name: str, value: float) -> float:
    v = float(value)
    if not -1.0 - 1e-12 <= v <= 1.0 + 1e-12:
        raise InvalidStateError(f"{name}={v} outside [-1, 1]")
    return min(1.0, max(-1.0, v))


@dataclass(frozen=True)
class SiteSymmetricState:
    """Site-symmetric order parameters (K units, overlaps R, S, C).

    For K=1 there are no off-diagonal overlaps; S and C are forced to 0
    and ignored by all consumers.
    """

    K: int
    R: float
    S: float = 0.0
    C: float = 0.0

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 1:
            raise InvalidStateError(f"K must be a positive integer, got {self.K}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "R", _check_box("R", self.R))
        if self.K == 1:
            object.__setattr__(self, "S", 0.0)
            object.__setattr__(self, "C", 0.0)
        else:
            object.__setattr__(self, "S", _check_box("S", self.S))
            object.__setattr__(self, "C", _check_box("C", self.C))

    def as_dict(self) -> dict:
        return {"K": self.K, "R": self.R, "S": self.S, "C": self.C}

    def embed(self) -> "FullOverlapMatrix":
        return embed(self)


@dataclass(frozen=True)
class FullOverlapMatrix:
    """General overlaps: Q (K x K student), R (K x M student-teacher), T (M x M teacher)."""

    Q: np.ndarray
    R: np.ndarray
    T: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        Q = np.array(self.Q, dtype=float)
        R = np.array(self.R, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise InvalidStateError(f"Q must be square, got shape {Q.shape}")
        if R.ndim != 2 or R.shape[0] != Q.shape[0]:
            raise InvalidStateError(
                f"R must be K x M with K={Q.shape[0]}, got shape {R.shape}"
            )
        T = self.T
        if T is None:
            T = np.eye(R.shape[1])
        T = np.array(T, dtype=float)
        if T.shape != (R.shape[1], R.shape[1]):
            raise InvalidStateError(f"T must be M x M with M={R.shape[1]}, got {T.shape}")
        Q.setflags(write=False)
        R.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "T", T)

    @property
    def K(self) -> int:
        return self.Q.shape[0]

    @property
    def M(self) -> int:
        return self.T.shape[0]

    def correlation_matrix(self) -> np.ndarray:
        """Joint (M+K) x (M+K) correlation matrix, teacher block first."""
        return np.block([[self.T, self.R.T], [self.R, self.Q]])

    def as_dict(self) -> dict:
        return {"Q": self.Q.tolist(), "R": self.R.tolist(), "T": self.T.tolist()}


def embed(state: SiteSymmetricState) -> FullOverlapMatrix:
    """Expand a site-symmetric state into explicit overlap matrices (M = K)."""
    K = state.K
    Q = np.full((K, K), state.C)
    np.fill_diagonal(Q, 1.0)
    R = np.full((K, K), state.S)
    np.fill_diagonal(R, state.R)
    return FullOverlapMatrix(Q=Q, R=R, T=np.eye(K))


def validate(m: FullOverlapMatrix, tol: float = PSD_TOL) -> tuple[bool, str]:
    """Check structural admissibility of a full overlap matrix.

    Returns (ok, diagnostic).  Admissible means: symmetric Q and T, unit
    student self-overlaps, and joint correlation matrix with smallest
    eigenvalue >= tol.
    """
    problems = []
    if not np.allclose(m.Q, m.Q.T, atol=1e-10):
        problems.append("Q not symmetric")
    if not np.allclose(m.T, m.T.T, atol=1e-10):
        problems.append("T not symmetric")
    diag = np.diag(m.Q)
    if not np.allclose(diag, 1.0, atol=1e-8):
        problems.append(f"student self-overlaps not 1 (found {diag})")
    corr = m.correlation_matrix()
    min_eig = float(np.linalg.eigvalsh(corr).min())
    if min_eig < tol:
        problems.append(f"joint correlation matrix not PSD (min eigenvalue {min_eig:.3e})")
    if problems:
        return False, "; ".join(problems)
    return True, f"ok (min eigenvalue {min_eig:.3e})"
