"""Small dense symmetric-matrix helpers used by the vector estimators.

Dimensions here are tiny (d <= 16 in practice) so everything routes through
plain dense eigendecomposition and direct solves; the value added over raw
numpy is validation, symmetric square roots with a positive-definiteness
floor, and descriptive failures instead of silent NaN propagation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SingularMatrixError

__all__ = [
    "CorrelationMatrix",
    "sym_sqrt",
    "sym_inv_sqrt",
    "invert",
    "singular_value_lower_bound",
]

# Eigenvalues below this floor count as a degenerate correlation structure.
_EIG_FLOOR = 1e-10

_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """A validated correlation matrix: symmetric, unit diagonal, entries in [-1, 1].

    The wrapped array is copied and marked read-only. Construction rejects
    matrices that are not (numerically) positive definite so downstream
    square roots and inverses are always well-defined.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ConfigurationError(f"correlation matrix must be square, got shape {arr.shape}")
        if not np.allclose(arr, arr.T, atol=1e-12):
            raise ConfigurationError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(arr), 1.0, atol=1e-12):
            raise ConfigurationError("correlation matrix must have a unit diagonal")
        if np.any(np.abs(arr) > 1.0 + 1e-12):
            raise ConfigurationError("correlation entries must lie in [-1, 1]")
        eigmin = float(np.linalg.eigvalsh(arr)[0])
        if eigmin <= _EIG_FLOOR:
            raise ConfigurationError(
                f"correlation matrix must be positive definite, smallest eigenvalue {eigmin:.3e}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def identity(cls, d: int) -> "CorrelationMatrix":
        return cls(np.eye(int(d)))

    @classmethod
    def equicorrelated(cls, d: int, offdiag: float) -> "CorrelationMatrix":
        """All off-diagonal entries equal to ``offdiag``."""
        d = int(d)
        arr = np.full((d, d), float(offdiag))
        np.fill_diagonal(arr, 1.0)
        return cls(arr)


def _eigh_checked(a: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    vals, vecs = np.linalg.eigh(a)
    if vals[0] <= _EIG_FLOOR:
        raise SingularMatrixError(
            f"{what} needs a positive definite matrix, smallest eigenvalue {vals[0]:.3e}"
        )
    return vals, vecs


def sym_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric positive-definite square root of a symmetric matrix."""
    vals, vecs = _eigh_checked(a, "symmetric square root")
    return (vecs * np.sqrt(vals)) @ vecs.T


def sym_inv_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root, the canonical whitening transform."""
    vals, vecs = _eigh_checked(a, "inverse square root")
    return (vecs / np.sqrt(vals)) @ vecs.T


def invert(a: np.ndarray) -> np.ndarray:
    """Invert a small square matrix with a conditioning guard.

    Raises
    ------
    SingularMatrixError
        If the 1-norm condition estimate exceeds 1e12 (the result would
        carry fewer than ~4 trustworthy digits).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError(f"can only invert square matrices, got shape {a.shape}")
    cond = float(np.linalg.cond(a, 1))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularMatrixError(
            f"matrix 1-norm condition estimate {cond:.3e} exceeds {_COND_LIMIT:.0e}",
            condition_estimate=cond,
        )
    eye = np.eye(a.shape[0])
    x = np.linalg.solve(a, eye)
    # One step of iterative refinement; cheap at these sizes.
    x += np.linalg.solve(a, eye - a @ x)
    return x


def singular_value_lower_bound(m: np.ndarray) -> float:
    """Deterministic lower bound on the smallest singular value.

    For a square matrix returns
    min_i ( |m_ii| - (row_i off-diagonal sum + column_i off-diagonal sum) / 2 ),
    which bounds sigma_min from below whenever it is positive. Used to screen
    nearly singular selection matrices without an SVD per trial.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"bound needs a square matrix, got shape {m.shape}")
    absm = np.abs(m)
    diag = np.diag(absm)
    row_off = absm.sum(axis=1) - diag
    col_off = absm.sum(axis=0) - diag
    return float(np.min(diag - 0.5 * (row_off + col_off)))
