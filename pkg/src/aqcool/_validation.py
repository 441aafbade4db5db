"""Input validation helpers shared by the public API."""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12
STRUCTURAL_TOL = 1e-10
MAX_DIM = 1024


class ValidationError(ValueError):
    """Raised when user-supplied operators, states or parameters are invalid."""


def as_square_matrix(data, name: str = "matrix") -> np.ndarray:
    arr = np.array(data, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if arr.shape[0] > MAX_DIM:
        raise ValidationError(f"{name} dimension {arr.shape[0]} exceeds the dense cap of {MAX_DIM}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    """Raise ``ValidationError`` naming the worst entry if ``matrix`` is not Hermitian."""
    diff = np.abs(matrix - matrix.conj().T)
    if diff.size and diff.max() > tol:
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        raise ValidationError(
            f"matrix is not Hermitian: entry ({i}, {j}) = {matrix[i, j]!r} but "
            f"conj of entry ({j}, {i}) = {np.conj(matrix[j, i])!r} (|diff| = {diff[i, j]:.3e})"
        )


def check_same_dim(a: int, b: int, what: str = "operands") -> None:
    if a != b:
        raise ValidationError(f"dimension mismatch between {what}: {a} != {b}")


def check_probability(p: float, name: str = "p", open_low: bool = False) -> float:
    p = float(p)
    lo_ok = p > 0 if open_low else p >= 0
    if not (lo_ok and p <= 1):
        interval = "(0, 1]" if open_low else "[0, 1]"
        raise ValidationError(f"{name} must lie in {interval}, got {p}")
    return p


def check_positive_int(n, name: str) -> int:
    if isinstance(n, bool) or int(n) != n or int(n) < 1:
        raise ValidationError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


def frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy so value objects stay immutable."""
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out
