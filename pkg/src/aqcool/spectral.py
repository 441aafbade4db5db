"""Dense Hermitian linear algebra on small Hilbert spaces.

Everything here is a pure function of immutable value objects: operators,
their eigendecompositions, quantum states (pure or mixed) and the handful of
scalar functionals the cooling code needs (energies and fidelities).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from ._validation import (
    STRUCTURAL_TOL,
    ValidationError,
    as_square_matrix,
    check_hermitian,
    check_same_dim,
    frozen,
)

DEGENERACY_TOL = 1e-9

_NAMED = {
    "sigma_z": [[1, 0], [0, -1]],
    "sigma_x": [[0, 1], [1, 0]],
    "sigma_y": [[0, -1j], [1j, 0]],
    "identity": [[1, 0], [0, 1]],
}


@dataclass(frozen=True)
class HermitianOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_square_matrix(self.matrix, "Hermitian operator")
        check_hermitian(m)
        object.__setattr__(self, "matrix", frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def named(cls, name: str) -> "HermitianOperator":
        try:
            return cls(np.array(_NAMED[name], dtype=complex))
        except KeyError:
            raise ValidationError(
                f"unknown builtin operator {name!r}; choose from {sorted(_NAMED)}"
            ) from None

    def to_json(self) -> str:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, text: str) -> "HermitianOperator":
        return cls(matrix_from_json(text))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a Hermitian operator, energies ascending.

    ``eigenvectors[:, k]`` is the eigenvector belonging to ``energies[k]``.
    """

    energies: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", frozen(np.asarray(self.energies, dtype=float)))
        object.__setattr__(self, "eigenvectors", frozen(np.asarray(self.eigenvectors, dtype=complex)))

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        v = self.eigenvectors
        return frozen((v * self.energies) @ v.conj().T)

    def operator(self) -> HermitianOperator:
        return HermitianOperator(self.matrix)

    def ground_projector(self, tol: float = STRUCTURAL_TOL) -> np.ndarray:
        """Projector onto the lowest-energy eigenspace."""
        mask = self.energies <= self.energies[0] + tol
        v = self.eigenvectors[:, mask]
        return v @ v.conj().T

    def populations(self, state: "QuantumState") -> np.ndarray:
        """Weights of ``state`` on each eigenvector, |<e_k|psi>|^2 or <e_k|rho|e_k>."""
        check_same_dim(self.dim, state.dim, "decomposition and state")
        v = self.eigenvectors
        if state.is_pure:
            return np.abs(v.conj().T @ state.data) ** 2
        return np.einsum("ik,ij,jk->k", v.conj(), state.data, v).real


@dataclass(frozen=True)
class QuantumState:
    """A pure amplitude vector (1-D ``data``) or a density matrix (2-D ``data``)."""

    data: np.ndarray
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.ndim == 1:
            if arr.size == 0:
                raise ValidationError("state vector is empty")
            norm = np.vdot(arr, arr).real
            if abs(norm - 1) > STRUCTURAL_TOL:
                raise ValidationError(f"pure state is not normalized: <psi|psi> = {norm!r}")
        elif arr.ndim == 2:
            as_square_matrix(arr, "density matrix")
            check_hermitian(arr, STRUCTURAL_TOL)
            tr = np.trace(arr).real
            if abs(tr - 1) > STRUCTURAL_TOL:
                raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
            lowest = np.linalg.eigvalsh(arr)[0]
            if lowest < -STRUCTURAL_TOL:
                raise ValidationError(f"density matrix has negative eigenvalue {lowest!r}")
        else:
            raise ValidationError(f"state data must be 1-D or 2-D, got ndim={arr.ndim}")
        if self.labels is not None and len(self.labels) != arr.shape[0]:
            raise ValidationError("number of basis labels does not match dimension")
        object.__setattr__(self, "data", frozen(arr))

    @classmethod
    def pure(cls, amplitudes, normalize: bool = False) -> "QuantumState":
        amps = np.asarray(amplitudes, dtype=complex)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValidationError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps)

    @classmethod
    def mixed(cls, rho) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim != 2:
            raise ValidationError("a mixed state needs a 2-D density matrix")
        return cls(rho)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "QuantumState":
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)


@dataclass(frozen=True)
class UnitaryOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_square_matrix(self.matrix, "unitary")
        resid = np.abs(m.conj().T @ m - np.eye(m.shape[0])).max()
        if resid > STRUCTURAL_TOL:
            raise ValidationError(f"operator is not unitary: max|U^dag U - I| = {resid:.3e}")
        object.__setattr__(self, "matrix", frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    for c in v:
        if abs(c) > tol:
            return v * (abs(c) / c)
    return v


def eigendecompose(H: HermitianOperator) -> SpectralDecomposition:
    """Ascending eigendecomposition with a deterministic gauge.

    Each eigenvector is rephased so its first non-negligible component is real
    and positive.  Within a degenerate block (energies closer than
    ``DEGENERACY_TOL``) vectors are ordered by descending lexicographic
    comparison of their component magnitudes.
    """
    if not isinstance(H, HermitianOperator):
        H = HermitianOperator(H)
    w, v = np.linalg.eigh(H.matrix)
    v = np.column_stack([_fix_phase(v[:, k]) for k in range(v.shape[1])])

    order = []
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[start] < DEGENERACY_TOL:
            stop += 1
        block = list(range(start, stop))
        if len(block) > 1:
            mags = np.round(np.abs(v[:, block]), 12)
            block.sort(key=lambda k: tuple(mags[:, k - start]), reverse=True)
        order.extend(block)
        start = stop
    return SpectralDecomposition(w[order], v[:, order])


def evolution_operator(spec: SpectralDecomposition, t: float) -> UnitaryOperator:
    """U = exp(-i H t) assembled from the eigenpairs."""
    v = spec.eigenvectors
    phases = np.exp(-1j * spec.energies * float(t))
    return UnitaryOperator((v * phases) @ v.conj().T)


def expectation(H: HermitianOperator | np.ndarray, s: QuantumState) -> float:
    m = H.matrix if isinstance(H, HermitianOperator) else np.asarray(H)
    check_same_dim(m.shape[0], s.dim, "operator and state")
    if s.is_pure:
        val = np.vdot(s.data, m @ s.data)
    else:
        val = np.trace(m @ s.data)
    scale = max(1.0, float(np.abs(m).max()))
    if abs(val.imag) > STRUCTURAL_TOL * scale:
        raise ValidationError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)


def fidelity_with_pure(rho: QuantumState, target: QuantumState) -> float:
    """F = <target|rho|target>, clamped to [0, 1]."""
    if not target.is_pure:
        raise ValidationError("fidelity target must be a pure state")
    check_same_dim(rho.dim, target.dim, "state and target")
    psi = target.data
    if rho.is_pure:
        f = abs(np.vdot(psi, rho.data)) ** 2
    else:
        f = np.vdot(psi, rho.data @ psi).real
    if not -STRUCTURAL_TOL <= f <= 1 + STRUCTURAL_TOL:
        raise ValidationError(f"fidelity {f!r} outside [0, 1]")
    return float(min(max(f, 0.0), 1.0))


@dataclass(frozen=True)
class DominantEigenvector:
    """Top eigenvector of a density matrix.

    When the top two eigenvalues are closer than ``DEGENERACY_TOL`` the
    choice is ambiguous: ``degenerate`` is set and every vector of the top
    eigenspace is listed in ``candidates``.
    """

    state: QuantumState
    eigenvalue: float
    degenerate: bool
    candidates: tuple[QuantumState, ...]


def dominant_eigenvector_projection(rho: QuantumState) -> DominantEigenvector:
    w, v = np.linalg.eigh(rho.density_matrix())
    top = w[-1]
    idx = [k for k in range(len(w) - 1, -1, -1) if top - w[k] < DEGENERACY_TOL]
    cands = tuple(QuantumState(_fix_phase(v[:, k] / np.linalg.norm(v[:, k]))) for k in idx)
    return DominantEigenvector(cands[0], float(top), len(cands) > 1, cands)


def matrix_to_json(matrix: np.ndarray) -> str:
    """Row-major JSON array of ``[re, im]`` pairs."""
    m = np.asarray(matrix, dtype=complex)
    return json.dumps([[[float(z.real), float(z.imag)] for z in row] for row in m])


def matrix_from_json(text: str) -> np.ndarray:
    try:
        rows = json.loads(text)
        m = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from None
    return as_square_matrix(m)


def load_operator(spec: str) -> HermitianOperator:
    """Resolve a builtin operator name or a path to a JSON matrix file."""
    if spec in _NAMED:
        return HermitianOperator.named(spec)
    path = Path(spec)
    if not path.exists():
        raise ValidationError(f"{spec!r} is neither a builtin operator nor an existing file")
    return HermitianOperator.from_json(path.read_text(encoding="utf-8"))
