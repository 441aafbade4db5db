"""The ancilla-mediated cooling module.

One module entangles the system with a fresh ancilla through a
controlled ``U = exp(-iHt)`` sandwiched between Hadamards and a phase gate,
then measures the ancilla.  Conditioned on the outcome the system undergoes
one of two commuting jump operators

    L_cool = (I - i e^{i gamma} U) / 2      (ancilla reads 0)
    L_heat = (I + i e^{i gamma} U) / 2      (ancilla reads 1)

which rescale eigenweight k by ``(1 -/+ sin(E_k t - gamma)) / 2``.
``theta = gamma + pi/2`` is the user-facing bias angle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._validation import STRUCTURAL_TOL, ValidationError, check_same_dim
from .spectral import QuantumState, SpectralDecomposition, evolution_operator

UNREACHABLE_P = 1e-14


@dataclass(frozen=True)
class CoolingParams:
    """Evolution time ``t`` and bias angle ``theta`` (radians); ``gamma`` is derived."""

    t: float
    theta: float

    @classmethod
    def from_gamma(cls, t: float, gamma: float) -> "CoolingParams":
        return cls(t, gamma + math.pi / 2)

    @classmethod
    def from_degrees(cls, t: float, theta_deg: float) -> "CoolingParams":
        return cls(t, math.radians(theta_deg))

    @property
    def gamma(self) -> float:
        return self.theta - math.pi / 2


def eigenphases(energies, params: CoolingParams) -> np.ndarray:
    """phi_k = E_k t - gamma."""
    return np.asarray(energies, dtype=float) * params.t - params.gamma


@dataclass(frozen=True)
class JumpPair:
    lambda_minus: np.ndarray
    lambda_plus: np.ndarray

    def completeness_residual(self) -> float:
        lm, lp = self.lambda_minus, self.lambda_plus
        total = lm.conj().T @ lm + lp.conj().T @ lp
        return float(np.abs(total - np.eye(lm.shape[0])).max())


def jump_operators(spec: SpectralDecomposition, params: CoolingParams) -> JumpPair:
    U = evolution_operator(spec, params.t).matrix
    eye = np.eye(spec.dim, dtype=complex)
    phase = 1j * np.exp(1j * params.gamma)
    return JumpPair((eye - phase * U) / 2, (eye + phase * U) / 2)


def scaling_factor(energy: float, params: CoolingParams, branch: str = "cool") -> float:
    """Unnormalized eigenweight multiplier ``1 -/+ sin(phi_k)`` for the cool/heat branch."""
    s = math.sin(energy * params.t - params.gamma)
    if branch == "cool":
        return 1.0 - s
    if branch == "heat":
        return 1.0 + s
    raise ValidationError(f"branch must be 'cool' or 'heat', got {branch!r}")


@dataclass(frozen=True)
class PhaseRangeReport:
    per_level: tuple[bool, ...]
    phases: tuple[float, ...]

    @property
    def valid(self) -> bool:
        return all(self.per_level)


def _wrap(phi: np.ndarray) -> np.ndarray:
    # maps to (-pi, pi]
    return np.pi - np.mod(np.pi - phi, 2 * np.pi)


def phase_range_valid(spec: SpectralDecomposition, params: CoolingParams) -> PhaseRangeReport:
    """Check -pi/2 <= phi_k < pi/2 (after wrapping) for every eigenvalue.

    This sufficient condition is diagnostic only; :func:`ordering_valid` is
    the one the energy-ordering guarantee actually needs.
    """
    phi = _wrap(eigenphases(spec.energies, params))
    eps = 1e-12
    ok = (phi >= -np.pi / 2 - eps) & (phi < np.pi / 2 - eps)
    return PhaseRangeReport(tuple(bool(b) for b in ok), tuple(float(p) for p in phi))


def ordering_valid(spec: SpectralDecomposition, params: CoolingParams, tol: float = 1e-12) -> bool:
    """True iff the cool-branch factors are non-increasing in energy."""
    factors = 1.0 - np.sin(eigenphases(spec.energies, params))
    return bool(np.all(np.diff(factors) <= tol))


def boltzmann_deviation(energy: float, t: float) -> float:
    """|(1 - sin(E t)) - exp(-E t)|, the gap to a Boltzmann factor at gamma = 0."""
    x = energy * t
    return abs((1.0 - math.sin(x)) - math.exp(-x))


@dataclass(frozen=True)
class ModuleOutcome:
    """Result of one module application.

    An unreachable branch (probability below 1e-14) has ``None`` for its
    post-state and energy.
    """

    p_cool: float
    p_heat: float
    post_cool: QuantumState | None
    post_heat: QuantumState | None
    energy_in: float
    energy_cool: float | None
    energy_heat: float | None

    def to_dict(self) -> dict:
        return {
            "p_cool": self.p_cool,
            "p_heat": self.p_heat,
            "energy_in": self.energy_in,
            "energy_cool": self.energy_cool,
            "energy_heat": self.energy_heat,
            "post_cool": _state_payload(self.post_cool),
            "post_heat": _state_payload(self.post_heat),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _state_payload(state: QuantumState | None):
    if state is None:
        return None
    data = state.data
    if state.is_pure:
        return [[float(z.real), float(z.imag)] for z in data]
    return [[[float(z.real), float(z.imag)] for z in row] for row in data]


class CoolingModule:
    """Precomputed jump operators for a fixed Hamiltonian and parameter set.

    Application happens in the eigenbasis, where both jump operators are
    diagonal with entries ``(1 -/+ i e^{-i phi_k}) / 2``.
    """

    def __init__(self, spec: SpectralDecomposition, params: CoolingParams):
        self.spec = spec
        self.params = params
        phi = eigenphases(spec.energies, params)
        self._diag_cool = (1 - 1j * np.exp(-1j * phi)) / 2
        self._diag_heat = (1 + 1j * np.exp(-1j * phi)) / 2
        self._v = spec.eigenvectors
        self._vh = spec.eigenvectors.conj().T

    @cached_property
    def jumps(self) -> JumpPair:
        return jump_operators(self.spec, self.params)

    def energy(self, state: QuantumState) -> float:
        return float(self.spec.populations(state) @ self.spec.energies)

    def branch(self, state: QuantumState, outcome: int) -> tuple[float, QuantumState | None]:
        """Probability of ``outcome`` (0 = cool) and the normalized post-state."""
        d = self._diag_cool if outcome == 0 else self._diag_heat
        if state.is_pure:
            amp = d * (self._vh @ state.data)
            p = float(np.vdot(amp, amp).real)
            if p < UNREACHABLE_P:
                return p, None
            return p, QuantumState(self._v @ (amp / math.sqrt(p)))
        rho_e = self._vh @ state.data @ self._v
        out = d[:, None] * rho_e * d.conj()[None, :]
        p = float(np.trace(out).real)
        if p < UNREACHABLE_P:
            return p, None
        rho = self._v @ (out / p) @ self._vh
        return p, QuantumState((rho + rho.conj().T) / 2)

    def apply(self, state: QuantumState) -> ModuleOutcome:
        check_same_dim(self.spec.dim, state.dim, "Hamiltonian and state")
        pc, post_c = self.branch(state, 0)
        ph, post_h = self.branch(state, 1)
        if abs(pc + ph - 1) > STRUCTURAL_TOL:
            raise AssertionError(f"branch probabilities sum to {pc + ph!r}")
        return ModuleOutcome(
            p_cool=pc,
            p_heat=ph,
            post_cool=post_c,
            post_heat=post_h,
            energy_in=self.energy(state),
            energy_cool=None if post_c is None else self.energy(post_c),
            energy_heat=None if post_h is None else self.energy(post_h),
        )


def apply_module(
    state: QuantumState, spec: SpectralDecomposition, params: CoolingParams
) -> ModuleOutcome:
    return CoolingModule(spec, params).apply(state)


def module_circuit_unitary(spec: SpectralDecomposition, params: CoolingParams) -> np.ndarray:
    """Gate-by-gate unitary of one module on ``system (x) ancilla``.

    Built from Hadamard, phase gate ``|0><0| - i e^{i gamma}|1><1|``,
    controlled-U and Hadamard, independently of the closed-form jump
    operators.  The ancilla is the fast (last) tensor factor.
    """
    d = spec.dim
    eye = np.eye(d, dtype=complex)
    had = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    phase_gate = np.diag([1, -1j * np.exp(1j * params.gamma)])
    U = evolution_operator(spec, params.t).matrix
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    cu = np.kron(eye, p0) + np.kron(U, p1)
    h = np.kron(eye, had)
    return h @ cu @ np.kron(eye, phase_gate) @ h


def bloch_vector(state: QuantumState, y_convention: str = "polarization") -> np.ndarray:
    """Bloch components (<sx>, <sy>, <sz>) of a qubit state in the computational basis.

    ``y_convention="polarization"`` follows the tomography convention with
    right-circular light ``|R> = (|0> - i|1>)/sqrt(2)``, which flips the sign
    of the y component relative to the textbook Pauli matrix
    (``y_convention="pauli"``).
    """
    if state.dim != 2:
        raise ValidationError("Bloch vector needs a qubit state")
    rho = state.density_matrix()
    sx = 2 * rho[0, 1].real
    sy = -2 * rho[0, 1].imag
    sz = (rho[0, 0] - rho[1, 1]).real
    if y_convention == "polarization":
        sy = -sy
    elif y_convention != "pauli":
        raise ValidationError(f"unknown y convention {y_convention!r}")
    return np.array([sx, sy, sz])
