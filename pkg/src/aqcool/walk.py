"""Random-walk feedback control over repeated cooling modules.

Ancilla outcome 0 moves the walker up by one, outcome 1 moves it down.  When
the walker reaches ``reset_threshold`` the system is either discarded
(evaporative) or re-prepared in the initial state with ``x = 0`` (recycling).

Two ways of running the same process are provided: a seeded sampler
(:func:`run_trajectory`, :func:`sample_trajectories`) and an exact
propagation of the outcome tree (:func:`enumerate_outcome_tree`).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from ._validation import ValidationError, check_positive_int
from .kernel import UNREACHABLE_P, CoolingModule, CoolingParams
from .spectral import QuantumState, SpectralDecomposition

StrategyKind = Literal["evaporative", "recycling"]


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind = "evaporative"
    reset_threshold: int = -1

    def __post_init__(self):
        if self.kind not in ("evaporative", "recycling"):
            raise ValidationError(f"unknown strategy {self.kind!r}")
        if self.reset_threshold >= 0:
            raise ValidationError("reset_threshold must be negative")


@dataclass(frozen=True)
class Walker:
    x: int
    state: QuantumState
    steps_taken: int = 0
    alive: bool = True
    resets: int = 0
    outcome_log: tuple[int, ...] = ()


def step_walker(w: Walker, outcome: int) -> Walker:
    """Record an ancilla outcome: 0 -> x + 1, 1 -> x - 1.  No boundary handling."""
    if not w.alive:
        raise ValidationError("cannot step a walker that has been discarded")
    if outcome not in (0, 1):
        raise ValidationError(f"outcome must be 0 or 1, got {outcome!r}")
    return replace(
        w,
        x=w.x + (1 if outcome == 0 else -1),
        steps_taken=w.steps_taken + 1,
        outcome_log=w.outcome_log + (outcome,),
    )


def apply_boundary(w: Walker, strategy: Strategy, initial: QuantumState) -> Walker:
    if w.x > strategy.reset_threshold or not w.alive:
        return w
    if strategy.kind == "evaporative":
        return replace(w, alive=False)
    return replace(w, x=0, state=initial, resets=w.resets + 1)


@dataclass(frozen=True)
class StepRecord:
    step: int
    outcome_bit: int
    x: int
    energy: float
    alive: bool
    resets: int


@dataclass(frozen=True)
class Trajectory:
    walker: Walker
    records: tuple[StepRecord, ...]
    initial_energy: float
    strategy: Strategy

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])


def _rng(seed: int, index: int | None = None) -> np.random.Generator:
    key = [int(seed)] if index is None else [int(seed), int(index)]
    return np.random.default_rng(key)


def run_trajectory(
    initial: QuantumState,
    spec: SpectralDecomposition,
    params: CoolingParams,
    strategy: Strategy,
    n_steps: int,
    seed: int,
    *,
    module: CoolingModule | None = None,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Sample one feedback trajectory.

    Each step draws one uniform variate; outcome 0 is chosen when it falls
    below ``p_cool``.  An evaporative walker stops at the step it is
    discarded, and that final record carries the rejected state's energy.
    """
    n_steps = check_positive_int(n_steps, "n_steps")
    module = module or CoolingModule(spec, params)
    rng = rng or _rng(seed)
    u = rng.random(n_steps)
    if initial.is_pure:
        return _pure_trajectory(initial, module, strategy, u)
    w = Walker(0, initial)
    records = []
    for k in range(n_steps):
        p_cool, post_cool = module.branch(w.state, 0)
        outcome = 0 if u[k] < p_cool and post_cool is not None else 1
        if outcome == 0:
            post = post_cool
        else:
            post = module.branch(w.state, 1)[1]
            if post is None:  # heat branch below the unreachable cutoff
                outcome, post = 0, post_cool
        w = replace(step_walker(w, outcome), state=post)
        w = apply_boundary(w, strategy, initial)
        energy = module.energy(w.state)
        records.append(StepRecord(k + 1, outcome, w.x, energy, w.alive, w.resets))
        if not w.alive:
            break
    return Trajectory(w, tuple(records), module.energy(initial), strategy)


def _pure_trajectory(initial: QuantumState, module: CoolingModule, strategy: Strategy, u: np.ndarray) -> Trajectory:
    """Same process as the generic loop, carried as eigenbasis amplitudes.

    Skips per-step state validation; the walker state is rebuilt once at the end.
    """
    energies = module.spec.energies
    c_init = module._vh @ initial.data
    c = c_init
    x, resets, alive, log = 0, 0, True, []
    records = []
    for k in range(len(u)):
        amp = module._diag_cool * c
        p_cool = float(np.vdot(amp, amp).real)
        outcome = 0
        if not u[k] < p_cool or p_cool < UNREACHABLE_P:
            heat = module._diag_heat * c
            p_heat = float(np.vdot(heat, heat).real)
            if p_heat >= UNREACHABLE_P:
                outcome, amp, p = 1, heat, p_heat
        if outcome == 0:
            p = p_cool
        c = amp / math.sqrt(p)
        x += 1 if outcome == 0 else -1
        log.append(outcome)
        if x <= strategy.reset_threshold:
            if strategy.kind == "evaporative":
                alive = False
            else:
                x, c, resets = 0, c_init, resets + 1
        energy = float(np.abs(c) ** 2 @ energies)
        records.append(StepRecord(k + 1, outcome, x, energy, alive, resets))
        if not alive:
            break
    walker = Walker(x, QuantumState(module._v @ c), len(records), alive, resets, tuple(log))
    return Trajectory(walker, tuple(records), float(np.abs(c_init) ** 2 @ energies), strategy)


def sample_trajectories(
    initial: QuantumState,
    spec: SpectralDecomposition,
    params: CoolingParams,
    strategy: Strategy,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    n_jobs: int = 1,
) -> list[Trajectory]:
    """Independent trajectories, the i-th seeded from ``(master_seed, i)``."""
    module = CoolingModule(spec, params)

    def one(i: int) -> Trajectory:
        return run_trajectory(
            initial, spec, params, strategy, n_steps, master_seed,
            module=module, rng=_rng(master_seed, i),
        )

    if n_jobs <= 1:
        return [one(i) for i in range(n_trajectories)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(one, range(n_trajectories)))


@dataclass(frozen=True)
class EnsembleStep:
    step: int
    total_probability: float
    mean_energy: float
    ground_probability: float
    position_distribution: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ExactEnsemble:
    strategy: Strategy
    per_step: tuple[EnsembleStep, ...]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.per_step])

    def to_csv(self) -> str:
        return ensemble_csv(self.per_step)


def _ground_probability(spec: SpectralDecomposition, state: QuantumState, proj: np.ndarray) -> float:
    if state.is_pure:
        return float(np.vdot(state.data, proj @ state.data).real)
    return float(np.trace(proj @ state.data).real)


def enumerate_outcome_tree(
    initial: QuantumState,
    spec: SpectralDecomposition,
    params: CoolingParams,
    strategy: Strategy,
    n_steps: int,
) -> ExactEnsemble:
    """Exact per-step statistics of the feedback process, no sampling.

    Branches are merged on the counts ``(n0, n1)`` of cooling and heating
    outcomes since the last reset.  Both jump operators are functions of H
    and therefore commute, so these counts fix the walker position
    (``n0 - n1``) and the conditional state; the number of live classes is
    O(steps^2).  Row 0 describes the input.
    """
    if n_steps < 0:
        raise ValidationError("n_steps must be non-negative")
    module = CoolingModule(spec, params)
    proj = spec.ground_projector()
    thr = strategy.reset_threshold

    # key -> [probability mass, state]
    classes: dict[tuple[int, int], list] = {(0, 0): [1.0, initial]}
    steps = [_summarize(0, classes, module, spec, proj)]
    for k in range(1, n_steps + 1):
        nxt: dict[tuple[int, int], list] = {}
        for (n0, n1), (mass, state) in classes.items():
            for outcome in (0, 1):
                p, post = module.branch(state, outcome)
                if post is None:
                    continue
                key = (n0 + 1, n1) if outcome == 0 else (n0, n1 + 1)
                if key[0] - key[1] <= thr:
                    if strategy.kind == "evaporative":
                        continue
                    key, post = (0, 0), initial
                _merge(nxt, key, mass * p, post)
        classes = nxt
        steps.append(_summarize(k, classes, module, spec, proj))
    return ExactEnsemble(strategy, tuple(steps))


def _merge(classes: dict, key, mass: float, state: QuantumState) -> None:
    slot = classes.get(key)
    if slot is None:
        classes[key] = [mass, state]
        return
    a, b = slot[1].data, state.data
    if np.abs(a - b).max() > 1e-10:
        raise AssertionError(f"merged branches {key} carry different states")
    slot[0] += mass


def _summarize(step, classes, module, spec, proj) -> EnsembleStep:
    masses = [m for m, _ in classes.values()]
    total = math.fsum(masses)
    positions: dict[int, float] = {}
    for (n0, n1), (m, _) in classes.items():
        positions[n0 - n1] = positions.get(n0 - n1, 0.0) + m
    if total <= 0:
        return EnsembleStep(step, 0.0, math.nan, math.nan, positions)
    e = math.fsum(m * module.energy(s) for m, s in classes.values()) / total
    g = math.fsum(m * _ground_probability(spec, s, proj) for m, s in classes.values()) / total
    return EnsembleStep(step, total, e, g, dict(sorted(positions.items())))


@dataclass(frozen=True)
class StrategyComparison:
    step: int
    energy_evaporative: float
    energy_recycling: float
    delta_energy: float
    yield_evaporative: float


def compare_strategies(
    initial: QuantumState,
    spec: SpectralDecomposition,
    params: CoolingParams,
    n_steps: int,
    reset_threshold: int = -1,
) -> list[StrategyComparison]:
    """Per-step evaporative vs recycling energies; ``delta_energy = E_recycle - E_evap``."""
    evap = enumerate_outcome_tree(initial, spec, params, Strategy("evaporative", reset_threshold), n_steps)
    rec = enumerate_outcome_tree(initial, spec, params, Strategy("recycling", reset_threshold), n_steps)
    rows = []
    for a, b in zip(evap.per_step, rec.per_step):
        rows.append(
            StrategyComparison(a.step, a.mean_energy, b.mean_energy, b.mean_energy - a.mean_energy, a.total_probability)
        )
    return rows


def sampled_ensemble(trajectories: list[Trajectory], n_steps: int) -> list[dict]:
    """Monte Carlo per-step statistics matching the exact ensemble columns.

    ``yield`` is the surviving fraction; mean energy and its standard error
    are taken over surviving walkers.
    """
    out = []
    n = len(trajectories)
    e0 = trajectories[0].initial_energy if trajectories else math.nan
    out.append({"step": 0, "yield": 1.0, "mean_energy": e0, "stderr": 0.0, "count": n})
    for k in range(1, n_steps + 1):
        vals = [
            t.records[k - 1].energy
            for t in trajectories
            if len(t.records) >= k and t.records[k - 1].alive
        ]
        m = len(vals)
        if m == 0:
            out.append({"step": k, "yield": 0.0, "mean_energy": math.nan, "stderr": math.nan, "count": 0})
            continue
        arr = np.array(vals)
        se = float(arr.std(ddof=1) / math.sqrt(m)) if m > 1 else math.nan
        out.append({"step": k, "yield": m / n, "mean_energy": math.fsum(vals) / m, "stderr": se, "count": m})
    return out


def fmt(value) -> str:
    """CSV cell formatting: integers verbatim, floats with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def ensemble_csv(per_step) -> str:
    return write_csv(
        ["step", "yield", "mean_energy", "ground_prob"],
        ((s.step, s.total_probability, s.mean_energy, s.ground_probability) for s in per_step),
    )


def trajectories_csv(trajectories: list[Trajectory]) -> str:
    """Step logs; the last column is ``alive`` (evaporative) or ``resets`` (recycling).

    A ``trajectory`` index column is prepended when more than one log is written.
    """
    if not trajectories:
        raise ValidationError("no trajectories to export")
    recycling = trajectories[0].strategy.kind == "recycling"
    last = "resets" if recycling else "alive"
    multi = len(trajectories) > 1
    header = (["trajectory"] if multi else []) + ["step", "outcome_bit", "x", "energy", last]

    def rows():
        for i, t in enumerate(trajectories):
            for r in t.records:
                row = [r.step, r.outcome_bit, r.x, r.energy, r.resets if recycling else r.alive]
                yield ([i] if multi else []) + row

    return write_csv(header, rows())
