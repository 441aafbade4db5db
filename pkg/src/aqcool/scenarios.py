"""Named reproduction scenarios and the checks that go with them.

Each builtin scenario returns one or more :class:`ResultTable` objects built
from the exact outcome-tree oracle.  Tables carry a provenance block (scenario
hash, master seed, package version, parameter grids) and serialize to CSV or
JSON.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import STRUCTURAL_TOL, ValidationError
from .kernel import CoolingModule, CoolingParams, bloch_vector, module_circuit_unitary
from .spectral import (
    HermitianOperator,
    QuantumState,
    SpectralDecomposition,
    dominant_eigenvector_projection,
    eigendecompose,
    fidelity_with_pure,
    load_operator,
)
from .walk import Strategy, compare_strategies, enumerate_outcome_tree, write_csv

RATIOS = ("4:1", "1:1", "1:4")
DEFAULT_THETA_DEG = tuple(range(0, 91, 10))


@dataclass(frozen=True)
class Scenario:
    name: str
    hamiltonian: str = "sigma_z"
    initial: str = "1:1"
    t: float = math.pi / 2
    theta_grid: tuple[float, ...] = tuple(math.radians(d) for d in DEFAULT_THETA_DEG)
    steps: int = 3
    strategy: str = "evaporative"
    outputs: tuple[str, ...] = ("ensemble",)

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class ResultTable:
    name: str
    columns: list[str]
    rows: list[list]
    provenance: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def where(self, **conds) -> list[dict]:
        out = []
        for r in self.rows:
            rec = dict(zip(self.columns, r))
            if all(rec[k] == v for k, v in conds.items()):
                out.append(rec)
        return out

    def to_csv(self) -> str:
        return write_csv(self.columns, self.rows)

    def to_json(self) -> str:
        return json.dumps(
            {"schema": self.name, "columns": self.columns, "rows": self.rows, "provenance": self.provenance},
            indent=2,
        )

    def write(self, out_dir: Path, fmt: str = "csv") -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = out_dir / f"{self.name}.json"
            path.write_text(self.to_json() + "\n", encoding="utf-8", newline="\n")
            return [path]
        path = out_dir / f"{self.name}.csv"
        path.write_text(self.to_csv(), encoding="utf-8", newline="\n")
        meta = out_dir / f"{self.name}.meta.json"
        meta.write_text(json.dumps(self.provenance, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
        return [path, meta]


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ValidationError(f"cannot parse amplitude {text!r}") from None


def initial_state(spec: SpectralDecomposition, initial: str) -> QuantumState:
    """Build ``alpha|e> + beta|g>`` from a population ratio ``"4:1"`` or amplitudes ``"alpha,beta"``.

    ``|e>`` and ``|g>`` are the top and bottom eigenvectors, so for sigma_x the
    same ratio lands on the rotated basis.  A comma list as long as the
    Hilbert space (dimension > 2) is read as computational-basis amplitudes.
    """
    if ":" in initial:
        try:
            pe, pg = (float(s) for s in initial.split(":"))
        except ValueError:
            raise ValidationError(f"malformed ratio {initial!r}") from None
        if pe < 0 or pg < 0 or pe + pg == 0:
            raise ValidationError(f"ratio must be non-negative and not all zero: {initial!r}")
        alpha, beta = math.sqrt(pe / (pe + pg)), math.sqrt(pg / (pe + pg))
    else:
        parts = [_parse_complex(s) for s in initial.split(",")]
        if len(parts) == spec.dim and spec.dim > 2:
            return QuantumState.pure(parts, normalize=True)
        if len(parts) != 2:
            raise ValidationError(f"expected 'alpha,beta' or a ratio, got {initial!r}")
        alpha, beta = parts
    if spec.dim != 2:
        raise ValidationError("ratio / (alpha, beta) inputs need a two-level Hamiltonian")
    e, g = spec.eigenvectors[:, 1], spec.eigenvectors[:, 0]
    return QuantumState.pure(alpha * e + beta * g, normalize=True)


def _provenance(scenario: Scenario, seed: int, **extra) -> dict:
    prov = {
        "scenario": scenario.name,
        "scenario_hash": scenario.digest(),
        "master_seed": int(seed),
        "code_version": __version__,
        "t": scenario.t,
        "theta_grid_deg": [round(math.degrees(x), 10) for x in scenario.theta_grid],
    }
    prov.update(extra)
    return prov


def _deg(theta: float) -> float:
    return round(math.degrees(theta), 10)


def _fig4a(sc: Scenario, seed: int) -> list[ResultTable]:
    rows = []
    for hname, label in (("sigma_z", "Z"), ("sigma_x", "X")):
        spec = eigendecompose(HermitianOperator.named(hname))
        for ratio in RATIOS:
            psi = initial_state(spec, ratio)
            for theta in sc.theta_grid:
                ens = enumerate_outcome_tree(psi, spec, CoolingParams(sc.t, theta), Strategy("evaporative"), sc.steps)
                for s in ens.per_step:
                    rows.append([label, ratio, _deg(theta), s.step, s.mean_energy, s.total_probability])
    cols = ["hamiltonian", "ratio", "theta_deg", "step", "mean_energy", "yield"]
    return [ResultTable(sc.name, cols, rows, _provenance(sc, seed))]


def _fig4b(sc: Scenario, seed: int) -> list[ResultTable]:
    spec = eigendecompose(HermitianOperator.named("sigma_z"))
    params = CoolingParams(sc.t, sc.theta_grid[0])
    grid = [round(0.05 * i, 10) for i in range(21)]
    rows = []
    for beta_sq in grid:
        psi = initial_state(spec, f"{1 - beta_sq}:{beta_sq}")
        last = enumerate_outcome_tree(psi, spec, params, Strategy("evaporative"), sc.steps).per_step[-1]
        rows.append([beta_sq, last.mean_energy, last.ground_probability, last.total_probability])
    cols = ["beta_sq", "mean_energy", "ground_prob", "yield"]
    return [ResultTable(sc.name, cols, rows, _provenance(sc, seed, beta_sq_grid=grid))]


def _fig4c(sc: Scenario, seed: int) -> list[ResultTable]:
    spec = eigendecompose(HermitianOperator.named("sigma_z"))
    psi = initial_state(spec, sc.initial)
    rows = []
    for theta in sc.theta_grid:
        last = enumerate_outcome_tree(psi, spec, CoolingParams(sc.t, theta), Strategy("evaporative"), sc.steps).per_step[-1]
        rows.append([_deg(theta), last.mean_energy, last.ground_probability, last.total_probability])
    cols = ["theta_deg", "mean_energy", "ground_prob", "yield"]
    return [ResultTable(sc.name, cols, rows, _provenance(sc, seed))]


def _fig5(sc: Scenario, seed: int) -> list[ResultTable]:
    spec = eigendecompose(HermitianOperator.named(sc.hamiltonian))
    psi = initial_state(spec, sc.initial)
    rows = []
    for theta in sc.theta_grid:
        params = CoolingParams(sc.t, theta)
        evap = enumerate_outcome_tree(psi, spec, params, Strategy("evaporative"), sc.steps)
        rec = enumerate_outcome_tree(psi, spec, params, Strategy("recycling"), sc.steps)
        for a, b in zip(evap.per_step, rec.per_step):
            rows.append([
                _deg(theta), a.step, a.total_probability, b.total_probability,
                a.mean_energy, b.mean_energy, b.mean_energy - a.mean_energy,
            ])
    cols = ["theta_deg", "step", "yield_evap", "yield_recycle", "mean_energy_evap",
            "mean_energy_recycle", "delta_energy"]
    return [ResultTable(sc.name, cols, rows, _provenance(sc, seed))]


def _figS1(sc: Scenario, seed: int) -> list[ResultTable]:
    spec = eigendecompose(HermitianOperator.named("sigma_z"))
    rows = []
    for ratio in RATIOS:
        psi = initial_state(spec, ratio)
        for theta in sc.theta_grid:
            module = CoolingModule(spec, CoolingParams(sc.t, theta))
            out = module.apply(psi)
            post = out.post_cool
            if post is None:
                rows.append([ratio, _deg(theta), out.p_cool] + [math.nan] * 5)
                continue
            gp = float(spec.populations(post)[0])
            bx, by, bz = bloch_vector(post)
            rows.append([ratio, _deg(theta), out.p_cool, out.energy_cool, gp, bx, by, bz])
    cols = ["ratio", "theta_deg", "p_cool", "energy_cool", "ground_prob_cool", "bloch_x", "bloch_y", "bloch_z"]
    return [ResultTable(sc.name, cols, rows, _provenance(sc, seed, bloch_y_convention="polarization"))]


def _figS4(sc: Scenario, seed: int) -> list[ResultTable]:
    spec = eigendecompose(HermitianOperator.named("sigma_z"))
    params = CoolingParams(sc.t, sc.theta_grid[0])
    rows = []
    for ratio in RATIOS:
        psi = initial_state(spec, ratio)
        for c in compare_strategies(psi, spec, params, sc.steps):
            rows.append([ratio, c.step, c.yield_evaporative, c.energy_evaporative, c.energy_recycling, c.delta_energy])
    cols = ["ratio", "step", "yield_evap", "mean_energy_evap", "mean_energy_recycle", "delta_energy"]
    return [ResultTable(sc.name, cols, rows, _provenance(sc, seed))]


_TEN = (math.radians(10),)

BUILTIN: dict[str, tuple[Scenario, object]] = {
    "fig4a_map": (Scenario("fig4a_map", steps=3), _fig4a),
    "fig4b_beta_sweep": (Scenario("fig4b_beta_sweep", theta_grid=_TEN, steps=3), _fig4b),
    "fig4c_theta_sweep": (
        Scenario("fig4c_theta_sweep", initial="4:1", steps=3,
                 theta_grid=tuple(math.radians(d) for d in range(0, 91, 5))),
        _fig4c,
    ),
    "fig5_tradeoff": (Scenario("fig5_tradeoff", initial="1:1", steps=4, strategy="both"), _fig5),
    "figS1_single_module": (Scenario("figS1_single_module", steps=1, outputs=("module",)), _figS1),
    "figS4_ten_steps": (Scenario("figS4_ten_steps", theta_grid=_TEN, steps=10, strategy="both"), _figS4),
}


def _custom(sc: Scenario, seed: int) -> list[ResultTable]:
    spec = eigendecompose(load_operator(sc.hamiltonian))
    psi = initial_state(spec, sc.initial)
    tables = []
    for output in sc.outputs:
        rows = []
        if output == "ensemble":
            cols = ["theta_deg", "step", "yield", "mean_energy", "ground_prob"]
            strategy = Strategy("recycling" if sc.strategy == "recycling" else "evaporative")
            for theta in sc.theta_grid:
                ens = enumerate_outcome_tree(psi, spec, CoolingParams(sc.t, theta), strategy, sc.steps)
                rows += [[_deg(theta), s.step, s.total_probability, s.mean_energy, s.ground_probability]
                         for s in ens.per_step]
        elif output == "compare":
            cols = ["theta_deg", "step", "mean_energy_evap", "mean_energy_recycle", "delta_energy", "yield_evap"]
            for theta in sc.theta_grid:
                rows += [[_deg(theta), c.step, c.energy_evaporative, c.energy_recycling, c.delta_energy,
                          c.yield_evaporative]
                         for c in compare_strategies(psi, spec, CoolingParams(sc.t, theta), sc.steps)]
        elif output == "module":
            cols = ["theta_deg", "p_cool", "energy_in", "energy_cool", "energy_heat"]
            for theta in sc.theta_grid:
                o = CoolingModule(spec, CoolingParams(sc.t, theta)).apply(psi)
                nan = math.nan
                rows.append([_deg(theta), o.p_cool, o.energy_in,
                             nan if o.energy_cool is None else o.energy_cool,
                             nan if o.energy_heat is None else o.energy_heat])
        else:
            raise ValidationError(f"unknown output table {output!r}")
        tables.append(ResultTable(f"{sc.name}_{output}", cols, rows, _provenance(sc, seed)))
    return tables


def run_scenario(scenario: Scenario | str, seed: int = 0) -> list[ResultTable]:
    """Run a builtin scenario by name, or a custom :class:`Scenario`."""
    if isinstance(scenario, str):
        if scenario not in BUILTIN:
            raise ValidationError(f"unknown scenario {scenario!r}; choose from {sorted(BUILTIN)}")
        sc, fn = BUILTIN[scenario]
        return fn(sc, seed)
    if scenario.name in BUILTIN:
        return BUILTIN[scenario.name][1](scenario, seed)
    return _custom(scenario, seed)


_CONFIG_KEYS = {"name", "hamiltonian", "initial", "t", "theta_grid", "theta_grid_deg", "steps", "strategy", "outputs"}


def load_config(path: str | Path) -> Scenario:
    """Parse ``key = value`` lines (``#`` comments allowed) into a Scenario.

    ``theta_grid`` is in radians, ``theta_grid_deg`` in degrees; list values
    are comma separated.  Unknown keys are rejected.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)", line)
        if not m:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, val = m.group(1), m.group(2).strip()
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val

    kwargs: dict = {"name": values.get("name", "custom")}
    try:
        if "hamiltonian" in values:
            kwargs["hamiltonian"] = values["hamiltonian"]
        if "initial" in values:
            kwargs["initial"] = values["initial"]
        if "t" in values:
            kwargs["t"] = float(values["t"])
        if "theta_grid" in values:
            kwargs["theta_grid"] = tuple(float(v) for v in values["theta_grid"].split(","))
        if "theta_grid_deg" in values:
            kwargs["theta_grid"] = tuple(math.radians(float(v)) for v in values["theta_grid_deg"].split(","))
        if "steps" in values:
            kwargs["steps"] = int(values["steps"])
        if "strategy" in values:
            kwargs["strategy"] = values["strategy"]
        if "outputs" in values:
            kwargs["outputs"] = tuple(v.strip() for v in values["outputs"].split(","))
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if kwargs.get("strategy", "evaporative") not in ("evaporative", "recycling", "both"):
        raise ValidationError(f"unknown strategy {kwargs['strategy']!r}")
    return Scenario(**kwargs)


def revised_fidelity_report(rho: QuantumState, theory: QuantumState) -> dict:
    """Plain fidelity and the fidelity of the dominant eigenvector of ``rho``.

    With a degenerate top eigenspace every candidate's fidelity is listed.
    """
    plain = fidelity_with_pure(rho, theory)
    dom = dominant_eigenvector_projection(rho)
    cand = [abs(np.vdot(theory.data, c.data)) ** 2 for c in dom.candidates]
    return {
        "fidelity": plain,
        "revised_fidelity": float(cand[0]),
        "degenerate": dom.degenerate,
        "candidate_fidelities": [float(c) for c in cand],
    }


def optical_path_state(alpha: complex, beta: complex, theta: float) -> np.ndarray:
    """Polarization (x) path amplitudes after the interferometric module.

    Step sequence: polarizing splitter as a CNOT (polarization controls
    path), a path-dependent polarization unitary with
    ``U0|0> = U1|1> = a|0> + b|1>``, recombination on the same splitter, and a
    polarization flip on path 1.  ``a = (1 + i e^{i theta})/2``,
    ``b = (1 - i e^{i theta})/2``.
    """
    a = (1 + 1j * np.exp(1j * theta)) / 2
    b = (1 - 1j * np.exp(1j * theta)) / 2
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    eye = np.eye(2, dtype=complex)

    splitter = np.kron(p0, eye) + np.kron(p1, x)
    u0 = np.array([[a, -np.conj(b)], [b, np.conj(a)]])
    u1 = np.array([[-np.conj(b), a], [np.conj(a), b]])
    per_path = np.kron(u0, p0) + np.kron(u1, p1)
    flip = np.kron(eye, p0) + np.kron(x, p1)

    psi = np.kron(np.array([alpha, beta], dtype=complex), np.array([1, 0], dtype=complex))
    return flip @ splitter @ per_path @ splitter @ psi


def optical_path_equivalence(alpha: complex, beta: complex, theta: float) -> float:
    """Max amplitude difference between the optical step sequence and the gate circuit.

    The circuit side runs H = sigma_z, t = pi/2, gamma = theta - pi/2 on
    ``(alpha|0> + beta|1>)|0>``.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > STRUCTURAL_TOL:
        raise ValidationError("|alpha|^2 + |beta|^2 must equal 1")
    spec = eigendecompose(HermitianOperator.named("sigma_z"))
    circuit = module_circuit_unitary(spec, CoolingParams(math.pi / 2, theta))
    psi = np.kron(np.array([alpha, beta], dtype=complex), np.array([1, 0], dtype=complex))
    return float(np.abs(optical_path_state(alpha, beta, theta) - circuit @ psi).max())


def random_equivalence_sweep(n: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        worst = max(worst, optical_path_equivalence(v[0], v[1], rng.uniform(-np.pi, np.pi)))
    return worst


def check_scenario(name: str, tables: list[ResultTable], tol: float = 1e-12) -> list[tuple[str, bool]]:
    """Qualitative claims attached to each builtin scenario, as (label, passed) pairs."""
    checks: list[tuple[str, bool]] = []
    t = tables[0]
    if name == "fig4a_map":
        zero = t.where(theta_deg=0.0)
        by_combo: dict = {}
        for r in zero:
            by_combo.setdefault((r["hamiltonian"], r["ratio"]), []).append(r["mean_energy"])
        checks.append(("theta=0 energy constant", all(np.ptp(v) <= tol for v in by_combo.values())))
        z = [r["mean_energy"] for r in t.where(hamiltonian="Z")]
        x = [r["mean_energy"] for r in t.where(hamiltonian="X")]
        checks.append(("sigma_z and sigma_x maps identical", np.allclose(z, x, rtol=0, atol=tol)))
        step0 = t.where(step=0)
        checks.append(("step 0 is the input energy", all(
            abs(r["mean_energy"] - step0[0]["mean_energy"]) <= tol
            for r in step0 if (r["hamiltonian"], r["ratio"]) == (step0[0]["hamiltonian"], step0[0]["ratio"])
        )))
    elif name in ("fig5_tradeoff", "figS4_ten_steps"):
        delta = t.column("delta_energy")
        checks.append(("evaporative energy <= recycling", bool(np.all(delta >= -tol))))
        key = "theta_deg" if name == "fig5_tradeoff" else "ratio"
        groups: dict = {}
        for r in t.rows:
            groups.setdefault(r[t.columns.index(key)], []).append(r[t.columns.index("yield_evap")])
        checks.append(("evaporative yield non-increasing",
                       all(np.all(np.diff(v) <= tol) for v in groups.values())))
        if "yield_recycle" in t.columns:
            checks.append(("recycling yield is 1", bool(np.allclose(t.column("yield_recycle"), 1, atol=tol))))
    elif name == "figS1_single_module":
        ok = True
        for r in t.where(ratio="1:1"):
            th = math.radians(r["theta_deg"])
            ok &= abs(r["bloch_y"] - math.cos(th)) < 1e-10 and abs(r["bloch_z"] + math.sin(th)) < 1e-10
        checks.append(("single-module Bloch angles", bool(ok)))
    elif name in ("fig4b_beta_sweep", "fig4c_theta_sweep"):
        e = t.column("mean_energy")
        checks.append(("mean energy decreasing along sweep", bool(np.all(np.diff(e) <= tol))))
    return checks
