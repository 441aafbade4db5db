"""Command-line front end.

    aqcool module    --hamiltonian sigma_z --theta-deg 10 --state 1:1
    aqcool walk      --strategy recycling --steps 3 --trajectories 1000 --seed 7
    aqcool enumerate --strategy both --steps 10
    aqcool mc        --gap 0.02 --p 0.2 --samples 10000 --seed 7
    aqcool repro     fig4a_map --out results/
    aqcool equiv     --random 1000

Exit status: 0 on success, 1 on invalid input, 2 when ``--check`` finds a
failed acceptance check.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from ._validation import ValidationError
from .kernel import CoolingModule, CoolingParams
from .scaling import (
    SWEEP_HEADER,
    MCConfig,
    TwoLevelModel,
    fit_c1,
    run_optimal_refresh_mc,
    simulate_bounded,
)
from .scenarios import (
    BUILTIN,
    Scenario,
    check_scenario,
    initial_state,
    load_config,
    optical_path_equivalence,
    random_equivalence_sweep,
    run_scenario,
)
from .spectral import eigendecompose, load_operator
from .walk import (
    Strategy,
    ensemble_csv,
    enumerate_outcome_tree,
    compare_strategies,
    sample_trajectories,
    sampled_ensemble,
    trajectories_csv,
    write_csv,
)

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, help="output directory for data files")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", type=Path, help="key = value scenario file")
    p.add_argument("--check", action="store_true", help="exit 2 if acceptance checks fail")
    return p


def _system_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hamiltonian", help="builtin name (sigma_z, sigma_x) or JSON matrix file")
    p.add_argument("--state", help="population ratio like 4:1 or amplitudes alpha,beta")
    p.add_argument("--theta-deg", type=float, help="energy bias angle in degrees")
    p.add_argument("--t", type=float, help="evolution time (default pi/2)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aqcool", description="Algorithmic quantum cooling simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("module", parents=[common], help="apply one cooling module")
    _system_args(p)

    p = sub.add_parser("walk", parents=[common], help="sample feedback trajectories")
    _system_args(p)
    p.add_argument("--strategy", choices=("evaporative", "recycling"))
    p.add_argument("--steps", type=int)
    p.add_argument("--threshold", type=int, default=-1)
    p.add_argument("--trajectories", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("enumerate", parents=[common], help="exact outcome-tree tables")
    _system_args(p)
    p.add_argument("--strategy", choices=("evaporative", "recycling", "both"))
    p.add_argument("--steps", type=int)
    p.add_argument("--threshold", type=int, default=-1)

    p = sub.add_parser("mc", parents=[common], help="two-level scaling Monte Carlo")
    p.add_argument("--gap", type=float, default=0.02)
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--c1", type=float, default=2.7)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--assumed-gap", type=float)
    p.add_argument("--sweep-assumed", type=_floats, help="comma list of assumed gaps")
    p.add_argument("--reflect", type=int, default=0)
    p.add_argument("--filter", action="store_true", help="drop bound-reaching runs from the mean")
    p.add_argument("--refresh", action="store_true", help="optimal refresh schedule + c1 fit")
    p.add_argument("--gaps", type=_floats, default=[0.01, 0.02])
    p.add_argument("--ps", type=_floats, default=[0.1, 0.2, 0.4])
    p.add_argument("--target", type=float, default=0.99)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("repro", parents=[common], help="reproduce a named figure scenario")
    p.add_argument("scenario", nargs="?", help=f"one of {', '.join(sorted(BUILTIN))}")

    p = sub.add_parser("equiv", parents=[common], help="optical-path vs circuit equivalence")
    p.add_argument("--alpha", type=complex, default=1)
    p.add_argument("--beta", type=complex, default=0)
    p.add_argument("--theta-deg", type=float, default=30.0)
    p.add_argument("--random", type=int, help="randomized sweep size")
    return parser


def _scenario_defaults(args) -> Scenario:
    return load_config(args.config) if args.config else Scenario("cli")


def _resolve(args, sc: Scenario):
    spec = eigendecompose(load_operator(args.hamiltonian or sc.hamiltonian))
    state = initial_state(spec, args.state or sc.initial)
    t = sc.t if args.t is None else args.t
    if args.theta_deg is not None:
        theta = math.radians(args.theta_deg)
    elif args.config:
        theta = sc.theta_grid[0]
    else:
        theta = math.radians(10)
    return spec, state, CoolingParams(t, theta)


def _emit(payload: dict, args, stem: str) -> None:
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{stem}.json").write_text(text + "\n", encoding="utf-8", newline="\n")


def _write_text(args, name: str, text: str) -> None:
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / name).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_module(args) -> int:
    sc = _scenario_defaults(args)
    spec, state, params = _resolve(args, sc)
    out = CoolingModule(spec, params).apply(state)
    _emit(out.to_dict(), args, "module")
    if args.check:
        return EXIT_OK if abs(out.p_cool + out.p_heat - 1) < 1e-10 else EXIT_CHECK
    return EXIT_OK


def cmd_walk(args) -> int:
    sc = _scenario_defaults(args)
    spec, state, params = _resolve(args, sc)
    kind = args.strategy or (sc.strategy if sc.strategy != "both" else "evaporative")
    steps = args.steps or sc.steps
    strategy = Strategy(kind, args.threshold)
    trajs = sample_trajectories(state, spec, params, strategy, steps, args.trajectories, args.seed, args.jobs)
    ens = sampled_ensemble(trajs, steps)
    if args.format == "json":
        _emit({"strategy": kind, "seed": args.seed, "trajectories": args.trajectories, "ensemble": ens}, args, "walk")
    else:
        header = ["step", "yield", "mean_energy", "stderr", "count"]
        summary = write_csv(header, ([r[h] for h in header] for r in ens))
        if args.out:
            _write_text(args, "walk_trajectories.csv", trajectories_csv(trajs))
        _write_text(args, "walk_ensemble.csv", summary)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    sc = _scenario_defaults(args)
    spec, state, params = _resolve(args, sc)
    kind = args.strategy or sc.strategy
    steps = sc.steps if args.steps is None else args.steps
    checks = []
    if kind == "both":
        rows = compare_strategies(state, spec, params, steps, args.threshold)
        header = ["step", "E_evap", "E_recycle", "delta_E", "yield_evap"]
        body = [[r.step, r.energy_evaporative, r.energy_recycling, r.delta_energy, r.yield_evaporative] for r in rows]
        if args.format == "json":
            _emit({"columns": header, "rows": body, "seed": args.seed}, args, "enumerate_compare")
        else:
            _write_text(args, "enumerate_compare.csv", write_csv(header, body))
        checks.append(all(r.delta_energy >= -1e-12 for r in rows))
    else:
        ens = enumerate_outcome_tree(state, spec, params, Strategy(kind, args.threshold), steps)
        if args.format == "json":
            payload = [
                {"step": s.step, "yield": s.total_probability, "mean_energy": s.mean_energy,
                 "ground_prob": s.ground_probability,
                 "positions": {str(k): v for k, v in s.position_distribution.items()}}
                for s in ens.per_step
            ]
            _emit({"strategy": kind, "seed": args.seed, "per_step": payload}, args, f"enumerate_{kind}")
        else:
            _write_text(args, f"enumerate_{kind}.csv", ensemble_csv(ens.per_step))
        if kind == "recycling":
            checks.append(all(abs(s.total_probability - 1) < 1e-12 for s in ens.per_step))
    return EXIT_CHECK if args.check and not all(checks) else EXIT_OK


def cmd_mc(args) -> int:
    if args.refresh:
        results = []
        rows = []
        for gap in args.gaps:
            for p in args.ps:
                r = run_optimal_refresh_mc(TwoLevelModel.from_gap(gap, p, args.t, args.gamma),
                                           args.samples, args.seed, args.target, args.jobs)
                results.append(r)
                rows.append([gap, args.t, p, r.mean, r.stderr, r.scale, r.c1, args.samples, args.seed])
        fit = fit_c1(results)
        header = ["gap", "t", "p", "mean_steps", "stderr", "scale", "cell_c1", "n_samples", "seed"]
        if args.out:
            _write_text(args, "mc_refresh.csv", write_csv(header, rows))
        _emit({"c1": fit.c1, "cell_c1": fit.cell_c1, "max_relative_deviation": fit.max_relative_deviation,
               "target": args.target, "seed": args.seed}, args, "mc_refresh")
        return EXIT_CHECK if args.check and fit.max_relative_deviation > 0.3 else EXIT_OK

    model = TwoLevelModel.from_gap(args.gap, args.p, args.t, args.gamma)
    base = MCConfig(model, args.samples, args.seed, args.c1, args.reflect, args.filter, args.assumed_gap, args.jobs)
    if args.sweep_assumed:
        rows = []
        summaries = []
        for assumed in args.sweep_assumed:
            s = simulate_bounded(replace(base, assumed_gap=assumed)).summary()
            summaries.append(s.to_dict())
            rows.append([args.gap, assumed] + s.csv_row()[1:])
        header = ["true_gap", "assumed_gap"] + SWEEP_HEADER[1:]
        if args.out:
            _write_text(args, "mc_mismatch.csv", write_csv(header, rows))
        _emit({"runs": summaries}, args, "mc_mismatch")
        return EXIT_OK

    runs = simulate_bounded(base)
    s = runs.summary()
    payload = s.to_dict()
    payload["fraction_bound"] = s.fraction_reached_bound
    payload["mean_fidelity_filtered"] = runs.summary(True).mean_fidelity
    if args.out:
        _write_text(args, "mc.csv", write_csv(SWEEP_HEADER, [s.csv_row()]))
    _emit(payload, args, "mc")
    if args.check:
        published = (args.p == 0.2 and args.gamma == 0 and args.t == 1 and args.assumed_gap is None
                     and args.reflect == 0 and args.c1 == 2.7 and not args.filter)
        ok = abs(s.error_bar - 1.96 * s.sample_std / math.sqrt(s.n_counted)) < 1e-15
        if published:
            ok &= abs(s.mean_fidelity - 0.76) <= 0.03 and abs(s.fraction_reached_bound - 0.20) <= 0.05
        return EXIT_OK if ok else EXIT_CHECK
    return EXIT_OK


def cmd_repro(args) -> int:
    if args.config:
        sc = load_config(args.config)
        tables = run_scenario(sc, args.seed)
        name = sc.name
    elif args.scenario:
        tables = run_scenario(args.scenario, args.seed)
        name = args.scenario
    else:
        raise ValidationError("repro needs a scenario name or --config")
    out = args.out or Path(".")
    written = []
    for t in tables:
        written += [str(p) for p in t.write(out, args.format)]
    checks = check_scenario(name, tables)
    print(json.dumps({"written": written, "checks": dict(checks)}, indent=2))
    return EXIT_CHECK if args.check and not all(ok for _, ok in checks) else EXIT_OK


def cmd_equiv(args) -> int:
    if args.random:
        resid = random_equivalence_sweep(args.random, args.seed)
        payload = {"samples": args.random, "seed": args.seed, "max_residual": resid}
    else:
        resid = optical_path_equivalence(args.alpha, args.beta, math.radians(args.theta_deg))
        payload = {"alpha": str(args.alpha), "beta": str(args.beta), "theta_deg": args.theta_deg,
                   "max_residual": resid}
    _emit(payload, args, "equiv")
    return EXIT_CHECK if args.check and resid >= 1e-12 else EXIT_OK


COMMANDS = {
    "module": cmd_module,
    "walk": cmd_walk,
    "enumerate": cmd_enumerate,
    "mc": cmd_mc,
    "repro": cmd_repro,
    "equiv": cmd_equiv,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"aqcool: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
