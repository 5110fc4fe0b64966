"""Command-line entry point.

Subcommands: run, sweep, validate, explain, pressure-table, fixtures.
stdout carries data and one-line summaries; diagnostics go to stderr.
Exit codes: 0 success, 1 validation failure, 2 I/O or usage failure.
All outputs are deterministic: identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import List, Mapping, Optional

import numpy as np

from .control import decide_all, explain_junction, observe
from .dynamics import QueueState, sample_arrivals, step
from .engine import (
    CONTROLLER_PRESETS,
    Scenario,
    run as run_scenario,
    sweep as run_sweep,
    sweep_csv,
    trace_csv,
    validate_scenario,
)
from .errors import ConfigurationError
from .pressure import PressureFunction
from .scenario import canonical_fixtures, parse_scenario

ENV_OUT_DIR = "BPSIM_OUT_DIR"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _out_base() -> Path:
    return Path(os.environ.get(ENV_OUT_DIR, "."))


def _resolve_out(explicit: Optional[str], default_name: str) -> Path:
    path = Path(explicit) if explicit else _out_base() / default_name
    return path


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as err:
        raise _CliError(EXIT_IO, f"cannot write {path}: {err}")


def _load_scenario(ref: str) -> Scenario:
    if ref.startswith("fixtures/"):
        name = ref[len("fixtures/") :]
        fixtures = canonical_fixtures()
        if name not in fixtures:
            raise _CliError(
                EXIT_IO, f"no built-in fixture {name!r}; have {sorted(fixtures)}"
            )
        text = fixtures[name]
    else:
        try:
            text = Path(ref).read_text()
        except OSError as err:
            raise _CliError(EXIT_IO, f"cannot read {ref}: {err}")
    result = parse_scenario(text)
    if not result.ok:
        detail = "\n".join(str(issue) for issue in result.issues)
        raise _CliError(EXIT_INVALID, f"scenario {ref} is invalid:\n{detail}")
    return result.document.scenario


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    if getattr(args, "controller", None):
        scenario = scenario.with_controller(args.controller)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "horizon", None) is not None:
        changes["horizon"] = args.horizon
    if changes:
        scenario = dataclasses.replace(scenario, **changes)
    return scenario


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(_load_scenario(args.scenario), args)
    try:
        trace = run_scenario(scenario)
    except ConfigurationError as err:
        raise _CliError(EXIT_INVALID, str(err))
    label = args.controller or "scenario-default"
    out = _resolve_out(args.out, f"{scenario.name}_{label}_trace.csv")
    _write_text(out, trace_csv(trace))
    mean_time = sum(r.avg_time_spent_slots for r in trace.rows) / len(trace.rows)
    print(
        f"final_total_queue={trace.final_summary['total_queue']} "
        f"mean_avg_time_spent_slots={mean_time:.6g} "
        f"wc_violations={int(trace.final_summary['wc_violations'])} "
        f"out={out}"
    )
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    controllers = args.controller or ["fc", "bp", "bpc"]
    if len(set(controllers)) != len(controllers):
        parser.error(f"duplicate controller labels: {controllers}")
    scenario = _load_scenario(args.scenario)
    if args.horizon is not None:
        scenario = dataclasses.replace(scenario, horizon=args.horizon)
    try:
        cells = run_sweep(
            scenario,
            multipliers=args.multipliers,
            seeds=args.seeds,
            controllers=controllers,
            jobs=args.jobs,
        )
    except ConfigurationError as err:
        raise _CliError(EXIT_INVALID, str(err))
    out = _resolve_out(args.out, f"{scenario.name}_sweep.csv")
    _write_text(out, sweep_csv(cells))
    print(f"cells={len(cells)} out={out}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        text = Path(args.scenario).read_text()
    except OSError as err:
        raise _CliError(EXIT_IO, f"cannot read {args.scenario}: {err}")
    result = parse_scenario(text)
    if result.ok:
        print(f"ok name={result.document.scenario.name}")
        return EXIT_OK
    for issue in result.issues:
        print(str(issue), file=sys.stderr)
    return EXIT_INVALID


def _jsonable(value):
    if isinstance(value, dict):
        return {
            (f"{k[0]}>{k[1]}" if isinstance(k, tuple) else str(k)): _jsonable(v)
            for k, v in value.items()
        }
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return _jsonable(dataclasses.asdict(value))
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _cmd_explain(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario)
    topo = scenario.topology
    problems = validate_scenario(scenario)
    if problems:
        raise _CliError(EXIT_INVALID, "scenario invalid:\n" + "\n".join(problems))
    if args.slot >= scenario.horizon:
        raise _CliError(
            EXIT_INVALID, f"slot {args.slot} outside horizon {scenario.horizon}"
        )
    rng = np.random.default_rng(scenario.seed)
    state = QueueState.initial(topo, scenario.initial_counts, mode=scenario.mode)
    for k in range(args.slot):
        decisions = decide_all(state, topo, scenario.controllers, k)
        phase_map = {j: d.phase_id for j, d in decisions.items()}
        arrived = sample_arrivals(scenario.arrivals, k, rng)
        state, _, _ = step(
            state, topo, phase_map, arrived, scenario.routing, scenario.mode, rng
        )
    junction_ids = [args.junction] if args.junction else [j.id for j in topo.junctions]
    if isinstance(scenario.controllers, Mapping):
        configs = scenario.controllers
    else:
        configs = {j.id: scenario.controllers for j in topo.junctions}
    report = {}
    for jid in junction_ids:
        if jid not in {j.id for j in topo.junctions}:
            raise _CliError(EXIT_INVALID, f"unknown junction {jid!r}")
        obs = observe(state, topo, jid)
        report[jid] = _jsonable(explain_junction(obs, configs[jid], slot=args.slot))
    print(json.dumps({"slot": args.slot, "junctions": report}, indent=2, sort_keys=True))
    return EXIT_OK


PRESSURE_HEADER = "capacity,q,P"


def _cmd_pressure_table(args: argparse.Namespace) -> int:
    try:
        function = PressureFunction.normalized(args.m, args.c_inf)
        lines = [PRESSURE_HEADER]
        for capacity in args.capacities:
            if capacity < 1 or capacity > args.c_inf:
                raise ConfigurationError(
                    f"capacity {capacity} must lie in [1, C_inf={args.c_inf}]"
                )
            for i in range(args.samples):
                q = capacity * i / (args.samples - 1)
                lines.append(f"{capacity},{q},{function.evaluate(q, capacity)}")
    except ConfigurationError as err:
        raise _CliError(EXIT_INVALID, str(err))
    out = _resolve_out(args.out, "pressure_table.csv")
    _write_text(out, "\n".join(lines) + "\n")
    print(f"curves={len(args.capacities)} samples={args.samples} out={out}")
    return EXIT_OK


def _cmd_fixtures(args: argparse.Namespace) -> int:
    target = Path(args.out) if args.out else _out_base() / "fixtures"
    for name, text in sorted(canonical_fixtures().items()):
        path = target / f"{name}.yaml"
        _write_text(path, text)
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpsim",
        description="Simulate signalized junction networks with finite queues.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write its trace CSV")
    p_run.add_argument("scenario", help="scenario file, or fixtures/<name> for built-ins")
    p_run.add_argument("--controller", choices=sorted(CONTROLLER_PRESETS))
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--horizon", type=int)
    p_run.add_argument("--out", help="trace CSV path")

    p_sweep = sub.add_parser("sweep", help="run a (multiplier, seed, controller) grid")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument(
        "--multipliers", type=float, nargs="+", default=[0.25, 0.5, 0.75, 1.0]
    )
    p_sweep.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    p_sweep.add_argument(
        "--controller",
        action="append",
        choices=sorted(CONTROLLER_PRESETS),
        help="repeatable; default fc, bp and bpc",
    )
    p_sweep.add_argument("--horizon", type=int)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", help="sweep CSV path")

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario")

    p_exp = sub.add_parser("explain", help="print one junction's decision breakdown")
    p_exp.add_argument("scenario")
    p_exp.add_argument("--junction", help="junction id; default all")
    p_exp.add_argument("--slot", type=int, default=0)

    p_pt = sub.add_parser("pressure-table", help="sample pressure curves to CSV")
    p_pt.add_argument("--c-inf", dest="c_inf", type=float, default=500.0)
    p_pt.add_argument("--m", type=float, default=4.0)
    p_pt.add_argument("--capacities", type=float, nargs="+", default=[50.0, 100.0])
    p_pt.add_argument("--samples", type=int, default=201)
    p_pt.add_argument("--out", help="table CSV path")

    p_fx = sub.add_parser("fixtures", help="write the canonical scenarios to disk")
    p_fx.add_argument("--out", help="target directory; default $BPSIM_OUT_DIR/fixtures")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args, parser)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "explain":
            return _cmd_explain(args)
        if args.command == "pressure-table":
            return _cmd_pressure_table(args)
        if args.command == "fixtures":
            return _cmd_fixtures(args)
        parser.error(f"unknown command {args.command!r}")
    except _CliError as err:
        print(str(err), file=sys.stderr)
        return err.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
