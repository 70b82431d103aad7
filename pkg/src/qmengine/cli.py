"""Command-line entry point.

Subcommands: ``run`` (execute a configured engine, write ledger and report
files), ``spectrum`` (eigenvalues, peripheral structure and recurrences of
the cycle map), ``verify`` (trial suites), ``report`` (aggregate a ledger
CSV into plot-ready per-cycle totals).  The ENGINE_LOG environment variable
(quiet, info, debug) controls logging verbosity on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigParse, EngineError, NoRecurrenceFound
from .engine import (
    CycleLedger,
    EngineCycle,
    _step_states,
    cycle_superoperator,
    entropy_budget,
    first_law_report,
    run,
)
from .operators import DensityOperator, gibbs_state, spectrum_of, validate_density
from .serialize import cycle_from_json, dumps, fmt, matrix_from_json, matrix_to_json
from .spectral import find_recurrences, peripheral_projector, project_peripheral
from .verify import SUITES, run_suite

logger = logging.getLogger("qmengine")

_LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


@dataclass(frozen=True, eq=False)
class EngineConfig:
    """A fully parsed engine configuration."""

    dim: int
    cycle: EngineCycle
    initial_state: DensityOperator
    n_cycles: int
    epsilon: float
    n_max: int
    seed: int
    expected: dict | None


def _initial_state(data, cycle: EngineCycle, path: str) -> DensityOperator:
    if not isinstance(data, dict):
        raise ConfigParse(path, "expected an object")
    kind = data.get("kind")
    if kind == "explicit":
        if "matrix" not in data:
            raise ConfigParse(f"{path}.matrix", "missing")
        return validate_density(matrix_from_json(data["matrix"], cycle.dim,
                                                 f"{path}.matrix"))
    if kind == "gibbs":
        beta = data.get("beta")
        if not isinstance(beta, (int, float)) or isinstance(beta, bool):
            raise ConfigParse(f"{path}.beta", "expected a number")
        return gibbs_state(cycle.base_hamiltonian, float(beta))
    if kind == "ground":
        spec = spectrum_of(cycle.base_hamiltonian)
        ground = spec.eigenvectors[:, -1]
        return validate_density(np.outer(ground, ground.conj()))
    raise ConfigParse(f"{path}.kind",
                      f"unknown initial state kind {kind!r} "
                      "(explicit, gibbs or ground)")


def _run_param(params, name, kind, path, minimum=None):
    value = params.get(name)
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise ConfigParse(f"{path}.{name}", "expected an integer")
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigParse(f"{path}.{name}", "expected a number")
        value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigParse(f"{path}.{name}", f"must be >= {minimum}")
    return value


def load_config(path) -> EngineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(str(path), f"cannot read: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(str(path), f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigParse(str(path), "top level must be an object")
    cycle = cycle_from_json(data, path="config")
    initial = _initial_state(data.get("initial_state"), cycle, "config.initial_state")
    params = data.get("run")
    if not isinstance(params, dict):
        raise ConfigParse("config.run", "expected an object")
    n_cycles = _run_param(params, "n_cycles", int, "config.run", minimum=1)
    epsilon = _run_param(params, "epsilon", float, "config.run", minimum=0.0)
    n_max = _run_param(params, "n_max", int, "config.run", minimum=1)
    seed = params.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigParse("config.run.seed", "expected an integer")
    expected = data.get("expected")
    if expected is not None and not isinstance(expected, dict):
        raise ConfigParse("config.expected", "expected an object")
    return EngineConfig(dim=cycle.dim, cycle=cycle, initial_state=initial,
                        n_cycles=n_cycles, epsilon=epsilon, n_max=n_max,
                        seed=seed, expected=expected)


# ---------------------------------------------------------------------------
# output builders

def write_ledger_csv(ledger: CycleLedger, fh) -> None:
    fh.write(",".join(CycleLedger.CSV_COLUMNS) + "\n")
    for row in ledger.csv_rows():
        n, k, *floats = row
        fh.write(",".join([str(n), str(k)] + [fmt(x) for x in floats]) + "\n")


def first_law_json(report) -> dict:
    return {
        "epsilon": report.recurrence.epsilon,
        "n_max": report.recurrence.n_max,
        "recurrence_times": [int(t) for t in report.recurrence.times],
        "distances": list(report.recurrence.distances),
        "w_totals": list(report.w_totals),
        "e_ms_totals": list(report.e_ms_totals),
        "ds_totals": list(report.ds_totals),
        "energy_changes": list(report.energy_changes),
        "first_law_residuals": list(report.first_law_residuals),
        "trace_norm_distances": list(report.trace_norm_distances),
        "energy_bounds": list(report.energy_bounds),
        "w_total_limit": report.w_total_limit,
        "e_ms_total_limit": report.e_ms_total_limit,
        "ds_total_limit": report.ds_total_limit,
        "max_abs_energy_injected": report.max_abs_energy_injected,
        "max_measurement_disturbance": report.max_measurement_disturbance,
        "rho_phi": matrix_to_json(report.rho_phi),
    }


def entropy_budget_json(cycle: EngineCycle, rho_phi: DensityOperator) -> list:
    """Per-step entropy budgets evaluated on the steady entry states."""
    state = rho_phi
    out = []
    for k, step in enumerate(cycle.steps, start=1):
        budget = entropy_budget(step, state)
        out.append({
            "k": k,
            "ds_unitary": budget.ds_unitary,
            "ds_measurement": budget.ds_measurement,
            "ds_feedback": budget.ds_feedback,
            "ds_thermal": budget.ds_thermal,
            "chi_ms": budget.chi_ms,
            "q_out": budget.q_out,
            "beta": budget.beta,
            "feedback_residual": budget.feedback_residual,
            "thermal_residual": budget.thermal_residual,
        })
        _, state = _step_states(step, state)
    return out


def trial_report_json(report) -> dict:
    return {
        "n_trials": report.n_trials,
        "n_pass": report.n_pass,
        "worst_violation": report.worst_violation,
        "witness": report.witness,
    }


# ---------------------------------------------------------------------------
# subcommands

def cmd_run(config_path: str, out_dir: str) -> int:
    config = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    logger.info("running %d transient cycles", config.n_cycles)
    ledger = run(config.cycle, config.initial_state, config.n_cycles)
    with open(out / "ledger.csv", "w") as fh:
        write_ledger_csv(ledger, fh)

    logger.info("scanning steady regime up to n_max=%d", config.n_max)
    report = first_law_report(config.cycle, config.initial_state,
                              epsilon=config.epsilon, n_max=config.n_max)
    (out / "first_law.json").write_text(dumps(first_law_json(report)))
    (out / "entropy_budget.json").write_text(
        dumps(entropy_budget_json(config.cycle, report.rho_phi)))

    last = int(report.recurrence.times[-1])
    print(f"W_total(n={last}) = {fmt(report.w_total_limit)}; "
          f"max|E_ms| steady = {fmt(report.max_abs_energy_injected)}")
    return 0


def cmd_spectrum(config_path: str) -> int:
    config = load_config(config_path)
    superop = cycle_superoperator(config.cycle)
    decomp = peripheral_projector(superop)
    rho_phi = project_peripheral(decomp, config.initial_state)
    payload = {
        "dim": config.dim,
        "eigenvalues": [[float(v.real), float(v.imag)] for v in decomp.eigenvalues],
        "peripheral_indices": [int(i) for i in decomp.peripheral_indices],
        "rho_phi": matrix_to_json(rho_phi),
    }
    try:
        rec = find_recurrences(superop, rho_phi, epsilon=config.epsilon,
                               n_max=config.n_max)
        payload["recurrence"] = {
            "epsilon": rec.epsilon,
            "n_max": rec.n_max,
            "times": [int(t) for t in rec.times],
            "distances": list(rec.distances),
        }
    except NoRecurrenceFound as exc:
        logger.info("no recurrence below epsilon: %s", exc)
        payload["recurrence"] = {
            "epsilon": config.epsilon,
            "n_max": config.n_max,
            "times": [],
            "distances": [],
            "closest_approach": exc.min_distance,
            "closest_time": exc.at_time,
        }
    sys.stdout.write(dumps(payload))
    return 0


def cmd_verify(suite: str, dim: int, trials: int, seed: int) -> int:
    report = run_suite(suite, dim, trials, seed)
    sys.stdout.write(dumps(trial_report_json(report)))
    return 0 if report.n_pass == report.n_trials else 1


def cmd_report(ledger_path: str) -> int:
    try:
        lines = Path(ledger_path).read_text().splitlines()
    except OSError as exc:
        raise ConfigParse(str(ledger_path), f"cannot read: {exc}") from exc
    if not lines or lines[0].split(",") != list(CycleLedger.CSV_COLUMNS):
        raise ConfigParse(str(ledger_path), "not a ledger CSV (bad header)")
    totals: dict[int, dict[str, float]] = {}
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CycleLedger.CSV_COLUMNS):
            raise ConfigParse(f"{ledger_path}:{ln}", "wrong number of columns")
        try:
            n = int(parts[0])
            w, e_ms, ds_ms = float(parts[2]), float(parts[3]), float(parts[4])
        except ValueError as exc:
            raise ConfigParse(f"{ledger_path}:{ln}", str(exc)) from exc
        acc = totals.setdefault(n, {"w_total": 0.0, "e_ms_total": 0.0,
                                    "ds_ms_total": 0.0})
        acc["w_total"] += w
        acc["e_ms_total"] += e_ms
        acc["ds_ms_total"] += ds_ms
    sys.stdout.write("cycle,quantity,value\n")
    for n in sorted(totals):
        for quantity in ("w_total", "e_ms_total", "ds_ms_total"):
            sys.stdout.write(f"{n},{quantity},{fmt(totals[n][quantity])}\n")
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="engine",
        description="Simulate measurement-driven engine cycles and verify "
                    "their steady-regime thermodynamics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured engine")
    p_run.add_argument("config", help="path to an engine config JSON")
    p_run.add_argument("--out", required=True, help="output directory")

    p_spec = sub.add_parser("spectrum", help="cycle spectrum and recurrences")
    p_spec.add_argument("config", help="path to an engine config JSON")

    p_verify = sub.add_parser("verify", help="run a trial suite")
    p_verify.add_argument("--suite", required=True, choices=SUITES)
    p_verify.add_argument("--dim", type=int, default=2)
    p_verify.add_argument("--trials", type=int, default=1000)
    p_verify.add_argument("--seed", type=int, default=0)

    p_report = sub.add_parser("report", help="aggregate a ledger CSV")
    p_report.add_argument("ledger", help="path to ledger.csv")
    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("ENGINE_LOG", ""), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out)
        if args.command == "spectrum":
            return cmd_spectrum(args.config)
        if args.command == "verify":
            return cmd_verify(args.suite, args.dim, args.trials, args.seed)
        if args.command == "report":
            return cmd_report(args.ledger)
    except ConfigParse as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
