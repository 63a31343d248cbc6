"""Command-line front end.

Every command reads a JSON scenario file::

    {"version": 1, "n": 3,
     "distribution": {"family": "power", "p": 2},
     "wage": "inverse_productivity"}

prints a CSV table (6 decimals) and, with ``--out DIR``, also writes the
table(s) plus a ``.summary.json`` document at full precision.

Exit status: 0 success, 2 invalid input, 3 numerical failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import contest, distributions, extensions, grading, verify
from .errors import ContestError, InputError, QuadratureError
from .tables import inputs_digest, render_summary, render_table, write_atomic

SCENARIO_VERSION = 1
SCENARIO_KEYS = {"version", "n", "distribution", "wage", "prize_vector",
                 "compare_prize_vector", "tolerances", "seed", "theta"}
TOLERANCE_KEYS = {"quadrature"}

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    distribution: dict
    wage: Any = None
    prize_vector: tuple[float, ...] | None = None
    compare_prize_vector: tuple[float, ...] | None = None
    tolerances: dict = field(default_factory=dict)
    seed: int | None = None
    theta: float = 0.5
    base_dir: Path = Path(".")

    def build_distribution(self) -> distributions.Distribution:
        spec = dict(self.distribution)
        if "table" in spec:
            spec["table"] = str(self.base_dir / spec["table"])
        return distributions.construct_distribution(spec)

    def require_wage(self) -> grading.WageSpec:
        if self.wage is None:
            raise InputError("this command needs a 'wage' entry in the scenario")
        return grading.make_wage(self.wage)

    def require_prizes(self) -> contest.PrizeVector:
        if self.prize_vector is None:
            raise InputError("this command needs a 'prize_vector' entry in the scenario")
        return contest.PrizeVector(self.prize_vector)

    def as_payload(self) -> dict:
        return {k: v for k, v in {
            "n": self.n, "distribution": self.distribution, "wage": self.wage,
            "prize_vector": self.prize_vector, "compare_prize_vector": self.compare_prize_vector,
            "tolerances": self.tolerances, "seed": self.seed, "theta": self.theta,
        }.items() if v is not None}


def parse_scenario(data: Any, base_dir: Path = Path(".")) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise InputError("scenario must be a JSON object")
    unknown = set(data) - SCENARIO_KEYS
    if unknown:
        raise InputError(f"unknown scenario keys: {sorted(unknown)}")
    if data.get("version") != SCENARIO_VERSION:
        raise InputError(f"scenario version must be {SCENARIO_VERSION}, got {data.get('version')!r}")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise InputError(f"'n' must be an integer >= 2, got {n!r}")
    if not isinstance(data.get("distribution"), dict):
        raise InputError("'distribution' must be an object with a 'family' key")
    if "wage" in data and "prize_vector" in data:
        raise InputError("give either 'wage' or 'prize_vector', not both")
    tolerances = data.get("tolerances", {})
    if not isinstance(tolerances, dict) or set(tolerances) - TOLERANCE_KEYS:
        raise InputError(f"'tolerances' may only contain {sorted(TOLERANCE_KEYS)}")

    vectors = {}
    for key in ("prize_vector", "compare_prize_vector"):
        if key in data:
            values = tuple(float(x) for x in data[key])
            if len(values) != n:
                raise InputError(f"'{key}' has {len(values)} entries but n = {n}")
            contest.PrizeVector(values)
            vectors[key] = values
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or seed < 0):
        raise InputError("'seed' must be a nonnegative integer")
    theta = float(data.get("theta", 0.5))
    if not 0 <= theta <= 1:
        raise InputError("'theta' must lie in [0, 1]")
    return ScenarioConfig(n=n, distribution=dict(data["distribution"]), wage=data.get("wage"),
                          tolerances=dict(tolerances), seed=seed, theta=theta,
                          base_dir=base_dir, **vectors)


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None
    return parse_scenario(data, path.parent)


# -- command results ----------------------------------------------------------------

@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list[Any]]


@dataclass
class Outcome:
    tables: list[Table]
    metrics: dict
    passed: bool = True
    notes: list[str] = field(default_factory=list)


def _tol(args, sc: ScenarioConfig) -> float:
    if args.tol is not None:
        return args.tol
    return float(sc.tolerances.get("quadrature", 1e-10))


def cmd_dist_classify(args, sc: ScenarioConfig) -> Outcome:
    d = sc.build_distribution()
    cls = distributions.classify_h(d)
    a1 = distributions.validate_assumption1(d)
    rows = [["monotonicity", cls.monotonicity], ["curvature", cls.curvature],
            ["method", cls.method], ["flat", cls.flat], ["determinate", cls.determinate],
            ["tail_conditions", a1.passed],
            ["tail_exponent_fF", a1.tail_exponents[0]], ["tail_exponent_quantile", a1.tail_exponents[1]]]
    metrics = {r[0]: r[1] for r in rows}
    return Outcome([Table("classification", ["property", "value"], rows)], metrics, a1.passed)


def cmd_effort_lambdas(args, sc: ScenarioConfig) -> Outcome:
    d = sc.build_distribution()
    eff = contest.expected_marginal_effects(d, sc.n, method="quadrature", tol=_tol(args, sc))
    rows = [[i, float(x), m] for i, (x, m) in enumerate(zip(eff.lambdas, eff.methods), start=1)]
    return Outcome([Table("lambdas", ["rank", "lambda", "method"], rows)],
                   {"lambdas": list(eff.lambdas), "ordering": eff.ordering(),
                    "abs_error": eff.abs_error})


def cmd_effort_curve(args, sc: ScenarioConfig) -> Outcome:
    d = sc.build_distribution()
    curve = contest.equilibrium_effort_curve(d, sc.require_prizes())
    rows = [[float(t), float(g)] for t, g in zip(curve.grid, curve.efforts)]
    return Outcome([Table("curve", ["theta", "effort"], rows)],
                   {"points": len(rows), "theta_min": curve.theta_min,
                    "effort_at_theta_min": float(curve.efforts[0])})


def cmd_effort_compare(args, sc: ScenarioConfig) -> Outcome:
    if sc.compare_prize_vector is None:
        raise InputError("this command needs a 'compare_prize_vector' entry in the scenario")
    d = sc.build_distribution()
    cmp = contest.compare_contests(d, sc.require_prizes(), sc.compare_prize_vector)
    rows = [["effort_v", cmp.effort_v], ["effort_w", cmp.effort_w], ["delta", cmp.delta]]
    checks = [[c.name, c.applies, c.predicted_sign, "" if c.agrees is None else c.agrees]
              for c in cmp.checks]
    passed = all(c.agrees is not False for c in cmp.checks)
    return Outcome([Table("comparison", ["quantity", "value"], rows),
                    Table("checks", ["check", "applies", "predicted_sign", "agrees"], checks)],
                   {"effort_v": cmp.effort_v, "effort_w": cmp.effort_w, "delta": cmp.delta,
                    "applicable": cmp.applicable_tags}, passed)


def cmd_grading_wages(args, sc: ScenarioConfig) -> Outcome:
    d = sc.build_distribution()
    ws = grading.order_statistic_wages(d, sc.require_wage(), sc.n, tol=_tol(args, sc))
    rows = [[i, v] for i, v in enumerate(ws.vstar, start=1)]
    return Outcome([Table("wages", ["rank", "vstar"], rows)], {"vstar": list(ws.vstar)})


def cmd_grading_optimize(args, sc: ScenarioConfig) -> Outcome:
    mode = {"brute": "bruteforce", "structured": "structured"}[args.mode]
    d = sc.build_distribution()
    res = grading.optimize_grading(d, sc.require_wage(), sc.n, mode)
    rows = [[G.label(), e, k] for k, (G, e) in enumerate(res.ranking, start=1)]
    metrics = {"winner": res.best.label(), "effort": res.best_effort, "mode": mode,
               "fell_back": res.fell_back, "candidates": len(rows)}
    note = f"winner {res.best.label()} effort {res.best_effort:.6f}"
    return Outcome([Table("ranking", ["cuts", "effort", "rank"], rows)], metrics, notes=[note])


def cmd_grading_table1(args, sc: ScenarioConfig) -> Outcome:
    ps = args.p or [0.6, 0.75, 2.0, 3.0]
    w = grading.make_wage(sc.wage) if sc.wage is not None else grading.WageSpec("linear")
    rows = []
    for r in grading.table1_rows(ps, sc.n, w):
        rows.append([r.family, r.p, r.monotonicity, r.curvature, r.lambda_order,
                     r.optimal.label() if r.optimal else "not integrable",
                     r.optimal_effort, r.predicted_form])
    header = ["family", "p", "monotonicity", "curvature", "lambda_order", "optimal",
              "effort", "predicted_form"]
    metrics = {"rows": [dict(zip(header, row)) for row in rows]}
    for row in metrics["rows"]:
        if isinstance(row["effort"], float) and math.isnan(row["effort"]):
            row["effort"] = None
    return Outcome([Table("table1", header, rows)], metrics)


def cmd_budget_allocate(args, sc: ScenarioConfig) -> Outcome:
    d = sc.build_distribution()
    alloc = extensions.budget_allocation_power_utility(d, sc.n, args.B, args.r)
    rows = [[i, v] for i, v in enumerate(alloc.prizes.values, start=1)]
    return Outcome([Table("allocation", ["rank", "prize"], rows)],
                   {"prizes": list(alloc.prizes.values), "v1": alloc.v1, "case": alloc.case,
                    "ratios": list(alloc.ratios), "r": alloc.r, "B": alloc.B})


def cmd_screening_sweep(args, sc: ScenarioConfig) -> Outcome:
    if args.p is None or len(args.p) != 1:
        raise UsageError("screening sweep needs exactly one --p")
    k_star, table = extensions.screening_optimize(args.p[0], sc.n)
    rows = [[r.k, r.objective] for r in table]
    top = table[k_star - 1].objective
    tied = [r.k for r in table if r.objective >= top - extensions.TIE_RTOL * abs(top)]
    return Outcome([Table("screening", ["k", "objective"], rows)],
                   {"k_star": k_star, "tied_k": tied, "p": args.p[0],
                    "objectives": [r.objective for r in table]},
                   notes=[f"k_star {k_star}"])


def cmd_verify_equilibrium(args, sc: ScenarioConfig) -> Outcome:
    d = sc.build_distribution()
    prizes = sc.require_prizes()
    reg = verify.best_response_regret(d, prizes)
    seed = args.seed if args.seed is not None else (sc.seed or 0)
    mc = verify.monte_carlo_ranks(d, sc.n, sc.theta, seed=seed)
    reg_rows = [["max_regret", reg.max_regret], ["threshold", reg.threshold],
                ["worst_type", reg.worst_type], ["worst_deviation", reg.worst_deviation],
                ["type_points", reg.type_points], ["deviation_points", reg.deviation_points],
                ["curve_monotone", reg.curve_monotone], ["accepted", reg.accepted]]
    mc_rows = [[i, c, e, a] for i, (c, e, a) in
               enumerate(zip(mc.counts, mc.empirical, mc.analytic), start=1)]
    metrics = {"max_regret": reg.max_regret, "regret_threshold": reg.threshold,
               "regret_accepted": reg.accepted, "chi2_statistic": mc.chi2_statistic,
               "chi2_threshold": mc.chi2_threshold, "ranks_passed": mc.passed,
               "seed": seed, "samples": mc.samples, "theta": sc.theta}
    if math.isinf(metrics["chi2_statistic"]):
        metrics["chi2_statistic"] = None
    return Outcome([Table("regret", ["metric", "value"], reg_rows),
                    Table("ranks", ["rank", "count", "empirical", "analytic"], mc_rows)],
                   metrics, reg.accepted and mc.passed)


COMMANDS: dict[tuple[str, str], Callable] = {
    ("dist", "classify"): cmd_dist_classify,
    ("effort", "lambdas"): cmd_effort_lambdas,
    ("effort", "curve"): cmd_effort_curve,
    ("effort", "compare"): cmd_effort_compare,
    ("grading", "wages"): cmd_grading_wages,
    ("grading", "optimize"): cmd_grading_optimize,
    ("grading", "table1"): cmd_grading_table1,
    ("budget", "allocate"): cmd_budget_allocate,
    ("screening", "sweep"): cmd_screening_sweep,
    ("verify", "equilibrium"): cmd_verify_equilibrium,
}


# -- argument parsing ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("scenario", help="JSON scenario file")
    common.add_argument("--out", type=Path, help="directory for CSV tables and the JSON summary")
    common.add_argument("--tol", type=float, help="quadrature tolerance override")
    common.add_argument("--seed", type=int, help="random seed (verify)")
    common.add_argument("--quiet", action="store_true", help="suppress stdout tables")

    parser = _Parser(prog="gradecontest", description="Contest design and grading analyses.")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)
    actions: dict[str, argparse._SubParsersAction] = {}
    for group, action in COMMANDS:
        if group not in actions:
            actions[group] = groups.add_parser(group).add_subparsers(
                dest="action", required=True, parser_class=_Parser)
        sub = actions[group].add_parser(action, parents=[common])
        if (group, action) == ("grading", "optimize"):
            sub.add_argument("--mode", choices=("brute", "structured"), default="brute")
        if (group, action) in (("grading", "table1"), ("screening", "sweep")):
            sub.add_argument("--p", type=float, action="append",
                             help="shape parameter (repeatable for table1)")
        if (group, action) == ("budget", "allocate"):
            sub.add_argument("--r", type=float, required=True, help="utility exponent in (0, 1)")
            sub.add_argument("--B", type=float, default=1.0, help="total budget")
    return parser


def _flags(args) -> dict:
    skip = {"group", "action", "scenario", "out", "quiet"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE

    command = f"{args.group} {args.action}"
    try:
        sc = load_scenario(args.scenario)
        outcome = COMMANDS[(args.group, args.action)](args, sc)
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE
    except (QuadratureError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (ContestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT

    rendered = [(t, render_table(t.header, t.rows)) for t in outcome.tables]
    if not args.quiet:
        for i, (_, text) in enumerate(rendered):
            if i:
                stdout.write("\n")
            stdout.write(text)
        for note in outcome.notes:
            stdout.write(note + "\n")
    if args.out is not None:
        stem = f"{args.group}-{args.action}"
        for table, text in rendered:
            name = stem if len(rendered) == 1 else f"{stem}-{table.name}"
            write_atomic(args.out / f"{name}.csv", text)
        summary = {
            "command": command,
            "inputs_sha256": inputs_digest({"scenario": sc.as_payload(), "flags": _flags(args)}),
            "tolerances": {"quadrature": _tol(args, sc)},
            "passed": outcome.passed,
            "metrics": _jsonable(outcome.metrics),
        }
        write_atomic(args.out / f"{stem}.summary.json", render_summary(summary))
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)
