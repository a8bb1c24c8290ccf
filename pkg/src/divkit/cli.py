"""Batch command-line front end: JSON reports on stdout, logs on stderr.

Exit codes: 0 success, 1 numerical failure (e.g. solver non-convergence),
2 validation error.  Identical argv (including seed) produces byte-identical
reports.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

from . import generators, portfolio, scoring, sufficiency, thermo
from .simplex import ProbVec, kl_divergence

SCHEMA_VERSION = 1
LN2 = math.log(2.0)


@dataclass
class ExperimentConfig:
    """Everything a run depends on besides the library itself."""

    subcommand: str
    bits: bool = False
    fmt: str = "json"
    output: str | None = None
    seed: int | None = None
    paths: list[str] = field(default_factory=list)
    tolerances: dict[str, float] = field(default_factory=dict)


def _parse_vec(text: str, what: str) -> ProbVec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{what} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ValueError(f"{what} must be a JSON array of numbers")
    return ProbVec(data)


def _parse_levels(text: str) -> thermo.EnergyLevels:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"--levels is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ValueError("--levels must be a JSON array of energies in joules")
    return thermo.EnergyLevels(data)


def _to_bits(report: dict, nat_keys: tuple[str, ...]) -> dict:
    out = {}
    for key, value in report.items():
        if key in nat_keys and isinstance(value, float):
            new_key = key[: -len("_nats")] + "_bits" if key.endswith("_nats") else key
            out[new_key] = value / LN2
        else:
            out[key] = value
    return out


def _emit(report: dict, cfg: ExperimentConfig, nat_keys: tuple[str, ...] = ()) -> None:
    report = {"schema_version": SCHEMA_VERSION, **report}
    if cfg.bits and nat_keys:
        report = _to_bits(report, nat_keys)
    if cfg.fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key in sorted(report):
            writer.writerow([key, json.dumps(report[key], sort_keys=True)])
        text = buf.getvalue()
    else:
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)


def _cmd_divergence(args, cfg):
    p = _parse_vec(args.p, "--p")
    q = _parse_vec(args.q, "--q")
    _emit({"kl_nats": kl_divergence(p, q)}, cfg, nat_keys=("kl_nats",))
    return 0


def _cmd_bregman(args, cfg):
    gen = generators.generator_by_name(args.generator)
    p = _parse_vec(args.p, "--p")
    q = _parse_vec(args.q, "--q")
    value = generators.bregman_divergence(gen, p, q)
    _emit(
        {"generator": gen.name, "divergence_nats": value},
        cfg,
        nat_keys=("divergence_nats",),
    )
    return 0


def _default_grid_step(dim: int) -> float:
    return 0.01 if dim <= 3 else 0.05


def _cmd_score(args, cfg):
    p = _parse_vec(args.P, "--P")
    q = _parse_vec(args.Q, "--Q")
    if p.dim != q.dim:
        raise ValueError(f"--P and --Q have different dimensions ({p.dim} vs {q.dim})")
    gen = generators.generator_by_name(args.generator) if args.generator else None
    rule = scoring.rule_by_name(args.rule, p.dim, generator=gen)
    step = args.grid_step if args.grid_step is not None else _default_grid_step(p.dim)
    witness = scoring.properness_witness(rule, p.dim, step)
    _emit(
        {
            "rule": rule.name,
            "score": scoring.expected_score(rule, p, q),
            "divergence": scoring.divergence_from_rule(rule, p, q),
            "proper": witness is None,
            "grid_step": step,
        },
        cfg,
        nat_keys=("score", "divergence"),
    )
    return 0


def _cmd_suffcheck(args, cfg):
    name, div = sufficiency.divergence_by_name(args.divergence)
    try:
        dims = [int(tok) for tok in args.dims.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"--dims must be comma-separated integers, got {args.dims!r}") from None
    report = sufficiency.classify_divergence(div, dims, args.trials, args.seed, name=name)
    _emit(report.to_dict(include_entries=not args.summary), cfg)
    return 0


def _cmd_portfolio_solve(args, cfg):
    mkt = portfolio.load_market(args.market)
    result = portfolio.solve_log_optimal(mkt, tol=args.tol)
    report = {
        "b": result.b.w.tolist(),
        "W_nats": portfolio.doubling_rate(result.b, mkt),
        "kkt_residual": result.residual,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    _emit(report, cfg, nat_keys=("W_nats",))
    if not result.converged:
        print(f"solver stalled at residual {result.residual:.3e}", file=sys.stderr)
        return 1
    return 0


def _cmd_portfolio_simulate(args, cfg):
    mkt = portfolio.load_market(args.market)
    b = _parse_vec(args.b, "--b")
    path, terminal = portfolio.simulate_wealth(mkt, b, args.n, args.seed)
    report = {
        "n": args.n,
        "seed": args.seed,
        "terminal_rate_nats": terminal,
        "final_log_wealth_nats": float(path[-1]),
        "expected_rate_nats": portfolio.doubling_rate(b, mkt),
    }
    if args.include_path:
        report["log_wealth_path"] = [float(v) for v in path]
    _emit(
        report,
        cfg,
        nat_keys=("terminal_rate_nats", "final_log_wealth_nats", "expected_rate_nats"),
    )
    return 0


def _cmd_portfolio_regret(args, cfg):
    mkt = portfolio.load_market(args.market)
    q = _parse_vec(args.Q, "--Q")
    rb = portfolio.regret_and_bound(mkt, q, tol=args.tol)
    report = {
        "regret_nats": rb.regret,
        "bound_nats": rb.bound,
        "gap_nats": rb.gap,
        "horse_race": portfolio.is_horse_race(mkt),
    }
    _emit(report, cfg, nat_keys=("regret_nats", "bound_nats", "gap_nats"))
    return 0


def _cmd_thermo(args, cfg):
    levels = _parse_levels(args.levels)
    bath = thermo.HeatBath(args.T)
    gibbs = thermo.gibbs_state(levels, bath)
    report = {
        "T_kelvin": args.T,
        "gibbs": gibbs.w.tolist(),
        "Ex_joules": None,
        "identity_gap_joules": None,
    }
    if args.state is not None:
        state = _parse_vec(args.state, "--state")
        report["Ex_joules"] = thermo.extractable_energy(state, gibbs, bath)
        report["identity_gap_joules"] = thermo.free_energy_identity_gap(state, levels, bath)
    _emit(report, cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bits", action="store_true", help="report nat-valued outputs in bits")
    common.add_argument("--output", metavar="PATH", help="also write the report to this file")
    common.add_argument("--format", choices=("json", "csv"), default="json", dest="fmt")

    parser = argparse.ArgumentParser(prog="divkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", parents=[common], help="KL divergence of two distributions")
    p.add_argument("--p", required=True, help="JSON array, e.g. [0.5,0.5]")
    p.add_argument("--q", required=True, help="JSON array")
    p.set_defaults(handler=_cmd_divergence)

    p = sub.add_parser("bregman", parents=[common], help="Bregman divergence for a named generator")
    p.add_argument("--generator", required=True, help="negentropy|sqnorm|burg|table:<file>")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.set_defaults(handler=_cmd_bregman)

    p = sub.add_parser("score", parents=[common], help="evaluate a scoring rule")
    p.add_argument("--rule", required=True, choices=("log", "brier", "burg", "linear", "from-generator"))
    p.add_argument("--generator", help="generator name for --rule from-generator")
    p.add_argument("--P", required=True, help="outcome distribution (JSON array)")
    p.add_argument("--Q", required=True, help="prediction (JSON array)")
    p.add_argument("--grid-step", type=float, help="properness sweep resolution")
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("suffcheck", parents=[common], help="sufficiency-invariance classification")
    p.add_argument("--divergence", required=True, help="kl|sqnorm|burg|bregman:<generator>")
    p.add_argument("--dims", default="3,4,5", help="comma-separated dimensions in 3..8")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--summary", action="store_true", help="omit per-trial entries")
    p.set_defaults(handler=_cmd_suffcheck)

    p = sub.add_parser("portfolio", parents=[], help="log-optimal portfolio tools")
    psub = p.add_subparsers(dest="subcommand", required=True)

    ps = psub.add_parser("solve", parents=[common], help="solve for the log-optimal portfolio")
    ps.add_argument("--market", required=True, help="CSV with header prob,x1,...,xk")
    ps.add_argument("--tol", type=float, default=1e-9, help="KKT residual target")
    ps.set_defaults(handler=_cmd_portfolio_solve)

    ps = psub.add_parser("simulate", parents=[common], help="simulate a wealth path")
    ps.add_argument("--market", required=True)
    ps.add_argument("--b", required=True, help="portfolio (JSON array)")
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--include-path", action="store_true")
    ps.set_defaults(handler=_cmd_portfolio_simulate)

    ps = psub.add_parser("regret", parents=[common], help="regret against the KL bound")
    ps.add_argument("--market", required=True)
    ps.add_argument("--Q", required=True, help="mistaken belief (JSON array)")
    ps.add_argument("--tol", type=float, default=1e-9)
    ps.set_defaults(handler=_cmd_portfolio_regret)

    p = sub.add_parser("thermo", parents=[common], help="Gibbs state and extractable energy")
    p.add_argument("--levels", required=True, help="energy levels in joules (JSON array)")
    p.add_argument("--T", type=float, required=True, help="temperature in kelvin")
    p.add_argument("--state", help="state to compare against equilibrium (JSON array)")
    p.set_defaults(handler=_cmd_thermo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = getattr(args, "seed", None)
    if seed is not None and seed < 0:
        print("seed must be a nonnegative integer", file=sys.stderr)
        return 2
    cfg = ExperimentConfig(
        subcommand=args.command,
        bits=args.bits,
        fmt=args.fmt,
        output=args.output,
        seed=seed,
        paths=[p for p in (getattr(args, "market", None),) if p],
        tolerances={"tol": args.tol} if hasattr(args, "tol") else {},
    )
    try:
        return args.handler(args, cfg)
    except portfolio.NonConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
