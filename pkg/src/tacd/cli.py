"""Command line entry point: ``tacd {example,run,sweep,generate,verify}``.

Exit status is 0 only when every property check and golden comparison passes.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .experiments import ExperimentConfig, cmd_example, cmd_run, cmd_sweep, load_golden, welfare_table
from .haf import haf_report
from .matching import MatchingOutcome
from .model import MechanismParams, Scheme, load_scenario, save_scenario
from .pipeline import run_pipeline
from .revenue import RevenueTable, reports_from_table
from .scenario import Distributions, generate_scenario, target_mu_count
from .settlement import check_budget_balance, check_individual_rationality, settle

log = logging.getLogger("tacd")


def _add_config_flags(p):
    p.add_argument("config", nargs="?", help="JSON experiment config")
    p.add_argument("--schemes", nargs="+")
    p.add_argument("--mu-counts", nargs="+", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--market", choices=["balanced", "unbalanced"])
    p.add_argument("--k-ratio", type=float)
    p.add_argument("--top1", type=int)
    p.add_argument("--top2", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--output-dir")
    p.add_argument("--jobs", type=int)


def _config(args) -> ExperimentConfig:
    overrides = dict(schemes=args.schemes, mu_counts=args.mu_counts, trials=args.trials, seed=args.seed,
                     top1=args.top1, top2=args.top2, theta=args.theta, output_dir=args.output_dir,
                     jobs=args.jobs)
    if getattr(args, "top2_values", None):
        overrides["top2_values"] = args.top2_values
    if getattr(args, "sweep_trials", None):
        overrides["sweep_trials"] = args.sweep_trials
    if getattr(args, "ap_id", None) is not None:
        overrides["ap_id"] = args.ap_id
        overrides["cloudlet_id"] = args.cloudlet_id
    if args.market or args.k_ratio is not None:
        base = json.loads(Path(args.config).read_text()).get("market", {}) if args.config else {}
        market = {"mode": "balanced", "k_ratio": 0.7, **base}
        if args.market:
            market["mode"] = args.market
        if args.k_ratio is not None:
            market["k_ratio"] = args.k_ratio
        overrides["market"] = market
    return ExperimentConfig.load(args.config, **overrides)


def do_example(args) -> int:
    ok, text = cmd_example(load_golden(args.golden))
    sys.stdout.write(text)
    return 0 if ok else 1


def do_run(args) -> int:
    cfg = _config(args)
    rows = cmd_run(cfg)
    table = welfare_table(rows)
    for (scheme, count), e in table.items():
        ratio = f"{e['ratio']:.4f}" if "ratio" in e else "-"
        print(f"{scheme:7s} {count:5d}  mean SW {e['mean_sw']:10.2f}  SW/HAF {ratio}")
    bad = [r for r in rows if r["status"] != "ok"]
    print(f"{len(rows)} rows written to {Path(cfg.output_dir) / 'runs.csv'}; {len(bad)} diagnostic")
    return 0 if not bad else 1


def do_sweep(args) -> int:
    cfg = _config(args)
    curves = cmd_sweep(cfg)
    for top2, res in curves.items():
        print(f"top2={top2}: AP {res.ap_id} on C{res.cloudlet_id}, truthful budget {res.truthful_budget:.2f}, "
              f"truthful mean {res.truthful_mean.mean():.3f}, best deviated mean {res.deviated_mean.max():.3f} "
              f"-> {Path(cfg.output_dir) / f'sweep_top2_{top2}.csv'}")
    return 0


def _dist(args) -> Distributions:
    fields = {f: getattr(args, f) for f in Distributions.__dataclass_fields__ if getattr(args, f, None) is not None}
    return Distributions(**fields)


def _params(args) -> MechanismParams:
    return MechanismParams(scheme=args.scheme, top1=args.top1, top2=args.top2, theta=args.theta)


def outcome_to_dict(result, seed: int, trial: int, params: MechanismParams) -> dict:
    o = result.outcome
    return {
        "scheme": result.scheme.value,
        "params": params.to_dict(),
        "seed": seed,
        "trial": trial,
        "m": result.m.tolist(),
        "sigma": {str(i): k for i, k in sorted(o.sigma.items())},
        "ap_clearing": {str(i): p for i, p in sorted(o.ap_clearing.items())},
    }


def do_generate(args) -> int:
    params = _params(args)
    dist = _dist(args)
    if args.mus is not None:
        sc = target_mu_count(args.mus, args.seed, params, n_cloudlets=args.cloudlets_override,
                             k_ratio=args.k_ratio, dist=dist)
    else:
        sc = generate_scenario(args.aps, args.cloudlets, args.seed, params, dist)
    save_scenario(sc, args.output)
    print(f"scenario: {sc.n_aps} APs, {sc.n_cloudlets} cloudlets, {sc.n_mus} MUs -> {args.output}")
    if args.outcome:
        res = run_pipeline(sc, params, seed=args.seed)
        Path(args.outcome).write_text(json.dumps(outcome_to_dict(res, args.seed, 0, params), indent=1) + "\n")
        print(f"outcome: {res.outcome.matched_pairs} matched pairs, SW {res.settlement.social_welfare:.4f} "
              f"-> {args.outcome}")
    return 0


def verify_outcome(sc, data: dict) -> list[str]:
    """Problems found when re-checking a stored outcome against its scenario."""
    params = MechanismParams(**data["params"])
    m = np.array(data["m"], dtype=np.int64)
    sigma = {int(i): int(k) for i, k in data["sigma"].items()}
    price = {int(i): float(p) for i, p in data["ap_clearing"].items()}
    outcome = MatchingOutcome(sigma, price, {k: price[i] for i, k in sigma.items()}, sc.n_aps, sc.n_cloudlets)
    if params.scheme is Scheme.HAF:
        reports = {(i, k): haf_report(sc, i, k, params.epsilon) for i, k in sigma.items()}
    else:
        table = RevenueTable(sc.arrays, params.epsilon)
        reports = reports_from_table(table, m, sc.mu_ids, [(i - 1, k - 1) for i, k in sigma.items()])
    problems = []
    if len(set(sigma.values())) != len(sigma):
        problems.append("a cloudlet is assigned twice")
    st = settle(outcome, reports, sc)
    ok, issues = check_individual_rationality(st, outcome, reports, sc, eps=params.epsilon)
    problems += issues
    ok, ledger = check_budget_balance(st, outcome, reports, eps=params.epsilon)
    if not ok:
        problems.append("budget balance: " + ledger["violation"])
    rerun = run_pipeline(sc, params, seed=int(data["seed"]), trial=int(data.get("trial", 0)))
    if rerun.outcome.sigma != sigma:
        problems.append("re-running the pipeline gives a different matching")
    return problems


def do_verify(args) -> int:
    sc = load_scenario(args.scenario)
    if args.outcome:
        problems = verify_outcome(sc, json.loads(Path(args.outcome).read_text()))
    else:
        params = sc.params if args.scheme is None else sc.params.replace(scheme=args.scheme)
        res = run_pipeline(sc, params)
        _, problems = check_individual_rationality(res.settlement, res.outcome, res.reports, sc,
                                                   eps=params.epsilon)
        ok, ledger = check_budget_balance(res.settlement, res.outcome, res.reports, eps=params.epsilon)
        if not ok:
            problems.append("budget balance: " + ledger["violation"])
        print(f"{params.scheme.value}: {res.outcome.matched_pairs} matched pairs, "
              f"SW {res.settlement.social_welfare:.4f}, val1={ledger['val1']:.6f} val2={ledger['val2']:.6f} "
              f"val3={ledger['val3']:.6f} val4={ledger['val4']:.6f}")
    for p in problems:
        print("FAIL", p)
    print("all property checks passed" if not problems else f"{len(problems)} problem(s)")
    return 0 if not problems else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tacd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example", help="reproduce the ten-MU revenue walk-through")
    p.add_argument("--golden", help="golden JSON (defaults to the bundled one)")
    p.set_defaults(func=do_example)

    p = sub.add_parser("run", help="social welfare experiments -> runs.csv")
    _add_config_flags(p)
    p.set_defaults(func=do_run)

    p = sub.add_parser("sweep", help="AP budget-deviation curves for several top2 values")
    _add_config_flags(p)
    p.add_argument("--top2-values", nargs="+", type=int)
    p.add_argument("--sweep-trials", type=int)
    p.add_argument("--ap-id", type=int)
    p.add_argument("--cloudlet-id", type=int)
    p.set_defaults(func=do_sweep)

    p = sub.add_parser("generate", help="write a random scenario (and optionally its outcome)")
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--aps", type=int)
    size.add_argument("--mus", type=int, help="grow APs until this many MUs")
    p.add_argument("--cloudlets", type=int, help="K (default: n)")
    p.add_argument("--cloudlets-override", type=int, help=argparse.SUPPRESS)
    p.add_argument("--k-ratio", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", default="TACD")
    p.add_argument("--top1", type=int, default=3)
    p.add_argument("--top2", type=int, default=2)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--outcome", help="also run the pipeline and save its outcome here")
    for f, default in Distributions().to_dict().items():
        p.add_argument("--" + f.replace("_", "-"), dest=f, type=type(default))
    p.set_defaults(func=do_generate)

    p = sub.add_parser("verify", help="re-check properties on a saved scenario (+ outcome)")
    p.add_argument("scenario")
    p.add_argument("--outcome")
    p.add_argument("--scheme")
    p.set_defaults(func=do_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND_NAME)
    if args.command == "generate":
        if args.mus is None and args.cloudlets is None:
            args.cloudlets = args.aps
        elif args.mus is not None:
            args.cloudlets_override = args.cloudlets
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
