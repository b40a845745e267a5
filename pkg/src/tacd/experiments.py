"""Experiment runner behind the CLI: worked example, welfare runs, sweeps."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .fixtures import table3_scenario
from .harness import ap_deviation_sweep
from .model import MechanismParams, Scheme
from .pipeline import Engine, run_pipeline
from .revenue import (build_report, find_s, gtr, mean_revenue, sort_group, tacd_m_range,
                      topk_indices)
from .rng import mix
from .scenario import generate_scenario, target_mu_count

RUN_COLUMNS = ["scheme", "mu_count", "trial", "seed", "SW", "sum_u_mu", "sum_u_ap",
               "sum_u_cloudlet", "matched_pairs", "runtime_ms", "status"]


@dataclass
class ExperimentConfig:
    schemes: list = field(default_factory=lambda: ["TACD", "TACDp", "TACDpp", "HAF"])
    mu_counts: list = field(default_factory=lambda: [1000, 1100, 1200, 1300, 1400])
    trials: int = 200
    seed: int = 2024
    market: dict = field(default_factory=lambda: {"mode": "balanced", "k_ratio": 0.7})
    top1: int = 2
    top2: int = 2
    theta: float = 0.0
    output_dir: str = "results"
    jobs: int = 1
    # sweep
    top2_values: list = field(default_factory=lambda: [1, 2, 5])
    sweep_range: list = field(default_factory=lambda: [-80.0, 50.0])
    sweep_step: float = 1.0
    sweep_trials: int = 100
    sweep_size: int = 10
    ap_id: int | None = None
    cloudlet_id: int | None = None

    @classmethod
    def load(cls, path=None, **overrides) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text()) if path else {}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for s in self.schemes:
            Scheme.parse(s)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(c < 5 for c in self.mu_counts):
            raise ValueError("every MU count must be >= 5")
        if self.market.get("mode", "balanced") not in ("balanced", "unbalanced"):
            raise ValueError("market mode must be 'balanced' or 'unbalanced'")

    @property
    def k_ratio(self) -> float | None:
        return float(self.market.get("k_ratio", 0.7)) if self.market.get("mode") == "unbalanced" else None

    def params(self, scheme) -> MechanismParams:
        return MechanismParams(scheme=scheme, top1=self.top1, top2=self.top2, theta=self.theta)


# -- worked example -------------------------------------------------------

def load_golden(path=None) -> dict:
    if path:
        return json.loads(Path(path).read_text())
    return json.loads(resources.files("tacd").joinpath("data/table3_golden.json").read_text())


def cmd_example(golden: dict | None = None) -> tuple[bool, str]:
    """Run the ten-MU walk-through; return (matches golden, printable report)."""
    golden = golden or load_golden()
    tol = golden["tolerance"]
    sc = table3_scenario()
    ap = sc.aps[0]
    lines, failures = [], []

    def check(label, got, want):
        ok = abs(got - want) <= tol
        lines.append(f"  {label:<22} {got:10.4f}   golden {want:<8} {'ok' if ok else 'MISMATCH'}")
        if not ok:
            failures.append(label)

    def check_exact(label, got, want):
        ok = list(got) == list(want)
        lines.append(f"  {label:<22} {list(got)}   {'ok' if ok else 'MISMATCH golden ' + str(want)}")
        if not ok:
            failures.append(label)

    g1 = golden["C1"]
    g = sort_group(ap, 1)
    s = find_s(g, sc.cloudlets[0].capacity)
    lines.append("C1 (TACD, m forced to 6)")
    check_exact("order", g.order, g1["order"])
    check_exact("s", [s], [g1["s"]])
    S = gtr(g, s)
    lines.append("  S = " + ", ".join(f"{x:.2f}" for x in S))
    check("S_5", S[4], g1["S5"])
    report = build_report(g, s, g1["m"], S)
    check("revenue R", report.revenue, g1["revenue"])
    check("unit price", report.unit_price, g1["unit_price"])
    check_exact("winners", report.winners, g1["winners"])
    for mu_id, want in g1["potential_prices"].items():
        check(f"price m{mu_id}", report.potential_prices[int(mu_id)], want)

    g2 = golden["C2"]
    g = sort_group(ap, 2)
    s = find_s(g, sc.cloudlets[1].capacity)
    lines.append(f"C2 (TACDp, top1={g2['top1']})")
    check_exact("order", g.order, g2["order"])
    check_exact("s", [s], [g2["s"]])
    S = gtr(g, s)
    for x, want in enumerate(g2["S"], start=1):
        check(f"S_{x}", S[x - 1], want)
    top = topk_indices(S, g2["top1"])
    check_exact("top indices", top, g2["top_indices"])
    check("mean revenue TACDp", mean_revenue(S, top), g2["mean_revenue_tacdp"])
    check_exact("TACD m range", list(tacd_m_range(s)), g2["tacd_indices"])
    check("mean revenue TACD", mean_revenue(S, tacd_m_range(s)), g2["mean_revenue_tacd"])
    for m in top:
        r = build_report(g, s, m, S)
        lines.append(f"  m={m}: R={r.revenue:.2f} unit={r.unit_price:.2f} winners={list(r.winners)}")

    lines.append("golden: " + ("all values match" if not failures else "MISMATCH in " + ", ".join(failures)))
    return not failures, "\n".join(lines) + "\n"


# -- welfare runs -----------------------------------------------------------

def cell_seed(master: int, mu_count: int, trial: int) -> int:
    return mix(mix(master, mu_count), trial)


def run_cell(cfg: ExperimentConfig, mu_count: int, trial: int) -> list[dict]:
    """All schemes on one generated scenario; one row per scheme."""
    seed = cell_seed(cfg.seed, mu_count, trial)
    sc = target_mu_count(mu_count, seed, k_ratio=cfg.k_ratio)
    t0 = time.perf_counter()
    engine = Engine(sc)
    prep_ms = (time.perf_counter() - t0) * 1e3
    draws = engine.draws(seed, 1)
    rows = []
    for name in cfg.schemes:
        params = cfg.params(name)
        t0 = time.perf_counter()
        status = "ok"
        try:
            batch = engine.run(params, draws)
            st = engine.settle(batch)
            if not engine.audit(batch, st)[0]:
                status = "diag:property_check_failed"
        except Exception as exc:  # diagnostic row instead of aborting the whole run
            rows.append(dict(scheme=params.scheme.value, mu_count=mu_count, trial=trial, seed=seed,
                             SW=math.nan, sum_u_mu=math.nan, sum_u_ap=math.nan, sum_u_cloudlet=math.nan,
                             matched_pairs=0, runtime_ms=math.nan, status=f"diag:{type(exc).__name__}:{exc}"))
            continue
        runtime = (time.perf_counter() - t0) * 1e3 + prep_ms
        rows.append(dict(scheme=params.scheme.value, mu_count=mu_count, trial=trial, seed=seed,
                         SW=float(st.social_welfare[0]), sum_u_mu=float(st.sum_u_mu[0]),
                         sum_u_ap=float(st.sum_u_ap[0]), sum_u_cloudlet=float(st.sum_u_cloudlet[0]),
                         matched_pairs=int(st.matched[0].sum()), runtime_ms=runtime, status=status))
    return rows


def _run_cells(args):
    cfg, cells = args
    out = []
    for mu_count, trial in cells:
        out.extend(run_cell(cfg, mu_count, trial))
    return out


def cmd_run(cfg: ExperimentConfig, out_path=None) -> list[dict]:
    """Every (scheme, MU count, trial) cell; rows sorted by (scheme, mu_count, trial).

    Schemes sort in config order.  Writes ``runs.csv`` under the output
    directory unless ``out_path`` is False.
    """
    cells = [(c, t) for c in cfg.mu_counts for t in range(cfg.trials)]
    if cfg.jobs > 1:
        chunks = [cells[j::cfg.jobs] for j in range(cfg.jobs)]
        with ProcessPoolExecutor(cfg.jobs) as pool:
            rows = [r for part in pool.map(_run_cells, [(cfg, ch) for ch in chunks]) for r in part]
    else:
        rows = _run_cells((cfg, cells))
    order = {Scheme.parse(s).value: j for j, s in enumerate(cfg.schemes)}
    rows.sort(key=lambda r: (order[r["scheme"]], r["mu_count"], r["trial"]))
    if out_path is not False:
        path = Path(out_path) if out_path else Path(cfg.output_dir) / "runs.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_rows(rows, path)
    return rows


def write_rows(rows, path, columns=RUN_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def welfare_table(rows, baseline: str = "HAF") -> dict:
    """Per (scheme, mu_count): mean SW, ratio of means to the baseline, and a
    95% interval for the mean paired difference to the baseline."""
    by = {}
    for r in rows:
        if r["status"] == "ok":
            by.setdefault((r["scheme"], r["mu_count"]), {})[r["trial"]] = r["SW"]
    out = {}
    for (scheme, count), sw in sorted(by.items()):
        base = by.get((baseline, count), {})
        trials = sorted(set(sw) & set(base))
        entry = {"mean_sw": float(np.mean(list(sw.values()))), "trials": len(sw)}
        if trials:
            a = np.array([sw[t] for t in trials])
            b = np.array([base[t] for t in trials])
            entry["ratio"] = float(a.mean() / b.mean())
            entry["diff_ci95"] = paired_interval(a, b)
        out[(scheme, count)] = entry
    return out


def paired_interval(a, b, z: float = 1.96) -> tuple[float, float]:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    se = d.std(ddof=1) / math.sqrt(len(d)) if len(d) > 1 else 0.0
    return float(d.mean() - z * se), float(d.mean() + z * se)


# -- top2 sweep -------------------------------------------------------------

def sweep_fixture(cfg: ExperimentConfig):
    return generate_scenario(cfg.sweep_size, cfg.sweep_size, cfg.seed)


def sweep_target(cfg: ExperimentConfig, scenario) -> tuple[int, int]:
    """AP/cloudlet to sweep: configured, else the pair matched by the top2 = 1 pure strategy."""
    if cfg.ap_id is not None and cfg.cloudlet_id is not None:
        return cfg.ap_id, cfg.cloudlet_id
    params = MechanismParams(scheme=Scheme.TACDPP, top1=cfg.top1, top2=1, allow_untruthful=True)
    res = run_pipeline(scenario, params, seed=cfg.seed)
    if not res.outcome.sigma:
        return 1, 1
    ap = min(res.outcome.sigma)
    return ap, res.outcome.sigma[ap]


def cmd_sweep(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Budget-deviation curves of one AP under TACDpp for each top2 value."""
    sc = sweep_fixture(cfg)
    ap_id, k = sweep_target(cfg, sc)
    out = {}
    for top2 in cfg.top2_values:
        params = MechanismParams(scheme=Scheme.TACDPP, top1=cfg.top1, top2=top2, theta=cfg.theta,
                                 allow_untruthful=top2 < 2)
        res = ap_deviation_sweep(sc, ap_id, k, cfg.sweep_range[0], cfg.sweep_range[1], cfg.sweep_step,
                                 cfg.sweep_trials, params, seed=cfg.seed)
        out[top2] = res
        if write:
            path = Path(cfg.output_dir) / f"sweep_top2_{top2}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            res.to_csv(path)
    return out


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
