"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (about two minutes);
the collected lines are repeated in the terminal summary.
"""
import itertools
import math
import sys
import time

import numpy as np
import pytest

from tacd.experiments import ExperimentConfig, cmd_example, cmd_run, paired_interval
from tacd.fixtures import table3_market, table3_scenario
from tacd.haf import haf
from tacd.harness import (DeviationProbe, brute_force_matching_oracle, complexity_probe, mu_deviation_gain,
                          random_probes, truthfulness_suite)
from tacd.matching import asc, matched_profit, selector_for
from tacd.model import MechanismParams
from tacd.pipeline import Engine, run_pipeline
from tacd.revenue import find_s, gtr, mean_revenue, sort_group, tacd_m_range, topk_indices
from tacd.rng import mix, substream
from tacd.scenario import generate_scenario
from tacd.settlement import check_budget_balance, check_individual_rationality

RESULTS = []
SCHEMES = ["TACD", "TACDp", "TACDpp", "HAF"]


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# -- 1, 2: worked example ----------------------------------------------------

def test_c1_golden_example():
    t0 = time.perf_counter()
    ok, text = cmd_example()
    elapsed = time.perf_counter() - t0
    record("C1 golden example", ok and elapsed < 1.0, f"{text.splitlines()[-1]}, {elapsed:.3f} s")
    assert ok, text
    assert elapsed < 1.0


def test_c2_m_rule_cross_check():
    ap = table3_scenario().aps[0]
    g = sort_group(ap, 2)
    s = find_s(g, 22.0)
    S = gtr(g, s)
    tacd = mean_revenue(S, tacd_m_range(s))
    top = mean_revenue(S, topk_indices(S, 3))
    ok = abs(tacd - 36.78) <= 0.1 and abs(top - 39.56) <= 0.1
    record("C2 m-rule means", ok, f"TACD {tacd:.3f} (want 36.78), TACDp top-3 {top:.3f} (want 39.56)")
    assert ok


# -- 3, 4: welfare experiments ------------------------------------------------

@pytest.fixture(scope="module")
def balanced_rows():
    cfg = ExperimentConfig(schemes=SCHEMES, mu_counts=[1000, 1200, 1400], trials=200, seed=2024)
    t0 = time.perf_counter()
    rows = cmd_run(cfg, out_path=False)
    return rows, time.perf_counter() - t0


def _sw(rows, scheme, count):
    got = sorted((r["trial"], r["SW"]) for r in rows if r["scheme"] == scheme and r["mu_count"] == count)
    return np.array([sw for _, sw in got])


BANDS = {1000: {"TACD": 0.95, "TACDp": 1.045, "TACDpp": 1.056},
         1400: {"TACD": 0.983, "TACDp": 1.076, "TACDpp": 1.079}}


def test_c3_social_welfare(balanced_rows):
    rows, elapsed = balanced_rows
    assert all(r["status"] == "ok" for r in rows)
    lines, in_band = [], True
    for count, targets in BANDS.items():
        haf_sw = _sw(rows, "HAF", count)
        for scheme, want in targets.items():
            ratio = _sw(rows, scheme, count).mean() / haf_sw.mean()
            hit = abs(ratio - want) <= 0.03
            in_band &= hit
            lines.append(f"{scheme}@{count} {ratio:.3f} (band {want}±0.03 {'in' if hit else 'out'})")

    order_ok = True
    for count in (1200, 1400):
        pp, p, t, h = (_sw(rows, s, count) for s in ("TACDpp", "TACDp", "TACD", "HAF"))
        lo_pp_p, hi_pp_p = paired_interval(pp, p)
        lo_p_t, _ = paired_interval(p, t)
        lo_pp_h, _ = paired_interval(pp, h)
        # ">=": TACDpp not significantly below TACDp; ">": lower bound above zero
        ok = hi_pp_p >= 0 and lo_p_t > 0 and lo_pp_h > 0
        order_ok &= ok
        lines.append(f"order@{count} pp-p [{lo_pp_p:.1f},{hi_pp_p:.1f}] p-t>{lo_p_t:.1f} pp-haf>{lo_pp_h:.1f}"
                     f" {'ok' if ok else 'violated'}")
    ok = (in_band or order_ok) and elapsed < 600
    how = "bands" if in_band else "ordering fallback"
    record("C3 social welfare", ok, f"{how}; " + "; ".join(lines) + f"; {elapsed:.0f} s")
    assert ok


def test_c4_unbalanced_market():
    cfg = ExperimentConfig(schemes=["TACDp", "TACDpp"], mu_counts=[1000, 1400], trials=200, seed=2024,
                           market={"mode": "unbalanced", "k_ratio": 0.7})
    rows = cmd_run(cfg, out_path=False)
    parts, ok = [], True
    for count in cfg.mu_counts:
        lo, hi = paired_interval(_sw(rows, "TACDpp", count), _sw(rows, "TACDp", count))
        ok &= lo >= 0
        parts.append(f"{count} MUs: TACDpp-TACDp 95% CI [{lo:.1f}, {hi:.1f}]")
    record("C4 unbalanced TACDpp >= TACDp", ok, "; ".join(parts))
    assert ok


# -- 5: economic properties -----------------------------------------------------

def test_c5_individual_rationality_and_budget_balance():
    runs = failures = 0
    per_scenario = 40
    for idx in range(70):
        sc = generate_scenario(10, 10, seed=mix(555, idx))
        eng = Engine(sc)
        draws = eng.draws(mix(556, idx), per_scenario)
        for scheme in SCHEMES:
            params = MechanismParams(scheme=scheme, top1=2, top2=2)
            batch = eng.run(params, draws)
            ok = eng.audit(batch, eng.settle(batch), eps=1e-9)
            runs += len(ok)
            failures += int((~ok).sum())
    # object-layer checks on a slice of the same runs
    obj_runs = obj_fail = 0
    for idx in range(25):
        sc = generate_scenario(10, 10, seed=mix(555, idx))
        for scheme in SCHEMES:
            res = run_pipeline(sc, MechanismParams(scheme=scheme, top1=2, top2=2), seed=mix(556, idx))
            ir, _ = check_individual_rationality(res.settlement, res.outcome, res.reports, sc, eps=1e-9)
            bb, _ = check_budget_balance(res.settlement, res.outcome, res.reports, eps=1e-9)
            obj_runs += 1
            obj_fail += int(not (ir and bb))
    ok = runs >= 10_000 and failures == 0 and obj_fail == 0
    record("C5 IR and budget balance", ok,
           f"{runs} vectorized runs, {failures} violations; {obj_runs} object-level runs, {obj_fail} violations")
    assert ok


# -- 6: truthfulness ----------------------------------------------------------

TRUTH_CONFIGS = [("TACD", 3, 2), ("TACDp", 2, 2), ("TACDp", 3, 2), ("TACDpp", 2, 2)]


@pytest.mark.parametrize("kind", ["mu", "ap"])
@pytest.mark.parametrize("scheme,top1,top2", TRUTH_CONFIGS)
def test_c6_truthfulness(scheme, top1, top2, kind):
    sc = generate_scenario(10, 10, seed=123)
    params = MechanismParams(scheme=scheme, top1=top1, top2=top2)
    probes = random_probes(sc, 50, seed=7, trials=10_000, kind=kind)
    stats = truthfulness_suite(sc, params, probes, seed=99)
    bad = [(p, s) for p, s in zip(probes, stats) if not s.within(3.0)]
    worst = max(stats, key=lambda s: s.mean_gain / max(s.stderr, 1e-12))
    detail = (f"{len(bad)}/50 {kind.upper()} probes above 0 + 3 SE"
              f" (worst gain {worst.mean_gain:.3f} ± {worst.stderr:.3f})")
    if bad:
        p, s = bad[0]
        detail += f"; e.g. target {p.target} C{p.dimension} bid {p.deviated_bid:+.2f} gain {s.mean_gain:.3f}"
    record(f"C6 truthfulness {scheme} top1={top1} top2={top2} {kind.upper()}", not bad, detail)
    assert not bad


def test_c6_always_max_mutation_detected():
    params = MechanismParams(scheme="TACDp", top1=1, allow_untruthful=True)
    stats = mu_deviation_gain(table3_market(params), DeviationProbe((1, 5), 2, 4.32, trials=10_000), params)
    ok = stats.profitable() and abs(stats.deviated_mean - 0.96) < 1e-9
    record("C6 mutation (always-max) detected", ok,
           f"untruthful utility {stats.deviated_mean:.2f} vs truthful {stats.truthful_mean:.2f},"
           f" gain {stats.mean_gain:.2f}")
    assert ok


# -- 7, 8: HAF and oracle -----------------------------------------------------

def test_c7_haf_cloudlet_utility_zero():
    trades = nonzero = 0
    for idx in range(500):
        rng = substream(idx, "probe", trial=7)
        n, K = int(rng.integers(2, 40)), int(rng.integers(2, 40))
        outcome, _, st = haf(generate_scenario(n, K, seed=mix(777, idx)))
        for k in outcome.sigma.values():
            trades += 1
            nonzero += st.cloudlet_utilities[k] != 0.0
    ok = trades > 0 and nonzero == 0
    record("C7 HAF u^k = 0", ok, f"{trades} executed trades, {nonzero} with nonzero cloudlet utility")
    assert ok


def test_c8_oracle_bound():
    worse = 0
    checked = 0
    for idx in range(1000):
        rng = substream(idx, "probe", trial=8)
        n, K = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        scheme = SCHEMES[idx % 3]
        sc = generate_scenario(n, K, seed=mix(888, idx))
        params = MechanismParams(scheme=scheme, top1=2, top2=2)
        eng = Engine(sc)
        batch = eng.run(params, eng.draws(idx, 1))
        B, r = batch.B[0], sc.arrays.reserve
        out = asc(B, r, selector_for(scheme), params, rng)
        best = brute_force_matching_oracle(B, r)
        for profit in (matched_profit(out, B, r),
                       float(sum(B[i, k] - r[k] for i, k in enumerate(batch.sigma[0]) if k >= 0))):
            checked += 1
            worse += profit > best + 1e-9
    ok = worse == 0
    record("C8 ASC <= oracle", ok, f"{checked} ASC outcomes on 1000 instances, {worse} above the oracle")
    assert ok


# -- 9: complexity ------------------------------------------------------------

def test_c9_complexity():
    sizes = [40, 80, 160, 320]
    rows = complexity_probe(sizes, schemes=("TACD", "TACDp", "TACDpp"), seed=3, repeats=7, mus_per_ap=17)
    t = {(r["scheme"], r["n"]): r["seconds"] for r in rows}
    ratios = {s: [t[(s, b)] / t[(s, a)] for a, b in zip(sizes, sizes[1:])] for s in ("TACD", "TACDp")}
    slowdown = [t[("TACDpp", n)] / t[("TACDp", n)] for n in sizes]
    doubling_ok = all(x < 8 for v in ratios.values() for x in v)
    slope = np.polyfit(np.log(sizes), np.log(slowdown), 1)[0]
    trend_ok = slope > 0 and slowdown[-1] > slowdown[0]
    fmt = lambda xs: "/".join(f"{x:.1f}" for x in xs)
    record("C9 complexity", doubling_ok and trend_ok,
           f"doubling ratios TACD {fmt(ratios['TACD'])}, TACDp {fmt(ratios['TACDp'])};"
           f" TACDpp/TACDp {fmt(slowdown)} (slope {slope:.2f})")
    assert doubling_ok and trend_ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
