import numpy as np
import pytest

from tacd.fixtures import table3_scenario
from tacd.haf import haf, haf_arrays, haf_report, pairing
from tacd.model import MechanismParams
from tacd.pipeline import Engine, run_pipeline
from tacd.revenue import RevenueTable
from tacd.scenario import generate_scenario


def test_table3_ap_on_c1():
    r = haf_report(table3_scenario(), 1, 1)
    assert r.s == r.m == 8
    assert r.unit_price == pytest.approx(2.7)
    assert r.revenue == pytest.approx(43.74)
    assert r.winners == (4, 1, 5, 9, 6, 10, 2, 3)


def test_pairing_heaviest_first():
    sc = generate_scenario(6, 4, seed=2)
    pairs = pairing(sc)
    assert len(pairs) == 4
    loads = [sc.aps[i - 1].total_workload for i, _ in pairs]
    caps = [sc.cloudlets[k - 1].capacity for _, k in pairs]
    assert loads == sorted(loads, reverse=True)
    assert caps == sorted(caps, reverse=True)


def test_cloudlet_utility_zero_and_last_winner_zero():
    sc = generate_scenario(12, 12, seed=8)
    outcome, reports, st = haf(sc)
    assert outcome.sigma
    assert all(u == 0.0 for u in st.cloudlet_utilities.values())
    for i, k in outcome.sigma.items():
        last = reports[(i, k)].winners[-1]
        assert st.mu_utilities[(i, last)] == pytest.approx(0.0, abs=1e-12)
        assert st.ap_utilities[i] == pytest.approx(reports[(i, k)].revenue - sc.cloudlets[k - 1].reserve_price)


def test_deterministic_regardless_of_seed():
    sc = generate_scenario(9, 9, seed=4)
    a = run_pipeline(sc, MechanismParams(scheme="HAF"), seed=1)
    b = run_pipeline(sc, MechanismParams(scheme="HAF"), seed=999)
    assert a.outcome == b.outcome
    assert a.settlement.social_welfare == b.settlement.social_welfare


def test_array_form_matches_object_form():
    sc = generate_scenario(10, 7, seed=13)
    eng = Engine(sc)
    m, unit, R, sigma, price = haf_arrays(RevenueTable(sc.arrays), eng.total_workload)
    outcome, reports, st = haf(sc)
    assert {i + 1: int(k) + 1 for i, k in enumerate(sigma) if k >= 0} == outcome.sigma
    for (i, k), r in reports.items():
        assert R[i - 1, k - 1] == pytest.approx(r.revenue)
    batch = eng.run(MechanismParams(scheme="HAF"), eng.draws(0, 2))
    assert eng.settle(batch).social_welfare[0] == pytest.approx(st.social_welfare)


def test_haf_unit_price_not_above_tacd():
    sc = generate_scenario(8, 8, seed=21)
    table = RevenueTable(sc.arrays)
    for (i, k) in pairing(sc):
        s = table.s[i - 1, k - 1]
        if s < 2:
            continue
        h = haf_report(sc, i, k)
        for m in range(1, s):
            assert h.unit_price <= table.pprs[i - 1, k - 1, m] + 1e-12
