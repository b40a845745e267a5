"""Heaviest Access Point First: the non-auction comparison strategy.

APs ranked by total member workload are paired rank-by-rank with cloudlets
ranked by capacity.  Each AP serves the longest prefix of its sorted group
that fits, charging everyone the ratio of the last admitted MU.  A pair
trades when that budget covers the reserve price, and clears at the reserve
price.
"""
from __future__ import annotations

import numpy as np

from .matching import MatchingOutcome
from .model import Scenario
from .revenue import RevenueReport, RevenueTable, find_s, sort_group
from .settlement import Settlement, settle


def pairing(scenario: Scenario) -> list[tuple[int, int]]:
    """1-based (ap_id, cloudlet_id) pairs considered by HAF."""
    aps = sorted(scenario.aps, key=lambda ap: (-ap.total_workload, ap.id))
    cloudlets = sorted(scenario.cloudlets, key=lambda c: (-c.capacity, c.id))
    return [(ap.id, c.id) for ap, c in zip(aps, cloudlets)]


def haf_report(scenario: Scenario, ap_id: int, cloudlet_id: int, eps: float = 1e-9) -> RevenueReport:
    g = sort_group(scenario.aps[ap_id - 1], cloudlet_id)
    s = find_s(g, scenario.cloudlets[cloudlet_id - 1].capacity, eps)
    if s == 0:
        return RevenueReport(ap_id, cloudlet_id, 0.0, 0.0, (), {}, 0, 0)
    unit = g.pprs[s - 1]
    winners = g.order[:s]
    prices = {mu_id: unit * w for mu_id, w in zip(winners, g.workloads[:s])}
    return RevenueReport(ap_id, cloudlet_id, unit * g.prefix_workloads[s - 1], unit, winners, prices, s, s)


def haf(scenario: Scenario) -> tuple[MatchingOutcome, dict, Settlement]:
    eps = scenario.params.epsilon
    reports, sigma, ap_p, cl_p = {}, {}, {}, {}
    for i, k in pairing(scenario):
        report = haf_report(scenario, i, k, eps)
        reports[(i, k)] = report
        r_k = scenario.cloudlets[k - 1].reserve_price
        if report.m > 0 and report.revenue >= r_k:
            sigma[i] = k
            ap_p[i] = cl_p[k] = r_k
    outcome = MatchingOutcome(sigma, ap_p, cl_p, scenario.n_aps, scenario.n_cloudlets)
    return outcome, reports, settle(outcome, reports, scenario)


def haf_arrays(table: RevenueTable, total_workload: np.ndarray):
    """Array form of :func:`haf` on a prepared revenue table.

    Returns ``m, unit, R`` shaped ``(n, K)`` and ``sigma, price`` shaped
    ``(n,)``, matching the engine's per-trial layout.
    """
    a = table.arrays
    n, K = table.shape
    ap_order = np.lexsort((np.arange(n), -total_workload))
    cl_order = np.lexsort((np.arange(K), -a.capacity))
    m = np.zeros((n, K), dtype=np.int64)
    unit = np.zeros((n, K))
    R = np.zeros((n, K))
    sigma = np.full(n, -1, dtype=np.int64)
    price = np.zeros(n)
    for i, k in zip(ap_order, cl_order):
        s = table.s[i, k]
        if s == 0:
            continue
        u = table.pprs[i, k, s - 1]
        budget = u * table.prefix[i, k, s - 1]
        m[i, k], unit[i, k], R[i, k] = s, u, budget
        if budget >= a.reserve[k]:
            sigma[i] = k
            price[i] = a.reserve[k]
    return m, unit, R, sigma, price
