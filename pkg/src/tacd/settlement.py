"""Stage III: charge winner MUs, compute utilities, welfare and the audits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .matching import MatchingOutcome
from .model import Scenario, cost_of_service


class SettlementError(RuntimeError):
    """The pipeline handed over inconsistent stage outputs."""


@dataclass(frozen=True)
class Settlement:
    mu_clearing: dict = field(default_factory=dict)         # (ap_id, mu_id) -> p_i^j
    mu_utilities: dict = field(default_factory=dict)        # (ap_id, mu_id) -> u_i^j
    ap_utilities: dict = field(default_factory=dict)        # ap_id -> u_i
    cloudlet_utilities: dict = field(default_factory=dict)  # cloudlet_id -> u^k
    social_welfare: float = 0.0
    served_workload: dict = field(default_factory=dict)     # cloudlet_id -> w(k)
    service_cost: dict = field(default_factory=dict)        # cloudlet_id -> Cos(k)

    @property
    def sum_u_mu(self) -> float:
        return math.fsum(self.mu_utilities.values())

    @property
    def sum_u_ap(self) -> float:
        return math.fsum(self.ap_utilities.values())

    @property
    def sum_u_cloudlet(self) -> float:
        return math.fsum(self.cloudlet_utilities.values())


def _report_map(reports) -> dict:
    if isinstance(reports, dict):
        return reports
    return {(r.ap_id, r.cloudlet_id): r for r in reports}


def settle(outcome: MatchingOutcome, reports, scenario: Scenario) -> Settlement:
    reports = _report_map(reports)
    mu_p, mu_u = {}, {}
    for ap in scenario.aps:
        for mu in ap.members:
            mu_p[(ap.id, mu.mu_id)] = 0.0
            mu_u[(ap.id, mu.mu_id)] = 0.0
    ap_u = {ap.id: 0.0 for ap in scenario.aps}
    cl_u = {c.id: 0.0 for c in scenario.cloudlets}
    served, cost = {}, {}

    for i, k in outcome.sigma.items():
        report = reports.get((i, k))
        if report is None:
            raise SettlementError(f"no revenue report for matched pair (AP {i}, cloudlet {k})")
        load = 0.0
        for mu_id in report.winners:
            mu = scenario.mu(i, mu_id)
            p = report.potential_prices[mu_id]
            mu_p[(i, mu_id)] = p
            mu_u[(i, mu_id)] = mu.valuations[k - 1] - p
            load += mu.workload
        ap_u[i] = report.revenue - outcome.ap_clearing[i]
        cloudlet = scenario.cloudlets[k - 1]
        cl_u[k] = outcome.cloudlet_clearing[k] - cloudlet.reserve_price
        served[k] = load
        cost[k] = cost_of_service(cloudlet, min(load, cloudlet.capacity))

    sw = math.fsum(mu_u.values()) + math.fsum(ap_u.values()) + math.fsum(cl_u.values())
    return Settlement(mu_p, mu_u, ap_u, cl_u, sw, served, cost)


def untruthful_utility(truthful_value: float, clearing: float, won: bool, theta: float) -> float:
    """Utility of a participant that paid ``theta`` to craft its bid."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    return truthful_value - clearing - theta if won else -theta


def check_individual_rationality(settlement: Settlement, outcome: MatchingOutcome, reports,
                                 scenario: Scenario, budgets=None, eps: float = 1e-9
                                 ) -> tuple[bool, list[str]]:
    """Every trade is voluntary for MUs, APs and cloudlets.

    ``budgets`` maps ``(ap_id, cloudlet_id)`` to the submitted ``B``; it
    defaults to the reported revenue (truthful APs).
    """
    reports = _report_map(reports)
    problems = []
    for i, k in outcome.sigma.items():
        report = reports[(i, k)]
        for mu_id in report.winners:
            bid = scenario.mu(i, mu_id).bids[k - 1]
            if settlement.mu_clearing[(i, mu_id)] > bid + eps:
                problems.append(f"MU ({i},{mu_id}) pays {settlement.mu_clearing[(i, mu_id)]} > bid {bid}")
        r_k = scenario.cloudlets[k - 1].reserve_price
        P = outcome.ap_clearing[i]
        if outcome.cloudlet_clearing[k] < r_k - eps:
            problems.append(f"cloudlet {k} paid {outcome.cloudlet_clearing[k]} < reserve {r_k}")
        B = report.revenue if budgets is None else budgets[(i, k)]
        if not P <= B + eps:
            problems.append(f"AP {i} clears at {P} > budget {B}")
        if budgets is None and not B <= report.revenue + eps:
            problems.append(f"AP {i} budget {B} > revenue {report.revenue}")
        if abs(outcome.cloudlet_clearing[k] - P) > eps:
            problems.append(f"pair ({i},{k}) clearing prices differ")
    for key, p in settlement.mu_clearing.items():
        i = key[0]
        if p != 0.0 and (i not in outcome.sigma or key[1] not in reports[(i, outcome.sigma[i])].winners):
            problems.append(f"loser MU {key} charged {p}")
    return not problems, problems


def check_budget_balance(settlement: Settlement, outcome: MatchingOutcome, reports, budgets=None,
                         eps: float = 1e-9) -> tuple[bool, dict]:
    """Payments from MUs equal cloudlet receipts plus AP margins.

    Ledger: ``val1`` MU payments, ``val2`` cloudlet receipts, ``val3`` AP
    margins ``R - P``, ``val4`` submitted AP budgets of the winners.
    """
    reports = _report_map(reports)
    val1 = math.fsum(settlement.mu_clearing.values())
    val2 = math.fsum(outcome.cloudlet_clearing[k] for k in outcome.sigma.values())
    val3 = math.fsum(reports[(i, k)].revenue - outcome.ap_clearing[i] for i, k in outcome.sigma.items())
    val4 = math.fsum((reports[(i, k)].revenue if budgets is None else budgets[(i, k)])
                     for i, k in outcome.sigma.items())
    scale = max(1.0, abs(val1), abs(val4))
    ok = abs(val1 - val4) <= eps * scale and abs(val4 - (val2 + val3)) <= eps * scale
    ledger = {"val1": val1, "val2": val2, "val3": val3, "val4": val4, "balanced": ok}
    if not ok:
        ledger["violation"] = (f"val1={val1!r} val4={val4!r} val2+val3={val2 + val3!r}")
    return ok, ledger


def write_settlement_csv(settlement: Settlement, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entity", "ap_id", "id", "clearing", "utility"])
        for (i, j), u in sorted(settlement.mu_utilities.items()):
            writer.writerow(["mu", i, j, repr(settlement.mu_clearing[(i, j)]), repr(u)])
        for i, u in sorted(settlement.ap_utilities.items()):
            writer.writerow(["ap", i, i, "", repr(u)])
        for k, u in sorted(settlement.cloudlet_utilities.items()):
            writer.writerow(["cloudlet", "", k, "", repr(u)])
        writer.writerow(["social_welfare", "", "", "", repr(settlement.social_welfare)])


def write_ledger_csv(ledger: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["val1", "val2", "val3", "val4", "balanced"])
        writer.writerow([repr(ledger["val1"]), repr(ledger["val2"]), repr(ledger["val3"]),
                         repr(ledger["val4"]), ledger["balanced"]])
