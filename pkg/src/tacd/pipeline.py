"""End-to-end runs: Stage I draw, Stage II matching, Stage III settlement.

:class:`Engine` runs batches of trials on one scenario with every stage in
array form.  :func:`run_pipeline` runs one trial and returns the readable
objects (reports, outcome, settlement) used by the CLI and the audits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .haf import haf, haf_arrays
from .matching import MatchingOutcome, asc_arrays
from .model import MechanismParams, Scenario, Scheme
from .revenue import RevenueTable, reports_from_table
from .rng import mechanism_draws
from .settlement import Settlement, settle


@dataclass
class Batch:
    """Stage I/II results of ``T`` trials; all indices 0-based."""

    m: np.ndarray        # (T, n, K)
    unit: np.ndarray     # (T, n, K)
    R: np.ndarray        # (T, n, K) revenue
    B: np.ndarray        # (T, n, K) submitted budgets
    sigma: np.ndarray    # (T, n), -1 unmatched
    price: np.ndarray    # (T, n) clearing price of each matched AP

    @property
    def trials(self) -> int:
        return self.sigma.shape[0]


@dataclass
class BatchSettlement:
    pay: np.ndarray      # (T, N) MU clearing price
    won: np.ndarray      # (T, N) bool
    u_mu: np.ndarray     # (T, N)
    u_ap: np.ndarray     # (T, n)
    u_cl: np.ndarray     # (T, n) utility of the cloudlet matched to each AP
    matched: np.ndarray  # (T, n) bool

    @property
    def sum_u_mu(self):
        return self.u_mu.sum(axis=1)

    @property
    def sum_u_ap(self):
        return self.u_ap.sum(axis=1)

    @property
    def sum_u_cloudlet(self):
        return self.u_cl.sum(axis=1)

    @property
    def social_welfare(self):
        return self.sum_u_mu + self.sum_u_ap + self.sum_u_cloudlet


class Engine:
    def __init__(self, scenario: Scenario, table: RevenueTable | None = None):
        self.scenario = scenario
        self.eps = scenario.params.epsilon
        self.arrays = scenario.arrays
        self.table = table if table is not None else RevenueTable(self.arrays, self.eps)
        self.ap_of_mu = self.arrays.ap_of_mu

    def draws(self, seed: int, trials: int, first_trial: int = 0):
        return mechanism_draws(seed, trials, self.arrays.n_aps, self.arrays.n_cloudlets, first_trial)

    def stage_one(self, params: MechanismParams, u1: np.ndarray, table: RevenueTable | None = None):
        table = table or self.table
        m = table.draw(u1, params.scheme, params.top1)
        return m, table.unit_price(m), table.revenue(m)

    def run(self, params: MechanismParams, draws, *, table: RevenueTable | None = None,
            budgets: np.ndarray | None = None, stage_one=None) -> Batch:
        """Run a batch.  ``budgets`` overrides the truthful ``B = R``."""
        u1, perm, u2 = draws
        if params.scheme is Scheme.HAF:
            m, unit, R, sigma, price = haf_arrays(table or self.table, self.total_workload)
            T = u1.shape[0]
            rep = lambda a: np.broadcast_to(a, (T,) + a.shape).copy()
            return Batch(rep(m), rep(unit), rep(R), rep(R), rep(sigma), rep(price))
        m, unit, R = stage_one if stage_one is not None else self.stage_one(params, u1, table)
        B = R if budgets is None else budgets
        sigma, price = asc_arrays(B, self.arrays.reserve, params.scheme, params, perm, u2)
        return Batch(m, unit, R, B, sigma, price)

    @property
    def total_workload(self) -> np.ndarray:
        a = self.arrays
        return np.add.reduceat(a.workloads, a.offsets[:-1]) if len(a.workloads) else np.zeros(a.n_aps)

    def settle(self, batch: Batch, table: RevenueTable | None = None) -> BatchSettlement:
        table = table or self.table
        a = self.arrays
        T = batch.trials
        rows = np.arange(T)[:, None]
        matched = batch.sigma >= 0
        k_ap = np.maximum(batch.sigma, 0)
        k_mu = k_ap[:, self.ap_of_mu]                              # (T, N)
        mu_matched = matched[:, self.ap_of_mu]
        m_mu = batch.m[rows, self.ap_of_mu[None, :], k_mu]
        rank = table.rank[np.arange(len(self.ap_of_mu))[None, :], k_mu]
        won = mu_matched & (rank < m_mu)
        unit_mu = batch.unit[rows, self.ap_of_mu[None, :], k_mu]
        pay = np.where(won, unit_mu * a.workloads[None, :], 0.0)
        value = a.valuations[np.arange(len(self.ap_of_mu))[None, :], k_mu]
        u_mu = np.where(won, value - pay, 0.0)
        R_won = batch.R[rows, np.arange(a.n_aps)[None, :], k_ap]
        u_ap = np.where(matched, R_won - batch.price, 0.0)
        u_cl = np.where(matched, batch.price - a.reserve[k_ap], 0.0)
        return BatchSettlement(pay, won, u_mu, u_ap, u_cl, matched)

    def audit(self, batch: Batch, st: BatchSettlement, table: RevenueTable | None = None,
              eps: float | None = None) -> np.ndarray:
        """Per-trial flag: individual rationality and budget balance both hold."""
        table = table or self.table
        eps = self.eps if eps is None else eps
        a = self.arrays
        T = batch.trials
        rows = np.arange(T)[:, None]
        k_ap = np.maximum(batch.sigma, 0)
        k_mu = k_ap[:, self.ap_of_mu]
        bids = table.arrays.bids[np.arange(len(self.ap_of_mu))[None, :], k_mu]
        ok = np.all(~st.won | (st.pay <= bids + eps), axis=1)
        ok &= np.all(st.won | (st.pay == 0.0), axis=1)
        B_won = batch.B[rows, np.arange(a.n_aps)[None, :], k_ap]
        R_won = batch.R[rows, np.arange(a.n_aps)[None, :], k_ap]
        P = batch.price
        ok &= np.all(~st.matched | (P >= a.reserve[k_ap] - eps), axis=1)
        ok &= np.all(~st.matched | (P <= B_won + eps), axis=1)
        truthful = batch.B is batch.R
        if truthful:
            ok &= np.all(~st.matched | (B_won <= R_won + eps), axis=1)
        # no cloudlet assigned twice
        ks = np.sort(np.where(st.matched, batch.sigma, -1 - np.arange(a.n_aps)[None, :]), axis=1)
        ok &= np.all(np.diff(ks, axis=1) != 0, axis=1)

        val1 = st.pay.sum(axis=1)
        val2 = np.where(st.matched, P, 0.0).sum(axis=1)
        val3 = np.where(st.matched, R_won - P, 0.0).sum(axis=1)
        val4 = np.where(st.matched, B_won, 0.0).sum(axis=1)
        scale = np.maximum(1.0, np.maximum(np.abs(val1), np.abs(val4)))
        ok &= np.abs(val1 - (val2 + val3)) <= eps * scale
        if truthful:
            ok &= np.abs(val1 - val4) <= eps * scale
        return ok


@dataclass
class PipelineResult:
    scheme: Scheme
    reports: dict              # (ap_id, cloudlet_id) -> RevenueReport
    outcome: MatchingOutcome
    settlement: Settlement
    m: np.ndarray              # (n, K) chosen m, 0-based pairs


def run_pipeline(scenario: Scenario, params: MechanismParams | None = None, seed: int | None = None,
                 trial: int = 0, engine: Engine | None = None) -> PipelineResult:
    """One full auction on ``scenario``; ``seed`` defaults to the scenario's."""
    params = params or scenario.params
    seed = scenario.seed if seed is None else seed
    if params.scheme is Scheme.HAF:
        outcome, reports, st = haf(scenario)
        m = np.zeros((scenario.n_aps, scenario.n_cloudlets), dtype=np.int64)
        for (i, k), r in reports.items():
            m[i - 1, k - 1] = r.m
        return PipelineResult(Scheme.HAF, reports, outcome, st, m)
    engine = engine or Engine(scenario)
    batch = engine.run(params, engine.draws(seed, 1, trial))
    outcome = MatchingOutcome.from_arrays(batch.sigma[0], batch.price[0], scenario.n_cloudlets)
    m = batch.m[0]
    reports = reports_from_table(engine.table, m, scenario.mu_ids)
    return PipelineResult(params.scheme, reports, outcome, settle(outcome, reports, scenario), m)
