"""Executable checks of the economic claims.

Truthfulness is a statement about expected utility under the mechanism's
own randomness, so every deviation probe reports a mean gain with its
standard error.  Common random numbers run the truthful and the deviated
auction on identical draws, which isolates the deviation's effect.
"""
from __future__ import annotations

import csv
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import MechanismParams, Scenario, Scheme
from .pipeline import Engine
from .rng import mechanism_draws, mix, substream
from .scenario import generate_scenario


@dataclass(frozen=True)
class DeviationProbe:
    """One unilateral deviation.

    ``target`` is ``(ap_id, mu_id)`` for an MU or ``ap_id`` for an AP.
    ``dimension`` is the 1-based cloudlet whose bid changes.  With
    ``relative`` (APs only) ``deviated_bid`` is added to the truthful budget
    of each trial instead of replacing it.
    """

    target: object
    dimension: int
    deviated_bid: float
    theta: float = 0.0
    trials: int = 10_000
    common_random: bool = True
    relative: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.deviated_bid < 0 and not self.relative:
            raise ValueError("deviated bid must be >= 0")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")


@dataclass(frozen=True)
class DeviationStats:
    mean_gain: float
    stderr: float
    truthful_mean: float
    deviated_mean: float
    trials: int

    def profitable(self, z: float = 3.0) -> bool:
        """Gain significantly above zero."""
        return self.mean_gain - z * self.stderr > 0

    def within(self, z: float = 3.0) -> bool:
        """Gain not above zero by more than ``z`` standard errors."""
        return self.mean_gain <= z * self.stderr


def _stats(u_true: np.ndarray, u_dev: np.ndarray, paired: bool) -> DeviationStats:
    T = len(u_true)
    if paired:
        diff = u_dev - u_true
        se = diff.std(ddof=1) / math.sqrt(T) if T > 1 else 0.0
        mean = diff.mean()
    else:
        mean = u_dev.mean() - u_true.mean()
        se = math.sqrt((u_dev.var(ddof=1) + u_true.var(ddof=1)) / T) if T > 1 else 0.0
    return DeviationStats(float(mean), float(se), float(u_true.mean()), float(u_dev.mean()), T)


def _mu_row(scenario: Scenario, ap_id: int, mu_id: int) -> int:
    return scenario.mu_ids.index((ap_id, mu_id))


def _dev_draws(engine: Engine, seed: int, probe: DeviationProbe, draws):
    if probe.common_random:
        return draws
    return engine.draws(mix(seed, 0xDE), probe.trials)


def mu_deviation_gain(scenario: Scenario, probe: DeviationProbe, params: MechanismParams | None = None,
                      seed: int = 0, *, engine: Engine | None = None, draws=None, truthful=None
                      ) -> DeviationStats:
    """Mean of (utility when bidding ``deviated_bid``) minus (truthful utility) for one MU.

    ``draws`` and ``truthful`` (a ``(batch, settlement)`` pair) let callers
    share the truthful runs across many probes on the same scenario.
    """
    params = params or scenario.params
    engine = engine or Engine(scenario)
    ap_id, mu_id = probe.target
    k = probe.dimension - 1
    row = _mu_row(scenario, ap_id, mu_id)
    draws = draws or engine.draws(seed, probe.trials)
    if truthful is None:
        batch = engine.run(params, draws)
        truthful = (batch, engine.settle(batch))
    u_true = truthful[1].u_mu[:, row]

    a = engine.arrays
    lo, hi = a.offsets[ap_id - 1], a.offsets[ap_id]
    bids_i = a.bids[lo:hi].copy()
    bids_i[row - lo, k] = probe.deviated_bid
    table = engine.table.patched(ap_id - 1, bids_i, engine.eps)
    dev = engine.run(params, _dev_draws(engine, seed, probe, draws), table=table)
    u_dev = engine.settle(dev, table=table).u_mu[:, row] - probe.theta
    return _stats(u_true, u_dev, probe.common_random)


def ap_deviation_gain(scenario: Scenario, probe: DeviationProbe, params: MechanismParams | None = None,
                      seed: int = 0, *, engine: Engine | None = None, draws=None, truthful=None
                      ) -> DeviationStats:
    """Mean utility gain of an AP that submits a budget other than its revenue."""
    params = params or scenario.params
    if params.scheme is Scheme.HAF:
        raise ValueError("HAF has no budget submission to deviate from")
    engine = engine or Engine(scenario)
    i = probe.target - 1
    k = probe.dimension - 1
    draws = draws or engine.draws(seed, probe.trials)
    if truthful is None:
        batch = engine.run(params, draws)
        truthful = (batch, engine.settle(batch))
    batch, st = truthful
    u_true = st.u_ap[:, i]

    dev_draws = _dev_draws(engine, seed, probe, draws)
    stage_one = (batch.m, batch.unit, batch.R) if probe.common_random else engine.stage_one(params, dev_draws[0])
    B = stage_one[2].copy()
    B[:, i, k] = np.maximum(B[:, i, k] + probe.deviated_bid if probe.relative else probe.deviated_bid, 0.0)
    dev = engine.run(params, dev_draws, budgets=B, stage_one=stage_one)
    u_dev = engine.settle(dev).u_ap[:, i] - probe.theta
    return _stats(u_true, u_dev, probe.common_random)


@dataclass
class SweepResult:
    ap_id: int
    cloudlet_id: int
    truthful_budget: float
    offsets: np.ndarray
    deviated_bid: np.ndarray
    truthful_mean: np.ndarray
    truthful_stderr: np.ndarray
    deviated_mean: np.ndarray
    deviated_stderr: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["deviated_bid", "mean_utility", "stderr", "truthful_mean", "truthful_stderr"])
            for row in zip(self.deviated_bid, self.deviated_mean, self.deviated_stderr,
                           self.truthful_mean, self.truthful_stderr):
                writer.writerow([repr(float(v)) for v in row])


def ap_deviation_sweep(scenario: Scenario, ap_id: int, k: int, lo: float = -80.0, hi: float = 50.0,
                       step: float = 1.0, trials: int = 100, params: MechanismParams | None = None,
                       seed: int = 0, theta: float | None = None) -> SweepResult:
    """AP utility as its budget on cloudlet ``k`` sweeps ``[B + lo, B + hi]``.

    Stage I is drawn once and frozen, so the truthful budget is one number.
    Each grid point averages ``trials`` fresh Stage II instances, shared by
    the truthful and deviated runs of that point.
    """
    params = params or scenario.params
    theta = params.theta if theta is None else theta
    engine = Engine(scenario)
    n, K = engine.table.shape
    i, kk = ap_id - 1, k - 1
    u1 = substream(seed, "stage1").random((1, n, K))
    m, unit, R = engine.stage_one(params, u1)
    offsets = np.arange(lo, hi + step / 2, step)
    truthful_budget = float(R[0, i, kk])

    t_mean, t_se, d_mean, d_se = [], [], [], []
    for g, off in enumerate(offsets):
        _, perm, u2 = mechanism_draws(seed, trials, n, K, first_trial=1 + g * trials)
        u1b = np.broadcast_to(u1, (trials, n, K))
        s1 = tuple(np.broadcast_to(x, (trials, n, K)).copy() for x in (m, unit, R))
        base = engine.run(params, (u1b, perm, u2), stage_one=s1)
        u_true = engine.settle(base).u_ap[:, i]
        B = s1[2].copy()
        B[:, i, kk] = max(truthful_budget + off, 0.0)
        dev = engine.run(params, (u1b, perm, u2), budgets=B, stage_one=s1)
        u_dev = engine.settle(dev).u_ap[:, i] - theta
        sd = lambda x: x.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
        t_mean.append(u_true.mean()), t_se.append(sd(u_true))
        d_mean.append(u_dev.mean()), d_se.append(sd(u_dev))
    return SweepResult(ap_id, k, truthful_budget, offsets, np.maximum(truthful_budget + offsets, 0.0),
                       np.array(t_mean), np.array(t_se), np.array(d_mean), np.array(d_se))


def _eligible(B: np.ndarray, reserve: np.ndarray) -> np.ndarray:
    n, K = B.shape
    ok = np.zeros((n, K), dtype=bool)
    for i in range(n):
        for k in range(K):
            if B[i, k] - reserve[k] <= 0:
                continue
            ok[i, k] = any(reserve[k] <= B[j, k] <= B[i, k] for j in range(n) if j != i)
    return ok


def brute_force_matching_oracle(B, reserve) -> float:
    """Best total profit over all one-to-one matchings whose pairs could clear.

    A pair (i, k) is admissible when ``B[i, k] > r_k`` and some other AP bids
    on k inside ``[r_k, B[i, k]]``.  Exhaustive; limited to 8 x 8.
    """
    B = np.asarray(B, dtype=np.float64)
    reserve = np.asarray(reserve, dtype=np.float64)
    n, K = B.shape
    if n > 8 or K > 8:
        raise ValueError(f"instance {n}x{K} too large for exhaustive search (max 8x8)")
    ok = _eligible(B, reserve)
    D = B - reserve[None, :]
    best = 0.0
    # every subset of APs, assigned to every ordered choice of distinct cloudlets
    for size in range(1, min(n, K) + 1):
        for aps in itertools.combinations(range(n), size):
            for cls in itertools.permutations(range(K), size):
                if all(ok[i, k] for i, k in zip(aps, cls)):
                    best = max(best, sum(D[i, k] for i, k in zip(aps, cls)))
    return float(best)


def complexity_probe(sizes, schemes=("TACD", "TACDp", "TACDpp"), seed: int = 0, repeats: int = 3,
                     mus_per_ap: int | None = None) -> list[dict]:
    """Wall time of one pipeline run per (scheme, n = K), best of ``repeats``.

    The minimum is the least noisy estimate for millisecond-scale runs.
    Member counts follow the usual distribution unless ``mus_per_ap`` pins
    them.  A tiny run of each scheme first absorbs JIT warm-up.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be increasing")
    rows = []
    for scheme in schemes:
        params = MechanismParams(scheme=scheme, top1=2, top2=2)
        warm = generate_scenario(2, 2, seed)
        Engine(warm).run(params, Engine(warm).draws(seed, 1))
        for n in sizes:
            counts = None if mus_per_ap is None else [mus_per_ap] * n
            sc = generate_scenario(n, n, mix(seed, n), params, counts=counts)
            times = []
            for r in range(repeats):
                t0 = time.perf_counter()
                eng = Engine(sc)
                eng.settle(eng.run(params, eng.draws(seed, 1, r)))
                times.append(time.perf_counter() - t0)
            rows.append({"scheme": Scheme.parse(scheme).value, "n": n, "seconds": float(min(times))})
    return rows


def growth_exponents(rows: list[dict]) -> dict:
    """Least-squares slope of log(time) against log(n) per scheme."""
    out = {}
    for scheme in sorted({r["scheme"] for r in rows}):
        pts = [(r["n"], r["seconds"]) for r in rows if r["scheme"] == scheme]
        if len(pts) >= 2:
            x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
            out[scheme] = float(np.polyfit(x, y, 1)[0])
    return out


def random_probes(scenario: Scenario, count: int, seed: int, trials: int, kind: str,
                  ap_offsets=(-80.0, 50.0)) -> list[DeviationProbe]:
    """Random unilateral deviations.

    MUs: uniform MU and cloudlet, bid uniform on ``[0, 2 v]``.  APs: uniform
    AP and cloudlet, budget offset uniform on ``ap_offsets`` from the
    truthful budget.
    """
    rng = substream(seed, "probe", trial=0 if kind == "mu" else 1)
    K = scenario.n_cloudlets
    probes = []
    for _ in range(count):
        k = int(rng.integers(1, K + 1))
        if kind == "mu":
            ap_id, mu_id = scenario.mu_ids[int(rng.integers(scenario.n_mus))]
            v = scenario.mu(ap_id, mu_id).valuations[k - 1]
            probes.append(DeviationProbe((ap_id, mu_id), k, float(rng.uniform(0.0, 2.0 * v)), trials=trials))
        elif kind == "ap":
            ap_id = int(rng.integers(1, scenario.n_aps + 1))
            probes.append(DeviationProbe(ap_id, k, float(rng.uniform(*ap_offsets)), trials=trials, relative=True))
        else:
            raise ValueError(f"unknown probe kind {kind!r}")
    return probes


def truthfulness_suite(scenario: Scenario, params: MechanismParams, probes, seed: int = 0) -> list[DeviationStats]:
    """Run probes sharing one set of truthful trials (all probes use common random numbers)."""
    if not probes:
        return []
    engine = Engine(scenario)
    trials = max(p.trials for p in probes)
    draws = engine.draws(seed, trials)
    batch = engine.run(params, draws)
    truthful = (batch, engine.settle(batch))
    out = []
    for p in probes:
        if p.trials != trials or not p.common_random:
            raise ValueError("suite probes must share the trial count and use common random numbers")
        fn = mu_deviation_gain if isinstance(p.target, tuple) else ap_deviation_gain
        out.append(fn(scenario, p, params, seed, engine=engine, draws=draws, truthful=truthful))
    return out
