"""Seeded random scenarios.

Default distributions: capacities Normal(25, 5) on [10, 30], cost factors
Normal(0.75, 0.1) on [0.5, 1], MUs per AP uniform on {5..30}, workloads
Normal(2, 1) on [1, 3], valuations Uniform(1, 15) drawn independently per
cloudlet.  Bounded normals are resampled, never clamped.

Draw order is frozen: each quantity has its own named substream (see
:mod:`tacd.rng`) and values are drawn in id order within it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import AccessPoint, Cloudlet, MechanismParams, MobileUser, Scenario
from .rng import substream

MAX_RESAMPLE = 1000


@dataclass(frozen=True)
class Distributions:
    capacity_mean: float = 25.0
    capacity_sd: float = 5.0
    capacity_min: float = 10.0
    capacity_max: float = 30.0
    cost_mean: float = 0.75
    cost_sd: float = 0.1
    cost_min: float = 0.5
    cost_max: float = 1.0
    mus_min: int = 5
    mus_max: int = 30
    workload_mean: float = 2.0
    workload_sd: float = 1.0
    workload_min: float = 1.0
    workload_max: float = 3.0
    valuation_min: float = 1.0
    valuation_max: float = 15.0

    def to_dict(self) -> dict:
        return asdict(self)


def truncated_normal(rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float,
                     size: int) -> np.ndarray:
    """Normal draws restricted to ``[lo, hi]`` by resampling out-of-range values."""
    out = rng.normal(mean, sd, size)
    bad = (out < lo) | (out > hi)
    attempts = 0
    while bad.any():
        attempts += 1
        if attempts > MAX_RESAMPLE:
            raise RuntimeError(f"could not sample N({mean}, {sd}) inside [{lo}, {hi}]")
        out[bad] = rng.normal(mean, sd, int(bad.sum()))
        bad = (out < lo) | (out > hi)
    return out


def mu_counts(seed: int, n_aps: int, dist: Distributions = Distributions()) -> np.ndarray:
    return substream(seed, "mu_count").integers(dist.mus_min, dist.mus_max + 1, size=n_aps)


def generate_scenario(n_aps: int, n_cloudlets: int, seed: int, params: MechanismParams | None = None,
                      dist: Distributions = Distributions(), counts=None) -> Scenario:
    if n_aps < 1 or n_cloudlets < 1:
        raise ValueError("need at least one AP and one cloudlet")
    params = params or MechanismParams()
    K = n_cloudlets
    capacity = truncated_normal(substream(seed, "capacity"), dist.capacity_mean, dist.capacity_sd,
                                dist.capacity_min, dist.capacity_max, K)
    cost = truncated_normal(substream(seed, "cost_factor"), dist.cost_mean, dist.cost_sd,
                            dist.cost_min, dist.cost_max, K)
    if counts is None:
        counts = mu_counts(seed, n_aps, dist)
    counts = np.asarray(counts, dtype=np.int64)
    if len(counts) != n_aps:
        raise ValueError("counts must have one entry per AP")
    N = int(counts.sum())
    workloads = truncated_normal(substream(seed, "workload"), dist.workload_mean, dist.workload_sd,
                                 dist.workload_min, dist.workload_max, N)
    values = substream(seed, "valuation").uniform(dist.valuation_min, dist.valuation_max, (N, K))

    cloudlets = tuple(Cloudlet(k + 1, float(capacity[k]), float(cost[k])) for k in range(K))
    aps, row = [], 0
    for i, count in enumerate(counts):
        members = []
        for j in range(int(count)):
            members.append(MobileUser.truthful(i + 1, j + 1, float(workloads[row]), values[row].tolist()))
            row += 1
        aps.append(AccessPoint(i + 1, tuple(members)))
    return Scenario(cloudlets, tuple(aps), int(seed), params)


def target_mu_count(total_mus: int, seed: int, params: MechanismParams | None = None, *,
                    n_cloudlets: int | None = None, k_ratio: float | None = None,
                    dist: Distributions = Distributions()) -> Scenario:
    """Add APs until the MU total first reaches ``total_mus``.

    K equals the AP count unless ``n_cloudlets`` is given, or ``k_ratio``
    (K = max(1, round(k_ratio * n))) for unbalanced markets.
    """
    if total_mus < dist.mus_min:
        raise ValueError(f"total_mus must be >= {dist.mus_min}")
    # one AP needs at most total/min draws; draw that many and cut
    pool = mu_counts(seed, math.ceil(total_mus / dist.mus_min), dist)
    n = int(np.searchsorted(np.cumsum(pool), total_mus) + 1)
    counts = pool[:n]
    if n_cloudlets is not None:
        K = n_cloudlets
    elif k_ratio is not None:
        K = max(1, int(round(k_ratio * n)))
    else:
        K = n
    return generate_scenario(n, K, seed, params, dist, counts)
