"""Domain entities shared by every auction stage.

Cloudlets are the sellers, mobile users (MUs) the buyers, and access points
(APs) group MUs and act as auctioneers.  Ids are 1-based everywhere a user
can see them; array storage is 0-based.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class Scheme(str, enum.Enum):
    TACD = "TACD"
    TACDP = "TACDp"
    TACDPP = "TACDpp"
    HAF = "HAF"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown scheme {value!r}")

    @property
    def uses_topk(self) -> bool:
        return self in (Scheme.TACDP, Scheme.TACDPP)

    @property
    def uses_frmg(self) -> bool:
        return self is Scheme.TACDPP


@dataclass(frozen=True)
class MechanismParams:
    """Knobs of the auction family.

    ``allow_untruthful`` lifts the ``top1 >= 2`` / ``top2 >= 2`` guards.  It
    exists for the sweep at ``top2 = 1`` and for mutation tests that force
    the always-maximum revenue rule.
    """

    scheme: Scheme = Scheme.TACD
    top1: int = 3
    top2: int = 2
    theta: float = 0.0
    epsilon: float = 1e-9
    allow_untruthful: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.top1 < 1 or self.top2 < 1:
            raise ValueError("top factors must be >= 1")
        if not self.allow_untruthful:
            if self.scheme.uses_topk and self.top1 < 2:
                raise ValueError("top1 must be >= 2 for TACDp/TACDpp")
            if self.scheme.uses_frmg and self.top2 < 2:
                raise ValueError("top2 must be >= 2 for TACDpp")

    def replace(self, **changes) -> "MechanismParams":
        data = self.to_dict()
        data.update(changes)
        return MechanismParams(**data)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "top1": self.top1,
            "top2": self.top2,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "allow_untruthful": self.allow_untruthful,
        }


@dataclass(frozen=True)
class Cloudlet:
    id: int
    capacity: float
    cost_factor: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"cloudlet {self.id}: capacity must be > 0")
        if not self.cost_factor > 0:
            raise ValueError(f"cloudlet {self.id}: cost_factor must be > 0")
        if self.delta < 0:
            raise ValueError(f"cloudlet {self.id}: delta must be >= 0")

    @property
    def reserve_price(self) -> float:
        return reserve_price(self)


@dataclass(frozen=True)
class MobileUser:
    ap_id: int
    mu_id: int
    workload: float
    valuations: tuple[float, ...]
    bids: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "valuations", tuple(float(v) for v in self.valuations))
        object.__setattr__(self, "bids", tuple(float(b) for b in self.bids))
        if not self.workload > 0:
            raise ValueError(f"MU ({self.ap_id}, {self.mu_id}): workload must be > 0")
        if len(self.valuations) != len(self.bids):
            raise ValueError(f"MU ({self.ap_id}, {self.mu_id}): valuations/bids length mismatch")
        if min(self.valuations, default=0.0) < 0 or min(self.bids, default=0.0) < 0:
            raise ValueError(f"MU ({self.ap_id}, {self.mu_id}): negative valuation or bid")

    @classmethod
    def truthful(cls, ap_id: int, mu_id: int, workload: float, valuations) -> "MobileUser":
        valuations = tuple(float(v) for v in valuations)
        return cls(ap_id, mu_id, workload, valuations, valuations)

    def with_bid(self, k: int, bid: float) -> "MobileUser":
        """Copy of this MU with its public bid on cloudlet ``k`` (1-based) replaced."""
        _check_cloudlet_index(k, len(self.bids))
        bids = list(self.bids)
        bids[k - 1] = float(bid)
        return MobileUser(self.ap_id, self.mu_id, self.workload, self.valuations, tuple(bids))


@dataclass(frozen=True)
class AccessPoint:
    id: int
    members: tuple[MobileUser, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        for mu in self.members:
            if mu.ap_id != self.id:
                raise ValueError(f"MU {mu.mu_id} has ap_id {mu.ap_id}, expected {self.id}")

    @property
    def total_workload(self) -> float:
        return float(sum(mu.workload for mu in self.members))


@dataclass(frozen=True)
class ScenarioArrays:
    """Flat numeric view of a scenario consumed by the kernels.

    MUs of AP ``i`` occupy rows ``offsets[i]:offsets[i + 1]``.
    """

    workloads: np.ndarray    # (N,)
    bids: np.ndarray         # (N, K)
    valuations: np.ndarray   # (N, K)
    offsets: np.ndarray      # (n + 1,)
    capacity: np.ndarray     # (K,)
    cost_factor: np.ndarray  # (K,)
    reserve: np.ndarray      # (K,)

    @property
    def n_aps(self) -> int:
        return len(self.offsets) - 1

    @property
    def n_cloudlets(self) -> int:
        return len(self.capacity)

    @property
    def ap_of_mu(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_aps), np.diff(self.offsets))

    def with_bids(self, bids: np.ndarray) -> "ScenarioArrays":
        return ScenarioArrays(self.workloads, bids, self.valuations, self.offsets,
                              self.capacity, self.cost_factor, self.reserve)


@dataclass(frozen=True)
class Scenario:
    cloudlets: tuple[Cloudlet, ...]
    aps: tuple[AccessPoint, ...]
    seed: int = 0
    params: MechanismParams = field(default_factory=MechanismParams)

    def __post_init__(self):
        object.__setattr__(self, "cloudlets", tuple(self.cloudlets))
        object.__setattr__(self, "aps", tuple(self.aps))
        if [c.id for c in self.cloudlets] != list(range(1, len(self.cloudlets) + 1)):
            raise ValueError("cloudlet ids must be 1..K in order")
        if [a.id for a in self.aps] != list(range(1, len(self.aps) + 1)):
            raise ValueError("AP ids must be 1..n in order")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        K = len(self.cloudlets)
        for ap in self.aps:
            for mu in ap.members:
                if len(mu.bids) != K:
                    raise ValueError(f"MU ({ap.id}, {mu.mu_id}) has {len(mu.bids)} bids, expected {K}")

    @property
    def n_aps(self) -> int:
        return len(self.aps)

    @property
    def n_cloudlets(self) -> int:
        return len(self.cloudlets)

    @property
    def n_mus(self) -> int:
        return sum(len(ap.members) for ap in self.aps)

    def mu(self, ap_id: int, mu_id: int) -> MobileUser:
        for mu in self.aps[ap_id - 1].members:
            if mu.mu_id == mu_id:
                return mu
        raise KeyError((ap_id, mu_id))

    def replace(self, **changes) -> "Scenario":
        data = dict(cloudlets=self.cloudlets, aps=self.aps, seed=self.seed, params=self.params)
        data.update(changes)
        return Scenario(**data)

    def with_mu_bid(self, ap_id: int, mu_id: int, k: int, bid: float) -> "Scenario":
        ap = self.aps[ap_id - 1]
        members = tuple(mu.with_bid(k, bid) if mu.mu_id == mu_id else mu for mu in ap.members)
        aps = list(self.aps)
        aps[ap_id - 1] = AccessPoint(ap.id, members)
        return self.replace(aps=tuple(aps))

    @cached_property
    def arrays(self) -> ScenarioArrays:
        K = self.n_cloudlets
        members = [mu for ap in self.aps for mu in ap.members]
        counts = [len(ap.members) for ap in self.aps]
        offsets = np.zeros(len(self.aps) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(counts)
        return ScenarioArrays(
            workloads=np.array([mu.workload for mu in members], dtype=np.float64),
            bids=np.array([mu.bids for mu in members], dtype=np.float64).reshape(len(members), K),
            valuations=np.array([mu.valuations for mu in members], dtype=np.float64).reshape(len(members), K),
            offsets=offsets,
            capacity=np.array([c.capacity for c in self.cloudlets], dtype=np.float64),
            cost_factor=np.array([c.cost_factor for c in self.cloudlets], dtype=np.float64),
            reserve=np.array([reserve_price(c) for c in self.cloudlets], dtype=np.float64),
        )

    @cached_property
    def mu_ids(self) -> list[tuple[int, int]]:
        """(ap_id, mu_id) for every row of :attr:`arrays`."""
        return [(ap.id, mu.mu_id) for ap in self.aps for mu in ap.members]


def _check_cloudlet_index(k: int, K: int) -> None:
    if not 1 <= k <= K:
        raise IndexError(f"cloudlet index {k} outside 1..{K}")


def reserve_price(c: Cloudlet) -> float:
    return c.cost_factor * c.capacity + c.delta


def ppr(mu: MobileUser, k: int) -> float:
    """Performance price ratio: bid on cloudlet ``k`` (1-based) per unit workload."""
    _check_cloudlet_index(k, len(mu.bids))
    return mu.bids[k - 1] / mu.workload


def cost_of_service(c: Cloudlet, served_workload: float) -> float:
    """Operating cost of ``c`` when serving ``served_workload``.  Reporting only."""
    if served_workload < 0 or served_workload > c.capacity:
        raise ValueError(f"served workload {served_workload} outside [0, {c.capacity}]")
    return c.cost_factor * served_workload


# -- serialization ----------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "seed": scenario.seed,
        "params": scenario.params.to_dict(),
        "cloudlets": [
            {"id": c.id, "capacity": c.capacity, "cost_factor": c.cost_factor, "delta": c.delta}
            for c in scenario.cloudlets
        ],
        "aps": [
            {
                "id": ap.id,
                "mus": [
                    {"id": mu.mu_id, "workload": mu.workload,
                     "valuations": list(mu.valuations), "bids": list(mu.bids)}
                    for mu in ap.members
                ],
            }
            for ap in scenario.aps
        ],
    }


def scenario_from_dict(data: dict) -> Scenario:
    cloudlets = tuple(
        Cloudlet(int(c["id"]), float(c["capacity"]), float(c["cost_factor"]), float(c.get("delta", 0.0)))
        for c in data["cloudlets"]
    )
    aps = tuple(
        AccessPoint(int(ap["id"]), tuple(
            MobileUser(int(ap["id"]), int(mu["id"]), float(mu["workload"]),
                       tuple(mu["valuations"]), tuple(mu.get("bids", mu["valuations"])))
            for mu in ap["mus"]
        ))
        for ap in data["aps"]
    )
    return Scenario(cloudlets, aps, int(data.get("seed", 0)), MechanismParams(**data.get("params", {})))


def save_scenario(scenario: Scenario, path) -> None:
    # repr-exact floats: json writes the shortest round-tripping form
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1) + "\n")


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
