"""Stage I: each AP prices its MU group for every cloudlet.

Two layers live here.  The object layer (``sort_group`` .. ``acrc``) works on
single groups and returns readable reports.  :class:`RevenueTable` computes
the same quantities for a whole scenario at once on top of the kernels and
is what the simulation engine uses; tests hold the two layers to each other.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .model import AccessPoint, Cloudlet, MechanismParams, Scheme, ScenarioArrays, ppr


@dataclass(frozen=True)
class SortedGroup:
    ap_id: int
    cloudlet_id: int
    order: tuple[int, ...]              # mu_ids, best ratio first
    workloads: tuple[float, ...]
    prefix_workloads: tuple[float, ...]
    pprs: tuple[float, ...]

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True)
class RevenueReport:
    ap_id: int
    cloudlet_id: int
    revenue: float
    unit_price: float
    winners: tuple[int, ...]            # mu_ids, in sorted order
    potential_prices: dict = field(default_factory=dict)  # mu_id -> money
    m: int = 0
    s: int = 0
    revenue_set: tuple[float, ...] = ()

    @property
    def winner_count(self) -> int:
        return len(self.winners)


def sort_group(ap: AccessPoint, k: int) -> SortedGroup:
    """Members of ``ap`` by descending ratio on cloudlet ``k``; ties by mu_id."""
    keyed = sorted(ap.members, key=lambda mu: (-ppr(mu, k), mu.mu_id))
    workloads = tuple(mu.workload for mu in keyed)
    prefix, total = [], 0.0
    for w in workloads:
        total += w
        prefix.append(total)
    return SortedGroup(ap.id, k, tuple(mu.mu_id for mu in keyed), workloads,
                       tuple(prefix), tuple(ppr(mu, k) for mu in keyed))


def find_s(g: SortedGroup, cap: float, eps: float = 1e-9) -> int:
    """Length of the longest prefix of ``g`` whose workload fits in ``cap``."""
    s = 0
    for total in g.prefix_workloads:
        if total > cap + eps:
            break
        s += 1
    return s


def gtr(g: SortedGroup, s: int) -> list[float]:
    """Revenue set ``[S_1 .. S_{s-1}]``: first x members charged the (x+1)-th ratio."""
    if s < 2:
        raise ValueError(f"revenue set needs s >= 2, got {s}")
    return [g.pprs[x] * g.prefix_workloads[x - 1] for x in range(1, s)]


def _pick(count: int, u: float) -> int:
    return min(int(u * count), count - 1)


def tacd_m_range(s: int) -> range:
    return range((s + 1) // 2, s)


def topk_indices(S: Sequence[float], top1: int) -> list[int]:
    """1-based indices of the ``min(top1, len(S))`` largest revenues (ties: smaller index)."""
    ranked = sorted(range(1, len(S) + 1), key=lambda x: (-S[x - 1], x))
    return ranked[:min(top1, len(S))]


def select_m_tacd(s: int, rng) -> int:
    if s < 2:
        raise ValueError(f"m selection needs s >= 2, got {s}")
    choices = tacd_m_range(s)
    return choices[_pick(len(choices), rng.random())]


def select_m_topk(S: Sequence[float], top1: int, rng, *, allow_untruthful: bool = False) -> int:
    if not S:
        raise ValueError("empty revenue set")
    if top1 < 2 and not allow_untruthful:
        raise ValueError("top1 must be >= 2: always taking the best revenue is not truthful")
    choices = topk_indices(S, top1)
    return choices[_pick(len(choices), rng.random())]


def build_report(g: SortedGroup, s: int, m: int, revenue_set: Sequence[float] = ()) -> RevenueReport:
    """Report for the first ``m`` members charged the (m+1)-th ratio."""
    if m == 0:
        return RevenueReport(g.ap_id, g.cloudlet_id, 0.0, 0.0, (), {}, 0, s, tuple(revenue_set))
    unit = g.pprs[m]
    winners = g.order[:m]
    prices = {mu_id: unit * w for mu_id, w in zip(winners, g.workloads[:m])}
    return RevenueReport(g.ap_id, g.cloudlet_id, unit * g.prefix_workloads[m - 1], unit,
                         winners, prices, m, s, tuple(revenue_set))


def acrc(ap: AccessPoint, cloudlets: Sequence[Cloudlet], scheme, params: MechanismParams,
         rng, *, force_m: dict | None = None) -> list[RevenueReport]:
    """Revenue report of ``ap`` for every cloudlet.

    ``rng`` supplies one uniform per cloudlet, in cloudlet order, whether or
    not the group is degenerate.  ``force_m`` maps cloudlet id to a fixed m
    (worked examples only).
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.HAF:
        raise ValueError("HAF has its own revenue rule, see tacd.haf")
    reports = []
    for c in cloudlets:
        u = rng.random()
        g = sort_group(ap, c.id)
        s = find_s(g, c.capacity, params.epsilon)
        if s < 2:
            reports.append(build_report(g, s, 0))
            continue
        S = gtr(g, s)
        if force_m and c.id in force_m:
            m = force_m[c.id]
        elif scheme is Scheme.TACD:
            choices = tacd_m_range(s)
            m = choices[_pick(len(choices), u)]
        else:
            if params.top1 < 2 and not params.allow_untruthful:
                raise ValueError("top1 must be >= 2")
            choices = topk_indices(S, params.top1)
            m = choices[_pick(len(choices), u)]
        reports.append(build_report(g, s, m, S))
    return reports


class RevenueTable:
    """Stage I quantities for every (AP, cloudlet) pair of a scenario.

    Everything that does not depend on the random choice of m is computed
    once; :meth:`draw` then maps uniforms of any leading batch shape to m.
    """

    def __init__(self, arrays: ScenarioArrays, eps: float = 1e-9):
        self.arrays = arrays
        self.s, self.pprs, self.prefix, self.rank = kernels.sort_groups(
            arrays.bids, arrays.workloads, arrays.offsets, arrays.capacity, eps)
        n, K, L = self.pprs.shape
        width = max(L - 1, 1)
        S = np.zeros((n, K, width))
        if L > 1:
            S[:, :, :L - 1] = self.pprs[:, :, 1:] * self.prefix[:, :, :-1]
        x = np.arange(1, width + 1)
        self.valid = x[None, None, :] <= (self.s - 1)[:, :, None]
        self.S = np.where(self.valid, S, 0.0)
        self._cands: dict = {}

    @property
    def shape(self):
        return self.s.shape

    def candidates(self, scheme, top1: int = 3):
        """1-based admissible m per pair ``(n, K, C)`` and their count ``(n, K)``."""
        scheme = Scheme.parse(scheme)
        key = ("tacd",) if scheme is Scheme.TACD else ("topk", top1)
        if key in self._cands:
            return self._cands[key]
        s = self.s
        width = self.S.shape[2]
        if scheme is Scheme.TACD:
            lo = (s + 1) // 2
            count = np.where(s >= 2, s - lo, 0)
            cand = lo[:, :, None] + np.arange(width)[None, None, :]
        elif scheme.uses_topk:
            keyed = np.where(self.valid, -self.S, np.inf)
            cand = np.argsort(keyed, axis=2, kind="stable") + 1
            count = np.where(s >= 2, np.minimum(top1, s - 1), 0)
        else:
            raise ValueError(f"no m candidates for {scheme}")
        cand = np.where(np.arange(width)[None, None, :] < count[:, :, None], cand, 0)
        self._cands[key] = (cand.astype(np.int64), count.astype(np.int64))
        return self._cands[key]

    def draw(self, u: np.ndarray, scheme, top1: int = 3) -> np.ndarray:
        """m for uniforms ``u`` of shape ``(..., n, K)``; 0 marks degenerate pairs."""
        cand, count = self.candidates(scheme, top1)
        idx = np.minimum((u * count).astype(np.int64), np.maximum(count - 1, 0))
        lead = u.shape[:-2]
        cand_b = np.broadcast_to(cand, lead + cand.shape)
        m = np.take_along_axis(cand_b, idx[..., None], axis=-1)[..., 0]
        return np.where(count > 0, m, 0)

    def revenue(self, m: np.ndarray) -> np.ndarray:
        idx = np.maximum(m - 1, 0)
        S = np.broadcast_to(self.S, m.shape + self.S.shape[-1:])
        R = np.take_along_axis(S, idx[..., None], axis=-1)[..., 0]
        return np.where(m > 0, R, 0.0)

    def unit_price(self, m: np.ndarray) -> np.ndarray:
        pprs = np.broadcast_to(self.pprs, m.shape + self.pprs.shape[-1:])
        idx = np.minimum(m, self.pprs.shape[-1] - 1)
        p = np.take_along_axis(pprs, idx[..., None], axis=-1)[..., 0]
        return np.where(m > 0, p, 0.0)

    def group_order(self, i: int, k: int) -> np.ndarray:
        """0-based MU rows of AP ``i`` in sorted order for cloudlet ``k``."""
        lo, hi = self.arrays.offsets[i], self.arrays.offsets[i + 1]
        order = np.empty(hi - lo, dtype=np.int64)
        order[self.rank[lo:hi, k]] = np.arange(lo, hi)
        return order

    def patched(self, i: int, bids_i: np.ndarray, eps: float = 1e-9) -> "RevenueTable":
        """Copy with AP ``i``'s member bids replaced by ``bids_i``."""
        a = self.arrays
        lo, hi = a.offsets[i], a.offsets[i + 1]
        bids = a.bids.copy()
        bids[lo:hi] = bids_i
        sub = kernels.sort_groups(bids[lo:hi], a.workloads[lo:hi],
                                  np.array([0, hi - lo]), a.capacity, eps)
        new = object.__new__(RevenueTable)
        new.arrays = a.with_bids(bids)
        L = self.pprs.shape[2]
        new.s = self.s.copy()
        new.pprs = self.pprs.copy()
        new.prefix = self.prefix.copy()
        new.rank = self.rank.copy()
        new.s[i] = sub[0][0]
        new.pprs[i, :, :sub[1].shape[2]] = sub[1][0]
        new.prefix[i, :, :sub[2].shape[2]] = sub[2][0]
        new.rank[lo:hi] = sub[3]
        width = max(L - 1, 1)
        S = np.zeros(self.S.shape)
        if L > 1:
            S[:, :, :L - 1] = new.pprs[:, :, 1:] * new.prefix[:, :, :-1]
        x = np.arange(1, width + 1)
        new.valid = x[None, None, :] <= (new.s - 1)[:, :, None]
        new.S = np.where(new.valid, S, 0.0)
        new._cands = {}
        return new


def reports_from_table(table: RevenueTable, m: np.ndarray, mu_ids, pairs: Iterable | None = None
                       ) -> dict[tuple[int, int], RevenueReport]:
    """Materialize :class:`RevenueReport` objects for chosen 0-based ``pairs``."""
    n, K = table.shape
    if pairs is None:
        pairs = [(i, k) for i in range(n) for k in range(K)]
    R = table.revenue(m)
    unit = table.unit_price(m)
    w = table.arrays.workloads
    out = {}
    for i, k in pairs:
        mm = int(m[i, k])
        order = table.group_order(i, k)
        winners = order[:mm]
        s = int(table.s[i, k])
        S = tuple(table.S[i, k, :max(s - 1, 0)].tolist())
        out[(i + 1, k + 1)] = RevenueReport(
            i + 1, k + 1, float(R[i, k]), float(unit[i, k]),
            tuple(mu_ids[r][1] for r in winners),
            {mu_ids[r][1]: float(unit[i, k] * w[r]) for r in winners},
            mm, s, S)
    return out


REPORT_COLUMNS = ["ap_id", "cloudlet_id", "s", "m", "revenue", "unit_price", "winner_count"]


def write_reports_csv(reports: Iterable[RevenueReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([r.ap_id, r.cloudlet_id, r.s, r.m, repr(r.revenue), repr(r.unit_price), r.winner_count])


def mean_revenue(S: Sequence[float], indices: Iterable[int]) -> float:
    indices = list(indices)
    return math.fsum(S[x - 1] for x in indices) / len(indices)
