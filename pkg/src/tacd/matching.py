"""Stage II: match APs to cloudlets and set clearing prices.

Budgets ``B`` and profits ``D = B - r`` are plain ``(n, K)`` arrays indexed
0-based; :class:`MatchingOutcome` speaks 1-based ids.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import MechanismParams, Scheme


class Selector:
    FRM = "FRM"
    FRMG = "FRMG"


@dataclass(frozen=True)
class MatchingOutcome:
    sigma: dict = field(default_factory=dict)              # ap_id -> cloudlet_id
    ap_clearing: dict = field(default_factory=dict)        # ap_id -> P_i
    cloudlet_clearing: dict = field(default_factory=dict)  # cloudlet_id -> P^k
    n_aps: int = 0
    n_cloudlets: int = 0

    @property
    def winner_aps(self) -> set:
        return set(self.sigma)

    @property
    def winner_cloudlets(self) -> set:
        return set(self.sigma.values())

    @property
    def matched_pairs(self) -> int:
        return len(self.sigma)

    @classmethod
    def from_arrays(cls, sigma: np.ndarray, price: np.ndarray, n_cloudlets: int = 0) -> "MatchingOutcome":
        """From one row of kernel output (0-based cloudlet per AP, -1 unmatched)."""
        pairs = {int(i) + 1: int(k) + 1 for i, k in enumerate(sigma) if k >= 0}
        ap_p = {i: float(price[i - 1]) for i in pairs}
        cl_p = {k: ap_p[i] for i, k in pairs.items()}
        return cls(pairs, ap_p, cl_p, len(sigma), n_cloudlets)


def profit_matrix(B, reserve) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    reserve = np.asarray(reserve, dtype=np.float64)
    if B.ndim != 2 or B.shape[1] != reserve.shape[0]:
        raise ValueError(f"budget matrix {B.shape} does not match {reserve.shape[0]} cloudlets")
    return B - reserve[None, :]


def frm(D: np.ndarray, shuffled, x: int) -> tuple[int, int]:
    """AP at 1-based position ``x`` of ``shuffled`` and its most profitable cloudlet.

    Returns 1-based ``(ap_id, cloudlet_id)``; ties go to the smaller cloudlet.
    """
    if not 1 <= x <= len(shuffled):
        raise IndexError(f"x={x} outside 1..{len(shuffled)}")
    i = int(shuffled[x - 1])
    return i, int(np.argmax(D[i - 1])) + 1


def global_ranking(D: np.ndarray) -> list[tuple[int, int]]:
    """All 1-based entries of ``D``, most profitable first; ties by (k, i)."""
    n, K = D.shape
    return sorted(((i + 1, k + 1) for i in range(n) for k in range(K)),
                  key=lambda ik: (-D[ik[0] - 1, ik[1] - 1], ik[1], ik[0]))


def frmg_rank(top2: int, u: float) -> int:
    return 1 if top2 <= 1 else 1 + int(u * top2)


def frmg(D: np.ndarray, top2: int, rng) -> tuple[int, int]:
    """The ``rnd``-th most profitable entry of the whole matrix, ``rnd`` uniform on 1..top2."""
    if D.size == 0:
        raise ValueError("empty profit matrix")
    rnd = frmg_rank(top2, rng.random())
    ranking = global_ranking(D)
    return ranking[min(rnd, len(ranking)) - 1]


def best_competitor(B: np.ndarray, reserve, i: int, k: int):
    """Largest bid ``B[j, k]`` with ``j != i`` inside ``[r_k, B[i, k]]``, or None (0-based)."""
    best = None
    for j in range(B.shape[0]):
        if j == i:
            continue
        b = B[j, k]
        if reserve[k] <= b <= B[i, k] and (best is None or b > best):
            best = b
    return best


def asc(B, reserve, selector=Selector.FRM, params: MechanismParams | None = None, rng=None, *,
        shuffled=None, frmg_uniforms=None) -> MatchingOutcome:
    """Greedy matching with second-bid clearing.

    Randomness: ``rng`` provides the AP permutation and then one uniform per
    round for FRMG.  Both can be pinned with ``shuffled`` (1-based AP ids)
    and ``frmg_uniforms``.
    """
    params = params or MechanismParams()
    B = np.array(B, dtype=np.float64)
    reserve = np.asarray(reserve, dtype=np.float64)
    D = profit_matrix(B, reserve)
    n, K = D.shape
    if shuffled is None:
        shuffled = rng.permutation(n) + 1
    if selector == Selector.FRMG and frmg_uniforms is None:
        frmg_uniforms = rng.random(n)

    sigma, ap_p, cl_p = {}, {}, {}
    for x in range(1, n + 1):
        if selector == Selector.FRMG:
            ranking = global_ranking(D)
            rnd = frmg_rank(params.top2, frmg_uniforms[x - 1])
            ap, cl = ranking[min(rnd, len(ranking)) - 1]
        else:
            ap, cl = frm(D, shuffled, x)
        i, k = ap - 1, cl - 1
        if D[i, k] > 0:
            price = best_competitor(B, reserve, i, k)
            if price is not None:
                sigma[ap] = cl
                ap_p[ap] = cl_p[cl] = float(price)
                D[i, :] = 0.0
                D[:, k] = 0.0
            else:
                D[i, k] = 0.0
    return MatchingOutcome(sigma, ap_p, cl_p, n, K)


def selector_for(scheme) -> str:
    return Selector.FRMG if Scheme.parse(scheme).uses_frmg else Selector.FRM


def asc_arrays(B, reserve, scheme, params: MechanismParams, perm, u_frmg):
    """Kernel-backed matching for a batch ``B (T, n, K)``; 0-based outputs."""
    use_frmg = Scheme.parse(scheme).uses_frmg
    return kernels.asc_batch(B, reserve, perm, u_frmg, use_frmg, params.top2)


def matched_profit(outcome: MatchingOutcome, B, reserve) -> float:
    D = profit_matrix(B, reserve)
    return float(sum(D[i - 1, k - 1] for i, k in outcome.sigma.items()))


MATCHING_COLUMNS = ["ap_id", "cloudlet_id", "clearing_price"]


def write_matching_csv(outcome: MatchingOutcome, path, n_aps: int, n_cloudlets: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MATCHING_COLUMNS)
        for i in sorted(outcome.sigma):
            writer.writerow([i, outcome.sigma[i], repr(outcome.ap_clearing[i])])
        for i in range(1, n_aps + 1):
            if i not in outcome.sigma:
                writer.writerow([i, "", "unmatched_ap"])
        for k in range(1, n_cloudlets + 1):
            if k not in outcome.cloudlet_clearing:
                writer.writerow(["", k, "unmatched_cloudlet"])
