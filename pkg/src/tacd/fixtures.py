"""Small hand-built instances used by the CLI example, tests and docs.

``table3_ap`` is the ten-MU access point of the ACRC walk-through: its
ratio table on two cloudlets and workloads, with bids = ratio * workload.
"""
from __future__ import annotations

from .model import AccessPoint, Cloudlet, MechanismParams, MobileUser, Scenario

TABLE3_WORKLOADS = (1.5, 2.7, 2.2, 1.4, 1.6, 2.2, 2.5, 2.3, 2.4, 2.2)
TABLE3_RATIOS = (
    (6.0, 2.9, 2.7, 6.4, 5.6, 3.6, 2.0, 1.7, 3.7, 3.6),  # cloudlet 1
    (6.0, 2.5, 4.5, 5.7, 3.1, 1.8, 3.2, 4.3, 3.7, 2.9),  # cloudlet 2
)
TABLE3_CAPACITIES = (17.0, 22.0)


def table3_ap(ap_id: int = 1) -> AccessPoint:
    members = []
    for j, load in enumerate(TABLE3_WORKLOADS):
        bids = tuple(row[j] * load for row in TABLE3_RATIOS)
        members.append(MobileUser.truthful(ap_id, j + 1, load, bids))
    return AccessPoint(ap_id, tuple(members))


def table3_cloudlets(cost_factors=(1.0, 0.75)) -> tuple[Cloudlet, ...]:
    return tuple(Cloudlet(k + 1, cap, cf) for k, (cap, cf) in enumerate(zip(TABLE3_CAPACITIES, cost_factors)))


def table3_scenario(params: MechanismParams | None = None) -> Scenario:
    """The walk-through AP alone with cloudlets C1 (cap 17) and C2 (cap 22)."""
    return Scenario(table3_cloudlets(), (table3_ap(),), 0, params or MechanismParams())


def table3_market(params: MechanismParams | None = None) -> Scenario:
    """The walk-through AP plus one rival AP so that a trade on C2 can clear.

    The rival's three MUs (workload 3, ratios 8/7/6 on C2 and 1 on C1) give
    it budgets in ``[r_2, 40.25]`` on C2 and below ``r_1`` on C1, so the
    walk-through AP wins C2 at the rival's price whatever its m draw.
    """
    rival = AccessPoint(2, tuple(
        MobileUser.truthful(2, j + 1, 3.0, (1.0 * 3.0, t * 3.0)) for j, t in enumerate((8.0, 7.0, 6.0))
    ))
    return Scenario(table3_cloudlets(), (table3_ap(), rival), 0, params or MechanismParams())
