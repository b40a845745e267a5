"""Named, independently seeded random substreams.

Every random decision draws from a stream keyed by ``(seed, trial, name)``
so that changing one consumer never shifts another consumer's draws.  The
stream ids below are frozen; adding a stream means appending a new id.
"""
from __future__ import annotations

import numpy as np

STREAMS = {
    # mechanism
    "stage1": 1,      # one uniform per (AP, cloudlet) pair -> choice of m
    "shuffle": 2,     # AP order A' in ASC
    "frmg": 3,        # one uniform per ASC round for FRMG's rank
    # scenario generation
    "capacity": 11,
    "cost_factor": 12,
    "mu_count": 13,
    "workload": 14,
    "valuation": 15,
    # harness
    "probe": 21,
    "trial_seed": 22,
}

_MASK64 = (1 << 64) - 1


def substream(seed: int, name: str, trial: int = 0) -> np.random.Generator:
    """Generator for stream ``name`` of ``trial`` under master ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(int(trial), STREAMS[name]))
    return np.random.Generator(np.random.PCG64(ss))


def mix(seed: int, index: int) -> int:
    """Derive a 64-bit child seed (splitmix64 finalizer)."""
    z = (int(seed) + 0x9E3779B97F4A7C15 * (int(index) + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mechanism_draws(seed: int, trials: int, n_aps: int, n_cloudlets: int, first_trial: int = 0):
    """All uniforms and shuffles one batch of pipeline runs consumes.

    Returns ``(u_stage1, perm, u_frmg)`` shaped ``(T, n, K)``, ``(T, n)`` and
    ``(T, n)``.  Trial ``t`` of the batch is trial ``first_trial + t`` of the
    seed, so splitting a batch never changes any trial's draws.
    """
    u1 = np.empty((trials, n_aps, n_cloudlets))
    perm = np.empty((trials, n_aps), dtype=np.int64)
    u2 = np.empty((trials, n_aps))
    for t in range(trials):
        trial = first_trial + t
        u1[t] = substream(seed, "stage1", trial).random((n_aps, n_cloudlets))
        perm[t] = substream(seed, "shuffle", trial).permutation(n_aps)
        u2[t] = substream(seed, "frmg", trial).random(n_aps)
    return u1, perm, u2
