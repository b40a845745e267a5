"""Compare the numba and pure-numpy kernel backends.

    python benchmarks/bench_kernels.py --mus 1000 2000 --trials 200

Both backends are called directly, so the ``TACD_NUMBA`` flag is not
needed here.  Outputs are checked for equality before timings are printed.
"""
import argparse
import time

import numpy as np

from tacd.kernels import numba_backend, numpy_backend
from tacd.rng import mechanism_draws
from tacd.revenue import RevenueTable
from tacd.scenario import target_mu_count


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(total_mus, trials, repeats, seed):
    sc = target_mu_count(total_mus, seed)
    a = sc.arrays
    sort_args = (a.bids, a.workloads, a.offsets.astype(np.int64), a.capacity, 1e-9)
    table = RevenueTable(a)
    u1, perm, u2 = mechanism_draws(seed, trials, a.n_aps, a.n_cloudlets)
    B = table.revenue(table.draw(u1, "TACDpp", 2))

    rows = []
    for name, args in [("sort_groups", sort_args),
                       ("asc_batch FRM", (B, a.reserve, perm, u2, False, 1)),
                       ("asc_batch FRMG", (B, a.reserve, perm, u2, True, 2))]:
        fn_nb = getattr(numba_backend, name.split()[0])
        fn_np = getattr(numpy_backend, name.split()[0])
        out_nb, out_np = fn_nb(*args), fn_np(*args)  # also warms up the JIT
        for x, y in zip(out_nb, out_np):
            np.testing.assert_allclose(x, y)
        t_nb = best_of(lambda: fn_nb(*args), repeats)
        t_np = best_of(lambda: fn_np(*args), repeats)
        rows.append((name, sc.n_aps, t_nb, t_np))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mus", nargs="+", type=int, default=[1000, 2000, 4000])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args(argv)
    print(f"{'kernel':<16}{'MUs':>6}{'APs':>5}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}")
    for mus in args.mus:
        for name, n, t_nb, t_np in bench(mus, args.trials, args.repeats, args.seed):
            print(f"{name:<16}{mus:>6}{n:>5}{t_nb * 1e3:>11.2f}{t_np * 1e3:>11.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
