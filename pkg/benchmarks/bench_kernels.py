"""Benchmark the numba move-delta kernel against the pure-numpy fallback.

Both implementations are always importable (numba compilation happens lazily
on first call), so this script times identical workloads through each and
reports the speedup. Run from the repository root:

    python3 benchmarks/bench_kernels.py [--clusters 32] [--tokens 200000]

Setting NGCF_NO_NUMBA=1 disables the numba path entirely; the script then
only reports the numpy timing.
"""

import argparse
import time

import numpy as np

from ngcf import corpus, criterion, datagen, exchange, kernels


def build_workload(n_tokens, c, seed):
    """Representative (stats, calls) workload: the profile/src/targets of one
    full exchange pass over the column side of a synthetic corpus."""
    tokens = datagen.generate_tokens(n_tokens, n_classes=12, vocab_size=400,
                                     seed=seed, concentration=0.15)
    vocab = corpus.build_vocabulary(tokens, min_count=1)
    table = corpus.count_ngrams(corpus.encode(tokens, vocab), 2)
    config = exchange.ExchangeConfig(c1=c, c2=c, min_count=5)
    rows, cols = exchange._build_sides(table, config)
    exchange._init_side(rows, exchange._clusterable_order(rows, 5))
    exchange._init_side(cols, exchange._clusterable_order(cols, 5))
    stats = exchange._stats_from_sides(table, rows, cols, config)
    all_targets = np.arange(c, dtype=np.int64)
    calls = []
    for e in exchange._clusterable_order(cols, 5):
        src = int(cols.assign[e])
        opp_ids, opp_cnts = exchange._profile(cols, rows, e)
        calls.append((opp_ids, opp_cnts, src, all_targets[all_targets != src]))
    return stats, calls


def run(kernel, stats, calls, repeats):
    best = float("inf")
    checksum = 0.0
    for _ in range(repeats):
        t0 = time.perf_counter()
        acc = 0.0
        for opp_ids, opp_cnts, src, targets in calls:
            deltas = kernel(stats.pair, stats.col, opp_ids, opp_cnts, src,
                            targets, stats.n_plus, stats.n_one, stats.n_cells,
                            stats.b)
            acc += float(deltas.sum())
        best = min(best, time.perf_counter() - t0)
        checksum = acc
    return best, checksum


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--clusters", type=int, default=32)
    ap.add_argument("--tokens", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    stats, calls = build_workload(args.tokens, args.clusters, args.seed)
    print("workload: %d delta-batch calls, %d clusters per side, backend=%s"
          % (len(calls), args.clusters, kernels.BACKEND))

    t_np, chk_np = run(kernels.move_deltas_numpy, stats, calls, args.repeats)
    print("numpy : %8.2f ms  (checksum %.6f)" % (t_np * 1e3, chk_np))

    if kernels.NUMBA_ENABLED:
        # warm-up call triggers JIT compilation outside the timed region
        run(kernels.move_deltas_numba, stats, calls, 1)
        t_nb, chk_nb = run(kernels.move_deltas_numba, stats, calls,
                           args.repeats)
        print("numba : %8.2f ms  (checksum %.6f)" % (t_nb * 1e3, chk_nb))
        print("speedup: %.1fx" % (t_np / t_nb))
        if abs(chk_np - chk_nb) > 1e-6 * max(1.0, abs(chk_np)):
            raise SystemExit("checksum mismatch between backends")
    else:
        print("numba : disabled (NGCF_NO_NUMBA set or numba unavailable)")


if __name__ == "__main__":
    main()
