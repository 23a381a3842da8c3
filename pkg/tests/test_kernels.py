import subprocess
import sys

import numpy as np
import pytest

from ngcf import criterion, kernels

from conftest import oracle_loo, oracle_ml


def _random_case(rng, c1=6, c2=7):
    """Random stats plus a legal (profile, src, targets) column move batch."""
    while True:
        pair = rng.integers(0, 12, size=(c1, c2)).astype(np.int64)
        stats = criterion.stats_from_pair(pair)
        if np.any(stats.row == 1) or np.any(stats.col == 1):
            continue
        if stats.n_one > 0 and stats.n_plus <= 1:
            continue
        src = int(rng.integers(c2))
        if stats.col[src] < 4:
            continue
        nz = np.nonzero(pair[:, src])[0]
        if nz.size == 0:
            continue
        opp_ids = nz.astype(np.int64)
        opp_cnts = np.minimum(pair[opp_ids, src],
                              rng.integers(1, 4, size=opp_ids.size)
                              ).astype(np.int64)
        m = int(opp_cnts.sum())
        if int(stats.col[src]) - m == 1:
            continue
        targets = np.array(
            [t for t in range(c2)
             if t != src and int(stats.col[t]) + m != 1],
            dtype=np.int64)
        if targets.size == 0:
            continue
        return stats, opp_ids, opp_cnts, src, targets


def test_loo_and_ml_values_match_oracles(rng):
    for _ in range(25):
        pair = rng.integers(0, 10, size=(5, 5)).astype(np.int64)
        stats = criterion.stats_from_pair(pair)
        assert kernels.ml_value(stats.pair, stats.row, stats.col) == \
            pytest.approx(oracle_ml(pair), abs=1e-9)
        if stats.n_one == 0 or stats.n_plus > 1:
            got = kernels.loo_value(stats.pair, stats.row, stats.col,
                                    stats.n_plus, stats.n_one, stats.n_cells,
                                    stats.b)
            assert got == pytest.approx(oracle_loo(pair), abs=1e-9)


def test_loo_value_degenerate_returns_neg_inf():
    pair = np.array([[1, 0], [0, 0]], dtype=np.int64)
    stats = criterion.stats_from_pair(pair)
    assert kernels.loo_value(stats.pair, stats.row, stats.col, stats.n_plus,
                             stats.n_one, stats.n_cells, stats.b) \
        == float("-inf")


@pytest.mark.skipif(not kernels.NUMBA_ENABLED, reason="numba disabled")
def test_numba_matches_numpy(rng):
    for _ in range(50):
        stats, opp_ids, opp_cnts, src, targets = _random_case(rng)
        args = (stats.pair, stats.col, opp_ids, opp_cnts, src, targets,
                stats.n_plus, stats.n_one, stats.n_cells, stats.b)
        np.testing.assert_allclose(kernels.move_deltas_numba(*args),
                                   kernels.move_deltas_numpy(*args),
                                   rtol=0, atol=1e-9)


def test_move_scalars_match_recount(rng):
    for _ in range(30):
        stats, opp_ids, opp_cnts, src, targets = _random_case(rng)
        dst = int(targets[0])
        dnp, dn1 = kernels.move_scalars_numpy(stats.pair, opp_ids, opp_cnts,
                                              src, dst)
        after = stats.pair.copy()
        after[opp_ids, src] -= opp_cnts
        after[opp_ids, dst] += opp_cnts
        assert dnp == int(np.count_nonzero(after)) - stats.n_plus
        assert dn1 == int(np.count_nonzero(after == 1)) - stats.n_one


def test_env_flag_selects_numpy_backend():
    code = ("import ngcf.kernels as k; "
            "print(k.BACKEND, k.NUMBA_ENABLED)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "NGCF_NO_NUMBA": "1"},
        capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False"]


def test_default_backend_is_numba():
    # in this environment numba is installed, so the default path compiles
    assert kernels.NUMBA_ENABLED
    assert kernels.BACKEND == "numba"
    assert kernels.move_deltas is kernels.move_deltas_numba
