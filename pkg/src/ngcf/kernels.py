"""Numeric kernels for the clustering criterion.

The move-delta evaluation is the hot inner loop of exchange clustering and is
compiled with numba when available. Setting ``NGCF_NO_NUMBA=1`` (or numba
failing to import) selects a pure-numpy fallback. Both implementations are
exported so they can be benchmarked against each other; see
``benchmarks/bench_kernels.py``.

All functions operate on the dense cluster-pair count matrix oriented so that
the element being moved lives on axis 1 (its marginal array is ``marg``) and
the opposite side indexes axis 0.
"""

import math
import os

import numpy as np

_NEG_INF = float("-inf")


def _want_numba() -> bool:
    return os.environ.get("NGCF_NO_NUMBA", "").strip() not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# criterion values (cold path, numpy only)

def loo_value(pair, row, col, n_plus, n_one, n_cells, b):
    """Leaving-one-out criterion from dense cluster-pair counts.

    Callers are responsible for precondition checks (no nonempty cluster with
    marginal 1, no degenerate scalars); here a degenerate middle term simply
    yields -inf.
    """
    big = pair[pair > 1].astype(np.float64)
    val = float(np.sum(big * np.log(big - 1.0 - b)))
    if n_one > 0:
        if n_plus <= 1:
            return _NEG_INF
        val += n_one * math.log(b * (n_plus - 1) / (n_cells - n_plus + 1))
    r = row[row > 1].astype(np.float64)
    c = col[col > 1].astype(np.float64)
    val -= float(np.sum(r * np.log(r - 1.0)))
    val -= float(np.sum(c * np.log(c - 1.0)))
    return val


def ml_value(pair, row, col):
    """Maximum-likelihood criterion; zero counts contribute nothing."""
    p = pair[pair > 0].astype(np.float64)
    r = row[row > 0].astype(np.float64)
    c = col[col > 0].astype(np.float64)
    return (
        float(np.sum(p * np.log(p)))
        - float(np.sum(r * np.log(r)))
        - float(np.sum(c * np.log(c)))
    )


# ---------------------------------------------------------------------------
# move deltas, numpy fallback

def _pair_term(n, b):
    n = n.astype(np.float64)
    out = np.zeros_like(n)
    mask = n > 1
    out[mask] = n[mask] * np.log(n[mask] - 1.0 - b)
    return out


def _marg_term(n):
    if n > 1:
        return n * math.log(n - 1.0)
    return 0.0


def _mid_term(n_one, n_plus, n_cells, b):
    if n_one <= 0:
        return 0.0
    if n_plus <= 1:
        return _NEG_INF
    return n_one * math.log(b * (n_plus - 1) / (n_cells - n_plus + 1))


def move_deltas_numpy(pair, marg, opp_ids, opp_cnts, src, targets,
                      n_plus, n_one, n_cells, b):
    """Criterion change for moving one element from ``src`` to each target.

    ``opp_ids``/``opp_cnts`` are the element's co-occurrence profile over the
    opposite side's clusters. Returns an array aligned with ``targets``.
    """
    m = int(opp_cnts.sum())
    oa = pair[opp_ids, src]
    na = oa - opp_cnts
    src_pair = float(np.sum(_pair_term(na, b) - _pair_term(oa, b)))
    dnp_src = int(np.count_nonzero(na > 0)) - int(np.count_nonzero(oa > 0))
    dn1_src = int(np.count_nonzero(na == 1)) - int(np.count_nonzero(oa == 1))
    marg_src = _marg_term(int(marg[src]) - m) - _marg_term(int(marg[src]))
    mid_old = _mid_term(n_one, n_plus, n_cells, b)

    out = np.empty(len(targets), dtype=np.float64)
    for j, t in enumerate(targets):
        ob = pair[opp_ids, t]
        nb = ob + opp_cnts
        d = src_pair + float(np.sum(_pair_term(nb, b) - _pair_term(ob, b)))
        dnp = dnp_src + int(np.count_nonzero(nb > 0)) - int(np.count_nonzero(ob > 0))
        dn1 = dn1_src + int(np.count_nonzero(nb == 1)) - int(np.count_nonzero(ob == 1))
        d -= marg_src + _marg_term(int(marg[t]) + m) - _marg_term(int(marg[t]))
        d += _mid_term(n_one + dn1, n_plus + dnp, n_cells, b) - mid_old
        out[j] = d
    return out


def move_scalars_numpy(pair, opp_ids, opp_cnts, src, dst):
    """(dn_plus, dn_one) caused by moving the profile from src to dst."""
    oa = pair[opp_ids, src]
    na = oa - opp_cnts
    ob = pair[opp_ids, dst]
    nb = ob + opp_cnts
    dnp = (int(np.count_nonzero(na > 0)) - int(np.count_nonzero(oa > 0))
           + int(np.count_nonzero(nb > 0)) - int(np.count_nonzero(ob > 0)))
    dn1 = (int(np.count_nonzero(na == 1)) - int(np.count_nonzero(oa == 1))
           + int(np.count_nonzero(nb == 1)) - int(np.count_nonzero(ob == 1)))
    return dnp, dn1


# ---------------------------------------------------------------------------
# numba implementations

NUMBA_ENABLED = False
move_deltas_numba = None

if _want_numba():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
    if njit is not None:
        @njit(cache=True)
        def _move_deltas_nb(pair, marg, opp_ids, opp_cnts, src, targets,
                            n_plus, n_one, n_cells, b, out):
            m = 0
            for k in range(opp_cnts.size):
                m += opp_cnts[k]

            src_pair = 0.0
            dnp_src = 0
            dn1_src = 0
            for k in range(opp_ids.size):
                g = opp_ids[k]
                c = opp_cnts[k]
                oa = pair[g, src]
                na = oa - c
                if oa > 1:
                    src_pair -= oa * math.log(oa - 1.0 - b)
                if na > 1:
                    src_pair += na * math.log(na - 1.0 - b)
                if oa > 0:
                    dnp_src -= 1
                if na > 0:
                    dnp_src += 1
                if oa == 1:
                    dn1_src -= 1
                if na == 1:
                    dn1_src += 1

            # marginal terms enter the criterion negatively
            ms_old = marg[src]
            ms_new = ms_old - m
            marg_src = 0.0
            if ms_old > 1:
                marg_src += ms_old * math.log(ms_old - 1.0)
            if ms_new > 1:
                marg_src -= ms_new * math.log(ms_new - 1.0)

            mid_old = 0.0
            if n_one > 0:
                if n_plus <= 1:
                    mid_old = -1e308
                else:
                    mid_old = n_one * math.log(b * (n_plus - 1) / (n_cells - n_plus + 1))

            for j in range(targets.size):
                t = targets[j]
                d = src_pair
                dnp = dnp_src
                dn1 = dn1_src
                for k in range(opp_ids.size):
                    g = opp_ids[k]
                    c = opp_cnts[k]
                    ob = pair[g, t]
                    nb = ob + c
                    if ob > 1:
                        d -= ob * math.log(ob - 1.0 - b)
                    if nb > 1:
                        d += nb * math.log(nb - 1.0 - b)
                    if ob > 0:
                        dnp -= 1
                    if nb > 0:
                        dnp += 1
                    if ob == 1:
                        dn1 -= 1
                    if nb == 1:
                        dn1 += 1
                d += marg_src
                mt_old = marg[t]
                mt_new = mt_old + m
                if mt_old > 1:
                    d += mt_old * math.log(mt_old - 1.0)
                if mt_new > 1:
                    d -= mt_new * math.log(mt_new - 1.0)

                n1n = n_one + dn1
                npn = n_plus + dnp
                mid_new = 0.0
                if n1n > 0:
                    if npn <= 1:
                        mid_new = -1e308
                    else:
                        mid_new = n1n * math.log(b * (npn - 1) / (n_cells - npn + 1))
                out[j] = d + mid_new - mid_old
            return out

        def move_deltas_numba(pair, marg, opp_ids, opp_cnts, src, targets,
                              n_plus, n_one, n_cells, b):
            out = np.empty(targets.size, dtype=np.float64)
            _move_deltas_nb(pair, marg, opp_ids, opp_cnts, src, targets,
                            n_plus, n_one, n_cells, b, out)
            return out

        NUMBA_ENABLED = True


if NUMBA_ENABLED:
    move_deltas = move_deltas_numba
    BACKEND = "numba"
else:
    move_deltas = move_deltas_numpy
    BACKEND = "numpy"
