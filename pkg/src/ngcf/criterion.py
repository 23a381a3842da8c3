"""Cluster-level sufficient statistics and the clustering criteria.

The leaving-one-out criterion evaluated here, over cluster-pair counts N and
marginals, is

    sum_{N(g1,g2)>1} N(g1,g2)*log(N(g1,g2)-1-b)
    + n_one*log(b*(n_plus-1)/(n_zero+1))
    - sum_{g1} N(g1)*log(N(g1)-1) - sum_{g2} N(g2)*log(N(g2)-1)

with natural logarithms and 0*log0 == 0. Marginals are row/column sums of the
pair table so every identity ties out exactly, and n_zero counts unseen pairs
over the full configured c1*c2 grid. Absolute values are only meaningful
relative to other clusterings of the same counts; the exchange driver relies
solely on differences, which delta_move computes incrementally.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


class CriterionError(Exception):
    pass


class GuardError(CriterionError):
    """A move would leave a nonempty cluster with marginal 1."""


@dataclass
class Clustering:
    """Total assignments of row elements (contexts) and column elements
    (words) into bounded cluster-id ranges.

    ``residual1``/``residual2`` name the catch-all clusters that hold
    infrequent or capped-out elements; unseen contexts map there at scoring
    time.
    """

    g1_of: dict
    g2_of: dict
    c1: int
    c2: int
    residual1: int = 0
    residual2: int = 0


@dataclass
class ClusterStats:
    """Dense cluster-pair counts with marginals and the LOO scalars."""

    pair: np.ndarray
    row: np.ndarray
    col: np.ndarray
    total: int
    n_plus: int
    n_one: int
    b: float = 0.75

    @property
    def c1(self):
        return int(self.pair.shape[0])

    @property
    def c2(self):
        return int(self.pair.shape[1])

    @property
    def n_cells(self):
        return self.c1 * self.c2

    @property
    def n_zero(self):
        return self.n_cells - self.n_plus

    def copy(self):
        return ClusterStats(self.pair.copy(), self.row.copy(), self.col.copy(),
                            self.total, self.n_plus, self.n_one, self.b)

    def pair_items(self):
        """Sparse view of the pair table: ((g1, g2), count) for counts > 0."""
        g1s, g2s = np.nonzero(self.pair)
        return [((int(a), int(b)), int(self.pair[a, b]))
                for a, b in zip(g1s, g2s)]

    def dump(self, path):
        """Diagnostic text dump, one "g1<TAB>g2<TAB>count" line per pair."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for (a, b), c in self.pair_items():
                fh.write("%d\t%d\t%d\n" % (a, b, c))


def build_stats(counts, clustering, b=0.75):
    """Aggregate a word-level count table by cluster on both sides."""
    pair = np.zeros((clustering.c1, clustering.c2), dtype=np.int64)
    for (ctx, w), c in counts.events.items():
        g1 = clustering.g1_of.get(ctx)
        if g1 is None:
            raise CriterionError("row element %r has no cluster" % (ctx,))
        g2 = clustering.g2_of.get(w)
        if g2 is None:
            raise CriterionError("column element %r has no cluster" % (w,))
        pair[g1, g2] += c
    return stats_from_pair(pair, b=b)


def stats_from_pair(pair, b=0.75):
    return ClusterStats(
        pair=pair,
        row=pair.sum(axis=1),
        col=pair.sum(axis=0),
        total=int(pair.sum()),
        n_plus=int(np.count_nonzero(pair)),
        n_one=int(np.count_nonzero(pair == 1)),
        b=b,
    )


def ml_criterion(stats):
    return kernels.ml_value(stats.pair, stats.row, stats.col)


def loo_criterion(stats):
    for name, marg in (("row", stats.row), ("column", stats.col)):
        bad = np.nonzero(marg == 1)[0]
        if bad.size:
            raise CriterionError(
                "nonempty %s cluster %d has marginal 1" % (name, int(bad[0]))
            )
    if stats.n_one > 0 and stats.n_plus <= 1:
        raise CriterionError(
            "degenerate statistics: n_plus=%d with n_one=%d"
            % (stats.n_plus, stats.n_one)
        )
    return kernels.loo_value(stats.pair, stats.row, stats.col,
                             stats.n_plus, stats.n_one, stats.n_cells, stats.b)


def _oriented(stats, side):
    """Pair matrix with the moving side on axis 1, plus its marginal array."""
    if side == "column":
        return stats.pair, stats.col
    if side == "row":
        return stats.pair.T, stats.row
    raise ValueError("side must be 'row' or 'column', got %r" % (side,))


def profile_arrays(element_profile):
    """Sorted (opposite-cluster ids, counts) arrays from a profile mapping."""
    items = sorted(element_profile.items())
    ids = np.array([g for g, _ in items], dtype=np.int64)
    cnts = np.array([c for _, c in items], dtype=np.int64)
    return ids, cnts


def _check_move(marg, opp_cnts, src, dst):
    m = int(opp_cnts.sum())
    if int(marg[src]) - m == 1:
        raise GuardError(
            "moving out would leave cluster %d with marginal 1" % src
        )
    if int(marg[dst]) + m == 1:
        raise GuardError(
            "moving in would leave cluster %d with marginal 1" % dst
        )
    return m


def delta_move(stats, side, element, element_profile, src, dst):
    """Criterion change of moving ``element`` from src to dst, computed
    incrementally from its co-occurrence profile over the opposite clusters.

    Exactly 0.0 when src == dst.
    """
    if src == dst:
        return 0.0
    opp_ids, opp_cnts = profile_arrays(element_profile)
    _, marg = _oriented(stats, side)
    _check_move(marg, opp_cnts, src, dst)
    return float(delta_move_arrays(stats, side, opp_ids, opp_cnts, src,
                                   np.array([dst], dtype=np.int64))[0])


def delta_move_arrays(stats, side, opp_ids, opp_cnts, src, targets):
    """Array-level batch form of delta_move; no guard checks."""
    pair, marg = _oriented(stats, side)
    return kernels.move_deltas(pair, marg, opp_ids, opp_cnts, src, targets,
                               stats.n_plus, stats.n_one, stats.n_cells,
                               stats.b)


def apply_move(stats, side, element, element_profile, src, dst):
    """Commit a move, restoring all ClusterStats invariants. Mutates stats."""
    if src == dst:
        return stats
    opp_ids, opp_cnts = profile_arrays(element_profile)
    _, marg = _oriented(stats, side)
    _check_move(marg, opp_cnts, src, dst)
    apply_move_arrays(stats, side, opp_ids, opp_cnts, src, dst)
    return stats


def apply_move_arrays(stats, side, opp_ids, opp_cnts, src, dst):
    pair, marg = _oriented(stats, side)
    dnp, dn1 = kernels.move_scalars_numpy(pair, opp_ids, opp_cnts, src, dst)
    # fancy-index assignment writes through the transposed view for row moves
    pair[opp_ids, src] -= opp_cnts
    pair[opp_ids, dst] += opp_cnts
    m = int(opp_cnts.sum())
    marg[src] -= m
    marg[dst] += m
    stats.n_plus += dnp
    stats.n_one += dn1
