"""Exchange clustering: greedy single-element moves to a local optimum of the
leaving-one-out criterion.

Both sides of the count table are clustered: column elements (successor
words) and row elements (predecessor contexts, single words for bigram
tables). Each iteration makes one full pass over all column elements followed
by one full pass over all row elements, visiting elements in descending
frequency. A move is applied only if its criterion gain exceeds a small
positive threshold, which guarantees termination.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import criterion as crit
from . import heuristic as heur

# strictly-positive acceptance threshold; guards against float-noise cycling
ACCEPT_EPS = 1e-9


class ExchangeError(Exception):
    pass


@dataclass
class ExchangeConfig:
    c1: int
    c2: int
    min_count: int = 5
    max_iterations: int = 20
    b: float = 0.75
    convergence_epsilon: float = 0.0
    max_rows_clustered: int = 500_000
    seed: int = 42

    def __post_init__(self):
        if self.c1 < 2 or self.c2 < 2:
            raise ExchangeError("c1 and c2 must be >= 2")
        if self.min_count < 2:
            raise ExchangeError("min_count must be >= 2")
        if self.max_iterations < 1:
            raise ExchangeError("max_iterations must be >= 1")
        if not 0.0 < self.b < 1.0:
            raise ExchangeError("b must be in (0, 1)")


@dataclass
class IterationRecord:
    iteration: int
    criterion: float
    moves: int
    seconds: float
    delta_evals: int = 0
    eval_work: int = 0
    scoring_work: int = 0


@dataclass
class ExchangeTrace:
    initial_criterion: float
    records: list = field(default_factory=list)

    @property
    def final_criterion(self):
        if self.records:
            return self.records[-1].criterion
        return self.initial_criterion

    def save(self, path):
        """One "iteration<TAB>criterion<TAB>moves<TAB>seconds" line each."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for r in self.records:
                fh.write("%d\t%r\t%d\t%.3f\n"
                         % (r.iteration, r.criterion, r.moves, r.seconds))


class _Side:
    """One side of the table in array form: element list, marginals, CSR
    links to opposite-side element indices, and the cluster assignment."""

    def __init__(self, name, elems, counts, indptr, nbr, val, c):
        self.name = name
        self.elems = elems
        self.counts = counts
        self.indptr = indptr
        self.nbr = nbr
        self.val = val
        self.c = c
        self.assign = None
        self.residual = 0
        self.order = None

    def neighbors(self, e):
        lo, hi = self.indptr[e], self.indptr[e + 1]
        return self.nbr[lo:hi], self.val[lo:hi]


def _build_sides(counts, config):
    row_elems = sorted(counts.row_marginal)
    col_elems = sorted(counts.col_marginal)
    if len(row_elems) < 2 or len(col_elems) < 2:
        raise ExchangeError("need at least 2 distinct elements per side")
    ridx = {e: i for i, e in enumerate(row_elems)}
    cidx = {e: i for i, e in enumerate(col_elems)}
    n = len(counts.events)
    rr = np.empty(n, dtype=np.int64)
    cc = np.empty(n, dtype=np.int64)
    vv = np.empty(n, dtype=np.int64)
    for k, ((ctx, w), c) in enumerate(counts.events.items()):
        rr[k] = ridx[ctx]
        cc[k] = cidx[w]
        vv[k] = c
    mat = scipy.sparse.coo_matrix((vv, (rr, cc)),
                                  shape=(len(row_elems), len(col_elems)))
    csr = mat.tocsr()
    csc = mat.tocsc()
    row_counts = np.asarray(csr.sum(axis=1)).ravel().astype(np.int64)
    col_counts = np.asarray(csc.sum(axis=0)).ravel().astype(np.int64)
    rows = _Side("row", row_elems, row_counts,
                 csr.indptr.astype(np.int64), csr.indices.astype(np.int64),
                 csr.data.astype(np.int64), config.c1)
    cols = _Side("column", col_elems, col_counts,
                 csc.indptr.astype(np.int64), csc.indices.astype(np.int64),
                 csc.data.astype(np.int64), config.c2)
    return rows, cols


def _clusterable_order(side, min_count, cap=None):
    """Element indices eligible for clustering, most frequent first."""
    idx = np.arange(len(side.elems))
    eligible = idx[side.counts >= min_count]
    ranked = sorted(eligible, key=lambda i: (-int(side.counts[i]), side.elems[i]))
    if cap is not None:
        ranked = ranked[:cap]
    return np.array(ranked, dtype=np.int64)


def _init_side(side, order):
    """Singleton clusters for the (c-1) most frequent clusterable elements,
    one shared residual cluster for everything else. The residual is never
    left with marginal 1."""
    n = len(side.elems)
    total = int(side.counts.sum())
    k = min(side.c - 1, len(order))
    while True:
        head = total - int(side.counts[order[:k]].sum())
        if head != 1 or k == 0:
            break
        k -= 1
    if k == 0 and total == 1:
        raise ExchangeError("side %s has total count 1" % side.name)
    assign = np.full(n, k, dtype=np.int64)
    assign[order[:k]] = np.arange(k, dtype=np.int64)
    side.assign = assign
    side.residual = k


def element_order(counts, side, min_count=5, max_rows_clustered=None):
    """Clusterable elements of one side in descending count, ties by element
    ascending; rows are additionally capped at the most frequent
    max_rows_clustered contexts."""
    if side == "row":
        marg = counts.row_marginal
        cap = max_rows_clustered
    elif side == "column":
        marg = counts.col_marginal
        cap = None
    else:
        raise ValueError("side must be 'row' or 'column'")
    ranked = sorted((e for e, c in marg.items() if c >= min_count),
                    key=lambda e: (-marg[e], e))
    if cap is not None:
        ranked = ranked[:cap]
    return ranked


def initialize(counts, config):
    """Initial clustering satisfying the no-marginal-1 guard."""
    rows, cols = _build_sides(counts, config)
    _init_side(rows, _clusterable_order(rows, config.min_count,
                                        config.max_rows_clustered))
    _init_side(cols, _clusterable_order(cols, config.min_count))
    return _to_clustering(rows, cols, config)


def _to_clustering(rows, cols, config):
    g1_of = {e: int(rows.assign[i]) for i, e in enumerate(rows.elems)}
    g2_of = {e: int(cols.assign[i]) for i, e in enumerate(cols.elems)}
    return crit.Clustering(g1_of, g2_of, config.c1, config.c2,
                           residual1=rows.residual, residual2=cols.residual)


def _stats_from_sides(counts, rows, cols, config):
    ridx = {e: i for i, e in enumerate(rows.elems)}
    cidx = {e: i for i, e in enumerate(cols.elems)}
    pair = np.zeros((config.c1, config.c2), dtype=np.int64)
    for (ctx, w), c in counts.events.items():
        pair[rows.assign[ridx[ctx]], cols.assign[cidx[w]]] += c
    st = crit.stats_from_pair(pair, b=config.b)
    return st


def _profile(side, opp, e):
    nbr, val = side.neighbors(e)
    dense = np.bincount(opp.assign[nbr], weights=val, minlength=opp.c)
    opp_ids = np.nonzero(dense)[0].astype(np.int64)
    return opp_ids, dense[opp_ids].astype(np.int64)


def cluster(counts, config, heuristic=None):
    """Run exchange clustering to a local optimum.

    ``heuristic`` is an optional heur.HeuristicConfig; when given, candidate
    targets per element come from the top-h co-occurrence index instead of a
    full scan over all clusters.
    """
    rows, cols = _build_sides(counts, config)
    row_order = _clusterable_order(rows, config.min_count,
                                   config.max_rows_clustered)
    col_order = _clusterable_order(cols, config.min_count)
    _init_side(rows, row_order)
    _init_side(cols, col_order)
    stats = _stats_from_sides(counts, rows, cols, config)

    index = None
    if heuristic is not None:
        index = heur.build_index(stats, heuristic.h, heuristic.t, heuristic.u)

    trace = ExchangeTrace(initial_criterion=crit.loo_criterion(stats))
    prev = trace.initial_criterion
    for iteration in range(1, config.max_iterations + 1):
        t0 = time.perf_counter()
        moves = 0
        rec = IterationRecord(iteration, 0.0, 0, 0.0)
        for side, opp, order in ((cols, rows, col_order),
                                 (rows, cols, row_order)):
            pair, marg = crit._oriented(stats, side.name)
            all_targets = np.arange(side.c, dtype=np.int64)
            for e in order:
                src = int(side.assign[e])
                m = int(side.counts[e])
                if int(marg[src]) - m == 1:
                    continue  # guard: would leave src with marginal 1
                opp_ids, opp_cnts = _profile(side, opp, e)
                if index is not None:
                    targets = index.select_targets(stats, side.name, src,
                                                   opp_ids, opp_cnts)
                    rec.scoring_work += side.c
                else:
                    targets = all_targets[all_targets != src]
                if targets.size == 0:
                    continue
                deltas = crit.delta_move_arrays(stats, side.name, opp_ids,
                                                opp_cnts, src, targets)
                rec.delta_evals += int(targets.size)
                rec.eval_work += int(targets.size) * int(opp_ids.size)
                j = int(np.argmax(deltas))  # targets ascend: ties -> lowest id
                if deltas[j] > ACCEPT_EPS:
                    dst = int(targets[j])
                    crit.apply_move_arrays(stats, side.name, opp_ids,
                                           opp_cnts, src, dst)
                    side.assign[e] = dst
                    moves += 1
                    if index is not None:
                        index.note_move(stats, side.name, src, dst)
        rec.moves = moves
        rec.criterion = crit.loo_criterion(stats)
        rec.seconds = time.perf_counter() - t0
        trace.records.append(rec)
        if moves == 0:
            break
        if (config.convergence_epsilon > 0.0
                and rec.criterion - prev
                < config.convergence_epsilon * abs(prev)):
            break
        prev = rec.criterion
    return _to_clustering(rows, cols, config), trace


def save_clustering(clustering, vocab, g1_path, g2_path):
    """"element<TAB>cluster_id" lines; row elements are space-joined
    context words."""
    with open(g1_path, "w", encoding="utf-8", newline="\n") as fh:
        for ctx in sorted(clustering.g1_of):
            words = " ".join(vocab.words[i] for i in ctx)
            fh.write("%s\t%d\n" % (words, clustering.g1_of[ctx]))
    with open(g2_path, "w", encoding="utf-8", newline="\n") as fh:
        for w in sorted(clustering.g2_of):
            fh.write("%s\t%d\n" % (vocab.words[w], clustering.g2_of[w]))


def load_clustering(g1_path, g2_path, vocab, c1, c2, residual1, residual2):
    g1_of = {}
    with open(g1_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            elem, cid = line.rstrip("\n").split("\t")
            ctx = tuple(vocab.lookup(w) for w in elem.split(" "))
            g1_of[ctx] = int(cid)
    g2_of = {}
    with open(g2_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            elem, cid = line.rstrip("\n").split("\t")
            g2_of[vocab.lookup(elem)] = int(cid)
    return crit.Clustering(g1_of, g2_of, c1, c2, residual1, residual2)
