"""Candidate-target selection for exchange moves.

For every cluster we keep the h opposite-side clusters it most frequently
co-occurs with. When moving an element, candidate clusters are scored by the
overlap between their list and the element's own top-h co-occurring opposite
clusters (unweighted intersection size), and only the t best-scoring clusters
are tried. Lists for the source and destination cluster are refreshed after
every applied move; a full rebuild happens every u moves.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class HeuristicConfig:
    h: int = 5
    t: int = 10
    u: int = 1000

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("h must be >= 0")
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if self.u < 1:
            raise ValueError("u must be >= 1")


def _top_h(vec, h):
    """Cluster ids of the h largest entries of ``vec`` (count desc, id asc),
    zero entries excluded."""
    if h <= 0:
        return np.empty(0, dtype=np.int64)
    nz = np.nonzero(vec)[0]
    ranked = sorted(nz, key=lambda g: (-int(vec[g]), int(g)))
    return np.array(ranked[:h], dtype=np.int64)


def element_top(stats, element, element_profile, h):
    """Top-h opposite-side clusters by the element's own co-occurrences."""
    items = sorted(element_profile.items(), key=lambda gc: (-gc[1], gc[0]))
    return [g for g, _ in items[:h]]


def candidate_score(element_top_list, cluster_top_list):
    """Unweighted overlap between the two top-h lists."""
    return len(set(element_top_list) & set(cluster_top_list))


class CandidateIndex:
    def __init__(self, stats, h=5, t=10, u=1000):
        self.h = h
        self.t = t
        self.u = u
        self.moves_since_refresh = 0
        self.refresh(stats)

    # -- list maintenance ---------------------------------------------------

    def refresh(self, stats):
        """Recompute every cluster's top-h list from the pair table."""
        self.row_lists = [_top_h(stats.pair[g, :], self.h)
                          for g in range(stats.c1)]
        self.col_lists = [_top_h(stats.pair[:, g], self.h)
                          for g in range(stats.c2)]
        self._row_sets = [set(l.tolist()) for l in self.row_lists]
        self._col_sets = [set(l.tolist()) for l in self.col_lists]

    def _lists_for(self, side):
        if side == "column":
            return self.col_lists, self._col_sets
        return self.row_lists, self._row_sets

    def note_move(self, stats, side, src, dst):
        """Refresh only the lists of the moved element's old and new cluster;
        every u-th move triggers a full rebuild."""
        self.moves_since_refresh += 1
        if self.moves_since_refresh >= self.u:
            self.refresh(stats)
            self.moves_since_refresh = 0
            return
        lists, sets_ = self._lists_for(side)
        for g in (src, dst):
            if side == "column":
                vec = stats.pair[:, g]
            else:
                vec = stats.pair[g, :]
            lists[g] = _top_h(vec, self.h)
            sets_[g] = set(lists[g].tolist())

    # -- target selection ---------------------------------------------------

    def select_targets(self, stats, side, src, opp_ids, opp_cnts):
        """The t most promising target clusters for an element currently in
        ``src``, ascending by cluster id. Overlap score ranks first; ties are
        broken by profile-weighted co-occurrence mass, then lower id, which
        also serves as the fallback ranking when every score is zero."""
        if side == "column":
            c = stats.c2
            pair = stats.pair
        else:
            c = stats.c1
            pair = stats.pair.T
        _, sets_ = self._lists_for(side)
        etop = set(int(g) for g in
                   _top_h_profile(opp_ids, opp_cnts, self.h))
        weights = opp_cnts @ pair[opp_ids, :]  # profile-weighted co-occurrence
        ranked = sorted(
            (g for g in range(c) if g != src),
            key=lambda g: (-len(etop & sets_[g]), -int(weights[g]), g),
        )
        return np.array(sorted(ranked[: self.t]), dtype=np.int64)


def _top_h_profile(opp_ids, opp_cnts, h):
    if h <= 0:
        return np.empty(0, dtype=np.int64)
    order = sorted(range(opp_ids.size),
                   key=lambda k: (-int(opp_cnts[k]), int(opp_ids[k])))
    return opp_ids[order[:h]]


def build_index(stats, h=5, t=10, u=1000):
    return CandidateIndex(stats, h=h, t=t, u=u)


def select_targets(index, stats, side, element, element_profile, src):
    """Mapping-profile wrapper around CandidateIndex.select_targets."""
    items = sorted(element_profile.items())
    opp_ids = np.array([g for g, _ in items], dtype=np.int64)
    opp_cnts = np.array([c for _, c in items], dtype=np.int64)
    return index.select_targets(stats, side, src, opp_ids, opp_cnts)


def note_move(index, stats, side, src, dst):
    index.note_move(stats, side, src, dst)
