"""Evaluable language models and held-out perplexity.

Two model families are built from count tables: the clustered class model
(class transition matrix with absolute discounting plus per-cluster word
emissions) and the compact back-off baseline (kept bigrams above a cut-off,
with the gained mass redistributed over non-kept words proportionally to the
unigram). A uniform diagnostic model is included for sanity checks.

All conditional distributions normalize to 1 over the full vocabulary,
including the unk token, which is treated as an ordinary word inside the
models; the evaluator decides whether unk positions are scored or skipped.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import criterion as crit
from .corpus import UNK_ID, Vocabulary


class ModelError(Exception):
    pass


class ModelFormatError(ModelError):
    """Corrupt or inconsistent model file (vocabulary hash mismatch etc.)."""


@dataclass
class EvalReport:
    perplexity: float
    n_scored: int
    n_skipped: int
    log_prob_total: float

    def format(self):
        return "pp=%r scored=%d skipped=%d logprob=%r" % (
            self.perplexity, self.n_scored, self.n_skipped,
            self.log_prob_total)


def _clamp(x, lo, hi):
    return max(lo, min(hi, x))


class ClusteredLM:
    """p(w | context) = p(g2 | g1) * p(w | g2).

    Transitions use absolute discounting with a data-driven discount
    b_final = n1/(n1 + 2*n2) clamped to [0.1, 0.9]; the gained mass of each
    row goes to unseen column clusters proportionally to their class unigram
    mass. Emissions carry count-1 smoothing so every vocabulary word scores
    strictly positive. ``smoothed=False`` is a diagnostic mode with plain ML
    transitions and emissions.
    """

    kind = "clustered"

    def __init__(self, clustering, vocab, trans, emis, word_cluster,
                 reachable, b_final, order, smoothed=True):
        self.clustering = clustering
        self.vocab = vocab
        self.trans = trans
        self.emis = emis
        self.word_cluster = word_cluster
        self.reachable = reachable
        self.b_final = b_final
        self.order = order
        self.smoothed = smoothed

    def prob(self, context, word):
        g1 = self.clustering.g1_of.get(context, self.clustering.residual1)
        if not self.reachable[g1]:
            raise ModelError("context %r maps to unreachable row %d"
                             % (context, g1))
        return float(self.trans[g1, self.word_cluster[word]]
                     * self.emis[word])


def build_clustered_lm(counts, clustering, vocab, smoothed=True):
    stats = crit.build_stats(counts, clustering)
    pair = stats.pair
    n1 = int(np.count_nonzero(pair == 1))
    n2 = int(np.count_nonzero(pair == 2))
    if n1 + 2 * n2 > 0:
        b_final = _clamp(n1 / (n1 + 2 * n2), 0.1, 0.9)
    else:
        b_final = 0.1

    c1, c2 = stats.c1, stats.c2
    word_cluster = np.array(
        [clustering.g2_of.get(w, clustering.residual2)
         for w in range(len(vocab))], dtype=np.int64)
    members = [[] for _ in range(c2)]
    for w in range(len(vocab)):
        members[word_cluster[w]].append(w)

    # class unigram weights for unseen-mass allocation; member-bearing
    # clusters with zero mass get weight 1 so no vocab word can score zero
    uni_w = stats.col.astype(np.float64).copy()
    for g in range(c2):
        if members[g] and uni_w[g] == 0:
            uni_w[g] = 1.0

    trans = np.zeros((c1, c2), dtype=np.float64)
    reachable = stats.row > 0
    for g1 in range(c1):
        n = int(stats.row[g1])
        if n == 0:
            continue
        prow = pair[g1].astype(np.float64)
        seen = prow > 0
        if not smoothed:
            trans[g1] = prow / n
            continue
        kept = (prow[seen] - b_final) / n
        unseen = ~seen
        w_uns = uni_w[unseen]
        if unseen.any() and w_uns.sum() > 0:
            gained = b_final * int(seen.sum()) / n
            trans[g1, seen] = kept
            trans[g1, unseen] = gained * w_uns / w_uns.sum()
        else:
            trans[g1, seen] = kept / kept.sum()

    emis = np.zeros(len(vocab), dtype=np.float64)
    for g in range(c2):
        ws = members[g]
        if not ws:
            continue
        cnts = np.array([counts.col_marginal.get(w, 0) for w in ws],
                        dtype=np.float64)
        if smoothed:
            emis[ws] = (cnts + 1.0) / (cnts.sum() + len(ws))
        elif cnts.sum() > 0:
            emis[ws] = cnts / cnts.sum()
        else:
            emis[ws] = 1.0 / len(ws)

    return ClusteredLM(clustering, vocab, trans, emis, word_cluster,
                       reachable, b_final, counts.order, smoothed=smoothed)


def clustered_prob(lm, context, word):
    return lm.prob(context, word)


class BackoffLM:
    """Kept bigrams at ML estimates; everything else backs off to the
    unigram, renormalized over the non-kept words of each history."""

    kind = "backoff"
    order = 2

    def __init__(self, vocab, cutoff, kept, alpha, denom, p_uni):
        self.vocab = vocab
        self.cutoff = cutoff
        self.kept = kept
        self.alpha = alpha
        self.denom = denom
        self.p_uni = p_uni

    def prob(self, context, word):
        v = context[-1]
        row = self.kept.get(v)
        if row is None and v not in self.alpha:
            return float(self.p_uni[word])
        p = row.get(word) if row else None
        if p is not None:
            return p
        return float(self.alpha[v] * self.p_uni[word] / self.denom[v])


def build_backoff(counts, cutoff, vocab):
    if counts.order != 2:
        raise ModelError("back-off baseline requires an order-2 count table")
    if cutoff < 1:
        raise ModelError("cutoff must be >= 1")
    p_uni = np.zeros(len(vocab), dtype=np.float64)
    for w, c in counts.col_marginal.items():
        p_uni[w] = c / counts.total

    rows = {}
    for (ctx, w), c in counts.events.items():
        rows.setdefault(ctx[0], {})[w] = c

    kept, alpha, denom = {}, {}, {}
    for v, items in rows.items():
        n = sum(items.values())
        c_eff = cutoff
        discarded_mass = sum(c for c in items.values() if c <= c_eff)
        if discarded_mass == 0:
            # fallback: raise the cut-off to the smallest count in the row so
            # some probability mass is always gained
            c_eff = min(items.values())
            discarded_mass = sum(c for c in items.values() if c <= c_eff)
        krow = {w: c / n for w, c in items.items() if c > c_eff}
        kept[v] = krow
        alpha[v] = discarded_mass / n
        denom[v] = 1.0 - float(sum(p_uni[w] for w in krow))
    return BackoffLM(vocab, cutoff, kept, alpha, denom, p_uni)


def backoff_prob(lm, v, w):
    return lm.prob((v,), w)


class UniformLM:
    """Diagnostic model: p = 1/|V| for every word."""

    kind = "uniform"

    def __init__(self, vocab, order=2):
        self.vocab = vocab
        self.order = order

    def prob(self, context, word):
        return 1.0 / len(self.vocab)


def perplexity(model, test, skip_unknown=False, order=None):
    """Score a held-out token stream; PP = exp(-logprob/scored)."""
    order = order or model.order
    n = test.n_tokens
    if n < order:
        raise ModelError("test stream of %d tokens shorter than order %d"
                         % (n, order))
    m = order - 1
    ids = test.ids
    log_total = 0.0
    scored = 0
    skipped = 0
    for i in range(m, n):
        w = int(ids[i])
        if skip_unknown and w == UNK_ID:
            skipped += 1
            continue
        ctx = tuple(int(x) for x in ids[i - m:i])
        p = model.prob(ctx, w)
        if p <= 0.0:
            raise ModelError(
                "zero probability for token %d (word id %d)" % (i, w))
        log_total += math.log(p)
        scored += 1
    if scored == 0:
        raise ModelError("no scorable positions in test stream")
    pp = math.exp(-log_total / scored)
    return EvalReport(pp, scored, skipped, log_total)


# ---------------------------------------------------------------------------
# model files

def _vocab_lines(vocab):
    return ["%s\t%d" % (w, c) for w, c in zip(vocab.words[1:],
                                              vocab.counts[1:])]


def vocab_hash(vocab):
    payload = "\n".join(_vocab_lines(vocab)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def save_model(model, path):
    lines = ["ngcf-model\t1", "type\t%s" % model.kind,
             "order\t%d" % model.order,
             "vocab_size\t%d" % len(model.vocab),
             "unk_count\t%d" % model.vocab.counts[0],
             "vocab_hash\t%s" % vocab_hash(model.vocab)]
    if model.kind == "clustered":
        cl = model.clustering
        lines += ["c1\t%d" % cl.c1, "c2\t%d" % cl.c2,
                  "residual1\t%d" % cl.residual1,
                  "residual2\t%d" % cl.residual2,
                  "b_final\t%r" % float(model.b_final),
                  "smoothed\t%d" % int(model.smoothed)]
    elif model.kind == "backoff":
        lines.append("cutoff\t%d" % model.cutoff)
    lines.append("[vocab]")
    lines += _vocab_lines(model.vocab)
    if model.kind == "clustered":
        lines.append("[g1]")
        for ctx in sorted(model.clustering.g1_of):
            lines.append("%s\t%d" % (" ".join(str(i) for i in ctx),
                                     model.clustering.g1_of[ctx]))
        lines.append("[g2]")
        for w in sorted(model.clustering.g2_of):
            lines.append("%d\t%d" % (w, model.clustering.g2_of[w]))
        lines.append("[trans]")
        for g1 in range(model.trans.shape[0]):
            if not model.reachable[g1]:
                continue
            for g2 in range(model.trans.shape[1]):
                p = model.trans[g1, g2]
                if p != 0.0:
                    lines.append("%d\t%d\t%r" % (g1, g2, float(p)))
        lines.append("[emis]")
        for w in range(len(model.vocab)):
            if model.emis[w] != 0.0:
                lines.append("%d\t%r" % (w, float(model.emis[w])))
    elif model.kind == "backoff":
        lines.append("[unigram]")
        for w in range(len(model.vocab)):
            if model.p_uni[w] != 0.0:
                lines.append("%d\t%r" % (w, float(model.p_uni[w])))
        lines.append("[bigrams]")
        for v in sorted(model.kept):
            for w in sorted(model.kept[v]):
                lines.append("%d\t%d\t%r" % (v, w, float(model.kept[v][w])))
        lines.append("[alpha]")
        for v in sorted(model.alpha):
            lines.append("%d\t%r\t%r" % (v, float(model.alpha[v]), float(model.denom[v])))
    lines.append("[end]")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "ngcf-model\t1":
        raise ModelFormatError("%s is not an ngcf model file" % path)

    header = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("["):
        k, v = lines[i].split("\t", 1)
        header[k] = v
        i += 1

    sections = {}
    current = None
    for line in lines[i:]:
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append(line)

    words = ["<unk>"]
    counts = [int(header.get("unk_count", 0))]
    for line in sections.get("vocab", []):
        w, c = line.split("\t")
        words.append(w)
        counts.append(int(c))
    vocab = Vocabulary(words, counts, {w: i for i, w in enumerate(words)})
    if vocab_hash(vocab) != header["vocab_hash"]:
        raise ModelFormatError("vocabulary hash mismatch in %s" % path)
    if len(vocab) != int(header["vocab_size"]):
        raise ModelFormatError("vocabulary size mismatch in %s" % path)

    kind = header["type"]
    order = int(header["order"])
    if kind == "uniform":
        return UniformLM(vocab, order)
    if kind == "backoff":
        p_uni = np.zeros(len(vocab), dtype=np.float64)
        for line in sections["unigram"]:
            w, p = line.split("\t")
            p_uni[int(w)] = float(p)
        kept = {}
        for line in sections["bigrams"]:
            v, w, p = line.split("\t")
            kept.setdefault(int(v), {})[int(w)] = float(p)
        alpha, denom = {}, {}
        for line in sections["alpha"]:
            v, a, d = line.split("\t")
            alpha[int(v)] = float(a)
            denom[int(v)] = float(d)
            kept.setdefault(int(v), {})
        return BackoffLM(vocab, int(header["cutoff"]), kept, alpha, denom,
                         p_uni)
    if kind == "clustered":
        c1, c2 = int(header["c1"]), int(header["c2"])
        g1_of = {}
        for line in sections["g1"]:
            elem, cid = line.split("\t")
            g1_of[tuple(int(x) for x in elem.split(" "))] = int(cid)
        g2_of = {}
        for line in sections["g2"]:
            w, cid = line.split("\t")
            g2_of[int(w)] = int(cid)
        clustering = crit.Clustering(g1_of, g2_of, c1, c2,
                                     int(header["residual1"]),
                                     int(header["residual2"]))
        trans = np.zeros((c1, c2), dtype=np.float64)
        reachable = np.zeros(c1, dtype=bool)
        for line in sections["trans"]:
            g1, g2, p = line.split("\t")
            trans[int(g1), int(g2)] = float(p)
            reachable[int(g1)] = True
        emis = np.zeros(len(vocab), dtype=np.float64)
        for line in sections["emis"]:
            w, p = line.split("\t")
            emis[int(w)] = float(p)
        word_cluster = np.array(
            [g2_of.get(w, clustering.residual2) for w in range(len(vocab))],
            dtype=np.int64)
        return ClusteredLM(clustering, vocab, trans, emis, word_cluster,
                           reachable, float(header["b_final"]), order,
                           smoothed=bool(int(header["smoothed"])))
    raise ModelFormatError("unknown model type %r" % kind)
