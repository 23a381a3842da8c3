"""Text ingestion: tokenization, vocabularies, and sparse N-gram count tables.

The corpus is treated as one continuous token stream (no sentence boundary
markers), so all count identities are exact: an order-K table over an n-token
stream has exactly max(0, n - K + 1) events.
"""

import collections
from dataclasses import dataclass, field

import numpy as np

UNK = "<unk>"
UNK_ID = 0


class CorpusError(Exception):
    pass


def tokenize(text, lowercase=False):
    """Split text on whitespace, optionally lowercasing."""
    if lowercase:
        text = text.lower()
    return text.split()


def read_tokens(path, lowercase=False):
    """Tokenize a UTF-8 file; decoding failures report the byte offset."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(
            "malformed UTF-8 in %s at byte offset %d" % (path, exc.start)
        ) from exc
    return tokenize(text, lowercase=lowercase)


@dataclass
class Vocabulary:
    """Dense word<->id map; id 0 is always the unknown-word token.

    Entries after unk are sorted by descending count, ties lexicographically.
    The unk count is the total number of training tokens folded into it.
    """

    words: list
    counts: list
    id_of: dict = field(repr=False)

    def __len__(self):
        return len(self.words)

    def lookup(self, word):
        return self.id_of.get(word, UNK_ID)

    @property
    def entries(self):
        """(word, count) pairs excluding unk, in id order."""
        return list(zip(self.words[1:], self.counts[1:]))


def build_vocabulary(words, min_count=1, max_size=1_000_000):
    """Keep the max_size-1 most frequent words with count >= min_count."""
    if min_count < 1:
        raise CorpusError("min_count must be >= 1")
    if max_size < 1:
        raise CorpusError("max_size must be >= 1")
    freq = collections.Counter(words)
    kept = sorted(
        ((w, c) for w, c in freq.items() if c >= min_count),
        key=lambda wc: (-wc[1], wc[0]),
    )[: max_size - 1]
    vocab_words = [UNK] + [w for w, _ in kept]
    kept_total = sum(c for _, c in kept)
    vocab_counts = [len(words) - kept_total] + [c for _, c in kept]
    id_of = {w: i for i, w in enumerate(vocab_words)}
    return Vocabulary(vocab_words, vocab_counts, id_of)


@dataclass
class TokenStream:
    ids: np.ndarray
    n_unknown: int

    @property
    def n_tokens(self):
        return int(self.ids.size)


def encode(words, vocab):
    """Map words to vocabulary ids; out-of-vocabulary words become unk."""
    ids = np.fromiter((vocab.lookup(w) for w in words), dtype=np.int32,
                      count=len(words))
    return TokenStream(ids, int(np.count_nonzero(ids == UNK_ID)))


@dataclass
class CountTable:
    """Sparse (context, word) -> count table for one N-gram order.

    Contexts are (order-1)-tuples of ids, words are single ids. Marginals and
    the total always tie out to the event sum; no explicit zeros are stored.
    """

    order: int
    events: dict
    row_marginal: dict
    col_marginal: dict
    total: int


def count_ngrams(stream, order):
    if order < 2:
        raise CorpusError("order must be >= 2")
    n = stream.n_tokens
    if n < order:
        raise CorpusError(
            "stream of %d tokens is shorter than order %d" % (n, order)
        )
    m = order - 1
    ids = stream.ids
    events = collections.Counter()
    for i in range(m, n):
        events[(tuple(int(x) for x in ids[i - m:i]), int(ids[i]))] += 1
    return _finish_table(order, dict(events))


def _finish_table(order, events):
    row = collections.Counter()
    col = collections.Counter()
    total = 0
    for (ctx, w), c in events.items():
        row[ctx] += c
        col[w] += c
        total += c
    return CountTable(order, events, dict(row), dict(col), total)


def merge_counts(tables):
    """Pointwise sum of count tables of equal order."""
    tables = list(tables)
    if not tables:
        raise CorpusError("no tables to merge")
    order = tables[0].order
    merged = collections.Counter()
    for t in tables:
        if t.order != order:
            raise CorpusError(
                "cannot merge order-%d table into order-%d" % (t.order, order)
            )
        merged.update(t.events)
    return _finish_table(order, dict(merged))


# ---------------------------------------------------------------------------
# file formats

def save_vocabulary(vocab, path):
    """One "word<TAB>count" line per entry, descending count; unk omitted."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w, c in vocab.entries:
            fh.write("%s\t%d\n" % (w, c))


def load_vocabulary(path, unk_count=0):
    words = [UNK]
    counts = [unk_count]
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            w, c = line.rstrip("\n").split("\t")
            words.append(w)
            counts.append(int(c))
    id_of = {w: i for i, w in enumerate(words)}
    return Vocabulary(words, counts, id_of)


def save_counts(table, vocab, path):
    """Lines of "ctx words<TAB>word<TAB>count", context space-joined."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for (ctx, w), c in sorted(table.events.items()):
            ctx_str = " ".join(vocab.words[i] for i in ctx)
            fh.write("%s\t%s\t%d\n" % (ctx_str, vocab.words[w], c))


def load_counts(path, vocab, order):
    events = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise CorpusError("bad counts line %d in %s" % (lineno, path))
            ctx = tuple(vocab.lookup(w) for w in parts[0].split(" "))
            if len(ctx) != order - 1:
                raise CorpusError(
                    "context arity %d != order-1 at line %d" % (len(ctx), lineno)
                )
            key = (ctx, vocab.lookup(parts[1]))
            events[key] = events.get(key, 0) + int(parts[2])
    return _finish_table(order, events)
