"""Shared helpers and fixtures for the test suite."""

import math

import numpy as np
import pytest

from ngcf import corpus, criterion, datagen


def make_table(tokens, order=2, min_count=1):
    """Vocabulary + count table straight from a token list."""
    vocab = corpus.build_vocabulary(tokens, min_count=min_count)
    table = corpus.count_ngrams(corpus.encode(tokens, vocab), order)
    return vocab, table


def random_tokens(rng, n_tokens, vocab_size):
    """Tokens from a random skewed unigram distribution (no class structure)."""
    weights = rng.random(vocab_size) ** 2
    weights /= weights.sum()
    ids = rng.choice(vocab_size, size=n_tokens, p=weights)
    return ["w%03d" % i for i in ids]


def structured_tokens(rng, n_tokens, n_classes=8, vocab_size=120,
                      concentration=0.2):
    return datagen.generate_tokens(
        n_tokens, n_classes=n_classes, vocab_size=vocab_size,
        seed=int(rng.integers(2**31)), concentration=concentration)


def random_clustering(rng, table, c1, c2, max_tries=200):
    """Random total assignment whose stats violate no marginal-1 guard."""
    row_elems = sorted(table.row_marginal)
    col_elems = sorted(table.col_marginal)
    for _ in range(max_tries):
        g1_of = {e: int(rng.integers(c1)) for e in row_elems}
        g2_of = {e: int(rng.integers(c2)) for e in col_elems}
        cl = criterion.Clustering(g1_of, g2_of, c1, c2)
        stats = criterion.build_stats(table, cl)
        if (not np.any(stats.row == 1) and not np.any(stats.col == 1)
                and not (stats.n_one > 0 and stats.n_plus <= 1)):
            return cl, stats
    raise AssertionError("could not sample a guard-satisfying clustering")


def profile_of(table, side, element, clustering):
    """Element's co-occurrence profile over the opposite side's clusters,
    built directly from the event dictionary (independent of the package's
    CSR-based computation)."""
    prof = {}
    for (ctx, w), c in table.events.items():
        if side == "row" and ctx == element:
            g = clustering.g2_of[w]
            prof[g] = prof.get(g, 0) + c
        elif side == "column" and w == element:
            g = clustering.g1_of[ctx]
            prof[g] = prof.get(g, 0) + c
    return prof


def oracle_loo(pair, b=0.75):
    """Literal transcription of the leaving-one-out criterion from dense
    cluster-pair counts; intentionally naive and loop-based."""
    pair = np.asarray(pair)
    c1, c2 = pair.shape
    total_cells = c1 * c2
    n_plus = sum(1 for i in range(c1) for j in range(c2) if pair[i, j] > 0)
    n_one = sum(1 for i in range(c1) for j in range(c2) if pair[i, j] == 1)
    n_zero = total_cells - n_plus
    val = 0.0
    for i in range(c1):
        for j in range(c2):
            n = int(pair[i, j])
            if n > 1:
                val += n * math.log(n - 1 - b)
    if n_one > 0:
        val += n_one * math.log(b * (n_plus - 1) / (n_zero + 1))
    for i in range(c1):
        n = int(pair[i, :].sum())
        if n > 1:
            val -= n * math.log(n - 1)
    for j in range(c2):
        n = int(pair[:, j].sum())
        if n > 1:
            val -= n * math.log(n - 1)
    return val


def oracle_ml(pair):
    pair = np.asarray(pair)
    val = 0.0
    for n in pair.ravel():
        if n > 0:
            val += int(n) * math.log(int(n))
    for n in pair.sum(axis=1):
        if n > 0:
            val -= int(n) * math.log(int(n))
    for n in pair.sum(axis=0):
        if n > 0:
            val -= int(n) * math.log(int(n))
    return val


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# collected by the acceptance tests, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
