import math

import numpy as np
import pytest

from ngcf import corpus, criterion, exchange, models
from ngcf.models import ModelError, ModelFormatError

from conftest import make_table, random_tokens, structured_tokens


def _two_class_fixture():
    """Small corpus with a fixed two-cluster clustering on both sides."""
    tokens = ("a c a d b c b d a c a c b d "
              "c a d b c a d a c b d b c a").split()
    vocab, table = make_table(tokens)
    ids = {w: vocab.lookup(w) for w in "abcd"}
    g2_of = {ids["a"]: 0, ids["b"]: 0, ids["c"]: 1, ids["d"]: 1}
    g1_of = {(w,): g for w, g in g2_of.items()}
    cl = criterion.Clustering(g1_of, g2_of, 2, 2, residual1=0, residual2=0)
    return vocab, table, cl, ids


def _naive_clustered_probs(table, cl, vocab):
    """Independent transcription of the clustered-model estimation rules."""
    stats = criterion.build_stats(table, cl)
    pair = stats.pair.astype(float)
    n1 = int((stats.pair == 1).sum())
    n2 = int((stats.pair == 2).sum())
    b = min(0.9, max(0.1, n1 / (n1 + 2 * n2))) if n1 + 2 * n2 else 0.1

    members = {g: [] for g in range(cl.c2)}
    for w in range(len(vocab)):
        members[cl.g2_of.get(w, cl.residual2)].append(w)
    uni = [float(stats.col[g]) or (1.0 if members[g] else 0.0)
           for g in range(cl.c2)]

    trans = np.zeros((cl.c1, cl.c2))
    for g1 in range(cl.c1):
        n = float(stats.row[g1])
        if n == 0:
            continue
        seen = [g for g in range(cl.c2) if pair[g1, g] > 0]
        unseen = [g for g in range(cl.c2) if pair[g1, g] == 0 and uni[g] > 0]
        for g in seen:
            trans[g1, g] = (pair[g1, g] - b) / n
        if unseen:
            gained = b * len(seen) / n
            z = sum(uni[g] for g in unseen)
            for g in unseen:
                trans[g1, g] = gained * uni[g] / z
        else:
            s = sum(trans[g1])
            trans[g1] /= s

    emis = np.zeros(len(vocab))
    for g, ws in members.items():
        if not ws:
            continue
        cnts = [table.col_marginal.get(w, 0) for w in ws]
        for w, c in zip(ws, cnts):
            emis[w] = (c + 1.0) / (sum(cnts) + len(ws))
    return trans, emis, b


def test_clustered_lm_matches_naive_transcription():
    vocab, table, cl, ids = _two_class_fixture()
    lm = models.build_clustered_lm(table, cl, vocab)
    trans, emis, b = _naive_clustered_probs(table, cl, vocab)
    assert lm.b_final == pytest.approx(b, abs=1e-12)
    np.testing.assert_allclose(lm.trans, trans, atol=1e-12)
    np.testing.assert_allclose(lm.emis, emis, atol=1e-12)
    for v in "abcd":
        for w in "abcd":
            expected = trans[cl.g1_of[(ids[v],)], cl.g2_of[ids[w]]] \
                * emis[ids[w]]
            assert lm.prob((ids[v],), ids[w]) == pytest.approx(expected,
                                                               abs=1e-12)


def test_clustered_lm_rows_normalize():
    vocab, table, cl, ids = _two_class_fixture()
    lm = models.build_clustered_lm(table, cl, vocab)
    for v in "abcd":
        total = sum(lm.prob((ids[v],), w) for w in range(len(vocab)))
        assert total == pytest.approx(1.0, abs=1e-9)
    # unseen context falls back to the residual row and still normalizes
    total = sum(lm.prob((999,), w) for w in range(len(vocab)))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_clustered_lm_positive_everywhere():
    vocab, table, cl, ids = _two_class_fixture()
    lm = models.build_clustered_lm(table, cl, vocab)
    for v in "abcd":
        for w in range(len(vocab)):
            assert lm.prob((ids[v],), w) > 0.0


def test_unsmoothed_singletons_degenerate_to_ml_bigram():
    tokens = list("abacabacabab")
    vocab, table = make_table(tokens)
    row_elems = sorted(table.row_marginal)
    col_elems = sorted(table.col_marginal)
    cl = criterion.Clustering({e: i for i, e in enumerate(row_elems)},
                              {e: i for i, e in enumerate(col_elems)},
                              len(row_elems), len(col_elems))
    lm = models.build_clustered_lm(table, cl, vocab, smoothed=False)
    for (ctx, w), c in table.events.items():
        ml = c / table.row_marginal[ctx]
        assert lm.prob(ctx, w) == pytest.approx(ml, abs=1e-12)


def test_backoff_hand_computed_row():
    tokens = "v x v x v x v x v x v y".split()
    vocab, table = make_table(tokens)
    v, x, y = (vocab.lookup(t) for t in "vxy")
    lm = models.build_backoff(table, 2, vocab)
    # row of v is {x:5, y:1}; cutoff 2 discards only y's count
    assert lm.prob((v,), x) == pytest.approx(5 / 6, abs=1e-12)
    # alpha = 1/6, p_uni(y) = 1/11, denom = 1 - 5/11 = 6/11
    assert lm.prob((v,), y) == pytest.approx((1 / 6) * (1 / 11) / (6 / 11),
                                             abs=1e-12)
    assert lm.prob((v,), y) == pytest.approx(1 / 36, abs=1e-12)


def test_backoff_fallback_raises_cutoff():
    tokens = "v x v x v x v x v x v y".split()
    vocab, table = make_table(tokens)
    v, x = vocab.lookup("v"), vocab.lookup("x")
    lm = models.build_backoff(table, 2, vocab)
    # row of x is {v:5}: nothing at or below cutoff 2, so the cut-off rises
    # to 5, the whole row is discarded and the row becomes pure back-off
    assert lm.kept[x] == {}
    assert lm.alpha[x] == pytest.approx(1.0)
    assert lm.prob((x,), v) == pytest.approx(lm.p_uni[v] / lm.denom[x],
                                             abs=1e-12)


def test_backoff_unseen_history_uses_unigram():
    tokens = "v x v x v x v y".split()
    vocab, table = make_table(tokens)
    y = vocab.lookup("y")  # y never occurs as a history
    lm = models.build_backoff(table, 2, vocab)
    for w in range(len(vocab)):
        assert lm.prob((y,), w) == pytest.approx(float(lm.p_uni[w]))


def test_backoff_rows_normalize(rng):
    vocab, table = make_table(random_tokens(rng, 2000, 40))
    for cutoff in (1, 2, 5):
        lm = models.build_backoff(table, cutoff, vocab)
        for v in list(table.row_marginal)[:20]:
            total = sum(lm.prob((v[0],), w) for w in range(len(vocab)))
            assert total == pytest.approx(1.0, abs=1e-9)


def test_backoff_input_validation(rng):
    vocab, table = make_table(random_tokens(rng, 300, 10), order=3)
    with pytest.raises(ModelError):
        models.build_backoff(table, 2, vocab)
    vocab2, table2 = make_table(random_tokens(rng, 300, 10))
    with pytest.raises(ModelError):
        models.build_backoff(table2, 0, vocab2)


def test_uniform_model_perplexity_is_vocab_size(rng):
    tokens = random_tokens(rng, 500, 30)
    vocab, table = make_table(tokens)
    lm = models.UniformLM(vocab)
    report = models.perplexity(lm, corpus.encode(tokens, vocab))
    assert report.perplexity == pytest.approx(len(vocab), rel=1e-9)


def test_perplexity_report_identity_and_skip(rng):
    tokens = random_tokens(rng, 800, 30)
    vocab = corpus.build_vocabulary(tokens[:400], min_count=2)
    table = corpus.count_ngrams(corpus.encode(tokens[:400], vocab), 2)
    lm = models.build_backoff(table, 2, vocab)
    test = corpus.encode(tokens[400:], vocab)
    # unk is an ordinary word inside the model, so unskipped scoring works
    full = models.perplexity(lm, test, skip_unknown=False)
    assert full.n_skipped == 0
    assert full.n_scored == test.n_tokens - 1
    report = models.perplexity(lm, test, skip_unknown=True)
    assert report.perplexity == pytest.approx(
        math.exp(-report.log_prob_total / report.n_scored), rel=1e-12)
    assert report.n_scored + report.n_skipped == test.n_tokens - 1
    assert report.n_skipped == int(np.count_nonzero(test.ids[1:] == 0))


def test_model_round_trips_bit_identical(tmp_path, rng):
    tokens = structured_tokens(rng, 5000)
    vocab = corpus.build_vocabulary(tokens[:4000], min_count=2)
    table = corpus.count_ngrams(corpus.encode(tokens[:4000], vocab), 2)
    test = corpus.encode(tokens[4000:], vocab)
    cl, _ = exchange.cluster(table, exchange.ExchangeConfig(c1=5, c2=5,
                                                            min_count=3))
    built = {
        "clustered": models.build_clustered_lm(table, cl, vocab),
        "backoff": models.build_backoff(table, 2, vocab),
        "uniform": models.UniformLM(vocab),
    }
    for name, lm in built.items():
        path = str(tmp_path / (name + ".model"))
        models.save_model(lm, path)
        loaded = models.load_model(path)
        r1 = models.perplexity(lm, test, skip_unknown=True)
        r2 = models.perplexity(loaded, test, skip_unknown=True)
        assert r1.perplexity == r2.perplexity  # exact, via repr round-trip
        assert r1.log_prob_total == r2.log_prob_total


def test_load_model_detects_corruption(tmp_path, rng):
    tokens = random_tokens(rng, 600, 20)
    vocab, table = make_table(tokens)
    path = str(tmp_path / "bo.model")
    models.save_model(models.build_backoff(table, 2, vocab), path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    # tamper with a vocabulary count: the stored hash no longer matches
    lines = text.splitlines()
    k = lines.index("[vocab]") + 1
    w, c = lines[k].split("\t")
    lines[k] = "%s\t%d" % (w, int(c) + 1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with pytest.raises(ModelFormatError, match="hash mismatch"):
        models.load_model(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("not a model\n")
    with pytest.raises(ModelFormatError):
        models.load_model(path)


def test_vocab_hash_changes_with_content():
    v1 = corpus.build_vocabulary(["a", "a", "b"])
    v2 = corpus.build_vocabulary(["a", "a", "b", "b"])
    assert models.vocab_hash(v1) != models.vocab_hash(v2)
    assert models.vocab_hash(v1) == models.vocab_hash(
        corpus.build_vocabulary(["a", "a", "b"]))
