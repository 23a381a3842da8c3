"""Deterministic synthetic corpora with latent class structure.

Tokens are produced by a first-order Markov chain over hidden classes, each
class emitting its own Zipf-weighted slice of the vocabulary. The resulting
text has exactly the kind of predictor/successor regularity that class
induction should recover, which makes it a useful desk-scale stand-in for a
real corpus in tests and demos.
"""

import argparse

import numpy as np


def generate_tokens(n_tokens, n_classes=12, vocab_size=400, seed=0,
                    concentration=0.25):
    """A list of word strings; fully determined by the arguments."""
    if n_tokens < 1:
        return []
    rng = np.random.default_rng(seed)

    # skewed class transition rows
    trans = rng.dirichlet(np.full(n_classes, concentration), size=n_classes)
    trans = trans / trans.sum(axis=1, keepdims=True)
    cum = np.cumsum(trans, axis=1)

    # contiguous vocabulary slices per class, Zipf weights inside each slice
    bounds = np.linspace(0, vocab_size, n_classes + 1).astype(int)
    class_words = [np.arange(bounds[k], bounds[k + 1])
                   for k in range(n_classes)]
    class_probs = []
    for ws in class_words:
        z = 1.0 / np.arange(1, len(ws) + 1)
        class_probs.append(z / z.sum())

    states = np.empty(n_tokens, dtype=np.int64)
    u = rng.random(n_tokens)
    s = int(rng.integers(n_classes))
    for i in range(n_tokens):
        s = int(np.searchsorted(cum[s], u[i], side="right"))
        if s >= n_classes:
            s = n_classes - 1
        states[i] = s

    word_ids = np.empty(n_tokens, dtype=np.int64)
    for k in range(n_classes):
        pos = np.nonzero(states == k)[0]
        if pos.size:
            word_ids[pos] = rng.choice(class_words[k], size=pos.size,
                                       p=class_probs[k])
    return ["w%03d" % i for i in word_ids]


def write_corpus(path, n_tokens, n_classes=12, vocab_size=400, seed=0,
                 concentration=0.25, per_line=20):
    tokens = generate_tokens(n_tokens, n_classes=n_classes,
                             vocab_size=vocab_size, seed=seed,
                             concentration=concentration)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(0, len(tokens), per_line):
            fh.write(" ".join(tokens[i:i + per_line]) + "\n")


def main(argv=None):
    ap = argparse.ArgumentParser(
        description="generate a synthetic class-structured corpus")
    ap.add_argument("output")
    ap.add_argument("--tokens", type=int, default=100_000)
    ap.add_argument("--classes", type=int, default=12)
    ap.add_argument("--vocab-size", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--concentration", type=float, default=0.25)
    args = ap.parse_args(argv)
    write_corpus(args.output, args.tokens, n_classes=args.classes,
                 vocab_size=args.vocab_size, seed=args.seed,
                 concentration=args.concentration)


if __name__ == "__main__":
    main()
