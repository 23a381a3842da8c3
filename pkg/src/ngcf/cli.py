"""Command-line surface for the clustering pipeline.

Subcommands: vocab, count, cluster, train, eval, compare. Exit codes:
0 success, 2 usage/input error, 3 consistency error, 4 numeric failure.
Worker parallelism for sharded counting is capped by NGCF_THREADS (absent
means single-threaded). All outputs are deterministic given fixed inputs,
flags and seed; the trace file's seconds column is the one exception.
"""

import argparse
import concurrent.futures
import os
import sys

from . import corpus, exchange, heuristic, models
from .corpus import CorpusError
from .criterion import CriterionError
from .exchange import ExchangeError
from .models import ModelError, ModelFormatError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONSISTENCY = 3
EXIT_NUMERIC = 4


def _threads():
    val = os.environ.get("NGCF_THREADS", "").strip()
    if not val:
        return 1
    return max(1, int(val))


def _read_all_tokens(paths, lowercase):
    tokens = []
    for p in paths:
        tokens.extend(corpus.read_tokens(p, lowercase=lowercase))
    return tokens


def cmd_vocab(args):
    tokens = _read_all_tokens(args.corpus, args.lowercase)
    vocab = corpus.build_vocabulary(tokens, min_count=args.min_count,
                                    max_size=args.max_size)
    corpus.save_vocabulary(vocab, args.output)
    stream = corpus.encode(tokens, vocab)
    print("vocab_size=%d tokens=%d unknown=%d" % (
        len(vocab), stream.n_tokens, stream.n_unknown))
    if len(vocab) == 1:
        print("warning: vocabulary contains only the unknown token",
              file=sys.stderr)
    return EXIT_OK


def cmd_count(args):
    vocab = corpus.load_vocabulary(args.vocab)

    def count_one(path):
        words = corpus.read_tokens(path, lowercase=args.lowercase)
        return corpus.count_ngrams(corpus.encode(words, vocab), args.order)

    n_workers = min(_threads(), len(args.corpus))
    if n_workers > 1:
        with concurrent.futures.ThreadPoolExecutor(n_workers) as pool:
            tables = list(pool.map(count_one, args.corpus))
    else:
        tables = [count_one(p) for p in args.corpus]
    table = corpus.merge_counts(tables)
    corpus.save_counts(table, vocab, args.output)
    print("order=%d events=%d total=%d" % (table.order, len(table.events),
                                           table.total))
    return EXIT_OK


def _heuristic_config(args):
    if not args.heuristic:
        return None
    return heuristic.HeuristicConfig(h=args.h, t=args.t, u=args.u)


def cmd_cluster(args):
    vocab = corpus.load_vocabulary(args.vocab)
    table = corpus.load_counts(args.counts, vocab, args.order)
    config = exchange.ExchangeConfig(
        c1=args.c1, c2=args.c2, min_count=args.min_count,
        max_iterations=args.iterations, b=args.b,
        max_rows_clustered=args.max_rows, seed=args.seed)
    clustering, trace = exchange.cluster(table, config,
                                         heuristic=_heuristic_config(args))
    exchange.save_clustering(clustering, vocab, args.g1_out, args.g2_out)
    if args.trace_out:
        trace.save(args.trace_out)
    print("criterion=%r iterations=%d residual1=%d residual2=%d" % (
        trace.final_criterion, len(trace.records),
        clustering.residual1, clustering.residual2))
    return EXIT_OK


def _infer_residual(marginal, cluster_of, fallback):
    """Cluster of the least frequent element: sub-threshold elements never
    move, so that is where the residual bucket lives."""
    if not marginal:
        return fallback
    elem = min(marginal, key=lambda e: (marginal[e], e))
    return cluster_of.get(elem, fallback)


def cmd_train(args):
    vocab = corpus.load_vocabulary(args.vocab)
    if args.model == "uniform":
        model = models.UniformLM(vocab, order=args.order)
    else:
        table = corpus.load_counts(args.counts, vocab, args.order)
        if args.model == "backoff":
            model = models.build_backoff(table, args.cutoff, vocab)
        else:
            clustering = exchange.load_clustering(
                args.g1, args.g2, vocab, args.c1, args.c2, 0, 0)
            r1 = args.residual1
            if r1 is None:
                r1 = _infer_residual(table.row_marginal, clustering.g1_of,
                                     args.c1 - 1)
            r2 = args.residual2
            if r2 is None:
                r2 = _infer_residual(table.col_marginal, clustering.g2_of,
                                     args.c2 - 1)
            clustering.residual1 = r1
            clustering.residual2 = r2
            model = models.build_clustered_lm(table, clustering, vocab)
    models.save_model(model, args.output)
    print("model=%s order=%d vocab_size=%d" % (args.model, model.order,
                                               len(model.vocab)))
    return EXIT_OK


def cmd_eval(args):
    model = models.load_model(args.model)
    words = corpus.read_tokens(args.test, lowercase=args.lowercase)
    stream = corpus.encode(words, model.vocab)
    report = models.perplexity(model, stream,
                               skip_unknown=args.skip_unknown)
    line = report.format()
    print(line)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(line + "\n")
    return EXIT_OK


def cmd_compare(args):
    tokens = _read_all_tokens([args.corpus], args.lowercase)
    n = len(tokens)
    held_start = n - n // 10
    sizes = sorted(int(s) for s in args.sizes.split(","))
    feasible = [s for s in sizes if s <= held_start]
    if feasible != sizes:
        print("error: corpus supports training sizes up to %d (asked for %s);"
              " achievable: %s" % (held_start, sizes, feasible),
              file=sys.stderr)
        return EXIT_USAGE
    cutoffs = [int(c) for c in args.cutoffs.split(",")]
    held = tokens[held_start:]

    header = (["size"] + ["backoff_c%d" % c for c in cutoffs]
              + ["clustered", "improvement_pct"])
    rows = [header]
    for size in sizes:
        train = tokens[:size]
        vocab = corpus.build_vocabulary(train, min_count=1)
        table = corpus.count_ngrams(corpus.encode(train, vocab), args.order)
        test = corpus.encode(held, vocab)

        cells = ["%d" % size]
        backoff_pps = []
        for cutoff in cutoffs:
            lm = models.build_backoff(table, cutoff, vocab)
            pp = models.perplexity(lm, test, skip_unknown=True).perplexity
            backoff_pps.append(pp)
            cells.append("%.2f" % pp)

        config = exchange.ExchangeConfig(
            c1=args.c1, c2=args.c2, min_count=args.min_count,
            max_iterations=args.iterations, b=args.b,
            max_rows_clustered=args.max_rows, seed=args.seed)
        clustering, _ = exchange.cluster(table, config,
                                         heuristic=_heuristic_config(args))
        clm = models.build_clustered_lm(table, clustering, vocab)
        cpp = models.perplexity(clm, test, skip_unknown=True).perplexity
        cells.append("%.2f" % cpp)
        best = min(backoff_pps)
        cells.append("%.2f" % ((best - cpp) / best * 100.0))
        rows.append(cells)

    out = "\n".join("\t".join(r) for r in rows) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(out)
    sys.stdout.write(out)
    return EXIT_OK


def _add_heuristic_flags(p):
    p.add_argument("--heuristic", action="store_true",
                   help="use top-h co-occurrence candidate selection")
    p.add_argument("--h", type=int, default=5, dest="h")
    p.add_argument("--t", type=int, default=10, dest="t")
    p.add_argument("--u", type=int, default=1000, dest="u")


def _add_cluster_flags(p):
    p.add_argument("--c1", type=int, default=10)
    p.add_argument("--c2", type=int, default=10)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--max-rows", type=int, default=500_000)
    p.add_argument("--seed", type=int, default=42)
    _add_heuristic_flags(p)


def build_parser():
    ap = argparse.ArgumentParser(prog="ngcf")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocab", help="build a vocabulary file")
    p.add_argument("corpus", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--max-size", type=int, default=1_000_000)
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("count", help="count N-grams into a counts file")
    p.add_argument("corpus", nargs="+")
    p.add_argument("--vocab", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("cluster", help="run exchange clustering")
    p.add_argument("counts")
    p.add_argument("--vocab", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--g1-out", required=True)
    p.add_argument("--g2-out", required=True)
    p.add_argument("--trace-out")
    _add_cluster_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("train", help="build a language model file")
    p.add_argument("counts", nargs="?")
    p.add_argument("--vocab", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--model", choices=["clustered", "backoff", "uniform"],
                   required=True)
    p.add_argument("--g1")
    p.add_argument("--g2")
    p.add_argument("--c1", type=int, default=10)
    p.add_argument("--c2", type=int, default=10)
    p.add_argument("--residual1", type=int)
    p.add_argument("--residual2", type=int)
    p.add_argument("--cutoff", type=int, default=2)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score held-out text with a model")
    p.add_argument("model")
    p.add_argument("test")
    p.add_argument("--skip-unknown", action="store_true")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare",
                       help="back-off vs clustered over training prefixes")
    p.add_argument("corpus")
    p.add_argument("--sizes", default="2000,12000")
    p.add_argument("--cutoffs", default="2,10,50")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--skip-unknown", action="store_true")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("-o", "--output")
    _add_cluster_flags(p)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "train" and args.model != "uniform" \
                and not args.counts:
            print("error: counts file required for %s models" % args.model,
                  file=sys.stderr)
            return EXIT_USAGE
        if args.command == "train" and args.model == "clustered" \
                and (not args.g1 or not args.g2):
            print("error: clustered models need --g1 and --g2",
                  file=sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except (CorpusError, ExchangeError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except ModelFormatError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONSISTENCY
    except (ModelError, CriterionError, ArithmeticError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
