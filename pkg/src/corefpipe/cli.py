"""Command-line entry point: ``corefpipe <subcommand> [options]``.

Exit codes are 0 on success, 1 when a step fails (bad input, failed
alignment, schema mismatch, ...) and 2 for usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .conll import format_conll, read_conll
from .corpus import SPLITS, build_corpus, read_manifest
from .exceptions import CorefPipeError
from .features import SCHEMA, featurize_corpus, write_matrix_csv
from .gbt import GbtConfig, GbtModel, evaluate_classifier, train_gbt
from .harness import (PerturbSpec, augment_union, curve_to_csv, curve_trend, diagnose_errors,
                      gold_markables, sweep_curve)
from .linker import LinkerConfig, LinkerModel, link_document, link_spans, train_linker, tune
from .metrics import mention_prf, score_corpus
from .pipeline import (candidate_table, labeled_matrix, mention_table, parse_mention_table,
                       propose_mentions)

DEFAULT_SEED = 20240301

log = logging.getLogger("corefpipe")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got %r" % text)


def _write(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _read_docs(paths):
    docs = []
    for p in paths:
        docs.extend(read_conll(p))
    return docs


def _corpus_docs(args):
    manifest = read_manifest(args.manifest) if args.manifest else None
    corpus = build_corpus(args.trees, args.conll, manifest, post_process=not args.no_post_process,
                          pronouns_positive=args.pronouns_positive)
    if args.split == "all":
        return [d for s in SPLITS for d in corpus[s]]
    return corpus[args.split]


def _read_mentions(path, docs, default_gold=True):
    if path is not None:
        return parse_mention_table(Path(path).read_text(encoding="utf-8"))
    if default_gold:
        return gold_markables(docs, drop_singletons=False)
    return {}


def _link_one(item):
    model, doc, spans = item
    return doc.with_chains(link_spans(model, link_document(doc, spans)))


def _link_all(model, docs, mentions, jobs):
    """Link each document; results are identical for any ``jobs``."""
    items = [(model, d, mentions.get(d.key, set())) for d in docs]
    if jobs <= 1 or len(items) < 2:
        return [_link_one(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_link_one, items, chunksize=max(1, len(items) // (4 * jobs))))


def _linker_config(args):
    return LinkerConfig(learning_rate=args.lr, epochs=args.epochs, l2=args.l2,
                        w_m_init=args.w_m_init, max_antecedents=args.max_antecedents)


def _linking_docs(docs, mentions):
    return [link_document(d, mentions.get(d.key, set())) for d in docs]


# subcommands

def cmd_extract(args):
    docs = _corpus_docs(args)
    _write(args.out, candidate_table(docs))
    if args.features:
        X, y = labeled_matrix(docs) if args.labeled_only else featurize_corpus(docs)
        write_matrix_csv(X, y, args.features)
    if args.schema:
        Path(args.schema).write_text(SCHEMA.to_text(), encoding="utf-8")
    n = sum(len(d.all_candidates) for d in docs)
    missed = sum(d.uncovered for d in docs)
    log.info("%d documents, %d candidates, %d gold mentions not covered", len(docs), n, missed)
    return 0


def cmd_train_classifier(args):
    docs = _corpus_docs(args)
    X, y = labeled_matrix(docs)
    if not len(y):
        raise ValueError("no labeled candidates in the training documents")
    cfg = GbtConfig(args.learning_rate, args.rounds, args.max_depth, args.lambda_l2,
                    args.gamma, args.min_child_hessian, seed=args.seed)
    history = []
    model = train_gbt(X, y, cfg, SCHEMA.fingerprint, history)
    model.save(args.out)
    print("trained %d trees on %d candidates; log-loss %.6f -> %.6f"
          % (len(model.trees), len(y), history[0], history[-1]))
    return 0


def cmd_classify(args):
    model = GbtModel.load(args.model)
    docs = _corpus_docs(args)
    mentions, probs = propose_mentions(model, docs, args.threshold)
    if args.out:
        _write(args.out, candidate_table(docs, probs))
    if args.mentions_out:
        _write(args.mentions_out, mention_table(mentions))
    if args.evaluate:
        X, y = labeled_matrix(docs)
        print(evaluate_classifier(model, X, y, args.threshold).format())
        gold = gold_markables([d.document for d in docs], drop_singletons=not args.with_singletons)
        print("Mentions     " + mention_prf(mentions, gold).format())
    return 0


def cmd_augment(args):
    docs = _read_docs(args.conll)
    gold = gold_markables(docs, drop_singletons=not args.with_singletons)
    pred = parse_mention_table(Path(args.mentions).read_text(encoding="utf-8"))
    pred = {k: pred.get(k, set()) for k in gold}
    _write(args.out, mention_table(augment_union(gold, pred)))
    return 0


def cmd_train_linker(args):
    docs = _read_docs(args.conll)
    mentions = _read_mentions(args.mentions, docs)
    history = []
    model = train_linker(_linking_docs(docs, mentions), _linker_config(args), history)
    model.save(args.out)
    print("linker trained: loss %.6f -> %.6f, w_m = %.4f" % (history[0], history[-1], model.w_m))
    return 0


def cmd_tune(args):
    train = _read_docs(args.train_conll)
    dev = _read_docs(args.dev_conll)
    tm = _read_mentions(args.train_mentions, train)
    dm = _read_mentions(args.dev_mentions, dev)
    model, results = tune(_linking_docs(train, tm), _linking_docs(dev, dm), args.w_m_grid,
                          args.l2_grid, _linker_config(args),
                          drop_singletons=not args.with_singletons)
    for w_m0, l2, f1 in results:
        print("w_m_init=%g l2=%g avg_f1=%.2f" % (w_m0, l2, 100 * f1))
    model.save(args.out)
    return 0


def cmd_link(args):
    model = LinkerModel.load(args.model)
    docs = _read_docs(args.conll)
    mentions = _read_mentions(args.mentions, docs)
    out = _link_all(model, docs, mentions, args.jobs)
    _write(args.out, format_conll(out, drop_singletons=args.drop_singletons))
    return 0


def cmd_pipeline(args):
    classifier = GbtModel.load(args.classifier)
    linker = LinkerModel.load(args.linker)
    docs = _corpus_docs(args)
    mentions, _ = propose_mentions(classifier, docs, args.threshold)
    out = _link_all(linker, [d.document for d in docs], mentions, args.jobs)
    _write(args.out, format_conll(out, drop_singletons=args.drop_singletons))
    return 0


def cmd_score(args):
    key = _read_docs(args.key)
    response = _read_docs(args.response)
    report = score_corpus(key, response, drop_singletons=args.drop_singletons)
    print(report.format_table())
    if args.csv:
        _write(args.csv, report.to_csv())
    return 0


def cmd_ablate(args):
    docs = _read_docs(args.conll)
    mentions = _read_mentions(args.mentions, docs, default_gold=False)
    if args.model:
        model = LinkerModel.load(args.model)
    else:
        model = train_linker(_linking_docs(docs, gold_markables(docs, drop_singletons=False)),
                             _linker_config(args))
    spec = PerturbSpec(args.axis, tuple(args.targets), args.seed)
    points = sweep_curve(docs, mentions, model, spec, drop_singletons=not args.with_singletons,
                         retrain=_linker_config(args) if args.retrain else None)
    _write(args.out, curve_to_csv(points))
    if len(points) > 1:
        log.info("spearman(%s, avg_f1) = %.3f", args.axis, curve_trend(points))
    return 0


def cmd_diagnose(args):
    docs = _read_docs(args.conll)
    gold = gold_markables(docs, drop_singletons=not args.with_singletons)
    pred = parse_mention_table(Path(args.mentions).read_text(encoding="utf-8"))
    report = diagnose_errors(pred, gold, {d.key: d for d in docs})
    print(report.format())
    return 0


# argument wiring

def _add_corpus_args(p):
    p.add_argument("--conll", nargs="+", required=True, help="CoNLL-2012 file(s)")
    p.add_argument("--trees", default=None,
                   help="directory of <doc_id>.mrg tree files (default: CoNLL parse column)")
    p.add_argument("--manifest", default=None, help="split manifest with [train]/[dev]/[test] sections")
    p.add_argument("--split", default="all", choices=SPLITS + ("all",))
    p.add_argument("--no-post-process", action="store_true",
                   help="skip the proper-noun prefix candidates")
    p.add_argument("--pronouns-positive", action="store_true",
                   help="label every pronoun candidate positive")


def _add_gbt_args(p):
    d = GbtConfig()
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--rounds", type=int, default=d.rounds)
    p.add_argument("--max-depth", type=int, default=d.max_depth)
    p.add_argument("--lambda-l2", type=float, default=d.lambda_l2)
    p.add_argument("--gamma", type=float, default=d.gamma_min_gain, help="minimum split gain")
    p.add_argument("--min-child-hessian", type=float, default=d.min_child_hessian)


def _add_linker_args(p):
    d = LinkerConfig()
    p.add_argument("--lr", type=float, default=d.learning_rate, help="initial step size")
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--l2", type=float, default=d.l2)
    p.add_argument("--w-m-init", type=float, default=d.w_m_init)
    p.add_argument("--max-antecedents", type=int, default=d.max_antecedents)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corefpipe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="seed for every random choice (default %(default)s)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for per-document steps")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("extract", parents=[common], help="extract labeled mention candidates")
    _add_corpus_args(p)
    p.add_argument("--out", default=None, help="candidate table (default stdout)")
    p.add_argument("--features", default=None, help="also write the feature matrix as CSV")
    p.add_argument("--labeled-only", action="store_true", help="feature CSV keeps labeled rows only")
    p.add_argument("--schema", default=None, help="write the feature schema manifest here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-classifier", parents=[common], help="train the candidate classifier")
    _add_corpus_args(p)
    _add_gbt_args(p)
    p.add_argument("--out", required=True, help="model file")
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("classify", parents=[common], help="score candidates with a classifier")
    _add_corpus_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default=None, help="candidate table with probabilities")
    p.add_argument("--mentions-out", default=None, help="accepted mentions as a mention table")
    p.add_argument("--evaluate", action="store_true",
                   help="print the per-class report and mention P/R/F against markables")
    p.add_argument("--with-singletons", action="store_true",
                   help="evaluate against all gold mentions, not only markables")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("augment", parents=[common],
                       help="union of gold markables and predicted mentions")
    p.add_argument("--conll", nargs="+", required=True)
    p.add_argument("--mentions", required=True, help="predicted mention table")
    p.add_argument("--with-singletons", action="store_true", help="include gold singletons")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train-linker", parents=[common], help="train the mention-pair linker")
    p.add_argument("--conll", nargs="+", required=True, help="documents with gold chains")
    p.add_argument("--mentions", default=None, help="mention table (default: all gold mentions)")
    _add_linker_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_linker)

    p = sub.add_parser("tune", parents=[common], help="grid-search linker settings on a dev set")
    p.add_argument("--train-conll", nargs="+", required=True)
    p.add_argument("--dev-conll", nargs="+", required=True)
    p.add_argument("--train-mentions", default=None)
    p.add_argument("--dev-mentions", default=None)
    p.add_argument("--w-m-grid", type=_floats, default=[-2.0, -1.0, 0.0, 1.0],
                   help="comma-separated; write --w-m-grid=-1,0 for negative values")
    p.add_argument("--l2-grid", type=_floats, default=[1e-4, 1e-3, 1e-2])
    p.add_argument("--with-singletons", action="store_true", help="score singleton chains too")
    _add_linker_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("link", parents=[common], help="link a mention set into chains")
    p.add_argument("--model", required=True)
    p.add_argument("--conll", nargs="+", required=True)
    p.add_argument("--mentions", default=None, help="mention table (default: gold mentions)")
    p.add_argument("--drop-singletons", action="store_true")
    p.add_argument("--out", default=None, help="response CoNLL (default stdout)")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("pipeline", parents=[common],
                       help="classify candidates, then link the accepted mentions")
    _add_corpus_args(p)
    p.add_argument("--classifier", required=True)
    p.add_argument("--linker", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--drop-singletons", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("score", parents=[common], help="MUC, B3, CEAF-phi4 and mention scores")
    p.add_argument("--key", nargs="+", required=True)
    p.add_argument("--response", nargs="+", required=True)
    p.add_argument("--drop-singletons", action="store_true",
                   help="ignore singleton chains on both sides")
    p.add_argument("--csv", default=None, help="also write the scores as CSV")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ablate", parents=[common], help="precision or recall perturbation sweep")
    p.add_argument("--conll", nargs="+", required=True, help="documents with gold chains")
    p.add_argument("--mentions", required=True, help="predicted mention table")
    p.add_argument("--model", default=None, help="linker (default: train one on gold mentions)")
    p.add_argument("--axis", required=True, choices=("precision", "recall"))
    p.add_argument("--targets", type=_floats, required=True, help="e.g. 96,97,98,99,100")
    p.add_argument("--retrain", action="store_true", help="retrain the linker at every point")
    p.add_argument("--with-singletons", action="store_true")
    _add_linker_args(p)
    p.add_argument("--out", default=None, help="curve CSV (default stdout)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("diagnose", parents=[common], help="tag mention detection errors")
    p.add_argument("--conll", nargs="+", required=True)
    p.add_argument("--mentions", required=True)
    p.add_argument("--with-singletons", action="store_true")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CorefPipeError, ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print("corefpipe %s: error: %s" % (args.command, msg), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
