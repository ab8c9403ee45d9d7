"""Command line entry point: ``corefguard <subcommand> ...``.

Exit status is 0 on success, 1 for invalid arguments or missing inputs and 2
when processing fails. Warnings go to standard error. Output files are
written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .exceptions import CorefGuardError

RESOURCE_ENV = "COREFGUARD_RESOURCES"
DEFAULT_RESOURCES = {"census": "census.txt", "first_names": "first_names.tsv", "geonames": "geonames.tsv"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read(path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _existing(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise UsageError(f"{what} {path!r} does not exist")
    return path


def _resource(value: str | None, kind: str, required: bool = True) -> str | None:
    base = os.environ.get(RESOURCE_ENV)
    if value is None:
        if base is None:
            if required:
                raise UsageError(f"--{kind.replace('_', '-')} is required (or set {RESOURCE_ENV})")
            return None
        value = DEFAULT_RESOURCES[kind]
    if base is not None and not os.path.isabs(value) and not os.path.exists(value):
        value = os.path.join(base, value)
    if not os.path.isfile(value):
        if required:
            raise UsageError(f"{kind} resource {value!r} does not exist")
        return None
    return value


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- subcommands


def cmd_perturb(args) -> int:
    from .conll_io import read_conll, serialize_corpus
    from .gazetteer import GazetteerSet, load_first_names, load_geonames, load_last_names
    from .no_leakage import NoLeakagePerturber, apply_replacement_plan

    if args.seed is None:
        raise UsageError("perturb requires --seed")
    _existing(args.input, "input corpus")
    census = _resource(args.census, "census")
    first = _resource(args.first_names, "first_names")
    geo = _resource(args.geonames, "geonames", required=args.geonames is not None)
    if args.train_names is None and args.train_corpus is None:
        raise UsageError("give --train-names and/or --train-corpus")
    train_names = []
    if args.train_names:
        train_names = [ln.strip() for ln in _read(_existing(args.train_names, "training names")).splitlines() if ln.strip()]
    train_docs = read_conll(_existing(args.train_corpus, "training corpus")) if args.train_corpus else None

    male, female = load_first_names(_read(first))
    gaz = GazetteerSet(load_last_names(_read(census)), male, female, load_geonames(_read(geo)) if geo else None)
    if gaz.geonames is None:
        _warn("no GeoNames index; GPE names are left unchanged")
    docs = read_conll(args.input)
    perturber = NoLeakagePerturber(gaz, train_names, args.seed).fit(train_docs)
    plans = perturber.plan(docs)
    n_replaced = 0
    for p in plans:
        for w in p.warnings:
            _warn(w)
        n_replaced += len(p.replaced_tokens())
    out_docs = [apply_replacement_plan(d, p) for d, p in zip(docs, plans)]
    atomic_write(args.out, serialize_corpus(out_docs))
    print(f"documents={len(docs)} replaced_tokens={n_replaced}", file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    from .conll_io import read_conll
    from .coref_metrics import counts_row, format_report, score_corpus

    gold = read_conll(_existing(args.gold, "gold corpus"))
    pred = read_conll(_existing(args.pred, "prediction corpus"))
    keys = {(d.doc_key, d.part) for d in gold}
    for d in pred:
        if (d.doc_key, d.part) not in keys:
            _warn(f"predicted document {d.doc_key} part {d.part} has no gold counterpart")
    score = score_corpus(gold, pred)
    _emit(format_report(score.prf(), score.conll_f1(), args.digits, args.format), args.out)
    if args.stats_out:
        atomic_write(args.stats_out, "".join(counts_row(k, c) + "\n" for k, c in score.per_document.items()))
    return 0


def cmd_gap_score(args) -> int:
    from .gap_eval import gap_report, parse_gap, parse_predictions

    examples = parse_gap(_read(_existing(args.gold, "GAP file")))
    preds = parse_predictions(_read(_existing(args.pred, "predictions file")))
    missing = [ex.id for ex in examples if ex.id not in preds]
    if missing:
        raise CorefGuardError(f"{len(missing)} examples lack predictions, e.g. {missing[0]}")
    report = gap_report(examples, [preds[ex.id] for ex in examples])
    _emit(report.format(args.digits), args.out)
    return 0


def cmd_sigtest(args) -> int:
    from .coref_metrics import STAT_KEYS, conll_f1_from_vector
    from .sigtest import (
        PairedBinaryOutcomes,
        StratifiedScores,
        align_strata,
        f1_from_counts,
        mcnemar_exact,
        parse_stats_file,
        stratified_randomization_test,
    )

    if args.test == "mcnemar":
        if args.gold is not None:
            from .gap_eval import parse_gap, parse_predictions

            if args.pred_a is None or args.pred_b is None:
                raise UsageError("--gold needs --pred-a and --pred-b")
            examples = parse_gap(_read(_existing(args.gold, "GAP file")))
            pa = parse_predictions(_read(_existing(args.pred_a, "predictions file")))
            pb = parse_predictions(_read(_existing(args.pred_b, "predictions file")))
            c1, c2 = [], []
            for ex in examples:
                for k, gold in enumerate((ex.label_a, ex.label_b)):
                    c1.append(pa[ex.id][k] == gold)
                    c2.append(pb[ex.id][k] == gold)
            outcomes = PairedBinaryOutcomes.from_correctness(c1, c2)
        elif args.b is not None and args.c is not None:
            outcomes = PairedBinaryOutcomes(args.b, args.c)
        else:
            raise UsageError("mcnemar needs --b and --c, or --gold with --pred-a/--pred-b")
        print(f"b={outcomes.b} c={outcomes.c} p={mcnemar_exact(outcomes):.4f}")
        return 0

    if args.seed is None:
        raise UsageError("randomization test requires --seed")
    keys, metric = (STAT_KEYS, conll_f1_from_vector) if args.metric == "conll" else (("tp", "fp", "fn"), f1_from_counts)
    ids_a, a = parse_stats_file(_read(_existing(args.stats_a, "statistics file")), keys)
    ids_b, b = parse_stats_file(_read(_existing(args.stats_b, "statistics file")), keys)
    a, b = align_strata(ids_a, a, ids_b, b)
    p = stratified_randomization_test(StratifiedScores(a, b, metric, ids_a), args.rounds, args.seed)
    print(f"metric_a={metric(a.sum(axis=0)):.4f} metric_b={metric(b.sum(axis=0)):.4f} p={p:.4f}")
    return 0


def cmd_leakage(args) -> int:
    from .conll_io import read_conll
    from .coref_metrics import head_names, leakage_rate

    train = [d for path in args.train for d in read_conll(_existing(path, "training corpus"))]
    if args.names_out:
        atomic_write(args.names_out, "".join(n + "\n" for n in sorted(head_names(train))))
    if args.test:
        test = [d for path in args.test for d in read_conll(_existing(path, "test corpus"))]
        print(f"leakage_rate={leakage_rate(train, test):.4f}")
    return 0


def _toy_docs(args):
    from .adv_coref.data import make_toy_dataset, parse_toy

    if args.data:
        return parse_toy(_read(_existing(args.data, "toy dataset")))
    return make_toy_dataset(args.n_docs, args.data_seed)


def cmd_train_toy(args) -> int:
    from .adv_coref.model import AdvConfig
    from .adv_coref.training import train, train_baseline

    docs = _toy_docs(args)
    if args.baseline:
        _, _, curve = train_baseline(docs, args.iterations, args.seed, args.lr)
    else:
        _, _, curve = train(docs, AdvConfig(args.alpha, args.epsilon), args.iterations, args.seed, args.lr)
    lines = ["iteration\tbase\tadversarial\ttotal"]
    lines += [f"{i}\t{c.base!r}\t{c.adversarial!r}\t{c.total!r}" for i, c in enumerate(curve)]
    _emit("\n".join(lines) + "\n", args.log)
    print(f"initial_total={curve[0].total:.6f} final_total={curve[-1].total:.6f}", file=sys.stderr)
    return 0


def cmd_grad_check(args) -> int:
    from .adv_coref.model import AdvConfig, ModelParams
    from .adv_coref.training import Vocabulary, gradient_check

    docs = _toy_docs(args)
    vocab = Vocabulary(docs)
    params = ModelParams(len(vocab), seed=args.seed)
    report = gradient_check(
        docs, params, vocab, AdvConfig(args.alpha, args.epsilon), args.step, args.coords or None, args.seed
    )
    sys.stdout.write(report.format())
    if report.max_relative_error >= args.tolerance:
        print(f"error: max relative error {report.max_relative_error:.3e} >= {args.tolerance}", file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corefguard", description="Coreference evaluation without name leakage.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("perturb", help="rewrite PER/GPE names so none leaks from training")
    p.add_argument("--in", dest="input", required=True, help="CoNLL-2012 test corpus")
    p.add_argument("--out", required=True, help="perturbed corpus to write")
    p.add_argument("--seed", type=int, help="sampler seed (required)")
    p.add_argument("--train-names", help="file with one training name per line")
    p.add_argument("--train-corpus", help="CoNLL training corpus to collect names from")
    p.add_argument("--census", help=f"census surname file (default $%s/{DEFAULT_RESOURCES['census']})" % RESOURCE_ENV)
    p.add_argument("--first-names", help="name<TAB>male_proportion gazetteer")
    p.add_argument("--geonames", help="GeoNames dump; without it GPE names stay")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("score", help="MUC, B-cubed, CEAF-e and CoNLL F1")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--format", choices=("kv", "text"), default="kv")
    p.add_argument("--digits", type=int, default=2)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--stats-out", help="per-document statistics for 'sigtest ar'")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("gap-score", help="gendered GAP F1 and bias")
    p.add_argument("--gold", required=True, help="GAP TSV with header")
    p.add_argument("--pred", required=True, help="ID<TAB>A-pred<TAB>B-pred")
    p.add_argument("--digits", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gap_score)

    p = sub.add_parser("sigtest", help="McNemar or stratified approximate randomization")
    p.add_argument("test", choices=("ar", "mcnemar"))
    p.add_argument("--stats-a", help="per-document statistics of system A (ar)")
    p.add_argument("--stats-b", help="per-document statistics of system B (ar)")
    p.add_argument("--metric", choices=("conll", "f1"), default="conll")
    p.add_argument("--rounds", type=int, default=9999)
    p.add_argument("--seed", type=int)
    p.add_argument("--b", type=int, help="discordant count: A right, B wrong (mcnemar)")
    p.add_argument("--c", type=int, help="discordant count: B right, A wrong (mcnemar)")
    p.add_argument("--gold", help="GAP TSV (mcnemar over GAP predictions)")
    p.add_argument("--pred-a")
    p.add_argument("--pred-b")
    p.set_defaults(func=cmd_sigtest)

    p = sub.add_parser("leakage", help="train/test head-name overlap")
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--test", nargs="+")
    p.add_argument("--names-out", help="write training head names, one per line")
    p.set_defaults(func=cmd_leakage)

    for name, func, help_ in (
        ("train-toy", cmd_train_toy, "train the toy span model"),
        ("grad-check", cmd_grad_check, "finite-difference check of the toy model gradients"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--data", help="toy dataset file; synthetic data when absent")
        p.add_argument("--n-docs", type=int, default=8)
        p.add_argument("--data-seed", type=int, default=0)
        p.add_argument("--alpha", type=float, default=0.6)
        p.add_argument("--epsilon", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)
    train_p = sub.choices["train-toy"]
    train_p.add_argument("--iterations", type=int, default=200)
    train_p.add_argument("--lr", type=float, default=0.1)
    train_p.add_argument("--baseline", action="store_true", help="clean loss only")
    train_p.add_argument("--log", help="training log to write instead of stdout")
    check_p = sub.choices["grad-check"]
    check_p.add_argument("--step", type=float, default=1e-4)
    check_p.add_argument("--coords", type=int, default=40, help="coordinates per group, 0 for all")
    check_p.add_argument("--tolerance", type=float, default=1e-4)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (CorefGuardError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
