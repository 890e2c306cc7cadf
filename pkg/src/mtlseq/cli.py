"""Command-line entry points.

Subcommands: diagnose, freqbin, train, evaluate, significance, grid,
learning-curve, capacity-sweep, compare-pos. Exit code 0 on success;
any failure prints one ``error: <message>`` line on stderr and exits
nonzero.
"""

import argparse
import sys

from . import experiment, stats
from .conll import ConllError, read_conll, write_conll, word_frequencies
from .freqbin import VARIANT_UNIFORM, apply_freqbin, fit_freqbin
from .metrics import bootstrap_significance, build_report


def _corpus_args(parser, role="input"):
    parser.add_argument("path", help=f"{role} CoNLL file")
    parser.add_argument("--task", default="labels", help="task name for the label column")
    parser.add_argument("--token-column", type=int, default=0)
    parser.add_argument("--label-column", type=int, default=1)
    parser.add_argument("--o-label", default=None)


def _read(args, path=None, task=None):
    return read_conll(
        path or args.path,
        [(args.label_column, task or args.task)],
        token_column=args.token_column,
        o_labels={task or args.task: args.o_label} if args.o_label else None,
    )


def cmd_diagnose(args) -> int:
    corpus = _read(args)
    bundle = stats.dataset_stats(corpus, args.task, o_label=args.o_label)
    probe = None
    if args.probe:
        probe = stats.trigram_frequency_probe(
            corpus, args.task, folds=args.folds,
            ridge_strength=args.ridge_strength, seed=args.probe_seed,
        )
    sys.stdout.write(stats.stats_report(bundle, args.task, probe))
    return 0


def cmd_freqbin(args) -> int:
    corpus = _read(args)
    if args.fit_on:
        fit_corpus = _read(args, path=args.fit_on)
    else:
        fit_corpus = corpus
    k = args.k if args.variant == VARIANT_UNIFORM else None
    spec = fit_freqbin(word_frequencies(fit_corpus), args.variant, k)
    tagged = apply_freqbin(spec, corpus, args.column_name)
    write_conll(tagged, args.out)
    if args.spec_out:
        spec.save(args.spec_out)
    print(f"wrote {args.out} with column {args.column_name!r} "
          f"({len(spec.labels)} labels)")
    return 0


def cmd_train(args) -> int:
    cfg = experiment.load_config(args.config)
    result = experiment.run_experiment(cfg, args.out)
    if result.report is not None:
        sys.stdout.write(result.report.to_text())
    else:
        print(f"trained; no test split configured, artifacts in {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    gold = _read(args, path=args.gold, task="gold")
    pred = _read(args, path=args.pred, task="gold")
    if gold.n_sentences != pred.n_sentences:
        raise ValueError("gold and prediction files differ in sentence count")
    inv = gold.inventories["gold"]
    o_label = args.o_label if args.o_label else inv.o_label
    report = build_report(
        args.task,
        [s.labels("gold") for s in gold.sentences],
        [s.labels("gold") for s in pred.sentences],
        o_label=o_label,
        scheme=inv.scheme,
    )
    sys.stdout.write(report.to_text())
    return 0


def cmd_significance(args) -> int:
    gold = _read(args, path=args.gold, task="gold")
    pred_a = _read(args, path=args.pred_a, task="gold")
    pred_b = _read(args, path=args.pred_b, task="gold")
    o_label = args.o_label if args.o_label else gold.inventories["gold"].o_label
    result = bootstrap_significance(
        [s.labels("gold") for s in gold.sentences],
        [s.labels("gold") for s in pred_a.sentences],
        [s.labels("gold") for s in pred_b.sentences],
        o_label=o_label, iterations=args.iterations, seed=args.seed,
    )
    print(f"better\t{result.better}")
    print(f"delta-f1\t{result.delta_f1:.6f}")
    print(f"p-value\t{result.p_value:.6f}")
    print(f"iterations\t{result.iterations}")
    print(f"significant\t{'yes' if result.significant else 'no'}")
    return 0


def cmd_grid(args) -> int:
    cfg = experiment.load_config(args.config)
    grid = experiment.run_grid(cfg, args.out, iterations=args.iterations)
    sys.stdout.write(grid.to_text())
    return 0


def cmd_learning_curve(args) -> int:
    cfg = experiment.load_config(args.config)
    fractions = [float(x) for x in args.fractions.split(",") if x]
    results = experiment.run_learning_curve(cfg, fractions, args.out)
    for fraction, report in results:
        print(f"{fraction}\t{report.micro_f1_non_o:.6f}")
    return 0


def cmd_capacity_sweep(args) -> int:
    cfg = experiment.load_config(args.config)
    factors = [int(x) for x in args.factors.split(",") if x]
    results = experiment.run_capacity_sweep(cfg, factors, args.out)
    for factor, report in results:
        print(f"{factor}\t{report.micro_f1_non_o:.6f}")
    return 0


def cmd_compare_pos(args) -> int:
    cfg = experiment.load_config(args.config)
    sources = []
    for item in args.source:
        if "=" not in item:
            raise ValueError(f"--source expects name=path, got {item!r}")
        name, path = item.split("=", 1)
        sources.append(experiment.AuxTask(
            name=name, head_layer=args.layer, train=path,
            token_column=args.token_column, label_column=args.label_column,
        ))
    if not sources:
        raise ValueError("need at least one --source name=path")
    table = experiment.compare_pos_sources(cfg, sources, args.out,
                                           iterations=args.iterations)
    sys.stdout.write(table.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtlseq",
        description="Multi-task bi-LSTM sequence labeling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", help="label-distribution statistics for a corpus")
    _corpus_args(p)
    p.add_argument("--probe", action="store_true",
                   help="also run the label-trigram frequency regression")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--ridge-strength", type=float, default=1.0)
    p.add_argument("--probe-seed", type=int, default=0)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("freqbin", help="add a frequency-bin label column")
    _corpus_args(p)
    p.add_argument("--variant", default=VARIANT_UNIFORM,
                   choices=["skewed10", "skewed5", "uniform"])
    p.add_argument("--k", type=int, default=5, help="quantile count (uniform only)")
    p.add_argument("--column-name", default="freq")
    p.add_argument("--fit-on", default=None,
                   help="fit frequencies on this corpus instead of the input")
    p.add_argument("--out", required=True, help="output CoNLL file")
    p.add_argument("--spec-out", default=None, help="also save the fitted spec")
    p.set_defaults(func=cmd_freqbin)

    p = sub.add_parser("train", help="run one experiment config end to end")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="artifact directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a prediction file against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--task", default="labels")
    p.add_argument("--token-column", type=int, default=0)
    p.add_argument("--label-column", type=int, default=1)
    p.add_argument("--o-label", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("significance", help="paired bootstrap between two systems")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    p.add_argument("--token-column", type=int, default=0)
    p.add_argument("--label-column", type=int, default=1)
    p.add_argument("--o-label", default=None)
    p.add_argument("--iterations", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_significance)

    p = sub.add_parser("grid", help="baseline plus every aux-menu system")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=10000)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("learning-curve", help="train on growing main-task slices")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", default="0.25,0.5,0.75,1.0")
    p.set_defaults(func=cmd_learning_curve)

    p = sub.add_parser("capacity-sweep", help="train at several hidden widths")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--factors", default="1,2")
    p.set_defaults(func=cmd_capacity_sweep)

    p = sub.add_parser("compare-pos", help="compare tag sources as the aux task")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--source", action="append", default=[],
                   help="name=path, repeatable")
    p.add_argument("--layer", type=int, default=1)
    p.add_argument("--token-column", type=int, default=0)
    p.add_argument("--label-column", type=int, default=1)
    p.add_argument("--iterations", type=int, default=10000)
    p.set_defaults(func=cmd_compare_pos)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConllError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
