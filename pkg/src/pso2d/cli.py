"""Command-line entry point: ``pso2d run | eval | baseline``."""
from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .algorithms import ALGORITHMS, EXTERNAL_BASELINES
from .classifiers import ClassifierKind
from .dataset import DatasetError
from .experiment import (AlgorithmSpec, DataSource, ExperimentSpec, emit_report, load_spec,
                         prepare_dataset, run_context, run_experiment, summary_text)

EXIT_OK, EXIT_INVALID, EXIT_DATA = 0, 1, 2
IMPLEMENTED = [name for name in ALGORITHMS if name not in EXTERNAL_BASELINES]


def _label_col(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _data_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--data", action="append", required=required, metavar="PATH",
                   help="CSV dataset (repeat for several)")
    p.add_argument("--label-col", type=_label_col, default="last",
                   help="label column: name, index, 'first' or 'last' (default: last)")
    p.add_argument("--missing-token", default="?", help="missing-value token (default: ?)")
    p.add_argument("--classifier", choices=["nb", "knn"], action="append",
                   help="wrapped classifier (repeatable, default: nb)")
    p.add_argument("--knn-k", type=int, default=5, help="neighbours for knn (default: 5)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    p.add_argument("--folds", type=int, default=10, help="cross-validation folds (default: 10)")
    p.add_argument("--normalize", action="store_true", help="min-max normalize features")


class _Parser(argparse.ArgumentParser):
    # usage errors share the validation exit code; 2 is reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pso2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a full experiment from a spec file or flags")
    run.add_argument("--spec", help="TOML experiment spec; command-line data flags are then ignored")
    _data_args(run, required=False)
    run.add_argument("--algo", action="append", choices=IMPLEMENTED,
                     help="optimizer (repeatable, default: 2d-upso)")
    run.add_argument("--runs", type=int, default=40)
    run.add_argument("--budget", type=int, default=6000)
    run.add_argument("--swarm-size", type=int, default=30)
    run.add_argument("--rg", type=int, default=3, help="refresh gap of the 2-D learning variants")
    run.add_argument("--u-start", type=float, default=0.2)
    run.add_argument("--u-end", type=float, default=0.4)
    run.add_argument("--memoize", action="store_true", help="cache subset fitness values")
    run.add_argument("--out", help="directory for results.json and summary.txt")
    run.add_argument("--workers", type=int, default=1, help="parallel runs (processes)")

    ev = sub.add_parser("eval", help="score one explicit feature mask")
    _data_args(ev)
    ev.add_argument("--mask", required=True,
                    help="bit string like 10110 or comma-separated 1-based feature indexes")

    base = sub.add_parser("baseline", help="all-features error J(U)")
    _data_args(base)
    base.add_argument("--runs", type=int, default=1, help="fold draws to average over (default: 1)")
    return parser


def _classifiers(args) -> tuple[ClassifierKind, ...]:
    return tuple(ClassifierKind(tag, args.knn_k) for tag in (args.classifier or ["nb"]))


def _sources(args) -> list[DataSource]:
    return [DataSource(p, args.label_col, args.missing_token) for p in args.data]


def _parse_mask(text: str, n: int) -> np.ndarray:
    text = text.strip()
    if text and set(text) <= {"0", "1"} and len(text) == n:
        return np.array([c == "1" for c in text])
    mask = np.zeros(n, dtype=bool)
    try:
        idx = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"cannot parse mask {text!r}") from None
    for j in idx:
        if not 1 <= j <= n:
            raise ValueError(f"feature index {j} outside 1..{n}")
        mask[j - 1] = True
    return mask


def _cmd_run(args) -> None:
    if args.spec:
        spec = load_spec(args.spec)
        if args.out:
            spec = dataclasses.replace(spec, out=args.out)
    else:
        if not args.data:
            raise ValueError("either --spec or --data is required")
        algos = []
        for name in args.algo or ["2d-upso"]:
            overrides = {"ps": args.swarm_size}
            if name.startswith("2d-"):
                overrides.update(rg=args.rg, u_start=args.u_start, u_end=args.u_end)
            algos.append(AlgorithmSpec(name, overrides))
        spec = ExperimentSpec(
            datasets=tuple(_sources(args)), classifiers=_classifiers(args), algorithms=tuple(algos),
            runs=args.runs, budget=args.budget, seed=args.seed, folds=args.folds, out=args.out,
            normalize=args.normalize, memoize=args.memoize, workers=args.workers,
        )
    report = run_experiment(spec)
    sys.stdout.write(summary_text(report))
    if spec.out:
        raw, summary = emit_report(report, spec.out)
        print(f"wrote {raw} and {summary}")


def _cmd_eval(args) -> None:
    for source in _sources(args):
        d = prepare_dataset(source, args.normalize)
        mask = _parse_mask(args.mask, d.n)
        for clf in _classifiers(args):
            ctx = run_context(d, clf, args.seed, args.folds)
            print(f"{source.label} {clf} mask={''.join('1' if b else '0' for b in mask)} "
                  f"J={ctx.evaluate_subset(mask):.6f}")


def _cmd_baseline(args) -> None:
    if args.runs < 1:
        raise ValueError("--runs must be >= 1")
    for source in _sources(args):
        d = prepare_dataset(source, args.normalize)
        for clf in _classifiers(args):
            values = [run_context(d, clf, args.seed + r, args.folds).evaluate_full_set()
                      for r in range(args.runs)]
            print(f"{source.label} {clf} n={d.n} N={d.N} J(U)={np.mean(values):.6f}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "eval": _cmd_eval, "baseline": _cmd_baseline}[args.command]
    try:
        handler(args)
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
