"""Multi-run experiments, report aggregation and report files.

Run ``r`` of an experiment uses seed ``master_seed + r`` for the optimizer
and a separate stream seeded from ``[master_seed + r, FOLD_STREAM]`` for its
stratified folds. Every algorithm sees the same folds for a given run, so
per-run results are paired across algorithms.
"""
from __future__ import annotations

import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .algorithms import ALGORITHMS, EXTERNAL_BASELINES, AlgorithmError, RunResult, Topology, default_params
from .classifiers import ClassifierKind
from .criterion import CriterionContext
from .dataset import Dataset, DatasetError, impute_missing, load_dataset, normalize_minmax, stratified_folds
from .metrics import cardinality_reduction, mean_sd, paired_t_test, performance_improvement, rank_algorithms

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FOLD_STREAM = 1
RESULTS_FILE = "results.json"
SUMMARY_FILE = "summary.txt"
FORMAT_VERSION = 1


class ExperimentError(ValueError):
    """Invalid experiment specification."""


@dataclass(frozen=True)
class DataSource:
    path: str
    label_column: int | str = "last"
    missing_token: str = "?"
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or Path(self.path).stem


@dataclass(frozen=True)
class AlgorithmSpec:
    """Algorithm name plus parameter overrides.

    Overrides are fields of the algorithm's parameter dataclass, plus
    ``radius`` for the ring topology of the local and unified variants.
    """

    name: str
    overrides: dict = field(default_factory=dict)

    def build(self):
        if self.name in EXTERNAL_BASELINES:
            raise ExperimentError(f"{self.name}: not implemented (external reference)")
        if self.name not in ALGORITHMS:
            raise ExperimentError(f"unknown algorithm {self.name!r}")
        overrides = dict(self.overrides)
        radius = overrides.pop("radius", None)
        params = default_params(self.name)
        known = {f.name for f in dataclasses.fields(params)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ExperimentError(f"{self.name}: unknown parameter(s) {', '.join(unknown)}")
        try:
            params = dataclasses.replace(params, **overrides)
        except (TypeError, ValueError) as exc:
            raise ExperimentError(f"{self.name}: {exc}") from exc
        topology = None
        if radius is not None:
            if self.name not in ("2d-lpso", "2d-upso"):
                raise ExperimentError(f"{self.name}: 'radius' applies only to ring-topology variants")
            topology = Topology("ring", int(radius))
            try:
                topology.validate(params.ps)
            except AlgorithmError as exc:
                raise ExperimentError(f"{self.name}: {exc}") from exc
        return params, topology


@dataclass(frozen=True)
class ExperimentSpec:
    datasets: tuple[DataSource, ...]
    classifiers: tuple[ClassifierKind, ...] = (ClassifierKind(),)
    algorithms: tuple[AlgorithmSpec, ...] = (AlgorithmSpec("2d-upso"),)
    runs: int = 40
    budget: int = 6000
    seed: int = 0
    folds: int = 10
    out: Optional[str] = None
    normalize: bool = False
    memoize: bool = False
    workers: int = 1

    def validate(self) -> None:
        if not self.datasets:
            raise ExperimentError("at least one dataset is required")
        if not self.classifiers:
            raise ExperimentError("at least one classifier is required")
        if self.runs < 1:
            raise ExperimentError(f"runs must be >= 1, got {self.runs}")
        if self.budget < 1:
            raise ExperimentError(f"budget must be >= 1, got {self.budget}")
        if self.folds < 2:
            raise ExperimentError(f"folds must be >= 2, got {self.folds}")
        if self.workers < 1:
            raise ExperimentError(f"workers must be >= 1, got {self.workers}")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ExperimentError("each algorithm may appear only once")
        for algo in self.algorithms:
            params, _ = algo.build()
            if self.budget < params.ps:
                raise ExperimentError(f"{algo.name}: budget {self.budget} is below the swarm size {params.ps}")


def _classifier_from(entry) -> ClassifierKind:
    if isinstance(entry, str):
        return ClassifierKind(entry.lower())
    if isinstance(entry, dict):
        return ClassifierKind(entry.get("tag", "nb"), int(entry.get("k", 5)))
    raise ExperimentError(f"cannot read classifier entry {entry!r}")


def spec_from_mapping(raw: dict[str, Any], base_dir: Path | None = None) -> ExperimentSpec:
    """Build a spec from a parsed spec-file mapping (see the README for the schema)."""
    raw = dict(raw)
    known = {"datasets", "classifiers", "algorithms", "runs", "budget", "seed", "folds",
             "out", "normalize", "memoize", "workers"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ExperimentError(f"unknown spec key(s): {', '.join(unknown)}")
    sources = []
    for entry in raw.get("datasets", []):
        if isinstance(entry, str):
            entry = {"path": entry}
        if "path" not in entry:
            raise ExperimentError("every dataset entry needs a 'path'")
        path = Path(entry["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        sources.append(DataSource(str(path), entry.get("label_column", "last"),
                                  entry.get("missing_token", "?"), entry.get("name", "")))
    algorithms = []
    for entry in raw.get("algorithms", [{"name": "2d-upso"}]):
        if isinstance(entry, str):
            entry = {"name": entry}
        entry = dict(entry)
        if "name" not in entry:
            raise ExperimentError("every algorithm entry needs a 'name'")
        algorithms.append(AlgorithmSpec(entry.pop("name"), entry))
    try:
        classifiers = tuple(_classifier_from(c) for c in raw.get("classifiers", ["nb"]))
    except ValueError as exc:
        raise ExperimentError(str(exc)) from exc
    spec = ExperimentSpec(
        datasets=tuple(sources), classifiers=classifiers, algorithms=tuple(algorithms),
        runs=int(raw.get("runs", 40)), budget=int(raw.get("budget", 6000)),
        seed=int(raw.get("seed", 0)), folds=int(raw.get("folds", 10)), out=raw.get("out"),
        normalize=bool(raw.get("normalize", False)), memoize=bool(raw.get("memoize", False)),
        workers=int(raw.get("workers", 1)),
    )
    spec.validate()
    return spec


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ExperimentError(f"cannot read spec file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ExperimentError(f"{path}: {exc}") from exc
    return spec_from_mapping(raw, path.parent)


@lru_cache(maxsize=None)
def prepare_dataset(source: DataSource, normalize: bool = False) -> Dataset:
    """Load, impute and optionally min-max normalize one data source."""
    d = load_dataset(source.path, source.label_column, source.missing_token)
    if d.missing_count():
        d = impute_missing(d)
    if normalize:
        d = normalize_minmax(d)
    return d


def run_context(d: Dataset, classifier: ClassifierKind, run_seed: int, folds: int = 10,
                memoize: bool = False) -> CriterionContext:
    """Criterion context with the folds belonging to ``run_seed``."""
    fold_rng = np.random.default_rng([run_seed, FOLD_STREAM])
    return CriterionContext(d, stratified_folds(d, folds, fold_rng), classifier, memoize)


@dataclass(frozen=True)
class _Job:
    source: DataSource
    classifier: ClassifierKind
    algorithm: AlgorithmSpec
    run: int
    seed: int
    budget: int
    folds: int
    normalize: bool
    memoize: bool


def _run_job(job: _Job) -> tuple[float, RunResult]:
    where = (f"dataset={job.source.label}, classifier={job.classifier}, "
             f"algorithm={job.algorithm.name}, run={job.run}")
    try:
        d = prepare_dataset(job.source, job.normalize)
        ctx = run_context(d, job.classifier, job.seed, job.folds, job.memoize)
        baseline = ctx.evaluate_full_set()
        params, topology = job.algorithm.build()
        result = ALGORITHMS[job.algorithm.name](ctx, params, job.budget, job.seed, topology)
    except Exception as exc:
        try:
            annotated = type(exc)(f"[{where}] {exc}")
        except Exception:
            annotated = ExperimentError(f"[{where}] {exc}")
        raise annotated from exc
    return baseline, result


@dataclass
class AlgorithmSummary:
    algorithm: str
    mean: float
    sd: float
    pi: Optional[float]
    pi_rank: int
    xi_avg: float
    xi_sd: float
    xi_reduction: float
    xi_rank: int
    t1: float
    t2: float
    t: float


@dataclass
class Cell:
    """All runs of every algorithm on one (dataset, classifier) pair."""

    dataset: str
    n: int
    N: int
    classifier: str
    baselines: list[float]
    runs: dict[str, list[RunResult]]

    @property
    def baseline(self) -> float:
        return float(np.mean(self.baselines))

    def summaries(self) -> list[AlgorithmSummary]:
        names = list(self.runs)
        rows = []
        for name in names:
            results = self.runs[name]
            mean, sd = mean_sd([r.best_fitness for r in results])
            xi_avg, xi_sd = mean_sd([r.cardinality for r in results])
            rows.append(dict(
                algorithm=name, mean=mean, sd=sd,
                pi=performance_improvement(self.baseline, mean),
                xi_avg=xi_avg, xi_sd=xi_sd, xi_reduction=cardinality_reduction(self.n, xi_avg),
                t1=float(np.mean([r.t1 for r in results])),
                t2=float(np.mean([r.t2 for r in results])),
                t=float(np.mean([r.t for r in results])),
            ))
        pi_ranks = rank_algorithms([r["pi"] for r in rows])
        xi_ranks = rank_algorithms([r["xi_reduction"] for r in rows])
        return [AlgorithmSummary(pi_rank=p, xi_rank=x, **row)
                for row, p, x in zip(rows, pi_ranks, xi_ranks)]

    def verdicts(self, alpha: float = 0.05) -> dict[str, dict[str, Optional[str]]]:
        """Paired t-test verdict of each row algorithm against each column algorithm."""
        out: dict[str, dict[str, Optional[str]]] = {}
        for a, ra in self.runs.items():
            out[a] = {}
            for b, rb in self.runs.items():
                if a == b or len(ra) < 2:
                    out[a][b] = None
                    continue
                out[a][b] = paired_t_test([r.best_fitness for r in ra],
                                          [r.best_fitness for r in rb], alpha).verdict
        return out


@dataclass
class Report:
    settings: dict[str, Any]
    cells: list[Cell]

    def overall_ranks(self) -> dict[str, dict[str, tuple[float, int]]]:
        """Per classifier: algorithm -> (average PI rank over datasets, overall rank)."""
        out: dict[str, dict[str, tuple[float, int]]] = {}
        by_clf: dict[str, list[Cell]] = {}
        for cell in self.cells:
            by_clf.setdefault(cell.classifier, []).append(cell)
        for clf, cells in by_clf.items():
            ranks: dict[str, list[int]] = {}
            for cell in cells:
                for s in cell.summaries():
                    ranks.setdefault(s.algorithm, []).append(s.pi_rank)
            names = list(ranks)
            avg = [float(np.mean(ranks[a])) for a in names]
            overall = rank_algorithms(avg, higher_is_better=False)
            out[clf] = {a: (v, o) for a, v, o in zip(names, avg, overall)}
        return out


def run_experiment(spec: ExperimentSpec) -> Report:
    spec.validate()
    datasets = []
    for source in spec.datasets:
        try:
            datasets.append(prepare_dataset(source, spec.normalize))
        except DatasetError as exc:
            raise DatasetError(f"[dataset={source.label}] {exc}") from exc
    jobs = [
        _Job(source, clf, algo, r, spec.seed + r, spec.budget, spec.folds, spec.normalize, spec.memoize)
        for source in spec.datasets
        for clf in spec.classifiers
        for algo in spec.algorithms
        for r in range(spec.runs)
    ]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(_run_job, jobs))
    else:
        outcomes = [_run_job(job) for job in jobs]

    cells = []
    it = iter(zip(jobs, outcomes))
    for source, d in zip(spec.datasets, datasets):
        for clf in spec.classifiers:
            baselines = [run_context(d, clf, spec.seed + r, spec.folds).evaluate_full_set()
                         for r in range(spec.runs)] if not spec.algorithms else None
            runs: dict[str, list[RunResult]] = {}
            for algo in spec.algorithms:
                per_run = [next(it) for _ in range(spec.runs)]
                runs[algo.name] = [res for _, (_, res) in per_run]
                if baselines is None:
                    baselines = [base for _, (base, _) in per_run]
            cells.append(Cell(source.label, d.n, d.N, str(clf), baselines, runs))
    return Report(_settings(spec), cells)


def _settings(spec: ExperimentSpec) -> dict[str, Any]:
    return {
        "runs": spec.runs, "budget": spec.budget, "seed": spec.seed, "folds": spec.folds,
        "normalize": spec.normalize, "memoize": spec.memoize,
        "algorithms": [{"name": a.name, **a.overrides} for a in spec.algorithms],
    }


# -- serialization ---------------------------------------------------------

def _mask_str(mask) -> str:
    return "".join("1" if b else "0" for b in mask)


def _result_to_dict(r: RunResult) -> dict[str, Any]:
    return {
        "algorithm": r.algorithm, "seed": r.seed, "best_mask": _mask_str(r.best_mask),
        "best_fitness": r.best_fitness, "cardinality": r.cardinality, "fe_used": r.fe_used,
        "t1": r.t1, "t2": r.t2, "t": r.t,
        "fitness_trace": list(map(float, r.fitness_trace)),
        "cardinality_trace": list(map(int, r.cardinality_trace)),
    }


def _result_from_dict(raw: dict[str, Any]) -> RunResult:
    return RunResult(
        algorithm=raw["algorithm"], seed=raw["seed"],
        best_mask=np.array([c == "1" for c in raw["best_mask"]]),
        best_fitness=raw["best_fitness"], fitness_trace=raw["fitness_trace"],
        cardinality_trace=raw["cardinality_trace"], fe_used=raw["fe_used"],
        t1=raw["t1"], t2=raw["t2"], t=raw["t"],
    )


def report_to_dict(report: Report) -> dict[str, Any]:
    cells = []
    for cell in report.cells:
        cells.append({
            "dataset": cell.dataset, "n": cell.n, "N": cell.N, "classifier": cell.classifier,
            "baselines": cell.baselines, "baseline": cell.baseline,
            "runs": {a: [_result_to_dict(r) for r in rs] for a, rs in cell.runs.items()},
            "summary": [dataclasses.asdict(s) for s in cell.summaries()],
            "t_test": cell.verdicts(),
        })
    overall = {clf: {a: {"average_rank": v, "overall_rank": o} for a, (v, o) in ranks.items()}
               for clf, ranks in report.overall_ranks().items()}
    return {"format": FORMAT_VERSION, "settings": report.settings, "cells": cells,
            "overall_ranks": overall}


def report_from_dict(raw: dict[str, Any]) -> Report:
    cells = [
        Cell(c["dataset"], c["n"], c["N"], c["classifier"], list(c["baselines"]),
             {a: [_result_from_dict(r) for r in rs] for a, rs in c["runs"].items()})
        for c in raw["cells"]
    ]
    return Report(raw["settings"], cells)


def load_report(path: str | Path) -> Report:
    with Path(path).open(encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def _fmt(x: Optional[float], spec: str) -> str:
    return "n/a" if x is None else format(x, spec)


def summary_text(report: Report) -> str:
    s = report.settings
    lines = [
        "# wrapper feature selection results",
        f"# runs={s['runs']} budget={s['budget']} seed={s['seed']} folds={s['folds']} "
        f"normalize={s['normalize']} memoize={s['memoize']}",
        "# SD is the population standard deviation over runs; J(U) is the mean all-features error",
        "# T1 = T - T2 (optimizer time), T2 = time inside subset evaluation, seconds per run",
    ]
    header = (f"{'algorithm':<10} {'Mean':>8} {'SD':>8} {'PI(%)':>7} {'Rank':>4}  "
              f"{'xi_avg':>7} {'Xi(%)':>6} {'Rank':>4}  {'T1':>8} {'T2':>8} {'T':>8}")
    for cell in report.cells:
        lines.append("")
        lines.append(f"## {cell.dataset} (n={cell.n}, N={cell.N}) {cell.classifier}  "
                     f"J(U)={cell.baseline:.4f}")
        lines.append(header)
        for r in cell.summaries():
            lines.append(
                f"{r.algorithm:<10} {r.mean:>8.4f} {r.sd:>8.4f} {_fmt(r.pi, '7.1f'):>7} {r.pi_rank:>4}  "
                f"{r.xi_avg:>7.2f} {r.xi_reduction:>6.1f} {r.xi_rank:>4}  "
                f"{r.t1:>8.3f} {r.t2:>8.3f} {r.t:>8.3f}")
        verdicts = cell.verdicts()
        names = list(verdicts)
        if len(names) > 1 and len(next(iter(cell.runs.values()))) > 1:
            lines.append("t-test (row vs column, alpha=0.05):")
            lines.append(" " * 11 + " ".join(f"{b:>13}" for b in names))
            for a in names:
                row = " ".join(f"{verdicts[a][b] or '-':>13}" for b in names)
                lines.append(f"{a:<10} {row}")
    overall = report.overall_ranks()
    if overall and any(overall.values()):
        lines.append("")
        lines.append("## overall ranks (average PI rank over datasets)")
        for clf, ranks in overall.items():
            for a, (avg, o) in ranks.items():
                lines.append(f"{clf:<6} {a:<10} average={avg:.2f} overall={o}")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, directory: str | Path) -> tuple[Path, Path]:
    """Write ``results.json`` (raw runs and aggregates) and ``summary.txt``."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        raw = directory / RESULTS_FILE
        summary = directory / SUMMARY_FILE
        raw.write_text(json.dumps(report_to_dict(report), indent=1, sort_keys=True) + "\n",
                       encoding="utf-8")
        summary.write_text(summary_text(report), encoding="utf-8")
    except OSError as exc:
        raise ExperimentError(f"cannot write report to {directory}: {exc}") from exc
    return raw, summary
