"""Acceptance checks, one test per criterion, each at its stated tolerance."""
import time
from functools import lru_cache

import numpy as np
import pytest

from helpers import DATA, context, oracle_optimum, synthetic
from pso2d import learning2d as l2d
from pso2d.algorithms import run_2d_upso, run_bpso
from pso2d.classifiers import ClassifierKind
from pso2d.experiment import AlgorithmSpec, DataSource, ExperimentSpec, run_experiment
from pso2d.metrics import paired_t_test

NB, KNN5 = ClassifierKind("nb"), ClassifierKind("knn", 5)
# comparisons of error means are made up to float representation error only
FLOAT_EPS = 1e-12

pytestmark = pytest.mark.slow


@lru_cache(maxsize=None)
def experiment(name: str, classifier: ClassifierKind, algorithms=("2d-upso",), runs=10):
    spec = ExperimentSpec(datasets=(DataSource(str(DATA / f"{name}.csv")),), classifiers=(classifier,),
                          algorithms=tuple(AlgorithmSpec(a) for a in algorithms), runs=runs,
                          budget=6000, seed=0)
    return run_experiment(spec).cells[0]


@lru_cache(maxsize=None)
def synthetic_runs(runner, budget=3000, seeds=20):
    ctx = context(synthetic(), NB, fold_seed=0, memoize=True)
    return oracle_optimum(ctx), [runner(ctx, budget=budget, seed=s) for s in range(seeds)]


def test_criterion_1_worked_example(verdict_line):
    start = time.perf_counter()
    x, pbest, gbest = [1, 0, 1, 0, 1], [0, 1, 0, 0, 1], [1, 1, 0, 1, 0]
    v = np.array([[0.14, 2.56, 1.35, 0.38, 0.71], [1.31, 2.40, 0.57, 1.46, 1.30]])
    checks = {
        "cardinalities": [l2d.cardinality(s) for s in (pbest, gbest, x)] == [2, 3, 3],
        "L_cog": l2d.learning_set(pbest, x).tolist() == [[0, 1, 0, 0, 0], [0, 1, 0, 0, 0]],
        "L_soc": l2d.learning_set(gbest, x).tolist() == [[0, 0, 1, 0, 0], [0, 1, 0, 1, 0]],
        "L_self": l2d.self_learning_set(x).tolist() == [[0, 0, 1, 0, 0], [1, 0, 1, 0, 1]],
        "rho_cumsum": np.round(np.cumsum(v[0]), 2).tolist() == [0.14, 2.70, 4.05, 4.43, 5.14],
        "xi": l2d.wheel_index(v[0], 3.25) == 3,
        "tau": l2d.rank_features(v[1]).tolist() == [3, 1, 5, 2, 4],
        "position": l2d.position_from(v, 3).astype(int).tolist() == [1, 1, 0, 1, 0],
    }
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 1.0
    failed = [k for k, good in checks.items() if not good]
    verdict_line(1, ok, f"worked example exact ({elapsed * 1e3:.1f} ms){'; mismatches: ' + ', '.join(failed) if failed else ''}")
    assert ok


def test_criterion_2_bruteforce_oracle(verdict_line):
    start = time.perf_counter()
    opt, runs = synthetic_runs(run_2d_upso)
    elapsed = time.perf_counter() - start
    best = [r.best_fitness for r in runs]
    hits = sum(b == opt for b in best)
    sound = all(b >= opt for b in best)
    ok = hits >= 16 and sound and elapsed < 120
    verdict_line(2, ok, f"optimum {opt:.4f} hit in {hits}/20 runs (need >= 16); "
                        f"no value below optimum: {sound}; {elapsed:.1f} s")
    assert ok


def test_criterion_3_zoo(verdict_line):
    nb, knn = experiment("zoo", NB), experiment("zoo", KNN5)
    m_nb = nb.summaries()[0].mean
    m_knn = knn.summaries()[0].mean
    ok_nb, ok_knn = m_nb <= 0.01 + FLOAT_EPS, m_knn <= 0.01 + FLOAT_EPS
    verdict_line(3, ok_nb and ok_knn,
                 f"zoo n={nb.n} N={nb.N}: NB mean {m_nb:.4f} ({'ok' if ok_nb else 'above 0.01'}), "
                 f"5-NN mean {m_knn:.4f} ({'ok' if ok_knn else 'above 0.01'})")
    assert ok_nb and ok_knn


def test_criterion_4_wine_band(verdict_line):
    nb, knn = experiment("wine", NB), experiment("wine", KNN5)
    m_nb, m_knn = nb.summaries()[0].mean, knn.summaries()[0].mean
    ok_nb = abs(m_nb - 0.21) <= 0.05
    ok_knn = abs(m_knn - 0.04) <= 0.04
    notes = []
    for label, cell, ref in (("NB", nb, 0.6007), ("5-NN", knn, 0.3157)):
        if abs(cell.baseline - ref) > 0.05:
            notes.append(f"J(U) {label} {cell.baseline:.4f} vs reference {ref} (deviates)")
    verdict_line(4, ok_nb and ok_knn,
                 f"wine NB mean {m_nb:.4f} (band 0.16-0.26: {ok_nb}), 5-NN mean {m_knn:.4f} "
                 f"(band 0-0.08: {ok_knn}); " + "; ".join(notes))
    assert ok_nb and ok_knn


def test_criterion_5_cardinality_reduction(verdict_line):
    cell = experiment("ionosphere", NB, ("2d-upso", "bpso"))
    s = {x.algorithm: x for x in cell.summaries()}
    xi_u, xi_b = s["2d-upso"].xi_avg, s["bpso"].xi_avg
    ok_abs, ok_rel = xi_u <= 4, xi_u < xi_b
    verdict_line(5, ok_abs and ok_rel,
                 f"ionosphere NB xi_avg 2D-UPSO {xi_u:.2f} (<= 4: {ok_abs}), BPSO {xi_b:.2f} "
                 f"(2D-UPSO lower: {ok_rel}); Xi {s['2d-upso'].xi_reduction:.1f}%")
    assert ok_abs and ok_rel


def test_criterion_6_comparative_ordering(verdict_line):
    ion = experiment("ionosphere", NB, ("2d-upso", "bpso"))
    parts, ok = [], True
    pairs = {
        "ionosphere": ([r.best_fitness for r in ion.runs["2d-upso"]],
                       [r.best_fitness for r in ion.runs["bpso"]]),
        "synthetic": ([r.best_fitness for r in synthetic_runs(run_2d_upso, seeds=10)[1]],
                      [r.best_fitness for r in synthetic_runs(run_bpso, seeds=10)[1]]),
    }
    for name, (u, b) in pairs.items():
        verdict = paired_t_test(u, b).verdict
        good = np.mean(u) <= np.mean(b) + FLOAT_EPS and verdict != "worse"
        ok &= good
        parts.append(f"{name}: 2D-UPSO {np.mean(u):.4f} vs BPSO {np.mean(b):.4f}, t-test {verdict}")
    verdict_line(6, ok, "; ".join(parts))
    assert ok


def test_criterion_7_timing(verdict_line):
    cells = [experiment("zoo", NB), experiment("zoo", KNN5), experiment("wine", NB),
             experiment("wine", KNN5), experiment("ionosphere", NB, ("2d-upso", "bpso"))]
    parts, ok = [], True
    for cell in cells:
        for algo, runs in cell.runs.items():
            t1 = sum(r.t1 for r in runs)
            t = sum(r.t for r in runs)
            additive = all(abs(r.t - (r.t1 + r.t2)) <= 1e-6 for r in runs)
            ratio = t1 / t
            ok &= ratio < 0.05 and additive
            parts.append(f"{cell.dataset}/{cell.classifier}/{algo} {100 * ratio:.1f}%")
    verdict_line(7, ok, "T1/T: " + ", ".join(parts))
    assert ok


def test_criterion_8_invariant_suites(verdict_line):
    import test_algorithms as ta
    import test_dataset as td
    import test_learning2d as tl

    suites = {
        "bit-level ops (1e4 cases)": tl.test_bit_level_properties,
        "swarm vs per-particle (1e4 cases)": tl.test_swarm_forms_match_per_particle,
        "stratified folds": td.test_fold_balance_property,
        "roulette chi-square": lambda: [tl.TestRouletteFrequencies().test_chi_square(rho)
                                        for rho in ([1, 1, 1, 1], [0.14, 2.56, 1.35, 0.38, 0.71])],
        "refresh gap traces (100 runs)": lambda: ta.test_refresh_gap_white_box(synthetic()),
        "u=1 UPSO equals GPSO": lambda: ta.test_unification_collapse_equals_gpso(synthetic()),
        "determinism": lambda: [ta.test_determinism(synthetic(), r) for r in ta.RUNNERS],
        "gbest monotone, legal masks": lambda: [ta.test_trace_invariants(synthetic(), r) for r in ta.RUNNERS],
    }
    failed = []
    for name, fn in suites.items():
        try:
            fn()
        except AssertionError as exc:
            failed.append(f"{name}: {exc}")
    ok = not failed
    verdict_line(8, ok, f"{len(suites) - len(failed)}/{len(suites)} invariant suites hold"
                        + (f"; {failed}" if failed else ""))
    assert ok
