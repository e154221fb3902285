"""Swarm optimizers for wrapper feature selection.

The 2-D learning family (global, local and unified PSO) and the binary PSO
baselines share the same bookkeeping: a fixed function-evaluation budget
that includes the initial generation, synchronous swarm evaluation, and
pbest/gbest updates that prefer lower fitness, then fewer features, then
the incumbent.

Random draws are consumed in a fixed order so a seed pins the whole
trajectory. 2-D learning, per iteration: velocity refreshes for stagnant
particles in index order (2n uniforms each), then ``(ps, 2)`` uniforms for
the per-particle ``r1, r2`` pairs, then ``ps`` roulette-wheel uniforms.
BPSO, per iteration: ``(ps, n)`` blocks for ``r1``, ``r2`` and the sigmoid
thresholds, then one integer per empty position in index order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from . import learning2d as l2d
from .criterion import CriterionContext
from .learning2d import SwarmParams


class AlgorithmError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    kind: Literal["global", "ring"] = "ring"
    radius: int = 1

    def validate(self, ps: int) -> None:
        if self.kind not in ("global", "ring"):
            raise AlgorithmError(f"unknown topology {self.kind!r}")
        if self.kind == "ring":
            if self.radius < 1:
                raise AlgorithmError(f"ring radius must be >= 1, got {self.radius}")
            if 2 * self.radius + 1 >= ps:
                raise AlgorithmError(
                    f"ring radius {self.radius} covers the whole swarm of {ps}; use the global topology")

    def neighbors(self, i: int, ps: int) -> np.ndarray:
        if self.kind == "global":
            return np.arange(ps)
        return np.unique(np.arange(i - self.radius, i + self.radius + 1) % ps)


@dataclass(frozen=True)
class BPSOParams:
    """Binary PSO settings; ``chaotic`` drives the inertia with a logistic map from ``omega``."""

    ps: int = 30
    omega: float = 1.0
    c1: float = 2.0
    c2: float = 2.0
    v_max: float = 6.0
    chaotic: bool = False

    def __post_init__(self):
        if self.ps < 2:
            raise AlgorithmError(f"swarm size must be >= 2, got {self.ps}")
        if self.v_max <= 0:
            raise AlgorithmError("v_max must be positive")
        if self.chaotic and not 0.0 < self.omega < 1.0:
            raise AlgorithmError("logistic-map inertia needs a seed strictly inside (0, 1)")


CHBPSO_DEFAULTS = BPSOParams(omega=0.48, chaotic=True)


@dataclass
class SwarmState:
    positions: np.ndarray          # (ps, n) bool
    velocities: np.ndarray         # (ps, 2, n) for 2-D learning, (ps, n) for BPSO
    fitness: np.ndarray
    prev_fitness: np.ndarray
    pbest: np.ndarray
    pbestval: np.ndarray
    gbest: np.ndarray
    gbestval: float
    counts: np.ndarray
    t: int = 0
    refreshed: list[int] = field(default_factory=list)

    @property
    def ps(self) -> int:
        return self.positions.shape[0]


@dataclass
class RunResult:
    algorithm: str
    seed: int
    best_mask: np.ndarray
    best_fitness: float
    fitness_trace: list[float]
    cardinality_trace: list[int]
    fe_used: int
    t1: float
    t2: float
    t: float

    @property
    def cardinality(self) -> int:
        return int(np.count_nonzero(self.best_mask))


Callback = Callable[[SwarmState], None]


def _better(f: float, card: int, f_inc: float, card_inc: int) -> bool:
    return f < f_inc or (f == f_inc and card < card_inc)


def nbest_of(state: SwarmState, topology: Topology, i: int) -> np.ndarray:
    """pbest with the lowest pbestval in particle ``i``'s neighbourhood (lowest index on ties)."""
    if not 0 <= i < state.ps:
        raise AlgorithmError(f"particle index {i} out of range for swarm of {state.ps}")
    if topology.kind == "global":
        return state.gbest
    hood = topology.neighbors(i, state.ps)
    return state.pbest[hood[int(np.argmin(state.pbestval[hood]))]]


def neighborhood_table(topology: Topology, ps: int) -> np.ndarray:
    """(ps, hood size) particle indexes, each row sorted ascending."""
    return np.array([topology.neighbors(i, ps) for i in range(ps)])


def _nbest_index(pbestval: np.ndarray, hoods: np.ndarray) -> np.ndarray:
    rows = np.arange(hoods.shape[0])
    return hoods[rows, np.argmin(pbestval[hoods], axis=1)]


def _iterations(budget: int, ps: int) -> int:
    if budget < ps:
        raise AlgorithmError(f"budget {budget} is smaller than the swarm size {ps}")
    return budget // ps - 1


def _evaluate(ctx: CriterionContext, positions: np.ndarray) -> np.ndarray:
    return np.array([ctx.evaluate_subset(x) for x in positions])


def _init_bests(positions, fitness):
    pbest = positions.copy()
    pbestval = fitness.copy()
    g = 0
    cards = positions.sum(axis=1)
    for i in range(1, len(fitness)):
        if _better(fitness[i], cards[i], fitness[g], cards[g]):
            g = i
    return pbest, pbestval, pbest[g].copy(), float(pbestval[g])


def _update_bests(state: SwarmState) -> None:
    cards = state.positions.sum(axis=1)
    pcards = state.pbest.sum(axis=1)
    for i in range(state.ps):
        f = state.fitness[i]
        if _better(f, cards[i], state.pbestval[i], pcards[i]):
            strict = f < state.pbestval[i]
            state.pbest[i] = state.positions[i]
            state.pbestval[i] = f
            pcards[i] = cards[i]
            state.counts[i] = 0 if strict else state.counts[i] + 1
        else:
            state.counts[i] += 1
    gcard = int(state.gbest.sum())
    for i in range(state.ps):
        if _better(state.pbestval[i], pcards[i], state.gbestval, gcard):
            state.gbest = state.pbest[i].copy()
            state.gbestval = float(state.pbestval[i])
            gcard = int(pcards[i])


def _result(name, seed, state, ftrace, ctrace, ctx, fe0, t20, start) -> RunResult:
    total = time.perf_counter() - start
    t2 = ctx.eval_time - t20
    return RunResult(
        algorithm=name, seed=seed, best_mask=state.gbest.copy(), best_fitness=state.gbestval,
        fitness_trace=ftrace, cardinality_trace=ctrace, fe_used=ctx.fe_counter - fe0,
        t1=total - t2, t2=t2, t=total,
    )


def _run_2d(name: str, ctx: CriterionContext, params: SwarmParams, budget: int, seed: int,
            social: Literal["global", "local", "unified"], topology: Topology,
            callback: Callback | None) -> RunResult:
    start = time.perf_counter()
    fe0, t20 = ctx.fe_counter, ctx.eval_time
    if social != "global":
        topology.validate(params.ps)
    t_max = _iterations(budget, params.ps)
    rng = np.random.default_rng(seed)
    n, ps = ctx.dataset.n, params.ps
    hoods = None if social == "global" else neighborhood_table(topology, ps)

    positions = np.array([l2d.random_position(n, rng) for _ in range(ps)])
    velocities = rng.random((ps, 2, n))
    fitness = _evaluate(ctx, positions)
    pbest, pbestval, gbest, gbestval = _init_bests(positions, fitness)
    state = SwarmState(positions, velocities, fitness, fitness.copy(), pbest, pbestval,
                       gbest, gbestval, np.zeros(ps, dtype=int))
    ftrace, ctrace = [state.gbestval], [int(state.gbest.sum())]
    if callback:
        callback(state)

    for t in range(1, t_max + 1):
        state.t = t
        state.refreshed = [int(i) for i in np.flatnonzero(state.counts >= params.rg)]
        for i in state.refreshed:
            state.velocities[i] = l2d.refresh_velocity(state.velocities[i], rng)
            state.counts[i] = 0
        r = rng.random((ps, 2))
        units = rng.random(ps)
        delta = l2d.swarm_self_influence(state.fitness, state.prev_fitness)
        common = dict(omega=params.inertia(t, t_max), c1=params.c1, c2=params.c2,
                      delta=delta, r1=r[:, 0], r2=r[:, 1])
        if social == "global":
            v = l2d.swarm_update_velocity(state.velocities, state.positions, state.pbest,
                                          state.gbest, **common)
        else:
            nbest = state.pbest[_nbest_index(state.pbestval, hoods)]
            if social == "local":
                v = l2d.swarm_update_velocity(state.velocities, state.positions, state.pbest,
                                              nbest, **common)
            else:
                v = l2d.swarm_update_velocity(state.velocities, state.positions, state.pbest,
                                              state.gbest, local=nbest,
                                              u=params.unification(t, t_max), **common)
        state.velocities = v
        state.positions = l2d.swarm_positions(v, units)
        state.prev_fitness = state.fitness
        state.fitness = _evaluate(ctx, state.positions)
        _update_bests(state)
        ftrace.append(state.gbestval)
        ctrace.append(int(state.gbest.sum()))
        if callback:
            callback(state)
    return _result(name, seed, state, ftrace, ctrace, ctx, fe0, t20, start)


def run_2d_gpso(ctx: CriterionContext, params: SwarmParams = SwarmParams(), budget: int = 6000,
                seed: int = 0, topology: Topology | None = None,
                callback: Callback | None = None) -> RunResult:
    """Global-best PSO with 2-D learning; ``topology`` is ignored."""
    return _run_2d("2d-gpso", ctx, params, budget, seed, "global", Topology("global"), callback)


def run_2d_lpso(ctx: CriterionContext, params: SwarmParams = SwarmParams(), budget: int = 6000,
                seed: int = 0, topology: Topology | None = None,
                callback: Callback | None = None) -> RunResult:
    """Local-best PSO with 2-D learning; social exemplar is the ring neighbourhood best."""
    return _run_2d("2d-lpso", ctx, params, budget, seed, "local", topology or Topology(), callback)


def run_2d_upso(ctx: CriterionContext, params: SwarmParams = SwarmParams(), budget: int = 6000,
                seed: int = 0, topology: Topology | None = None,
                callback: Callback | None = None) -> RunResult:
    """Unified PSO with 2-D learning and a linearly scheduled unification factor."""
    return _run_2d("2d-upso", ctx, params, budget, seed, "unified", topology or Topology(), callback)


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-np.asarray(v, dtype=float)))


def logistic_inertia(omega0: float, steps: int) -> list[float]:
    """``steps`` iterates of ``w <- 4 w (1 - w)`` starting after ``omega0``."""
    out, w = [], omega0
    for _ in range(steps):
        w = 4.0 * w * (1.0 - w)
        out.append(w)
    return out


def run_bpso(ctx: CriterionContext, params: BPSOParams = BPSOParams(), budget: int = 6000,
             seed: int = 0, topology: Topology | None = None,
             callback: Callback | None = None) -> RunResult:
    """Kennedy-Eberhart binary PSO: per-bit velocities squashed by a sigmoid."""
    start = time.perf_counter()
    fe0, t20 = ctx.fe_counter, ctx.eval_time
    t_max = _iterations(budget, params.ps)
    rng = np.random.default_rng(seed)
    n, ps, vmax = ctx.dataset.n, params.ps, params.v_max
    name = "chbpso" if params.chaotic else "bpso"

    positions = np.array([l2d.random_position(n, rng) for _ in range(ps)])
    velocities = rng.uniform(-vmax, vmax, (ps, n))
    fitness = _evaluate(ctx, positions)
    pbest, pbestval, gbest, gbestval = _init_bests(positions, fitness)
    state = SwarmState(positions, velocities, fitness, fitness.copy(), pbest, pbestval,
                       gbest, gbestval, np.zeros(ps, dtype=int))
    ftrace, ctrace = [state.gbestval], [int(state.gbest.sum())]
    if callback:
        callback(state)

    omega = params.omega
    for t in range(1, t_max + 1):
        state.t = t
        if params.chaotic:
            omega = 4.0 * omega * (1.0 - omega)
        x = state.positions.astype(float)
        r1, r2 = rng.random((ps, n)), rng.random((ps, n))
        v = (omega * state.velocities
             + params.c1 * r1 * (state.pbest - x)
             + params.c2 * r2 * (state.gbest - x))
        state.velocities = np.clip(v, -vmax, vmax)
        bits = sigmoid(state.velocities) > rng.random((ps, n))
        for i in np.flatnonzero(~bits.any(axis=1)):
            bits[i, rng.integers(n)] = True
        state.positions = bits
        state.prev_fitness = state.fitness
        state.fitness = _evaluate(ctx, state.positions)
        _update_bests(state)
        ftrace.append(state.gbestval)
        ctrace.append(int(state.gbest.sum()))
        if callback:
            callback(state)
    return _result(name, seed, state, ftrace, ctrace, ctx, fe0, t20, start)


def run_chbpso(ctx: CriterionContext, params: BPSOParams = CHBPSO_DEFAULTS, budget: int = 6000,
               seed: int = 0, topology: Topology | None = None,
               callback: Callback | None = None) -> RunResult:
    """Binary PSO whose inertia follows the logistic map from ``params.omega``."""
    if not params.chaotic:
        params = BPSOParams(params.ps, params.omega, params.c1, params.c2, params.v_max, True)
    return run_bpso(ctx, params, budget, seed, topology, callback)


# Comparison algorithms whose procedures are not reproduced here; the
# settings are kept so experiment files can name them.
EXTERNAL_BASELINES = {
    "ga": {"N": 80, "pc": 0.45, "pm": 0.01},
    "aco": {"as": 50, "a": 5, "rho": 0.2, "tau_min": 0.3, "tau_max": 1.5},
    "cbpso": {"ps": 30, "omega": 1, "c1": 2, "c2": 2, "v_min": -6, "v_max": 6, "C": "ps/10", "RG": 3},
    "erfs": {"ps": 30, "omega": 0.729, "c1": 1.49, "c2": 1.49, "theta": 0.6, "x_min": 0, "x_max": 1},
    "pso-42": {"ps": 30, "omega": 0.729, "c1": 1.49, "c2": 1.49, "theta": 0.6, "x_min": 0, "x_max": 1},
}


def _external(name: str):
    def run(*args, **kwargs):
        raise NotImplementedError(f"{name}: not implemented (external reference)")
    run.__name__ = f"run_{name.replace('-', '_')}"
    return run


ALGORITHMS: dict[str, Callable[..., RunResult]] = {
    "2d-upso": run_2d_upso,
    "2d-gpso": run_2d_gpso,
    "2d-lpso": run_2d_lpso,
    "bpso": run_bpso,
    "chbpso": run_chbpso,
    **{name: _external(name) for name in EXTERNAL_BASELINES},
}


def default_params(algorithm: str):
    if algorithm.startswith("2d-"):
        return SwarmParams()
    if algorithm == "bpso":
        return BPSOParams()
    if algorithm == "chbpso":
        return CHBPSO_DEFAULTS
    raise AlgorithmError(f"no implemented parameters for {algorithm!r}")
