"""Two-dimensional velocity algebra for binary feature-subset particles.

A velocity is a ``(2, n)`` float array. Row 0 holds cardinality
likelihoods (entry ``j`` is the likelihood of choosing ``j + 1`` features),
row 1 holds per-feature likelihoods. Positions are length-``n`` boolean masks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CARD, FEAT = 0, 1


class LearningError(ValueError):
    pass


@dataclass(frozen=True)
class SwarmParams:
    """Search parameters for the 2-D learning optimizers.

    ``omega_final`` switches the inertia weight to a linear decay from
    ``omega`` to ``omega_final`` over the run; ``None`` keeps it constant.
    """

    ps: int = 30
    omega: float = 0.729
    c1: float = 1.49
    c2: float = 1.49
    rg: int = 3
    u_start: float = 0.2
    u_end: float = 0.4
    omega_final: float | None = None

    def __post_init__(self):
        if self.ps < 2:
            raise LearningError(f"swarm size must be >= 2, got {self.ps}")
        if self.c1 < 0 or self.c2 < 0:
            raise LearningError("acceleration constants must be non-negative")
        if self.rg < 1:
            raise LearningError(f"refresh gap must be >= 1, got {self.rg}")
        if not (0.0 <= self.u_start <= 1.0 and 0.0 <= self.u_end <= 1.0):
            raise LearningError("unification factor must lie in [0, 1]")
        if self.omega < 0 or (self.omega_final is not None and self.omega_final < 0):
            raise LearningError("inertia weight must be non-negative")

    def inertia(self, t: int, t_max: int) -> float:
        if self.omega_final is None or t_max <= 0:
            return self.omega
        return self.omega - (self.omega - self.omega_final) * t / t_max

    def unification(self, t: int, t_max: int) -> float:
        if t_max <= 0:
            return self.u_start
        return self.u_start + (self.u_end - self.u_start) * t / t_max


def _bits(s) -> np.ndarray:
    s = np.asarray(s)
    if s.ndim != 1 or s.size == 0:
        raise LearningError("expected a non-empty 1-D binary string")
    return s.astype(bool)


def cardinality(s) -> int:
    """Number of set bits (zero-norm)."""
    return int(np.count_nonzero(_bits(s)))


def cardinality_learning_set(s) -> np.ndarray:
    """One-hot string with the bit at position ``cardinality(s)`` set (1-indexed)."""
    s = _bits(s)
    xi = int(np.count_nonzero(s))
    if xi == 0:
        raise LearningError("cardinality learning set is undefined for the null string")
    phi = np.zeros(s.size, dtype=np.uint8)
    phi[xi - 1] = 1
    return phi


def feature_learning_set(exemplar, position) -> np.ndarray:
    """Features present in ``exemplar`` but absent from ``position``."""
    exemplar, position = _bits(exemplar), _bits(position)
    if exemplar.size != position.size:
        raise LearningError("exemplar and position lengths differ")
    return (exemplar & ~position).astype(np.uint8)


def compose_learning_set(phi, psi) -> np.ndarray:
    phi, psi = np.asarray(phi), np.asarray(psi)
    if phi.shape != psi.shape or phi.ndim != 1:
        raise LearningError("cardinality and feature learning sets must be equal-length vectors")
    return np.vstack([phi, psi]).astype(np.uint8)


def learning_set(exemplar, position) -> np.ndarray:
    """Learning set of an exemplar (pbest, gbest, nbest) relative to ``position``."""
    return compose_learning_set(cardinality_learning_set(exemplar),
                                feature_learning_set(exemplar, position))


def self_learning_set(position) -> np.ndarray:
    position = _bits(position)
    return compose_learning_set(cardinality_learning_set(position), position.astype(np.uint8))


def self_influence(f_now: float, f_prev: float, swarm_fitness) -> float:
    """Signed self-learning weight for a minimization problem.

    The magnitude is the particle's relative standing ``1 - f_now / max(F)``;
    the sign is positive only if fitness improved since the previous step.
    """
    worst = float(np.max(swarm_fitness))
    delta = 0.0 if worst <= 0 else 1.0 - f_now / worst
    if f_prev == 0:
        improved = False  # 0/0 and x/0 both count as "no improvement"
    else:
        improved = f_now / f_prev < 1
    return delta if improved else -delta


def _blend(v, terms) -> np.ndarray:
    out = np.array(v, dtype=float)
    for coef, L in terms:
        out += coef * L
    return out


def update_velocity_gpso(v, x, pbest, gbest, *, omega: float, c1: float, c2: float,
                         delta: float, rng: np.random.Generator) -> np.ndarray:
    """``omega*v + c1*r1*L_cog + c2*r2*L_soc + delta*L_self``, floored at 0.

    Exactly two scalar uniforms are drawn, ``r1`` then ``r2``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (2, np.asarray(x).size):
        raise LearningError(f"velocity shape {v.shape} does not match position length")
    r1, r2 = rng.random(), rng.random()
    out = _blend(omega * v, [(c1 * r1, learning_set(pbest, x)),
                             (c2 * r2, learning_set(gbest, x)),
                             (delta, self_learning_set(x))])
    return np.maximum(out, 0.0)


def update_velocity_upso(v, x, pbest, gbest, nbest, *, omega: float, c1: float, c2: float,
                         u: float, delta: float, rng: np.random.Generator) -> np.ndarray:
    """Unified global/local update ``u*v_g + (1-u)*v_l``, floored at 0.

    ``v_g`` learns socially from ``gbest`` and ``v_l`` from ``nbest``; both
    share the same ``r1`` and ``r2`` draws.
    """
    if not 0.0 <= u <= 1.0:
        raise LearningError(f"unification factor must lie in [0, 1], got {u}")
    v = np.asarray(v, dtype=float)
    if v.shape != (2, np.asarray(x).size):
        raise LearningError(f"velocity shape {v.shape} does not match position length")
    r1, r2 = rng.random(), rng.random()
    L_cog, L_self = learning_set(pbest, x), self_learning_set(x)
    # same term order as the global update so u=1 reproduces it bit for bit
    v_g = _blend(omega * v, [(c1 * r1, L_cog), (c2 * r2, learning_set(gbest, x)), (delta, L_self)])
    v_l = _blend(omega * v, [(c1 * r1, L_cog), (c2 * r2, learning_set(nbest, x)), (delta, L_self)])
    return np.maximum(u * v_g + (1.0 - u) * v_l, 0.0)


def wheel_index(rho, r: float) -> int:
    """Smallest 1-based ``j`` with ``r <= cumsum(rho)[j-1]``."""
    cum = np.cumsum(rho)
    j = int(np.searchsorted(cum, r, side="left"))
    return min(j, cum.size - 1) + 1


def select_cardinality(rho, rng: np.random.Generator) -> int:
    """Roulette-wheel draw of a subset size in ``[1, n]`` with odds ``rho_j / sum(rho)``."""
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 1 or rho.size == 0:
        raise LearningError("cardinality likelihoods must be a non-empty vector")
    if np.any(rho < 0):
        raise LearningError("cardinality likelihoods must be non-negative")
    total = float(np.cumsum(rho)[-1])
    if not total > 0:
        raise LearningError("all cardinality likelihoods are zero")
    # 1 - U[0,1) lies in (0, 1], so r > 0 and zero-mass slots are never hit
    r = total * (1.0 - rng.random())
    return wheel_index(rho, r)


def rank_features(sigma) -> np.ndarray:
    """1-based descending ranks of ``sigma``; ties keep ascending feature order."""
    sigma = np.asarray(sigma, dtype=float)
    order = np.argsort(-sigma, kind="stable")
    tau = np.empty(sigma.size, dtype=np.intp)
    tau[order] = np.arange(1, sigma.size + 1)
    return tau


def position_from(v, xi: int) -> np.ndarray:
    """Select the ``xi`` top-ranked features of the feature row."""
    return rank_features(np.asarray(v)[FEAT]) <= xi


def update_position(v, rng: np.random.Generator) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return position_from(v, select_cardinality(v[CARD], rng))


def refresh_velocity(v, rng: np.random.Generator) -> np.ndarray:
    """Redraw every entry uniformly in [0, 1), row-major."""
    return rng.random(np.shape(v))


def random_position(n: int, rng: np.random.Generator) -> np.ndarray:
    """Fair-coin bits; an all-zero draw gets one uniformly chosen bit set."""
    x = rng.random(n) < 0.5
    if not x.any():
        x[rng.integers(n)] = True
    return x


# Swarm-level forms. Each row of a (ps, n) position array is one particle;
# velocities are (ps, 2, n). Random draws are passed in explicitly so the
# caller fixes the draw order.

def swarm_learning_sets(exemplars: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Row-wise :func:`learning_set`; ``exemplars`` may be one string or one per particle."""
    exemplars = np.broadcast_to(exemplars, positions.shape)
    ps, n = positions.shape
    card = exemplars.sum(axis=1)
    if np.any(card == 0):
        raise LearningError("cardinality learning set is undefined for the null string")
    L = np.zeros((ps, 2, n), dtype=np.uint8)
    L[np.arange(ps), CARD, card - 1] = 1
    L[:, FEAT, :] = exemplars & ~positions
    return L


def swarm_self_sets(positions: np.ndarray) -> np.ndarray:
    ps, n = positions.shape
    card = positions.sum(axis=1)
    L = np.zeros((ps, 2, n), dtype=np.uint8)
    L[np.arange(ps), CARD, card - 1] = 1
    L[:, FEAT, :] = positions
    return L


def swarm_self_influence(fitness: np.ndarray, prev_fitness: np.ndarray) -> np.ndarray:
    """Vectorized :func:`self_influence` over the whole swarm."""
    worst = float(np.max(fitness))
    delta = np.zeros_like(fitness) if worst <= 0 else 1.0 - fitness / worst
    safe = np.where(prev_fitness == 0, 1.0, prev_fitness)
    improved = (prev_fitness != 0) & (fitness / safe < 1)
    return np.where(improved, delta, -delta)


def swarm_update_velocity(V, X, pbest, social, *, omega: float, c1: float, c2: float,
                          delta, r1, r2, local=None, u: float = 1.0) -> np.ndarray:
    """Row-wise velocity update for the whole swarm.

    With ``local`` given, the result is the unified blend of the ``social``
    (global) and ``local`` updates; otherwise it is the plain update.
    """
    a = (c1 * np.asarray(r1))[:, None, None]
    b = (c2 * np.asarray(r2))[:, None, None]
    d = np.asarray(delta, dtype=float)[:, None, None]
    L_cog = swarm_learning_sets(pbest, X)
    L_self = swarm_self_sets(X)

    def update(exemplars):
        out = omega * V
        out += a * L_cog
        out += b * swarm_learning_sets(exemplars, X)
        out += d * L_self
        return out

    v_g = update(social)
    if local is None:
        return np.maximum(v_g, 0.0)
    return np.maximum(u * v_g + (1.0 - u) * update(local), 0.0)


def swarm_positions(V: np.ndarray, units) -> np.ndarray:
    """Row-wise :func:`update_position`; ``units`` are U[0, 1) draws, one per particle."""
    cum = np.cumsum(V[:, CARD, :], axis=1)
    total = cum[:, -1]
    if np.any(~(total > 0)):
        raise LearningError("all cardinality likelihoods are zero")
    r = total * (1.0 - np.asarray(units))
    xi = np.minimum((cum < r[:, None]).sum(axis=1), V.shape[2] - 1) + 1
    order = np.argsort(-V[:, FEAT, :], axis=1, kind="stable")
    tau = np.empty_like(order)
    np.put_along_axis(tau, order, np.arange(1, V.shape[2] + 1)[None, :].repeat(V.shape[0], 0), axis=1)
    return tau <= xi[:, None]
