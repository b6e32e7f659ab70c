"""Initialization and variation operators on box-bounded real vectors."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .exceptions import ConfigError


@dataclass
class OperatorParams:
    crossover_prob: float = 0.9
    eta_c: float = 20.0
    # None means 1 / D
    mutation_prob: Optional[float] = None
    eta_m: float = 20.0

    def validate(self):
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ConfigError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ConfigError("mutation_prob must lie in [0, 1]")
        if self.eta_c < 0 or self.eta_m < 0:
            raise ConfigError("distribution indices must be non-negative")
        return self

    def to_dict(self):
        return asdict(self)


def latin_hypercube(n, lower, upper, rng) -> np.ndarray:
    """``n`` points, one per equal-width stratum in every dimension."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    sample = qmc.LatinHypercube(d=len(lower), seed=rng).random(n)
    return qmc.scale(sample, lower, upper)


def binary_tournament(key, n, rng) -> np.ndarray:
    """Pick ``n`` winners; lower ``key`` wins, ties go to the first contestant."""
    key = np.asarray(key, dtype=float)
    a = rng.integers(len(key), size=n)
    b = rng.integers(len(key), size=n)
    return np.where(key[b] < key[a], b, a)


def sbx(p1, p2, lower, upper, eta, prob, rng):
    """Simulated binary crossover on one parent pair; children are clipped to the box."""
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() >= prob:
        return c1, c2
    D = len(p1)
    u = rng.random(D)
    beta = np.where(u <= 0.5, (2.0 * u) ** (1.0 / (eta + 1.0)), (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)))
    # each variable takes part with probability 1/2
    active = rng.random(D) <= 0.5
    beta = np.where(active, beta, 1.0)
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    swap = rng.random(D) < 0.5
    c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
    return np.clip(c1, lower, upper), np.clip(c2, lower, upper)


def polynomial_mutation(x, lower, upper, eta, prob, rng):
    D = len(x)
    u = rng.random(D)
    mask = rng.random(D) < prob
    if not mask.any():
        return x.copy()
    delta = np.where(u < 0.5, (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0, 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0)))
    y = x + np.where(mask, delta * (upper - lower), 0.0)
    return np.clip(y, lower, upper)


def gen_offspring(pop_X, key, n, lower, upper, params: OperatorParams, rng) -> np.ndarray:
    """``n`` children from tournament-selected parents via SBX and polynomial mutation."""
    pop_X = np.atleast_2d(np.asarray(pop_X, dtype=float))
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    D = pop_X.shape[1]
    pm = 1.0 / D if params.mutation_prob is None else params.mutation_prob
    n_pairs = (n + 1) // 2
    parents = binary_tournament(key, 2 * n_pairs, rng)
    children = []
    for a, b in parents.reshape(n_pairs, 2):
        c1, c2 = sbx(pop_X[a], pop_X[b], lower, upper, params.eta_c, params.crossover_prob, rng)
        children.append(polynomial_mutation(c1, lower, upper, params.eta_m, pm, rng))
        children.append(polynomial_mutation(c2, lower, upper, params.eta_m, pm, rng))
    return np.array(children[:n])
