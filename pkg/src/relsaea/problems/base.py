from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..exceptions import BudgetExceeded, DomainError


@dataclass(frozen=True)
class Problem:
    """A box-bounded minimization problem.

    ``fn`` maps a length-``D`` vector to ``M`` objective values. Calling the
    problem directly is a pure, unbudgeted evaluation; optimizers should go
    through :func:`evaluate` so every true evaluation is counted.
    """

    name: str
    D: int
    M: int
    lower: np.ndarray
    upper: np.ndarray
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    known_optimum: Optional[np.ndarray] = None
    optimum_x: Optional[np.ndarray] = field(default=None, repr=False)
    reference_front: Optional[Callable[[int, int], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.D < 1:
            raise DomainError(f"{self.name}: D must be positive, got {self.D}")
        if self.M < 1:
            raise DomainError(f"{self.name}: M must be positive, got {self.M}")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.D,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.D,)).copy()
        if np.any(lower >= upper):
            raise DomainError(f"{self.name}: every lower bound must be below its upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def multi_objective(self) -> bool:
        return self.M > 1

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.D,) and bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.D,):
            raise DomainError(f"{self.name}: expected shape ({self.D},), got {x.shape}")
        return np.atleast_1d(np.asarray(self.fn(x), dtype=float))

    def evaluate_many(self, X) -> np.ndarray:
        """Unbudgeted evaluation of each row of ``X``; returns shape (n, M)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if len(X) == 0:
            return np.empty((0, self.M))
        return np.vstack([self(x) for x in X])


@dataclass
class EvaluationBudget:
    max_fes: int
    used_fes: int = 0

    def __post_init__(self):
        if self.max_fes < 1:
            raise DomainError("max_fes must be positive")
        if not 0 <= self.used_fes <= self.max_fes:
            raise DomainError("used_fes must lie in [0, max_fes]")

    @property
    def remaining(self) -> int:
        return self.max_fes - self.used_fes

    @property
    def exhausted(self) -> bool:
        return self.used_fes >= self.max_fes

    def consume(self) -> int:
        """Count one evaluation; returns its 0-based evaluation id."""
        if self.exhausted:
            raise BudgetExceeded(f"evaluation budget of {self.max_fes} exhausted")
        self.used_fes += 1
        return self.used_fes - 1


def evaluate(problem: Problem, x, budget: EvaluationBudget) -> np.ndarray:
    """Truly evaluate ``x`` and charge one evaluation to ``budget``."""
    x = np.asarray(x, dtype=float)
    if not problem.contains(x):
        raise DomainError(f"{problem.name}: point outside the search box")
    budget.consume()
    f = problem(x)
    if not np.all(np.isfinite(f)):
        raise DomainError(f"{problem.name}: non-finite objective value at {x!r}")
    return f
