"""Benchmark problems addressable by string id ("lzg/ackley", "yll/f05", "dtlz/3")."""

from __future__ import annotations

from functools import partial

import numpy as np

from ..exceptions import DomainError
from . import dtlz, single
from .base import EvaluationBudget, Problem, evaluate
from .dominance import (
    crowding_distance,
    dominance_matrix,
    front_ranks,
    nondominated_mask,
    nondominated_sort,
    pareto_dominates,
)

__all__ = [
    "EvaluationBudget",
    "Problem",
    "crowding_distance",
    "dominance_matrix",
    "evaluate",
    "front_ranks",
    "get_problem",
    "list_problems",
    "nondominated_mask",
    "nondominated_sort",
    "pareto_dominates",
]

SUITES = {
    "lzg": sorted(single.LZG),
    "yll": sorted(single.YLL),
    "dtlz": [str(i) for i in sorted(dtlz.FUNCTIONS)],
}


def list_problems():
    return [f"{suite}/{name}" for suite, names in SUITES.items() for name in names]


def expand_suite(names):
    """Expand "lzg" into its member ids; comma lists and plain ids pass through."""
    out = []
    for part in str(names).split(","):
        part = part.strip()
        if not part:
            continue
        if part in SUITES:
            out.extend(f"{part}/{name}" for name in SUITES[part])
        else:
            out.append(part)
    return out


def _single(table, suite, name, D):
    fn, (lo, hi), x_opt = table[name]
    optimum_x = None if x_opt is None else np.full(D, x_opt)
    known = None if optimum_x is None else np.array([0.0])
    return Problem(
        name=f"{suite}/{name}",
        D=D,
        M=1,
        lower=np.full(D, lo),
        upper=np.full(D, hi),
        fn=fn,
        known_optimum=known,
        optimum_x=optimum_x,
    )


def get_problem(problem_id: str, D: int, M: int | None = None) -> Problem:
    """Instantiate a registered problem with ``D`` variables (and ``M`` objectives for DTLZ)."""
    try:
        suite, name = problem_id.lower().split("/", 1)
    except ValueError:
        raise DomainError(f"problem id must look like 'suite/name', got {problem_id!r}") from None
    D = int(D)
    if suite in ("lzg", "yll") and M not in (None, 1):
        raise DomainError(f"{problem_id} is single-objective; got M={M}")
    if suite == "lzg" and name in single.LZG:
        return _single(single.LZG, suite, name, D)
    if suite == "yll" and name in single.YLL:
        return _single(single.YLL, suite, name, D)
    if suite == "dtlz" and name.startswith("dtlz"):
        name = name[4:]
    if suite == "dtlz" and name.isdigit() and int(name) in dtlz.FUNCTIONS:
        index = int(name)
        M = 3 if M is None else int(M)
        dtlz.check_dims(D, M)
        optimum_x = np.full(D, 0.5)
        optimum_x[M - 1 :] = dtlz.OPTIMAL_DISTANCE[index]
        return Problem(
            name=f"dtlz/{index}",
            D=D,
            M=M,
            lower=np.zeros(D),
            upper=np.ones(D),
            fn=partial(dtlz.FUNCTIONS[index], M=M),
            optimum_x=optimum_x,
            reference_front=partial(dtlz.reference_front, index, M),
        )
    raise DomainError(f"unknown problem id {problem_id!r}; known: {', '.join(list_problems())}")
