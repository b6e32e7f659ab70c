import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relsaea.exceptions import BudgetExceeded, DomainError
from relsaea.problems import expand_suite, get_problem, list_problems
from relsaea.problems.base import EvaluationBudget, evaluate
from relsaea.problems.dominance import (
    crowding_distance,
    dominance_matrix,
    nondominated_mask,
    nondominated_sort,
    pareto_dominates,
)
from relsaea.problems.dtlz import reference_front


# ---- frozen oracle values ------------------------------------------------

def test_ackley_origin():
    p = get_problem("lzg/ackley", 5)
    assert abs(p(np.zeros(5))[0]) < 1e-12


def test_rosenbrock_ones():
    p = get_problem("lzg/rosenbrock", 5)
    assert p(np.ones(5))[0] == 0.0


def test_ellipsoid_weighting():
    # 1-indexed weights: 1*1 + 2*1
    p = get_problem("lzg/ellipsoid", 2)
    assert p(np.ones(2))[0] == 3.0


def test_griewank_origin():
    assert get_problem("lzg/griewank", 5)(np.zeros(5))[0] == 0.0


@pytest.mark.parametrize("pid", [p for p in list_problems() if p.startswith(("lzg", "yll"))])
def test_single_objective_optimum(pid):
    p = get_problem(pid, 5)
    if p.optimum_x is None:
        pytest.skip("no pinned optimum")
    assert abs(p(p.optimum_x)[0] - p.known_optimum[0]) < 1e-9


@pytest.mark.parametrize("index", [1, 2, 3, 4, 5, 6])
def test_dtlz_optimum_on_front(index):
    p = get_problem(f"dtlz/{index}", 10, 3)
    f = p(p.optimum_x)
    if index == 1:
        assert abs(f.sum() - 0.5) < 1e-9
    else:
        assert abs(np.sum(f ** 2) - 1.0) < 1e-9


def test_dtlz2_known_point():
    # x_pos = 0 puts the solution at f = (1, 0, 0) with g = 0
    p = get_problem("dtlz/2", 5, 3)
    x = np.array([0.0, 0.0, 0.5, 0.5, 0.5])
    np.testing.assert_allclose(p(x), [1.0, 0.0, 0.0], atol=1e-15)


def test_dtlz_rejects_d_below_m():
    with pytest.raises(DomainError):
        get_problem("dtlz/2", 2, 3)


def test_single_objective_rejects_m():
    with pytest.raises(DomainError):
        get_problem("lzg/ackley", 5, 2)


def test_unknown_problem():
    with pytest.raises(DomainError):
        get_problem("lzg/nope", 5)


def test_dtlz_alias():
    assert get_problem("dtlz/dtlz2", 10).name == get_problem("dtlz/2", 10).name


def test_suite_expansion():
    assert sorted(expand_suite("lzg")) == ["lzg/ackley", "lzg/ellipsoid", "lzg/griewank", "lzg/rosenbrock"]
    assert len(expand_suite("yll")) == 11
    assert expand_suite("lzg/ackley,dtlz/2") == ["lzg/ackley", "dtlz/2"]


@pytest.mark.parametrize("index", [1, 2, 3, 4, 5, 6, 7])
def test_reference_front_shape(index):
    ref = reference_front(index, 3, 200)
    assert ref.shape[1] == 3
    assert np.isfinite(ref).all()
    assert nondominated_mask(ref).all()


def test_dtlz2_reference_on_sphere():
    ref = reference_front(2, 3, 500)
    assert ref.shape == (500, 3)
    np.testing.assert_allclose(np.linalg.norm(ref, axis=1), 1.0, atol=1e-12)
    assert (ref >= 0).all()


# ---- budget --------------------------------------------------------------

def test_budget_accounting():
    p = get_problem("lzg/ellipsoid", 3)
    b = EvaluationBudget(2)
    evaluate(p, np.zeros(3), b)
    evaluate(p, np.zeros(3), b)
    assert b.used_fes == 2 and b.exhausted
    with pytest.raises(BudgetExceeded):
        evaluate(p, np.zeros(3), b)
    assert b.used_fes == 2


def test_out_of_bounds():
    p = get_problem("lzg/ellipsoid", 3)
    b = EvaluationBudget(5)
    with pytest.raises(DomainError):
        evaluate(p, np.full(3, 6.0), b)
    assert b.used_fes == 0


@given(st.lists(st.floats(-5.12, 5.12), min_size=4, max_size=4))
def test_evaluation_deterministic(xs):
    p = get_problem("lzg/ackley", 4)
    x = np.array(xs)
    assert p(x).tobytes() == p(x.copy()).tobytes()


@pytest.mark.parametrize("pid", list_problems())
def test_finite_inside_bounds(pid, rng):
    p = get_problem(pid, 10)
    X = rng.uniform(p.lower, p.upper, size=(20, 10))
    F = p.evaluate_many(X)
    assert F.shape == (20, p.M)
    assert np.isfinite(F).all()


# ---- dominance -----------------------------------------------------------

def test_dominates_examples():
    assert pareto_dominates([1, 2], [2, 3])
    assert not pareto_dominates([1, 2], [1, 2])
    assert not pareto_dominates([1, 3], [2, 2])
    with pytest.raises(DomainError):
        pareto_dominates([1, 2], [1, 2, 3])


def test_sort_examples():
    assert nondominated_sort([[1, 2], [2, 1], [3, 3]]) == [[0, 1], [2]]
    assert nondominated_sort([[1, 1]]) == [[0]]
    assert nondominated_sort(np.empty((0, 2))) == []


def _brute_fronts(F):
    remaining = set(range(len(F)))
    fronts = []
    while remaining:
        front = sorted(i for i in remaining
                       if not any(pareto_dominates(F[j], F[i]) for j in remaining if j != i))
        fronts.append(front)
        remaining -= set(front)
    return fronts


points = st.lists(
    st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=12
)


@given(points)
def test_sort_matches_brute_force(pts):
    F = np.array(pts, dtype=float)
    assert [sorted(f) for f in nondominated_sort(F)] == _brute_fronts(F)


def test_sort_eight_random_points(rng):
    F = rng.random((8, 2))
    assert [sorted(f) for f in nondominated_sort(F)] == _brute_fronts(F)


@given(points)
def test_dominance_matrix_matches_pairwise(pts):
    F = np.array(pts, dtype=float)
    D = dominance_matrix(F)
    for i, j in itertools.product(range(len(F)), repeat=2):
        assert D[i, j] == pareto_dominates(F[i], F[j])


def test_crowding_boundary_infinite():
    F = np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0], [0.2, 0.8]])
    cd = crowding_distance(F)
    assert np.isinf(cd[0]) and np.isinf(cd[2])
    assert np.isfinite(cd[1]) and np.isfinite(cd[3])
