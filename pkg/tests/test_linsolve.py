import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg
from sklearn.base import clone

from afbm.exceptions import DimensionMismatchError, DomainError
from afbm.linsolve import (
    ChenSeriesSolver,
    LinearFields,
    SolveConfig,
    chen_series_solve,
    development_apply,
    development_terms,
    euler_solve,
    level_terms,
    ode_oracle,
    random_fields,
    series_tail_bound,
    word_matrix,
)
from afbm.signature import path_signature, segment_signature


def two_fields():
    return LinearFields(np.array([[[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]))


def test_word_matrix_orders():
    f = two_fields()
    a1, a2 = f.matrices
    assert np.array_equal(word_matrix(f, (1, 2)), a2 @ a1)
    assert np.array_equal(word_matrix(f, (1, 2), order="reversed"), a1 @ a2)
    assert np.array_equal(word_matrix(f, ()), np.eye(2))
    with pytest.raises(DomainError):
        word_matrix(f, (3,))


def test_fields_json_round_trip():
    f = random_fields(3, 2, 0.5, seed=1)
    g = LinearFields.from_json_obj(json.loads(json.dumps(f.to_json_obj())))
    assert np.array_equal(f.matrices, g.matrices)
    assert f.norm_bound == pytest.approx(0.5)


def test_single_segment_series_is_matrix_exponential():
    f = random_fields(2, 3, 1.0, seed=4)
    inc = np.array([0.7 - 0.2j, -0.4 + 0.5j])
    y0 = np.array([1.0, -1.0, 0.5])
    res = chen_series_solve(segment_signature(inc, 3), f, y0)
    expected = linalg.expm(np.einsum("i,irs->rs", inc, f.matrices)) @ y0
    assert res.converged and np.allclose(res.y, expected, rtol=1e-11, atol=1e-12)
    assert res.tail_bound < 1e-10


def test_scalar_exponential():
    f = LinearFields(np.ones((1, 1, 1)))
    res = chen_series_solve(segment_signature(np.array([0.7]), 2), f, np.array([1.0]))
    assert abs(res.y[0] - np.exp(0.7)) <= res.tail_bound + 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5), st.sampled_from(["forward", "reversed"]))
def test_level_terms_agree_with_development(seed, nseg, order):
    rng = np.random.default_rng(seed)
    inc = (rng.standard_normal((nseg, 2)) + 1j * rng.standard_normal((nseg, 2))) * 0.4
    path = np.concatenate([np.zeros((1, 2)), np.cumsum(inc, axis=0)])
    f = random_fields(2, 2, 1.0, seed=seed)
    y = rng.standard_normal(2)
    sig = path_signature(path, 4)
    lt = level_terms(sig, f, y, 4, order)
    dev = development_terms(inc, f, 4, order)
    app = development_apply(inc, f, y, 4, order)
    for n in range(1, 5):
        assert np.allclose(lt[n - 1], dev[n] @ y, atol=1e-12)
        assert np.allclose(lt[n - 1], app[n], atol=1e-12)


def test_convention_pinned_by_ode():
    f = LinearFields(np.array([[[0.0, -1.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, -0.5]]]))
    t = np.linspace(0, 1, 2**12 + 1)
    y0 = np.array([1.0, 0.5])
    oracle = ode_oracle(np.stack([t, t**2], -1), f, y0)
    sig = path_signature(np.stack([t, t**2], -1), 2)
    fwd = chen_series_solve(sig, f, y0, 1e-14, 64).y
    rev = chen_series_solve(sig, f, y0, 1e-14, 64, order="reversed").y
    assert np.linalg.norm(fwd - oracle) / np.linalg.norm(oracle) < 1e-6
    assert np.linalg.norm(rev - oracle) / np.linalg.norm(oracle) > 1e-2


def test_tail_bound_properties():
    n = np.arange(30)
    tails = series_tail_bound(2.0, 1.0, 1.0, n)
    assert np.all(np.diff(tails) < 0)
    assert series_tail_bound(0.0, 1.0, 1.0, 3) == 0.0
    # for a scalar driver the bound is the exact exponential remainder
    remainder = np.exp(2.0) - sum(2.0**k / math.factorial(k) for k in range(6))
    assert tails[5] == pytest.approx(remainder, rel=1e-10)


def test_not_converged_is_flagged():
    f = random_fields(1, 1, 1.0, seed=0)
    sig = segment_signature(np.array([40.0]), 2)
    with pytest.warns(RuntimeWarning):
        res = chen_series_solve(sig, f, np.array([1.0]), 1e-10, 5)
    assert not res.converged and res.terms_used == 5


def test_euler_solve_and_partition():
    f = random_fields(2, 2, 0.5, seed=3)
    t = np.linspace(0, 1, 9)
    x = np.stack([np.cos(t), np.sin(t)])[None]
    y = euler_solve(x, f, SolveConfig(6, (0, 4, 8)), np.array([1.0, 0.0]))
    oracle = ode_oracle(np.linspace(0, 1, 4097)[:, None] * 0 + np.stack(
        [np.interp(np.linspace(0, 1, 4097), t, x[0, 0]), np.interp(np.linspace(0, 1, 4097), t, x[0, 1])], -1),
        f, np.array([1.0, 0.0]))
    assert y.shape == (1, 3, 2)
    assert np.allclose(y[0, -1], oracle, rtol=1e-5)
    with pytest.raises(DomainError):
        SolveConfig(2, (0, 0))
    with pytest.raises(DimensionMismatchError):
        euler_solve(x, random_fields(3, 2, seed=0), SolveConfig(2, (0, 8)), np.ones(2))


def test_solver_estimator():
    f = random_fields(2, 2, 1.0, seed=5)
    solver = ChenSeriesSolver(fields=f.matrices, y0=[1.0, 0.0], depth=3)
    assert clone(solver).get_params()["depth"] == 3
    inc = np.array([[0.1, 0.2], [0.3, -0.1]])
    out = solver.fit().predict(inc)
    expected = [linalg.expm(np.einsum("i,irs->rs", d, f.matrices)) @ [1.0, 0.0] for d in inc]
    assert np.allclose(out, expected, atol=1e-11)
