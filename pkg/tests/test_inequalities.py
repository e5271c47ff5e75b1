from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqslln import inequalities as iq
from pqslln import tailmodel as tm

# magnitudes kept clear of underflow in the l^s oracle below
finite = st.one_of(st.just(0.0), st.floats(1e-100, 1e6), st.floats(-1e6, -1e-100))
vectors = st.lists(finite, min_size=1, max_size=40)
orders = st.sampled_from([F(1), F(5, 4), F(3, 2), F(2), F(3)])


def test_weak_norm_examples():
    assert iq.weak_norm([3, -1, 2], 1) == 4.0
    assert iq.weak_norm([3, -1, 2], 2) == 3.0
    assert iq.weak_norm([], 2) == 0.0
    assert iq.weak_norm([1.0] * 16, 2) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        iq.weak_norm([1.0], F(1, 2))


def test_weak_norms_row_wise():
    rows = np.array([[3.0, -1.0, 2.0], [0.0, 0.0, 5.0]])
    assert iq.weak_norms(rows, 1).tolist() == [4.0, 5.0]


@settings(max_examples=200, deadline=None)
@given(vectors, orders, st.randoms(use_true_random=False))
def test_weak_norm_permutation_and_sign_invariant(a, s, rnd):
    b = [x * rnd.choice([-1, 1]) for x in a]
    rnd.shuffle(b)
    assert iq.weak_norm(b, s) == iq.weak_norm(a, s)


@settings(max_examples=200, deadline=None)
@given(vectors, orders, st.floats(0, 1e3, allow_nan=False))
def test_weak_norm_homogeneous(a, s, c):
    assert iq.weak_norm([c * x for x in a], s) == pytest.approx(c * iq.weak_norm(a, s), rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_weak_norm_decreasing_in_order(a):
    vals = [iq.weak_norm(a, s) for s in (1, F(3, 2), 2, 4)]
    assert all(x >= y for x, y in zip(vals, vals[1:]))
    # sandwich between the sup norm and the l^s norm
    for s in (1, 2):
        w = iq.weak_norm(a, s)
        assert max(abs(x) for x in a) <= w * (1 + 1e-12)
        assert w <= sum(abs(x) ** s for x in a) ** (1 / s) * (1 + 1e-12)


def test_weighted_tail_sup_closed_forms():
    assert iq.weighted_tail_sup(tm.pareto(2, centered=True), F(3, 2)) == 1.0
    assert iq.weighted_tail_sup(tm.pareto(F(3, 2), centered=True), F(3, 2)) == 1.0
    assert iq.weighted_tail_sup(tm.rademacher(), 2) == 1.0
    assert iq.weighted_tail_sup(tm.zero(), 2) == 0.0
    # P(|X| > t) = 1 up to 3, then decays: the sup sits at the left limit t = 3
    assert iq.weighted_tail_sup(tm.ex4_2(), F(3, 2)) == pytest.approx(3**1.5, rel=1e-9)
    assert iq.weighted_tail_sup(tm.pareto(F(5, 4), centered=True), F(3, 2)) == math.inf
    assert iq.weighted_tail_sup(tm.ex4_1(), 2) == math.inf


@pytest.mark.parametrize("spec", [tm.ex4_1(), tm.ex4_3()])
def test_weighted_tail_sup_matches_dense_grid(spec):
    s = spec.tail_asym.t_exp
    xs = np.linspace(math.log(1e-3), math.log(1e12), 50_001)
    grid = max(math.exp(float(s) * x) * spec.tail(math.exp(x)) for x in xs)
    sup = iq.weighted_tail_sup(spec, s)
    assert sup >= grid * (1 - 1e-12)
    assert sup == pytest.approx(grid, rel=1e-3)


@pytest.mark.parametrize(
    "spec,s",
    [(tm.ex4_1(), F(8, 5)), (tm.ex4_2(), F(3, 2)), (tm.ex4_3(), F(1)), (tm.pareto(F(3, 2), centered=True), F(3, 2))],
)
def test_marcus_pisier_bound_holds(spec, s):
    res = iq.marcus_pisier_check(spec, 64, s, trials=4000, seed=1)
    assert res.error is None
    assert res.violations == 0
    assert len(res.rows) == iq.GRID_POINTS
    assert all(r["rhs"] >= 0 and 0 <= r["lhs"] <= 1 for r in res.rows)


def test_marcus_pisier_large_u_limit():
    spec = tm.pareto(F(3, 2), centered=True)
    res = iq.marcus_pisier_check(spec, 32, F(3, 2), u_grid=[1e3, 1e6, 1e9], trials=2000)
    # frequency and bound both vanish; frequency never exceeds the bound
    assert [r["lhs"] <= r["rhs"] for r in res.rows] == [True] * 3
    assert res.rows[-1]["rhs"] == pytest.approx(2 * math.e * 32 / 1e9**1.5)


def test_marcus_pisier_infinite_sup_reports_error():
    res = iq.marcus_pisier_check(tm.pareto(F(5, 4), centered=True), 16, F(3, 2), trials=100)
    assert res.error is not None and res.rows == []


def test_hj_constants():
    assert iq.hj_constants(F(1, 2)) == (2**0.5, 1.0)
    assert iq.hj_constants(1) == (1.0, 1.0)
    assert iq.hj_constants(3) == (1.0, 4.0)


def test_hj_weights_are_tail_sums():
    a, b = iq._weights(50)
    assert b[0] == pytest.approx(math.fsum(1 / n**2 for n in range(1, 51)))
    assert b[-1] == a[-1]
    assert np.all(np.diff(b) < 0)


@pytest.mark.parametrize("spec", [tm.rademacher(), tm.ex4_1()])
@pytest.mark.parametrize("q", [1, 2])
def test_hj_series_bound_holds(spec, q):
    res = iq.hj_series_check(spec, q, N=512, trials=2000, seed=3)
    assert res.violations == 0
    assert res.rows[-1]["bound"] == "expectation"


def test_hj_zero_law():
    res = iq.hj_series_check(tm.zero(), 1, N=64, trials=50)
    assert res.violations == 0
    assert res.rows[-1]["lhs"] == 0 and res.rows[-1]["rhs"] == 0


def test_hj_rejects_asymmetric_law():
    with pytest.raises(ValueError, match="not symmetric"):
        iq.hj_series_check(tm.pareto(2), 1, N=16, trials=10)
    with pytest.raises(ValueError):
        iq.hj_smoke_check(tm.ex4_3(), 1, N=16, trials=10)


def test_hj_smoke():
    res = iq.hj_smoke_check(tm.rademacher(), F(3, 2), N=128, trials=1000, seed=0)
    assert res.violations == 0
    assert res.params["t0_well_defined"]
    assert sum(r["bound"] == "three_term" for r in res.rows) == 64
    assert res.to_dict()["check"] == "hj_smoke"
