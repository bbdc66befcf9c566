import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bertrand_eq.game import (
    DemandFunction,
    GameSpec,
    PriceGrid,
    cost_tick,
    duopoly_utility_matrices,
    margin,
    monopoly_optimum,
    snap_cost,
    transaction_price,
    utility,
    utility_idx,
)
from oracles import demand_exact, util


def test_grid_prices():
    g = PriceGrid(4)
    assert list(g.prices) == [0.25, 0.5, 0.75, 1.0]
    assert g.index(0.75) == 2
    assert g.price(0) == 0.25
    with pytest.raises(ValueError):
        g.index(0.3)
    with pytest.raises(ValueError):
        g.index(0.0)
    with pytest.raises(ValueError):
        PriceGrid(0)


@pytest.mark.parametrize("k", [1, 3, 7, 100, 6000])
def test_grid_matches_fractions(k):
    p = PriceGrid(k).prices
    assert len(p) == k and np.all(np.diff(p) > 0)
    assert all(p[i] == (i + 1) / k for i in range(k))


def test_margin_examples():
    assert margin(GameSpec.create(10, 2, 0.0), 0, 1.0) == 1.0
    assert margin(GameSpec.create(100, 2, 0.0, "linear"), 0, 0.5) == pytest.approx(0.25, abs=1e-15)
    assert margin(GameSpec.create(10, 2, 0.5), 0, 0.5) == 0.0
    assert margin(GameSpec.create(10, 2, 0.5), 0, 0.2) < 0
    with pytest.raises(ValueError):
        margin(GameSpec.create(10, 2, 0.0), 0, 0.55)


def test_utility_examples():
    g = GameSpec.create(4, 2, 0.0)
    assert utility(g, 0, (0.5, 0.75)) == 0.5
    assert utility(g, 1, (0.5, 0.75)) == 0.0
    assert utility(g, 0, (0.5, 0.5)) == utility(g, 1, (0.5, 0.5)) == 0.25
    g3 = GameSpec.create(4, 3, 0.0)
    x = (0.5, 0.5, 1.0)
    assert [utility(g3, i, x) for i in range(3)] == [0.25, 0.25, 0.0]
    with pytest.raises(ValueError):
        utility(g, 0, (0.5, 0.6))
    with pytest.raises(ValueError):
        utility(g, 0, (0.5,))


def test_transaction_price():
    assert transaction_price((0.5, 0.75)) == 0.5
    assert transaction_price((1, 1)) == 1
    assert transaction_price((0.75, 0.25, 0.5)) == 0.25
    with pytest.raises(ValueError):
        transaction_price(())


def test_monopoly_optimum():
    assert monopoly_optimum(GameSpec.create(10, 2, 0.0), 0) == (1.0, 1.0)
    p, v = monopoly_optimum(GameSpec.create(100, 2, 0.0, "linear"), 0)
    assert p == 0.5 and v == pytest.approx(0.25)
    # 1/3 and 2/3 both earn 2/9; the lower price is reported
    p, v = monopoly_optimum(GameSpec.create(3, 2, 0.0, "linear"), 0)
    assert p == pytest.approx(1 / 3) and v == pytest.approx(2 / 9)


def test_monopoly_tie_goes_low():
    # margins (0.5*0.8, 1.0*0.4) tie at 0.4 -> lower price wins
    g = GameSpec.create(2, 2, 0.0, {"kind": "table", "table": [0.8, 0.4]})
    assert monopoly_optimum(g, 0)[0] == 0.5


def test_demand_validation():
    with pytest.raises(ValueError):
        DemandFunction("cubic")
    with pytest.raises(ValueError):
        DemandFunction("table", (0.5, 0.6))
    with pytest.raises(ValueError):
        DemandFunction("table", (1.2, 0.6))
    with pytest.raises(ValueError):
        DemandFunction("table")
    with pytest.raises(ValueError):
        GameSpec.create(3, 2, 0.0, {"kind": "table", "table": [1.0, 0.5]})
    for kind in ("linear", "quadratic", "exponential"):
        v = DemandFunction(kind).values(PriceGrid(50))
        assert np.all(np.diff(v) <= 0) and v.min() >= 0 and v.max() <= 1


def test_costs_must_be_on_grid():
    assert cost_tick(0.5, 10) == 5
    with pytest.raises(ValueError):
        cost_tick(0.5, 25)
    with pytest.raises(ValueError):
        GameSpec.create(10, 2, [0.0])
    assert snap_cost(0.5, 25) == 12 / 25
    assert snap_cost(0.9, 25) == 22 / 25
    assert snap_cost(0.5, 10) == 0.5


def test_game_roundtrip():
    g = GameSpec.create(20, 3, [0.0, 0.1, 0.2], "quadratic")
    assert GameSpec.from_dict(g.to_dict()) == g
    assert not g.symmetric


def test_duopoly_matrices_match_utility():
    g = GameSpec.create(5, 2, [0.2, 0.4], "linear")
    U1, U2 = duopoly_utility_matrices(g)
    for a in range(5):
        for b in range(5):
            assert U1[a, b] == utility_idx(g, 0, (a, b))
            assert U2[a, b] == utility_idx(g, 1, (a, b))


tuples = st.integers(2, 5).flatmap(
    lambda n: st.tuples(st.integers(1, 12), st.lists(st.integers(0, 11), min_size=n, max_size=n)))


@given(tuples, st.sampled_from(["constant", "linear", "quadratic"]), st.integers(0, 12))
def test_utilities_sum_to_margin_at_min(data, demand, j):
    k, raw = data
    x = [v % k for v in raw]
    j = j % (k + 1)
    g = GameSpec.create(k, len(x), j / k, demand)
    f = demand_exact(demand, k)
    total = sum(utility_idx(g, i, x) for i in range(len(x)))
    lo = min(x)
    assert total == pytest.approx(float(g.margins[0, lo]), abs=1e-14)
    for i in range(len(x)):
        assert utility_idx(g, i, x) == pytest.approx(float(util(k, [j] * len(x), f, i, x)), abs=1e-14)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=8), st.floats(0, 1), st.data())
def test_utility_scales_with_demand(vals, alpha, data):
    table = sorted(vals, reverse=True)
    k = len(table)
    x = data.draw(st.lists(st.integers(0, k - 1), min_size=2, max_size=4))
    g = GameSpec.create(k, len(x), 0.0, {"kind": "table", "table": table})
    ga = GameSpec.create(k, len(x), 0.0, {"kind": "table", "table": [alpha * v for v in table]})
    for i in range(len(x)):
        assert utility_idx(ga, i, x) == pytest.approx(alpha * utility_idx(g, i, x), abs=1e-15)
