import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bertrand_eq.constructions import cce_symmetric
from bertrand_eq.equilibrium import JointDist
from bertrand_eq.game import GameSpec, duopoly_utility_matrices
from bertrand_eq.learners import (
    CycleLearner,
    FreezeWrapper,
    HedgeState,
    HedgeSwapLearner,
    LearnerConfig,
    RegretMatchingLearner,
    RegretMatchingState,
    SwapLearnerState,
    base_learning_rate,
    build_cycle,
    eta_mode_configs,
    external_regret,
    hedge_step,
    joint_counts,
    merge_results,
    play,
    realized_utility,
    rm_step,
    simulate,
    stationary_power,
    swap_recommend,
    swap_regret,
    swap_update,
    write_sim_outputs,
)

HS = LearnerConfig("hedge_swap")
RM = LearnerConfig("regret_matching")


def brute_regrets(pairs, game, i):
    """External and swap regret straight from the definition."""
    U1, U2 = duopoly_utility_matrices(game)
    k = game.k

    def u(own, opp):
        return U1[own, opp] if i == 0 else U2[opp, own]

    own = [p[i] for p in pairs]
    opp = [p[1 - i] for p in pairs]
    realized = sum(u(a, b) for a, b in zip(own, opp))
    external = max(sum(u(a, b) for b in opp) for a in range(k)) - realized
    swap = 0.0
    for p in set(own):
        rounds = [b for a, b in zip(own, opp) if a == p]
        stay = sum(u(p, b) for b in rounds)
        swap += max(max(sum(u(a, b) for b in rounds) for a in range(k)), stay) - stay
    return external, swap


# ---------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------
def test_hedge_step_examples():
    s = HedgeState.uniform(2, math.log(2))
    hedge_step(s, [1.0, 0.0])
    assert np.allclose(s.distribution(), [2 / 3, 1 / 3], atol=1e-15)
    s0 = HedgeState.uniform(3, 0.7)
    hedge_step(s0, np.zeros(3))
    assert np.allclose(s0.distribution(), 1 / 3)
    s1 = HedgeState.uniform(3, 0.0)
    hedge_step(s1, [5.0, 1.0, 0.0])
    assert np.allclose(s1.distribution(), 1 / 3)
    with pytest.raises(ValueError):
        hedge_step(s1, [np.nan, 0.0, 0.0])


@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_hedge_distribution_normalized(k, seed):
    rng = np.random.default_rng(seed)
    s = HedgeState.uniform(k, float(rng.uniform(0, 50)))
    for _ in range(5):
        hedge_step(s, rng.uniform(0, 1, size=k))
    assert math.fsum(s.distribution()) == pytest.approx(1.0, abs=1e-12)


def test_swap_recommend_examples():
    st_u = SwapLearnerState.uniform(4, 0.1)
    assert np.allclose(swap_recommend(st_u), 0.25)
    st_p = SwapLearnerState.uniform(4, 1.0)
    st_p.log_w[:, 2] = 800.0
    assert np.allclose(swap_recommend(st_p), [0, 0, 1, 0])
    cyc = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(stationary_power(cyc, 20), [0.5, 0.5])


@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_swap_matrix_rows_stochastic(k, seed):
    rng = np.random.default_rng(seed)
    s = SwapLearnerState.uniform(k, 3.0, iters=int(rng.integers(1, 40)))
    for _ in range(3):
        swap_recommend(s)
        swap_update(s, rng.uniform(0, 1, size=k))
    Q = s.matrix()
    assert np.allclose(Q.sum(axis=1), 1.0, atol=1e-12)
    q = swap_recommend(s)
    assert np.all(q >= 0) and math.fsum(q) == pytest.approx(1.0, abs=1e-12)


def test_swap_update_examples():
    s = SwapLearnerState.uniform(3, 1.0)
    s.q = np.array([0.0, 1.0, 0.0])
    swap_update(s, [0.5, 0.0, 1.0])
    assert np.all(s.log_w[0] == 0) and np.all(s.log_w[2] == 0)
    assert np.allclose(s.log_w[1], [0.5, 0.0, 1.0])
    before = s.log_w.copy()
    swap_update(s, np.zeros(3))
    assert np.array_equal(s.log_w, before)
    # k = 2 by hand: q = (1/2, 1/2), u = (1, 0), eta = ln 2
    h = SwapLearnerState.uniform(2, math.log(2))
    swap_recommend(h)
    swap_update(h, [1.0, 0.0])
    expected = np.array([math.sqrt(2), 1.0]) / (math.sqrt(2) + 1)
    assert np.allclose(h.matrix(), [expected, expected], atol=1e-15)


def test_rm_step_examples():
    s = RegretMatchingState.zeros(3)
    assert np.allclose(s.distribution(), 1 / 3)
    rm_step(s, [0.2, 0.2, 0.2], 1)
    assert np.all(s.regrets == 0)
    s2 = RegretMatchingState.zeros(2)
    rm_step(s2, [0.0, 1.0], 0)
    assert np.allclose(s2.regrets, [0.0, 1.0])
    assert np.allclose(s2.distribution(), [0.0, 1.0])


# ---------------------------------------------------------------------
# regret accounting
# ---------------------------------------------------------------------
def test_regret_examples():
    k = 2
    g = GameSpec.create(k, 2, 0.0)
    T = 40
    pairs = [(1, 0)] * T
    assert external_regret(pairs, g, 0) == pytest.approx(T / 4)
    steady = GameSpec.create(10, 2, 0.3)
    j = steady.cost_ticks[0]
    hist = [(j, j)] * 25
    assert external_regret(hist, steady, 0) == 0.0
    assert external_regret(hist, steady, 1) == 0.0


@given(st.integers(2, 6), st.integers(1, 60), st.integers(0, 2**32 - 1))
def test_regrets_match_definition(k, T, seed):
    rng = np.random.default_rng(seed)
    g = GameSpec(k, 2, tuple(int(v) for v in rng.integers(0, k + 1, size=2)))
    pairs = [tuple(int(v) for v in row) for row in rng.integers(0, k, size=(T, 2))]
    for i in range(2):
        ext, swp = brute_regrets(pairs, g, i)
        assert external_regret(pairs, g, i) == pytest.approx(ext, abs=1e-12)
        assert swap_regret(pairs, g, i) == pytest.approx(swp, abs=1e-12)
        assert swap_regret(pairs, g, i) >= external_regret(pairs, g, i)


def test_joint_counts_inputs():
    pairs = [(0, 1), (0, 1), (2, 2)]
    C = joint_counts(pairs, 3)
    assert C[0, 1] == 2 and C[2, 2] == 1 and C.sum() == 3
    assert joint_counts(C, 3) is C
    g = GameSpec.create(3, 2, 0.0)
    assert realized_utility(pairs, g, 0) == pytest.approx(2 / 3 + 1 / 2)


# ---------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------
def test_single_round_regret_matching():
    g = GameSpec.create(10, 2, 0.0)
    res = simulate(g, RM, RM, 1, seed=5)
    assert res.transaction_hist.sum() == 1
    assert res.counts.sum() == 1


@pytest.mark.parametrize("cfgs", [
    (HS, HS),
    (RM, RM),
    (LearnerConfig("hedge_swap", 11.0), LearnerConfig("hedge_swap", 1.0, t0=7)),
    (LearnerConfig("regret_matching", t0=20), LearnerConfig("regret_matching")),
    (LearnerConfig("hedge_swap", eta=0.9, t0=3), RM),
])
def test_engines_agree(cfgs):
    g = GameSpec.create(8, 2, [0.0, 0.25], "linear")
    a = simulate(g, *cfgs, T=700, seed=3, engine="compiled")
    b = simulate(g, *cfgs, T=700, seed=3, engine="python")
    assert np.array_equal(a.counts, b.counts)


def test_simulation_reproducible():
    g = GameSpec.create(20, 2, [0.0, 0.5])
    a = simulate(g, HS, HS, 3000, seed=42, thin=10)
    b = simulate(g, HS, HS, 3000, seed=42, thin=10)
    assert np.array_equal(a.counts, b.counts)
    assert np.array_equal(a.trajectory, b.trajectory)
    assert a.regrets == b.regrets
    c = simulate(g, HS, HS, 3000, seed=43)
    assert not np.array_equal(a.counts, c.counts)


def test_freeze_with_unit_block_is_bare_learner():
    g = GameSpec.create(12, 2, 0.0)
    for make in (lambda: HedgeSwapLearner(12, 0.3), lambda: RegretMatchingLearner(12)):
        bare = play(g, make(), make(), 500, np.random.default_rng(9))
        wrapped = play(g, FreezeWrapper(make(), 1), FreezeWrapper(make(), 1), 500, np.random.default_rng(9))
        assert np.array_equal(bare, wrapped)


def test_freeze_block_semantics():
    calls = []

    class Probe:
        def distribution(self):
            return np.array([0.5, 0.5])

        def update(self, u, played):
            calls.append((np.array(u), played))

    fw = FreezeWrapper(Probe(), 3)
    acts = []
    for t, r in enumerate([0.1, 0.9, 0.9, 0.9, 0.1, 0.1, 0.9]):
        acts.append(fw.act(r))
        fw.observe([float(t), 0.0])
    fw.finish()
    assert acts == [0, 0, 0, 1, 1, 1, 1]
    assert len(calls) == 3
    assert np.allclose(calls[0][0], [1.0, 0.0]) and np.allclose(calls[2][0], [6.0, 0.0])
    with pytest.raises(ValueError):
        FreezeWrapper(Probe(), 0)


def test_histograms_and_outputs(tmp_path):
    g = GameSpec.create(10, 2, [0.0, 0.5])
    runs = [simulate(g, HS, HS, 2000, seed=s) for s in (1, 2)]
    for r in runs:
        assert r.price_hist(0).sum() == r.price_hist(1).sum() == r.transaction_hist.sum() == 2000
        for v in r.regrets.values():
            assert v["swap"] >= v["external"] >= -1e-9
    total = merge_results(runs)
    assert total.sum() == 4000
    agg = write_sim_outputs(tmp_path / "run", runs, {"note": "x"})
    lines = (tmp_path / "run.csv").read_text().splitlines()
    assert lines[0] == "price,freq_p1,freq_p2,freq_transaction" and len(lines) == 11
    side = json.loads((tmp_path / "run.json").read_text())
    assert side["seeds"] == [1, 2] and side["note"] == "x" and "timestamp" in side
    assert agg.modal_price() == side["modal_transaction_price"]


def test_learner_config():
    assert base_learning_rate(100, 10**6) == pytest.approx(math.sqrt(math.log(100) / 1e6))
    c1, c2 = eta_mode_configs("eta_1_plus_10i")
    assert (c1.eta_mult, c2.eta_mult) == (1.0, 11.0)
    c1, c2 = eta_mode_configs("eta_11_minus_10i", "regret_matching", (20, 1))
    assert (c1.eta_mult, c1.t0, c2.t0) == (11.0, 20, 1)
    assert LearnerConfig.from_dict(c1.to_dict()) == c1
    assert LearnerConfig(eta=0.5).learning_rate(10, 100) == 0.5
    for bad in (dict(family="sgd"), dict(t0=0), dict(station_iters=0), dict(eta=-1.0)):
        with pytest.raises(ValueError):
            LearnerConfig(**bad)
    with pytest.raises(ValueError):
        eta_mode_configs("eta_fast")
    with pytest.raises(ValueError):
        simulate(GameSpec.create(5, 2, 0.0), HS, HS, 0, 1)


def test_regret_matching_regret_shrinks():
    g = GameSpec.create(20, 2, 0.0)
    avg = [np.mean([simulate(g, RM, RM, T, seed=s).regrets["player1"]["external"] / T for s in range(5)])
           for T in (1000, 20000)]
    assert avg[1] < avg[0]


# ---------------------------------------------------------------------
# scripted cycles
# ---------------------------------------------------------------------
def test_build_cycle_examples():
    mu = JointDist.from_diagonal([0.5, 0.5])
    assert build_cycle(mu, 16) == [(0, 0), (0, 0), (1, 1), (1, 1)]
    point = JointDist.point_mass(5, (2, 3))
    assert build_cycle(point, 100) == [(2, 3)] * 10
    with pytest.raises(ValueError):
        build_cycle(mu, 15)
    spread = JointDist.from_diagonal(np.full(40, 1 / 40))
    with pytest.raises(ValueError):
        build_cycle(spread, 16)


@given(st.integers(2, 8), st.integers(1, 60), st.integers(0, 2**32 - 1))
def test_cycle_length_bounds(k, root, seed):
    rng = np.random.default_rng(seed)
    W = rng.random((k, k))
    W[W < 0.5] = 0
    W[0, 0] += 1
    mu = JointDist.from_dense2(W / W.sum())
    try:
        cyc = build_cycle(mu, root * root)
    except ValueError:
        assert all(w * root < 1 for _, w in mu.items())
        return
    assert root - len(mu.weights) <= len(cyc) <= root
    assert cyc == sorted(cyc)


def test_cycle_learners_track_script():
    g = GameSpec.create(10, 2, 0.0)
    mu = cce_symmetric(g)
    cyc = build_cycle(mu, 10**4)
    l1 = CycleLearner(cyc, 0, HedgeSwapLearner(10, 0.1))
    l2 = CycleLearner(cyc, 1, HedgeSwapLearner(10, 0.1))
    C = play(g, l1, l2, 3 * len(cyc) + 5, np.random.default_rng(0))
    assert not l1.switched and not l2.switched
    assert np.trace(C) == C.sum()


def test_cycle_learner_switches_after_mismatch():
    g = GameSpec.create(4, 2, 0.0)
    cyc = [(3, 3)]

    class Fixed:
        def __init__(self, a):
            self.a = a

        def act(self, r):
            return self.a

        def observe(self, u, opp=None):
            pass

        def finish(self):
            pass

    learner = CycleLearner(cyc, 0, Fixed(1))
    C = play(g, learner, Fixed(2), 5, np.random.default_rng(0))
    assert learner.switched_at == 1
    assert C[3, 2] == 1 and C[1, 2] == 4
    with pytest.raises(ValueError):
        CycleLearner([], 0, Fixed(0))
