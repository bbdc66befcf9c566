"""No-regret learners for the repeated duopoly and the self-play simulator.

Each learner exposes ``act(r)`` (choose a price index from a uniform
draw ``r``) and ``observe(u, opp)`` (full utility vector against the
opponent's realized price). ``simulate`` runs two learners either through
these Python objects or through the compiled loop in ``_kernels``; both
consume the same uniform stream and sample the same way.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .equilibrium import JointDist
from .game import GameSpec, duopoly_utility_matrices

FAMILIES = ("hedge_swap", "regret_matching")
ETA_MODES = {
    "eta_base": (1.0, 1.0),
    "eta_1_plus_10i": (1.0, 11.0),
    "eta_11_minus_10i": (11.0, 1.0),
}
CHUNK = 1 << 16


def base_learning_rate(k: int, T: int) -> float:
    return math.sqrt(math.log(k) / T)


def _sample(q: np.ndarray, r: float) -> int:
    # first a with r < q[0] + ... + q[a]; sequential cumsum like the kernel
    a = int(np.searchsorted(np.cumsum(q), r, side="right"))
    return min(a, len(q) - 1)


# ---------------------------------------------------------------------
# Hedge and the swap-regret reduction
# ---------------------------------------------------------------------
@dataclass
class HedgeState:
    log_w: np.ndarray
    eta: float

    @classmethod
    def uniform(cls, k: int, eta: float) -> "HedgeState":
        return cls(np.zeros(k), eta)

    def distribution(self) -> np.ndarray:
        w = np.exp(self.log_w - self.log_w.max())
        return w / w.sum()


def hedge_step(state: HedgeState, u) -> HedgeState:
    """Exponential-weights update ``w_a <- w_a exp(eta u_a)``, in place."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("utility vector must be finite")
    state.log_w += state.eta * u
    return state


@dataclass
class SwapLearnerState:
    """One Hedge expert per action; row i of ``log_w`` is expert i."""

    log_w: np.ndarray
    eta: float
    iters: int = 20
    q: np.ndarray | None = None

    @classmethod
    def uniform(cls, k: int, eta: float, iters: int = 20) -> "SwapLearnerState":
        return cls(np.zeros((k, k)), eta, iters)

    @property
    def k(self) -> int:
        return self.log_w.shape[0]

    def matrix(self) -> np.ndarray:
        w = np.exp(self.log_w - self.log_w.max(axis=1, keepdims=True))
        return w / w.sum(axis=1, keepdims=True)


def stationary_power(Q: np.ndarray, iters: int = 20) -> np.ndarray:
    """``iters`` rounds of ``q <- q Q / |q Q|`` from the uniform vector."""
    k = Q.shape[0]
    q = np.full(k, 1.0 / k)
    for _ in range(iters):
        q = q @ Q
        q = q / q.sum()
    return q


def swap_recommend(state: SwapLearnerState) -> np.ndarray:
    state.q = stationary_power(state.matrix(), state.iters)
    return state.q


def swap_update(state: SwapLearnerState, u) -> SwapLearnerState:
    """Expert i receives the utility vector scaled by its recommendation weight q_i."""
    if state.q is None:
        swap_recommend(state)
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("utility vector must be finite")
    state.log_w += state.eta * state.q[:, None] * u[None, :]
    return state


# ---------------------------------------------------------------------
# regret matching
# ---------------------------------------------------------------------
@dataclass
class RegretMatchingState:
    regrets: np.ndarray
    last: int | None = None

    @classmethod
    def zeros(cls, k: int) -> "RegretMatchingState":
        return cls(np.zeros(k))

    def distribution(self) -> np.ndarray:
        pos = np.maximum(self.regrets, 0.0)
        s = pos.sum()
        if s <= 0:
            return np.full(len(pos), 1.0 / len(pos))
        return pos / s


def rm_step(state: RegretMatchingState, u, played: int) -> RegretMatchingState:
    u = np.asarray(u, dtype=float)
    state.regrets += u - u[played]
    state.last = played
    return state


# ---------------------------------------------------------------------
# learner objects
# ---------------------------------------------------------------------
class HedgeSwapLearner:
    family = "hedge_swap"

    def __init__(self, k: int, eta: float, iters: int = 20):
        self.state = SwapLearnerState.uniform(k, eta, iters)

    def distribution(self) -> np.ndarray:
        return swap_recommend(self.state)

    def act(self, r: float) -> int:
        return _sample(self.distribution(), r)

    def update(self, u, played: int):
        swap_update(self.state, u)

    def observe(self, u, opp: int | None = None):
        self.update(u, None)

    def finish(self):
        pass


class RegretMatchingLearner:
    family = "regret_matching"

    def __init__(self, k: int):
        self.state = RegretMatchingState.zeros(k)
        self._played = None

    def distribution(self) -> np.ndarray:
        return self.state.distribution()

    def act(self, r: float) -> int:
        self._played = _sample(self.distribution(), r)
        return self._played

    def update(self, u, played: int):
        rm_step(self.state, u, played)

    def observe(self, u, opp: int | None = None):
        self.update(u, self._played)

    def finish(self):
        pass


class FreezeWrapper:
    """Replays one sampled price for ``t0`` rounds and updates once per block.

    The inner learner sees the block's mean utility vector; a block cut
    short by the horizon is flushed by ``finish``.
    """

    def __init__(self, inner, t0: int):
        if t0 < 1:
            raise ValueError("block length must be at least 1")
        self.inner = inner
        self.t0 = t0
        self._pos = 0
        self._acc = None
        self._action = None
        self._q = None

    def act(self, r: float) -> int:
        if self._pos == 0:
            self._q = self.inner.distribution()
            self._action = _sample(self._q, r)
        return self._action

    def observe(self, u, opp: int | None = None):
        u = np.asarray(u, dtype=float)
        self._acc = u.copy() if self._pos == 0 else self._acc + u
        self._pos += 1
        if self._pos == self.t0:
            self._flush()

    def _flush(self):
        if self._pos:
            self.inner.update(self._acc / self._pos, self._action)
            self._pos = 0

    def finish(self):
        self._flush()


# ---------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class LearnerConfig:
    family: str = "hedge_swap"
    eta_mult: float = 1.0
    eta: float | None = None  # absolute rate; overrides eta_mult when given
    t0: int = 1
    station_iters: int = 20

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")
        if self.t0 < 1:
            raise ValueError("freeze block length t0 must be >= 1")
        if self.station_iters < 1:
            raise ValueError("need at least one power iteration")
        if (self.eta is not None and self.eta < 0) or self.eta_mult < 0:
            raise ValueError("learning rates must be non-negative")

    def learning_rate(self, k: int, T: int) -> float:
        return self.eta if self.eta is not None else self.eta_mult * base_learning_rate(k, T)

    def build(self, k: int, T: int):
        if self.family == "hedge_swap":
            inner = HedgeSwapLearner(k, self.learning_rate(k, T), self.station_iters)
        else:
            inner = RegretMatchingLearner(k)
        return inner if self.t0 == 1 else FreezeWrapper(inner, self.t0)

    @classmethod
    def from_dict(cls, d: dict) -> "LearnerConfig":
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def eta_mode_configs(mode: str, family: str = "hedge_swap", t0=(1, 1), station_iters: int = 20):
    if mode not in ETA_MODES:
        raise ValueError(f"unknown eta mode {mode!r}; expected one of {tuple(ETA_MODES)}")
    m1, m2 = ETA_MODES[mode]
    return (LearnerConfig(family, m1, None, t0[0], station_iters),
            LearnerConfig(family, m2, None, t0[1], station_iters))


# ---------------------------------------------------------------------
# regret accounting on joint-count histories
# ---------------------------------------------------------------------
def joint_counts(history, k: int) -> np.ndarray:
    """k x k count matrix from a SimResult, an integer k x k ndarray of counts, or a list of index pairs.

    Only an ``ndarray`` is read as a count matrix; lists are always pairs.
    """
    if isinstance(history, SimResult):
        return history.counts
    if isinstance(history, np.ndarray) and history.shape == (k, k) and history.dtype.kind in "iu":
        return history
    arr = np.asarray(history)
    pairs = arr.reshape(-1, 2).astype(np.int64)
    C = np.zeros((k, k), dtype=np.int64)
    np.add.at(C, (pairs[:, 0], pairs[:, 1]), 1)
    return C


def _own_view(game: GameSpec, C: np.ndarray, i: int):
    """Rows indexed by player i's own price, columns by the opponent's."""
    U1, U2 = duopoly_utility_matrices(game)
    if i == 0:
        return C.astype(float), U1
    return C.T.astype(float), U2.T


def _regret_terms(game: GameSpec, history, i: int):
    if game.n != 2:
        raise ValueError("regret accounting is implemented for duopolies")
    C, U = _own_view(game, joint_counts(history, game.k), i)
    dev = C @ U.T  # dev[p, a]: total utility had every round recommended p played a
    realized = dev[np.arange(game.k), np.arange(game.k)]
    return dev, realized


def external_regret(history, game: GameSpec, i: int) -> float:
    dev, realized = _regret_terms(game, history, i)
    total = math.fsum(realized)
    return max(math.fsum(dev[:, a]) for a in range(game.k)) - total


def swap_regret(history, game: GameSpec, i: int) -> float:
    dev, realized = _regret_terms(game, history, i)
    best = np.maximum(dev.max(axis=1), realized)
    return math.fsum(best) - math.fsum(realized)


def realized_utility(history, game: GameSpec, i: int) -> float:
    return math.fsum(_regret_terms(game, history, i)[1])


# ---------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------
@dataclass
class SimResult:
    k: int
    T: int
    seed: int
    configs: tuple
    counts: np.ndarray
    costs: tuple = (0.0, 0.0)
    regrets: dict = field(default_factory=dict)
    utilities: tuple = ()
    runtime: float = 0.0
    trajectory: np.ndarray | None = None

    def price_hist(self, i: int) -> np.ndarray:
        return self.counts.sum(axis=1 - i)

    @property
    def transaction_hist(self) -> np.ndarray:
        k = self.k
        a = np.arange(k)
        return np.bincount(np.minimum(a[:, None], a[None, :]).ravel(), weights=self.counts.ravel(),
                           minlength=k).astype(np.int64)

    def modal_price(self, which: str = "transaction") -> float:
        h = self.transaction_hist if which == "transaction" else self.price_hist(int(which))
        return (int(np.argmax(h)) + 1) / self.k

    def csv_rows(self) -> list[list]:
        h1, h2, ht = self.price_hist(0), self.price_hist(1), self.transaction_hist
        return [[(a + 1) / self.k, h1[a] / self.T, h2[a] / self.T, ht[a] / self.T] for a in range(self.k)]

    def summary(self) -> dict:
        return {
            "k": self.k, "T": self.T, "seed": self.seed, "costs": list(self.costs),
            "configs": [c.to_dict() for c in self.configs], "regrets": self.regrets,
            "utilities": list(self.utilities), "runtime": self.runtime,
            "modal_transaction_price": self.modal_price(),
        }


def _attach_accounting(res: SimResult, game: GameSpec) -> SimResult:
    res.regrets = {
        f"player{i + 1}": {"external": external_regret(res.counts, game, i),
                           "swap": swap_regret(res.counts, game, i)}
        for i in range(2)
    }
    res.utilities = tuple(realized_utility(res.counts, game, i) for i in range(2))
    return res


def _kernel_state(game: GameSpec, cfgs, T):
    k = game.k
    return dict(
        g=np.ascontiguousarray(game.margins),
        fam=np.array([FAMILIES.index(c.family) for c in cfgs], dtype=np.int64),
        eta=np.array([c.learning_rate(k, T) for c in cfgs]),
        t0=np.array([c.t0 for c in cfgs], dtype=np.int64),
        L=np.zeros((2, k, k)), P=np.full((2, k, k), 1.0 / k), Q=np.zeros((2, k)),
        R=np.zeros((2, k)), U=np.zeros((2, k)), hi=np.zeros(2, dtype=np.int64),
        pos=np.zeros(2, dtype=np.int64), act=np.zeros(2, dtype=np.int64),
        n_upd=np.zeros(2, dtype=np.int64),
    )


def simulate(game: GameSpec, cfg1: LearnerConfig, cfg2: LearnerConfig, T: int, seed: int,
             engine: str = "compiled", thin: int = 0) -> SimResult:
    """Self-play of two learners for ``T`` rounds with full-information feedback.

    Round t uses ``rng.random((T, 2))[t]`` from ``numpy.random.default_rng(seed)``
    (drawn in chunks). ``engine="python"`` runs the reference learner
    objects; ``"compiled"`` runs the numba loop.
    """
    if game.n != 2:
        raise ValueError("simulation is for duopolies")
    if T < 1:
        raise ValueError("need at least one round")
    if cfg1.station_iters != cfg2.station_iters and engine == "compiled":
        raise ValueError("the compiled engine uses one power-iteration count for both players")
    k = game.k
    rng = np.random.default_rng(seed)
    traj = np.zeros(((T + thin - 1) // thin if thin else 0, 2), dtype=np.int64)
    start = time.perf_counter()
    if engine == "compiled":
        st = _kernel_state(game, (cfg1, cfg2), T)
        counts = np.zeros((k, k), dtype=np.int64)
        for t in range(0, T, CHUNK):
            n = min(CHUNK, T - t)
            _kernels.run_chunk(t, t + n, T, rng.random((n, 2)), st["g"], st["fam"], st["eta"], st["t0"],
                               cfg1.station_iters, st["L"], st["P"], st["Q"], st["R"], st["U"], st["hi"],
                               st["pos"], st["act"], st["n_upd"], counts, traj, thin)
    elif engine == "python":
        counts = play(game, cfg1.build(k, T), cfg2.build(k, T), T, rng, traj, thin)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    res = SimResult(k, T, seed, (cfg1, cfg2), counts, game.costs,
                    runtime=time.perf_counter() - start, trajectory=traj if thin else None)
    return _attach_accounting(res, game)


def play(game: GameSpec, l1, l2, T: int, rng, traj=None, thin: int = 0) -> np.ndarray:
    """Run any two learner objects against each other; returns joint counts."""
    k = game.k
    U1, U2 = duopoly_utility_matrices(game)
    counts = np.zeros((k, k), dtype=np.int64)
    for t0 in range(0, T, CHUNK):
        unif = rng.random((min(CHUNK, T - t0), 2))
        for s, (r1, r2) in enumerate(unif):
            a1, a2 = l1.act(r1), l2.act(r2)
            counts[a1, a2] += 1
            if thin and (t0 + s) % thin == 0:
                traj[(t0 + s) // thin] = (a1, a2)
            l1.observe(U1[:, a2], a2)
            l2.observe(U2[a1, :], a1)
    l1.finish()
    l2.finish()
    return counts


def merge_results(results: Sequence[SimResult]) -> np.ndarray:
    """Sum of joint counts (histogram aggregation is associative)."""
    return np.sum([r.counts for r in results], axis=0)


def write_sim_outputs(path_prefix, results: Sequence[SimResult], extra: dict | None = None):
    """``<prefix>.csv`` with per-price frequencies and ``<prefix>.json`` with per-seed summaries."""
    import csv
    from pathlib import Path

    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    k = results[0].k
    total = merge_results(results)
    agg = SimResult(k, sum(r.T for r in results), -1, results[0].configs, total)
    with open(prefix.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["price", "freq_p1", "freq_p2", "freq_transaction"])
        for row in agg.csv_rows():
            w.writerow([f"{v:.12g}" for v in row])
    side = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"), "seeds": [r.seed for r in results],
            "modal_transaction_price": agg.modal_price(), "runs": [r.summary() for r in results]}
    if extra:
        side.update(extra)
    with open(prefix.with_suffix(".json"), "w") as fh:
        json.dump(side, fh, indent=2)
    return agg


# ---------------------------------------------------------------------
# scripted cycle learners
# ---------------------------------------------------------------------
def build_cycle(dist: JointDist, T: int) -> list[tuple]:
    """Each support tuple x repeated floor(mu(x) sqrt(T)) times, in lexicographic order."""
    root = math.isqrt(T)
    if T < 1 or root * root != T:
        raise ValueError(f"T = {T} is not a perfect square")
    cycle = []
    for x, w in sorted(dist.as_mapping().items()):
        cycle.extend([x] * math.floor(Fraction(w) * root))
    if not cycle:
        raise ValueError(f"every weight is below 1/sqrt(T) = {1 / root:g}; increase T")
    return cycle


class CycleLearner:
    """Plays its coordinate of a fixed cycle until the opponent departs from it.

    After the first round in which the opponent's price differs from the
    script, the fallback learner takes over from the next round on.
    """

    def __init__(self, cycle: Sequence[tuple], player: int, fallback):
        if not cycle:
            raise ValueError("empty cycle")
        self.cycle = list(cycle)
        self.player = player
        self.fallback = fallback
        self.t = 0
        self.switched_at: int | None = None

    @property
    def switched(self) -> bool:
        return self.switched_at is not None

    def act(self, r: float) -> int:
        if self.switched:
            return self.fallback.act(r)
        return self.cycle[self.t % len(self.cycle)][self.player]

    def observe(self, u, opp: int):
        if self.switched:
            self.fallback.observe(u, opp)
        elif opp != self.cycle[self.t % len(self.cycle)][1 - self.player]:
            self.switched_at = self.t + 1
        self.t += 1

    def finish(self):
        if self.switched:
            self.fallback.finish()

