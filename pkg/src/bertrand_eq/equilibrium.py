"""Joint price distributions and Phi-correlated equilibrium checks.

A player's incentive to deviate only depends, for each support tuple, on
its own recommended price, the minimum of the other prices and how many
opponents sit at that minimum. ``_OpponentView`` reduces a distribution
to those three columns, after which constant deviations and per-
recommendation best responses are a couple of ``bincount`` calls.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .game import DomainError, GameSpec

REPRS = ("dense2", "diagonal", "sparse")
DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class JointDist:
    """Distribution over price tuples, stored as a list of index tuples.

    ``support`` is an (m, n) integer array of 0-based grid indices and
    ``weights`` the matching probabilities. ``repr`` records the natural
    representation (used for serialization only).
    """

    k: int
    n: int
    support: np.ndarray
    weights: np.ndarray
    repr: str = "sparse"

    def __post_init__(self):
        if self.repr not in REPRS:
            raise ValueError(f"unknown representation {self.repr!r}")
        sup = np.asarray(self.support, dtype=np.int64).reshape(-1, self.n)
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(sup) != len(w):
            raise ValueError("support and weights differ in length")
        if np.any(w < 0):
            raise ValueError("negative probability weight")
        if sup.size and (sup.min() < 0 or sup.max() >= self.k):
            raise ValueError("support tuple off the price grid")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, not 1")
        keep = w > 0
        sup, w = sup[keep], w[keep]
        sup.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", w)

    # -- constructors -------------------------------------------------
    @classmethod
    def from_dense2(cls, matrix) -> "JointDist":
        W = np.asarray(matrix, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("dense2 weights must be a square k x k matrix")
        a, b = np.nonzero(W)
        return cls(W.shape[0], 2, np.stack([a, b], axis=1), W[a, b], "dense2")

    @classmethod
    def from_diagonal(cls, weights, n: int = 2) -> "JointDist":
        q = np.asarray(weights, dtype=float)
        idx = np.nonzero(q)[0]
        return cls(len(q), n, np.repeat(idx[:, None], n, axis=1), q[idx], "diagonal")

    @classmethod
    def from_mapping(cls, k: int, n: int, mapping: dict, repr: str = "sparse") -> "JointDist":
        if not mapping:
            raise ValueError("empty distribution")
        keys = list(mapping)
        return cls(k, n, np.array(keys, dtype=np.int64), np.array([mapping[t] for t in keys]), repr)

    @classmethod
    def point_mass(cls, k: int, x: Sequence[int]) -> "JointDist":
        n = len(x)
        rep = "diagonal" if len(set(x)) == 1 else ("dense2" if n == 2 else "sparse")
        return cls(k, n, np.array([x]), np.array([1.0]), rep)

    # -- views --------------------------------------------------------
    def items(self) -> Iterable[tuple[tuple, float]]:
        for row, w in zip(self.support, self.weights):
            yield tuple(int(v) for v in row), float(w)

    def as_mapping(self) -> dict:
        out: dict = {}
        for x, w in self.items():
            out[x] = out.get(x, 0.0) + w
        return out

    def to_dense2(self) -> np.ndarray:
        if self.n != 2:
            raise ValueError("dense matrix view needs n = 2")
        W = np.zeros((self.k, self.k))
        np.add.at(W, (self.support[:, 0], self.support[:, 1]), self.weights)
        return W

    def marginal(self, i: int) -> np.ndarray:
        return np.bincount(self.support[:, i], weights=self.weights, minlength=self.k)

    def min_price_distribution(self) -> np.ndarray:
        """Law of the transaction-price index ``min(x)``."""
        return np.bincount(self.support.min(axis=1), weights=self.weights, minlength=self.k)

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.support == self.support[:, :1]))

    # -- serialization -----------------------------------------------
    def to_json_dict(self) -> dict:
        if self.repr == "diagonal":
            entries = [[int(row[0]), repr_float(w)] for row, w in zip(self.support, self.weights)]
        else:
            entries = [[*(int(v) for v in row), repr_float(w)] for row, w in zip(self.support, self.weights)]
        return {"k": self.k, "n": self.n, "repr": self.repr, "entries": entries}

    @classmethod
    def from_json_dict(cls, d: dict) -> "JointDist":
        k, n, rep = int(d["k"]), int(d["n"]), d.get("repr", "sparse")
        if rep not in REPRS:
            raise ValueError(f"unknown representation {rep!r}")
        entries = d["entries"]
        if not entries:
            raise ValueError("distribution has no entries")
        width = 2 if rep == "diagonal" else n + 1
        if any(len(e) != width for e in entries):
            raise ValueError(f"every {rep} entry must have {width} fields")
        w = np.array([float(e[-1]) for e in entries])
        idx = np.array([[int(v) for v in e[:-1]] for e in entries], dtype=np.int64)
        if rep == "diagonal":
            idx = np.repeat(idx, n, axis=1)
        return cls(k, n, idx, w, rep)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def loads(cls, text: str) -> "JointDist":
        return cls.from_json_dict(json.loads(text))


def repr_float(x: float) -> float:
    # shortest round-tripping decimal; json writes it verbatim
    return float(repr(float(x)))


# ---------------------------------------------------------------------
@dataclass(frozen=True)
class DeviationClass:
    """A player's set of deviation maps: constant maps, all maps, or a list."""

    kind: str = "constant_only"
    maps: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("constant_only", "all_maps", "explicit"):
            raise ValueError(f"unknown deviation class {self.kind!r}")
        if self.kind == "explicit":
            if not self.maps:
                raise ValueError("explicit deviation class needs at least one map")
            object.__setattr__(self, "maps", tuple(tuple(int(v) for v in m) for m in self.maps))

    @classmethod
    def parse(cls, spec: str) -> "DeviationClass":
        aliases = {"cce": "constant_only", "constant": "constant_only", "ce": "all_maps", "all": "all_maps"}
        return cls(aliases.get(spec, spec))


CONSTANT = DeviationClass("constant_only")
ALL_MAPS = DeviationClass("all_maps")


@dataclass
class PlayerReport:
    player: int
    expected_utility: float
    worst_gain: float
    witness: object  # best constant price (float), {price: best response} or a map index


@dataclass
class VerificationReport:
    tol: float
    players: list = field(default_factory=list)
    classes: list = field(default_factory=list)

    @property
    def worst_gain(self) -> float:
        return max(p.worst_gain for p in self.players)

    @property
    def passed(self) -> bool:
        return self.worst_gain <= self.tol

    @property
    def expected_utilities(self) -> list:
        return [p.expected_utility for p in self.players]

    def summary(self) -> str:
        lines = [f"{'PASS' if self.passed else 'FAIL'}  worst gain {self.worst_gain:.6g}  (tol {self.tol:g})"]
        for p, c in zip(self.players, self.classes):
            lines.append(f"  player {p.player + 1} [{c.kind}]: E[u] = {p.expected_utility:.12g}, "
                         f"max deviation gain = {p.worst_gain:.6g}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        def wit(w):
            if isinstance(w, dict):
                return {repr_float(a): repr_float(b) for a, b in w.items()}
            return w

        return {
            "pass": self.passed,
            "tol": self.tol,
            "worst_gain": self.worst_gain,
            "players": [
                {"player": p.player + 1, "class": c.kind, "expected_utility": p.expected_utility,
                 "worst_gain": p.worst_gain, "witness": wit(p.witness)}
                for p, c in zip(self.players, self.classes)
            ],
        }


# ---------------------------------------------------------------------
class _OpponentView:
    """Per-tuple (own index, opponents' min index, tie-weighted mass)."""

    def __init__(self, game: GameSpec, dist: JointDist, i: int):
        _check_compatible(game, dist)
        if not 0 <= i < dist.n:
            raise ValueError(f"player index {i} out of range")
        sup = dist.support
        others = np.delete(sup, i, axis=1)
        self.k = dist.k
        self.g = game.margins[i]
        self.own = sup[:, i]
        self.opp_min = others.min(axis=1)
        ties = (others == self.opp_min[:, None]).sum(axis=1)
        self.w = dist.weights
        self.w_tie = dist.weights / (ties + 1)

    def payoffs(self, mask=None) -> np.ndarray:
        """Unnormalized ``E[u_i(p', x_-i); mask]`` for every deviation price p'."""
        m, w, wt = self.opp_min, self.w, self.w_tie
        if mask is not None:
            m, w, wt = m[mask], w[mask], wt[mask]
        mass = np.bincount(m, weights=w, minlength=self.k)
        at = np.bincount(m, weights=wt, minlength=self.k)
        above = np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])
        return self.g * (above + at)

    def realized(self) -> float:
        own, m = self.own, self.opp_min
        share = np.where(own < m, self.w, np.where(own == m, self.w_tie, 0.0))
        return math.fsum(self.g[own] * share)

    def recommendations(self) -> np.ndarray:
        return np.unique(self.own)


def _check_compatible(game: GameSpec, dist: JointDist):
    if dist.k != game.k or dist.n != game.n:
        raise ValueError(f"distribution is over (k={dist.k}, n={dist.n}) but game has "
                         f"(k={game.k}, n={game.n})")


def expected_utility(game: GameSpec, dist: JointDist, i: int) -> float:
    return _OpponentView(game, dist, i).realized()


def deviation_payoffs(game: GameSpec, dist: JointDist, i: int) -> np.ndarray:
    """``E[u_i(p, x_-i)]`` for every grid price p (constant deviations)."""
    return _OpponentView(game, dist, i).payoffs()


def constant_deviation_gain(game: GameSpec, dist: JointDist, i: int, p) -> float:
    idx = game.grid.index(p)
    view = _OpponentView(game, dist, i)
    return float(view.payoffs()[idx]) - view.realized()


def best_conditional_deviation(game: GameSpec, dist: JointDist, i: int, p) -> tuple[float, float]:
    """Best response to the conditional law of x_-i given x_i = p.

    Returns ``(price, gain)``, the gain measured against obeying p; ties
    in the argmax go to the lowest price.
    """
    idx = game.grid.index(p)
    view = _OpponentView(game, dist, i)
    mask = view.own == idx
    prob = view.w[mask].sum()
    if prob <= 0:
        raise DomainError(f"player {i + 1} is never recommended price {p}")
    v = view.payoffs(mask) / prob
    best = int(np.argmax(v))
    return game.grid.price(best), float(v[best] - v[idx])


class _RangeArgmax:
    """Sparse table answering "lowest index of the maximum of g on [lo, hi]" in O(1)."""

    def __init__(self, g: np.ndarray):
        self.g = g
        levels = [np.arange(len(g))]
        span = 1
        while 2 * span <= len(g):
            prev = levels[-1]
            a, b = prev[:-span], prev[span:]
            levels.append(np.where(g[b] > g[a], b, a))
            span *= 2
        self.levels = levels

    def query(self, lo: int, hi: int) -> int:
        j = int(hi - lo + 1).bit_length() - 1
        a, b = self.levels[j][lo], self.levels[j][hi - (1 << j) + 1]
        return int(b) if self.g[b] > self.g[a] else int(a)


def _conditional_best(g: np.ndarray, table: _RangeArgmax, m, w, wt) -> tuple[int, float]:
    """Best deviation against opponents' minima ``m`` (weights ``w``, tie weights ``wt``).

    Only the prices where the opponents' law changes need a look; between
    two of them the payoff is g times a constant, so a range argmax of g
    decides. Ties go to the lowest price.
    """
    k = len(g)
    vals, inv = np.unique(m, return_inverse=True)
    mass = np.bincount(inv, weights=w)
    tie = np.bincount(inv, weights=wt)
    above = np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])  # mass strictly above vals[j]
    best_p, best_v = -1, -math.inf

    def consider(p, v):
        nonlocal best_p, best_v
        if v > best_v or (v == best_v and p < best_p):
            best_p, best_v = p, v

    total = mass.sum()
    lo = 0
    for j, u in enumerate(vals.tolist()):
        if lo <= u - 1:  # prices strictly below u (and above the previous support point)
            c = total if j == 0 else above[j - 1]
            p = table.query(lo, u - 1) if c > 0 else lo
            consider(p, g[p] * c)
        consider(int(u), g[u] * (above[j] + tie[j]))
        lo = int(u) + 1
    if lo <= k - 1:
        consider(lo, 0.0)
    return best_p, best_v


def _own_payoff(g: np.ndarray, p: int, m, w, wt) -> float:
    return float(g[p] * (w[m > p].sum() + wt[m == p].sum()))


def _all_maps_gain(game: GameSpec, view: _OpponentView) -> tuple[float, dict]:
    total = []
    witness = {}
    table = _RangeArgmax(view.g)
    order = np.argsort(view.own, kind="stable")
    own_sorted = view.own[order]
    starts = np.flatnonzero(np.r_[True, own_sorted[1:] != own_sorted[:-1]])
    bounds = np.r_[starts, len(order)]
    for s, e in zip(bounds[:-1], bounds[1:]):
        rows = order[s:e]
        p = int(own_sorted[s])
        m, w, wt = view.opp_min[rows], view.w[rows], view.w_tie[rows]
        best, v_best = _conditional_best(view.g, table, m, w, wt)
        gain = v_best - _own_payoff(view.g, p, m, w, wt)
        if gain > 0:
            total.append(gain)
            witness[game.grid.price(p)] = game.grid.price(best)
    return math.fsum(total), witness


def _explicit_gain(game: GameSpec, view: _OpponentView, maps) -> tuple[float, int]:
    rec = view.recommendations()
    cond = {}
    for p in rec:
        cond[int(p)] = view.payoffs(view.own == p)
    best_gain, best_map = -math.inf, -1
    for j, phi in enumerate(maps):
        if len(phi) != game.k or min(phi) < 0 or max(phi) >= game.k:
            raise ValueError(f"deviation map {j} is not a map from the {game.k} prices to themselves")
        gain = math.fsum(cond[p][phi[p]] - cond[p][p] for p in cond)
        if gain > best_gain:
            best_gain, best_map = gain, j
    return best_gain, best_map


def verify(game: GameSpec, dist: JointDist, phi: Sequence[DeviationClass] | DeviationClass | str = CONSTANT,
           tol: float = DEFAULT_TOL) -> VerificationReport:
    """Check the Phi-equilibrium inequalities for every player.

    ``phi`` is one class per player (or a single class / alias such as
    ``"cce"`` / ``"ce"`` applied to everyone). For ``all_maps`` the
    reported gain is ``sum_p max(0, best conditional gain at p)``
    weighted by Pr[x_i = p], which equals the best swap-map gain.
    """
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    if isinstance(phi, str):
        phi = DeviationClass.parse(phi)
    if isinstance(phi, DeviationClass):
        phi = [phi] * game.n
    if len(phi) != game.n:
        raise ValueError(f"need one deviation class per player ({game.n}), got {len(phi)}")
    report = VerificationReport(tol=tol, classes=list(phi))
    for i, cls in enumerate(phi):
        view = _OpponentView(game, dist, i)
        eu = view.realized()
        if cls.kind == "constant_only":
            dev = view.payoffs()
            best = int(np.argmax(dev))
            gain, witness = float(dev[best]) - eu, game.grid.price(best)
        elif cls.kind == "all_maps":
            gain, witness = _all_maps_gain(game, view)
        else:
            gain, witness = _explicit_gain(game, view, cls.maps)
        report.players.append(PlayerReport(i, eu, gain, witness))
    return report


def symmetrize(game: GameSpec, dist: JointDist) -> JointDist:
    """Collapse every tuple to (min x, ..., min x).

    With symmetric costs this keeps total expected utility and maps CCEs
    to symmetric (diagonal) CCEs.
    """
    _check_compatible(game, dist)
    if not game.symmetric:
        raise DomainError("symmetrization needs identical marginal costs")
    return JointDist.from_diagonal(dist.min_price_distribution(), dist.n)


def total_expected_utility(game: GameSpec, dist: JointDist) -> float:
    return math.fsum(expected_utility(game, dist, i) for i in range(game.n))
