"""Discrete Bertrand pricing game.

Prices live on the grid {1/k, 2/k, ..., 1}. Internally every price is a
0-based grid index ``idx`` with value ``(idx + 1) / k``; costs are integer
"ticks" ``j`` with value ``j / k`` (``j = 0`` is allowed). Ties are always
detected on indices, never on floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

DEMAND_KINDS = ("constant", "linear", "quadratic", "exponential", "table")


class DomainError(ValueError):
    """A well-formed request whose mathematical preconditions do not hold."""


@dataclass(frozen=True)
class PriceGrid:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"grid resolution must be a positive integer, got {self.k!r}")

    @cached_property
    def prices(self) -> np.ndarray:
        return np.arange(1, self.k + 1, dtype=float) / self.k

    def index(self, price) -> int:
        """Grid index of ``price``; raises ``ValueError`` when off-grid."""
        scaled = float(price) * self.k
        tick = round(scaled)
        if tick < 1 or tick > self.k or abs(scaled - tick) > 1e-9 * max(1.0, self.k):
            raise ValueError(f"price {price!r} is not on the grid 1/{self.k}, ..., 1")
        return tick - 1

    def price(self, idx: int) -> float:
        return (idx + 1) / self.k

    def __len__(self):
        return self.k


@dataclass(frozen=True)
class DemandFunction:
    kind: str = "constant"
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in DEMAND_KINDS:
            raise ValueError(f"unknown demand kind {self.kind!r}; expected one of {DEMAND_KINDS}")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table demand needs a table of values")
            vals = np.asarray(self.table, dtype=float)
            if np.any(vals < 0) or np.any(vals > 1):
                raise ValueError("demand values must lie in [0, 1]")
            if np.any(np.diff(vals) > 0):
                raise ValueError("demand table must be non-increasing in price")
            object.__setattr__(self, "table", tuple(float(v) for v in vals))

    def values(self, grid: PriceGrid) -> np.ndarray:
        x = grid.prices
        if self.kind == "constant":
            return np.ones_like(x)
        if self.kind == "linear":
            return 1.0 - x
        if self.kind == "quadratic":
            return 1.0 - x * x
        if self.kind == "exponential":
            return np.exp(-x)
        if len(self.table) != grid.k:
            raise ValueError(f"demand table has {len(self.table)} entries, grid has {grid.k}")
        return np.array(self.table)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.table is not None:
            d["table"] = list(self.table)
        return d


def cost_tick(cost, k: int) -> int:
    """Integer tick ``j`` with ``cost == j / k``; raises if not representable."""
    scaled = float(cost) * k
    j = round(scaled)
    if j < 0 or j > k or abs(scaled - j) > 1e-9 * max(1.0, k):
        raise ValueError(f"cost {cost!r} is not of the form j/{k} with 0 <= j <= {k}")
    return j


def snap_cost(cost, k: int) -> float:
    """Largest cost j/k not exceeding ``cost`` (for sweeps whose cost is off-grid at some k)."""
    if not 0 <= cost <= 1:
        raise ValueError(f"cost {cost!r} outside [0, 1]")
    return (int(cost * k + 1e-9)) / k


@dataclass(frozen=True)
class GameSpec:
    """An n-player discrete Bertrand game.

    ``cost_ticks[i]`` is player i's marginal cost times ``k``.
    """

    k: int
    n: int
    cost_ticks: tuple
    demand: DemandFunction = field(default_factory=DemandFunction)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a Bertrand game needs at least two players")
        if len(self.cost_ticks) != self.n:
            raise ValueError(f"expected {self.n} costs, got {len(self.cost_ticks)}")
        ticks = tuple(int(j) for j in self.cost_ticks)
        if any(j < 0 or j > self.k for j in ticks):
            raise ValueError("cost ticks must lie in 0..k")
        object.__setattr__(self, "cost_ticks", ticks)
        if self.demand.kind == "table" and len(self.demand.table) != self.k:
            raise ValueError(f"demand table has {len(self.demand.table)} entries, grid has {self.k}")

    @classmethod
    def create(cls, k: int, n: int = 2, costs: Sequence[float] | float = 0.0, demand="constant") -> "GameSpec":
        """Build a game from float costs (each must equal j/k exactly)."""
        if np.isscalar(costs):
            costs = [costs] * n
        if isinstance(demand, str):
            demand = DemandFunction(demand)
        elif isinstance(demand, dict):
            demand = DemandFunction(demand["kind"], demand.get("table"))
        return cls(k, n, tuple(cost_tick(c, k) for c in costs), demand)

    @cached_property
    def grid(self) -> PriceGrid:
        return PriceGrid(self.k)

    @property
    def costs(self) -> tuple:
        return tuple(j / self.k for j in self.cost_ticks)

    @property
    def symmetric(self) -> bool:
        return len(set(self.cost_ticks)) == 1

    @cached_property
    def demand_values(self) -> np.ndarray:
        return self.demand.values(self.grid)

    @cached_property
    def margins(self) -> np.ndarray:
        """``margins[i, idx] = (p_idx - c_i) f(p_idx)`` as an (n, k) array."""
        ticks = np.arange(1, self.k + 1)
        out = np.empty((self.n, self.k))
        for i, j in enumerate(self.cost_ticks):
            out[i] = (ticks - j) / self.k * self.demand_values
        out.setflags(write=False)
        return out

    def with_costs(self, costs) -> "GameSpec":
        return GameSpec.create(self.k, self.n, costs, self.demand)

    def to_dict(self) -> dict:
        return {"k": self.k, "n": self.n, "costs": list(self.costs), "demand": self.demand.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "GameSpec":
        n = d.get("n", 2)
        return cls.create(d["k"], n, d.get("costs", 0.0), d.get("demand", "constant"))


def margin(game: GameSpec, i: int, p) -> float:
    """Per-unit profit times demand, ``(p - c_i) f(p)``; negative below cost."""
    return float(game.margins[i, game.grid.index(p)])


def utility_idx(game: GameSpec, i: int, x: Sequence[int]) -> float:
    """Utility of player ``i`` at the index tuple ``x``."""
    lo = min(x)
    if x[i] != lo:
        return 0.0
    ties = sum(1 for xj in x if xj == lo)
    return float(game.margins[i, lo]) / ties


def utility(game: GameSpec, i: int, x: Sequence) -> float:
    if len(x) != game.n:
        raise ValueError(f"price tuple has {len(x)} entries for a {game.n}-player game")
    return utility_idx(game, i, [game.grid.index(p) for p in x])


def transaction_price(x: Sequence):
    if len(x) == 0:
        raise ValueError("empty price tuple")
    return min(x)


def first_argmax(values: np.ndarray, rel: float = 1e-12) -> int:
    """Lowest index whose value is within ``rel`` (relative) of the maximum.

    Mathematically tied margins such as (1/3)(2/3) and (2/3)(1/3) can
    differ in the last bit; the window keeps the tie-break on the lowest price.
    """
    top = values.max()
    return int(np.argmax(values >= top - rel * max(1.0, abs(top))))


def monopoly_optimum(game: GameSpec, i: int) -> tuple[float, float]:
    """Best single-seller price and value; ties go to the lowest price."""
    g = game.margins[i]
    idx = first_argmax(g)
    return game.grid.price(idx), float(g[idx])


def monopoly_value(game: GameSpec, i: int) -> float:
    return float(game.margins[i].max())


def duopoly_utility_matrices(game: GameSpec) -> tuple[np.ndarray, np.ndarray]:
    """``(U1, U2)`` with ``U1[a, b] = u_1(a, b)`` over index pairs."""
    if game.n != 2:
        raise ValueError("duopoly utility matrices need n = 2")
    k = game.k
    a = np.arange(k)[:, None]
    b = np.arange(k)[None, :]
    g1, g2 = game.margins
    U1 = np.where(a < b, g1[:, None], np.where(a == b, g1[:, None] / 2, 0.0))
    U2 = np.where(b < a, g2[None, :], np.where(a == b, g2[None, :] / 2, 0.0))
    return U1, U2

