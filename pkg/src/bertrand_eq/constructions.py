"""Closed-form equilibrium distributions and utility bounds.

All index arithmetic uses 1-based "tick" numbers ``i`` for the price
``i / k``; the grid index of tick ``i`` is ``i - 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from .equilibrium import JointDist
from .game import DomainError, GameSpec, first_argmax

DEFAULT_LAMBDA = 1.0 / (2.0 * math.e ** 2)
DEFAULT_RATIO = math.exp(10)


def harmonic(n) -> float:
    """H_n = 1 + 1/2 + ... + 1/n (H_0 = 0)."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("harmonic numbers need n >= 0")
    out = digamma(n + 1.0) + np.euler_gamma
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------
# diagonal CCE with tail probabilities B / S_i
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class SymmetricCceParams:
    """Quantities behind the diagonal CCE built from a margin sequence.

    ``s[i - 1]`` is the margin at tick i and ``S`` its running maximum.
    ``tau[i - 1] = Pr[x >= i / k]`` (``tau`` has a trailing 0 for tick k+1).
    """

    lam: float
    s: np.ndarray
    S: np.ndarray
    s_max: float
    m: int
    B: float
    first_tick: int
    case: int
    i0: int | None
    tau: np.ndarray

    @property
    def point_probs(self) -> np.ndarray:
        """Probability of each grid index."""
        return self.tau[:-1] - self.tau[1:]


def symmetric_cce_params(margins: np.ndarray, cost_tick: int, lam: float = DEFAULT_LAMBDA) -> SymmetricCceParams:
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    s = np.asarray(margins, dtype=float)
    k = len(s)
    S = np.maximum.accumulate(s)
    m = first_argmax(s) + 1
    s_max = float(s[m - 1])
    B = lam * s_max
    first = min(cost_tick + 1, k)
    tau = np.zeros(k + 1)
    if s_max <= 0:
        tau[:first] = 1.0
        return SymmetricCceParams(lam, s, S, s_max, m, B, first, 0, None, tau)
    if s[first - 1] >= B:
        tau[:first] = 1.0
        return SymmetricCceParams(lam, s, S, s_max, m, B, first, 1, None, tau)
    i0 = int(np.argmax(S >= B)) + 1
    tau[: i0 - 1] = 1.0
    ticks = np.arange(i0, m + 1)
    tau[ticks - 1] = B / S[ticks - 1]
    return SymmetricCceParams(lam, s, S, s_max, m, B, first, 2, i0, tau)


def _require_symmetric(game: GameSpec):
    if not game.symmetric:
        raise DomainError(f"construction needs identical costs, got {game.costs}")


def cce_symmetric(game: GameSpec, lam: float | None = None) -> JointDist:
    """Diagonal CCE giving each of two players a constant fraction of the monopoly value.

    Case 1 puts all mass on c + 1/k; Case 2 spreads it so that the tail
    probability times the running-max margin stays at ``B = lam * s_max``.
    If no price has a positive margin the top-of-range point mass is returned.
    The equilibrium guarantee is for two players; for n > 2 the same
    diagonal law is returned but should be checked with ``verify``.
    """
    _require_symmetric(game)
    params = symmetric_cce_params(game.margins[0], game.cost_ticks[0], DEFAULT_LAMBDA if lam is None else lam)
    return JointDist.from_diagonal(params.point_probs, game.n)


# ---------------------------------------------------------------------
# harmonic-tail marginal and its Phi-CE
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class HarmonicMarginalParams:
    """Marginal over offsets j = M .. k0-1 with tail ``Pr[j' >= j] = min(1, M / j)``."""

    k0: int
    ratio: float
    M: int

    @classmethod
    def create(cls, k0: int, ratio: float) -> "HarmonicMarginalParams":
        if ratio <= 1:
            raise ValueError(f"ratio must exceed 1, got {ratio}")
        if k0 < 3:
            raise DomainError(f"need at least 3 prices above cost (k0 = {k0})")
        M = max(1, math.floor((k0 - 1) / ratio))
        return cls(k0, float(ratio), M)

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.M, self.k0)

    @property
    def p(self) -> np.ndarray:
        """``p[j]`` for j = 0..k0 (zero outside M..k0-1)."""
        M, k0 = self.M, self.k0
        p = np.zeros(k0 + 1)
        if M == k0 - 1:
            p[M] = 1.0
            return p
        p[M] = 1.0 / (M + 1)
        j = np.arange(M + 1, k0 - 1)
        p[j] = M / (j * (j + 1.0))
        p[k0 - 1] = M / (k0 - 1)
        return p

    @property
    def tail(self) -> np.ndarray:
        """``S[i] = sum_{j >= i} p[j]`` for i = 0..k0."""
        return np.cumsum(self.p[::-1])[::-1]

    @property
    def mean_offset(self) -> float:
        """E[j] = M (1 + H_{k0-1} - H_M)."""
        return self.M * self.sufficient_margin

    @property
    def sufficient_margin(self) -> float:
        """``1 + H_{k0-1} - H_M``; the undercut payoff bound holds once this is >= 8."""
        return 1.0 + harmonic(self.k0 - 1) - harmonic(self.M)


def _halving_joint(k: int, base_tick: int, hp: HarmonicMarginalParams) -> JointDist:
    """Player 1 at base + j; player 2 at base + j + 1 or base + floor(j/2), each w.p. 1/2."""
    j = hp.offsets
    w = hp.p[j] / 2
    t1 = base_tick + j
    hi = base_tick + j + 1
    lo = base_tick + j // 2
    if lo.min() < 1:
        raise DomainError("the halving price falls below the grid; increase k or lower the ratio")
    mapping: dict = {}
    for a, b, wt in zip(np.r_[t1, t1] - 1, np.r_[hi, lo] - 1, np.r_[w, w]):
        key = (int(a), int(b))
        mapping[key] = mapping.get(key, 0.0) + float(wt)
    return JointDist.from_mapping(k, 2, mapping, repr="dense2")


def phi_ce_symmetric(game: GameSpec, ratio: float = DEFAULT_RATIO) -> JointDist:
    """Duopoly distribution where player 1 has no profitable swap map and player 2 no profitable constant deviation.

    Only for constant demand. Player 1's offset above cost has tail
    probability ``min(1, M / j)``; player 2 either sits one tick above or
    at half of player 1's offset.
    """
    _require_symmetric(game)
    if game.n != 2:
        raise DomainError("this construction is for two players")
    if game.demand.kind != "constant":
        raise DomainError("this construction is defined for constant demand only")
    j = game.cost_ticks[0]
    hp = HarmonicMarginalParams.create(game.k - j, ratio)
    return _halving_joint(game.k, j, hp)


def harmonic_params(game: GameSpec, ratio: float = DEFAULT_RATIO) -> HarmonicMarginalParams:
    return HarmonicMarginalParams.create(game.k - game.cost_ticks[0], ratio)


def _asymmetric_harmonic(k: int, ratio: float) -> tuple[HarmonicMarginalParams, int]:
    if ratio <= 1:
        raise ValueError(f"ratio must exceed 1, got {ratio}")
    M = math.floor((k - 1) / ratio)
    if M < 1:
        raise DomainError(f"k = {k} is too small for ratio {ratio:g} (need (k-1)/ratio >= 1)")
    return HarmonicMarginalParams(k, float(ratio), M), M // 36


def phi_ce_asymmetric_v1(k: int, ratio: float = DEFAULT_RATIO) -> tuple[GameSpec, JointDist]:
    """Low-cost player 1 (cost 0) minimizes swap regret; player 2 has cost floor(M/36)/k."""
    hp, c2 = _asymmetric_harmonic(k, ratio)
    game = GameSpec(k, 2, (0, c2))
    return game, _halving_joint(k, 0, hp)


def phi_ce_asymmetric_v2(k: int, ratio: float = DEFAULT_RATIO) -> tuple[GameSpec, JointDist]:
    """High-cost player 1 (cost floor(M/36)/k) minimizes swap regret; player 2 has cost 0."""
    hp, c1 = _asymmetric_harmonic(k, ratio)
    game = GameSpec(k, 2, (c1, 0))
    return game, _halving_joint(k, 0, hp)


# ---------------------------------------------------------------------
# asymmetric-cost CCE
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class AsymmetricCceParams:
    lam1: float
    s1_max: float
    s2_max: float
    x0_tick: int
    lam0: float
    p0: float
    diagonal: SymmetricCceParams
    strict_first_condition: bool


def cce_asymmetric_params(game: GameSpec, lam1: float | None = None) -> AsymmetricCceParams:
    if game.n != 2:
        raise DomainError("this construction is for two players")
    k = game.k
    j1, j2 = game.cost_ticks
    if j1 >= j2:
        raise DomainError("player 1 must have the strictly lower cost")
    g1, g2 = game.margins
    s1_max, s2_max = float(g1.max()), float(g2.max())
    if s1_max <= 0 or s2_max <= 0:
        raise DomainError("both players need a price with positive margin")
    if lam1 is None:
        lam1 = min(max(s2_max / s1_max, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
    if not 0 < lam1 < 1:
        raise ValueError(f"lambda1 must lie in (0, 1), got {lam1}")
    e2 = math.e ** 2
    threshold = lam1 / (8 * e2) * s1_max
    first_strict = (1 / k) * game.demand_values[j1] < threshold
    if not s2_max >= lam1 * s1_max:
        raise DomainError("condition (b) fails: player 2's monopoly value is below lambda1 times player 1's")
    below = g1[: max(j2 - 1, 0)]
    if below.size == 0 or not below.max() >= lam1 / (4 * e2) * s1_max:
        raise DomainError("condition (c) fails: no price below player 2's cost earns player 1 "
                          "lambda1/(4e^2) of its monopoly value")
    # candidate ticks t with j1 < t < j2 - 1
    cand = np.arange(j1 + 1, j2 - 1)
    ok = cand[g1[cand - 1] >= threshold]
    if ok.size == 0:
        raise DomainError("condition (a) fails: no anchor price x0 below c2 - 1/k reaches the threshold")
    x0 = int(ok[0])
    lam0 = float(g1[x0 - 1]) / s1_max
    if lam0 > lam1 / (4 * e2):
        raise DomainError(f"condition (a) fails: the grid is too coarse, the anchor price {x0}/{k} "
                          f"already earns {lam0:.4g} > lambda1/(4e^2) of the monopoly value")
    diag = symmetric_cce_params(g2, j2)
    return AsymmetricCceParams(lam1, s1_max, s2_max, x0, lam0, 1.0 - lam0, diag, bool(first_strict))


def cce_asymmetric(game: GameSpec, lam1: float | None = None) -> JointDist:
    """CCE for costs c1 < c2 giving both players a constant share of their monopoly value.

    With probability ``p0`` the pair (x0, x0 + 1/k) is played, otherwise a
    diagonal distribution built from player 2's margins.
    """
    prm = cce_asymmetric_params(game, lam1)
    mapping = {(prm.x0_tick - 1, prm.x0_tick): prm.p0}
    q = prm.diagonal.point_probs * (1.0 - prm.p0)
    for idx in np.nonzero(q)[0]:
        key = (int(idx), int(idx))
        mapping[key] = mapping.get(key, 0.0) + float(q[idx])
    return JointDist.from_mapping(game.k, 2, mapping, repr="dense2")


# ---------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------
def _demand_just_above_cost(game: GameSpec) -> float:
    j = game.cost_ticks[0]
    return float(game.demand_values[min(j, game.k - 1)])


def cce_total_utility_bound(game: GameSpec) -> float:
    """Upper bound on total expected utility of any CCE with symmetric costs.

    ``4 f(c+1/k) / k + n (1-c) f(c+1/k) e^{1 - n/2}``. When c = 1 the price
    c + 1/k is off the grid; demand is then read at the top price and a
    warning is issued.
    """
    _require_symmetric(game)
    if game.k < 5:
        raise DomainError("the bound needs k >= 5")
    if game.cost_ticks[0] == game.k:
        warnings.warn("cost equals the top price; demand taken at the top grid point", RuntimeWarning, stacklevel=2)
    f = _demand_just_above_cost(game)
    c = game.costs[0]
    return 4 * f / game.k + game.n * (1 - c) * f * math.exp(1 - game.n / 2)


def ce_bound(game: GameSpec) -> tuple[float, float]:
    """Range of each player's utility in any CE of a symmetric-cost duopoly."""
    _require_symmetric(game)
    if game.n != 2:
        raise DomainError("the CE range is stated for two players")
    if game.cost_ticks[0] == game.k:
        return 0.0, 0.0
    return 0.0, _demand_just_above_cost(game) / game.k
