"""Maximum-utility CCE / CE via linear programming.

Every program here maximizes a linear objective over a probability
simplex cut by incentive constraints. ``solve_lp`` wraps HiGHS through
``scipy.optimize.linprog`` and certifies the answer with the returned
dual: the primal infeasibility and the primal/dual gap are both reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .equilibrium import JointDist
from .game import DomainError, GameSpec, duopoly_utility_matrices

OBJECTIVES = ("player1", "player2", "sum")


class SolverError(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """maximize ``c @ x`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""

    c: np.ndarray
    A_ub: np.ndarray | sp.spmatrix | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | sp.spmatrix | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.ndim != 1 or not np.all(np.isfinite(self.c)):
            raise ValueError("objective must be a finite 1-d vector")
        n = self.c.size
        for A, b, name in ((self.A_ub, self.b_ub, "inequality"), (self.A_eq, self.b_eq, "equality")):
            if (A is None) != (b is None):
                raise ValueError(f"{name} block needs both a matrix and a right-hand side")
            if A is None:
                continue
            if A.ndim != 2 or A.shape[1] != n or A.shape[0] != np.size(b):
                raise ValueError(f"{name} block has shape {A.shape}, expected (len(b), {n})")
            data = A.data if sp.issparse(A) else A
            if not (np.all(np.isfinite(data)) and np.all(np.isfinite(b))):
                raise ValueError(f"{name} block has non-finite entries")

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    value: float | None
    x: np.ndarray | None
    primal_violation: float = math.nan
    dual_gap: float = math.nan


def _residual(A, x, b):
    if A is None:
        return np.zeros(0)
    return np.asarray(A @ x).ravel() - b


def solve_lp(lp: LinearProgram, tol: float = 1e-9) -> LPResult:
    res = linprog(
        -lp.c, A_ub=lp.A_ub, b_ub=lp.b_ub, A_eq=lp.A_eq, b_eq=lp.b_eq,
        bounds=(0, None), method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return LPResult("infeasible", None, None)
    if res.status == 3:
        return LPResult("unbounded", None, None)
    if res.status != 0:
        raise SolverError(f"HiGHS stopped with status {res.status}: {res.message}")
    x = res.x
    viol = max(
        float(np.max(_residual(lp.A_ub, x, lp.b_ub), initial=0.0)),
        float(np.max(np.abs(_residual(lp.A_eq, x, lp.b_eq)), initial=0.0)),
        float(np.max(-x, initial=0.0)),
    )
    # dual objective of the minimization form; marginals are d(obj)/d(rhs)
    dual = 0.0
    if lp.A_ub is not None:
        dual += float(lp.b_ub @ res.ineqlin.marginals)
    if lp.A_eq is not None:
        dual += float(lp.b_eq @ res.eqlin.marginals)
    primal = float(lp.c @ x)
    gap = abs(-dual - primal)
    if viol > tol or gap > tol * max(1.0, abs(primal)):
        raise SolverError(f"solution not certified: primal violation {viol:.3g}, duality gap {gap:.3g}")
    return LPResult("optimal", primal, x, viol, gap)


def _clean_weights(x: np.ndarray) -> np.ndarray:
    # solver noise: tiny negatives and a sum off by ~1e-12
    w = np.where(x < 1e-13, 0.0, x)
    return w / math.fsum(w)


def _require_optimal(res: LPResult, what: str) -> LPResult:
    if res.status != "optimal":
        raise SolverError(f"{what}: LP reported {res.status}, but a pure equilibrium is always feasible")
    return res


# ---------------------------------------------------------------------
def symmetric_cce_program(game: GameSpec, n: int | None = None) -> LinearProgram:
    """Diagonal q(p): maximize per-player utility subject to constant-deviation constraints."""
    if not game.symmetric:
        raise DomainError("symmetric CCE program needs identical costs")
    n = game.n if n is None else n
    g = game.margins[0]
    k = game.k
    a = np.arange(k)[:, None]
    p = np.arange(k)[None, :]
    dev = np.where(a < p, g[:, None], np.where(a == p, g[:, None] / n, 0.0))
    A_ub = dev - g[None, :] / n
    return LinearProgram(g / n, A_ub, np.zeros(k), np.ones((1, k)), np.ones(1))


def lp_best_symmetric_cce(game: GameSpec, n: int | None = None) -> tuple[JointDist, float]:
    """Best per-player utility over symmetric CCEs with ``n`` players (default ``game.n``)."""
    n = game.n if n is None else n
    if n < 2:
        raise ValueError("need at least two players")
    res = _require_optimal(solve_lp(symmetric_cce_program(game, n)), "symmetric CCE")
    return JointDist.from_diagonal(_clean_weights(res.x), n), res.value


def _duopoly_objective(game: GameSpec, objective: str) -> np.ndarray:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    U1, U2 = duopoly_utility_matrices(game)
    return {"player1": U1, "player2": U2, "sum": U1 + U2}[objective].ravel()


def _cce_rows(game: GameSpec) -> np.ndarray:
    """(2k, k^2) rows: gain of each constant deviation for each player."""
    U1, U2 = duopoly_utility_matrices(game)
    # player 1 deviating to a: sum_{x1,x2} q(x1,x2) (U1[a,x2] - U1[x1,x2])
    r1 = U1[:, None, :] - U1[None, :, :]
    # player 2 deviating to b: sum q(x1,x2) (U2[x1,b] - U2[x1,x2])
    r2 = U2.T[:, :, None] - U2[None, :, :]
    k = game.k
    return np.concatenate([r1.reshape(k, k * k), r2.reshape(k, k * k)])


def cce_duopoly_program(game: GameSpec, objective: str = "sum") -> LinearProgram:
    if game.n != 2:
        raise DomainError("duopoly program needs n = 2")
    k = game.k
    rows = _cce_rows(game)
    return LinearProgram(_duopoly_objective(game, objective), rows, np.zeros(2 * k),
                         np.ones((1, k * k)), np.ones(1))


def ce_duopoly_program(game: GameSpec, objective: str = "sum") -> LinearProgram:
    if game.n != 2:
        raise DomainError("duopoly program needs n = 2")
    k = game.k
    U1, U2 = duopoly_utility_matrices(game)
    data, ri, ci = [], [], []
    row = 0
    for p in range(k):
        for alt in range(k):
            if alt == p:
                continue
            # player 1 told p, switching to alt; variables q(p, b)
            data.append(U1[alt, :] - U1[p, :])
            ri.append(np.full(k, row))
            ci.append(p * k + np.arange(k))
            # player 2 told p, switching to alt; variables q(a, p)
            data.append(U2[:, alt] - U2[:, p])
            ri.append(np.full(k, row + 1))
            ci.append(np.arange(k) * k + p)
            row += 2
    swap = sp.csr_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))), shape=(row, k * k))
    A_ub = sp.vstack([sp.csr_matrix(_cce_rows(game)), swap]).tocsr()
    return LinearProgram(_duopoly_objective(game, objective), A_ub, np.zeros(A_ub.shape[0]),
                         sp.csr_matrix(np.ones((1, k * k))), np.ones(1))


def _duopoly_solution(game: GameSpec, res: LPResult) -> JointDist:
    return JointDist.from_dense2(_clean_weights(res.x).reshape(game.k, game.k))


def lp_best_cce_duopoly(game: GameSpec, objective: str = "sum") -> tuple[JointDist, float]:
    res = _require_optimal(solve_lp(cce_duopoly_program(game, objective)), "duopoly CCE")
    return _duopoly_solution(game, res), res.value


def lp_best_ce_duopoly(game: GameSpec, objective: str = "sum") -> tuple[JointDist, float]:
    res = _require_optimal(solve_lp(ce_duopoly_program(game, objective)), "duopoly CE")
    return _duopoly_solution(game, res), res.value
