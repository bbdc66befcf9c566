"""Brute-force reference implementations used only by the tests.

Nothing here imports the package's deviation or LP code: utilities are
recomputed from the definition (exact rationals where possible), swap
maps are enumerated one by one and LPs are solved by listing bases.
"""

import itertools
import math
from fractions import Fraction

import numpy as np


def demand_exact(kind, k):
    """Demand at grid ticks 1..k as Fractions (or floats for exponential)."""
    xs = [Fraction(i, k) for i in range(1, k + 1)]
    if kind == "constant":
        return [Fraction(1)] * k
    if kind == "linear":
        return [1 - x for x in xs]
    if kind == "quadratic":
        return [1 - x * x for x in xs]
    return [math.exp(-i / k) for i in range(1, k + 1)]


def util(k, cost_ticks, f, i, x):
    """u_i at index tuple x (0-based indices, tick = idx + 1)."""
    lo = min(x)
    if x[i] != lo:
        return 0
    ties = sum(1 for v in x if v == lo)
    return (Fraction(lo + 1 - cost_ticks[i], k) * f[lo]) / ties


def expected(k, cost_ticks, f, dist_map, i):
    return sum(Fraction(w) * util(k, cost_ticks, f, i, x) for x, w in dist_map.items())


def best_map_gain(k, cost_ticks, f, dist_map, i):
    """max over all k^k maps phi of E[u_i(phi(x_i), x_-i) - u_i(x)]."""
    best = None
    for phi in itertools.product(range(k), repeat=k):
        g = 0
        for x, w in dist_map.items():
            y = list(x)
            y[i] = phi[x[i]]
            g += w * (util(k, cost_ticks, f, i, y) - util(k, cost_ticks, f, i, x))
        best = g if best is None or g > best else best
    return best


def best_constant_gain(k, cost_ticks, f, dist_map, i):
    gains = []
    for p in range(k):
        g = 0
        for x, w in dist_map.items():
            y = list(x)
            y[i] = p
            g += w * (util(k, cost_ticks, f, i, y) - util(k, cost_ticks, f, i, x))
        gains.append(g)
    return max(gains)


def harmonic_sum(n):
    return math.fsum(1.0 / i for i in range(1, n + 1))


def lp_by_vertices(c, A_ub, b_ub, A_eq, b_eq, batch=20000):
    """max c x over {A_ub x <= b_ub, A_eq x = b_eq, x >= 0} by enumerating bases.

    Adds one slack per inequality, then solves every square column subset
    (in batches) and keeps the best feasible basic solution. Only
    sensible for a few dozen columns.
    """
    A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
    A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    m_ub, n = A_ub.shape
    A = np.block([[A_ub, np.eye(m_ub)], [A_eq, np.zeros((A_eq.shape[0], m_ub))]])
    b = np.concatenate([b_ub, b_eq])
    cost = np.concatenate([c, np.zeros(m_ub)])
    m = A.shape[0]
    best = -math.inf
    combos = itertools.combinations(range(A.shape[1]), m)
    while True:
        cols = np.array(list(itertools.islice(combos, batch)))
        if cols.size == 0:
            return best
        B = A[:, cols].transpose(1, 0, 2)
        ok = np.abs(np.linalg.det(B)) > 1e-10
        if not ok.any():
            continue
        z = np.linalg.solve(B[ok], np.broadcast_to(b, (int(ok.sum()), m))[..., None])[..., 0]
        feasible = z.min(axis=1) >= -1e-11
        if feasible.any():
            vals = (cost[cols[ok]] * z).sum(axis=1)[feasible]
            best = max(best, float(vals.max()))


def duopoly_program_from_definition(k, cost_ticks, f, objective, kind):
    """Duopoly CCE ("cce") or CE ("ce") program written straight from the inequalities.

    Variable order is q(x1, x2) with x1 major. CE rows compare obeying a
    recommendation with switching to one alternative; CCE rows compare
    the joint law with one constant price.
    """
    pairs = [(a, b) for a in range(k) for b in range(k)]
    u = [[float(util(k, cost_ticks, f, i, x)) for x in pairs] for i in range(2)]
    weights = {"player1": (1, 0), "player2": (0, 1), "sum": (1, 1)}[objective]
    c = np.array([weights[0] * u[0][j] + weights[1] * u[1][j] for j in range(len(pairs))])
    rows = []
    for i in range(2):
        if kind == "cce":
            for p in range(k):
                row = []
                for x in pairs:
                    y = list(x)
                    y[i] = p
                    row.append(float(util(k, cost_ticks, f, i, y) - util(k, cost_ticks, f, i, x)))
                rows.append(row)
        else:
            for rec in range(k):
                for alt in range(k):
                    if alt == rec:
                        continue
                    row = []
                    for x in pairs:
                        if x[i] != rec:
                            row.append(0.0)
                            continue
                        y = list(x)
                        y[i] = alt
                        row.append(float(util(k, cost_ticks, f, i, y) - util(k, cost_ticks, f, i, x)))
                    rows.append(row)
    A_ub = np.array(rows)
    return c, A_ub, np.zeros(len(rows)), np.ones((1, len(pairs))), np.ones(1)


def symmetric_program_from_definition(k, n, cost_tick, f):
    """Diagonal q(p) program for n players from the utility definition."""
    ticks = (cost_tick,) * n
    own = [float(util(k, ticks, f, 0, (p,) * n)) for p in range(k)]
    rows = []
    for a in range(k):
        rows.append([float(util(k, ticks, f, 0, (a,) + (p,) * (n - 1))) - own[p] for p in range(k)])
    return np.array(own), np.array(rows), np.zeros(k), np.ones((1, k)), np.ones(1)
