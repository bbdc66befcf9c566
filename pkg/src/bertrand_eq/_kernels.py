"""Compiled self-play loop for two full-information learners.

Hedge experts keep exact log-weights ``L`` and a normalized copy ``P``
that is updated multiplicatively every round (with a short Taylor series
for exp, since exponents are tiny) and rebuilt from ``L`` every
``RESYNC`` updates so rounding cannot accumulate.
"""

import math

import numba as nb
import numpy as np

HEDGE_SWAP = 0
REGRET_MATCHING = 1
RESYNC = 1024
TINY = 1e-280


@nb.njit(fastmath=True, cache=True, inline="always")
def _exp_taylor(x):
    # degree-10 Horner series; relative error < 1e-14 for |x| <= 0.25
    r = 1.0 + x / 10.0
    r = 1.0 + x / 9.0 * r
    r = 1.0 + x / 8.0 * r
    r = 1.0 + x / 7.0 * r
    r = 1.0 + x / 6.0 * r
    r = 1.0 + x / 5.0 * r
    r = 1.0 + x / 4.0 * r
    r = 1.0 + x / 3.0 * r
    r = 1.0 + x / 2.0 * r
    return 1.0 + x * r


@nb.njit(cache=True)
def _resync(L, P):
    k = L.shape[0]
    for i in range(k):
        m = L[i, 0]
        for a in range(1, k):
            if L[i, a] > m:
                m = L[i, a]
        s = 0.0
        for a in range(k):
            e = math.exp(L[i, a] - m)
            P[i, a] = e
            s += e
        for a in range(k):
            P[i, a] /= s


@nb.njit(fastmath=True, cache=True)
def _stationary(P, q, tmp, iters):
    k = P.shape[0]
    for a in range(k):
        q[a] = 1.0 / k
    for _ in range(iters):
        for a in range(k):
            tmp[a] = 0.0
        i = 0
        # four rows per sweep keeps tmp in registers longer
        while i + 4 <= k:
            q0, q1, q2, q3 = q[i], q[i + 1], q[i + 2], q[i + 3]
            r0, r1, r2, r3 = P[i], P[i + 1], P[i + 2], P[i + 3]
            for a in range(k):
                tmp[a] += q0 * r0[a] + q1 * r1[a] + q2 * r2[a] + q3 * r3[a]
            i += 4
        while i < k:
            qi = q[i]
            for a in range(k):
                tmp[a] += qi * P[i, a]
            i += 1
        s = 0.0
        for a in range(k):
            s += tmp[a]
        for a in range(k):
            q[a] = tmp[a] / s


@nb.njit(fastmath=True, cache=True)
def _hedge_update(L, P, q, u, eta, hi):
    # u[a] == 0 for a >= hi, so those weights only need renormalizing
    k = P.shape[0]
    umax = 0.0
    for a in range(hi):
        if abs(u[a]) > umax:
            umax = abs(u[a])
    for i in range(k):
        c = eta * q[i]
        if c == 0.0:
            continue
        Li = L[i]
        Pi = P[i]
        if c * umax <= 0.25:
            for a in range(hi):
                x = c * u[a]
                Li[a] += x
                Pi[a] *= _exp_taylor(x)
        else:
            for a in range(hi):
                x = c * u[a]
                Li[a] += x
                Pi[a] *= math.exp(x)
        s = 0.0
        for a in range(k):
            s += Pi[a]
        inv = 1.0 / s
        for a in range(k):
            v = Pi[a] * inv
            Pi[a] = v if v > TINY else 0.0


@nb.njit(cache=True)
def _rm_distribution(R, q):
    k = R.shape[0]
    s = 0.0
    for a in range(k):
        v = R[a] if R[a] > 0.0 else 0.0
        q[a] = v
        s += v
    if s <= 0.0:
        for a in range(k):
            q[a] = 1.0 / k
    else:
        for a in range(k):
            q[a] /= s


@nb.njit(cache=True)
def _sample(q, r):
    c = 0.0
    k = q.shape[0]
    for a in range(k):
        c += q[a]
        if r < c:
            return a
    return k - 1


@nb.njit(cache=True)
def run_chunk(t_begin, t_end, T, unif, g, fam, eta, t0, iters, L, P, Q, R, U, hi, pos, act, n_upd,
              counts, traj, thin):
    """Advance both learners over rounds ``t_begin .. t_end - 1``.

    ``unif[t - t_begin, i]`` is player i's uniform for round t. All state
    arrays are indexed by player first and are mutated in place.
    """
    k = g.shape[1]
    tmp = np.empty(k)
    u = np.empty(k)
    for t in range(t_begin, t_end):
        for i in range(2):
            if pos[i] == 0:
                if fam[i] == HEDGE_SWAP:
                    _stationary(P[i], Q[i], tmp, iters)
                else:
                    _rm_distribution(R[i], Q[i])
                act[i] = _sample(Q[i], unif[t - t_begin, i])
        a1 = act[0]
        a2 = act[1]
        counts[a1, a2] += 1
        if thin > 0 and t % thin == 0:
            traj[t // thin, 0] = a1
            traj[t // thin, 1] = a2
        for i in range(2):
            opp = act[1 - i]
            for a in range(opp):
                U[i, a] += g[i, a]
            U[i, opp] += 0.5 * g[i, opp]
            if opp + 1 > hi[i]:
                hi[i] = opp + 1
            pos[i] += 1
            if pos[i] == t0[i] or t == T - 1:
                n = pos[i]
                for a in range(k):
                    u[a] = U[i, a] / n
                    U[i, a] = 0.0
                if fam[i] == HEDGE_SWAP:
                    _hedge_update(L[i], P[i], Q[i], u, eta[i], hi[i])
                    n_upd[i] += 1
                    if n_upd[i] % RESYNC == 0:
                        _resync(L[i], P[i])
                else:
                    base = u[act[i]]
                    for a in range(k):
                        R[i, a] += u[a] - base
                hi[i] = 0
                pos[i] = 0
