"""Parameter sweeps and multi-seed simulations behind the command line."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .equilibrium import expected_utility, verify
from .game import GameSpec, monopoly_value, snap_cost
from .learners import LearnerConfig, SimResult, eta_mode_configs, simulate
from .lp import lp_best_cce_duopoly, lp_best_symmetric_cce

SWEEP_KINDS = ("ratio_vs_k", "ratio_vs_n", "asym_vs_c2")


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def pmap(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Ordered map, in a process pool when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


# ---------------------------------------------------------------------
# LP sweeps
# ---------------------------------------------------------------------
SYM_HEADER = ["k", "n", "demand", "cost", "objective", "value", "monopoly", "ratio", "cce_gain"]
ASYM_HEADER = ["c2", "k", "demand", "c1", "objective", "value", "value_p1", "value_p2",
               "monopoly_p1", "monopoly_p2", "ratio_p1", "ratio_p2", "cce_gain"]


@dataclass(frozen=True)
class SymmetricPoint:
    k: int
    n: int
    demand: str
    cost: float


def _symmetric_point(pt: SymmetricPoint) -> list:
    game = GameSpec.create(pt.k, pt.n, snap_cost(pt.cost, pt.k), pt.demand)
    try:
        dist, value = lp_best_symmetric_cce(game)
    except Exception as exc:  # identify the failing point, then re-raise
        raise RuntimeError(f"symmetric CCE LP failed at k={pt.k}, n={pt.n}, {pt.demand}, c={pt.cost}: {exc}") from exc
    mono = monopoly_value(game, 0)
    gain = verify(game, dist, "cce").worst_gain
    return [pt.k, pt.n, pt.demand, game.costs[0], "per_player", value, mono,
            value / mono if mono > 0 else float("nan"), gain]


def sweep_ratio_vs_k(ks, demand="constant", cost=0.0, n=2, workers=1) -> list[list]:
    return pmap(_symmetric_point, [SymmetricPoint(int(k), n, demand, cost) for k in ks], workers)


def sweep_ratio_vs_n(ns, demand="constant", cost=0.0, k=100, workers=1) -> list[list]:
    return pmap(_symmetric_point, [SymmetricPoint(k, int(n), demand, cost) for n in ns], workers)


@dataclass(frozen=True)
class AsymPoint:
    k: int
    demand: str
    c1: float
    c2: float
    objective: str


def _asym_point(pt: AsymPoint) -> list:
    game = GameSpec.create(pt.k, 2, [snap_cost(pt.c1, pt.k), snap_cost(pt.c2, pt.k)], pt.demand)
    try:
        dist, value = lp_best_cce_duopoly(game, pt.objective)
    except Exception as exc:
        raise RuntimeError(f"duopoly CCE LP failed at c2={pt.c2}, objective {pt.objective}: {exc}") from exc
    u = [expected_utility(game, dist, i) for i in range(2)]
    mono = [monopoly_value(game, i) for i in range(2)]
    ratio = [ui / m if m > 0 else float("nan") for ui, m in zip(u, mono)]
    gain = verify(game, dist, "cce").worst_gain
    return [game.costs[1], pt.k, pt.demand, game.costs[0], pt.objective, value, *u, *mono, *ratio, gain]


def sweep_asym_vs_c2(c2s, objective="player1", demand="constant", k=100, c1=0.0, workers=1) -> list[list]:
    return pmap(_asym_point, [AsymPoint(k, demand, c1, float(c2), objective) for c2 in c2s], workers)


def expand_range(spec) -> list:
    """``[a, b]`` / ``{"start", "stop", "step"}`` (inclusive stop) / explicit list."""
    if isinstance(spec, dict):
        start, stop, step = spec["start"], spec["stop"], spec.get("step", 1)
        if step <= 0:
            raise ValueError("range step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + i * step for i in range(count)]
        return [int(v) for v in vals] if all(isinstance(x, int) for x in (start, stop, step)) \
            else [round(v, 12) for v in vals]
    vals = list(spec)
    if not vals:
        raise ValueError("empty sweep range")
    return vals


def run_sweep(cfg: dict) -> tuple[list[str], list[list]]:
    kind = cfg.get("sweep")
    if kind not in SWEEP_KINDS:
        raise ValueError(f"sweep must be one of {SWEEP_KINDS}, got {kind!r}")
    workers = int(cfg.get("workers", 1))
    demands = cfg.get("demands", [cfg.get("demand", "constant")])
    rows = []
    if kind == "ratio_vs_k":
        ks = expand_range(cfg.get("k_range", {"start": 10, "stop": 100}))
        for d in demands:
            for c in cfg.get("costs", [cfg.get("cost", 0.0)]):
                rows += sweep_ratio_vs_k(ks, d, c, int(cfg.get("n", 2)), workers)
        return SYM_HEADER, rows
    if kind == "ratio_vs_n":
        ns = expand_range(cfg.get("n_range", {"start": 2, "stop": 10}))
        for d in demands:
            for c in cfg.get("costs", [cfg.get("cost", 0.0)]):
                rows += sweep_ratio_vs_n(ns, d, c, int(cfg.get("k", 100)), workers)
        return SYM_HEADER, rows
    c2s = expand_range(cfg.get("c2_range", {"start": 0.0, "stop": 0.98, "step": 0.049}))
    for d in demands:
        for obj in cfg.get("objectives", [cfg.get("objective", "player1")]):
            rows += sweep_asym_vs_c2(c2s, obj, d, int(cfg.get("k", 100)), float(cfg.get("c1", 0.0)), workers)
    return ASYM_HEADER, rows


# ---------------------------------------------------------------------
# learning simulations
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class SimJob:
    game: dict
    cfg1: LearnerConfig
    cfg2: LearnerConfig
    T: int
    seed: int


def _run_job(job: SimJob) -> SimResult:
    return simulate(GameSpec.from_dict(job.game), job.cfg1, job.cfg2, job.T, job.seed)


def learner_configs(cfg: dict) -> tuple[LearnerConfig, LearnerConfig]:
    """From ``{"family", "eta_mode", "t0": [t1, t2], "station_iters"}`` or explicit ``learners``."""
    if "learners" in cfg:
        l1, l2 = cfg["learners"]
        return LearnerConfig.from_dict(l1), LearnerConfig.from_dict(l2)
    t0 = cfg.get("t0", [1, 1])
    if isinstance(t0, int):
        t0 = [t0, t0]
    return eta_mode_configs(cfg.get("eta_mode", "eta_base"), cfg.get("family", "hedge_swap"), tuple(t0),
                            int(cfg.get("station_iters", 20)))


def run_simulations(game: GameSpec, cfg1: LearnerConfig, cfg2: LearnerConfig, T: int,
                    seeds: Sequence[int], workers: int = 1) -> list[SimResult]:
    jobs = [SimJob(game.to_dict(), cfg1, cfg2, int(T), int(s)) for s in seeds]
    return pmap(_run_job, jobs, workers)


def modal_transaction_price(results: Sequence[SimResult]) -> float:
    total = np.sum([r.transaction_hist for r in results], axis=0)
    return (int(np.argmax(total)) + 1) / results[0].k
