"""Command-line front end.

    bertrand-eq construct     --name cce_symmetric --k 100 --out out/
    bertrand-eq verify        out/cce_symmetric.json --phi cce
    bertrand-eq sweep-fig1    --config configs/fig1a_desk.json --out out/
    bertrand-eq simulate-fig2 --config configs/fig2a_desk.json --out out/
    bertrand-eq symmetrize    dist.json --out out/
    bertrand-eq best-cce      --k 20 --costs 0,0.5 --objective player1 --out out/
    bertrand-eq best-ce       --k 20 --costs 0,0.5 --objective player2 --out out/

Exit status: 0 on success (or a passing verification), 1 when a
verification fails, 2 on bad input or unmet preconditions.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

from . import constructions as C
from .equilibrium import DeviationClass, JointDist, symmetrize, total_expected_utility, verify
from .experiments import learner_configs, modal_transaction_price, run_simulations, run_sweep, write_csv
from .game import GameSpec
from .learners import write_sim_outputs
from .lp import OBJECTIVES, lp_best_ce_duopoly, lp_best_cce_duopoly

log = logging.getLogger("bertrand_eq")

CONSTRUCTIONS = ("cce_symmetric", "phi_ce_symmetric", "cce_asymmetric", "phi_ce_asymmetric_v1",
                 "phi_ce_asymmetric_v2")
# deviation classes each construction is meant to satisfy
ADVERTISED_PHI = {
    "cce_symmetric": "cce",
    "cce_asymmetric": "cce",
    "phi_ce_symmetric": "all_maps,constant_only",
    "phi_ce_asymmetric_v1": "all_maps,constant_only",
    "phi_ce_asymmetric_v2": "all_maps,constant_only",
}


class InputError(Exception):
    pass


# ---------------------------------------------------------------------
def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError(f"config {path} must hold a JSON object")
    return cfg


def _parse_costs(text):
    if text is None:
        return None
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise InputError(f"costs must be comma-separated numbers, got {text!r}") from exc
    return vals[0] if len(vals) == 1 else vals


def _game_from(cfg: dict, args, k=None, n=None) -> GameSpec:
    g = dict(cfg.get("game", {}))
    for key in ("k", "n"):
        if getattr(args, key, None) is not None:
            g[key] = getattr(args, key)
    if k is not None:
        g.setdefault("k", k)
    if n is not None:
        g.setdefault("n", n)
    costs = _parse_costs(getattr(args, "costs", None))
    if costs is not None:
        g["costs"] = costs
    if getattr(args, "demand", None):
        g["demand"] = args.demand
    if "k" not in g:
        raise InputError("game needs a grid size k (config 'game.k' or --k)")
    return GameSpec.from_dict(g)


def _parse_phi(text: str, n: int) -> list:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise InputError(f"--phi needs one class or {n} comma-separated classes")
    return [DeviationClass.parse(p) for p in parts]


def _out_dir(args) -> Path:
    if not args.out:
        raise InputError("--out <dir> is required for this command")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _dist_file(dist: JointDist, game: GameSpec) -> dict:
    d = dist.to_json_dict()
    d["game"] = game.to_dict()
    return d


def _load_dist(path) -> tuple[JointDist, dict]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
        return JointDist.from_json_dict(raw), raw
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read distribution {path}: {exc}") from exc


# ---------------------------------------------------------------------
def cmd_construct(args) -> int:
    cfg = _load_config(args.config)
    name = args.name or cfg.get("construction")
    if name not in CONSTRUCTIONS:
        raise InputError(f"construction must be one of {CONSTRUCTIONS}, got {name!r}")
    params = dict(cfg.get("params", {}))
    if args.ratio is not None:
        params["ratio"] = args.ratio
    if args.log_ratio is not None:
        params["log_ratio"] = args.log_ratio
    if args.lam is not None:
        params["lam"] = args.lam
    ratio = math.exp(params["log_ratio"]) if "log_ratio" in params else params.get("ratio", C.DEFAULT_RATIO)
    if name.startswith("phi_ce_asymmetric"):
        k = args.k or cfg.get("game", {}).get("k")
        if k is None:
            raise InputError("asymmetric constructions need --k")
        game, dist = getattr(C, name)(int(k), ratio)
    else:
        game = _game_from(cfg, args)
        if name == "cce_symmetric":
            dist = C.cce_symmetric(game, params.get("lam"))
        elif name == "phi_ce_symmetric":
            dist = C.phi_ce_symmetric(game, ratio)
        else:
            dist = C.cce_asymmetric(game, params.get("lam1", params.get("lam")))
    report = verify(game, dist, _parse_phi(ADVERTISED_PHI[name], game.n), args.tol)
    out = _out_dir(args)
    _dump(out / f"{name}.json", _dist_file(dist, game))
    _dump(out / f"{name}_report.json", report.to_dict())
    print(report.summary())
    return 0


def cmd_verify(args) -> int:
    dist, raw = _load_dist(args.file)
    game = _game_from({"game": raw.get("game", {})}, args, k=dist.k, n=dist.n)
    report = verify(game, dist, _parse_phi(args.phi, game.n), args.tol)
    print(report.summary())
    if args.out:
        _dump(_out_dir(args) / "report.json", report.to_dict())
    return 0 if report.passed else 1


def cmd_symmetrize(args) -> int:
    dist, raw = _load_dist(args.file)
    game = _game_from({"game": raw.get("game", {})}, args, k=dist.k, n=dist.n)
    sym = symmetrize(game, dist)
    out = _out_dir(args)
    _dump(out / "symmetrized.json", _dist_file(sym, game))
    print(f"total utility {total_expected_utility(game, dist):.12g} -> {total_expected_utility(game, sym):.12g}")
    return 0


def _cmd_best(args, solver, phi) -> int:
    cfg = _load_config(args.config)
    game = _game_from(cfg, args)
    objective = args.objective or cfg.get("objective", "sum")
    if objective not in OBJECTIVES:
        raise InputError(f"objective must be one of {OBJECTIVES}")
    dist, value = solver(game, objective)
    report = verify(game, dist, phi, 1e-8)
    out = _out_dir(args)
    stem = "best_" + ("cce" if phi == "cce" else "ce") + f"_{objective}"
    _dump(out / f"{stem}.json", _dist_file(dist, game))
    _dump(out / f"{stem}_report.json", {"objective": objective, "value": value, **report.to_dict()})
    print(f"optimal {objective} value {value:.12g}")
    print(report.summary())
    return 0


def cmd_best_cce(args) -> int:
    return _cmd_best(args, lp_best_cce_duopoly, "cce")


def cmd_best_ce(args) -> int:
    return _cmd_best(args, lp_best_ce_duopoly, "ce")


def cmd_sweep_fig1(args) -> int:
    cfg = _load_config(args.config)
    if args.sweep:
        cfg["sweep"] = args.sweep
    if args.workers:
        cfg["workers"] = args.workers
    header, rows = run_sweep(cfg)
    out = _out_dir(args)
    path = out / f"{cfg.get('name', cfg['sweep'])}.csv"
    write_csv(path, header, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_simulate_fig2(args) -> int:
    cfg = _load_config(args.config)
    game = _game_from(cfg, args)
    if game.n != 2:
        raise InputError("simulations need a duopoly")
    T = int(args.T or cfg.get("T", 10 ** 6))
    seeds = cfg.get("seeds", list(range(args.seeds or 20)))
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    if args.seeds:
        seeds = list(range(args.seeds))
    workers = int(args.workers or cfg.get("workers", 1))
    cfg1, cfg2 = learner_configs(cfg)
    results = run_simulations(game, cfg1, cfg2, T, seeds, workers)
    out = _out_dir(args)
    prefix = out / cfg.get("name", "fig2")
    write_sim_outputs(prefix, results, {"game": game.to_dict(), "config": cfg})
    print(f"modal transaction price {modal_transaction_price(results):.12g} over {len(seeds)} seeds; "
          f"wrote {prefix}.csv and {prefix}.json")
    return 0


# ---------------------------------------------------------------------
def _add_game_flags(p):
    p.add_argument("--k", type=int, help="grid size")
    p.add_argument("--n", type=int, help="number of players")
    p.add_argument("--costs", help="one cost or a comma-separated list, each j/k")
    p.add_argument("--demand", choices=["constant", "linear", "quadratic", "exponential"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bertrand-eq", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a closed-form equilibrium and verify it")
    p.add_argument("--name", choices=CONSTRUCTIONS)
    p.add_argument("--config")
    p.add_argument("--ratio", type=float, help="grid-to-support ratio of the harmonic constructions")
    p.add_argument("--log-ratio", type=float, help="natural log of --ratio (8 means e^8)")
    p.add_argument("--lam", type=float)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    _add_game_flags(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="check a distribution file against deviation classes")
    p.add_argument("file")
    p.add_argument("--phi", default="cce", help="cce, ce, or one class per player: all_maps,constant_only")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    _add_game_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep-fig1", help="LP sweeps over k, n or c2")
    p.add_argument("--config")
    p.add_argument("--sweep", choices=["ratio_vs_k", "ratio_vs_n", "asym_vs_c2"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_fig1)

    p = sub.add_parser("simulate-fig2", help="multi-seed learning simulations")
    p.add_argument("--config")
    p.add_argument("--T", type=int)
    p.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    _add_game_flags(p)
    p.set_defaults(func=cmd_simulate_fig2)

    p = sub.add_parser("symmetrize", help="collapse a distribution onto the diagonal")
    p.add_argument("file")
    p.add_argument("--out")
    _add_game_flags(p)
    p.set_defaults(func=cmd_symmetrize)

    for name, func, help_ in (("best-cce", cmd_best_cce, "maximum-utility duopoly CCE"),
                              ("best-ce", cmd_best_ce, "maximum-utility duopoly CE")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config")
        p.add_argument("--objective", choices=OBJECTIVES)
        p.add_argument("--out")
        _add_game_flags(p)
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (InputError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
