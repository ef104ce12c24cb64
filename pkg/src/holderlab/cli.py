"""Command-line harness: ``holderlab <subcommand> --config cfg.json --out dir``.

Exit status: 0 success, 2 failed verification, 1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checks
from .decomposition import (
    IllConditionedError,
    decompose_general,
    decompose_improved,
    directional_gain,
    h_inverse_norm_certificate,
    norm_bound_table,
)
from .flux import FluxModel, fit_alpha, spanning_check
from .kinetic import KineticBox, verify_transport_estimate
from .regularity import VARIANTS, bootstrap_iterate, empirical_holder, oscillation_profile
from .solution import GridSolution
from .solver import SolverConfig, SolverError, solve

log = logging.getLogger("holderlab")

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def write_json(path: Path, obj) -> Path:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o))

    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n")
    return path


def need(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where} missing key {key!r}")
    return cfg[key]


def _flux(cfg: dict) -> FluxModel:
    try:
        return FluxModel.from_config(need(cfg, "flux"))
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad 'flux' entry: {exc}") from exc


def _solution(cfg: dict, base: Path) -> GridSolution:
    path = Path(need(cfg, "solution"))
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"key 'solution': file {path} does not exist")
    return GridSolution.load(path)


# -- subcommands ------------------------------------------------------------------


def cmd_flux_report(cfg, out, args):
    flux = _flux(cfg)
    grid = cfg.get("delta_grid")
    rep = fit_alpha(flux, cfg.get("n_directions"), None if grid is None else np.asarray(grid, float), seed=args.seed)
    rows = []
    for k, w in enumerate(rep.directions):
        for delta, m in zip(rep.deltas, rep.measures[k]):
            rows.append([k, *w, delta, m])
    header = ["direction", "tau"] + [f"xi{i + 1}" for i in range(flux.d)] + ["delta", "measure"]
    write_csv(out / "nonlinearity.csv", header, rows)
    vs = np.linspace(0, 1, 101)
    smins = [spanning_check(flux, float(v))[1] for v in vs]
    summary = {
        "d": flux.d,
        "alpha": rep.alpha,
        "C": rep.C,
        "inconclusive": rep.inconclusive,
        "worst_direction": rep.worst_direction,
        "min_wronskian_singular_value": float(min(smins)),
        "spanning_everywhere": bool(min(smins) > 1e-8),
    }
    write_json(out / "flux_report.json", summary)
    return EXIT_FAILED if rep.inconclusive else EXIT_OK


def cmd_decompose(cfg, out, args):
    flux = _flux(cfg)
    v, h = float(need(cfg, "v")), float(need(cfg, "h"))
    a = np.asarray(need(cfg, "a"), dtype=float)
    method = cfg.get("method", "improved")
    try:
        if method == "improved":
            dec = decompose_improved(flux, v, h, a)
        elif method == "general":
            dec = decompose_general(flux, v, h, a, float(need(cfg, "alpha")))
        else:
            raise ConfigError(f"key 'method': unknown value {method!r}")
    except IllConditionedError as exc:
        write_json(out / "decomposition.json", {"error": str(exc)})
        log.error("%s", exc)
        return EXIT_FAILED
    write_json(out / "decomposition.json", dec.to_dict())
    ok = dec.residual <= 1e-8 * max(np.linalg.norm(a), 1e-300) or not np.any(a)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_h_certify(cfg, out, args):
    d = int(need(cfg, "d"))
    h_list = [float(h) for h in cfg.get("h_list", checks.DYADIC)]
    rows = h_inverse_norm_certificate(d, h_list)
    write_csv(out / "h_certify.csv", ["h", "norm", "product"], rows)
    prods = [r[2] for r in rows]
    ok = max(prods) / min(prods) <= 10
    if "flux" in cfg:
        flux = _flux(cfg)
        v = float(cfg.get("v", 0.0))
        hs = [h for h in h_list if v + h <= 1]
        nb = norm_bound_table(flux, v, hs)
        write_csv(out / "norm_bound.csv", ["h", "ratio"], nb)
        ok &= max(r[1] for r in nb) / min(r[1] for r in nb) <= 10
        for ell in range(1, flux.d + 1):
            tab = directional_gain(flux, v, hs, ell)
            write_csv(out / f"directional_{ell}.csv", ["h", "gain"], tab)
            ok &= max(r[1] for r in tab) / min(r[1] for r in tab) <= 10
    return EXIT_OK if ok else EXIT_FAILED


def cmd_solve(cfg, out, args):
    try:
        scfg = SolverConfig.from_dict(cfg)
    except (TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        sol = solve(scfg)
    except SolverError as exc:
        log.error("%s", exc)
        return EXIT_FAILED
    sol.save(out / "solution.bin")
    write_csv(out / "manifest.csv", ["index", "t"], [(k, t) for k, t in enumerate(sol.times)])
    return EXIT_OK


def cmd_kinetic_verify(cfg, out, args):
    sol = _solution(cfg, args.config_dir)
    T = float(need(cfg, "T"))
    g_bound = float(need(cfg, "g_bound"))
    t_index = int(cfg.get("t_index", 0))
    if "boxes" in cfg:
        boxes = [
            KineticBox(need(b, "center", "box"), float(need(b, "r", "box")), float(need(b, "v_lo", "box")), float(need(b, "omega", "box")))
            for b in cfg["boxes"]
        ]
    else:
        rng = np.random.default_rng(args.seed)
        L = sol.extents
        boxes = [
            KineticBox(
                tuple(rng.uniform(o, o + e) for o, e in zip(sol.origin, L)),
                rng.uniform(0.02, 0.1) * min(L),
                rng.uniform(0.1, 0.6),
                rng.uniform(0.02, 0.2),
            )
            for _ in range(int(cfg.get("n_random", 10)))
        ]
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        results = list(pool.map(lambda b: verify_transport_estimate(sol, b, T, g_bound, t_index), boxes))
    write_csv(out / "kinetic_verify.csv", ["lhs", "rhs", "pass"], [r.row() for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def cmd_hprofile(cfg, out, args):
    sol = _solution(cfg, args.config_dir)
    t_index = int(cfg.get("t_index", -1))
    radii = np.asarray(need(cfg, "radii"), dtype=float)
    geometry = cfg.get("geometry", "ball")
    centers = [np.atleast_1d(np.asarray(c, dtype=float)) for c in need(cfg, "centers")]
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        profiles = list(pool.map(lambda c: oscillation_profile(sol, t_index, c, radii, geometry), centers))
    rows = []
    for k, p in enumerate(profiles):
        rows += [[k, *row] for row in p.rows()]
    write_csv(out / "hprofile.csv", ["center", "r", "h_r", "gamma_hat", "C_hat"], rows)
    return EXIT_FAILED if any(p.inconclusive for p in profiles) else EXIT_OK


def cmd_bootstrap(cfg, out, args):
    variant = cfg.get("variant", "alpha_nonlinear")
    if variant not in VARIANTS:
        raise ConfigError(f"key 'variant': unknown value {variant!r}")
    d = int(cfg.get("d", 1)) if variant == "burgers_1d" else int(need(cfg, "d"))
    alpha = float(cfg.get("alpha", 1.0))
    s = bootstrap_iterate(d, alpha, float(cfg.get("tol", 1e-13)), variant, float(cfg.get("g_norm", 1.0)), int(cfg.get("max_iter", 200)))
    write_csv(out / "bootstrap.csv", ["n", "gamma_n", "C_n"], s.rows())
    return EXIT_OK if s.converged and abs(s.gammas[-1] - s.limit) <= 1e-10 else EXIT_FAILED


def cmd_holder_check(cfg, out, args):
    sol = _solution(cfg, args.config_dir)
    gamma = float(need(cfg, "gamma"))
    t_index = int(cfg.get("t_index", -1))
    val = empirical_holder(sol, t_index, gamma, int(cfg.get("sample_pairs", 4096)), seed=args.seed)
    result = {"gamma": gamma, "t_index": t_index, "seminorm": val}
    if "bound" in cfg:
        result["bound"] = float(cfg["bound"])
        result["pass"] = bool(val <= result["bound"])
    write_json(out / "holder_check.json", result)
    return EXIT_OK if result.get("pass", True) else EXIT_FAILED


def cmd_verify_all(cfg, out, args):
    only = cfg.get("criteria")
    results = checks.run_all(seed=args.seed, only=only)
    for r in results:
        print(r.line())
    write_csv(
        out / "verify_all.csv",
        ["criterion", "name", "pass", "seconds", "detail"],
        [(r.criterion, r.name, r.passed, r.seconds, r.detail) for r in results],
    )
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "flux-report": cmd_flux_report,
    "decompose": cmd_decompose,
    "h-certify": cmd_h_certify,
    "solve": cmd_solve,
    "kinetic-verify": cmd_kinetic_verify,
    "hprofile": cmd_hprofile,
    "bootstrap": cmd_bootstrap,
    "holder-check": cmd_holder_check,
    "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="holderlab", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"holderlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed < 0 or args.seed >= 2**64:
        print("holderlab: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("holderlab: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    cfg = {}
    args.config_dir = Path(".")
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except OSError as exc:
            print(f"holderlab: cannot read config: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except json.JSONDecodeError as exc:
            print(f"holderlab: malformed JSON in {args.config}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if not isinstance(cfg, dict):
            print("holderlab: config must be a JSON object", file=sys.stderr)
            return EXIT_USAGE
        args.config_dir = args.config.parent
    elif args.subcommand not in ("verify-all",):
        print(f"holderlab: {args.subcommand} requires --config", file=sys.stderr)
        return EXIT_USAGE
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.subcommand](cfg, args.out, args)
    except (ConfigError, ValueError) as exc:
        print(f"holderlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
