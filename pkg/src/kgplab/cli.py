"""Command-line entry point: subcommand dispatch, run manifests, file outputs.

Subcommands: townes, minimize, sweep, verify.  Every run resolves the ground
state first (constants and profiles derive from it), writes its outputs
atomically (temp file + rename), and finishes with a manifest echoing the
fully-defaulted configuration so reruns are reproducible byte for byte.
Numeric CSV fields carry 17 significant digits, enough to round-trip doubles.

Exit codes: 0 success, 2 solver nonconvergence, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, config_to_dict, parse_config
from .energy import (
    ModelParams,
    blowup_scale_limit,
    critical_energy_limit,
    supercritical_energy_limit,
    upper_bound,
)
from .flow import FlowOptions, minimize
from .radial import RadialGrid, rescale_profile, save_profile_csv
from .sweep import estimate_limit, run_sweep
from .townes import moment, shoot_q

__all__ = ["main", "run"]

OUTPUT_DIR_ENV = "KGPLAB_OUTPUT_DIR"


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, doc) -> None:
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _flow_options(config: RunConfig, frame: str, residual_tol=None) -> FlowOptions:
    f = config.flow
    return FlowOptions(
        step=f.step,
        max_iters=f.max_iters,
        energy_tol=f.energy_tol,
        residual_tol=residual_tol if residual_tol is not None else f.residual_tol,
        backtrack_factor=f.backtrack_factor,
        max_backtracks=f.max_backtracks,
        frame=frame,
    )


def _breakdown_doc(br):
    return {
        "kinetic": br.kinetic,
        "kirchhoff": br.kirchhoff,
        "potential": br.potential,
        "interaction": br.interaction,
        "total": br.total,
    }


def run(config: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit code."""
    out_dir = Path(os.environ.get(OUTPUT_DIR_ENV) or config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    grid = RadialGrid.graded(config.grid.n, config.grid.r_max, config.grid.grading)
    gs = shoot_q(grid, tol=config.townes.tol)

    ratio = config.params.a_over_astar
    if config.params.a is not None:
        a_value = config.params.a
        ratio = a_value / gs.a_star
    else:
        ratio = 1.0 if ratio is None else ratio
        a_value = ratio * gs.a_star

    outputs: list[str] = []
    code = 0
    if config.subcommand == "townes":
        doc = {
            "a_star": gs.a_star,
            "q_origin": gs.q_origin,
            "consistency_spread": gs.consistency_spread,
            "bracket_width": gs.bracket_width,
            "tail_match_error": gs.tail_match_error,
            "moments": {_fmt(p): moment(gs, p) for p in config.townes.moment_exponents},
        }
        _write_json(out_dir / "townes.json", doc)
        save_profile_csv(gs.q0, out_dir / "q0_profile.csv")
        outputs += ["townes.json", "q0_profile.csv"]

    elif config.subcommand == "minimize":
        params = ModelParams(a=a_value, b=config.params.b, p=config.params.p)
        init = _initial_profile(gs, params, config.flow.frame)
        opts = _flow_options(config, config.flow.frame)
        result = minimize(params, init, opts, a_star=gs.a_star)
        doc = {
            "params": {"a": params.a, "a_over_astar": ratio, "b": params.b, "p": params.p},
            "breakdown": _breakdown_doc(result.breakdown),
            "mu": result.mu,
            "residual": result.residual,
            "iterations": result.iterations,
            "converged": result.converged,
            "frame_used": result.frame_used,
            "epsilon": result.epsilon,
            "frame_energy": result.frame_energy,
        }
        _write_json(out_dir / "minimize.json", doc)
        save_profile_csv(result.profile, out_dir / "profile.csv")
        outputs += ["minimize.json", "profile.csv"]
        if not result.converged:
            code = 2

    elif config.subcommand == "sweep":
        sw = config.sweep
        if sw.mode == "supercritical" and ratio <= 1.0:
            raise ConfigError("params.a_over_astar",
                              "supercritical sweeps need a_over_astar > 1")
        a_ratio = 1.0 if sw.mode == "critical" else ratio
        b_list = _geomspace(sw.b_start, sw.b_stop, sw.num_points)
        opts = _flow_options(config, "blowup", residual_tol=sw.residual_tol)
        records = run_sweep(gs, config.params.p, b_list, a_ratio=a_ratio, opts=opts)
        _write_sweep_csv(out_dir / "sweep.csv", records)
        outputs.append("sweep.csv")
        summary = _sweep_summary(records, gs, config.params.p, a_ratio)
        _write_json(out_dir / "sweep_summary.json", summary)
        outputs.append("sweep_summary.json")
        if not all(r.converged for r in records):
            code = 2

    elif config.subcommand == "verify":
        doc = _verify_table(gs, config)
        _write_json(out_dir / "verify.json", doc)
        outputs.append("verify.json")

    manifest = {
        "package": "kgplab",
        "version": __version__,
        "a_star": gs.a_star,
        "resolved_a": a_value,
        "config": config_to_dict(config),
        "outputs": sorted(outputs),
    }
    _write_json(out_dir / "manifest.json", manifest)
    return code


def _initial_profile(gs, params: ModelParams, frame: str):
    if frame == "physical":
        return gs.q0
    ratio = params.a / gs.a_star
    if ratio > 1.0 + 1e-9:
        return rescale_profile(gs.q0, math.sqrt((ratio - 1.0) / 2.0))
    return rescale_profile(gs.q0, blowup_scale_limit(params.p, moment(gs, params.p)))


def _geomspace(start: float, stop: float, num: int) -> list[float]:
    lo, hi = math.log(start), math.log(stop)
    return [math.exp(lo + (hi - lo) * i / (num - 1)) for i in range(num)]


def _write_sweep_csv(path: Path, records) -> None:
    lines = ["b,E,kinetic,kirchhoff,potential,interaction,scaled_energy,"
             "beta_est,profile_h1,converged"]
    for r in records:
        e = r.energy
        lines.append(",".join([
            _fmt(r.b), _fmt(e.total), _fmt(e.kinetic), _fmt(e.kirchhoff),
            _fmt(e.potential), _fmt(e.interaction), _fmt(r.scaled_energy),
            _fmt(r.beta_est), _fmt(r.profile_h1), str(int(r.converged)),
        ]))
    _atomic_write(path, "\n".join(lines) + "\n")


def _sweep_summary(records, gs, p: float, a_ratio: float) -> dict:
    m_p = moment(gs, p)
    if a_ratio == 1.0:
        target = critical_energy_limit(p, m_p)
    else:
        target = supercritical_energy_limit(a_ratio * gs.a_star, gs.a_star)
    doc = {
        "mode": "critical" if a_ratio == 1.0 else "supercritical",
        "p": p,
        "a_over_astar": a_ratio,
        "a_star": gs.a_star,
        "m_p": m_p,
        "closed_form_limit": target,
        "records": len(records),
        "records_converged": sum(r.converged for r in records),
    }
    try:
        fit = estimate_limit(records, "scaled_energy")
        doc["limit_fit"] = {
            "estimate": fit.estimate,
            "rate": fit.rate,
            "residual": fit.residual,
            "samples_used": fit.samples_used,
        }
        doc["relative_error"] = abs(fit.estimate - target) / abs(target)
    except ValueError as exc:
        doc["limit_fit"] = None
        doc["fit_error"] = str(exc)
    if a_ratio == 1.0:
        doc["beta_limit"] = blowup_scale_limit(p, m_p)
        doc["beta_est_last"] = records[-1].beta_est
        doc["profile_h1_last"] = records[-1].profile_h1
    return doc


def _verify_table(gs, config: RunConfig) -> dict:
    critical = []
    for p in config.verify.p_values:
        m_p = moment(gs, p)
        entry = {
            "p": p,
            "m_p": m_p,
            "scaled_energy_limit": critical_energy_limit(p, m_p),
            "profile_scale": blowup_scale_limit(p, m_p),
            "upper_bound_identity": [],
        }
        for b in config.verify.b_values:
            params = ModelParams(a=gs.a_star, b=b, p=p)
            ub = upper_bound(params, gs.a_star, m_p)
            scaled = b ** (p / (4.0 - p)) * ub
            entry["upper_bound_identity"].append({
                "b": b,
                "upper_bound": ub,
                "scaled": scaled,
                "relative_error": abs(scaled - entry["scaled_energy_limit"])
                / abs(entry["scaled_energy_limit"]),
            })
        critical.append(entry)
    supercritical = [
        {"a_over_astar": ratio,
         "b_energy_limit": supercritical_energy_limit(ratio * gs.a_star, gs.a_star)}
        for ratio in config.verify.a_ratios
    ]
    return {"a_star": gs.a_star, "critical": critical, "supercritical": supercritical}


# -- argument parsing --------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgplab",
        description="Numerical laboratory for the 2D Kirchhoff-Gross-Pitaevskii "
                    "minimization with an attractive singular well.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--grid-n", type=int, dest="grid_n")
    common.add_argument("--grid-r", type=float, dest="grid_r")
    common.add_argument("--grading", type=float)
    common.add_argument("--seed", type=int)

    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_townes = sub.add_parser("townes", parents=[common],
                              help="ground state, optimal constant, moments")
    p_townes.add_argument("--tol", type=float, help="shooting bracket width")
    p_townes.add_argument("--moments", help="comma-separated moment exponents")

    p_min = sub.add_parser("minimize", parents=[common], help="single minimization")
    p_min.add_argument("--a", type=float)
    p_min.add_argument("--a-over-astar", type=float, dest="a_over_astar")
    p_min.add_argument("--b", type=float)
    p_min.add_argument("--p", type=float)
    p_min.add_argument("--frame", choices=("physical", "blowup"))
    p_min.add_argument("--tol", type=float, help="residual tolerance")
    p_min.add_argument("--max-iters", type=int, dest="max_iters")

    p_sweep = sub.add_parser("sweep", parents=[common], help="small-b sweep")
    p_sweep.add_argument("--mode", choices=("critical", "supercritical"))
    p_sweep.add_argument("--a-over-astar", type=float, dest="a_over_astar")
    p_sweep.add_argument("--p", type=float)
    p_sweep.add_argument("--b-start", type=float, dest="b_start")
    p_sweep.add_argument("--b-stop", type=float, dest="b_stop")
    p_sweep.add_argument("--points", type=int)
    p_sweep.add_argument("--tol", type=float, help="residual tolerance per point")

    p_verify = sub.add_parser("verify", parents=[common],
                              help="closed-form limit formula table")
    p_verify.add_argument("--p-values", dest="p_values")
    p_verify.add_argument("--a-ratios", dest="a_ratios")
    p_verify.add_argument("--b-values", dest="b_values")
    return parser


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _merge_cli(doc: dict, args: argparse.Namespace) -> dict:
    doc = dict(doc)
    doc["subcommand"] = args.subcommand

    def put(section, key, value):
        if value is not None:
            doc.setdefault(section, {})
            doc[section] = dict(doc[section])
            doc[section][key] = value

    if args.output_dir is not None:
        doc["output_dir"] = args.output_dir
    if args.seed is not None:
        doc["seed"] = args.seed
    put("grid", "n", args.grid_n)
    put("grid", "r_max", args.grid_r)
    put("grid", "grading", args.grading)

    sc = args.subcommand
    if sc == "townes":
        put("townes", "tol", args.tol)
        if args.moments is not None:
            put("townes", "moment_exponents", _float_list(args.moments))
    elif sc == "minimize":
        put("params", "a", args.a)
        put("params", "a_over_astar", args.a_over_astar)
        put("params", "b", args.b)
        put("params", "p", args.p)
        put("flow", "frame", args.frame)
        put("flow", "residual_tol", args.tol)
        put("flow", "max_iters", args.max_iters)
    elif sc == "sweep":
        put("sweep", "mode", args.mode)
        put("params", "a_over_astar", args.a_over_astar)
        put("params", "p", args.p)
        put("sweep", "b_start", args.b_start)
        put("sweep", "b_stop", args.b_stop)
        put("sweep", "num_points", args.points)
        put("sweep", "residual_tol", args.tol)
    elif sc == "verify":
        if args.p_values is not None:
            put("verify", "p_values", _float_list(args.p_values))
        if args.a_ratios is not None:
            put("verify", "a_ratios", _float_list(args.a_ratios))
        if args.b_values is not None:
            put("verify", "b_values", _float_list(args.b_values))
    return doc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 3
    doc = _merge_cli(doc, args)
    try:
        config = parse_config(doc)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 3
    try:
        return run(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
