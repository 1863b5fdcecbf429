"""Run configuration: JSON ingestion, schema validation, default materialization.

Every run is described by one JSON document.  Validation reports the offending
field by its dotted path (e.g. "params.p"), unknown keys are rejected, and the
parsed configuration always carries every default explicitly so the manifest
echo can be re-parsed into an identical object.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

__all__ = [
    "ConfigError",
    "GridSpec",
    "ParamsSpec",
    "FlowSpec",
    "SweepSpec",
    "TownesSpec",
    "VerifySpec",
    "RunConfig",
    "parse_config",
    "config_to_dict",
]

SUBCOMMANDS = ("townes", "minimize", "sweep", "verify")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GridSpec:
    n: int = 4096
    r_max: float = 30.0
    grading: float = 2.0


@dataclass(frozen=True)
class ParamsSpec:
    a: float | None = None  # absolute interaction strength
    a_over_astar: float | None = None  # or as a ratio, resolved after the ground state
    b: float = 0.1
    p: float = 1.0


@dataclass(frozen=True)
class FlowSpec:
    step: float = 0.05
    max_iters: int = 20000
    energy_tol: float = 0.0
    residual_tol: float = 1e-7
    backtrack_factor: float = 0.5
    max_backtracks: int = 60
    frame: str = "physical"


@dataclass(frozen=True)
class SweepSpec:
    mode: str = "critical"  # or "supercritical"
    b_start: float = 1e-1
    b_stop: float = 1e-4
    num_points: int = 12
    residual_tol: float = 1e-5


@dataclass(frozen=True)
class TownesSpec:
    tol: float = 1e-12
    moment_exponents: tuple = (0.5, 1.0, 1.5)


@dataclass(frozen=True)
class VerifySpec:
    p_values: tuple = (0.5, 1.0, 1.5)
    a_ratios: tuple = (1.5, 2.0)
    b_values: tuple = (1.0, 1e-2)


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: ParamsSpec = ParamsSpec()
    grid: GridSpec = GridSpec()
    flow: FlowSpec = FlowSpec()
    sweep: SweepSpec = SweepSpec()
    townes: TownesSpec = TownesSpec()
    verify: VerifySpec = VerifySpec()
    output_dir: str = "runs"
    seed: int = 0


def _check(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _as_number(value, path, *, allow_none=False):
    if value is None and allow_none:
        return None
    _check(isinstance(value, (int, float)) and not isinstance(value, bool), path,
           f"expected a number, got {value!r}")
    return float(value)


def _as_int(value, path):
    _check(isinstance(value, int) and not isinstance(value, bool), path,
           f"expected an integer, got {value!r}")
    return int(value)


def _as_str(value, path, choices=None):
    _check(isinstance(value, str), path, f"expected a string, got {value!r}")
    if choices is not None:
        _check(value in choices, path, f"must be one of {sorted(choices)}, got {value!r}")
    return value


def _as_number_tuple(value, path):
    _check(isinstance(value, (list, tuple)), path, f"expected a list, got {value!r}")
    return tuple(_as_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _section(doc, name):
    raw = doc.get(name, {})
    _check(isinstance(raw, dict), name, f"expected an object, got {raw!r}")
    return dict(raw)


def _reject_unknown(raw: dict, path: str, known):
    for key in raw:
        if key not in known:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


def parse_config(document) -> RunConfig:
    """Validate a JSON document (text or dict) into a RunConfig with defaults filled."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"not valid JSON: {exc}") from exc
    else:
        doc = document
    _check(isinstance(doc, dict), "<document>", "top level must be a JSON object")
    _reject_unknown(doc, "", {"subcommand", "params", "grid", "flow", "sweep",
                              "townes", "verify", "output_dir", "seed"})
    _check("subcommand" in doc, "subcommand", "required")
    subcommand = _as_str(doc["subcommand"], "subcommand", SUBCOMMANDS)

    raw = _section(doc, "params")
    _reject_unknown(raw, "params", {"a", "a_over_astar", "b", "p"})
    a = _as_number(raw.get("a"), "params.a", allow_none=True)
    ratio = _as_number(raw.get("a_over_astar"), "params.a_over_astar", allow_none=True)
    _check(a is None or ratio is None, "params.a",
           "give either a or a_over_astar, not both")
    if a is not None:
        _check(a > 0, "params.a", f"must be positive, got {a}")
    if ratio is not None:
        _check(ratio > 0, "params.a_over_astar", f"must be positive, got {ratio}")
    b = _as_number(raw.get("b", ParamsSpec.b), "params.b")
    _check(b >= 0, "params.b", f"must be nonnegative, got {b}")
    p = _as_number(raw.get("p", ParamsSpec.p), "params.p")
    _check(0.0 < p < 2.0, "params.p", f"must lie in (0, 2), got {p}")
    params = ParamsSpec(a=a, a_over_astar=ratio, b=b, p=p)

    raw = _section(doc, "grid")
    _reject_unknown(raw, "grid", {"n", "r_max", "grading"})
    n = _as_int(raw.get("n", GridSpec.n), "grid.n")
    _check(n >= 16, "grid.n", f"must be at least 16, got {n}")
    r_max = _as_number(raw.get("r_max", GridSpec.r_max), "grid.r_max")
    _check(r_max > 0, "grid.r_max", f"must be positive, got {r_max}")
    grading = _as_number(raw.get("grading", GridSpec.grading), "grid.grading")
    _check(grading > 0, "grid.grading", f"must be positive, got {grading}")
    grid = GridSpec(n=n, r_max=r_max, grading=grading)

    raw = _section(doc, "flow")
    _reject_unknown(raw, "flow", {"step", "max_iters", "energy_tol", "residual_tol",
                                  "backtrack_factor", "max_backtracks", "frame"})
    flow = FlowSpec(
        step=_as_number(raw.get("step", FlowSpec.step), "flow.step"),
        max_iters=_as_int(raw.get("max_iters", FlowSpec.max_iters), "flow.max_iters"),
        energy_tol=_as_number(raw.get("energy_tol", FlowSpec.energy_tol), "flow.energy_tol"),
        residual_tol=_as_number(raw.get("residual_tol", FlowSpec.residual_tol),
                                "flow.residual_tol"),
        backtrack_factor=_as_number(raw.get("backtrack_factor", FlowSpec.backtrack_factor),
                                    "flow.backtrack_factor"),
        max_backtracks=_as_int(raw.get("max_backtracks", FlowSpec.max_backtracks),
                               "flow.max_backtracks"),
        frame=_as_str(raw.get("frame", FlowSpec.frame), "flow.frame",
                      ("physical", "blowup")),
    )
    _check(flow.step > 0, "flow.step", "must be positive")
    _check(flow.max_iters > 0, "flow.max_iters", "must be positive")
    _check(flow.energy_tol >= 0, "flow.energy_tol", "must be nonnegative")
    _check(flow.residual_tol > 0, "flow.residual_tol", "must be positive")
    _check(0.0 < flow.backtrack_factor < 1.0, "flow.backtrack_factor", "must lie in (0, 1)")
    _check(flow.max_backtracks > 0, "flow.max_backtracks", "must be positive")

    raw = _section(doc, "sweep")
    _reject_unknown(raw, "sweep", {"mode", "b_start", "b_stop", "num_points", "residual_tol"})
    sweep = SweepSpec(
        mode=_as_str(raw.get("mode", SweepSpec.mode), "sweep.mode",
                     ("critical", "supercritical")),
        b_start=_as_number(raw.get("b_start", SweepSpec.b_start), "sweep.b_start"),
        b_stop=_as_number(raw.get("b_stop", SweepSpec.b_stop), "sweep.b_stop"),
        num_points=_as_int(raw.get("num_points", SweepSpec.num_points), "sweep.num_points"),
        residual_tol=_as_number(raw.get("residual_tol", SweepSpec.residual_tol),
                                "sweep.residual_tol"),
    )
    _check(sweep.b_stop > 0, "sweep.b_stop", "must be positive")
    _check(sweep.b_start > sweep.b_stop, "sweep.b_start", "must exceed b_stop")
    _check(sweep.num_points >= 3, "sweep.num_points", "need at least 3 points")
    _check(sweep.residual_tol > 0, "sweep.residual_tol", "must be positive")

    raw = _section(doc, "townes")
    _reject_unknown(raw, "townes", {"tol", "moment_exponents"})
    townes = TownesSpec(
        tol=_as_number(raw.get("tol", TownesSpec.tol), "townes.tol"),
        moment_exponents=_as_number_tuple(
            raw.get("moment_exponents", list(TownesSpec.moment_exponents)),
            "townes.moment_exponents"),
    )
    _check(townes.tol > 0, "townes.tol", "must be positive")
    for i, mp in enumerate(townes.moment_exponents):
        _check(0.0 < mp < 2.0, f"townes.moment_exponents[{i}]",
               f"must lie in (0, 2), got {mp}")

    raw = _section(doc, "verify")
    _reject_unknown(raw, "verify", {"p_values", "a_ratios", "b_values"})
    verify = VerifySpec(
        p_values=_as_number_tuple(raw.get("p_values", list(VerifySpec.p_values)),
                                  "verify.p_values"),
        a_ratios=_as_number_tuple(raw.get("a_ratios", list(VerifySpec.a_ratios)),
                                  "verify.a_ratios"),
        b_values=_as_number_tuple(raw.get("b_values", list(VerifySpec.b_values)),
                                  "verify.b_values"),
    )
    for i, pv in enumerate(verify.p_values):
        _check(0.0 < pv < 2.0, f"verify.p_values[{i}]", f"must lie in (0, 2), got {pv}")
    for i, rv in enumerate(verify.a_ratios):
        _check(rv >= 1.0, f"verify.a_ratios[{i}]", f"must be at least 1, got {rv}")
    for i, bv in enumerate(verify.b_values):
        _check(bv > 0, f"verify.b_values[{i}]", f"must be positive, got {bv}")

    output_dir = _as_str(doc.get("output_dir", RunConfig.output_dir), "output_dir")
    seed = _as_int(doc.get("seed", RunConfig.seed), "seed")

    return RunConfig(subcommand=subcommand, params=params, grid=grid, flow=flow,
                     sweep=sweep, townes=townes, verify=verify,
                     output_dir=output_dir, seed=seed)


def config_to_dict(config: RunConfig) -> dict:
    """Full echo of a RunConfig; parse_config(config_to_dict(c)) == c."""
    doc = dataclasses.asdict(config)
    doc["townes"]["moment_exponents"] = list(config.townes.moment_exponents)
    doc["verify"] = {k: list(v) for k, v in doc["verify"].items()}
    return doc
