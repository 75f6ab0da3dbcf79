# -*- coding: utf-8 -*-
"""
SOS LAB - RUNNER CLI
Un subcomando por familia de experimentos. Configuración efectiva =
defaults ← archivo key=value (--config) ← flags (los flags ganan); se incrusta
completa en cada salida y los defaults aplicados quedan registrados.

Códigos de salida: 0 ok, 2 precondición, 3 guard, 4 bandera numérica.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable

import pandas as pd
from pydantic import ValidationError

from backend.app.connectors.storage.height_field_io import read_height_field, region_for_shape, write_height_field
from backend.app.connectors.storage.report_writer import write_json, write_table
from backend.app.core.config import get_settings
from backend.app.core.errors import ErrorReason, ExitCode, PreconditionError, SOSLabError
from backend.app.core.forensic_logger import runner_logger
from backend.app.domain.schemas.exact import HeightWindow
from backend.app.domain.schemas.experiment import ExperimentConfig, OutputFormat
from backend.app.domain.schemas.sampling import MCParams, SweepOrder
from backend.app.services.contours.tracer import all_contours
from backend.app.services.exact.enumerator import partition, verify_fkg
from backend.app.services.exact.potentials import extract_potentials
from backend.app.services.exact.staircase import check_monotonicity, tau_zero_exact
from backend.app.services.free_energy.positivity import exact_log_positivity, log_positivity
from backend.app.services.free_energy.scaling import scaling_experiment, scaling_frame
from backend.app.services.free_energy.surface_tension import tau_zero_mc
from backend.app.services.lattice.boundary import BoundaryCondition
from backend.app.services.lattice.geometry import Region, box, rectangle
from backend.app.services.mc.chain import run_chain

# Defaults comunes; cada comando añade los suyos
COMMON_DEFAULTS: dict[str, Any] = {
    "beta": 1.0,
    "L": "1",
    "M": None,
    "window": None,
    "sweeps": 2000,
    "burnin": None,
    "seed": None,
    "out": None,
    "format": "json",
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "enumerate": {"bc": "zero", "height": 0, "a": "", "b": "", "method": "auto"},
    "sample": {"bc": "zero", "height": 0, "floor": None, "order": "auto", "every": 1,
               "level_lines": False, "circuit": None, "snapshot": None, "format": "csv"},
    "verify-fkg": {"L_box": None, "shape": None},
    "potentials": {"max_sites": 4, "box_side": 3, "format": "csv"},
    "monotonicity": {"a": "0", "b": "0", "M_list": "1,2", "format": "csv"},
    "tau0": {"mc": False, "normalization": "interface", "order": "auto"},
    "positivity": {"exact": False, "granularity": "site", "floor": 0, "order": "auto"},
    "scaling": {"granularity": "row", "exact_max_states": None, "order": "auto", "format": "csv"},
    "contours": {"input": None, "verbose": False, "bc": "zero", "height": 0},
}

FLAG_TYPES: dict[str, Callable[[str], Any]] = {
    "beta": float,
    "M": int,
    "window": int,
    "sweeps": int,
    "burnin": int,
    "seed": int,
    "height": int,
    "floor": int,
    "every": int,
    "max_sites": int,
    "box_side": int,
    "L_box": int,
    "exact_max_states": int,
}


# ==================== PARSING ====================


def int_list(text: str | None) -> list[int]:
    if text is None or str(text).strip() == "":
        return []
    try:
        return [int(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"expected a comma-separated integer list, got {text!r}")


def read_config_file(path: str) -> dict[str, str]:
    """Archivo plano key=value; '#' inicia comentario; guiones y guiones bajos equivalen"""
    values = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"config line without '=': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _coerce(key: str, value: Any) -> Any:
    if isinstance(value, str):
        if key in FLAG_TYPES:
            return FLAG_TYPES[key](value)
        if value.lower() in ("true", "false"):
            return value.lower() == "true"
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--beta", type=float, help="Inverse temperature β > 0")
    common.add_argument("--L", help="Half side (or comma list for scaling)")
    common.add_argument("--M", type=int, help="Vertical half side of Λ_{L,M}")
    common.add_argument("--window", type=int, help="Height-window margin w")
    common.add_argument("--sweeps", type=int, help="Measured sweeps per chain or stage")
    common.add_argument("--burnin", type=int, help="Burn-in sweeps (default 10·L, doubled with a floor)")
    common.add_argument("--seed", type=int, help="Base RNG seed")
    common.add_argument("--out", help="Output file (stdout if omitted)")
    common.add_argument("--format", choices=[f.value for f in OutputFormat])
    common.add_argument("--config", help="Flat key=value config file; flags win")

    parser = argparse.ArgumentParser(prog="sos-lab", description="(2+1)-D solid-on-solid interface lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="Exact log Z")
    p.add_argument("--bc", choices=["zero", "constant", "staircase", "xi"])
    p.add_argument("--height", type=int, help="Constant boundary height")
    p.add_argument("--a", help="Left staircase steps a_1..a_n")
    p.add_argument("--b", help="Right staircase steps b_1..b_n")
    p.add_argument("--method", choices=["auto", "brute", "transfer"])

    p = sub.add_parser("sample", parents=[common], help="Heat-bath chain observables")
    p.add_argument("--bc", choices=["zero", "constant", "xi"])
    p.add_argument("--height", type=int)
    p.add_argument("--floor", type=int)
    p.add_argument("--order", choices=[o.value for o in SweepOrder])
    p.add_argument("--every", type=int, help="Emit observables every k sweeps")
    p.add_argument("--level-lines", dest="level_lines", action="store_const", const=True)
    p.add_argument("--circuit", help="delta,K for the high-circuit event")
    p.add_argument("--snapshot", help="Write the last configuration as a height-field file")

    p = sub.add_parser("verify-fkg", parents=[common], help="Holley lattice condition, all pairs")
    p.add_argument("--L-box", dest="L_box", type=int, help="Side N of an N×N box")
    p.add_argument("--shape", help="WxH rectangle (even sides anchored at the origin)")

    p = sub.add_parser("potentials", parents=[common], help="Möbius cluster potentials")
    p.add_argument("--max-sites", dest="max_sites", type=int)
    p.add_argument("--box-side", dest="box_side", type=int)

    p = sub.add_parser("monotonicity", parents=[common], help="Staircase gap trend in M")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--M-list", dest="M_list")

    p = sub.add_parser("tau0", parents=[common], help="Surface tension at zero tilt")
    p.add_argument("--mc", action="store_const", const=True, help="Boundary-flip estimator")
    p.add_argument("--normalization", choices=["interface", "definition"])
    p.add_argument("--order", choices=[o.value for o in SweepOrder])

    p = sub.add_parser("positivity", parents=[common], help="log P(η ≥ floor on Λ)")
    p.add_argument("--exact", action="store_const", const=True)
    p.add_argument("--granularity", choices=["site", "row"])
    p.add_argument("--floor", type=int)
    p.add_argument("--order", choices=[o.value for o in SweepOrder])

    p = sub.add_parser("scaling", parents=[common], help="Positivity scaling table")
    p.add_argument("--granularity", choices=["site", "row"])
    p.add_argument("--exact-max-states", dest="exact_max_states", type=int)
    p.add_argument("--order", choices=[o.value for o in SweepOrder])

    p = sub.add_parser("contours", parents=[common], help="Level lines of a height-field file")
    p.add_argument("--input")
    p.add_argument("--verbose", action="store_const", const=True)
    p.add_argument("--bc", choices=["zero", "constant"])
    p.add_argument("--height", type=int)
    return parser


def effective_config(args: argparse.Namespace) -> ExperimentConfig:
    """defaults ← --config ← flags"""
    command = args.command
    defaults = {**COMMON_DEFAULTS, **COMMAND_DEFAULTS[command]}
    if defaults.get("seed") is None:
        defaults["seed"] = get_settings().default_seed

    from_file = read_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}

    parameters, applied = {}, []
    for key, default in defaults.items():
        if key in flags:
            parameters[key] = flags[key]
        elif key in from_file:
            parameters[key] = _coerce(key, from_file[key])
        else:
            parameters[key] = default
            applied.append(key)
    unknown = set(from_file) - set(defaults)
    if unknown:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"unknown config keys: {sorted(unknown)}")
    if args.config:
        parameters["config_file"] = args.config
    return ExperimentConfig(command=command, parameters=parameters, defaults_applied=applied)


# ==================== AYUDANTES ====================


def _single_L(p: dict) -> int:
    values = int_list(p["L"])
    if len(values) != 1:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"expected a single L, got {p['L']!r}")
    return values[0]


def _region(p: dict) -> Region:
    L = _single_L(p)
    return box(L) if p.get("M") is None else rectangle(L, p["M"])


def _boundary(kind: str, region: Region, p: dict) -> BoundaryCondition:
    if kind == "zero":
        return BoundaryCondition.zero(region)
    if kind == "constant":
        return BoundaryCondition.constant(region, p["height"])
    if kind == "xi":
        return BoundaryCondition.xi_step(region)
    if kind == "staircase":
        return BoundaryCondition.staircase(region, int_list(p["a"]), int_list(p["b"]))
    raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"unknown boundary condition {kind!r}")


def _window(p: dict, bc: BoundaryCondition) -> HeightWindow | None:
    """Con --window se fija el margen; sin él decide cada operación (y lo registra)"""
    if p["window"] is None:
        return None
    return HeightWindow.around(bc.min_value(), bc.max_value(), p["window"])


def _mc_params(p: dict) -> MCParams:
    return MCParams(
        sweeps=p["sweeps"],
        burnin=p["burnin"],
        seed=p["seed"],
        order=SweepOrder(p.get("order") or "auto"),
        observables_every=p.get("every") or 1,
    )


def _emit(result: Any, frame: pd.DataFrame, config: ExperimentConfig) -> None:
    p = config.parameters
    if p["format"] == OutputFormat.CSV.value:
        write_table(frame, p["out"], config)
    else:
        write_json(result, p["out"], config)


def _stages_frame(components) -> pd.DataFrame:
    return pd.DataFrame([c.model_dump() for c in components])


# ==================== SUBCOMANDOS ====================


def cmd_enumerate(config: ExperimentConfig) -> int:
    p = config.parameters
    L = _single_L(p)
    if p["bc"] == "staircase":
        region = rectangle(L, p["M"] if p["M"] is not None else L)
    else:
        region = _region(p)
    bc = _boundary(p["bc"], region, p)
    result = partition(region, bc, p["beta"], _window(p, bc), method=p["method"])
    payload = result.model_dump()
    frame = pd.DataFrame([{
        "log_z": result.log_z, "infeasible": result.infeasible, "method": result.method,
        "n_sites": result.n_sites, "states": result.states, "beta": result.beta,
        "window_min": result.window.hmin, "window_max": result.window.hmax,
    }])
    _emit(payload, frame, config)
    return ExitCode.OK


def cmd_sample(config: ExperimentConfig) -> int:
    p = config.parameters
    region = _region(p)
    bc = _boundary(p["bc"], region, p)
    circuit = None
    if p["circuit"]:
        delta, K = str(p["circuit"]).split(",")
        circuit = (float(delta), int(K))

    last: dict[str, Any] = {}
    observables = list(
        run_chain(
            region, bc, p["beta"], _mc_params(p), floor=p["floor"],
            level_lines=bool(p["level_lines"]), circuit=circuit,
            on_emit=(lambda cfg: last.update(config=cfg.copy())) if p["snapshot"] else None,
        )
    )
    if p["snapshot"] and "config" in last:
        write_height_field(last["config"], p["snapshot"])

    rows = []
    for obs in observables:
        row = {
            "sweep": obs.sweep,
            "mean_height": obs.mean_height,
            "center_height": obs.center_height,
            "circuit_flag": obs.high_circuit,
            "H_of_L": obs.H_of_L,
        }
        row.update({f"level_{h}": count for h, count in sorted(obs.level_line_counts.items())})
        rows.append(row)
    frame = pd.DataFrame(rows)
    level_columns = [c for c in frame.columns if c.startswith("level_")]
    if level_columns:
        frame[level_columns] = frame[level_columns].fillna(0).astype(int)
    _emit([o.model_dump() for o in observables], frame, config)
    return ExitCode.OK


def cmd_verify_fkg(config: ExperimentConfig) -> int:
    p = config.parameters
    if p["shape"]:
        try:
            width, height = (int(v) for v in str(p["shape"]).lower().split("x"))
        except ValueError:
            raise PreconditionError(ErrorReason.INVALID_PARAMETER, f"shape must be WxH, got {p['shape']!r}")
        if width < 1 or height < 1:
            raise PreconditionError(ErrorReason.INVALID_REGION, f"shape sides must be >= 1, got {p['shape']!r}")
        region = region_for_shape(width, height)
    elif p["L_box"] is not None:
        # --L-box N es la caja de lado N (N×N sitios), no el semi-lado
        if p["L_box"] < 1:
            raise PreconditionError(ErrorReason.INVALID_REGION, f"--L-box must be >= 1, got {p['L_box']}")
        region = region_for_shape(p["L_box"], p["L_box"])
    else:
        region = _region(p)
    bc = BoundaryCondition.zero(region)
    report = verify_fkg(region, bc, p["beta"], _window(p, bc))
    runner_logger.logger.info(f"violations: {report.violation_count}")
    frame = pd.DataFrame([{
        "n_sites": report.n_sites, "beta": report.beta, "pairs_checked": report.pairs_checked,
        "violations": report.violation_count, "max_slack": report.max_slack, "min_slack": report.min_slack,
    }])
    _emit(report.model_dump(), frame, config)
    return ExitCode.OK


def cmd_potentials(config: ExperimentConfig) -> int:
    p = config.parameters
    window = None if p["window"] is None else HeightWindow.around(0, 0, p["window"])
    table = extract_potentials(p["max_sites"], p["beta"], window, p["box_side"])
    _emit(table.model_dump(), table.to_frame(), config)
    return ExitCode.OK


def cmd_monotonicity(config: ExperimentConfig) -> int:
    p = config.parameters
    report = check_monotonicity(
        int_list(p["a"]), int_list(p["b"]), _single_L(p), int_list(p["M_list"]), p["beta"], margin=p["window"]
    )
    frame = pd.DataFrame([r.model_dump() for r in report.rows])
    _emit(report.model_dump(), frame, config)
    return ExitCode.OK


def cmd_tau0(config: ExperimentConfig) -> int:
    p = config.parameters
    L = _single_L(p)
    if p["mc"]:
        estimate = tau_zero_mc(L, p["beta"], _mc_params(p), p["normalization"])
        frame = _stages_frame(estimate.log_ratio.components)
        frame["tau_hat"] = estimate.tau_hat
        frame["se_tau"] = estimate.se_tau
        _emit(estimate.model_dump(), frame, config)
        return ExitCode.NUMERICAL_FLAG if estimate.log_ratio.flags else ExitCode.OK

    result = tau_zero_exact(L, p["beta"], margin=p["window"], normalization=p["normalization"])
    _emit(result.model_dump(), pd.DataFrame([result.model_dump(exclude={"window"})]), config)
    return ExitCode.OK


def cmd_positivity(config: ExperimentConfig) -> int:
    p = config.parameters
    region = _region(p)
    bc = BoundaryCondition.zero(region)
    if p["exact"]:
        estimate = exact_log_positivity(region, bc, p["beta"], margin=p["window"], floor_level=p["floor"],
                                        granularity=p["granularity"])
    else:
        estimate = log_positivity(region, bc, p["beta"], _mc_params(p), floor_level=p["floor"],
                                  granularity=p["granularity"])
    frame = _stages_frame(estimate.components)
    frame["log_p"] = estimate.value
    frame["se"] = estimate.std_error
    _emit(estimate.model_dump(), frame, config)
    return ExitCode.NUMERICAL_FLAG if estimate.flags else ExitCode.OK


def cmd_scaling(config: ExperimentConfig) -> int:
    p = config.parameters
    window = None if p["window"] is None else HeightWindow.around(0, 0, p["window"])
    rows = scaling_experiment(
        int_list(p["L"]), p["beta"], _mc_params(p), granularity=p["granularity"],
        exact_max_states=p["exact_max_states"], window=window,
    )
    _emit([r.model_dump() for r in rows], scaling_frame(rows), config)
    return ExitCode.OK


def cmd_contours(config: ExperimentConfig) -> int:
    p = config.parameters
    if not p["input"]:
        raise PreconditionError(ErrorReason.INVALID_PARAMETER, "contours needs --input")
    config_hf = read_height_field(p["input"], bc_factory=lambda region: _boundary(p["bc"], region, p))
    report = all_contours(config_hf)
    _emit(report.to_dict(verbose=bool(p["verbose"])), report.summary_frame(), config)
    return ExitCode.OK


COMMANDS: dict[str, Callable[[ExperimentConfig], int]] = {
    "enumerate": cmd_enumerate,
    "sample": cmd_sample,
    "verify-fkg": cmd_verify_fkg,
    "potentials": cmd_potentials,
    "monotonicity": cmd_monotonicity,
    "tau0": cmd_tau0,
    "positivity": cmd_positivity,
    "scaling": cmd_scaling,
    "contours": cmd_contours,
}


def _fail(reason: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": reason, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = effective_config(args)
        runner_logger.log_event("RUN_START", config.echo())
        code = COMMANDS[config.command](config)
        runner_logger.log_event("RUN_DONE", {"command": config.command, "exit_code": int(code)})
        return int(code)
    except SOSLabError as exc:
        runner_logger.logger.error(f"❌ {exc.reason.value}: {exc.message}")
        return _fail(exc.reason.value, exc.message, int(exc.exit_code))
    except (ValidationError, ValueError) as exc:
        runner_logger.logger.error(f"❌ invalid parameter: {exc}")
        return _fail(ErrorReason.INVALID_PARAMETER.value, str(exc), int(ExitCode.PRECONDITION))
