"""Command-line front end: resolve a run configuration, dispatch the
requested study, and write deterministic CSV plus JSON metadata.

Outputs carry no timestamps, locale-dependent text, or randomness, so a
repeated run reproduces every byte.  Floats are serialized with 17
significant digits (lossless for doubles), CSV files use LF endings and
UTF-8, and files are written to a temporary name and atomically renamed.
"""

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .algebra import SpinQuantum
from .experiments import (
    DynamicsRun,
    SweepResult,
    SweepSpec,
    ku_comparison,
    perturbation_study,
    run_dynamics,
    sweep_rmin_vs_s,
    sweep_t_star_vs_j,
)
from .hamiltonian import RB87_COUPLINGS, LevelScheme, ModelParams, detuning_ratio_for_cancellation, effective_couplings
from .propagate import PropagatorConfig


class ConfigError(ValueError):
    """Invalid, missing, or out-of-range configuration input."""


TIMESERIES_HEADER = "alpha_t,Sx,Sy,Sz,theta_z,dSzbar,r,xi2,entropy_J,schmidt_K"
SWEEP_HEADER = "param,t_star,r_min"
PERTURB_HEADER = "beta,t_star,r_min"
KU_HEADER = "alpha_t,swap_Sx,swap_Sy,swap_Sz,ku_Sx,ku_Sy,ku_Sz,ku_Sx_analytic"


def _int_list(text):
    return [int(tok) for tok in str(text).split(",") if tok.strip() != ""]


def _float_list(text):
    return [float(tok) for tok in str(text).split(",") if tok.strip() != ""]


# field name -> coercion from config-file strings (CLI flags coerce via argparse)
_FIELD_TYPES = {
    "two_s": int,
    "two_j": int,
    "alpha": float,
    "beta": float,
    "t_max": float,
    "dt": float,
    "method": str,
    "dense_threshold": int,
    "krylov_max_dim": int,
    "step_tolerance": float,
    "output": str,
    "workers": int,
    "two_j_values": _int_list,
    "two_s_values": _int_list,
    "fixed_two_s": int,
    "fixed_two_j": int,
    "ratio_j_over_s": Fraction,
    "beta_list": _float_list,
    "g_minus_e1": float,
    "g_minus_e2": float,
    "g_plus_e1": float,
    "g_plus_e2": float,
    "detuning_e1": float,
    "detuning_e2": float,
}

_PROPAGATOR_FIELDS = ("method", "dense_threshold", "krylov_max_dim", "step_tolerance")
_COMMON_DEFAULTS = {
    "alpha": 1.0,
    "dt": 0.01,
    "method": "auto",
    "dense_threshold": 2048,
    "krylov_max_dim": 30,
    "step_tolerance": 1e-10,
    "workers": 1,
}

# per command: required fields and the full allowed set (with defaults merged in)
_COMMANDS = {
    "dynamics": {
        "required": ("two_s", "two_j", "t_max", "output"),
        "fields": ("two_s", "two_j", "alpha", "beta", "t_max", "dt", "output", *_PROPAGATOR_FIELDS),
        "defaults": {"beta": 0.0},
    },
    "sweep-tstar": {
        "required": ("two_j_values", "t_max", "output"),
        "fields": ("two_j_values", "fixed_two_s", "ratio_j_over_s", "alpha", "beta",
                   "t_max", "dt", "output", "workers", *_PROPAGATOR_FIELDS),
        "defaults": {"beta": 0.0},
    },
    "sweep-rmin": {
        "required": ("two_s_values", "t_max", "output"),
        "fields": ("two_s_values", "fixed_two_j", "ratio_j_over_s", "alpha", "beta",
                   "t_max", "dt", "output", "workers", *_PROPAGATOR_FIELDS),
        "defaults": {"beta": 0.0},
    },
    "perturb": {
        "required": ("two_s", "two_j", "beta_list", "t_max", "output"),
        "fields": ("two_s", "two_j", "alpha", "beta_list", "t_max", "dt", "output", *_PROPAGATOR_FIELDS),
        "defaults": {},
    },
    "ku-compare": {
        "required": ("two_s", "two_j", "t_max", "output"),
        "fields": ("two_s", "two_j", "alpha", "t_max", "dt", "output", *_PROPAGATOR_FIELDS),
        "defaults": {},
    },
    "levelscheme": {
        "required": (),
        "fields": ("g_minus_e1", "g_minus_e2", "g_plus_e1", "g_plus_e2",
                   "detuning_e1", "detuning_e2", "output"),
        "defaults": {"detuning_e1": 20.0, "detuning_e2": 1.0, **RB87_COUPLINGS},
    },
}


@dataclass
class RunConfig:
    """Fully resolved configuration of one command invocation."""

    command: str
    values: dict

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def to_meta(self) -> dict:
        out = {"command": self.command}
        for key, val in sorted(self.values.items()):
            out[key] = str(val) if isinstance(val, Fraction) else val
        return out


def _flag(name):
    return "--" + name.replace("_", "-")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapsqueeze",
        description="Collective-spin squeezing dynamics under the two-mode swap coupling.",
    )
    parser.add_argument("--version", action="version", version=f"swapsqueeze {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, table in _COMMANDS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="plain-text config file of key = value lines")
        for name in table["fields"]:
            coerce = _FIELD_TYPES[name]
            p.add_argument(_flag(name), dest=name, type=coerce, default=None)
    return parser


def _read_config_file(path, allowed) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in allowed:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _FIELD_TYPES[key](val.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _positive(cfg_vals, key, strict=True):
    val = cfg_vals.get(key)
    if val is None:
        return
    if (strict and val <= 0) or (not strict and val < 0):
        raise ConfigError(f"{key} must be {'> 0' if strict else '>= 0'}, got {val}")


def _validate(command, vals):
    table = _COMMANDS[command]
    for key in table["required"]:
        if vals.get(key) is None:
            raise ConfigError(f"{command} requires {_flag(key)}")
    for key in ("two_s", "two_j", "fixed_two_s", "fixed_two_j"):
        if vals.get(key) is not None and vals[key] < 0:
            raise ConfigError(f"{key} must be >= 0, got {vals[key]}")
    for key in ("t_max", "dt", "step_tolerance", "detuning_e1", "detuning_e2"):
        _positive(vals, key)
    for key, low in (("dense_threshold", 2), ("krylov_max_dim", 2), ("workers", 1)):
        if vals.get(key) is not None and vals[key] < low:
            raise ConfigError(f"{key} must be >= {low}, got {vals[key]}")
    if vals.get("method") not in (None, "auto", "dense_eig", "krylov"):
        raise ConfigError(f"method must be auto, dense_eig, or krylov, got {vals['method']!r}")
    if command == "dynamics" and vals["alpha"] == 0 and vals["beta"] == 0:
        raise ConfigError("dynamics needs alpha != 0 (alpha = 0 only with beta != 0)")
    if command == "ku-compare" and vals["alpha"] == 0:
        raise ConfigError("ku-compare needs alpha != 0")
    if command in ("sweep-tstar", "sweep-rmin"):
        fixed_key = "fixed_two_s" if command == "sweep-tstar" else "fixed_two_j"
        has_fixed = vals.get(fixed_key) is not None
        has_ratio = vals.get("ratio_j_over_s") is not None
        if has_fixed == has_ratio:
            raise ConfigError(f"{command} needs exactly one of {_flag(fixed_key)} or --ratio-j-over-s")
        values_key = "two_j_values" if command == "sweep-tstar" else "two_s_values"
        if len(vals[values_key]) < 2:
            raise ConfigError(f"{values_key} needs at least two entries")
    if command == "perturb" and not vals["beta_list"]:
        raise ConfigError("beta_list must be nonempty")


def parse_config(argv) -> RunConfig:
    """Resolve argv (+ optional config file) into a validated RunConfig.

    Precedence: CLI flags override config-file keys override defaults.
    """
    ns = _build_parser().parse_args(argv)
    command = ns.command
    table = _COMMANDS[command]
    vals = {key: None for key in table["fields"]}
    vals.update({k: v for k, v in _COMMON_DEFAULTS.items() if k in table["fields"]})
    vals.update(table["defaults"])
    if ns.config is not None:
        vals.update(_read_config_file(ns.config, set(table["fields"])))
    for key in table["fields"]:
        cli_val = getattr(ns, key)
        if cli_val is not None:
            vals[key] = cli_val
    _validate(command, vals)
    return RunConfig(command=command, values=vals)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _atomic_write(path, text: str):
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(dir=parent, prefix=path.name + ".", suffix=".tmp")
    except OSError as exc:
        raise ConfigError(f"cannot write to {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_json_safe(obj), sort_keys=True, separators=(", ", ": "))


def _write_meta(path, config: RunConfig):
    meta = {"config": config.to_meta(), "version": __version__}
    _atomic_write(str(path) + ".meta.jsonl", _dump_json(meta) + "\n")


def emit_timeseries(run: DynamicsRun, path, config: RunConfig):
    """Dynamics CSV (one row per sample) plus a sibling metadata file."""
    if len(run.times) == 0:
        raise ValueError("no records to write")
    cols = [run.times, run.sx, run.sy, run.sz, run.theta_z, run.delta_s_zbar,
            run.r, run.xi2, run.entropy_field, run.schmidt_k]
    lines = [TIMESERIES_HEADER]
    for row in zip(*cols):
        lines.append(",".join(_fmt(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")
    _write_meta(path, config)


def emit_sweep(result: SweepResult, path, config: RunConfig):
    """Sweep CSV plus a separate JSON summary with the fitted slope."""
    if not result.rows:
        raise ValueError("no records to write")
    lines = [SWEEP_HEADER]
    for row in result.rows:
        lines.append(",".join(_fmt(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")
    summary = {
        "slope": result.slope,
        "slope_stderr": result.slope_stderr,
        "intercept": result.intercept,
        "residuals": [float(x) for x in result.residuals],
        "config": config.to_meta(),
        "version": __version__,
    }
    _atomic_write(str(path) + ".summary.json", _dump_json(summary) + "\n")


def _propagator_from(cfg: RunConfig) -> PropagatorConfig:
    return PropagatorConfig(
        method=cfg.method,
        dense_threshold=cfg.dense_threshold,
        krylov_max_dim=cfg.krylov_max_dim,
        step_tolerance=cfg.step_tolerance,
        dt=cfg.dt,
    )


def _run_dynamics_cmd(cfg: RunConfig):
    run = run_dynamics(
        SpinQuantum(cfg.two_s), SpinQuantum(cfg.two_j),
        ModelParams(alpha=cfg.alpha, beta=cfg.beta),
        cfg.t_max, cfg.dt, _propagator_from(cfg),
    )
    emit_timeseries(run, cfg.output, cfg)


def _sweep_spec_from(cfg: RunConfig) -> SweepSpec:
    if cfg.command == "sweep-tstar":
        values = tuple(SpinQuantum(v) for v in cfg.two_j_values)
        fixed = SpinQuantum(cfg.fixed_two_s) if cfg.fixed_two_s is not None else None
        variable = "J"
    else:
        values = tuple(SpinQuantum(v) for v in cfg.two_s_values)
        fixed = SpinQuantum(cfg.fixed_two_j) if cfg.fixed_two_j is not None else None
        variable = "S"
    return SweepSpec(
        variable=variable,
        values=values,
        t_max=cfg.t_max,
        dt=cfg.dt,
        fixed=fixed,
        ratio_j_over_s=cfg.ratio_j_over_s,
        params=ModelParams(alpha=cfg.alpha, beta=cfg.beta),
    )


def _run_sweep_cmd(cfg: RunConfig):
    spec = _sweep_spec_from(cfg)
    prop = _propagator_from(cfg)
    if cfg.command == "sweep-tstar":
        result = sweep_t_star_vs_j(spec, prop, workers=cfg.workers)
    else:
        result = sweep_rmin_vs_s(spec, prop, workers=cfg.workers)
    emit_sweep(result, cfg.output, cfg)


def _run_perturb_cmd(cfg: RunConfig):
    points = perturbation_study(
        SpinQuantum(cfg.two_s), SpinQuantum(cfg.two_j), cfg.alpha,
        cfg.beta_list, cfg.t_max, cfg.dt, _propagator_from(cfg),
    )
    lines = [PERTURB_HEADER]
    for pt in points:
        lines.append(",".join(_fmt(x) for x in (pt.beta, pt.t_star, pt.r_min)))
    _atomic_write(cfg.output, "\n".join(lines) + "\n")
    _write_meta(cfg.output, cfg)


def _run_ku_compare_cmd(cfg: RunConfig):
    res = ku_comparison(
        SpinQuantum(cfg.two_s), SpinQuantum(cfg.two_j), cfg.alpha,
        cfg.t_max, cfg.dt, _propagator_from(cfg),
    )
    cols = [res.times, res.swap_sx, res.swap_sy, res.swap_sz,
            res.ku_sx, res.ku_sy, res.ku_sz, res.ku_sx_analytic]
    lines = [KU_HEADER]
    for row in zip(*cols):
        lines.append(",".join(_fmt(x) for x in row))
    _atomic_write(cfg.output, "\n".join(lines) + "\n")
    _write_meta(cfg.output, cfg)


def _run_levelscheme_cmd(cfg: RunConfig):
    scheme = LevelScheme(
        g_minus_e1=cfg.g_minus_e1, g_minus_e2=cfg.g_minus_e2,
        g_plus_e1=cfg.g_plus_e1, g_plus_e2=cfg.g_plus_e2,
        delta_e1=cfg.detuning_e1, delta_e2=cfg.detuning_e2,
    )
    ratio = detuning_ratio_for_cancellation(scheme)
    coeffs = effective_couplings(scheme)
    payload = {
        "cancellation_detuning_ratio": ratio,
        "detuning_ratio": scheme.delta_e1 / scheme.delta_e2,
        "diag_minus": coeffs.diag_minus,
        "diag_plus": coeffs.diag_plus,
        "offdiag": coeffs.offdiag,
    }
    for key, val in payload.items():
        print(f"{key} = {_fmt(val)}")
    if cfg.output is not None:
        _atomic_write(cfg.output, _dump_json({**payload, "config": cfg.to_meta(),
                                              "version": __version__}) + "\n")


_DISPATCH = {
    "dynamics": _run_dynamics_cmd,
    "sweep-tstar": _run_sweep_cmd,
    "sweep-rmin": _run_sweep_cmd,
    "perturb": _run_perturb_cmd,
    "ku-compare": _run_ku_compare_cmd,
    "levelscheme": _run_levelscheme_cmd,
}


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        _DISPATCH[cfg.command](cfg)
    except SystemExit:
        raise
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
