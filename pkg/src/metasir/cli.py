"""Command-line front end: analytic sweeps, simulations, and comparisons as CSV.

Thresholds are expressed in dB on the command line and converted exactly once
here; everything below this module works on the linear scale.  Every artifact
is a UTF-8 CSV with a header row plus a JSON sidecar <name>.meta.json carrying
the full resolved spec, the seed, and the tool version.  Exit codes: 0 ok,
2 config error, 4 I/O error, 3 numeric failure (partial outputs are written
and flagged in the sidecar).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .core import Direction, PowerModel, SystemConfig, ConfigError, validate_config
from .metadist import (
    InvalidMoments,
    beta_ccdf,
    beta_fit,
    chebyshev_bounds,
    gil_pelaez_curve,
    markov_bounds,
    paley_zygmund,
)
from .moments import (
    B1,
    QuadratureFailure,
    downlink_mld,
    downlink_mld_log,
    epsilon_opt_uplink,
    imaginary_moment_table,
    mean_and_variance,
    moment,
    rho_opt_downlink,
)
from .montecarlo import empirical_meta, k_function_experiment, run_experiment, write_samples
from .quadrature import SlowDecay

__all__ = [
    "ExperimentSpec",
    "ConfigParseError",
    "UnknownPreset",
    "figure_preset",
    "spec_from_config",
    "spec_to_config",
    "run",
    "main",
]

COMMANDS = ("moments", "meta", "mld", "bounds", "simulate", "kfun", "compare", "opt")

_SCHEMA_VERSION = 1
_NUMERIC_ERRORS = (QuadratureFailure, SlowDecay, InvalidMoments, ArithmeticError)


class ConfigParseError(ValueError):
    """Bad config file, bad flag value, or an inconsistent spec."""


class UnknownPreset(ConfigParseError):
    pass


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _parse_grid(text) -> tuple:
    """Comma list or inclusive start:step:stop sweep; 'inf' allowed."""
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    text = text.strip()
    if not text:
        raise ConfigParseError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigParseError(f"sweep must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0.0 or stop < start:
            raise ConfigParseError(f"sweep {text!r} must ascend with positive step")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + k * step for k in range(n))
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigParseError(f"bad grid {text!r}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved run description; all grids linear-domain-free (dB kept)."""

    command: str
    direction: str = "uplink"
    lam: float = 1.0
    alpha: float = 4.0
    power_model: str = "fpc"
    eps: tuple = (0.5,)
    theta_db: tuple = (0.0,)
    b: tuple = (1.0, 2.0)
    x_grid: tuple = _parse_grid("0.02:0.02:0.98")
    p_hat_db: tuple = (math.inf,)
    radii: tuple = _parse_grid("0:0.1:1.5")
    c: tuple = (1e-3, 1.0, 1e3)
    n_realizations: int = 34
    seed: int = 0
    jobs: int = 1
    output: str = "out"
    name: str = ""


_GRID_FIELDS = ("eps", "theta_db", "b", "x_grid", "p_hat_db", "radii", "c")
_FLOAT_FIELDS = ("lam", "alpha")
_INT_FIELDS = ("n_realizations", "seed", "jobs")


def _validate_spec(spec: ExperimentSpec) -> ExperimentSpec:
    if spec.command not in COMMANDS:
        raise ConfigParseError(f"unknown command {spec.command!r}")
    try:
        Direction(spec.direction)
        PowerModel(spec.power_model)
    except ValueError as exc:
        raise ConfigParseError(str(exc)) from exc
    for field in _GRID_FIELDS:
        grid = getattr(spec, field)
        if len(grid) == 0:
            raise ConfigParseError(f"{field} grid is empty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigParseError(f"{field} grid must be sorted ascending")
    if any(not 0.0 < x < 1.0 for x in spec.x_grid):
        raise ConfigParseError("x_grid values must lie strictly inside (0,1)")
    if spec.n_realizations < 1:
        raise ConfigParseError("n_realizations must be at least 1")
    if spec.jobs < 1:
        raise ConfigParseError("jobs must be at least 1")
    if (PowerModel(spec.power_model) is PowerModel.TFPC
            and Direction(spec.direction) is Direction.DOWNLINK):
        raise ConfigParseError("capped power control is an uplink model here")
    # surface invalid physical parameters now rather than mid-sweep
    try:
        for eps in spec.eps:
            for p_hat_db in spec.p_hat_db:
                _cfg_for(spec, eps, spec.theta_db[0], p_hat_db)
        for theta_db in spec.theta_db:
            _cfg_for(spec, spec.eps[0], theta_db)
    except ConfigError as exc:
        raise ConfigParseError(str(exc)) from exc
    return spec


def _cfg_for(spec: ExperimentSpec, eps: float, theta_db: float,
             p_hat_db: float = math.inf) -> SystemConfig:
    model = PowerModel(spec.power_model)
    if model is PowerModel.TFPC and math.isinf(p_hat_db):
        model = PowerModel.FPC  # an uncapped row serves as the reference curve
    return validate_config(SystemConfig(
        lam=spec.lam, alpha=spec.alpha, epsilon=eps,
        theta=_db_to_linear(theta_db), direction=Direction(spec.direction),
        power_model=model,
        p_hat=math.inf if math.isinf(p_hat_db) else _db_to_linear(p_hat_db)))


# ---- presets ------------------------------------------------------------------------

_EPS_MIX = (0.0, 0.5, 1.0)
_PRESETS: dict[str, dict] = {
    "fig2": dict(command="kfun", lam=1.0, radii="0:0.1:1.5", n_realizations=1000),
    "fig4": dict(command="moments", direction="uplink", alpha=4.0, eps=_EPS_MIX,
                 theta_db="-10:2:20", b=(1.0, 2.0)),
    "fig5": dict(command="mld", direction="uplink", alpha=3.0,
                 eps=(0.0, 0.25, 0.5, 0.75, 1.0), theta_db="-10:2:20"),
    "fig6": dict(command="mld", direction="uplink", alpha=4.0,
                 eps=(0.0, 0.25, 0.5, 0.75, 1.0), theta_db="-10:2:20"),
    "fig7": dict(command="compare", direction="uplink", alpha=3.0, eps=(0.5,),
                 theta_db=(-5.0,)),
    "fig8": dict(command="compare", direction="uplink", alpha=4.0, eps=_EPS_MIX,
                 theta_db=(0.0,)),
    "fig9": dict(command="compare", direction="uplink", alpha=4.0, eps=(0.5,),
                 theta_db=(0.0,)),
    "fig11": dict(command="moments", direction="downlink", alpha=4.0, eps=_EPS_MIX,
                  theta_db="-10:2:20", b=(1.0, 2.0)),
    "fig12": dict(command="moments", direction="downlink", alpha=3.0, eps=_EPS_MIX,
                  theta_db="-10:2:20", b=(1.0, 2.0)),
    "fig13": dict(command="mld", direction="downlink", alpha=3.0,
                  eps=(0.0, 1.0 / 3.0, 2.0 / 3.0), theta_db="-10:1:10"),
    "fig14": dict(command="mld", direction="downlink", alpha=4.0,
                  eps=(0.0, 0.25, 0.5), theta_db="-10:1:10"),
    "fig15": dict(command="compare", direction="downlink", alpha=3.0, eps=(0.5,),
                  theta_db=(-5.0,)),
    "fig16": dict(command="compare", direction="downlink", alpha=4.0, eps=_EPS_MIX,
                  theta_db=(0.0,)),
    "tfpc": dict(command="moments", direction="uplink", power_model="tfpc",
                 lam=0.1, alpha=4.0, eps=(1.0,), theta_db="-10:2:10",
                 b=(1.0, 2.0), p_hat_db=(0.0, 5.0, 10.0, 15.0, math.inf)),
}


def _preset_fields(name: str) -> dict:
    try:
        fields = dict(_PRESETS[name])
    except KeyError:
        raise UnknownPreset(f"no preset named {name!r}; known: {sorted(_PRESETS)}")
    for key in _GRID_FIELDS:
        if key in fields:
            fields[key] = _parse_grid(fields[key])
    return fields


def figure_preset(name: str) -> ExperimentSpec:
    """Full spec reproducing one figure's underlying data."""
    return _validate_spec(ExperimentSpec(name=name, **_preset_fields(name)))


# ---- flat config file ----------------------------------------------------------------

def spec_to_config(spec: ExperimentSpec) -> str:
    """Serialize to the flat key = value file format (lossless round trip)."""
    lines = []
    for field in dataclasses.fields(ExperimentSpec):
        value = getattr(spec, field.name)
        if field.name in _GRID_FIELDS:
            value = ",".join(repr(v) for v in value)
        lines.append(f"{field.name} = {value}")
    return "\n".join(lines) + "\n"


def spec_from_config(text: str) -> ExperimentSpec:
    fields = _fields_from_config(text)
    if "command" not in fields:
        raise ConfigParseError("config file must set command")
    return _validate_spec(ExperimentSpec(**fields))


def _fields_from_config(text: str) -> dict:
    known = {f.name for f in dataclasses.fields(ExperimentSpec)}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigParseError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _GRID_FIELDS:
                out[key] = _parse_grid(value)
            elif key in _FLOAT_FIELDS:
                out[key] = float(value)
            elif key in _INT_FIELDS:
                out[key] = int(value)
            else:
                out[key] = value
        except ValueError as exc:
            raise ConfigParseError(f"line {lineno}: {exc}") from exc
    return out


# ---- CSV plumbing --------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


class _Artifacts:
    """Collects written files and sweep points that failed numerically."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.paths: list[Path] = []
        self.failures: list[dict] = []
        self.root = Path(spec.output)
        self.root.mkdir(parents=True, exist_ok=True)

    def write(self, stem: str, columns, rows, extra_meta=None):
        path = self.root / f"{stem}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        meta = {
            "tool": "metasir",
            "version": __version__,
            "schema": _SCHEMA_VERSION,
            "columns": list(columns),
            "spec": _spec_dict(self.spec),
            "seed": self.spec.seed,
            "failed_points": self.failures,
        }
        if extra_meta:
            meta.update(extra_meta)
        sidecar = path.with_suffix(".meta.json")
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_fmt),
                           encoding="utf-8")
        self.paths.extend([path, sidecar])
        return path


def _spec_dict(spec: ExperimentSpec) -> dict:
    d = dataclasses.asdict(spec)
    for key in _GRID_FIELDS:
        d[key] = [_fmt(v) for v in d[key]]
    return d


def _stem(spec: ExperimentSpec, eps=None) -> str:
    base = spec.name or spec.command
    if eps is None:
        return base
    return f"{base}-eps{eps:g}" if len(spec.eps) > 1 else base


# ---- command implementations ----------------------------------------------------------

def _run_moments(spec: ExperimentSpec, art: _Artifacts):
    tfpc = PowerModel(spec.power_model) is PowerModel.TFPC
    columns = ["theta_db", "eps"] + (["p_hat_db"] if tfpc else []) \
        + ["b", "re", "im", "abs_err"]
    rows = []
    for theta_db in spec.theta_db:
        for eps in spec.eps:
            for p_hat_db in (spec.p_hat_db if tfpc else (math.inf,)):
                cfg = _cfg_for(spec, eps, theta_db, p_hat_db)
                for b in spec.b:
                    head = [theta_db, eps] + ([p_hat_db] if tfpc else []) + [b]
                    try:
                        mv = moment(cfg, b)
                    except _NUMERIC_ERRORS as exc:
                        art.failures.append({"row": [_fmt(v) for v in head],
                                             "error": str(exc)})
                        rows.append(head + [math.nan, math.nan, math.nan])
                        continue
                    value = complex(mv.value)
                    rows.append(head + [value.real, value.imag, mv.abs_error])
    art.write(_stem(spec), columns, rows)


def _run_mld(spec: ExperimentSpec, art: _Artifacts):
    downlink = Direction(spec.direction) is Direction.DOWNLINK
    rows = []
    for theta_db in spec.theta_db:
        for eps in spec.eps:
            cfg = _cfg_for(spec, eps, theta_db)
            if downlink:
                log_mld = downlink_mld_log(cfg.theta, cfg.alpha, cfg.epsilon)
                value = downlink_mld(cfg.theta, cfg.alpha, cfg.epsilon)
            else:
                value = float(np.real(moment(cfg, -1).value))
                log_mld = math.log(value) if 0.0 < value < math.inf else math.inf
            diverged = math.isinf(log_mld)
            rows.append([theta_db, eps, value, log_mld, diverged])
    extra = {}
    if downlink and any(e == 0.0 for e in spec.eps):
        # without compensation the delay turns infinite past this threshold
        theta_c = B1 * (spec.alpha / 2.0 - 1.0)
        extra["critical_theta_db"] = {"eps": 0.0,
                                      "theta_db": 10.0 * math.log10(theta_c)}
    art.write(_stem(spec), ["theta_db", "eps", "mld", "log_mld", "diverged"],
              rows, extra)


def _gp_values(cfg: SystemConfig, x_grid):
    table = imaginary_moment_table(cfg)
    curve = gil_pelaez_curve(table, np.asarray(x_grid))
    return curve.values, curve.metadata.get("max_abs_error")


def _run_meta(spec: ExperimentSpec, art: _Artifacts):
    for eps in spec.eps:
        cfg = _cfg_for(spec, eps, spec.theta_db[0])
        values, err = _gp_values(cfg, spec.x_grid)
        rows = [[x, v] for x, v in zip(spec.x_grid, values)]
        art.write(_stem(spec, eps), ["x", "fbar"], rows,
                  {"theta_db": spec.theta_db[0], "eps": eps,
                   "inversion_abs_error": err})


def _bounds_columns():
    cols = []
    for b in range(1, 5):
        cols += [f"markov_lower_b{b}", f"markov_upper_b{b}"]
    return cols + ["chebyshev_lower", "chebyshev_upper", "paley_zygmund"]


def _bounds_row(ms, x):
    row = []
    for b in range(1, 5):
        row.extend(markov_bounds(ms[:b], b, x))
    row.extend(chebyshev_bounds(ms[0], ms[1], x))
    # paley_zygmund takes the target as a fraction of the mean; vacuous past it
    row.append(paley_zygmund(ms[0], ms[1], x / ms[0]) if x < ms[0] else 0.0)
    return row


def _run_bounds(spec: ExperimentSpec, art: _Artifacts):
    for eps in spec.eps:
        cfg = _cfg_for(spec, eps, spec.theta_db[0])
        ms = [float(np.real(moment(cfg, b).value)) for b in range(1, 5)]
        values, err = _gp_values(cfg, spec.x_grid)
        rows = [[x, v] + _bounds_row(ms, x)
                for x, v in zip(spec.x_grid, values)]
        art.write(_stem(spec, eps), ["x", "gil_pelaez"] + _bounds_columns(), rows,
                  {"theta_db": spec.theta_db[0], "eps": eps, "moments": ms,
                   "inversion_abs_error": err})


def _run_compare(spec: ExperimentSpec, art: _Artifacts):
    for eps in spec.eps:
        cfg = _cfg_for(spec, eps, spec.theta_db[0])
        values, err = _gp_values(cfg, spec.x_grid)
        m1, m2, _, _ = mean_and_variance(cfg)
        beta_curve = beta_ccdf(beta_fit(m1, m2), np.asarray(spec.x_grid))
        sim = run_experiment(cfg, spec.n_realizations, spec.seed, n_jobs=spec.jobs)
        ecdf = empirical_meta(sim, np.asarray(spec.x_grid))
        ms = [m1, m2] + [float(np.real(moment(cfg, b).value)) for b in (3, 4)]
        rows = [[x, g, e, bv] + _bounds_row(ms, x)
                for x, g, e, bv in zip(spec.x_grid, values,
                                       ecdf.values, beta_curve.values)]
        art.write(_stem(spec, eps),
                  ["x", "gil_pelaez", "empirical", "beta"] + _bounds_columns(), rows,
                  {"theta_db": spec.theta_db[0], "eps": eps, "moments": ms,
                   "inversion_abs_error": err,
                   "n_links": int(sim.n_links)})


def _run_simulate(spec: ExperimentSpec, art: _Artifacts):
    cfg = _cfg_for(spec, spec.eps[0], spec.theta_db[0], spec.p_hat_db[0])
    out = run_experiment(cfg, spec.n_realizations, spec.seed, n_jobs=spec.jobs)
    path = art.root / f"{_stem(spec)}.csv"
    sidecar = write_samples(out, path)
    meta = json.loads(sidecar.read_text())
    meta.update({"tool": "metasir", "version": __version__,
                 "schema": _SCHEMA_VERSION, "spec": _spec_dict(spec)})
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True))
    art.paths.extend([path, sidecar])


def _run_kfun(spec: ExperimentSpec, art: _Artifacts):
    k_emp, k1, k2 = k_function_experiment(spec.lam, spec.n_realizations,
                                          np.asarray(spec.radii), seed=spec.seed)
    rows = [[r, ke, a, b] for r, ke, a, b in zip(spec.radii, k_emp, k1, k2)]
    art.write(_stem(spec), ["r", "k_emp", "k1", "k2"], rows,
              {"lam": spec.lam, "n_realizations": spec.n_realizations})


def _run_opt(spec: ExperimentSpec, art: _Artifacts):
    if Direction(spec.direction) is Direction.UPLINK:
        rows = [[theta_db, epsilon_opt_uplink(_db_to_linear(theta_db), spec.alpha)]
                for theta_db in spec.theta_db]
        art.write(_stem(spec), ["theta_db", "eps_opt"], rows)
    else:
        rows = [[c, rho_opt_downlink(c)] for c in spec.c]
        art.write(_stem(spec), ["c", "rho_opt"], rows)


_RUNNERS = {
    "moments": _run_moments,
    "meta": _run_meta,
    "mld": _run_mld,
    "bounds": _run_bounds,
    "simulate": _run_simulate,
    "kfun": _run_kfun,
    "compare": _run_compare,
    "opt": _run_opt,
}


def run(spec: ExperimentSpec) -> list:
    """Execute a validated spec; returns the artifact paths written."""
    art = _Artifacts(spec)
    _RUNNERS[spec.command](spec, art)
    if art.failures:
        raise QuadratureFailure(
            f"{len(art.failures)} sweep point(s) failed; partial CSV written "
            f"and flagged in the sidecar")
    return art.paths


# ---- argument parsing ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--figure", help="preset name, e.g. fig9 or tfpc")
    common.add_argument("--direction", choices=("uplink", "downlink"))
    common.add_argument("--lam", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--power-model", choices=("fpc", "tfpc"))
    common.add_argument("--eps", help="comma list or start:step:stop")
    common.add_argument("--theta-db", help="comma list or start:step:stop, in dB")
    common.add_argument("--b", help="moment orders, comma list")
    common.add_argument("--x-grid", help="reliability grid inside (0,1)")
    common.add_argument("--p-hat-db", help="power caps in dB; 'inf' for uncapped")
    common.add_argument("--radii", help="K function radii")
    common.add_argument("--c", help="delay constants for downlink opt")
    common.add_argument("--n", type=int, dest="n_realizations")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--output")
    common.add_argument("--name")
    common.add_argument("--dump-config", help="write resolved spec here and exit")
    parser = argparse.ArgumentParser(
        prog="metasir",
        description="SIR meta distribution toolkit for Poisson cellular networks")
    parser.add_argument("--version", action="version",
                        version=f"metasir {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    fields: dict = {"command": args.command}
    if args.figure:
        preset = _preset_fields(args.figure)
        if preset["command"] != args.command:
            raise ConfigParseError(
                f"preset {args.figure!r} belongs to command {preset['command']!r}")
        fields.update(preset)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigParseError(f"cannot read config: {exc}") from exc
        file_fields = _fields_from_config(text)
        if file_fields.get("command", args.command) != args.command:
            raise ConfigParseError(
                f"config file sets command {file_fields['command']!r}")
        fields.update(file_fields)
        fields["command"] = args.command
    for key in ("direction", "lam", "alpha", "power_model",
                "n_realizations", "seed", "jobs", "output", "name"):
        value = getattr(args, key)
        if value is not None:
            fields[key] = value
    for flag, key in (("eps", "eps"), ("theta_db", "theta_db"), ("b", "b"),
                      ("x_grid", "x_grid"), ("p_hat_db", "p_hat_db"),
                      ("radii", "radii"), ("c", "c")):
        value = getattr(args, flag)
        if value is not None:
            fields[key] = _parse_grid(value)
    if "seed" not in fields or fields["seed"] is None:
        fields["seed"] = int(os.environ.get("METASIR_SEED", "0"))
    if not fields.get("name"):
        fields["name"] = args.figure or args.command
    return _validate_spec(ExperimentSpec(**fields))


_VALUE_FLAGS = {
    "--config", "--figure", "--direction", "--lam", "--alpha", "--power-model",
    "--eps", "--theta-db", "--b", "--x-grid", "--p-hat-db", "--radii", "--c",
    "--n", "--seed", "--jobs", "--output", "--name", "--dump-config",
}


def _fuse_values(argv):
    """Join each value flag with its argument so '-10:2:20' and '-1,1' survive
    argparse, which would otherwise read leading-dash values as options."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _report_error(kind: str, exc: BaseException) -> None:
    print(json.dumps({"error": kind, "type": type(exc).__name__,
                      "message": str(exc)}), file=sys.stderr)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(_fuse_values(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(exc.code or 0)
    try:
        spec = _resolve_spec(args)
    except ConfigParseError as exc:
        _report_error("config", exc)
        return 2
    if args.dump_config:
        try:
            Path(args.dump_config).write_text(spec_to_config(spec))
        except OSError as exc:
            _report_error("io", exc)
            return 4
        print(args.dump_config)
        return 0
    try:
        paths = run(spec)
    except _NUMERIC_ERRORS as exc:
        _report_error("numeric", exc)
        return 3
    except OSError as exc:
        _report_error("io", exc)
        return 4
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
