"""Batch front-end: config parsing, eigensolves, sweeps, report files.

Subcommands: ``eig``, ``spectra``, ``sweep-critical``, ``sweep-ilp``.  All
inputs come from one flat YAML config (every key documented in DEFAULTS);
command-line flags override file keys.  Outputs are deterministic: identical
configs produce byte-identical delimited files.  Exit codes: 0 success,
1 config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import yaml

from . import plots
from .eigen import (
    ClassifyThresholds,
    NumericalError,
    find_critical_coupling,
    solve,
    write_eigen_report,
)
from .model import BasisSizeError, ModelParams
from .spectra import (
    PopulationModel,
    SpectrumShapeError,
    absorption_spectrum,
    bound_absorption,
    default_grid,
    ilp_curve,
    lpl_spectrum,
    write_series_csv,
    write_series_json,
    write_sticks_csv,
)


class ConfigError(ValueError):
    """Invalid, unknown or inconsistent configuration keys."""


#: Every supported config key with its default.  Frequencies, rates and grid
#: coordinates are in units of vib_freq; rabi_collective is sqrt(N)*rabi_single.
DEFAULTS: dict = {
    # physical parameters
    "n_molecules": 20,
    "huang_rhys": 1.0,
    "vib_freq": 1.0,
    "rabi_single": None,        # set exactly one of rabi_single / rabi_collective
    "rabi_collective": 2.4,
    "detuning": 0.0,
    "kappa": 0.9,
    "gamma_e_collective": 3.0,
    "nu_max": 4,
    "nu_max_ground": 2,
    "dipole_unit": 1.0,
    # frequency grid (units of vib_freq, relative to the 0-0 line)
    "grid_min": -2.5,
    "grid_max": 2.5,
    "grid_step": 0.002,
    # emission population model
    "pop_kind": "uniform",      # uniform | gaussian | delta
    "pop_window_min": -math.inf,
    "pop_window_max": 1.3,      # highest-energy polariton included (estimate)
    "pop_center": 0.0,
    "pop_sigma": 0.5,
    "pop_target": 0,
    # lineshape and absorption options
    "kappa_nr": 0.0,
    "kappa_floor": 0.001,
    "pump_strength": 1.0,
    "bound_broadening": 0.0,
    "lpl_channels": [0, 1, 2],  # nu_max_ground values for the LPL outputs
    # classification thresholds (fractions of total strength)
    "eps_dark": 1e-4,
    "eps_emit": 1e-6,
    "sym_min": 0.5,
    "xb_mu_max": 0.05,
    "xb_window_lo": 0.15,
    "xb_window_hi": 0.65,
    # critical-coupling sweep (bracket in collective sqrt(N)*rabi units)
    "sweep_n_list": [1, 2, 3, 4, 5, 6],
    "sweep_lambda_list": [1.0],
    "sweep_bracket_lo": 1.0,
    "sweep_bracket_hi": 3.2,
    "sweep_tol": 1e-6,
    # I_LP pump sweep
    "ilp_omega_p_min": -2.0,
    "ilp_omega_p_max": 2.0,
    "ilp_omega_p_step": 0.05,
    "ilp_sigma_p": 0.5,
    "ilp_channels": [0, 1, 2],
    # output
    "out_dir": "out",
    "format": "csv",            # csv | json
    "threads": 1,
    "figures": True,
    "basis_cap": 200_000,
}

_INT_KEYS = {"n_molecules", "nu_max", "nu_max_ground", "pop_target", "threads", "basis_cap"}
_LIST_KEYS = {"lpl_channels", "sweep_n_list", "sweep_lambda_list", "ilp_channels"}
_STR_KEYS = {"pop_kind", "format", "out_dir"}
_BOOL_KEYS = {"figures"}


def _key_line(raw_text: str | None, key: str) -> str:
    if raw_text is None:
        return ""
    for n, line in enumerate(raw_text.splitlines(), start=1):
        if line.split("#")[0].strip().startswith(f"{key}:"):
            return f" (line {n})"
    return ""


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    """Merge DEFAULTS, a YAML file and CLI overrides; reject unknown keys."""
    resolved = dict(DEFAULTS)
    provided: set[str] = set()
    raw_text = None
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw_text = fh.read()
        try:
            data = yaml.safe_load(raw_text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a flat mapping of key: value")
        for key, value in data.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}{_key_line(raw_text, key)}")
            resolved[key] = value
            provided.add(key)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        resolved[key] = value
        provided.add(key)
    # the two Rabi spellings shadow each other: an explicit rabi_single wins
    # over the default rabi_collective, but giving both explicitly is an error
    if "rabi_single" in provided and "rabi_collective" in provided:
        raise ConfigError("set exactly one of rabi_single / rabi_collective")
    if "rabi_single" in provided and resolved["rabi_single"] is not None:
        resolved["rabi_collective"] = None
    _validate_types(resolved, raw_text)
    return resolved


def _validate_types(cfg: dict, raw_text: str | None) -> None:
    for key, value in cfg.items():
        where = _key_line(raw_text, key)
        if key in ("rabi_single", "rabi_collective") and value is None:
            continue
        if key in _BOOL_KEYS:
            if not isinstance(value, bool):
                raise ConfigError(f"key {key!r} must be a boolean{where}")
        elif key in _INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"key {key!r} must be an integer{where}")
        elif key in _LIST_KEYS:
            if not isinstance(value, list) or not value or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                raise ConfigError(f"key {key!r} must be a non-empty list of numbers{where}")
        elif key in _STR_KEYS:
            if not isinstance(value, str):
                raise ConfigError(f"key {key!r} must be a string{where}")
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"key {key!r} must be a number{where}")
    if cfg["pop_kind"] not in ("uniform", "gaussian", "delta"):
        raise ConfigError("pop_kind must be one of: uniform, gaussian, delta")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg["rabi_single"] is not None and cfg["rabi_collective"] is not None:
        raise ConfigError("set exactly one of rabi_single / rabi_collective")


def model_params(cfg: dict) -> ModelParams:
    if cfg["rabi_single"] is not None:
        rabi = float(cfg["rabi_single"])
    else:
        rabi = float(cfg["rabi_collective"]) / math.sqrt(cfg["n_molecules"])
    try:
        return ModelParams(
            n_molecules=cfg["n_molecules"],
            huang_rhys=float(cfg["huang_rhys"]),
            vib_freq=float(cfg["vib_freq"]),
            rabi_single=rabi * float(cfg["vib_freq"]),
            detuning=float(cfg["detuning"]) * float(cfg["vib_freq"]),
            kappa=float(cfg["kappa"]) * float(cfg["vib_freq"]),
            gamma_e_collective=float(cfg["gamma_e_collective"]) * float(cfg["vib_freq"]),
            nu_max=cfg["nu_max"],
            nu_max_ground=cfg["nu_max_ground"],
            dipole_unit=float(cfg["dipole_unit"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def thresholds(cfg: dict) -> ClassifyThresholds:
    return ClassifyThresholds(
        eps_dark=float(cfg["eps_dark"]),
        eps_emit=float(cfg["eps_emit"]),
        sym_min=float(cfg["sym_min"]),
        xb_mu_max=float(cfg["xb_mu_max"]),
        xb_window_lo=float(cfg["xb_window_lo"]),
        xb_window_hi=float(cfg["xb_window_hi"]),
    )


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, allow_nan=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _meta(cfg: dict, command: str) -> dict:
    meta = {f"cfg.{k}": v for k, v in cfg.items()}
    meta["command"] = command
    meta["config_hash"] = config_hash(cfg)
    meta["units"] = "frequencies and rates in vib_freq; spectra in arbitrary units"
    return meta


def _grid(cfg: dict) -> np.ndarray:
    if cfg["grid_step"] <= 0 or cfg["grid_max"] <= cfg["grid_min"]:
        raise ConfigError("grid requires grid_min < grid_max and grid_step > 0")
    return default_grid(float(cfg["grid_min"]), float(cfg["grid_max"]), float(cfg["grid_step"]))


def _population(cfg: dict, eig) -> PopulationModel:
    omega_v = float(cfg["vib_freq"])
    kind = cfg["pop_kind"]
    if kind == "uniform":
        return PopulationModel.uniform_window(
            eig, float(cfg["pop_window_min"]) * omega_v, float(cfg["pop_window_max"]) * omega_v
        )
    if kind == "gaussian":
        return PopulationModel.gaussian(
            eig, float(cfg["pop_center"]) * omega_v, float(cfg["pop_sigma"]) * omega_v
        )
    return PopulationModel.delta(eig, int(cfg["pop_target"]))


def _write_series(series, path_base: str, fmt: str, meta: dict) -> list[str]:
    path = f"{path_base}.{fmt}"
    if fmt == "csv":
        write_series_csv(series, path, meta)
    else:
        write_series_json(series, path, meta)
    return [path]


def run_eig(cfg: dict, out_dir: str) -> list[str]:
    params = model_params(cfg)
    eig = solve(params, thresholds=thresholds(cfg), cap=cfg["basis_cap"])
    meta = _meta(cfg, "eig")
    path = os.path.join(out_dir, f"eigen_report.{cfg['format']}")
    write_eigen_report(eig, path, fmt=cfg["format"], meta=meta)
    written = [path]
    if cfg["figures"]:
        fig_path = os.path.join(out_dir, "eigen_levels.png")
        plots.figure_eigen_levels(eig, fig_path)
        written.append(fig_path)
    return written


def run_spectra(cfg: dict, out_dir: str) -> list[str]:
    params = model_params(cfg)
    eig = solve(params, thresholds=thresholds(cfg), cap=cfg["basis_cap"])
    grid = _grid(cfg)
    meta = _meta(cfg, "spectra")
    fmt = cfg["format"]
    written: list[str] = []

    absorption = absorption_spectrum(
        eig, params, grid,
        pump_strength=float(cfg["pump_strength"]), kappa_nr=float(cfg["kappa_nr"]) * params.vib_freq
    )
    peak = absorption.values.max() if absorption.values.max() > 0 else 1.0
    normalized = type(absorption)(
        grid=absorption.grid, values=absorption.values / peak, sticks=absorption.sticks,
        meta={**absorption.meta, "normalized": True},
    )
    written += _write_series(normalized, os.path.join(out_dir, "absorption"), fmt, meta)
    written += _write_series(absorption, os.path.join(out_dir, "absorption_raw"), fmt, meta)

    bound = bound_absorption(
        eig, grid, broadening=float(cfg["bound_broadening"]) * params.vib_freq,
        kappa_floor=float(cfg["kappa_floor"]),
    )
    written += _write_series(bound, os.path.join(out_dir, "bound_absorption"), fmt, meta)
    sticks_path = os.path.join(out_dir, "bound_sticks.csv")
    write_sticks_csv(bound, sticks_path, meta, labels=eig.labels)
    written.append(sticks_path)

    pop = _population(cfg, eig)
    lpl_by_channel = {}
    for cap in cfg["lpl_channels"]:
        cap = int(cap)
        series = lpl_spectrum(eig, pop, grid, cap, kappa_floor=float(cfg["kappa_floor"]))
        lpl_by_channel[cap] = series
        peak = series.values.max() if series.values.max() > 0 else 1.0
        normalized = type(series)(
            grid=series.grid, values=series.values / peak, sticks=series.sticks,
            meta={**series.meta, "normalized": True},
        )
        written += _write_series(normalized, os.path.join(out_dir, f"lpl_nug{cap}"), fmt, meta)
        written += _write_series(series, os.path.join(out_dir, f"lpl_nug{cap}_raw"), fmt, meta)

    if cfg["figures"]:
        fig_path = os.path.join(out_dir, "spectra.png")
        plots.figure_spectra(absorption, bound, lpl_by_channel, fig_path)
        written.append(fig_path)
    return written


def run_sweep_critical(cfg: dict, out_dir: str) -> list[str]:
    n_list = [int(n) for n in cfg["sweep_n_list"]]
    lam_list = [float(x) for x in cfg["sweep_lambda_list"]]
    if not n_list or not lam_list:
        raise ConfigError("sweep_n_list and sweep_lambda_list must be non-empty")
    points = [(n, lam) for lam in lam_list for n in n_list]

    def one_point(point):
        n, lam_sq = point
        params = ModelParams(
            n_molecules=n,
            huang_rhys=lam_sq,
            vib_freq=float(cfg["vib_freq"]),
            nu_max=cfg["nu_max"],
            nu_max_ground=cfg["nu_max_ground"],
        )
        bracket = (
            float(cfg["sweep_bracket_lo"]) * params.vib_freq / math.sqrt(n),
            float(cfg["sweep_bracket_hi"]) * params.vib_freq / math.sqrt(n),
        )
        row = {"n_molecules": n, "huang_rhys": lam_sq}
        try:
            crit = find_critical_coupling(
                params, bracket, tol=float(cfg["sweep_tol"]), cap=cfg["basis_cap"]
            )
            row.update(
                rabi_single=crit.rabi_single,
                rabi_collective=crit.rabi_collective,
                eigenvalue_residual=crit.eigenvalue,
                mu_fraction=crit.mu_fraction,
                evaluations=crit.evaluations,
                status="ok",
            )
        except NumericalError as exc:
            row.update(status=f"error: {exc}".replace(",", ";"))
        return row

    workers = max(1, int(cfg["threads"]))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_point, points))
    else:
        rows = [one_point(p) for p in points]

    meta = _meta(cfg, "sweep-critical")
    path = os.path.join(out_dir, "critical_couplings.csv")
    cols = [
        "n_molecules", "huang_rhys", "rabi_single", "rabi_collective",
        "eigenvalue_residual", "mu_fraction", "evaluations", "status",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in sorted(meta.items()):
            fh.write(f"# {key}={value}\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            cells = []
            for c in cols:
                v = row.get(c, "")
                cells.append(f"{v:.9g}" if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")
    written = [path]
    if cfg["figures"]:
        fig_path = os.path.join(out_dir, "critical_couplings.png")
        plots.figure_critical_sweep(rows, fig_path)
        written.append(fig_path)
    return written


def run_sweep_ilp(cfg: dict, out_dir: str) -> list[str]:
    params = model_params(cfg)
    eig = solve(params, thresholds=thresholds(cfg), cap=cfg["basis_cap"])
    lo, hi, step = (
        float(cfg["ilp_omega_p_min"]),
        float(cfg["ilp_omega_p_max"]),
        float(cfg["ilp_omega_p_step"]),
    )
    if step <= 0 or hi <= lo:
        raise ConfigError("ilp sweep requires ilp_omega_p_min < ilp_omega_p_max and a positive step")
    omega_p = default_grid(lo, hi, step)
    channels = [int(c) for c in cfg["ilp_channels"]]
    family = ilp_curve(
        eig, omega_p, float(cfg["ilp_sigma_p"]) * params.vib_freq, channels,
        kappa_floor=float(cfg["kappa_floor"]),
    )
    meta = _meta(cfg, "sweep-ilp")
    path = os.path.join(out_dir, "ilp_curve.csv")
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in sorted({**next(iter(family.values())).meta, **meta}.items()):
            fh.write(f"# {key}={value}\n")
        fh.write("omega_p_over_wv," + ",".join(f"ilp_nug{c}" for c in channels) + "\n")
        for g in range(len(omega_p)):
            cells = [f"{omega_p[g]:.9g}"] + [f"{family[c].values[g]:.9g}" for c in channels]
            fh.write(",".join(cells) + "\n")
    written = [path]
    if cfg["figures"]:
        fig_path = os.path.join(out_dir, "ilp_curve.png")
        plots.figure_ilp(family, fig_path)
        written.append(fig_path)
    return written


_COMMANDS = {
    "eig": run_eig,
    "spectra": run_spectra,
    "sweep-critical": run_sweep_critical,
    "sweep-ilp": run_sweep_ilp,
}


def _parse_set(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        out[key.strip()] = yaml.safe_load(raw)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htcpol",
        description="Spectroscopy of vibronically coupled emitters in a cavity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="YAML config file (flat keys)")
        p.add_argument("--out", default=None, help="output directory (default: config out_dir)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a single config key (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = _parse_set(args.set)
        if args.format is not None:
            overrides["format"] = args.format
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.no_figures:
            overrides["figures"] = False
        if args.out is not None:
            overrides["out_dir"] = args.out
        cfg = load_config(args.config, overrides)
        out_dir = cfg["out_dir"]
        os.makedirs(out_dir, exist_ok=True)
        written = _COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, BasisSizeError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, SpectrumShapeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
