"""Command-line front end: ``bnls <command> --config cfg.json --out dir``.

Commands: extend, scatter, evolve, reconstruct, solve, asymptote, simulate
and compare. Exit status 0 on success, 2 for configuration or input errors
and 3 when a numerical guard fires (its name is printed on stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .asymptotics import (
    perturbation_moments,
    rho_from_norming,
    small_q_kernel,
    theorem_main_eval,
    theorem_small_q_eval,
)
from .backlund import backlund_extend
from .core import (
    BnlsError,
    ConfigError,
    FormatError,
    IoError,
    SampledField,
    ScatteringData,
    SpatialGrid,
    SpectralGrid,
    format_float,
    load_field,
    load_scattering_data,
    save_field,
    save_scattering_data,
    stationary_soliton,
)
from .inverse import reconstruct, solve_ivp
from .pde_oracle import SimConfig, simulate
from .spectral_data import evolve_data, extension_scattering

__all__ = ["COMMANDS", "CONFIG_SCHEMA", "RunConfig", "main", "run"]

log = logging.getLogger("bnls")

COMMANDS = ("extend", "scatter", "evolve", "reconstruct", "solve", "asymptote", "simulate",
            "compare")

_GRID = {
    "type": "object",
    "properties": {
        "half_width": {"type": "number", "exclusiveMinimum": 0},
        "n_points": {"type": "integer", "minimum": 5},
    },
    "required": ["half_width", "n_points"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "q": {"type": "number"},
        "mu0": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "number", "minimum": 0},
        "seed": {"type": "integer"},
        "perturbation": {
            "type": "object",
            "properties": {
                "amplitude": {"type": "number"},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "omega": {"type": "number"},
                "random": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "input": {"type": "string"},
        "scattering": {"type": "string"},
        "grid": _GRID,
        "pde_grid": _GRID,
        "spectral": {
            "type": "object",
            "properties": {
                "z_max": {"type": "number", "exclusiveMinimum": 0},
                "n_points": {"type": "integer", "minimum": 3},
            },
            "required": ["z_max", "n_points"],
            "additionalProperties": False,
        },
        "times": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "x": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "monitor_every": {"type": "integer", "minimum": 0},
        "blowup_factor": {"type": "number", "exclusiveMinimum": 1},
        "theorem": {"enum": ["main", "small_q"]},
        "M": {"type": "number", "exclusiveMinimum": 1},
        "kappa": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.25},
        "threads": {"type": "integer", "minimum": 1},
    },
    "required": ["q"],
    "additionalProperties": False,
}

_DEFAULTS = {
    "mu0": 1.0,
    "eps": 0.0,
    "seed": 0,
    "perturbation": {},
    "grid": {"half_width": 20.0, "n_points": 2049},
    "spectral": {"z_max": 40.0, "n_points": 4001},
    "times": [1.0],
    "x": [0.0, 1.0, 2.0],
    "dt": 0.005,
    "monitor_every": 0,
    "blowup_factor": 10.0,
    "theorem": "main",
    "M": 4.0,
    "kappa": 0.2,
}


class RunConfig(dict):
    """Validated configuration with defaults filled in."""

    __getattr__ = dict.__getitem__

    @classmethod
    def from_mapping(cls, raw: dict, command: str) -> "RunConfig":
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config: {exc.message}") from exc
        if "command" in raw and raw["command"] != command:
            raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")
        cfg = cls({**_DEFAULTS, **raw, "command": command})
        q, mu0 = cfg["q"], cfg["mu0"]
        if not mu0 > abs(q):
            raise ConfigError(f"need mu0 > |q|, got mu0 = {mu0}, q = {q}")
        for key in ("grid", "pde_grid"):
            if key in cfg and cfg[key]["n_points"] % 2 == 0:
                raise ConfigError(f"{key}.n_points must be odd so that x = 0 is a node")
        if cfg["spectral"]["n_points"] % 2 == 0:
            raise ConfigError("spectral.n_points must be odd")
        if command in ("asymptote", "compare") and min(cfg["times"]) < 1:
            raise ConfigError("the asymptotic formulas need t >= 1")
        return cfg


def _perturbation(cfg: RunConfig):
    """(amplitude, sigma, omega) of w = A e^{-(x/sigma)^2} cos(omega x)."""
    p = dict(cfg["perturbation"])
    if p.pop("random", False):
        rng = np.random.default_rng(cfg["seed"])
        drawn = {"amplitude": rng.uniform(0.5, 1.5), "sigma": rng.uniform(0.5, 2.0),
                 "omega": rng.uniform(0.0, 2.0)}
        drawn.update(p)
        p = drawn
    return float(p.get("amplitude", 1.0)), float(p.get("sigma", 1.0)), float(p.get("omega", 0.0))


def perturbation_profile(cfg: RunConfig, x: np.ndarray) -> np.ndarray:
    amp, sigma, omega = _perturbation(cfg)
    return amp * np.exp(-(x / sigma) ** 2) * np.cos(omega * x)


def initial_field(cfg: RunConfig, grid_key: str = "grid") -> SampledField:
    """u0 = v_mu0 + eps w on the configured grid, or the ``input`` field."""
    if cfg.get("input"):
        return load_field(cfg["input"])
    g = cfg.get(grid_key, cfg["grid"])
    grid = SpatialGrid.symmetric(float(g["half_width"]), int(g["n_points"]))
    x = grid.x
    values = stationary_soliton(cfg["mu0"], cfg["q"], x) + cfg["eps"] * perturbation_profile(cfg, x)
    # exact evenness despite rounding in x
    values = 0.5 * (values + values[::-1])
    return SampledField(grid, values.astype(complex))


def _spectral_grid(cfg: RunConfig) -> SpectralGrid:
    s = cfg["spectral"]
    return SpectralGrid.uniform(float(s["z_max"]), int(s["n_points"]))


def scattering_data(cfg: RunConfig) -> ScatteringData:
    if cfg.get("scattering"):
        return load_scattering_data(cfg["scattering"])
    u0 = initial_field(cfg)
    spec = extension_scattering(u0.restrict_nonnegative(), cfg["q"], _spectral_grid(cfg))
    return spec.base


def _tag(t: float) -> str:
    return f"t{t:g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(v if isinstance(v, str) else format_float(v) for v in row) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def _cmd_extend(cfg, out):
    u0 = initial_field(cfg)
    ue = backlund_extend(u0.restrict_nonnegative(), cfg["q"])
    save_field(ue, out / "extension.csv")
    return {"extension": str(out / "extension.csv")}


def _cmd_scatter(cfg, out):
    data = scattering_data(cfg)
    save_scattering_data(data, out / "scattering.json")
    return {"zeros": list(data.zeros), "beta": data.beta,
            "gammas": [[g.real, g.imag] for g in data.norming_constants]}


def _cmd_evolve(cfg, out):
    data = scattering_data(cfg)
    files = []
    for t in cfg["times"]:
        path = out / f"scattering_{_tag(t)}.json"
        save_scattering_data(evolve_data(data, t), path)
        files.append(str(path))
    return {"files": files}


def _cmd_reconstruct(cfg, out, threads):
    data = scattering_data(cfg)
    xs = np.asarray(cfg["x"], dtype=float)
    rows = []
    for t in cfg["times"]:
        u = np.atleast_1d(reconstruct(data, xs, t))
        rows += [(x, t, v.real, v.imag) for x, v in zip(xs, u)]
    _write_csv(out / "reconstruct.csv", ["x", "t", "re_u", "im_u"], rows)
    return {"rows": len(rows)}


def _cmd_solve(cfg, out, threads):
    u0 = initial_field(cfg)
    fields = solve_ivp(u0, cfg["q"], cfg["times"], spectral_grid=_spectral_grid(cfg),
                       threads=threads)
    files = []
    for t, f in zip(cfg["times"], fields):
        path = out / f"u_{_tag(t)}.csv"
        save_field(f, path)
        files.append(str(path))
    return {"files": files}


def _small_q_error(q: float, t: float) -> float:
    tau = abs(q) * math.sqrt(t)
    log_term = tau * abs(math.log(tau)) if tau > 0 else 0.0
    return abs(q) / math.sqrt(t) * (t ** -0.25 + math.sqrt(abs(q)) + log_term)


def asymptote_rows(cfg: RunConfig, data: ScatteringData):
    """(x, t, u, error_scale, regime) for every lattice point."""
    xs = [float(x) for x in cfg["x"]]
    rows = []
    if cfg["theorem"] == "small_q":
        q = cfg["q"]
        if q == 0:
            raise ConfigError("the small-q formulas need q != 0")
        grid = SpatialGrid(0.0, float(cfg["grid"]["half_width"]),
                           (int(cfg["grid"]["n_points"]) + 1) // 2)
        w = SampledField(grid, (cfg["eps"] / q) * perturbation_profile(cfg, grid.x)
                         .astype(complex))
        w0, _ = perturbation_moments(w, cfg["mu0"], q)
        K = small_q_kernel(w, cfg["mu0"])
        mu1 = data.zeros[0]
        for t in cfg["times"]:
            for x in xs:
                u = theorem_small_q_eval(w0, K, mu1, q, x, t, M=cfg["M"])
                regime = "small" if abs(x) <= cfg["M"] else "large"
                rows.append((x, t, u, _small_q_error(q, t), regime))
        return rows
    rho = rho_from_norming(data)
    eps = cfg["eps"] if cfg["eps"] > 0 else None
    for t in cfg["times"]:
        for x in xs:
            res = theorem_main_eval(data, rho, x, t, M=cfg["M"], kappa=cfg["kappa"], eps=eps)
            rows.append((x, t, res.u_leading, res.error_scale, res.regime))
    return rows


def _cmd_asymptote(cfg, out, threads):
    data = scattering_data(cfg)
    rows = asymptote_rows(cfg, data)
    _write_csv(out / "asymptote.csv", ["x", "t", "re_u", "im_u", "error_scale", "regime"],
               [(x, t, u.real, u.imag, e, reg) for x, t, u, e, reg in rows])
    return {"rows": len(rows)}


def _simulation(cfg: RunConfig):
    u0 = initial_field(cfg, "pde_grid")
    times = [0.0] + [float(t) for t in cfg["times"]]
    times = sorted(set(times))
    sim = SimConfig(u0.grid, float(cfg["dt"]), max(times), cfg["q"],
                    blowup_factor=float(cfg["blowup_factor"]))
    monitor = []
    snaps = simulate(u0, sim, times, monitor=monitor, monitor_every=cfg["monitor_every"])
    return dict(zip(times, snaps)), monitor


def _cmd_simulate(cfg, out, threads):
    snaps, monitor = _simulation(cfg)
    files = []
    for t in cfg["times"]:
        path = out / f"sim_{_tag(t)}.csv"
        save_field(snaps[float(t)], path)
        files.append(str(path))
    _write_csv(out / "conserved.csv", ["t", "mass", "energy"], monitor)
    return {"files": files}


def _at(field_: SampledField, x: float) -> complex:
    return complex(np.interp(x, field_.x, field_.values.real)
                   + 1j * np.interp(x, field_.x, field_.values.imag))


def _cmd_compare(cfg, out, threads):
    data = scattering_data(cfg)
    asym = {(x, t): u for x, t, u, _, _ in asymptote_rows(cfg, data)}
    snaps, _ = _simulation(cfg)
    xs = np.asarray(cfg["x"], dtype=float)
    rows = []
    sup = {"ist_asym": 0.0, "ist_pde": 0.0, "asym_pde": 0.0}
    for t in cfg["times"]:
        ist = np.atleast_1d(reconstruct(data, xs, t))
        for x, ui in zip(xs, ist):
            ua = asym[(float(x), float(t))]
            up = _at(snaps[float(t)], float(x))
            d = (abs(ui - ua), abs(ui - up), abs(ua - up))
            for key, v in zip(sup, d):
                sup[key] = max(sup[key], v)
            rows.append((x, t, abs(ui), abs(ua), abs(up)) + d)
    _write_csv(out / "compare.csv",
               ["x", "t", "abs_ist", "abs_asym", "abs_pde", "diff_ist_asym", "diff_ist_pde",
                "diff_asym_pde"], rows)
    return {"sup_diff": sup}


_HANDLERS = {
    "extend": lambda c, o, th: _cmd_extend(c, o),
    "scatter": lambda c, o, th: _cmd_scatter(c, o),
    "evolve": lambda c, o, th: _cmd_evolve(c, o),
    "reconstruct": _cmd_reconstruct,
    "solve": _cmd_solve,
    "asymptote": _cmd_asymptote,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
}


def run(cfg: RunConfig, out: Path, threads: int | None = None) -> dict:
    """Dispatch one command; returns a JSON-serializable summary."""
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return _HANDLERS[cfg["command"]](cfg, out, threads or cfg.get("threads"))


def _configure_logging() -> None:
    level = os.environ.get("BNLS_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise ConfigError(f"BNLS_LOG must be one of {sorted(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnls", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    return parser


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        _configure_logging()
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: malformed JSON: {exc}") from exc
        cfg = RunConfig.from_mapping(raw, args.command)
        summary = run(cfg, Path(args.out), args.threads)
    except (ConfigError, IoError, FormatError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BnlsError as exc:
        print(f"guard {exc.guard}: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
