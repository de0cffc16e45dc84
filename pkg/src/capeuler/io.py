"""Run configuration, checkpoints, CSV time series and run manifests."""

from __future__ import annotations

import base64
import configparser
import csv
import hashlib
import json
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import integrate_boundary
from .solver import SimConfig, StabilityError, WaveState, annulus_state, drop_state, stability_dt

__all__ = [
    "ConfigError",
    "CheckpointVersionError",
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "build_state",
    "flux",
    "CHECKPOINT_VERSION",
    "write_checkpoint",
    "read_checkpoint",
    "TIMESERIES_COLUMNS",
    "write_timeseries",
    "read_timeseries",
    "RunManifest",
    "output_root",
]

CHECKPOINT_VERSION = 1

TIMESERIES_COLUMNS = ("t", "E0", "E_dtJ", "E_eps", "E_vort", "E_RT", "rt_margin", "max_kappa", "area",
                      "mon_kappa_H2", "mon_v_H3", "mon_kappa_H1")


class ConfigError(ValueError):
    pass


class CheckpointVersionError(ValueError):
    pass


# ----- configuration ---------------------------------------------------

_SCHEMA = {
    "geometry": {
        "kind": str, "radius": float, "inner_radius": float, "outer_radius": float,
        "semi_axes": "floats", "modes": "modes", "inner_modes": "modes", "flux": float,
    },
    "physics": {"eps": float},
    "initial": {"traveling": bool},
    "numerics": {
        "n_theta": int, "n_r": int, "dt": float, "t_end": float, "safety": float,
        "record_every": int, "checkpoint_every": int, "dealias": bool,
    },
}
_KINDS = ("circle", "drop", "ellipse", "annulus")


@dataclass
class RunConfig:
    kind: str = "circle"
    radius: float = 1.0
    inner_radius: float | None = None
    outer_radius: float | None = None
    semi_axes: tuple | None = None
    modes: list = field(default_factory=list)
    inner_modes: list = field(default_factory=list)
    flux: float = 0.0
    eps: float = 0.5
    traveling: bool = False
    n_theta: int = 256
    n_r: int = 64
    dt: float | None = None
    t_end: float = 1.0
    safety: float = 0.5
    record_every: int = 10
    checkpoint_every: int = 0
    dealias: bool = True
    source: str = ""

    def sim_config(self) -> SimConfig:
        return SimConfig(eps=self.eps, t_end=self.t_end, n_r=self.n_r, dt=self.dt, safety=self.safety,
                         record_every=self.record_every, dealias=self.dealias)

    def digest(self) -> str:
        d = asdict(self)
        d.pop("source")
        return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()


def _convert(kind, raw: str, where: str):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "floats":
            return tuple(float(x) for x in raw.split(","))
        if kind == "modes":
            out = []
            for item in filter(None, (x.strip() for x in raw.split(","))):
                k, a = item.split(":")
                out.append((int(k), float(a)))
            return out
        return kind(raw.strip())
    except ValueError:
        name = kind if isinstance(kind, str) else kind.__name__
        raise ConfigError(f"{where}: expected {name}, got {raw!r}") from None


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number."""
    idx, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            idx[(section, None)] = n
            continue
        m = re.match(r"\s*([A-Za-z0-9_.-]+)\s*[=:]", line)
        if m and section is not None:
            idx[(section, m.group(1).strip().lower())] = n
    return idx


def parse_config_text(text: str, source: str = "<string>", check_dt: bool = True) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, empty_lines_in_values=False)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_index(text)
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{source}:{lines.get((section, None), '?')}: unknown section [{section}]")
        for key, raw in cp.items(section):
            where = f"{source}:{lines.get((section, key), '?')}: {section}.{key}"
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{where}: unknown key")
            if raw.strip() == "":
                continue
            values[key] = _convert(_SCHEMA[section][key], raw, where)
    cfg = RunConfig(source=source, **values)
    _validate(cfg, source)
    if check_dt and cfg.dt is not None:
        bound = stability_dt(build_state(cfg), cfg.eps, cfg.safety)
        if cfg.dt > bound:
            raise ConfigError(f"{source}: dt={cfg.dt:.6g} exceeds the stability bound {bound:.6g}")
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), str(path))


def _validate(cfg: RunConfig, source: str):
    if cfg.kind not in _KINDS:
        raise ConfigError(f"{source}: geometry.kind must be one of {_KINDS}, got {cfg.kind!r}")
    if cfg.kind == "annulus":
        missing = [k for k in ("inner_radius", "outer_radius") if getattr(cfg, k) is None]
        if missing:
            raise ConfigError(f"{source}: annulus geometry needs {', '.join('geometry.' + m for m in missing)}")
        if not 0 < cfg.inner_radius < cfg.outer_radius:
            raise ConfigError(f"{source}: need 0 < inner_radius < outer_radius")
    if cfg.kind == "ellipse" and (cfg.semi_axes is None or len(cfg.semi_axes) != 2):
        raise ConfigError(f"{source}: ellipse geometry needs semi_axes = a, b")
    if not 0.0 <= cfg.eps <= 1.0:
        raise ConfigError(f"{source}: physics.eps must lie in [0, 1]")
    if cfg.n_theta < 8 or cfg.n_theta & (cfg.n_theta - 1):
        raise ConfigError(f"{source}: numerics.n_theta must be a power of two >= 8")
    if cfg.n_r < 4:
        raise ConfigError(f"{source}: numerics.n_r must be >= 4")
    if cfg.t_end <= 0 or cfg.record_every < 1 or cfg.checkpoint_every < 0:
        raise ConfigError(f"{source}: t_end > 0, record_every >= 1 and checkpoint_every >= 0 required")


def build_state(cfg: RunConfig) -> WaveState:
    th = 2 * np.pi * np.arange(cfg.n_theta) / cfg.n_theta
    if cfg.kind == "annulus":
        return annulus_state(cfg.inner_radius, cfg.outer_radius, cfg.flux, cfg.n_theta,
                             cfg.modes, cfg.inner_modes)
    if cfg.kind == "ellipse":
        a, b = cfg.semi_axes
        rho = a * b / np.sqrt((b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2)
        return WaveState(0.0, rho[None], np.zeros((1, cfg.n_theta)))
    if cfg.kind == "drop" and len(cfg.modes) == 1 and cfg.traveling:
        k, a = cfg.modes[0]
        return drop_state(k, a, cfg.eps, cfg.n_theta, cfg.radius, traveling=True)
    if cfg.traveling:
        raise ConfigError("initial.traveling needs a drop with exactly one mode")
    rho = cfg.radius + sum(a * np.cos(k * th) for k, a in cfg.modes) + 0 * th
    return WaveState(0.0, rho[None], np.zeros((1, cfg.n_theta)))


# ----- checkpoints -----------------------------------------------------

def _encode(a: np.ndarray, binary: bool):
    if binary:
        return {"dtype": "<f8", "shape": list(a.shape),
                "data": base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode()}
    return a.tolist()


def _decode(obj) -> np.ndarray:
    if isinstance(obj, dict):
        raw = base64.b64decode(obj["data"])
        return np.frombuffer(raw, dtype=obj.get("dtype", "<f8")).reshape(obj["shape"]).astype(float)
    return np.asarray(obj, dtype=float)


def write_checkpoint(path, state: WaveState, eps: float, binary: bool = False, extra: dict | None = None):
    """Write grid samples of rho and phi; JSON floats round-trip exactly."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "code_version": __version__,
        "t": state.t,
        "eps": eps,
        "kind": state.kind,
        "center": list(state.center),
        "n_theta": state.n_theta,
        "encoding": "base64-f8" if binary else "text",
        "rho": _encode(state.rho, binary),
        "phi": _encode(state.phi, binary),
        "flux": flux(state),
    }
    if extra:
        payload["extra"] = extra
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1))
    return path


def read_checkpoint(path):
    """Return (WaveState, eps, metadata dict)."""
    data = json.loads(Path(path).read_text())
    ver = data.get("format_version")
    if ver != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint {path} has format_version {ver}; this build reads version {CHECKPOINT_VERSION}")
    state = WaveState(float(data["t"]), _decode(data["rho"]), _decode(data["phi"]), tuple(data["center"]))
    meta = {k: v for k, v in data.items() if k not in ("rho", "phi")}
    return state, float(data["eps"]), meta


def flux(state: WaveState, n_r: int = 16) -> float:
    """Net outward flux through the outer boundary (0 for a disk)."""
    if state.kind == "disk":
        return 0.0
    dom = state.domain(n_r)
    dn = dom.as_boundary(dom.normal_derivative(dom.solve(f=dom.from_boundary(state.phi))))
    return float(integrate_boundary(dom.curves[1], dn[1]))


# ----- time series -----------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_timeseries(path, rows, columns=TIMESERIES_COLUMNS):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


def read_timeseries(path):
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[float(x) for x in row] for row in r]


# ----- manifest --------------------------------------------------------

def output_root(cli_value: str | None) -> Path:
    if cli_value:
        return Path(cli_value)
    return Path(os.environ.get("CAPEULER_OUT", "capeuler_out"))


@dataclass
class RunManifest:
    subcommand: str
    config_hash: str
    started: float
    finished: float | None = None
    code_version: str = __version__
    outputs: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def write(self, directory) -> Path:
        directory = Path(directory)
        missing = [p for p in self.outputs if not (directory / p).exists()]
        if missing:
            raise FileNotFoundError(f"manifest lists missing outputs: {missing}")
        path = directory / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True))
        return path
