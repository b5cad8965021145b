"""TOML run configuration with line-anchored diagnostics.

Layout::

    [game]
    set_x = { kind = "simplex", dim = 2 }
    set_y = { kind = "box", lower = [-1, -1], upper = [1, 1] }
    matrix = [[1, -1], [-1, 1]]        # or matrix_csv = "A.csv"

    [run]
    delta = 0.1
    max_phases = 25
    ...

    [out]
    directory = "runs"
    emit_svg = true

Unknown tables or keys are errors.
"""

import csv
import json
import os
import re
from dataclasses import dataclass

import numpy as np
import tomli

from . import geometry as geo
from .dynamics import RunConfig
from .errors import ConfigError

GAME_KEYS = {"set_x", "set_y", "matrix", "matrix_csv"}
RUN_KEYS = {"delta", "eta", "max_phases", "seed", "batch_c", "fallback_c", "audit_enabled",
            "round_log_stride"}
OUT_KEYS = {"directory", "emit_svg"}
SET_KEYS = {
    geo.SIMPLEX: {"kind", "dim"},
    geo.BOX: {"kind", "dim", "lower", "upper"},
    geo.BALL: {"kind", "dim", "center", "radius"},
    geo.VPOLYTOPE: {"kind", "vertices"},
}


@dataclass
class OutConfig:
    directory: str = "runs"
    emit_svg: bool = True


@dataclass
class LoadedConfig:
    run: RunConfig
    out: OutConfig
    text: str
    path: str


def _line_of(text, key, section=None):
    """1-based line of ``key =`` (inside ``[section]`` when given), else None."""
    current = None
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"^\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if (section is None or current == section) and pat.match(line):
            return i
        if section is not None and current == section and re.search(r"[{,]\s*" + re.escape(key) + r"\s*=", line):
            return i
    return None


def _err(msg, text=None, key=None, section=None):
    line = _line_of(text, key, section) if text is not None and key is not None else None
    where = f"line {line}: " if line else ""
    return ConfigError(f"{where}{msg}")


def _vec(v, dim, name):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        if dim is None:
            raise ConfigError(f"{name}: scalar needs an explicit dim")
        arr = np.full(int(dim), float(arr))
    if arr.ndim != 1 or (dim is not None and arr.size != int(dim)):
        raise ConfigError(f"{name}: expected a vector of length {dim}")
    return arr


def parse_set(desc, text=None, key=None) -> geo.ConvexSet:
    """Build a set from a descriptor table (or a JSON string of one)."""
    if isinstance(desc, str):
        desc = json.loads(desc)
    if not isinstance(desc, dict):
        raise _err("set descriptor must be a table", text, key, "game")
    kind = desc.get("kind")
    if kind not in SET_KEYS:
        raise _err(f"{key}: unknown set kind {kind!r} (expected one of {', '.join(geo.KINDS)})",
                   text, key, "game")
    extra = set(desc) - SET_KEYS[kind]
    if extra:
        bad = sorted(extra)[0]
        raise _err(f"{key}: unknown key {bad!r} for kind {kind!r}", text, bad, "game")
    try:
        dim = desc.get("dim")
        if kind == geo.SIMPLEX:
            if dim is None:
                raise ConfigError("simplex needs dim")
            return geo.simplex(int(dim))
        if kind == geo.BOX:
            lo = _vec(desc.get("lower", -1.0), dim, "lower")
            hi = _vec(desc.get("upper", 1.0), dim if dim is not None else lo.size, "upper")
            if lo.size != hi.size:
                raise ConfigError("box lower/upper lengths differ")
            return geo.box(lo, hi)
        if kind == geo.BALL:
            center = _vec(desc.get("center", 0.0), dim, "center")
            return geo.ball(center, float(desc.get("radius", 1.0)))
        return geo.vpolytope(desc["vertices"])
    except (ValueError, KeyError, TypeError) as exc:
        raise _err(f"{key}: {exc}", text, key, "game") from exc


def _read_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row and not row[0].startswith("#")]
    return np.array(rows, dtype=float)


def parse_config(text: str, path: str = "<string>") -> LoadedConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section in data:
        if section not in ("game", "run", "out"):
            lines = [i for i, ln in enumerate(text.splitlines(), 1)
                     if re.match(r"^\s*\[\s*" + re.escape(section) + r"\s*\]", ln)]
            where = f"line {lines[0]}: " if lines else ""
            raise ConfigError(f"{where}unknown table [{section}]")
        if not isinstance(data[section], dict):
            raise _err(f"{section} must be a table", text, section)
    allowed = {"game": GAME_KEYS, "run": RUN_KEYS, "out": OUT_KEYS}
    for section, keys in allowed.items():
        for k in data.get(section, {}):
            if k not in keys:
                raise _err(f"unknown key {k!r} in [{section}]", text, k, section)

    game = data.get("game")
    if not game:
        raise ConfigError("missing [game] table")
    for k in ("set_x", "set_y"):
        if k not in game:
            raise ConfigError(f"[game] needs {k}")
    setX = parse_set(game["set_x"], text, "set_x")
    setY = parse_set(game["set_y"], text, "set_y")
    if ("matrix" in game) == ("matrix_csv" in game):
        raise ConfigError("[game] needs exactly one of matrix or matrix_csv")
    try:
        if "matrix" in game:
            A = np.array(game["matrix"], dtype=float)
        else:
            base = os.path.dirname(os.path.abspath(path)) if path != "<string>" else os.getcwd()
            A = _read_matrix_csv(os.path.join(base, game["matrix_csv"]))
    except (ValueError, OSError) as exc:
        key = "matrix" if "matrix" in game else "matrix_csv"
        raise _err(f"cannot read matrix: {exc}", text, key, "game") from exc
    if A.shape != (setX.dim, setY.dim):
        key = "matrix" if "matrix" in game else "matrix_csv"
        raise _err(f"matrix has shape {A.shape}, expected ({setX.dim}, {setY.dim})", text, key, "game")

    run = dict(data.get("run", {}))
    delta = run.get("delta", 0.1)
    if not isinstance(delta, (int, float)) or not 0.0 < delta <= 0.5:
        raise _err(f"delta = {delta} must lie in (0, 1/2]", text, "delta", "run")
    for k in ("eta", "batch_c", "fallback_c"):
        if k in run and not (isinstance(run[k], (int, float)) and run[k] > 0):
            raise _err(f"{k} must be a positive number", text, k, "run")
    for k in ("max_phases", "round_log_stride"):
        if k in run and not (isinstance(run[k], int) and run[k] >= 1):
            raise _err(f"{k} must be an integer >= 1", text, k, "run")
    if "seed" in run and not (isinstance(run["seed"], int) and run["seed"] >= 0):
        raise _err("seed must be a nonnegative integer", text, "seed", "run")
    if "audit_enabled" in run and not isinstance(run["audit_enabled"], bool):
        raise _err("audit_enabled must be true or false", text, "audit_enabled", "run")
    try:
        cfg = RunConfig(setX=setX, setY=setY, A=A, **run)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    out = data.get("out", {})
    if "emit_svg" in out and not isinstance(out["emit_svg"], bool):
        raise _err("emit_svg must be true or false", text, "emit_svg", "out")
    return LoadedConfig(run=cfg, out=OutConfig(**out), text=text, path=path)


def load_config(path: str) -> LoadedConfig:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw.decode("utf-8"), path)


def parse_set_spec(spec: str) -> geo.ConvexSet:
    """CLI shorthand: ``simplex:5``, ``box:3`` (= [-1,1]^3), ``box:3:u=2``,
    ``ball:2``, ``ball:2:r=2`` or a JSON descriptor."""
    spec = spec.strip()
    if spec.startswith("{"):
        try:
            return parse_set(json.loads(spec), key="--set")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--set: bad JSON ({exc})") from exc
    parts = spec.split(":")
    try:
        kind, dim = parts[0], int(parts[1])
        opts = dict(p.split("=", 1) for p in parts[2:])
        if kind == geo.SIMPLEX and not opts:
            return geo.simplex(dim)
        if kind == geo.BOX and set(opts) <= {"u"}:
            u = float(opts.get("u", 1.0))
            return geo.box(-u * np.ones(dim), u * np.ones(dim))
        if kind == geo.BALL and set(opts) <= {"r"}:
            return geo.ball(np.zeros(dim), float(opts.get("r", 1.0)))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"--set: cannot parse {spec!r} ({exc})") from exc
    raise ConfigError(f"--set: cannot parse {spec!r}")
