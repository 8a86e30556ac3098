"""Scenario configuration: YAML loading, ``--set`` overrides and validation.

Every block is validated into plain objects before any computation starts,
and errors name the offending dotted field.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, RisChannelError
from .metasurface import Codebook, RisDesign, UnitCellState, anomalous_reflector, default_codebook
from .tracer import WALLS, Box, Room, Scene

REFERENCE_SCENARIO = "reference_scenario.yaml"


def load_raw(path=None) -> dict:
    if path is None:
        text = resources.files("rischannel").joinpath("data").joinpath(REFERENCE_SCENARIO).read_text()
        source = REFERENCE_SCENARIO
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
        source = str(path)
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(source, f"not valid YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(source, "top level must be a mapping")
    return raw


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as YAML scalars/lists."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            nxt = node.get(p)
            if nxt is None:
                nxt = node[p] = {}
            if not isinstance(nxt, dict):
                raise ConfigError(key, f"{p} is not a block")
            node = nxt
        node[parts[-1]] = yaml.safe_load(value)
    return out


def _get(block: dict, name: str, field: str, default=None, required=False):
    if name in block and block[name] is not None:
        return block[name]
    if required:
        raise ConfigError(field, "missing")
    return default


def _num(value, field, positive=False, nonneg=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(field, f"expected a number, got {value!r}") from None
    if not np.isfinite(v):
        raise ConfigError(field, "must be finite")
    if positive and v <= 0:
        raise ConfigError(field, f"must be positive, got {v}")
    if nonneg and v < 0:
        raise ConfigError(field, f"must be non-negative, got {v}")
    return v


def _int(value, field, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    try:
        v = int(str(value))
    except ValueError:
        fv = _num(value, field)
        if not fv.is_integer():
            raise ConfigError(field, f"expected an integer, got {value!r}") from None
        v = int(fv)
    if minimum is not None and v < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {v}")
    return v


def _vec(value, field, n=3):
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ConfigError(field, f"expected a list of {n} numbers")
    return np.array([_num(v, f"{field}[{i}]") for i, v in enumerate(value)])


def _num_list(value, field, positive=False):
    if not isinstance(value, (list, tuple)):
        value = [value]
    if not value:
        raise ConfigError(field, "must not be empty")
    return [_num(v, f"{field}[{i}]", positive=positive) for i, v in enumerate(value)]


def _bool(value, field):
    if not isinstance(value, bool):
        raise ConfigError(field, f"expected true/false, got {value!r}")
    return value


def _block(raw, name):
    b = raw.get(name, {})
    if b is None:
        b = {}
    if not isinstance(b, dict):
        raise ConfigError(name, "must be a mapping")
    return b


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    design: RisDesign
    theta_out_deg: float
    excitation_frequencies_hz: list
    theta_in_deg: float
    plane: str
    squint_frequencies_hz: list
    link: dict
    scene: Scene
    max_bounce_order: int
    scene_frequencies_hz: list
    output_dir: Path
    angle_grid_deg: np.ndarray
    distances_m: list


def _codebook(design_block) -> Codebook:
    amp = _num(_get(design_block, "amplitude_db", "design.amplitude_db", -0.5), "design.amplitude_db")
    if amp > 0:
        raise ConfigError("design.amplitude_db", "must be <= 0")
    entries = design_block.get("codebook")
    if entries is None:
        return default_codebook(amp)
    if not isinstance(entries, list) or not entries:
        raise ConfigError("design.codebook", "must be a non-empty list of states")
    states = []
    for i, e in enumerate(entries):
        f = f"design.codebook[{i}]"
        if not isinstance(e, dict):
            raise ConfigError(f, "must be a mapping with id and phase_deg")
        try:
            states.append(UnitCellState(
                _int(_get(e, "id", f + ".id", required=True), f + ".id"),
                _num(_get(e, "phase_deg", f + ".phase_deg", required=True), f + ".phase_deg"),
                _num(e.get("amplitude_db", amp), f + ".amplitude_db"),
            ))
        except RisChannelError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f, str(exc)) from None
    try:
        return Codebook(tuple(states))
    except RisChannelError as exc:
        raise ConfigError("design.codebook", str(exc)) from None


def _distances(value, field):
    if isinstance(value, dict):
        start = _num(_get(value, "start", field + ".start", required=True), field + ".start", positive=True)
        stop = _num(_get(value, "stop", field + ".stop", required=True), field + ".stop", positive=True)
        num = _int(_get(value, "num", field + ".num", required=True), field + ".num", minimum=1)
        out = np.linspace(start, stop, num).tolist()
        if value.get("extra"):
            out += _num_list(value["extra"], field + ".extra", positive=True)
        return out
    return _num_list(value, field, positive=True)


def validate(raw: dict) -> ScenarioConfig:
    known = {"design", "excitation", "squint", "link", "scene", "output"}
    for k in raw:
        if k not in known:
            raise ConfigError(k, f"unknown block; expected one of {sorted(known)}")

    d = _block(raw, "design")
    rows = _int(_get(d, "rows", "design.rows", 100), "design.rows", minimum=1)
    cols = _int(_get(d, "cols", "design.cols", 100), "design.cols", minimum=1)
    pitch = _num(_get(d, "pitch_m", "design.pitch_m", 0.5e-3), "design.pitch_m", positive=True)
    f0 = _num(_get(d, "frequency_design_hz", "design.frequency_design_hz", 304e9), "design.frequency_design_hz",
              positive=True)
    theta_out = _num(_get(d, "theta_out_deg", "design.theta_out_deg", 30.0), "design.theta_out_deg")
    theta_in_design = _num(_get(d, "theta_in_deg", "design.theta_in_deg", 0.0), "design.theta_in_deg")
    for name, v in (("design.theta_out_deg", theta_out), ("design.theta_in_deg", theta_in_design)):
        if abs(v) >= 90:
            raise ConfigError(name, "must satisfy |angle| < 90")
    codebook = _codebook(d)

    s = _block(raw, "scene")
    room_dims = _vec(_get(s, "room_m", "scene.room_m", [10.0, 10.0, 3.0]), "scene.room_m")
    if np.any(room_dims <= 0):
        raise ConfigError("scene.room_m", "dimensions must be positive")
    center = _vec(_get(s, "ris_center_m", "scene.ris_center_m", [5.0, 0.0, 1.5]), "scene.ris_center_m")
    normal = _vec(_get(s, "ris_normal", "scene.ris_normal", [0.0, 1.0, 0.0]), "scene.ris_normal")
    if np.linalg.norm(normal) == 0:
        raise ConfigError("scene.ris_normal", "must be non-zero")
    normal = normal / np.linalg.norm(normal)
    design = anomalous_reflector(rows, cols, pitch, theta_out, theta_in_design, f0, codebook, center, normal)

    e = _block(raw, "excitation")
    exc_freqs = _num_list(_get(e, "frequencies_hz", "excitation.frequencies_hz", [f0]),
                          "excitation.frequencies_hz", positive=True)
    theta_in = _num(_get(e, "theta_in_deg", "excitation.theta_in_deg", 0.0), "excitation.theta_in_deg")
    if abs(theta_in) >= 90:
        raise ConfigError("excitation.theta_in_deg", "must satisfy |angle| < 90")
    plane = _get(e, "plane", "excitation.plane", "azimuth")
    if plane not in ("azimuth", "elevation"):
        raise ConfigError("excitation.plane", f"must be azimuth or elevation, got {plane!r}")

    q = _block(raw, "squint")
    squint_freqs = _num_list(_get(q, "frequencies_hz", "squint.frequencies_hz", exc_freqs),
                             "squint.frequencies_hz", positive=True)

    lk = _block(raw, "link")
    link = {
        "ptx_dbm": _num(_get(lk, "ptx_dbm", "link.ptx_dbm", 0.0), "link.ptx_dbm"),
        "gtx_dbi": _num(_get(lk, "gtx_dbi", "link.gtx_dbi", 0.0), "link.gtx_dbi"),
        "grx_dbi": _num(_get(lk, "grx_dbi", "link.grx_dbi", 0.0), "link.grx_dbi"),
        "sigma_dbsm": _num(_get(lk, "sigma_dbsm", "link.sigma_dbsm", 15.6), "link.sigma_dbsm"),
        "frequency_hz": _num(_get(lk, "frequency_hz", "link.frequency_hz", f0), "link.frequency_hz", positive=True),
        "d1_m": _num_list(_get(lk, "d1_m", "link.d1_m", [5.0]), "link.d1_m", positive=True),
        "d2_m": _num_list(_get(lk, "d2_m", "link.d2_m", [5.0]), "link.d2_m", positive=True),
    }

    mag = _num(_get(s, "wall_magnitude", "scene.wall_magnitude", 0.3), "scene.wall_magnitude", nonneg=True)
    ph = _num(_get(s, "wall_phase_deg", "scene.wall_phase_deg", 180.0), "scene.wall_phase_deg")
    if mag > 1:
        raise ConfigError("scene.wall_magnitude", "must be <= 1")
    walls = {w: mag * np.exp(1j * np.deg2rad(ph)) for w in WALLS}
    for name, spec in (_get(s, "walls", "scene.walls", {}) or {}).items():
        f = f"scene.walls.{name}"
        if name not in WALLS:
            raise ConfigError(f, f"unknown wall; expected one of {list(WALLS)}")
        if not isinstance(spec, dict):
            raise ConfigError(f, "must be a mapping with magnitude and phase_deg")
        m = _num(spec.get("magnitude", mag), f + ".magnitude", nonneg=True)
        if m > 1:
            raise ConfigError(f + ".magnitude", "must be <= 1")
        walls[name] = m * np.exp(1j * np.deg2rad(_num(spec.get("phase_deg", ph), f + ".phase_deg")))
    boxes = []
    for i, b in enumerate(_get(s, "blockages", "scene.blockages", []) or []):
        f = f"scene.blockages[{i}]"
        if not isinstance(b, dict):
            raise ConfigError(f, "must be a mapping with lo and hi corners")
        lo = _vec(_get(b, "lo", f + ".lo", required=True), f + ".lo")
        hi = _vec(_get(b, "hi", f + ".hi", required=True), f + ".hi")
        if np.any(hi <= lo):
            raise ConfigError(f, "requires lo < hi on every axis")
        boxes.append(Box(lo, hi))
    room = Room(tuple(room_dims), walls, tuple(boxes))
    if room.wall_of(center, normal) is None:
        raise ConfigError("scene.ris_center_m", "RIS must sit on a wall with ris_normal pointing into the room")
    tx = _vec(_get(s, "tx_m", "scene.tx_m", required=True), "scene.tx_m")
    rx = _vec(_get(s, "rx_m", "scene.rx_m", required=True), "scene.rx_m")
    for name, p in (("scene.tx_m", tx), ("scene.rx_m", rx)):
        if not room.contains(p):
            raise ConfigError(name, "must lie strictly inside the room")
    mode = _get(s, "mode", "scene.mode", "three-ray")
    if mode not in ("three-ray", "full-pattern"):
        raise ConfigError("scene.mode", f"must be three-ray or full-pattern, got {mode!r}")

    o = _block(raw, "output")
    a0 = _num(_get(o, "angle_start_deg", "output.angle_start_deg", -90.0), "output.angle_start_deg")
    a1 = _num(_get(o, "angle_stop_deg", "output.angle_stop_deg", 90.0), "output.angle_stop_deg")
    step = _num(_get(o, "angle_step_deg", "output.angle_step_deg", 0.05), "output.angle_step_deg", positive=True)
    if a0 < -90 or a1 > 90 or a1 <= a0:
        raise ConfigError("output.angle_start_deg", "angle range must satisfy -90 <= start < stop <= 90")
    n = round((a1 - a0) / step)
    if abs(n * step - (a1 - a0)) > 1e-9 * max(1.0, abs(a1 - a0)):
        raise ConfigError("output.angle_step_deg", "must divide the angle span evenly")
    grid = np.linspace(a0, a1, n + 1)

    scene = Scene(room, tx, rx, design, _bool(_get(s, "los_blocked", "scene.los_blocked", False), "scene.los_blocked"),
                  mode, _num(_get(s, "gtx_dbi", "scene.gtx_dbi", 0.0), "scene.gtx_dbi"),
                  _num(_get(s, "grx_dbi", "scene.grx_dbi", 0.0), "scene.grx_dbi"), angle_step_deg=step)

    return ScenarioConfig(
        design=design,
        theta_out_deg=theta_out,
        excitation_frequencies_hz=exc_freqs,
        theta_in_deg=theta_in,
        plane=plane,
        squint_frequencies_hz=squint_freqs,
        link=link,
        scene=scene,
        max_bounce_order=_int(_get(s, "max_bounce_order", "scene.max_bounce_order", 1), "scene.max_bounce_order",
                              minimum=0),
        scene_frequencies_hz=_num_list(_get(s, "frequencies_hz", "scene.frequencies_hz", exc_freqs),
                                       "scene.frequencies_hz", positive=True),
        output_dir=Path(str(_get(o, "directory", "output.directory", "figures"))),
        angle_grid_deg=grid,
        distances_m=_distances(_get(o, "distances_m", "output.distances_m", [2.0, 5.0, 10.0]), "output.distances_m"),
    )


def load(path=None, overrides=()) -> ScenarioConfig:
    return validate(apply_overrides(load_raw(path), overrides))
