"""Metasurface synthesis: codebook, continuous phase profile, quantization.

Coordinates are local to the aperture. Columns run along ``col_axis`` (the
steering axis of the azimuth cut), rows along ``normal x col_axis``. Element
centers sit on a centered lattice, so the aperture center is the phase
reference for every field computation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IntegrityError, InvalidArgumentError

C0 = 299_792_458.0


@dataclass(frozen=True)
class UnitCellState:
    id: int
    phase_deg: float
    amplitude_db: float = -0.5
    w_r_mm: float | None = None
    w_in_mm: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.phase_deg < 360.0:
            raise InvalidArgumentError(f"state {self.id}: phase_deg must lie in [0, 360), got {self.phase_deg}")
        if self.amplitude_db > 0.0:
            raise InvalidArgumentError(f"state {self.id}: amplitude_db must be <= 0, got {self.amplitude_db}")

    @property
    def coefficient(self) -> complex:
        return 10.0 ** (self.amplitude_db / 20.0) * np.exp(1j * np.deg2rad(self.phase_deg))


@dataclass(frozen=True)
class Codebook:
    states: tuple[UnitCellState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise InvalidArgumentError("codebook must contain at least one state")
        ids = [s.id for s in self.states]
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError(f"duplicate state ids in codebook: {ids}")
        phases = [s.phase_deg % 360.0 for s in self.states]
        for i in range(len(phases)):
            for j in range(i + 1, len(phases)):
                if _circular_distance_deg(phases[i], phases[j]) == 0.0:
                    raise InvalidArgumentError(
                        f"states {ids[i]} and {ids[j]} share phase {phases[i]} deg"
                    )

    @property
    def ids(self) -> np.ndarray:
        return np.array([s.id for s in self.states], dtype=int)

    @property
    def phases_rad(self) -> np.ndarray:
        return np.deg2rad([s.phase_deg for s in self.states])

    def state(self, state_id: int) -> UnitCellState:
        for s in self.states:
            if s.id == state_id:
                return s
        raise IntegrityError(f"unknown state id {state_id}")

    def with_amplitudes(self, amplitudes_db: dict[int, float]) -> "Codebook":
        """Return a copy with per-state amplitude overrides."""
        return Codebook(tuple(
            UnitCellState(s.id, s.phase_deg, amplitudes_db.get(s.id, s.amplitude_db), s.w_r_mm, s.w_in_mm)
            for s in self.states
        ))


def _circular_distance_deg(a, b):
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), 360.0))
    return np.minimum(d, 360.0 - d)


def default_codebook(amplitude_db: float = -0.5) -> Codebook:
    """The four tabulated 2-bit states (ring/patch dimensions kept as metadata).

    Only an upper bound on the reflection loss is known, so the same amplitude
    is applied to every state.
    """
    return Codebook((
        UnitCellState(1, 0.0, amplitude_db, 0.08, 0.17),
        UnitCellState(2, 96.0, amplitude_db, 0.08, 0.13),
        UnitCellState(3, 184.0, amplitude_db, 0.08, 0.0),
        UnitCellState(4, 273.0, amplitude_db, None, None),  # all metal
    ))


def mirror_codebook() -> Codebook:
    return Codebook((UnitCellState(1, 0.0, 0.0),))


def _unit(v, name="vector"):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if v.shape != (3,) or n == 0.0:
        raise InvalidArgumentError(f"{name} must be a non-zero 3-vector")
    return v / n


def default_col_axis(normal) -> np.ndarray:
    """Horizontal tangent of the aperture (x when the aperture faces +z)."""
    normal = _unit(normal, "normal")
    u = np.cross(normal, [0.0, 0.0, 1.0])
    if np.linalg.norm(u) < 1e-12:
        return np.array([1.0, 0.0, 0.0])
    return u / np.linalg.norm(u)


@dataclass(frozen=True, eq=False)
class RisDesign:
    rows: int
    cols: int
    pitch_m: float
    codebook: Codebook
    state_grid: np.ndarray
    center_m: np.ndarray = field(default_factory=lambda: np.zeros(3))
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    frequency_design_hz: float = 304e9
    col_axis: np.ndarray | None = None
    # steering the grid was synthesized for; None when unknown (e.g. loaded from CSV)
    theta_out_deg: float | None = None
    theta_in_deg: float = 0.0

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise InvalidArgumentError("rows and cols must be positive")
        if not self.pitch_m > 0:
            raise InvalidArgumentError("pitch_m must be positive")
        if not self.frequency_design_hz > 0:
            raise InvalidArgumentError("frequency_design_hz must be positive")
        grid = np.array(self.state_grid, dtype=int)
        if grid.shape != (self.rows, self.cols):
            raise InvalidArgumentError(f"state_grid shape {grid.shape} != ({self.rows}, {self.cols})")
        unknown = set(np.unique(grid)) - set(self.codebook.ids.tolist())
        if unknown:
            raise IntegrityError(f"state ids {sorted(unknown)} not in codebook")
        grid.setflags(write=False)
        object.__setattr__(self, "state_grid", grid)

        normal = np.asarray(self.normal, dtype=float)
        if normal.shape != (3,) or abs(np.linalg.norm(normal) - 1.0) > 1e-9:
            raise InvalidArgumentError("normal must be a unit 3-vector (tolerance 1e-9)")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "center_m", np.asarray(self.center_m, dtype=float))
        u = default_col_axis(normal) if self.col_axis is None else _unit(self.col_axis, "col_axis")
        if abs(u @ normal) > 1e-9:
            raise InvalidArgumentError("col_axis must be orthogonal to the normal")
        object.__setattr__(self, "col_axis", u)

    @property
    def row_axis(self) -> np.ndarray:
        return np.cross(self.normal, self.col_axis)

    @property
    def aperture_m(self) -> tuple[float, float]:
        return self.rows * self.pitch_m, self.cols * self.pitch_m

    @property
    def area_m2(self) -> float:
        h, w = self.aperture_m
        return h * w

    @property
    def col_offsets(self) -> np.ndarray:
        return (np.arange(self.cols) - (self.cols - 1) / 2.0) * self.pitch_m

    @property
    def row_offsets(self) -> np.ndarray:
        return (np.arange(self.rows) - (self.rows - 1) / 2.0) * self.pitch_m

    def element_positions(self) -> np.ndarray:
        """Element centers, shape (rows, cols, 3), in scene coordinates."""
        y = self.row_offsets[:, None, None] * self.row_axis
        x = self.col_offsets[None, :, None] * self.col_axis
        return self.center_m + x + y

    def posed(self, center_m, normal, col_axis=None) -> "RisDesign":
        """Same surface moved to a new pose."""
        return RisDesign(self.rows, self.cols, self.pitch_m, self.codebook, self.state_grid,
                         np.asarray(center_m, float), _unit(normal, "normal"),
                         self.frequency_design_hz, col_axis, self.theta_out_deg, self.theta_in_deg)


def ideal_phase_profile(rows, cols, pitch_m, theta_out_rad, theta_in_rad, frequency_hz,
                        phi_out_rad=0.0, phi_in_rad=0.0) -> np.ndarray:
    """Continuous linear phase gradient, radians in [0, 2*pi), shape (rows, cols).

    ``theta_*`` steer along columns; ``phi_*`` optionally steer along rows.
    ``theta_in`` is the specular (mirror) direction of the incident wave, so
    ``theta_out == theta_in`` gives a plain mirror.
    """
    if rows <= 0 or cols <= 0 or not pitch_m > 0:
        raise InvalidArgumentError("rows, cols and pitch_m must be positive")
    if not frequency_hz > 0:
        raise InvalidArgumentError("frequency_hz must be positive")
    for a in (theta_out_rad, theta_in_rad, phi_out_rad, phi_in_rad):
        if not abs(a) < np.pi / 2:
            raise InvalidArgumentError("steering angles must satisfy |angle| < pi/2")
    k = 2.0 * np.pi * frequency_hz / C0
    x = (np.arange(cols) - (cols - 1) / 2.0) * pitch_m
    y = (np.arange(rows) - (rows - 1) / 2.0) * pitch_m
    phase = (-k * x[None, :] * (np.sin(theta_out_rad) - np.sin(theta_in_rad))
             - k * y[:, None] * (np.sin(phi_out_rad) - np.sin(phi_in_rad)))
    profile = np.mod(phase, 2.0 * np.pi)
    # mod can round up to exactly 2*pi for tiny negative inputs
    profile[profile >= 2.0 * np.pi] = 0.0
    return profile


def quantize_profile(profile, codebook: Codebook) -> np.ndarray:
    """Nearest codebook state per element under circular phase distance.

    Ties go to the lowest state id.
    """
    profile = np.asarray(profile, dtype=float)
    order = np.argsort(codebook.ids, kind="stable")
    ids = codebook.ids[order]
    phases = codebook.phases_rad[order]
    d = np.abs(np.mod(profile[..., None] - phases, 2.0 * np.pi))
    d = np.minimum(d, 2.0 * np.pi - d)
    # distances equal up to rounding count as ties
    near = d <= d.min(axis=-1, keepdims=True) + 1e-12
    return ids[np.argmax(near, axis=-1)]


def reflection_coefficients(design: RisDesign) -> np.ndarray:
    lut = {s.id: s.coefficient for s in design.codebook.states}
    grid = design.state_grid
    out = np.empty(grid.shape, dtype=complex)
    for sid in np.unique(grid):
        if sid not in lut:
            raise IntegrityError(f"unknown state id {sid}")
        out[grid == sid] = lut[sid]
    return out


def anomalous_reflector(rows=100, cols=100, pitch_m=0.5e-3, theta_out_deg=30.0, theta_in_deg=0.0,
                        frequency_design_hz=304e9, codebook: Codebook | None = None,
                        center_m=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), col_axis=None) -> RisDesign:
    codebook = codebook or default_codebook()
    profile = ideal_phase_profile(rows, cols, pitch_m, np.deg2rad(theta_out_deg),
                                  np.deg2rad(theta_in_deg), frequency_design_hz)
    grid = quantize_profile(profile, codebook)
    return RisDesign(rows, cols, pitch_m, codebook, grid, np.asarray(center_m, float),
                     _unit(normal, "normal"), frequency_design_hz, col_axis,
                     float(theta_out_deg), float(theta_in_deg))


def reference_design(**overrides) -> RisDesign:
    """100x100, 0.5 mm pitch, 2-bit, 30 deg anomalous reflector at 304 GHz."""
    return anomalous_reflector(**overrides)


def mirror_design(rows=100, cols=100, pitch_m=0.5e-3, frequency_design_hz=304e9, **pose) -> RisDesign:
    cb = mirror_codebook()
    return RisDesign(rows, cols, pitch_m, cb, np.ones((rows, cols), dtype=int),
                     frequency_design_hz=frequency_design_hz, theta_out_deg=0.0, **pose)


def write_state_grid(path, grid) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(np.asarray(grid, dtype=int).tolist())


def read_state_grid(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = [[int(v) for v in row] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=int)
