"""Scattered fields of a metasurface: exact element sum and far-field limit.

Each element re-radiates the incident field weighted by its reflection
coefficient and by a cosine element factor, applied once for the incidence
angle and once for the scattering angle. Fields are scalar. The incident
plane wave has unit amplitude (times ``amplitude``) at the aperture center.

Element sums are reduced in row-major order with numpy's pairwise summation,
so results do not depend on how many threads evaluate the observation grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._fmt import num
from .errors import DomainError, InvalidArgumentError
from .metasurface import C0, RisDesign, reflection_coefficients

_CHUNK = 128
_PLANES = ("azimuth", "elevation")


@dataclass(frozen=True, eq=False)
class PlaneWave:
    frequency_hz: float
    direction: np.ndarray
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise InvalidArgumentError("frequency_hz must be positive")
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise InvalidArgumentError("direction must be a unit 3-vector")
        object.__setattr__(self, "direction", d)

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi * self.frequency_hz / C0

    @classmethod
    def incident_on(cls, design: RisDesign, frequency_hz, theta_deg=0.0, plane="azimuth", amplitude=1.0 + 0.0j):
        """Plane wave whose mirror reflection leaves at ``theta_deg`` in the given cut.

        ``theta_deg = 0`` is normal incidence.
        """
        axis = _cut_axis(design, plane)
        t = np.deg2rad(theta_deg)
        d = np.sin(t) * axis - np.cos(t) * design.normal
        return cls(frequency_hz, d / np.linalg.norm(d), amplitude)


@dataclass(frozen=True, eq=False)
class SphericalSource:
    frequency_hz: float
    position_m: np.ndarray
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise InvalidArgumentError("frequency_hz must be positive")
        object.__setattr__(self, "position_m", np.asarray(self.position_m, dtype=float))

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi * self.frequency_hz / C0


@dataclass(frozen=True, eq=False)
class RcsPattern:
    """RCS over one planar cut through the aperture normal.

    ``values`` are complex with ``|value|**2`` equal to the RCS in m^2 and the
    argument equal to the far-field phase referenced to the aperture center.
    """

    angles_deg: np.ndarray
    values: np.ndarray
    frequency_hz: float
    plane: str = "azimuth"
    incidence_deg: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.angles_deg, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if a.ndim != 1 or a.size == 0:
            raise InvalidArgumentError("angle grid must be a non-empty 1-D array")
        if a.shape != v.shape:
            raise InvalidArgumentError("angles and values must have equal length")
        if np.any(np.diff(a) <= 0):
            raise InvalidArgumentError("angle grid must be strictly increasing")
        object.__setattr__(self, "angles_deg", a)
        object.__setattr__(self, "values", v)

    @property
    def sigma_m2(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @property
    def dbsm(self) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.sigma_m2, 1e-30))

    @property
    def phase_deg(self) -> np.ndarray:
        return np.rad2deg(np.angle(self.values))

    def peak(self) -> tuple[float, float]:
        """(angle_deg, dBsm) of the largest grid sample."""
        i = int(np.argmax(self.sigma_m2))
        return float(self.angles_deg[i]), float(self.dbsm[i])

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta_deg", "rcs_dbsm", "phase_deg"])
            for t, s, p in zip(self.angles_deg, self.dbsm, self.phase_deg):
                w.writerow([num(t, 4), num(s), num(p)])


def _cut_axis(design: RisDesign, plane: str) -> np.ndarray:
    if plane == "azimuth":
        return design.col_axis
    if plane == "elevation":
        return design.row_axis
    raise InvalidArgumentError(f"plane must be one of {_PLANES}, got {plane!r}")


def cut_directions(design: RisDesign, angles_deg, plane="azimuth") -> np.ndarray:
    """Unit vectors at the given angles from the normal within a cut, shape (M, 3)."""
    t = np.deg2rad(np.atleast_1d(np.asarray(angles_deg, dtype=float)))
    axis = _cut_axis(design, plane)
    return np.sin(t)[:, None] * axis + np.cos(t)[:, None] * design.normal


def _check_plane_wave(design: RisDesign, wave: PlaneWave) -> float:
    cos_in = -float(wave.direction @ design.normal)
    if cos_in <= 0.0:
        raise DomainError("plane wave does not illuminate the front of the aperture")
    return cos_in


def far_coefficients(design: RisDesign, wave: PlaneWave, directions) -> np.ndarray:
    """Vectorized far-field coefficients for directions of shape (M, 3)."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    cos_s = dirs @ design.normal
    if np.any(cos_s < -1e-12):
        raise DomainError("observation direction behind the aperture plane")
    cos_s = np.clip(cos_s, 0.0, None)
    cos_in = _check_plane_wave(design, wave)
    k = wave.wavenumber
    gamma = reflection_coefficients(design)
    q = dirs - wave.direction
    qu = q @ design.col_axis
    qv = q @ design.row_axis
    x = design.col_offsets
    y = design.row_offsets
    out = np.empty(len(dirs), dtype=complex)
    for s in range(0, len(dirs), _CHUNK):
        sl = slice(s, s + _CHUNK)
        a = np.exp(1j * k * qu[sl, None] * x[None, :])
        b = np.exp(1j * k * qv[sl, None] * y[None, :])
        terms = gamma[None, :, :] * b[:, :, None] * a[:, None, :]
        out[sl] = terms.reshape(terms.shape[0], -1).sum(axis=1)
    return wave.amplitude * cos_in * cos_s * out


def scattered_field_far(design: RisDesign, excitation: PlaneWave, out_direction) -> complex:
    """Coefficient ``A`` such that the scattered field is ``A exp(-jkr) / r`` far away."""
    d = np.asarray(out_direction, dtype=float)
    if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise InvalidArgumentError("out_direction must be a unit 3-vector")
    return complex(far_coefficients(design, excitation, d[None, :])[0])


def near_fields(design: RisDesign, excitation, points) -> np.ndarray:
    """Exact element sums at observation points of shape (M, 3)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = design.normal
    if np.any((pts - design.center_m) @ n <= 0.0):
        raise DomainError("observation point on or behind the aperture plane")
    k = excitation.wavenumber
    gamma = reflection_coefficients(design).ravel()
    pos = design.element_positions().reshape(-1, 3)
    if isinstance(excitation, PlaneWave):
        cos_in = _check_plane_wave(design, excitation)
        incident = cos_in * np.exp(-1j * k * ((pos - design.center_m) @ excitation.direction))
    elif isinstance(excitation, SphericalSource):
        src = excitation.position_m
        if (src - design.center_m) @ n <= 0.0:
            raise DomainError("spherical source on or behind the aperture plane")
        rel = src - pos
        r_in = np.linalg.norm(rel, axis=1)
        incident = (rel @ n) / r_in * np.exp(-1j * k * r_in) / r_in
    else:
        raise InvalidArgumentError(f"unsupported excitation {type(excitation).__name__}")
    weights = gamma * incident
    out = np.empty(len(pts), dtype=complex)
    for s in range(0, len(pts), _CHUNK):
        rel = pts[s:s + _CHUNK, None, :] - pos[None, :, :]
        r = np.linalg.norm(rel, axis=2)
        cos_s = (rel @ n) / r
        out[s:s + _CHUNK] = (weights[None, :] * cos_s * np.exp(-1j * k * r) / r).sum(axis=1)
    return excitation.amplitude * out


def scattered_field_near(design: RisDesign, excitation, observation_point_m) -> complex:
    return complex(near_fields(design, excitation, np.asarray(observation_point_m, float)[None, :])[0])


def rcs_pattern(design: RisDesign, excitation: PlaneWave, angle_grid_deg, plane="azimuth") -> RcsPattern:
    """Bistatic RCS over a cut, normalized so a uniform in-phase plate gives 4*pi*A^2/lambda^2."""
    angles = np.asarray(angle_grid_deg, dtype=float)
    if angles.ndim != 1 or angles.size == 0:
        raise InvalidArgumentError("angle grid must be non-empty")
    if np.any(np.diff(angles) <= 0):
        raise InvalidArgumentError("angle grid must be strictly increasing")
    coeff = far_coefficients(design, excitation, cut_directions(design, angles, plane))
    wavelength = C0 / excitation.frequency_hz
    values = np.sqrt(4.0 * np.pi) * coeff * design.pitch_m ** 2 / wavelength / excitation.amplitude
    axis = _cut_axis(design, plane)
    incidence = float(np.rad2deg(np.arcsin(np.clip(excitation.direction @ axis, -1.0, 1.0))))
    return RcsPattern(angles, values, excitation.frequency_hz, plane, incidence)


def rcs_at(design: RisDesign, excitation: PlaneWave, directions) -> np.ndarray:
    """Complex RCS amplitudes (``|v|**2`` in m^2) at arbitrary 3-D directions."""
    coeff = far_coefficients(design, excitation, directions)
    wavelength = C0 / excitation.frequency_hz
    return np.sqrt(4.0 * np.pi) * coeff * design.pitch_m ** 2 / wavelength / excitation.amplitude


def flat_plate_rcs(area_m2, frequency_hz) -> float:
    wavelength = C0 / frequency_hz
    return 4.0 * np.pi * area_m2 ** 2 / wavelength ** 2


def far_field_distance(design: RisDesign, frequency_hz=None) -> float:
    """Fraunhofer distance 2 D^2 / lambda with D the aperture diagonal."""
    f = design.frequency_design_hz if frequency_hz is None else frequency_hz
    h, w = design.aperture_m
    return 2.0 * (h * h + w * w) / (C0 / f)


def near_far_deviation(design: RisDesign, excitation: PlaneWave, out_direction, distances_m) -> np.ndarray:
    """dB ratio of the exact field to its far-field approximation at each distance."""
    d = np.asarray(distances_m, dtype=float)
    if d.ndim != 1 or d.size == 0 or np.any(d <= 0):
        raise InvalidArgumentError("distances must be a non-empty list of positive values")
    s = np.asarray(out_direction, dtype=float)
    far = abs(scattered_field_far(design, excitation, s))
    if far == 0.0:
        raise DomainError("far-field coefficient vanishes in this direction")
    near = near_fields(design, excitation, design.center_m + d[:, None] * s)
    return 20.0 * np.log10(np.abs(near) * d / far)


def write_deviation_csv(path, distances_m, deviations_db) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["distance_m", "deviation_db"])
        for d, v in zip(distances_m, deviations_db):
            w.writerow([num(d), num(v)])


def _main_lobe_index(pattern: RcsPattern, near_deg=None) -> int:
    db = pattern.dbsm
    if near_deg is None:
        return int(np.argmax(db))
    # climb from the grid point closest to near_deg
    i = int(np.argmin(np.abs(pattern.angles_deg - near_deg)))
    while True:
        best = i
        for j in (i - 1, i + 1):
            if 0 <= j < len(db) and db[j] > db[best]:
                best = j
        if best == i:
            return i
        i = best


def half_power_beamwidth(pattern: RcsPattern, near_deg=None) -> float:
    """-3 dB width of the lobe containing the global peak (or the peak nearest ``near_deg``)."""
    db = pattern.dbsm
    a = pattern.angles_deg
    i = _main_lobe_index(pattern, near_deg)
    level = db[i] - 3.0

    def crossing(step):
        j = i
        while 0 <= j + step < len(db) and db[j + step] > level:
            j += step
        if not 0 <= j + step < len(db):
            raise DomainError("lobe does not fall 3 dB below its peak inside the angle grid")
        k = j + step
        return a[j] + (a[k] - a[j]) * (db[j] - level) / (db[j] - db[k])

    return float(crossing(1) - crossing(-1))


def lobe_phase_spread(pattern: RcsPattern, drop_db=12.0, near_deg=None) -> float:
    """Spread (max - min, degrees) of the unwrapped phase over the contiguous
    region around the main peak where the RCS stays within ``drop_db`` of it."""
    db = pattern.dbsm
    i = _main_lobe_index(pattern, near_deg)
    lo = hi = i
    while lo - 1 >= 0 and db[lo - 1] >= db[i] - drop_db:
        lo -= 1
    while hi + 1 < len(db) and db[hi + 1] >= db[i] - drop_db:
        hi += 1
    ph = np.rad2deg(np.unwrap(np.angle(pattern.values[lo:hi + 1])))
    return float(ph.max() - ph.min())
