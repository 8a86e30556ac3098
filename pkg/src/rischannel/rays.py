"""Reduction of RCS patterns to a few dominant rays, and beam squint."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from ._fmt import hz as format_hz
from ._fmt import num
from .errors import EvanescentError, InvalidArgumentError
from .fields import PlaneWave, RcsPattern, half_power_beamwidth, rcs_pattern
from .metasurface import C0, RisDesign

TAGS = ("main", "specular", "spurious", "other")


@dataclass(frozen=True)
class Ray:
    theta_deg: float
    sigma_dbsm: float
    phase_deg: float
    tag: str = "other"

    def __post_init__(self):
        if not -90.0 < self.theta_deg < 90.0:
            raise InvalidArgumentError(f"ray angle {self.theta_deg} outside (-90, 90)")
        if self.tag not in TAGS:
            raise InvalidArgumentError(f"unknown ray tag {self.tag!r}")


@dataclass(frozen=True)
class RayModel:
    frequency_hz: float
    rays: tuple[Ray, ...] = field(default_factory=tuple)
    hpbw_deg: float | None = None

    def __post_init__(self):
        rays = tuple(sorted(self.rays, key=lambda r: -r.sigma_dbsm))
        if sum(r.tag == "main" for r in rays) > 1:
            raise InvalidArgumentError("a ray model holds at most one main ray")
        object.__setattr__(self, "rays", rays)

    def __len__(self):
        return len(self.rays)

    def __iter__(self):
        return iter(self.rays)

    def by_tag(self, tag) -> Ray | None:
        for r in self.rays:
            if r.tag == tag:
                return r
        return None


def beam_squint(theta_out_deg, f0_hz, f_hz) -> tuple[float, float]:
    """Steering angle of a phase-gradient surface away from its design frequency.

    Returns ``(theta_deg, delta_deg)`` with ``theta = asin((f0/f) sin theta_out)``
    and ``delta = theta - theta_out``.
    """
    if not (f0_hz > 0 and f_hz > 0):
        raise InvalidArgumentError("frequencies must be positive")
    s = f0_hz / f_hz * np.sin(np.deg2rad(theta_out_deg))
    if abs(s) > 1.0:
        raise EvanescentError(f"no propagating beam at {f_hz:g} Hz (sin = {s:.4f})")
    theta = float(np.rad2deg(np.arcsin(s)))
    return theta, theta - float(theta_out_deg)


def design_steering_sine(design: RisDesign) -> float:
    """sin(theta_out) - sin(theta_in) of a design.

    Taken from the steering metadata when present, otherwise estimated by a
    linear fit to the unwrapped phases of the middle row.
    """
    if design.theta_out_deg is not None:
        return float(np.sin(np.deg2rad(design.theta_out_deg)) - np.sin(np.deg2rad(design.theta_in_deg)))
    if design.cols < 2:
        return 0.0
    row = design.state_grid[design.rows // 2]
    phases = np.unwrap(np.deg2rad([design.codebook.state(int(s)).phase_deg for s in row]))
    slope = np.polyfit(design.col_offsets, phases, 1)[0]
    k0 = 2.0 * np.pi * design.frequency_design_hz / C0
    return float(-slope / k0)


def expected_directions(steering_sine, f0_hz, f_hz, incidence_deg=0.0) -> dict[str, float]:
    """Angles where the main, specular and spurious rays should leave the surface.

    ``steering_sine`` is sin(theta_out) - sin(theta_in) of the design; the
    spurious ray is the order mirrored about the specular direction.
    """
    s_inc = np.sin(np.deg2rad(incidence_deg))
    dirs = {"specular": float(incidence_deg)}
    shift = f0_hz / f_hz * steering_sine
    if abs(shift) < 1e-9:
        return dirs
    for tag, s in (("main", s_inc + shift), ("spurious", s_inc - shift)):
        if abs(s) < 1.0:
            dirs[tag] = float(np.rad2deg(np.arcsin(s)))
    return dirs


def _refine(a, y, i):
    """Quadratic fit through a peak and its neighbours -> (x, y)."""
    if i == 0 or i == len(y) - 1:
        return a[i], y[i]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0.0:
        return a[i], y1
    off = 0.5 * (y0 - y2) / denom
    h = 0.5 * (a[i + 1] - a[i - 1])
    return a[i] + off * h, y1 - 0.25 * (y0 - y2) * off


def extract_dominant_rays(pattern: RcsPattern, max_rays=3, min_prominence_db=6.0, design: RisDesign | None = None,
                          window_deg=2.0, refine=True) -> RayModel:
    """Dominant local maxima of the pattern, strongest first.

    With a ``design`` the peaks are associated with the main, specular and
    spurious directions. Each direction owns a cone of ``window_deg``; all
    peaks inside a cone collapse to its strongest one, and tagged rays are
    kept ahead of untagged ones when ``max_rays`` truncates the list.
    """
    if pattern.angles_deg.size == 0:
        raise InvalidArgumentError("empty pattern")
    if max_rays < 1:
        raise InvalidArgumentError("max_rays must be >= 1")
    db = pattern.dbsm
    a = pattern.angles_deg
    idx, props = find_peaks(db, prominence=min_prominence_db)
    if idx.size == 0:
        # monotone or single-sample pattern: the global maximum is the only ray
        idx = np.array([int(np.argmax(db))])

    expected = {}
    if design is not None:
        expected = expected_directions(design_steering_sine(design), design.frequency_design_hz,
                                       pattern.frequency_hz, pattern.incidence_deg)

    candidates = []
    for i in idx:
        theta, sigma = _refine(a, db, i) if refine else (a[i], db[i])
        tag = "other"
        best = window_deg
        for name, direction in expected.items():
            dist = abs(theta - direction)
            if dist <= best:
                tag, best = name, dist
        candidates.append((float(sigma), float(theta), float(pattern.phase_deg[i]), tag))
    candidates.sort(key=lambda c: -c[0])

    tagged, untagged, seen = [], [], set()
    for sigma, theta, phase, tag in candidates:
        if not -90.0 < theta < 90.0:
            continue
        if tag == "other":
            untagged.append(Ray(theta, sigma, phase, tag))
        elif tag not in seen:
            seen.add(tag)
            tagged.append(Ray(theta, sigma, phase, tag))
    chosen = (tagged + untagged)[:max_rays]
    return RayModel(pattern.frequency_hz, tuple(chosen))


def ray_model_over_band(design: RisDesign, f_list, angle_grid_deg=None, theta_in_deg=0.0, plane="azimuth",
                        max_rays=3, min_prominence_db=6.0, jobs=1) -> list[RayModel]:
    """Recompute the pattern and its rays at every frequency."""
    freqs = [float(f) for f in f_list]
    if any(not f > 0 for f in freqs):
        raise InvalidArgumentError("frequencies must be positive")
    grid = np.linspace(-90.0, 90.0, 3601) if angle_grid_deg is None else np.asarray(angle_grid_deg)

    def one(f):
        wave = PlaneWave.incident_on(design, f, theta_in_deg, plane)
        pat = rcs_pattern(design, wave, grid, plane)
        model = extract_dominant_rays(pat, max_rays, min_prominence_db, design)
        main = model.by_tag("main")
        hpbw = half_power_beamwidth(pat, main.theta_deg if main else None)
        return RayModel(model.frequency_hz, model.rays, hpbw)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, freqs))
    return [one(f) for f in freqs]


def write_rays_csv(path, models) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_hz", "tag", "theta_deg", "sigma_dbsm", "phase_deg"])
        for m in sorted(models, key=lambda m: m.frequency_hz):
            for r in m.rays:
                w.writerow([format_hz(m.frequency_hz), r.tag, num(r.theta_deg, 4),
                            num(r.sigma_dbsm), num(r.phase_deg)])

