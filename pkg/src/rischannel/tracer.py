"""Image-method tracer for a shoebox room with an RIS scattering node.

Wall reflections come from the image lattice of the room: every image is
indexed per axis by a shift ``a`` and a parity ``q``, and its reflection
count along that axis is ``|2a - q|``. Bounce points are recovered by
unfolding, i.e. by folding the crossings of the straight image-to-receiver
line back into the room.

The RIS is a point scatterer at its center. Its contribution follows the
bistatic radar equation with the RCS (and phase) taken either directly
from the array-factor model at the true departure direction
(``full-pattern``) or from the tagged rays of the pattern cut
(``three-ray``).
"""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._fmt import hz as format_hz
from ._fmt import num
from .errors import InvalidArgumentError
from .fields import PlaneWave, cut_directions, half_power_beamwidth, rcs_at, rcs_pattern
from .link import bistatic_path_gain_db
from .metasurface import C0, RisDesign
from .rays import expected_directions, design_steering_sine, extract_dominant_rays

WALLS = ("x0", "x1", "y0", "y1", "z0", "z1")
_KIND_RANK = {"los": 0, "wall": 1, "ris": 2}
_MODES = ("three-ray", "full-pattern")


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
            raise InvalidArgumentError("box corners must satisfy lo < hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def blocks(self, p, q) -> bool:
        """Slab test: does the open segment p-q pass through the box?"""
        d = q - p
        t0, t1 = 0.0, 1.0
        for i in range(3):
            if abs(d[i]) < 1e-15:
                if p[i] <= self.lo[i] or p[i] >= self.hi[i]:
                    return False
                continue
            a = (self.lo[i] - p[i]) / d[i]
            b = (self.hi[i] - p[i]) / d[i]
            if a > b:
                a, b = b, a
            t0, t1 = max(t0, a), min(t1, b)
            if t0 >= t1:
                return False
        return True


def _default_walls():
    return {w: 0.3 * np.exp(1j * np.pi) for w in WALLS}


@dataclass(frozen=True, eq=False)
class Room:
    dimensions_m: tuple[float, float, float]
    wall_coefficients: dict = field(default_factory=_default_walls)
    blockages: tuple[Box, ...] = ()

    def __post_init__(self):
        dims = tuple(float(v) for v in self.dimensions_m)
        if len(dims) != 3 or min(dims) <= 0:
            raise InvalidArgumentError("room dimensions must be three positive lengths")
        object.__setattr__(self, "dimensions_m", dims)
        coeffs = _default_walls()
        for k, v in dict(self.wall_coefficients).items():
            if k not in WALLS:
                raise InvalidArgumentError(f"unknown wall {k!r}; expected one of {WALLS}")
            coeffs[k] = complex(v)
        for k, v in coeffs.items():
            if abs(v) > 1.0 + 1e-12:
                raise InvalidArgumentError(f"wall {k}: reflection magnitude {abs(v):.3f} exceeds 1")
        object.__setattr__(self, "wall_coefficients", coeffs)
        object.__setattr__(self, "blockages", tuple(self.blockages))

    def contains(self, p, strict=True) -> bool:
        p = np.asarray(p, dtype=float)
        lo, hi = np.zeros(3), np.array(self.dimensions_m)
        if strict:
            return bool(np.all(p > lo) and np.all(p < hi))
        return bool(np.all(p >= lo) and np.all(p <= hi))

    def occluded(self, p, q) -> bool:
        return any(b.blocks(p, q) for b in self.blockages)

    def wall_of(self, point, normal, tol=1e-9):
        """Name of the wall the point lies on whose inward normal matches."""
        inward = {"x0": (0, 1.0), "x1": (0, -1.0), "y0": (1, 1.0), "y1": (1, -1.0), "z0": (2, 1.0), "z1": (2, -1.0)}
        for name, (axis, sign) in inward.items():
            plane = 0.0 if sign > 0 else self.dimensions_m[axis]
            n = np.zeros(3)
            n[axis] = sign
            if abs(point[axis] - plane) < tol and np.allclose(normal, n, atol=1e-9):
                return name
        return None


@dataclass(frozen=True, eq=False)
class Scene:
    room: Room
    tx_m: np.ndarray
    rx_m: np.ndarray
    ris: RisDesign | None = None
    los_blocked: bool = False
    mode: str = "three-ray"
    gtx_dbi: float = 0.0
    grx_dbi: float = 0.0
    angle_step_deg: float = 0.05
    min_prominence_db: float = 6.0
    window_hpbw: float = 1.5

    def __post_init__(self):
        for name in ("tx_m", "rx_m"):
            p = np.asarray(getattr(self, name), dtype=float)
            if p.shape != (3,):
                raise InvalidArgumentError(f"{name} must be a 3-D point")
            if not self.room.contains(p):
                raise InvalidArgumentError(f"{name} {p.tolist()} is not strictly inside the room")
            object.__setattr__(self, name, p)
        if self.mode not in _MODES:
            raise InvalidArgumentError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.ris is not None and self.room.wall_of(self.ris.center_m, self.ris.normal) is None:
            raise InvalidArgumentError("RIS center must lie on a wall with its normal pointing into the room")


@dataclass(frozen=True, eq=False)
class PropagationPath:
    kind: str
    vertices: tuple
    length_m: float
    delay_s: float
    gain: complex
    order: int = 0
    tag: str | None = None
    walls: tuple[str, ...] = ()
    theta_deg: float | None = None
    sigma_dbsm: float | None = None

    @property
    def label(self) -> str:
        if self.kind == "ris":
            return str(self.tag)
        return str(self.order)


@dataclass(frozen=True)
class Tap:
    delay_s: float
    gain: complex
    kind: str
    label: str


@dataclass(frozen=True)
class ChannelImpulseResponse:
    frequency_hz: float
    taps: tuple[Tap, ...]

    @property
    def aggregate_gain(self) -> complex:
        return complex(sum(t.gain for t in self.taps))

    @property
    def aggregate_gain_db(self) -> float:
        return float(20.0 * np.log10(max(abs(self.aggregate_gain), 1e-300)))

    def tap(self, kind, label=None) -> Tap | None:
        for t in self.taps:
            if t.kind == kind and (label is None or t.label == label):
                return t
        return None


# --- image method -------------------------------------------------------------


def image_sources(source, dims, order):
    """Images with exactly ``order`` reflections: list of (position, per-axis (a, q))."""
    source = np.asarray(source, dtype=float)
    per_axis = []
    for i in range(3):
        opts = []
        for a in range(-order, order + 1):
            for q in (0, 1):
                n = abs(2 * a - q)
                if n <= order:
                    opts.append((n, a, q))
        per_axis.append(opts)
    out = []
    for combo in itertools.product(*per_axis):
        if sum(c[0] for c in combo) != order:
            continue
        pos = np.array([(1 - 2 * q) * source[i] + 2 * a * dims[i] for i, (_, a, q) in enumerate(combo)])
        out.append((pos, tuple((a, q) for _, a, q in combo)))
    return out


def _fold(x, length):
    t = np.mod(x, 2.0 * length)
    return np.where(t > length, 2.0 * length - t, t)


def _unfold_vertices(image, rx, dims):
    """Bounce points (in path order) and walls hit along image -> rx."""
    d = rx - image
    hits = []
    for i in range(3):
        L = dims[i]
        lo, hi = sorted((image[i], rx[i]))
        for m in range(int(np.floor(lo / L)) + 1, int(np.ceil(hi / L))):
            t = (m * L - image[i]) / d[i]
            wall = WALLS[2 * i + (m % 2)]
            hits.append((t, wall))
    hits.sort(key=lambda h: h[0])
    pts, walls = [], []
    for t, wall in hits:
        p = image + t * d
        pts.append(np.array([_fold(p[j], dims[j]) for j in range(3)], dtype=float))
        walls.append(wall)
    return pts, walls


@dataclass(frozen=True, eq=False)
class _Geometry:
    kind: str
    vertices: tuple
    length_m: float
    order: int = 0
    walls: tuple = ()


def _geometric_paths(scene: Scene, max_bounce_order: int):
    room = scene.room
    dims = room.dimensions_m
    tx, rx = scene.tx_m, scene.rx_m
    out = []
    if not scene.los_blocked and not room.occluded(tx, rx):
        out.append(_Geometry("los", (tx, rx), float(np.linalg.norm(rx - tx))))
    for k in range(1, max_bounce_order + 1):
        for image, _ in image_sources(tx, dims, k):
            pts, walls = _unfold_vertices(image, rx, dims)
            if len(pts) != k:
                # line grazes an edge or corner: bounce sequence is ambiguous
                continue
            verts = (tx, *pts, rx)
            if any(room.occluded(verts[i], verts[i + 1]) for i in range(len(verts) - 1)):
                continue
            out.append(_Geometry("wall", verts, float(np.linalg.norm(rx - image)), k, tuple(walls)))
    return out


def count_image_candidates(dims, source, order) -> int:
    return len(image_sources(source, dims, order))


# --- RIS response -------------------------------------------------------------


class _RisResponse:
    """Per-frequency RIS scattering, caching the cut pattern for three-ray mode."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self._cache = {}

    def _rays(self, wave: PlaneWave):
        key = (wave.frequency_hz, tuple(np.round(wave.direction, 12)))
        if key not in self._cache:
            design = self.scene.ris
            n = round(180.0 / self.scene.angle_step_deg)
            grid = np.linspace(-90.0, 90.0, n + 1)[1:-1]
            pat = rcs_pattern(design, wave, grid)
            model = extract_dominant_rays(pat, 3, self.scene.min_prominence_db, design)
            main = model.by_tag("main")
            hpbw = half_power_beamwidth(pat, main.theta_deg if main else None)
            self._cache[key] = (model, hpbw)
        return self._cache[key]

    def paths(self, frequency_hz):
        scene, design = self.scene, self.scene.ris
        if design is None:
            return []
        c, n = design.center_m, design.normal
        tx, rx = scene.tx_m, scene.rx_m
        if (tx - c) @ n <= 0.0 or (rx - c) @ n <= 0.0:
            return []
        if scene.room.occluded(tx, c) or scene.room.occluded(c, rx):
            return []
        d1 = float(np.linalg.norm(c - tx))
        d2 = float(np.linalg.norm(rx - c))
        wave = PlaneWave(frequency_hz, (c - tx) / d1)
        s_hat = (rx - c) / d2
        theta = float(np.rad2deg(np.arctan2(s_hat @ design.col_axis, s_hat @ n)))

        contributions = []
        if scene.mode == "full-pattern":
            v = complex(rcs_at(design, wave, s_hat[None, :])[0])
            sigma_db = 10.0 * np.log10(max(abs(v) ** 2, 1e-30))
            incidence = float(np.rad2deg(np.arcsin(np.clip(wave.direction @ design.col_axis, -1, 1))))
            expected = expected_directions(design_steering_sine(design), design.frequency_design_hz,
                                           frequency_hz, incidence)
            tag, best = "other", 2.0
            for name, direction in expected.items():
                if abs(theta - direction) <= best:
                    tag, best = name, abs(theta - direction)
            contributions.append((tag, sigma_db, float(np.angle(v))))
        else:
            model, hpbw = self._rays(wave)
            window = np.deg2rad(scene.window_hpbw * hpbw)
            for ray in model:
                if ray.tag == "other":
                    continue
                r_hat = cut_directions(design, [ray.theta_deg])[0]
                if np.arccos(np.clip(r_hat @ s_hat, -1.0, 1.0)) <= window:
                    contributions.append((ray.tag, ray.sigma_dbsm, np.deg2rad(ray.phase_deg)))

        out = []
        for tag, sigma_db, phase in contributions:
            g_db = float(bistatic_path_gain_db(scene.gtx_dbi, scene.grx_dbi, sigma_db, frequency_hz, d1, d2))
            amp = 10.0 ** (g_db / 20.0)
            out.append(PropagationPath("ris", (tx, c.copy(), rx), d1 + d2, (d1 + d2) / C0,
                                       amp * np.exp(1j * phase), tag=tag, theta_deg=theta, sigma_dbsm=sigma_db))
        return out


def _realize(scene: Scene, geoms, frequency_hz, ris: _RisResponse):
    wavelength = C0 / frequency_hz
    antenna = 10.0 ** ((scene.gtx_dbi + scene.grx_dbi) / 20.0)
    paths = []
    for g in geoms:
        gain = antenna * wavelength / (4.0 * np.pi * g.length_m) + 0j
        for w in g.walls:
            gain *= scene.room.wall_coefficients[w]
        paths.append(PropagationPath(g.kind, g.vertices, g.length_m, g.length_m / C0, gain, g.order, walls=g.walls))
    paths.extend(ris.paths(frequency_hz))
    return paths


def trace_paths(scene: Scene, max_bounce_order: int, frequency_hz: float) -> list[PropagationPath]:
    """LOS, wall bounces up to ``max_bounce_order`` and RIS paths at one frequency."""
    if max_bounce_order < 0:
        raise InvalidArgumentError("max_bounce_order must be >= 0")
    if not frequency_hz > 0:
        raise InvalidArgumentError("frequency_hz must be positive")
    return _realize(scene, _geometric_paths(scene, max_bounce_order), frequency_hz, _RisResponse(scene))


def trace_band(scene: Scene, f_list, max_bounce_order: int, jobs=1) -> list[tuple[float, list[PropagationPath]]]:
    """Trace once, then re-evaluate gains and RIS contributions per frequency."""
    if max_bounce_order < 0:
        raise InvalidArgumentError("max_bounce_order must be >= 0")
    freqs = [float(f) for f in f_list]
    if any(not f > 0 for f in freqs):
        raise InvalidArgumentError("frequencies must be positive")
    geoms = _geometric_paths(scene, max_bounce_order)
    ris = _RisResponse(scene)

    def one(f):
        return f, _realize(scene, geoms, f, ris)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, freqs))
    return [one(f) for f in freqs]


def channel_impulse_response(paths, frequency_hz) -> ChannelImpulseResponse:
    paths = list(paths)
    if not paths:
        raise InvalidArgumentError("channel_impulse_response needs at least one path")
    taps = [Tap(p.delay_s, p.gain * np.exp(-2j * np.pi * frequency_hz * p.delay_s), p.kind, p.label) for p in paths]
    taps.sort(key=lambda t: (t.delay_s, _KIND_RANK[t.kind]))
    return ChannelImpulseResponse(float(frequency_hz), tuple(taps))


def frequency_sweep(scene: Scene, f_list, max_bounce_order: int, jobs=1) -> list[ChannelImpulseResponse]:
    return [channel_impulse_response(paths, f) for f, paths in trace_band(scene, f_list, max_bounce_order, jobs)]


def _db_phase(g):
    return 20.0 * np.log10(max(abs(g), 1e-300)), float(np.rad2deg(np.angle(g)))


def write_paths_csv(path, paths) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "order_or_tag", "length_m", "delay_ns", "gain_db", "phase_deg"])
        for p in paths:
            db, ph = _db_phase(p.gain)
            w.writerow([p.kind, p.label, num(p.length_m, 9), num(p.delay_s * 1e9, 9), num(db), num(ph)])


def write_cir_csv(path, cir: ChannelImpulseResponse) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_hz", "delay_ns", "gain_db", "phase_deg"])
        for t in cir.taps:
            db, ph = _db_phase(t.gain)
            w.writerow([format_hz(cir.frequency_hz), num(t.delay_s * 1e9, 9), num(db), num(ph)])
