import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rischannel.config import load
from rischannel.errors import InvalidArgumentError
from rischannel.link import bistatic_path_gain_db
from rischannel.metasurface import reference_design
from rischannel.rays import beam_squint
from rischannel.tracer import (
    Box,
    Room,
    Scene,
    channel_impulse_response,
    count_image_candidates,
    frequency_sweep,
    image_sources,
    trace_band,
    trace_paths,
    write_cir_csv,
    write_paths_csv,
)

C = 299_792_458.0
F0 = 304e9
DIMS = (10.0, 10.0, 3.0)
RIS_C = np.array([5.0, 0.0, 1.5])
TX = np.array([5.0, 4.0, 1.5])


@pytest.fixture(scope="module")
def ris():
    return reference_design(center_m=RIS_C, normal=(0.0, 1.0, 0.0))


@pytest.fixture(scope="module")
def scene():
    return load().scene


def rx_at(theta_deg, d2):
    t = np.deg2rad(theta_deg)
    return RIS_C + d2 * np.array([np.sin(t), np.cos(t), 0.0])


def make_scene(ris, rx, mode="three-ray", **kw):
    kw.setdefault("los_blocked", True)
    return Scene(Room(DIMS), TX, rx, ris, mode=mode, **kw)


def _reflect(p, wall, dims):
    axis, hi = divmod(wall, 2)
    q = p.copy()
    q[axis] = 2 * dims[axis] - q[axis] if hi else -q[axis]
    return q


def brute_images(source, dims, order):
    """Distinct images reached by exactly ``order`` reflections and by no shorter sequence."""
    seen_by_order = [{tuple(np.round(source, 9))}]
    for k in range(1, order + 1):
        found = set()
        for seq in itertools.product(range(6), repeat=k):
            if any(a == b for a, b in zip(seq, seq[1:])):
                continue
            p = np.asarray(source, dtype=float)
            for w in seq:
                p = _reflect(p, w, dims)
            found.add(tuple(np.round(p, 9)))
        for lower in seen_by_order:
            found -= lower
        seen_by_order.append(found)
    return seen_by_order[order]


@pytest.mark.parametrize("order,expected", [(1, 6), (2, 18), (3, 38)])
def test_image_counts_match_brute_force(order, expected):
    src = np.array([1.3, 2.7, 0.9])
    brute = brute_images(src, DIMS, order)
    ours = {tuple(np.round(p, 9)) for p, _ in image_sources(src, DIMS, order)}
    assert len(brute) == expected
    assert ours == brute
    assert count_image_candidates(DIMS, src, order) == expected


def test_order_zero_is_los_plus_ris(ris):
    s = make_scene(ris, rx_at(30.0, 3.0), los_blocked=False)
    paths = trace_paths(s, 0, F0)
    kinds = [p.kind for p in paths]
    assert kinds.count("los") == 1
    assert kinds.count("wall") == 0
    assert set(kinds) <= {"los", "ris"} and "ris" in kinds


def test_first_order_has_six_paths_in_empty_room(ris):
    s = make_scene(ris, rx_at(30.0, 3.0))
    assert sum(p.kind == "wall" for p in trace_paths(s, 1, F0)) == 6


def test_delays_match_lengths(scene):
    for p in trace_paths(scene, 3, F0):
        seg = sum(np.linalg.norm(np.subtract(b, a)) for a, b in zip(p.vertices, p.vertices[1:]))
        assert p.length_m == pytest.approx(seg, rel=1e-12)
        assert abs(p.delay_s - p.length_m / C) < 1e-12
        assert abs(p.gain) > 0


def test_bounce_vertices_lie_on_their_walls(scene):
    dims = scene.room.dimensions_m
    for p in trace_paths(scene, 3, F0):
        if p.kind != "wall":
            continue
        assert len(p.walls) == p.order == len(p.vertices) - 2
        for v, w in zip(p.vertices[1:-1], p.walls):
            axis = "xyz".index(w[0])
            plane = 0.0 if w[1] == "0" else dims[axis]
            assert v[axis] == pytest.approx(plane, abs=1e-9)
            assert scene.room.contains(v, strict=False)


def test_specular_law_at_each_bounce(scene):
    for p in trace_paths(scene, 2, F0):
        if p.kind != "wall":
            continue
        for a, v, b, w in zip(p.vertices, p.vertices[1:], p.vertices[2:], p.walls):
            axis = "xyz".index(w[0])
            u_in = (np.asarray(v) - a) / np.linalg.norm(np.asarray(v) - a)
            u_out = (np.asarray(b) - v) / np.linalg.norm(np.asarray(b) - v)
            mirrored = u_in.copy()
            mirrored[axis] = -mirrored[axis]
            assert np.allclose(mirrored, u_out, atol=1e-9)


def test_wall_gain_is_friis_times_coefficients(ris):
    coeffs = {"x0": 0.5j, "x1": -0.2, "y0": 0.7, "y1": 0.1 + 0.1j, "z0": 0.9, "z1": -0.4j}
    s = Scene(Room(DIMS, coeffs), TX, rx_at(30.0, 3.0), ris, los_blocked=True)
    lam = C / F0
    for p in trace_paths(s, 2, F0):
        if p.kind == "wall":
            ref = lam / (4 * np.pi * p.length_m) * np.prod([coeffs[w] for w in p.walls])
            assert p.gain == pytest.approx(ref, rel=1e-12)


boxes = st.tuples(
    st.floats(0.1, 9.0), st.floats(0.1, 9.0), st.floats(0.1, 2.5),
    st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.1, 1.5),
)


@settings(max_examples=60, deadline=None)
@given(boxes)
def test_occlusion_never_adds_paths(b):
    x, y, z, dx, dy, dz = b
    rx = rx_at(30.0, 3.0)
    free = Scene(Room(DIMS), TX, rx)
    box = Box(np.array([x, y, z]), np.array([x + dx, y + dy, z + dz]))
    blocked = Scene(Room(DIMS, blockages=(box,)), TX, rx)
    assert len(trace_paths(blocked, 3, F0)) <= len(trace_paths(free, 3, F0))


def test_blockage_removes_ris_path(ris):
    rx = rx_at(30.0, 3.0)
    box = Box(np.array([6.0, 2.0, 1.0]), np.array([6.3, 2.2, 2.0]))
    s = Scene(Room(DIMS, blockages=(box,)), TX, rx, ris, los_blocked=True)
    assert trace_paths(s, 0, F0) == []
    assert len(trace_paths(make_scene(ris, rx), 0, F0)) == 1


def test_blockage_removes_los(ris):
    rx = rx_at(30.0, 3.0)
    box = Box(np.array([5.6, 3.0, 1.0]), np.array([6.1, 3.4, 2.0]))
    s = Scene(Room(DIMS, blockages=(box,)), TX, rx, ris)
    assert not any(p.kind == "los" for p in trace_paths(s, 0, F0))


@pytest.mark.parametrize("mode", ["three-ray", "full-pattern"])
def test_ris_gain_decreases_with_d2(ris, mode):
    gains = []
    for d2 in (1.0, 2.0, 3.0, 5.0, 8.0):
        paths = [p for p in trace_paths(make_scene(ris, rx_at(30.0, d2), mode), 0, F0) if p.tag == "main"]
        gains.append(abs(paths[0].gain))
    assert all(a > b for a, b in zip(gains, gains[1:]))


def test_main_path_of_reference_scenario(scene):
    paths = trace_paths(scene, 0, F0)
    assert [p.kind for p in paths] == ["ris"]
    main = paths[0]
    assert main.tag == "main"
    assert main.delay_s == pytest.approx(7.0 / C, abs=1e-15)
    assert main.delay_s * 1e9 == pytest.approx(23.35, abs=0.005)
    ref = bistatic_path_gain_db(0, 0, main.sigma_dbsm, F0, 4.0, 3.0)
    assert 20 * np.log10(abs(main.gain)) == pytest.approx(ref, abs=1e-9)
    assert main.sigma_dbsm == pytest.approx(15.6, abs=3.0)


def test_three_ray_matches_full_pattern_at_ray_directions(ris):
    probe = trace_paths(make_scene(ris, rx_at(30.0, 3.0)), 0, F0)
    assert probe
    from rischannel.fields import PlaneWave, rcs_pattern
    from rischannel.rays import extract_dominant_rays
    grid = np.linspace(-90, 90, 3601)[1:-1]
    model = extract_dominant_rays(rcs_pattern(ris, PlaneWave(F0, np.array([0.0, -1.0, 0.0])), grid), 3, 6.0, ris)
    assert {r.tag for r in model} == {"main", "specular", "spurious"}
    for ray in model:
        rx = rx_at(ray.theta_deg, 3.0)
        tr = {p.tag: p for p in trace_paths(make_scene(ris, rx, "three-ray"), 0, F0)}
        fp = {p.tag: p for p in trace_paths(make_scene(ris, rx, "full-pattern"), 0, F0)}
        assert ray.tag in tr and ray.tag in fp
        a = 20 * np.log10(abs(tr[ray.tag].gain))
        b = 20 * np.log10(abs(fp[ray.tag].gain))
        assert abs(a - b) < 0.5


def test_three_ray_window_gates_off_beam_receivers(ris):
    assert trace_paths(make_scene(ris, rx_at(15.0, 3.0)), 0, F0) == []
    # the full pattern still returns a (weak, untagged) contribution there
    [p] = trace_paths(make_scene(ris, rx_at(15.0, 3.0), "full-pattern"), 0, F0)
    assert p.tag == "other"


def test_single_path_cir(scene):
    paths = trace_paths(scene, 0, F0)
    cir = channel_impulse_response(paths, F0)
    assert len(cir.taps) == 1
    assert abs(cir.aggregate_gain) == pytest.approx(abs(paths[0].gain), rel=1e-12)


def test_destructive_pair():
    from rischannel.tracer import PropagationPath
    d = 3.0 / C
    half = 0.5 / F0
    a = PropagationPath("los", (), 3.0, d, 1e-3 + 0j)
    b = PropagationPath("wall", (), 3.0 + C * half, d + half, 1e-3 + 0j, 1)
    cir = channel_impulse_response([b, a], F0)
    assert [t.kind for t in cir.taps] == ["los", "wall"]
    assert cir.aggregate_gain_db - 20 * np.log10(1e-3) < -40.0


def test_taps_sorted_with_kind_ties():
    from rischannel.tracer import PropagationPath
    ps = [PropagationPath("ris", (), 1.0, 1e-9, 1.0 + 0j, tag="main"),
          PropagationPath("wall", (), 1.0, 1e-9, 1.0 + 0j, 1),
          PropagationPath("los", (), 1.0, 2e-9, 1.0 + 0j)]
    cir = channel_impulse_response(ps, F0)
    assert [t.kind for t in cir.taps] == ["wall", "ris", "los"]
    with pytest.raises(InvalidArgumentError):
        channel_impulse_response([], F0)


def test_band_edge_drop(scene):
    s = replace(scene, mode="full-pattern")
    cirs = frequency_sweep(s, [299e9, 304e9, 309e9], 0)
    g = [20 * np.log10(abs(c.tap("ris", "main").gain)) for c in cirs]
    drop = g[1] - min(g[0], g[2])
    assert 2.0 <= drop <= 5.0
    assert g[1] > g[0] and g[1] > g[2]


def test_squint_pushes_receiver_off_the_lobe(scene):
    s = replace(scene, mode="full-pattern")
    a, b = frequency_sweep(s, [304e9, 314e9], 0)
    ta, tb = a.tap("ris"), b.tap("ris")
    assert 20 * np.log10(abs(ta.gain) / abs(tb.gain)) > 3.0
    assert beam_squint(30.0, 304e9, 314e9)[1] == pytest.approx(-1.05, abs=0.01)


def test_ris_delay_constant_across_band(scene):
    cirs = frequency_sweep(scene, [299e9, 301.5e9, 304e9, 306.5e9, 309e9], 2)
    delays = {c.tap("ris", "main").delay_s for c in cirs}
    assert len(delays) == 1


def test_single_frequency_sweep_equals_trace(scene):
    [cir] = frequency_sweep(scene, [F0], 2)
    ref = channel_impulse_response(trace_paths(scene, 2, F0), F0)
    assert cir == ref


def test_band_parallel_matches_serial(scene):
    freqs = [299e9, 304e9, 309e9]
    serial = trace_band(scene, freqs, 2, jobs=1)
    parallel = trace_band(scene, freqs, 2, jobs=3)
    for (f1, p1), (f2, p2) in zip(serial, parallel):
        assert f1 == f2
        assert [p.gain for p in p1] == [p.gain for p in p2]


def test_degenerate_geometry(ris):
    with pytest.raises(InvalidArgumentError):
        Scene(Room(DIMS), np.array([0.0, 4.0, 1.5]), rx_at(30.0, 3.0), ris)
    with pytest.raises(InvalidArgumentError):
        Scene(Room(DIMS), TX, np.array([6.0, 2.0, 3.0]), ris)
    floating = reference_design(center_m=(5.0, 1.0, 1.5), normal=(0.0, 1.0, 0.0))
    with pytest.raises(InvalidArgumentError):
        Scene(Room(DIMS), TX, rx_at(30.0, 3.0), floating)
    outward = reference_design(center_m=(5.0, 0.0, 1.5), normal=(0.0, -1.0, 0.0))
    with pytest.raises(InvalidArgumentError):
        Scene(Room(DIMS), TX, rx_at(30.0, 3.0), outward)
    with pytest.raises(InvalidArgumentError):
        Room((10.0, -1.0, 3.0))
    with pytest.raises(InvalidArgumentError):
        Room(DIMS, {"x0": 1.5})
    with pytest.raises(InvalidArgumentError):
        trace_paths(make_scene(ris, rx_at(30.0, 3.0)), -1, F0)


def test_csv_writers(tmp_path, scene):
    paths = trace_paths(scene, 1, F0)
    write_paths_csv(tmp_path / "p.csv", paths)
    write_cir_csv(tmp_path / "c.csv", channel_impulse_response(paths, F0))
    p = (tmp_path / "p.csv").read_text().splitlines()
    c = (tmp_path / "c.csv").read_text().splitlines()
    assert p[0] == "kind,order_or_tag,length_m,delay_ns,gain_db,phase_deg"
    assert c[0] == "frequency_hz,delay_ns,gain_db,phase_deg"
    assert len(p) == len(c) == len(paths) + 1
    assert any(line.startswith("ris,main,7.000000000,23.349486") for line in p)
