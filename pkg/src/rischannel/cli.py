"""Command-line front end writing the CSV data behind each figure.

    rischannel rcs      --config scenario.yaml --out figures/
    rischannel make-figures --out figures/

Without ``--config`` the shipped reference scenario is used.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from ._fmt import hz as format_hz
from ._fmt import num
from .errors import ConfigError, RisChannelError
from .fields import PlaneWave, cut_directions, near_far_deviation, rcs_at, rcs_pattern, write_deviation_csv
from .link import LinkBudgetInput, bistatic_received_power, write_link_csv
from .rays import (
    beam_squint,
    design_steering_sine,
    expected_directions,
    extract_dominant_rays,
    write_rays_csv,
)
from .tracer import channel_impulse_response, trace_band, write_cir_csv, write_paths_csv

log = logging.getLogger("rischannel")


def freq_tag(f) -> str:
    """304e9 -> '304e9'; used in per-frequency file names."""
    return f"{float(f) / 1e9:g}e9"


def _map(fn, items, jobs):
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _prepare(out: Path) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def _write(writer, path: Path, *args):
    try:
        writer(path, *args)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    log.info("wrote %s", path)
    return path


def cmd_rcs(conf: cfg.ScenarioConfig, out: Path, jobs=1) -> list[Path]:
    design = conf.design

    def one(f):
        wave = PlaneWave.incident_on(design, f, conf.theta_in_deg, conf.plane)
        pat = rcs_pattern(design, wave, conf.angle_grid_deg, conf.plane)
        return pat, extract_dominant_rays(pat, 3, 6.0, design)

    results = _map(one, conf.excitation_frequencies_hz, jobs)
    out = _prepare(out)
    written = [_write(lambda p, pat=pat: pat.write_csv(p), out / f"rcs_{freq_tag(pat.frequency_hz)}.csv")
               for pat, _ in results]
    written.append(_write(write_rays_csv, out / "rays.csv", [m for _, m in results]))
    return written


def _main_direction(conf: cfg.ScenarioConfig):
    design = conf.design
    wave = PlaneWave.incident_on(design, design.frequency_design_hz, conf.theta_in_deg, conf.plane)
    dirs = expected_directions(design_steering_sine(design), design.frequency_design_hz,
                               design.frequency_design_hz, conf.theta_in_deg)
    theta = dirs.get("main", dirs["specular"])
    return wave, cut_directions(design, [theta], conf.plane)[0]


def cmd_nearfar(conf: cfg.ScenarioConfig, out: Path, jobs=1) -> list[Path]:
    wave, direction = _main_direction(conf)
    dev = near_far_deviation(conf.design, wave, direction, conf.distances_m)
    out = _prepare(out)
    return [_write(write_deviation_csv, out / "nearfar.csv", conf.distances_m, dev)]


def cmd_squint(conf: cfg.ScenarioConfig, out: Path, jobs=1) -> list[Path]:
    design = conf.design
    f0 = design.frequency_design_hz
    theta_out = conf.theta_out_deg
    look = cut_directions(design, [theta_out], conf.plane)

    def one(f):
        theta, delta = beam_squint(theta_out, f0, f)
        wave = PlaneWave.incident_on(design, f, conf.theta_in_deg, conf.plane)
        sigma = abs(rcs_at(design, wave, look)[0]) ** 2
        return f, theta, delta, 10.0 * np.log10(max(sigma, 1e-30))

    rows = _map(one, conf.squint_frequencies_hz, jobs)

    def write(path, rows):
        with path.open("w", newline="") as fh:
            fh.write("frequency_hz,theta_deg,delta_theta_deg,sigma_at_theta_out_dbsm\n")
            for f, theta, delta, s in rows:
                fh.write(f"{format_hz(f)},{num(theta)},{num(delta)},{num(s)}\n")

    out = _prepare(out)
    return [_write(write, out / "squint.csv", rows)]


def cmd_link(conf: cfg.ScenarioConfig, out: Path, jobs=1) -> list[Path]:
    lk = conf.link
    rows = []
    for d1 in lk["d1_m"]:
        for d2 in lk["d2_m"]:
            inp = LinkBudgetInput(lk["ptx_dbm"], lk["gtx_dbi"], lk["grx_dbi"], lk["sigma_dbsm"],
                                  lk["frequency_hz"], d1, d2)
            rows.append((inp, bistatic_received_power(inp)))
    out = _prepare(out)
    return [_write(write_link_csv, out / "link.csv", rows)]


def cmd_trace(conf: cfg.ScenarioConfig, out: Path, jobs=1) -> list[Path]:
    band = trace_band(conf.scene, conf.scene_frequencies_hz, conf.max_bounce_order, jobs)
    out = _prepare(out)
    written = []
    for f, paths in band:
        tag = freq_tag(f)
        written.append(_write(write_paths_csv, out / f"paths_{tag}.csv", paths))
        written.append(_write(write_cir_csv, out / f"cir_{tag}.csv", channel_impulse_response(paths, f)))
    return written


COMMANDS = {
    "rcs": cmd_rcs,
    "nearfar": cmd_nearfar,
    "squint": cmd_squint,
    "link": cmd_link,
    "trace": cmd_trace,
}


def cmd_make_figures(conf: cfg.ScenarioConfig, out: Path, jobs=1) -> list[Path]:
    written = []
    for name, fn in COMMANDS.items():
        written += fn(conf, out, jobs)
    return written


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="scenario YAML (default: shipped reference scenario)")
    common.add_argument("--out", type=Path, default=None, help="output directory (overrides output.directory)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. --set scene.mode=full-pattern (repeatable)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for frequency sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rischannel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["make-figures"]:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        conf = cfg.load(args.config, args.overrides)
        out = args.out if args.out is not None else conf.output_dir
        fn = cmd_make_figures if args.command == "make-figures" else COMMANDS[args.command]
        for path in fn(conf, out, args.jobs):
            print(path)
    except ConfigError as exc:
        print(f"rischannel: config error: {exc}", file=sys.stderr)
        return 2
    except (RisChannelError, OSError) as exc:
        print(f"rischannel: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
