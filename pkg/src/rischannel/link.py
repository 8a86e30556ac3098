"""Bistatic radar link budget and free-space gain."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._fmt import hz, num
from .errors import InvalidArgumentError
from .metasurface import C0


@dataclass(frozen=True)
class LinkBudgetInput:
    ptx_dbm: float
    gtx_dbi: float
    grx_dbi: float
    sigma_dbsm: float
    frequency_hz: float
    d1_m: float
    d2_m: float

    def __post_init__(self):
        if not (self.d1_m > 0 and self.d2_m > 0):
            raise InvalidArgumentError("d1_m and d2_m must be positive")
        if not self.frequency_hz > 0:
            raise InvalidArgumentError("frequency_hz must be positive")


class LinkBudget(NamedTuple):
    prx_dbm: float
    path_gain_db: float


def bistatic_path_gain_db(gtx_dbi, grx_dbi, sigma_dbsm, frequency_hz, d1_m, d2_m):
    """G_tx + G_rx + sigma + 10 log10(lambda^2 / ((4 pi)^3 d1^2 d2^2)); broadcasts."""
    wavelength = C0 / np.asarray(frequency_hz, dtype=float)
    spread = (wavelength / (np.asarray(d1_m, dtype=float) * np.asarray(d2_m, dtype=float))) ** 2 / (4.0 * np.pi) ** 3
    return gtx_dbi + grx_dbi + sigma_dbsm + 10.0 * np.log10(spread)


def bistatic_received_power(inp: LinkBudgetInput) -> LinkBudget:
    g = float(bistatic_path_gain_db(inp.gtx_dbi, inp.grx_dbi, inp.sigma_dbsm, inp.frequency_hz, inp.d1_m, inp.d2_m))
    return LinkBudget(inp.ptx_dbm + g, g)


def free_space_path_gain(frequency_hz, d_m) -> float:
    """Friis gain 20 log10(lambda / (4 pi d)) between isotropic antennas."""
    if not (frequency_hz > 0 and d_m > 0):
        raise InvalidArgumentError("frequency_hz and d_m must be positive")
    return float(20.0 * np.log10(C0 / frequency_hz / (4.0 * np.pi * d_m)))


def db_to_linear(db):
    return 10.0 ** (np.asarray(db) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x))


def write_link_csv(path, rows) -> None:
    """``rows`` are (LinkBudgetInput, LinkBudget) pairs."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d1_m", "d2_m", "frequency_hz", "sigma_dbsm", "path_gain_db", "prx_dbm"])
        for inp, res in rows:
            w.writerow([num(inp.d1_m), num(inp.d2_m), hz(inp.frequency_hz), num(inp.sigma_dbsm),
                        num(res.path_gain_db), num(res.prx_dbm)])

