import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rischannel.errors import InvalidArgumentError
from rischannel.fields import flat_plate_rcs
from rischannel.link import (
    LinkBudgetInput,
    bistatic_path_gain_db,
    bistatic_received_power,
    db_to_linear,
    free_space_path_gain,
    linear_to_db,
    write_link_csv,
)

F0 = 304e9
LAM = 299_792_458.0 / F0

pos = st.floats(0.1, 1000.0)
gain = st.floats(-10.0, 40.0)


def test_reference_path_gain():
    res = bistatic_received_power(LinkBudgetInput(0.0, 0.0, 0.0, 15.6, F0, 5.0, 5.0))
    assert res.path_gain_db == pytest.approx(-105.46, abs=0.01)
    # independent scalar evaluation with math instead of numpy
    ref = 15.6 + 10 * math.log10(LAM ** 2 / ((4 * math.pi) ** 3 * 25.0 ** 2))
    assert res.path_gain_db == pytest.approx(ref, abs=1e-9)
    assert res.path_gain_db == pytest.approx(-105.45615, abs=1e-4)


def test_received_power_adds_ptx():
    res = bistatic_received_power(LinkBudgetInput(10.0, 20.0, 20.0, 15.6, F0, 5.0, 5.0))
    assert res.prx_dbm == pytest.approx(res.path_gain_db + 10.0)
    assert res.path_gain_db == pytest.approx(-65.46, abs=0.01)


def test_doubling_d2_costs_6db():
    a = bistatic_received_power(LinkBudgetInput(0, 0, 0, 15.6, F0, 3.0, 4.0)).path_gain_db
    b = bistatic_received_power(LinkBudgetInput(0, 0, 0, 15.6, F0, 3.0, 8.0)).path_gain_db
    assert a - b == pytest.approx(20 * math.log10(2), abs=1e-9)


@given(pos, pos, gain, gain)
def test_reciprocity(d1, d2, g1, g2):
    a = bistatic_path_gain_db(g1, g2, 10.0, F0, d1, d2)
    b = bistatic_path_gain_db(g2, g1, 10.0, F0, d2, d1)
    assert a == pytest.approx(b, abs=1e-9)


def test_broadcasting():
    d2 = np.array([1.0, 2.0, 5.0, 10.0])
    g = bistatic_path_gain_db(0, 0, 15.6, F0, 5.0, d2)
    assert g.shape == (4,)
    assert g[2] == pytest.approx(-105.46, abs=0.01)


def test_free_space():
    assert free_space_path_gain(F0, 1.0) == pytest.approx(-82.11, abs=0.01)
    assert free_space_path_gain(F0, 10.0) - free_space_path_gain(F0, 1.0) == pytest.approx(-20.0, abs=1e-9)
    assert free_space_path_gain(2 * F0, 3.0) - free_space_path_gain(F0, 3.0) == pytest.approx(-20 * math.log10(2), abs=1e-9)


@given(pos, pos, st.floats(1e-4, 1.0))
def test_plate_consistency(d1, d2, area):
    """Bistatic gain of a flat plate equals two Friis hops through a plate of aperture gain 4 pi A / lambda^2."""
    sigma = 10 * math.log10(flat_plate_rcs(area, F0))
    bistatic = bistatic_path_gain_db(0, 0, sigma, F0, d1, d2)
    g_plate = 10 * math.log10(4 * math.pi * area / LAM ** 2)
    friis = free_space_path_gain(F0, d1) + free_space_path_gain(F0, d2) + 2 * g_plate
    assert bistatic == pytest.approx(friis, abs=0.1)


@given(st.floats(-200.0, 100.0))
def test_db_round_trip(x):
    assert float(linear_to_db(db_to_linear(x))) == pytest.approx(x, abs=1e-10)


@pytest.mark.parametrize("kw", [dict(d1_m=0.0), dict(d2_m=-1.0), dict(frequency_hz=0.0)])
def test_invalid_input(kw):
    base = dict(ptx_dbm=0, gtx_dbi=0, grx_dbi=0, sigma_dbsm=15.6, frequency_hz=F0, d1_m=1.0, d2_m=1.0)
    base.update(kw)
    with pytest.raises(InvalidArgumentError):
        LinkBudgetInput(**base)


def test_free_space_invalid():
    with pytest.raises(InvalidArgumentError):
        free_space_path_gain(F0, 0.0)
    with pytest.raises(InvalidArgumentError):
        free_space_path_gain(-1.0, 1.0)


def test_link_csv(tmp_path):
    inp = LinkBudgetInput(0, 0, 0, 15.6, F0, 5.0, 5.0)
    path = tmp_path / "link.csv"
    write_link_csv(path, [(inp, bistatic_received_power(inp))])
    lines = path.read_text().splitlines()
    assert lines[0] == "d1_m,d2_m,frequency_hz,sigma_dbsm,path_gain_db,prx_dbm"
    assert lines[1].startswith("5.000000,5.000000,304000000000,15.600000,-105.456")
