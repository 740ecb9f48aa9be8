import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ranres.layout import CellGeometry, Site, UserPoint, build_hex_layout, distance_matrices
from ranres.radio import (CellConfig, RadioParams, antenna_gain, arrival_angles, breakpoint_distance,
                          link_geometry, path_loss_umi_los, path_loss_umi_nlos, received_power,
                          wrap_degrees)

P = RadioParams()


def test_table_defaults():
    assert (P.carrier_frequency, P.g_max, P.theta_3db, P.phi_3db, P.sll_v, P.sll_h, P.g_r) == \
        (28.0, 8.0, 65.0, 65.0, 30.0, 30.0, 0.0)


def test_breakpoint_examples():
    assert breakpoint_distance(P, 10.0, 1.5) == pytest.approx(1680.0, abs=1e-9)
    p = RadioParams(carrier_frequency=0.3)
    assert breakpoint_distance(p, 2.0, 2.0) == pytest.approx(4.0, abs=1e-12)
    p2 = RadioParams(carrier_frequency=56.0)
    assert breakpoint_distance(p2, 10.0, 1.5) == pytest.approx(2 * 1680.0, abs=1e-9)


def test_breakpoint_height_floor():
    # UT at or below the environment height is floored at 1 cm effective height
    assert breakpoint_distance(P, 10.0, 1.0) == pytest.approx(4 * 9 * 0.01 * 28e9 / 3e8)


def test_path_loss_short_range():
    pl = path_loss_umi_los(99.0, 100.0, 10.0, 1.5, P)
    assert pl == pytest.approx(32.4 + 42.0 + 20 * math.log10(28.0), abs=1e-12)
    assert pl == pytest.approx(103.343, abs=1e-3)


def test_path_loss_beyond_breakpoint():
    d_bp = 1680.0
    expect = 32.4 + 40 * math.log10(2000) + 20 * math.log10(28) - 9.5 * math.log10(d_bp ** 2 + 8.5 ** 2)
    pl = path_loss_umi_los(2000.0, 2000.0, 10.0, 1.5, P)
    assert pl == pytest.approx(expect, abs=1e-12)
    assert pl == pytest.approx(132.10, abs=0.01)


def test_path_loss_unit_distance():
    assert path_loss_umi_los(1.0, 1.0, 10.0, 1.5, RadioParams(carrier_frequency=1.0)) == pytest.approx(32.4)


def test_path_loss_continuity_at_breakpoint():
    d_bp = 1680.0
    d3 = math.hypot(d_bp, 8.5)
    below = path_loss_umi_los(d_bp, d3, 10.0, 1.5, P)
    above = path_loss_umi_los(np.nextafter(d_bp, np.inf), d3, 10.0, 1.5, P)
    assert abs(below - above) < 1e-9


def test_path_loss_rejects_non_positive():
    with pytest.raises(ValueError):
        path_loss_umi_los(0.0, 0.0, 10.0, 1.5, P)


@given(st.floats(1.0, 4999.0), st.floats(0.001, 100.0))
def test_path_loss_increasing(d, step):
    # same branch on both sides: keep both points on one side of the breakpoint
    a, b = d, d + step
    if (a <= 1680.0) != (b <= 1680.0):
        return
    pa = path_loss_umi_los(a, math.hypot(a, 8.5), 10.0, 1.5, P)
    pb = path_loss_umi_los(b, math.hypot(b, 8.5), 10.0, 1.5, P)
    assert pb > pa


def test_nlos_examples():
    los = path_loss_umi_los(99.0, 100.0, 10.0, 1.5, P)
    nl = path_loss_umi_nlos(100.0, 1.5, los, P)
    assert nl == pytest.approx(35.3 * 2 + 22.4 + 21.3 * math.log10(28), abs=1e-12)
    # 21.3 * log10(28) = 30.8245, so the total is 123.824 dB
    assert nl == pytest.approx(123.824, abs=1e-3)
    assert path_loss_umi_nlos(100.0, 1.5, 500.0, P) == 500.0
    # the height correction vanishes at 1.5 m and lowers the loss above it
    assert path_loss_umi_nlos(100.0, 11.5, 0.0, P) == pytest.approx(nl - 3.0)


def test_arrival_angles_examples():
    site = Site(0, (0.0, 0.0), 10.0)
    theta, phi = arrival_angles(UserPoint(0, (100.0, 0.0), 1.5), site, CellGeometry(0, 0, 0.0))
    assert theta == pytest.approx(math.degrees(math.atan(0.085)), abs=1e-12)
    assert theta == pytest.approx(4.859, abs=1e-3)
    assert phi == 0.0
    b = math.radians(150.0)
    u = UserPoint(0, (100 * math.cos(b), 100 * math.sin(b)), 1.5)
    _, phi = arrival_angles(u, site, CellGeometry(2, 0, -120.0))
    assert phi == pytest.approx(-90.0, abs=1e-9)
    theta, _ = arrival_angles(UserPoint(0, (0.0, 0.0), 1.5), site, CellGeometry(0, 0, 0.0))
    assert theta == 90.0


@given(st.floats(-1e4, 1e4))
def test_wrap_range(a):
    w = wrap_degrees(a)
    assert -180.0 < w <= 180.0
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(a)), abs_tol=1e-6)


def test_gain_examples():
    assert antenna_gain(7.0, 0.0, 7.0, P) == 8.0
    assert antenna_gain(7.0 + 65.0, 0.0, 7.0, P) == 8.0 - 12.0
    assert antenna_gain(7.0, 65.0, 7.0, P) == 8.0 - 12.0
    assert antenna_gain(170.0, 170.0, 0.0, P) == 8.0 - 60.0


angle = st.floats(-180.0, 180.0, allow_nan=False)


@given(angle, angle, st.floats(0.0, 14.0))
def test_gain_bounded_and_symmetric(theta, phi, tilt):
    g = antenna_gain(theta, phi, tilt, P)
    assert g <= P.g_max
    if g == P.g_max:
        assert abs(theta - tilt) < 1e-6 and abs(phi) < 1e-6
    x = theta - tilt
    assert antenna_gain(tilt + x, phi, tilt, P) == pytest.approx(antenna_gain(tilt - x, phi, tilt, P), abs=1e-12)
    assert antenna_gain(theta, phi, tilt, P) == pytest.approx(antenna_gain(theta, -phi, tilt, P), abs=1e-12)


def test_received_power_examples():
    pl = 32.4 + 42.0 + 20 * math.log10(28.0)
    assert received_power(CellConfig(0, tx_power=30.0), 8.0, pl, P) == pytest.approx(30 + 8 + 0 - pl, abs=1e-9)
    assert received_power(CellConfig(0, tx_power=30.0), 8.0, 103.343, P) == pytest.approx(-65.343, abs=1e-9)
    off = CellConfig(0, tx_power=30.0, operational=False)
    assert received_power(off, 8.0, 103.343, P) == pytest.approx(-173.343, abs=1e-9)
    assert received_power(CellConfig(0, tx_power=0.0), 8.0, 0.0, P) == 8.0


@given(st.floats(0.0, 39.0), st.floats(0.0, 1.0), st.floats(-60, 8), st.floats(30, 200))
def test_received_power_unit_slope(p, dp, g, pl):
    a = received_power(CellConfig(0, tx_power=p), g, pl, P)
    b = received_power(CellConfig(0, tx_power=p + dp), g, pl, P)
    assert b - a == pytest.approx(dp, abs=1e-9)


def test_cell_config_bounds():
    for kw in (dict(etilt=-1), dict(etilt=15), dict(tx_power=-0.1), dict(tx_power=41)):
        with pytest.raises(ValueError):
            CellConfig(0, **kw)
    assert CellConfig(0, etilt=5, mtilt=2).tilt == 7


def test_link_geometry_matches_scalar_chain():
    lay = build_hex_layout(1, 300.0, 2, 25)
    geom = link_geometry(lay, P)
    d2, d3 = distance_matrices(lay)
    for i in (0, 9, 24):
        for j in (0, 4, 20):
            s = lay.cell_site[j]
            assert geom.path_loss[i, j] == pytest.approx(path_loss_umi_los(d2[i, s], d3[i, s], 10.0, 1.5, P))
            th, ph = arrival_angles(lay.users[i], lay.sites[s], lay.cells[j])
            assert geom.theta[i, j] == pytest.approx(th) and geom.phi[i, j] == pytest.approx(ph)
            assert geom.in_range[i, j] == (10.0 <= d2[i, s] <= 5000.0)
