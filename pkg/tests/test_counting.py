import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selberg_lab import counting as ct
from selberg_lab.errors import InputError
from selberg_lab.traceformula import Spectrum


def test_count_window_examples():
    assert ct.count_window(np.array([0.0]), 0, 1) == 1
    assert ct.count_window(np.array([0.0, 0.3, 0.3, 2.0]), 0.3, 0.3) == 2
    assert ct.count_window(np.array([0.0, 0.3, 2.0]), 0.5, 1.5) == 0


def test_upper_bound_examples():
    g = 7
    vol = 2 * math.pi * 12
    assert ct.upper_bound_envelope(g, 0, 0, 2.0) == pytest.approx(vol * 2 * math.sqrt(1 / math.log(g)), rel=1e-15)
    g = math.exp(100)
    vol = 2 * math.pi * (2 * g - 2)
    assert ct.upper_bound_envelope(g, 0, 1) == pytest.approx(vol * (1 + math.sqrt(2 / 100)), rel=1e-14)
    vals = [ct.upper_bound_envelope(50, 0.1, b) for b in np.linspace(0.1, 5, 20)]
    assert np.all(np.diff(vals) > 0)


def test_small_eigenvalue_envelope():
    g = 1e5
    lg = math.log(g)
    assert ct.small_eigenvalue_envelope(g, 0.25) == pytest.approx(ct.surface_volume(g) / lg**0.75, rel=1e-14)
    # o(g): eventually below the 2g - 2 cap
    assert ct.small_eigenvalue_envelope(1e12, 0.25) < 2 * 1e12 - 2
    bs = np.linspace(0, 0.25, 11)
    vals = [ct.small_eigenvalue_envelope(1e8, b) for b in bs]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(InputError):
        ct.small_eigenvalue_envelope(10, 0.3)


def test_equivalent_envelope_zero_width():
    g, b = 1e4, 2.0
    env = ct.equivalent_envelope(g, b, b)
    s = math.sqrt((b + 1) / math.log(g))
    assert env.upper_slack == pytest.approx(s * math.sqrt(math.log(2)), rel=1e-14)
    assert env.lower_slack == pytest.approx(-s, rel=1e-14)
    assert env.lower_slack <= 0 <= env.upper_slack
    assert env.c == 2.0**-15


def test_band_shrinks_with_genus():
    widths = [ct.equivalent_envelope(g, 0.5, 3.0) for g in (1e3, 1e6, 1e12)]
    w = [e.upper_slack - e.lower_slack for e in widths]
    assert w[0] > w[1] > w[2]


def test_weyl_regime_relative_slack_decreases():
    rel = [ct.equivalent_envelope(1e6, 0.0, b).upper_slack / ct.equivalent_envelope(1e6, 0.0, b).main for b in (10, 100, 1e3, 1e4)]
    assert np.all(np.diff(rel) < 0)


def test_small_genus_warning():
    env = ct.equivalent_envelope(2, 0.0, 1.0, g_min=10)
    assert env.warnings


def test_multiplicity_examples():
    g = 1e3
    b = ct.multiplicity_bounds(g, 0.0)
    assert b["sqrt"] == pytest.approx(g / math.sqrt(math.log(g)), rel=1e-14)
    g_star = ct.multiplicity_crossover(0.1)
    lg = math.log(g_star)
    # both bounds agree at the crossover
    small = g_star * math.exp(-ct.C_SMALL * 0.01 * lg) / lg**0.75
    first = g_star * math.sqrt(1.15 / lg)
    assert small == pytest.approx(first, rel=1e-10)
    big = 10 * g_star
    bb = ct.multiplicity_bounds(big, 0.15, eps=0.1)
    assert bb["small"] < bb["sqrt"]


def test_multiplicity_vs_besson_cap():
    for g in (10, 100, 1e4):
        for j in (0, 5, int(g)):
            assert ct.multiplicity_envelope(g, 0.2) <= ct.besson_cap(g, j)


def test_jth_envelope_examples():
    lo, hi = ct.jth_envelope(10, 0)
    assert lo <= 0 <= hi
    A, g = 3, 100
    lo, hi = ct.jth_envelope(g, A * g)
    assert 0.5 * (lo + hi) <= A + 1 + math.sqrt(A * math.log(2 + A))
    lo, hi = ct.jth_envelope(10, 10**7)
    center, slack = 0.5 * (lo + hi), 0.5 * (hi - lo)
    assert center / slack > 100
    with pytest.raises(InputError):
        ct.jth_envelope(1, 3)


def test_checker_weyl_spectrum_passes():
    g = 50
    ev = np.arange(0, 2000) / g
    chk = ct.check_spectrum(Spectrum(ev), g)
    assert not chk.flags["jth"]


def test_checker_buser_flagged():
    g = 10**6
    ev = np.concatenate([[0.0], np.full(2 * g - 2, 0.01)])
    chk = ct.check_spectrum(Spectrum(ev), g, grid=ct.WindowGrid(b_max=0.2))
    assert chk.flags["small_eigenvalue"]
    assert not chk.passed


def test_checker_trivial_spectrum():
    chk = ct.check_spectrum(Spectrum(np.array([0.0])), 1e4)
    assert not chk.flags["upper_bound"]
    assert not chk.flags["jth"]


def test_windows_csv(tmp_path):
    chk = ct.check_spectrum(Spectrum(np.arange(0, 50) / 10.0), 10)
    p = tmp_path / "w.csv"
    ct.write_windows_csv(chk, p)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("a,b,count")
    assert len(lines) == len(chk.windows) + 1


@settings(max_examples=40, deadline=None)
@given(st.floats(2.0, 1e9), st.floats(0, 3), st.floats(0, 3))
def test_envelope_band_sign(g, a, w):
    env = ct.equivalent_envelope(g, a, a + w)
    assert env.lower_slack <= 0 <= env.upper_slack
