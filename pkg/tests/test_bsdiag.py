import math

import numpy as np
import pytest

from selberg_lab import bsdiag as bs
from selberg_lab.errors import InputError

N = 2000


def test_certified_zero(bolza):
    est = bs.thin_part_volume(bolza, 1.0, N, seed=1)
    assert est.certified_zero and est.volume == 0.0 and est.sigma == 0.0


def test_positive_at_1_6(bolza):
    est = bs.thin_part_volume(bolza, 1.6, N, seed=1)
    assert est.volume > 0
    assert est.volume <= bolza.volume + 3 * est.sigma


def test_whole_surface_thin_for_large_L(bolza):
    est = bs.thin_part_volume(bolza, 3.0, N, seed=1)
    assert abs(est.volume - bolza.volume) <= 3 * est.sigma + 1e-12


def test_L_guard(bolza):
    with pytest.raises(InputError):
        bs.thin_part_volume(bolza, 0.0, N, seed=1)
    with pytest.raises(InputError):
        bs.thin_part_volume(bolza, 10.0, N, seed=1)


def test_axis_points_are_thin(bolza):
    # points on a systolic axis have injectivity radius systole / 2 < 1.6
    w = bolza.primitive_length_spectrum(3.5).witnesses[0]
    from selberg_lab import hypgeom as hg

    lo, hi = hg.fixed_points(w)
    z = 0.5 * (lo + hi) + 0.5j * abs(hi - lo)
    assert bolza.injectivity_radius_at(z) == pytest.approx(bolza.systole / 2, abs=1e-9)


def test_bs_bound_examples(bolza):
    assert bs.bs_volume_bound(bolza, 1.0)["bound"] == 0.0
    b = bs.bs_volume_bound(bolza, 1.6)
    assert b["count"] == 12
    assert b["bound"] == pytest.approx(2 * math.exp(1.6) * 12)
    vals = [bs.bs_volume_bound(bolza, L)["bound"] for L in (1.0, 1.4, 1.6, 1.8, 2.0)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))
    assert "primitive" in b["note"]


def test_curve_monotone(bolza):
    curve = bs.thin_part_curve(bolza, np.linspace(1.5, 1.6, 11), N, seed=2)
    v = [e.volume for e in curve]
    assert all(x <= y for x, y in zip(v, v[1:]))


def test_assumption_checks(bolza):
    ok = bs.corollary_assumptions_check(bolza, g_proxy=2, n_samples=N, seed=1)
    assert ok.L == pytest.approx(math.log(2) / 6)
    assert ok.thin_fraction == 0.0
    assert ok.verdicts == {"injrad": "pass", "thin_part": "pass"}
    assert ok.label == "assumption check"
    big = bs.corollary_assumptions_check(bolza, g_proxy=1e6, n_samples=N, seed=1)
    assert big.injrad_threshold == pytest.approx(10 ** (-0.25) * math.log(1e6) ** (9 / 16), rel=1e-14)
    assert big.verdicts["injrad"] == "fail"
    assert big.injrad_margin < 0


def test_collar_small_batch(bolza):
    smp = bs.injectivity_sample(bolza, N, seed=3)
    chk = bs.collar_check(bolza, smp.points[:200], 1.55, injrad=smp.injrad[:200])
    assert chk.thin_implies_collar and chk.inner_implies_thin
    s = chk.summary()
    assert s["n"] == 200
