import json
import math

import numpy as np
import pytest

from selberg_lab import fuchsian as fu
from selberg_lab import hypgeom as hg
from selberg_lab.errors import DiscretenessError, InputError, RadiusGuardError

SYSTOLE = 2 * math.acosh(1 + math.sqrt(2))


def same_set(a, b):
    if len(a) != len(b):
        return False
    s = fu.ElementSet(a)
    return bool(np.all(s.lookup(b) >= 0))


def test_generator_traces():
    for g in fu.bolza_generators():
        assert abs(g.trace) == pytest.approx(2 * (1 + math.sqrt(2)), abs=1e-12)


def test_relator_fixes_base_point():
    w = fu.word_element(fu.bolza_generators(), fu.BOLZA_RELATOR)
    p = hg.apply(w, 1j)
    assert abs(p.z - 1j) < 1e-8
    assert w.is_close(hg.MobiusElement.identity(), 1e-10)


def test_bolza_metadata(bolza):
    assert bolza.cocompact
    assert bolza.metadata["polygon_area"] == pytest.approx(4 * math.pi, rel=1e-9)
    assert bolza.metadata["n_sides"] == 8
    assert bolza.volume == 4 * math.pi


def test_identity_generator_rejected():
    with pytest.raises(DiscretenessError):
        fu.from_generators([[[1, 0], [0, 1]]], 2)


def test_cyclic_group_flagged():
    H = fu.from_generators([[[2, 0], [0, 0.5]]], None)
    assert not H.cocompact
    assert "not cocompact-verified" in H.metadata["note"]
    assert len(H.enumerate_ball(1j, 3.0)) == 4


def test_bad_genus():
    with pytest.raises(InputError):
        fu.from_generators(fu.bolza_generators(), 1)


def test_enumerate_ball_examples(bolza):
    assert len(bolza.enumerate_ball(1j, 1.0)) == 0
    assert len(bolza.enumerate_ball(1j, 3.06)) == 8
    assert bolza.orbit_count(1j, 0) == 1
    assert bolza.orbit_count(1j, 3.06) == 9


def test_ball_is_monotone_and_within_radius(bolza):
    z = 0.2 + 0.9j
    small, d_small = bolza.ball_rows(z, 6.0)
    big, d_big = bolza.ball_rows(z, 7.0)
    assert np.all(d_small <= 6.0 + 1e-9)
    assert np.allclose(hg.displacement_arrays(big, z), d_big, atol=1e-9)
    assert np.all(fu.ElementSet(big).lookup(small) >= 0)
    assert len(fu.unique_rows(big)) == len(big)


def test_radius_guard(bolza):
    with pytest.raises(RadiusGuardError):
        bolza.enumerate_ball(1j, bolza.r_max + 1)


def test_injectivity_radius(bolza, rng):
    assert bolza.injectivity_radius_at(1j) == pytest.approx(SYSTOLE / 2, abs=1e-9)
    z = 0.37 + 0.81j
    base = bolza.injectivity_radius_at(z)
    for g in fu.bolza_generators():
        w = hg.apply(g, z).z
        assert bolza.injectivity_radius_at(w) == pytest.approx(base, abs=1e-8)


def test_injectivity_lower_bound(bolza, bolza_sample):
    from selberg_lab.orbitsum import min_displacements

    inj = 0.5 * min_displacements(bolza, bolza_sample.points[:200])
    assert np.all(inj >= bolza.systole / 2 - 1e-9)


def test_length_spectrum(bolza):
    spec = bolza.primitive_length_spectrum(3.5)
    assert len(spec.entries) == 1
    ell, m = spec.entries[0]
    assert ell == pytest.approx(SYSTOLE, abs=1e-9)
    assert m == 12
    for w in spec.witnesses:
        assert hg.translation_length(w) == pytest.approx(ell, abs=1e-9)
    assert bolza.primitive_length_spectrum(3.0).entries == []


def _axis_oracle_multiplicity(G, ell, c=0.13 + 0.91j, n_axis=4000):
    """Sum over ball elements of length ell of |axis in D_c| / (2 ell).

    A generic centre keeps axes off the polygon sides."""
    poly = G.local_polygon(c)
    mats, _ = G.ball_rows(c, 2 * poly.covering_radius + ell)
    tr = np.abs(mats[:, 0] + mats[:, 3])
    lens = 2 * np.arccosh(np.maximum(tr / 2, 1))
    sel = mats[np.abs(lens - ell) < 1e-7]
    total = 0.0
    for row in sel:
        g = hg.MobiusElement(*row)
        lo, hi = hg.fixed_points(g)
        # arclength parameter s along the axis
        s = np.linspace(-8, 8, n_axis)
        if math.isinf(lo) or math.isinf(hi):
            x = hi if math.isinf(lo) else lo
            z = x + 1j * np.exp(s)
        else:
            c, r = (lo + hi) / 2, abs(hi - lo) / 2
            th = 2 * np.arctan(np.exp(s))
            z = c - r * np.cos(th) + 1j * r * np.sin(th)
        inside = poly.contains(z)
        total += np.count_nonzero(inside) * (s[1] - s[0])
    return total / (2 * ell)


def test_length_multiplicity_oracle(bolza):
    m = _axis_oracle_multiplicity(bolza, SYSTOLE)
    assert m == pytest.approx(12, abs=0.05)


def test_dirichlet_sample_contract(bolza):
    a = bolza.dirichlet_sample(500, seed=3)
    b = bolza.dirichlet_sample(500, seed=3)
    assert np.array_equal(a.points, b.points)
    assert np.all(bolza.base_polygon.contains(a.points))
    with pytest.raises(InputError):
        bolza.dirichlet_sample(0, seed=1)


def test_sample_threads_identical(bolza):
    a = bolza.dirichlet_sample(3000, seed=5, threads=1)
    b = bolza.dirichlet_sample(3000, seed=5, threads=3)
    assert np.array_equal(a.points, b.points)


def test_reduce_to_domain(bolza):
    z = 0.37 + 0.81j
    g = fu.word_element(fu.bolza_generators(), "abC")
    w = hg.apply(g, z).z
    h, back = bolza.reduce_to_domain(w)
    assert abs(back - z) < 1e-9
    assert abs(hg.apply(hg.MobiusElement(*h), back).z - w) < 1e-9 * (1 + abs(w))


def test_generator_file_round_trip(tmp_path, bolza):
    p = tmp_path / "g.json"
    fu.save_generators(bolza, p)
    data = json.loads(p.read_text())
    assert data["genus"] == 2
    H = fu.load_generators(p)
    assert H.systole == pytest.approx(bolza.systole, abs=1e-12)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"generators": data["generators"]}))
    with pytest.raises(InputError):
        fu.load_generators(bad)


def test_load_surface_missing():
    with pytest.raises(InputError):
        fu.load_surface("/nonexistent/file.json")
