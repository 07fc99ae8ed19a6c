import json
import math

import numpy as np
import pytest

from selberg_lab import bsdiag as bs
from selberg_lab import traceformula as tfm
from selberg_lab import transforms as tr
from selberg_lab.errors import InputError, NoSpectrumError, SpectralTailError, TruncationError


def test_spectrum_validation():
    with pytest.raises(InputError):
        tfm.Spectrum(np.array([]))
    with pytest.raises(InputError):
        tfm.Spectrum(np.array([0.0, 2.0, 1.0]))
    with pytest.raises(InputError):
        tfm.Spectrum(np.array([0.1, 2.0]))
    s = tfm.Spectrum(np.array([0.0, 1.0, 1.0]))
    assert s.lambda_cut == 1.0


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_spectrum_round_trip(tmp_path, suffix):
    s = tfm.Spectrum(np.array([0.0, 0.3, 3.8388872588]), surface="bolza", lambda_cut=4.0, source="test")
    p = tmp_path / ("s" + suffix)
    tfm.save_spectrum(s, p)
    r = tfm.load_spectrum(p)
    assert np.array_equal(r.eigenvalues, s.eigenvalues)
    assert r.lambda_cut == 4.0 and r.surface == "bolza"


def test_spectrum_plain_list(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps([0, 1.5, 2.5]))
    assert len(tfm.load_spectrum(p).eigenvalues) == 3


def test_spectral_side_examples():
    tf = tr.TestFunction.B(0.0, 1.0, 10.0)
    assert tfm.spectral_side(tfm.Spectrum(np.array([0.0])), tf) == pytest.approx(0.5 * math.erf(10.0), abs=1e-15)
    empty = tr.TestFunction.B(0.4, 0.4, 10.0)
    assert tfm.spectral_side(np.array([0.0, 0.5, 2.0]), empty) == 0.0
    with pytest.raises(NoSpectrumError):
        tfm.spectral_side(None, tf)


def test_small_eigenvalue_cap_bolza():
    tf = tr.TestFunction.H(1.25, 4.25, 1.0)
    ev = np.array([0.0, 0.05, 0.2])  # at most 2g - 2 nonzero small ones plus lambda_0
    part = np.sum(np.abs(tfm.spectral_value(ev[1:], tf)))
    assert part <= tfm.small_eigenvalue_cap(2, tf)


def test_main_term_examples():
    assert tfm.main_term((0.0, 0.25)) == 0.0
    assert tfm.main_term((2.0, 2.0)) == 0.0
    b = 1e4
    assert tfm.main_term((0.0, b)) / (b / (4 * math.pi)) == pytest.approx(1.0, abs=0.01)


def test_main_term_direct_quadrature():
    from scipy import integrate

    a, b = 0.5, 5.0
    ref, _ = integrate.quad(lambda lam: math.tanh(math.pi * math.sqrt(lam - 0.25)), a, b, epsabs=1e-14)
    assert tfm.main_term((a, b)) == pytest.approx(ref / (4 * math.pi), abs=1e-12)


def test_split_window():
    assert [f.family for f in tfm.split_window(0.0, 0.6, 1.0)] == ["B"]
    assert [f.family for f in tfm.split_window(0.5, 5.0, 1.0)] == ["H"]
    parts = tfm.split_window(0.2, 5.0, 1.0)
    assert [f.family for f in parts] == ["B", "H"]
    assert parts[0].window.b == parts[1].window.a == 0.75
    with pytest.raises(InputError):
        tfm.split_window(0.2, 5.0, 1.0, family="Z")


def test_trace_residual_needs_spectrum(bolza):
    tf = tr.TestFunction.H(0.5, 5.0, 0.5)
    with pytest.raises(NoSpectrumError):
        tfm.trace_residual(tfm.SurfaceModel(bolza), tf)


def test_spectral_tail_uncertified(bolza):
    tf = tr.TestFunction.H(0.5, 5.0, 0.5)
    spec = tfm.Spectrum(np.array([0.0, 3.0]), lambda_cut=4.0)
    geo = tfm.geometric_term(bolza, tf, n_samples=500, seed=1)
    with pytest.raises(SpectralTailError):
        tfm.trace_residual(tfm.SurfaceModel(bolza, spec), tf, geometric=geo)


def test_family_B_truncation_not_certified(bolza):
    tf = tr.TestFunction.B(0.3, 0.8, 1.0)
    with pytest.raises(TruncationError):
        tfm.geometric_term(bolza, tf, n_samples=200, seed=1)


def test_synthetic_spectrum_hits_target():
    tf = tr.TestFunction.H(0.5, 5.0, 0.5)
    vol = 4 * math.pi
    target = 3.21
    s = tfm.synthetic_spectrum(tf, target, vol)
    assert tfm.spectral_side(s, tf) == pytest.approx(target, abs=1e-12)
    assert tfm.spectral_tail_bound(s, tf, vol) < tfm.TAIL_REL


def test_geometric_term_fields(bolza):
    tf = tr.TestFunction.H(0.5, 5.0, 0.5)
    geo = tfm.geometric_term(bolza, tf, L=1.0, n_samples=1000, seed=2)
    assert math.isfinite(geo.value) and geo.sigma > 0
    assert geo.minus == 0.0 and geo.thin_fraction == 0.0
    assert geo.value == pytest.approx(geo.plus + geo.minus, abs=1e-15)
    assert geo.tail_bound <= 1e-9 * abs(geo.value)
    assert geo.r == pytest.approx(bolza.systole, abs=1e-9)


@pytest.mark.slow
def test_kernel_sum_H_envelope(bolza):
    # fitted constant for |R_K| <= C t^3 sqrt(b)/r^4 [e^-L + thin e^L], L = 8 t^2
    consts = []
    for t, n in ((0.5, 2000), (1.0, 600)):
        tf = tr.TestFunction.H(0.5, 5.0, t)
        L = 8 * t * t
        geo = tfm.geometric_term(bolza, tf, L=min(L, bolza.r_max - 1.5), n_samples=n, seed=4)
        thin = bs.thin_part_volume(bolza, min(L, 6.0), n, seed=4).relative
        shape = tr.kernel_sum_shape(tf, geo.r, L, thin)
        consts.append(abs(geo.value) / shape)
    assert all(math.isfinite(c) and c > 0 for c in consts)
    C = max(consts)
    assert min(consts) <= C


@pytest.mark.skipif(
    "SELBERG_LAB_BOLZA_SPECTRUM" not in __import__("os").environ, reason="no external Bolza spectrum file"
)
def test_published_bolza_spectrum(bolza):
    import os

    spec = tfm.load_spectrum(os.environ["SELBERG_LAB_BOLZA_SPECTRUM"])
    tf = tr.TestFunction.H(0.5, 5.0, 0.5)
    rep = tfm.trace_residual(tfm.SurfaceModel(bolza, spec), tf, n_samples=4000, seed=1)
    assert abs(rep.residual) <= 3 * rep.residual_sigma
