"""Assembly of the trace identity for a surface and a test function.

    (1/vol) sum_j h(r_j) = main_term + R_I + R_K

with the main term and R_I computed by quadrature and R_K by Monte-Carlo
integration of the orbit sum over a Dirichlet domain.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from . import fuchsian as fu
from . import transforms as tr
from .errors import InputError, NoSpectrumError, SpectralTailError, TruncationError
from .orbitsum import orbit_sums, plan_cells

TAIL_REL = 1e-9
SUMMAND_FLOOR = 1e-14


# ------------------------------------------------------------------ spectra


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    surface: str = "unknown"
    lambda_cut: float | None = None
    source: str = ""

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float).ravel()
        if len(ev) == 0:
            raise InputError("spectrum is empty")
        if np.any(~np.isfinite(ev)) or np.any(ev < 0):
            raise InputError("eigenvalues must be finite and nonnegative")
        if np.any(np.diff(ev) < 0):
            raise InputError("eigenvalues must be sorted")
        if abs(ev[0]) > 1e-12:
            raise InputError("the first eigenvalue must be 0")
        self.eigenvalues = ev
        if self.lambda_cut is None:
            self.lambda_cut = float(ev[-1])

    def to_dict(self):
        return {
            "surface": self.surface,
            "lambda_cut": self.lambda_cut,
            "source": self.source,
            "eigenvalues": [float(x) for x in self.eigenvalues],
        }


def load_spectrum(path) -> Spectrum:
    path = str(path)
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json"):
        data = json.loads(text)
        if isinstance(data, list):
            return Spectrum(np.array(data, dtype=float), source=path)
        return Spectrum(
            np.array(data["eigenvalues"], dtype=float),
            surface=str(data.get("surface", "unknown")),
            lambda_cut=data.get("lambda_cut"),
            source=str(data.get("source", path)),
        )
    meta = {}
    vals = []
    for row in csv.reader(io.StringIO(text)):
        if not row:
            continue
        if row[0].startswith("#"):
            line = ",".join(row)[1:]
            if ":" in line:
                k, v = line.split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        for cell in row:
            cell = cell.strip()
            if cell:
                try:
                    vals.append(float(cell))
                except ValueError:
                    # header line
                    pass
    lc = meta.get("lambda_cut")
    return Spectrum(
        np.array(vals),
        surface=meta.get("surface", "unknown"),
        lambda_cut=float(lc) if lc else None,
        source=meta.get("source", path),
    )


def save_spectrum(spec: Spectrum, path):
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump(spec.to_dict(), fh, indent=1)
        return
    with open(path, "w") as fh:
        fh.write(f"# surface: {spec.surface}\n# lambda_cut: {float(spec.lambda_cut)!r}\n# source: {spec.source}\n")
        for x in spec.eigenvalues:
            fh.write(f"{float(x)!r}\n")


@dataclass
class SurfaceModel:
    group: fu.FuchsianGroup
    spectrum: Spectrum | None = None

    @property
    def genus(self) -> int:
        return self.group.genus

    @property
    def volume(self) -> float:
        return 2.0 * math.pi * (2 * self.genus - 2)


# ------------------------------------------------------------ simple terms


def spectral_value(lam, tf: tr.TestFunction):
    """h(r) at lambda = 1/4 + r^2 (r imaginary below 1/4)."""
    lam = np.asarray(lam, dtype=float)
    if tf.family == "B":
        return tr.f_t(lam, tf)
    r = np.sqrt((lam - 0.25).astype(complex))
    # principal root gives r = i y for lam < 1/4
    return np.real(tr.h(r, tf))


def spectral_side(spectrum, tf: tr.TestFunction) -> float:
    if spectrum is None:
        raise NoSpectrumError("no spectrum")
    ev = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum, dtype=float)
    vals = spectral_value(ev, tf)
    # stop once past the window and the summand falls below the floor
    top = tf.window.b
    past = (ev > top) & (np.abs(vals) < SUMMAND_FLOOR)
    if np.any(past):
        vals = vals[: int(np.argmax(past))]
    return math.fsum(vals.tolist())


def small_eigenvalue_cap(genus: int, tf: tr.TestFunction) -> float:
    """(2g - 2) * 2 * exp(t^2 (1/4 - alpha^2)) / (2 sqrt(pi) alpha t)."""
    t, al = tf.t, tf.alpha
    return (2 * genus - 2) * 2 * math.exp(t * t * (0.25 - al * al)) / (2 * math.sqrt(math.pi) * al * t)


def main_term(window) -> float:
    """(1/4pi) int_{max(a,1/4)}^{max(b,1/4)} tanh(pi sqrt(lam - 1/4)) dlam."""
    if not isinstance(window, tr.SpectralWindow):
        window = tr.SpectralWindow(*window)
    al, be = window.alpha, window.beta
    if be <= al:
        return 0.0
    # substitute lam = 1/4 + r^2: int 2r tanh(pi r) dr = r^2 - int 4r/(e^{2 pi r}+1)
    corr, _ = integrate.quad(
        lambda r: 4.0 * r / (math.exp(min(2 * math.pi * r, 700.0)) + 1.0),
        al,
        min(be, al + 50.0),
        epsabs=1e-15,
        epsrel=1e-13,
        limit=200,
    )
    return ((be - al) * (be + al) - corr) / (4.0 * math.pi)


# ------------------------------------------------------------ geometric term


@dataclass
class GeometricTerm:
    value: float
    sigma: float
    plus: float
    plus_sigma: float
    minus: float
    minus_sigma: float
    L: float
    R_trunc: float
    tail_bound: float
    C_K: float
    r: float
    n_samples: int
    seed: int
    thin_fraction: float
    min_injectivity: float
    kernel_interp_error: float
    mean_terms: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


def _counting_tail(R, C_K, tf, r, j_max=400):
    j0 = int(math.floor(R))
    total = 0.0
    for j in range(j0, j0 + j_max):
        term = fu.counting_bound(j + 1, r) * C_K * float(tr.kernel_shape(j, tf, r))
        total += term
        if j > j0 + 5 and term < 1e-18 * max(total, 1e-300):
            return total
    return math.inf


def truncation_radius(target, C_K, tf, r, R_max, step=0.25):
    """Smallest R on a grid with certified tail below ``target``."""
    R = max(r, 1.0)
    while R <= R_max + 1e-12:
        tb = _counting_tail(R, C_K, tf, r)
        if tb <= target:
            return R, tb
        R += step
    tb = _counting_tail(R_max, C_K, tf, r)
    raise TruncationError(
        f"truncation not certifiable within R_max = {R_max}: tail bound {tb:.3g} vs target {target:.3g}"
    )


def geometric_term(
    surface,
    tf: tr.TestFunction,
    L: float = 1.0,
    n_samples: int = 4000,
    seed: int = 0,
    threads: int = 1,
    sample=None,
    profile: tr.KernelProfile | None = None,
    rel_tail: float = TAIL_REL,
) -> GeometricTerm:
    G = surface.group if isinstance(surface, SurfaceModel) else surface
    if L > G.r_max - 1.0:
        raise InputError("L too close to R_max")
    if profile is None:
        profile = tr.KernelProfile(tf)
    if tf.family == "B":
        profile = replace(profile, method="table")
    if sample is None:
        sample = G.dirichlet_sample(n_samples, seed, threads=threads)
    pts = sample.points
    spec = G.primitive_length_spectrum(2 * G.covering_radius + 0.5)
    r = spec.systole
    rho_lo = r * (1 - 1e-9)
    R_max = G.r_max
    # fitted kernel constant over [r, R_max]
    probe = np.linspace(rho_lo, R_max, 200)
    kp = tr.kernel_values(probe, profile)
    C_K = tr.fit_constant(kp.K, tr.kernel_shape(probe, tf, r)) * 1.2
    guess = 0.05 * float(np.max(np.abs(kp.K[:5])))
    R, tail = truncation_radius(rel_tail * max(guess, 1e-300), C_K, tf, r, R_max)
    plan = plan_cells(pts)
    notes = []
    for attempt in range(3):
        table = tr.KernelTable(profile, rho_lo, R + 1e-9)
        sums = orbit_sums(G, pts, table, R, threads=threads, plan=plan)
        F = sums.values
        est = math.fsum(F.tolist()) / len(F)
        need = rel_tail * abs(est)
        if tail <= need:
            break
        R2, tail2 = truncation_radius(need, C_K, tf, r, R_max)
        notes.append(f"radius raised from {R} to {R2}")
        R, tail = R2, tail2
    else:
        raise TruncationError("truncation radius did not stabilise")
    inj = 0.5 * sums.min_disp
    thin = inj < L
    n = len(F)

    def mean_sd(x):
        m = math.fsum(x.tolist()) / n
        var = math.fsum(((x - m) ** 2).tolist()) / max(n - 1, 1)
        return m, math.sqrt(var / n)

    val, sig = mean_sd(F)
    plus, psig = mean_sd(np.where(thin, 0.0, F))
    minus, msig = mean_sd(np.where(thin, F, 0.0))
    return GeometricTerm(
        value=val,
        sigma=sig,
        plus=plus,
        plus_sigma=psig,
        minus=minus,
        minus_sigma=msig,
        L=float(L),
        R_trunc=float(R),
        tail_bound=float(tail),
        C_K=float(C_K),
        r=float(r),
        n_samples=int(n),
        seed=int(sample.seed),
        thin_fraction=float(np.mean(thin)),
        min_injectivity=float(np.min(inj)),
        kernel_interp_error=float(table.interp_error),
        mean_terms=float(np.mean(sums.n_terms)),
        notes=notes,
    )


# ------------------------------------------------------------------ reports


@dataclass
class TraceReport:
    test_function: dict
    surface: str
    volume: float
    main_term: float
    integral_remainder: dict
    geometric: dict
    spectral_sum: float | None = None
    spectral_normalized: float | None = None
    residual: float | None = None
    residual_sigma: float | None = None
    spectral_tail_bound: float | None = None
    small_eigenvalue_cap: float | None = None

    @property
    def rhs(self) -> float:
        return self.main_term + self.integral_remainder["value"] + self.geometric["value"]

    def to_dict(self):
        return dict(self.__dict__)


def spectral_tail_bound(spectrum: Spectrum, tf: tr.TestFunction, volume: float) -> float:
    """Bound on sum_{lambda_j > lambda_cut} h / vol from a 2x Weyl density ceiling."""
    lc = float(spectrum.lambda_cut)
    if lc <= tf.window.b:
        return math.inf
    per_unit = 2.0 * volume / (4.0 * math.pi) + 1.0
    total = 0.0
    for k in range(0, 100000):
        lam = lc + k
        v = abs(float(spectral_value(np.array([lam]), tf)[0]))
        total += per_unit * v
        if v < 1e-300 or (k > 3 and per_unit * v < 1e-20 * max(total, 1e-300)):
            break
    return total / volume


def trace_residual(
    surface: SurfaceModel,
    tf: tr.TestFunction,
    L: float = 1.0,
    n_samples: int = 4000,
    seed: int = 0,
    threads: int = 1,
    geometric: GeometricTerm | None = None,
    require_spectrum: bool = True,
) -> TraceReport:
    spec = surface.spectrum
    if spec is None and require_spectrum:
        raise NoSpectrumError("no spectrum")
    vol = surface.volume
    mt = main_term(tf.window)
    ri = tr.integral_remainder(tf)
    if geometric is None:
        geometric = geometric_term(surface, tf, L=L, n_samples=n_samples, seed=seed, threads=threads)
    rep = TraceReport(
        test_function=tf.to_dict(),
        surface=surface.group.name,
        volume=vol,
        main_term=mt,
        integral_remainder=ri.to_dict(),
        geometric=geometric.to_dict(),
    )
    if spec is not None:
        tail = spectral_tail_bound(spec, tf, vol)
        if not tail < TAIL_REL:
            raise SpectralTailError(f"spectral tail bound {tail:.3g} exceeds {TAIL_REL:g}")
        s = spectral_side(spec, tf)
        rep.spectral_sum = s
        rep.spectral_normalized = s / vol
        rep.residual = s / vol - rep.rhs
        rep.residual_sigma = geometric.sigma
        rep.spectral_tail_bound = tail
        if tf.family == "H":
            rep.small_eigenvalue_cap = small_eigenvalue_cap(surface.genus, tf)
    return rep


def split_window(a: float, b: float, t: float, family: str = "auto"):
    """Test functions covering [a, b]; 'auto' splits at 3/4 between families."""
    if family == "B":
        return [tr.TestFunction.B(a, b, t)]
    if family == "H":
        return [tr.TestFunction.H(a, b, t)]
    if family != "auto":
        raise InputError(f"unknown family {family!r}")
    if b <= 1.0 and (a < 0.5 or b <= 0.75):
        return [tr.TestFunction.B(a, b, t)]
    if a >= 0.5:
        return [tr.TestFunction.H(a, b, t)]
    return [tr.TestFunction.B(a, 0.75, t), tr.TestFunction.H(0.75, b, t)]


def synthetic_spectrum(tf: tr.TestFunction, target: float, volume: float, surface: str = "synthetic") -> Spectrum:
    """Spectrum {0, n copies at the window centre, one solved eigenvalue}
    whose spectral side equals ``target``."""
    mid = 0.5 * (tf.window.a + tf.window.b)
    v0 = float(spectral_value(np.array([0.0]), tf)[0])
    vm = float(spectral_value(np.array([mid]), tf)[0])
    rest = target - v0
    if vm <= 0 or rest < 0:
        raise InputError("target not reachable by a synthetic spectrum")
    n = int(math.floor(rest / vm))
    frac = rest - n * vm
    evs = [0.0] + [mid] * n
    if frac > 1e-15:
        # spectral_value decreases from vm to ~0 above the centre
        hi = tf.window.b + 1.0
        while spectral_value(np.array([hi]), tf)[0] > frac:
            hi += 1.0
        lam = optimize.brentq(lambda x: spectral_value(np.array([x]), tf)[0] - frac, mid, hi, xtol=1e-15, rtol=1e-15)
        evs.append(lam)
    spec = Spectrum(np.array(sorted(evs)), surface=surface, source="synthetic")
    # declare completeness far enough out for the tail certificate
    spec.lambda_cut = max(evs[-1], tf.window.b) + 1.0
    while spectral_tail_bound(spec, tf, volume) > 1e-3 * TAIL_REL:
        spec.lambda_cut *= 1.5
    return spec
