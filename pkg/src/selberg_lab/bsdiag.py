"""Thin-part diagnostics: volume of {InjRad < L}, the collar bound and
threshold checks at a nominal genus.

All estimates for one (surface, n_samples, seed) share the same sample and
the same per-sample injectivity radii, so curves in L are exactly monotone.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import asdict, dataclass, field

import numpy as np

from . import hypgeom as hg
from .errors import InputError
from .fuchsian import FuchsianGroup
from .orbitsum import min_displacements, plan_cells
from .parallel import map_ordered

PRIMITIVE_NOTE = "counts all primitive closed geodesics (over-counts simple ones; valid for the upper bound)"

_SAMPLES: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _group(surface) -> FuchsianGroup:
    return surface.group if hasattr(surface, "group") else surface


@dataclass
class InjectivitySample:
    points: np.ndarray
    injrad: np.ndarray
    seed: int
    global_injrad: float


def injectivity_sample(surface, n_samples: int, seed: int, threads: int = 1) -> InjectivitySample:
    """Cached sample of D with per-point injectivity radii."""
    G = _group(surface)
    cache = _SAMPLES.setdefault(G, {})
    key = (int(n_samples), int(seed))
    if key not in cache:
        S = G.dirichlet_sample(n_samples, seed, threads=threads)
        inj = 0.5 * min_displacements(G, S.points, threads=threads)
        cache[key] = InjectivitySample(S.points, inj, int(seed), 0.5 * G.systole)
    return cache[key]


@dataclass
class ThinPartEstimate:
    L: float
    volume: float
    sigma: float
    n_samples: int
    relative: float
    certified_zero: bool
    seed: int
    n_thin: int

    def to_dict(self):
        return asdict(self)


def thin_part_volume(surface, L: float, n_samples: int = 4000, seed: int = 0, threads: int = 1, margin: float = 0.5) -> ThinPartEstimate:
    G = _group(surface)
    if L <= 0:
        raise InputError("L must be positive")
    if L > G.r_max / 2 - margin:
        raise InputError(f"L = {L} too large for R_max = {G.r_max}")
    smp = injectivity_sample(G, n_samples, seed, threads)
    vol = G.volume
    n = len(smp.injrad)
    if L <= smp.global_injrad:
        # every point has InjRad >= systole / 2 >= L
        return ThinPartEstimate(float(L), 0.0, 0.0, n, 0.0, True, smp.seed, 0)
    thin = smp.injrad < L
    k = int(np.count_nonzero(thin))
    p = k / n
    return ThinPartEstimate(float(L), vol * p, vol * math.sqrt(p * (1 - p) / n), n, p, False, smp.seed, k)


def thin_part_curve(surface, Ls, n_samples: int = 4000, seed: int = 0, threads: int = 1):
    return [thin_part_volume(surface, L, n_samples, seed, threads) for L in Ls]


def bs_volume_bound(surface, L: float) -> dict:
    """2 e^L times the number of primitive closed geodesics of length <= 2L."""
    G = _group(surface)
    spec = G.primitive_length_spectrum(2.0 * L)
    N = spec.count_up_to(2.0 * L)
    return {"L": float(L), "count": int(N), "bound": 2.0 * math.exp(L) * N, "note": PRIMITIVE_NOTE}


# ---------------------------------------------------------- collar checks


@dataclass
class CollarCheck:
    L: float
    thin: np.ndarray
    in_collar: np.ndarray  # within d_max(l, L) of some axis with l <= 2L
    in_inner: np.ndarray  # cosh(dist) < sinh(L) / sinh(l / 2)

    @property
    def thin_implies_collar(self) -> bool:
        return bool(np.all(self.in_collar[self.thin]))

    @property
    def inner_implies_thin(self) -> bool:
        return bool(np.all(self.thin[self.in_inner]))

    def summary(self):
        return {
            "L": self.L,
            "n": int(len(self.thin)),
            "n_thin": int(np.count_nonzero(self.thin)),
            "n_collar": int(np.count_nonzero(self.in_collar)),
            "thin_implies_collar": self.thin_implies_collar,
            "inner_implies_thin": self.inner_implies_thin,
        }


def _axis_data(mats, z):
    tr = np.abs(mats[:, 0] + mats[:, 3])
    ell = 2.0 * np.arccosh(np.maximum(tr / 2.0, 1.0))
    sh = np.sinh(hg.displacement_arrays(mats, z) / 2.0)
    ratio = sh / np.sinh(ell / 2.0)
    return ell, ratio  # ratio = cosh(dist(z, axis))


def collar_check(surface, points, L: float, injrad=None, threads: int = 1) -> CollarCheck:
    """Constructive collar membership for each point."""
    G = _group(surface)
    pts = np.asarray(points, dtype=complex)
    if injrad is None:
        injrad = 0.5 * min_displacements(G, pts, threads=threads)
    # axis within d_max implies displacement <= 2 asinh(e^L / 2)
    R = 2.0 * math.asinh(math.exp(L) / 2.0)
    plan = plan_cells(pts)
    coll = np.zeros(len(pts), dtype=bool)
    inner = np.zeros(len(pts), dtype=bool)
    cosh_dm_num = math.exp(L) / 2.0
    sinhL = math.sinh(L)

    def work(k):
        idx = plan.members(k)
        if not len(idx):
            return idx, None, None
        mats, _ = G.ball_at(complex(plan.centers[k]), R + 2 * plan.radius[k] + 1e-9)
        out_c = np.zeros(len(idx), dtype=bool)
        out_i = np.zeros(len(idx), dtype=bool)
        for j, i in enumerate(idx):
            ell, ratio = _axis_data(mats, pts[i])
            ok = ell <= 2 * L
            s = np.sinh(ell[ok] / 2.0)
            out_c[j] = bool(np.any(ratio[ok] <= cosh_dm_num / s))
            out_i[j] = bool(np.any(ratio[ok] < sinhL / s))
        return idx, out_c, out_i

    for idx, c, i in map_ordered(work, range(len(plan.centers)), threads):
        if c is not None:
            coll[idx] = c
            inner[idx] = i
    return CollarCheck(float(L), np.asarray(injrad) < L, coll, inner)


# ------------------------------------------------------ assumption check


@dataclass
class AssumptionCheck:
    g_proxy: float
    systole: float
    injrad: float
    injrad_threshold: float
    injrad_margin: float
    L: float
    thin_fraction: float
    thin_sigma: float
    thin_threshold: float
    thin_margin: float
    C: float
    verdicts: dict
    label: str = "assumption check"
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def injrad_threshold(g) -> float:
    """g^(-1/24) (log g)^(9/16)."""
    return g ** (-1.0 / 24.0) * math.log(g) ** (9.0 / 16.0)


def corollary_assumptions_check(surface, g_proxy=None, C: float = 1.0, n_samples: int = 4000, seed: int = 0, threads: int = 1) -> AssumptionCheck:
    G = _group(surface)
    g = float(G.genus if g_proxy is None else g_proxy)
    if g < 2:
        raise InputError("g_proxy must be >= 2")
    sys_ = G.systole
    inj = 0.5 * sys_
    r_g = injrad_threshold(g)
    L = math.log(g) / 6.0
    est = thin_part_volume(G, L, n_samples, seed, threads)
    thr = C * g ** (-1.0 / 3.0)
    frac = est.relative
    ok_inj = inj >= r_g
    ok_thin = frac <= thr
    notes = [] if est.certified_zero else ["thin fraction is a Monte-Carlo estimate"]
    return AssumptionCheck(
        g_proxy=g,
        systole=sys_,
        injrad=inj,
        injrad_threshold=r_g,
        injrad_margin=inj - r_g,
        L=L,
        thin_fraction=frac,
        thin_sigma=est.sigma / G.volume,
        thin_threshold=thr,
        thin_margin=thr - frac,
        C=C,
        verdicts={"injrad": "pass" if ok_inj else "fail", "thin_part": "pass" if ok_thin else "fail"},
        notes=notes,
    )
