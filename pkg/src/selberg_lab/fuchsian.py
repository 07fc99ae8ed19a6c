"""Co-compact Fuchsian groups: enumeration, Dirichlet domains, sampling.

Elements are handled in bulk as (n, 4) float arrays of rows (a, b, c, d).
Ball enumeration at a point z walks by left multiplication with the side
pairings of the Dirichlet polygon centred at z and prunes exactly at the
requested radius; that walk is complete (each non-identity element has a side
pairing s with d(z, s^-1 g z) < d(z, g z)).
"""
from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field

import numpy as np

from . import hypgeom as hg
from .errors import (
    DeterminantError,
    DiscretenessError,
    DomainVolumeError,
    InputError,
    RadiusGuardError,
    SamplingError,
)
from .hypgeom import MobiusElement, Point

DEFAULT_RMAX = 14.0
ELEMENT_TOL = 1e-9
_KEY_W = np.array([1.0, 0.6180339887498949, 0.3819660112501051, 0.7548776662466927])
_IDENTITY = np.array([[1.0, 0.0, 0.0, 1.0]])
CHUNK = 4096


def default_rmax() -> float:
    env = os.environ.get("SELBERG_LAB_RMAX")
    if env:
        try:
            return float(env)
        except ValueError:
            raise InputError(f"SELBERG_LAB_RMAX={env!r} is not a number")
    return DEFAULT_RMAX


# ------------------------------------------------------------ element sets


def _keys(m):
    return m @ _KEY_W


def _tau(m):
    return ELEMENT_TOL * (1.0 + np.max(np.abs(m), axis=1))


class ElementSet:
    """Tolerance-deduplicated set of normalized elements kept sorted by key."""

    def __init__(self, mats=None):
        self.mats = np.zeros((0, 4))
        self.keys = np.zeros(0)
        if mats is not None and len(mats):
            self.add(unique_rows(mats))

    def __len__(self):
        return len(self.mats)

    def lookup(self, cand: np.ndarray) -> np.ndarray:
        """Index of a matching stored element for each row, -1 if none."""
        out = np.full(len(cand), -1, dtype=np.int64)
        if not len(cand) or not len(self.mats):
            return out
        k = _keys(cand)
        tau = _tau(cand)
        span = tau * _KEY_W.sum()
        lo = np.searchsorted(self.keys, k - span, side="left")
        hi = np.searchsorted(self.keys, k + span, side="right")
        width = int(np.max(hi - lo)) if len(lo) else 0
        for off in range(width):
            idx = lo + off
            ok = (idx < hi) & (out < 0)
            if not np.any(ok):
                continue
            j = idx[ok]
            close = np.max(np.abs(self.mats[j] - cand[ok]), axis=1) <= tau[ok]
            sel = np.flatnonzero(ok)[close]
            out[sel] = idx[sel]
        return out

    def add(self, new: np.ndarray):
        """Insert rows assumed distinct from each other and from the set."""
        if not len(new):
            return
        mats = np.concatenate([self.mats, new])
        keys = np.concatenate([self.keys, _keys(new)])
        order = np.argsort(keys, kind="stable")
        self.mats, self.keys = mats[order], keys[order]


def unique_rows(m: np.ndarray) -> np.ndarray:
    """Drop tolerance-duplicates, keeping the first occurrence in key order."""
    m = np.asarray(m, dtype=float).reshape(-1, 4)
    if len(m) < 2:
        return m.copy()
    k = _keys(m)
    order = np.argsort(k, kind="stable")
    m, k = m[order], k[order]
    tau = _tau(m)
    span = tau * _KEY_W.sum()
    dup = np.zeros(len(m), dtype=bool)
    off = 1
    while True:
        gap = k[off:] - k[:-off]
        near = gap <= np.maximum(span[off:], span[:-off])
        if not np.any(near):
            break
        i = np.flatnonzero(near) + off
        close = np.max(np.abs(m[i] - m[i - off]), axis=1) <= np.maximum(tau[i], tau[i - off])
        dup[i[close]] = True
        off += 1
        if off >= len(m):
            break
    return m[~dup]


def words_bfs(gens: np.ndarray, max_len: int) -> np.ndarray:
    """All elements given by words of length <= max_len (deduplicated)."""
    known = ElementSet(_IDENTITY)
    frontier = _IDENTITY
    for _ in range(max_len):
        cand = hg.normalize_rows(hg.multiply_rows(frontier[:, None, :], gens[None, :, :]).reshape(-1, 4))
        cand = unique_rows(cand)
        cand = cand[known.lookup(cand) < 0]
        known.add(cand)
        frontier = cand
        if not len(frontier):
            break
    return known.mats


def _centering(z: complex):
    """Rows A, A^-1 with A i = z."""
    x, y = z.real, z.imag
    sy = math.sqrt(y)
    A = np.array([sy, x / sy, 0.0, 1.0 / sy])
    return A, hg.invert_rows(A)


def ball_walk(steps: np.ndarray, z: complex, R: float, max_elements: int = 4_000_000) -> np.ndarray:
    """BFS by left multiplication with ``steps`` keeping d(z, g z) <= R.

    The walk runs in coordinates where z sits at i, which keeps matrix
    norms (and hence accumulated rounding) as small as the geometry allows.
    """
    Rp = R * (1.0 + 1e-12) + 1e-12
    z = complex(z)
    A, Ainv = _centering(z)
    local = hg.normalize_rows(hg.multiply_rows(hg.multiply_rows(Ainv[None, :], steps), A[None, :]))
    known = ElementSet(_IDENTITY)
    frontier = _IDENTITY
    while len(frontier):
        cand = hg.multiply_rows(local[:, None, :], frontier[None, :, :]).reshape(-1, 4)
        d = hg.displacement_arrays(cand, 1j)
        cand = hg.normalize_rows(cand[d <= Rp])
        if not len(cand):
            break
        cand = unique_rows(cand)
        cand = cand[known.lookup(cand) < 0]
        known.add(cand)
        frontier = cand
        if len(known) > max_elements:
            raise RadiusGuardError(f"ball of radius {R} exceeds {max_elements} elements")
    return hg.normalize_rows(hg.multiply_rows(hg.multiply_rows(A[None, :], known.mats), Ainv[None, :]))


def _drop_identity(m: np.ndarray) -> np.ndarray:
    keep = np.max(np.abs(m - _IDENTITY), axis=1) > ELEMENT_TOL * 10
    return m[keep]


# ---------------------------------------------------------- Dirichlet cells


@dataclass
class DirichletPolygon:
    """Dirichlet polygon centred at ``center`` in Klein coordinates."""

    center: complex
    vertices: np.ndarray  # complex Klein coordinates, counter-clockwise
    pairings: np.ndarray  # (m, 4) side-pairing elements
    pairing_displacement: np.ndarray
    covering_radius: float
    certified_radius: float  # constraints complete up to this displacement
    bounded: bool

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def contains(self, z: np.ndarray, slack: float = 1e-12) -> np.ndarray:
        """Membership: d(center, z) <= d(center, s z) for every pairing s."""
        z = np.asarray(z, dtype=complex).ravel()
        d0 = hg.dist_arrays(z, np.full_like(z, self.center))
        ok = np.ones(len(z), dtype=bool)
        for s in self.pairings:
            sz = hg.apply_arrays(s, z)
            ok &= d0 <= hg.dist_arrays(sz, np.full_like(z, self.center)) + slack
        return ok


def _clip(poly: np.ndarray, u: complex, tau: float) -> np.ndarray:
    """Clip a convex polygon (complex vertices) to Re(k conj(u)) <= tau."""
    if not len(poly):
        return poly
    val = (poly * np.conj(u)).real - tau
    inside = val <= 0
    if np.all(inside):
        return poly
    if not np.any(inside):
        return poly[:0]
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        vp, vq = val[i], val[(i + 1) % n]
        if vp <= 0:
            out.append(p)
        if (vp <= 0) != (vq <= 0):
            s = vp / (vp - vq)
            out.append(p + s * (q - p))
    out = np.array(out)
    # drop repeated vertices created by cuts through an existing vertex
    keep = np.abs(out - np.roll(out, 1)) > 1e-13
    return out[keep] if np.count_nonzero(keep) >= 3 else out


def polygon_area(vertices: np.ndarray) -> float:
    """Hyperbolic area of a Klein-model convex polygon containing 0."""
    v = np.asarray(vertices)
    total = 0.0
    n = len(v)
    for i in range(n):
        p, q = v[i], v[(i + 1) % n]
        a = math.acosh(max(float(hg.klein_cosh_dist(p, q)), 1.0))
        b = math.atanh(min(abs(p), 1 - 1e-16))
        c = math.atanh(min(abs(q), 1 - 1e-16))
        if a < 1e-14 or b < 1e-14 or c < 1e-14:
            continue
        ang = []
        for x, y, w in ((a, b, c), (b, c, a), (c, a, b)):
            cosv = (math.cosh(y) * math.cosh(w) - math.cosh(x)) / (math.sinh(y) * math.sinh(w))
            ang.append(math.acos(min(1.0, max(-1.0, cosv))))
        total += max(math.pi - sum(ang), 0.0)
    return total


def dirichlet_polygon(center: complex, mats: np.ndarray, certified_radius: float) -> DirichletPolygon:
    """Polygon cut out by the bisectors of ``mats`` (all g with d <= radius)."""
    disp = hg.displacement_arrays(mats, center)
    order = np.argsort(disp, kind="stable")
    mats, disp = mats[order], disp[order]
    w = hg.to_disk(hg.apply_arrays(mats, np.full(len(mats), center)), center)
    u = w / np.abs(w)
    tau = np.tanh(disp / 2.0)
    poly = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) * 1.0
    for ui, ti in zip(u, tau):
        # a chord lying entirely outside the current polygon cannot clip it
        if ti >= np.max(np.abs(poly)):
            continue
        poly = _clip(poly, ui, ti)
    radii = np.abs(poly)
    bounded = bool(len(poly) >= 3 and np.max(radii) < 1 - 1e-12)
    if bounded:
        R_D = float(np.max(np.arctanh(radii)))
    else:
        R_D = math.inf
    # active sides: constraints attaining equality at two distinct vertices
    act = []
    for i, (ui, ti) in enumerate(zip(u, tau)):
        if ti > np.max(radii) + 1e-12:
            continue
        on = np.abs((poly * np.conj(ui)).real - ti) <= 1e-9
        if np.count_nonzero(on) >= 2:
            act.append(i)
    act = np.array(act, dtype=int)
    return DirichletPolygon(
        center=center,
        vertices=poly,
        pairings=mats[act],
        pairing_displacement=disp[act],
        covering_radius=R_D,
        certified_radius=certified_radius,
        bounded=bounded,
    )


# ------------------------------------------------------------------- group


@dataclass
class LengthSpectrum:
    entries: list  # (length, multiplicity)
    L_max: float
    witnesses: list = field(default_factory=list)  # one element per class

    def count_up_to(self, L: float) -> int:
        return int(sum(m for ell, m in self.entries if ell <= L + 1e-12))

    @property
    def systole(self) -> float:
        return self.entries[0][0] if self.entries else math.inf

    def to_dict(self):
        return {"L_max": self.L_max, "entries": [[float(l), int(m)] for l, m in self.entries]}


class FuchsianGroup:
    def __init__(
        self,
        generators,
        genus: int | None,
        base_point=None,
        name: str = "custom",
        r_max: float | None = None,
        discreteness_floor: float = 1e-4,
    ):
        if not generators:
            raise InputError("generator list is empty")
        if genus is not None and (int(genus) != genus or genus < 2):
            raise InputError("genus must be an integer >= 2")
        # genus None: a discrete group that is not claimed to be cocompact
        self.genus = None if genus is None else int(genus)
        self.name = name
        self.base_point = Point(0.0, 1.0) if base_point is None else Point.from_complex(hg.as_complex(base_point))
        self.r_max = default_rmax() if r_max is None else float(r_max)
        self.discreteness_floor = float(discreteness_floor)
        rows = []
        for g in generators:
            if not isinstance(g, MobiusElement):
                g = MobiusElement.from_matrix(g)
            rows.append(g.as_row())
        rows = np.array(rows)
        z0 = self.z0
        if np.any(hg.displacement_arrays(rows, z0) < self.discreteness_floor):
            raise DiscretenessError("a generator moves the base point by less than the floor")
        self.generator_rows = rows
        allg = hg.normalize_rows(np.concatenate([rows, hg.invert_rows(rows)]))
        self.steps = unique_rows(allg)
        self.metadata = {"name": name, "genus": self.genus}
        self._lock = threading.RLock()
        self._base_cache = None  # (R, mats sorted by displacement, displacement)
        self._local = {}
        self._check_discreteness()
        self._bootstrap()

    # -- basic properties ------------------------------------------------

    @property
    def z0(self) -> complex:
        return self.base_point.z

    @property
    def generators(self):
        return [MobiusElement(*r) for r in self.steps]

    @property
    def volume(self) -> float:
        if self.genus is None:
            return math.inf
        return 2.0 * math.pi * (2 * self.genus - 2)

    @property
    def cocompact(self) -> bool:
        return bool(self.metadata.get("cocompact_verified"))

    def _check_discreteness(self):
        short = _drop_identity(words_bfs(self.steps, 3 if len(self.steps) <= 16 else 2))
        if len(short):
            m = float(np.min(hg.displacement_arrays(short, self.z0)))
        else:
            m = math.inf
        if m < self.discreteness_floor:
            raise DiscretenessError(f"an element of word length <= 3 moves the base point by {m:.3g}")
        self.metadata["min_short_word_displacement"] = m

    def _bootstrap(self):
        """Find and certify the Dirichlet polygon at the base point.

        Round one walks generator words; if the generators are long at z0
        the walk is capped and its polygon only supplies shorter steps (side
        pairings) for the next round.  Any polygon built from a subset of the
        group contains the true one, so area 2 pi (2g - 2) certifies it.
        """
        steps = self.steps
        poly = None
        for _ in range(4):
            poly, capped = self._polygon_from(steps)
            if poly is None or not capped:
                break
            steps = unique_rows(hg.normalize_rows(np.concatenate([poly.pairings, hg.invert_rows(poly.pairings)])))
        if poly is None:
            self.metadata["cocompact_verified"] = False
            self.metadata["note"] = "not cocompact-verified: Dirichlet polygon not bounded within the search radius"
            self.base_polygon = None
            return
        area = poly.area
        self.base_polygon = poly
        self.metadata.update(
            cocompact_verified=bool(abs(area - self.volume) <= 1e-6 * self.volume),
            polygon_area=area,
            covering_radius=poly.covering_radius,
            n_sides=int(len(poly.pairings)),
        )
        if not self.metadata["cocompact_verified"]:
            self.metadata["note"] = "polygon area differs from 2*pi*(2g-2)"

    def _polygon_from(self, steps):
        """(polygon or None, capped) from walks over ``steps`` at z0."""
        z0 = self.z0
        margin = float(np.max(hg.displacement_arrays(steps, z0)))
        R = 2.0 * margin
        limit = 2.5 * self.r_max
        cap = self.r_max
        capped = False
        while True:
            if R + margin > cap:
                # too far for a generator walk: keep what a capped walk sees
                R, capped = cap - margin, True
                if R <= 0:
                    R = 0.5 * cap
                    margin = 0.5 * cap
            mats = self._generator_ball(R, margin, steps)
            poly = dirichlet_polygon(z0, _drop_identity(mats), R)
            if capped:
                return (poly if poly.bounded else None), True
            if poly.bounded and 2 * poly.covering_radius <= R:
                return poly, False
            nxt = max(1.5 * R, 2 * poly.covering_radius + 0.5) if poly.bounded else 1.5 * R
            if nxt + margin > limit or len(mats) > 200_000:
                return None, False
            R = nxt

    def _generator_ball(self, R, margin, steps=None):
        """Uncertified walk over words in ``steps`` pruned at R + margin."""
        steps = self.steps if steps is None else steps
        mats = ball_walk(steps, self.z0, R + margin, max_elements=400_000)
        d = hg.displacement_arrays(mats, self.z0)
        return mats[d <= R * (1 + 1e-12) + 1e-12]

    def _guard(self, R):
        if R > self.r_max + 1e-12:
            raise RadiusGuardError(f"radius {R} exceeds guard R_max = {self.r_max}")

    @property
    def covering_radius(self) -> float:
        if self.base_polygon is None:
            raise SamplingError("group is not cocompact-verified")
        return self.base_polygon.covering_radius

    # -- base-point balls -------------------------------------------------

    def base_ball(self, R: float):
        """(elements, displacements) with d(z0, g z0) <= R, identity excluded."""
        with self._lock:
            c = self._base_cache
            if c is None or c[0] < R:
                if self.base_polygon is None:
                    margin = float(np.max(hg.displacement_arrays(self.steps, self.z0)))
                    mats = self._generator_ball(R, 2 * margin)
                else:
                    mats = ball_walk(self.base_polygon.pairings, self.z0, R)
                mats = _drop_identity(mats)
                d = hg.displacement_arrays(mats, self.z0)
                order = np.argsort(d, kind="stable")
                c = (R, mats[order], d[order])
                self._base_cache = c
            n = np.searchsorted(c[2], R * (1 + 1e-12) + 1e-12, side="right")
            return c[1][:n], c[2][:n]

    def reduce_to_domain(self, z):
        """Return (h, w) with w = h^-1 z in the base Dirichlet polygon."""
        z = hg.as_complex(z)
        h = _IDENTITY[0].copy()
        if self.base_polygon is None:
            return h, z
        pair = self.base_polygon.pairings
        for _ in range(10_000):
            d0 = hg.dist(self.z0, z)
            sz = hg.apply_arrays(pair, np.full(len(pair), z))
            ds = hg.dist_arrays(sz, np.full(len(pair), self.z0))
            i = int(np.argmin(ds))
            if ds[i] >= d0 - 1e-13:
                return h, z
            z = complex(sz[i])
            h = hg.normalize_rows(hg.multiply_rows(h, hg.invert_rows(pair[i])))[0]
        raise SamplingError("reduction to the fundamental domain did not terminate")

    def local_polygon(self, c: complex) -> DirichletPolygon:
        """Dirichlet polygon centred at c (c should lie in the base domain)."""
        c = complex(c)
        key = (round(c.real, 14), round(c.imag, 14))
        with self._lock:
            if key in self._local:
                return self._local[key]
        if self.base_polygon is None:
            raise SamplingError("group is not cocompact-verified")
        d0 = hg.dist(self.z0, c)
        bound = 2.0 * (self.base_polygon.covering_radius + d0)
        Rtry = min(bound, 2.0 * self.base_polygon.covering_radius + 0.5)
        while True:
            mats, _ = self.base_ball(Rtry + 2 * d0)
            d = hg.displacement_arrays(mats, c)
            poly = dirichlet_polygon(c, mats[d <= Rtry * (1 + 1e-12)], Rtry)
            if poly.bounded and 2 * poly.covering_radius <= Rtry * (1 + 1e-12):
                break
            if Rtry >= bound:
                raise SamplingError("local Dirichlet polygon could not be certified")
            Rtry = min(bound, max(2 * poly.covering_radius + 0.25, Rtry + 0.5) if poly.bounded else bound)
        with self._lock:
            if len(self._local) > 4096:
                self._local.clear()
            self._local[key] = poly
        return poly

    def ball_at(self, c: complex, R: float):
        """(elements, displacements) with d(c, g c) <= R for c in the domain."""
        poly = self.local_polygon(c)
        mats = _drop_identity(ball_walk(poly.pairings, c, R))
        d = hg.displacement_arrays(mats, c)
        order = np.argsort(d, kind="stable")
        return mats[order], d[order]

    # -- public enumeration ------------------------------------------------

    def ball_rows(self, z, R: float):
        self._guard(R)
        z = hg.as_complex(z)
        if self.base_polygon is None:
            d0 = hg.dist(self.z0, z)
            mats, _ = self.base_ball(R + 2 * d0)
            d = hg.displacement_arrays(mats, z)
            keep = d <= R * (1 + 1e-12) + 1e-12
            order = np.argsort(d[keep], kind="stable")
            return mats[keep][order], d[keep][order]
        h, w = self.reduce_to_domain(z)
        mats, d = self.ball_at(w, R)
        if np.max(np.abs(h - _IDENTITY[0])) > 0:
            hinv = hg.invert_rows(h)
            mats = hg.normalize_rows(hg.multiply_rows(hg.multiply_rows(h[None, :], mats), hinv[None, :]))
            d = hg.displacement_arrays(mats, z)
        return mats, d

    def enumerate_ball(self, z, R: float):
        mats, _ = self.ball_rows(z, R)
        return [MobiusElement(*r) for r in mats]

    def orbit_count(self, z, j: float) -> int:
        if j <= 0:
            return 1
        mats, _ = self.ball_rows(z, j)
        return 1 + len(mats)

    def minimal_displacement(self, z) -> float:
        """min over g != id of d(z, g z), certified by the polygon at z."""
        z = hg.as_complex(z)
        if self.base_polygon is None:
            raise SamplingError("group is not cocompact-verified")
        h, w = self.reduce_to_domain(z)
        poly = self.local_polygon(w)
        R = float(np.min(poly.pairing_displacement)) * (1 + 1e-9)
        while True:
            self._guard(R)
            mats, d = self.ball_at(w, R)
            if len(d) and d[0] <= R:
                return float(d[0])
            R *= 1.5

    def injectivity_radius_at(self, z) -> float:
        return 0.5 * self.minimal_displacement(z)

    @property
    def systole(self) -> float:
        return self.primitive_length_spectrum(self.covering_radius * 2 + 0.5).systole

    # -- sampling ------------------------------------------------------------

    def dirichlet_sample(self, n: int, seed: int, threads: int = 1, max_expansions: int = 5):
        if int(n) != n or n < 1:
            raise InputError("n must be a positive integer")
        if self.base_polygon is None:
            raise SamplingError("group is not cocompact-verified")
        R = self.base_polygon.covering_radius * (1 + 1e-9)
        for _ in range(max_expansions + 1):
            res = _rejection_sample(self, int(n), int(seed), R, threads)
            tol = 0.005 * self.volume + 4 * res.volume_sigma
            if abs(res.volume_estimate - self.volume) <= tol:
                return res
            R *= 1.1
        raise DomainVolumeError(
            f"Dirichlet volume estimate {res.volume_estimate:.6g} vs {self.volume:.6g}"
        )

    # -- length spectrum -------------------------------------------------------

    def primitive_length_spectrum(self, L_max: float, tol: float = 1e-8) -> LengthSpectrum:
        self._guard(L_max)
        return _length_spectrum(self, float(L_max), tol)

    # -- io --------------------------------------------------------------------

    def to_dict(self):
        return {
            "genus": self.genus,
            "name": self.name,
            "base_point": [self.base_point.x, self.base_point.y],
            "generators": [[[r[0], r[1]], [r[2], r[3]]] for r in self.generator_rows.tolist()],
        }


# ------------------------------------------------------------ sampling impl


@dataclass
class DirichletSample:
    points: np.ndarray  # complex
    n_proposed: int
    accepted_fraction: float
    volume_estimate: float
    volume_sigma: float
    radius: float
    seed: int

    def as_points(self):
        return [Point(z.real, z.imag) for z in self.points]


def _propose_chunk(z0: complex, R: float, rng: np.random.Generator, m: int) -> np.ndarray:
    u = rng.random(m)
    th = rng.random(m) * 2 * np.pi
    rho = np.arccosh(1.0 + u * (np.cosh(R) - 1.0))
    w = np.tanh(rho / 2.0) * np.exp(1j * th)
    return hg.from_disk(w, z0)


def _rejection_sample(G: FuchsianGroup, n: int, seed: int, R: float, threads: int) -> DirichletSample:
    from .parallel import map_ordered

    ss = np.random.SeedSequence(seed)
    poly = G.base_polygon
    accepted = []
    n_acc = 0
    n_prop = 0
    batch = max(1, int(threads))

    def work(child):
        rng = np.random.default_rng(child)
        z = _propose_chunk(G.z0, R, rng, CHUNK)
        return z, poly.contains(z)

    while n_acc < n:
        need = n - n_acc
        est = max(1, int(math.ceil(need / (CHUNK * 0.3))))
        kids = ss.spawn(max(batch, min(est, 64)))
        for z, ok in map_ordered(work, kids, threads):
            hits = np.flatnonzero(ok)
            if n_acc + len(hits) >= n:
                # count proposals only up to the one completing the sample
                k = n - n_acc
                accepted.append(z[hits[:k]])
                n_prop += int(hits[k - 1]) + 1
                n_acc = n
                break
            accepted.append(z[hits])
            n_acc += len(hits)
            n_prop += CHUNK
        if n_prop > 1000 * n + 10**7:
            raise SamplingError("acceptance rate too small")
    pts = np.concatenate(accepted)
    p = n_acc / n_prop
    area = hg.ball_area(R)
    sigma = area * math.sqrt(max(p * (1 - p), 1e-300) / n_prop)
    return DirichletSample(
        points=pts,
        n_proposed=n_prop,
        accepted_fraction=p,
        volume_estimate=p * area,
        volume_sigma=sigma,
        radius=R,
        seed=seed,
    )


# ---------------------------------------------------------- length spectrum


def _length_spectrum(G: FuchsianGroup, L_max: float, tol: float) -> LengthSpectrum:
    R_D = G.covering_radius
    if 2 * R_D + L_max > G.r_max + 2 * R_D + 1e-9:
        raise RadiusGuardError("length cutoff exceeds guard")
    mats, disp = G.base_ball(2 * R_D + L_max + 1e-9)
    tr = np.abs(mats[:, 0] + mats[:, 3])
    hyp = tr > 2.0 + 1e-12
    mats, disp, tr = mats[hyp], disp[hyp], tr[hyp]
    ell = 2.0 * np.arccosh(tr / 2.0)
    keep = ell <= L_max + 1e-9
    mats, disp, ell = mats[keep], disp[keep], ell[keep]
    # distance from z0 to the axis: sinh(d/2) = cosh(delta) sinh(l/2)
    cd = np.sinh(disp / 2.0) / np.sinh(ell / 2.0)
    delta = np.arccosh(np.maximum(cd, 1.0))
    keep = delta <= R_D + 1e-9
    S, ell = mats[keep], ell[keep]
    if not len(S):
        return LengthSpectrum([], L_max)
    sset = ElementSet()
    order = np.argsort(_keys(S), kind="stable")
    S, ell = S[order], ell[order]
    sset.mats, sset.keys = S, _keys(S)
    parent = np.arange(len(S))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    inv_idx = sset.lookup(hg.normalize_rows(hg.invert_rows(S)))
    for i, j in enumerate(inv_idx):
        if j >= 0:
            union(i, j)
    H, _ = G.base_ball(2 * R_D + L_max / 2 + 1e-9)
    Hinv = hg.invert_rows(H)
    block = max(1, 200_000 // max(len(S), 1))
    for s in range(0, len(H), block):
        h = H[s : s + block]
        hi = Hinv[s : s + block]
        conj = hg.multiply_rows(hg.multiply_rows(h[:, None, :], S[None, :, :]), hi[:, None, :])
        conj = hg.normalize_rows(conj.reshape(-1, 4))
        idx = sset.lookup(conj).reshape(len(h), len(S))
        for row in idx:
            for i in np.flatnonzero(row >= 0):
                union(i, int(row[i]))
    roots = np.array([find(i) for i in range(len(S))])
    reps = np.unique(roots)
    # primitivity: a class is non-primitive if a shorter element shares its axis
    fp = np.array([_fixed_pair(S[i]) for i in range(len(S))])
    primitive = []
    for r in reps:
        ok = True
        lr = ell[r]
        for k in range(2, int(lr / max(np.min(ell), 1e-9)) + 2):
            cand = np.flatnonzero(np.abs(ell * k - lr) <= tol * max(lr, 1.0) * 10)
            for i in cand:
                if _same_axis(fp[i], fp[r]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            primitive.append(r)
    primitive.sort(key=lambda i: ell[i])
    entries = []
    witnesses = []
    for i in primitive:
        if entries and abs(ell[i] - entries[-1][0]) <= tol * max(ell[i], 1.0):
            entries[-1][1] += 1
        else:
            entries.append([float(ell[i]), 1])
            witnesses.append(MobiusElement(*S[i]))
    return LengthSpectrum([(l, m) for l, m in entries], L_max, witnesses)


def _fixed_pair(row):
    g = MobiusElement(*row)
    return hg.fixed_points(g)


def _same_axis(p, q, tol=1e-7):
    def close(x, y):
        if math.isinf(x) or math.isinf(y):
            return math.isinf(x) and math.isinf(y)
        return abs(x - y) <= tol * (1 + abs(x))

    return (close(p[0], q[0]) and close(p[1], q[1])) or (close(p[0], q[1]) and close(p[1], q[0]))


# -------------------------------------------------------------- constructors


def bolza_generators():
    """Side pairings of the regular octagon with angles pi/4, base point i."""
    ch = 1.0 + math.sqrt(2.0)
    sh = math.sqrt(2.0 + 2.0 * math.sqrt(2.0))
    T = np.array([[ch, sh], [sh, ch]], dtype=complex)
    C = np.array([[1, -1j], [1, 1j]])
    Ci = np.linalg.inv(C)
    out = []
    for k in range(4):
        th = k * math.pi / 4
        Rk = np.diag([np.exp(1j * th / 2), np.exp(-1j * th / 2)])
        A = Ci @ (Rk @ T @ np.conj(Rk)) @ C
        out.append(MobiusElement.from_matrix(A.real, renormalize=True))
    return out


# relator word a b^-1 c d^-1 a^-1 b c^-1 d, upper case = inverse
BOLZA_RELATOR = "aBcDAbCd"


def bolza_group(**kw) -> FuchsianGroup:
    return FuchsianGroup(bolza_generators(), genus=2, name="bolza", **kw)


def word_element(gens, word: str) -> MobiusElement:
    table = {}
    for i, g in enumerate(gens):
        ch = "abcdefghijklmnopqrstuvwxyz"[i]
        table[ch] = g
        table[ch.upper()] = g.inverse()
    out = MobiusElement.identity()
    for ch in word:
        out = out @ table[ch]
    return out


def from_generators(mats, genus: int | None, **kw) -> FuchsianGroup:
    gens = []
    for m in mats:
        if isinstance(m, MobiusElement):
            gens.append(m)
            continue
        arr = np.asarray(m, dtype=float).reshape(2, 2)
        det = float(np.linalg.det(arr))
        if not math.isfinite(det) or abs(det - 1.0) > 1e-6 * max(1.0, float(np.sum(arr * arr))):
            raise DeterminantError(f"determinant {det!r} is not 1")
        gens.append(MobiusElement.from_matrix(arr, renormalize=True))
    return FuchsianGroup(gens, genus, **kw)


def enumerate_ball(G: FuchsianGroup, z, R: float):
    return G.enumerate_ball(z, R)


def orbit_count(G: FuchsianGroup, z, j: float) -> int:
    return G.orbit_count(z, j)


def injectivity_radius_at(G: FuchsianGroup, z) -> float:
    return G.injectivity_radius_at(z)


def dirichlet_sample(G: FuchsianGroup, n: int, seed: int, threads: int = 1) -> DirichletSample:
    return G.dirichlet_sample(n, seed, threads=threads)


def primitive_length_spectrum(G: FuchsianGroup, L_max: float) -> LengthSpectrum:
    return G.primitive_length_spectrum(L_max)


def counting_bound(j: float, r: float) -> float:
    """Ball-packing bound (cosh(j + r/2) - 1)/(cosh(r/2) - 1) on orbit counts."""
    return hg.ball_volume(j + r / 2) / hg.ball_volume(r / 2)


# ------------------------------------------------------------------- files


def load_generators(path, **kw) -> FuchsianGroup:
    with open(path) as fh:
        data = json.load(fh)
    genus = None
    mats = []
    if isinstance(data, dict):
        genus = data.get("genus")
        mats = data.get("generators", [])
        if data.get("base_point") is not None and "base_point" not in kw:
            x, y = data["base_point"]
            kw["base_point"] = complex(x, y)
    elif isinstance(data, list):
        for item in data:
            if isinstance(item, dict):
                genus = item.get("genus", genus)
            else:
                mats.append(item)
    if genus is None:
        raise InputError("generator file lacks a genus")
    return from_generators(mats, int(genus), name=str(path), **kw)


def save_generators(G: FuchsianGroup, path):
    with open(path, "w") as fh:
        json.dump(G.to_dict(), fh, indent=1)


def load_surface(spec: str, **kw) -> FuchsianGroup:
    if spec in ("builtin:bolza", "bolza"):
        return bolza_group(**kw)
    if not os.path.exists(spec):
        raise InputError(f"surface {spec!r} not found")
    return load_generators(spec, **kw)
