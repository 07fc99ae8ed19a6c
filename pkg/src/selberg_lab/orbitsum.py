"""Per-sample orbit sums over a Dirichlet sample, organised in cells.

Samples are grouped around deterministic centres c (farthest-point picks from
the sample itself).  For a sample z with d(z, c) <= delta, every g with
d(z, g z) <= R satisfies d(c, g c) <= R + 2 delta, so one ball at c serves
the whole cell; the exact displacement at z is then computed with the
6-monomial feature product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hypgeom as hg
from .fuchsian import FuchsianGroup
from .parallel import map_ordered

MAX_BLOCK = 4_000_000


@dataclass
class CellPlan:
    centers: np.ndarray  # complex
    assign: np.ndarray  # cell index per sample
    radius: np.ndarray  # max distance from centre per cell

    def members(self, k):
        return np.flatnonzero(self.assign == k)


def plan_cells(points: np.ndarray, delta: float = 0.45, max_cells: int = 400) -> CellPlan:
    pts = np.asarray(points, dtype=complex)
    n = len(pts)
    # start from the point nearest the centroid-free origin of the list order
    centers = [0]
    dmin = hg.dist_arrays(pts, np.full(n, pts[0]))
    while float(np.max(dmin)) > delta and len(centers) < max_cells:
        k = int(np.argmax(dmin))
        centers.append(k)
        dmin = np.minimum(dmin, hg.dist_arrays(pts, np.full(n, pts[k])))
    cz = pts[centers]
    d = np.stack([hg.dist_arrays(pts, np.full(n, c)) for c in cz], axis=1)
    assign = np.argmin(d, axis=1)
    radius = np.zeros(len(cz))
    for k in range(len(cz)):
        sel = assign == k
        if np.any(sel):
            radius[k] = float(np.max(d[sel, k]))
    return CellPlan(cz, assign, radius)


@dataclass
class OrbitSums:
    values: np.ndarray  # per-sample sum of K(d(z, g z)) over 0 < d <= R
    min_disp: np.ndarray  # per-sample minimal displacement (certified)
    n_terms: np.ndarray
    R: float


def min_displacements(G: FuchsianGroup, points, threads: int = 1, plan: CellPlan | None = None) -> np.ndarray:
    """Certified minimal displacement d(z, g z) over g != id for each sample."""
    res = orbit_sums(G, points, None, 0.0, threads=threads, plan=plan)
    return res.min_disp


def orbit_sums(G: FuchsianGroup, points, kernel, R: float, threads: int = 1, plan: CellPlan | None = None) -> OrbitSums:
    """Sum kernel(d(z, g z)) over 0 < d <= R for each sample z.

    ``kernel`` may be None, in which case only minimal displacements are
    computed.  The result does not depend on ``threads``.
    """
    pts = np.asarray(points, dtype=complex)
    if plan is None:
        plan = plan_cells(pts)
    n = len(pts)
    vals = np.zeros(n)
    mind = np.zeros(n)
    nterm = np.zeros(n, dtype=np.int64)
    s2R = math.sinh(R / 2.0) ** 2

    def work(k):
        idx = plan.members(k)
        if not len(idx):
            return idx, None, None, None
        c = complex(plan.centers[k])
        delta = float(plan.radius[k])
        mc = G.minimal_displacement(c)
        Rc = max(R + 2 * delta, mc + 4 * delta) * (1 + 1e-12) + 1e-12
        mats, _ = G.ball_at(c, Rc)
        mono = hg.element_monomials(mats)
        feats = hg.point_features(pts[idx])
        out_v = np.zeros(len(idx))
        out_m = np.zeros(len(idx))
        out_n = np.zeros(len(idx), dtype=np.int64)
        step = max(1, MAX_BLOCK // max(len(mats), 1))
        for s in range(0, len(idx), step):
            sh2 = hg.sinh2_half_displacement(feats[s : s + step], mono)
            out_m[s : s + step] = 2.0 * np.arcsinh(np.sqrt(np.min(sh2, axis=1)))
            if kernel is not None:
                mask = sh2 <= s2R
                rows, cols = np.nonzero(mask)
                d = 2.0 * np.arcsinh(np.sqrt(sh2[rows, cols]))
                kv = kernel(d)
                acc = np.zeros(sh2.shape[0])
                np.add.at(acc, rows, kv)
                out_v[s : s + step] = acc
                out_n[s : s + step] = np.bincount(rows, minlength=sh2.shape[0])
        return idx, out_v, out_m, out_n

    for idx, v, m, c in map_ordered(work, range(len(plan.centers)), threads):
        if v is None:
            continue
        vals[idx] = v
        mind[idx] = m
        nterm[idx] = c
    return OrbitSums(vals, mind, nterm, R)
