"""Eigenvalue-counting envelopes and a checker for ingested spectra.

The universal constants C are parameters (default 1); the exponent constant
``C_SMALL = 2**-15`` is fixed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .errors import InputError
from .traceformula import Spectrum, main_term

C_SMALL = 2.0**-15


def _num(v) -> str:
    return repr(float(v))


def surface_volume(g) -> float:
    return 2.0 * math.pi * (2 * g - 2)


def _warn_genus(g, g_min=2):
    return [f"genus {g} below g_min = {g_min}; large-genus hypotheses not met"] if g < g_min else []


def count_window(spectrum, a: float, b: float) -> int:
    """Number of eigenvalues in [a, b], with multiplicity."""
    ev = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum, dtype=float)
    return int(np.searchsorted(ev, b, side="right") - np.searchsorted(ev, a, side="left"))


def upper_bound_envelope(g, a: float, b: float, C: float = 1.0) -> float:
    """vol * C * (b - a + sqrt((b + 1) / log g))."""
    if b < a:
        raise InputError("window needs a <= b")
    return surface_volume(g) * C * (b - a + math.sqrt((b + 1) / math.log(g)))


def small_eigenvalue_envelope(g, b: float, C: float = 1.0) -> float:
    """vol * C * g^(-c (1/4 - b)^2) / (log g)^(3/4), for b <= 1/4."""
    if b > 0.25:
        raise InputError("b exceeds 1/4")
    lg = math.log(g)
    return surface_volume(g) * C * math.exp(-C_SMALL * (0.25 - b) ** 2 * lg) / lg**0.75


@dataclass
class CountingEnvelope:
    genus: float
    a: float
    b: float
    main: float
    lower_slack: float
    upper_slack: float
    C: float
    c: float = C_SMALL
    warnings: list = field(default_factory=list)

    @property
    def volume(self) -> float:
        return surface_volume(self.genus)

    def count_band(self):
        """Band of admissible counts N (not normalised by volume)."""
        v = self.volume
        return v * (self.main + self.lower_slack), v * (self.main + self.upper_slack)

    def contains(self, count: int) -> bool:
        lo, hi = self.count_band()
        return lo <= count <= hi

    def to_dict(self):
        d = asdict(self)
        d["count_band"] = list(self.count_band())
        return d


def equivalent_envelope(g, a: float, b: float, C: float = 1.0, g_min: float = 2) -> CountingEnvelope:
    lg = math.log(g)
    s = C * math.sqrt((b + 1) / lg)
    up = s * math.sqrt(math.log(2 + (b - a) * math.sqrt(lg / (b + 1))))
    return CountingEnvelope(g, a, b, main_term((a, b)), -s, up, C, warnings=_warn_genus(g, g_min))


def multiplicity_bounds(g, lam: float, C: float = 1.0, eps: float | None = None) -> dict:
    """Both multiplicity bounds for m(lambda); the second needs lambda <= 1/4 - eps."""
    if lam < 0:
        raise InputError("lambda must be >= 0")
    lg = math.log(g)
    out = {"sqrt": C * g * math.sqrt((1 + lam) / lg)}
    default = eps is None and lam < 0.25
    if default:
        eps = 0.25 - lam
    if eps is not None:
        if eps <= 0:
            raise InputError("eps must be positive")
        # the default eps satisfies lam <= 1/4 - eps exactly, whatever the rounding
        if default or lam <= 0.25 - eps:
            out["small"] = C * g * math.exp(-C_SMALL * eps * eps * lg) / lg**0.75
    return out


def multiplicity_envelope(g, lam: float, C: float = 1.0, eps: float | None = None) -> float:
    return min(multiplicity_bounds(g, lam, C, eps).values())


def multiplicity_crossover(eps: float = 0.1, C: float = 1.0) -> float:
    """Genus at which the small-eigenvalue bound drops below the sqrt bound."""
    lam = 0.25 - eps

    def diff(x):  # x = log g
        small = -C_SMALL * eps * eps * x - 0.75 * math.log(x)
        first = 0.5 * math.log((1 + lam) / x)
        return small - first

    x = optimize.brentq(diff, 1e-6, 50.0, xtol=1e-14)
    return math.exp(x)


def besson_cap(g, j: int) -> int:
    """Deterministic multiplicity cap 4g + 2j + 1."""
    return 4 * g + 2 * j + 1


def jth_envelope(g, j: int, C: float = 1.0):
    """Interval for lambda_j: j/g +- C (1 + sqrt((j/g) log(2 + j/g)))."""
    if j < 0 or g < 2:
        raise InputError("need j >= 0 and g >= 2")
    x = j / g
    s = C * (1 + math.sqrt(x * math.log(2 + x)))
    return max(0.0, x - s), x + s


# --------------------------------------------------------------- checker


@dataclass
class WindowGrid:
    """Windows with b + 1 geometric and width linear in b."""

    b_max: float | None = None
    n_b: int = 12
    n_w: int = 5

    def windows(self, b_max):
        b_max = self.b_max if self.b_max is not None else b_max
        bs = np.geomspace(1.0, b_max + 1.0, self.n_b) - 1.0
        out = []
        for b in bs:
            for w in np.linspace(0.0, 1.0, self.n_w):
                out.append((float(b - w * b), float(b)))
        return out


@dataclass
class CheckConstants:
    upper: float = 1.0
    equiv: float = 1.0
    mult: float = 1.0
    jth: float = 1.0
    small: float = 1.0

    def to_dict(self):
        return asdict(self)


@dataclass
class SpectrumCheck:
    genus: float
    constants: dict
    windows: list
    jth: list
    multiplicity: list
    flags: dict
    warnings: list

    @property
    def passed(self) -> bool:
        return not any(self.flags.values())

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def check_spectrum(spectrum, g, C: CheckConstants | None = None, grid: WindowGrid | None = None, g_min=2) -> SpectrumCheck:
    """Apply every envelope to a spectrum; ``g`` may be a nominal genus proxy."""
    C = C or CheckConstants()
    grid = grid or WindowGrid()
    if not isinstance(spectrum, Spectrum):
        spectrum = Spectrum(np.asarray(spectrum, dtype=float))
    ev = spectrum.eigenvalues
    vol = surface_volume(g)
    windows = []
    for a, b in grid.windows(max(float(ev[-1]), 1.0)):
        n = count_window(spectrum, a, b)
        ub = upper_bound_envelope(g, a, b, C.upper)
        env = equivalent_envelope(g, a, b, C.equiv, g_min)
        lo, hi = env.count_band()
        row = {
            "a": a,
            "b": b,
            "count": n,
            "main": vol * env.main,
            "band_lo": lo,
            "band_hi": hi,
            "upper_bound": ub,
            "upper_ok": n <= ub,
            "band_ok": lo <= n <= hi,
        }
        if b <= 0.25:
            se = small_eigenvalue_envelope(g, b, C.small)
            row["small_bound"] = se
            row["small_ok"] = n <= se
        windows.append(row)
    jrows = []
    for j, lam in enumerate(ev):
        lo, hi = jth_envelope(g, j, C.jth)
        jrows.append({"j": j, "lambda": float(lam), "lo": lo, "hi": hi, "ok": lo <= lam <= hi})
    mrows = []
    vals, counts = np.unique(ev, return_counts=True)
    for lam, m in zip(vals, counts):
        bound = multiplicity_envelope(g, float(lam), C.mult)
        mrows.append({"lambda": float(lam), "multiplicity": int(m), "bound": bound, "ok": m <= bound})
    flags = {
        "upper_bound": any(not r["upper_ok"] for r in windows),
        "band": any(not r["band_ok"] for r in windows),
        "small_eigenvalue": any(not r.get("small_ok", True) for r in windows),
        "jth": any(not r["ok"] for r in jrows),
        "multiplicity": any(not r["ok"] for r in mrows),
    }
    return SpectrumCheck(g, C.to_dict(), windows, jrows, mrows, flags, _warn_genus(g, g_min))


def write_windows_csv(check: SpectrumCheck, path):
    cols = ["a", "b", "count", "main", "band_lo", "band_hi", "verdict"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in check.windows:
            ok = r["upper_ok"] and r["band_ok"] and r.get("small_ok", True)
            w.writerow([_num(r["a"]), _num(r["b"]), r["count"], _num(r["main"]), _num(r["band_lo"]), _num(r["band_hi"]), "pass" if ok else "fail"])
