"""Test functions and the Selberg transform chain h -> g -> g' -> K.

Family B smooths the indicator of [a, b] in the eigenvalue variable,
h(r) = f_t(1/4 + r^2).  Family H smooths the indicator of [alpha, beta] in the
spectral parameter and symmetrizes, H_t(r) = h_t(r) + h_t(-r).  Family H has
closed forms for g and g'; family B goes through Fourier quadrature.

Normalization: g(u) = (1/2pi) int h(r) e^{iru} dr and
K(rho) = -(1/(sqrt(2) pi)) int_rho^inf g'(u) / sqrt(cosh u - cosh rho) du.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline, make_interp_spline

from .errors import InputError, QuadratureError, WindowError

SQRT_PI = math.sqrt(math.pi)
R_CUT_SIGMAS = 6.5


# --------------------------------------------------------------- erf helpers


def erf(x):
    return special.erf(x)


def erf_diff(u, v):
    """erf(u) - erf(v) without cancellation when both lie in the same tail."""
    u = np.asarray(u)
    v = np.asarray(v)
    ur = np.real(u)
    vr = np.real(v)
    pos = (ur > 0.5) & (vr > 0.5)
    neg = (ur < -0.5) & (vr < -0.5)
    out = special.erf(u) - special.erf(v)
    if np.any(pos):
        out = np.where(pos, special.erfc(v) - special.erfc(u), out)
    if np.any(neg):
        out = np.where(neg, special.erfc(-u) - special.erfc(-v), out)
    return out


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def composite_nodes(breaks, panels: int, order: int = 20):
    """Nodes/weights of composite Gauss-Legendre over consecutive segments."""
    breaks = np.asarray(sorted(set(float(b) for b in breaks)))
    x, w = gauss_legendre(order)
    total = breaks[-1] - breaks[0]
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        k = max(1, int(math.ceil(panels * (hi - lo) / total)))
        edges = np.linspace(lo, hi, k + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


# ------------------------------------------------------------------ windows


@dataclass(frozen=True)
class SpectralWindow:
    a: float
    b: float
    extended: bool = False  # allows a >= -1/2 for internal window shifts

    def __post_init__(self):
        lo = -0.5 if self.extended else 0.0
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise WindowError("window endpoints must be finite")
        if self.a < lo or self.b < self.a:
            raise WindowError(f"need {lo} <= a <= b, got [{self.a}, {self.b}]")

    @property
    def alpha(self) -> float:
        return math.sqrt(max(self.a - 0.25, 0.0))

    @property
    def beta(self) -> float:
        return math.sqrt(max(self.b - 0.25, 0.0))

    @property
    def delta_b(self) -> float:
        return max(0.25 - self.b, 0.0)

    @classmethod
    def from_spectral(cls, alpha: float, beta: float) -> "SpectralWindow":
        return cls(0.25 + alpha * alpha, 0.25 + beta * beta)

    def to_dict(self):
        return {"a": self.a, "b": self.b}


# ----------------------------------------------------------- test functions


@dataclass(frozen=True)
class TestFunction:
    family: str
    window: SpectralWindow
    t: float

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.family not in ("B", "H"):
            raise InputError(f"unknown family {self.family!r}")
        if not (self.t > 0 and math.isfinite(self.t)):
            raise InputError("t must be positive")
        if self.family == "B" and self.window.b > 1.0:
            raise WindowError("family B requires b <= 1")
        if self.family == "H" and self.window.a < 0.5:
            raise WindowError("family H requires a >= 1/2")

    @classmethod
    def B(cls, a, b, t, extended=False) -> "TestFunction":
        return cls("B", SpectralWindow(a, b, extended), t)

    @classmethod
    def H(cls, a, b, t) -> "TestFunction":
        return cls("H", SpectralWindow(a, b), t)

    @property
    def alpha(self):
        return self.window.alpha

    @property
    def beta(self):
        return self.window.beta

    def bound_hypotheses(self, r: float | None = None) -> dict:
        """Which hypotheses of the analytic bounds hold (evaluation is never blocked)."""
        out = {"t_ge_1_200": self.t >= 1 / 200, "t_ge_1_10": self.t >= 0.1}
        if r is not None:
            out["r_in_0_3"] = 0 < r < 3
        return out

    # values
    def f(self, lam):
        return f_t(lam, self)

    def h(self, r):
        return h(r, self)

    def g(self, u):
        return g(u, self)

    def g_prime(self, u):
        return g_prime(u, self)

    @property
    def r_cut(self) -> float:
        if self.family == "B":
            return math.sqrt(max(self.window.b - 0.25, 0.0) + R_CUT_SIGMAS / self.t)
        return self.beta + R_CUT_SIGMAS / self.t

    def breakpoints(self):
        if self.family == "B":
            w = self.window
            pts = [0.0, self.r_cut]
            for lam in (w.a, w.b):
                if lam > 0.25:
                    pts.append(math.sqrt(lam - 0.25))
            return sorted(pts)
        return sorted({0.0, self.alpha, self.beta, self.r_cut})

    def to_dict(self):
        return {"family": self.family, "a": self.window.a, "b": self.window.b, "t": self.t}


def f_t(lam, tf: TestFunction):
    """(1_[a,b] * v_t)(lam) = (erf(t(b - lam)) - erf(t(a - lam))) / 2."""
    lam = np.asarray(lam)
    w = tf.window
    return 0.5 * erf_diff(tf.t * (w.b - lam), tf.t * (w.a - lam))


def h_half(r, tf: TestFunction):
    """Family H unsymmetrized h_t(r) = (1_[alpha,beta] * v_t)(r)."""
    r = np.asarray(r)
    return 0.5 * erf_diff(tf.t * (tf.beta - r), tf.t * (tf.alpha - r))


def h(r, tf: TestFunction):
    r = np.asarray(r)
    if tf.family == "B":
        return f_t(0.25 + r * r, tf)
    out = h_half(r, tf) + h_half(-r, tf)
    if not np.iscomplexobj(r):
        out = np.real(out)
    return out


def sinc(x):
    x = np.asarray(x, dtype=float)
    return np.sinc(x / np.pi)


def sinc_prime(x):
    """d/dx (sin x / x), with a series near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    big = (xs * np.cos(xs) - np.sin(xs)) / (xs * xs)
    x2 = x * x
    ser = -x / 3.0 + x * x2 / 30.0 - x * x2 * x2 / 840.0
    return np.where(small, ser, big)


def _g_closed_H(u, tf):
    u = np.abs(np.asarray(u, dtype=float))
    al, be, t = tf.alpha, tf.beta, tf.t
    gauss = np.exp(-u * u / (4 * t * t))
    return (be * sinc(be * u) - al * sinc(al * u)) / math.pi * gauss


def _gp_closed_H(u, tf):
    u = np.asarray(u, dtype=float)
    s = np.sign(u)
    u = np.abs(u)
    al, be, t = tf.alpha, tf.beta, tf.t
    gauss = np.exp(-u * u / (4 * t * t))
    g0 = (be * sinc(be * u) - al * sinc(al * u)) / math.pi * gauss
    d = (be * be * sinc_prime(be * u) - al * al * sinc_prime(al * u)) / math.pi * gauss
    return s * (-(u / (2 * t * t)) * g0 + d)


def g(u, tf: TestFunction):
    if tf.family == "H":
        return _g_closed_H(u, tf)
    return numeric_g(tf, u)


def g_prime(u, tf: TestFunction):
    if tf.family == "H":
        return _gp_closed_H(u, tf)
    return numeric_g(tf, u, derivative=True)


def gprime_envelope(u, tf: TestFunction):
    """Majorant of |g'| used for tail certificates (closed form for family H)."""
    u = np.maximum(np.abs(np.asarray(u, dtype=float)), 1e-300)
    if tf.family == "H":
        al, be, t = tf.alpha, tf.beta, tf.t
        # |sinc| <= 1 and |x sinc'(x)| <= 2
        lin = (be + al) * u / (2 * t * t)
        dd = np.minimum(2 * (be + al) / u, (be ** 3 + al ** 3) * u / 3.0)
        return (lin + dd) / math.pi * np.exp(-u * u / (4 * t * t))
    # family B: sampled magnitude, doubled
    return 2.0 * np.abs(numeric_g(tf, u, derivative=True)) + 1e-300


# ------------------------------------------------------- numeric Fourier path


def _h_real_axis(tf: TestFunction, r: np.ndarray, source: str):
    if source == "H_numeric":
        return h(r, tf)
    return np.real(h(r, tf))


def numeric_g(tf: TestFunction, u, derivative=False, tol=1e-12, order=20, max_doublings=8):
    """(1/pi) int_0^rcut h(r) cos(ru) dr (or its u-derivative) by composite GL.

    Panels double until two successive estimates agree to ``tol`` (absolute,
    relative to max(1, sup|h|)).  Works for both families; for family H it is
    the numeric counterpart of the closed form.
    """
    u = np.asarray(u, dtype=float)
    shape = u.shape
    uu = u.ravel()
    s = np.sign(uu) if derivative else np.ones_like(uu)
    ua = np.abs(uu)
    rc = tf.r_cut
    umax = float(np.max(ua)) if len(ua) else 0.0
    panels = max(8, int(math.ceil(rc * umax / 4.0)), int(math.ceil(4 * rc * tf.t)))
    out_prev = None
    for _ in range(max_doublings):
        x, w = composite_nodes(tf.breakpoints(), panels, order)
        hv = np.real(h(x, tf))
        out = np.empty_like(ua)
        step = max(1, 2_000_000 // len(x))
        for i in range(0, len(ua), step):
            ph = np.outer(ua[i : i + step], x)
            if derivative:
                out[i : i + step] = -(np.sin(ph) @ (w * x * hv)) / math.pi
            else:
                out[i : i + step] = (np.cos(ph) @ (w * hv)) / math.pi
        if out_prev is not None:
            err = float(np.max(np.abs(out - out_prev))) if len(out) else 0.0
            if err <= tol:
                return (s * out).reshape(shape)
        out_prev = out
        panels *= 2
    raise QuadratureError(f"Fourier quadrature did not reach {tol:g} (last change {err:.3g})")


def g_prime_nested(tf: TestFunction, u, n_mu=120, order=24):
    """Family B g' through the (mu, r) double integral in rescaled variables.

    g'(u) = -(1/(pi^{3/2} t)) int_{t(a-1/4)}^{t(b-1/4)} int_0^inf
            r exp(-(r^2 - mu)^2) sin(r u / sqrt t) dr dmu.
    """
    if tf.family != "B":
        raise InputError("nested form applies to family B")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    t = tf.t
    w = tf.window
    m_lo, m_hi = t * (w.a - 0.25), t * (w.b - 0.25)
    if m_hi <= m_lo:
        return np.zeros_like(u)
    xm, wm = composite_nodes([m_lo, m_hi], max(4, n_mu // 20), 20)
    r_hi = math.sqrt(max(m_hi, 0.0) + R_CUT_SIGMAS)
    scaled = u / math.sqrt(t)
    panels = max(16, int(math.ceil(r_hi * float(np.max(scaled)) / 3.0)))
    xr, wr = composite_nodes([0.0, r_hi], panels, order)
    inner = np.exp(-((xr[None, :] ** 2 - xm[:, None]) ** 2)) * xr[None, :]  # (mu, r)
    weight_r = inner.T @ wm  # integrate over mu first
    res = np.sin(np.outer(scaled, xr)) @ (wr * weight_r)
    return -res / (math.pi ** 1.5 * t)


@lru_cache(maxsize=32)
def _gp_table(tf: TestFunction, u_max: float, step: float):
    grid = np.arange(0.0, u_max + step, step)
    vals = numeric_g(tf, grid, derivative=True)
    return make_interp_spline(grid, vals, k=5), float(grid[-1])


# ------------------------------------------------------------------- kernel


@dataclass(frozen=True)
class KernelProfile:
    tf: TestFunction
    rel_tol: float = 1e-12
    order: int = 16
    max_doublings: int = 8
    cutoff_multiplier: float = 12.0
    cap: float = 100.0
    substitution: bool = True
    method: str = "auto"  # "closed", "direct", "table"
    table_step: float = 0.004

    @property
    def t(self):
        return self.tf.t

    @property
    def window(self):
        return self.tf.window

    @property
    def family(self):
        return self.tf.family

    def resolved_method(self):
        if self.method != "auto":
            return self.method
        return "closed" if self.tf.family == "H" else "direct"

    def gp(self, u):
        m = self.resolved_method()
        if m == "closed":
            return _gp_closed_H(u, self.tf)
        if m == "direct":
            return numeric_g(self.tf, u, derivative=True)
        spline, top = _gp_table(self.tf, self._table_top(), self.table_step)
        if np.max(u) > top:
            raise QuadratureError("g' table too short")
        return spline(u)

    def gp_noise(self) -> float:
        return 1e-16 if self.resolved_method() == "closed" else 1e-14

    def _table_top(self):
        return 200.0

    def to_dict(self):
        return {
            "rel_tol": self.rel_tol,
            "order": self.order,
            "cutoff_multiplier": self.cutoff_multiplier,
            "cap": self.cap,
            "method": self.resolved_method(),
        }


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    big = x > 20
    xs = np.where(big, 1.0, x)
    return np.where(big, x - math.log(2.0), np.log(np.sinh(xs)))


def _abel_weight(rho, s):
    """2s / sqrt(cosh(rho + s^2) - cosh(rho)), stable for all sizes."""
    A = rho + 0.5 * s * s
    B = 0.5 * s * s
    return 2.0 * s * np.exp(-0.5 * (math.log(2.0) + _log_sinh(A) + _log_sinh(B)))


def _cutoff(rho, profile: KernelProfile):
    t = profile.t
    return min(max(2 * rho, profile.cutoff_multiplier * t * t), rho + profile.cap)


def _tail_bound(rho, U, profile: KernelProfile):
    grid = np.linspace(U, U + 40.0 * profile.t + 40.0, 400)
    if profile.resolved_method() == "table":
        top = _gp_table(profile.tf, profile._table_top(), profile.table_step)[1]
        grid = grid[grid <= top]
        sup = 2.0 * float(np.max(np.abs(profile.gp(grid)))) if len(grid) else math.inf
    elif profile.family == "H":
        sup = float(np.max(gprime_envelope(grid, profile.tf)))
    else:
        sup = 2.0 * float(np.max(np.abs(profile.gp(grid))))
    ratio = math.cosh(rho) / math.cosh(U) if U < 700 else 0.0
    return sup * 2.0 * math.sqrt(2.0) * math.exp(-U / 2.0) / math.sqrt(max(1.0 - ratio, 1e-300)) / (math.sqrt(2.0) * math.pi)


@dataclass
class KernelValues:
    rho: np.ndarray
    K: np.ndarray
    K_abs: np.ndarray  # (1/sqrt2 pi) int |g'| / sqrt(cosh u - cosh rho)
    err: np.ndarray
    u_cut: np.ndarray


def _abel_quadrature(rho, ucut, profile: KernelProfile):
    n = len(rho)
    K = np.zeros(n)
    Kabs = np.zeros(n)
    err = np.zeros(n)
    x, w = gauss_legendre(profile.order)
    freq = max(profile.tf.r_cut, 1.0)
    panels = np.array([max(2, int(math.ceil(freq * (uc - r) / 6.0))) for r, uc in zip(rho, ucut)])
    pending = np.arange(n)
    prev = None
    for _ in range(profile.max_doublings + 1):
        vals = np.zeros(len(pending))
        avals = np.zeros(len(pending))
        wsum = np.zeros(len(pending))
        for k, i in enumerate(pending):
            S = math.sqrt(ucut[i] - rho[i])
            edges = np.linspace(0.0, S, panels[i] + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[:-1] + edges[1:])
            s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
            wt = _abel_weight(rho[i], s) * (half[:, None] * w[None, :]).ravel()
            gp = profile.gp(rho[i] + s * s)
            vals[k] = -np.dot(gp, wt) / (math.sqrt(2.0) * math.pi)
            avals[k] = np.dot(np.abs(gp), wt) / (math.sqrt(2.0) * math.pi)
            wsum[k] = np.sum(wt) / (math.sqrt(2.0) * math.pi)
        if prev is not None:
            diff = np.abs(vals - prev)
            # numeric g' carries absolute noise; it bounds attainable accuracy
            floor = profile.gp_noise() * wsum
            ok = diff <= profile.rel_tol * np.maximum(avals, 1e-300) + floor
            K[pending[ok]] = vals[ok]
            Kabs[pending[ok]] = avals[ok]
            err[pending[ok]] = diff[ok]
            pending = pending[~ok]
            prev = vals[~ok]
        else:
            prev = vals
        if not len(pending):
            return K, Kabs, err
        panels[pending] *= 2
    raise QuadratureError(f"kernel quadrature did not converge at rho = {rho[pending][:3]}")


def kernel_values(rho, profile: KernelProfile) -> KernelValues:
    """K(rho) with node doubling and a certified cutoff of the Abel integral."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho < 1e-6):
        raise InputError("kernel requires rho >= 1e-6")
    ucut = np.array([_cutoff(r, profile) for r in rho])
    K, Kabs, err = _abel_quadrature(rho, ucut, profile)
    tail = np.array([_tail_bound(r, u, profile) for r, u in zip(rho, ucut)])
    for _ in range(4):
        bad = tail > np.maximum(profile.rel_tol * Kabs, 1e-300)
        if not np.any(bad):
            break
        ucut[bad] = np.minimum(ucut[bad] + 20.0, rho[bad] + 2 * profile.cap)
        K[bad], Kabs[bad], err[bad] = _abel_quadrature(rho[bad], ucut[bad], profile)
        tail[bad] = [_tail_bound(r, u, profile) for r, u in zip(rho[bad], ucut[bad])]
    else:
        bad = tail > np.maximum(profile.rel_tol * Kabs, 1e-300)
        if np.any(bad):
            raise QuadratureError(f"kernel tail not certified at rho = {rho[bad][:3]}")
    return KernelValues(rho, K, Kabs, err + tail, ucut)


def kernel_K(rho, profile: KernelProfile):
    if not isinstance(profile, KernelProfile):
        profile = KernelProfile(profile)
    vals = kernel_values(rho, profile).K
    return vals if np.ndim(rho) else float(vals[0])


class KernelTable:
    """Cubic-spline table of K on [rho_min, rho_max] for orbit sums."""

    def __init__(self, profile: KernelProfile, rho_min: float, rho_max: float, step: float = 0.004):
        self.profile = profile
        self.rho_min = float(rho_min)
        self.rho_max = float(rho_max)
        n = max(8, int(math.ceil((rho_max - rho_min) / step)) + 1)
        self.grid = np.linspace(rho_min, rho_max, n)
        kv = kernel_values(self.grid, profile)
        self.values = kv.K
        self.abs_values = kv.K_abs
        self.spline = CubicSpline(self.grid, self.values)
        mid = 0.5 * (self.grid[:-1] + self.grid[1:])
        probe = mid[:: max(1, len(mid) // 64)]
        direct = kernel_values(probe, profile).K
        self.interp_error = float(np.max(np.abs(self.spline(probe) - direct)))

    def __call__(self, rho):
        return self.spline(rho)


# ------------------------------------------------------------- bound shapes


def step_envelope(rho):
    """s(rho) = exp(-rho^2) / (2 sqrt(pi) rho)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise InputError("s(rho) needs rho > 0")
    return np.exp(-rho * rho) / (2 * SQRT_PI * rho)


def regularized_indicator(x, lo, hi):
    """1 on (lo, hi), 1/2 at the endpoints, 0 outside."""
    x = np.asarray(x, dtype=float)
    out = np.where((x > lo) & (x < hi), 1.0, 0.0)
    out = np.where((x == lo) | (x == hi), 0.5, out)
    if lo == hi:
        out = np.where(x == lo, 0.0, out)
    return out


def _step_bound(x, lo, hi, t):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        sl = np.where(x != lo, np.exp(-(t * (x - lo)) ** 2) / (2 * SQRT_PI * t * np.abs(x - lo)), np.inf)
        sh = np.where(x != hi, np.exp(-(t * (x - hi)) ** 2) / (2 * SQRT_PI * t * np.abs(x - hi)), np.inf)
    out = np.where((x < lo) | (x == hi), sl, 0.0)
    out = np.where((x > lo) & (x < hi), sl + sh, out)
    out = np.where((x > hi) | (x == lo), sh, out)
    return out


def step_bound_B(lam, window: SpectralWindow, t: float):
    """Three-case bound on |f_t - u_[a,b]| (infinite only at a = b endpoints)."""
    return _step_bound(lam, window.a, window.b, t)


def step_bound_H(r, window: SpectralWindow, t: float):
    return _step_bound(r, window.alpha, window.beta, t)


def fourier_shape(u, tf: TestFunction, r: float):
    u = np.asarray(u, dtype=float)
    t, db = tf.t, tf.window.delta_b
    return r ** (-2 / 3) * np.exp(
        -t * t * db * db - (7 / 32) * u ** (4 / 3) * t ** (-2 / 3) + (3 / 16) * u ** (2 / 3) * t ** (2 / 3)
    )


def kernel_shape_B(rho, tf: TestFunction, r: float):
    rho = np.asarray(rho, dtype=float)
    t, db = tf.t, tf.window.delta_b
    base = -t * t * db * db - rho ** (4 / 3) / (8 * t ** (2 / 3))
    extra = np.where(rho < 6 * t * t, t * t, 0.0)
    return t / r ** 2 * np.exp(base + extra)


def kernel_shape_H(rho, tf: TestFunction, r: float):
    rho = np.asarray(rho, dtype=float)
    t = tf.t
    return t * math.sqrt(tf.window.b) / r ** 2 * np.exp(-rho * rho / (4 * t * t))


def kernel_shape(rho, tf: TestFunction, r: float):
    return kernel_shape_B(rho, tf, r) if tf.family == "B" else kernel_shape_H(rho, tf, r)


def gprime_shape_H(u, tf: TestFunction, r: float):
    u = np.asarray(u, dtype=float)
    return math.sqrt(tf.window.b) / r * np.exp(-u * u / (4 * tf.t ** 2))


def trace_decrease_bound_H(x, y, tf: TestFunction):
    """exp(t^2 (y^2 - x^2 + 2 beta x - alpha^2)) / (2 sqrt(pi) alpha t)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t, al, be = tf.t, tf.alpha, tf.beta
    return np.exp(t * t * (y * y - x * x + 2 * be * x - al * al)) / (2 * SQRT_PI * al * t)


def integral_shape(tf: TestFunction) -> dict:
    t = tf.t
    if tf.family == "B":
        out = {"O(1/t)": 1.0 / t}
        if tf.window.b <= 0.25:
            db = tf.window.delta_b
            out["O(exp(-3/4 t^2 delta_b^2)/t^1.5)"] = math.exp(-0.75 * t * t * db * db) / t ** 1.5
        return out
    return {"O(sqrt(b)/t)": math.sqrt(tf.window.b) / t}


def kernel_sum_shape(tf: TestFunction, r: float, L: float, thin_fraction: float) -> float:
    t = tf.t
    brack = math.exp(-L) + thin_fraction * math.exp(L)
    if tf.family == "B":
        return t ** 3 / r ** 4 * math.exp(-t * t * tf.window.delta_b ** 2) * brack
    return t ** 3 * math.sqrt(tf.window.b) / r ** 4 * brack


def fit_constant(values, shapes) -> float:
    """Smallest C with |value| <= C * shape on the grid."""
    values = np.abs(np.asarray(values, dtype=float))
    shapes = np.asarray(shapes, dtype=float)
    return float(np.max(values / shapes))


# ------------------------------------------------------- integral remainder


@dataclass
class IntegralRemainder:
    value: float
    abserr: float
    envelope: dict

    def to_dict(self):
        return {"value": self.value, "abserr": self.abserr, "envelope": self.envelope}


def _quad_pieces(fun, pts, rel=1e-12):
    total, err = 0.0, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, e = integrate.quad(fun, lo, hi, epsabs=0.0, epsrel=rel, limit=400)
        total += v
        err += e
    return total, err


def integral_remainder(tf: TestFunction) -> IntegralRemainder:
    """(1/4pi) int_0^inf (h(r) - 1_[alpha,beta](r)) 2r tanh(pi r) dr."""
    al, be = tf.alpha, tf.beta
    if tf.family == "B" and tf.window.a == tf.window.b:
        return IntegralRemainder(0.0, 0.0, integral_shape(tf))

    def integrand(r):
        ind = 1.0 if al < r < be else 0.0
        return (float(np.real(h(r, tf))) - ind) * 2.0 * r * math.tanh(math.pi * r)

    top = tf.r_cut + 4.0 / tf.t
    pts = sorted({0.0, al, be, top})
    # extra splits help quad resolve the erf transition layers
    width = 1.0 / tf.t
    extra = [p + k * width for p in (al, be) for k in (-3, -1, 1, 3) if 0 < p + k * width < top]
    pts = sorted(set(pts) | set(extra))
    val, err = _quad_pieces(integrand, pts)
    val /= 4 * math.pi
    err /= 4 * math.pi
    # tail beyond top: |h| <= erfc-type tail, bounded crudely
    r = top
    if tf.family == "B":
        x = tf.t * (0.25 + r * r - tf.window.b)
    else:
        x = tf.t * (r - be)
    tail = math.exp(-x * x) / (2 * SQRT_PI * max(x, 1e-3)) * (r + 10) ** 2
    err += tail
    if err > 1e-10 * abs(val) + 1e-14:
        raise QuadratureError(f"integral remainder error {err:.3g} for value {val:.3g}")
    return IntegralRemainder(val, err, integral_shape(tf))
