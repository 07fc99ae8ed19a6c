"""Upper half-plane primitives: points, Mobius elements, distances, volumes.

Scalar functions take ``Point``/``MobiusElement``; the ``*_arrays`` helpers
work on batches of elements stored as rows ``(a, b, c, d)`` of an (n, 4) array
and are what the group-enumeration code uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DeterminantError, EmptyCollarError, InputError, NotHyperbolicError

DET_DRIFT = 1e-13
DET_TOL = 1e-9


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)) or self.y <= 0:
            raise InputError(f"point must satisfy y > 0, got ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z) -> "Point":
        z = complex(z)
        return cls(z.real, z.imag)


def as_complex(z) -> complex:
    if isinstance(z, Point):
        return z.z
    z = complex(z)
    if z.imag <= 0:
        raise InputError(f"point must lie in the upper half-plane, got {z}")
    return z


def _sign_normalize(a, b, c, d):
    scale = max(abs(a), abs(b), abs(c), abs(d))
    for v in (a, b, c, d):
        if abs(v) > 1e-9 * scale:
            if v < 0:
                return -a, -b, -c, -d
            break
    return a, b, c, d


@dataclass(frozen=True)
class MobiusElement:
    """PSL2(R) element, stored with unit determinant and sign-normalized."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = (float(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        scale = max(1.0, a * a + b * b + c * c + d * d)
        if not math.isfinite(det) or abs(det - 1.0) > DET_TOL * scale:
            raise DeterminantError(f"determinant {det!r} is not 1")
        if abs(det - 1.0) > DET_DRIFT:
            s = math.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
        a, b, c, d = _sign_normalize(a, b, c, d)
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v)

    @classmethod
    def from_matrix(cls, m, renormalize=False) -> "MobiusElement":
        m = np.asarray(m, dtype=float).reshape(2, 2)
        if renormalize:
            det = float(np.linalg.det(m))
            if det <= 0:
                raise DeterminantError(f"determinant {det!r} is not positive")
            m = m / math.sqrt(det)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> "MobiusElement":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diag(cls, lam: float) -> "MobiusElement":
        return cls(lam, 0.0, 0.0, 1.0 / lam)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def as_row(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def __matmul__(self, other: "MobiusElement") -> "MobiusElement":
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        return MobiusElement(a, b, c, d)

    def inverse(self) -> "MobiusElement":
        return MobiusElement(self.d, -self.b, -self.c, self.a)

    @property
    def trace(self) -> float:
        return self.a + self.d

    def is_close(self, other: "MobiusElement", tol: float = 1e-9) -> bool:
        x, y = self.as_row(), other.as_row()
        return bool(np.max(np.abs(x - y)) <= tol * (1.0 + np.max(np.abs(x))))

    def to_list(self):
        return [[self.a, self.b], [self.c, self.d]]


def apply(g: MobiusElement, z) -> Point:
    w = as_complex(z)
    num = g.a * w + g.b
    den = g.c * w + g.d
    # imaginary part computed directly keeps it positive for far points
    y = w.imag / abs(den) ** 2
    x = (num * den.conjugate()).real / abs(den) ** 2
    return Point(x, y)


def dist(z, w) -> float:
    """Hyperbolic distance; uses sinh(d/2) = |z-w| / (2 sqrt(Im z Im w))."""
    z, w = as_complex(z), as_complex(w)
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(z.imag * w.imag)))


def cosh_dist(z, w) -> float:
    z, w = as_complex(z), as_complex(w)
    return 1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag)


def translation_length(g: MobiusElement) -> float:
    tr = abs(g.trace)
    if tr <= 2.0:
        raise NotHyperbolicError(f"|trace| = {tr!r} <= 2")
    return 2.0 * math.acosh(tr / 2.0)


def displacement(g: MobiusElement, z) -> float:
    """d(z, g z) via the stable quadratic form in the matrix entries."""
    w = as_complex(z)
    p = g.c * w * w + (g.d - g.a) * w - g.b
    return 2.0 * math.asinh(abs(p) / (2.0 * w.imag))


def fixed_points(g: MobiusElement):
    """Boundary fixed points (repelling, attracting) of a hyperbolic element."""
    translation_length(g)
    a, b, c, d = g.a, g.b, g.c, g.d
    if g.trace < 0:
        a, b, c, d = -a, -b, -c, -d
    tr = a + d
    if abs(c) < 1e-300:
        # z -> (a z + b)/d, fixed points b/(d-a) and infinity
        fin = b / (d - a)
        return (math.inf, fin) if a < d else (fin, math.inf)
    disc = math.sqrt(tr * tr - 4.0)
    p1 = (a - d + disc) / (2 * c)
    p2 = (a - d - disc) / (2 * c)
    # attracting fixed point has |c p + d| < 1
    if abs(c * p1 + d) < 1.0:
        return p2, p1
    return p1, p2


def axis_distance(g: MobiusElement, z) -> float:
    """Distance from z to the axis of a hyperbolic element g."""
    ell = translation_length(g)
    s = math.sinh(displacement(g, z) / 2.0) / math.sinh(ell / 2.0)
    return math.acosh(max(s, 1.0))


def ball_volume(R: float) -> float:
    """cosh(R) - 1, the normalized area of a hyperbolic ball of radius R."""
    if R < 0:
        raise InputError("R must be nonnegative")
    return 2.0 * math.sinh(R / 2.0) ** 2


def ball_area(R: float) -> float:
    return 2.0 * math.pi * ball_volume(R)


def collar_volume(ell: float, d: float) -> float:
    """Area of {dist to a closed geodesic of length ell <= d} (Fermi coords)."""
    if ell <= 0 or d < 0:
        raise InputError("need ell > 0 and d >= 0")
    return 2.0 * ell * math.sinh(d)


def d_max(ell: float, L: float) -> float:
    if ell <= 0 or L <= 0:
        raise InputError("need ell > 0 and L > 0")
    # compare in log form so huge L does not overflow
    log_arg = L - math.log(2.0 * math.sinh(ell / 2.0))
    if log_arg < -1e-15:
        raise EmptyCollarError("e^L/(2 sinh(l/2)) < 1")
    if log_arg > 700:
        return log_arg + math.log(2.0)
    return math.acosh(max(math.exp(log_arg), 1.0))


# ---------------------------------------------------------------- batches


def normalize_rows(m: np.ndarray) -> np.ndarray:
    """Fix determinant drift and sign of an (n, 4) array of elements."""
    m = np.array(m, dtype=float, copy=True).reshape(-1, 4)
    det = m[:, 0] * m[:, 3] - m[:, 1] * m[:, 2]
    drift = np.abs(det - 1.0) > DET_DRIFT
    if np.any(drift):
        m[drift] /= np.sqrt(det[drift])[:, None]
    scale = np.max(np.abs(m), axis=1)
    big = np.abs(m) > 1e-9 * scale[:, None]
    first = np.argmax(big, axis=1)
    sign = np.sign(m[np.arange(len(m)), first])
    m *= np.where(sign < 0, -1.0, 1.0)[:, None]
    return m


def multiply_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise products x_i y_i (broadcasting over leading axes)."""
    a = x[..., 0] * y[..., 0] + x[..., 1] * y[..., 2]
    b = x[..., 0] * y[..., 1] + x[..., 1] * y[..., 3]
    c = x[..., 2] * y[..., 0] + x[..., 3] * y[..., 2]
    d = x[..., 2] * y[..., 1] + x[..., 3] * y[..., 3]
    return np.stack([a, b, c, d], axis=-1)


def invert_rows(x: np.ndarray) -> np.ndarray:
    return np.stack([x[..., 3], -x[..., 1], -x[..., 2], x[..., 0]], axis=-1)


def apply_arrays(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    m = np.asarray(m).reshape(-1, 4)
    z = np.asarray(z, dtype=complex)
    return (m[:, 0] * z + m[:, 1]) / (m[:, 2] * z + m[:, 3])


def displacement_arrays(m: np.ndarray, z) -> np.ndarray:
    """d(z, g z) for every row g of m at a single point z."""
    m = np.asarray(m).reshape(-1, 4)
    w = as_complex(z) if not isinstance(z, np.ndarray) else z
    p = m[:, 2] * (w * w) + (m[:, 3] - m[:, 0]) * w - m[:, 1]
    return 2.0 * np.arcsinh(np.abs(p) / (2.0 * np.imag(w)))


def dist_arrays(z, w) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))


def point_features(z: np.ndarray) -> np.ndarray:
    """Feature map F(z) with |c z^2 + (d-a) z - b|^2 / (4 y^2) = F(z) . M(g)."""
    z = np.asarray(z, dtype=complex).ravel()
    q1, q2 = z * z, z
    inv = 1.0 / (4.0 * z.imag ** 2)
    f = np.stack(
        [
            np.abs(q1) ** 2,
            np.abs(q2) ** 2,
            np.ones_like(z.real),
            2.0 * (q1 * q2.conjugate()).real,
            -2.0 * q1.real,
            -2.0 * q2.real,
        ],
        axis=1,
    )
    return f * inv[:, None]


def element_monomials(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m).reshape(-1, 4)
    c, e, b = m[:, 2], m[:, 3] - m[:, 0], m[:, 1]
    return np.stack([c * c, e * e, b * b, c * e, c * b, e * b], axis=1)


def sinh2_half_displacement(features: np.ndarray, monomials: np.ndarray) -> np.ndarray:
    """sinh^2(d(z_i, g_j z_i)/2) as a (points x elements) matrix."""
    return np.maximum(features @ monomials.T, 0.0)


# ------------------------------------------------------- disk / Klein maps


def to_disk(z, center) -> np.ndarray:
    """Poincare disk coordinate of z with ``center`` sent to 0."""
    c = as_complex(center)
    z = np.asarray(z, dtype=complex)
    return (z - c) / (z - c.conjugate())


def from_disk(w, center) -> np.ndarray:
    c = as_complex(center)
    w = np.asarray(w, dtype=complex)
    return (c - c.conjugate() * w) / (1.0 - w)


def disk_to_klein(w):
    w = np.asarray(w, dtype=complex)
    return 2.0 * w / (1.0 + np.abs(w) ** 2)


def klein_to_disk(k):
    k = np.asarray(k, dtype=complex)
    r2 = np.abs(k) ** 2
    return k / (1.0 + np.sqrt(np.maximum(1.0 - r2, 0.0)))


def klein_cosh_dist(p, q) -> np.ndarray:
    """cosh of the distance between Klein-model points (as complex numbers)."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    dot = (p * q.conjugate()).real
    return (1.0 - dot) / np.sqrt((1.0 - np.abs(p) ** 2) * (1.0 - np.abs(q) ** 2))
