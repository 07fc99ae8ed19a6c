"""Exception hierarchy.

Input problems derive from ``InputError`` (CLI exit code 3); failures of a
numerical certificate derive from ``CertificationError`` (exit code 2).
"""


class SelbergLabError(Exception):
    """Base class for all package errors."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class InputError(SelbergLabError, ValueError):
    kind = "input error"


class CertificationError(SelbergLabError, RuntimeError):
    kind = "certification failure"


class NotHyperbolicError(InputError):
    kind = "not hyperbolic"


class EmptyCollarError(InputError):
    kind = "empty collar"


class DeterminantError(InputError):
    kind = "non-unit determinant"


class DiscretenessError(InputError):
    kind = "discreteness floor violated"


class RadiusGuardError(CertificationError):
    kind = "radius exceeds guard"


class WindowError(InputError):
    kind = "invalid window"


class NoSpectrumError(InputError):
    kind = "no spectrum"


class QuadratureError(CertificationError):
    kind = "quadrature failed to certify tolerance"


class TruncationError(CertificationError):
    kind = "truncation not certifiable within R_max"


class SamplingError(CertificationError):
    kind = "sampling failure"


class DomainVolumeError(SamplingError):
    kind = "domain volume failed to converge"


class SpectralTailError(CertificationError):
    kind = "spectral tail not certifiable"
