"""Fixed-point LLR arithmetic: min-sum f, g, and path-metric updates.

A :class:`QuantScheme` with ``total_bits == 0`` is the floating-point
reference. All other schemes hold LLRs as signed two's-complement integers
("raw" values) with ``fraction_bits`` bits after the binary point, and every
operation saturates to the scheme's range.

The scalar API (:class:`QLlr`, :func:`f_min_sum`, ...) mirrors the hardware
datapath one value at a time. The array helpers (:func:`f_array`,
:func:`g_array`, :func:`quantize_array`) apply the same arithmetic to numpy
vectors and are what the reference decoders use.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPPORTED_WIDTHS = (0, 6, 8, 12)
DEFAULT_FRACTION_BITS = {0: 0, 6: 2, 8: 2, 12: 4}

# Stand-in for "certainly zero" on the float backend. Finite so that g() of two
# such values never produces inf - inf.
FLOAT_SATURATION = 1.0e9


class SchemeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class QuantScheme:
    """Fixed-point LLR format.

    Parameters
    ----------
    total_bits : int
        Word width including sign; 0 selects the float reference backend.
    fraction_bits : int
        Bits after the binary point. Defaults follow ``DEFAULT_FRACTION_BITS``.
    """

    total_bits: int = 0
    fraction_bits: int | None = None

    def __post_init__(self):
        if self.total_bits < 0 or (self.total_bits != 0 and self.total_bits < 2):
            raise ValueError(f"invalid total_bits {self.total_bits}")
        if self.fraction_bits is None:
            frac = DEFAULT_FRACTION_BITS.get(self.total_bits, max(self.total_bits - 6, 0))
            object.__setattr__(self, "fraction_bits", frac)
        if self.fraction_bits < 0:
            raise ValueError("fraction_bits must be non-negative")
        if self.total_bits > 0 and self.fraction_bits >= self.total_bits:
            raise ValueError("fraction_bits must be smaller than total_bits")
        if self.total_bits == 0 and self.fraction_bits != 0:
            raise ValueError("the float backend has no fraction bits")

    @classmethod
    def floating(cls) -> "QuantScheme":
        return cls(0, 0)

    @property
    def is_float(self) -> bool:
        return self.total_bits == 0

    @property
    def max_raw(self):
        if self.is_float:
            return np.inf
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_raw(self):
        if self.is_float:
            return -np.inf
        return -(1 << (self.total_bits - 1))

    @property
    def confident_raw(self):
        """Largest representable positive LLR (used for known-zero bits)."""
        return FLOAT_SATURATION if self.is_float else self.max_raw

    @property
    def scale(self) -> float:
        return float(1 << self.fraction_bits)

    @property
    def dtype(self):
        return np.float64 if self.is_float else np.int32

    def saturate(self, raw):
        if self.is_float:
            return raw
        return np.clip(raw, self.min_raw, self.max_raw)

    def to_real(self, raw):
        return np.asarray(raw, dtype=np.float64) / self.scale

    def to_dict(self) -> dict:
        return {"total_bits": self.total_bits, "fraction_bits": self.fraction_bits}

    @classmethod
    def from_dict(cls, d: dict) -> "QuantScheme":
        return cls(int(d["total_bits"]), int(d.get("fraction_bits", 0)) if "fraction_bits" in d else None)

    def __str__(self):
        return "float" if self.is_float else f"Q{self.total_bits}.{self.fraction_bits}"


@dataclass(frozen=True)
class QLlr:
    """One quantized LLR. ``raw`` is an integer, or a real on the float backend."""

    raw: float
    scheme: QuantScheme

    def __post_init__(self):
        if not self.scheme.is_float:
            r = int(self.raw)
            if r != self.raw:
                raise ValueError("raw value must be an integer for fixed-point schemes")
            if not self.scheme.min_raw <= r <= self.scheme.max_raw:
                raise ValueError(f"raw value {r} outside {self.scheme}")
            object.__setattr__(self, "raw", r)

    @property
    def value(self) -> float:
        return self.raw / self.scheme.scale

    @property
    def hard(self) -> int:
        # sign(0) decodes as bit 0
        return 1 if self.raw < 0 else 0

    def __abs__(self):
        return abs(self.raw)


def _check_same(a: QLlr, b: QLlr):
    if a.scheme != b.scheme:
        raise SchemeMismatch(f"{a.scheme} vs {b.scheme}")


def f_min_sum(a: QLlr, b: QLlr) -> QLlr:
    """sign(a*b) * min(|a|, |b|), saturated (f of two minimum values overflows)."""
    _check_same(a, b)
    mag = min(abs(a.raw), abs(b.raw))
    neg = (a.raw < 0) != (b.raw < 0)
    return QLlr(-mag if neg else a.scheme.saturate(mag), a.scheme)


def g_combine(a: QLlr, b: QLlr, ps: int) -> QLlr:
    """a + (-1)^ps * b, computed one bit wider than the scheme and then clamped."""
    _check_same(a, b)
    out = a.raw - b.raw if ps else a.raw + b.raw
    return QLlr(a.scheme.saturate(out), a.scheme)


def pm_update(pm, llr: QLlr, decision: int, hard: int | None = None):
    """Path-metric update: add |llr| when the decision contradicts the hard decision.

    Path metrics are wide accumulators and are never saturated.
    """
    if hard is None:
        hard = llr.hard
    return pm if decision == hard else pm + abs(llr.raw)


def quantize_channel_llr(analog: float, scheme: QuantScheme) -> QLlr:
    return QLlr(quantize_array(np.asarray([analog]), scheme)[0].item(), scheme)


def quantize_array(analog, scheme: QuantScheme) -> np.ndarray:
    """Round-to-nearest (ties toward +inf) of analog * 2^fraction_bits, saturated."""
    analog = np.asarray(analog, dtype=np.float64)
    if scheme.is_float:
        return np.clip(analog, -FLOAT_SATURATION, FLOAT_SATURATION)
    raw = np.floor(analog * scheme.scale + 0.5)
    return np.clip(raw, scheme.min_raw, scheme.max_raw).astype(np.int32)


def f_array(a, b, scheme: QuantScheme | None = None):
    mag = np.minimum(np.abs(a), np.abs(b))
    out = np.where((a < 0) != (b < 0), -mag, mag)
    return out if scheme is None else scheme.saturate(out).astype(scheme.dtype)


def g_array(a, b, ps, scheme: QuantScheme):
    out = np.where(np.asarray(ps, dtype=bool), a - b, a + b)
    return scheme.saturate(out).astype(scheme.dtype)


def hard_decision(llr):
    return (np.asarray(llr) < 0).astype(np.uint8)
