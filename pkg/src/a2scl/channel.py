"""AWGN channel: hardware-style noise source, BPSK and LLR demapping.

The hardware noise path follows a classic FPGA design:

* a 32-bit uniform word from a 43-bit LFSR XORed with a 37-bit rule-90/150
  cellular automaton (combined period (2^43 - 1)(2^37 - 1), about 2^80);
* a piecewise-linear inverse CDF with 64 stored segments for one half of the
  distribution, the other half by odd symmetry (128 segments in total);
  evaluating a segment costs one multiply and one add;
* output rounded to a 16-bit Q3.12 word (sign, 3 integer, 12 fraction bits).

Segments are found from the octave of the tail distance (a leading-zero
count in hardware), then from the next few bits inside the octave, so they
are dense in the tails. The two deepest segments each span several octaves;
below ``u = 2**-20`` the table is a documented tail approximation.

A float backend (numpy ``standard_normal``) provides the reference noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import ndtri

# LFSR: s[t] = s[t-43] ^ s[t-42] ^ s[t-38] ^ s[t-37], i.e. characteristic
# polynomial x^43 + x^6 + x^5 + x + 1 (reciprocal of the tabulated
# maximal-length x^43 + x^42 + x^38 + x^37 + 1).
LFSR_WIDTH = 43
LFSR_LAGS = (43, 42, 38, 37)
LFSR_POLYNOMIAL = (1 << 43) | (1 << 6) | (1 << 5) | (1 << 1) | 1

# CASR: next[i] = s[i-1] ^ s[i+1] ^ (rule[i] & s[i]) with null boundaries.
# Bit i of CASR_RULES set means rule 150 at cell i, clear means rule 90. This is
# the first vector, in increasing integer order, whose characteristic
# polynomial is primitive.
CASR_WIDTH = 37
CASR_RULES = 0x15

# prime factors of 2^n - 1, for primitivity checks
MERSENNE_FACTORS = {43: (431, 9719, 2099863), 37: (223, 616318177)}

_M32 = 0xFFFFFFFF
_LFSR_MASK = (1 << LFSR_WIDTH) - 1
_CASR_MASK = (1 << CASR_WIDTH) - 1
# typed copies for the compiled code (mixing uint64 and int64 promotes to float)
_U32 = np.uint64(_M32)
_ULFSR = np.uint64(_LFSR_MASK)
_UCASR = np.uint64(_CASR_MASK)
_U1, _U5, _U6, _U11, _U32SHIFT = (np.uint64(v) for v in (1, 5, 6, 11, 32))


# ---------------------------------------------------------------------------
# GF(2) polynomial helpers (bit i = coefficient of x^i)

def _pmulmod(a: int, b: int, mod: int, deg: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if (a >> deg) & 1:
            a ^= mod
    return r


def _ppowmod(base: int, e: int, mod: int, deg: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = _pmulmod(r, base, mod, deg)
        base = _pmulmod(base, base, mod, deg)
        e >>= 1
    return r


def is_primitive(poly: int, factors) -> bool:
    """Whether a degree-n GF(2) polynomial is primitive.

    ``factors`` are the distinct prime factors of 2^n - 1.
    """
    deg = poly.bit_length() - 1
    order = (1 << deg) - 1
    if _ppowmod(2, order, poly, deg) != 1:
        return False
    return all(_ppowmod(2, order // q, poly, deg) != 1 for q in factors)


def casr_characteristic_polynomial(rules: int = CASR_RULES, width: int = CASR_WIDTH) -> int:
    """Characteristic polynomial of the tridiagonal 90/150 transition matrix."""
    pm2, pm1 = 0, 1
    for k in range(width):
        cur = (pm1 << 1) ^ (pm1 if (rules >> k) & 1 else 0) ^ pm2
        pm2, pm1 = pm1, cur
    return pm1


# ---------------------------------------------------------------------------
# Uniform generator

@njit(cache=True, inline="always")
def _lfsr_word(r):
    # r holds s[t-43..t-1], oldest at bit 0. The smallest lag (37) exceeds 32,
    # so 32 new bits come out of one shift-and-XOR.
    w = (r ^ (r >> _U1) ^ (r >> _U5) ^ (r >> _U6)) & _U32
    return w, ((r >> _U32SHIFT) | (w << _U11)) & _ULFSR


@njit(cache=True, inline="always")
def _casr_step(c, rules):
    return ((c << _U1) ^ (c >> _U1) ^ (c & rules)) & _UCASR


@njit(cache=True)
def _hw_words(lfsr, casr, rules, count):
    out = np.empty(count, dtype=np.uint32)
    for j in range(count):
        w, lfsr = _lfsr_word(lfsr)
        casr = _casr_step(casr, rules)
        out[j] = w ^ (casr & _U32)
    return out, lfsr, casr


@dataclass
class HwRng:
    """Combined LFSR/CASR 32-bit generator. Both registers must be nonzero."""

    lfsr_state: int
    casr_state: int

    def __post_init__(self):
        self.lfsr_state = int(self.lfsr_state)
        self.casr_state = int(self.casr_state)
        if not 0 < self.lfsr_state <= _LFSR_MASK:
            raise ValueError("LFSR state must be a nonzero 43-bit value")
        if not 0 < self.casr_state <= _CASR_MASK:
            raise ValueError("CASR state must be a nonzero 37-bit value")

    @classmethod
    def from_seed(cls, seed) -> "HwRng":
        """Derive both register states from an int or a ``SeedSequence``."""
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        a, b = (int(x) for x in ss.generate_state(2, dtype=np.uint64))
        return cls((a & _LFSR_MASK) or 1, (b & _CASR_MASK) or 1)

    def next_u32(self) -> int:
        return int(self.words(1)[0])

    def words(self, count: int) -> np.ndarray:
        out, lf, ca = _hw_words(np.uint64(self.lfsr_state), np.uint64(self.casr_state),
                                np.uint64(CASR_RULES), int(count))
        self.lfsr_state, self.casr_state = int(lf), int(ca)
        return out


# ---------------------------------------------------------------------------
# Inverse CDF table

# Segments per octave of the tail distance e (e in [2^k, 2^(k+1))), as
# log2 of the sub-segment count, for k = 12 .. 30.
OCTAVE_SPLIT = (1,) * 13 + (2, 2, 2, 3, 3, 3)
FIRST_SPLIT_OCTAVE = 12
# e in [1, 2^6) and [2^6, 2^12) are one segment each
DEEP_TAIL_EDGES = (1, 1 << 6, 1 << 12)


def _magnitude(e):
    """Exact |x| for tail distance e (in units of 2^-32)."""
    return -ndtri(np.asarray(e, dtype=np.float64) / 2.0**32)


@dataclass(frozen=True)
class IcdfTable:
    """Fixed-point segment table for one half of the inverse normal CDF.

    Segment j covers tail distances ``origin[j] <= e < origin[j+1]`` and
    evaluates ``start[j] + (slope[j] * (e - origin[j])) >> shift[j]`` in
    ``internal_bits`` fraction bits, rounded to ``output_fraction_bits``.
    ``terminal`` is the value at the segment end (shared with the next start).
    """

    origin: np.ndarray
    start: np.ndarray
    terminal: np.ndarray
    slope: np.ndarray
    shift: np.ndarray
    octave_base: np.ndarray
    octave_shift: np.ndarray
    internal_bits: int = 28
    output_bits: int = 16
    output_fraction_bits: int = 12
    slope_bits: int = field(default=24, repr=False)

    @classmethod
    def build(cls, output_bits: int = 16, output_fraction_bits: int = 12,
              internal_bits: int = 28, slope_bits: int = 24) -> "IcdfTable":
        edges = list(DEEP_TAIL_EDGES[:-1])
        octave_base = np.zeros(31, dtype=np.int64)
        octave_shift = np.full(31, 40, dtype=np.int64)   # shift 40: sub-index 0
        for k in range(FIRST_SPLIT_OCTAVE):
            octave_base[k] = 0 if (1 << k) < DEEP_TAIL_EDGES[1] else 1
        for k, s in zip(range(FIRST_SPLIT_OCTAVE, 31), OCTAVE_SPLIT):
            octave_base[k] = len(edges)
            octave_shift[k] = k - s
            w = 1 << (k - s)
            edges.extend((1 << k) + j * w for j in range(1 << s))
        edges.append(1 << 31)
        edges = np.asarray(edges, dtype=np.int64)
        pts = np.round(_magnitude(edges) * 2.0**internal_bits).astype(np.int64)
        pts[-1] = 0
        start, terminal = pts[:-1], pts[1:]
        widths = np.diff(edges)
        slope = np.zeros(len(start), dtype=np.int64)
        shift = np.zeros(len(start), dtype=np.int64)
        for j in range(len(start)):
            real = (terminal[j] - start[j]) / widths[j]
            sh = 0
            while abs(real) * 2.0 ** (sh + 1) < 2.0**slope_bits:
                sh += 1
            shift[j] = sh
            slope[j] = int(np.round(real * 2.0**sh))
        return cls(edges[:-1], start, terminal, slope, shift, octave_base, octave_shift,
                   internal_bits, output_bits, output_fraction_bits, slope_bits)

    @property
    def segments(self) -> int:
        return len(self.start)

    @property
    def lsb(self) -> float:
        return 2.0**-self.output_fraction_bits

    @property
    def max_code(self) -> int:
        return (1 << (self.output_bits - 1)) - 1

    def _arrays(self):
        return (self.origin, self.start, self.slope, self.shift, self.octave_base,
                self.octave_shift, self.internal_bits - self.output_fraction_bits, self.max_code)


@njit(cache=True)
def _icdf_codes(words, origin, start, slope, shift, obase, oshift, drop, max_code):
    # The body stays inside the loop on purpose: factored into a helper it
    # runs several times slower under numba.
    out = np.empty(words.shape[0], dtype=np.int16)
    for j in range(words.shape[0]):
        word = np.int64(words[j])
        # tail distance e in [1, 2^31]; word < 2^31 is the negative half
        e = np.int64(0x100000000) - word if word >= 0x80000000 else word
        if e == 0:
            e = 1   # u = 0 clamps to the table extreme
        # floor(log2(e)) by binary search, as a priority encoder would
        k = 0
        x = e
        if x >= 65536:
            x >>= 16
            k += 16
        if x >= 256:
            x >>= 8
            k += 8
        if x >= 16:
            x >>= 4
            k += 4
        if x >= 4:
            x >>= 2
            k += 2
        if x >= 2:
            k += 1
        if k > 30:
            k = 30
        idx = obase[k]
        if oshift[k] < 40:
            idx += (e - (np.int64(1) << k)) >> oshift[k]
            if idx >= origin.shape[0]:   # e = 2^31 closes the last segment
                idx = origin.shape[0] - 1
        v = start[idx] + ((slope[idx] * (e - origin[idx])) >> shift[idx])
        c = (v + (np.int64(1) << (drop - 1))) >> drop
        c = min(max(c, 0), max_code)
        out[j] = -c if word < 0x80000000 else c
    return out


_DEFAULT_TABLE = None


def default_table() -> IcdfTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = IcdfTable.build()
    return _DEFAULT_TABLE


def uniform_to_gaussian(words, table: IcdfTable | None = None):
    """Map 32-bit uniform words to signed noise codes (raw fixed point).

    Word ``2**31`` (u = 0.5) maps to 0; ``w`` and ``2**32 - w`` map to
    negated codes. Scalars give an int, arrays an int16 array.
    """
    table = default_table() if table is None else table
    arr = np.atleast_1d(np.asarray(words, dtype=np.uint64))
    if arr.size and arr.max() > _M32:
        raise ValueError("uniform words must fit in 32 bits")
    codes = _icdf_codes(arr.astype(np.uint32), *table._arrays())
    return int(codes[0]) if np.ndim(words) == 0 else codes


def word_from_unit(u) -> np.ndarray:
    """Nearest 32-bit word to a probability in [0, 1] (1 clamps to 2^32 - 1)."""
    return np.clip(np.round(np.asarray(u, dtype=np.float64) * 2.0**32), 0, _M32).astype(np.uint64)


def _segment_codes(table: IcdfTable, j: int, e):
    # numpy form of _icdf_codes for the positive half, restricted to segment j
    v = table.start[j] + ((table.slope[j] * (e - table.origin[j])) >> table.shift[j])
    drop = table.internal_bits - table.output_fraction_bits
    return np.clip((v + (1 << (drop - 1))) >> drop, 0, table.max_code)


def exact_output_pmf(table: IcdfTable | None = None) -> np.ndarray:
    """Probability of each code 0..max_code on the positive half (sums to 1).

    Codes are non-increasing in the tail distance e inside a segment, so the
    count of each code is found by binary search for its last e.
    """
    table = default_table() if table is None else table
    counts = np.zeros(table.max_code + 1, dtype=np.int64)
    ends = np.append(table.origin[1:], 1 << 31)
    for j in range(table.segments):
        a, b = int(table.origin[j]), int(ends[j])     # e in [a, b); e = 2^31 added below
        hi_code = int(_segment_codes(table, j, np.int64(a)))
        lo_code = int(_segment_codes(table, j, np.int64(b - 1)))
        codes = np.arange(lo_code, hi_code + 1, dtype=np.int64)
        # last e in [a, b) with code >= c, by bisection on all codes at once
        lo = np.full(codes.size, a, dtype=np.int64)
        hi = np.full(codes.size, b - 1, dtype=np.int64)
        while np.any(lo < hi):
            mid = (lo + hi + 1) // 2
            ok = _segment_codes(table, j, mid) >= codes
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid - 1)
        last = lo
        upto = last - a + 1                  # e values with code >= c
        upto = np.append(upto, 0)
        counts[codes] += upto[:-1] - upto[1:]
    counts[int(_segment_codes(table, table.segments - 1, np.int64(1 << 31)))] += 1
    return counts / 2.0**31


# ---------------------------------------------------------------------------
# Noise sources

@njit(cache=True)
def _lane_words(lfsr, casr, rules, per_lane):
    lanes = lfsr.shape[0]
    out = np.empty(per_lane * lanes, dtype=np.uint32)
    for ln in range(lanes):
        lf = lfsr[ln]
        ca = casr[ln]
        for j in range(per_lane):
            w, lf = _lfsr_word(lf)
            ca = _casr_step(ca, rules)
            out[j * lanes + ln] = w ^ (ca & _U32)
        lfsr[ln] = lf
        casr[ln] = ca
    return out


class HardwareNoise:
    """Interleaved lanes of :class:`HwRng` + ICDF, as unit-variance samples.

    Sample j of the stream comes from lane ``j % lanes``.
    """

    def __init__(self, seed=0, lanes: int = 16, table: IcdfTable | None = None):
        if lanes < 1:
            raise ValueError("need at least one lane")
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        gens = [HwRng.from_seed(s) for s in ss.spawn(lanes)]
        self.lanes = lanes
        self.table = default_table() if table is None else table
        self._lfsr = np.array([g.lfsr_state for g in gens], dtype=np.uint64)
        self._casr = np.array([g.casr_state for g in gens], dtype=np.uint64)
        self._spare = np.zeros(0, dtype=np.int16)

    def codes(self, count: int) -> np.ndarray:
        """Raw Q3.12 noise codes."""
        need = count - self._spare.size
        fresh = np.zeros(0, dtype=np.int16)
        if need > 0:
            per_lane = -(-need // self.lanes)
            words = _lane_words(self._lfsr, self._casr, np.uint64(CASR_RULES), per_lane)
            fresh = _icdf_codes(words, *self.table._arrays())
        pool = np.concatenate([self._spare, fresh])
        self._spare = pool[count:]
        return pool[:count]

    def standard_normal(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        return (self.codes(n).astype(np.float64) * self.table.lsb).reshape(shape)


class FloatNoise:
    """Reference Gaussian noise from numpy's PCG64."""

    def __init__(self, seed=0):
        self._rng = np.random.default_rng(seed)

    def standard_normal(self, shape) -> np.ndarray:
        return self._rng.standard_normal(shape)


def make_noise(kind: str, seed=0, lanes: int = 16):
    if kind == "hardware":
        return HardwareNoise(seed, lanes)
    if kind == "float":
        return FloatNoise(seed)
    raise ValueError(f"unknown noise source {kind!r}")


# ---------------------------------------------------------------------------
# Modulation and demapping

def bpsk(bits) -> np.ndarray:
    """Bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def awgn_apply(bits, sigma: float, noise) -> np.ndarray:
    """BPSK-modulate ``bits`` (any shape) and add ``sigma``-scaled noise."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = bpsk(bits)
    return x + sigma * noise.standard_normal(x.shape)


def demap_llr(symbols, sigma: float):
    """BPSK/AWGN channel LLR log P(0)/P(1) = 2 y / sigma^2."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 2.0 * np.asarray(symbols, dtype=np.float64) / sigma**2


def snr_to_sigma(snr_db: float, convention: str = "esn0", rate: float = 1.0,
                 bits_per_symbol: int = 1) -> float:
    """Noise standard deviation for unit-energy BPSK symbols.

    ``esn0``: sigma^2 = 1 / (2 Es/N0). ``ebn0``: Es/N0 = Eb/N0 * rate * bits_per_symbol.
    """
    if convention not in ("esn0", "ebn0"):
        raise ValueError(f"unknown SNR convention {convention!r}")
    esn0 = 10.0 ** (snr_db / 10.0)
    if convention == "ebn0":
        if not 0 < rate <= 1:
            raise ValueError("rate must be in (0, 1]")
        esn0 *= rate * bits_per_symbol
    return float(np.sqrt(1.0 / (2.0 * esn0)))
