"""Polar code construction, pre-coding and encoding.

The transmit chain for one frame is::

    payload -> attach_crc -> insert_pc_and_map -> polar_encode -> rate_match

Two construction profiles are available. ``"nr"`` follows the 3GPP NR
procedure (reliability sequence, sub-block interleaver, circular-buffer rate
matching, PC bit placement and the optional distributed-CRC interleaver).
``"explicit"`` takes a caller-supplied reliability order, most reliable first,
and appends the CRC at the end of the information bits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import nr_tables
from .llr import QuantScheme

CRC_LENGTHS = (0, 6, 11, 16, 24)
RATE_MATCHING_MODES = ("none", "puncturing", "shortening", "repetition")

FROZEN, INFO, PARITY = 0, 1, 2


class CodeSpecError(ValueError):
    pass


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CodeSpec:
    """Immutable description of one polar code instance.

    ``info_set`` holds the sub-channels carrying payload and CRC bits in index
    order; ``pc_set`` holds the parity-check sub-channels; everything else is
    frozen to zero.
    """

    mother_length: int
    info_count: int
    crc_length: int
    crc_polynomial: tuple
    pc_count: int
    frozen_set: tuple
    info_set: tuple
    pc_set: tuple
    rate_matching: str = "none"
    transmit_length: int = 0
    profile: str = "explicit"
    crc_interleave: bool = False

    def __post_init__(self):
        N = self.mother_length
        if not _is_pow2(N) or N < 2:
            raise CodeSpecError(f"mother length {N} is not a power of two")
        if self.transmit_length == 0:
            object.__setattr__(self, "transmit_length", N)
        for name in ("frozen_set", "info_set", "pc_set"):
            object.__setattr__(self, name, tuple(sorted(int(i) for i in getattr(self, name))))
        object.__setattr__(self, "crc_polynomial", tuple(int(b) for b in self.crc_polynomial))
        if self.crc_length not in CRC_LENGTHS:
            raise CodeSpecError(f"unsupported CRC length {self.crc_length}")
        if self.crc_length and len(self.crc_polynomial) != self.crc_length + 1:
            raise CodeSpecError("CRC polynomial degree does not match crc_length")
        everything = sorted(self.frozen_set + self.info_set + self.pc_set)
        if everything != list(range(N)):
            raise CodeSpecError("frozen/info/pc sets do not partition 0..N-1")
        if len(self.info_set) != self.info_count + self.crc_length:
            raise CodeSpecError("|info_set| must equal K + crc_length")
        if len(self.pc_set) != self.pc_count:
            raise CodeSpecError("|pc_set| must equal pc_count")
        E = self.transmit_length
        rm = self.rate_matching
        if rm not in RATE_MATCHING_MODES:
            raise CodeSpecError(f"unknown rate matching mode {rm!r}")
        if (rm == "none") != (E == N):
            raise CodeSpecError("rate_matching 'none' requires E == N and vice versa")
        if rm in ("puncturing", "shortening") and not E < N:
            raise CodeSpecError(f"{rm} requires E < N")
        if rm == "repetition" and not E > N:
            raise CodeSpecError("repetition requires E > N")
        if rm != "none" and N < 32:
            raise CodeSpecError("rate matching needs N >= 32")
        if self.crc_interleave and self.crc_length + self.info_count > len(nr_tables.CRC_INTERLEAVER_PATTERN):
            raise CodeSpecError("distributed CRC interleaving supports at most 164 bits")

    # -- derived quantities -------------------------------------------------

    @property
    def n_stages(self) -> int:
        return self.mother_length.bit_length() - 1

    @property
    def code_rate(self) -> Fraction:
        return Fraction(self.info_count, self.transmit_length)

    @property
    def crc_payload_length(self) -> int:
        return self.info_count + self.crc_length

    @cached_property
    def bit_types(self) -> np.ndarray:
        t = np.zeros(self.mother_length, dtype=np.int8)
        t[list(self.info_set)] = INFO
        t[list(self.pc_set)] = PARITY
        return t

    @cached_property
    def info_positions(self) -> np.ndarray:
        return np.asarray(self.info_set, dtype=np.int64)

    @cached_property
    def crc_generator(self) -> np.ndarray:
        """K x crc_length matrix G with crc(p) = p @ G mod 2."""
        K, r = self.info_count, self.crc_length
        G = np.zeros((K, r), dtype=np.uint8)
        for i in range(K):
            e = np.zeros(K, dtype=np.uint8)
            e[i] = 1
            G[i] = crc_remainder(e, self.crc_polynomial)
        return G

    @cached_property
    def crc_check_matrix(self) -> np.ndarray:
        """(K + crc) x crc matrix H; a word w passes iff w @ H == 0 mod 2."""
        return np.concatenate([self.crc_generator, np.eye(self.crc_length, dtype=np.uint8)], axis=0)

    @cached_property
    def interleaver(self) -> np.ndarray | None:
        if not self.crc_interleave:
            return None
        return crc_interleaver_pattern(self.crc_payload_length)

    @cached_property
    def subblock_pattern(self) -> np.ndarray:
        return subblock_interleaver(self.mother_length)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "mother_length": self.mother_length,
            "n_stages": self.n_stages,
            "info_count": self.info_count,
            "crc_length": self.crc_length,
            "crc_polynomial": list(self.crc_polynomial),
            "pc_count": self.pc_count,
            "frozen_set": list(self.frozen_set),
            "info_set": list(self.info_set),
            "pc_set": list(self.pc_set),
            "rate_matching": self.rate_matching,
            "transmit_length": self.transmit_length,
            "code_rate": str(self.code_rate),
            "profile": self.profile,
            "crc_interleave": self.crc_interleave,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        spec = cls(
            mother_length=int(d["mother_length"]),
            info_count=int(d["info_count"]),
            crc_length=int(d["crc_length"]),
            crc_polynomial=tuple(d["crc_polynomial"]),
            pc_count=int(d["pc_count"]),
            frozen_set=tuple(d["frozen_set"]),
            info_set=tuple(d["info_set"]),
            pc_set=tuple(d["pc_set"]),
            rate_matching=d["rate_matching"],
            transmit_length=int(d["transmit_length"]),
            profile=d.get("profile", "explicit"),
            crc_interleave=bool(d.get("crc_interleave", False)),
        )
        if "n_stages" in d and int(d["n_stages"]) != spec.n_stages:
            raise CodeSpecError("n_stages inconsistent with mother_length")
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# construction

def nr_mother_length(K: int, E: int, n_max: int = 10, n_min: int = 5) -> int:
    """Mother code length selection of TS 38.212 5.3.1 (R_min = 1/8)."""
    c = math.ceil(math.log2(E))
    if E <= (9 / 8) * 2 ** (c - 1) and K / E < 9 / 16:
        n1 = c - 1
    else:
        n1 = c
    n2 = math.ceil(math.log2(8 * K))
    return 2 ** max(min(n1, n2, n_max), n_min)


def subblock_interleaver(N: int) -> np.ndarray:
    """J(n): position in the codeword of the n-th bit in the circular buffer."""
    if N < 32:
        raise CodeSpecError("sub-block interleaving needs N >= 32")
    n = np.arange(N)
    i = (32 * n) // N
    return nr_tables.SUBBLOCK_INTERLEAVER_PATTERN[i] * (N // 32) + n % (N // 32)


def crc_interleaver_pattern(K: int) -> np.ndarray:
    """Distributed-CRC interleaver Pi(k) for K <= 164 (c'_k = c_Pi(k))."""
    table = nr_tables.CRC_INTERLEAVER_PATTERN
    k_max = len(table)
    if K > k_max:
        raise CodeSpecError(f"interleaver supports K <= {k_max}")
    return np.array([p - (k_max - K) for p in table if p >= k_max - K], dtype=np.int64)


def _rate_matching_mode(N: int, E: int, k_total: int) -> str:
    if E == N:
        return "none"
    if E > N:
        return "repetition"
    return "puncturing" if k_total / E <= 7 / 16 else "shortening"


def _prefrozen(N: int, E: int, mode: str) -> set:
    """Sub-channels frozen because of puncturing/shortening (Q_F,tmp)."""
    if mode in ("none", "repetition"):
        return set()
    J = subblock_interleaver(N)
    if mode == "puncturing":
        frozen = set(J[: N - E].tolist())
        if E >= 3 * N / 4:
            limit = math.ceil(3 * N / 4 - E / 2)
        else:
            limit = math.ceil(9 * N / 16 - E / 4)
        frozen.update(range(limit))
        return frozen
    return set(J[E:].tolist())


def row_weight(i: int) -> int:
    return 1 << bin(i).count("1")


def build_code_spec(profile: str, N: int | None, K: int, E: int | None = None,
                    crc_length: int = 0, pc_count: int = 0, *,
                    reliability_order=None, rate_matching: str | None = None,
                    crc_polynomial=None, crc_interleave: bool | None = None,
                    pc_wm: int | None = None, n_max: int = 10) -> CodeSpec:
    """Build a :class:`CodeSpec`.

    Parameters
    ----------
    profile : {"nr", "explicit"}
    N : int or None
        Mother code length. ``None`` selects it with the NR rule (``nr`` only).
    K : int
        Payload bits, excluding CRC and PC bits.
    E : int or None
        Transmitted bits after rate matching; defaults to ``N``.
    reliability_order : sequence of int
        ``explicit`` profile only: sub-channel indices, most reliable first.
    rate_matching : str, optional
        Forces a mode; by default it follows the NR rule from (N, E, K + crc).
    crc_interleave : bool, optional
        NR distributed CRC. Defaults to on for ``nr`` when a 24-bit CRC is used
        and K + 24 <= 164.
    pc_wm : int, optional
        Number of PC bits placed on minimum-row-weight sub-channels. Defaults to
        the NR rule (1 if E - K - crc + 3 > 192, else 0) for ``nr``, 0 otherwise.
    """
    if profile not in ("nr", "explicit"):
        raise CodeSpecError(f"unknown profile {profile!r}")
    if crc_length not in CRC_LENGTHS:
        raise CodeSpecError(f"unsupported CRC length {crc_length}")
    k_total = K + crc_length
    if N is None:
        if profile != "nr" or E is None:
            raise CodeSpecError("N may only be derived under the nr profile with E given")
        N = nr_mother_length(k_total, E, n_max=n_max)
    if not _is_pow2(N) or N < 2 or N > 1024:
        raise CodeSpecError(f"mother length {N} must be a power of two in [2, 1024]")
    if E is None:
        E = N
    if K < 1:
        raise CodeSpecError("K must be positive")
    if k_total + pc_count > N:
        raise CodeSpecError(f"K + crc + pc = {k_total + pc_count} exceeds N = {N}")
    if k_total > E:
        raise CodeSpecError(f"K + crc = {k_total} exceeds E = {E}")

    auto_mode = _rate_matching_mode(N, E, k_total)
    mode = auto_mode if rate_matching is None else rate_matching
    if mode not in RATE_MATCHING_MODES:
        raise CodeSpecError(f"unknown rate matching mode {mode!r}")
    if (mode == "none") != (E == N) or (mode == "repetition") != (E > N):
        raise CodeSpecError(f"E = {E} incompatible with N = {N} for mode {mode!r}")
    if mode != "none" and N < 32:
        raise CodeSpecError("rate matching needs N >= 32")

    if profile == "nr":
        if reliability_order is not None:
            raise CodeSpecError("the nr profile uses the NR reliability sequence")
        seq = nr_tables.RELIABILITY_SEQUENCE
        ascending = seq[seq < N].tolist()
    else:
        if reliability_order is None:
            raise CodeSpecError("the explicit profile needs a reliability order")
        order = [int(i) for i in reliability_order]
        if sorted(order) != list(range(N)):
            raise CodeSpecError("reliability order must be a permutation of 0..N-1")
        ascending = order[::-1]

    blocked = _prefrozen(N, E, mode)
    candidates = [i for i in ascending if i not in blocked]
    n_sel = k_total + pc_count
    if n_sel > len(candidates):
        raise CodeSpecError("not enough usable sub-channels after rate matching")
    selected = candidates[len(candidates) - n_sel:]  # ascending reliability

    if pc_wm is None:
        pc_wm = 1 if (profile == "nr" and pc_count > 0 and E - k_total + 3 > 192) else 0
    pc_wm = min(pc_wm, pc_count)
    pc_positions = list(selected[: pc_count - pc_wm])
    if pc_wm:
        most_reliable = selected[pc_count:]
        min_w = min(row_weight(i) for i in most_reliable)
        low_weight = [i for i in most_reliable if row_weight(i) == min_w]
        pc_positions += low_weight[::-1][:pc_wm]  # highest reliability first
    info_positions = [i for i in selected if i not in set(pc_positions)]
    frozen_positions = sorted(set(range(N)) - set(selected))

    if crc_polynomial is None:
        crc_polynomial = (tuple(nr_tables.crc_polynomial_bits(nr_tables.DEFAULT_CRC[crc_length]))
                          if crc_length else ())
    if crc_interleave is None:
        crc_interleave = profile == "nr" and crc_length == 24 and k_total <= len(
            nr_tables.CRC_INTERLEAVER_PATTERN)

    return CodeSpec(
        mother_length=N, info_count=K, crc_length=crc_length,
        crc_polynomial=tuple(int(b) for b in crc_polynomial), pc_count=pc_count,
        frozen_set=tuple(frozen_positions), info_set=tuple(info_positions),
        pc_set=tuple(pc_positions), rate_matching=mode, transmit_length=E,
        profile=profile, crc_interleave=bool(crc_interleave),
    )


# ---------------------------------------------------------------------------
# CRC

def crc_remainder(bits, polynomial) -> np.ndarray:
    """Remainder of bits(D) * D^r divided by the generator, MSB first."""
    poly = np.asarray(polynomial, dtype=np.uint8)
    r = len(poly) - 1
    if r <= 0:
        return np.zeros(0, dtype=np.uint8)
    reg = np.concatenate([np.asarray(bits, dtype=np.uint8) & 1, np.zeros(r, dtype=np.uint8)])
    for i in range(len(reg) - r):
        if reg[i]:
            reg[i:i + r + 1] ^= poly
    return reg[-r:].copy()


def _gf2_matmul(a, b):
    # float32 goes through BLAS and is exact while row sums stay below 2**24
    prod = a.astype(np.float32) @ b.astype(np.float32)
    return (prod.astype(np.int64) & 1).astype(np.uint8)


def attach_crc(payload, spec: CodeSpec) -> np.ndarray:
    """Return payload || CRC; works on a single frame or a (..., K) batch."""
    p = np.asarray(payload, dtype=np.uint8)
    if p.shape[-1] != spec.info_count:
        raise CodeSpecError(f"payload length {p.shape[-1]} != K = {spec.info_count}")
    if not spec.crc_length:
        return p.copy()
    crc = _gf2_matmul(p, spec.crc_generator)
    return np.concatenate([p, crc.astype(np.uint8)], axis=-1)


def check_crc(word, spec: CodeSpec):
    """True where payload||CRC passes; vectorized over leading axes."""
    w = np.asarray(word, dtype=np.uint8)
    if not spec.crc_length:
        return np.ones(w.shape[:-1], dtype=bool) if w.ndim > 1 else True
    syndrome = _gf2_matmul(w, spec.crc_check_matrix)
    ok = ~syndrome.any(axis=-1)
    return ok if w.ndim > 1 else bool(ok)


# ---------------------------------------------------------------------------
# PC bits and u-domain mapping

def pc_parity_bits(u, spec: CodeSpec):
    """Fill the PC positions of a u-vector in place with the 5-bit cyclic register."""
    y = [0, 0, 0, 0, 0]
    types = spec.bit_types
    for n in range(spec.mother_length):
        y = y[1:] + y[:1]
        t = types[n]
        if t == PARITY:
            u[n] = y[0]
        if t != FROZEN:
            y[0] ^= int(u[n])
    return u


def insert_pc_and_map(crc_payload, spec: CodeSpec) -> np.ndarray:
    """Scatter payload||CRC onto the info set and compute the PC bits.

    Accepts a single word or a (..., K + crc) batch.
    """
    w = np.asarray(crc_payload, dtype=np.uint8)
    if w.shape[-1] != spec.crc_payload_length:
        raise CodeSpecError("crc_payload length must be K + crc_length")
    if spec.interleaver is not None:
        w = w[..., spec.interleaver]
    u = np.zeros(w.shape[:-1] + (spec.mother_length,), dtype=np.uint8)
    u[..., spec.info_positions] = w
    if spec.pc_count:
        flat = u.reshape(-1, spec.mother_length)
        for row in flat:
            pc_parity_bits(row, spec)
    return u


def extract_payload(u, spec: CodeSpec) -> np.ndarray:
    """Inverse of :func:`insert_pc_and_map`: u-vector(s) -> payload||CRC."""
    u = np.asarray(u, dtype=np.uint8)
    w = u[..., spec.info_positions]
    if spec.interleaver is not None:
        out = np.empty_like(w)
        out[..., spec.interleaver] = w
        w = out
    return w


# ---------------------------------------------------------------------------
# encoders

def polar_encode(u) -> np.ndarray:
    """c = u F^{(x)n} over GF(2); batched over leading axes."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    if not _is_pow2(N):
        raise CodeSpecError(f"length {N} is not a power of two")
    lead = x.shape[:-1]
    half = 1
    while half < N:
        v = x.reshape(lead + (N // (2 * half), 2, half))
        v[..., 0, :] ^= v[..., 1, :]
        half *= 2
    return x


SEGMENT = 32


def _segment_rows() -> np.ndarray:
    # row masks of F^{(x)5}: bit j of row i is set iff (j & i) == j
    rows = np.zeros(SEGMENT, dtype=np.uint64)
    for i in range(SEGMENT):
        m = 0
        for j in range(SEGMENT):
            if (j & i) == j:
                m |= 1 << j
        rows[i] = m
    return rows


_SEGMENT_ROWS = _segment_rows()


def polar_encode_segmented(u) -> np.ndarray:
    """Polar encoder built from length-32 sub-encoders and cross-block XOR.

    Each 32-bit block is packed into one word and encoded by the short code;
    the N/32 encoded words are then combined by a word-level butterfly, which
    is the block-level Kronecker factor of the transform.
    """
    u = np.asarray(u, dtype=np.uint8)
    N = u.shape[-1]
    if not _is_pow2(N) or N < SEGMENT:
        raise CodeSpecError("segmented encoding needs a power of two N >= 32")
    lead = u.shape[:-1]
    blocks = u.reshape(lead + (N // SEGMENT, SEGMENT)).astype(np.uint64)
    words = np.zeros(lead + (N // SEGMENT,), dtype=np.uint64)
    for i in range(SEGMENT):
        words ^= blocks[..., i] * _SEGMENT_ROWS[i]
    nb = N // SEGMENT
    half = 1
    while half < nb:
        v = words.reshape(lead + (nb // (2 * half), 2, half))
        v[..., 0, :] ^= v[..., 1, :]
        half *= 2
    shifts = np.arange(SEGMENT, dtype=np.uint64)
    bits = (words[..., None] >> shifts) & np.uint64(1)
    return bits.reshape(lead + (N,)).astype(np.uint8)


def encode_frame(payload, spec: CodeSpec) -> "Frame":
    w = attach_crc(payload, spec)
    u = insert_pc_and_map(w, spec)
    c = polar_encode(u)
    return Frame(np.asarray(payload, dtype=np.uint8), u, c, rate_match(c, spec))


@dataclass
class Frame:
    payload: np.ndarray
    precoded: np.ndarray
    codeword: np.ndarray
    transmitted: np.ndarray = field(default=None)


# ---------------------------------------------------------------------------
# rate matching

def rate_match(c, spec: CodeSpec) -> np.ndarray:
    """Circular-buffer bit selection; batched over leading axes."""
    c = np.asarray(c, dtype=np.uint8)
    N, E = spec.mother_length, spec.transmit_length
    if c.shape[-1] != N:
        raise CodeSpecError("codeword length must equal N")
    if spec.rate_matching == "none":
        return c.copy()
    y = c[..., spec.subblock_pattern]
    if spec.rate_matching == "repetition":
        return y[..., np.arange(E) % N]
    if spec.rate_matching == "puncturing":
        return y[..., N - E:]
    return y[..., :E]


def rate_dematch(llrs, spec: CodeSpec, scheme: QuantScheme) -> np.ndarray:
    """Receiver inverse of :func:`rate_match` on quantized LLRs.

    Punctured bits become erasures (0), shortened bits the most confident
    value for a zero, and repeated copies are combined by saturating addition.
    """
    e = np.asarray(llrs)
    N, E = spec.mother_length, spec.transmit_length
    if e.shape[-1] != E:
        raise CodeSpecError(f"expected {E} LLRs, got {e.shape[-1]}")
    dt = scheme.dtype
    if spec.rate_matching == "none":
        return e.astype(dt, copy=True)
    lead = e.shape[:-1]
    if spec.rate_matching == "repetition":
        acc = np.zeros(lead + (N,), dtype=np.float64)
        for start in range(0, E, N):
            seg = e[..., start:start + N].astype(np.float64)
            acc[..., : seg.shape[-1]] += seg
            acc = scheme.saturate(acc)
        y = acc.astype(dt)
    elif spec.rate_matching == "puncturing":
        y = np.zeros(lead + (N,), dtype=dt)
        y[..., N - E:] = e
    else:
        y = np.full(lead + (N,), scheme.confident_raw, dtype=dt)
        y[..., :E] = e
    out = np.empty_like(y)
    out[..., spec.subblock_pattern] = y
    return out
