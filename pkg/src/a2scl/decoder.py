"""SC, SCL and adaptive (SC first, SCL on CRC failure) decoding.

Decoders take dematched channel LLRs of length N in the raw units of a
:class:`~a2scl.llr.QuantScheme`. :func:`prepare_llrs` turns analog channel
LLRs of length E into that form; :func:`adaptive_decode` does this twice,
once per scheme, so the SC and SCL cores can use different quantization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .codec import FROZEN, INFO, CodeSpec, check_crc, extract_payload, rate_dematch
from .llr import QuantScheme, quantize_array
from .reference import DecoderPath

MAX_LIST_SIZE = 8
SELECTIONS = ("crc_aided", "pc_only", "pc_and_crc")
STATUSES = ("sc_pass", "scl_pass", "scl_best_effort", "fail")


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder settings for one campaign.

    ``platform_limit`` enforces the hardware maximum list size of 8; turn it
    off only for analysis runs such as exhaustive-list checks.
    """

    list_size: int = 8
    sc_scheme: QuantScheme = field(default_factory=lambda: QuantScheme(8))
    scl_scheme: QuantScheme = field(default_factory=lambda: QuantScheme(12))
    selection: str = "crc_aided"
    pc_penalty: bool = False
    platform_limit: bool = True

    def __post_init__(self):
        L = self.list_size
        if L < 1 or L & (L - 1):
            raise ValueError(f"list size {L} is not a power of two")
        if self.platform_limit and L > MAX_LIST_SIZE:
            raise ValueError(f"list size {L} exceeds the supported maximum {MAX_LIST_SIZE}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown selection rule {self.selection!r}")

    def to_dict(self) -> dict:
        return {
            "list_size": self.list_size,
            "sc_scheme": self.sc_scheme.to_dict(),
            "scl_scheme": self.scl_scheme.to_dict(),
            "selection": self.selection,
            "pc_penalty": self.pc_penalty,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecoderConfig":
        return cls(
            list_size=int(d.get("list_size", 8)),
            sc_scheme=QuantScheme.from_dict(d.get("sc_scheme", {"total_bits": 8})),
            scl_scheme=QuantScheme.from_dict(d.get("scl_scheme", {"total_bits": 12})),
            selection=d.get("selection", "crc_aided"),
            pc_penalty=bool(d.get("pc_penalty", False)),
        )


@dataclass
class DecodeOutcome:
    payload: np.ndarray
    status: str
    selected_path_rank: int = 0
    sc_crc_passed: bool = False
    u: np.ndarray | None = None
    paths: list | None = None
    trace: str | None = None

    @property
    def decoded_ok(self) -> bool:
        """Whether the decoder claims success (not whether the payload is right)."""
        return self.status in ("sc_pass", "scl_pass")


@lru_cache(maxsize=None)
def _layout(n: int):
    _, size = _kernels.stage_offsets(n)
    return _kernels.llr_schedule(n) + (size,)


def _bounds(scheme: QuantScheme):
    if scheme.is_float:
        return -np.inf, np.inf
    return np.int64(scheme.min_raw), np.int64(scheme.max_raw)


def _check_input(ch, spec: CodeSpec, scheme: QuantScheme) -> np.ndarray:
    ch = np.asarray(ch)
    if ch.shape[-1] != spec.mother_length:
        raise ValueError(f"expected {spec.mother_length} LLRs, got {ch.shape[-1]}")
    if not scheme.is_float:
        if not np.issubdtype(ch.dtype, np.integer):
            raise ValueError(f"{scheme} expects integer raw LLRs")
        if ch.size and (ch.min() < scheme.min_raw or ch.max() > scheme.max_raw):
            raise ValueError(f"LLRs outside the range of {scheme}")
    return np.ascontiguousarray(ch, dtype=scheme.dtype)


def _types(spec: CodeSpec) -> np.ndarray:
    return np.ascontiguousarray(spec.bit_types, dtype=np.int8)


def prepare_llrs(analog, spec: CodeSpec, scheme: QuantScheme) -> np.ndarray:
    """Quantize analog channel LLRs (length E) and undo rate matching."""
    return rate_dematch(quantize_array(analog, scheme), spec, scheme)


def _payload_and_crc(u, spec: CodeSpec):
    w = extract_payload(u, spec)
    return w[..., : spec.info_count], check_crc(w, spec)


def sc_decode_batch(ch2d, spec: CodeSpec, scheme: QuantScheme):
    """SC-decode a (B, N) batch. Returns (u, payload, crc_ok)."""
    ch2d = _check_input(np.atleast_2d(ch2d), spec, scheme)
    lo, hi = _bounds(scheme)
    u = _kernels.sc_batch(ch2d, _types(spec), lo, hi, spec.n_stages, *_layout(spec.n_stages))
    payload, ok = _payload_and_crc(u, spec)
    return u, payload, np.atleast_1d(ok)


def sc_decode(channel_llrs, spec: CodeSpec, scheme: QuantScheme) -> DecodeOutcome:
    u, payload, ok = sc_decode_batch(channel_llrs, spec, scheme)
    passed = bool(ok[0])
    return DecodeOutcome(payload[0], "sc_pass" if passed else "fail", 0, passed, u[0])


def _format_trace(spec, tr_pm, tr_parent, tr_bit) -> str:
    names = {FROZEN: "frozen", INFO: "info", 2: "pc"}
    lines = []
    for i in range(spec.mother_length):
        alive = np.flatnonzero(tr_parent[i] >= 0)
        cells = " ".join(f"{p}<{tr_parent[i, p]}:{tr_bit[i, p]}:{tr_pm[i, p]:g}" for p in alive)
        lines.append(f"u{i} {names[int(spec.bit_types[i])]} {cells}")
    return "\n".join(lines)


def scl_decode(channel_llrs, spec: CodeSpec, config: DecoderConfig,
               scheme: QuantScheme | None = None, trace: bool = False) -> DecodeOutcome:
    """List decoding with CRC-aided selection.

    ``channel_llrs`` must be in ``config.scl_scheme`` unless ``scheme`` is given.
    With ``trace=True`` the outcome carries a per-bit text dump: for every
    surviving path ``new<parent:bit:metric``.
    """
    scheme = config.scl_scheme if scheme is None else scheme
    ch = _check_input(channel_llrs, spec, scheme)
    L = config.list_size
    N = spec.mother_length
    lo, hi = _bounds(scheme)
    if trace:
        tr_pm = np.zeros((N, L))
        tr_parent = np.full((N, L), -1, dtype=np.int64)
        tr_bit = np.zeros((N, L), dtype=np.uint8)
    else:
        tr_pm = np.zeros((1, 1))
        tr_parent = np.zeros((1, 1), dtype=np.int64)
        tr_bit = np.zeros((1, 1), dtype=np.uint8)
    slots, count, u, pm, reg = _kernels.scl_kernel(
        ch, _types(spec), L, lo, hi, config.pc_penalty, spec.n_stages, *_layout(spec.n_stages),
        trace, tr_pm, tr_parent, tr_bit)
    slots = slots[:count]
    order = sorted(range(count), key=lambda p: (pm[slots[p]], p))
    ranked = slots[order]
    words = extract_payload(u[ranked], spec)
    crc_ok = np.atleast_1d(check_crc(words, spec))
    use_crc = config.selection != "pc_only" and spec.crc_length > 0
    rank, status = 0, "scl_pass"
    if use_crc:
        hits = np.flatnonzero(crc_ok)
        if hits.size:
            rank = int(hits[0])
        else:
            status = "scl_best_effort"
    paths = [DecoderPath(llr_workspace=None, partial_sums=None, decided_bits=u[s].copy(),
                         metric=float(pm[s]), pc_register=int(reg[s])) for s in ranked]
    text = _format_trace(spec, tr_pm, tr_parent, tr_bit) if trace else None
    return DecodeOutcome(words[rank, : spec.info_count].copy(), status, rank, False,
                         u[ranked[rank]].copy(), paths, text)


def adaptive_decode(analog_llrs, spec: CodeSpec, config: DecoderConfig) -> DecodeOutcome:
    """SC first; if its CRC fails, SCL with list size L on the same frame.

    ``analog_llrs`` are the unquantized channel LLRs (length E). They are
    quantized separately for the SC and the SCL core.
    """
    sc = sc_decode(prepare_llrs(analog_llrs, spec, config.sc_scheme), spec, config.sc_scheme)
    if sc.sc_crc_passed:
        return sc
    out = scl_decode(prepare_llrs(analog_llrs, spec, config.scl_scheme), spec, config)
    out.sc_crc_passed = False
    return out
