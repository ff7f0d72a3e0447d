"""Slow full-trellis SC/SCL decoders used to check the compiled kernels.

Every path stores the complete (n+1) x N LLR and partial-sum trellis and is
deep-copied on every split. Nothing here is shared with ``_kernels``.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .codec import FROZEN, INFO, PARITY, CodeSpec
from .llr import QuantScheme, f_array, g_array


@dataclass
class DecoderPath:
    """One list-decoder path.

    ``llr_workspace[t]`` is the length-N LLR row of trellis stage t (stage n is
    the channel) and ``partial_sums[t]`` the matching hard-bit row.
    """

    llr_workspace: np.ndarray
    partial_sums: np.ndarray
    decided_bits: np.ndarray
    metric: float = 0.0
    pc_register: int = 0
    history: list = field(default_factory=list)


def _new_path(ch, n, scheme):
    N = 1 << n
    work = np.zeros((n + 1, N), dtype=scheme.dtype)
    work[n] = ch
    return DecoderPath(work, np.zeros((n + 1, N), dtype=np.uint8), np.zeros(N, dtype=np.uint8))


def _llr_of_bit(path: DecoderPath, i, n, scheme):
    """Recompute the trellis nodes on the root-to-leaf branch of bit i."""
    W = path.llr_workspace
    for t in range(n - 1, -1, -1):
        h = 1 << t
        start = (i >> (t + 1)) << (t + 1)
        top = W[t + 1, start:start + h]
        bot = W[t + 1, start + h:start + 2 * h]
        if (i >> t) & 1:
            W[t, start + h:start + 2 * h] = g_array(bot, top, path.partial_sums[t, start:start + h], scheme)
        else:
            W[t, start:start + h] = f_array(top, bot, scheme)
    return W[0, i]


def _propagate_bits(path: DecoderPath, i, n):
    """Write u_i into stage 0 and re-encode every node that it completes."""
    S = path.partial_sums
    S[0, i] = path.decided_bits[i]
    for t in range(n):
        if not (i >> t) & 1:
            break
        h = 1 << t
        start = (i >> (t + 1)) << (t + 1)
        S[t + 1, start:start + h] = S[t, start:start + h] ^ S[t, start + h:start + 2 * h]
        S[t + 1, start + h:start + 2 * h] = S[t, start + h:start + 2 * h]


def _rotate(reg):
    return (reg >> 1) | ((reg & 1) << 4)


def reference_sc(ch, spec: CodeSpec, scheme: QuantScheme) -> np.ndarray:
    n = spec.n_stages
    path = _new_path(np.asarray(ch), n, scheme)
    types = spec.bit_types
    for i in range(spec.mother_length):
        llr = _llr_of_bit(path, i, n, scheme)
        path.pc_register = _rotate(path.pc_register)
        if types[i] == FROZEN:
            b = 0
        elif types[i] == INFO:
            b = int(llr < 0)
        else:
            b = path.pc_register & 1
        if types[i] != FROZEN:
            path.pc_register ^= b
        path.decided_bits[i] = b
        _propagate_bits(path, i, n)
    return path.decided_bits


def reference_scl(ch, spec: CodeSpec, scheme: QuantScheme, L: int,
                  pc_penalty: bool = False) -> list:
    """Return surviving paths in candidate order (not sorted by metric)."""
    n = spec.n_stages
    paths = [_new_path(np.asarray(ch), n, scheme)]
    types = spec.bit_types
    for i in range(spec.mother_length):
        llrs = []
        for p in paths:
            llrs.append(_llr_of_bit(p, i, n, scheme))
            p.pc_register = _rotate(p.pc_register)
        if types[i] != INFO:
            for p, a in zip(paths, llrs):
                hard = int(a < 0)
                b = 0 if types[i] == FROZEN else p.pc_register & 1
                if types[i] == PARITY:
                    p.pc_register ^= b
                if b != hard and (types[i] == FROZEN or pc_penalty):
                    p.metric += abs(a)
                p.decided_bits[i] = b
                _propagate_bits(p, i, n)
            continue
        cands = []
        for idx, (p, a) in enumerate(zip(paths, llrs)):
            hard = int(a < 0)
            for b in (0, 1):
                cands.append((p.metric + (abs(a) if b != hard else 0), 2 * idx + b, p, b))
        kept = sorted(cands, key=lambda c: (c[0], c[1]))[:L]
        kept.sort(key=lambda c: c[1])
        new_paths = []
        for metric, _, parent, b in kept:
            child = copy.deepcopy(parent)
            child.metric = metric
            child.decided_bits[i] = b
            child.pc_register ^= b
            _propagate_bits(child, i, n)
            new_paths.append(child)
        paths = new_paths
    return paths


def replay_metric(ch, u, spec: CodeSpec, scheme: QuantScheme, pc_penalty: bool = False):
    """Recompute a path metric from its decided bits and the channel LLRs."""
    n = spec.n_stages
    path = _new_path(np.asarray(ch), n, scheme)
    types = spec.bit_types
    pm = 0.0
    for i in range(spec.mother_length):
        a = _llr_of_bit(path, i, n, scheme)
        b = int(u[i])
        if b != int(a < 0) and (types[i] != PARITY or pc_penalty):
            pm += abs(a)
        path.decided_bits[i] = b
        _propagate_bits(path, i, n)
    return pm
