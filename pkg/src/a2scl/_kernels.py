"""Compiled SC / SCL decoding kernels.

LLR memory keeps only every second stage of the trellis (stages n, n-2, ...,
down to 1 or 2). Stage 0 is never stored: each bit LLR is produced on demand
from the lowest stored stage. A stored stage is computed directly from the stored stage two levels above
with a radix-4 step, recomputing the skipped stage on the fly with the same
saturating arithmetic, so results are bit-identical to a full-trellis decoder.

Per path, ``buf`` holds the channel LLRs at ``[0, N)`` followed by the stored
stages; ``beta`` holds the encoded left-sibling bits of every stage t < n at
offset ``2**t - 1``.

The kernels are generic over the LLR dtype: int32 arrays with integer clamp
bounds give the fixed-point datapath, float64 arrays with infinite bounds the
float reference.
"""
import numpy as np
from numba import njit

FROZEN, INFO, PARITY = 0, 1, 2


def stage_offsets(n: int):
    """Offsets of the stored stages inside a path buffer (-1: not stored)."""
    N = 1 << n
    off = np.full(n + 1, -1, dtype=np.int64)
    off[n] = 0
    pos = N
    t = n - 2
    while t >= 1:
        off[t] = pos
        pos += 1 << t
        t -= 2
    return off, pos


def llr_schedule(n: int):
    """Radix-4 steps needed before each bit, flattened.

    Returns ``(sched, ops, base, odd)``: the steps for bit i are rows
    ``sched[i]:sched[i+1]`` of ``ops``, each ``(src, dst, m, quarter, b0, b1)``.
    ``base`` is the offset of the stage the bit LLR is read from (stage 1 for
    odd n, stage 2 otherwise). A precomputed flat list runs much faster than
    deriving the steps inside the bit loop.
    """
    off, _ = stage_offsets(n)
    N = 1 << n
    sched = np.zeros(N + 1, dtype=np.int64)
    ops = []
    for i in range(N):
        s = n - 1 if i == 0 else (i & -i).bit_length() - 1
        t = s if (n - s) % 2 == 0 else s - 1
        # stage 0 (even n) is handled by scalar code in _bit_llr
        while t >= 1:
            m = 1 << t
            ops.append((off[t + 2], off[t], m, (i >> t) & 3, m - 1, 2 * m - 1))
            t -= 2
        sched[i + 1] = len(ops)
    ops = np.asarray(ops, dtype=np.int64).reshape(-1, 6)
    odd = n % 2 == 1
    return sched, ops, int(off[1] if odd else off[2]), odd


@njit(cache=True, inline="always")
def _f(a, b, hi):
    aa = abs(a)
    ab = abs(b)
    m = aa if aa < ab else ab
    # only min(-2^(w-1), -2^(w-1)) can overflow, to +2^(w-1)
    if (a < 0) == (b < 0):
        return m if m < hi else hi
    return -m


@njit(cache=True, inline="always")
def _g(a, b, ps, lo, hi):
    r = a - b if ps else a + b
    r = r if r < hi else hi
    return r if r > lo else lo


@njit(cache=True, inline="always")
def _ctz(i):
    c = 0
    while (i & 1) == 0:
        i >>= 1
        c += 1
    return c


@njit(cache=True, inline="always")
def _radix4(buf, so, do, m, q, beta, b0, b1, lo, hi):
    # one loop with the quarter test inside: numba emits a large fixed setup
    # cost per loop, which dominates the many short (small m) calls
    for j in range(m):
        if q == 0:
            buf[do + j] = _f(_f(buf[so + j], buf[so + j + 2 * m], hi),
                             _f(buf[so + j + m], buf[so + j + 3 * m], hi), hi)
        elif q == 1:
            buf[do + j] = _g(_f(buf[so + j + m], buf[so + j + 3 * m], hi),
                             _f(buf[so + j], buf[so + j + 2 * m], hi), beta[b0 + j], lo, hi)
        else:
            blo = _g(buf[so + j + 2 * m], buf[so + j], beta[b1 + j], lo, hi)
            bhi = _g(buf[so + j + 3 * m], buf[so + j + m], beta[b1 + j + m], lo, hi)
            if q == 2:
                buf[do + j] = _f(blo, bhi, hi)
            else:
                buf[do + j] = _g(bhi, blo, beta[b0 + j], lo, hi)


@njit(cache=True, inline="always")
def _bit_llr(i, buf, beta, sched, ops, base, odd, lo, hi):
    """Refresh the stored stages for bit i and return its stage-0 LLR."""
    for k in range(sched[i], sched[i + 1]):
        _radix4(buf, ops[k, 0], ops[k, 1], ops[k, 2], ops[k, 3], beta, ops[k, 4], ops[k, 5], lo, hi)
    if odd:
        if i & 1:
            return _g(buf[base + 1], buf[base], beta[0], lo, hi)
        return _f(buf[base], buf[base + 1], hi)
    # stage 0 is consumed at once, so it is computed from stage 2 and not stored
    a0 = buf[base]
    a1 = buf[base + 1]
    a2 = buf[base + 2]
    a3 = buf[base + 3]
    q = i & 3
    if q < 2:
        x = _f(a0, a2, hi)
        y = _f(a1, a3, hi)
        if q == 0:
            return _f(x, y, hi)
        return _g(y, x, beta[0], lo, hi)
    blo = _g(a2, a0, beta[1], lo, hi)
    bhi = _g(a3, a1, beta[2], lo, hi)
    if q == 2:
        return _f(blo, bhi, hi)
    return _g(bhi, blo, beta[0], lo, hi)


@njit(cache=True, inline="always")
def _update_beta(i, n, bit, beta):
    """Fold decided bit u_i into the partial-sum memory."""
    k = 0
    x = i
    while x & 1:
        x >>= 1
        k += 1
    if k >= n:
        return
    m = 1 << k
    d = m - 1
    beta[d + m - 1] = bit
    for t in range(k):
        h = 1 << t
        src = (1 << t) - 1
        base = d + m - 2 * h
        for j in range(h):
            beta[base + j] = beta[src + j] ^ beta[base + h + j]


@njit(cache=True, inline="always")
def _rotate(reg):
    return (reg >> 1) | ((reg & 1) << 4)


@njit(cache=True)
def sc_kernel(ch, types, lo, hi, n, sched, ops, base, odd, buf, beta, u, llr_out):
    N = 1 << n
    for j in range(N):
        buf[j] = ch[j]
    reg = 0
    for i in range(N):
        llr = _bit_llr(i, buf, beta, sched, ops, base, odd, lo, hi)
        llr_out[i] = llr
        reg = _rotate(reg)
        t = types[i]
        if t == FROZEN:
            b = 0
        elif t == INFO:
            b = 1 if llr < 0 else 0
        else:
            b = reg & 1
        if t != FROZEN:
            reg ^= b
        u[i] = b
        _update_beta(i, n, b, beta)


@njit(cache=True)
def sc_batch(ch2d, types, lo, hi, n, sched, ops, base, odd, size):
    B = ch2d.shape[0]
    N = 1 << n
    buf = np.zeros(size, dtype=ch2d.dtype)
    beta = np.zeros(N, dtype=np.uint8)
    llr = np.zeros(N, dtype=ch2d.dtype)
    out = np.zeros((B, N), dtype=np.uint8)
    for b in range(B):
        sc_kernel(ch2d[b], types, lo, hi, n, sched, ops, base, odd, buf, beta, out[b], llr)
    return out


@njit(cache=True)
def scl_kernel(ch, types, L, lo, hi, pc_penalty, n, sched, ops, base, odd, size,
               trace, tr_pm, tr_parent, tr_bit):
    """List decoding of one frame.

    Returns (slots, count, u, pm, reg): the first ``count`` entries of
    ``slots`` are the surviving path slots in candidate order.
    """
    N = 1 << n
    buf = np.zeros((L, size), dtype=ch.dtype)
    beta = np.zeros((L, N), dtype=np.uint8)
    u = np.zeros((L, N), dtype=np.uint8)
    pm = np.zeros(L, dtype=np.float64)
    reg = np.zeros(L, dtype=np.int64)
    slots = np.zeros(L, dtype=np.int64)
    new_slots = np.zeros(L, dtype=np.int64)
    new_bits = np.zeros(L, dtype=np.uint8)
    llrs = np.zeros(L, dtype=np.float64)
    cpm = np.zeros(2 * L, dtype=np.float64)
    keep = np.zeros(2 * L, dtype=np.uint8)
    in_use = np.zeros(L, dtype=np.uint8)
    free = np.zeros(L, dtype=np.int64)

    for s in range(L):
        buf[s, :N] = ch
    slots[0] = 0
    count = 1

    for i in range(N):
        for p in range(count):
            s = slots[p]
            llrs[p] = _bit_llr(i, buf[s], beta[s], sched, ops, base, odd, lo, hi)
            reg[s] = _rotate(reg[s])
        t = types[i]
        if t != INFO:
            for p in range(count):
                s = slots[p]
                a = llrs[p]
                hard = 1 if a < 0 else 0
                if t == FROZEN:
                    b = 0
                    if hard:
                        pm[s] += abs(a)
                else:
                    b = reg[s] & 1
                    reg[s] ^= b
                    if pc_penalty and b != hard:
                        pm[s] += abs(a)
                u[s, i] = b
                _update_beta(i, n, b, beta[s])
                if trace:
                    tr_pm[i, p] = pm[s]
                    tr_parent[i, p] = p
                    tr_bit[i, p] = b
            continue

        nc = 2 * count
        for p in range(count):
            s = slots[p]
            a = llrs[p]
            pen = abs(a)
            if a < 0:
                cpm[2 * p] = pm[s] + pen
                cpm[2 * p + 1] = pm[s]
            else:
                cpm[2 * p] = pm[s]
                cpm[2 * p + 1] = pm[s] + pen
        if nc <= L:
            for c in range(nc):
                keep[c] = 1
        else:
            for c in range(nc):
                r = 0
                for c2 in range(nc):
                    if cpm[c2] < cpm[c] or (cpm[c2] == cpm[c] and c2 < c):
                        r += 1
                keep[c] = 1 if r < L else 0

        # free slots: unused ones plus parents that lost both children
        for s in range(L):
            in_use[s] = 0
        for p in range(count):
            if keep[2 * p] or keep[2 * p + 1]:
                in_use[slots[p]] = 1
        nfree = 0
        for s in range(L):
            if not in_use[s]:
                free[nfree] = s
                nfree += 1

        k = 0
        fi = 0
        for p in range(count):
            s = slots[p]
            k0 = keep[2 * p]
            k1 = keep[2 * p + 1]
            if k0:
                new_slots[k] = s
                new_bits[k] = 0
                if trace:
                    tr_parent[i, k] = p
                k += 1
            if k1:
                if k0:
                    d = free[fi]
                    fi += 1
                    buf[d, N:] = buf[s, N:]
                    beta[d, :] = beta[s, :]
                    u[d, :i] = u[s, :i]
                    reg[d] = reg[s]
                    pm[d] = pm[s]
                    new_slots[k] = d
                else:
                    new_slots[k] = s
                new_bits[k] = 1
                if trace:
                    tr_parent[i, k] = p
                k += 1
        k = 0
        for p in range(count):
            for b in range(2):
                if keep[2 * p + b]:
                    d = new_slots[k]
                    pm[d] = cpm[2 * p + b]
                    k += 1
        count = k
        for p in range(count):
            d = new_slots[p]
            b = new_bits[p]
            slots[p] = d
            u[d, i] = b
            reg[d] ^= b
            _update_beta(i, n, b, beta[d])
            if trace:
                tr_pm[i, p] = pm[d]
                tr_bit[i, p] = b
    return slots, count, u, pm, reg
