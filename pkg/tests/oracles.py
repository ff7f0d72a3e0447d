"""Brute-force decoders over all codewords, for small codes only."""
import itertools

import numpy as np

from a2scl.codec import polar_encode


def codebook(spec):
    """All (u, c) pairs of a code without CRC or PC bits."""
    info = list(spec.info_set)
    us = []
    for bits in itertools.product((0, 1), repeat=len(info)):
        u = np.zeros(spec.mother_length, dtype=np.uint8)
        u[info] = bits
        us.append(u)
    us = np.array(us)
    return us, polar_encode(us)


def correlation(c, llr):
    """Log-likelihood (up to a constant) of codewords c given channel LLRs: sum (1-2c) L / 2."""
    return ((1.0 - 2.0 * c) * llr).sum(axis=-1) / 2.0


def ml_decode(llr, spec):
    """Codeword maximizing the likelihood."""
    us, cs = codebook(spec)
    return us[int(np.argmax(correlation(cs, llr)))]


def successive_decode(llr, spec, rule="maxlog"):
    """Bit-by-bit decisions with earlier bits fixed to the decoded values.

    Each decision compares u_i = 0 against u_i = 1, marginalizing over every
    later bit, frozen or not, as successive cancellation does. ``maxlog``
    marginalizes by maximization (the rule min-sum SC implements exactly);
    ``map`` sums probabilities (exact successive MAP).
    """
    N = spec.mother_length
    all_u = np.array(list(itertools.product((0, 1), repeat=N)), dtype=np.uint8)
    metric = correlation(polar_encode(all_u), llr)
    frozen = set(spec.frozen_set)
    u_hat = np.zeros(N, dtype=np.uint8)
    alive = np.ones(len(all_u), dtype=bool)
    for i in range(N):
        if i in frozen:
            u_hat[i] = 0
        else:
            score = []
            for b in (0, 1):
                m = metric[alive & (all_u[:, i] == b)]
                if rule == "maxlog":
                    score.append(m.max())
                else:
                    score.append(np.logaddexp.reduce(m))
            # ties decode to 0, matching the decoder's sign(0) convention
            u_hat[i] = 1 if score[1] > score[0] else 0
        alive &= all_u[:, i] == u_hat[i]
    return u_hat
