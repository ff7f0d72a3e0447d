"""One frame through the chain: NR construction, encoding, AWGN, three decoders.

Run: python demos/01_encode_decode.py
"""
import numpy as np

from a2scl import DecoderConfig, adaptive_decode, build_code_spec, encode_frame, sc_decode, scl_decode
from a2scl.channel import FloatNoise, awgn_apply, demap_llr, snr_to_sigma
from a2scl.decoder import prepare_llrs

# 64 payload bits + CRC24 + 3 PC bits in E=108 transmitted bits; N follows the NR rule
spec = build_code_spec("nr", None, 64, 108, crc_length=24, pc_count=3)
print(f"N={spec.mother_length}  E={spec.transmit_length}  rate matching: {spec.rate_matching}")
print(f"info positions {len(spec.info_set)}, PC positions {spec.pc_set}")

rng = np.random.default_rng(1)
frame = encode_frame(rng.integers(0, 2, 64, dtype=np.uint8), spec)

sigma = snr_to_sigma(1.0, "esn0")
llr = demap_llr(awgn_apply(frame.transmitted, sigma, FloatNoise(3)), sigma)

cfg = DecoderConfig(list_size=8)          # 8-bit SC, 12-bit SCL
sc = sc_decode(prepare_llrs(llr, spec, cfg.sc_scheme), spec, cfg.sc_scheme)
scl = scl_decode(prepare_llrs(llr, spec, cfg.scl_scheme), spec, cfg)
ada = adaptive_decode(llr, spec, cfg)

for name, out in (("SC", sc), ("SCL", scl), ("adaptive", ada)):
    right = np.array_equal(out.payload, frame.payload)
    print(f"{name:9s} status={out.status:16s} payload correct={right}")

# SCL keeps the L best paths; the selected one is the best that passes the CRC
print("path metrics:", [p.metric for p in scl.paths])
print("selected rank:", scl.selected_path_rank)
