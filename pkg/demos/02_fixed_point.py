"""Fixed-point LLR arithmetic and its effect on decoding.

Run: python demos/02_fixed_point.py
"""
import numpy as np

from a2scl import QuantScheme, build_code_spec
from a2scl.harness import simulate_frames
from a2scl.decoder import DecoderConfig
from a2scl.llr import f_min_sum, g_combine, pm_update, quantize_channel_llr

q6 = QuantScheme(6)
a = quantize_channel_llr(3.3, q6)
b = quantize_channel_llr(-1.2, q6)
print(f"{q6}: 3.3 -> raw {a.raw} ({a.value}), -1.2 -> raw {b.raw} ({b.value})")
print("f(a, b) =", f_min_sum(a, b).value)                 # sign product times min magnitude
print("g(a, b, 0) =", g_combine(a, b, 0).value, " g(a, b, 1) =", g_combine(a, b, 1).value)
big = quantize_channel_llr(100.0, q6)
print("saturation: 100 ->", big.value, " g(big, big, 0) =", g_combine(big, big, 0).value)
print("path metric grows only on disagreement:", pm_update(0, b, 0), pm_update(0, b, 1))

# SC frame error rate under three LLR widths, same frames for each
spec = build_code_spec("nr", 256, 100, 256, crc_length=24)
for bits in (6, 8, 12, 0):
    dec = DecoderConfig(8, QuantScheme(bits), QuantScheme(12))
    batch = simulate_frames(spec, dec, 0.72, 20_000, seed=5, mode="sc")
    label = f"{bits}-bit" if bits else "float"
    print(f"SC {label:7s} FER {batch.error.mean():.4f}")
