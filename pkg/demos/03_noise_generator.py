"""The hardware noise path: LFSR/CASR uniform words through a piecewise-linear ICDF.

Run: python demos/03_noise_generator.py
"""
import numpy as np
from scipy.special import ndtri

from a2scl import HardwareNoise, HwRng, uniform_to_gaussian
from a2scl.channel import default_table, word_from_unit

g = HwRng.from_seed(5)
print("first words:", [int(w) for w in g.words(3)])

t = default_table()
print(f"{t.segments} stored segments per half, output LSB {t.lsb}")
for u in (0.5, 0.841, 0.975, 0.999, 1 - 1e-6):
    x = uniform_to_gaussian(int(word_from_unit(u))) * t.lsb
    print(f"u={u:<10g} table {x:+.4f}  exact {ndtri(u):+.4f}")

x = HardwareNoise(1, lanes=16).standard_normal(1_000_000)
print(f"1e6 samples: mean {x.mean():+.4f}, variance {x.var():.4f}, "
      f"max |x| {np.abs(x).max():.3f}")
# the output density is piecewise uniform between segment ends, which a
# fine-binned goodness-of-fit test at 1e7 samples can resolve
