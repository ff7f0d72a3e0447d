"""Regenerate nr_reference.json from sionna's independent TS 38.212 encoder.

Only needed when the fixture changes; the test suite reads the JSON file.
Requires ``sionna`` (and TensorFlow):  python tests/data/make_nr_reference.py
"""
import json
from pathlib import Path

import numpy as np
from sionna.phy.fec.polar import Polar5GEncoder

CASES = [(12, 108), (20, 216), (40, 108), (40, 150), (40, 432), (64, 108), (64, 216),
         (64, 432), (72, 300), (100, 216), (104, 432), (140, 216), (140, 500)]


def main():
    out = []
    for k, e in CASES:
        enc = Polar5GEncoder(k=k, n=e, channel_type="downlink")
        out.append({
            "K": k, "E": e, "crc_length": 24, "n_max": 9,
            "mother_length": int(enc.n_polar),
            "info_set": sorted(int(i) for i in np.asarray(enc.info_pos)),
            "crc_interleaver": [int(i) for i in np.asarray(enc._ind_input_int)],
            "rate_match_index": [int(i) for i in np.asarray(enc._ind_rate_matching)],
        })
    path = Path(__file__).with_name("nr_reference.json")
    path.write_text(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
