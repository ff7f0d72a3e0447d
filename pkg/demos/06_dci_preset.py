"""Downlink control presets: one DCI size at each aggregation level.

Run: python demos/06_dci_preset.py
"""
from a2scl import dci_preset, run_campaign

for al in (1, 2, 4, 8):
    cfg = dci_preset(64, al, snr_points=tuple((s, "esn0") for s in (-8.0, -6.0, -4.0, -2.0)),
                     max_frames=2000, min_frame_errors=50)
    c = cfg.code
    pts = run_campaign(cfg)
    fers = "  ".join(f"{p.snr_db:+.0f} dB {p.fer:.3f}" for p in pts)
    print(f"AL{al}: E={c.transmit_length:3d} N={c.mother_length} {c.rate_matching:10s} {fers}")
