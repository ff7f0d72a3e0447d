"""A small FER campaign, written to CSV with its configuration.

Run: python demos/05_fer_campaign.py [out.csv]
"""
import sys

from a2scl import CampaignConfig, DecoderConfig, build_code_spec, emit_results, run_campaign

spec = build_code_spec("nr", 256, 104, 256, crc_length=24)
cfg = CampaignConfig(code=spec, decoder=DecoderConfig(8),
                     snr_points=tuple((s, "ebn0") for s in (1.0, 1.5, 2.0, 2.5)),
                     max_frames=20_000, min_frame_errors=50, master_seed=1)


def show(p):
    lo, hi = p.ci
    print(f"{p.snr_db:4.1f} dB  frames {p.frames:6d}  FER {p.fer:.2e} [{lo:.1e}, {hi:.1e}]  "
          f"SC-only {p.sc_fer:.2e}  SCL runs {p.scl_invocations}")


points = run_campaign(cfg, progress=show)
out = sys.argv[1] if len(sys.argv) > 1 else "fer_demo.csv"
emit_results(points, out, config=cfg)
print("wrote", out)
