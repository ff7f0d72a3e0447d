"""Sizing the SCL buffer and core count for the asymmetric platform.

Run: python demos/04_pipeline_sizing.py
"""
from a2scl import PipelineConfig, failure_probability, run_pipeline, sizing_report
from a2scl.pipeline import format_sizing

# probability of e SC failures in one SCL service time (18 cores, 2-way pipelining)
for e in range(5):
    print(f"P(e={e}) = {failure_probability(e, 1e-3, 18, 5, 2):.6f}")

cfg = PipelineConfig()
print(f"\nT_SC={cfg.t_sc}  T_SCL={cfg.t_scl}  packets per SCL interval c={cfg.c}")
print(format_sizing(sizing_report(cfg, [1e-2, 1e-3, 1e-4], t_ratio=5)))

for fer in (1e-3, 5e-3, 2e-2):
    s = run_pipeline(PipelineConfig(sc_fer=fer), 5_000_000, seed=1)
    print(f"sc_fer={fer:<6g} SCL utilization {s.scl_utilization:.3f}  "
          f"dropped {s.dropped}/{s.sc_fail}  throughput {s.throughput:.4f} packets/cycle")
