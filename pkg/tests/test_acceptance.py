"""Acceptance criteria 1-8.

Each test prints one ``CRITERION n: PASS|FAIL`` line with the measured
numbers, then asserts. The operating points below (SNRs, frame counts) were
fixed from calibration runs and are not tuned per run.

Runtime is roughly 40 minutes on one core.
"""
import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtr, ndtri

from a2scl.channel import HardwareNoise, exact_output_pmf
from a2scl.codec import build_code_spec, polar_encode, polar_encode_segmented
from a2scl.decoder import DecoderConfig, sc_decode, scl_decode
from a2scl.harness import CampaignConfig, run_campaign
from a2scl.llr import QuantScheme
from a2scl.pipeline import PipelineConfig, failure_probability, run_pipeline

from oracles import ml_decode, successive_decode

pytestmark = pytest.mark.slow

FLOAT = QuantScheme(0)
TABLE_II = (0.8352, 0.1505, 0.0135, 0.0008, 0.000035)

# N=1024, K=512 with CRC24: SCL L=8 FER is about 1.2e-3 at 2.2 dB Eb/N0
C3_SNR = 2.2
# SNR pairs bracketing SCL FER 1e-3 (Eb/N0) and the frames spent at each
C4_POINTS = {
    "1/8": dict(K=104, snr=(2.1, 2.35), frames=(50_000, 150_000)),
    "7/8": dict(K=872, snr=(4.15, 4.35), frames=(50_000, 150_000)),
}
C5_GRID = ((2.5, 1_000_000), (2.75, 2_000_000), (3.0, 3_000_000),
           (3.5, 1_000_000), (4.0, 1_000_000))


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line past pytest's output capture."""
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
        return ok
    return emit


def campaign(spec, snr, frames, mode, sc_bits=8, scl_bits=12, noise="float", seed=1):
    cfg = CampaignConfig(code=spec, snr_points=((snr, "ebn0"),),
                         decoder=DecoderConfig(8, QuantScheme(sc_bits), QuantScheme(scl_bits)),
                         max_frames=frames, min_frame_errors=frames + 1, mode=mode,
                         noise=noise, master_seed=seed, batch_frames=2000)
    return run_campaign(cfg)[0]


def within(a, b, k=2.0):
    """|FER_a - FER_b| < k sigma, sigma of the difference of two binomial estimates."""
    s = np.hypot(a.sigma, b.sigma)
    d = abs(a.fer - b.fer)
    return d < k * s if s > 0 else d == 0, d, s


def snr_at(snrs, fers, target=1e-3):
    """Log-linear interpolation (or extrapolation) of the SNR where FER = target."""
    x0, x1 = snrs
    y0, y1 = np.log10(fers)
    return x0 + (np.log10(target) - y0) * (x1 - x0) / (y1 - y0)


# ---------------------------------------------------------------------------

def test_criterion_1_table_ii(report):
    got = [failure_probability(e, 1e-3, 18, 5, 2) for e in range(5)]
    ok = all(abs(g - t) <= 5e-5 for g, t in zip(got, TABLE_II))
    report(1, ok, "P(e)=" + ", ".join(f"{g:.6f}" for g in got))
    assert ok


def test_criterion_2_oracles(report):
    spec = build_code_spec("nr", 8, 4, 8)
    cfg = DecoderConfig(16, FLOAT, FLOAT, platform_limit=False)
    rng = np.random.default_rng(2024)
    scl_ok = sc_ok = sc_map = 0
    trials = 1000
    for _ in range(trials):
        u = np.zeros(8, dtype=np.uint8)
        u[list(spec.info_set)] = rng.integers(0, 2, 4)
        sigma = rng.uniform(0.4, 1.6)
        y = 1.0 - 2.0 * polar_encode(u) + rng.normal(0, sigma, 8)
        llr = 2 * y / sigma**2
        scl_ok += np.array_equal(scl_decode(llr, spec, cfg).u, ml_decode(llr, spec))
        sc = sc_decode(llr, spec, FLOAT).u
        sc_ok += np.array_equal(sc, successive_decode(llr, spec, "maxlog"))
        sc_map += np.array_equal(sc, successive_decode(llr, spec, "map"))
    ok = scl_ok == trials and sc_ok == trials
    report(2, ok, f"SCL=ML {scl_ok}/{trials}, SC=successive max-log {sc_ok}/{trials} "
                  f"(exact successive MAP agreement, informational: {sc_map}/{trials})")
    assert ok


def test_criterion_3_adaptive_equals_scl(report):
    spec = build_code_spec("nr", 1024, 512, 1024, crc_length=24)
    a = campaign(spec, C3_SNR, 100_000, "adaptive")
    s = campaign(spec, C3_SNR, 100_000, "scl")
    ok, d, sig = within(a, s)
    report(3, ok, f"{C3_SNR} dB Eb/N0, {a.frames} paired frames: adaptive {a.fer:.3e} "
                  f"scl {s.fer:.3e} |diff|={d:.2e} < 2sigma={2 * sig:.2e}; "
                  f"SCL runs in adaptive mode {a.scl_invocations}")
    assert ok


def test_criterion_4_quantization(report):
    lines, ok = [], True
    for rate, p in C4_POINTS.items():
        spec = build_code_spec("nr", 1024, p["K"], 1024, crc_length=24)
        fer = {}
        for bits in (0, 12, 8):
            fer[bits] = [campaign(spec, snr, n, "scl", scl_bits=bits)
                         for snr, n in zip(p["snr"], p["frames"])]
        for i, snr in enumerate(p["snr"]):
            good, d, sig = within(fer[12][i], fer[0][i])
            ok &= good
            lines.append(f"R={rate} {snr} dB: float {fer[0][i].fer:.2e} 12b {fer[12][i].fer:.2e} "
                         f"8b {fer[8][i].fer:.2e} (12b-float {d:.1e} vs 2sigma {2 * sig:.1e})")
        x_float = snr_at(p["snr"], [q.fer for q in fer[0]])
        x_8 = snr_at(p["snr"], [q.fer for q in fer[8]])
        penalty = x_8 - x_float
        ok &= penalty <= 0.15
        lines.append(f"R={rate} SNR@1e-3 float {x_float:.3f} 8b {x_8:.3f} penalty {penalty:+.3f} dB")
        # SC ordering: coarser quantization must not beat finer beyond 2 sigma
        sc = {b: campaign(spec, p["snr"][0], 100_000, "sc", sc_bits=b) for b in (6, 8, 12)}
        for coarse, fine in ((6, 8), (8, 12), (6, 12)):
            s = np.hypot(sc[coarse].sigma, sc[fine].sigma)
            good = sc[coarse].fer >= sc[fine].fer - 2 * s
            ok &= good
        lines.append(f"R={rate} SC {p['snr'][0]} dB: 6b {sc[6].fer:.3e} 8b {sc[8].fer:.3e} "
                     f"12b {sc[12].fer:.3e}")
    report(4, ok, "; ".join(lines))
    assert ok


def test_criterion_5_sc_vs_scl_crossing(report):
    spec = build_code_spec("nr", 1024, 512, 1024, crc_length=24)
    pts = [campaign(spec, snr, n, "adaptive", seed=5) for snr, n in C5_GRID]
    ok = True
    ratios = []
    for p in pts:
        if p.frame_errors:
            ratios.append(p.sc_fer / p.fer)
            ok &= p.sc_fer > p.fer
        else:
            # no SCL error seen: SC must sit above the SCL upper confidence bound
            ok &= p.sc_fer > p.ci[1]
    growing = all(b > a for a, b in zip(ratios, ratios[1:])) and len(ratios) >= 2
    ok &= growing
    # SNR where SCL FER crosses 1e-5, and SC FER there (log-linear in both)
    measured = [p for p in pts if p.frame_errors]
    pairs = list(zip(measured, measured[1:]))
    a, b = next(((a, b) for a, b in pairs if a.fer > 1e-5 >= b.fer), pairs[-1])
    x = snr_at((a.snr_db, b.snr_db), (a.fer, b.fer), 1e-5)
    sc_at = 10 ** np.interp(x, (a.snr_db, b.snr_db), np.log10([a.sc_fer, b.sc_fer]))
    band = 1e-5 <= sc_at <= 1e-2
    ok &= band
    rows = ", ".join(f"{p.snr_db}: SC {p.sc_fer:.2e} SCL {p.fer:.2e} ({p.frame_errors}/{p.frames})"
                     for p in pts)
    report(5, ok, f"{rows}; SC/SCL ratios {[round(r) for r in ratios]}; "
                  f"SCL=1e-5 at {x:.2f} dB where SC={sc_at:.2e}")
    assert ok


def test_criterion_6_pipeline_statistics(report):
    cfg = PipelineConfig()
    per_interval = cfg.packets_per_period * cfg.t_scl / cfg.t_sc
    s = run_pipeline(cfg, int(1_000_000 * per_interval) + 10 * cfg.packets_per_period, seed=6)
    assert s.intervals >= 1_000_000
    obs = np.zeros(5)
    h = s.e_histogram
    obs[:4] = h[:4] if h.size >= 4 else np.pad(h, (0, 4 - h.size))
    obs[4] = h[4:].sum()
    p = failure_probability(np.arange(4), cfg.sc_fer, cfg.n_sc, cfg.t_ratio,
                            cfg.pipelining_factor)
    exp = np.append(p, 1 - p.sum()) * s.intervals
    pval = stats.chisquare(obs, exp).pvalue
    p_lt3 = obs[:3].sum() / s.intervals
    ok = pval > 0.01 and p_lt3 >= 0.998
    report(6, ok, f"{s.intervals} intervals, e-counts {obs.astype(int).tolist()}, "
                  f"chi-square p={pval:.3f}, P(e<3)={p_lt3:.5f}, drops {s.dropped}/{s.sc_fail}")
    assert ok


def test_criterion_7_noise_fidelity(report):
    n = 10_000_000
    src = HardwareNoise(7)
    codes = src.codes(n).astype(np.int64)
    lsb = src.table.lsb
    # 100 equiprobable N(0,1) bins, edges snapped to the output code grid
    edge = np.round(ndtri(np.arange(1, 100) / 100) / lsb).astype(np.int64)
    obs = np.bincount(np.searchsorted(edge, codes, side="right"), minlength=100)
    cdf = np.concatenate([[0.0], ndtr((edge - 0.5) * lsb), [1.0]])
    exp = np.diff(cdf) * n
    chi = stats.chisquare(obs, exp)
    # noncentrality implied by the table itself (exact output pmf of the hardware path)
    pmf = exact_output_pmf()
    mag = np.arange(pmf.size)
    full = np.zeros(2 * pmf.size - 1)
    full[pmf.size - 1:] += pmf / 2
    full[: pmf.size][::-1] += pmf / 2
    table_p = np.bincount(np.searchsorted(edge, np.arange(-mag[-1], mag[-1] + 1), side="right"),
                          weights=full, minlength=100)
    lam = n * (((table_p - np.diff(cdf)) ** 2) / np.diff(cdf)).sum()
    normal_ok = chi.pvalue > 0.01

    spec = build_code_spec("nr", 1024, 512, 1024, crc_length=24)
    hw = campaign(spec, 2.0, 50_000, "adaptive", noise="hardware", seed=7)
    fl = campaign(spec, 2.0, 50_000, "adaptive", noise="float", seed=7)
    fer_ok, d, sig = within(hw, fl)
    ok = normal_ok and fer_ok
    report(7, ok, f"normality chi-square stat={chi.statistic:.0f} p={chi.pvalue:.2e} "
                  f"(noncentrality predicted from the table {lam:.0f}); "
                  f"FER hardware {hw.fer:.3e} float {fl.fer:.3e} |diff|={d:.1e} "
                  f"vs 2sigma {2 * sig:.1e}")
    assert ok


def test_criterion_8_encoder_equivalences(report):
    rng = np.random.default_rng(8)
    ok = True
    for n in range(5, 11):
        u = rng.integers(0, 2, (10_000, 1 << n), dtype=np.uint8)
        v = rng.integers(0, 2, (10_000, 1 << n), dtype=np.uint8)
        c = polar_encode(u)
        ok &= np.array_equal(polar_encode_segmented(u), c)
        ok &= np.array_equal(polar_encode(c), u)
        ok &= np.array_equal(polar_encode(u ^ v), c ^ polar_encode(v))
    for n in range(1, 5):
        N = 1 << n
        all_u = ((np.arange(1 << N)[:, None] >> np.arange(N)) & 1).astype(np.uint8)
        c = polar_encode(all_u)
        ok &= np.array_equal(polar_encode(c), all_u)
        # linearity over all words: each codeword is the XOR of its unit-vector images
        basis = polar_encode(np.eye(N, dtype=np.uint8)).astype(np.int64)
        ok &= np.array_equal(c, (all_u.astype(np.int64) @ basis) % 2)
    report(8, ok, "segmented=direct on 1e4 frames for N=32..1024; involution and linearity "
                  "exhaustive for N<=16, randomized above")
    assert ok
