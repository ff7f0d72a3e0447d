import csv

import numpy as np
import pytest

from a2scl.codec import build_code_spec
from a2scl.decoder import DecoderConfig
from a2scl.harness import (COLUMNS, CampaignConfig, FerPoint, dci_code, dci_evaluated,
                           dci_preset, emit_results, load_results, run_campaign,
                           simulate_frames)

SPEC = build_code_spec("nr", 128, 40, 128, crc_length=16)


def small_campaign(**kw):
    base = dict(code=SPEC, decoder=DecoderConfig(4), snr_points=((1.0, "ebn0"), (3.0, "ebn0")),
                max_frames=600, min_frame_errors=20, batch_frames=200, master_seed=7)
    base.update(kw)
    return CampaignConfig(**base)


def test_noiseless_limit_has_no_errors():
    b = simulate_frames(SPEC, DecoderConfig(4), 1e-3, 300, seed=1)
    assert not b.error.any() and b.sc_ok.all() and not b.scl_run.any()


def test_modes_see_identical_frames():
    a = simulate_frames(SPEC, DecoderConfig(4), 0.9, 300, seed=2, mode="adaptive")
    s = simulate_frames(SPEC, DecoderConfig(4), 0.9, 300, seed=2, mode="sc")
    l = simulate_frames(SPEC, DecoderConfig(4), 0.9, 300, seed=2, mode="scl")
    assert np.array_equal(a.sc_ok, s.sc_ok)
    # frames SC got right stay right in adaptive mode
    assert not a.error[s.sc_ok & ~s.sc_error].any()
    assert l.scl_run.all() and not s.scl_run.any()
    assert np.array_equal(a.scl_run, ~a.sc_ok)


def test_campaign_is_deterministic():
    for workers in (1, 2):
        cfg = small_campaign(worker_count=workers)
        assert run_campaign(cfg) == run_campaign(cfg)


def test_stop_rules():
    low, high = run_campaign(small_campaign())
    assert low.stopped_by == "errors" and low.frame_errors >= 20
    assert low.frames % 200 == 0                  # stops on a round boundary
    assert high.stopped_by == "max_frames" and high.frames == 600
    assert high.fer < low.fer
    slow = run_campaign(small_campaign(max_frames=10**7, min_frame_errors=10**6,
                                       max_wall_time=0.0, snr_points=((3.0, "ebn0"),)))
    assert slow[0].stopped_by == "wall_time" and slow[0].frames == 200


def test_counters_are_consistent():
    for p in run_campaign(small_campaign()):
        assert p.sc_invocations == p.frames
        assert p.scl_invocations <= p.frames
        assert p.undetected_errors <= p.frame_errors <= p.scl_invocations + p.undetected_errors
        assert p.sc_frame_errors >= p.frame_errors - p.erasures
        lo, hi = p.ci
        assert lo <= p.fer <= hi
    scl = run_campaign(small_campaign(mode="scl"))
    assert all(p.sc_invocations == 0 and p.scl_invocations == p.frames for p in scl)


def test_pipeline_flag_adds_erasures_under_overload():
    cfg = small_campaign(snr_points=((-2.0, "ebn0"),), pipeline=True, max_frames=400,
                         min_frame_errors=10**6, decoder=DecoderConfig(2))
    p = run_campaign(cfg)[0]
    assert p.erasures > 0
    assert p.frame_errors >= p.erasures


def test_wilson_interval():
    p = FerPoint(0.0, "esn0", 1000, 0, 0, 1000, 0)
    lo, hi = p.ci
    assert lo == 0.0 and 0.003 < hi < 0.004
    assert FerPoint(0.0, "esn0", 100, 50, 0, 100, 50).ci == pytest.approx((0.4038, 0.5962),
                                                                            abs=1e-4)


@pytest.mark.parametrize("name", ["r.csv", "r.json"])
def test_results_round_trip(tmp_path, name):
    cfg = small_campaign()
    pts = run_campaign(cfg)
    path = emit_results(pts, tmp_path / name, config=cfg)
    back, echo = load_results(path)
    assert back == pts
    assert CampaignConfig.from_dict(echo) == cfg


def test_csv_layout(tmp_path):
    pts = [FerPoint(1.5, "ebn0", 10, 1, 0, 10, 3)]
    path = emit_results(pts, tmp_path / "r.csv")
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == COLUMNS
    assert load_results(path)[1] is None
    with pytest.raises(ValueError):
        emit_results([], tmp_path / "x.csv")


def test_config_validation_and_short_form():
    with pytest.raises(ValueError):
        small_campaign(snr_points=((1.0, "snr"),))
    with pytest.raises(ValueError):
        small_campaign(mode="ml")
    with pytest.raises(ValueError):
        CampaignConfig.from_dict({"code": SPEC.to_dict(), "bogus": 1})
    cfg = CampaignConfig.from_dict({"code": {"profile": "nr", "N": 128, "K": 40, "E": 128,
                                             "crc_length": 16}})
    assert cfg.code == SPEC
    assert cfg.sigma(0) == pytest.approx(
        1 / np.sqrt(2 * 10 ** 0.2))                    # 2 dB Es/N0


def test_dci_presets():
    assert not dci_evaluated(128, 1) and not dci_evaluated(164, 1)
    assert dci_evaluated(96, 1) and not dci_evaluated(100, 2)
    with pytest.raises(ValueError):
        dci_code(128, 1)
    a1 = dci_code(64, 1)
    assert a1.transmit_length == 108 and a1.rate_matching == "shortening"
    assert a1.info_count == 40 and a1.crc_length == 24
    assert dci_code(64, 8).rate_matching == "repetition"
    assert dci_code(164, 2).transmit_length == 216
    assert max(dci_code(k, al).mother_length for k in (64, 164) for al in (2, 4, 8)) == 512
    p = dci_preset(96, 4, max_frames=10)
    assert p.decoder.list_size == 8 and p.max_frames == 10
    assert p.snr_points[0] == (-6.0, "esn0") and p.snr_points[-1] == (4.0, "esn0")
    assert len(p.snr_points) == 21
