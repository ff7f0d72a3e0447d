import numpy as np
import pytest

from a2scl.codec import build_code_spec, encode_frame, rate_match
from a2scl.decoder import (DecoderConfig, adaptive_decode, prepare_llrs, sc_decode,
                           sc_decode_batch, scl_decode)
from a2scl.llr import QuantScheme, quantize_array
from a2scl.reference import reference_sc, reference_scl, replay_metric

from oracles import ml_decode, successive_decode

FLOAT = QuantScheme(0)
SCHEMES = [FLOAT, QuantScheme(6), QuantScheme(8), QuantScheme(12)]


def small_code(N=8, K=4):
    return build_code_spec("nr", N, K, N)


def test_sc_equals_successive_maxlog_oracle():
    spec = small_code()
    rng = np.random.default_rng(0)
    for _ in range(200):
        llr = rng.normal(0.5, 2.0, 8)
        assert np.array_equal(sc_decode(llr, spec, FLOAT).u, successive_decode(llr, spec))


def test_scl_full_list_is_ml():
    spec = small_code()
    cfg = DecoderConfig(16, FLOAT, FLOAT, platform_limit=False)
    rng = np.random.default_rng(1)
    for _ in range(200):
        llr = rng.normal(0.5, 2.0, 8)
        assert np.array_equal(scl_decode(llr, spec, cfg).u, ml_decode(llr, spec))


@pytest.mark.parametrize("N", [2, 4, 8, 16, 32, 64, 128])
@pytest.mark.parametrize("scheme", SCHEMES, ids=str)
def test_kernels_match_reference(N, scheme):
    K = max(1, N // 2 - (6 if N >= 32 else 0))
    spec = build_code_spec("nr", N, K, N, 6 if N >= 32 else 0, 2 if N >= 16 else 0)
    rng = np.random.default_rng(N)
    for trial in range(8):
        # every third frame is scaled into saturation
        scale = 80.0 if trial % 3 == 0 else 2.0
        ch = quantize_array(rng.normal(1.0, 1.5, N) * scale, scheme)
        assert np.array_equal(sc_decode(ch, spec, scheme).u, reference_sc(ch, spec, scheme))
        for L in (1, 2, 4):
            for pen in (False, True):
                cfg = DecoderConfig(L, scheme, scheme, pc_penalty=pen)
                out = scl_decode(ch, spec, cfg)
                ref = reference_scl(ch, spec, scheme, L, pc_penalty=pen)
                got = sorted((p.metric, tuple(p.decided_bits)) for p in out.paths)
                exp = sorted((p.metric, tuple(p.decided_bits)) for p in ref)
                assert got == exp
                for p in out.paths:
                    assert replay_metric(ch, p.decided_bits, spec, scheme, pen) == p.metric


def test_list_of_one_is_sc():
    spec = build_code_spec("nr", 256, 100, 256, 11, 3)
    sch = QuantScheme(8)
    ch = quantize_array(np.random.default_rng(2).normal(1, 1, (30, 256)) * 3, sch)
    u_sc, _, _ = sc_decode_batch(ch, spec, sch)
    for row, u in zip(ch, u_sc):
        assert np.array_equal(scl_decode(row, spec, DecoderConfig(1, sch, sch)).u, u)


def test_path_metrics_sorted_and_nondecreasing_along_trace():
    spec = build_code_spec("nr", 64, 20, 64, 6, 0)
    sch = QuantScheme(12)
    ch = quantize_array(np.random.default_rng(3).normal(1, 1.2, 64) * 2, sch)
    out = scl_decode(ch, spec, DecoderConfig(4, sch, sch), trace=True)
    pms = [p.metric for p in out.paths]
    assert pms == sorted(pms)
    lines = out.trace.splitlines()
    assert len(lines) == 64 and lines[0].startswith("u0 frozen")


def test_noiseless_frames_decode():
    spec = build_code_spec("nr", None, 100, 300, crc_length=24, pc_count=3)
    cfg = DecoderConfig()
    rng = np.random.default_rng(4)
    for _ in range(5):
        fr = encode_frame(rng.integers(0, 2, 100, dtype=np.uint8), spec)
        analog = 40.0 * (1.0 - 2.0 * fr.transmitted)
        out = adaptive_decode(analog, spec, cfg)
        assert out.status == "sc_pass" and out.sc_crc_passed
        assert np.array_equal(out.payload, fr.payload)
        out = scl_decode(prepare_llrs(analog, spec, cfg.scl_scheme), spec, cfg)
        assert out.status == "scl_pass"
        assert np.array_equal(out.payload, fr.payload)


def test_erasure_decodes_to_zero():
    spec = build_code_spec("nr", 128, 40, 128, crc_length=0)
    out = sc_decode(np.zeros(128, dtype=np.int32), spec, QuantScheme(8))
    assert not out.u.any() and not out.payload.any()


def test_adaptive_falls_back_to_scl():
    spec = build_code_spec("nr", 128, 40, 128, crc_length=16)
    cfg = DecoderConfig(8)
    rng = np.random.default_rng(5)
    seen = set()
    for _ in range(300):
        fr = encode_frame(rng.integers(0, 2, 40, dtype=np.uint8), spec)
        y = 1.0 - 2.0 * fr.transmitted + rng.normal(0, 0.9, 128)
        out = adaptive_decode(2 * y / 0.81, spec, cfg)
        seen.add(out.status)
        if out.status == "sc_pass":
            assert out.sc_crc_passed
        else:
            assert not out.sc_crc_passed
    assert {"sc_pass", "scl_pass"} <= seen


def test_best_effort_when_no_path_passes():
    spec = build_code_spec("nr", 64, 20, 64, crc_length=6)
    sch = QuantScheme(8)
    rng = np.random.default_rng(6)
    statuses = []
    for _ in range(100):
        ch = quantize_array(rng.normal(0, 3, 64), sch)
        out = scl_decode(ch, spec, DecoderConfig(2, sch, sch))
        statuses.append(out.status)
        if out.status == "scl_best_effort":
            assert out.selected_path_rank == 0
    assert "scl_best_effort" in statuses


def test_config_validation():
    with pytest.raises(ValueError):
        DecoderConfig(16)
    with pytest.raises(ValueError):
        DecoderConfig(3, platform_limit=False)
    with pytest.raises(ValueError):
        DecoderConfig(8, selection="majority")
    cfg = DecoderConfig(4, QuantScheme(6), QuantScheme(12), pc_penalty=True)
    assert DecoderConfig.from_dict(cfg.to_dict()) == cfg


def test_input_checks():
    spec = build_code_spec("nr", 64, 20, 64)
    with pytest.raises(ValueError):
        sc_decode(np.zeros(32, dtype=np.int32), spec, QuantScheme(8))
    with pytest.raises(ValueError):
        sc_decode(np.full(64, 500, dtype=np.int32), spec, QuantScheme(8))
    with pytest.raises(ValueError):
        sc_decode(np.zeros(64), spec, QuantScheme(8))
