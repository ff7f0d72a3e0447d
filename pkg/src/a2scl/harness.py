"""Frame error rate campaigns.

A campaign sweeps SNR points. At each point, frames are simulated in
*rounds*: every worker decodes one batch per round from a stream seeded by
``(master_seed, snr_index, worker_index, round)``. Results are reduced in
worker order after each round, and the stop rule is checked between rounds.
This makes the output a pure function of the configuration, for any worker
count and whether the workers run in-process or in a pool.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import binomtest

from .channel import awgn_apply, demap_llr, make_noise, snr_to_sigma
from .codec import (CodeSpec, attach_crc, build_code_spec, insert_pc_and_map, polar_encode,
                    rate_match)
from .decoder import DecoderConfig, prepare_llrs, sc_decode_batch, scl_decode

MODES = ("adaptive", "sc", "scl")
NOISE_KINDS = ("float", "hardware")
DCI_SIZES = (64, 96, 128, 164)
DCI_LEVELS = (1, 2, 4, 8)
BITS_PER_CCE = 108


@dataclass(frozen=True)
class CampaignConfig:
    """Everything a campaign depends on.

    ``snr_points`` holds ``(dB, convention)`` pairs, convention being
    ``"esn0"`` or ``"ebn0"``. ``batch_frames`` is the per-worker round size;
    it changes which frames are drawn, so it is part of the configuration.
    """

    code: CodeSpec
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    snr_points: tuple = ((2.0, "esn0"),)
    max_frames: int = 100_000
    min_frame_errors: int = 100
    max_wall_time: float | None = None
    master_seed: int = 0
    worker_count: int = 1
    noise: str = "float"
    mode: str = "adaptive"
    batch_frames: int = 1000
    pipeline: bool = False
    label: str = ""

    def __post_init__(self):
        pts = tuple((float(s), str(c)) for s, c in self.snr_points)
        object.__setattr__(self, "snr_points", pts)
        if not pts:
            raise ValueError("snr_points is empty")
        for _, conv in pts:
            if conv not in ("esn0", "ebn0"):
                raise ValueError(f"unknown SNR convention {conv!r}")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be at least 1")
        if self.max_frames < 1 or self.batch_frames < 1 or self.worker_count < 1:
            raise ValueError("max_frames, batch_frames and worker_count must be positive")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"unknown noise backend {self.noise!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown decoding mode {self.mode!r}")

    def sigma(self, index: int) -> float:
        snr, conv = self.snr_points[index]
        return snr_to_sigma(snr, conv, rate=self.code.info_count / self.code.transmit_length)

    def to_dict(self) -> dict:
        return {
            "code": self.code.to_dict(),
            "decoder": self.decoder.to_dict(),
            "snr_points": [list(p) for p in self.snr_points],
            "max_frames": self.max_frames,
            "min_frame_errors": self.min_frame_errors,
            "max_wall_time": self.max_wall_time,
            "master_seed": self.master_seed,
            "worker_count": self.worker_count,
            "noise": self.noise,
            "mode": self.mode,
            "batch_frames": self.batch_frames,
            "pipeline": self.pipeline,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        d = dict(d)
        code = d.pop("code")
        if isinstance(code, dict) and "frozen_set" not in code:
            # short form: build_code_spec keyword arguments
            code = build_code_spec(**code)
        elif isinstance(code, dict):
            code = CodeSpec.from_dict(code)
        dec = DecoderConfig.from_dict(d.pop("decoder", {}))
        d["snr_points"] = tuple(tuple(p) for p in d.get("snr_points", ((2.0, "esn0"),)))
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown campaign fields: {sorted(unknown)}")
        return cls(code=code, decoder=dec, **d)


@dataclass
class FerPoint:
    snr_db: float
    convention: str
    frames: int
    frame_errors: int
    undetected_errors: int
    sc_invocations: int
    scl_invocations: int
    erasures: int = 0
    sc_frame_errors: int = 0
    stopped_by: str = "errors"

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def ci(self) -> tuple:
        """95% Wilson score interval."""
        if not self.frames:
            return (0.0, 1.0)
        ci = binomtest(self.frame_errors, self.frames).proportion_ci(0.95, method="wilson")
        return (float(ci.low), float(ci.high))

    @property
    def sc_fer(self) -> float:
        """FER of the SC stage alone, on the same frames."""
        return self.sc_frame_errors / self.frames if self.frames else float("nan")

    @property
    def sigma(self) -> float:
        """Binomial standard error of the FER estimate."""
        p = self.fer
        return float(np.sqrt(p * (1 - p) / self.frames)) if self.frames else float("nan")

    def row(self) -> dict:
        lo, hi = self.ci
        d = asdict(self)
        d.update(fer=self.fer, ci_low=lo, ci_high=hi)
        return d


# ---------------------------------------------------------------------------
# frame simulation

@dataclass
class FrameBatch:
    """Per-frame outcomes of one simulated batch.

    ``sc_ok``: SC CRC passed (always False when SC did not run).
    ``scl_run``: SCL was invoked. ``claimed``: decoder reported success.
    ``error``: payload differs from the transmitted one. ``sc_error``: the
    SC output alone differs (False when SC did not run).
    """

    sc_ok: np.ndarray
    scl_run: np.ndarray
    claimed: np.ndarray
    error: np.ndarray
    sc_error: np.ndarray


def transmit(spec: CodeSpec, payload, sigma: float, noise) -> np.ndarray:
    """Encode, rate-match, BPSK over AWGN, and demap to analog LLRs (length E)."""
    u = insert_pc_and_map(attach_crc(payload, spec), spec)
    tx = rate_match(polar_encode(u), spec)
    return demap_llr(awgn_apply(tx, sigma, noise), sigma)


def simulate_frames(spec: CodeSpec, decoder: DecoderConfig, sigma: float, count: int,
                    seed, noise: str = "float", mode: str = "adaptive") -> FrameBatch:
    """Generate and decode ``count`` random frames.

    The payload and noise streams are spawned from ``seed``, so runs that
    differ only in ``mode`` see identical frames (paired comparison).
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    payload_ss, noise_ss = ss.spawn(2)
    rng = np.random.default_rng(payload_ss)
    payload = rng.integers(0, 2, size=(count, spec.info_count), dtype=np.uint8)
    llr = transmit(spec, payload, sigma, make_noise(noise, noise_ss))

    sc_ok = np.zeros(count, dtype=bool)
    scl_run = np.zeros(count, dtype=bool)
    claimed = np.zeros(count, dtype=bool)
    decoded = np.zeros_like(payload)
    if mode in ("adaptive", "sc"):
        ch = prepare_llrs(llr, spec, decoder.sc_scheme)
        _, decoded, sc_ok = sc_decode_batch(ch, spec, decoder.sc_scheme)
        decoded = decoded.copy()
        claimed[:] = sc_ok
        sc_error = (decoded != payload).any(axis=1)
    else:
        sc_error = np.zeros(count, dtype=bool)
    if mode in ("adaptive", "scl"):
        todo = np.arange(count) if mode == "scl" else np.flatnonzero(~sc_ok)
        if todo.size:
            ch = prepare_llrs(llr[todo], spec, decoder.scl_scheme)
            for i, row in zip(todo, ch):
                out = scl_decode(row, spec, decoder)
                decoded[i] = out.payload
                claimed[i] = out.decoded_ok
            scl_run[todo] = True
    error = (decoded != payload).any(axis=1)
    return FrameBatch(sc_ok, scl_run, claimed, error, sc_error)


def worker_seed(master_seed: int, snr_index: int, worker_index: int, round_index: int):
    return np.random.SeedSequence(master_seed, spawn_key=(snr_index, worker_index, round_index))


def _run_worker(args):
    cfg, snr_index, worker_index, round_index, count = args
    b = simulate_frames(cfg.code, cfg.decoder, cfg.sigma(snr_index), count,
                        worker_seed(cfg.master_seed, snr_index, worker_index, round_index),
                        cfg.noise, cfg.mode)
    if cfg.pipeline and cfg.mode == "adaptive":
        # erasures from SCL buffer overflow under the default platform timing
        from .pipeline import PipelineConfig, queue_outcomes
        dropped = queue_outcomes(PipelineConfig(), ~b.sc_ok)
        b.error = b.error | dropped
        b.claimed = b.claimed & ~dropped
        return b, int(dropped.sum())
    return b, 0


def _tally(point: FerPoint, batch: FrameBatch, erasures: int):
    point.frames += batch.error.size
    point.frame_errors += int(batch.error.sum())
    point.undetected_errors += int((batch.error & batch.claimed).sum())
    point.scl_invocations += int(batch.scl_run.sum())
    point.erasures += erasures
    point.sc_frame_errors += int(batch.sc_error.sum())


def run_campaign(config: CampaignConfig, progress=None) -> list:
    """Run every SNR point of ``config`` and return a list of :class:`FerPoint`.

    A point stops when it reaches ``min_frame_errors``; otherwise at
    ``max_frames`` or ``max_wall_time``, which is recorded in ``stopped_by``.
    ``progress`` is an optional callback receiving each finished point.
    """
    pool = ProcessPoolExecutor(config.worker_count) if config.worker_count > 1 else None
    points = []
    t0 = time.monotonic()
    try:
        for k, (snr, conv) in enumerate(config.snr_points):
            pt = FerPoint(snr, conv, 0, 0, 0, 0, 0)
            rnd = 0
            while True:
                remaining = config.max_frames - pt.frames
                per = min(config.batch_frames, -(-remaining // config.worker_count))
                jobs = []
                for w in range(config.worker_count):
                    n = min(per, remaining - w * per)
                    if n > 0:
                        jobs.append((config, k, w, rnd, n))
                results = pool.map(_run_worker, jobs) if pool else map(_run_worker, jobs)
                for batch, erasures in results:
                    _tally(pt, batch, erasures)
                rnd += 1
                if pt.frame_errors >= config.min_frame_errors:
                    pt.stopped_by = "errors"
                    break
                if pt.frames >= config.max_frames:
                    pt.stopped_by = "max_frames"
                    break
                if config.max_wall_time is not None and time.monotonic() - t0 > config.max_wall_time:
                    pt.stopped_by = "wall_time"
                    break
            if config.mode != "scl":
                pt.sc_invocations = pt.frames
            points.append(pt)
            if progress:
                progress(pt)
    finally:
        if pool:
            pool.shutdown()
    return points


# ---------------------------------------------------------------------------
# presets

def dci_evaluated(K: int, aggregation_level: int) -> bool:
    if K not in DCI_SIZES or aggregation_level not in DCI_LEVELS:
        return False
    return not (K >= 128 and aggregation_level == 1)


def dci_code(K: int, aggregation_level: int) -> CodeSpec:
    """Downlink control code for a DCI size K (CRC included) at an aggregation level.

    E = 108 bits per CCE; mother length from the NR rule with n_max = 9, no PC
    bits, distributed (interleaved) CRC24.
    """
    if not dci_evaluated(K, aggregation_level):
        raise ValueError(f"(K={K}, AL={aggregation_level}) is not an evaluated DCI case")
    E = BITS_PER_CCE * aggregation_level
    return build_code_spec("nr", None, K - 24, E, crc_length=24, pc_count=0, n_max=9,
                           crc_interleave=True)


def dci_preset(K: int, aggregation_level: int, **overrides) -> CampaignConfig:
    """Campaign for one DCI case: CA-SCL L=8, Es/N0 grid, float noise."""
    spec = dci_code(K, aggregation_level)
    grid = tuple((float(s), "esn0") for s in np.arange(-6.0, 4.01, 0.5))
    base = dict(code=spec, decoder=DecoderConfig(8), snr_points=grid,
                label=f"dci_K{K}_AL{aggregation_level}")
    base.update(overrides)
    return CampaignConfig(**base)


# ---------------------------------------------------------------------------
# result files

COLUMNS = ("snr_db", "convention", "frames", "frame_errors", "undetected_errors",
           "sc_invocations", "scl_invocations", "erasures", "sc_frame_errors", "stopped_by",
           "fer", "ci_low", "ci_high")
_INT_COLUMNS = ("frames", "frame_errors", "undetected_errors", "sc_invocations",
                "scl_invocations", "erasures", "sc_frame_errors")


def emit_results(points, path, fmt: str | None = None, config: CampaignConfig | None = None):
    """Write points as CSV or JSON, echoing the campaign configuration.

    CSV files carry the configuration as a single ``# config: {json}`` line
    above the header.
    """
    if not points:
        raise ValueError("no points to write")
    path = str(path)
    fmt = fmt or ("json" if path.endswith(".json") else "csv")
    echo = config.to_dict() if config is not None else None
    rows = [p.row() for p in points]
    with open(path, "w", newline="") as fh:
        if fmt == "json":
            json.dump({"config": echo, "points": rows}, fh, indent=1)
        elif fmt == "csv":
            if echo is not None:
                fh.write("# config: " + json.dumps(echo) + "\n")
            w = csv.DictWriter(fh, fieldnames=COLUMNS)
            w.writeheader()
            for r in rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        else:
            raise ValueError(f"unknown format {fmt!r}")
    return path


def _point_from_row(r: dict) -> FerPoint:
    kw = {f.name: r[f.name] for f in fields(FerPoint)}
    for k in _INT_COLUMNS:
        kw[k] = int(kw[k])
    kw["snr_db"] = float(kw["snr_db"])
    return FerPoint(**kw)


def load_results(path):
    """Inverse of :func:`emit_results`: returns ``(points, config dict or None)``."""
    path = str(path)
    with open(path, newline="") as fh:
        if path.endswith(".json"):
            d = json.load(fh)
            return [_point_from_row(r) for r in d["points"]], d["config"]
        first = fh.readline()
        echo = None
        if first.startswith("# config: "):
            echo = json.loads(first[len("# config: "):])
        else:
            fh.seek(0)
        return [_point_from_row(r) for r in csv.DictReader(fh)], echo
