"""Discrete-event model of the asymmetric SC/SCL deployment.

``n_sc`` SC cores each keep ``pipelining_factor`` packets in flight, so every
core completes that many packets per ``T_SC`` cycles. Slots within a core are
spaced ``T_SC / pipelining_factor`` apart, and core i starts
``i * T_SC / n_sc`` cycles late so the cores do not complete in lockstep.
Packets that fail the SC CRC queue (FIFO) for the single SCL core, which
takes ``T_SCL`` cycles per packet. ``buffer_capacity_packets`` counts packets
waiting for the SCL core; the packet being list-decoded has been copied into
the core. A failure that finds the buffer full is dropped.

Every SC completion time follows from the frame index alone, which is what
makes the synthetic mode cheap: only the failures are simulated as events.
"""
from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

TABLE_III_CYCLES = {
    (1024, 512): {"encoder": 97, "awgn": 76, "sc": 221, "scl": 1073},
    (1024, 128): {"encoder": 97, "awgn": 76, "sc": 108, "scl": 506},
    (512, 256): {"encoder": 41, "awgn": 44, "sc": 105, "scl": 498},
    (256, 128): {"encoder": 21, "awgn": 28, "sc": 66, "scl": 261},
}
EVENT_KINDS = ("frame_enter_sc", "sc_done_pass", "sc_done_fail", "buffer_push",
               "buffer_drop", "scl_start", "scl_done")
MAX_TRACE_FRAMES = 2_000_000


def failure_probability(e, fer: float, n_sc: int = 18, t_ratio: float = 5.0,
                        pipelining: int = 2):
    """Probability that the SC cores fail ``e`` packets during one SCL decoding.

    Binomial over ``c = round(n_sc * pipelining * t_ratio)`` packets, each
    failing with probability ``fer``. ``e`` may be an array.
    """
    if not 0.0 <= fer <= 1.0:
        raise ValueError("fer must lie in [0, 1]")
    c = int(round(n_sc * pipelining * t_ratio))
    e = np.asarray(e)
    if np.any(e < 0) or np.any(e > c):
        raise ValueError(f"e must lie in [0, c={c}]")
    p = np.exp(binom.logpmf(e, c, fer))
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class PipelineConfig:
    n_sc: int = 18
    buffer_capacity_packets: int = 2
    cycle_costs: dict = field(default_factory=lambda: dict(TABLE_III_CYCLES[(1024, 512)]))
    sc_fer: float = 1e-3
    pipelining_factor: int = 2

    def __post_init__(self):
        if self.n_sc < 1:
            raise ValueError("n_sc must be at least 1")
        if self.buffer_capacity_packets < 1:
            raise ValueError("buffer capacity must be at least one packet")
        if self.pipelining_factor < 1:
            raise ValueError("pipelining_factor must be at least 1")
        for k in ("sc", "scl"):
            if k not in self.cycle_costs:
                raise ValueError(f"cycle_costs needs {k!r}")
        if any(int(v) <= 0 for v in self.cycle_costs.values()):
            raise ValueError("cycle costs must be positive")
        if not 0.0 <= self.sc_fer <= 1.0:
            raise ValueError("sc_fer must lie in [0, 1]")

    @classmethod
    def for_code(cls, N: int, K: int, **kw) -> "PipelineConfig":
        """Configuration with the measured cycle counts of an (N, K) code."""
        return cls(cycle_costs=dict(TABLE_III_CYCLES[(N, K)]), **kw)

    @property
    def t_sc(self) -> int:
        return int(self.cycle_costs["sc"])

    @property
    def t_scl(self) -> int:
        return int(self.cycle_costs["scl"])

    @property
    def t_ratio(self) -> float:
        return self.t_scl / self.t_sc

    @property
    def packets_per_period(self) -> int:
        """SC completions per T_SC cycles, over all cores."""
        return self.n_sc * self.pipelining_factor

    @property
    def c(self) -> int:
        """Packets finishing SC during one SCL decoding."""
        return int(round(self.packets_per_period * self.t_ratio))

    def to_dict(self) -> dict:
        return {"n_sc": self.n_sc, "buffer_capacity_packets": self.buffer_capacity_packets,
                "cycle_costs": dict(self.cycle_costs), "sc_fer": self.sc_fer,
                "pipelining_factor": self.pipelining_factor}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(**d)


@dataclass(frozen=True)
class PipelineEvent:
    time: int
    kind: str
    frame_id: int


@dataclass
class PipelineStats:
    frames: int
    sc_pass: int
    sc_fail: int
    scl_served: int
    dropped: int
    makespan: int
    throughput: float
    scl_utilization: float
    occupancy_cycles: np.ndarray
    e_histogram: np.ndarray
    intervals: int
    decode_errors: int = 0
    events: list | None = None

    @property
    def overflow_count(self) -> int:
        return self.dropped

    @property
    def occupancy_histogram(self) -> np.ndarray:
        """Fraction of simulated time spent at each buffer occupancy."""
        total = self.occupancy_cycles.sum()
        return self.occupancy_cycles / total if total else self.occupancy_cycles.astype(float)

    @property
    def measured_sc_fer(self) -> float:
        return self.sc_fail / self.frames

    def e_distribution(self) -> np.ndarray:
        return self.e_histogram / self.intervals if self.intervals else self.e_histogram * 0.0

    def summary(self) -> dict:
        return {
            "frames": self.frames, "sc_pass": self.sc_pass, "sc_fail": self.sc_fail,
            "scl_served": self.scl_served, "dropped": self.dropped,
            "decode_errors": self.decode_errors, "makespan": self.makespan,
            "throughput": self.throughput, "scl_utilization": self.scl_utilization,
            "intervals": self.intervals,
            "occupancy_histogram": self.occupancy_histogram.tolist(),
            "e_histogram": self.e_histogram.tolist(),
        }


def _completion_offsets(config: PipelineConfig) -> np.ndarray:
    """Sorted SC completion times of the first period, all in [T_SC, 2 T_SC)."""
    t = config.t_sc
    p = config.pipelining_factor
    core = (np.arange(config.n_sc) * t) // config.n_sc
    slot = (np.arange(p) * t) // p
    return np.sort((core[:, None] + slot[None, :]).ravel() % t + t)


def completion_times(config: PipelineConfig, frame_ids) -> np.ndarray:
    """Cycle at which each frame leaves its SC core; frames are numbered in completion order."""
    base = _completion_offsets(config)
    f = np.asarray(frame_ids, dtype=np.int64)
    return base[f % base.size] + (f // base.size) * config.t_sc


def _serve(config: PipelineConfig, fail_times, fail_ids, record: bool):
    """FIFO SCL queue over failures sorted by arrival.

    Returns (served ids, start times, dropped ids, occupancy changes, events).
    """
    cap = config.buffer_capacity_packets
    t_scl = config.t_scl
    queue = deque()
    free_at = 0
    starts, served, dropped = [], [], []
    changes = []           # (time, +1/-1) on the waiting buffer
    events = [] if record else None

    def start(t, fid, queued):
        starts.append(t)
        served.append(fid)
        if queued:
            changes.append((t, -1))
        if record:
            events.append(PipelineEvent(t, "scl_start", fid))
            events.append(PipelineEvent(t + t_scl, "scl_done", fid))
        return t + t_scl

    for t, fid in zip(fail_times.tolist(), fail_ids.tolist()):
        while queue and free_at <= t:
            arr, qf = queue.popleft()
            free_at = start(max(free_at, arr), qf, True)
        if free_at <= t:
            # idle core: the packet passes straight through the buffer
            if record:
                events.append(PipelineEvent(t, "buffer_push", fid))
            free_at = start(t, fid, False)
        elif len(queue) < cap:
            queue.append((t, fid))
            changes.append((t, +1))
            if record:
                events.append(PipelineEvent(t, "buffer_push", fid))
        else:
            dropped.append(fid)
            if record:
                events.append(PipelineEvent(t, "buffer_drop", fid))
    while queue:
        arr, qf = queue.popleft()
        free_at = start(max(free_at, arr), qf, True)
    return (np.array(served, dtype=np.int64), np.array(starts, dtype=np.int64),
            np.array(dropped, dtype=np.int64), changes, events)


def _occupancy_cycles(changes, capacity: int, end: int) -> np.ndarray:
    out = np.zeros(capacity + 1, dtype=np.int64)
    level, last = 0, 0
    # departures before arrivals at equal times
    for t, d in sorted(changes, key=lambda x: (x[0], x[1])):
        out[level] += t - last
        level += d
        last = t
        assert 0 <= level <= capacity
    out[level] += max(end - last, 0)
    return out


def queue_outcomes(config: PipelineConfig, failed) -> np.ndarray:
    """Which of a sequence of frames (SC failure flags) the full buffer drops."""
    failed = np.asarray(failed, dtype=bool)
    ids = np.flatnonzero(failed)
    _, _, dropped, _, _ = _serve(config, completion_times(config, ids), ids, False)
    out = np.zeros(failed.size, dtype=bool)
    out[dropped] = True
    return out


def _failure_ids(n_frames: int, fer: float, rng) -> np.ndarray:
    if fer <= 0.0:
        return np.zeros(0, dtype=np.int64)
    if fer >= 1.0:
        return np.arange(n_frames, dtype=np.int64)
    # geometric gaps between failures: cost scales with the failure count
    chunks, pos = [], -1
    expect = int(n_frames * fer * 1.1) + 16
    while pos < n_frames - 1:
        ids = pos + np.cumsum(rng.geometric(fer, size=expect))
        chunks.append(ids)
        pos = int(ids[-1])
    ids = np.concatenate(chunks)
    return ids[ids < n_frames]


def run_pipeline(config: PipelineConfig, n_frames: int, mode: str = "synthetic", seed=0,
                 record_events: bool = False, coupled=None) -> PipelineStats:
    """Simulate ``n_frames`` packets through the SC cores and the SCL core.

    Parameters
    ----------
    mode : {"synthetic", "coupled"}
        ``synthetic`` draws SC failures as Bernoulli(``config.sc_fer``).
        ``coupled`` decodes real frames; ``coupled`` must then be a dict with
        keys ``spec``, ``decoder``, ``sigma`` and optionally ``noise``.
    record_events : bool
        Keep the full event list (at most ``MAX_TRACE_FRAMES`` frames).

    Notes
    -----
    ``e_histogram[k]`` counts the windows ``[T_SC + j T_SCL, T_SC + (j+1) T_SCL)``
    in which exactly k packets failed SC. Only windows fully covered by SC
    completions are counted.
    """
    if n_frames < 1:
        raise ValueError("need at least one frame")
    if record_events and n_frames > MAX_TRACE_FRAMES:
        raise ValueError(f"event traces are limited to {MAX_TRACE_FRAMES} frames")
    decode_errors = 0
    if mode == "synthetic":
        rng = np.random.default_rng(seed)
        fail_ids = _failure_ids(n_frames, config.sc_fer, rng)
        wrong = None
    elif mode == "coupled":
        if coupled is None:
            raise ValueError("coupled mode needs spec, decoder and sigma")
        from .harness import simulate_frames
        batch = simulate_frames(coupled["spec"], coupled["decoder"], coupled["sigma"], n_frames,
                                seed, coupled.get("noise", "float"), "adaptive")
        fail_ids = np.flatnonzero(~batch.sc_ok)
        wrong = batch.error
    else:
        raise ValueError(f"unknown mode {mode!r}")

    t_sc, t_scl = config.t_sc, config.t_scl
    fail_times = completion_times(config, fail_ids)
    served, starts, dropped, changes, events = _serve(config, fail_times, fail_ids, record_events)

    last_sc = int(completion_times(config, [n_frames - 1])[0])
    last_scl = int(starts[-1]) + t_scl if starts.size else 0
    makespan = max(last_sc, last_scl)
    if wrong is not None:
        lost = np.zeros(n_frames, dtype=bool)
        lost[dropped] = True
        decode_errors = int((wrong & ~lost).sum())

    periods = n_frames // config.packets_per_period
    intervals = max((periods * t_sc) // t_scl, 0)
    win = (fail_times - t_sc) // t_scl
    counts = np.bincount(win[win < intervals], minlength=intervals)[:intervals]
    e_hist = np.bincount(counts, minlength=1) if intervals else np.zeros(1, dtype=np.int64)

    busy = min(served.size * t_scl, makespan)
    n_fail = fail_ids.size
    stats = PipelineStats(
        frames=n_frames, sc_pass=n_frames - n_fail, sc_fail=n_fail, scl_served=served.size,
        dropped=dropped.size, makespan=makespan,
        throughput=(n_frames - dropped.size) / makespan,
        scl_utilization=busy / makespan,
        occupancy_cycles=_occupancy_cycles(changes, config.buffer_capacity_packets, makespan),
        e_histogram=e_hist, intervals=int(intervals), decode_errors=decode_errors)
    if record_events:
        stats.events = _frame_events(config, n_frames, fail_ids, events)
    return stats


def _frame_events(config, n_frames, fail_ids, queue_events):
    ids = np.arange(n_frames)
    done = completion_times(config, ids)
    failed = np.zeros(n_frames, dtype=bool)
    failed[fail_ids] = True
    ev = [PipelineEvent(int(t) - config.t_sc, "frame_enter_sc", int(i)) for i, t in zip(ids, done)]
    ev += [PipelineEvent(int(t), "sc_done_fail" if failed[i] else "sc_done_pass", int(i))
           for i, t in zip(ids, done)]
    ev += queue_events
    # at equal times: SCL completions, then SC events, then queue events in
    # the causal order the queue produced them (stable sort)
    group = {"scl_done": 0, "frame_enter_sc": 1, "sc_done_pass": 1, "sc_done_fail": 1}
    ev.sort(key=lambda x: (x.time, group.get(x.kind, 2)))
    return ev


def write_events(events, path):
    """Event trace as CSV with columns time, kind, frame_id."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("time", "kind", "frame_id"))
        for e in events:
            w.writerow((e.time, e.kind, e.frame_id))
    return path


# ---------------------------------------------------------------------------
# buffer and core-count sizing

@dataclass
class SizingRow:
    fer: float
    c: int
    p_e: tuple                  # P(e) for e = 0..6
    recommended_buffer: int
    max_n_sc: float             # 1 / (fer * rounded T_SCL/T_SC)
    max_n_sc_pipelined: float   # also counting packets in flight per core

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.max_n_sc)


def sizing_report(config: PipelineConfig, fer_grid, target_drop: float = 1e-3,
                  t_ratio: float | None = None) -> list:
    """Tabulate P(e), the buffer size and the SC core count each FER supports.

    ``recommended_buffer`` is the smallest capacity b with P(e > b) at most
    ``target_drop``. ``max_n_sc`` balances failure arrivals against the SCL
    service rate: n_sc * fer packets per SC time must not exceed 1 / t_ratio,
    with t_ratio rounded to an integer as in the quoted 5:1 figure.
    ``max_n_sc_pipelined`` uses the exact ratio and counts every packet in
    flight, which is the load the simulator actually applies.
    """
    ratio = config.t_ratio if t_ratio is None else float(t_ratio)
    headline = max(round(ratio), 1)
    rows = []
    for fer in fer_grid:
        fer = float(fer)
        c = int(round(config.packets_per_period * ratio))
        kw = dict(n_sc=config.n_sc, t_ratio=ratio, pipelining=config.pipelining_factor)
        p = failure_probability(np.arange(min(6, c) + 1), fer, **kw)
        p_e = tuple(float(x) for x in p) + (0.0,) * (7 - p.size)
        cdf = np.cumsum(failure_probability(np.arange(c + 1), fer, **kw))
        buf = 1
        while buf < c and 1.0 - cdf[buf] > target_drop:
            buf += 1
        if fer == 0.0:
            mx = mxp = math.inf
        else:
            mx = math.floor(1.0 / (fer * headline) + 1e-9)
            mxp = math.floor(1.0 / (fer * ratio * config.pipelining_factor) + 1e-9)
        rows.append(SizingRow(fer, c, p_e, buf, mx, mxp))
    return rows


def format_sizing(rows, fmt: str = "markdown") -> str:
    head = ["fer", "c"] + [f"P(e={k})" for k in range(7)] + [
        "buffer", "max_n_sc", "max_n_sc_pipelined"]

    def cells(r):
        lim = ["unbounded" if math.isinf(v) else str(int(v))
               for v in (r.max_n_sc, r.max_n_sc_pipelined)]
        return [f"{r.fer:g}", str(r.c)] + [f"{x:.6g}" for x in r.p_e] + [
            str(r.recommended_buffer)] + lim

    if fmt == "csv":
        return "\n".join(",".join(x) for x in [head] + [cells(r) for r in rows]) + "\n"
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    lines += ["| " + " | ".join(cells(r)) + " |" for r in rows]
    return "\n".join(lines) + "\n"
