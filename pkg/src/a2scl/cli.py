"""Command line front end: ``a2scl <command> ...``.

Commands
--------
encode   payload bits -> transmitted bits
decode   analog channel LLRs -> payload (sc, scl or adaptive)
fer      FER campaign from a JSON config or flags; CSV/JSON results
sched    pipeline simulation and sizing tables
noise    samples from the hardware Gaussian noise path
preset   print the campaign config of a DCI case
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .channel import HardwareNoise, IcdfTable
from .codec import build_code_spec, encode_frame
from .decoder import DecoderConfig, adaptive_decode, prepare_llrs, sc_decode, scl_decode
from .harness import CampaignConfig, dci_preset, emit_results, run_campaign
from .llr import QuantScheme
from .pipeline import PipelineConfig, format_sizing, run_pipeline, sizing_report, write_events


def _bits(text: str) -> np.ndarray:
    text = "".join(text.split())
    if set(text) - {"0", "1"}:
        raise SystemExit("bits must be a string of 0 and 1")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


def _bitstr(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def _read_numbers(path: str | None) -> np.ndarray:
    text = sys.stdin.read() if path in (None, "-") else open(path).read()
    text = text.strip()
    if text.startswith("["):
        return np.asarray(json.loads(text), dtype=np.float64)
    return np.asarray(text.replace(",", " ").split(), dtype=np.float64)


def _add_code_args(p):
    p.add_argument("--N", type=int, default=None, help="mother length (default: NR rule)")
    p.add_argument("--K", type=int, required=True, help="payload bits")
    p.add_argument("--E", type=int, default=None, help="transmitted bits (default N)")
    p.add_argument("--crc", type=int, default=24)
    p.add_argument("--pc", type=int, default=0)
    p.add_argument("--n-max", type=int, default=10)


def _code(args):
    return build_code_spec("nr", args.N, args.K, args.E, args.crc, args.pc, n_max=args.n_max)


def _add_decoder_args(p):
    p.add_argument("--list-size", type=int, default=8)
    p.add_argument("--sc-bits", type=int, default=8, help="SC LLR width (0 = float)")
    p.add_argument("--scl-bits", type=int, default=12, help="SCL LLR width (0 = float)")


def _decoder(args):
    return DecoderConfig(args.list_size, QuantScheme(args.sc_bits), QuantScheme(args.scl_bits))


def cmd_encode(args):
    spec = _code(args)
    if args.payload:
        payload = _bits(args.payload)
    else:
        payload = np.random.default_rng(args.seed).integers(0, 2, spec.info_count, dtype=np.uint8)
    fr = encode_frame(payload, spec)
    if args.json:
        print(json.dumps({"payload": _bitstr(fr.payload), "transmitted": _bitstr(fr.transmitted),
                          "code": spec.to_dict()}))
    else:
        print(_bitstr(fr.transmitted))
    return 0


def cmd_decode(args):
    spec = _code(args)
    cfg = _decoder(args)
    llr = _read_numbers(args.llrs)
    if args.decoder == "adaptive":
        out = adaptive_decode(llr, spec, cfg)
    elif args.decoder == "sc":
        out = sc_decode(prepare_llrs(llr, spec, cfg.sc_scheme), spec, cfg.sc_scheme)
    else:
        out = scl_decode(prepare_llrs(llr, spec, cfg.scl_scheme), spec, cfg, trace=args.trace)
    print(json.dumps({"payload": _bitstr(out.payload), "status": out.status,
                      "selected_path_rank": out.selected_path_rank}))
    if args.trace and out.trace:
        print(out.trace, file=sys.stderr)
    return 0 if out.decoded_ok else 1


def _campaign_from_args(args) -> CampaignConfig:
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
    else:
        if args.K is None:
            raise SystemExit("fer needs --config or --K")
        d = {"code": {"profile": "nr", "N": args.N, "K": args.K, "E": args.E,
                      "crc_length": args.crc, "pc_count": args.pc},
             "decoder": DecoderConfig(args.list_size, QuantScheme(args.sc_bits),
                                      QuantScheme(args.scl_bits)).to_dict()}
        if args.snr:
            d["snr_points"] = [[s, args.convention] for s in args.snr]
    for key in ("max_frames", "min_frame_errors", "master_seed", "worker_count", "noise",
                "mode", "batch_frames"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    return CampaignConfig.from_dict(d)


def check_points(points, config: CampaignConfig) -> list:
    """Invariant violations in a finished campaign (empty when all hold)."""
    bad = []
    for p in points:
        tag = f"snr {p.snr_db:g}"
        if not 0 <= p.undetected_errors <= p.frame_errors <= p.frames:
            bad.append(f"{tag}: error counts out of order")
        if p.scl_invocations > p.frames:
            bad.append(f"{tag}: more SCL invocations than frames")
        if config.mode != "scl" and p.sc_invocations != p.frames:
            bad.append(f"{tag}: sc_invocations != frames")
        if p.frame_errors < config.min_frame_errors and p.stopped_by == "errors":
            bad.append(f"{tag}: stopped early without a stop reason")
        lo, hi = p.ci
        if not lo <= p.fer <= hi:
            bad.append(f"{tag}: FER outside its confidence interval")
    return bad


def cmd_fer(args):
    cfg = _campaign_from_args(args)

    def show(p):
        lo, hi = p.ci
        print(f"{p.snr_db:7.2f} {p.convention}  frames={p.frames} errors={p.frame_errors} "
              f"fer={p.fer:.3e} [{lo:.2e}, {hi:.2e}] scl={p.scl_invocations} ({p.stopped_by})",
              file=sys.stderr)

    points = run_campaign(cfg, progress=show)
    if args.out:
        emit_results(points, args.out, args.format, cfg)
    else:
        rows = [p.row() for p in points]
        print(json.dumps({"config": cfg.to_dict(), "points": rows}))
    if args.self_test:
        bad = check_points(points, cfg)
        for b in bad:
            print("invariant violated:", b, file=sys.stderr)
        return 1 if bad else 0
    return 0


def cmd_sched(args):
    cycles = {"encoder": 97, "awgn": 76, "sc": args.t_sc, "scl": args.t_scl}
    cfg = PipelineConfig(n_sc=args.n_sc, buffer_capacity_packets=args.buffer,
                         cycle_costs=cycles, sc_fer=args.sc_fer,
                         pipelining_factor=args.pipelining)
    if args.action == "sizing":
        grid = args.fer_grid or [args.sc_fer]
        rows = sizing_report(cfg, grid, target_drop=args.target_drop, t_ratio=args.t_ratio)
        print(format_sizing(rows, args.format), end="")
        return 0
    stats = run_pipeline(cfg, args.frames, seed=args.seed, record_events=bool(args.events))
    if args.events:
        write_events(stats.events, args.events)
    print(json.dumps(stats.summary()))
    if args.self_test:
        ok = (stats.sc_pass + stats.sc_fail == stats.frames
              and stats.sc_fail == stats.scl_served + stats.dropped
              and stats.e_histogram.sum() == stats.intervals)
        return 0 if ok else 1
    return 0


def cmd_noise(args):
    if args.table:
        t = IcdfTable.build()
        rows = [{"origin": int(o), "start": int(s), "slope": int(k), "shift": int(h)}
                for o, s, k, h in zip(t.origin, t.start, t.slope, t.shift)]
        print(json.dumps({"segments": t.segments, "lsb": t.lsb, "rows": rows}))
        return 0
    src = HardwareNoise(args.seed, lanes=args.lanes)
    codes = src.codes(args.count)
    x = codes * src.table.lsb
    if args.out:
        (codes if args.raw else x.astype(np.float32)).tofile(args.out)
    if args.histogram:
        # one row per occupied 16-bit code
        vals, counts = np.unique(codes, return_counts=True)
        with open(args.histogram, "w") as fh:
            fh.write("code,value,count\n")
            for v, c in zip(vals, counts):
                fh.write(f"{int(v)},{float(v) * src.table.lsb!r},{int(c)}\n")
    print(json.dumps({"count": int(codes.size), "mean": float(x.mean()),
                      "variance": float(x.var()), "min": float(x.min()), "max": float(x.max())}))
    return 0


def cmd_preset(args):
    cfg = dci_preset(args.K, args.al)
    d = cfg.to_dict()
    print(json.dumps(d, indent=1 if args.pretty else None))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="a2scl", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode one payload")
    _add_code_args(p)
    p.add_argument("--payload", help="payload bits, e.g. 0110...")
    p.add_argument("--seed", type=int, default=0, help="random payload seed")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode analog LLRs (length E)")
    _add_code_args(p)
    _add_decoder_args(p)
    p.add_argument("llrs", nargs="?", help="file with LLRs (JSON list or text); default stdin")
    p.add_argument("--decoder", choices=("sc", "scl", "adaptive"), default="adaptive")
    p.add_argument("--trace", action="store_true", help="print the SCL path trace to stderr")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("fer", help="run an FER campaign")
    p.add_argument("--config", help="campaign config JSON")
    p.add_argument("--N", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--E", type=int)
    p.add_argument("--crc", type=int, default=24)
    p.add_argument("--pc", type=int, default=0)
    _add_decoder_args(p)
    p.add_argument("--snr", type=float, nargs="+")
    p.add_argument("--convention", choices=("esn0", "ebn0"), default="esn0")
    p.add_argument("--max-frames", type=int)
    p.add_argument("--min-frame-errors", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--worker-count", type=int)
    p.add_argument("--batch-frames", type=int)
    p.add_argument("--noise", choices=("float", "hardware"))
    p.add_argument("--mode", choices=("adaptive", "sc", "scl"))
    p.add_argument("--out", help="result file (.csv or .json)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--self-test", action="store_true",
                   help="exit nonzero if any result invariant is violated")
    p.set_defaults(func=cmd_fer)

    p = sub.add_parser("sched", help="SC/SCL pipeline model")
    p.add_argument("action", choices=("run", "sizing"))
    p.add_argument("--n-sc", type=int, default=18)
    p.add_argument("--buffer", type=int, default=2)
    p.add_argument("--t-sc", type=int, default=221)
    p.add_argument("--t-scl", type=int, default=1073)
    p.add_argument("--pipelining", type=int, default=2)
    p.add_argument("--sc-fer", type=float, default=1e-3)
    p.add_argument("--frames", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--events", help="write the event trace CSV here")
    p.add_argument("--fer-grid", type=float, nargs="+")
    p.add_argument("--t-ratio", type=float, help="override T_SCL/T_SC in the sizing table")
    p.add_argument("--target-drop", type=float, default=1e-3)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--self-test", action="store_true")
    p.set_defaults(func=cmd_sched)

    p = sub.add_parser("noise", help="hardware-path Gaussian samples")
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lanes", type=int, default=16)
    p.add_argument("--out", help="write samples (float32, or int16 codes with --raw)")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--histogram", help="write a per-code histogram CSV here")
    p.add_argument("--table", action="store_true", help="dump the ICDF segment table")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("preset", help="DCI campaign config")
    p.add_argument("--K", type=int, required=True, choices=(64, 96, 128, 164))
    p.add_argument("--al", type=int, required=True, choices=(1, 2, 4, 8))
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_preset)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
