"""Operator entry point: test-file generation and batch benchmark runs.

Exit codes: 0 verified success, 1 verification failure, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import MODES, BenchConfig, PatternFileSpec, VerificationError, gen_file, run_mode, summarize

_SUFFIXES = {
    "k": 1 << 10,
    "kib": 1 << 10,
    "kb": 1000,
    "m": 1 << 20,
    "mib": 1 << 20,
    "mb": 1000_000,
    "g": 1 << 30,
    "gib": 1 << 30,
    "gb": 1000_000_000,
}


def parse_size(text: str) -> int:
    """Byte counts with optional suffix: 4096, 64K, 1MiB, 2G, 100MB."""
    raw = text.strip().lower()
    for suffix in sorted(_SUFFIXES, key=len, reverse=True):
        if raw.endswith(suffix):
            return int(float(raw[: -len(suffix)]) * _SUFFIXES[suffix])
    return int(raw)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggio",
        description="two-phase parallel file input: test files and benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a deterministic pattern file")
    gen.add_argument("--size", required=True, type=parse_size, help="file size in bytes (suffixes ok)")
    gen.add_argument("--path", required=True, help="destination path")

    bench = sub.add_parser("bench", help="run one benchmark mode")
    bench.add_argument("mode", choices=MODES)
    bench.add_argument("--executors", type=int, default=4)
    bench.add_argument("--nodes", type=int, default=1, help="emulated node count")
    bench.add_argument("--latency", type=float, default=0.0, help="inter-node latency, milliseconds")
    bench.add_argument(
        "--net-bandwidth", type=parse_size, default=None,
        help="cross-node transfer bandwidth, bytes/second (suffixes ok)",
    )
    bench.add_argument("--clients", type=int, default=4)
    bench.add_argument("--readers", type=int, default=4)
    bench.add_argument("--backend", choices=("os", "sim"), default="sim")
    bench.add_argument("--stripes", type=int, default=4)
    bench.add_argument("--stripe-width", type=parse_size, default=1 << 20)
    bench.add_argument("--overhead", type=float, default=1.0, help="per-piece overhead, milliseconds")
    bench.add_argument("--bandwidth", type=parse_size, default=100_000_000, help="per-stripe stream bandwidth, bytes/second")
    bench.add_argument("--file", required=True, help="pattern file (see: aggio gen)")
    bench.add_argument("--reps", type=int, default=1)
    bench.add_argument("--routing", choices=("direct", "broadcast"), default="direct")
    bench.add_argument("--csv", default=None, help="CSV output path")
    bench.add_argument("--bg-duration", type=float, default=None, help="overlap: fixed background load, seconds per executor")
    bench.add_argument("--segments", type=int, default=8, help="pipeline: segment count")
    bench.add_argument("--block-size", type=parse_size, default=1 << 20, help="pipeline: bytes per block")
    bench.add_argument("--compute-factor", type=float, default=2.0, help="pipeline: compute time per block / block read time")
    bench.add_argument("--transfer-size", type=parse_size, default=None, help="io-vs-net: bytes to read and ship")
    return parser


def _bench_config(args: argparse.Namespace) -> BenchConfig:
    path = Path(args.file)
    if not path.is_file():
        raise ValueError(f"pattern file not found: {path} (generate it with: aggio gen)")
    if args.executors % args.nodes != 0:
        raise ValueError(f"--nodes {args.nodes} does not divide --executors {args.executors}")
    return BenchConfig(
        mode=args.mode,
        file_path=str(path),
        file_size=path.stat().st_size,
        executors=args.executors,
        executors_per_node=args.executors // args.nodes,
        inter_node_latency=args.latency / 1000.0,
        inter_node_bandwidth=args.net_bandwidth,
        clients=args.clients,
        readers=args.readers,
        backend=args.backend,
        stripes=args.stripes,
        stripe_width=args.stripe_width,
        overhead=args.overhead / 1000.0,
        bandwidth=float(args.bandwidth),
        repetitions=args.reps,
        csv_path=args.csv,
        routing=args.routing,
        bg_duration=args.bg_duration,
        segments=args.segments,
        block_size=args.block_size,
        compute_factor=args.compute_factor,
        transfer_size=args.transfer_size,
    )


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            path = gen_file(PatternFileSpec(args.path, args.size))
            print(f"wrote {args.size} bytes to {path}")
            return 0
        cfg = _bench_config(args)
        records = run_mode(cfg)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 1
    modes = []
    for record in records:
        if record.mode not in modes:
            modes.append(record.mode)
    for mode in modes:
        rows = [r for r in records if r.mode == mode]
        print(f"{mode}: {summarize(rows)}")
        for r in rows:
            extras = []
            if isinstance(r.background_fraction, float):
                extras.append(f"background_fraction={r.background_fraction:.3f}")
            if isinstance(r.pre_migration_read_time, float):
                extras.append(
                    f"pre={r.pre_migration_read_time:.4f}s post={r.post_migration_read_time:.4f}s"
                )
            if mode == "io-vs-net" and isinstance(r.throughput, float):
                extras.append(f"io/net ratio={r.throughput:.2f}")
            if extras:
                print(f"  rep {r.repetition}: " + " ".join(extras))
    if cfg.csv_path:
        print(f"csv: {cfg.csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
