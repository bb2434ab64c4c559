from __future__ import annotations

import csv

import pytest

from aggio.bench import (
    CSV_FIELDS,
    BenchConfig,
    PatternFileSpec,
    VerificationError,
    bench_buffered,
    bench_io_vs_net,
    bench_migration,
    bench_naive,
    bench_overlap,
    client_slices,
    demo_pipeline,
    gen_file,
    run_mode,
    write_csv,
)
from aggio.cli import main, parse_size
from aggio.pattern import PATTERN_PERIOD, generate_pattern_file, pattern_slice

MIB = 1 << 20


def _fast_sim(cfg: BenchConfig) -> BenchConfig:
    cfg.stripes = 4
    cfg.stripe_width = 64 << 10
    cfg.overhead = 1e-3
    cfg.bandwidth = 500e6
    return cfg


# -- pattern files ---------------------------------------------------------------


def test_gen_file_size_zero(tmp_path):
    path = gen_file(PatternFileSpec(str(tmp_path / "empty.bin"), 0))
    assert path.stat().st_size == 0


def test_gen_file_rule(tmp_path):
    path = gen_file(PatternFileSpec(str(tmp_path / "p.bin"), 600))
    data = path.read_bytes()
    assert data[0] == 0
    assert data[251] == 0
    assert data[300] == 49
    assert data == pattern_slice(0, 600)
    assert len(data) == 600


def test_pattern_slice_alignment():
    assert pattern_slice(0, PATTERN_PERIOD) == bytes(range(PATTERN_PERIOD))
    assert pattern_slice(250, 3) == bytes([250, 0, 1])
    assert pattern_slice(1000, 0) == b""


def test_client_slices_partition_file():
    slices = client_slices(1000, 3)
    assert slices == [(0, 334), (334, 333), (667, 333)]
    assert sum(n for _, n in slices) == 1000


# -- CSV ----------------------------------------------------------------------------


def test_csv_header_is_exactly_the_record_fields(tmp_path):
    assert CSV_FIELDS == (
        "mode",
        "clients",
        "readers",
        "repetition",
        "makespan",
        "throughput",
        "background_fraction",
        "io_time",
        "permutation_time",
        "overhead_time",
        "pre_migration_read_time",
        "post_migration_read_time",
    )
    out = tmp_path / "rows.csv"
    cfg = _fast_sim(
        BenchConfig(mode="naive", clients=2, repetitions=2, csv_path=str(out))
    )
    cfg.file_path = str(tmp_path / "f.bin")
    cfg.file_size = 256 << 10
    generate_pattern_file(cfg.file_path, cfg.file_size)
    records = run_mode(cfg)
    assert len(records) == 2
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_FIELDS)
    assert len(rows) == 3
    assert rows[1][0] == "naive"
    assert rows[1][3] == "0" and rows[2][3] == "1"
    # unused fields are empty
    assert rows[1][CSV_FIELDS.index("pre_migration_read_time")] == ""


# -- mode smokes -----------------------------------------------------------------------


@pytest.fixture()
def small_file(tmp_path):
    path = tmp_path / "bench.bin"
    generate_pattern_file(path, 1 * MIB)
    return str(path)


def test_bench_naive_smoke(small_file):
    cfg = _fast_sim(BenchConfig(mode="naive", file_path=small_file, file_size=1 * MIB, clients=4))
    records = bench_naive(cfg)
    assert len(records) == 1
    assert records[0].makespan > 0
    assert records[0].throughput > 0


def test_bench_naive_detects_corruption(tmp_path):
    path = tmp_path / "bad.bin"
    generate_pattern_file(path, 64 << 10)
    raw = bytearray(path.read_bytes())
    raw[100] ^= 0xFF
    path.write_bytes(raw)
    cfg = _fast_sim(BenchConfig(mode="naive", file_path=str(path), file_size=64 << 10, clients=2))
    with pytest.raises(VerificationError):
        bench_naive(cfg)


def test_bench_buffered_smoke(small_file):
    cfg = _fast_sim(
        BenchConfig(mode="buffered", file_path=small_file, file_size=1 * MIB, clients=4, readers=4)
    )
    records = bench_buffered(cfg)
    assert len(records) == 1
    assert records[0].io_time > 0
    assert records[0].makespan > 0


def test_buffered_matches_naive_at_equal_concurrency(tmp_path):
    """With clients == readers == executors the service pays only bounded
    redistribution overhead over the naive baseline."""
    import statistics

    path = tmp_path / "paired.bin"
    generate_pattern_file(path, 16 * MIB)
    base = dict(file_path=str(path), file_size=16 * MIB, executors=4, clients=4, repetitions=2)
    naive_rows = bench_naive(BenchConfig(mode="naive", **base))
    buffered_rows = bench_buffered(BenchConfig(mode="buffered", readers=4, **base))
    naive = statistics.mean(r.makespan for r in naive_rows)
    buffered = statistics.mean(r.makespan for r in buffered_rows)
    assert buffered / naive < 1.25
    assert naive / buffered < 1.25


def test_single_reader_serves_every_client(small_file):
    """readers=1: one chunk, one backend read, one fragment per client."""
    from aggio.runtime import RuntimeConfig, start_runtime
    from aggio.service import FileOptions, InputService
    from aggio.storage import OsFileBackend

    backends = []

    def factory(path):
        be = OsFileBackend(path)
        backends.append(be)
        return be

    with start_runtime(RuntimeConfig(4, 4)) as rt:
        svc = InputService(rt, factory)
        handle = svc.open_sync(small_file, FileOptions(1))
        session = svc.start_session_sync(handle, 1 * MIB, 0)
        for k in range(64):
            data = svc.read_sync(session, 16 << 10, k * (16 << 10))
            assert bytes(data) == pattern_slice(k * (16 << 10), 16 << 10)
        metrics = svc.metrics_snapshot(session)
        assert metrics.fragments == 64
        assert backends[0].read_count == 1
        svc.close_session_sync(session)
        svc.close_sync(handle)


def test_overlap_zero_background_duration(small_file):
    cfg = _fast_sim(
        BenchConfig(
            mode="overlap", file_path=small_file, file_size=1 * MIB,
            clients=4, readers=4, executors=2, bg_duration=0.0,
        )
    )
    rows = bench_overlap(cfg)
    blocking = next(r for r in rows if r.mode == "overlap-naive")
    baseline = next(r for r in rows if r.mode == "overlap-baseline")
    assert blocking.background_fraction < 0.05
    assert blocking.makespan < 1.5 * baseline.makespan


def test_bench_buffered_broadcast_routing(small_file):
    cfg = _fast_sim(
        BenchConfig(
            mode="buffered", file_path=small_file, file_size=1 * MIB,
            clients=3, readers=2, routing="broadcast",
        )
    )
    records = bench_buffered(cfg)
    assert len(records) == 1


def test_bench_overlap_smoke(small_file):
    cfg = _fast_sim(
        BenchConfig(
            mode="overlap", file_path=small_file, file_size=1 * MIB,
            clients=4, readers=4, executors=2,
        )
    )
    records = bench_overlap(cfg)
    modes = [r.mode for r in records]
    assert modes == ["overlap", "overlap-baseline", "overlap-naive"]
    assert all(isinstance(r.background_fraction, float) for r in records)


def test_bench_migration_smoke(small_file):
    cfg = _fast_sim(
        BenchConfig(
            mode="migration", file_path=small_file, file_size=1 * MIB,
            executors=2, executors_per_node=1,
            inter_node_latency=2e-3, inter_node_bandwidth=1e9,
        )
    )
    records = bench_migration(cfg)
    assert len(records) == 1
    assert records[0].pre_migration_read_time > 0
    assert records[0].post_migration_read_time > 0


def test_bench_migration_correct_without_latency(small_file):
    """latency=0: locality is unmeasurable but both phases stay byte-exact."""
    cfg = BenchConfig(
        mode="migration", file_path=small_file, file_size=1 * MIB,
        executors=2, executors_per_node=1, backend="os",
    )
    records = bench_migration(cfg)
    assert records[0].pre_migration_read_time > 0
    assert records[0].post_migration_read_time > 0


def test_bench_migration_wants_two_nodes(small_file):
    cfg = BenchConfig(mode="migration", file_path=small_file, file_size=1 * MIB, executors=4)
    with pytest.raises(ValueError):
        bench_migration(cfg)


def test_bench_io_vs_net_zero_bytes(small_file):
    cfg = _fast_sim(
        BenchConfig(
            mode="io-vs-net", file_path=small_file, file_size=1 * MIB,
            executors=2, executors_per_node=1, transfer_size=0,
        )
    )
    records = bench_io_vs_net(cfg)
    assert records[0].io_time < 0.05
    assert records[0].permutation_time < 0.05


def test_bench_io_vs_net_reports_ratio(small_file):
    cfg = _fast_sim(
        BenchConfig(
            mode="io-vs-net", file_path=small_file, file_size=1 * MIB,
            executors=2, executors_per_node=1,
            inter_node_latency=1e-3, inter_node_bandwidth=1e9,
            transfer_size=1 * MIB, overhead=5e-3, bandwidth=50e6,
        )
    )
    records = bench_io_vs_net(cfg)
    assert records[0].io_time > records[0].permutation_time
    assert records[0].throughput > 1.0  # the reported ratio


def test_io_vs_net_ratio_exceeds_six_at_64_mib(tmp_path):
    """Default striped-backend parameters put one 64 MiB backend read well
    over six times the cost of shipping the same bytes across a node
    boundary."""
    path = tmp_path / "ratio.bin"
    generate_pattern_file(path, 64 * MIB)
    cfg = BenchConfig(
        mode="io-vs-net", file_path=str(path), file_size=64 * MIB,
        executors=2, executors_per_node=1,
        inter_node_latency=5e-3, inter_node_bandwidth=1e9,
    )
    records = bench_io_vs_net(cfg)
    assert records[0].throughput >= 6.0


def test_pipeline_hides_reads_behind_compute(tmp_path):
    """Four workers, compute twice the block read time: nearly all read
    latency after the pipeline fill is hidden."""
    import statistics

    path = tmp_path / "pipehide.bin"
    workers, block, segments = 4, 1 * MIB, 8
    size = workers * block * segments
    generate_pattern_file(path, size)
    cfg = BenchConfig(
        mode="pipeline", file_path=str(path), file_size=size,
        clients=workers, block_size=block, segments=segments,
        compute_factor=2.0, repetitions=3,
    )
    records = demo_pipeline(cfg)
    assert statistics.mean(r.background_fraction for r in records) > 0.8


def test_pipeline_without_compute_hides_nothing(tmp_path):
    path = tmp_path / "pipenone.bin"
    workers, block, segments = 4, 256 << 10, 4
    size = workers * block * segments
    generate_pattern_file(path, size)
    cfg = BenchConfig(
        mode="pipeline", file_path=str(path), file_size=size,
        clients=workers, block_size=block, segments=segments,
        compute_factor=0.0,
    )
    records = demo_pipeline(cfg)
    assert records[0].background_fraction < 0.5


def test_pipeline_byte_exact_and_reports_fraction(tmp_path):
    path = tmp_path / "pipe.bin"
    workers, block, segments = 4, 64 << 10, 4
    size = workers * block * segments
    generate_pattern_file(path, size)
    cfg = _fast_sim(
        BenchConfig(
            mode="pipeline", file_path=str(path), file_size=size,
            clients=workers, block_size=block, segments=segments,
            compute_factor=1.0,
        )
    )
    records = demo_pipeline(cfg)
    assert len(records) == 1
    assert 0.0 <= records[0].background_fraction <= 1.0


def test_pipeline_single_worker_degenerate(tmp_path):
    path = tmp_path / "pipe1.bin"
    block, segments = 32 << 10, 3
    size = block * segments
    generate_pattern_file(path, size)
    cfg = _fast_sim(
        BenchConfig(
            mode="pipeline", file_path=str(path), file_size=size,
            clients=1, block_size=block, segments=segments, compute_factor=0.0,
            executors=2,
        )
    )
    records = demo_pipeline(cfg)
    assert len(records) == 1


# -- CLI ---------------------------------------------------------------------------------


def test_parse_size():
    assert parse_size("4096") == 4096
    assert parse_size("64K") == 64 << 10
    assert parse_size("1MiB") == 1 << 20
    assert parse_size("2g") == 2 << 30
    assert parse_size("100MB") == 100_000_000


def test_cli_gen_and_bench_roundtrip(tmp_path, capsys):
    path = tmp_path / "cli.bin"
    assert main(["gen", "--size", "256K", "--path", str(path)]) == 0
    assert path.stat().st_size == 256 << 10
    out_csv = tmp_path / "out.csv"
    code = main(
        [
            "bench", "naive",
            "--file", str(path),
            "--clients", "2",
            "--executors", "2",
            "--backend", "sim",
            "--stripes", "2",
            "--stripe-width", "64K",
            "--overhead", "1",
            "--bandwidth", "500M",
            "--csv", str(out_csv),
        ]
    )
    assert code == 0
    captured = capsys.readouterr()
    assert "naive:" in captured.out
    with open(out_csv) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_FIELDS)


def test_cli_missing_file_is_config_error(tmp_path):
    assert main(["bench", "naive", "--file", str(tmp_path / "missing.bin")]) == 2


def test_cli_bad_node_split_is_config_error(tmp_path):
    path = tmp_path / "x.bin"
    generate_pattern_file(path, 1024)
    assert main(["bench", "naive", "--file", str(path), "--executors", "3", "--nodes", "2"]) == 2


def test_cli_verification_failure_exits_1(tmp_path):
    path = tmp_path / "corrupt.bin"
    generate_pattern_file(path, 64 << 10)
    raw = bytearray(path.read_bytes())
    raw[5] ^= 1
    path.write_bytes(raw)
    code = main(
        [
            "bench", "naive", "--file", str(path),
            "--clients", "2", "--executors", "2",
            "--stripes", "2", "--stripe-width", "64K", "--bandwidth", "500M",
        ]
    )
    assert code == 1


def test_cli_rejects_unknown_mode(tmp_path, capsys):
    path = tmp_path / "x.bin"
    generate_pattern_file(path, 1024)
    with pytest.raises(SystemExit) as exc:
        main(["bench", "warp", "--file", str(path)])
    assert exc.value.code == 2
