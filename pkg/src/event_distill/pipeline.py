"""End-to-end orchestration: parse, bin, embed, filter, compress, write.

``run_pipeline`` chains the stages under one config, times each stage, and
returns the compressed sequence together with a ``RunReport`` that makes the
reduction observable: bin count, kept count, per-window diversity and cluster
counts, and the final compression ratio. ``bench`` wraps the same chain
around a generated stream and reports throughput per stage.

Component errors propagate with their original type (so exit-code mapping by
class still works) and gain a ``stage`` attribute naming the failing stage.
"""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .binning import Bin, bin_stream
from .compression import (
    CompressedSequence,
    CompressionConfig,
    compress_sequence,
    cross_modal_filter,
    sample_baseline,
    write_cmp1,
    write_json,
)
from .embedding import Provider, ProviderSpec, embed_bins, embed_query
from .errors import ConfigError
from .events import EventStream, SensorGeometry, parse_csv, parse_evbin
from .synth import SceneSpec, Segment, write_synthetic

log = logging.getLogger("event_distill")

INPUT_FORMATS = ("evbin", "csv")
OUTPUT_FORMATS = ("cmp1", "json")


@dataclass
class PipelineConfig:
    """Everything one run needs. CSV input requires explicit geometry."""

    input_path: Union[str, Path]
    query: str
    input_format: str = "evbin"
    geometry: Optional[SensorGeometry] = None
    bin_width_us: int = 100_000
    provider: ProviderSpec = field(default_factory=lambda: ProviderSpec(kind="hash"))
    compression: CompressionConfig = field(default_factory=CompressionConfig)
    output_path: Optional[Union[str, Path]] = None
    output_format: str = "cmp1"
    threads: int = 1
    baseline: Optional[str] = None  # None, "random", or "interval"
    budget: Optional[int] = None
    seed: int = 0

    def validate(self) -> None:
        if self.input_format not in INPUT_FORMATS:
            raise ConfigError(f"input format must be one of {INPUT_FORMATS}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output format must be one of {OUTPUT_FORMATS}")
        if self.input_format == "csv" and self.geometry is None:
            raise ConfigError("CSV input needs sensor geometry (width and height)")
        if self.bin_width_us < 1:
            raise ConfigError(f"bin width must be >= 1 us, got {self.bin_width_us}")
        if self.threads < 1:
            raise ConfigError(f"thread count must be >= 1, got {self.threads}")
        if self.baseline is not None and self.budget is None:
            raise ConfigError("baseline sampling needs a --budget")
        if not self.query:
            raise ConfigError("query text must be non-empty")


@dataclass
class RunReport:
    """Observable summary of one pipeline run."""

    event_count: int
    span_us: int
    bin_count: int
    kept_count: int
    fallback_used: bool
    token_count: int
    compression_ratio: float
    window_stats: list[dict]
    stage_seconds: dict[str, float]
    total_seconds: float
    output_path: Optional[str] = None
    output_bytes: int = 0

    def to_dict(self) -> dict:
        return {
            "event_count": self.event_count,
            "span_us": self.span_us,
            "bin_count": self.bin_count,
            "kept_count": self.kept_count,
            "fallback_used": self.fallback_used,
            "token_count": self.token_count,
            "compression_ratio": self.compression_ratio,
            "window_stats": self.window_stats,
            "stage_seconds": self.stage_seconds,
            "total_seconds": self.total_seconds,
            "output_path": self.output_path,
            "output_bytes": self.output_bytes,
        }

    def format_table(self) -> str:
        lines = [
            f"events            {self.event_count}",
            f"span              {self.span_us} us",
            f"bins              {self.bin_count}",
            f"kept bins         {self.kept_count}"
            + (" (fallback top-1)" if self.fallback_used else ""),
            f"output tokens     {self.token_count}",
            f"compression       {self.compression_ratio:.2f}x (bins / tokens)",
        ]
        for name, seconds in self.stage_seconds.items():
            lines.append(f"stage {name:<12}{seconds * 1000:.1f} ms")
        lines.append(f"total             {self.total_seconds * 1000:.1f} ms")
        if self.output_path:
            lines.append(f"wrote             {self.output_path} ({self.output_bytes} bytes)")
        return "\n".join(lines)


class _StageClock:
    def __init__(self) -> None:
        self.seconds: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        except Exception as exc:
            if not hasattr(exc, "stage"):
                try:
                    exc.stage = name  # type: ignore[attr-defined]
                except Exception:
                    pass
            raise
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - start
            log.debug("stage %s finished in %.3f ms", name, self.seconds[name] * 1000)


def _parse_input(config: PipelineConfig) -> EventStream:
    if config.input_format == "csv":
        data = Path(config.input_path).read_bytes()
        assert config.geometry is not None
        return parse_csv(data, config.geometry)
    return parse_evbin(config.input_path)


def bin_time_ranges(bins: list[Bin]) -> np.ndarray:
    ranges = np.empty((len(bins), 2), dtype=np.uint64)
    for i, b in enumerate(bins):
        ranges[i, 0] = b.t_start
        ranges[i, 1] = b.t_end
    return ranges


def run_pipeline(config: PipelineConfig) -> tuple[CompressedSequence, RunReport]:
    """Execute the full chain and write the output artifact if configured."""
    config.validate()
    clock = _StageClock()
    wall_start = time.perf_counter()

    with clock.stage("parse"):
        stream = _parse_input(config)
        if stream.is_empty:
            raise ConfigError(f"{config.input_path}: stream is empty, nothing to compress")
        if stream.sort_repairs:
            log.warning("input had %d out-of-order adjacencies, repaired", stream.sort_repairs)

    with clock.stage("bin"):
        bins = bin_stream(stream, config.bin_width_us)
        ranges = bin_time_ranges(bins)

    with clock.stage("embed"):
        provider: Provider = config.provider.build(threads=config.threads)
        selector, cluster = embed_bins(bins, provider)
        query_vec = embed_query(config.query, provider)

    with clock.stage("filter"):
        filtered = cross_modal_filter(
            selector, cluster, query_vec, config.compression, time_ranges=ranges
        )

    with clock.stage("compress"):
        if config.baseline is not None:
            assert config.budget is not None
            sequence = sample_baseline(
                filtered, config.baseline, config.budget, seed=config.seed
            )
        else:
            sequence = compress_sequence(filtered, config.compression)

    output_bytes = 0
    if config.output_path is not None:
        with clock.stage("write"):
            if config.output_format == "cmp1":
                output_bytes = write_cmp1(sequence, config.output_path)
            else:
                output_bytes = write_json(sequence, config.output_path)

    total = time.perf_counter() - wall_start
    for ws in sequence.window_stats:
        log.info(
            "window %d: size=%d diversity=%.4f clusters=%d%s",
            ws.index,
            ws.size,
            ws.diversity,
            ws.cluster_count,
            " passthrough" if ws.passthrough else "",
        )
    report = RunReport(
        event_count=len(stream),
        span_us=stream.span_us,
        bin_count=len(bins),
        kept_count=filtered.k,
        fallback_used=filtered.fallback_used,
        token_count=sequence.token_count,
        compression_ratio=len(bins) / sequence.token_count,
        window_stats=[
            {
                "index": ws.index,
                "size": ws.size,
                "diversity": ws.diversity,
                "cluster_count": ws.cluster_count,
                "passthrough": ws.passthrough,
            }
            for ws in sequence.window_stats
        ],
        stage_seconds=clock.seconds,
        total_seconds=total,
        output_path=str(config.output_path) if config.output_path else None,
        output_bytes=output_bytes,
    )
    return sequence, report


# ---------------------------------------------------------------------------
# Benchmark harness


def bench_scene(
    events: int,
    span_us: Optional[int] = None,
    geometry: SensorGeometry = SensorGeometry(640, 480),
    segments: int = 16,
) -> SceneSpec:
    """Alternating noise/blank scene carrying ``events`` over ``span_us``.

    Noise segments share the event budget; blank segments realize the empty
    stretches the compressor is meant to collapse. Default span is one
    microsecond per event.
    """
    if events < 1:
        raise ConfigError(f"benchmark scale must be >= 1 events, got {events}")
    span = span_us if span_us is not None else events
    segments = max(2, segments)
    seg_duration = max(1, span // segments)
    noise_count = (segments + 1) // 2
    rate = events / noise_count / (seg_duration / 1e6)
    parts = []
    for i in range(segments):
        if i % 2 == 0:
            parts.append(Segment("static-noise", seg_duration, rate))
        else:
            parts.append(Segment("blank", seg_duration))
    return SceneSpec(geometry=geometry, segments=tuple(parts))


def bench(
    events: int,
    span_us: Optional[int] = None,
    bin_width_us: int = 100_000,
    provider: Optional[ProviderSpec] = None,
    query: str = "benchmark probe",
    tau: float = -1.0,
    window_size: int = 8,
    threads: int = 1,
    seed: int = 0,
    workdir: Optional[Union[str, Path]] = None,
    keep_artifacts: bool = False,
) -> dict:
    """Generate a synthetic stream, run the full chain, and time every stage.

    The stream is written to disk and parsed back through a memory map, so
    resident growth past the OS-managed input pages is bounded by bin count.
    Returns a JSON-ready report with per-stage seconds, events/s, bins/s,
    token counts, and peak RSS.
    """
    import tempfile

    import psutil

    provider = provider or ProviderSpec(kind="hash")
    scene = bench_scene(events, span_us=span_us)
    process = psutil.Process()
    clock = _StageClock()
    rss: dict[str, int] = {"start": process.memory_info().rss}

    own_dir = workdir is None
    if own_dir:
        workdir = Path(tempfile.mkdtemp(prefix="event-distill-bench-"))
    else:
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)
    stream_path = workdir / "bench.evs"
    try:
        with clock.stage("generate"):
            file_bytes = write_synthetic(scene, seed, stream_path)
        rss["generate"] = process.memory_info().rss

        with clock.stage("parse"):
            stream = parse_evbin(stream_path)
        rss["parse"] = process.memory_info().rss

        with clock.stage("bin"):
            bins = bin_stream(stream, bin_width_us)
            ranges = bin_time_ranges(bins)
        rss["bin"] = process.memory_info().rss

        with clock.stage("embed"):
            built = provider.build(threads=threads)
            selector, cluster = embed_bins(bins, built)
            query_vec = embed_query(query, built)
        rss["embed"] = process.memory_info().rss

        comp = CompressionConfig(tau=tau, window_size=window_size)
        with clock.stage("filter"):
            filtered = cross_modal_filter(selector, cluster, query_vec, comp, time_ranges=ranges)
        with clock.stage("compress"):
            sequence = compress_sequence(filtered, comp)
        rss["compress"] = process.memory_info().rss
    finally:
        if not keep_artifacts:
            stream_path.unlink(missing_ok=True)
            if own_dir:
                try:
                    Path(workdir).rmdir()
                except OSError:
                    pass

    total = sum(clock.seconds.values())
    event_count = len(stream)
    report = {
        "events": event_count,
        "span_us": stream.span_us,
        "file_bytes": file_bytes,
        "bins": len(bins),
        "kept": filtered.k,
        "tokens": sequence.token_count,
        "max_window_clusters": max(ws.cluster_count for ws in sequence.window_stats),
        "compression_ratio": len(bins) / sequence.token_count,
        "stage_seconds": clock.seconds,
        "total_seconds": total,
        "events_per_second": event_count / total if total > 0 else float("inf"),
        "bins_per_second": len(bins) / clock.seconds["bin"]
        if clock.seconds.get("bin", 0) > 0
        else float("inf"),
        "rss_bytes": rss,
        "rss_peak_bytes": max(rss.values()),
        "rss_growth_after_parse_bytes": max(
            rss[k] for k in ("bin", "embed", "compress")
        )
        - rss["parse"],
        "threads": threads,
        "seed": seed,
    }
    return report


def format_bench_table(report: dict) -> str:
    lines = [
        f"events            {report['events']}",
        f"span              {report['span_us']} us",
        f"file size         {report['file_bytes']} bytes",
        f"bins              {report['bins']}",
        f"kept bins         {report['kept']}",
        f"output tokens     {report['tokens']}",
        f"compression       {report['compression_ratio']:.2f}x",
    ]
    for name, seconds in report["stage_seconds"].items():
        lines.append(f"stage {name:<12}{seconds:.3f} s")
    lines.append(f"total             {report['total_seconds']:.3f} s")
    lines.append(f"throughput        {report['events_per_second']:,.0f} events/s")
    lines.append(f"rss peak          {report['rss_peak_bytes'] / 1e6:.1f} MB")
    lines.append(
        f"rss growth        {report['rss_growth_after_parse_bytes'] / 1e6:.1f} MB past parse"
    )
    return "\n".join(lines)


def write_bench_report(report: dict, sink: Union[str, Path]) -> None:
    Path(sink).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
