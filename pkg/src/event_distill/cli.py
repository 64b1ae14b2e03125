"""Command-line interface.

Subcommands: ``compress`` (full pipeline), ``bin`` (bin statistics),
``render`` (bins to PPM/PNG frames), ``filter`` (query filtering only),
``bench`` (throughput harness), ``gen`` (synthetic streams).

Exit codes: 0 success, 2 configuration or usage error, 3 malformed input
file, 4 embedding provider failure, 5 I/O error, 1 anything else. Set
``EVENT_DISTILL_LOG`` (e.g. DEBUG, INFO) to control log verbosity.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from pathlib import Path

import click

from . import __version__
from .binning import DEFAULT_MAX_COUNT, bin_stream, render_frame, write_png, write_ppm
from .compression import CompressionConfig, cross_modal_filter
from .embedding import ProviderSpec, embed_bins, embed_query
from .errors import ConfigError, EventDistillError, FormatError, ProviderError
from .events import SensorGeometry, parse_csv, parse_evbin, write_evbin
from .pipeline import (
    PipelineConfig,
    bench as run_bench,
    bin_time_ranges,
    format_bench_table,
    run_pipeline,
    write_bench_report,
)
from .synth import PATTERNS, SceneSpec, Segment, write_synthetic

_EXIT_CODES = (
    (ConfigError, 2),
    (FormatError, 3),
    (ProviderError, 4),
    (OSError, 5),
    (EventDistillError, 1),
)


def _configure_logging() -> None:
    level_name = os.environ.get("EVENT_DISTILL_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _fail(exc: BaseException) -> None:
    stage = getattr(exc, "stage", None)
    where = f" in stage '{stage}'" if stage else ""
    click.echo(f"error{where}: {exc}", err=True)
    for exc_type, code in _EXIT_CODES:
        if isinstance(exc, exc_type):
            sys.exit(code)
    sys.exit(1)


def _guarded(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (EventDistillError, OSError) as exc:
            _fail(exc)

    return wrapper


def _input_options(func):
    for option in reversed(
        [
            click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Input stream file."),
            click.option("--format", "input_format", type=click.Choice(["evbin", "csv"]), default="evbin", show_default=True, help="Input encoding."),
            click.option("--width", type=int, default=None, help="Sensor width (CSV only)."),
            click.option("--height", type=int, default=None, help="Sensor height (CSV only)."),
        ]
    ):
        func = option(func)
    return func


def _geometry_from_flags(input_format: str, width: int | None, height: int | None) -> SensorGeometry | None:
    if input_format == "csv":
        if width is None or height is None:
            raise ConfigError("CSV input needs --width and --height")
        return SensorGeometry(width, height)
    if width is not None or height is not None:
        raise ConfigError("--width/--height apply to CSV input only; EVS1 carries geometry")
    return None


def _load_stream(input_path: str, input_format: str, width: int | None, height: int | None):
    geometry = _geometry_from_flags(input_format, width, height)
    if input_format == "csv":
        return parse_csv(Path(input_path).read_bytes(), geometry)
    return parse_evbin(input_path)


@click.group()
@click.version_option(version=__version__, prog_name="event-distill")
def main() -> None:
    """Adaptive compression for long event-camera streams."""
    _configure_logging()


@main.command()
@_input_options
@click.option("--query", required=True, help="Query text guiding bin selection.")
@click.option("--bin-us", type=int, default=100_000, show_default=True, help="Bin width in microseconds.")
@click.option("--tau", type=float, default=0.5, show_default=True, help="Similarity threshold in [-1, 1].")
@click.option("--window", type=int, default=8, show_default=True, help="Bins per clustering window.")
@click.option("--remainder", type=click.Choice(["shrink", "passthrough"]), default="shrink", show_default=True, help="Remainder window policy.")
@click.option("--embedder", default="hash:64:0", show_default=True, help="hash:D[:SEED], file:PATH, or an http(s) URL.")
@click.option("--output", "output_path", type=click.Path(dir_okay=False), default=None, help="Output artifact path [default: input with .cmp1/.json suffix].")
@click.option("--output-format", type=click.Choice(["cmp1", "json"]), default="cmp1", show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for random baseline sampling.")
@click.option("--baseline", type=click.Choice(["random", "interval"]), default=None, help="Replace clustering with a sampling baseline.")
@click.option("--budget", type=int, default=None, help="Token budget for baseline sampling.")
@_guarded
def compress(
    input_path, input_format, width, height, query, bin_us, tau, window, remainder,
    embedder, output_path, output_format, threads, seed, baseline, budget,
) -> None:
    """Run the full pipeline and write the compressed sequence."""
    if output_path is None:
        output_path = str(Path(input_path).with_suffix(f".{output_format}"))
    config = PipelineConfig(
        input_path=input_path,
        input_format=input_format,
        geometry=_geometry_from_flags(input_format, width, height),
        query=query,
        bin_width_us=bin_us,
        provider=ProviderSpec.parse(embedder),
        compression=CompressionConfig(
            tau=tau,
            window_size=window,
            remainder_policy="shrunk-window" if remainder == "shrink" else "passthrough",
        ),
        output_path=output_path,
        output_format=output_format,
        threads=threads,
        baseline=baseline,
        budget=budget,
        seed=seed,
    )
    _, report = run_pipeline(config)
    click.echo(report.format_table())


@main.command(name="bin")
@_input_options
@click.option("--bin-us", type=int, default=100_000, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
@_guarded
def bin_cmd(input_path, input_format, width, height, bin_us, as_json) -> None:
    """Partition the stream and print per-bin statistics."""
    stream = _load_stream(input_path, input_format, width, height)
    bins = bin_stream(stream, bin_us)
    if as_json:
        payload = {
            "event_count": len(stream),
            "span_us": stream.span_us,
            "bin_width_us": bin_us,
            "bins": [
                {"index": b.index, "t_start": b.t_start, "t_end": b.t_end, "events": len(b)}
                for b in bins
            ],
        }
        click.echo(json.dumps(payload, indent=2))
        return
    click.echo(f"{len(stream)} events over {stream.span_us} us -> {len(bins)} bins")
    for b in bins:
        click.echo(f"bin {b.index:>6}  [{b.t_start}, {b.t_end})  {len(b)} events")


@main.command()
@_input_options
@click.option("--bin-us", type=int, default=100_000, show_default=True)
@click.option("--output", "output_dir", required=True, type=click.Path(file_okay=False), help="Directory for frame images.")
@click.option("--image-format", type=click.Choice(["ppm", "png"]), default="ppm", show_default=True)
@click.option("--max-count", type=int, default=DEFAULT_MAX_COUNT, show_default=True, help="Accumulation count mapped to full color.")
@_guarded
def render(input_path, input_format, width, height, bin_us, output_dir, image_format, max_count) -> None:
    """Rasterize each bin to a polarity frame image (red +, blue -)."""
    stream = _load_stream(input_path, input_format, width, height)
    bins = bin_stream(stream, bin_us)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    writer = write_ppm if image_format == "ppm" else write_png
    for b in bins:
        frame = render_frame(b)
        writer(frame, out / f"frame_{b.index:06d}.{image_format}", max_count=max_count)
    click.echo(f"wrote {len(bins)} frames to {out}")


@main.command(name="filter")
@_input_options
@click.option("--query", required=True)
@click.option("--bin-us", type=int, default=100_000, show_default=True)
@click.option("--tau", type=float, default=0.5, show_default=True)
@click.option("--embedder", default="hash:64:0", show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@_guarded
def filter_cmd(input_path, input_format, width, height, query, bin_us, tau, embedder, threads) -> None:
    """Query-guided selection only; prints kept bin indices, one per line."""
    stream = _load_stream(input_path, input_format, width, height)
    bins = bin_stream(stream, bin_us)
    provider = ProviderSpec.parse(embedder).build(threads=threads)
    selector, cluster = embed_bins(bins, provider)
    query_vec = embed_query(query, provider)
    config = CompressionConfig(tau=tau)
    filtered = cross_modal_filter(
        selector, cluster, query_vec, config, time_ranges=bin_time_ranges(bins)
    )
    for index in filtered.kept_indices:
        click.echo(int(index))


@main.command()
@click.option("--events", type=int, required=True, help="Synthetic stream size in events.")
@click.option("--span", "span_us", type=int, default=None, help="Stream span in microseconds [default: 1 us per event].")
@click.option("--bin-us", type=int, default=100_000, show_default=True)
@click.option("--tau", type=float, default=-1.0, show_default=True)
@click.option("--window", type=int, default=8, show_default=True)
@click.option("--embedder", default="hash:64:0", show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None, help="Also write the JSON report here.")
@_guarded
def bench(events, span_us, bin_us, tau, window, embedder, threads, seed, report_path) -> None:
    """Generate a synthetic stream and time every stage."""
    report = run_bench(
        events=events,
        span_us=span_us,
        bin_width_us=bin_us,
        provider=ProviderSpec.parse(embedder),
        tau=tau,
        window_size=window,
        threads=threads,
        seed=seed,
    )
    click.echo(format_bench_table(report))
    if report_path:
        write_bench_report(report, report_path)
        click.echo(f"report written to {report_path}")


@main.command()
@click.option("--segment", "segments", multiple=True, required=True, help="PATTERN:DURATION_US:RATE, e.g. static-noise:1000000:5000. Repeatable.")
@click.option("--width", type=int, default=640, show_default=True)
@click.option("--height", type=int, default=480, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@_guarded
def gen(segments, width, height, seed, output_path) -> None:
    """Write a deterministic synthetic EVS1 stream."""
    parsed = []
    for text in segments:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"segment must be PATTERN:DURATION_US[:RATE], got {text!r}")
        pattern = parts[0]
        if pattern not in PATTERNS:
            raise ConfigError(f"unknown pattern {pattern!r}, expected one of {PATTERNS}")
        try:
            duration = int(parts[1])
            rate = float(parts[2]) if len(parts) == 3 else 0.0
        except ValueError:
            raise ConfigError(f"non-numeric field in segment {text!r}") from None
        parsed.append(Segment(pattern, duration, rate))
    spec = SceneSpec(geometry=SensorGeometry(width, height), segments=tuple(parsed))
    written = write_synthetic(spec, seed, output_path)
    click.echo(f"wrote {spec.total_events} events ({written} bytes) to {output_path}")


if __name__ == "__main__":
    main()
