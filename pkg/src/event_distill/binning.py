"""Fixed-width temporal binning and polarity-frame rasterization.

Bins tile ``[min_t, max_t]`` with half-open intervals of ``bin_width_us``
microseconds; bin i covers ``[min_t + i*w, min_t + (i+1)*w)``. Empty bins are
kept: collapsing information-empty stretches is the compression stage's job,
not the binner's. Each bin holds a slice view into the parent stream's array,
so binning allocates O(bin count), never O(event count).

A polarity frame is the per-pixel signed sum of polarities over one bin.
Export maps positive accumulation to red, negative to blue, and zero to a
white background, with linear intensity clamped at ``max_count``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .errors import ConfigError, EmptyStreamError
from .events import EventStream, SensorGeometry

# Refuse absurd bin counts before allocating; 100M Bin objects would be
# gigabytes of pure overhead.
MAX_BINS = 100_000_000

POSITIVE_RGB = (255, 0, 0)
NEGATIVE_RGB = (0, 0, 255)
BACKGROUND_RGB = (255, 255, 255)
DEFAULT_MAX_COUNT = 5


@dataclass(frozen=True)
class Bin:
    """One temporal slice: events with t in [t_start, t_end)."""

    index: int
    t_start: int
    t_end: int
    events: np.ndarray
    geometry: SensorGeometry

    def __len__(self) -> int:
        return len(self.events)

    @property
    def is_empty(self) -> bool:
        return len(self.events) == 0


def bin_stream(stream: EventStream, bin_width_us: int) -> list[Bin]:
    """Partition a non-empty stream into ceil(span / width) contiguous bins."""
    if stream.is_empty:
        raise EmptyStreamError("cannot bin an empty stream")
    if bin_width_us < 1:
        raise ConfigError(f"bin width must be >= 1 us, got {bin_width_us}")
    lo, hi = stream.min_t, stream.max_t
    span = hi - lo + 1
    count = -(-span // bin_width_us)  # ceil
    if count > MAX_BINS:
        raise ConfigError(
            f"bin width {bin_width_us} us over a span of {span} us would produce "
            f"{count} bins (limit {MAX_BINS}); widen the bins"
        )
    if lo + count * bin_width_us >= 1 << 64:
        raise ConfigError("bin edges would overflow the 64-bit timestamp range")
    edges = lo + np.arange(count + 1, dtype=np.uint64) * np.uint64(bin_width_us)
    cuts = np.searchsorted(stream.events["t"], edges, side="left")
    return [
        Bin(
            index=i,
            t_start=int(edges[i]),
            t_end=int(edges[i + 1]),
            events=stream.events[cuts[i] : cuts[i + 1]],
            geometry=stream.geometry,
        )
        for i in range(count)
    ]


@dataclass(frozen=True)
class PolarityFrame:
    """Per-pixel signed polarity accumulation for one bin."""

    geometry: SensorGeometry
    counts: np.ndarray  # (height, width) int64

    def __post_init__(self) -> None:
        expected = (self.geometry.height, self.geometry.width)
        if self.counts.shape != expected:
            raise ConfigError(f"frame shape {self.counts.shape} != geometry {expected}")


def render_frame(bin_: Bin) -> PolarityFrame:
    """Accumulate the bin's polarities into a (height, width) frame."""
    w, h = bin_.geometry.width, bin_.geometry.height
    ev = bin_.events
    flat = np.bincount(
        ev["y"].astype(np.int64) * w + ev["x"].astype(np.int64),
        weights=ev["p"].astype(np.float64),
        minlength=h * w,
    )
    return PolarityFrame(bin_.geometry, flat.astype(np.int64).reshape(h, w))


def frame_to_rgb(frame: PolarityFrame, max_count: int = DEFAULT_MAX_COUNT) -> np.ndarray:
    """Color-map a frame: positive counts toward red, negative toward blue.

    Intensity is |count| / max_count clamped to 1, interpolating from the
    white background to the saturated color. Returns (height, width, 3) uint8.
    """
    if max_count < 1:
        raise ConfigError(f"max_count must be >= 1, got {max_count}")
    counts = frame.counts
    strength = np.clip(np.abs(counts) / float(max_count), 0.0, 1.0)
    rgb = np.empty(counts.shape + (3,), dtype=np.float64)
    rgb[...] = BACKGROUND_RGB
    for channel in range(3):
        pos_target = POSITIVE_RGB[channel]
        neg_target = NEGATIVE_RGB[channel]
        chan = rgb[..., channel]
        chan += np.where(counts > 0, strength * (pos_target - chan), 0.0)
        chan += np.where(counts < 0, strength * (neg_target - chan), 0.0)
    return np.round(rgb).astype(np.uint8)


def write_ppm(
    frame: PolarityFrame,
    sink: Union[BinaryIO, str, Path],
    max_count: int = DEFAULT_MAX_COUNT,
) -> None:
    """Write the color-mapped frame as a binary P6 PPM."""
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            write_ppm(frame, fh, max_count=max_count)
        return
    rgb = frame_to_rgb(frame, max_count=max_count)
    h, w, _ = rgb.shape
    sink.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
    sink.write(rgb.tobytes())


def write_png(
    frame: PolarityFrame,
    sink: Union[BinaryIO, str, Path],
    max_count: int = DEFAULT_MAX_COUNT,
) -> None:
    """Write the color-mapped frame as a PNG."""
    from PIL import Image

    rgb = frame_to_rgb(frame, max_count=max_count)
    image = Image.fromarray(rgb, mode="RGB")
    if isinstance(sink, (str, Path)):
        image.save(str(sink), format="PNG")
    else:
        image.save(sink, format="PNG")
