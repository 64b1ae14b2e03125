"""Deterministic synthetic event streams for tests and benchmarks.

A scene is a list of back-to-back temporal segments. Each segment has a
duration, an event rate, and one of three motion patterns:

* ``static-noise``: events uniform over the sensor, random polarity.
* ``moving-edge``: a vertical edge sweeps left to right across the sensor
  over the segment; events hug the edge column, +1 on and ahead of the edge,
  -1 in its wake.
* ``blank``: no events at all, an information-empty stretch.

Generation is a pure function of (spec, seed): one PCG64 generator seeded
once, segments consumed in order with a fixed draw order per segment, so the
same inputs always produce byte-identical streams. ``write_synthetic`` emits
the same bytes as ``write_evbin(generate_synthetic(...))`` while holding only
one segment in memory at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .errors import ConfigError
from .events import (
    EVENT_DTYPE,
    HEADER_SIZE,
    RECORD_SIZE,
    US_PER_SECOND,
    EventStream,
    SensorGeometry,
    pack_header,
)

PATTERNS = ("static-noise", "moving-edge", "blank")

# Event counts are held to this bound so count arithmetic and downstream
# allocation sizes stay far from u64 / float53 trouble.
MAX_EVENTS_PER_SEGMENT = 1 << 40


@dataclass(frozen=True)
class Segment:
    """One temporal slice of a scene."""

    pattern: str
    duration_us: int
    rate: float = 0.0  # events per second

    def __post_init__(self) -> None:
        if self.pattern not in PATTERNS:
            raise ConfigError(f"unknown pattern {self.pattern!r}, expected one of {PATTERNS}")
        if self.duration_us < 0:
            raise ConfigError(f"segment duration must be >= 0, got {self.duration_us}")
        if self.rate < 0 or not math.isfinite(self.rate):
            raise ConfigError(f"segment rate must be finite and >= 0, got {self.rate}")

    @property
    def event_count(self) -> int:
        if self.pattern == "blank" or self.duration_us == 0:
            return 0
        raw = self.rate * self.duration_us / US_PER_SECOND
        if not math.isfinite(raw) or raw > MAX_EVENTS_PER_SEGMENT:
            raise ConfigError(
                f"segment rate {self.rate} over {self.duration_us} us overflows "
                f"the event-count budget of {MAX_EVENTS_PER_SEGMENT}"
            )
        return int(round(raw))


@dataclass(frozen=True)
class SceneSpec:
    """A full scene: sensor geometry plus ordered segments."""

    geometry: SensorGeometry
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ConfigError("scene needs at least one segment")
        if self.total_duration_us == 0:
            raise ConfigError("scene has zero total duration")

    @property
    def total_duration_us(self) -> int:
        return sum(seg.duration_us for seg in self.segments)

    @property
    def total_events(self) -> int:
        return sum(seg.event_count for seg in self.segments)


def _segment_events(
    rng: np.random.Generator, seg: Segment, t0: int, geometry: SensorGeometry
) -> np.ndarray:
    """Generate one segment's events, sorted by t. Draw order: t, column data, y, p."""
    count = seg.event_count
    arr = np.empty(count, dtype=EVENT_DTYPE)
    if count == 0:
        return arr
    w, h = geometry.width, geometry.height
    t = rng.integers(0, seg.duration_us, size=count, dtype=np.uint64)
    t.sort()
    arr["t"] = t + np.uint64(t0)

    if seg.pattern == "static-noise":
        arr["x"] = rng.integers(0, w, size=count, dtype=np.uint16)
        arr["y"] = rng.integers(0, h, size=count, dtype=np.uint16)
        arr["p"] = rng.integers(0, 2, size=count, dtype=np.int8) * 2 - 1
    else:  # moving-edge
        progress = t.astype(np.float64) / float(seg.duration_us)
        edge = np.floor(progress * (w - 1)).astype(np.int64) if w > 1 else np.zeros(count, np.int64)
        jitter = rng.integers(-2, 3, size=count, dtype=np.int64)
        arr["x"] = np.clip(edge + jitter, 0, w - 1).astype(np.uint16)
        arr["y"] = rng.integers(0, h, size=count, dtype=np.uint16)
        arr["p"] = np.where(jitter >= 0, 1, -1).astype(np.int8)
    return arr


def generate_synthetic(spec: SceneSpec, seed: int) -> EventStream:
    """Materialize the whole scene as one in-memory stream."""
    rng = np.random.default_rng(seed)
    total = spec.total_events
    out = np.empty(total, dtype=EVENT_DTYPE)
    pos = 0
    t0 = 0
    for seg in spec.segments:
        chunk = _segment_events(rng, seg, t0, spec.geometry)
        out[pos : pos + len(chunk)] = chunk
        pos += len(chunk)
        t0 += seg.duration_us
    return EventStream(spec.geometry, out)


def write_synthetic(spec: SceneSpec, seed: int, sink: Union[BinaryIO, str, Path]) -> int:
    """Stream the scene straight to an EVS1 sink, one segment resident at a time.

    Byte-identical to writing ``generate_synthetic(spec, seed)``.
    """
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            return write_synthetic(spec, seed, fh)
    rng = np.random.default_rng(seed)
    sink.write(pack_header(spec.geometry))
    written = HEADER_SIZE
    t0 = 0
    for seg in spec.segments:
        chunk = _segment_events(rng, seg, t0, spec.geometry)
        if len(chunk):
            sink.write(memoryview(chunk))
            written += len(chunk) * RECORD_SIZE
        t0 += seg.duration_us
    return written
