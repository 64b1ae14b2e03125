"""Event stream data model plus the CSV and EVS1 file formats.

An event is the quadruple (t, x, y, p): a microsecond timestamp, pixel
coordinates, and a polarity of +1 (brighter) or -1 (darker). Streams are kept
as a packed numpy record array whose in-memory layout is byte-identical to an
EVS1 record, so file parsing and writing need no per-event conversion.

EVS1 layout (all little-endian):

    bytes 0-3    magic ``EVS1``
    bytes 4-5    version, u16, currently 1
    bytes 6-7    sensor width, u16
    bytes 8-9    sensor height, u16
    bytes 10-15  reserved, must be zero
    bytes 16-    records to end of file; each record is
                 t: u64, x: u16, y: u16, p: i8  (13 bytes)

The record section carries no count; ``(file_size - 16) % 13 == 0`` is the
truncation check.

CSV: header line ``t,x,y,p``, decimal integers, LF line endings. Polarity may
be encoded {-1, 0, 1}; 0 means negative and is normalized to -1 on parse.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import ConfigError, FormatError

US_PER_SECOND = 1_000_000

EVENT_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "<i1")])
RECORD_SIZE = EVENT_DTYPE.itemsize  # 13

EVS1_MAGIC = b"EVS1"
EVS1_VERSION = 1
_HEADER = struct.Struct("<4sHHH6x")  # magic, version, width, height, reserved
HEADER_SIZE = _HEADER.size  # 16

# Validation and writes walk large arrays in slices of this many events so
# peak temporaries stay small even for multi-gigabyte streams.
_CHUNK_EVENTS = 4_000_000

ByteSource = Union[bytes, bytearray, memoryview, BinaryIO, str, Path]


class Event(NamedTuple):
    """A single sensor event. Scalar convenience type; bulk storage is numpy."""

    t: int
    x: int
    y: int
    p: int


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel resolution of the originating sensor."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ConfigError(
                f"sensor geometry must be at least 1x1, got {self.width}x{self.height}"
            )


def _chunked_all(predicate, n: int) -> bool:
    """Evaluate ``predicate(lo, hi)`` over [0, n) in slices; short-circuit on False."""
    for lo in range(0, n, _CHUNK_EVENTS):
        if not predicate(lo, min(lo + _CHUNK_EVENTS, n)):
            return False
    return True


@dataclass(frozen=True)
class EventStream:
    """A time-sorted event array bound to its sensor geometry.

    Immutable after construction; the backing array is marked read-only when
    ownership allows. ``sort_repairs`` counts out-of-order adjacencies that a
    parser had to repair (0 for clean input) and is excluded from equality.
    """

    geometry: SensorGeometry
    events: np.ndarray
    sort_repairs: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        arr = self.events
        if arr.dtype != EVENT_DTYPE or arr.ndim != 1:
            raise ConfigError(
                f"events must be a 1-d array of dtype {EVENT_DTYPE}, got {arr.dtype}"
            )
        n = len(arr)
        t = arr["t"]
        if not _chunked_all(lambda lo, hi: bool(np.all(t[max(lo, 1) - 1 : hi - 1] <= t[max(lo, 1) : hi])), n):
            raise ConfigError("event timestamps must be non-decreasing")
        w, h = self.geometry.width, self.geometry.height
        x, y, p = arr["x"], arr["y"], arr["p"]
        if not _chunked_all(lambda lo, hi: bool(np.all(x[lo:hi] < w)), n):
            raise ConfigError(f"event x coordinate out of bounds for width {w}")
        if not _chunked_all(lambda lo, hi: bool(np.all(y[lo:hi] < h)), n):
            raise ConfigError(f"event y coordinate out of bounds for height {h}")
        if not _chunked_all(
            lambda lo, hi: bool(np.all((p[lo:hi] == 1) | (p[lo:hi] == -1))), n
        ):
            raise ConfigError("event polarity must be +1 or -1 in memory")
        if arr.flags.owndata:
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(
            self.events, other.events
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def is_empty(self) -> bool:
        return len(self.events) == 0

    @property
    def min_t(self) -> int:
        if self.is_empty:
            raise EmptyLookupError()
        return int(self.events["t"][0])

    @property
    def max_t(self) -> int:
        if self.is_empty:
            raise EmptyLookupError()
        return int(self.events["t"][-1])

    @property
    def span_us(self) -> int:
        """max t - min t; 0 for single-event and empty streams."""
        return 0 if self.is_empty else self.max_t - self.min_t

    @classmethod
    def from_events(
        cls, geometry: SensorGeometry, events: Iterable[Sequence[int]]
    ) -> "EventStream":
        """Build a stream from (t, x, y, p) tuples; p of 0 is normalized to -1."""
        rows = [(int(t), int(x), int(y), int(p)) for t, x, y, p in events]
        arr = np.array(rows, dtype=EVENT_DTYPE) if rows else np.empty(0, EVENT_DTYPE)
        _normalize_polarity_inplace(arr, context="from_events")
        arr, repairs = _ensure_sorted(arr)
        return cls(geometry, arr, sort_repairs=repairs)


class EmptyLookupError(ConfigError):
    def __init__(self) -> None:
        super().__init__("stream is empty; no timestamps to inspect")


def _normalize_polarity_inplace(arr: np.ndarray, context: str) -> None:
    p = arr["p"]
    bad = ~((p == -1) | (p == 0) | (p == 1))
    if bad.any():
        idx = int(np.argmax(bad))
        raise FormatError(f"{context}: polarity {int(p[idx])} outside {{-1, 0, 1}}")
    if (p == 0).any():
        if not arr.flags.writeable:
            raise FormatError(f"{context}: cannot normalize polarity in read-only data")
        p[p == 0] = -1


def _ensure_sorted(arr: np.ndarray) -> tuple[np.ndarray, int]:
    """Return a stably t-sorted array and the number of repaired adjacencies."""
    t = arr["t"]
    n = len(arr)
    if _chunked_all(lambda lo, hi: bool(np.all(t[max(lo, 1) - 1 : hi - 1] <= t[max(lo, 1) : hi])), n):
        return arr, 0
    repairs = int(np.sum(t[1:] < t[:-1]))
    order = np.argsort(t, kind="stable")
    return arr[order], repairs


# ---------------------------------------------------------------------------
# CSV


def parse_csv(source: ByteSource, geometry: SensorGeometry) -> EventStream:
    """Parse ``t,x,y,p`` CSV text into a validated stream.

    Rows are sorted stably by timestamp when the input is unsorted; sorted
    input is passed through untouched. Row numbers in errors are 1-based and
    count data rows, not the header.
    """
    data = _read_all(source)
    text = data.decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("CSV input is empty; expected header 't,x,y,p'")
    header = lines[0].strip().rstrip("\r")
    if header != "t,x,y,p":
        raise FormatError(f"CSV header must be 't,x,y,p', got {header!r}")

    rows = []
    w, h = geometry.width, geometry.height
    for i, line in enumerate(lines[1:], start=1):
        line = line.strip().rstrip("\r")
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"row {i}: expected 4 fields, got {len(parts)}")
        try:
            t, x, y, p = (int(part) for part in parts)
        except ValueError:
            raise FormatError(f"row {i}: non-integer field in {line!r}") from None
        if t < 0:
            raise FormatError(f"row {i}: negative timestamp {t}")
        if not 0 <= x < w:
            raise FormatError(f"row {i}: x={x} out of bounds for width {w}")
        if not 0 <= y < h:
            raise FormatError(f"row {i}: y={y} out of bounds for height {h}")
        if p not in (-1, 0, 1):
            raise FormatError(f"row {i}: polarity {p} outside {{-1, 0, 1}}")
        rows.append((t, x, y, -1 if p == 0 else p))

    arr = np.array(rows, dtype=EVENT_DTYPE) if rows else np.empty(0, EVENT_DTYPE)
    arr, repairs = _ensure_sorted(arr)
    return EventStream(geometry, arr, sort_repairs=repairs)


# ---------------------------------------------------------------------------
# EVS1


def parse_evbin(source: ByteSource) -> EventStream:
    """Parse an EVS1 byte source into a validated stream.

    A filesystem path is memory-mapped read-only, so large files do not force
    a resident copy. Out-of-order records are repaired by a stable sort and
    counted in ``sort_repairs``.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        size = path.stat().st_size
        _check_record_section(size)
        with open(path, "rb") as fh:
            geometry = _parse_header(fh.read(HEADER_SIZE))
        count = (size - HEADER_SIZE) // RECORD_SIZE
        if count == 0:
            return EventStream(geometry, np.empty(0, EVENT_DTYPE))
        arr = np.memmap(path, dtype=EVENT_DTYPE, mode="r", offset=HEADER_SIZE)
        return _finish_parse(geometry, arr)

    data = _read_all(source)
    _check_record_section(len(data))
    geometry = _parse_header(bytes(data[:HEADER_SIZE]))
    arr = np.frombuffer(data, dtype=EVENT_DTYPE, offset=HEADER_SIZE)
    return _finish_parse(geometry, arr)


def _finish_parse(geometry: SensorGeometry, arr: np.ndarray) -> EventStream:
    if (arr["p"] == 0).any():
        arr = arr.copy()
        _normalize_polarity_inplace(arr, context="EVS1 records")
    else:
        _normalize_polarity_inplace(arr, context="EVS1 records")
    arr, repairs = _ensure_sorted(arr)
    return EventStream(geometry, arr, sort_repairs=repairs)


def _check_record_section(total_size: int) -> None:
    if total_size < HEADER_SIZE:
        raise FormatError(
            f"EVS1 input of {total_size} bytes is shorter than the {HEADER_SIZE}-byte header"
        )
    excess = (total_size - HEADER_SIZE) % RECORD_SIZE
    if excess:
        declared = (total_size - HEADER_SIZE) // RECORD_SIZE + 1
        raise FormatError(
            f"EVS1 record section truncated: {total_size - HEADER_SIZE} bytes hold "
            f"{declared - 1} full records plus {excess} stray bytes"
        )


def _parse_header(header: bytes) -> SensorGeometry:
    magic, version, width, height = _HEADER.unpack(header)
    if magic != EVS1_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {EVS1_MAGIC!r}")
    if version != EVS1_VERSION:
        raise FormatError(f"unsupported EVS1 version {version}")
    if header[10:16] != b"\x00" * 6:
        raise FormatError("EVS1 reserved header bytes must be zero")
    return SensorGeometry(width, height)


def write_evbin(stream: EventStream, sink: Union[BinaryIO, str, Path]) -> int:
    """Write a stream in EVS1 form; returns the byte count (16 + 13 * events)."""
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            return write_evbin(stream, fh)
    sink.write(pack_header(stream.geometry))
    written = HEADER_SIZE
    arr = stream.events
    for lo in range(0, len(arr), _CHUNK_EVENTS):
        chunk = arr[lo : lo + _CHUNK_EVENTS]
        view = chunk if chunk.flags.c_contiguous else np.ascontiguousarray(chunk)
        sink.write(memoryview(view))
        written += len(chunk) * RECORD_SIZE
    return written


def pack_header(geometry: SensorGeometry) -> bytes:
    if geometry.width > 0xFFFF or geometry.height > 0xFFFF:
        raise ConfigError("EVS1 stores geometry as u16; dimension too large")
    return _HEADER.pack(EVS1_MAGIC, EVS1_VERSION, geometry.width, geometry.height)


def _read_all(source: ByteSource) -> bytes | memoryview:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return source if isinstance(source, bytes) else memoryview(source)
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()
