"""Two-stage sequence reduction: query-guided filtering, then windowed
diversity-driven clustering.

Stage one keeps the bins whose selector-space cosine similarity to the query
vector is at least ``tau``, preserving temporal order. Stage two partitions
the kept bins into consecutive windows of ``window_size``, measures each
window's diversity (average pairwise cosine distance, in [0, 2]), maps that
diversity to a cluster count, groups the window's vectors with bottom-up
average-linkage clustering, and emits one token per cluster as the arithmetic
mean of the raw member vectors. Token order follows (window, earliest member)
so output stays temporal.

Distance conventions, fixed so degenerate inputs never produce NaNs:

* cosine similarity with a zero vector on either side is 0 by convention;
* inside diversity and clustering, two zero vectors count as identical
  (distance 0) while a zero vs nonzero pair sits at distance 1, as if every
  empty bin shared one phantom direction orthogonal to all real features;
* averaging (token aggregation) always uses the raw, unnormalized vectors;
  normalization happens only inside distance computations.

CMP1 layout (little-endian): magic ``CMP1``, version u16 = 1, dimension u32,
token count u32; per token: window u32, cluster u32, member count u32, the
member bin indices as u32 each, t_start u64, t_end u64, then ``dimension``
float32 values.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Sequence, Union

import numpy as np

from .errors import ConfigError, FormatError

REMAINDER_POLICIES = ("shrunk-window", "passthrough")

CMP1_MAGIC = b"CMP1"
CMP1_VERSION = 1
_CMP1_HEADER = struct.Struct("<4sHII")  # magic, version, dimension, token count
_TOKEN_FIXED = struct.Struct("<III")  # window, cluster, member count
_TOKEN_RANGE = struct.Struct("<QQ")  # t_start, t_end


@dataclass(frozen=True)
class CompressionConfig:
    """Reduction hyperparameters. Defaults: tau 0.5, windows of 8 bins."""

    tau: float = 0.5
    window_size: int = 8
    remainder_policy: str = "shrunk-window"
    fallback_top1: bool = True

    def __post_init__(self) -> None:
        if not -1.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must be in [-1, 1], got {self.tau}")
        if self.window_size < 1:
            raise ConfigError(f"window size must be >= 1, got {self.window_size}")
        if self.remainder_policy not in REMAINDER_POLICIES:
            raise ConfigError(
                f"remainder policy must be one of {REMAINDER_POLICIES}, "
                f"got {self.remainder_policy!r}"
            )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; 0 if either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def _as_matrix(vectors: Union[np.ndarray, Sequence[np.ndarray]], what: str) -> np.ndarray:
    try:
        mat = np.asarray(vectors, dtype=np.float64)
    except ValueError:
        raise ConfigError(f"{what}: vectors do not share one dimension") from None
    if mat.ndim != 2:
        raise ConfigError(f"{what}: expected a sequence of equal-length vectors")
    return mat


def _normalize_rows(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalized copy plus a zero-row mask; zero rows stay zero."""
    norms = np.linalg.norm(mat, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return mat / safe[:, None], zero


def _pair_distances(mat: np.ndarray) -> np.ndarray:
    """Full (n, n) cosine-distance matrix under the phantom-zero convention."""
    normed, zero = _normalize_rows(mat)
    sims = normed @ normed.T
    dist = np.clip(1.0 - sims, 0.0, 2.0)
    if zero.any():
        dist[np.ix_(zero, zero)] = 0.0  # empty bins are mutually identical
    np.fill_diagonal(dist, 0.0)
    return dist


@dataclass(frozen=True)
class FilteredSequence:
    """Bins that survived query filtering, in original temporal order.

    ``kept_indices`` are strictly ascending original bin indices;
    ``features`` holds the k cluster-space vectors; ``selector_sims`` the k
    similarity scores that justified keeping each bin. ``time_ranges`` is a
    (k, 2) array of [t_start, t_end) per kept bin, or all zeros when the
    caller filtered bare feature arrays with no bin context.
    """

    kept_indices: np.ndarray
    features: np.ndarray
    selector_sims: np.ndarray
    time_ranges: np.ndarray
    fallback_used: bool = False

    def __post_init__(self) -> None:
        k = len(self.kept_indices)
        if len(self.features) != k or len(self.selector_sims) != k or len(self.time_ranges) != k:
            raise ConfigError("filtered sequence fields disagree on length")
        if k > 1 and not np.all(np.diff(self.kept_indices) > 0):
            raise ConfigError("kept indices must be strictly ascending")

    @property
    def k(self) -> int:
        return len(self.kept_indices)


def cross_modal_filter(
    selector_features: np.ndarray,
    cluster_features: np.ndarray,
    query: np.ndarray,
    config: CompressionConfig,
    time_ranges: np.ndarray | None = None,
) -> FilteredSequence:
    """Keep the bins whose similarity to the query is at least ``config.tau``.

    If nothing qualifies and ``fallback_top1`` is set, the single best bin is
    kept instead (ties go to the lowest index) so downstream stages always
    have input. With fallback disabled the result may be empty.
    """
    sel = _as_matrix(selector_features, "selector features")
    clu = _as_matrix(cluster_features, "cluster features")
    q = np.asarray(query, dtype=np.float64)
    if len(sel) == 0:
        raise ConfigError("cannot filter an empty feature sequence")
    if len(sel) != len(clu):
        raise ConfigError(f"{len(sel)} selector vectors vs {len(clu)} cluster vectors")
    if q.ndim != 1 or q.shape[0] != sel.shape[1]:
        raise ConfigError(
            f"query dimension {q.shape} does not match selector dimension {sel.shape[1]}"
        )
    if time_ranges is None:
        ranges = np.zeros((len(sel), 2), dtype=np.uint64)
    else:
        ranges = np.asarray(time_ranges, dtype=np.uint64)
        if ranges.shape != (len(sel), 2):
            raise ConfigError(f"time_ranges shape {ranges.shape} != ({len(sel)}, 2)")

    normed, zero = _normalize_rows(sel)
    qn = float(np.linalg.norm(q))
    if qn == 0.0:
        sims = np.zeros(len(sel), dtype=np.float64)
    else:
        sims = np.clip(normed @ (q / qn), -1.0, 1.0)
        sims[zero] = 0.0
    kept = np.flatnonzero(sims >= config.tau)
    fallback_used = False
    if len(kept) == 0 and config.fallback_top1:
        kept = np.array([int(np.argmax(sims))], dtype=np.int64)
        fallback_used = True
    return FilteredSequence(
        kept_indices=kept.astype(np.int64),
        features=clu[kept],
        selector_sims=sims[kept],
        time_ranges=ranges[kept],
        fallback_used=fallback_used,
    )


@dataclass(frozen=True)
class Window:
    """A run of consecutive kept-bin positions; passthrough runs skip clustering."""

    start: int
    size: int
    passthrough: bool = False


@dataclass(frozen=True)
class WindowPartition:
    windows: tuple[Window, ...]
    k: int
    policy: str


def partition_windows(k: int, window_size: int, policy: str = "shrunk-window") -> WindowPartition:
    """Split k positions into floor(k / J) full windows plus a remainder.

    ``shrunk-window`` turns the remainder into one smaller window that is
    clustered like any other; ``passthrough`` emits each remainder position
    as its own single-bin window that bypasses clustering.
    """
    if k < 1:
        raise ConfigError(f"need at least one kept position, got k={k}")
    if window_size < 1:
        raise ConfigError(f"window size must be >= 1, got {window_size}")
    if policy not in REMAINDER_POLICIES:
        raise ConfigError(f"remainder policy must be one of {REMAINDER_POLICIES}")
    windows: list[Window] = []
    full = k // window_size
    for m in range(full):
        windows.append(Window(start=m * window_size, size=window_size))
    rest = k % window_size
    if rest:
        base = full * window_size
        if policy == "shrunk-window":
            windows.append(Window(start=base, size=rest))
        else:
            windows.extend(
                Window(start=base + i, size=1, passthrough=True) for i in range(rest)
            )
    return WindowPartition(windows=tuple(windows), k=k, policy=policy)


def window_diversity(vectors: Union[np.ndarray, Sequence[np.ndarray]]) -> float:
    """Average pairwise cosine distance of a window, in [0, 2].

    0 when all vectors agree in direction, 2 for an antipodal pair, 1 for an
    orthogonal pair. Single-vector windows have no pairs and return 0.
    """
    mat = _as_matrix(vectors, "window")
    n = len(mat)
    if n == 0:
        raise ConfigError("window must hold at least one vector")
    if n == 1:
        return 0.0
    dist = _pair_distances(mat)
    total = float(np.sum(dist[np.triu_indices(n, k=1)]))
    return float(np.clip(2.0 * total / (n * (n - 1)), 0.0, 2.0))


def cluster_count(diversity: float, window_size: int) -> int:
    """Map diversity to an integer cluster count in [1, window_size].

    Proportional rule: round(diversity / 2 * window_size), rounding halves
    away from zero, clamped so zero-diversity windows collapse to one cluster
    and maximally diverse windows keep every bin.
    """
    if window_size < 1:
        raise ConfigError(f"window size must be >= 1, got {window_size}")
    if not 0.0 <= diversity <= 2.0:
        raise ConfigError(f"diversity must be in [0, 2], got {diversity}")
    rounded = int(math.floor(diversity / 2.0 * window_size + 0.5))
    return max(1, min(window_size, rounded))


def _min_pair(dist: np.ndarray, active: list[int], min_index: dict[int, int]) -> tuple[int, int]:
    """Pick the active cluster pair with minimal distance.

    Exact distance ties break on the lexicographically smallest
    (min member index, max member index) pair.
    """
    best = None
    best_key = None
    for ai in range(len(active)):
        for bi in range(ai + 1, len(active)):
            i, j = active[ai], active[bi]
            d = dist[i, j]
            lo, hi = sorted((min_index[i], min_index[j]))
            key = (d, lo, hi)
            if best_key is None or key < best_key:
                best_key = key
                best = (i, j)
    assert best is not None
    return best


def hac_average_linkage(
    vectors: Union[np.ndarray, Sequence[np.ndarray]], clusters: int
) -> list[list[int]]:
    """Bottom-up average-linkage clustering into exactly ``clusters`` groups.

    Vectors are l2-normalized internally and compared by cosine distance.
    Inter-cluster distance is the mean over all cross pairs of original
    points (UPGMA), maintained incrementally with the exact weighted-average
    update. Returns index groups ordered by their smallest member; members
    ascend within each group.
    """
    mat = _as_matrix(vectors, "clustering input")
    n = len(mat)
    if n == 0:
        raise ConfigError("cannot cluster zero vectors")
    if not 1 <= clusters <= n:
        raise ConfigError(f"cluster count {clusters} out of range [1, {n}]")
    dist = _pair_distances(mat)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    sizes = {i: 1 for i in range(n)}
    min_index = {i: i for i in range(n)}
    active = list(range(n))
    while len(active) > clusters:
        i, j = _min_pair(dist, active, min_index)
        si, sj = sizes[i], sizes[j]
        for other in active:
            if other in (i, j):
                continue
            dist[i, other] = dist[other, i] = (
                si * dist[i, other] + sj * dist[j, other]
            ) / (si + sj)
        members[i].extend(members[j])
        sizes[i] = si + sj
        min_index[i] = min(min_index[i], min_index[j])
        del members[j], sizes[j], min_index[j]
        active.remove(j)
    groups = [sorted(members[i]) for i in active]
    groups.sort(key=lambda g: g[0])
    return groups


def aggregate_clusters(
    vectors: Union[np.ndarray, Sequence[np.ndarray]], clusters: Sequence[Sequence[int]]
) -> np.ndarray:
    """Mean of the raw member vectors per cluster, ordered by smallest member."""
    mat = _as_matrix(vectors, "aggregation input")
    n = len(mat)
    seen: set[int] = set()
    for group in clusters:
        if len(group) == 0:
            raise ConfigError("empty cluster in aggregation")
        for idx in group:
            if not 0 <= idx < n or idx in seen:
                raise ConfigError(f"clusters do not partition 0..{n - 1}")
            seen.add(idx)
    if len(seen) != n:
        raise ConfigError(f"clusters cover {len(seen)} of {n} vectors")
    ordered = sorted(clusters, key=lambda g: min(g))
    return np.stack([mat[list(group)].mean(axis=0) for group in ordered])


@dataclass(frozen=True)
class WindowStat:
    """Per-window diagnostics: how dense the window was and what it became."""

    index: int
    start: int
    size: int
    diversity: float
    cluster_count: int
    passthrough: bool = False


@dataclass(frozen=True)
class TokenProvenance:
    """Where one output token came from."""

    window: int
    cluster: int
    members: tuple[int, ...]  # original bin indices, ascending
    t_start: int
    t_end: int


@dataclass(frozen=True)
class CompressedSequence:
    """The reduced token sequence with full provenance, in temporal order."""

    tokens: np.ndarray  # (token count, dimension) float64
    provenance: tuple[TokenProvenance, ...]
    window_stats: tuple[WindowStat, ...] = ()
    budget_clamped: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.tokens.ndim != 2:
            raise ConfigError("tokens must be a (count, dimension) array")
        if len(self.tokens) != len(self.provenance):
            raise ConfigError(
                f"{len(self.tokens)} tokens but {len(self.provenance)} provenance entries"
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompressedSequence):
            return NotImplemented
        return (
            np.array_equal(self.tokens, other.tokens)
            and self.provenance == other.provenance
            and self.window_stats == other.window_stats
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    @property
    def dimension(self) -> int:
        return self.tokens.shape[1]


def compress_sequence(filtered: FilteredSequence, config: CompressionConfig) -> CompressedSequence:
    """Windowed diversity clustering over a filtered sequence.

    Per window: measure diversity, derive the cluster count, cluster with
    average linkage, and emit cluster means. Passthrough windows forward
    their single vector untouched. Deterministic for identical inputs.
    """
    if filtered.k < 1:
        raise ConfigError("compress_sequence needs at least one kept bin")
    partition = partition_windows(filtered.k, config.window_size, config.remainder_policy)
    tokens: list[np.ndarray] = []
    provenance: list[TokenProvenance] = []
    stats: list[WindowStat] = []
    for m, window in enumerate(partition.windows):
        lo, hi = window.start, window.start + window.size
        vectors = filtered.features[lo:hi]
        if window.passthrough:
            groups = [[0]]
            diversity = 0.0
            r = 1
        else:
            diversity = window_diversity(vectors)
            r = cluster_count(diversity, window.size)
            groups = hac_average_linkage(vectors, r)
        aggregated = aggregate_clusters(vectors, groups)
        stats.append(
            WindowStat(
                index=m,
                start=lo,
                size=window.size,
                diversity=diversity,
                cluster_count=len(groups),
                passthrough=window.passthrough,
            )
        )
        for r_idx, group in enumerate(groups):
            positions = [lo + g for g in group]
            bin_indices = tuple(int(filtered.kept_indices[p]) for p in positions)
            t_start = int(min(filtered.time_ranges[p][0] for p in positions))
            t_end = int(max(filtered.time_ranges[p][1] for p in positions))
            tokens.append(aggregated[r_idx])
            provenance.append(
                TokenProvenance(
                    window=m,
                    cluster=r_idx,
                    members=bin_indices,
                    t_start=t_start,
                    t_end=t_end,
                )
            )
    return CompressedSequence(
        tokens=np.stack(tokens),
        provenance=tuple(provenance),
        window_stats=tuple(stats),
    )


def sample_baseline(
    filtered: FilteredSequence,
    mode: str,
    budget: int,
    seed: int = 0,
) -> CompressedSequence:
    """Sampling baselines for comparison: no clustering, singleton tokens.

    ``random`` draws ``budget`` kept bins uniformly without replacement
    (seeded) and re-sorts them temporally; ``interval`` picks evenly spaced
    positions. A budget above k returns all k bins and sets
    ``budget_clamped``.
    """
    if budget < 1:
        raise ConfigError(f"budget must be >= 1, got {budget}")
    if mode not in ("random", "interval"):
        raise ConfigError(f"baseline mode must be 'random' or 'interval', got {mode!r}")
    k = filtered.k
    if k < 1:
        raise ConfigError("baseline sampling needs at least one kept bin")
    clamped = budget > k
    take = min(budget, k)
    if mode == "random":
        rng = np.random.default_rng(seed)
        positions = np.sort(rng.choice(k, size=take, replace=False))
    else:
        positions = (np.arange(take, dtype=np.int64) * k) // take
    tokens = filtered.features[positions]
    provenance = tuple(
        TokenProvenance(
            window=ordinal,
            cluster=0,
            members=(int(filtered.kept_indices[p]),),
            t_start=int(filtered.time_ranges[p][0]),
            t_end=int(filtered.time_ranges[p][1]),
        )
        for ordinal, p in enumerate(positions)
    )
    stats = tuple(
        WindowStat(index=i, start=int(p), size=1, diversity=0.0, cluster_count=1, passthrough=True)
        for i, p in enumerate(positions)
    )
    return CompressedSequence(
        tokens=tokens.copy(),
        provenance=provenance,
        window_stats=stats,
        budget_clamped=clamped,
    )


# ---------------------------------------------------------------------------
# CMP1 and JSON serialization


def write_cmp1(sequence: CompressedSequence, sink: Union[BinaryIO, str, Path]) -> int:
    """Serialize tokens and provenance as CMP1; values stored as float32."""
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            return write_cmp1(sequence, fh)
    dim = sequence.dimension
    out = bytearray()
    out += _CMP1_HEADER.pack(CMP1_MAGIC, CMP1_VERSION, dim, sequence.token_count)
    values = np.ascontiguousarray(sequence.tokens, dtype="<f4")
    for row, prov in zip(values, sequence.provenance):
        out += _TOKEN_FIXED.pack(prov.window, prov.cluster, len(prov.members))
        out += struct.pack(f"<{len(prov.members)}I", *prov.members)
        out += _TOKEN_RANGE.pack(prov.t_start, prov.t_end)
        out += row.tobytes()
    sink.write(bytes(out))
    return len(out)


def read_cmp1(source: Union[bytes, BinaryIO, str, Path]) -> CompressedSequence:
    """Parse CMP1 bytes. Window diagnostics are not stored, so ``window_stats``
    comes back empty; tokens and provenance round-trip exactly."""
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    if len(data) < _CMP1_HEADER.size:
        raise FormatError("CMP1 input shorter than its 14-byte header")
    magic, version, dim, count = _CMP1_HEADER.unpack_from(data)
    if magic != CMP1_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {CMP1_MAGIC!r}")
    if version != CMP1_VERSION:
        raise FormatError(f"unsupported CMP1 version {version}")
    offset = _CMP1_HEADER.size
    tokens = np.empty((count, dim), dtype=np.float64)
    provenance: list[TokenProvenance] = []
    for t in range(count):
        try:
            window, cluster, n_members = _TOKEN_FIXED.unpack_from(data, offset)
            offset += _TOKEN_FIXED.size
            members = struct.unpack_from(f"<{n_members}I", data, offset)
            offset += 4 * n_members
            t_start, t_end = _TOKEN_RANGE.unpack_from(data, offset)
            offset += _TOKEN_RANGE.size
            row = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
            offset += 4 * dim
        except (struct.error, ValueError):
            raise FormatError(f"CMP1 truncated inside token {t}") from None
        if len(row) != dim:
            raise FormatError(f"CMP1 truncated inside token {t}")
        tokens[t] = row
        provenance.append(
            TokenProvenance(
                window=window,
                cluster=cluster,
                members=tuple(int(m) for m in members),
                t_start=t_start,
                t_end=t_end,
            )
        )
    if offset != len(data):
        raise FormatError(f"CMP1 has {len(data) - offset} trailing bytes")
    return CompressedSequence(tokens=tokens, provenance=tuple(provenance))


def to_json_dict(sequence: CompressedSequence) -> dict:
    """JSON-ready mirror of the CMP1 fields plus in-memory diagnostics."""
    return {
        "version": CMP1_VERSION,
        "dimension": sequence.dimension,
        "token_count": sequence.token_count,
        "budget_clamped": sequence.budget_clamped,
        "tokens": [
            {
                "window": prov.window,
                "cluster": prov.cluster,
                "members": list(prov.members),
                "t_start": prov.t_start,
                "t_end": prov.t_end,
                "values": [float(v) for v in np.asarray(row, dtype=np.float32)],
            }
            for row, prov in zip(sequence.tokens, sequence.provenance)
        ],
        "window_stats": [
            {
                "index": ws.index,
                "start": ws.start,
                "size": ws.size,
                "diversity": ws.diversity,
                "cluster_count": ws.cluster_count,
                "passthrough": ws.passthrough,
            }
            for ws in sequence.window_stats
        ],
    }


def write_json(sequence: CompressedSequence, sink: Union[BinaryIO, str, Path]) -> int:
    """Write the JSON mirror; returns the byte count."""
    payload = json.dumps(to_json_dict(sequence), indent=2).encode("utf-8") + b"\n"
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(payload)
    else:
        sink.write(payload)
    return len(payload)
