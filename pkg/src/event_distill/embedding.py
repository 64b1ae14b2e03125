"""Per-bin and query embeddings behind one provider interface.

The reduction pipeline needs two feature spaces: selector vectors, compared
against the query embedding when filtering bins, and cluster vectors, used by
the diversity and clustering stage. Real deployments would back these with
trained encoders; this package deliberately ships only model-free providers
so the algorithmic core stays testable:

* ``hash``: a seeded content hash of each bin's record bytes, no I/O.
* ``file``: precomputed vectors loaded from EMB1 files.
* ``http``: a remote embedding service speaking a small JSON protocol.

All providers return vectors in bin order, one selector and one cluster
vector per bin. Vectors are float64 in memory and 32-bit at file and wire
boundaries.

EMB1 layout (little-endian): magic ``EMB1``, version u16 = 1, dimension u32,
count u32, then count * dimension IEEE-754 float32 values, row-major.

HTTP protocol: ``POST {base}/embed`` with JSON body
``{"kind": "bin" | "text", "dimension": D, "payload": ...}`` where payload is
base64 EVS1 record bytes for bins and plain text for queries; the response is
``{"vector": [... D floats ...]}``.
"""

from __future__ import annotations

import base64
import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence, Union

import numpy as np

from .binning import Bin
from .errors import ConfigError, FormatError, ProviderError

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1
_EMB1_HEADER = struct.Struct("<4sHII")  # magic, version, dimension, count

DEFAULT_DIMENSION = 64
DEFAULT_HTTP_TIMEOUT = 10.0
DEFAULT_HTTP_FAN_OUT = 4

# Keyed-hash salt separating the cluster space from the selector space when
# both are derived from the same bin bytes.
CLUSTER_SPACE_SALT = 0x9E3779B97F4A7C15

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SPLITMIX_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SPLITMIX_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Finalizer of the splitmix64 generator; bijective 64-bit mixing."""
    z = x.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _SPLITMIX_M1
    z ^= z >> np.uint64(27)
    z *= _SPLITMIX_M2
    z ^= z >> np.uint64(31)
    return z


def hash_embed(data: bytes, dimension: int, seed: int) -> np.ndarray:
    """Deterministic embedding of a byte string.

    An 8-byte keyed BLAKE2b digest of ``data`` seeds a splitmix64 lane per
    coordinate; lanes map to [-1, 1) and the vector is l2-normalized. Empty
    input returns the zero vector. Pure in (data, dimension, seed) across
    processes and platforms.
    """
    if dimension < 1:
        raise ConfigError(f"embedding dimension must be >= 1, got {dimension}")
    if len(data) == 0:
        return np.zeros(dimension, dtype=np.float64)
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(data, digest_size=8, key=key).digest()
    state = np.uint64(int.from_bytes(digest, "little"))
    with np.errstate(over="ignore"):
        lanes = _splitmix64(
            state + (np.arange(1, dimension + 1, dtype=np.uint64) * _SPLITMIX_GAMMA)
        )
    values = (lanes >> np.uint64(11)).astype(np.float64) * (2.0 ** -53) * 2.0 - 1.0
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        return values
    return values / norm


def bin_record_bytes(bin_: Bin) -> bytes:
    """Canonical content of a bin: its events' EVS1 record bytes."""
    return bin_.events.tobytes()


def _check_finite(vectors: np.ndarray, origin: str) -> None:
    if not np.isfinite(vectors).all():
        raise FormatError(f"{origin}: embedding contains NaN or Inf")


@dataclass(frozen=True)
class BinFeatureSequence:
    """Aligned per-bin features plus the query vector, all in one session.

    selector: (T, Ds), cluster: (T, Dc), query: (Ds,). Construction fails on
    any length or dimension mismatch; downstream code may assume alignment.
    """

    selector: np.ndarray
    cluster: np.ndarray
    query: np.ndarray

    def __post_init__(self) -> None:
        if self.selector.ndim != 2 or self.cluster.ndim != 2 or self.query.ndim != 1:
            raise ConfigError("selector/cluster must be 2-d, query 1-d")
        if len(self.selector) != len(self.cluster):
            raise ConfigError(
                f"selector holds {len(self.selector)} vectors but cluster holds "
                f"{len(self.cluster)}"
            )
        if self.selector.shape[1] != self.query.shape[0]:
            raise ConfigError(
                f"query dimension {self.query.shape[0]} != selector dimension "
                f"{self.selector.shape[1]}"
            )

    @property
    def bin_count(self) -> int:
        return len(self.selector)


class HashEmbeddingProvider:
    """Content-addressed embeddings: a keyed hash of each bin's record bytes.

    Selector and cluster spaces share the bin bytes but use different hash
    keys (the cluster key is the seed xor a fixed salt), so the two spaces are
    decorrelated. Empty bins map to the zero vector in both spaces. Thread
    count only affects wall time, never values.
    """

    kind = "hash"

    def __init__(self, dimension: int = DEFAULT_DIMENSION, seed: int = 0, threads: int = 1):
        if dimension < 1:
            raise ConfigError(f"embedding dimension must be >= 1, got {dimension}")
        if threads < 1:
            raise ConfigError(f"thread count must be >= 1, got {threads}")
        self.dimension = dimension
        self.seed = seed
        self.threads = threads
        self._cluster_seed = seed ^ CLUSTER_SPACE_SALT

    def embed_bins(self, bins: Sequence[Bin]) -> tuple[np.ndarray, np.ndarray]:
        if len(bins) == 0:
            raise ConfigError("embed_bins needs at least one bin")

        def one(bin_: Bin) -> tuple[np.ndarray, np.ndarray]:
            data = bin_record_bytes(bin_)
            return (
                hash_embed(data, self.dimension, self.seed),
                hash_embed(data, self.dimension, self._cluster_seed),
            )

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                pairs = list(pool.map(one, bins))
        else:
            pairs = [one(b) for b in bins]
        selector = np.stack([p[0] for p in pairs])
        cluster = np.stack([p[1] for p in pairs])
        return selector, cluster

    def embed_query(self, text: str) -> np.ndarray:
        if not text:
            raise ConfigError("query text must be non-empty")
        return hash_embed(text.encode("utf-8"), self.dimension, self.seed)


class FileEmbeddingProvider:
    """Precomputed embeddings from a directory of EMB1 files.

    Layout under ``root``:

        selector.emb1   one selector vector per bin, bin order
        cluster.emb1    one cluster vector per bin, bin order
        queries.emb1    optional query table, row-major
        queries.txt     optional index, one query string per line = one row

    ``embed_bins`` demands an exact count match with the bin sequence;
    ``embed_query`` looks the text up in the index and fails naming the query
    on a miss.
    """

    kind = "file"

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self._selector = read_emb1(self.root / "selector.emb1")
        self._cluster = read_emb1(self.root / "cluster.emb1")
        if len(self._selector) != len(self._cluster):
            raise ProviderError(
                f"{self.root}: selector.emb1 holds {len(self._selector)} vectors but "
                f"cluster.emb1 holds {len(self._cluster)}"
            )
        self.dimension = self._selector.shape[1]
        self._queries: np.ndarray | None = None
        self._query_rows: dict[str, int] | None = None
        q_table = self.root / "queries.emb1"
        q_index = self.root / "queries.txt"
        if q_table.exists() or q_index.exists():
            if not (q_table.exists() and q_index.exists()):
                raise ProviderError(
                    f"{self.root}: queries.emb1 and queries.txt must be present together"
                )
            self._queries = read_emb1(q_table)
            names = q_index.read_text(encoding="utf-8").splitlines()
            self._query_rows = {name: row for row, name in enumerate(names)}
            if len(self._query_rows) != len(self._queries):
                raise ProviderError(
                    f"{self.root}: queries.txt lists {len(self._query_rows)} distinct "
                    f"queries but queries.emb1 holds {len(self._queries)} vectors"
                )

    def embed_bins(self, bins: Sequence[Bin]) -> tuple[np.ndarray, np.ndarray]:
        if len(bins) == 0:
            raise ConfigError("embed_bins needs at least one bin")
        if len(self._selector) != len(bins):
            raise ProviderError(
                f"{self.root}: embeddings file holds {len(self._selector)} vectors "
                f"but the stream produced {len(bins)} bins"
            )
        return self._selector.copy(), self._cluster.copy()

    def embed_query(self, text: str) -> np.ndarray:
        if not text:
            raise ConfigError("query text must be non-empty")
        if self._queries is None or self._query_rows is None:
            raise ProviderError(f"{self.root}: no query table (queries.emb1/queries.txt)")
        row = self._query_rows.get(text)
        if row is None:
            raise ProviderError(f"{self.root}: query not in table: {text!r}")
        return self._queries[row].copy()


class HttpEmbeddingProvider:
    """Remote embedding service client.

    One request per bin (``kind: "bin"``) or query (``kind: "text"``). The
    wire protocol carries no space discriminator, so the returned vector
    serves as both the selector and the cluster feature of a bin. Requests
    fan out over a bounded thread pool; results always come back in bin
    order. Every failure is reported with the offending bin index.
    """

    kind = "http"

    def __init__(
        self,
        base_url: str,
        dimension: int = DEFAULT_DIMENSION,
        timeout: float = DEFAULT_HTTP_TIMEOUT,
        fan_out: int = DEFAULT_HTTP_FAN_OUT,
    ):
        if dimension < 1:
            raise ConfigError(f"embedding dimension must be >= 1, got {dimension}")
        if fan_out < 1:
            raise ConfigError(f"fan_out must be >= 1, got {fan_out}")
        self.base_url = base_url.rstrip("/")
        self.dimension = dimension
        self.timeout = timeout
        self.fan_out = fan_out

    def _request(self, kind: str, payload: str, context: str) -> np.ndarray:
        import httpx

        body = {"kind": kind, "dimension": self.dimension, "payload": payload}
        try:
            response = httpx.post(
                f"{self.base_url}/embed", json=body, timeout=self.timeout
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"{context}: transport failure: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"{context}: HTTP {response.status_code}")
        try:
            vector = response.json()["vector"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"{context}: malformed response body") from exc
        arr = np.asarray(vector, dtype=np.float64)
        if arr.shape != (self.dimension,):
            raise ProviderError(
                f"{context}: expected {self.dimension} floats, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ProviderError(f"{context}: vector contains NaN or Inf")
        return arr

    def embed_bins(self, bins: Sequence[Bin]) -> tuple[np.ndarray, np.ndarray]:
        if len(bins) == 0:
            raise ConfigError("embed_bins needs at least one bin")

        def one(item: tuple[int, Bin]) -> np.ndarray:
            index, bin_ = item
            payload = base64.b64encode(bin_record_bytes(bin_)).decode("ascii")
            return self._request("bin", payload, context=f"bin {index}")

        with ThreadPoolExecutor(max_workers=self.fan_out) as pool:
            vectors = list(pool.map(one, enumerate(bins)))
        features = np.stack(vectors)
        return features, features.copy()

    def embed_query(self, text: str) -> np.ndarray:
        if not text:
            raise ConfigError("query text must be non-empty")
        return self._request("text", text, context="query")


Provider = Union[HashEmbeddingProvider, FileEmbeddingProvider, HttpEmbeddingProvider]


@dataclass(frozen=True)
class ProviderSpec:
    """Declarative provider selection; ``build()`` turns it into an instance.

    CLI grammar: ``hash:D:SEED`` (seed optional, default 0), ``file:PATH``,
    or an http(s) URL.
    """

    kind: str
    dimension: int = DEFAULT_DIMENSION
    seed: int = 0
    path: str = ""
    base_url: str = ""
    timeout: float = DEFAULT_HTTP_TIMEOUT
    fan_out: int = DEFAULT_HTTP_FAN_OUT

    def __post_init__(self) -> None:
        if self.kind not in ("hash", "file", "http"):
            raise ConfigError(f"unknown provider kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "ProviderSpec":
        head, _, rest = text.partition(":")
        if head == "hash":
            parts = rest.split(":") if rest else []
            if not 1 <= len(parts) <= 2:
                raise ConfigError(f"hash provider must be hash:D or hash:D:SEED, got {text!r}")
            try:
                dimension = int(parts[0])
                seed = int(parts[1]) if len(parts) == 2 else 0
            except ValueError:
                raise ConfigError(f"non-integer field in provider spec {text!r}") from None
            return cls(kind="hash", dimension=dimension, seed=seed)
        if head == "file":
            if not rest:
                raise ConfigError("file provider needs a path: file:PATH")
            return cls(kind="file", path=rest)
        if head in ("http", "https"):
            base_url = text if "://" in text else rest
            if not base_url:
                raise ConfigError("http provider needs a URL")
            if "://" not in base_url:
                base_url = "http://" + base_url
            return cls(kind="http", base_url=base_url)
        raise ConfigError(f"unknown provider spec {text!r}")

    def build(self, threads: int = 1) -> Provider:
        if self.kind == "hash":
            return HashEmbeddingProvider(self.dimension, self.seed, threads=threads)
        if self.kind == "file":
            return FileEmbeddingProvider(self.path)
        return HttpEmbeddingProvider(
            self.base_url,
            dimension=self.dimension,
            timeout=self.timeout,
            fan_out=max(self.fan_out, threads),
        )


def embed_bins(bins: Sequence[Bin], provider: Provider) -> tuple[np.ndarray, np.ndarray]:
    """Run the provider over the bins; validates shape alignment and finiteness."""
    selector, cluster = provider.embed_bins(bins)
    if len(selector) != len(bins) or len(cluster) != len(bins):
        raise ProviderError(
            f"provider returned {len(selector)}/{len(cluster)} vectors for {len(bins)} bins"
        )
    _check_finite(selector, "selector features")
    _check_finite(cluster, "cluster features")
    return selector, cluster


def embed_query(text: str, provider: Provider) -> np.ndarray:
    qv = provider.embed_query(text)
    _check_finite(qv, "query vector")
    return qv


def read_emb1(source: Union[bytes, BinaryIO, str, Path]) -> np.ndarray:
    """Read an EMB1 file into a (count, dimension) float64 array."""
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    if len(data) < _EMB1_HEADER.size:
        raise FormatError("EMB1 input shorter than its 14-byte header")
    magic, version, dimension, count = _EMB1_HEADER.unpack_from(data)
    if magic != EMB1_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {EMB1_MAGIC!r}")
    if version != EMB1_VERSION:
        raise FormatError(f"unsupported EMB1 version {version}")
    if dimension < 1:
        raise FormatError("EMB1 dimension must be >= 1")
    expected = _EMB1_HEADER.size + 4 * dimension * count
    if len(data) != expected:
        raise FormatError(
            f"EMB1 payload is {len(data) - _EMB1_HEADER.size} bytes, "
            f"expected {expected - _EMB1_HEADER.size} for {count} x {dimension} float32"
        )
    flat = np.frombuffer(data, dtype="<f4", offset=_EMB1_HEADER.size)
    vectors = flat.reshape(count, dimension).astype(np.float64)
    _check_finite(vectors, "EMB1 file")
    return vectors


def write_emb1(vectors: np.ndarray, sink: Union[BinaryIO, str, Path]) -> int:
    """Write a (count, dimension) array as EMB1; values stored as float32."""
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            return write_emb1(vectors, fh)
    arr = np.ascontiguousarray(vectors, dtype="<f4")
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ConfigError(f"EMB1 expects a (count, dimension) array, got shape {arr.shape}")
    _check_finite(arr, "EMB1 payload")
    count, dimension = arr.shape
    sink.write(_EMB1_HEADER.pack(EMB1_MAGIC, EMB1_VERSION, dimension, count))
    sink.write(arr.tobytes())
    return _EMB1_HEADER.size + 4 * count * dimension
