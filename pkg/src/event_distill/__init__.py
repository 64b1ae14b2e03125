"""Adaptive compression for long event-camera streams.

Pipeline: parse an event stream, slice it into fixed-width temporal bins,
embed each bin, keep the bins relevant to a text query, then collapse
redundant stretches with diversity-driven average-linkage clustering. The
result is a short token sequence with full provenance back to source bins.
"""

from .binning import Bin, PolarityFrame, bin_stream, frame_to_rgb, render_frame, write_png, write_ppm
from .compression import (
    CompressedSequence,
    CompressionConfig,
    FilteredSequence,
    TokenProvenance,
    WindowPartition,
    WindowStat,
    aggregate_clusters,
    cluster_count,
    compress_sequence,
    cosine_similarity,
    cross_modal_filter,
    hac_average_linkage,
    partition_windows,
    read_cmp1,
    sample_baseline,
    window_diversity,
    write_cmp1,
)
from .embedding import (
    BinFeatureSequence,
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
    ProviderSpec,
    embed_bins,
    embed_query,
    hash_embed,
    read_emb1,
    write_emb1,
)
from .errors import (
    ConfigError,
    EmptyStreamError,
    EventDistillError,
    FormatError,
    ProviderError,
)
from .events import (
    EVENT_DTYPE,
    Event,
    EventStream,
    SensorGeometry,
    parse_csv,
    parse_evbin,
    write_evbin,
)
from .pipeline import PipelineConfig, RunReport, bench, run_pipeline
from .synth import SceneSpec, Segment, generate_synthetic, write_synthetic

__version__ = "0.1.0"

__all__ = [
    "Bin",
    "BinFeatureSequence",
    "CompressedSequence",
    "CompressionConfig",
    "ConfigError",
    "EVENT_DTYPE",
    "EmptyStreamError",
    "Event",
    "EventDistillError",
    "EventStream",
    "FileEmbeddingProvider",
    "FilteredSequence",
    "FormatError",
    "HashEmbeddingProvider",
    "HttpEmbeddingProvider",
    "PipelineConfig",
    "PolarityFrame",
    "ProviderError",
    "ProviderSpec",
    "RunReport",
    "SceneSpec",
    "Segment",
    "SensorGeometry",
    "TokenProvenance",
    "WindowPartition",
    "WindowStat",
    "aggregate_clusters",
    "bench",
    "bin_stream",
    "cluster_count",
    "compress_sequence",
    "cosine_similarity",
    "cross_modal_filter",
    "embed_bins",
    "embed_query",
    "frame_to_rgb",
    "generate_synthetic",
    "hac_average_linkage",
    "hash_embed",
    "parse_csv",
    "parse_evbin",
    "partition_windows",
    "read_cmp1",
    "read_emb1",
    "render_frame",
    "run_pipeline",
    "sample_baseline",
    "window_diversity",
    "write_cmp1",
    "write_emb1",
    "write_evbin",
    "write_png",
    "write_ppm",
    "write_synthetic",
]
