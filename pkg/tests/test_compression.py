"""Filtering, windowing, diversity, clustering, aggregation, serialization."""

import io
import math

import numpy as np
import pytest

import reference as ref
from event_distill import (
    CompressedSequence,
    CompressionConfig,
    ConfigError,
    FilteredSequence,
    FormatError,
    TokenProvenance,
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
from event_distill.compression import to_json_dict


def filtered_from(features, time_ranges=None, indices=None):
    features = np.asarray(features, dtype=np.float64)
    k = len(features)
    indices = np.arange(k, dtype=np.int64) if indices is None else np.asarray(indices)
    ranges = (
        np.zeros((k, 2), dtype=np.uint64)
        if time_ranges is None
        else np.asarray(time_ranges, dtype=np.uint64)
    )
    return FilteredSequence(
        kept_indices=indices,
        features=features,
        selector_sims=np.ones(k),
        time_ranges=ranges,
    )


class TestCosineSimilarity:
    def test_identical_unit_vectors(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_zero_vector_convention(self):
        assert cosine_similarity(np.array([0.0, 0.0]), np.array([1.0, 0.0])) == 0.0

    def test_clamped_to_unit_interval(self):
        v = np.array([0.1, 0.2, 0.30000000000000004])
        assert -1.0 <= cosine_similarity(v, v) <= 1.0

    def test_antipodal(self):
        v = np.array([0.3, -0.4])
        assert cosine_similarity(v, -v) == -1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            cosine_similarity(np.ones(3), np.ones(4))

    def test_matches_reference_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = rng.normal(size=5)
            b = rng.normal(size=5)
            assert cosine_similarity(a, b) == pytest.approx(ref.cosine(a, b), abs=1e-12)


class TestCrossModalFilter:
    def _run(self, sims_target, tau, fallback=True):
        """Build selector vectors achieving the wanted similarities to q=(1,0)."""
        query = np.array([1.0, 0.0])
        sel = np.array([[s, math.sqrt(max(0.0, 1 - s * s))] for s in sims_target])
        clu = np.arange(len(sims_target) * 3, dtype=np.float64).reshape(-1, 3)
        config = CompressionConfig(tau=tau, fallback_top1=fallback)
        return cross_modal_filter(sel, clu, query, config), clu

    def test_keeps_bins_at_or_above_tau(self):
        out, clu = self._run([1.0, 0.0, 0.8], tau=0.5)
        assert list(out.kept_indices) == [0, 2]
        assert np.array_equal(out.features, clu[[0, 2]])
        assert out.selector_sims == pytest.approx([1.0, 0.8], abs=1e-12)
        assert not out.fallback_used

    def test_threshold_is_inclusive(self):
        out, _ = self._run([0.5, 0.49], tau=0.5)
        assert list(out.kept_indices) == [0]

    def test_fallback_argmax_lowest_index_tie(self):
        out, _ = self._run([0.1, 0.4, 0.4], tau=0.5)
        assert list(out.kept_indices) == [1]
        assert out.fallback_used

    def test_fallback_disabled_returns_empty(self):
        out, _ = self._run([0.1, 0.2], tau=0.9, fallback=False)
        assert out.k == 0

    def test_tau_minus_one_keeps_everything(self):
        out, _ = self._run([-1.0, 0.0, 1.0, -0.5], tau=-1.0)
        assert list(out.kept_indices) == [0, 1, 2, 3]

    def test_zero_selector_rows_score_zero(self):
        query = np.array([1.0, 0.0])
        sel = np.array([[0.0, 0.0], [1.0, 0.0]])
        clu = np.ones((2, 2))
        out = cross_modal_filter(sel, clu, query, CompressionConfig(tau=0.0))
        assert list(out.kept_indices) == [0, 1]
        assert out.selector_sims[0] == 0.0

    def test_time_ranges_follow_kept_bins(self):
        query = np.array([1.0, 0.0])
        sel = np.array([[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0]])
        clu = np.ones((3, 2))
        ranges = np.array([[0, 10], [10, 20], [20, 30]], dtype=np.uint64)
        out = cross_modal_filter(
            sel, clu, query, CompressionConfig(tau=0.5), time_ranges=ranges
        )
        assert out.time_ranges.tolist() == [[0, 10], [20, 30]]

    def test_empty_input_rejected(self):
        with pytest.raises(ConfigError):
            cross_modal_filter(
                np.empty((0, 2)), np.empty((0, 2)), np.ones(2), CompressionConfig()
            )

    def test_query_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            cross_modal_filter(np.ones((2, 3)), np.ones((2, 3)), np.ones(4), CompressionConfig())

    def test_soundness_against_reference(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            t = int(rng.integers(1, 30))
            dim = int(rng.integers(2, 6))
            sel = rng.normal(size=(t, dim))
            if rng.random() < 0.3:
                sel[rng.integers(0, t)] = 0.0
            query = rng.normal(size=dim)
            tau = float(rng.uniform(-1, 1))
            out = cross_modal_filter(
                sel, sel.copy(), query, CompressionConfig(tau=tau, fallback_top1=False)
            )
            assert list(out.kept_indices) == ref.filter_kept(sel, query, tau)


class TestPartitionWindows:
    def test_exact_division(self):
        part = partition_windows(16, 8)
        assert [(w.start, w.size) for w in part.windows] == [(0, 8), (8, 8)]

    def test_shrunk_remainder(self):
        part = partition_windows(10, 8, "shrunk-window")
        assert [(w.start, w.size) for w in part.windows] == [(0, 8), (8, 2)]
        assert not any(w.passthrough for w in part.windows)

    def test_small_k_single_window(self):
        part = partition_windows(5, 8)
        assert [(w.start, w.size) for w in part.windows] == [(0, 5)]

    def test_passthrough_remainder(self):
        part = partition_windows(10, 8, "passthrough")
        sizes = [(w.start, w.size, w.passthrough) for w in part.windows]
        assert sizes == [(0, 8, False), (8, 1, True), (9, 1, True)]

    def test_windows_cover_everything(self):
        for k in range(1, 40):
            for j in (1, 3, 8):
                part = partition_windows(k, j)
                covered = [w.start + i for w in part.windows for i in range(w.size)]
                assert covered == list(range(k))

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            partition_windows(0, 8)
        with pytest.raises(ConfigError):
            partition_windows(5, 0)
        with pytest.raises(ConfigError):
            partition_windows(5, 2, "drop")


class TestWindowDiversity:
    def test_identical_vectors(self):
        v = np.array([0.3, 0.4, 1.2])
        assert window_diversity(np.stack([v] * 4)) == pytest.approx(0.0, abs=1e-12)

    def test_antipodal_pair(self):
        v = np.array([2.0, -1.0])
        assert window_diversity(np.stack([v, -v])) == pytest.approx(2.0, abs=1e-12)

    def test_orthogonal_pair(self):
        assert window_diversity(np.array([[1.0, 0.0], [0.0, 1.0]])) == pytest.approx(1.0)

    def test_single_vector_returns_zero(self):
        assert window_diversity(np.array([[5.0, 5.0]])) == 0.0

    def test_all_zero_window_counts_as_identical(self):
        assert window_diversity(np.zeros((8, 4))) == 0.0

    def test_zero_vs_nonzero_distance_one(self):
        # One zero + one unit vector: single pair at distance 1.
        assert window_diversity(np.array([[0.0, 0.0], [3.0, 0.0]])) == pytest.approx(1.0)

    def test_mixed_zero_window_matches_reference(self):
        window = np.array(
            [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 2.0]], dtype=np.float64
        )
        assert window_diversity(window) == pytest.approx(ref.diversity(window), abs=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        window = rng.normal(size=(6, 4))
        assert window_diversity(window) == pytest.approx(
            window_diversity(window * 7.5), abs=1e-12
        )

    def test_bounds_property_with_random_and_zero_vectors(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            n = int(rng.integers(1, 10))
            window = rng.normal(size=(n, 3))
            zero_rows = rng.random(n) < 0.25
            window[zero_rows] = 0.0
            d = window_diversity(window)
            assert 0.0 <= d <= 2.0
            assert d == pytest.approx(ref.diversity(window), abs=1e-9)

    def test_ragged_input_rejected(self):
        with pytest.raises(ConfigError):
            window_diversity([np.ones(3), np.ones(4)])


class TestClusterCount:
    def test_zero_diversity_collapses_to_one(self):
        assert cluster_count(0.0, 8) == 1

    def test_max_diversity_keeps_window_size(self):
        assert cluster_count(2.0, 8) == 8

    def test_midpoint(self):
        assert cluster_count(1.0, 8) == 4

    def test_half_rounds_away_from_zero(self):
        # 9/8 / 2 * 8 = 4.5 exactly; half away from zero gives 5.
        assert cluster_count(9 / 8, 8) == 5
        assert cluster_count(0.125, 4) == 1  # 0.25 rounds to 0, clamped to 1

    def test_four_sevenths_window(self):
        assert cluster_count(8 / 7, 8) == 5

    def test_monotone_in_diversity(self):
        for j in (1, 2, 5, 8, 13):
            previous = 0
            for d in np.linspace(0, 2, 400):
                r = cluster_count(float(d), j)
                assert 1 <= r <= j
                assert r >= previous
                previous = r

    def test_matches_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            d = float(rng.uniform(0, 2))
            j = int(rng.integers(1, 16))
            assert cluster_count(d, j) == ref.cluster_count(d, j)

    def test_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            cluster_count(-0.1, 8)
        with pytest.raises(ConfigError):
            cluster_count(2.1, 8)


def unit_at_degrees(*angles):
    return np.array(
        [[math.cos(math.radians(a)), math.sin(math.radians(a))] for a in angles]
    )


class TestHacAverageLinkage:
    def test_two_tight_pairs(self):
        # Derived with the naive full-rescan reference in tests/reference.py.
        vectors = unit_at_degrees(0, 5, 90, 95)
        assert hac_average_linkage(vectors, 2) == [[0, 1], [2, 3]]

    def test_k_equals_n_no_merges(self):
        vectors = unit_at_degrees(0, 40, 80, 120)
        assert hac_average_linkage(vectors, 4) == [[0], [1], [2], [3]]

    def test_k_one_single_cluster(self):
        vectors = unit_at_degrees(0, 40, 80, 120)
        assert hac_average_linkage(vectors, 1) == [[0, 1, 2, 3]]

    def test_duplicate_points_tie_break_lexicographic(self):
        # Four identical points: every pair ties at distance 0; merges must
        # follow the (min, max-of-mins) rule: (0,1) then (0,2) then (0,3).
        vectors = np.ones((4, 3))
        assert hac_average_linkage(vectors, 3) == [[0, 1], [2], [3]]
        assert hac_average_linkage(vectors, 2) == [[0, 1, 2], [3]]

    def test_zero_vectors_cluster_together_first(self):
        vectors = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        assert hac_average_linkage(vectors, 3) == [[0], [1, 3], [2]]

    def test_scale_invariance(self):
        rng = np.random.default_rng(6)
        vectors = rng.normal(size=(8, 5))
        for k in range(1, 9):
            assert hac_average_linkage(vectors, k) == hac_average_linkage(vectors * 4.0, k)

    def test_oracle_equivalence_sample(self):
        # Small version of the acceptance sweep: incremental vs full rescan.
        rng = np.random.default_rng(8)
        for _ in range(300):
            n = int(rng.integers(2, 9))
            vectors = rng.normal(size=(n, int(rng.integers(2, 6))))
            levels = ref.hac_merge_sequence(vectors.tolist())
            for k in range(1, n + 1):
                assert hac_average_linkage(vectors, k) == levels[n - k], (
                    f"divergence at n={n}, k={k}"
                )

    def test_k_out_of_range(self):
        with pytest.raises(ConfigError):
            hac_average_linkage(np.ones((3, 2)), 0)
        with pytest.raises(ConfigError):
            hac_average_linkage(np.ones((3, 2)), 4)


class TestAggregateClusters:
    def test_mean_of_members(self):
        out = aggregate_clusters(np.array([[2.0, 0.0], [0.0, 2.0]]), [[0, 1]])
        assert np.array_equal(out, np.array([[1.0, 1.0]]))

    def test_singleton_identity(self):
        v = np.array([[0.1, -0.7, 3.0]])
        out = aggregate_clusters(v, [[0]])
        assert np.array_equal(out[0], v[0])

    def test_mean_of_identical_is_identity(self):
        v = np.array([1.5, -2.5, 0.5])
        out = aggregate_clusters(np.stack([v] * 6), [list(range(6))])
        assert out[0] == pytest.approx(v, abs=1e-12)

    def test_uses_raw_unnormalized_vectors(self):
        out = aggregate_clusters(np.array([[4.0, 0.0], [0.0, 2.0]]), [[0, 1]])
        assert np.array_equal(out, np.array([[2.0, 1.0]]))

    def test_output_ordered_by_min_member(self):
        vectors = np.diag([1.0, 2.0, 3.0])
        out = aggregate_clusters(vectors, [[2], [0], [1]])
        assert np.array_equal(out, vectors[[0, 1, 2]])

    def test_partition_violations_rejected(self):
        vectors = np.ones((3, 2))
        with pytest.raises(ConfigError):
            aggregate_clusters(vectors, [[0, 1]])  # misses 2
        with pytest.raises(ConfigError):
            aggregate_clusters(vectors, [[0, 1], [1, 2]])  # overlap
        with pytest.raises(ConfigError):
            aggregate_clusters(vectors, [[0, 1, 2], []])  # empty cluster


class TestCompressSequence:
    def test_sixteen_identical_bins_two_tokens(self):
        v = np.array([0.2, 0.4, 0.6])
        filtered = filtered_from(np.stack([v] * 16))
        out = compress_sequence(filtered, CompressionConfig(tau=-1, window_size=8))
        assert out.token_count == 2
        assert [ws.cluster_count for ws in out.window_stats] == [1, 1]
        assert [ws.diversity for ws in out.window_stats] == pytest.approx([0, 0], abs=1e-9)
        for token in out.tokens:
            assert token == pytest.approx(v, abs=1e-12)

    def test_four_v_four_minus_v_window(self):
        # Hand-derived and confirmed by tests/reference.py: D = 8/7, R = 5.
        v = np.array([0.6, 0.8, 0.0])
        window = np.stack([v] * 4 + [-v] * 4)
        filtered = filtered_from(window)
        out = compress_sequence(filtered, CompressionConfig(tau=-1, window_size=8))
        assert out.window_stats[0].diversity == pytest.approx(8 / 7, abs=1e-9)
        assert out.window_stats[0].cluster_count == 5
        assert out.token_count == 5

    def test_single_kept_bin_identity(self):
        v = np.array([[9.0, -3.0, 1.0]])
        out = compress_sequence(filtered_from(v), CompressionConfig(window_size=8))
        assert out.token_count == 1
        assert np.array_equal(out.tokens[0], v[0])
        assert out.window_stats[0].size == 1
        assert out.window_stats[0].cluster_count == 1

    def test_provenance_partitions_kept_indices(self):
        rng = np.random.default_rng(9)
        features = rng.normal(size=(21, 6))
        indices = np.sort(rng.choice(100, size=21, replace=False))
        filtered = filtered_from(features, indices=indices)
        out = compress_sequence(filtered, CompressionConfig(window_size=8))
        seen = [m for prov in out.provenance for m in prov.members]
        assert sorted(seen) == sorted(int(i) for i in indices)
        assert len(seen) == len(set(seen))

    def test_tokens_in_temporal_order(self):
        rng = np.random.default_rng(10)
        features = rng.normal(size=(24, 4))
        out = compress_sequence(filtered_from(features), CompressionConfig(window_size=8))
        order = [(p.window, min(p.members)) for p in out.provenance]
        assert order == sorted(order)

    def test_token_count_bounded_by_k(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            k = int(rng.integers(1, 40))
            features = rng.normal(size=(k, 5))
            out = compress_sequence(filtered_from(features), CompressionConfig(window_size=8))
            assert 1 <= out.token_count <= k
            assert out.token_count == sum(ws.cluster_count for ws in out.window_stats)

    def test_passthrough_remainder_tokens(self):
        rng = np.random.default_rng(13)
        features = rng.normal(size=(10, 4))
        config = CompressionConfig(window_size=8, remainder_policy="passthrough")
        out = compress_sequence(filtered_from(features), config)
        tail = [p for p in out.provenance if p.window >= 1]
        assert [p.members for p in tail] == [(8,), (9,)]
        assert np.array_equal(out.tokens[-2], features[8])
        assert np.array_equal(out.tokens[-1], features[9])

    def test_shrunk_remainder_clustered(self):
        v = np.array([1.0, 0.0])
        features = np.stack([v] * 10)
        out = compress_sequence(filtered_from(features), CompressionConfig(window_size=8))
        assert [ws.size for ws in out.window_stats] == [8, 2]
        assert out.token_count == 2

    def test_time_ranges_cover_members(self):
        features = np.stack([np.array([1.0, 0.0])] * 4)
        ranges = np.array([[0, 10], [10, 20], [20, 30], [30, 40]], dtype=np.uint64)
        out = compress_sequence(
            filtered_from(features, time_ranges=ranges),
            CompressionConfig(window_size=4),
        )
        assert out.token_count == 1
        assert (out.provenance[0].t_start, out.provenance[0].t_end) == (0, 40)

    def test_deterministic_serialization(self):
        rng = np.random.default_rng(14)
        features = rng.normal(size=(19, 8))
        filtered = filtered_from(features)
        a, b = io.BytesIO(), io.BytesIO()
        write_cmp1(compress_sequence(filtered, CompressionConfig(window_size=8)), a)
        write_cmp1(compress_sequence(filtered, CompressionConfig(window_size=8)), b)
        assert a.getvalue() == b.getvalue()

    def test_scale_invariance_of_assignment(self):
        rng = np.random.default_rng(15)
        features = rng.normal(size=(16, 5))
        out1 = compress_sequence(filtered_from(features), CompressionConfig(window_size=8))
        out2 = compress_sequence(filtered_from(features * 8.0), CompressionConfig(window_size=8))
        assert [ws.cluster_count for ws in out1.window_stats] == [
            ws.cluster_count for ws in out2.window_stats
        ]
        assert [p.members for p in out1.provenance] == [p.members for p in out2.provenance]
        assert np.allclose(out1.tokens * 8.0, out2.tokens, atol=1e-9)

    def test_empty_filtered_rejected(self):
        empty = FilteredSequence(
            kept_indices=np.empty(0, dtype=np.int64),
            features=np.empty((0, 4)),
            selector_sims=np.empty(0),
            time_ranges=np.empty((0, 2), dtype=np.uint64),
        )
        with pytest.raises(ConfigError):
            compress_sequence(empty, CompressionConfig())

    def test_matches_reference_outline(self):
        rng = np.random.default_rng(16)
        for _ in range(30):
            k = int(rng.integers(1, 30))
            features = rng.normal(size=(k, 4))
            zero_rows = rng.random(k) < 0.2
            features[zero_rows] = 0.0
            out = compress_sequence(filtered_from(features), CompressionConfig(window_size=8))
            outline = ref.compress_outline(features.tolist(), 8)
            assert len(out.window_stats) == len(outline)
            for ws, (d, r) in zip(out.window_stats, outline):
                assert ws.diversity == pytest.approx(d, abs=1e-9)
                assert ws.cluster_count == r


class TestSampleBaseline:
    def test_interval_spacing(self):
        filtered = filtered_from(np.arange(20).reshape(10, 2).astype(float))
        out = sample_baseline(filtered, "interval", 5)
        assert [p.members[0] for p in out.provenance] == [0, 2, 4, 6, 8]

    def test_random_seed_deterministic(self):
        filtered = filtered_from(np.random.default_rng(17).normal(size=(12, 3)))
        a = sample_baseline(filtered, "random", 5, seed=99)
        b = sample_baseline(filtered, "random", 5, seed=99)
        assert [p.members for p in a.provenance] == [p.members for p in b.provenance]
        assert np.array_equal(a.tokens, b.tokens)

    def test_random_temporal_order_and_singletons(self):
        filtered = filtered_from(np.random.default_rng(18).normal(size=(30, 3)))
        out = sample_baseline(filtered, "random", 10, seed=1)
        members = [p.members for p in out.provenance]
        assert all(len(m) == 1 for m in members)
        flat = [m[0] for m in members]
        assert flat == sorted(flat)
        assert len(set(flat)) == 10

    def test_budget_equal_k_is_identity(self):
        features = np.random.default_rng(19).normal(size=(6, 2))
        out = sample_baseline(filtered_from(features), "interval", 6)
        assert np.array_equal(out.tokens, features)
        assert not out.budget_clamped

    def test_budget_above_k_clamped_with_flag(self):
        features = np.random.default_rng(20).normal(size=(4, 2))
        out = sample_baseline(filtered_from(features), "random", 9, seed=0)
        assert out.token_count == 4
        assert out.budget_clamped

    def test_bad_inputs(self):
        filtered = filtered_from(np.ones((3, 2)))
        with pytest.raises(ConfigError):
            sample_baseline(filtered, "interval", 0)
        with pytest.raises(ConfigError):
            sample_baseline(filtered, "stratified", 2)


class TestCmp1:
    def _random_sequence(self, rng):
        count = int(rng.integers(1, 12))
        dim = int(rng.integers(1, 9))
        tokens = rng.normal(size=(count, dim))
        provenance = []
        for i in range(count):
            members = tuple(
                int(m) for m in np.sort(rng.choice(1000, size=int(rng.integers(1, 5)), replace=False))
            )
            t0 = int(rng.integers(0, 10**9))
            provenance.append(
                TokenProvenance(
                    window=i // 3,
                    cluster=i % 3,
                    members=members,
                    t_start=t0,
                    t_end=t0 + int(rng.integers(1, 10**6)),
                )
            )
        return CompressedSequence(tokens=tokens, provenance=tuple(provenance))

    def test_write_read_write_byte_identical_randomized(self):
        rng = np.random.default_rng(21)
        for _ in range(120):
            seq = self._random_sequence(rng)
            a = io.BytesIO()
            write_cmp1(seq, a)
            again = io.BytesIO()
            write_cmp1(read_cmp1(a.getvalue()), again)
            assert a.getvalue() == again.getvalue()

    def test_roundtrip_preserves_provenance(self):
        rng = np.random.default_rng(22)
        seq = self._random_sequence(rng)
        back = read_cmp1_bytes(seq)
        assert back.provenance == seq.provenance
        assert back.tokens == pytest.approx(seq.tokens, abs=1e-6)

    def test_bad_magic(self):
        with pytest.raises(FormatError, match="magic"):
            read_cmp1(b"XXXX" + bytes(10))

    def test_truncated_token(self):
        seq = self._random_sequence(np.random.default_rng(23))
        buf = io.BytesIO()
        write_cmp1(seq, buf)
        with pytest.raises(FormatError, match="truncated"):
            read_cmp1(buf.getvalue()[:-3])

    def test_trailing_bytes_rejected(self):
        seq = self._random_sequence(np.random.default_rng(24))
        buf = io.BytesIO()
        write_cmp1(seq, buf)
        with pytest.raises(FormatError, match="trailing"):
            read_cmp1(buf.getvalue() + b"\x00")

    def test_json_mirror_fields(self):
        seq = self._random_sequence(np.random.default_rng(25))
        payload = to_json_dict(seq)
        assert payload["token_count"] == seq.token_count
        assert payload["dimension"] == seq.dimension
        token = payload["tokens"][0]
        assert set(token) == {"window", "cluster", "members", "t_start", "t_end", "values"}
        assert len(token["values"]) == seq.dimension


def read_cmp1_bytes(seq):
    buf = io.BytesIO()
    write_cmp1(seq, buf)
    return read_cmp1(buf.getvalue())
