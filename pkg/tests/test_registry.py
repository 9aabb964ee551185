import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landsite.registry import LandingSite, SiteRegistry, cluster_sites

from oracles import (
    brute_force_partition,
    linear_scan_nearest,
    sequential_dedup,
)


def site(x, y, z, score=0.8, frame_id=0, timestamp=0.0):
    return LandingSite(position=np.array([x, y, z], dtype=float), score=score,
                       frame_id=frame_id, timestamp=timestamp)


def registry_with(positions, scores=None, dedup_radius=1e-9):
    reg = SiteRegistry(dedup_radius)
    for i, p in enumerate(positions):
        s = 0.8 if scores is None else scores[i]
        assert reg.insert(site(p[0], p[1], p[2], score=s))
    return reg


class TestInsert:
    def test_empty_registry_accepts_anything(self):
        reg = SiteRegistry(0.5)
        assert reg.insert(site(3.0, -1.0, 0.2))
        assert len(reg) == 1

    def test_rejects_within_radius(self):
        reg = SiteRegistry(0.5)
        reg.insert(site(0, 0, 0))
        assert not reg.insert(site(0.4, 0, 0))
        assert len(reg) == 1

    def test_accepts_exactly_at_radius(self):
        reg = SiteRegistry(0.5)
        reg.insert(site(0, 0, 0))
        assert reg.insert(site(0.5, 0, 0))

    def test_rejects_nonfinite(self):
        reg = SiteRegistry(0.5)
        with pytest.raises(ValueError):
            reg.insert(site(np.nan, 0, 0))
        with pytest.raises(ValueError):
            reg.insert_batch([site(np.inf, 0, 0)])

    def test_matches_linear_scan_reference(self):
        rng = np.random.default_rng(21)
        positions = rng.uniform(-3, 3, (2000, 3))
        reg = SiteRegistry(0.5)
        flags = [reg.insert(site(*p)) for p in positions]
        assert flags == sequential_dedup(positions, 0.5)

    def test_min_pairwise_distance_invariant(self):
        rng = np.random.default_rng(22)
        reg = SiteRegistry(0.4)
        for p in rng.uniform(-2, 2, (1500, 3)):
            reg.insert(site(*p))
        pos = reg.positions()
        diff = pos[:, None, :] - pos[None, :, :]
        d = np.sqrt((diff ** 2).sum(-1))
        np.fill_diagonal(d, np.inf)
        assert d.min() >= 0.4


class TestInsertBatch:
    @given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2),
                              st.floats(-2, 2)), max_size=60))
    @settings(max_examples=50, deadline=None)
    def test_equivalent_to_sequential(self, points):
        seq = SiteRegistry(0.5)
        batch = SiteRegistry(0.5)
        sites = [site(*p) for p in points]
        expect = [seq.insert(s) for s in sites]
        got = batch.insert_batch([site(*p) for p in points])
        assert got == expect
        assert np.array_equal(seq.positions(), batch.positions())

    def test_equivalent_across_multiple_batches(self):
        rng = np.random.default_rng(23)
        seq = SiteRegistry(0.35)
        batch = SiteRegistry(0.35)
        for _ in range(5):
            chunk = rng.uniform(-2, 2, (400, 3))
            expect = [seq.insert(site(*p)) for p in chunk]
            got = batch.insert_batch([site(*p) for p in chunk])
            assert got == expect
        assert np.array_equal(seq.positions(), batch.positions())

    def test_insert_positions_matches_site_batch(self):
        rng = np.random.default_rng(24)
        pos = rng.uniform(-2, 2, (300, 3))
        scores = rng.uniform(0, 1, 300)
        a = SiteRegistry(0.5)
        flags_a = a.insert_positions(pos, scores, frame_id=3, timestamp=0.5)
        b = SiteRegistry(0.5)
        flags_b = b.insert_batch([
            LandingSite(position=p, score=float(s), frame_id=3, timestamp=0.5)
            for p, s in zip(pos, scores)])
        assert flags_a == flags_b
        assert np.array_equal(a.positions(), b.positions())
        assert [s.score for s in a.sites] == [s.score for s in b.sites]


class TestNearest:
    def test_empty_returns_none(self):
        assert SiteRegistry(0.5).nearest((0, 0, 0)) is None

    def test_nonfinite_query_returns_none(self):
        reg = registry_with([(1.0, 2.0, 3.0)])
        assert reg.nearest((np.nan, 0.0, 0.0)) is None

    def test_pathological_insertion_order(self):
        # raster-sorted insertions degenerate the tree into a list; the
        # search must stay exact regardless
        xs = np.linspace(-3, 3, 12)
        positions = np.array([(x, y, 0.1 * x) for x in xs for y in xs])
        reg = registry_with(positions)
        rng = np.random.default_rng(8)
        for q in rng.uniform(-3.5, 3.5, (100, 3)):
            found, dist = reg.nearest(q)
            idx, d2 = linear_scan_nearest(positions, q)
            assert np.array_equal(found.position, positions[idx])

    def test_single_site(self):
        reg = registry_with([(1.0, 1.0, 1.0)])
        found, dist = reg.nearest((0, 0, 0))
        assert np.allclose(found.position, [1, 1, 1])
        assert dist == pytest.approx(np.sqrt(3))

    def test_tie_breaks_to_insertion_order(self):
        reg = registry_with([(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)])
        found, dist = reg.nearest((0, 0, 0))
        assert np.allclose(found.position, [1, 0, 0])
        reg2 = registry_with([(-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)])
        found2, _ = reg2.nearest((0, 0, 0))
        assert np.allclose(found2.position, [-1, 0, 0])

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(31)
        positions = rng.uniform(-5, 5, (500, 3))
        reg = registry_with(positions)
        for q in rng.uniform(-6, 6, (300, 3)):
            found, dist = reg.nearest(q)
            idx, d2 = linear_scan_nearest(positions, q)
            assert np.allclose(found.position, positions[idx])
            assert dist == pytest.approx(np.sqrt(d2), abs=0)


class TestClustering:
    def test_two_sites_within_both_thresholds_merge(self):
        reg = registry_with([(0, 0, 0), (0.3, 0, 0.005)])
        clusters = cluster_sites(reg, 0.5, 0.01)
        assert len(clusters) == 1
        assert np.allclose(clusters[0].centroid, [0.15, 0, 0.0025])
        assert clusters[0].member_count == 2

    def test_z_criterion_splits(self):
        reg = registry_with([(0, 0, 0), (0.3, 0, 0.02)])
        clusters = cluster_sites(reg, 0.5, 0.01)
        assert len(clusters) == 2

    def test_xy_metric_ignores_z_in_distance(self):
        reg = registry_with([(0, 0, 0), (0.4, 0, 0.4)])
        assert len(cluster_sites(reg, 0.5, 0.5, metric="xy")) == 1
        # 3-D separation is 0.566 > 0.5, so the xyz metric splits them
        assert len(cluster_sites(reg, 0.5, 0.5, metric="xyz")) == 2

    def test_matches_brute_force_partition(self):
        rng = np.random.default_rng(41)
        positions = rng.uniform(-2, 2, (200, 3))
        scores = rng.uniform(0, 1, 200)
        reg = registry_with(positions, scores)
        for metric in ("xy", "xyz"):
            clusters = cluster_sites(reg, 0.45, 0.3, metric=metric)
            labels = brute_force_partition(positions, 0.45, 0.3, metric=metric)
            assert sum(c.member_count for c in clusters) == 200
            # identical partition: per-group summaries must match exactly
            groups: dict[int, list[int]] = {}
            for i, lab in enumerate(labels):
                groups.setdefault(lab, []).append(i)
            expect = sorted(
                (tuple(positions[idx].mean(axis=0)), float(scores[idx].mean()),
                 len(idx))
                for idx in (np.array(g) for g in groups.values()))
            got = sorted((tuple(c.centroid), c.mean_score, c.member_count)
                         for c in clusters)
            assert got == expect

    @given(st.permutations(list(range(40))))
    @settings(max_examples=25, deadline=None)
    def test_permutation_invariant(self, order):
        rng = np.random.default_rng(55)
        positions = rng.uniform(-1.5, 1.5, (40, 3))
        scores = rng.uniform(0, 1, 40)
        base = cluster_sites(registry_with(positions, scores), 0.6, 0.4)
        permuted = cluster_sites(
            registry_with(positions[order], scores[np.array(order)]), 0.6, 0.4)
        key = lambda c: (round(c.mean_score, 12), c.member_count,
                         tuple(np.round(c.centroid, 12)))
        assert sorted(map(key, base)) == sorted(map(key, permuted))

    def test_singleton_centroid_is_exact(self):
        reg = registry_with([(1.25, -3.5, 0.75)])
        clusters = cluster_sites(reg, 0.5, 0.01)
        assert np.array_equal(clusters[0].centroid,
                              np.array([1.25, -3.5, 0.75]))
        assert clusters[0].member_count == 1

    def test_total_membership_equals_registry_size(self):
        rng = np.random.default_rng(60)
        reg = registry_with(rng.uniform(-2, 2, (120, 3)))
        clusters = cluster_sites(reg, 0.5, 0.2)
        assert sum(c.member_count for c in clusters) == len(reg)

    def test_sorted_by_score_then_size_then_centroid(self):
        reg = SiteRegistry(1e-9)
        # cluster A: two sites, mean score 0.9; B: one site, 0.9; C: 0.5
        reg.insert(site(0.0, 0.0, 0.0, score=0.8))
        reg.insert(site(0.1, 0.0, 0.0, score=1.0))
        reg.insert(site(5.0, 5.0, 0.0, score=0.9))
        reg.insert(site(-5.0, -5.0, 0.0, score=0.5))
        clusters = cluster_sites(reg, 0.5, 0.1)
        assert [c.mean_score for c in clusters] == [0.9, 0.9, 0.5]
        assert clusters[0].member_count == 2  # size breaks the tie
        assert clusters[1].member_count == 1

    def test_rejects_bad_thresholds(self):
        reg = registry_with([(0, 0, 0)])
        with pytest.raises(ValueError):
            cluster_sites(reg, 0.0, 0.1)
        with pytest.raises(ValueError):
            cluster_sites(reg, 0.5, 0.1, metric="polar")

    def test_empty_registry_clusters_to_nothing(self):
        assert cluster_sites(SiteRegistry(0.5), 0.5, 0.01) == []


class TestSnapshot:
    def test_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(70)
        reg = SiteRegistry(0.5)
        for i, p in enumerate(rng.uniform(-2, 2, (50, 3))):
            reg.insert(LandingSite(position=p, score=float(rng.uniform()),
                                   frame_id=i % 3, timestamp=i * 0.05))
        path = tmp_path / "sites.json"
        reg.save(path)
        loaded = SiteRegistry.load(path)
        assert loaded.dedup_radius == reg.dedup_radius
        assert np.array_equal(loaded.positions(), reg.positions())
        assert [s.score for s in loaded.sites] == [s.score for s in reg.sites]
        # reloaded registry keeps answering queries identically
        q = (0.1, 0.2, 0.3)
        assert np.array_equal(loaded.nearest(q)[0].position,
                              reg.nearest(q)[0].position)


