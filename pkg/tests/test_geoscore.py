import numpy as np
import pytest

from ccgan import rng as rng_mod
from ccgan.geoscore import GsConfig, geometry_score, mrlt, rlt
from ccgan.persistence import PersistenceSet, persistence_h1
from ccgan.witness import Simplex, SimplexStream, witness_filtration


def gf2_rank(rows):
    """Rank of a GF(2) matrix given as bitmask rows (oracle)."""
    rank = 0
    rows = [r for r in rows if r]
    while rows:
        pivot = max(rows, key=lambda r: r.bit_length())
        if pivot == 0:
            break
        rank += 1
        top = pivot.bit_length() - 1
        rows = [
            (r ^ pivot) if (r >> top) & 1 else r
            for r in rows
            if r != pivot
        ]
        rows = [r for r in rows if r]
    return rank


def betti1_at(stream, alpha):
    """beta_1 via boundary-operator ranks at filtration value alpha (oracle).

    beta_1 = dim ker d1 - rank d2 = (#edges - rank d1) - rank d2."""
    verts = [s for s in stream if s.dim == 0 and s.birth <= alpha]
    edges = [s for s in stream if s.dim == 1 and s.birth <= alpha]
    tris = [s for s in stream if s.dim == 2 and s.birth <= alpha]
    vid = {s.verts[0]: i for i, s in enumerate(verts)}
    eid = {s.verts: i for i, s in enumerate(edges)}
    d1 = [(1 << vid[a]) | (1 << vid[b]) for a, b in (s.verts for s in edges)]
    d2 = []
    for a, b, c in (s.verts for s in tris):
        d2.append((1 << eid[(a, b)]) | (1 << eid[(a, c)]) | (1 << eid[(b, c)]))
    return len(edges) - gf2_rank(d1) - gf2_rank(d2)


def circle_cloud(n, seed, noise=0.0):
    gen = rng_mod.stream(seed, "circle")
    theta = gen.uniform(0, 2 * np.pi, size=n)
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if noise:
        pts += gen.normal(0, noise, size=pts.shape)
    return pts


class TestWitnessFiltration:
    def test_equilateral_triangle_edges_born_at_side(self):
        # three points, all landmarks: m(w) = 0, every edge born at the
        # max distance from its best witness = the side length
        x = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
        stream = witness_filtration(x, [0, 1, 2], alpha_max=2.0)
        edges = [s for s in stream if s.dim == 1]
        assert len(edges) == 3
        for e in edges:
            assert e.birth == pytest.approx(1.0)
        tri = [s for s in stream if s.dim == 2]
        assert len(tri) == 1 and tri[0].birth == pytest.approx(1.0)

    def test_alpha_zero_keeps_vertices_only(self, rng):
        x = rng.normal(size=(30, 3))
        stream = witness_filtration(x, np.arange(5), alpha_max=0.0)
        assert all(s.dim == 0 for s in stream)
        assert len(stream) == 5

    def test_monotone_nesting(self, rng):
        x = rng.normal(size=(40, 2))
        small = witness_filtration(x, np.arange(8), 0.1)
        large = witness_filtration(x, np.arange(8), 0.4)
        small_set = {s.verts for s in small}
        large_set = {s.verts for s in large}
        assert small_set <= large_set

    def test_duplicate_landmarks_rejected(self, rng):
        x = rng.normal(size=(10, 2))
        with pytest.raises(ValueError):
            witness_filtration(x, [0, 1, 1], 1.0)

    def test_faces_precede_cofaces(self, rng):
        x = rng.normal(size=(25, 2))
        stream = witness_filtration(x, np.arange(7), 0.5)
        seen = set()
        for s in stream:
            if s.dim:
                for drop in range(len(s.verts)):
                    face = s.verts[:drop] + s.verts[drop + 1 :]
                    assert face in seen
            seen.add(s.verts)


class TestPersistenceH1:
    def _four_cycle(self):
        simplices = [Simplex(0.0, (i,)) for i in range(4)]
        simplices += [
            Simplex(1.0, (0, 1)),
            Simplex(1.0, (1, 2)),
            Simplex(1.0, (2, 3)),
            Simplex(2.0, (0, 3)),
        ]
        return SimplexStream(sorted(simplices, key=lambda s: (s.birth, s.dim)),
                             alpha_max=5.0, n_landmarks=4)

    def test_four_cycle_single_interval(self):
        ps = persistence_h1(self._four_cycle())
        assert ps.intervals == [(2.0, 5.0)]

    def test_cycle_filled_by_triangles(self):
        simplices = list(self._four_cycle())
        simplices.append(Simplex(3.0, (0, 1, 3)))
        simplices.append(Simplex(3.0, (1, 2, 3)))
        simplices.append(Simplex(3.0, (1, 3)))
        stream = SimplexStream(
            sorted(simplices, key=lambda s: (s.birth, s.dim)), 5.0, 4
        )
        ps = persistence_h1(stream)
        # the chord (1,3) at alpha=3 creates a second cycle; both die when
        # the two triangles fill at the same alpha, leaving the original
        # square's cycle from alpha=2 to 3
        long = [iv for iv in ps.intervals if iv[1] > iv[0]]
        assert long == [(2.0, 3.0)]

    def test_face_order_violation_detected(self):
        stream = SimplexStream(
            [Simplex(0.0, (0,)), Simplex(0.5, (0, 1)), Simplex(0.6, (1,))],
            1.0, 2,
        )
        with pytest.raises(ValueError):
            persistence_h1(stream)

    def test_matches_rank_oracle_on_random_clouds(self):
        for s in range(40):
            gen = rng_mod.stream(s, "ph-oracle")
            n_l = int(gen.integers(4, 13))
            x = gen.normal(size=(int(gen.integers(n_l, 40)), 2))
            alpha_max = float(gen.uniform(0.2, 1.5))
            stream = witness_filtration(x, np.arange(n_l), alpha_max)
            ps = persistence_h1(stream)
            probes = np.unique(
                np.concatenate([
                    [0.0, alpha_max * 0.999],
                    gen.uniform(0, alpha_max, size=6),
                    [s.birth * 1.0000001 for s in stream if s.dim == 1][:8],
                ])
            )
            expect = np.array([betti1_at(stream, a) for a in probes])
            got = ps.betti_curve(np.minimum(probes, alpha_max * (1 - 1e-12)))
            assert np.array_equal(got, expect), f"seed {s}: {got} vs {expect}"


class TestRlt:
    def test_no_cycles_all_mass_at_zero(self, rng):
        x = rng.normal(size=(30, 2)) * 5
        cfg = GsConfig(n_landmarks=5, gamma=0.001, i_max=10, n_repeats=1)
        out = rlt(x, np.arange(5), cfg)
        assert out[0] == pytest.approx(1.0)
        assert np.all(out[1:] == 0.0)

    def test_sums_to_one(self, rng):
        x = rng.normal(size=(60, 2))
        cfg = GsConfig(n_landmarks=12, gamma=0.3, i_max=30, n_repeats=1)
        out = rlt(x, np.arange(12), cfg)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert (out >= 0).all()

    def test_circle_argmax_is_one_hole(self):
        hits = 0
        for s in range(30):
            x = circle_cloud(600, s)
            gen = rng_mod.stream(s, "draw")
            landmarks = gen.choice(600, size=24, replace=False)
            cfg = GsConfig(n_landmarks=24, gamma=0.5, i_max=20, n_repeats=1)
            out = rlt(x, landmarks, cfg)
            hits += int(np.argmax(out)) == 1
        assert hits >= 27

    def test_coincident_landmarks_rejected(self):
        x = np.zeros((10, 2))
        cfg = GsConfig(n_landmarks=3, gamma=0.1, i_max=5, n_repeats=1)
        with pytest.raises(ValueError, match="degenerate|coincident"):
            rlt(x, [0, 1, 2], cfg)


class TestMrlt:
    def test_single_repeat_equals_rlt(self, rng):
        x = np.asarray(rng.normal(size=(50, 2)))
        cfg = GsConfig(n_landmarks=10, gamma=0.4, i_max=15, n_repeats=1, seed=3)
        m = mrlt(x, cfg)
        gen = rng_mod.stream(3, "mrlt", 0)
        landmarks = gen.choice(50, size=10, replace=False)
        assert np.array_equal(m, rlt(x, landmarks, cfg))

    def test_deterministic(self, rng):
        x = np.asarray(rng.normal(size=(80, 3)))
        cfg = GsConfig(n_landmarks=12, gamma=0.3, i_max=20, n_repeats=5, seed=9)
        assert np.array_equal(mrlt(x, cfg), mrlt(x, cfg))

    def test_too_few_points_rejected(self, rng):
        cfg = GsConfig(n_landmarks=30, n_repeats=1)
        with pytest.raises(ValueError):
            mrlt(rng.normal(size=(10, 2)), cfg)

    def test_circle_beats_blob_on_hole_mass(self):
        cfg = GsConfig(n_landmarks=24, gamma=0.5, i_max=20, n_repeats=8, seed=5)
        circle = circle_cloud(500, 1)
        blob = rng_mod.stream(2, "blob").normal(size=(500, 2))
        m_circle = mrlt(circle, cfg)
        m_blob = mrlt(blob, cfg)
        assert m_circle[1] > m_blob[1]


class TestGeometryScore:
    def test_identical_is_zero(self):
        a = np.array([0.5, 0.5, 0.0])
        assert geometry_score(a, a) == 0.0

    def test_disjoint_mass_is_two(self):
        a = np.zeros(10); a[0] = 1.0
        b = np.zeros(10); b[1] = 1.0
        assert geometry_score(a, b) == pytest.approx(2.0)

    def test_symmetric_and_bounded(self, rng):
        for _ in range(20):
            a = rng.dirichlet(np.ones(15))
            b = rng.dirichlet(np.ones(15))
            assert geometry_score(a, b) == geometry_score(b, a)
            assert 0.0 <= geometry_score(a, b) <= 2.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            geometry_score(np.zeros(5), np.zeros(6))
