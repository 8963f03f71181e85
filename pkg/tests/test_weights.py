import numpy as np
import pytest
import scipy.sparse as sp

from spatialkit.synthgen import adjacency_bruteforce, gen_lattice, knn_bruteforce
from spatialkit.weights import (
    WeightsMatrix,
    build_contiguity,
    build_gaussian,
    build_knn,
    row_standardize,
    spatial_lag,
)


@pytest.fixture(scope="module")
def lattice2():
    return gen_lattice(2, 2, 500.0)


class TestContiguity:
    def test_2x2_rook_two_neighbors(self, lattice2):
        w = build_contiguity(lattice2, "rook")
        assert list(w.degree()) == [2, 2, 2, 2]

    def test_2x2_queen_three_neighbors(self, lattice2):
        w = build_contiguity(lattice2, "queen")
        assert list(w.degree()) == [3, 3, 3, 3]

    @pytest.mark.parametrize("rule", ["rook", "queen"])
    def test_10x10_matches_geometric_oracle(self, lattice10, rule):
        w = build_contiguity(lattice10, rule)
        oracle = adjacency_bruteforce(lattice10, rule)
        for i in range(100):
            assert set(w.neighbors(i)) == oracle[i], f"unit {i} under {rule}"

    def test_10x10_rook_degree_census(self, lattice10):
        deg = build_contiguity(lattice10, "rook").degree()
        counts = {int(v): int((deg == v).sum()) for v in np.unique(deg)}
        assert counts == {2: 4, 3: 32, 4: 64}  # corners, edges, interior

    def test_symmetry(self, lattice10):
        for rule in ("rook", "queen"):
            m = build_contiguity(lattice10, rule).matrix
            assert (m != m.T).nnz == 0

    def test_unknown_rule(self, lattice2):
        with pytest.raises(ValueError):
            build_contiguity(lattice2, "bishop")


class TestGaussian:
    def test_kth_neighbor_weight(self, lattice10):
        w = build_gaussian(lattice10, k=4)
        # On the interior of a square lattice the 4 nearest are all at the
        # same distance, so every kept weight equals exp(-0.5).
        interior = 44  # r4c4
        row = w.matrix.getrow(interior)
        assert row.nnz == 4
        np.testing.assert_allclose(row.data, np.exp(-0.5), rtol=1e-12)

    def test_100_unit_lattice_k8_row_counts(self, lattice10):
        w = build_gaussian(lattice10, k=8)
        assert (np.diff(w.matrix.indptr) == 8).all()
        oracle = knn_bruteforce(lattice10.centroids, 8)
        mismatches = sum(set(w.neighbors(i)) != oracle[i] for i in range(100))
        # Ties at equal distance may legitimately differ; both sides break
        # ties by unit order, so there should be none.
        assert mismatches == 0

    def test_coincident_centroids_warn_full_weight(self, lattice2):
        md = lattice2
        dup = md.units[0]
        md2 = type(md)(units=[dup] + [type(dup)(unit_id="dup", geometry=dup.geometry, centroid_xy=dup.centroid_xy, centroid_lonlat=dup.centroid_lonlat)] + md.units[1:], mean_latitude=md.mean_latitude)
        with pytest.warns(UserWarning, match="duplicate centroids"):
            w = build_gaussian(md2, k=2)
        assert w.matrix[0, 1] == 1.0  # coincident neighbor gets full weight

    def test_bad_k(self, lattice2):
        with pytest.raises(ValueError):
            build_gaussian(lattice2, k=0)
        with pytest.raises(ValueError):
            build_gaussian(lattice2, k=4)


class TestKnnBinary:
    def test_binary_weights_and_counts(self, lattice10):
        w = build_knn(lattice10, k=6)
        assert w.kind == "knn-binary"
        assert (np.diff(w.matrix.indptr) == 6).all()
        assert set(w.matrix.data) == {1.0}
        oracle = knn_bruteforce(lattice10.centroids, 6)
        assert all(set(w.neighbors(i)) == oracle[i] for i in range(100))


class TestRowStandardize:
    def test_simple_row(self):
        mat = sp.csr_matrix(np.array([[0.0, 2.0, 2.0], [2.0, 0.0, 0.0], [2.0, 0.0, 0.0]]))
        w = WeightsMatrix(n=3, matrix=mat, kind="rook")
        std = row_standardize(w)
        np.testing.assert_allclose(std.matrix.toarray()[0], [0, 0.5, 0.5])

    def test_island_untouched_and_flagged(self):
        mat = sp.csr_matrix(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
        w = WeightsMatrix(n=3, matrix=mat, kind="rook", islands=frozenset({2}))
        std = row_standardize(w)
        assert std.islands == frozenset({2})
        assert std.matrix.getrow(2).nnz == 0

    def test_random_sparse_row_sums(self):
        rng = np.random.default_rng(3)
        dense = rng.random((30, 30)) * (rng.random((30, 30)) < 0.2)
        np.fill_diagonal(dense, 0.0)
        w = WeightsMatrix(n=30, matrix=sp.csr_matrix(dense), kind="rook")
        sums = np.asarray(row_standardize(w).matrix.sum(axis=1)).ravel()
        assert all(abs(s) < 1e-12 or abs(s - 1) < 1e-9 for s in sums)


class TestSpatialLag:
    def test_constant_vector_preserved(self, lattice10):
        w = row_standardize(build_contiguity(lattice10, "rook"))
        lag = spatial_lag(w, np.full(100, 3.25))
        np.testing.assert_allclose(lag, 3.25, rtol=1e-12)

    def test_two_neighbor_average(self):
        mat = sp.csr_matrix(np.array([[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
        w = WeightsMatrix(n=3, matrix=mat, kind="rook", row_standardized=True)
        assert spatial_lag(w, np.array([99.0, 0.0, 10.0]))[0] == 5.0

    def test_interior_lag_of_column_index(self, lattice10):
        w = row_standardize(build_contiguity(lattice10, "rook"))
        x = np.array([i % 10 for i in range(100)], dtype=float)  # column index
        lag = spatial_lag(w, x)
        interior = [i for i in range(100) if 0 < i // 10 < 9 and 0 < i % 10 < 9]
        np.testing.assert_allclose(lag[interior], x[interior], rtol=1e-12)

    def test_linearity(self, lattice10):
        w = row_standardize(build_gaussian(lattice10, 8))
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=100), rng.normal(size=100)
        a, b = 2.5, -1.25
        np.testing.assert_allclose(
            spatial_lag(w, a * x + b * y),
            a * spatial_lag(w, x) + b * spatial_lag(w, y),
            atol=1e-10,
        )

    def test_length_mismatch(self, lattice10):
        w = build_contiguity(lattice10, "rook")
        with pytest.raises(ValueError, match="length"):
            spatial_lag(w, np.ones(99))


class TestSerialization:
    def test_json_roundtrip(self, lattice10):
        w = row_standardize(build_gaussian(lattice10, 8))
        clone = WeightsMatrix.from_json(w.to_json())
        assert clone.n == w.n
        assert clone.kind == w.kind
        assert clone.row_standardized
        assert (clone.matrix != w.matrix).nnz == 0

    def test_eigen_capacity_refused(self):
        n = 5001
        w = WeightsMatrix(n=n, matrix=sp.identity(n, format="csr"), kind="rook")
        with pytest.raises(ValueError, match="refused"):
            w.eigenvalues()

    def test_subset_restandardizes(self, lattice10):
        w = row_standardize(build_contiguity(lattice10, "rook"))
        sub = w.subset(np.arange(0, 50))
        sums = np.asarray(sub.matrix.sum(axis=1)).ravel()
        nonzero = sums[sums > 0]
        np.testing.assert_allclose(nonzero, 1.0, atol=1e-9)
