import numpy as np
import pytest

from gjbd.matkernels import (
    DegenerateBlockBasisError,
    InseparableClustersError,
    block_diagonalize_similarity,
    economic_qr,
    largest_principal_angle,
    perfect_shuffle,
    real_schur_ordered,
    sep_lower,
    symmetric_orthogonalize,
)


def vec(z):
    return z.flatten(order="F")


class TestPerfectShuffle:
    def test_order_one_is_identity(self):
        assert perfect_shuffle(1).tolist() == [0]

    def test_order_two_maps_positions(self):
        # 1-based positions (1,2,3,4) -> (1,3,2,4)
        assert perfect_shuffle(2).tolist() == [0, 2, 1, 3]

    @pytest.mark.parametrize("n", range(2, 9))
    def test_transposes_vec(self, n):
        rng = np.random.default_rng(n)
        perm = perfect_shuffle(n)
        for _ in range(100):
            z = rng.standard_normal((n, n))
            assert np.array_equal(vec(z)[perm], vec(z.T))

    @pytest.mark.parametrize("n", range(1, 9))
    def test_involution(self, n):
        rng = np.random.default_rng(10 + n)
        perm = perfect_shuffle(n)
        x = rng.standard_normal(n * n)
        assert np.array_equal(x[perm][perm], x)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            perfect_shuffle(0)


class TestRealSchurOrdered:
    def test_diagonal_input_sorted(self):
        sf = real_schur_ordered(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(sf.eig_real_parts, [1.0, 2.0, 3.0])
        # q must be a signed permutation matrix
        assert np.allclose(np.abs(sf.q) @ np.abs(sf.q).T, np.eye(3), atol=1e-12)
        assert np.allclose(np.sort(np.abs(sf.q).max(axis=0)), [1, 1, 1])

    def test_symmetric_two_by_two(self):
        sf = real_schur_ordered(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(sf.eig_real_parts, [-1.0, 1.0])
        assert not sf.pair_flags.any()

    def test_rotation_keeps_pair(self):
        sf = real_schur_ordered(np.array([[0.0, -1.0], [1.0, 0.0]]))
        assert sf.pair_flags.all()
        assert np.allclose(sf.eig_real_parts, [0.0, 0.0])
        assert abs(sf.t[1, 0]) > 0.5  # one genuine 2x2 block

    @pytest.mark.parametrize("n", [2, 5, 9, 14, 20])
    def test_random_reconstruction_and_order(self, n):
        rng = np.random.default_rng(n)
        for rep in range(10):
            z = rng.standard_normal((n, n))
            sf = real_schur_ordered(z)
            znorm = np.linalg.norm(z)
            assert np.linalg.norm(sf.q @ sf.t @ sf.q.T - z) <= 1e-10 * znorm
            assert np.linalg.norm(sf.q.T @ sf.q - np.eye(n)) <= 1e-12 * n
            assert np.all(np.diff(sf.eig_real_parts) >= -1e-12 * znorm)
            got = np.sort_complex(np.linalg.eigvals(sf.t))
            want = np.sort_complex(np.linalg.eigvals(z))
            assert np.allclose(got, want, atol=1e-8 * max(1.0, znorm))

    def test_pair_positions_share_real_part(self):
        rng = np.random.default_rng(77)
        found = 0
        for rep in range(20):
            z = rng.standard_normal((8, 8))
            sf = real_schur_ordered(z)
            scale = np.linalg.norm(sf.t)
            for start in sf.pair_starts():
                found += 1
                assert sf.pair_flags[start] and sf.pair_flags[start + 1]
                assert sf.eig_real_parts[start] == sf.eig_real_parts[start + 1]
                block = sf.t[start:start + 2, start:start + 2]
                # standardized: equal diagonal, genuinely complex pair
                assert abs(block[0, 0] - block[1, 1]) <= 1e-10 * scale
                assert np.linalg.eigvals(block).imag.any()
        assert found > 0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            real_schur_ordered(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestBlockDiagonalizeSimilarity:
    def test_hand_sylvester_example(self):
        sf = real_schur_ordered(np.array([[1.0, 5.0], [0.0, 2.0]]))
        w, blocks = block_diagonalize_similarity(sf, [1])
        assert np.allclose(w, [[1.0, 5.0], [0.0, 1.0]])
        assert np.allclose(blocks[0], [[1.0]])
        assert np.allclose(blocks[1], [[2.0]])
        assert np.allclose(np.linalg.solve(w, sf.t @ w), np.diag([1.0, 2.0]))

    def test_already_block_diagonal_gives_identity(self):
        z = np.diag([1.0, 2.0, 4.0])
        sf = real_schur_ordered(z)
        w, blocks = block_diagonalize_similarity(sf, [1, 2])
        assert np.allclose(w, np.eye(3))
        assert len(blocks) == 3

    def test_inseparable_clusters(self):
        sf = real_schur_ordered(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(InseparableClustersError) as err:
            block_diagonalize_similarity(sf, [1])
        assert err.value.clusters == (0, 1)

    def test_rejects_pair_splitting_boundary(self):
        sf = real_schur_ordered(np.array([[0.0, -1.0], [1.0, 0.0]]))
        with pytest.raises(ValueError):
            block_diagonalize_similarity(sf, [1])

    @pytest.mark.parametrize("seed", range(8))
    def test_random_residual_and_spectra(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 13))
        z = rng.standard_normal((n, n))
        sf = real_schur_ordered(z)
        forbidden = {s + 1 for s in sf.pair_starts()}
        allowed = [i for i in range(1, n) if i not in forbidden]
        if not allowed:
            return
        k = int(rng.integers(1, min(3, len(allowed)) + 1))
        boundaries = sorted(rng.choice(allowed, size=k, replace=False).tolist())
        try:
            w, blocks = block_diagonalize_similarity(sf, boundaries)
        except InseparableClustersError:
            return
        recon = np.linalg.solve(w, sf.t @ w)
        target = np.zeros((n, n))
        edges = [0] + boundaries + [n]
        for j, blk in enumerate(blocks):
            target[edges[j]:edges[j + 1], edges[j]:edges[j + 1]] = blk
            # the block carries exactly the eigenvalues of its cluster
            got = np.sort_complex(np.linalg.eigvals(blk))
            want = np.sort_complex(
                np.linalg.eigvals(sf.t[edges[j]:edges[j + 1], edges[j]:edges[j + 1]])
            )
            assert np.allclose(got, want)
        kappa = np.linalg.cond(w)
        tol = 1e3 * np.finfo(float).eps * kappa * np.linalg.norm(sf.t)
        assert np.linalg.norm(recon - target) <= tol


class TestEconomicQR:
    def test_orthonormal_input(self):
        rng = np.random.default_rng(0)
        q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        u, r = economic_qr(q)
        assert np.allclose(np.abs(r), np.eye(3), atol=1e-12)
        assert np.allclose(u * np.sign(np.diag(r)), q)

    def test_column_scaling(self):
        u, r = economic_qr(np.array([[2.0], [0.0]]))
        assert np.allclose(np.abs(u), [[1.0], [0.0]])
        assert np.allclose(np.abs(r), [[2.0]])

    def test_random_property(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((5, 2))
        u, r = economic_qr(a)
        assert np.linalg.norm(u.T @ u - np.eye(2)) <= 1e-12
        assert np.linalg.norm(u @ r - a) <= 1e-12 * np.linalg.norm(a)

    def test_rank_deficiency_detected(self):
        a = np.ones((4, 2))
        with pytest.raises(DegenerateBlockBasisError):
            economic_qr(a)


class TestLargestPrincipalAngle:
    def test_identical_subspaces(self):
        rng = np.random.default_rng(1)
        e = rng.standard_normal((7, 3))
        assert largest_principal_angle(e, e) <= 1e-10

    def test_orthogonal_lines(self):
        e = np.array([[1.0], [0.0]])
        f = np.array([[0.0], [1.0]])
        assert abs(largest_principal_angle(e, f) - np.pi / 2) <= 1e-12

    def test_quarter_angle(self):
        e = np.array([[1.0], [0.0]])
        f = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
        assert abs(largest_principal_angle(e, f) - np.pi / 4) <= 1e-12

    def test_column_operation_invariance(self):
        rng = np.random.default_rng(2)
        e = rng.standard_normal((8, 3))
        f = rng.standard_normal((8, 2))
        base = largest_principal_angle(e, f)
        mixed = largest_principal_angle(e @ rng.standard_normal((3, 3)), f * 3.0)
        # generic mixing keeps the span almost surely
        assert abs(base - mixed) <= 1e-8

    def test_rejects_rank_deficient(self):
        with pytest.raises(ValueError):
            largest_principal_angle(np.zeros((4, 2)), np.eye(4)[:, :1])


class TestSepLower:
    def test_scalar_gap(self):
        assert abs(sep_lower(np.array([[1.0]]), np.array([[3.0]])) - 2.0) <= 1e-12

    def test_equal_blocks_are_inseparable(self):
        rng = np.random.default_rng(3)
        g = rng.standard_normal((3, 3))
        assert sep_lower(g, g) <= 1e-12 * np.linalg.norm(g)

    def test_rotation_example(self):
        g_j = np.array([[0.0]])
        g_k = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert abs(sep_lower(g_j, g_k) - 1.0) <= 1e-12

    def test_zero_iff_spectra_intersect(self):
        shared = sep_lower(np.diag([1.0, 2.0]), np.diag([2.0, 5.0]))
        assert shared <= 1e-12
        disjoint = sep_lower(np.diag([1.0, 2.0]), np.diag([4.0, 5.0]))
        assert disjoint > 0.5


class TestSymmetricOrthogonalize:
    def test_matches_inverse_sqrt_form(self):
        rng = np.random.default_rng(4)
        w = rng.standard_normal((5, 5))
        got = symmetric_orthogonalize(w)
        evals, evecs = np.linalg.eigh(w.T @ w)
        want = w @ evecs @ np.diag(evals ** -0.5) @ evecs.T
        assert np.allclose(got, want)
        assert np.linalg.norm(got.T @ got - np.eye(5)) <= 1e-12
