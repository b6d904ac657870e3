"""Finite-N spin-projection tests against the dense-rotation oracle."""

import numpy as np
import pytest
from scipy.integrate import quad

from spintomo import kernels
from spintomo.spinproj import (folded_compare, gaussian_limit, pz_distribution,
                               wigner_d_column, wigner_d_matrix_bruteforce)


class TestWignerColumn:
    def test_two_atom_css(self):
        # brute-force 3x3 rotation oracle for N=2, M=0
        probs = wigner_d_column(2, 0) ** 2
        assert np.allclose(probs, [0.25, 0.5, 0.25], atol=1e-14)
        brute = wigner_d_matrix_bruteforce(2)
        assert np.allclose(wigner_d_column(2, 0), brute[:, 0], atol=1e-14)

    def test_lowest_weight_norm_exact(self):
        # binomial theorem: the M=0 column is exactly unit norm
        for N in (3, 17, 64, 401):
            v = wigner_d_column(N, 0)
            assert abs(v @ v - 1.0) < 1e-13

    def test_n4_m1_against_bruteforce(self):
        brute = wigner_d_matrix_bruteforce(4)
        assert np.abs(wigner_d_column(4, 1) - brute[:, 1]).max() < 1e-12

    def test_all_columns_small_n(self):
        for N in range(1, 13):
            brute = wigner_d_matrix_bruteforce(N)
            for M in range(N + 1):
                gap = np.abs(wigner_d_column(N, M) - brute[:, M]).max()
                assert gap < 1e-10, (N, M)

    @pytest.mark.parametrize("N", [64, 256, 1024])
    def test_unitarity_and_orthogonality(self, N):
        cols = [wigner_d_column(N, M) for M in range(5)]
        for c in cols:
            assert abs(c @ c - 1.0) < 1e-10
        for i in range(5):
            for j in range(i):
                assert abs(cols[i] @ cols[j]) < 1e-10

    def test_argument_guards(self):
        with pytest.raises(ValueError):
            wigner_d_column(4, 5)
        with pytest.raises(ValueError):
            wigner_d_column(0, 0)
        with pytest.raises(ValueError):
            wigner_d_column(8192, 0)


class TestPzDistribution:
    def test_two_atom_values(self):
        proj = pz_distribution(2, 0)
        assert proj.as_dict() == pytest.approx({-1.0: 0.25, 0.0: 0.5, 1.0: 0.25})

    @pytest.mark.parametrize("N,M", [(10, 0), (11, 2), (40, 3)])
    def test_symmetric_in_m(self, N, M):
        proj = pz_distribution(N, M)
        assert np.allclose(proj.probs, proj.probs[::-1], atol=1e-12)

    def test_normalization(self):
        for N, M in ((50, 0), (100, 2), (1024, 4)):
            proj = pz_distribution(N, M)
            assert abs(proj.probs.sum() - 1.0) < 1e-10

    def test_css_projection_variance(self):
        # direct moment-sum oracle: Var(m) = N/4 for the CSS
        proj = pz_distribution(100, 0)
        variance = proj.probs @ proj.m_values ** 2
        assert abs(variance - 25.0) < 1e-8


class TestGaussianLimit:
    def test_vacuum_peak(self):
        for N in (10, 500):
            assert gaussian_limit(N, 0, 0.0) == pytest.approx(1.0 / np.sqrt(np.pi * N / 2))

    def test_single_excitation_node(self):
        assert gaussian_limit(300, 1, 0.0) == 0.0

    @pytest.mark.parametrize("M", [0, 1])
    def test_quadrature_normalization(self, M):
        total = quad(lambda m: gaussian_limit(200, M, m), -np.inf, np.inf)[0]
        assert abs(total - 1.0) < 1e-10

    def test_matches_exact_pz_at_large_n(self):
        N = 400
        proj = pz_distribution(N, 1)
        approx = gaussian_limit(N, 1, proj.m_values)
        assert np.abs(proj.probs - approx).max() < 5e-4

    def test_unsupported_m(self):
        with pytest.raises(ValueError):
            gaussian_limit(100, 2, 0.0)


class TestFoldedCompare:
    def test_strict_decrease(self):
        for M in (0, 1, 2):
            discrepancies = [folded_compare(N, M) for N in (50, 100, 200, 400)]
            assert all(b < a for a, b in zip(discrepancies, discrepancies[1:])), M

    def test_frozen_regression_bound(self):
        # oracle-computed value 3.53e-4; acceptance bound is 0.02
        value = folded_compare(400, 0)
        assert value <= 0.02
        assert value <= 4e-4

    def test_small_n_is_worse(self):
        assert folded_compare(10, 0) > folded_compare(400, 0)
        assert np.isfinite(folded_compare(10, 0))

    def test_folds_onto_fock_density(self):
        N, M = 200, 2
        proj = pz_distribution(N, M)
        scale = np.sqrt(N / 2.0)
        target = kernels.fock_quad_density(M, proj.m_values / scale)
        assert np.abs(scale * proj.probs - target).max() == pytest.approx(
            folded_compare(N, M), rel=1e-12)

    def test_argument_guards(self):
        with pytest.raises(ValueError):
            folded_compare(101, 0)
        with pytest.raises(ValueError):
            folded_compare(400, 5)
