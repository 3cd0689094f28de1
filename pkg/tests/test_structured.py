import numpy as np
import pytest
from numpy.testing import assert_allclose

from facecov.basis import BasisSpec, factorize_smoother
from facecov.errors import ContractError, InputError, SingularityError
from facecov.face import face_fit, pgcv, project_data
from facecov.structured import (StructuredDesign, build_pair_designs,
                                center_pair_blocks, face_fit_structured,
                                psd_factor)
from test_face import explicit_smoother


def positive_part(h):
    w, v = np.linalg.eigh(h)
    keep = w > 1e-12 * w.max()
    return (v[:, keep] * w[keep]) @ v[:, keep].T


def pair_sums(y, n_pairs):
    """Summation-form oracles for the two paired-design targets."""
    ya, yc = y[:, :n_pairs], y[:, n_pairs:]
    kx = np.zeros((y.shape[0], y.shape[0]))
    ku = np.zeros_like(kx)
    for i in range(n_pairs):
        kx += np.outer(ya[:, i], yc[:, i]) + np.outer(yc[:, i], ya[:, i])
        diff = ya[:, i] - yc[:, i]
        ku += np.outer(diff, diff)
    return kx / (2.0 * n_pairs), ku / (2.0 * n_pairs)


class TestStructuredDesign:
    def test_accepts_symmetric(self):
        d = StructuredDesign(h=np.eye(3), label="id")
        assert d.n == 3

    def test_rejects_non_square(self):
        with pytest.raises(InputError):
            StructuredDesign(h=np.zeros((2, 3)))

    def test_rejects_asymmetric(self):
        h = np.eye(3)
        h[0, 1] = 1e-6
        with pytest.raises(ContractError):
            StructuredDesign(h=h)


class TestPsdFactor:
    def test_identity_roundtrip(self):
        h1 = psd_factor(StructuredDesign(h=np.eye(4)))
        assert_allclose(h1 @ h1.T, np.eye(4), atol=1e-12)

    def test_pair_cross_design_spectrum(self):
        h_x, _ = build_pair_designs(2)
        w = np.sort(np.linalg.eigvalsh(h_x.h))
        assert_allclose(w, [-0.25, -0.25, 0.25, 0.25], atol=1e-14)
        h1 = psd_factor(h_x)
        assert h1.shape == (4, 2)
        assert_allclose(h1 @ h1.T, positive_part(h_x.h), atol=1e-10)

    def test_pair_difference_design_is_psd_rank_n(self):
        _, h_u = build_pair_designs(2)
        w = np.linalg.eigvalsh(h_u.h)
        assert w.min() > -1e-14
        assert int((w > 1e-12).sum()) == 2
        h1 = psd_factor(h_u)
        assert_allclose(h1 @ h1.T, h_u.h, atol=1e-10)

    def test_no_positive_eigenvalues_rejected(self):
        with pytest.raises(SingularityError):
            psd_factor(StructuredDesign(h=-np.eye(3), label="neg"))


class TestBuildPairDesigns:
    def test_single_pair_matrices(self):
        h_x, h_u = build_pair_designs(1)
        assert_allclose(h_x.h, [[0.0, 0.5], [0.5, 0.0]], atol=0)
        assert_allclose(h_u.h, [[0.5, -0.5], [-0.5, 0.5]], atol=0)
        assert h_x.label == "K_X" and h_u.label == "K_U"

    def test_matches_summation_definitions(self, rng):
        n_pairs = 4
        y = rng.standard_normal((20, 2 * n_pairs))
        h_x, h_u = build_pair_designs(n_pairs)
        kx_want, ku_want = pair_sums(y, n_pairs)
        assert np.abs(y @ h_x.h @ y.T - kx_want).max() < 1e-10
        assert np.abs(y @ h_u.h @ y.T - ku_want).max() < 1e-10

    def test_requires_positive_pair_count(self):
        with pytest.raises(InputError):
            build_pair_designs(0)


class TestCenterPairBlocks:
    def test_centers_each_block(self, rng):
        y = rng.standard_normal((30, 6)) + 5.0
        out = center_pair_blocks(y)
        assert_allclose(out[:, :3].mean(axis=1), np.zeros(30), atol=1e-12)
        assert_allclose(out[:, 3:].mean(axis=1), np.zeros(30), atol=1e-12)

    def test_rejects_odd_columns(self, rng):
        with pytest.raises(InputError):
            center_pair_blocks(rng.standard_normal((30, 5)))


class TestFaceFitStructured:
    def test_uniform_weights_reproduce_plain_fit(self, small_factor, rng):
        y = rng.standard_normal((60, 10))
        yc = y - y.mean(axis=1, keepdims=True)
        plain = face_fit(y, small_factor)
        design = StructuredDesign(h=np.eye(10) / 10.0, label="mean")
        structured = face_fit_structured(yc, design, small_factor)
        assert structured.lambda_ == plain.lambda_
        assert_allclose(structured.eigvals_matrix, plain.eigvals_matrix,
                        rtol=1e-10, atol=1e-12)
        assert_allclose(structured.sigma2, plain.sigma2, rtol=1e-9,
                        atol=1e-12)
        r = plain.numerical_rank()
        dots = np.abs(np.sum(structured.eigvecs[:, :r]
                             * plain.eigvecs[:, :r], axis=0))
        assert_allclose(dots, np.ones(r), atol=1e-8)

    def test_implied_covariance_is_sandwiched_positive_part(self, rng):
        spec = BasisSpec.regular(50, num_interior_knots=4)
        factor = factorize_smoother(spec)
        n_pairs = 3
        y = center_pair_blocks(rng.standard_normal((50, 2 * n_pairs)))
        h_x, _ = build_pair_designs(n_pairs)
        fit = face_fit_structured(y, h_x, factor)
        s_mat = explicit_smoother(spec, fit.lambda_)
        # the estimator replaces H (not the J×J product) by its positive part
        target = y @ positive_part(h_x.h) @ y.T
        want = s_mat @ target @ s_mat.T
        err = np.linalg.norm(fit.covariance_matrix() - want)
        assert err < 1e-8 * np.linalg.norm(target)

    def test_transformed_columns_carry_the_positive_part(self, rng):
        n_pairs = 5
        y = rng.standard_normal((25, 2 * n_pairs))
        h_x, h_u = build_pair_designs(n_pairs)
        for design in (h_x, h_u):
            z = y @ psd_factor(design)
            want = positive_part(design.h)
            err = np.linalg.norm(z @ z.T - y @ want @ y.T)
            assert err < 1e-8 * np.linalg.norm(y @ want @ y.T)

    def test_selection_criterion_is_plain_pgcv_on_transformed_data(self, rng):
        spec = BasisSpec.regular(60, num_interior_knots=8)
        factor = factorize_smoother(spec)
        n_pairs = 4
        y = center_pair_blocks(rng.standard_normal((60, 2 * n_pairs)))
        h_x, _ = build_pair_designs(n_pairs)
        z = y @ psd_factor(h_x)
        zt = project_data(z, factor)
        diag_c = np.einsum("ki,ki->k", zt, zt)
        for lam in (0.1, 10.0):
            s_mat = explicit_smoother(spec, lam)
            resid = z - s_mat @ z
            want = (resid * resid).sum() / (1.0 - np.trace(s_mat) / 60.0) ** 2
            got = pgcv(lam, diag_c, float((z * z).sum()), factor.s, 60)
            assert_allclose(got, want, rtol=1e-8)

    def test_dimension_mismatch_rejected(self, small_factor, rng):
        h_x, _ = build_pair_designs(3)
        with pytest.raises(InputError):
            face_fit_structured(rng.standard_normal((60, 4)), h_x,
                                small_factor)

    def test_zero_transformed_data_rejected(self, small_factor):
        h_x, _ = build_pair_designs(2)
        with pytest.raises(InputError):
            face_fit_structured(np.zeros((60, 4)), h_x, small_factor)

    @pytest.mark.slow
    def test_shared_process_eigenfunctions_recovered(self):
        # paired curves share a pair-level process whose top eigenfunctions
        # must be recovered by the cross-covariance design
        n_grid, n_pairs = 800, 100
        t = (np.arange(1, n_grid + 1)) / n_grid
        psi_x = np.stack([np.sqrt(2.0) * np.sin(2 * np.pi * t),
                          np.sqrt(2.0) * np.cos(4 * np.pi * t)], axis=1)
        psi_u = np.stack([np.sqrt(2.0) * np.cos(2 * np.pi * t),
                          np.sqrt(2.0) * np.sin(4 * np.pi * t)], axis=1)
        rng = np.random.default_rng(20260815)
        xs = psi_x @ (np.sqrt([1.0, 0.5])[:, None]
                      * rng.standard_normal((2, n_pairs)))
        ua = psi_u @ (np.sqrt([0.5, 0.25])[:, None]
                      * rng.standard_normal((2, n_pairs)))
        uc = psi_u @ (np.sqrt([0.5, 0.25])[:, None]
                      * rng.standard_normal((2, n_pairs)))
        noise = 0.5 * rng.standard_normal((n_grid, 2 * n_pairs))
        y = np.concatenate([xs + ua, xs + uc], axis=1) + noise

        spec = BasisSpec.regular(n_grid, num_interior_knots=35)
        factor = factorize_smoother(spec)
        h_x, _ = build_pair_designs(n_pairs)
        fit = face_fit_structured(center_pair_blocks(y), h_x, factor)
        for k in range(2):
            est = fit.eigvecs[:, k] * np.sqrt(n_grid)
            corr = abs(est @ psi_x[:, k]) / (np.linalg.norm(est)
                                             * np.linalg.norm(psi_x[:, k]))
            assert corr > 0.95
