import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnpfusion.errors import DimensionError, FormatError
from pnpfusion.fftops import (
    apply_blur,
    blur_rows,
    make_cyclic_blur,
    read_psf,
    solve_x_update_hs,
    solve_x_update_pair,
    write_psf,
)
from pnpfusion.patches import ImageGeometry


def dense_blur_matrix_oracle(psf, geometry):
    """Independent circulant construction by explicit index arithmetic.

    Column p holds the kernel centered at pixel p with periodic wrapping,
    matching the centered-delta convention.
    """
    h, w = geometry.height, geometry.width
    kh, kw = psf.shape
    ch, cw = kh // 2, kw // 2
    n = h * w
    b = np.zeros((n, n))
    for pc in range(w):
        for pr in range(h):
            p = pc * h + pr
            for a in range(kh):
                for bb in range(kw):
                    rq = (pr + a - ch) % h
                    cq = (pc + bb - cw) % w
                    b[cq * h + rq, p] += psf[a, bb]
    return b


def random_kernel(rng, kh, kw):
    k = rng.uniform(0.1, 1.0, size=(kh, kw))
    return k / k.sum()


class TestApplyBlur:
    def test_delta_kernel_is_identity(self):
        geom = ImageGeometry(5, 4)
        blur = make_cyclic_blur(np.ones((1, 1)), geom)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(geom.n)
        np.testing.assert_allclose(apply_blur(x, blur), x, atol=1e-12)

    def test_box_blur_of_delta_is_wrapped_box(self):
        geom = ImageGeometry(4, 4)
        kernel = np.full((3, 3), 1.0 / 9.0)
        blur = make_cyclic_blur(kernel, geom)
        delta = np.zeros(geom.n)
        delta[0] = 1.0  # pixel (0, 0)
        out = geom.to_grid(apply_blur(delta, blur))
        expected = np.zeros((4, 4))
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                expected[dr % 4, dc % 4] += 1.0 / 9.0
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_centered_delta_reproduces_centered_kernel(self):
        geom = ImageGeometry(7, 7)
        rng = np.random.default_rng(1)
        kernel = random_kernel(rng, 3, 3)
        blur = make_cyclic_blur(kernel, geom)
        delta = np.zeros(geom.n)
        delta[3 * 7 + 3] = 1.0  # center pixel (3, 3)
        out = geom.to_grid(apply_blur(delta, blur))
        np.testing.assert_allclose(out[2:5, 2:5], kernel, atol=1e-12)

    def test_adjoint_inner_product(self):
        geom = ImageGeometry(6, 5)
        rng = np.random.default_rng(2)
        blur = make_cyclic_blur(random_kernel(rng, 3, 4), geom)
        for _ in range(5):
            x = rng.standard_normal(geom.n)
            y = rng.standard_normal(geom.n)
            lhs = apply_blur(x, blur) @ y
            rhs = x @ apply_blur(y, blur, adjoint=True)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-10)

    def test_matches_dense_oracle(self):
        geom = ImageGeometry(5, 6)
        rng = np.random.default_rng(3)
        kernel = random_kernel(rng, 3, 3)
        blur = make_cyclic_blur(kernel, geom)
        b = dense_blur_matrix_oracle(kernel, geom)
        x = rng.standard_normal(geom.n)
        np.testing.assert_allclose(apply_blur(x, blur), b @ x, atol=1e-10)
        np.testing.assert_allclose(
            apply_blur(x, blur, adjoint=True), b.T @ x, atol=1e-10
        )

    def test_blur_rows_matches_per_row(self):
        geom = ImageGeometry(4, 5)
        rng = np.random.default_rng(4)
        blur = make_cyclic_blur(random_kernel(rng, 2, 3), geom)
        x = rng.standard_normal((3, geom.n))
        out = blur_rows(x, blur)
        for i in range(3):
            np.testing.assert_allclose(out[i], apply_blur(x[i], blur), atol=1e-12)

    def test_parseval_energy(self):
        geom = ImageGeometry(8, 8)
        rng = np.random.default_rng(5)
        blur = make_cyclic_blur(random_kernel(rng, 3, 3), geom)
        x = rng.standard_normal(geom.n)
        bx = apply_blur(x, blur)
        xhat = np.fft.fft2(geom.to_grid(x))
        energy = np.sum(np.abs(blur.transfer * xhat) ** 2) / geom.n
        np.testing.assert_allclose(np.sum(bx**2), energy, rtol=1e-10)

    def test_kernel_larger_than_image_raises(self):
        with pytest.raises(DimensionError):
            make_cyclic_blur(np.ones((3, 3)) / 9, ImageGeometry(2, 5))


GEOMETRIES = [(2, 2), (3, 3), (4, 4), (5, 7), (7, 5), (8, 8), (16, 16), (16, 9), (1, 8)]


class TestSpectralSolves:
    @pytest.mark.parametrize("shape", GEOMETRIES)
    def test_hs_solve_matches_dense(self, shape):
        geom = ImageGeometry(*shape)
        rng = np.random.default_rng(shape[0] * 100 + shape[1])
        kh = min(3, geom.height)
        kw = min(3, geom.width)
        kernel = random_kernel(rng, kh, kw)
        blur = make_cyclic_blur(kernel, geom)
        b = dense_blur_matrix_oracle(kernel, geom)
        rhs = rng.standard_normal((2, geom.n))
        out = solve_x_update_hs(rhs, blur)
        # rows transform with B, so right-multiplication uses B^T:
        # X (B B^T + 2I) = rhs with row convention -> dense (B B^T + 2I)^T acting
        # on row vectors; build it explicitly from the row-action matrices.
        b_row = b.T  # right-multiplying a row by "B" applies b to the row
        normal = b_row @ b_row.T + 2 * np.eye(geom.n)
        expected = np.linalg.solve(normal.T, rhs.T).T
        np.testing.assert_allclose(out, expected, rtol=1e-9, atol=1e-11)
        # residual check through the operator itself
        back = blur_rows(blur_rows(out, blur), blur, adjoint=True) + 2 * out
        np.testing.assert_allclose(back, rhs, rtol=1e-9, atol=1e-11)

    def test_hs_solve_delta_kernel(self):
        geom = ImageGeometry(4, 4)
        blur = make_cyclic_blur(np.ones((1, 1)), geom)
        rng = np.random.default_rng(6)
        rhs = rng.standard_normal((3, geom.n))
        np.testing.assert_allclose(solve_x_update_hs(rhs, blur), rhs / 3.0, atol=1e-12)

    @pytest.mark.parametrize("shape", GEOMETRIES)
    def test_pair_solve_matches_dense(self, shape):
        geom = ImageGeometry(*shape)
        rng = np.random.default_rng(shape[0] * 7 + shape[1])
        kernel = random_kernel(rng, min(3, geom.height), min(2, geom.width))
        blur = make_cyclic_blur(kernel, geom)
        b = dense_blur_matrix_oracle(kernel, geom)
        lam, rho = 0.4, 0.9
        rhs = rng.standard_normal(geom.n)
        out = solve_x_update_pair(rhs, blur, lam, rho)
        expected = np.linalg.solve(b.T @ b + (lam + rho) * np.eye(geom.n), rhs)
        np.testing.assert_allclose(out, expected, rtol=1e-9, atol=1e-11)
        residual = (
            apply_blur(apply_blur(out, blur), blur, adjoint=True)
            + (lam + rho) * out
        )
        np.testing.assert_allclose(residual, rhs, rtol=1e-9, atol=1e-11)

    def test_pair_solve_delta_lambda_zero(self):
        geom = ImageGeometry(3, 3)
        blur = make_cyclic_blur(np.ones((1, 1)), geom)
        rhs = np.arange(9.0)
        np.testing.assert_allclose(
            solve_x_update_pair(rhs, blur, 0.0, 0.5), rhs / 1.5, atol=1e-12
        )

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_btb_equals_bbt_spectrum(self, seed):
        # B^T B and B B^T share the power spectrum for cyclic B
        geom = ImageGeometry(4, 4)
        rng = np.random.default_rng(seed)
        blur = make_cyclic_blur(random_kernel(rng, 3, 3), geom)
        x = rng.standard_normal(geom.n)
        ab = apply_blur(apply_blur(x, blur), blur, adjoint=True)
        ba = apply_blur(apply_blur(x, blur, adjoint=True), blur)
        np.testing.assert_allclose(ab, ba, atol=1e-10)


class TestPsfIo:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        psf = rng.uniform(size=(3, 5))
        path = tmp_path / "k.psf"
        write_psf(path, psf)
        np.testing.assert_array_equal(read_psf(path), psf)

    def test_bad_header_raises(self, tmp_path):
        path = tmp_path / "bad.psf"
        path.write_text("NOPE 2 2\n1 2 3 4\n")
        with pytest.raises(FormatError):
            read_psf(path)

    def test_truncated_raises(self, tmp_path):
        path = tmp_path / "short.psf"
        path.write_text("PSF 2 2\n1 2 3\n")
        with pytest.raises(FormatError):
            read_psf(path)
