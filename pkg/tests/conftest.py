import numpy as np
import pytest

from pnpfusion.denoiser import LinearDenoiser
from pnpfusion.gmm import EmConfig, train_em
from pnpfusion.patches import ImageGeometry, extract_patches, remove_means
from pnpfusion.scenes import smooth_field


def train_random_denoiser(
    geometry: ImageGeometry,
    patch_side: int,
    n_components: int,
    seed: int,
    noise_variance: float = 0.05,
    pure_linear: bool = True,
    em_iters: int = 8,
) -> LinearDenoiser:
    """A denoiser trained on a random smooth-plus-noise image (shared helper)."""
    rng = np.random.default_rng(seed)
    img = smooth_field(geometry, rng) + 0.3 * rng.standard_normal(geometry.n)
    patches = remove_means(extract_patches(img, geometry, patch_side))
    model, beta, _ = train_em(
        patches,
        EmConfig(
            n_components=n_components,
            noise_variance=0.09,
            max_iters=em_iters,
            seed=seed,
        ),
    )
    return LinearDenoiser(
        model=model,
        weights=beta,
        noise_variance=noise_variance,
        geometry=geometry,
        pure_linear=pure_linear,
    )


@pytest.fixture(scope="session")
def small_denoiser():
    """One 12x12 trained denoiser reused by read-only tests."""
    return train_random_denoiser(ImageGeometry(12, 12), 3, 3, seed=7)
