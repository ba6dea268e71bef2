"""Scene-adapted GMM patch denoiser and its proximity-operator structure.

The fixed-weight denoiser applies, to each patch, the convex combination of
per-component Wiener filters ``F_i = sum_j beta_ji C_j (C_j + s2 I)^-1`` with
weights frozen from training, then recombines patches by straight averaging.
In pure-linear mode (no per-patch mean handling) the whole map is the single
symmetric PSD matrix ``W = (1/n_p) sum_i P_i^T F_i P_i`` with spectrum in
``[0, 1)``; W equals the proximity operator of

    phi(x) = indicator(x in span(W)) + 0.5 x^T Qbar (Lbar^-1 - I) Qbar^T x

which this module can evaluate and prox directly from the eigendecomposition
of an explicitly materialized W (test scale only).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, SizeError
from .gmm import GmmModel, PatchWeights, e_step
from .patches import (
    ImageGeometry,
    PatchSet,
    assemble_patches,
    extract_patches,
    patch_index_map,
    remove_means,
    restore_means,
)

# Eigenvalues of W below this fraction of the largest are treated as zero
# when identifying span(W).
RANK_RTOL = 1e-10

# Relative distance from span(W) beyond which the indicator term fires.
SUBSPACE_RTOL = 1e-8

EXPLICIT_W_CAP = 4096


@dataclass(frozen=True)
class LinearDenoiser:
    """GMM + frozen per-patch weights + noise variance, over a fixed grid.

    ``pure_linear`` disables per-patch mean removal/restoration; that variant
    is the exact linear operator analyzed by the proximity-operator theory.
    The practical default handles means the way the patch pipelines do.
    """

    model: GmmModel
    weights: PatchWeights
    noise_variance: float
    geometry: ImageGeometry
    pure_linear: bool = False

    def __post_init__(self):
        if self.noise_variance <= 0:
            raise ConfigError("denoiser noise variance must be positive")
        if self.weights.n_components != self.model.n_components:
            raise DimensionError("weights/model component counts differ")
        if self.weights.count != self.geometry.n:
            raise DimensionError(
                f"weights cover {self.weights.count} patches, geometry has "
                f"{self.geometry.n} pixels"
            )


@dataclass(frozen=True)
class ExplicitW:
    """Densely materialized denoiser matrix with its eigendecomposition.

    ``eigenvalues`` are sorted descending; ``basis`` holds the eigenvectors of
    the nonzero eigenvalues (an orthonormal basis of span(W)).
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def nonzero_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[: self.rank]


def wiener_filter(covariance: np.ndarray, noise_variance: float) -> np.ndarray:
    """Per-component linear MMSE shrinkage ``C (C + s2 I)^-1``.

    Built from the eigendecomposition so the result is exactly symmetric with
    eigenvalues ``v/(v + s2) in [0, 1)``.
    """
    if noise_variance <= 0:
        raise ConfigError("wiener filter requires positive noise variance")
    vals, vecs = np.linalg.eigh(covariance)
    vals = np.maximum(vals, 0.0)
    shrink = vals / (vals + noise_variance)
    return (vecs * shrink) @ vecs.T


def component_filters(model: GmmModel, noise_variance: float) -> np.ndarray:
    """Stack of the K per-component Wiener filters, shape (K, n_p, n_p)."""
    return np.stack(
        [wiener_filter(c, noise_variance) for c in model.covariances]
    )


def denoise_patch_fixed(
    patch: np.ndarray,
    model: GmmModel,
    beta_column: np.ndarray,
    noise_variance: float,
) -> np.ndarray:
    """Apply the beta-weighted combination of Wiener filters to one patch."""
    if patch.shape != (model.patch_dim,):
        raise DimensionError(
            f"patch has shape {patch.shape}, model expects ({model.patch_dim},)"
        )
    if beta_column.shape != (model.n_components,):
        raise DimensionError("beta column length does not match component count")
    filters = component_filters(model, noise_variance)
    combined = np.tensordot(beta_column, filters, axes=1)
    return combined @ patch


def _filter_patches(
    patches: np.ndarray, filters: np.ndarray, beta: np.ndarray
) -> np.ndarray:
    """Row-wise ``F_i y_i`` for all patches at once (filters are symmetric)."""
    out = np.zeros_like(patches)
    for j in range(filters.shape[0]):
        out += beta[j][:, None] * (patches @ filters[j])
    return out


def denoise_image_fixed(
    image_band: np.ndarray, denoiser: LinearDenoiser
) -> np.ndarray:
    """Denoise one band with the frozen training weights.

    Practical mode removes each patch's mean before filtering and restores it
    afterwards; pure-linear mode is exactly ``W @ image_band``.
    """
    geometry = denoiser.geometry
    patch_set = extract_patches(image_band, geometry, denoiser.model.patch_side)
    if not denoiser.pure_linear:
        patch_set = remove_means(patch_set)
    filters = component_filters(denoiser.model, denoiser.noise_variance)
    filtered = PatchSet(
        patches=_filter_patches(patch_set.patches, filters, denoiser.weights.beta),
        patch_side=patch_set.patch_side,
        source_geometry=geometry,
        means=patch_set.means,
    )
    if not denoiser.pure_linear:
        filtered = restore_means(filtered)
    return assemble_patches(filtered)


def denoise_image_mmse(
    image_band: np.ndarray,
    model: GmmModel,
    noise_variance: float,
    geometry: ImageGeometry,
) -> np.ndarray:
    """Exact-MMSE variant: posterior weights recomputed from the noisy input.

    Mean handling is always on; this is the nonlinear denoiser the fixed-
    weight one linearizes.
    """
    patch_set = remove_means(extract_patches(image_band, geometry, model.patch_side))
    beta = e_step(patch_set, model, noise_variance)
    filters = component_filters(model, noise_variance)
    filtered = PatchSet(
        patches=_filter_patches(patch_set.patches, filters, beta.beta),
        patch_side=patch_set.patch_side,
        source_geometry=geometry,
        means=patch_set.means,
    )
    return assemble_patches(restore_means(filtered))


def build_explicit_w(
    denoiser: LinearDenoiser, cap: int = EXPLICIT_W_CAP
) -> ExplicitW:
    """Materialize the pure-linear operator ``(1/n_p) sum_i P_i^T F_i P_i``.

    Dense assembly plus a full eigendecomposition; refuses images above the
    test-scale cap. Mean handling is never part of the materialized operator.
    """
    geometry = denoiser.geometry
    n = geometry.n
    if n > cap:
        raise SizeError(f"explicit W capped at n={cap}, geometry has n={n}")
    side = denoiser.model.patch_side
    idx = patch_index_map(geometry, side)
    filters = component_filters(denoiser.model, denoiser.noise_variance)
    beta = denoiser.weights.beta
    w = np.zeros((n, n))
    for i in range(n):
        f_i = np.tensordot(beta[:, i], filters, axes=1)
        w[np.ix_(idx[i], idx[i])] += f_i
    w /= side * side
    w = 0.5 * (w + w.T)
    vals, vecs = np.linalg.eigh(w)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    rank = int(np.sum(vals > RANK_RTOL * max(vals[0], 0.0)))
    return ExplicitW(matrix=w, eigenvalues=vals, basis=vecs[:, :rank])


def eval_phi(x: np.ndarray, w: ExplicitW) -> float:
    """Evaluate the regularizer W is the prox of; +inf off span(W)."""
    coeffs = w.basis.T @ x
    residual = x - w.basis @ coeffs
    norm = np.linalg.norm(x)
    if np.linalg.norm(residual) > SUBSPACE_RTOL * norm:
        return float("inf")
    inv_minus_one = 1.0 / w.nonzero_eigenvalues - 1.0
    return float(0.5 * np.sum(inv_minus_one * coeffs**2))


def prox_oracle(y: np.ndarray, w: ExplicitW) -> np.ndarray:
    """Proximity operator of phi, solved in span(W) coordinates.

    Reduces ``argmin 0.5||x - y||^2 + phi(x)`` over ``x = Qbar z`` to the
    diagonal problem with solution ``z = Lbar Qbar^T y``. This path never
    touches the patch pipeline, so it independently reproduces ``W @ y``.
    """
    z = w.nonzero_eigenvalues * (w.basis.T @ y)
    return w.basis @ z


@dataclass(frozen=True)
class ExpansivenessTable:
    """Scalar MMSE curve vs its fixed-weight linearization on a grid."""

    y: np.ndarray
    mmse: np.ndarray
    fixed: np.ndarray
    max_slope_mmse: float
    max_slope_fixed: float
    fixed_beta: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5]))


def expansiveness_demo(
    small_variance: float,
    large_variance: float,
    noise_variance: float,
    grid: np.ndarray | None = None,
    alphas: tuple[float, float] = (0.5, 0.5),
) -> ExpansivenessTable:
    """Univariate two-component demo of MMSE expansiveness.

    The exact MMSE estimate under a zero-mean two-component scalar mixture has
    finite-difference slope above 1 in the transition region between the
    components, while the fixed-weight linearization is a convex combination
    of shrinkages and stays strictly below slope 1.
    """
    if not 0 < small_variance < large_variance:
        raise ConfigError("need 0 < small_variance < large_variance")
    if grid is None:
        grid = np.arange(-3.0, 3.0 + 1e-12, 1e-4)
    variances = np.array([small_variance, large_variance])
    a = np.asarray(alphas, dtype=float)
    noisy_vars = variances + noise_variance
    loglik = (
        np.log(a)[:, None]
        - 0.5 * (np.log(2 * np.pi * noisy_vars)[:, None] + grid[None, :] ** 2 / noisy_vars[:, None])
    )
    peak = loglik.max(axis=0)
    beta = np.exp(loglik - peak[None, :])
    beta /= beta.sum(axis=0)[None, :]
    shrink = variances / noisy_vars
    mmse = (beta * shrink[:, None]).sum(axis=0) * grid
    fixed = float(a @ shrink) * grid
    dy = np.diff(grid)
    return ExpansivenessTable(
        y=grid,
        mmse=mmse,
        fixed=fixed,
        max_slope_mmse=float(np.max(np.diff(mmse) / dy)),
        max_slope_fixed=float(np.max(np.diff(fixed) / dy)),
        fixed_beta=a,
    )
