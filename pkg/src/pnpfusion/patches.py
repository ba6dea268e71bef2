"""Patch extraction and assembly with unit stride and periodic boundaries.

Conventions used throughout the package:

* pixels of an ``height x width`` grid are indexed column-major, i.e. pixel
  ``i`` sits at ``(row, col) = (i % height, i // height)``;
* patch ``i`` is the ``patch_side x patch_side`` window whose top-left corner
  is pixel ``i``, wrapping periodically at the image borders;
* patches are vectorized column-major as well.

With unit stride and periodic boundaries there is exactly one patch per pixel
and every pixel belongs to exactly ``patch_side**2`` patches, so straight
averaging of put-back patches is the exact least-squares patch recombination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, StateError


@dataclass(frozen=True)
class ImageGeometry:
    """Spatial and spectral extent of an image cube."""

    height: int
    width: int
    bands: int = 1

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.bands < 1:
            raise DimensionError(
                f"geometry must be positive, got {self.height}x{self.width}x{self.bands}"
            )

    @property
    def n(self) -> int:
        """Pixel count of one band."""
        return self.height * self.width

    def to_grid(self, band: np.ndarray) -> np.ndarray:
        """Reshape a length-n pixel vector to the (height, width) grid."""
        if band.shape != (self.n,):
            raise DimensionError(f"expected length-{self.n} band, got {band.shape}")
        return band.reshape((self.height, self.width), order="F")

    def from_grid(self, grid: np.ndarray) -> np.ndarray:
        """Flatten a (height, width) grid back to a pixel vector."""
        if grid.shape != (self.height, self.width):
            raise DimensionError(
                f"expected {self.height}x{self.width} grid, got {grid.shape}"
            )
        return grid.ravel(order="F")


@dataclass(frozen=True)
class PatchSet:
    """All overlapping patches of one image band, one row per patch.

    ``means`` is None until :func:`remove_means` stores the per-patch means.
    """

    patches: np.ndarray  # (N, n_p)
    patch_side: int
    source_geometry: ImageGeometry
    means: np.ndarray | None = None

    @property
    def count(self) -> int:
        return self.patches.shape[0]

    @property
    def patch_dim(self) -> int:
        return self.patch_side * self.patch_side


def patch_index_map(geometry: ImageGeometry, patch_side: int) -> np.ndarray:
    """Pixel indices covered by each patch: an (n, n_p) integer matrix.

    Row ``i`` lists, in column-major patch order, the pixel indices of the
    patch anchored at pixel ``i``.
    """
    h, w = geometry.height, geometry.width
    if patch_side > h or patch_side > w:
        raise DimensionError(
            f"patch side {patch_side} exceeds image dimensions {h}x{w}"
        )
    rows = np.arange(h)
    cols = np.arange(w)
    # anchor (r, c) for pixel i = c*h + r
    anchor_r = np.tile(rows, w)
    anchor_c = np.repeat(cols, h)
    dr = np.arange(patch_side)
    dc = np.arange(patch_side)
    # patch-local offset k = dc*patch_side + dr (column-major within patch)
    off_r = np.tile(dr, patch_side)
    off_c = np.repeat(dc, patch_side)
    rr = (anchor_r[:, None] + off_r[None, :]) % h
    cc = (anchor_c[:, None] + off_c[None, :]) % w
    return cc * h + rr


def extract_patches(
    image_band: np.ndarray, geometry: ImageGeometry, patch_side: int
) -> PatchSet:
    """Extract every unit-stride patch of a band, wrapping periodically."""
    band = np.asarray(image_band, dtype=float)
    if band.shape != (geometry.n,):
        raise DimensionError(
            f"band has {band.shape} entries, geometry expects {geometry.n}"
        )
    idx = patch_index_map(geometry, patch_side)
    return PatchSet(
        patches=band[idx], patch_side=patch_side, source_geometry=geometry
    )


def assemble_patches(patch_set: PatchSet) -> np.ndarray:
    """Recombine patches by straight averaging of put-back patches.

    Computes ``(1/n_p) * sum_i P_i^T patch_i`` which is the exact least-squares
    solution of the patch recombination problem.
    """
    geometry = patch_set.source_geometry
    n = geometry.n
    n_p = patch_set.patch_dim
    if patch_set.patches.shape != (n, n_p):
        raise DimensionError(
            f"patch matrix shape {patch_set.patches.shape} inconsistent with "
            f"geometry n={n}, patch dim {n_p}"
        )
    idx = patch_index_map(geometry, patch_set.patch_side)
    out = np.zeros(n)
    # For a fixed patch-local offset k, the map i -> idx[i, k] is a bijection
    # on pixels, so each column scatter below is collision-free and the
    # accumulation order is fixed.
    for k in range(n_p):
        out[idx[:, k]] += patch_set.patches[:, k]
    return out / n_p


def remove_means(patch_set: PatchSet) -> PatchSet:
    """Subtract each patch's mean, storing the means for later restoration."""
    if patch_set.means is not None:
        raise StateError("patch means already removed")
    means = patch_set.patches.mean(axis=1)
    return PatchSet(
        patches=patch_set.patches - means[:, None],
        patch_side=patch_set.patch_side,
        source_geometry=patch_set.source_geometry,
        means=means,
    )


def restore_means(patch_set: PatchSet) -> PatchSet:
    """Add the stored per-patch means back onto the patch rows."""
    if patch_set.means is None:
        raise StateError("no stored patch means to restore")
    return PatchSet(
        patches=patch_set.patches + patch_set.means[:, None],
        patch_side=patch_set.patch_side,
        source_geometry=patch_set.source_geometry,
        means=None,
    )
