"""Reconstruction quality metrics: PSNR, ERGAS, SAM.

ERGAS follows the standard definition ``100 * d * sqrt(mean_b(MSE_b /
mean_b^2))`` where ``d`` is the resolution ratio between the panchromatic and
hyperspectral grids; SAM is the per-pixel spectral angle averaged over pixels
with nonzero spectra. Conventions vary in the literature, so these values are
comparable within this package only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, MetricError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricReport:
    """Per-band PSNRs plus the scalar cube metrics."""

    psnr_per_band: np.ndarray
    psnr_db: float
    ergas: float
    sam_degrees: float


def _as_cube(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[None, :] if a.ndim == 1 else a


def psnr(reference: np.ndarray, estimate: np.ndarray, peak: float = 1.0) -> float:
    """``10 log10(peak^2 / MSE)``; per-band then averaged for cubes.

    Identical inputs give ``inf``.
    """
    ref = _as_cube(reference)
    est = _as_cube(estimate)
    if ref.shape != est.shape:
        raise DimensionError(f"shape mismatch {ref.shape} vs {est.shape}")
    if peak <= 0:
        raise MetricError("peak must be positive")
    return float(np.mean(psnr_per_band(ref, est, peak)))


def psnr_per_band(
    reference: np.ndarray, estimate: np.ndarray, peak: float = 1.0
) -> np.ndarray:
    """Band-wise PSNR of a bands x pixels cube."""
    ref = _as_cube(reference)
    est = _as_cube(estimate)
    if ref.shape != est.shape:
        raise DimensionError(f"shape mismatch {ref.shape} vs {est.shape}")
    mse = np.mean((ref - est) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(peak**2 / mse)


def ergas(
    reference: np.ndarray, estimate: np.ndarray, resolution_ratio: float
) -> float:
    """Relative global dimensionless synthesis error."""
    ref = _as_cube(reference)
    est = _as_cube(estimate)
    if ref.shape != est.shape:
        raise DimensionError(f"shape mismatch {ref.shape} vs {est.shape}")
    band_means = ref.mean(axis=1)
    if np.any(band_means == 0):
        raise MetricError("ERGAS undefined: a reference band has zero mean")
    mse = np.mean((ref - est) ** 2, axis=1)
    return float(100.0 * resolution_ratio * np.sqrt(np.mean(mse / band_means**2)))


def sam(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Mean spectral angle between reference and estimated spectra, degrees.

    Pixels where either spectrum is zero are excluded (logged).
    """
    ref = _as_cube(reference)
    est = _as_cube(estimate)
    if ref.shape != est.shape:
        raise DimensionError(f"shape mismatch {ref.shape} vs {est.shape}")
    norms_ref = np.linalg.norm(ref, axis=0)
    norms_est = np.linalg.norm(est, axis=0)
    valid = (norms_ref > 0) & (norms_est > 0)
    excluded = int(np.size(valid) - np.count_nonzero(valid))
    if excluded:
        log.warning("SAM: excluded %d pixel(s) with zero spectrum", excluded)
    if not np.any(valid):
        raise MetricError("SAM undefined: all spectra are zero")
    cosines = np.einsum("bi,bi->i", ref[:, valid], est[:, valid])
    cosines /= norms_ref[valid] * norms_est[valid]
    angles = np.arccos(np.clip(cosines, -1.0, 1.0))
    return float(np.degrees(np.mean(angles)))


def metric_report(
    reference: np.ndarray,
    estimate: np.ndarray,
    peak: float = 1.0,
    resolution_ratio: float = 1.0,
) -> MetricReport:
    """All three metrics for a reference/estimate cube pair."""
    per_band = psnr_per_band(reference, estimate, peak)
    return MetricReport(
        psnr_per_band=per_band,
        psnr_db=float(np.mean(per_band)),
        ergas=ergas(reference, estimate, resolution_ratio),
        sam_degrees=sam(reference, estimate),
    )
