"""Hyperspectral sharpening: forward models, PCA subspace, SALSA updates.

Observed data: a spatially blurred and decimated hyperspectral cube
``Y_h = Z B M`` plus a spectrally mixed high-resolution cube ``Y_m = R Z``.
The latent cube is represented as ``Z = E X`` on a low-dimensional spectral
subspace, and X is recovered by a three-block SALSA scheme whose third block
is the scene-adapted GMM denoiser applied independently to each coefficient
band, built with noise variance ``tau / rho``.

At the SALSA fixed point the minimized objective is

    0.5 ||E X B M - Y_h||_F^2 + (lam/2) ||R E X - Y_m||_F^2
        + reg_weight * sum_bands phi(X_band)

with ``reg_weight = rho``: a prox step implemented as plain multiplication by
the denoiser matrix contributes its regularizer phi scaled by the penalty
parameter. The dense oracle and objective helpers below therefore take the
weight on phi explicitly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .admm import SolveReport, SolverConfig, run_admm
from .denoiser import ExplicitW, LinearDenoiser, denoise_image_fixed, eval_phi
from .errors import ConfigError, DimensionError, SizeError
from .fftops import CyclicBlur, blur_rows, solve_x_update_hs
from .gmm import EmConfig, PatchWeights, average_beta_across_bands, train_em
from .patches import ImageGeometry, PatchSet, extract_patches, remove_means

log = logging.getLogger(__name__)

DIRECT_SOLVE_CAP = 8192


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal spectral basis columns with their singular values."""

    e: np.ndarray  # (L_h, L_s)
    singular_values: np.ndarray

    @property
    def dim(self) -> int:
        return self.e.shape[1]


@dataclass(frozen=True)
class HsScene:
    """One sharpening problem instance; ``z`` is ground truth when synthetic."""

    y_h: np.ndarray  # (L_h, n_h)
    y_m: np.ndarray  # (L_m, n_m)
    blur: CyclicBlur
    mask: np.ndarray  # (n_m,) of {0,1}
    r: np.ndarray  # (L_m, L_h)
    sigma_h: float
    sigma_m: float
    geometry: ImageGeometry
    z: np.ndarray | None = None

    def __post_init__(self):
        n_m = self.geometry.n
        if self.mask.shape != (n_m,):
            raise DimensionError("mask length must equal the pixel count")
        if not np.all((self.mask == 0) | (self.mask == 1)):
            raise ConfigError("mask entries must be 0 or 1")
        decimation_factor(self.mask, self.geometry)  # validates regularity
        if self.y_h.shape != (self.r.shape[1], int(self.mask.sum())):
            raise DimensionError(
                f"y_h shape {self.y_h.shape} inconsistent with R {self.r.shape} "
                f"and mask count {int(self.mask.sum())}"
            )
        if self.y_m.shape != (self.r.shape[0], n_m):
            raise DimensionError(
                f"y_m shape {self.y_m.shape} inconsistent with R and geometry"
            )
        if np.any(self.r < 0):
            raise ConfigError("spectral response rows must be nonnegative")

    @property
    def n_bands_hs(self) -> int:
        return self.y_h.shape[0]

    @property
    def n_bands_ms(self) -> int:
        return self.y_m.shape[0]

    @property
    def masked_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def make_decimation_mask(geometry: ImageGeometry, d: int) -> np.ndarray:
    """0/1 pixel mask keeping every d-th row and column, top-left phase."""
    if d < 1:
        raise ConfigError(f"decimation factor must be >= 1, got {d}")
    rows = np.arange(geometry.height) % d == 0
    cols = np.arange(geometry.width) % d == 0
    grid = np.outer(rows, cols)
    return geometry.from_grid(grid.astype(float)).astype(int)


def decimation_factor(mask: np.ndarray, geometry: ImageGeometry) -> int:
    """Recover d from a mask, raising if it is not a regular top-left grid.

    An all-zero mask (no data term anywhere) is allowed and returns 0.
    """
    ones = np.flatnonzero(mask)
    if ones.size == 0:
        return 0
    rows = np.unique(ones % geometry.height)
    cols = np.unique(ones // geometry.height)
    if rows.size > 1:
        d = int(rows[1] - rows[0])
    elif cols.size > 1:
        d = int(cols[1] - cols[0])
    else:
        d = max(geometry.height, geometry.width)
    if not np.array_equal(mask, make_decimation_mask(geometry, d)):
        raise ConfigError("mask is not a regular top-left decimation grid")
    return d


def forward_hs(
    z: np.ndarray,
    scene: HsScene,
    add_noise: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Blur every band cyclically and keep the masked pixels: ``Z B M``."""
    if z.shape[1] != scene.geometry.n:
        raise DimensionError("z pixel count does not match the scene geometry")
    out = blur_rows(z, scene.blur)[:, scene.masked_indices]
    if add_noise:
        rng = rng or np.random.default_rng()
        out = out + scene.sigma_h * rng.standard_normal(out.shape)
    return out


def forward_ms(
    z: np.ndarray,
    scene: HsScene,
    add_noise: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Spectrally mix the cube: ``R Z``."""
    if z.shape[0] != scene.r.shape[1]:
        raise DimensionError("z band count does not match the spectral response")
    out = scene.r @ z
    if add_noise:
        rng = rng or np.random.default_rng()
        out = out + scene.sigma_m * rng.standard_normal(out.shape)
    return out


def pca_basis(y_h: np.ndarray, n_dims: int) -> SubspaceBasis:
    """Top left-singular subspace of the observed spectra (no mean centering).

    Column signs are fixed so each column's largest-magnitude entry is
    positive, making the basis deterministic.
    """
    if n_dims > min(y_h.shape):
        raise ConfigError(
            f"subspace dimension {n_dims} exceeds data rank bound {min(y_h.shape)}"
        )
    u, s, _ = np.linalg.svd(y_h, full_matrices=False)
    e = u[:, :n_dims].copy()
    for j in range(n_dims):
        pivot = np.argmax(np.abs(e[:, j]))
        if e[pivot, j] < 0:
            e[:, j] = -e[:, j]
    return SubspaceBasis(e=e, singular_values=s[:n_dims].copy())


def _v1_from_target(
    target: np.ndarray, scene: HsScene, basis: SubspaceBasis, rho: float
) -> np.ndarray:
    """Minimize ``||E V M - Y_h||_F^2 + rho ||target - V||_F^2`` over V."""
    out = target.copy()
    idx = scene.masked_indices
    lhs = basis.e.T @ basis.e + rho * np.eye(basis.dim)
    rhs = basis.e.T @ scene.y_h + rho * target[:, idx]
    out[:, idx] = np.linalg.solve(lhs, rhs)
    return out


def _v2_from_target(
    target: np.ndarray, scene: HsScene, basis: SubspaceBasis, lam: float, rho: float
) -> np.ndarray:
    """Minimize ``lam ||R E V - Y_m||_F^2 + rho ||target - V||_F^2`` over V."""
    re = scene.r @ basis.e
    lhs = lam * re.T @ re + rho * np.eye(basis.dim)
    rhs = lam * re.T @ scene.y_m + rho * target
    return np.linalg.solve(lhs, rhs)


def v1_update(
    x: np.ndarray,
    d1: np.ndarray,
    scene: HsScene,
    basis: SubspaceBasis,
    rho: float,
) -> np.ndarray:
    """Blurred-HS data block: masked columns get the small closed-form solve,
    unmasked columns carry ``XB - D1`` through unchanged."""
    return _v1_from_target(blur_rows(x, scene.blur) - d1, scene, basis, rho)


def v2_update(
    x: np.ndarray,
    d2: np.ndarray,
    scene: HsScene,
    basis: SubspaceBasis,
    lam: float,
    rho: float,
) -> np.ndarray:
    """Spectral-mixing block: one shared L_s x L_s solve for all columns."""
    return _v2_from_target(x - d2, scene, basis, lam, rho)


def v3_update(
    x: np.ndarray, d3: np.ndarray, den: LinearDenoiser | None
) -> np.ndarray:
    """Denoise each coefficient band independently with the shared weights."""
    target = x - d3
    if den is None:
        return target
    if target.shape[1] != den.geometry.n:
        raise DimensionError("coefficient rows do not match the denoiser grid")
    return np.stack([denoise_image_fixed(row, den) for row in target])


@dataclass(frozen=True)
class SharpenParams:
    """Pipeline knobs: subspace size, patch size, EM and solver configs."""

    n_subspace: int
    patch_side: int
    em: EmConfig
    solver: SolverConfig
    pure_linear: bool = False


def train_scene_denoiser(
    y_m: np.ndarray,
    geometry: ImageGeometry,
    patch_side: int,
    em: EmConfig,
    denoiser_variance: float,
    pure_linear: bool = False,
) -> LinearDenoiser:
    """EM over the zero-mean patches of every band, weights averaged per patch.

    The mixture is trained jointly on all bands' patches; after convergence
    the per-band posteriors at each patch location are averaged and frozen.
    """
    n_bands = y_m.shape[0]
    per_band_sets = [
        remove_means(extract_patches(band, geometry, patch_side)) for band in y_m
    ]
    stacked = per_band_sets[0]
    if n_bands > 1:
        stacked = PatchSet(
            patches=np.vstack([s.patches for s in per_band_sets]),
            patch_side=patch_side,
            source_geometry=geometry,
        )
    model, weights, _ = train_em(stacked, em)
    n = geometry.n
    per_band = [
        PatchWeights(beta=weights.beta[:, p * n : (p + 1) * n])
        for p in range(n_bands)
    ]
    beta = average_beta_across_bands(per_band, n_bands)
    return LinearDenoiser(
        model=model,
        weights=beta,
        noise_variance=denoiser_variance,
        geometry=geometry,
        pure_linear=pure_linear,
    )


class _HsProblem:
    """Callback bundle wiring one scene into the generic ADMM driver."""

    def __init__(self, scene, basis, denoiser, cfg, objective_fn=None):
        self.scene = scene
        self.basis = basis
        self.denoiser = denoiser
        self.cfg = cfg
        self.objective_fn = objective_fn

    def x_update(self, vs, us):
        rhs = (
            blur_rows(vs[0] + us[0], self.scene.blur, adjoint=True)
            + vs[1]
            + us[1]
            + vs[2]
            + us[2]
        )
        return solve_x_update_hs(rhs, self.scene.blur)

    def h_apply(self, x):
        return [blur_rows(x, self.scene.blur), x, x]

    def v_update(self, j, target):
        if j == 0:
            return _v1_from_target(target, self.scene, self.basis, self.cfg.rho)
        if j == 1:
            return _v2_from_target(
                target, self.scene, self.basis, self.cfg.lam, self.cfg.rho
            )
        return v3_update(target, np.zeros_like(target), self.denoiser)

    def objective(self, x):
        return self.objective_fn(x) if self.objective_fn is not None else None


def run_salsa_hs(
    scene: HsScene,
    basis: SubspaceBasis,
    denoiser: LinearDenoiser | None,
    cfg: SolverConfig,
    objective_fn=None,
) -> tuple[np.ndarray, SolveReport]:
    """SALSA iterations for a prepared scene/basis/denoiser triple."""
    zeros = np.zeros((basis.dim, scene.geometry.n))
    problem = _HsProblem(scene, basis, denoiser, cfg, objective_fn)
    return run_admm(problem, cfg, [zeros, zeros, zeros])


def sharpen(
    scene: HsScene, params: SharpenParams
) -> tuple[np.ndarray, SolveReport]:
    """Full sharpening pipeline: PCA basis, EM-trained denoiser, SALSA loop.

    Returns the reconstructed cube ``Z_hat = E X`` and the solve report. With
    ``tau == 0`` the prior block degenerates to an identity prox and no GMM
    is trained.
    """
    cfg = params.solver
    basis = pca_basis(scene.y_h, params.n_subspace)
    denoiser = None
    if cfg.tau > 0:
        denoiser = train_scene_denoiser(
            scene.y_m,
            scene.geometry,
            params.patch_side,
            params.em,
            denoiser_variance=cfg.tau / cfg.rho,
            pure_linear=params.pure_linear,
        )
    x, report = run_salsa_hs(scene, basis, denoiser, cfg)
    return basis.e @ x, report


def hs_objective(
    x: np.ndarray,
    scene: HsScene,
    basis: SubspaceBasis,
    lam: float,
    reg_weight: float,
    w: ExplicitW | None = None,
) -> float:
    """Evaluate the sharpening objective at a coefficient matrix X.

    ``reg_weight`` multiplies phi, applied per coefficient band; pass the
    SALSA penalty rho to evaluate the objective the iterations minimize.
    """
    z = basis.e @ x
    val = 0.5 * float(np.sum((forward_hs(z, scene) - scene.y_h) ** 2))
    val += 0.5 * lam * float(np.sum((scene.r @ z - scene.y_m) ** 2))
    if reg_weight > 0:
        if w is None:
            raise ConfigError("reg_weight > 0 needs an explicit W to evaluate phi")
        for row in x:
            val += reg_weight * eval_phi(row, w)
    return val


def direct_solve_small(
    scene: HsScene,
    basis: SubspaceBasis,
    w: ExplicitW | None,
    lam: float,
    reg_weight: float,
) -> np.ndarray:
    """Exact global minimizer of the sharpening objective by dense KKT solve.

    With ``reg_weight > 0`` each coefficient band is parameterized on span(W)
    and the reduced normal equations are assembled brute force; with weight 0
    the unrestricted least-squares problem is solved instead. Test scale only.
    """
    n_sub = basis.dim
    n_m = scene.geometry.n
    if n_sub * n_m > DIRECT_SOLVE_CAP:
        raise SizeError(
            f"direct solve capped at {DIRECT_SOLVE_CAP} unknowns, "
            f"got {n_sub * n_m}"
        )

    if reg_weight > 0:
        if w is None:
            raise ConfigError("reg_weight > 0 requires the explicit W")
        q = w.basis
        r_dim = w.rank

        def coeff(zvec):
            return np.stack(
                [q @ zvec[s * r_dim : (s + 1) * r_dim] for s in range(n_sub)]
            )

        unknowns = n_sub * r_dim
    else:

        def coeff(zvec):
            return zvec.reshape(n_sub, n_m)

        unknowns = n_sub * n_m

    def apply_data(zvec):
        z = basis.e @ coeff(zvec)
        return np.concatenate(
            [forward_hs(z, scene).ravel(), np.sqrt(lam) * (scene.r @ z).ravel()]
        )

    rows = scene.y_h.size + scene.y_m.size
    a = np.empty((rows, unknowns))
    eye = np.eye(unknowns)
    for k in range(unknowns):
        a[:, k] = apply_data(eye[k])
    target = np.concatenate([scene.y_h.ravel(), np.sqrt(lam) * scene.y_m.ravel()])
    normal = a.T @ a
    rhs = a.T @ target
    if reg_weight > 0:
        inv_minus_one = 1.0 / w.nonzero_eigenvalues - 1.0
        normal += reg_weight * np.diag(np.tile(inv_minus_one, n_sub))
        zvec = np.linalg.solve(normal, rhs)
    else:
        zvec = np.linalg.lstsq(normal, rhs, rcond=None)[0]
    return coeff(zvec)
