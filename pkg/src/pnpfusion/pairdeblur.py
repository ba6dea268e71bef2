"""Deblurring from a blurred/noisy image pair with a scene-adapted prior.

The pair model observes the same grayscale scene twice: ``y_b = B x + n_b``
(blurred, nearly noiseless) and ``y_n = x + n_n`` (sharp but noisy). The GMM
prior and the per-patch weights are trained once on the noisy sharp image and
frozen, making the plugged-in denoiser a fixed linear map; ADMM then solves

    0.5 ||B x - y_b||^2 + (lam/2) ||x - y_n||^2 + reg_weight * phi(x)

where, as in the sharpening module, the fixed point carries ``reg_weight =
rho`` on the phi induced by the denoiser built with variance ``tau / rho``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .admm import SolveReport, SolverConfig, run_admm
from .denoiser import ExplicitW, LinearDenoiser, denoise_image_fixed, eval_phi
from .errors import ConfigError, DimensionError, SizeError
from .fftops import CyclicBlur, apply_blur, solve_x_update_pair
from .gmm import EmConfig, train_em
from .patches import ImageGeometry, extract_patches, remove_means

log = logging.getLogger(__name__)

DENSE_PAIR_CAP = 4096


@dataclass(frozen=True)
class PairScene:
    """Blurred/noisy observation pair of one scene; ``truth`` when synthetic."""

    y_b: np.ndarray
    y_n: np.ndarray
    blur: CyclicBlur
    sigma_b: float
    sigma_n: float
    geometry: ImageGeometry
    truth: np.ndarray | None = None

    def __post_init__(self):
        n = self.geometry.n
        if self.y_b.shape != (n,) or self.y_n.shape != (n,):
            raise DimensionError("pair images must both match the geometry")
        if self.sigma_b > 0 and self.sigma_b >= self.sigma_n:
            log.warning(
                "expected sigma_b << sigma_n, got sigma_b=%g sigma_n=%g",
                self.sigma_b,
                self.sigma_n,
            )


@dataclass(frozen=True)
class PairParams:
    """Pipeline knobs for pair deblurring."""

    patch_side: int
    em: EmConfig
    solver: SolverConfig
    pure_linear: bool = False


def train_pair_denoiser(
    scene: PairScene,
    patch_side: int,
    em: EmConfig,
    denoiser_variance: float,
    pure_linear: bool = False,
) -> LinearDenoiser:
    """Train the GMM on the noisy sharp image's zero-mean patches and freeze
    the per-patch posterior weights."""
    patches = remove_means(extract_patches(scene.y_n, scene.geometry, patch_side))
    model, weights, _ = train_em(patches, em)
    return LinearDenoiser(
        model=model,
        weights=weights,
        noise_variance=denoiser_variance,
        geometry=scene.geometry,
        pure_linear=pure_linear,
    )


class _PairProblem:
    """Single-block ADMM callbacks for the pair objective."""

    def __init__(self, scene, denoiser, cfg, objective_fn=None):
        self.scene = scene
        self.denoiser = denoiser
        self.cfg = cfg
        self.objective_fn = objective_fn
        self._bt_yb = apply_blur(scene.y_b, scene.blur, adjoint=True)

    def x_update(self, vs, us):
        rhs = self._bt_yb + self.cfg.lam * self.scene.y_n + self.cfg.rho * (
            vs[0] + us[0]
        )
        return solve_x_update_pair(rhs, self.scene.blur, self.cfg.lam, self.cfg.rho)

    def h_apply(self, x):
        return [x]

    def v_update(self, j, target):
        if self.denoiser is None:
            return target
        return denoise_image_fixed(target, self.denoiser)

    def objective(self, x):
        return self.objective_fn(x) if self.objective_fn is not None else None


def run_admm_pair(
    scene: PairScene,
    denoiser: LinearDenoiser | None,
    cfg: SolverConfig,
    objective_fn=None,
) -> tuple[np.ndarray, SolveReport]:
    """ADMM iterations for a prepared scene/denoiser pair."""
    zeros = np.zeros(scene.geometry.n)
    problem = _PairProblem(scene, denoiser, cfg, objective_fn)
    return run_admm(problem, cfg, [zeros])


def deblur_pair(
    scene: PairScene, params: PairParams
) -> tuple[np.ndarray, SolveReport]:
    """Full pair pipeline: train on the noisy image, fuse both observations.

    With ``tau == 0`` no prior is used and the iterations converge to the
    two-term least-squares fusion.
    """
    cfg = params.solver
    denoiser = None
    if cfg.tau > 0:
        denoiser = train_pair_denoiser(
            scene,
            params.patch_side,
            params.em,
            denoiser_variance=cfg.tau / cfg.rho,
            pure_linear=params.pure_linear,
        )
    return run_admm_pair(scene, denoiser, cfg)


def objective_pair(
    x: np.ndarray,
    scene: PairScene,
    lam: float,
    reg_weight: float,
    w: ExplicitW | None = None,
) -> float:
    """Evaluate the pair objective; ``reg_weight`` multiplies phi."""
    bx = apply_blur(x, scene.blur)
    val = 0.5 * float(np.sum((bx - scene.y_b) ** 2))
    val += 0.5 * lam * float(np.sum((x - scene.y_n) ** 2))
    if reg_weight > 0:
        if w is None:
            raise ConfigError("reg_weight > 0 needs an explicit W to evaluate phi")
        val += reg_weight * eval_phi(x, w)
    return val


def dense_blur_matrix(blur: CyclicBlur) -> np.ndarray:
    """Materialize the blur as a dense matrix (test scale only)."""
    n = blur.geometry.n
    if n > DENSE_PAIR_CAP:
        raise SizeError(f"dense blur matrix capped at n={DENSE_PAIR_CAP}")
    b = np.empty((n, n))
    eye = np.eye(n)
    for k in range(n):
        b[:, k] = apply_blur(eye[k], blur)
    return b


def direct_solve_pair(
    scene: PairScene,
    lam: float,
    reg_weight: float,
    w: ExplicitW | None = None,
) -> np.ndarray:
    """Dense KKT minimizer of the pair objective (test scale only).

    With ``reg_weight > 0`` the problem is reduced to span(W) coordinates;
    with weight 0 it is the plain normal-equations solve.
    """
    n = scene.geometry.n
    if n > DENSE_PAIR_CAP:
        raise SizeError(f"dense pair solve capped at n={DENSE_PAIR_CAP}")
    b = dense_blur_matrix(scene.blur)
    btb = b.T @ b
    rhs = b.T @ scene.y_b + lam * scene.y_n
    if reg_weight <= 0:
        return np.linalg.solve(btb + lam * np.eye(n), rhs)
    if w is None:
        raise ConfigError("reg_weight > 0 requires the explicit W")
    q = w.basis
    inv_minus_one = 1.0 / w.nonzero_eigenvalues - 1.0
    lhs = q.T @ (btb + lam * np.eye(n)) @ q + reg_weight * np.diag(inv_minus_one)
    z = np.linalg.solve(lhs, q.T @ rhs)
    return q @ z
