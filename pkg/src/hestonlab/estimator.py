"""Closed-form drift inference for the joint (Y, X) diffusion.

The drift log-likelihood is the quadratic θ ↦ θᵀd_T - ½ θᵀA_T θ in the
parameter vector θ = (a, b, α, β), where d_T (score at the origin) and A_T
(information) are built from the sufficient statistics and the diffusion
matrix.  Its maximizer has a closed form that — remarkably — does not involve
(σ₁, σ₂, ϱ) at all: the Kronecker structure of A_T cancels the diffusion
factors in A_T⁻¹ d_T, leaving ratios of path functionals only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .functionals import SufficientStats, log_identity_value, sufficient_stats
from .model import DiffusionMatrix, PathGrid

__all__ = [
    "DeterminantNonpositiveError",
    "FellerWarning",
    "InformationMatrix",
    "MleEstimate",
    "information_matrix",
    "score_vector",
    "log_likelihood",
    "mle",
    "estimate_from_path",
]

# A determinant below this multiple of its natural scale int_y*int_inv_y is
# treated as numerically zero: the normal equations are unsolvable.
_DET_RELATIVE_FLOOR = 1e-12


class DeterminantNonpositiveError(ValueError):
    """The determinant ∫Y·∫1/Y - T² is not usably positive.

    Happens only for (numerically) constant volatility paths, where the
    normal equations of the drift likelihood are singular.
    """


class FellerWarning(UserWarning):
    """Estimates suggest the volatility factor can reach zero: â ≤ σ̂₁²/2.

    Inverse-volatility functionals are then unreliable and the asymptotic
    theory behind confidence statements may not apply.
    """


@dataclass(frozen=True, eq=False)
class InformationMatrix:
    """The 4×4 quadratic-form matrix of the drift log-likelihood.

    matrix = kron_left ⊗ kron_right, with kron_left the inverse diffusion
    precision [[1/s11, -s12/(s11 s22)], [·, 1/s22]] and kron_right the path
    factor [[∫1/Y, -T], [-T, ∫Y]].  Positive definite iff det_condition > 0.
    """

    matrix: np.ndarray
    kron_left: np.ndarray
    kron_right: np.ndarray

    @property
    def is_positive_definite(self) -> bool:
        right_det = self.kron_right[0, 0] * self.kron_right[1, 1] - self.kron_right[0, 1] ** 2
        left_det = self.kron_left[0, 0] * self.kron_left[1, 1] - self.kron_left[0, 1] ** 2
        return right_det > 0 and left_det > 0


def information_matrix(stats: SufficientStats, diff: DiffusionMatrix) -> InformationMatrix:
    """A_T = C ⊗ [[∫1/Y, -T], [-T, ∫Y]] with C the half-precision factor.

    C = [[1/s11, -s12/(s11 s22)], [-s12/(s11 s22), 1/s22]]; its off-diagonal
    is -ϱ/(σ₁σ₂) and its diagonal 1/σ₁², 1/σ₂².
    """
    off = -diff.s12 / (diff.s11 * diff.s22)
    kron_left = np.array([[1.0 / diff.s11, off], [off, 1.0 / diff.s22]])
    kron_right = np.array(
        [[stats.int_inv_y, -stats.horizon], [-stats.horizon, stats.int_y]]
    )
    return InformationMatrix(
        matrix=np.kron(kron_left, kron_right),
        kron_left=kron_left,
        kron_right=kron_right,
    )


def score_vector(stats: SufficientStats, diff: DiffusionMatrix) -> np.ndarray:
    """Gradient d_T of the drift log-likelihood at θ = 0, ordered (a, b, α, β)."""
    c11 = 1.0 / diff.s11
    c22 = 1.0 / diff.s22
    c12 = diff.s12 / (diff.s11 * diff.s22)  # = ϱ/(σ₁σ₂)
    return np.array(
        [
            c11 * stats.int_dy_over_y - c12 * stats.int_dx_over_y,
            -c11 * stats.dy + c12 * stats.dx,
            -c12 * stats.int_dy_over_y + c22 * stats.int_dx_over_y,
            c12 * stats.dy - c22 * stats.dx,
        ]
    )


def log_likelihood(theta: np.ndarray, stats: SufficientStats, diff: DiffusionMatrix) -> float:
    """θᵀd_T - ½ θᵀA_T θ: the θ-dependent part of the drift log-likelihood."""
    th = np.asarray(theta, dtype=float)
    if th.shape != (4,):
        raise ValueError(f"theta must have shape (4,), got {th.shape}")
    d = score_vector(stats, diff)
    a = information_matrix(stats, diff).matrix
    return float(th @ d - 0.5 * th @ a @ th)


@dataclass(frozen=True)
class MleEstimate:
    """Closed-form drift estimate with the conditioning of its normal equations."""

    a_hat: float
    b_hat: float
    alpha_hat: float
    beta_hat: float
    det_condition: float
    used_log_identity: bool = False

    @property
    def theta_hat(self) -> np.ndarray:
        return np.array([self.a_hat, self.b_hat, self.alpha_hat, self.beta_hat])


def mle(stats: SufficientStats, diff: DiffusionMatrix | None = None) -> MleEstimate:
    """Maximizer of the drift log-likelihood, in closed form.

    With D = ∫Y·∫1/Y - T²:

        â = (∫Y · ∫dY/Y - T · ΔY) / D      b̂ = (T · ∫dY/Y - ΔY · ∫1/Y) / D
        α̂ = (∫Y · ∫dX/Y - T · ΔX) / D      β̂ = (T · ∫dX/Y - ΔX · ∫1/Y) / D

    The diffusion matrix cancels out of A_T⁻¹d_T, so `diff` is accepted only
    for signature symmetry with the other likelihood objects and never read.
    Raises DeterminantNonpositiveError when D ≤ 1e-12 · ∫Y · ∫1/Y.
    """
    det = stats.det_condition
    if det <= _DET_RELATIVE_FLOOR * stats.int_y * stats.int_inv_y:
        raise DeterminantNonpositiveError(
            f"determinant {det} is not usably positive "
            f"(scale {stats.int_y * stats.int_inv_y}); the volatility path is numerically constant"
        )
    t = stats.horizon
    return MleEstimate(
        a_hat=(stats.int_y * stats.int_dy_over_y - t * stats.dy) / det,
        b_hat=(t * stats.int_dy_over_y - stats.dy * stats.int_inv_y) / det,
        alpha_hat=(stats.int_y * stats.int_dx_over_y - t * stats.dx) / det,
        beta_hat=(t * stats.int_dx_over_y - stats.dx * stats.int_inv_y) / det,
        det_condition=det,
    )


def estimate_from_path(
    path: PathGrid,
    *,
    use_log_identity: bool = False,
    sigma1: float | None = None,
    warn_feller: bool = True,
) -> MleEstimate:
    """Sufficient statistics plus closed-form maximization in one call.

    With use_log_identity=True the stochastic integral ∫dY/Y is replaced by
    its Itô-expansion value log(Y_T/Y_0) + (σ₁²/2)∫ds/Y, which needs the true
    σ₁.  When the estimated diffusion scale suggests the volatility can hit
    zero (â ≤ σ̂₁²/2) a FellerWarning is emitted, controllable by warn_feller.
    """
    stats = sufficient_stats(path)
    if use_log_identity:
        if sigma1 is None:
            raise ValueError("use_log_identity=True requires sigma1")
        stats = replace(stats, int_dy_over_y=log_identity_value(path, sigma1))
    estimate = mle(stats)
    if use_log_identity:
        estimate = replace(estimate, used_log_identity=True)
    if warn_feller:
        dy_steps = np.diff(path.y)
        s11_hat = float(dy_steps @ dy_steps) / stats.int_y
        if estimate.a_hat <= 0.5 * s11_hat:
            warnings.warn(
                f"estimated a={estimate.a_hat:.4g} is at or below sigma1_hat^2/2={0.5 * s11_hat:.4g}; "
                "the volatility factor may reach zero and 1/Y functionals are unreliable",
                FellerWarning,
                stacklevel=2,
            )
    return estimate
