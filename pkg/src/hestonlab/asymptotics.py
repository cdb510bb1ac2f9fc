"""Limit laws of the scaled drift-estimation error in the three regimes.

Subcritical (b > 0): √T(θ̂ - θ) is asymptotically Gaussian; the covariance is
available in closed form, and a path-dependent ("random") scaling turns the
limit into S ⊗ I₂ without knowing (a, b).

Critical (b = 0) and supercritical (b < 0): the limits are non-Gaussian and
are sampled exactly via short companion diffusions; each draw is one exact
realization of the limit vector in the coordinate order (a, α, b, β).

Also includes the boundary hitting-time law that governs ∫ds/Y at the Feller
boundary a = σ₁²/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import DeterminantNonpositiveError, _DET_RELATIVE_FLOOR
from .functionals import SufficientStats
from .model import (
    Criticality,
    ModelParams,
    RegimeError,
    simulate_critical_companion,
    simulate_supercritical_companion,
)

__all__ = [
    "LimitSample",
    "sqrt_spd_2x2",
    "subcritical_covariance",
    "random_scaling_transform",
    "critical_limit_sample",
    "supercritical_limit_sample",
    "boundary_hitting_time_sample",
]

_SCALINGS = ("deterministic", "random")


@dataclass(frozen=True, eq=False)
class LimitSample:
    """One exact draw from a limit law.

    v is a 4-vector in the coordinate order (a, α, b, β) — Gaussian-rate
    coordinates first, companion-driven coordinates last.  scaling records
    whether the draw is from the deterministically or randomly normalized
    limit.
    """

    v: np.ndarray
    regime: Criticality
    scaling: str


def _check_scaling(scaling: str) -> None:
    if scaling not in _SCALINGS:
        raise ValueError(f"scaling must be one of {_SCALINGS}, got {scaling!r}")


def sqrt_spd_2x2(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric positive definite 2×2 matrix.

    Closed form (M + √det·I) / √(trace + 2√det); valid because M² satisfies
    the Cayley-Hamilton recursion M² = trace·M - det·I.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if abs(m[0, 1] - m[1, 0]) > 1e-12 * (1.0 + abs(m[0, 1])):
        raise ValueError("matrix must be symmetric")
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    trace = m[0, 0] + m[1, 1]
    if det <= 0 or trace <= 0:
        raise ValueError(f"matrix must be positive definite (trace={trace}, det={det})")
    s = math.sqrt(det)
    return (m + s * np.eye(2)) / math.sqrt(trace + 2.0 * s)


def subcritical_covariance(params: ModelParams) -> np.ndarray:
    """Asymptotic covariance of √T(θ̂ - θ) for b > 0, ordered (a, b, α, β).

    Σ = S ⊗ M⁻¹ with M = [[2b/(2a-σ₁²), -1], [-1, a/b]], whose determinant is
    σ₁²/(2a-σ₁²).  Requires the strict positivity condition 2a > σ₁² so that
    the stationary inverse moment E(1/Y_∞) is finite.
    """
    if params.b <= 0:
        raise RegimeError(f"subcritical covariance requires b > 0, got b={params.b}")
    denom = 2.0 * params.a - params.sigma1**2
    if denom <= 0:
        raise ValueError(f"requires 2a > sigma1^2, got a={params.a}, sigma1={params.sigma1}")
    inner_det = params.sigma1**2 / denom
    inner_inv = np.array(
        [[params.a / params.b, 1.0], [1.0, 2.0 * params.b / denom]]
    ) / inner_det
    return np.kron(params.diffusion_matrix().as_array(), inner_inv)


def random_scaling_transform(stats: SufficientStats, theta_err: np.ndarray) -> np.ndarray:
    """Path-dependent normalization of the estimation error θ̂ - θ.

    Applies I₂ ⊗ R with R = [[∫1/Y, -T], [0, √D]] / √(∫1/Y), D the normal-
    equation determinant.  In the subcritical regime the transformed error is
    asymptotically N(0, S ⊗ I₂) — pivotal in (a, b), so usable for confidence
    sets without estimating the drift itself.  Input/output coordinate order
    is (a, b, α, β).
    """
    err = np.asarray(theta_err, dtype=float)
    if err.shape != (4,):
        raise ValueError(f"theta_err must have shape (4,), got {err.shape}")
    det = stats.det_condition
    if det <= _DET_RELATIVE_FLOOR * stats.int_y * stats.int_inv_y:
        raise DeterminantNonpositiveError(
            f"determinant {det} is not usably positive; random scaling undefined"
        )
    norm = math.sqrt(stats.int_inv_y)
    block = np.array(
        [[stats.int_inv_y, -stats.horizon], [0.0, math.sqrt(det)]]
    ) / norm
    out = np.empty(4)
    out[:2] = block @ err[:2]
    out[2:] = block @ err[2:]
    return out


def critical_limit_sample(
    params: ModelParams,
    rng: np.random.Generator,
    *,
    scaling: str = "deterministic",
    companion_steps: int = 1000,
) -> LimitSample:
    """One exact draw from the critical (b = 0) limit law.

    Deterministic scaling — the limit of
    (√log T (â-a), √log T (α̂-α), T b̂, T (β̂-β)):

        (a, α) block:  √(a - σ₁²/2) · S^{1/2} Z,   Z ~ N(0, I₂),
        (b, β) block:  ((a - Y₁)/∫₀¹Y, (α - X₁)/∫₀¹Y),

    with (Y, X) the zero-start companion pair on [0, 1].  Random scaling
    divides the (b, β) block by √∫Y instead and drops the √(a - σ₁²/2)
    factor, making both blocks pivotal.  The Gaussian block is exact; the
    companion block carries the companion's discretization error.
    """
    if params.b != 0:
        raise RegimeError(f"critical limit requires b = 0, got b={params.b}")
    if params.a <= 0.5 * params.sigma1**2:
        raise ValueError(f"requires a > sigma1^2/2, got a={params.a}, sigma1={params.sigma1}")
    _check_scaling(scaling)
    y_end, int_y, x_end = simulate_critical_companion(params, companion_steps, rng)
    gauss = sqrt_spd_2x2(params.diffusion_matrix().as_array()) @ rng.standard_normal(2)
    if scaling == "deterministic":
        gauss *= math.sqrt(params.a - 0.5 * params.sigma1**2)
        drift_scale = 1.0 / int_y
    else:
        drift_scale = 1.0 / math.sqrt(int_y)
    v = np.array(
        [
            gauss[0],
            gauss[1],
            (params.a - y_end) * drift_scale,
            (params.alpha - x_end) * drift_scale,
        ]
    )
    return LimitSample(v=v, regime=Criticality.CRITICAL, scaling=scaling)


def supercritical_limit_sample(
    params: ModelParams,
    rng: np.random.Generator,
    *,
    scaling: str = "deterministic",
    companion_steps: int = 1000,
) -> LimitSample:
    """One exact draw from the supercritical (b < 0) limit law.

    Deterministic scaling — the limit of
    (â-a, α̂-α, e^{-bT/2}(b̂-b), e^{-bT/2}(β̂-β)):

        J  = ∫₀^{-1/b} du/Ỹ_u   (the a.s. limit of ∫₀^∞ ds/Y_s),
        V  = (log Ỹ_{-1/b} - log y0)/J + σ₁²/2 - a,
        vα = ϱ(σ₂/σ₁) V + σ₂√(1-ϱ²) Z₁ / √J,
        (b, β) block: √(-b/Ỹ_{-1/b}) · S^{1/2} Z₂,

    with Ỹ the reversion-free companion from y0 on [0, -1/b].  The (a, α)
    coordinates do not vanish in the limit: the estimator is inconsistent for
    them in this regime.  Random scaling drops the √(-b/Ỹ) factor.
    """
    if params.b >= 0:
        raise RegimeError(f"supercritical limit requires b < 0, got b={params.b}")
    _check_scaling(scaling)
    y_end, _, int_inv_y = simulate_supercritical_companion(params, companion_steps, rng)
    z1 = float(rng.standard_normal())
    z2 = rng.standard_normal(2)
    v_bias = (math.log(y_end) - math.log(params.y0)) / int_inv_y + 0.5 * params.sigma1**2 - params.a
    v_alpha = (
        params.rho * params.sigma2 / params.sigma1 * v_bias
        + params.sigma2 * math.sqrt(1.0 - params.rho**2) * z1 / math.sqrt(int_inv_y)
    )
    gauss = sqrt_spd_2x2(params.diffusion_matrix().as_array()) @ z2
    if scaling == "deterministic":
        gauss *= math.sqrt(-params.b / y_end)
    v = np.array([v_bias, v_alpha, gauss[0], gauss[1]])
    return LimitSample(v=v, regime=Criticality.SUPERCRITICAL, scaling=scaling)


def boundary_hitting_time_sample(params: ModelParams, rng: np.random.Generator) -> float:
    """One draw of τ = m²/Z² with m = b/σ₁ and Z standard normal.

    τ is the first time a standard Brownian motion hits level m, the weak
    limit of T⁻²∫₀ᵀ ds/Y at the volatility boundary a = σ₁²/2 with b > 0.
    CDF: P(τ ≤ t) = 2(1 - Φ(m/√t)).
    """
    if params.b <= 0:
        raise RegimeError(f"hitting-time limit requires b > 0, got b={params.b}")
    m = params.b / params.sigma1
    z = float(rng.standard_normal())
    while z == 0.0:
        z = float(rng.standard_normal())
    return (m / z) ** 2
