"""Heston model parameterization, closed-form moments, and exact path simulation.

The model is the two-dimensional diffusion

    dY_t = (a - b·Y_t) dt + σ₁ √Y_t dW_t,              Y_0 = y0 > 0,
    dX_t = (α - β·Y_t) dt + σ₂ √Y_t (ϱ dW_t + √(1-ϱ²) dB_t),   X_0 = x0,

with independent Brownian motions W and B.  Y is a square-root (CIR)
diffusion driving the volatility of the log-price-like coordinate X.

The volatility factor is advanced by exact draws from its noncentral
chi-square transition law — never by an Euler step — so simulated paths are
strictly positive and the inverse functionals used downstream (∫ ds/Y_s)
stay well behaved.  The transition is realized as a Poisson mixture of
Gamma variables:

    Y_{t+Δ} | Y_t = y   ~   c · Gamma(2a/σ₁² + N, scale 2),
    N ~ Poisson(y e^{-bΔ} / (2c)),   c = σ₁² (1 - e^{-bΔ}) / (4b),

with the b → 0 limit c = σ₁²Δ/4 handled by a series-safe evaluation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Criticality",
    "ModelParams",
    "DiffusionMatrix",
    "PathGrid",
    "RegimeError",
    "classify",
    "mean_vector",
    "stationary_moment",
    "cir_transition_sample",
    "simulate_heston_path",
    "simulate_critical_companion",
    "simulate_supercritical_companion",
]


class RegimeError(ValueError):
    """An operation was invoked outside the mean-reversion regime it requires."""


class Criticality(enum.Enum):
    """Regime of the volatility factor, by the sign of the reversion rate b."""

    SUBCRITICAL = "subcritical"  # b > 0: ergodic, stationary Gamma law exists
    CRITICAL = "critical"  # b = 0: null recurrent boundary case
    SUPERCRITICAL = "supercritical"  # b < 0: Y grows like e^{-bt}

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the joint (Y, X) diffusion.

    Constraints enforced at construction: a > 0, σ₁ > 0, σ₂ > 0, ϱ ∈ (-1, 1),
    y0 > 0, all entries finite.  b, α, β, x0 are unrestricted reals.
    """

    a: float
    b: float
    alpha: float
    beta: float
    sigma1: float
    sigma2: float
    rho: float
    y0: float
    x0: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a", "b", "alpha", "beta", "sigma1", "sigma2", "rho", "y0", "x0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.sigma1 <= 0:
            raise ValueError(f"sigma1 must be positive, got {self.sigma1}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie strictly inside (-1, 1), got {self.rho}")
        if self.y0 <= 0:
            raise ValueError(f"y0 must be positive, got {self.y0}")

    @property
    def feller_strict(self) -> bool:
        """True when a ≥ σ₁²/2, so the volatility factor never reaches zero."""
        return self.a >= 0.5 * self.sigma1**2

    @property
    def theta(self) -> np.ndarray:
        """Drift parameter vector (a, b, α, β)."""
        return np.array([self.a, self.b, self.alpha, self.beta])

    def diffusion_matrix(self) -> "DiffusionMatrix":
        """The true diffusion matrix S = [[σ₁², ϱσ₁σ₂], [ϱσ₁σ₂, σ₂²]]."""
        return DiffusionMatrix(
            s11=self.sigma1**2,
            s12=self.rho * self.sigma1 * self.sigma2,
            s22=self.sigma2**2,
        )


def classify(params: ModelParams) -> Criticality:
    """Regime of the volatility factor: exact sign comparison on b."""
    if params.b > 0:
        return Criticality.SUBCRITICAL
    if params.b == 0:
        return Criticality.CRITICAL
    return Criticality.SUPERCRITICAL


@dataclass(frozen=True)
class DiffusionMatrix:
    """Symmetric 2×2 diffusion matrix [[s11, s12], [s12, s22]].

    Diagonal entries must be positive; the determinant may be zero (perfectly
    correlated noise) but not materially negative.
    """

    s11: float
    s12: float
    s22: float

    def __post_init__(self) -> None:
        for name in ("s11", "s12", "s22"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.s11 <= 0 or self.s22 <= 0:
            raise ValueError(f"diagonal entries must be positive, got s11={self.s11}, s22={self.s22}")
        if self.det < -1e-12 * self.s11 * self.s22:
            raise ValueError(f"matrix is not positive semidefinite (det={self.det})")

    @property
    def det(self) -> float:
        return self.s11 * self.s22 - self.s12**2

    @property
    def is_positive_definite(self) -> bool:
        return self.det > 0

    def as_array(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])


# --- series-safe drift integrals ------------------------------------------

# Taylor switch for (1 - e^{-bt})/b; below this |b·t| the direct formula is
# replaced by t·(1 - bt/2 + (bt)²/6).
_I1_TAYLOR_THRESHOLD = 1e-8
# The double integral (t - I1)/b loses ~|b·t|⁻¹ digits to cancellation, so it
# switches to its series t²/2·(1 - bt/3 + (bt)²/12) much earlier.
_I2_TAYLOR_THRESHOLD = 1e-4


def _int_exp(b: float, t: float) -> float:
    """∫₀ᵗ e^{-b·u} du, stable through b = 0."""
    x = b * t
    if abs(x) < _I1_TAYLOR_THRESHOLD:
        return t * (1.0 - 0.5 * x + x * x / 6.0)
    return -math.expm1(-x) / b


def _int_int_exp(b: float, t: float) -> float:
    """∫₀ᵗ ∫₀ᵘ e^{-b·v} dv du, stable through b = 0."""
    x = b * t
    if abs(x) < _I2_TAYLOR_THRESHOLD:
        return 0.5 * t * t * (1.0 - x / 3.0 + x * x / 12.0)
    return (t - _int_exp(b, t)) / b


def mean_vector(params: ModelParams, t: float) -> tuple[float, float]:
    """Closed-form (E Y_t, E X_t).

    E Y_t = e^{-bt} y0 + a·I1(t) and
    E X_t = x0 - β y0 I1(t) + α t - β a I2(t),
    where I1(t) = ∫₀ᵗ e^{-bu} du and I2(t) = ∫₀ᵗ I1(u) du.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    i1 = _int_exp(params.b, t)
    i2 = _int_int_exp(params.b, t)
    mean_y = math.exp(-params.b * t) * params.y0 + params.a * i1
    mean_x = params.x0 - params.beta * params.y0 * i1 + params.alpha * t - params.beta * params.a * i2
    return mean_y, mean_x


def stationary_moment(params: ModelParams, kappa: float) -> float:
    """E(Y_∞^κ) under the stationary law of the subcritical volatility factor.

    For b > 0 the factor has stationary law Gamma(shape 2a/σ₁², rate 2b/σ₁²),
    so E(Y_∞^κ) = Γ(g+κ) / (r^κ Γ(g)) with g = 2a/σ₁², r = 2b/σ₁².  Defined
    for κ > -g; evaluated through log-gamma to dodge overflow.
    """
    if params.b <= 0:
        raise RegimeError(f"stationary law requires b > 0, got b={params.b}")
    g = 2.0 * params.a / params.sigma1**2
    if kappa <= -g:
        raise ValueError(f"moment of order {kappa} diverges: need kappa > {-g}")
    rate = 2.0 * params.b / params.sigma1**2
    return math.exp(math.lgamma(g + kappa) - math.lgamma(g) - kappa * math.log(rate))


# --- exact transition sampling ---------------------------------------------


def _transition_constants(a: float, b: float, sigma1: float, dt: float) -> tuple[float, float, float]:
    """Per-(parameters, dt) constants of the exact transition: (scale c, e^{-bΔ}, 2a/σ₁²)."""
    scale = 0.25 * sigma1 * sigma1 * _int_exp(b, dt)
    return scale, math.exp(-b * dt), 2.0 * a / (sigma1 * sigma1)


def _cir_step(scale: float, decay: float, half_df: float, y_from: float, rng: np.random.Generator) -> float:
    """One exact transition draw given precomputed constants."""
    lam = y_from * decay / scale
    y_next = float(rng.gamma(half_df + rng.poisson(0.5 * lam), 2.0 * scale))
    if y_next == 0.0:
        # Gamma draws can underflow to exactly 0.0 for very small shape; keep
        # the state in (0, ∞) so 1/Y functionals stay finite.
        return math.ulp(0.0)
    return y_next


def cir_transition_sample(params: ModelParams, y_from: float, dt: float, rng: np.random.Generator) -> float:
    """One exact draw of the volatility factor a time dt after being at y_from.

    Distribution: c·χ'²(4a/σ₁², y_from e^{-bΔ}/c) with c = σ₁²(1-e^{-bΔ})/(4b),
    sampled as a Poisson-mixed Gamma.  Always strictly positive.
    """
    if y_from <= 0:
        raise ValueError(f"y_from must be positive, got {y_from}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    scale, decay, half_df = _transition_constants(params.a, params.b, params.sigma1, dt)
    return _cir_step(scale, decay, half_df, y_from, rng)


@dataclass(frozen=True, eq=False)
class PathGrid:
    """A (Y, X) trajectory on the uniform grid t_k = k·dt, k = 0..n.

    y must be strictly positive throughout; y and x are equal-length 1-d
    arrays with at least two points.
    """

    dt: float
    y: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be a positive number, got {self.dt!r}")
        if self.y.ndim != 1 or self.x.ndim != 1 or self.y.shape != self.x.shape:
            raise ValueError("y and x must be one-dimensional arrays of equal length")
        if self.y.size < 2:
            raise ValueError("a path needs at least two grid points")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.x))):
            raise ValueError("path contains non-finite values")
        if not np.all(self.y > 0):
            raise ValueError("volatility path must be strictly positive")

    @property
    def n_steps(self) -> int:
        return self.y.size - 1

    @property
    def t_end(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.y.size) * self.dt


def simulate_heston_path(params: ModelParams, n_steps: int, dt: float, rng: np.random.Generator) -> PathGrid:
    """Simulate one (Y, X) path on [0, n_steps·dt].

    Y advances by exact transition draws.  X advances by

        X_{k+1} = X_k + (α - β Y_k) Δ
                  + (σ₂ ϱ / σ₁) (Y_{k+1} - Y_k - (a - b Y_k) Δ)
                  + σ₂ √((1-ϱ²) Y_k Δ) ξ_k,        ξ_k iid N(0,1),

    which recycles the Y innovation as the shared Brownian increment; the
    residual correlation error is O(Δ) per step, vanishing with the grid.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    a, b = params.a, params.b
    alpha, beta = params.alpha, params.beta
    scale, decay, half_df = _transition_constants(a, b, params.sigma1, dt)
    cross = params.sigma2 * params.rho / params.sigma1
    ortho = params.sigma2 * math.sqrt((1.0 - params.rho**2) * dt)
    y = np.empty(n_steps + 1)
    x = np.empty(n_steps + 1)
    y_k = float(params.y0)
    x_k = float(params.x0)
    y[0] = y_k
    x[0] = x_k
    for k in range(n_steps):
        y_next = _cir_step(scale, decay, half_df, y_k, rng)
        x_k += (
            (alpha - beta * y_k) * dt
            + cross * (y_next - y_k - (a - b * y_k) * dt)
            + ortho * math.sqrt(y_k) * rng.standard_normal()
        )
        y_k = y_next
        y[k + 1] = y_k
        x[k + 1] = x_k
    return PathGrid(dt=dt, y=y, x=x)


def simulate_critical_companion(
    params: ModelParams, n_steps: int, rng: np.random.Generator
) -> tuple[float, float, float]:
    """Zero-start companion pair on [0, 1]: returns (Y₁, ∫₀¹Y_u du, X₁).

    The companion follows dY = a dt + σ₁√Y dW and dX = α dt + σ₂√Y (ϱ dW +
    √(1-ϱ²) dB) from (0, 0) — no mean reversion, no volatility-in-drift
    coupling.  It is the weak rescaling limit of the critical-regime model
    over long horizons and feeds the critical limit-law sampler.  Requires
    a > σ₁²/2 so the path leaves 0 and stays positive.
    """
    if params.a <= 0.5 * params.sigma1**2:
        raise ValueError(f"companion requires a > sigma1^2/2, got a={params.a}, sigma1={params.sigma1}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    dt = 1.0 / n_steps
    scale, decay, half_df = _transition_constants(params.a, 0.0, params.sigma1, dt)
    cross = params.sigma2 * params.rho / params.sigma1
    ortho = params.sigma2 * math.sqrt((1.0 - params.rho**2) * dt)
    y_k = 0.0
    x_k = 0.0
    int_y = 0.0
    for _ in range(n_steps):
        y_next = _cir_step(scale, decay, half_df, y_k, rng)
        x_k += (
            params.alpha * dt
            + cross * (y_next - y_k - params.a * dt)
            + ortho * math.sqrt(y_k) * rng.standard_normal()
        )
        int_y += y_k * dt
        y_k = y_next
    return y_k, int_y, x_k


def simulate_supercritical_companion(
    params: ModelParams, n_steps: int, rng: np.random.Generator
) -> tuple[float, float, float]:
    """Reversion-free companion on [0, -1/b]:
    returns (Y_{-1/b}, ∫₀^{-1/b} Y_u du, ∫₀^{-1/b} du/Y_u).

    The companion follows dY = a dt + σ₁√Y dW from y0 (the b = 0 dynamics of
    the volatility factor), run over the horizon -1/b determined by the
    supercritical growth rate.  Only meaningful for b < 0.  The plain
    integral uses left-point sums like the path-level functionals; the
    inverse integral uses the trapezoid rule because its left-sum bias does
    not vanish relative to the (often small) integral itself, and the limit
    sampler divides by it.
    """
    if params.b >= 0:
        raise RegimeError(f"supercritical companion requires b < 0, got b={params.b}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    horizon = -1.0 / params.b
    dt = horizon / n_steps
    scale, decay, half_df = _transition_constants(params.a, 0.0, params.sigma1, dt)
    y_k = float(params.y0)
    int_y = 0.0
    int_inv_y = 0.0
    for _ in range(n_steps):
        int_y += y_k * dt
        y_next = _cir_step(scale, decay, half_df, y_k, rng)
        int_inv_y += 0.5 * (1.0 / y_k + 1.0 / y_next) * dt
        y_k = y_next
    return y_k, int_y, int_inv_y
