"""Path functionals: sufficient statistics for the drift likelihood,
quadratic-variation estimates of the diffusion matrix, volatility recovery
from the price coordinate alone, and CSV path I/O.

All integral functionals are left-endpoint Riemann/Itô sums on the path's
uniform grid — the same discretization throughout, so algebraic identities
between them hold exactly in floating point up to summation order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from os import PathLike
from typing import Union

import numpy as np

from .model import DiffusionMatrix, PathGrid

__all__ = [
    "SufficientStats",
    "DiffusionEstimate",
    "sufficient_stats",
    "log_identity_value",
    "diffusion_matrix_estimate",
    "recover_volatility",
    "load_path_csv",
    "save_path_csv",
]

_PathArg = Union[str, PathLike]


@dataclass(frozen=True)
class SufficientStats:
    """The path functionals that determine the drift log-likelihood.

    int_y          ≈ ∫₀ᵀ Y_s ds           (left-endpoint sum)
    int_inv_y      ≈ ∫₀ᵀ ds / Y_s
    dy, dx         — endpoint increments Y_T - Y_0, X_T - X_0
    int_dy_over_y  ≈ ∫₀ᵀ dY_s / Y_s       (left-endpoint stochastic sum)
    int_dx_over_y  ≈ ∫₀ᵀ dX_s / Y_s
    y_first, y_last — path endpoints, kept for the log-identity variant
    """

    horizon: float
    int_y: float
    int_inv_y: float
    dy: float
    dx: float
    int_dy_over_y: float
    int_dx_over_y: float
    y_first: float
    y_last: float

    def __post_init__(self) -> None:
        for name in (
            "horizon",
            "int_y",
            "int_inv_y",
            "dy",
            "dx",
            "int_dy_over_y",
            "int_dx_over_y",
            "y_first",
            "y_last",
        ):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.int_y <= 0 or self.int_inv_y <= 0:
            raise ValueError("int_y and int_inv_y must be positive")
        if self.y_first <= 0 or self.y_last <= 0:
            raise ValueError("path endpoints must be positive")

    @property
    def det_condition(self) -> float:
        """∫Y · ∫1/Y - T², the determinant of the estimator's normal equations.

        Strictly positive for every non-constant positive path (Cauchy-Schwarz
        is an equality only for constants).
        """
        return self.int_y * self.int_inv_y - self.horizon**2


def sufficient_stats(path: PathGrid, *, trapezoid: bool = False) -> SufficientStats:
    """Discretizations of the drift-likelihood functionals.

    The stochastic integrals (∫dY/Y, ∫dX/Y) always use left-endpoint
    evaluation — anything else would bias them through the increment/level
    correlation.  The time integrals ∫Y ds and ∫ds/Y default to left-endpoint
    sums for consistency; trapezoid=True switches them (and only them) to the
    trapezoid rule, which has smaller discretization error on smooth spans.
    """
    y, x, dt = path.y, path.x, path.dt
    y_left = y[:-1]
    dy_steps = np.diff(y)
    dx_steps = np.diff(x)
    if trapezoid:
        inv_y = 1.0 / y
        int_y = float((y.sum() - 0.5 * (y[0] + y[-1])) * dt)
        int_inv_y = float((inv_y.sum() - 0.5 * (inv_y[0] + inv_y[-1])) * dt)
    else:
        int_y = float(y_left.sum() * dt)
        int_inv_y = float((1.0 / y_left).sum() * dt)
    return SufficientStats(
        horizon=path.t_end,
        int_y=int_y,
        int_inv_y=int_inv_y,
        dy=float(y[-1] - y[0]),
        dx=float(x[-1] - x[0]),
        int_dy_over_y=float((dy_steps / y_left).sum()),
        int_dx_over_y=float((dx_steps / y_left).sum()),
        y_first=float(y[0]),
        y_last=float(y[-1]),
    )


def log_identity_value(path: PathGrid, sigma1: float) -> float:
    """∫ dY/Y evaluated through the Itô expansion of log Y.

    log Y_T = log Y_0 + ∫ dY/Y - (σ₁²/2) ∫ ds/Y, so the stochastic integral
    equals log(Y_T/Y_0) + (σ₁²/2) ∫ ds/Y.  Using the endpoint logs instead of
    the increment sum trades discretization error for exact telescoping, which
    converges at a different rate — useful as a cross-check of the direct sum.
    """
    if sigma1 <= 0:
        raise ValueError(f"sigma1 must be positive, got {sigma1}")
    int_inv_y = float((1.0 / path.y[:-1]).sum() * path.dt)
    return math.log(path.y[-1]) - math.log(path.y[0]) + 0.5 * sigma1**2 * int_inv_y


@dataclass(frozen=True)
class DiffusionEstimate:
    """Realized-quadratic-variation estimate of the diffusion matrix.

    rank_deficient flags an estimated matrix with (numerically) zero
    determinant: perfectly correlated increments, |ϱ̂| = 1.
    """

    s_hat: DiffusionMatrix
    sigma1_hat: float
    sigma2_hat: float
    rho_hat: float
    rank_deficient: bool


def diffusion_matrix_estimate(path: PathGrid) -> DiffusionEstimate:
    """Estimate S = [[σ₁², ϱσ₁σ₂], [ϱσ₁σ₂, σ₂²]] from increment outer products.

    Ŝ = Σ_k ΔZ_k ΔZ_kᵀ / Σ_k Y_k Δ with Z = (Y, X) and a left-endpoint
    denominator.  ϱ̂ is clipped into [-1, 1] against rounding overshoot.
    """
    dy = np.diff(path.y)
    dx = np.diff(path.x)
    denom = float(path.y[:-1].sum() * path.dt)
    s11 = float(dy @ dy) / denom
    s12 = float(dy @ dx) / denom
    s22 = float(dx @ dx) / denom
    if s11 <= 0.0 or s22 <= 0.0:
        raise ValueError("a coordinate has zero quadratic variation; diffusion matrix is degenerate")
    sigma1_hat = math.sqrt(s11)
    sigma2_hat = math.sqrt(s22)
    rho_hat = min(1.0, max(-1.0, s12 / (sigma1_hat * sigma2_hat)))
    det = s11 * s22 - s12 * s12
    return DiffusionEstimate(
        s_hat=DiffusionMatrix(s11=s11, s12=s12, s22=s22),
        sigma1_hat=sigma1_hat,
        sigma2_hat=sigma2_hat,
        rho_hat=rho_hat,
        rank_deficient=det <= 1e-12 * s11 * s22,
    )


def recover_volatility(x_path: np.ndarray, dt: float, sigma2: float, window: int) -> np.ndarray:
    """Reconstruct the volatility path from the price coordinate alone.

    Sliding-window realized variance:  entry k estimates Y at grid time k via

        Ŷ_k = Σ_{j=k}^{k+window-1} (ΔX_j)² / (σ₂² · window · dt).

    Returns an array of length len(x_path) - window.
    """
    x = np.asarray(x_path, dtype=float)
    if x.ndim != 1:
        raise ValueError("x_path must be one-dimensional")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    n_increments = x.size - 1
    if window > n_increments:
        raise ValueError(f"window {window} exceeds the {n_increments} available increments")
    squared = np.diff(x) ** 2
    csum = np.concatenate(([0.0], np.cumsum(squared)))
    window_sums = csum[window:] - csum[:-window]
    return window_sums / (sigma2**2 * window * dt)


# --- CSV path format --------------------------------------------------------

_CSV_HEADER = "t,y,x"
_GRID_RTOL = 1e-9


def save_path_csv(path: PathGrid, file: _PathArg) -> None:
    """Write a path as CSV with header ``t,y,x``, one row per grid point.

    Floats are written with repr so a load round-trips bit-exactly.
    """
    times = path.times()
    with open(file, "w", encoding="ascii", newline="\n") as handle:
        handle.write(_CSV_HEADER + "\n")
        for t, y, x in zip(times, path.y, path.x):
            handle.write(f"{float(t)!r},{float(y)!r},{float(x)!r}\n")


def load_path_csv(file: _PathArg) -> PathGrid:
    """Read a ``t,y,x`` CSV back into a path.

    Validates the header, a uniform time grid (relative tolerance 1e-9 on the
    step), strictly positive y, and at least two rows.
    """
    with open(file, "r", encoding="ascii") as handle:
        header = handle.readline().strip()
        if [c.strip() for c in header.split(",")] != _CSV_HEADER.split(","):
            raise ValueError(f"expected header {_CSV_HEADER!r}, got {header!r}")
        with warnings.catch_warnings():
            # an empty body is reported as a ValueError below, not a warning
            warnings.simplefilter("ignore", UserWarning)
            data = np.loadtxt(handle, delimiter=",", ndmin=2)
    if data.size == 0 or data.shape[0] < 2:
        raise ValueError("a path needs at least two rows")
    if data.shape[1] != 3:
        raise ValueError(f"expected 3 columns, got {data.shape[1]}")
    t = data[:, 0]
    dt_ref = (t[-1] - t[0]) / (t.size - 1)
    if not (math.isfinite(dt_ref) and dt_ref > 0):
        raise ValueError("time column must be strictly increasing")
    steps = np.diff(t)
    if np.any(np.abs(steps - dt_ref) > _GRID_RTOL * dt_ref):
        raise ValueError("time grid is not uniform (relative tolerance 1e-9)")
    return PathGrid(dt=float(dt_ref), y=data[:, 1], x=data[:, 2])
