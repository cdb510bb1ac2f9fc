"""Tests for hestonlab.model: parameters, moments, exact sampling, companions."""

import math

import numpy as np
import pytest
from scipy import special as spspecial
from scipy import stats as spstats

from hestonlab import (
    Criticality,
    ModelParams,
    PathGrid,
    RegimeError,
    cir_transition_sample,
    classify,
    mean_vector,
    simulate_critical_companion,
    simulate_heston_path,
    simulate_supercritical_companion,
    stationary_moment,
)
from hestonlab.model import DiffusionMatrix, _cir_step, _transition_constants

from oracles import exact_cir_variance

# Frozen output of tests/oracles.py::euler_cir_variance at its defaults
# (a=2, b=1, sigma1=1, y0=1, t=1, dt=1e-4, n_paths=1e5, seed=20250811).
EULER_VAR = 0.6352284828889303
EULER_VAR_SE = 3.714e-3


def _params(**kw):
    base = dict(
        a=2.0, b=1.0, alpha=0.5, beta=1.0, sigma1=1.0, sigma2=1.0, rho=-0.5, y0=1.0
    )
    base.update(kw)
    return ModelParams(**base)


# --- parameters and regime classification ----------------------------------


def test_params_defaults_and_theta():
    p = _params()
    assert p.x0 == 0.0
    assert np.array_equal(p.theta, np.array([2.0, 1.0, 0.5, 1.0]))


@pytest.mark.parametrize(
    "bad",
    [
        dict(a=0.0),
        dict(a=-1.0),
        dict(sigma1=0.0),
        dict(sigma1=-0.3),
        dict(sigma2=0.0),
        dict(sigma2=-2.0),
        dict(rho=1.0),
        dict(rho=-1.0),
        dict(rho=1.5),
        dict(y0=0.0),
        dict(y0=-0.1),
        dict(a=float("nan")),
        dict(y0=float("inf")),
        dict(b=float("nan")),
    ],
)
def test_params_validation_rejects_bad_values(bad):
    with pytest.raises(ValueError):
        _params(**bad)


def test_feller_strict_boundary():
    assert _params(a=2.0, sigma1=1.0).feller_strict
    assert _params(a=0.5, sigma1=1.0).feller_strict  # boundary a = sigma1^2/2
    assert not _params(a=0.49, sigma1=1.0).feller_strict


def test_diffusion_matrix_entries():
    s = _params(sigma1=2.0, sigma2=3.0, rho=0.5).diffusion_matrix()
    assert s.s11 == 4.0
    assert s.s12 == 3.0
    assert s.s22 == 9.0
    assert s.det == pytest.approx(27.0, rel=1e-14)
    assert s.is_positive_definite
    assert np.array_equal(s.as_array(), np.array([[4.0, 3.0], [3.0, 9.0]]))


def test_diffusion_matrix_rejects_indefinite():
    with pytest.raises(ValueError):
        DiffusionMatrix(s11=1.0, s12=1.1, s22=1.0)
    with pytest.raises(ValueError):
        DiffusionMatrix(s11=-1.0, s12=0.0, s22=1.0)
    # zero determinant is representable (perfectly correlated increments),
    # just not positive definite
    assert not DiffusionMatrix(s11=1.0, s12=1.0, s22=1.0).is_positive_definite


def test_classify_examples():
    assert classify(_params(b=1.0)) is Criticality.SUBCRITICAL
    assert classify(_params(b=0.0)) is Criticality.CRITICAL
    assert classify(_params(b=-0.5)) is Criticality.SUPERCRITICAL
    assert str(Criticality.CRITICAL) == "critical"


def test_classify_depends_only_on_sign():
    for b in (1e-300, 0.25, 7.0, -1e-300, -3.0):
        assert classify(_params(b=b)) is classify(_params(b=2 * b))
    # exact comparison against zero: the tiniest positive b is subcritical
    assert classify(_params(b=5e-324)) is Criticality.SUBCRITICAL


# --- closed-form moments ----------------------------------------------------


def test_mean_vector_subcritical_value():
    p = _params(a=2.0, b=1.0, alpha=0.5, beta=1.0, y0=1.0, x0=0.25)
    mean_y, mean_x = mean_vector(p, 1.0)
    assert mean_y == pytest.approx(2.0 - math.exp(-1.0), rel=1e-14)
    # cross-check E(X) against the b != 0 formula spelled out by hand
    i1 = 1.0 - math.exp(-1.0)
    i2 = 1.0 - i1
    expected_x = 0.25 - 1.0 * 1.0 * i1 + 0.5 * 1.0 - 1.0 * 2.0 * i2
    assert mean_x == pytest.approx(expected_x, rel=1e-12)


def test_mean_vector_at_time_zero():
    p = _params(y0=0.7, x0=-1.25)
    assert mean_vector(p, 0.0) == (0.7, -1.25)


def test_mean_vector_critical_branch():
    # the y0 -> 0 limit of the b = 0 branch: E(Y_t) = a t, E(X_t) = -beta a t^2/2
    p = _params(a=1.0, b=0.0, alpha=0.0, beta=1.0, y0=1e-12, x0=0.0)
    mean_y, mean_x = mean_vector(p, 2.0)
    assert mean_y == pytest.approx(2.0, abs=1e-9)
    assert mean_x == pytest.approx(-2.0, abs=1e-9)


def test_mean_vector_continuous_in_reversion_rate():
    # the b-derivatives at b = 0 are -(y0 t + a t^2/2) for EY and
    # beta(y0 t^2/2 + a t^3/6) for EX, so at eps = 1e-8 and t = 10 these
    # parameters sit at gaps 6.0e-7 and 8.7e-7 — inside the 1e-6 band with
    # deterministic margin
    eps = 1e-8
    p0 = _params(a=1.0, b=0.0, alpha=0.3, beta=0.4, y0=1.0, x0=0.4)
    for t in (0.5, 1.0, 5.0, 10.0):
        ref = mean_vector(p0, t)
        for signed in (eps, -eps):
            near = mean_vector(_params(a=1.0, b=signed, alpha=0.3, beta=0.4, y0=1.0, x0=0.4), t)
            assert abs(near[0] - ref[0]) <= 1e-6
            assert abs(near[1] - ref[1]) <= 1e-6


def test_mean_vector_rejects_negative_time():
    with pytest.raises(ValueError):
        mean_vector(_params(), -0.1)


def test_stationary_moment_examples():
    assert stationary_moment(_params(a=2.0, b=4.0, sigma1=1.0), 1.0) == pytest.approx(0.5, rel=1e-12)
    assert stationary_moment(_params(a=1.0, b=1.0, sigma1=1.0), -1.0) == pytest.approx(2.0, rel=1e-12)
    assert stationary_moment(_params(a=1.0, b=1.0, sigma1=1.0), 2.0) == pytest.approx(1.5, rel=1e-12)


@pytest.mark.parametrize("a,b,sigma1", [(1.0, 1.0, 1.0), (2.0, 0.5, 1.3), (0.8, 3.0, 1.1)])
def test_stationary_moment_inverse_identity(a, b, sigma1):
    # E(Y)·E(1/Y) - 1 = sigma1^2/(2a - sigma1^2) — the quantity that sizes the
    # subcritical limit covariance
    p = _params(a=a, b=b, sigma1=sigma1)
    lhs = stationary_moment(p, 1.0) * stationary_moment(p, -1.0) - 1.0
    rhs = sigma1**2 / (2 * a - sigma1**2)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert lhs > 0


def test_stationary_moment_errors():
    with pytest.raises(RegimeError):
        stationary_moment(_params(b=0.0), 1.0)
    with pytest.raises(RegimeError):
        stationary_moment(_params(b=-1.0), 1.0)
    with pytest.raises(ValueError):
        stationary_moment(_params(a=1.0, sigma1=1.0, b=1.0), -2.0)
    with pytest.raises(ValueError):
        stationary_moment(_params(a=1.0, sigma1=1.0, b=1.0), -2.5)


# --- exact transition sampling ----------------------------------------------


def test_transition_mean_matches_closed_form():
    p = _params(a=2.0, b=1.0, sigma1=1.0)
    rng = np.random.default_rng(20250811)
    draws = np.array([cir_transition_sample(p, 1.0, 1.0, rng) for _ in range(10**5)])
    target = 2.0 - math.exp(-1.0)
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - target) < 3 * se


def test_transition_variance_matches_euler_oracle():
    # dual route: frozen full-truncation Euler value vs the exact sampler,
    # with the textbook closed form tying the two together
    assert abs(exact_cir_variance(2.0, 1.0, 1.0, 1.0, 1.0) - EULER_VAR) < 3 * EULER_VAR_SE
    p = _params(a=2.0, b=1.0, sigma1=1.0)
    rng = np.random.default_rng(42)
    draws = np.array([cir_transition_sample(p, 1.0, 1.0, rng) for _ in range(10**5)])
    var = draws.var(ddof=1)
    centered = draws - draws.mean()
    se = math.sqrt(max(float(np.mean(centered**4)) - var**2, 0.0) / draws.size)
    assert abs(var - EULER_VAR) < 3 * math.sqrt(se**2 + EULER_VAR_SE**2)


def test_transition_short_step_continuity():
    rng = np.random.default_rng(3)
    draw = cir_transition_sample(_params(), 1.0, 1e-8, rng)
    assert abs(draw - 1.0) < 1e-3


def test_transition_mean_critical_and_supercritical():
    rng = np.random.default_rng(11)
    pc = _params(a=2.0, b=0.0)
    draws = np.array([cir_transition_sample(pc, 1.0, 0.25, rng) for _ in range(20000)])
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - 1.5) < 3 * se  # y0 + a*dt

    ps = _params(a=1.0, b=-1.0)
    target = math.exp(1.0) * 1.0 + 1.0 * (math.exp(1.0) - 1.0)
    draws = np.array([cir_transition_sample(ps, 1.0, 1.0, rng) for _ in range(20000)])
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - target) < 3 * se


def test_transition_positive_below_feller():
    # a = 0.01 << sigma1^2/2: the continuous process hits 0, the exact
    # transition draws must still come back strictly positive
    p = _params(a=0.01, b=1.0, sigma1=1.0)
    rng = np.random.default_rng(5)
    y = 1.0
    lo = float("inf")
    for _ in range(5000):
        y = cir_transition_sample(p, y, 0.01, rng)
        lo = min(lo, y)
    assert lo > 0.0


def test_transition_chapman_kolmogorov():
    # two exact half-steps must match one exact full step in law
    rng = np.random.default_rng(20250811)
    n = 10**5
    sc_h, dec_h, hdf = _transition_constants(2.0, 1.0, 1.0, 0.5)
    sc_f, dec_f, _ = _transition_constants(2.0, 1.0, 1.0, 1.0)
    two = np.array(
        [_cir_step(sc_h, dec_h, hdf, _cir_step(sc_h, dec_h, hdf, 1.0, rng), rng) for _ in range(n)]
    )
    one = np.array([_cir_step(sc_f, dec_f, hdf, 1.0, rng) for _ in range(n)])
    assert spstats.ks_2samp(two, one).pvalue > 0.01


def test_transition_rejects_bad_inputs():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        cir_transition_sample(_params(), 0.0, 1.0, rng)
    with pytest.raises(ValueError):
        cir_transition_sample(_params(), -1.0, 1.0, rng)
    with pytest.raises(ValueError):
        cir_transition_sample(_params(), 1.0, 0.0, rng)
    with pytest.raises(ValueError):
        cir_transition_sample(_params(), 1.0, -0.5, rng)


# --- PathGrid ----------------------------------------------------------------


def test_path_grid_properties():
    grid = PathGrid(dt=0.5, y=[1, 2, 3], x=[0, -1, 4])
    assert grid.n_steps == 2
    assert grid.t_end == 1.0
    assert np.array_equal(grid.times(), np.array([0.0, 0.5, 1.0]))
    assert grid.y.dtype == np.float64
    assert grid.x.dtype == np.float64


@pytest.mark.parametrize(
    "kw",
    [
        dict(dt=0.0, y=[1.0, 1.0], x=[0.0, 0.0]),
        dict(dt=-0.1, y=[1.0, 1.0], x=[0.0, 0.0]),
        dict(dt=float("nan"), y=[1.0, 1.0], x=[0.0, 0.0]),
        dict(dt=0.1, y=[1.0, 1.0], x=[0.0, 0.0, 0.0]),
        dict(dt=0.1, y=[1.0], x=[0.0]),
        dict(dt=0.1, y=[1.0, 0.0], x=[0.0, 0.0]),
        dict(dt=0.1, y=[1.0, -2.0], x=[0.0, 0.0]),
        dict(dt=0.1, y=[1.0, float("nan")], x=[0.0, 0.0]),
        dict(dt=0.1, y=[1.0, 1.0], x=[0.0, float("inf")]),
        dict(dt=0.1, y=[[1.0, 1.0]], x=[[0.0, 0.0]]),
    ],
)
def test_path_grid_validation(kw):
    with pytest.raises(ValueError):
        PathGrid(**kw)


# --- full path simulation ----------------------------------------------------


def test_simulated_path_shapes_and_determinism():
    p = _params(y0=0.8, x0=-0.3)
    path = simulate_heston_path(p, 50, 0.02, np.random.default_rng(123))
    assert path.y.shape == (51,)
    assert path.x.shape == (51,)
    assert path.y[0] == 0.8
    assert path.x[0] == -0.3
    assert path.t_end == pytest.approx(1.0)
    again = simulate_heston_path(p, 50, 0.02, np.random.default_rng(123))
    assert np.array_equal(path.y, again.y)
    assert np.array_equal(path.x, again.x)
    other = simulate_heston_path(p, 50, 0.02, np.random.default_rng(124))
    assert not np.array_equal(path.y, other.y)


def test_path_mean_matches_closed_form():
    # sample mean of (Y_T, X_T) against mean_vector at T=5; the X update's
    # left-point drift and recycled Y innovation leave an O(dt) bias of a
    # few 1e-3 at dt=0.01, well under the Monte Carlo band
    p = _params(a=2.0, b=1.0, alpha=0.5, beta=1.0, sigma1=1.0, sigma2=1.0, rho=-0.5)
    rng = np.random.default_rng(20250811)
    n_paths = 4000
    y_end = np.empty(n_paths)
    x_end = np.empty(n_paths)
    for i in range(n_paths):
        path = simulate_heston_path(p, 500, 0.01, rng)
        y_end[i] = path.y[-1]
        x_end[i] = path.x[-1]
    target_y, target_x = mean_vector(p, 5.0)
    se_y = y_end.std(ddof=1) / math.sqrt(n_paths)
    se_x = x_end.std(ddof=1) / math.sqrt(n_paths)
    assert abs(y_end.mean() - target_y) < 3 * se_y
    assert abs(x_end.mean() - target_x) < 3 * se_x + 0.01


def test_uncorrelated_noise_increments_standard_normal():
    # with rho = 0 the X increments given the Y path are exactly Gaussian:
    # standardized residuals must pass a KS test against N(0, 1)
    p = _params(a=2.0, b=1.0, alpha=0.3, beta=0.8, sigma1=1.0, sigma2=2.0, rho=0.0)
    path = simulate_heston_path(p, 5000, 1e-3, np.random.default_rng(17))
    y_left = path.y[:-1]
    resid = (np.diff(path.x) - (0.3 - 0.8 * y_left) * path.dt) / (2.0 * np.sqrt(y_left * path.dt))
    assert spstats.kstest(resid, "norm").pvalue > 0.01


def test_quadratic_variation_identifies_sigma2():
    # realized <X>_T / int Y ds -> sigma2^2; a single path at dt=1e-3, T=10
    # still carries ~1.4% chi-square noise, so average the per-path ratio
    # over 20 independent paths to put the 1% tolerance beyond luck
    p = _params(a=2.0, b=1.0, alpha=0.3, beta=0.8, sigma1=1.0, sigma2=2.0, rho=-0.5)
    rng = np.random.default_rng(20250811)
    ratios = []
    for _ in range(20):
        path = simulate_heston_path(p, 10000, 1e-3, rng)
        qv = float(np.sum(np.diff(path.x) ** 2))
        int_y = float(np.sum(path.y[:-1]) * path.dt)
        ratios.append(qv / int_y)
    assert abs(np.mean(ratios) / 2.0**2 - 1.0) < 0.01


@pytest.mark.parametrize("b", [2.0, 0.0, -2.0])
def test_simulated_paths_positive_across_regimes(b):
    # a = 0.3 is far below the Feller boundary; horizon 5 keeps the
    # supercritical branch inside the exact sampler's Poisson range
    p = _params(a=0.3, b=b, sigma1=1.0)
    path = simulate_heston_path(p, 500, 0.01, np.random.default_rng(31))
    assert path.y.min() > 0.0


def test_simulate_rejects_bad_grid():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        simulate_heston_path(_params(), 0, 0.01, rng)
    with pytest.raises(ValueError):
        simulate_heston_path(_params(), 100, 0.0, rng)


# --- companion processes -----------------------------------------------------


def test_critical_companion_means():
    # zero-start companion on [0,1]: E(Y_1) = a and E(X_1) = alpha hold for
    # any step count because both updates are exact in the mean
    p = _params(a=1.0, b=0.0, alpha=0.7, beta=0.4, sigma1=1.0, sigma2=1.0, rho=0.3)
    rng = np.random.default_rng(7)
    draws = np.array([simulate_critical_companion(p, 16, rng) for _ in range(20000)])
    se_y = draws[:, 0].std(ddof=1) / math.sqrt(draws.shape[0])
    se_x = draws[:, 2].std(ddof=1) / math.sqrt(draws.shape[0])
    assert abs(draws[:, 0].mean() - 1.0) < 3 * se_y
    assert abs(draws[:, 2].mean() - 0.7) < 3 * se_x


def test_critical_companion_integral_mean():
    # E int_0^1 Y = a/2; the left-point sum at n steps has exact discrete
    # mean a(n-1)/(2n), so test against that value, noise-only tolerance
    p = _params(a=1.0, b=0.0, alpha=0.7, beta=0.4, sigma1=1.0, sigma2=1.0, rho=0.3)
    rng = np.random.default_rng(8)
    n_steps = 400
    ints = np.array([simulate_critical_companion(p, n_steps, rng)[1] for _ in range(4000)])
    target = 1.0 * (n_steps - 1) / (2 * n_steps)
    se = ints.std(ddof=1) / math.sqrt(ints.size)
    assert abs(ints.mean() - target) < 3 * se


def test_critical_companion_domain_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        simulate_critical_companion(_params(a=0.5, b=0.0, sigma1=1.0), 10, rng)
    with pytest.raises(ValueError):
        simulate_critical_companion(_params(a=1.0, b=0.0, sigma1=1.0), 0, rng)


def test_supercritical_companion_means():
    # companion runs b = 0 dynamics from y0 over horizon -1/b = 1:
    # E(Y_end) = y0 - a/b = 2 exactly; the left-point integral has exact
    # discrete mean 1.5 - 1/(2n); for the inverse integral, Y_t is
    # (t/4)·chi2'(df=4, nc=4/t) here, E(1/chi2'_4(nc)) = (1-e^{-nc/2})/nc
    # gives E(1/Y_t) = 1 - e^{-2/t} and integrating over [0, 1] yields
    # 1 - e^{-2} + 2·E1(2)
    p = _params(a=1.0, b=-1.0, sigma1=1.0, y0=1.0)
    rng = np.random.default_rng(9)
    n_steps = 400
    draws = np.array([simulate_supercritical_companion(p, n_steps, rng) for _ in range(4000)])
    assert np.all(draws > 0.0)
    mean_inv = 1.0 - math.exp(-2.0) + 2.0 * spspecial.exp1(2.0)
    for col, target in [(0, 2.0), (1, 1.5 - 1.0 / (2 * n_steps)), (2, mean_inv)]:
        se = draws[:, col].std(ddof=1) / math.sqrt(draws.shape[0])
        assert abs(draws[:, col].mean() - target) < 3 * se


def test_supercritical_companion_concentrates_at_large_drift():
    # law of large numbers in a: relative spread sqrt(y0 + a/2)/(y0 + a),
    # below 5% once a >= 800; the end value is exact in law at any step count
    rng = np.random.default_rng(10)
    p_large = _params(a=800.0, b=-1.0, sigma1=1.0, y0=1.0)
    ys = np.array([simulate_supercritical_companion(p_large, 8, rng)[0] for _ in range(2000)])
    se = ys.std(ddof=1) / math.sqrt(ys.size)
    assert abs(ys.mean() - 801.0) < 3 * se
    assert ys.std(ddof=1) / ys.mean() < 0.05

    p_mid = _params(a=50.0, b=-1.0, sigma1=1.0, y0=1.0)
    ys = np.array([simulate_supercritical_companion(p_mid, 8, rng)[0] for _ in range(2000)])
    se = ys.std(ddof=1) / math.sqrt(ys.size)
    assert abs(ys.mean() - 51.0) < 3 * se


def test_supercritical_companion_regime_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(RegimeError):
        simulate_supercritical_companion(_params(b=0.0), 10, rng)
    with pytest.raises(RegimeError):
        simulate_supercritical_companion(_params(b=1.0), 10, rng)
    with pytest.raises(ValueError):
        simulate_supercritical_companion(_params(b=-1.0), 0, rng)
