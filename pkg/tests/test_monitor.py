import io

import numpy as np
import pytest

from llgflow import (
    GridSpec,
    NormSeries,
    ScenarioSpec,
    SolverConfig,
    check_bootstrap,
    check_decay_bound,
    check_theorem_bounds,
    evolve,
    fit_decay_exponent,
    get_workspace,
    make_initial,
    r0_series,
    spectral_gap_time,
    u_norm_series,
    weighted_norms,
)

LAM = 1.0
DELTA = 0.62
GRID = GridSpec(dimension=3, points_per_axis=32, box_length=2 * np.pi)


def make_series(times, **cols):
    return NormSeries(times=np.asarray(times, float),
                      columns={k: np.asarray(v, float) for k, v in cols.items()})


# -- NormSeries --------------------------------------------------------------------


def test_series_validation():
    with pytest.raises(ValueError):
        make_series([0.0, 0.0, 1.0], E=[1, 2, 3])
    with pytest.raises(ValueError):
        make_series([0.0, 1.0], E=[1, 2, 3])


def test_series_csv_roundtrip():
    s = make_series([0.0, 0.1, 0.2], E=[3.0, 2.0, 1.0], u_ln=[0.5, 0.4, 0.3])
    s.delta = DELTA
    buf = io.StringIO(s.to_csv_text())
    back = NormSeries.from_csv(buf)
    np.testing.assert_array_equal(back.times, s.times)
    np.testing.assert_array_equal(back["E"], s["E"])
    assert back.delta == DELTA


def test_series_csv_header_order():
    s = make_series([0.0, 0.1], E=[1, 1], h1_dev=[1, 1], ln_grad=[1, 1], linf_grad=[1, 1])
    header = s.to_csv_text().splitlines()[0]
    assert header.startswith("t,E,linf_grad,ln_grad,h1_dev")


# -- weighted norms ------------------------------------------------------------------


def synthetic_u_series(times, u_lnd, u_grad_ln):
    return NormSeries(
        times=np.asarray(times, float),
        columns={"u_lnd": np.asarray(u_lnd, float), "u_grad_ln": np.asarray(u_grad_ln, float)},
    )


def test_weighted_norms_zero_trajectory():
    t = np.linspace(0, 1, 11)
    s = synthetic_u_series(t, np.zeros(11), np.zeros(11))
    K, Kp, R = weighted_norms(s, DELTA)
    assert np.all(K == 0) and np.all(Kp == 0) and np.all(R == 0)


def test_weighted_norms_monotone_and_max():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 1, 50)
    s = synthetic_u_series(t, rng.random(50), rng.random(50))
    K, Kp, R = weighted_norms(s, DELTA)
    assert np.all(np.diff(K) >= 0) and np.all(np.diff(Kp) >= 0)
    np.testing.assert_array_equal(R, np.maximum(K, Kp))


def test_weighted_norms_delta_range():
    t = np.linspace(0, 1, 5)
    s = synthetic_u_series(t, np.ones(5), np.ones(5))
    for bad in (0.4, 1.0):
        with pytest.raises(ValueError):
            weighted_norms(s, bad)


def test_weighted_norms_delta_mismatch():
    t = np.linspace(0, 1, 5)
    s = synthetic_u_series(t, np.ones(5), np.ones(5))
    s.delta = 0.61
    with pytest.raises(ValueError):
        weighted_norms(s, 0.62)


# -- R0 ------------------------------------------------------------------------------


def test_r0_zero_initial_data():
    g = GridSpec(dimension=1, points_per_axis=32, box_length=2 * np.pi)
    u0 = np.zeros((1,) + g.shape, dtype=complex)
    r0 = r0_series(u0, np.linspace(0, 1, 5), DELTA, LAM, g)
    assert np.all(r0.R0 == 0)
    assert r0.fitted_c == 0.0


def test_r0_single_mode_matches_analytic_maximum():
    # oracle: 1-d maximization of tau^alpha e^{-lam k^2 tau} in closed form
    g = GridSpec(dimension=1, points_per_axis=16, box_length=2 * np.pi)
    ws = get_workspace(g)
    k_sq = 1.0
    u0 = np.exp(1j * ws.x[0])[None]
    t_end = 1.0
    times = np.linspace(0, t_end, 4001)
    r0 = r0_series(u0, times, DELTA, LAM, g)
    L, n = g.box_length, g.dimension
    alpha = (1 - DELTA) / 2
    tau_star = min(alpha / (LAM * k_sq), t_end)
    expected_K0 = tau_star**alpha * np.exp(-LAM * k_sq * tau_star) * L ** (DELTA)
    assert r0.K0[-1] == pytest.approx(expected_K0, rel=1e-6)
    tau_star_p = min(0.5 / (LAM * k_sq), t_end)
    expected_K0p = tau_star_p**0.5 * np.exp(-LAM * k_sq * tau_star_p) * 1.0 * L ** (n / n)
    assert r0.K0p[-1] == pytest.approx(expected_K0p, rel=1e-6)


def test_r0_fitted_c_stable_over_ensemble():
    g = GridSpec(dimension=2, points_per_axis=24, box_length=2 * np.pi)
    times = np.linspace(0, 0.5, 26)
    cs = []
    rng = np.random.default_rng(7)
    for _ in range(10):
        coeffs = np.zeros((2,) + g.shape, dtype=complex)
        for fx in (-2, -1, 1, 2):
            for fy in (-1, 0, 1):
                coeffs[:, fx % 24, fy % 24] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        ws = get_workspace(g)
        u0 = ws.ifft(coeffs) * g.num_points / np.sqrt(np.sum(np.abs(coeffs) ** 2))
        cs.append(r0_series(u0, times, DELTA, LAM, g).fitted_c)
    cs = np.array(cs)
    assert (cs.max() - cs.min()) / np.median(cs) < 0.1


# -- pipeline series over an evolved trajectory ---------------------------------------


@pytest.fixture(scope="module")
def small_run():
    sf = make_initial(ScenarioSpec(kind="random-small", kmax=1, seed=31, target_grad_ln=0.03), GRID)
    cfg = SolverConfig(lam=LAM, dt=1e-3, t_end=0.5, record_every=25, snapshot_every=1)
    traj = evolve(sf, cfg)
    series = u_norm_series(traj, DELTA)
    from llgflow.frames import extract_gauged

    u0 = extract_gauged(traj.snapshot(0), LAM).derived.u
    r0 = r0_series(u0, series.times, DELTA, LAM, GRID)
    K, Kp, R = weighted_norms(series, DELTA)
    series.add_column("K", K)
    series.add_column("Kp", Kp)
    series.add_column("R", R)
    series.add_column("R0", r0.R0)
    return traj, series, r0


def test_linear_trajectory_R_equals_R0():
    # series built from S(t) u0 samples: K, K' coincide with R0's parts
    g = GridSpec(dimension=2, points_per_axis=24, box_length=2 * np.pi)
    ws = get_workspace(g)
    rng = np.random.default_rng(3)
    coeffs = np.zeros((2,) + g.shape, dtype=complex)
    coeffs[:, 1, 2] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    coeffs[:, 3, 0] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    u0 = ws.ifft(coeffs) * g.num_points
    times = np.linspace(0, 0.5, 21)
    n = g.dimension
    u_lnd = np.zeros_like(times)
    u_grad = np.zeros_like(times)
    for i, t in enumerate(times):
        ut = ws.semigroup_apply(u0, t, LAM) if t > 0 else u0
        u_lnd[i] = ws.lp_norm(ut, n / DELTA)
        u_grad[i] = ws.lp_norm(ws.gradient(ut), n)
    s = synthetic_u_series(times, u_lnd, u_grad)
    K, Kp, R = weighted_norms(s, DELTA)
    r0 = r0_series(u0, times, DELTA, LAM, g)
    np.testing.assert_allclose(R, r0.R0, rtol=1e-12, atol=1e-300)


def test_R_vanishes_at_early_times():
    # R(t) ~ t^{(1-delta)/2} as t -> 0 (u_lnd is nearly constant early), so
    # early samples must shrink at that rate toward R(0+) = 0
    sf = make_initial(ScenarioSpec(kind="random-small", kmax=1, seed=31, target_grad_ln=0.03), GRID)
    cfg = SolverConfig(lam=LAM, dt=1e-3, t_end=0.05, record_every=1, snapshot_every=1)
    traj = evolve(sf, cfg)
    series = u_norm_series(traj, DELTA)
    _, _, R = weighted_norms(series, DELTA)
    t = series.times
    assert R[0] == 0.0
    expected_ratio = (t[1] / t[4]) ** ((1 - DELTA) / 2)
    assert R[1] / R[4] == pytest.approx(expected_ratio, rel=0.1)
    assert R[1] < R[-1]


def test_bootstrap_on_small_run(small_run):
    _, series, _ = small_run
    rep = check_bootstrap(series, DELTA)
    assert rep.ok
    assert rep.worst_margin >= 0


def test_theorem_bounds_small_run(small_run):
    _, series, _ = small_run
    rep = check_theorem_bounds(series)
    assert rep.h1_nonincreasing
    assert 0.8 < rep.c_u < 2.0
    assert rep.c_ln <= rep.c_u + 1e-12


def test_theorem_bounds_constant_trajectory():
    t = np.linspace(0, 1, 6)
    s = make_series(t, h1_dev=np.zeros(6), linf_grad=np.zeros(6), ln_grad=np.zeros(6),
                    u_ln=np.zeros(6), u_linf=np.zeros(6))
    rep = check_theorem_bounds(s)
    assert rep.h1_nonincreasing
    assert np.isnan(rep.c_u)  # reference norm is zero; constants undefined


def test_theorem_constant_matches_linear_prediction():
    # single |k| = 1 mode with spatially constant |u| = A(t) = A(0) e^{-lam t}:
    # sup_t (sqrt(t) A + A L) / (A(0) L) = max over samples of
    # e^{-lam t} (1 + sqrt(t)/L)
    sf = make_initial(ScenarioSpec(kind="linear-wave", amplitude=1e-3, wavevector=(1, 0, 0)), GRID)
    cfg = SolverConfig(lam=LAM, dt=1e-3, t_end=0.5, record_every=10, snapshot_every=2)
    traj = evolve(sf, cfg)
    series = u_norm_series(traj, DELTA)
    rep = check_theorem_bounds(series)
    times = series.times
    L = GRID.box_length
    vals = np.exp(-LAM * times) * (1.0 + np.sqrt(times) / L)
    assert rep.c_u == pytest.approx(np.max(vals), rel=0.02)


# -- decay fits -----------------------------------------------------------------------


def test_fit_decay_exact_power_law():
    t = np.linspace(0.05, 2.0, 60)
    s = make_series(t, linf_dev=2.7 * t ** (-1.0 / 6.0))
    fit = fit_decay_exponent(s, "linf_dev", (0.1, 1.8))
    assert fit.exponent == pytest.approx(-1.0 / 6.0, abs=1e-6)
    assert fit.constant == pytest.approx(2.7, rel=1e-6)
    assert fit.residual < 1e-10


def test_fit_decay_flags_exponential_data():
    t = np.linspace(0.05, 2.0, 60)
    s = make_series(t, linf_dev=np.exp(-3.0 * t))
    fit = fit_decay_exponent(s, "linf_dev", (0.1, 1.8))
    assert fit.residual > 0.05  # power law is a bad model for exponentials


def test_fit_decay_validation():
    t = np.linspace(0.05, 2.0, 10)
    s = make_series(t, linf_dev=np.ones(10))
    with pytest.raises(ValueError):
        fit_decay_exponent(s, "linf_dev", (1.8, 0.1))
    s2 = make_series(t, linf_dev=np.zeros(10))
    with pytest.raises(ValueError):
        fit_decay_exponent(s2, "linf_dev", (0.1, 1.8))


def test_decay_bound_enforces_gap_time():
    t_gap = spectral_gap_time(GRID, LAM)
    assert t_gap == pytest.approx(1.0)
    t = np.linspace(0.05, 3.0, 40)
    s = make_series(t, linf_dev=t ** (-0.5))
    with pytest.raises(ValueError):
        check_decay_bound(s, "linf_dev", (0.1, 2.0), GRID, LAM)


def test_decay_bound_small_run(small_run):
    _, series, _ = small_run
    rep = check_decay_bound(series, "linf_dev", (0.1, 0.5), GRID, LAM)
    assert rep.target_exponent == pytest.approx(-1.0 / 6.0)
    assert rep.exponent_ok
    assert rep.bound_constant > 0


def test_monitor_outputs_deterministic(small_run):
    traj, _, _ = small_run
    s1 = u_norm_series(traj, DELTA)
    s2 = u_norm_series(traj, DELTA)
    assert s1.to_csv_text() == s2.to_csv_text()
