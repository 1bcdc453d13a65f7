import numpy as np
import pytest

from conftest import random_state, small_model
from qzeno.dynamics import Trajectory, init_state, integrate
from qzeno.errors import ModelInconsistencyError
from qzeno.model import ModeGrid, build_model
from qzeno.observables import (ObservableSeries, decay_rate_ratio, default_fit_window,
                               detector_occupation, fit_decay_rate, free_decay_rate,
                               intensity_profile, plateau, spatial_grid, transient_time)
from qzeno.scenario import ScenarioConfig, compute_intensity_map, preset, simulate

GAMMA = 0.02


def _fake_trajectory(times, excited):
    z = np.zeros_like(times)
    return Trajectory(times, excited, z, z, np.ones_like(times), times[[0, -1]], (),
                      float(times[1] - times[0]), 1, None)


# -- intensity ---------------------------------------------------------------------
def test_parseval(rng):
    grid = ModeGrid(0, 2, 64)
    m = build_model(grid, ModeGrid(0, 2, 2))
    for origin in (0.0, 13.7, -40.0):
        s = random_state(m, rng)
        x, inten = intensity_profile(s, grid, origin=origin)
        dx = x[1] - x[0]
        assert np.sum(inten) * dx == pytest.approx(np.sum(np.abs(s.b) ** 2), rel=1e-12)
        assert np.all(inten >= 0)


def test_intensity_of_initial_state_vanishes():
    m = small_model(8, 2)
    _, inten = intensity_profile(init_state(m), m.photon_grid)
    assert np.all(inten == 0)


def test_intensity_rejects_other_resolution():
    m = small_model(8, 2)
    with pytest.raises(ValueError):
        intensity_profile(init_state(m), m.photon_grid, n_x=16)


def test_spatial_grid_spans_one_period():
    grid = ModeGrid(0, 2, 100)
    x = spatial_grid(grid)
    assert x.size == 100
    assert x[-1] - x[0] + (x[1] - x[0]) == pytest.approx(2 * np.pi / grid.spacing)


def test_single_mode_packet_is_centred_on_origin():
    grid = ModeGrid(0, 2, 100)
    m = build_model(grid, ModeGrid(0, 2, 1))
    b = np.full(100, 0.1 + 0j)
    s = init_state(m).__class__(0j, b, np.zeros((100, 1), complex))
    x, inten = intensity_profile(s, grid)
    assert x[np.argmax(inten)] == pytest.approx(0.0, abs=1e-12)


# -- decay-rate ratio ------------------------------------------------------------------
def test_ratio_starts_at_zero():
    m = small_model()
    r = decay_rate_ratio(integrate(m, 5.0, 0.01, store_states=False), 0.2)
    assert r.values[0] == 0.0
    assert r.at(0.0) == 0.0


def test_ratio_of_frozen_atom_is_zero():
    t = np.linspace(0, 10, 101)
    r = decay_rate_ratio(_fake_trajectory(t, np.ones_like(t)), GAMMA)
    np.testing.assert_array_equal(r.values, 0.0)


def test_ratio_of_exact_exponential():
    t = np.linspace(0, 100, 10001)
    r = decay_rate_ratio(_fake_trajectory(t, np.exp(-GAMMA * t)), GAMMA)
    np.testing.assert_allclose(r.values[1:], 1.0, rtol=1e-9)


def test_ratio_truncates_at_vanishing_population():
    t = np.linspace(0, 10, 101)
    p = np.exp(-5.0 * t)
    r = decay_rate_ratio(_fake_trajectory(t, p), 5.0)
    cut = np.flatnonzero(p < 1e-12)[0]
    assert len(r) == cut
    assert r.times[-1] < t[cut]


def test_series_requires_increasing_times():
    with pytest.raises(ValueError):
        ObservableSeries(np.array([0.0, 1.0, 1.0]), np.zeros(3))


def test_transient_time_interpolates():
    s = ObservableSeries(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.4, 0.8]))
    assert transient_time(s) == pytest.approx(1.25)
    assert transient_time(ObservableSeries(np.arange(3.0), np.zeros(3))) == np.inf


def test_plateau_window():
    t = np.linspace(0, 100, 1001)
    s = ObservableSeries(t, np.where((t >= 30) & (t <= 60), 0.4, 9.0))
    assert plateau(s, 100.0) == pytest.approx(0.4)


def test_fit_recovers_rate():
    t = np.linspace(0, 200, 2001)
    assert fit_decay_rate(t, 3 * np.exp(-0.013 * t), (20, 150)) == pytest.approx(0.013)


# -- free decay -----------------------------------------------------------------------
@pytest.fixture(scope="module")
def free_model():
    return build_model(ModeGrid(0, 2, 100), gamma_free=GAMMA)


def test_free_decay_rate(free_model):
    res = free_decay_rate(free_model)
    assert res.analytic == pytest.approx(0.02, rel=1e-12)
    assert 0.0196 <= res.fitted <= 0.0204


def test_free_decay_rate_stable_under_refinement(free_model):
    fine = build_model(ModeGrid(0, 2, 200), gamma_free=GAMMA)
    a = free_decay_rate(free_model).fitted
    b = free_decay_rate(fine).fitted
    assert abs(b - a) / a < 0.005


def test_coarse_grid_is_inconsistent():
    coarse = build_model(ModeGrid(0, 2, 10), gamma_free=GAMMA)
    with pytest.raises(ModelInconsistencyError):
        free_decay_rate(coarse, window=(5.0, 60.0))


def test_default_fit_window():
    assert default_fit_window(GAMMA, 2 * np.pi / 0.02) == pytest.approx((25.0, 188.4956), rel=1e-6)


@pytest.mark.slow
def test_free_decay_preset_ratio_is_one(runs):
    res = runs("free-decay")
    lo, hi = default_fit_window(GAMMA, res.config.recurrence_time)
    mask = (res.ratio.times >= lo) & (res.ratio.times <= hi)
    np.testing.assert_allclose(res.ratio.values[mask], 1.0, atol=0.03)
    assert np.all(res.trajectory.detector == 0)


def test_unit_consistency_under_rescaling():
    """Halving every frequency and doubling every time gives the same r(gamma t)."""
    def cfg(g, omega, dt):
        return ScenarioConfig(name=f"g{g}", gamma_free=g, omega_atom=omega,
                              k_max=2 * omega, w_max=2 * omega, n_k=50, n_w=50,
                              eta_peak=10 * g, delta_bw=100 * g / (2 * np.pi),
                              dt=dt, t_end=2.0 / g, sample_stride=1)
    a = simulate(cfg(0.02, 1.0, 0.01))
    b = simulate(cfg(0.01, 0.5, 0.02))
    np.testing.assert_allclose(a.ratio.times * 0.02, b.ratio.times * 0.01)
    np.testing.assert_allclose(a.ratio.values, b.ratio.values, atol=0.02)


# -- bookkeeping and detector occupation ------------------------------------------------
def test_detector_occupation_of_initial_state():
    total, per_k = detector_occupation(init_state(small_model()))
    assert total == 0 and np.all(per_k == 0)


def test_excitation_bookkeeping():
    m = small_model(6, 4)
    traj = integrate(m, 20.0, 0.005, sample_stride=400)
    for s in traj.states:
        total, per_k = detector_occupation(s)
        assert per_k.shape == (6,)
        assert abs(1 - s.excited_population - s.photon_population - total) < 1e-8


@pytest.mark.slow
def test_bookkeeping_and_monotone_absorption_overlapping_detector(runs):
    traj = runs("fig3-a").trajectory
    np.testing.assert_allclose(traj.excited + traj.photon + traj.detector, 1.0, atol=1e-8)
    late = traj.times > 3 / GAMMA
    assert np.all(np.diff(traj.detector[late]) >= -1e-6)


@pytest.mark.slow
def test_far_detector_causality(runs):
    res, imap = runs.intensity("fig3-d")
    x_D = res.config.x_D
    early = res.trajectory.times < 0.8 * x_D
    assert np.max(res.trajectory.detector[early]) < 1e-3


@pytest.mark.slow
def test_light_cone_towards_the_detector():
    """Mirrored geometry: the photon heads into the detector. Nothing arrives
    before the wavefront reaches the coupling envelope, taken as one FWHM
    from the detector centre."""
    cfg = preset("fig3-d").replace(name="mirrored", x_D=-66.0, t_end=90.0)
    res, imap = compute_intensity_map(cfg, 46)
    traj = res.trajectory
    reach = abs(cfg.x_D) - cfg.detector_fwhm
    assert np.max(traj.detector[traj.times < reach]) < 1e-3
    # absorbed: most of the emitted light ends up in the detector
    assert traj.detector[-1] > 0.5 * (1 - traj.excited[-1])
    # peak follows x = t until it reaches the detector
    dx = imap.x[1] - imap.x[0]
    sel = (imap.t > 5) & (imap.t < reach)
    assert np.all(np.abs(imap.peak_positions()[sel] - imap.t[sel]) <= 2 * dx)
