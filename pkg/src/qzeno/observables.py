"""Measured quantities: populations, normalized decay rate, photon intensity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .dynamics import SystemState, Trajectory, integrate
from .errors import ModelInconsistencyError
from .model import TWOPI, ModeGrid, SystemModel, detector_response, recurrence_time

#: Averaging window for the decay-rate plateau, in units of the recurrence time.
PLATEAU_WINDOW = (0.3, 0.6)
#: Boxcar width, in integrator steps, applied to the log-derivative.
SMOOTHING_STEPS = 5
#: Populations below this make the log-derivative meaningless.
MIN_POPULATION = 1e-12


@dataclass(frozen=True)
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = ""
    units: str = ""

    def __post_init__(self):
        if np.shape(self.times) != np.shape(self.values):
            raise ValueError("times and values must have the same length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def at(self, t: float) -> float:
        return float(self.values[np.argmin(np.abs(self.times - t))])

    def window_mean(self, t0: float, t1: float) -> float:
        mask = (self.times >= t0) & (self.times <= t1)
        if not mask.any():
            raise ValueError(f"no samples in [{t0:g}, {t1:g}]")
        return float(self.values[mask].mean())


def excited_population(traj: Trajectory) -> ObservableSeries:
    return ObservableSeries(traj.times, traj.excited, "P_e", "")


def decay_rate_ratio(traj: Trajectory, gamma_free: float,
                     smoothing: int = SMOOTHING_STEPS) -> ObservableSeries:
    """``-d ln P_e/dt`` over ``gamma_free`` from the per-step population.

    Central differences, boxcar-smoothed over ``smoothing`` steps. The series
    stops where ``P_e`` falls below 1e-12. ``d|alpha|^2/dt`` vanishes exactly
    at t=0, so the first value is set to 0.
    """
    p = traj.excited
    low = np.flatnonzero(p < MIN_POPULATION)
    n = low[0] if low.size else p.size
    if n < 3:
        raise ValueError("population series too short for a derivative")
    t = traj.times[:n]
    rate = -np.gradient(np.log(p[:n]), t)
    if smoothing > 1:
        rate = uniform_filter1d(rate, smoothing, mode="nearest")
    r = rate / gamma_free
    r[0] = 0.0
    return ObservableSeries(t, r, "ratio", "")


def plateau(ratio: ObservableSeries, t_rec: float, window=PLATEAU_WINDOW) -> float:
    """Mean of the normalized rate over ``window`` (fractions of ``t_rec``)."""
    return ratio.window_mean(window[0] * t_rec, window[1] * t_rec)


def transient_time(ratio: ObservableSeries, level: float = 0.5) -> float:
    """First time the normalized rate reaches ``level`` (band-limited rise)."""
    hit = np.flatnonzero(ratio.values >= level)
    if not hit.size:
        return float("inf")
    i = hit[0]
    if i == 0:
        return float(ratio.times[0])
    t0, t1 = ratio.times[i - 1], ratio.times[i]
    v0, v1 = ratio.values[i - 1], ratio.values[i]
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0))


def fit_decay_rate(times: np.ndarray, population: np.ndarray, window) -> float:
    """Log-linear least-squares rate of ``population`` over ``window``."""
    mask = (times >= window[0]) & (times <= window[1]) & (population > MIN_POPULATION)
    if mask.sum() < 2:
        raise ValueError(f"no usable samples in fit window {window}")
    slope, _ = np.polyfit(times[mask], np.log(population[mask]), 1)
    return float(-slope)


def default_fit_window(gamma_free: float, t_rec: float):
    return (0.5 / gamma_free, 0.6 * t_rec)


@dataclass(frozen=True)
class FreeDecayRate:
    analytic: float
    fitted: float

    @property
    def relative_error(self) -> float:
        return abs(self.fitted - self.analytic) / self.analytic


def free_decay_rate(model: SystemModel, dt: float = 0.01, window=None,
                    tolerance: float = 0.05) -> FreeDecayRate:
    """Golden-rule rate and the rate fitted to an undetected companion run.

    The companion run switches the detector off and keeps a single omega mode,
    which is exact because the detector branch then decouples.
    """
    if not model.coupling.is_flat:
        raise ValueError("free_decay_rate needs a flat photon coupling")
    grid = model.photon_grid
    analytic = TWOPI * float(np.abs(model.coupling.xi[0]) ** 2) / grid.spacing
    t_rec = recurrence_time(grid)
    window = window or default_fit_window(analytic, t_rec)
    one = ModeGrid(model.omega_grid.k_min, model.omega_grid.k_max, 1)
    companion = model.replace(
        omega_grid=one,
        response=detector_response(grid, 0.0, model.response.delta_bw,
                                   model.response.center, model.response.sharpness))
    traj = integrate(companion, window[1], dt, store_states=False)
    fitted = fit_decay_rate(traj.times, traj.excited, window)
    result = FreeDecayRate(analytic, fitted)
    if result.relative_error > tolerance:
        raise ModelInconsistencyError(
            f"fitted free decay rate {fitted:.5g} differs from golden rule "
            f"{analytic:.5g} by {100 * result.relative_error:.1f}%")
    return result


def spatial_grid(grid: ModeGrid, origin: float = 0.0) -> np.ndarray:
    """Discrete-Fourier conjugate of ``grid``, centred on ``origin``."""
    period = TWOPI / grid.spacing
    dx = period / grid.n_modes
    return -0.5 * period + dx * np.arange(grid.n_modes)


def intensity_profile(state: SystemState, grid: ModeGrid, n_x: int | None = None,
                      origin: float = 0.0):
    """Photon intensity ``|sum_k b_k exp(ikx)|^2 dk/2pi`` on the conjugate grid.

    Positions are returned relative to ``origin`` (pass the atom displacement
    to measure distance from the atom) and span one period ``2pi/dk``, so
    ``sum(I) * dx == sum(|b|^2)`` exactly.
    """
    n = grid.n_modes
    if n_x is not None and n_x != n:
        raise ValueError(f"n_x must equal the number of photon modes ({n}), got {n_x}")
    b = np.asarray(state.b)
    if b.shape != (n,):
        raise ValueError("state does not match the photon grid")
    x = spatial_grid(grid)
    start = origin + x[0]
    phased = b * np.exp(1j * grid.values * start)
    # sum_j b_j e^{i k_j (start + m dx)} = sum_j phased_j e^{2 pi i j m / n} up to a phase
    field = n * np.fft.ifft(phased)
    intensity = np.abs(field) ** 2 * grid.spacing / TWOPI
    return x, intensity


@dataclass(frozen=True)
class IntensityMap:
    x: np.ndarray
    t: np.ndarray
    intensity: np.ndarray
    fwhm: float = 1.0

    @property
    def x_in_fwhm(self) -> np.ndarray:
        return self.x / self.fwhm

    def peak_positions(self) -> np.ndarray:
        return self.x[np.argmax(self.intensity, axis=1)]


def intensity_map(traj: Trajectory, origin: float = 0.0, fwhm: float = 1.0) -> IntensityMap:
    """Intensity at every stored state of ``traj``; rows are times."""
    grid = traj.model.photon_grid
    rows = []
    x = spatial_grid(grid)
    for s in traj.states:
        _, inten = intensity_profile(s, grid, origin=origin)
        rows.append(inten)
    return IntensityMap(x, np.array([s.t for s in traj.states]), np.array(rows), fwhm)


def detector_occupation(state: SystemState):
    """Total detector excitation and its marginal over the k label."""
    per_k = np.sum(np.abs(state.c) ** 2, axis=1)
    return float(per_k.sum()), per_k
