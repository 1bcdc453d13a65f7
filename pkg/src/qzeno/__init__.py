"""Quantum Zeno effect by indirect measurement: a two-level atom decaying into a
discretized photon continuum watched by a finite-bandwidth detector."""

from .dynamics import SystemState, Trajectory, init_state, integrate, norm, rhs
from .errors import IntegrationError, ModelInconsistencyError, OracleError
from .model import (AttenuationProfile, DetectionKernel, DetectorResponse, ModeGrid,
                    PhotonCoupling, SystemModel, build_mode_grid, build_model,
                    delta_kernel, detector_response, gaussian_kernel, gaussian_profile,
                    kernel_from_attenuation, photon_coupling, recurrence_time)
from .observables import (IntensityMap, ObservableSeries, decay_rate_ratio,
                          detector_occupation, excited_population, free_decay_rate,
                          intensity_profile, plateau)
from .scenario import PRESETS, RunResult, ScenarioConfig, preset, run, simulate, sweep

__version__ = "0.1.0"
