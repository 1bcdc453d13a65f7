"""Shared fixtures: production runs are expensive, so every preset is simulated
at most once per session and reused by unit and acceptance tests."""
from __future__ import annotations

import numpy as np
import pytest

from qzeno import convergence
from qzeno.model import ModeGrid, build_model, delta_kernel, gaussian_kernel
from qzeno.scenario import compute_intensity_map, preset, simulate

_ACCEPTANCE = pytest.StashKey[list]()


class RunCache:
    """Lazily simulated presets keyed by name."""

    def __init__(self):
        self._runs = {}
        self._maps = {}
        self._ladder = None

    def __call__(self, name: str):
        if name not in self._runs:
            if name in self._maps:
                self._runs[name] = self._maps[name][0]
            else:
                self._runs[name] = simulate(preset(name))
        return self._runs[name]

    def intensity(self, name: str, t_samples: int = 81):
        if name not in self._maps:
            self._maps[name] = compute_intensity_map(preset(name), t_samples)
            self._runs.setdefault(name, self._maps[name][0])
        return self._maps[name]

    def density_ladder(self):
        if self._ladder is None:
            self._ladder = convergence.refine(preset("ks-fig2-eta10"), (1, 2, 4))
        return self._ladder

    @property
    def completed(self):
        return dict(self._runs)


@pytest.fixture(scope="session")
def runs():
    return RunCache()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def small_model(n_k=4, n_omega=3, *, gamma=0.2, x_D=1.3, eta=1.5, delta_bw=0.5,
                kernel="gaussian"):
    """Fully coupled small instance used by the property tests."""
    grid = ModeGrid(0.0, 2.0, n_k)
    kern = gaussian_kernel(grid, 0.4, 0.8) if kernel == "gaussian" else delta_kernel(grid)
    return build_model(grid, ModeGrid(0.0, 2.0, n_omega), gamma_free=gamma, x_D=x_D,
                       eta_peak=eta, delta_bw=delta_bw, sharpness=6, kernel=kern)


def random_state(model, rng, t=0.0):
    from qzeno.dynamics import SystemState

    def c(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    return SystemState(c(), c(model.n_k), c(model.n_k, model.n_omega), t)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
