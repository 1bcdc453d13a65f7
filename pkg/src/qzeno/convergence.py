"""Refinement ladders over the discretization range and density."""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

from .errors import IntegrationError
from .model import recurrence_time  # noqa: F401  (re-exported)
from .scenario import RunResult, ScenarioConfig, simulate

#: Relative deviation between the last two rungs below which a ladder passes.
PASS_THRESHOLD = 0.01


@dataclass
class Rung:
    range_factor: float
    density_factor: float
    n_k: int
    n_w: int
    spacing: float
    bandwidth: float
    recurrence_time: float
    value: float = float("nan")
    transient_time: float = float("nan")
    max_norm_drift: float = float("nan")
    status: str = "pending"
    error: str = ""


@dataclass
class ConvergenceReport:
    scenario: str
    rungs: list
    deviations: list = field(default_factory=list)
    threshold: float = PASS_THRESHOLD

    @property
    def max_deviation(self) -> float:
        return max(self.deviations) if self.deviations else float("nan")

    @property
    def final_deviation(self) -> float:
        return self.deviations[-1] if self.deviations else float("nan")

    @property
    def passed(self) -> bool:
        if any(r.status != "ok" for r in self.rungs) or not self.deviations:
            return False
        return self.final_deviation < self.threshold

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "rungs": [asdict(r) for r in self.rungs],
            "deviations": self.deviations,
            "max_deviation": self.max_deviation,
            "final_deviation": self.final_deviation,
            "threshold": self.threshold,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def rung_config(config: ScenarioConfig, range_factor: float, density_factor: float) -> ScenarioConfig:
    """Scale the band by ``range_factor`` (upwards from ``k_min``) and the
    number of modes per unit frequency by ``density_factor``.

    Gaussian kernel amplitudes follow the spacing so each row keeps its sum,
    and the simulated time follows the recurrence time.
    """
    n_k = int(round(config.n_k * range_factor * density_factor))
    n_w = int(round(config.n_w * range_factor * density_factor))
    k_max = config.k_min + range_factor * (config.k_max - config.k_min)
    w_max = config.w_min + range_factor * (config.w_max - config.w_min)
    new = config.replace(
        name=f"{config.name}-r{range_factor:g}-d{density_factor:g}",
        n_k=n_k, n_w=n_w, k_max=k_max, w_max=w_max)
    old_spacing = config.photon_grid.spacing
    new_spacing = new.photon_grid.spacing
    if config.kernel == "gaussian":
        new = new.replace(kernel_amplitude=config.kernel_amplitude * new_spacing / old_spacing)
    if config.t_end is not None:
        new = new.replace(t_end=config.t_end * new.recurrence_time / config.recurrence_time)
    return new


def _plateau(result: RunResult) -> float:
    return result.plateau


def _run_rung(args):
    config, observable = args
    try:
        result = simulate(config)
        drift = result.trajectory.max_norm_drift
        return observable(result), result.transient, drift, "ok", ""
    except (IntegrationError, ValueError) as exc:
        return float("nan"), float("nan"), float("nan"), "failed", str(exc)


def refine(config: ScenarioConfig, density_factors: Sequence[float] = (1, 2, 4),
           range_factors: Sequence[float] = (1,),
           observable: Callable[[RunResult], float] = _plateau,
           parallel: int = 1) -> ConvergenceReport:
    """Run ``config`` along a ladder and compare successive plateau values.

    The two factor lists are paired rung by rung; a list of length one is
    broadcast against the other.
    """
    density_factors, range_factors = list(density_factors), list(range_factors)
    n = max(len(density_factors), len(range_factors))
    if n < 2:
        raise ValueError("a refinement ladder needs at least two rungs")
    if len(density_factors) == 1:
        density_factors *= n
    if len(range_factors) == 1:
        range_factors *= n
    if len(density_factors) != len(range_factors):
        raise ValueError("density and range ladders have different lengths")
    if min(density_factors + range_factors) < 1:
        raise ValueError("refinement factors must be >= 1")

    configs = [rung_config(config, r, d) for r, d in zip(range_factors, density_factors)]
    rungs = [Rung(r, d, c.n_k, c.n_w, c.photon_grid.spacing, c.photon_grid.bandwidth,
                  c.recurrence_time)
             for r, d, c in zip(range_factors, density_factors, configs)]
    jobs = [(c, observable) for c in configs]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_run_rung, jobs))
    else:
        outcomes = [_run_rung(j) for j in jobs]
    for rung, (value, transient, drift, status, error) in zip(rungs, outcomes):
        rung.value, rung.transient_time, rung.max_norm_drift = value, transient, drift
        rung.status, rung.error = status, error

    deviations = []
    for prev, cur in zip(rungs, rungs[1:]):
        deviations.append(abs(cur.value - prev.value) / abs(prev.value))
    return ConvergenceReport(config.name, rungs, deviations)
