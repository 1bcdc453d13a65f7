"""Scenario configuration, figure presets and file output."""
from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dynamics import Trajectory, integrate
from .errors import IntegrationError
from .model import (TWOPI, ModeGrid, SystemModel, delta_kernel, detector_response,
                    gaussian_kernel, gaussian_profile, kernel_from_attenuation,
                    photon_coupling, recurrence_time)
from .observables import (IntensityMap, ObservableSeries, decay_rate_ratio, intensity_map,
                          plateau, transient_time)

OUTPUT_ENV = "QZENO_OUTPUT_DIR"
DEFAULT_OUTPUT = "qzeno-out"
#: Simulations must end before this fraction of the recurrence time.
RECURRENCE_GUARD = 0.7
#: Extra factor on eta under the delta-kernel reference convention (ks_eta_convention).
KS_ETA_FACTOR = 10.0

GAMMA = 0.02
FWHM = 33.0
KERNEL_KINDS = ("delta", "gaussian", "attenuation")
SWEEP_PARAMETERS = ("x_D", "eta_peak", "kernel_width", "delta_bw")


@dataclass
class ScenarioConfig:
    """Flat parameter set; frequencies in units of the atomic frequency.

    ``t_end = None`` means 0.65 of the recurrence time of the photon grid.
    ``detector_fwhm`` is the width of the detector's spatial coupling envelope;
    it fixes the attenuation-kernel profile and rescales intensity axes.
    """

    name: str = "custom"
    omega_atom: float = 1.0
    gamma_free: float = GAMMA
    k_min: float = 0.0
    k_max: float = 2.0
    n_k: int = 100
    w_min: float = 0.0
    w_max: float = 2.0
    n_w: int = 100
    eta_peak: float = 0.0
    delta_bw: float = 100 * GAMMA / TWOPI
    sharpness: int = 6
    ks_eta_convention: bool = False
    kernel: str = "delta"
    kernel_amplitude: float = 0.103
    kernel_width: float = 0.11
    detector_fwhm: float = FWHM
    profile_peak: float = 1.0
    x_D: float = 0.0
    t_end: Optional[float] = None
    dt: float = 0.01
    sample_stride: int = 10
    interaction_picture: bool = False
    allow_recurrence: bool = False
    output_dir: str = ""

    # -- derived ---------------------------------------------------------
    @property
    def photon_grid(self) -> ModeGrid:
        return ModeGrid(self.k_min, self.k_max, self.n_k)

    @property
    def omega_grid(self) -> ModeGrid:
        return ModeGrid(self.w_min, self.w_max, self.n_w)

    @property
    def recurrence_time(self) -> float:
        return recurrence_time(self.photon_grid)

    @property
    def resolved_t_end(self) -> float:
        return 0.65 * self.recurrence_time if self.t_end is None else float(self.t_end)

    @property
    def effective_eta(self) -> float:
        return self.eta_peak * (KS_ETA_FACTOR if self.ks_eta_convention else 1.0)

    def validate(self) -> "ScenarioConfig":
        if self.gamma_free <= 0:
            raise ValueError("gamma_free must be positive")
        if self.eta_peak < 0:
            raise ValueError("eta_peak must be non-negative")
        if self.delta_bw <= 0:
            raise ValueError("delta_bw must be positive")
        if self.kernel not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kernel!r}; choose from {KERNEL_KINDS}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.detector_fwhm <= 0:
            raise ValueError("detector_fwhm must be positive")
        ModeGrid(self.k_min, self.k_max, self.n_k)
        ModeGrid(self.w_min, self.w_max, self.n_w)
        t_end, t_rec = self.resolved_t_end, self.recurrence_time
        if t_end <= 0:
            raise ValueError("t_end must be positive")
        if not self.allow_recurrence and t_end >= RECURRENCE_GUARD * t_rec:
            raise ValueError(
                f"t_end={t_end:g} reaches {RECURRENCE_GUARD} of the recurrence time "
                f"{t_rec:g}; set allow_recurrence = true to override")
        return self

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # -- serialization ---------------------------------------------------
    def to_text(self) -> str:
        lines = [f"# qzeno scenario '{self.name}'"]
        for f in fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional["ScenarioConfig"] = None) -> "ScenarioConfig":
        cfg = base.replace() if base is not None else cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg = cfg.with_override(key, value)
        return cfg

    def with_override(self, key: str, value: str) -> "ScenarioConfig":
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        return self.replace(**{key: _parse_value(types[key], value, key)})

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_text(Path(path).read_text())


def _format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(typ: str, value: str, key: str):
    typ = str(typ)
    try:
        if "bool" in typ:
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(value)
            return low in ("true", "1", "yes", "on")
        if "Optional[float]" in typ:
            return None if value.lower() in ("auto", "none", "") else float(value)
        if "int" in typ:
            return int(value)
        if "float" in typ:
            return float(value)
    except ValueError:
        raise ValueError(f"bad value {value!r} for {key} ({typ})") from None
    return value


# -- presets ---------------------------------------------------------------
def _ks(eta_over_gamma: float, name: str) -> ScenarioConfig:
    return ScenarioConfig(name=name, eta_peak=eta_over_gamma * GAMMA, kernel="delta",
                          x_D=0.0, ks_eta_convention=True)


def _fig3(x_over_fwhm: float, name: str) -> ScenarioConfig:
    spacing = 2.0 / 100
    return ScenarioConfig(name=name, eta_peak=10 * GAMMA, kernel="gaussian",
                          kernel_amplitude=0.103, kernel_width=5.5 * spacing,
                          x_D=x_over_fwhm * FWHM, ks_eta_convention=True)


PRESETS = {
    "free-decay": lambda: ScenarioConfig(name="free-decay", eta_peak=0.0),
    "ks-fig2-eta1": lambda: _ks(1.0, "ks-fig2-eta1"),
    "ks-fig2-eta10": lambda: _ks(10.0, "ks-fig2-eta10"),
    "fig3-a": lambda: _fig3(0.0, "fig3-a"),
    "fig3-b": lambda: _fig3(0.5, "fig3-b"),
    "fig3-c": lambda: _fig3(1.0, "fig3-c"),
    "fig3-d": lambda: _fig3(2.0, "fig3-d"),
}


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


# -- model assembly and runs ------------------------------------------------
def build_model(config: ScenarioConfig) -> SystemModel:
    config.validate()
    grid = config.photon_grid
    response = detector_response(grid, config.effective_eta, config.delta_bw,
                                 config.omega_atom, config.sharpness)
    if config.kernel == "delta":
        kernel = delta_kernel(grid)
    elif config.kernel == "gaussian":
        kernel = gaussian_kernel(grid, config.kernel_amplitude, config.kernel_width)
    else:
        # envelope sqrt(rho) has FWHM detector_fwhm, so rho has FWHM / sqrt(2)
        depth = 1.0 / max(np.sqrt(response.eta.max() * config.profile_peak), 1e-300)
        profile = gaussian_profile(config.detector_fwhm / np.sqrt(2.0), config.profile_peak,
                                   dx=min(0.25, depth / 10))
        kernel = kernel_from_attenuation(grid, profile, response)
    return SystemModel(
        photon_grid=grid,
        omega_grid=config.omega_grid,
        coupling=photon_coupling(grid, config.gamma_free, config.x_D),
        response=response,
        kernel=kernel,
        atom_frequency=config.omega_atom,
    )


@dataclass(frozen=True)
class RunResult:
    config: ScenarioConfig
    trajectory: Trajectory
    ratio: ObservableSeries
    plateau: float
    transient: float
    output_dir: Optional[Path] = None

    def summary(self) -> dict:
        return {
            "name": self.config.name,
            "plateau": self.plateau,
            "transient_time": self.transient,
            "recurrence_time": self.config.recurrence_time,
            "max_norm_drift": self.trajectory.max_norm_drift,
            "final_excited_population": float(self.trajectory.excited[-1]),
            "final_detector_occupation": float(self.trajectory.detector[-1]),
        }


def simulate(config: ScenarioConfig, store_states: bool = False,
             sample_stride: Optional[int] = None) -> RunResult:
    """Integrate ``config`` and derive the decay-rate observables (no files)."""
    model = build_model(config)
    traj = integrate(model, config.resolved_t_end, config.dt,
                     sample_stride or config.sample_stride, store_states=store_states,
                     interaction_picture=config.interaction_picture, label=config.name)
    ratio = decay_rate_ratio(traj, config.gamma_free)
    t_rec = config.recurrence_time
    try:
        level = plateau(ratio, t_rec)
    except ValueError:
        level = float("nan")
    return RunResult(config, traj, ratio, level, transient_time(ratio))


def output_root(out: Optional[str] = None, config: Optional[ScenarioConfig] = None) -> Path:
    root = out or (config.output_dir if config is not None else "") or \
        os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    return Path(root)


def write_series(path, result: RunResult) -> Path:
    """CSV ``t, P_e, ratio, norm, detector_occupation`` every ``sample_stride`` steps."""
    traj = result.trajectory
    stride = result.config.sample_stride
    ratio = np.full(traj.times.size, np.nan)
    ratio[:result.ratio.values.size] = result.ratio.values
    idx = np.arange(0, traj.times.size, stride)
    if idx[-1] != traj.times.size - 1:
        idx = np.append(idx, traj.times.size - 1)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "P_e", "ratio", "norm", "detector_occupation"])
        for i in idx:
            w.writerow([f"{v:.12g}" for v in (traj.times[i], traj.excited[i], ratio[i],
                                              traj.norm[i], traj.detector[i])])
    return path


def run(config: ScenarioConfig, out: Optional[str] = None) -> RunResult:
    """Simulate and write ``series.csv``, ``summary.json`` and the resolved config."""
    config.validate()
    directory = output_root(out, config) / config.name
    directory.mkdir(parents=True, exist_ok=True)
    config.replace(t_end=config.resolved_t_end).save(directory / "config.txt")
    result = simulate(config)
    write_series(directory / "series.csv", result)
    (directory / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n")
    return dataclasses.replace(result, output_dir=directory)


def _sweep_one(args):
    config, out = args
    try:
        result = run(config, out) if out is not None else simulate(config)
        return {"plateau": result.plateau, "status": "ok", "error": ""}
    except (IntegrationError, ValueError) as exc:
        return {"plateau": float("nan"), "status": "failed", "error": str(exc)}


def sweep(base: ScenarioConfig, parameter: str, values: Sequence[float], parallel: int = 1,
          out: Optional[str] = None, write: bool = True) -> list[dict]:
    """One run per value of ``parameter``; failures are recorded, not raised."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMETERS}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    root = output_root(out, base) / f"sweep-{base.name}-{parameter}" if write else None
    jobs = []
    for v in values:
        cfg = base.replace(**{parameter: float(v), "name": f"{base.name}-{parameter}={v:g}"})
        jobs.append((cfg, str(root) if write else None))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_sweep_one, jobs))
    else:
        outcomes = [_sweep_one(j) for j in jobs]
    rows = [{"parameter": parameter, "value": float(v), **o} for v, o in zip(values, outcomes)]
    if write:
        root.mkdir(parents=True, exist_ok=True)
        with (root / "summary.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter", "value", "plateau", "status", "error"])
            for r in rows:
                w.writerow([r["parameter"], f"{r['value']:.12g}", f"{r['plateau']:.12g}",
                            r["status"], r["error"]])
    return rows


def compute_intensity_map(config: ScenarioConfig, t_samples: int = 41):
    """Trajectory with ``t_samples`` stored states and its intensity map.

    Positions are distances from the atom.
    """
    if t_samples < 2:
        raise ValueError("t_samples must be >= 2")
    t_end = config.resolved_t_end
    n_steps = int(round(t_end / config.dt))
    stride = max(1, n_steps // (t_samples - 1))
    result = simulate(config, store_states=True, sample_stride=stride)
    imap = intensity_map(result.trajectory, origin=config.x_D, fwhm=config.detector_fwhm)
    return result, imap


def write_intensity(path, imap: IntensityMap, x_window: Optional[float] = None) -> Path:
    """Long-form CSV ``x, t, I``; ``x`` is measured from the atom."""
    mask = np.ones(imap.x.size, bool) if x_window is None else np.abs(imap.x) <= x_window
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "t", "I"])
        for ti, row in zip(imap.t, imap.intensity):
            for xi, val in zip(imap.x[mask], row[mask]):
                w.writerow([f"{xi:.12g}", f"{ti:.12g}", f"{val:.12g}"])
    return path
