"""One-excitation amplitudes and their fixed-step RK4 integration.

The state vector is laid out as ``[alpha, b_0..b_{nk-1}, c_00..c_{nk-1,nw-1}]``
with ``c`` row-major in (k, omega). The right-hand side never materializes the
Hamiltonian: the detector branch is summed over omega once per call, so a call
costs O(n_k**2 + n_k*n_omega).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IntegrationError
from .model import SystemModel

#: Hard failure threshold for the norm drift during integration.
NORM_FAILURE = 1e-6


@dataclass(frozen=True)
class SystemState:
    alpha: complex
    b: np.ndarray
    c: np.ndarray
    t: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.alpha], self.b, self.c.ravel()))

    @classmethod
    def from_vector(cls, y: np.ndarray, n_k: int, n_omega: int, t: float = 0.0) -> "SystemState":
        y = np.asarray(y, dtype=complex)
        if y.shape != (1 + n_k + n_k * n_omega,):
            raise ValueError(f"vector of shape {y.shape} does not match n_k={n_k}, n_omega={n_omega}")
        return cls(complex(y[0]), y[1:1 + n_k].copy(),
                   y[1 + n_k:].reshape(n_k, n_omega).copy(), float(t))

    @property
    def excited_population(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def photon_population(self) -> float:
        return float(np.vdot(self.b, self.b).real)

    @property
    def detector_population(self) -> float:
        return float(np.vdot(self.c, self.c).real)


def norm(state: SystemState) -> float:
    return state.excited_population + state.photon_population + state.detector_population


def init_state(model: SystemModel) -> SystemState:
    return SystemState(1.0 + 0.0j, np.zeros(model.n_k, complex),
                       np.zeros((model.n_k, model.n_omega), complex), 0.0)


class _Deriv:
    """Precomputed operands for repeated right-hand-side evaluations."""

    def __init__(self, model: SystemModel, interaction_picture: bool = False):
        self.nk, self.nw = model.n_k, model.n_omega
        self.omega = model.atom_frequency
        self.k = model.photon_grid.values
        self.w = model.omega_grid.values
        self.xi = np.asarray(model.coupling.xi)
        self.xi_conj = self.xi.conj()
        self.M = np.ascontiguousarray(model.coupling_matrix)
        self.MT = np.ascontiguousarray(self.M.T)
        self.neg_i_k = -1j * self.k
        self.neg_i_w = -1j * self.w
        self.ip = interaction_picture
        self._lab = np.empty(1 + self.nk + self.nk * self.nw, complex)

    def __call__(self, y: np.ndarray, t: float, out: np.ndarray) -> np.ndarray:
        nk, nw = self.nk, self.nw
        if self.ip:
            lab = self._lab
            lab[0] = y[0] * np.exp(-1j * self.omega * t)
            lab[1:1 + nk] = y[1:1 + nk] * np.exp(-1j * self.k * t)
            np.multiply(y[1 + nk:].reshape(nk, nw), np.exp(-1j * self.w * t)[None, :],
                        out=lab[1 + nk:].reshape(nk, nw))
            y = lab
        a = y[0]
        b = y[1:1 + nk]
        c = y[1 + nk:].reshape(nk, nw)
        s = c.sum(axis=1)
        d = self.MT @ b
        out_c = out[1 + nk:].reshape(nk, nw)
        if self.ip:
            out[0] = -1j * np.exp(1j * self.omega * t) * (self.xi_conj @ b)
            out[1:1 + nk] = -1j * np.exp(1j * self.k * t) * (self.xi * a + self.M @ s)
            np.multiply((-1j * d)[:, None], np.exp(1j * self.w * t)[None, :], out=out_c)
        else:
            out[0] = -1j * (self.omega * a + self.xi_conj @ b)
            out[1:1 + nk] = self.neg_i_k * b - 1j * (self.xi * a + self.M @ s)
            np.multiply(c, self.neg_i_w[None, :], out=out_c)
            out_c += (-1j * d)[:, None]
        return out

    def to_lab(self, y: np.ndarray, t: float) -> np.ndarray:
        if not self.ip:
            return y
        nk, nw = self.nk, self.nw
        out = np.empty_like(y)
        out[0] = y[0] * np.exp(-1j * self.omega * t)
        out[1:1 + nk] = y[1:1 + nk] * np.exp(-1j * self.k * t)
        out[1 + nk:] = (y[1 + nk:].reshape(nk, nw) * np.exp(-1j * self.w * t)[None, :]).ravel()
        return out

    def from_lab(self, y: np.ndarray, t: float) -> np.ndarray:
        if not self.ip:
            return y.copy()
        return self.to_lab(y, -t)


def rhs(state: SystemState, model: SystemModel) -> SystemState:
    """Time derivative of ``state`` under the amplitude equations."""
    if state.b.shape != (model.n_k,) or state.c.shape != (model.n_k, model.n_omega):
        raise ValueError(
            f"state with b{state.b.shape}, c{state.c.shape} does not match model "
            f"(n_k={model.n_k}, n_omega={model.n_omega})")
    y = state.as_vector()
    out = _Deriv(model)(y, state.t, np.empty_like(y))
    return SystemState.from_vector(out, model.n_k, model.n_omega, state.t)


@dataclass(frozen=True)
class Trajectory:
    """Per-step scalar series plus states thinned by ``sample_stride``."""

    times: np.ndarray
    excited: np.ndarray
    photon: np.ndarray
    detector: np.ndarray
    norm: np.ndarray
    sample_times: np.ndarray
    states: tuple
    dt: float
    sample_stride: int
    model: SystemModel = field(repr=False)
    label: str = ""

    @property
    def final_state(self) -> SystemState:
        return self.states[-1]

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))


def stability_limit(model: SystemModel, interaction_picture: bool = False) -> float:
    """Largest admissible time step."""
    if not interaction_picture:
        return 0.5 / model.max_frequency
    m = np.asarray(model.coupling_matrix)
    coupling = np.linalg.norm(model.coupling.xi) + np.linalg.norm(m, 2) * np.sqrt(model.n_omega)
    limits = [2.0 / model.max_frequency]
    if coupling > 0:
        limits.append(0.5 / coupling)
    return min(limits)


def integrate(model: SystemModel, t_end: float, dt: float, sample_stride: int = 1, *,
              state0: Optional[SystemState] = None, store_states: bool = True,
              interaction_picture: bool = False, label: str = "") -> Trajectory:
    """Classical fixed-step RK4 from ``state0`` (default ``|e,0,0>``) to ``t_end``.

    Raises ``ValueError`` when ``dt`` violates the stability guard and
    :class:`IntegrationError` when the norm drifts by more than ``1e-6``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    limit = stability_limit(model, interaction_picture)
    if dt >= limit:
        raise ValueError(f"dt={dt:g} violates the stability guard; use dt < {limit:g}")
    if sample_stride < 1:
        raise ValueError(f"sample_stride must be >= 1, got {sample_stride}")
    if t_end < 0:
        raise ValueError(f"t_end must be non-negative, got {t_end}")

    n_steps = int(round(t_end / dt))
    nk, nw = model.n_k, model.n_omega
    f = _Deriv(model, interaction_picture)
    state0 = state0 or init_state(model)
    t0 = state0.t
    norm0 = norm(state0)
    if norm0 == 0:
        raise ValueError("initial state has zero norm")
    y = f.from_lab(state0.as_vector(), t0)

    k1, k2, k3, k4, tmp = (np.empty_like(y) for _ in range(5))
    excited = np.empty(n_steps + 1)
    photon = np.empty(n_steps + 1)
    detector = np.empty(n_steps + 1)
    sample_times, states = [], []

    def record(i, t, y_int):
        yl = f.to_lab(y_int, t)
        excited[i] = abs(yl[0]) ** 2
        b = yl[1:1 + nk]
        c = yl[1 + nk:]
        photon[i] = np.vdot(b, b).real
        detector[i] = np.vdot(c, c).real
        drift = abs(excited[i] + photon[i] + detector[i] - norm0)
        if drift > NORM_FAILURE * norm0:
            raise IntegrationError(
                f"norm drifted by {drift:.3g} at t={t:g}; reduce dt (now {dt:g})")
        if i == n_steps or (store_states and i % sample_stride == 0):
            sample_times.append(t)
            states.append(SystemState.from_vector(yl, nk, nw, t))

    h2, h6 = dt / 2.0, dt / 6.0
    record(0, t0, y)
    for i in range(1, n_steps + 1):
        t = t0 + (i - 1) * dt
        f(y, t, k1)
        np.multiply(k1, h2, out=tmp)
        tmp += y
        f(tmp, t + h2, k2)
        np.multiply(k2, h2, out=tmp)
        tmp += y
        f(tmp, t + h2, k3)
        np.multiply(k3, dt, out=tmp)
        tmp += y
        f(tmp, t + dt, k4)
        k2 += k3
        k2 *= 2.0
        k2 += k1
        k2 += k4
        k2 *= h6
        y += k2
        record(i, t0 + i * dt, y)

    times = t0 + dt * np.arange(n_steps + 1)
    total = excited + photon + detector
    return Trajectory(times, excited, photon, detector, total, np.array(sample_times),
                      tuple(states), float(dt), int(sample_stride), model, label)
