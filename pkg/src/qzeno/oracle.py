"""Dense-matrix reference propagator for small instances.

Independent of the structured right-hand side: the Hamiltonian is written out
element by element from the amplitude equations and propagated through its
eigendecomposition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SystemState
from .errors import OracleError
from .model import SystemModel

MAX_DIMENSION = 5000


@dataclass(frozen=True)
class DenseHamiltonian:
    """Basis order: atom, photons by k, detector quanta by (k, omega) row-major."""

    matrix: np.ndarray
    n_k: int
    n_omega: int

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def b_index(self, j: int) -> int:
        return 1 + j

    def c_index(self, j: int, m: int) -> int:
        return 1 + self.n_k + j * self.n_omega + m


def dense_hamiltonian(model: SystemModel) -> DenseHamiltonian:
    dim = model.dimension
    if dim > MAX_DIMENSION:
        raise OracleError(f"dimension {dim} exceeds the dense-oracle limit {MAX_DIMENSION}")
    nk, nw = model.n_k, model.n_omega
    k = model.photon_grid.values
    w = model.omega_grid.values
    xi = np.asarray(model.coupling.xi)
    eta = np.asarray(model.response.eta)
    C = np.asarray(model.kernel.matrix)
    dw = model.omega_grid.spacing

    H = np.zeros((dim, dim), complex)
    H[0, 0] = model.atom_frequency
    for j in range(nk):
        bj = 1 + j
        H[bj, bj] = k[j]
        H[bj, 0] = xi[j]
        H[0, bj] = np.conj(xi[j])
        for jp in range(nk):
            g = np.sqrt(eta[jp] * dw) * C[j, jp]
            if g == 0.0:
                continue
            for m in range(nw):
                cm = 1 + nk + jp * nw + m
                H[bj, cm] = g
                H[cm, bj] = g
    for jp in range(nk):
        for m in range(nw):
            cm = 1 + nk + jp * nw + m
            H[cm, cm] = w[m]
    H = 0.5 * (H + H.conj().T)
    return DenseHamiltonian(H, nk, nw)


class DensePropagator:
    """``exp(-iHt)`` by eigendecomposition, reusable for any t."""

    def __init__(self, model: SystemModel):
        self.model = model
        self.hamiltonian = dense_hamiltonian(model)
        try:
            self.energies, self.vectors = np.linalg.eigh(self.hamiltonian.matrix)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f"eigendecomposition failed: {exc}") from exc

    def __call__(self, state0: SystemState, t: float) -> SystemState:
        y0 = state0.as_vector()
        if y0.size != self.hamiltonian.dimension:
            raise ValueError("state does not match the model dimension")
        coeff = self.vectors.conj().T @ y0
        y = self.vectors @ (np.exp(-1j * self.energies * t) * coeff)
        return SystemState.from_vector(y, self.model.n_k, self.model.n_omega, state0.t + t)


def propagate_dense(model: SystemModel, t: float, state0: SystemState) -> SystemState:
    return DensePropagator(model)(state0, t)


def energy(H: DenseHamiltonian, state: SystemState) -> float:
    y = state.as_vector()
    return float(np.vdot(y, H.matrix @ y).real)


def oracle_instance(n_k: int = 4, n_omega: int = 3) -> SystemModel:
    """Small instance with every coupling switched on (phases, Gaussian kernel,
    non-flat response) so the comparison exercises all terms."""
    from .model import ModeGrid, build_model, gaussian_kernel

    grid = ModeGrid(0.0, 2.0, n_k)
    return build_model(grid, ModeGrid(0.0, 2.0, n_omega), gamma_free=0.2, x_D=1.3,
                       eta_peak=1.5, delta_bw=0.5, sharpness=6,
                       kernel=gaussian_kernel(grid, 0.4, 0.8))


def oracle_check(n_k: int = 4, n_omega: int = 3, t: float = 10.0, dt: float = 0.001) -> dict:
    """Structured RK4 integration against the dense propagator."""
    from .dynamics import init_state, integrate

    model = oracle_instance(n_k, n_omega)
    prop = DensePropagator(model)
    psi0 = init_state(model)
    traj = integrate(model, t, dt, store_states=False)
    exact = prop(psi0, t)
    deviation = float(np.max(np.abs(traj.final_state.as_vector() - exact.as_vector())))
    identity = float(np.max(np.abs(prop(psi0, 0.0).as_vector() - psi0.as_vector())))
    back = prop(prop(psi0, t), -t)
    roundtrip = float(np.max(np.abs(back.as_vector() - psi0.as_vector())))
    H = prop.hamiltonian.matrix
    return {
        "n_k": n_k,
        "n_omega": n_omega,
        "t": t,
        "dt": dt,
        "dimension": model.dimension,
        "max_amplitude_deviation": deviation,
        "identity_deviation": identity,
        "roundtrip_deviation": roundtrip,
        "hermiticity_error": float(np.max(np.abs(H - H.conj().T))),
        "max_norm_drift": traj.max_norm_drift,
        "passed": deviation < 1e-8,
    }
