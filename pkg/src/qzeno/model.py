"""Mode grids, couplings and detection kernels of the discretized Hamiltonian.

Units throughout are hbar = c = 1 with the atomic transition frequency as the
frequency unit. Continuum quantities are converted to discrete ones by carrying
a factor sqrt(spacing) on every coupling, so that golden-rule rates summed over
the discrete modes reproduce the continuum rates.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

TWOPI = 2.0 * np.pi

KernelKind = Literal["delta", "gaussian", "attenuation"]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeGrid:
    """Equidistant midpoint discretization of ``[k_min, k_max]``."""

    k_min: float
    k_max: float
    n_modes: int

    def __post_init__(self):
        if not isinstance(self.n_modes, (int, np.integer)) or self.n_modes < 1:
            raise ValueError(f"n_modes must be a positive integer, got {self.n_modes!r}")
        if not (self.k_min >= 0.0 and self.k_max > self.k_min):
            raise ValueError(
                f"need k_max > k_min >= 0, got k_min={self.k_min}, k_max={self.k_max}")
        object.__setattr__(self, "n_modes", int(self.n_modes))

    @property
    def spacing(self) -> float:
        return (self.k_max - self.k_min) / self.n_modes

    @property
    def bandwidth(self) -> float:
        return self.k_max - self.k_min

    @property
    def values(self) -> np.ndarray:
        return self.k_min + self.spacing * (np.arange(self.n_modes) + 0.5)

    def __len__(self):
        return self.n_modes


def build_mode_grid(k_min: float, k_max: float, n_modes: int) -> ModeGrid:
    return ModeGrid(float(k_min), float(k_max), n_modes)


@dataclass(frozen=True)
class PhotonCoupling:
    """Discrete atom-photon couplings ``xi_k exp(-i k x_D) sqrt(dk)``."""

    xi: np.ndarray
    x_D: float
    gamma_free: float

    @property
    def is_flat(self) -> bool:
        mag = np.abs(self.xi)
        return bool(np.allclose(mag, mag[0], rtol=1e-12, atol=0.0))


def photon_coupling(grid: ModeGrid, gamma_free: float, x_D: float = 0.0) -> PhotonCoupling:
    """Flat coupling whose golden-rule decay rate is ``gamma_free``.

    The atom is displaced by ``x_D`` from the detector origin; only the phases
    depend on it.
    """
    if not gamma_free > 0:
        raise ValueError(f"gamma_free must be positive, got {gamma_free}")
    mag = np.sqrt(gamma_free * grid.spacing / TWOPI)
    xi = mag * np.exp(-1j * grid.values * x_D)
    return PhotonCoupling(_frozen(xi), float(x_D), float(gamma_free))


@dataclass(frozen=True)
class DetectorResponse:
    eta: np.ndarray
    eta_peak: float
    delta_bw: float
    sharpness: int
    center: float


def detector_response(grid: ModeGrid, eta_peak: float, delta_bw: float,
                      center: float = 1.0, sharpness: int = 6) -> DetectorResponse:
    """Frequency window ``(eta/2pi) / (1 + ((k - center)/delta_bw)**n)``."""
    if eta_peak < 0:
        raise ValueError(f"eta_peak must be non-negative, got {eta_peak}")
    if not delta_bw > 0:
        raise ValueError(f"delta_bw must be positive, got {delta_bw}")
    if int(sharpness) != sharpness or sharpness < 2 or sharpness % 2:
        raise ValueError(f"sharpness must be an even integer >= 2, got {sharpness}")
    sharpness = int(sharpness)
    u = (grid.values - center) / delta_bw
    eta = (eta_peak / TWOPI) / (1.0 + u ** sharpness)
    return DetectorResponse(_frozen(eta), float(eta_peak), float(delta_bw),
                            sharpness, float(center))


@dataclass(frozen=True)
class DetectionKernel:
    """Real symmetric kernel ``C(k_i, k_j)`` linking photon and detector modes."""

    matrix: np.ndarray
    kind: KernelKind
    width_k: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"kernel must be square, got shape {m.shape}")
        if not np.isrealobj(m):
            raise ValueError("kernel must be real")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def delta_kernel(grid: ModeGrid) -> DetectionKernel:
    return DetectionKernel(_frozen(np.eye(grid.n_modes)), "delta", 0.0, 1.0)


def gaussian_kernel(grid: ModeGrid, amplitude: float, width: float) -> DetectionKernel:
    """``amplitude * exp(-((k_i - k_j)/width)**2)``; ``width`` in k units."""
    if not amplitude > 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    if width < grid.spacing / 10:
        warnings.warn(
            f"kernel width {width:g} is below a tenth of the mode spacing "
            f"{grid.spacing:g}; it is effectively a delta kernel", RuntimeWarning,
            stacklevel=2)
    k = grid.values
    m = amplitude * np.exp(-(((k[:, None] - k[None, :]) / width) ** 2))
    m = 0.5 * (m + m.T)
    return DetectionKernel(_frozen(m), "gaussian", float(width), float(amplitude))


def gaussian_amplitude(grid: ModeGrid, width: float) -> float:
    """Amplitude making a Gaussian kernel the discrete image of a unit-peak
    spatial coupling envelope, i.e. rows summing to ~1 like the delta kernel.

    For spacing 0.02 and width 0.11 this gives 0.1026.
    """
    return grid.spacing / (np.sqrt(np.pi) * width)


@dataclass(frozen=True)
class AttenuationProfile:
    """Density of detector excitations sampled on ``x`` across ``[0, x0]``."""

    x: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        rho = np.asarray(self.density, dtype=float)
        if x.ndim != 1 or x.shape != rho.shape or x.size < 3:
            raise ValueError("x and density must be 1-D arrays of equal length >= 3")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        if np.any(rho < 0):
            raise ValueError("density must be non-negative")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "density", _frozen(rho))

    @property
    def x0(self) -> float:
        return float(self.x[-1])

    @property
    def dx(self) -> float:
        return float(np.max(np.diff(self.x)))

    @property
    def center(self) -> float:
        """Density-weighted center; the kernel places the detector there."""
        w = trapezoid(self.density, self.x)
        if w == 0:
            return 0.5 * (self.x[0] + self.x[-1])
        return float(trapezoid(self.x * self.density, self.x) / w)

    def penetration_depth(self, response: DetectorResponse) -> float:
        rate = np.sqrt(np.max(response.eta) * np.max(self.density))
        return np.inf if rate == 0 else 1.0 / rate

    def vanishes_at_surface(self, rtol: float = 1e-3) -> bool:
        peak = self.density.max()
        if peak == 0:
            return True
        return bool(max(self.density[0], self.density[-1]) <= rtol * peak)


def gaussian_profile(fwhm: float, peak: float = 1.0, extent: float = 5.0,
                     dx: float = 0.25) -> AttenuationProfile:
    """Gaussian density of the given FWHM centred in ``[0, extent * fwhm]``."""
    x0 = extent * fwhm
    n = int(np.ceil(x0 / dx)) + 1
    x = np.linspace(0.0, x0, n)
    sigma = fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    rho = peak * np.exp(-0.5 * ((x - 0.5 * x0) / sigma) ** 2)
    return AttenuationProfile(x, rho)


def attenuated_modes(grid: ModeGrid, profile: AttenuationProfile,
                     response: DetectorResponse):
    """Plane waves ``phi_k = N exp(-ikx)`` and their attenuated versions.

    Returns ``(phi, P, A)`` with shapes ``(n_k, n_x)``; ``A`` is the optical
    depth accumulated from the surface ``x0`` down to ``x``. The part handed to
    the detector is ``P - phi``.
    """
    x = profile.x
    k = grid.values
    norm = np.sqrt(grid.spacing / TWOPI)
    kappa = np.sqrt(np.outer(response.eta, profile.density))
    # A(x) = int_x^x0 kappa
    acc = cumulative_trapezoid(kappa, x, axis=1, initial=0.0)
    A = acc[:, -1:] - acc
    phi = norm * np.exp(-1j * np.outer(k, x))
    return phi, phi * np.exp(-A), A


def kernel_from_attenuation(grid: ModeGrid, profile: AttenuationProfile,
                            response: DetectorResponse) -> DetectionKernel:
    """Project the per-length transferred part of each attenuated mode onto
    the plane-wave basis of ``grid``.

    The transferred part of mode k is ``P_k - phi_k = phi_k (exp(-A_k) - 1)``;
    its gradient along x, ``phi_k sqrt(eta_k rho) exp(-A_k)``, is what each
    slice of the detector takes from the mode. Dividing out
    ``sqrt(eta_k * rho_max)`` (response enters the dynamics separately) leaves
    ``sqrt(rho/rho_max) exp(-A_k)``, which is projected by trapezoidal
    quadrature in coordinates centred on the detector. A uniform density over
    the whole period gives the identity kernel.
    """
    if not profile.vanishes_at_surface():
        warnings.warn("density does not vanish at the detector surface; the "
                      "kernel will carry reflection artifacts", RuntimeWarning,
                      stacklevel=2)
    rho_max = profile.density.max()
    n = grid.n_modes
    if rho_max == 0:
        return DetectionKernel(_frozen(np.zeros((n, n))), "attenuation", 0.0, 0.0)
    depth = profile.penetration_depth(response)
    if profile.dx > depth / 8:
        raise ValueError(
            f"x-grid spacing {profile.dx:g} does not resolve the penetration depth "
            f"{depth:g} (need >= 8 points per depth)")

    _, _, A = attenuated_modes(grid, profile, response)
    envelope = np.sqrt(profile.density / rho_max)[None, :] * np.exp(-A)
    k = grid.values
    xc = profile.x - profile.center
    # C[i, j] = (dk/2pi) int envelope_i(x) exp(i (k_j - k_i) x) dx
    left = envelope * np.exp(-1j * np.outer(k, xc))
    right = np.exp(1j * np.outer(xc, k))
    # trapezoid weights for a possibly non-uniform grid
    w = np.empty_like(profile.x)
    d = np.diff(profile.x)
    w[0], w[-1] = d[0] / 2, d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    c = (grid.spacing / TWOPI) * ((left * w[None, :]) @ right)
    m = c.real
    m = 0.5 * (m + m.T)
    return DetectionKernel(_frozen(m), "attenuation", _kernel_width(k, m),
                           float(np.max(np.diag(m))))


def _kernel_width(k: np.ndarray, m: np.ndarray) -> float:
    """1/e half-width of the central row of ``m`` in k units."""
    row = m[m.shape[0] // 2]
    peak = row.max()
    if peak <= 0:
        return 0.0
    dk = np.abs(k - k[m.shape[0] // 2])
    inside = dk[row >= peak / np.e]
    return float(inside.max()) if inside.size else 0.0


@dataclass(frozen=True)
class SystemModel:
    """Assembled couplings of the one-excitation problem.

    ``coupling_matrix[k, k']`` is ``sqrt(eta_k' * d_omega) * C(k, k')``: photon
    mode k feeds the detector branch labelled k'.
    """

    photon_grid: ModeGrid
    omega_grid: ModeGrid
    coupling: PhotonCoupling
    response: DetectorResponse
    kernel: DetectionKernel
    atom_frequency: float = 1.0
    coupling_matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nk = self.photon_grid.n_modes
        if self.coupling.xi.shape != (nk,):
            raise ValueError("photon coupling does not match photon grid")
        if self.response.eta.shape != (nk,):
            raise ValueError("detector response does not match photon grid")
        if self.kernel.size != nk:
            raise ValueError(
                f"kernel dimension {self.kernel.size} does not match {nk} photon modes")
        m = self.kernel.matrix * np.sqrt(self.response.eta * self.omega_grid.spacing)[None, :]
        object.__setattr__(self, "coupling_matrix", _frozen(m))

    @property
    def n_k(self) -> int:
        return self.photon_grid.n_modes

    @property
    def n_omega(self) -> int:
        return self.omega_grid.n_modes

    @property
    def dimension(self) -> int:
        return 1 + self.n_k + self.n_k * self.n_omega

    @property
    def max_frequency(self) -> float:
        return max(abs(self.atom_frequency), self.photon_grid.k_max, self.omega_grid.k_max)

    def replace(self, **changes) -> "SystemModel":
        kw = dict(photon_grid=self.photon_grid, omega_grid=self.omega_grid,
                  coupling=self.coupling, response=self.response, kernel=self.kernel,
                  atom_frequency=self.atom_frequency)
        kw.update(changes)
        return SystemModel(**kw)


def build_model(photon_grid: ModeGrid, omega_grid: Optional[ModeGrid] = None, *,
                gamma_free: float = 0.02, x_D: float = 0.0, eta_peak: float = 0.0,
                delta_bw: float = 1.0, sharpness: int = 6,
                kernel: Optional[DetectionKernel] = None,
                atom_frequency: float = 1.0) -> SystemModel:
    """Convenience assembly with a delta kernel unless one is given."""
    omega_grid = omega_grid or photon_grid
    return SystemModel(
        photon_grid=photon_grid,
        omega_grid=omega_grid,
        coupling=photon_coupling(photon_grid, gamma_free, x_D),
        response=detector_response(photon_grid, eta_peak, delta_bw, atom_frequency, sharpness),
        kernel=kernel if kernel is not None else delta_kernel(photon_grid),
        atom_frequency=atom_frequency,
    )


def recurrence_time(grid: ModeGrid) -> float:
    """Revival time ``2pi/spacing`` of an equidistant discretized continuum."""
    return TWOPI / grid.spacing
