"""Reference integrators on the flat periodic unit square.

* ``spectral_step``: Fourier pseudo-spectral version of the same stabilized
  linearly implicit scheme used by the grid solvers.
* ``galerkin_ode``: a tiny Galerkin system on the first ``K`` real
  orthonormal Laplacian eigenfunctions, integrated with classical RK4.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


class OracleError(RuntimeError):
    pass


@dataclass
class SpectralState:
    coeffs: np.ndarray  # fft2 of the nodal field
    time: float = 0.0

    @classmethod
    def from_field(cls, u, time=0.0):
        return cls(np.fft.fft2(np.asarray(u, dtype=float)), time)

    def field(self):
        return np.fft.ifft2(self.coeffs).real

    @property
    def n(self):
        return self.coeffs.shape[0]


def wavenumber_squared(n1, n2=None):
    n2 = n1 if n2 is None else n2
    k1 = TWO_PI * np.fft.fftfreq(n1, d=1.0 / n1)
    k2 = TWO_PI * np.fft.fftfreq(n2, d=1.0 / n2)
    return k1[:, None] ** 2 + k2[None, :] ** 2


def spectral_step(state, tau, potential, S):
    """Advance one step of

        (u+ - u)/tau = Lap w+,   w+ = -Lap u+ + F'(u) + S (u+ - u)

    mode by mode: ``u+ = (u + tau k2 (S u - F'(u)^)) / (1 + tau k2^2 + tau S k2)``.
    The zero mode is untouched.
    """
    k2 = wavenumber_squared(*state.coeffs.shape)
    uh = state.coeffs
    fh = np.fft.fft2(potential.dF(state.field()))
    new = (uh + tau * k2 * (S * uh - fh)) / (1.0 + tau * k2**2 + tau * S * k2)
    new[0, 0] = uh[0, 0]
    return SpectralState(new, state.time + tau)


def spectral_run(u0, T, tau, potential, S=0.0):
    state = SpectralState.from_field(u0)
    for _ in range(int(round(T / tau))):
        state = spectral_step(state, tau, potential, S)
    return state


# -- Galerkin ---------------------------------------------------------------

def galerkin_basis(K):
    """First ``K`` real orthonormal eigenfunctions of ``-Lap`` on the unit torus.

    Returns a list of ``(kind, (k1, k2), eigenvalue)`` with kind in
    ``{"const", "cos", "sin"}``, ordered by eigenvalue.
    """
    if not 1 <= K <= 16:
        raise ValueError("galerkin oracle supports 1 <= K <= 16 modes")
    modes = [("const", (0, 0), 0.0)]
    half = []
    for k1 in range(0, 4):
        for k2 in range(-3, 4):
            if k1 == 0 and k2 <= 0:
                continue
            half.append((k1 * k1 + k2 * k2, k1, k2))
    half.sort(key=lambda t: (t[0], -t[1], -t[2]))
    for q, k1, k2 in half:
        lam = TWO_PI**2 * q
        modes.append(("cos", (k1, k2), lam))
        modes.append(("sin", (k1, k2), lam))
    return modes[:K]


def _basis_on_grid(modes, n):
    s = np.arange(n) / n
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    out = []
    for kind, (k1, k2), _ in modes:
        arg = TWO_PI * (k1 * S1 + k2 * S2)
        if kind == "const":
            out.append(np.ones_like(S1))
        elif kind == "cos":
            out.append(np.sqrt(2.0) * np.cos(arg))
        else:
            out.append(np.sqrt(2.0) * np.sin(arg))
    return np.array(out)


def _quadrature_size(modes, potential):
    kmax = max(max(abs(k1), abs(k2)) for _, (k1, k2), _ in modes)
    deg = max(len(potential.coeffs) - 1, 2)
    # trapezoid on n points is exact for trigonometric degree < n
    return max(8, deg * kmax + 1)


class GalerkinSystem:
    """``d alpha/dt = -lam (lam alpha + P_K F'(u_K))`` on ``K`` modes."""

    def __init__(self, K, potential):
        self.modes = galerkin_basis(K)
        self.lam = np.array([m[2] for m in self.modes])
        self.potential = potential
        self.n = _quadrature_size(self.modes, potential)
        self.phi = _basis_on_grid(self.modes, self.n)
        self.weight = 1.0 / self.n**2

    def to_grid(self, alpha, n=None):
        phi = self.phi if n is None else _basis_on_grid(self.modes, n)
        return np.tensordot(alpha, phi, axes=1)

    def project(self, u):
        """L2 projection of a nodal field given on any grid of size >= self.n."""
        u = np.asarray(u, dtype=float)
        phi = _basis_on_grid(self.modes, u.shape[0])
        return np.tensordot(phi, u, axes=2) / u.size

    def rhs(self, alpha):
        u = self.to_grid(alpha)
        proj = np.tensordot(self.phi, self.potential.dF(u), axes=2) * self.weight
        return -self.lam * (self.lam * alpha + proj)

    def energy(self, alpha):
        u = self.to_grid(alpha)
        return 0.5 * float(np.dot(self.lam, alpha**2)) + float(
            np.sum(self.potential(u)) * self.weight
        )


def galerkin_ode(K, alpha0, T, substeps, potential, record=None):
    """Integrate the Galerkin system to ``T`` with ``substeps`` RK4 steps."""
    system = GalerkinSystem(K, potential)
    alpha = np.array(alpha0, dtype=float)
    if alpha.shape != (K,):
        raise ValueError("alpha0 must have K entries")
    dt = T / substeps if substeps else 0.0
    limit = 1e6 * max(1.0, float(np.abs(alpha).max()))
    if record is not None:
        record.append((0.0, alpha.copy()))
    for i in range(substeps):
        k1 = system.rhs(alpha)
        k2 = system.rhs(alpha + 0.5 * dt * k1)
        k3 = system.rhs(alpha + 0.5 * dt * k2)
        k4 = system.rhs(alpha + dt * k3)
        alpha = alpha + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(alpha)) or np.abs(alpha).max() > limit:
            raise OracleError(f"Galerkin integration blew up at substep {i + 1}")
        if record is not None:
            record.append(((i + 1) * dt, alpha.copy()))
    return alpha


def write_mode_trajectory(path, modes, record):
    """CSV dump of mode magnitudes: time, then ``|alpha_k|`` per mode."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + [f"{kind}_{k1}_{k2}" for kind, (k1, k2), _ in modes])
        for t, a in record:
            w.writerow([repr(float(t))] + [repr(float(abs(x))) for x in a])
