"""Weighted surface Cahn--Hilliard: ``v_t = A_g mu``, ``mu = -A_g v + F'(v)``.

``A_g v = (1/(g sqrt det theta)) d_i(sqrt det theta g theta^{ij} d_j v)`` on
the periodic chart grid, discretized like the shell operator: bilinear hat
functions, cell-averaged coefficients, lumped weight ``g sqrt(det theta)``.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .bulk import StepError, Trajectory, snapshot_steps
from .fem import SolverError, StabilizedStepper, assemble_stiffness, cell_means, pcg
from .geometry import metric, surface_gradient

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SurfaceStepperConfig:
    tau: float
    stabilization: float = 2.0
    tol_lin: float = 1e-11
    max_iter: int = 50

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not (0 < self.tol_lin <= 1e-6):
            raise ValueError("tol_lin must lie in (0, 1e-6]")


class SurfaceDomain:
    def __init__(self, chart, profile, n1, n2):
        if not chart.periodic:
            raise ValueError("surface solver needs a doubly periodic chart")
        self.chart = chart
        self.profile = profile
        self.n1, self.n2 = n1, n2
        self.shape = (n1, n2)
        self.h1, self.h2 = 1.0 / n1, 1.0 / n2
        s1 = np.arange(n1) * self.h1
        s2 = np.arange(n2) * self.h2
        self.S1, self.S2 = np.meshgrid(s1, s2, indexing="ij")
        theta = metric(chart, self.S1, self.S2)
        self.theta_inv = np.linalg.inv(theta)
        self.sqrt_det_theta = np.sqrt(np.linalg.det(theta))
        g0, g1, *_ = profile.chart_values(self.S1, self.S2)
        self.g = g1 - g0
        self.area_weight = (self.sqrt_det_theta * self.h1 * self.h2).ravel()
        self.mass = (self.g * self.sqrt_det_theta * self.h1 * self.h2).ravel()

        per = (True, True)
        unweighted = self.sqrt_det_theta[..., None, None] * self.theta_inv
        self.K = assemble_stiffness(
            self.shape, (self.h1, self.h2), per,
            cell_means(self.g[..., None, None] * unweighted, per),
        )
        self.K_unweighted = assemble_stiffness(
            self.shape, (self.h1, self.h2), per, cell_means(unweighted, per)
        )
        self._diag = self.K.diagonal()

    @property
    def area(self):
        return float(self.area_weight.sum())

    # -- operators ------------------------------------------------------
    def apply_Ag(self, v):
        return (-(self.K @ np.ravel(v)) / self.mass).reshape(self.shape)

    def weighted_mass(self, v):
        """``int_Gamma g v``."""
        return float(np.dot(self.mass, np.ravel(v)))

    def weighted_mean(self, v):
        return self.weighted_mass(v) / float(self.mass.sum())

    def weighted_dirichlet(self, v, w=None):
        """``int g grad v . grad w``."""
        a = np.ravel(v)
        b = a if w is None else np.ravel(w)
        return float(np.dot(b, self.K @ a))

    def energy(self, v, potential):
        """``E_g(v) = int g (|grad v|^2/2 + F(v))``."""
        return 0.5 * self.weighted_dirichlet(v) + float(
            np.dot(self.mass, potential(np.ravel(v)))
        )

    def solve_Lg(self, f, tol=1e-11, maxiter=20000):
        """Return ``phi`` with ``-A_g phi = f`` and zero weighted mean.

        A nonzero weighted mean of ``f`` is projected off (logged).
        """
        f = np.ravel(np.asarray(f, dtype=float))
        mean = float(np.dot(self.mass, f)) / float(self.mass.sum())
        scale = max(float(np.max(np.abs(f))), 1e-300)
        if abs(mean) > 1e-10 * scale:
            log.warning("solve_Lg: projecting off weighted mean %.3e", mean)
        f = f - mean
        b = self.mass * f
        b -= b.mean()  # exact range condition for the singular system
        diag = self._diag
        phi, info = pcg(lambda x: self.K @ x, b, tol=tol, maxiter=maxiter,
                        precond=lambda r: r / diag)
        phi -= np.dot(self.mass, phi) / self.mass.sum()
        self.last_solve = info
        return phi.reshape(self.shape)

    def chart_gradient(self, v):
        d1 = (np.roll(v, -1, 0) - np.roll(v, 1, 0)) / (2 * self.h1)
        d2 = (np.roll(v, -1, 1) - np.roll(v, 1, 1)) / (2 * self.h2)
        return d1, d2

    def tangential_gradient(self, v):
        """Nodal 3-vector ``grad_Gamma v`` from centered chart differences."""
        d1, d2 = self.chart_gradient(v)
        return surface_gradient(self.chart, self.S1, self.S2, d1, d2)

    def stepper(self, config, potential):
        return StabilizedStepper(
            self.K, self.mass, config.tau, config.stabilization, potential.dF,
            tol=config.tol_lin, maxiter=config.max_iter,
        )


def apply_Ag(domain, v):
    return domain.apply_Ag(v)


def solve_Lg(domain, f, tol=1e-11):
    return domain.solve_Lg(f, tol=tol)


def surface_energy(domain, v, potential):
    return domain.energy(v, potential)


def step_surface(domain, v, stepper):
    """One stabilized step; returns ``(v_next, mu_next, info)``."""
    x, mu, info = stepper.step(np.ravel(v))
    return x.reshape(domain.shape), mu.reshape(domain.shape), info


def run_surface(domain, v0, T, config, potential, snapshot_times=(), callback=None):
    cols = ("step", "time", "weighted_mass", "weighted_energy", "grad_mu_norm")
    traj = Trajectory(cols)
    v = np.array(v0, dtype=float)
    traj.rows.append((0, 0.0, domain.weighted_mass(v), domain.energy(v, potential),
                      float("nan")))
    snaps = snapshot_steps(T, config.tau, snapshot_times)
    if 0 in snaps:
        traj.snapshots[snaps[0]] = v.copy()
    nsteps = int(round(T / config.tau))
    if nsteps == 0:
        return traj
    stepper = domain.stepper(config, potential)
    for n in range(1, nsteps + 1):
        try:
            v, mu, _ = step_surface(domain, v, stepper)
        except SolverError as exc:
            raise StepError(n, exc) from exc
        t = n * config.tau
        traj.rows.append((n, t, domain.weighted_mass(v), domain.energy(v, potential),
                          np.sqrt(max(domain.weighted_dirichlet(mu), 0.0))))
        if n in snaps:
            traj.snapshots[snaps[n]] = v.copy()
        if callback is not None:
            callback(n, t, v, mu)
    return traj


def write_surface_field(path, values):
    """CSV rows ``(i, j, value)`` for any field on the surface grid."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "value"])
        for (i, j), val in np.ndenumerate(values):
            w.writerow([i, j, repr(float(val))])


def read_surface_field(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))[1:]
    n1 = max(int(r[0]) for r in rows) + 1
    n2 = max(int(r[1]) for r in rows) + 1
    v = np.empty((n1, n2))
    for r in rows:
        v[int(r[0]), int(r[1])] = float(r[2])
    return v
