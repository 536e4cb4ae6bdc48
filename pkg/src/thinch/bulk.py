"""Cahn--Hilliard dynamics in the thin shell, discretized in box coordinates.

Fields are numpy arrays of shape ``grid.shape == (n1, n2, n3 + 1)``; the
``ThinDomain`` carries the geometry tables and the assembled operators.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .fem import StabilizedStepper, assemble_stiffness, cell_means, SolverError
from .geometry import GeometryError
from .pullback import build_coefficients

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BulkStepperConfig:
    tau: float
    stabilization: float = 2.0
    tol_lin: float = 1e-11
    max_iter: int = 50

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not (0 < self.tol_lin <= 1e-6):
            raise ValueError("tol_lin must lie in (0, 1e-6]")
        if self.stabilization < 0:
            raise ValueError("stabilization must be nonnegative")


class ThinDomain:
    """Discrete thin shell: coefficients, Q1 stiffness and lumped mass."""

    def __init__(self, chart, profile, grid, check=True):
        self.chart = chart
        self.profile = profile
        self.grid = grid
        self.coeffs = build_coefficients(chart, profile, grid, check=check)
        self.shape = grid.shape
        self.mass = (
            self.coeffs.detJac * (grid.h1 * grid.h2) * grid.s3_weights()[None, None, :]
        ).ravel()
        A_cells = cell_means(self.coeffs.Aeps, (True, True, False))
        self.K = assemble_stiffness(
            self.shape, (grid.h1, grid.h2, grid.h3), (True, True, False), A_cells
        )
        self._surface = None

    @property
    def eps(self):
        return self.grid.eps

    @property
    def volume(self):
        return float(self.mass.sum())

    def surface(self):
        """The matching surface discretization (same columns)."""
        if self._surface is None:
            from .surface import SurfaceDomain

            self._surface = SurfaceDomain(
                self.chart, self.profile, self.grid.n1, self.grid.n2
            )
        return self._surface

    # -- operators ------------------------------------------------------
    def laplacian(self, U):
        """``L U = (1/detJac) div_s(A grad_s U)`` with natural boundary in s3."""
        return (-(self.K @ np.ravel(U)) / self.mass).reshape(self.shape)

    def total_mass(self, U):
        return float(np.dot(self.mass, np.ravel(U)))

    def dirichlet(self, U, V=None):
        """``int A grad U . grad V`` (``V = U`` by default)."""
        u = np.ravel(U)
        v = u if V is None else np.ravel(V)
        return float(np.dot(v, self.K @ u))

    def energy(self, U, potential):
        """Ginzburg--Landau energy ``int |grad u|^2/2 + F(u)``."""
        return 0.5 * self.dirichlet(U) + float(np.dot(self.mass, potential(np.ravel(U))))

    def l2_norm(self, U):
        return float(np.sqrt(np.dot(self.mass, np.ravel(U) ** 2)))

    def chart_gradient(self, U):
        """Centered differences ``(dU/ds1, dU/ds2, dU/ds3)``.

        s1, s2 wrap periodically; s3 uses second-order one-sided differences
        on the two boundary layers.
        """
        g = self.grid
        d1 = (np.roll(U, -1, 0) - np.roll(U, 1, 0)) / (2 * g.h1)
        d2 = (np.roll(U, -1, 1) - np.roll(U, 1, 1)) / (2 * g.h2)
        d3 = np.empty_like(U)
        d3[..., 1:-1] = (U[..., 2:] - U[..., :-2]) / (2 * g.h3)
        d3[..., 0] = (-3 * U[..., 0] + 4 * U[..., 1] - U[..., 2]) / (2 * g.h3)
        d3[..., -1] = (3 * U[..., -1] - 4 * U[..., -2] + U[..., -3]) / (2 * g.h3)
        return np.stack([d1, d2, d3], axis=-1)

    def ambient_gradient(self, U):
        """Reconstruct ``grad u`` from ``grad_s U = (grad_s Psi) grad u``."""
        ds = self.chart_gradient(U)
        return np.linalg.solve(self.coeffs.jac, ds[..., None])[..., 0]

    def normal_derivative(self, U):
        """``d_nu u = (1/g) dU/ds3``."""
        return self.chart_gradient(U)[..., 2] / self.coeffs.gval[..., None]

    def normal_derivative_norm(self, U):
        nd = self.normal_derivative(U)
        return float(np.sqrt(np.dot(self.mass, nd.ravel() ** 2)))

    def init_from_surface(self, v0):
        """Matched initial data ``U = v0 / J`` (its weighted average is ``v0``)."""
        v0 = np.asarray(v0, dtype=float)
        if v0.shape != self.grid.surface_shape:
            raise ValueError("surface field does not match the grid columns")
        if np.any(self.coeffs.Jval <= 0):
            raise GeometryError("non-positive J")
        return v0[..., None] / self.coeffs.Jval

    def random_field(self, seed, mean=0.0, amplitude=0.05):
        rng = np.random.default_rng(seed)
        return mean + amplitude * rng.uniform(-1.0, 1.0, self.shape)

    def stepper(self, config, potential):
        return StabilizedStepper(
            self.K,
            self.mass,
            config.tau,
            config.stabilization,
            potential.dF,
            tol=config.tol_lin,
            maxiter=config.max_iter,
        )


def discrete_laplacian(domain, U):
    return domain.laplacian(U)


def bulk_energy(domain, U, potential):
    return domain.energy(U, potential)


def normal_derivative_norm(domain, U):
    return domain.normal_derivative_norm(U)


def init_from_surface(domain, v0):
    return domain.init_from_surface(v0)


def step(domain, U, stepper):
    """One stabilized step; returns ``(U_next, W_next, info)``."""
    u, w, info = stepper.step(np.ravel(U))
    return u.reshape(domain.shape), w.reshape(domain.shape), info


class StepError(RuntimeError):
    def __init__(self, step_index, cause):
        super().__init__(f"step {step_index} failed: {cause}")
        self.step_index = step_index
        self.cause = cause


@dataclass
class Trajectory:
    """Per-step log rows plus snapshots keyed by their (nominal) time."""

    columns: tuple
    rows: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)

    def column(self, name):
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])


def snapshot_steps(T, tau, times):
    """Map requested snapshot times to step indices (nearest step)."""
    return {int(round(t / tau)): t for t in times if 0 <= t <= T + 1e-14}


def run(domain, U0, T, config, potential, snapshot_times=(), callback=None):
    """Integrate to time ``T``; logs step, time, mass, energy, |grad w|, |d_nu u|.

    ``callback(n, t, U, W)`` is invoked after every step if given.
    """
    cols = ("step", "time", "mass", "energy", "grad_w_norm", "normal_deriv_norm")
    traj = Trajectory(cols)
    U = np.array(U0, dtype=float)
    traj.rows.append(
        (0, 0.0, domain.total_mass(U), domain.energy(U, potential), float("nan"),
         domain.normal_derivative_norm(U))
    )
    snaps = snapshot_steps(T, config.tau, snapshot_times)
    if 0 in snaps:
        traj.snapshots[snaps[0]] = U.copy()
    nsteps = int(round(T / config.tau))
    if nsteps == 0:
        return traj
    stepper = domain.stepper(config, potential)
    for n in range(1, nsteps + 1):
        try:
            U, W, _ = step(domain, U, stepper)
        except SolverError as exc:
            raise StepError(n, exc) from exc
        t = n * config.tau
        traj.rows.append(
            (n, t, domain.total_mass(U), domain.energy(U, potential),
             np.sqrt(max(domain.dirichlet(W), 0.0)), domain.normal_derivative_norm(U))
        )
        if n in snaps:
            traj.snapshots[snaps[n]] = U.copy()
        if callback is not None:
            callback(n, t, U, W)
    return traj


def write_snapshot(path, domain, U, time=0.0):
    """Node values as CSV behind a 5-line header (grid dims, eps)."""
    g = domain.grid
    with open(path, "w", newline="") as fh:
        fh.write(f"# n1 {g.n1}\n# n2 {g.n2}\n# n3 {g.n3}\n# eps {g.eps!r}\n# time {time!r}\n")
        w = csv.writer(fh)
        w.writerow(["i", "j", "k", "value"])
        for idx, val in np.ndenumerate(U):
            w.writerow([*idx, repr(float(val))])


def read_snapshot(path):
    with open(path) as fh:
        header = [next(fh).split() for _ in range(5)]
        meta = {h[1]: h[2] for h in header}
        shape = (int(meta["n1"]), int(meta["n2"]), int(meta["n3"]) + 1)
        next(fh)
        U = np.empty(shape)
        for row in csv.reader(fh):
            U[int(row[0]), int(row[1]), int(row[2])] = float(row[3])
    return U, {"eps": float(meta["eps"]), "time": float(meta["time"])}
