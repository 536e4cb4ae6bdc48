"""Experiment drivers: convergence study, residual sweep, verification suite
and the plain simulation runs used by the command line."""
from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import ConvergenceReport, bulk_difference, surface_norm
from .averaging import (
    average,
    average_from_coefficients,
    pairing_residual,
    residual_zeta_delta,
    residual_zeta_F,
)
from .bulk import BulkStepperConfig, StepError, ThinDomain, run, write_snapshot
from .config import ConfigError
from .fem import SolverError
from .geometry import GeometryError, SurfaceChart, ThicknessProfile, epsilon_limit, shape_data
from .oracle import GalerkinSystem, galerkin_ode, spectral_run
from .potential import verify_growth
from .pullback import ReferenceGrid, build_coefficients
from .surface import SurfaceDomain, SurfaceStepperConfig, run_surface, write_surface_field

log = logging.getLogger(__name__)

RATE_COLUMNS = ("err_L2", "err_Lg", "err_bulk_u", "err_bulk_grad", "nd_scaled")


def snapshot_times(T):
    return (0.25 * T, 0.5 * T, 0.75 * T, T)


def study_tau(cfg, grid):
    """Matched step ``c_tau h^4`` (``h`` the finer chart spacing), capped."""
    h = min(grid.h1, grid.h2)
    return min(float(cfg["study.c_tau"]) * h**4, float(cfg["study.tau_cap"]))


def initial_surface_field(cfg, S1, S2, seed=None):
    """``v0`` on the chart grid from the ``study.v0`` preset."""
    kind = cfg["study.v0"]
    amp = float(cfg["study.v0_amplitude"])
    k1, k2 = cfg["study.v0_wavenumber"]
    phase = 2 * np.pi * (k1 * S1 + k2 * S2)
    if kind == "mode":
        return amp * np.sin(phase)
    if kind == "tanh":
        return amp * np.tanh(4.0 * np.cos(phase))
    if kind == "random":
        rng = np.random.default_rng(cfg["bulk.seed"] if seed is None else seed)
        return amp * rng.uniform(-1.0, 1.0, S1.shape)
    raise ConfigError(f"unknown study.v0 preset {kind!r}")


def thin_perturbation(domain, alpha):
    """Zero-average oscillation in s3 of size ``eps^{1-alpha}``.

    Uses the fastest resolvable layer mode and subtracts ``(M p)/J`` so the
    weighted average (hence the matching with ``v0``) is untouched.
    """
    g = domain.grid
    k = np.arange(g.n3 + 1)
    p = g.eps ** (1.0 - alpha) * np.cos(0.5 * np.pi * k)
    P = np.broadcast_to(p, g.shape)
    return P - average(domain, P)[..., None] / domain.coeffs.Jval


def _validate_study(cfg):
    eps_list = cfg.epsilons()
    chart, profile = cfg.chart(), cfg.profile()
    if chart.periodic:
        limit = epsilon_limit(chart, profile)
        bad = [e for e in eps_list if e > limit]
        if bad:
            raise ConfigError(f"epsilons {bad} exceed the tubular bound {limit:.4g}")
    return eps_list, chart, profile


def measure_errors(domain, U, surf, v, tol=1e-11):
    """All convergence metrics for one snapshot pair ``(U, v)``."""
    d = average(domain, U) - v
    out = {
        "err_L2": surface_norm(surf, d, "L2"),
        "err_H1": surface_norm(surf, d, "H1"),
        "err_Lg": surface_norm(surf, d, "Lg_semi", tol=tol),
    }
    bd = bulk_difference(domain, U, v)
    out["err_bulk_u"] = bd["e_u"]
    out["err_bulk_grad"] = bd["e_grad"]
    out["nd_scaled"] = domain.eps**-0.5 * domain.normal_derivative_norm(U)
    return out


def run_convergence_study(cfg, out_dir=None):
    """Co-evolve shell and surface equations for every ``eps`` and fit rates.

    Errors are the sup over the snapshot times ``T/4, T/2, 3T/4, T``.  The
    surface solution does not depend on ``eps`` and is computed once.
    """
    eps_list, chart, profile = _validate_study(cfg)
    potential = cfg.potential()
    alpha = float(cfg["study.alpha"])
    thr = float(cfg["study.rate_threshold"])
    thresholds = {c: thr for c in RATE_COLUMNS} if alpha == 0 else {}
    report = ConvergenceReport(thresholds)
    if alpha != 0:
        report.notes.append(f"alpha = {alpha}: exploratory, thresholds not asserted")

    T = float(cfg["study.T"])
    times = snapshot_times(T)
    grid0 = cfg.grid(eps_list[0])
    tau = study_tau(cfg, grid0)
    S = float(cfg["bulk.stabilization"])
    tol = float(cfg["bulk.tol_lin"])
    surf = SurfaceDomain(chart, profile, grid0.n1, grid0.n2)
    v0 = initial_surface_field(cfg, surf.S1, surf.S2)
    log.info("surface run: tau=%.3g, %d steps", tau, int(round(T / tau)))
    straj = run_surface(surf, v0, T, SurfaceStepperConfig(tau, S, float(cfg["surface.tol_lin"])),
                        potential, snapshot_times=times)

    for eps in eps_list:
        domain = ThinDomain(chart, profile, cfg.grid(eps))
        domain._surface = surf
        U0 = domain.init_from_surface(v0)
        if alpha != 0:
            U0 = U0 + thin_perturbation(domain, alpha)
        log.info("bulk run eps=%g", eps)
        try:
            btraj = run(domain, U0, T, BulkStepperConfig(tau, S, tol), potential,
                        snapshot_times=times)
        except (StepError, SolverError) as exc:
            report.complete = False
            report.notes.append(f"eps={eps}: {exc}")
            continue
        sup = {}
        for t in times:
            errs = measure_errors(domain, btraj.snapshots[t], surf, straj.snapshots[t])
            for k, val in errs.items():
                sup[k] = max(sup.get(k, 0.0), val)
        report.add(eps, sup)
        log.info("eps=%g %s", eps, {k: f"{v:.3e}" for k, v in sup.items()})

    report.fit()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        report.write_csv(os.path.join(out_dir, "convergence.csv"))
    return report


def run_residual_sweep(cfg, out_dir=None, epsilons=None):
    """Residuals of the averaged equations on matched fields ``U = v0/J``.

    Returns rows ``(eps, |zeta_Delta|, |zeta_F|, |grad zeta_Delta|)`` in the
    area-weighted surface L2 norm, with ``F'`` as the nonlinear probe.
    """
    chart, profile = cfg.chart(), cfg.profile()
    potential = cfg.potential()
    eps_list = [float(e) for e in (epsilons or cfg["study.residual_epsilons"])]
    rows = []
    for eps in eps_list:
        domain = ThinDomain(chart, profile, cfg.grid(eps))
        surf = domain.surface()
        v0 = initial_surface_field(cfg, surf.S1, surf.S2)
        U = domain.init_from_surface(v0)
        zd = residual_zeta_delta(domain, U)
        zf = residual_zeta_F(domain, U, potential.dF)
        grad = surf.tangential_gradient(zd)
        gnorm = math.sqrt(float(np.dot(surf.area_weight, np.sum(grad**2, axis=-1).ravel())))
        rows.append((eps, surface_norm(surf, zd), surface_norm(surf, zf), gnorm))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "residuals.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "zeta_delta_L2", "zeta_F_L2", "grad_zeta_delta_L2"])
            for row in rows:
                w.writerow([repr(float(x)) for x in row])
    return rows


def flat_layer_commutator(eps, n3, n=8):
    """``M(u^2) - (M u)^2`` for ``u = s3`` on the flat unit-thickness sheet.

    The continuum value is the layer variance ``eps^2/12``; the trapezoid rule
    adds exactly ``(eps/n3)^2 / 6``.
    """
    grid = ReferenceGrid(n, n, n3, eps)
    coeffs = build_coefficients(SurfaceChart.flat_sheet(), ThicknessProfile(), grid)
    U = np.broadcast_to(grid.s3_nodes(), grid.shape)
    zeta = average_from_coefficients(coeffs, U**2) - average_from_coefficients(coeffs, U) ** 2
    return float(np.max(np.abs(zeta)))


# -- verification suite -------------------------------------------------

@dataclass
class Check:
    name: str
    status: str  # "pass", "fail" or "skip"
    detail: str = ""

    def line(self):
        return f"[{self.status.upper():4s}] {self.name}: {self.detail}"


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    def add(self, name, ok, detail=""):
        self.checks.append(Check(name, "pass" if ok else "fail", detail))

    def skip(self, name, why):
        self.checks.append(Check(name, "skip", why))

    @property
    def ok(self):
        return all(c.status != "fail" for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]


DYNAMIC_CHECKS = (
    "conservation_bulk", "conservation_surface", "energy_bulk", "energy_surface",
)
LATER_CHECKS = (
    "ellipticity", "pairing", "matched_data", "potential_growth",
) + DYNAMIC_CHECKS + ("lg_roundtrip", "oracle_spectral_galerkin", "oracle_flat_surface")


def mass_drift(masses, scale):
    masses = np.asarray(masses)
    return float(np.max(np.abs(masses - masses[0]))) / scale


def max_energy_increase(energies):
    return float(np.max(np.diff(energies), initial=0.0))


def _check_dynamics(report, name, masses, energies, mass_scale):
    drift = mass_drift(masses, mass_scale)
    report.add(f"conservation_{name}", drift <= 1e-10, f"relative mass drift {drift:.2e}")
    inc = max_energy_increase(energies)
    allowed = 1e-10 * max(1.0, abs(energies[0]))
    report.add(f"energy_{name}", inc <= allowed, f"max per-step increase {inc:.2e}")


def run_verification_suite(cfg, seed=None, amplitude=0.8):
    """Module invariants as a pass/fail report (one line per check).

    Dynamic checks evolve seeded random data of the given amplitude for
    ``bulk.T / bulk.tau`` (resp. ``surface.*``) steps.
    """
    report = VerificationReport()
    seed = cfg["bulk.seed"] if seed is None else seed
    rng = np.random.default_rng(seed)
    chart, profile, potential = cfg.chart(), cfg.profile(), cfg.potential()

    try:
        grid = cfg.grid()
        domain = ThinDomain(chart, profile, grid)
    except (GeometryError, ValueError) as exc:
        report.add("geometry_validity", False, str(exc))
        for name in ("geometry_identities",) + LATER_CHECKS:
            report.skip(name, "geometry invalid")
        return report
    report.add("geometry_validity", True,
               f"eps={grid.eps} <= limit {epsilon_limit(chart, profile):.4g}")

    c = domain.coeffs
    S1, S2 = grid.surface_nodes()
    sd = shape_data(chart, S1, S2)
    W, nu = sd["W"], chart.normal(S1, S2)
    wscale = max(1.0, float(np.abs(W).max()))
    sym = float(np.abs(W - np.swapaxes(W, -1, -2)).max()) / wscale
    wnu = float(np.abs(np.einsum("...ij,...j->...i", W, nu)).max()) / wscale
    ok = c.det_mismatch <= 1e-6 and sym <= 1e-10 and wnu <= 1e-10
    report.add("geometry_identities", ok,
               f"det mismatch {c.det_mismatch:.2e}, W asym {sym:.2e}, |W nu| {wnu:.2e}")
    report.add("ellipticity", c.c_ell > 0, f"c_ell={c.c_ell:.4g}")

    surf = domain.surface()
    worst = 0.0
    for _ in range(20):
        U = rng.standard_normal(grid.shape)
        eta = rng.standard_normal(grid.surface_shape)
        res, lhs = pairing_residual(domain, U, eta)
        worst = max(worst, res / max(abs(lhs), float(np.dot(domain.mass, np.abs(U * eta[..., None]).ravel()))))
    report.add("pairing", worst <= 1e-12, f"max relative residual {worst:.2e}")

    v0 = rng.uniform(-1.0, 1.0, grid.surface_shape)
    U0 = domain.init_from_surface(v0)
    err = float(np.abs(average(domain, U0) - v0).max())
    mb, ms = domain.total_mass(U0), grid.eps * surf.weighted_mass(v0)
    mrel = abs(mb - ms) / float(np.dot(domain.mass, np.abs(U0).ravel()))
    report.add("matched_data", err <= 1e-12 and mrel <= 1e-12,
               f"|M u0 - v0|_inf {err:.2e}, mass gap {mrel:.2e}")

    gr = verify_growth(potential)
    report.add("potential_growth", gr["C0_ok"] and gr["C2_ok"] and gr["C3_ok"],
               " ".join(f"{k}={gr[k]}" for k in ("C0_ok", "C2_ok", "C3_ok")))

    bcfg = BulkStepperConfig(float(cfg["bulk.tau"]), float(cfg["bulk.stabilization"]),
                             float(cfg["bulk.tol_lin"]))
    Ur = domain.random_field(seed, amplitude=amplitude)
    try:
        bt = run(domain, Ur, float(cfg["bulk.T"]), bcfg, potential)
        _check_dynamics(report, "bulk", bt.column("mass"), bt.column("energy"),
                        float(np.dot(domain.mass, np.abs(Ur).ravel())))
    except StepError as exc:
        report.add("conservation_bulk", False, str(exc))
        report.add("energy_bulk", False, str(exc))

    scfg = SurfaceStepperConfig(float(cfg["surface.tau"]), float(cfg["surface.stabilization"]),
                                float(cfg["surface.tol_lin"]))
    vr = amplitude * np.random.default_rng(seed).uniform(-1.0, 1.0, surf.shape)
    try:
        st = run_surface(surf, vr, float(cfg["surface.T"]), scfg, potential)
        _check_dynamics(report, "surface", st.column("weighted_mass"),
                        st.column("weighted_energy"),
                        float(np.dot(surf.mass, np.abs(vr).ravel())))
    except StepError as exc:
        report.add("conservation_surface", False, str(exc))
        report.add("energy_surface", False, str(exc))

    worst_res, worst_mean = 0.0, 0.0
    for _ in range(10):
        f = rng.standard_normal(surf.shape)
        f -= surf.weighted_mean(f)
        phi = surf.solve_Lg(f)
        worst_res = max(worst_res, surface_norm(surf, -surf.apply_Ag(phi) - f)
                        / surface_norm(surf, f))
        worst_mean = max(worst_mean, abs(surf.weighted_mean(phi)))
    report.add("lg_roundtrip", worst_res <= 1e-8 and worst_mean <= 1e-12,
               f"relative residual {worst_res:.2e}, output mean {worst_mean:.2e}")

    _oracle_checks(report, cfg, potential)
    return report


def _oracle_checks(report, cfg, potential):
    K = int(cfg["oracle.modes"])
    otau = float(cfg["oracle.tau"])
    T = 2e-3
    system = GalerkinSystem(K, potential)
    n = 16
    alpha0 = np.zeros(K)
    alpha0[1:] = 1e-3 * (1 + np.arange(K - 1)) / K
    u0 = system.to_grid(alpha0, n)
    spec = spectral_run(u0, T, otau, potential, S=0.0)
    gal = galerkin_ode(K, alpha0, T, int(round(T / otau)), potential)
    gap = float(np.abs(system.project(spec.field()) - gal).max())
    report.add("oracle_spectral_galerkin", gap <= 1e-6, f"max coefficient gap {gap:.2e}")

    # flat sheet: surface grid solver against the spectral integrator
    n, tau, T = 32, 1e-5, 1e-3
    surf = SurfaceDomain(SurfaceChart.flat_sheet(), ThicknessProfile(), n, n)
    v0 = 0.3 * np.cos(2 * np.pi * surf.S1) + 0.2 * np.sin(2 * np.pi * (surf.S1 + surf.S2))
    S = float(cfg["surface.stabilization"])
    traj = run_surface(surf, v0, T, SurfaceStepperConfig(tau, S), potential, snapshot_times=(T,))
    ref = spectral_run(v0, T, tau, potential, S).field()
    gap = float(np.abs(traj.snapshots[T] - ref).max())
    report.add("oracle_flat_surface", gap <= 1e-3, f"L_inf gap {gap:.2e} (n={n})")


# -- plain simulation runs ----------------------------------------------

def simulate_bulk(cfg, out_dir):
    """Shell run from ``init_from_surface(v0)``; writes the log and snapshots."""
    domain = ThinDomain(cfg.chart(), cfg.profile(), cfg.grid())
    S1, S2 = domain.grid.surface_nodes()
    U0 = domain.init_from_surface(initial_surface_field(cfg, S1, S2))
    T = float(cfg["bulk.T"])
    times = tuple(cfg["bulk.snapshot_times"]) or (T,)
    bcfg = BulkStepperConfig(float(cfg["bulk.tau"]), float(cfg["bulk.stabilization"]),
                             float(cfg["bulk.tol_lin"]))
    traj = run(domain, U0, T, bcfg, cfg.potential(), snapshot_times=times)
    os.makedirs(out_dir, exist_ok=True)
    traj.write_csv(os.path.join(out_dir, "bulk_log.csv"))
    for i, (t, U) in enumerate(sorted(traj.snapshots.items())):
        write_snapshot(os.path.join(out_dir, f"bulk_snapshot_{i:03d}.csv"), domain, U, t)
    return traj


def simulate_surface(cfg, out_dir):
    chart, profile = cfg.chart(), cfg.profile()
    surf = SurfaceDomain(chart, profile, int(cfg["grid.n1"]), int(cfg["grid.n2"]))
    v0 = initial_surface_field(cfg, surf.S1, surf.S2)
    T = float(cfg["surface.T"])
    times = tuple(cfg["bulk.snapshot_times"]) or (T,)
    scfg = SurfaceStepperConfig(float(cfg["surface.tau"]), float(cfg["surface.stabilization"]),
                                float(cfg["surface.tol_lin"]))
    traj = run_surface(surf, v0, T, scfg, cfg.potential(), snapshot_times=times)
    os.makedirs(out_dir, exist_ok=True)
    traj.write_csv(os.path.join(out_dir, "surface_log.csv"))
    for i, (t, v) in enumerate(sorted(traj.snapshots.items())):
        write_surface_field(os.path.join(out_dir, f"surface_snapshot_{i:03d}.csv"), v)
    return traj
