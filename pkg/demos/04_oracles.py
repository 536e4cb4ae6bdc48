"""Three routes to the same flat Cahn-Hilliard solution.

Fourier modes diagonalize the linear part on the flat periodic square, so
the spectral integrator and a small Galerkin ODE can both check the grid
solvers.  With matched time steps only the spatial error remains, and it
shrinks like h^2.
"""
import numpy as np

from thinch import Potential, SurfaceChart, SurfaceDomain, SurfaceStepperConfig, ThicknessProfile
from thinch import run_surface
from thinch.oracle import GalerkinSystem, galerkin_ode, spectral_run

F = Potential.quartic_double_well()

# spectral vs Galerkin on a band-limited state (9 modes)
system = GalerkinSystem(9, F)
alpha0 = np.array([0.0, 2e-3, 1e-3, -1e-3, 5e-4, 0, 0, 3e-4, 0])
u0 = system.to_grid(alpha0, 16)
T, tau = 2e-3, 1e-6
spec = spectral_run(u0, T, tau, F)
gal = galerkin_ode(9, alpha0, T, 2000, F)
print("spectral vs Galerkin, max coefficient gap:", np.abs(system.project(spec.field()) - gal).max())

# grid surface solver vs spectral under refinement
T, tau, S = 1e-2, 1e-5, 2.0
prev = None
for n in (16, 32, 64):
    surf = SurfaceDomain(SurfaceChart.flat_sheet(), ThicknessProfile(), n, n)
    v0 = 0.4 * np.cos(2 * np.pi * surf.S1) + 0.3 * np.sin(2 * np.pi * (surf.S1 + surf.S2))
    v = run_surface(surf, v0, T, SurfaceStepperConfig(tau, S), F, snapshot_times=(T,)).snapshots[T]
    gap = np.abs(v - spectral_run(v0, T, tau, F, S).field()).max()
    ratio = "" if prev is None else f"  (ratio {prev / gap:.2f})"
    print(f"n = {n:3d}: grid vs spectral L_inf gap {gap:.3e}{ratio}")
    prev = gap
