import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinch.bulk import (
    BulkStepperConfig,
    ThinDomain,
    read_snapshot,
    run,
    snapshot_steps,
    write_snapshot,
)
from thinch.geometry import SurfaceChart, ThicknessProfile
from thinch.potential import Potential
from thinch.pullback import ReferenceGrid, map_psi

WAVY = ThicknessProfile.sinusoidal(0.2, 1, 1.0, -0.3)


def shell_points(domain):
    g = domain.grid
    S1, S2 = g.surface_nodes()
    s3 = g.s3_nodes()
    shape = g.shape
    return map_psi(domain.chart, domain.profile, g.eps,
                   (np.broadcast_to(S1[..., None], shape), np.broadcast_to(S2[..., None], shape),
                    np.broadcast_to(s3, shape)))


@pytest.fixture(scope="module")
def torus_domain():
    return ThinDomain(SurfaceChart.torus(), WAVY, ReferenceGrid(16, 8, 4, 0.2))


def test_config_validation():
    with pytest.raises(ValueError):
        BulkStepperConfig(tau=0.0)
    with pytest.raises(ValueError):
        BulkStepperConfig(tau=1e-5, tol_lin=1e-3)
    with pytest.raises(ValueError):
        BulkStepperConfig(tau=1e-5, stabilization=-1)


def test_laplacian_annihilates_constants(torus_domain):
    assert np.abs(torus_domain.laplacian(np.ones(torus_domain.shape))).max() < 1e-9


def test_laplacian_has_zero_weighted_mean(torus_domain, rng):
    U = rng.standard_normal(torus_domain.shape)
    LU = torus_domain.laplacian(U)
    assert abs(torus_domain.total_mass(LU)) < 1e-10 * np.abs(torus_domain.mass * LU.ravel()).sum()


def test_laplacian_manufactured_quadratic():
    # |x|^2 has Laplacian 6 in any region; interior layers converge at O(h^2)
    errs = []
    for n in (16, 32):
        d = ThinDomain(SurfaceChart.torus(), WAVY, ReferenceGrid(2 * n, n, n // 4, 0.2))
        U = np.sum(shell_points(d) ** 2, axis=-1)
        errs.append(np.abs(d.laplacian(U)[..., 1:-1] - 6.0).max())
    assert errs[1] < 0.3 * errs[0]


def test_flat_sheet_reduces_to_surface_operator(rng):
    # s3-independent fields on the flat unit-thickness sheet see exactly the
    # surface operator
    d = ThinDomain(SurfaceChart.flat_sheet(), ThicknessProfile(), ReferenceGrid(8, 8, 3, 0.1))
    v = rng.standard_normal((8, 8))
    U = d.init_from_surface(v)
    assert np.array_equal(U, np.repeat(v[..., None], 4, axis=2))
    LU = d.laplacian(U)
    assert np.abs(LU - d.surface().apply_Ag(v)[..., None]).max() < 1e-10


def test_normal_derivative(torus_domain):
    d = torus_domain
    U = np.broadcast_to(d.grid.s3_nodes(), d.shape)
    assert np.allclose(d.normal_derivative(U), 1.0 / d.coeffs.gval[..., None])
    S1, _ = d.grid.surface_nodes()
    assert np.abs(d.normal_derivative(np.repeat(S1[..., None], d.shape[2], 2))).max() < 1e-13


def test_ambient_gradient_of_linear_function(torus_domain):
    d = torus_domain
    X = shell_points(d)
    grad = d.ambient_gradient(X[..., 2])
    # x3 is exact in s3; tangential centered differences carry O(h^2)
    assert np.abs(grad - np.array([0, 0, 1.0])).max() < 0.1


def test_energy_of_constant_state(torus_domain):
    F = Potential.quartic_double_well()
    U = np.full(torus_domain.shape, 0.5)
    assert torus_domain.energy(U, F) == pytest.approx(torus_domain.volume * F(0.5))


def test_short_run_conserves_and_dissipates(torus_domain):
    d = torus_domain
    U0 = d.random_field(7, amplitude=0.8)
    traj = run(d, U0, 2e-4, BulkStepperConfig(1e-5), Potential.quartic_double_well(),
               snapshot_times=(1e-4,))
    mass = traj.column("mass")
    assert np.abs(mass - mass[0]).max() <= 1e-12 * np.dot(d.mass, np.abs(U0).ravel())
    assert np.all(np.diff(traj.column("energy")) <= 1e-12)
    assert list(traj.snapshots) == [1e-4]
    assert len(traj.rows) == 21


def test_runs_are_bitwise_reproducible(torus_domain):
    F = Potential.quartic_double_well()
    a = run(torus_domain, torus_domain.random_field(3), 5e-5, BulkStepperConfig(1e-5), F)
    b = run(torus_domain, torus_domain.random_field(3), 5e-5, BulkStepperConfig(1e-5), F)
    assert a.rows == b.rows or np.array_equal(np.array(a.rows), np.array(b.rows), equal_nan=True)


def test_zero_time_run(torus_domain):
    traj = run(torus_domain, np.zeros(torus_domain.shape), 0.0, BulkStepperConfig(1e-5),
               Potential.quartic_double_well())
    assert len(traj.rows) == 1


@given(st.floats(0, 1), st.floats(1e-6, 1e-2))
def test_snapshot_steps_round_to_nearest(frac, tau):
    T = 100 * tau
    steps = snapshot_steps(T, tau, (frac * T,))
    (n,) = steps
    assert abs(n * tau - frac * T) <= 0.5 * tau + 1e-15


def test_snapshot_round_trip(tmp_path, torus_domain, rng):
    U = rng.standard_normal(torus_domain.shape)
    path = tmp_path / "snap.csv"
    write_snapshot(path, torus_domain, U, time=0.25)
    back, meta = read_snapshot(path)
    assert np.array_equal(back, U)
    assert meta == {"eps": 0.2, "time": 0.25}
