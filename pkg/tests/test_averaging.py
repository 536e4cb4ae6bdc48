import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinch.averaging import (
    average,
    average_tangential_gradient,
    pairing_residual,
    residual_zeta_delta,
    residual_zeta_F,
)
from thinch.bulk import ThinDomain
from thinch.geometry import SurfaceChart, ThicknessProfile
from thinch.pullback import ReferenceGrid
from thinch.study import flat_layer_commutator

WAVY = ThicknessProfile.sinusoidal(0.2, 1, 1.0, -0.3)


@pytest.fixture(scope="module")
def domains():
    return [
        ThinDomain(SurfaceChart.torus(), WAVY, ReferenceGrid(16, 8, 4, 0.2)),
        ThinDomain(SurfaceChart.flat_sheet(), WAVY, ReferenceGrid(8, 8, 3, 0.3)),
    ]


@given(st.integers(0, 2**32 - 1))
def test_pairing_identity_is_exact(seed):
    rng = np.random.default_rng(seed)
    for d in (ThinDomain(SurfaceChart.torus(), WAVY, ReferenceGrid(8, 8, 3, 0.2)),):
        U = rng.standard_normal(d.shape)
        eta = rng.standard_normal(d.grid.surface_shape)
        res, lhs = pairing_residual(d, U, eta)
        assert res <= 1e-13 * np.dot(d.mass, np.abs(U * eta[..., None]).ravel())


def test_matched_data_average_is_exact(domains, rng):
    for d in domains:
        v = rng.standard_normal(d.grid.surface_shape)
        U = d.init_from_surface(v)
        assert np.abs(average(d, U) - v).max() < 1e-13
        assert d.total_mass(U) == pytest.approx(d.eps * d.surface().weighted_mass(v), rel=1e-13)


def test_average_is_linear(domains, rng):
    d = domains[0]
    U, V = rng.standard_normal((2,) + d.shape)
    assert np.allclose(average(d, 2 * U - V), 2 * average(d, U) - average(d, V))


@pytest.mark.parametrize("n3", [2, 4, 7])
def test_flat_layer_variance_with_trapezoid_term(n3):
    eps = 0.1
    assert flat_layer_commutator(eps, n3) == pytest.approx(
        eps**2 / 12 + (eps / n3) ** 2 / 6, rel=1e-12)


def test_residuals_vanish_on_flat_extended_fields(rng):
    d = ThinDomain(SurfaceChart.flat_sheet(), ThicknessProfile(), ReferenceGrid(8, 8, 3, 0.1))
    U = d.init_from_surface(rng.standard_normal((8, 8)))
    assert np.abs(residual_zeta_delta(d, U)).max() < 1e-10
    assert np.abs(residual_zeta_F(d, U, lambda z: z**3 - z)).max() < 1e-14


def test_residuals_shrink_with_eps():
    norms = []
    for eps in (0.2, 0.1, 0.05):
        d = ThinDomain(SurfaceChart.torus(), WAVY, ReferenceGrid(32, 16, 4, eps))
        S1, S2 = d.grid.surface_nodes()
        U = d.init_from_surface(0.1 * np.sin(2 * np.pi * S1))
        norms.append(np.abs(residual_zeta_delta(d, U)).max())
    assert norms[0] > norms[1] > norms[2]


def test_tangential_gradient_identity():
    # both sides are discretized with O(h^2) differences; the gap must shrink
    gaps = []
    for n in (16, 32):
        d = ThinDomain(SurfaceChart.torus(), WAVY, ReferenceGrid(2 * n, n, 4, 0.2))
        S1, S2 = d.grid.surface_nodes()
        s3 = d.grid.s3_nodes()
        U = np.sin(2 * np.pi * S1)[..., None] * np.cos(2 * np.pi * S2)[..., None] * (1 + 3 * s3)
        d1, d2 = average_tangential_gradient(d, U)
        e1, e2 = d.surface().chart_gradient(average(d, U))
        gaps.append(max(np.abs(d1 - e1).max(), np.abs(d2 - e2).max()))
    assert gaps[1] < 0.35 * gaps[0]
