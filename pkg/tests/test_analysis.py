import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinch.analysis import (
    ConvergenceReport,
    FitError,
    PreconditionError,
    bulk_difference,
    fit_rate,
    read_convergence_csv,
    smallest_weighted_eigenvalue,
    surface_norm,
)
from thinch.bulk import ThinDomain
from thinch.geometry import SurfaceChart, ThicknessProfile
from thinch.pullback import ReferenceGrid
from thinch.surface import SurfaceDomain

WAVY = ThicknessProfile.sinusoidal(0.2, 1, 1.0, -0.3)


def test_fit_rate_exact_lines():
    assert fit_rate([(0.4, 0.08), (0.2, 0.04), (0.1, 0.02)])["slope"] == pytest.approx(1.0)
    assert fit_rate([(0.4, 0.16), (0.2, 0.04), (0.1, 0.01)])["slope"] == pytest.approx(2.0)
    flat = fit_rate([(0.4, 0.3), (0.2, 0.3), (0.1, 0.3)])
    assert flat["slope"] == pytest.approx(0.0, abs=1e-12)
    assert flat["residual"] == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_rejects_bad_input():
    with pytest.raises(FitError):
        fit_rate([(0.4, 0.1), (0.2, 0.05)])
    with pytest.raises(FitError):
        fit_rate([(0.4, 0.1), (0.2, 0.0), (0.1, 0.01)])


@given(st.lists(st.floats(1e-6, 1.0), min_size=3, max_size=6), st.floats(1e-3, 1e3))
def test_fit_rate_slope_is_scale_invariant(errs, c):
    pts = [(0.5**i, e) for i, e in enumerate(errs)]
    a = fit_rate(pts)
    b = fit_rate([(x, c * y) for x, y in pts])
    assert b["slope"] == pytest.approx(a["slope"], abs=1e-10)
    assert b["intercept"] - a["intercept"] == pytest.approx(math.log(c), abs=1e-10)


@pytest.fixture(scope="module")
def flat_surface():
    return SurfaceDomain(SurfaceChart.flat_sheet(), ThicknessProfile(), 64, 64)


def test_norms_of_zero(flat_surface):
    z = np.zeros(flat_surface.shape)
    for kind in ("L2", "H1", "Lg_semi"):
        assert surface_norm(flat_surface, z, kind) == 0.0


def test_norms_of_a_fourier_mode(flat_surface):
    v = np.cos(2 * np.pi * flat_surface.S1)
    assert surface_norm(flat_surface, v, "L2") == pytest.approx(math.sqrt(0.5), rel=1e-12)
    # the discrete eigenvalue differs from 4 pi^2 at O(h^2)
    assert surface_norm(flat_surface, v, "Lg_semi") == pytest.approx(
        math.sqrt(0.5) / (2 * np.pi), rel=1e-3)
    assert surface_norm(flat_surface, v, "H1") == pytest.approx(
        math.sqrt(0.5 * (1 + 4 * np.pi**2)), rel=1e-3)


def test_lg_semi_needs_mean_zero(flat_surface):
    with pytest.raises(PreconditionError):
        surface_norm(flat_surface, np.ones(flat_surface.shape), "Lg_semi")
    with pytest.raises(ValueError):
        surface_norm(flat_surface, np.ones(flat_surface.shape), "H2")


def test_torus_constant_norm():
    surf = SurfaceDomain(SurfaceChart.torus(), ThicknessProfile(), 24, 12)
    assert surface_norm(surf, np.ones(surf.shape)) == pytest.approx(math.sqrt(8 * np.pi**2))


def test_lg_semi_bounded_by_first_eigenvalue(rng):
    surf = SurfaceDomain(SurfaceChart.torus(), WAVY, 24, 12)
    lam1 = smallest_weighted_eigenvalue(surf)
    assert lam1 > 0
    # the bound holds in the weighted norm; weights g lie in [0.9, 1.5] here
    gmin, gmax = surf.g.min(), surf.g.max()
    for _ in range(5):
        v = rng.standard_normal(surf.shape)
        v -= surf.weighted_mean(v)
        assert surface_norm(surf, v, "Lg_semi") <= math.sqrt(gmax / gmin / lam1) * surface_norm(surf, v) * (1 + 1e-9)


def test_bulk_difference_flat_matched_is_zero(rng):
    d = ThinDomain(SurfaceChart.flat_sheet(), ThicknessProfile(), ReferenceGrid(8, 8, 3, 0.1))
    v = rng.standard_normal((8, 8))
    out = bulk_difference(d, d.init_from_surface(v), v)
    assert out["e_u"] == 0.0
    assert out["e_grad"] < 1e-12


def test_bulk_difference_against_zero(rng):
    d = ThinDomain(SurfaceChart.torus(), WAVY, ReferenceGrid(8, 8, 3, 0.1))
    U = rng.standard_normal(d.shape)
    assert bulk_difference(d, U, np.zeros((8, 8)))["e_u"] == pytest.approx(
        d.l2_norm(U) / math.sqrt(0.1))


def test_bulk_difference_matched_torus_shrinks():
    vals = []
    for eps in (0.2, 0.1, 0.05):
        d = ThinDomain(SurfaceChart.torus(), ThicknessProfile(), ReferenceGrid(16, 8, 4, eps))
        S1, _ = d.grid.surface_nodes()
        v = np.sin(2 * np.pi * S1)
        vals.append(bulk_difference(d, d.init_from_surface(v), v)["e_u"])
    assert vals[0] > vals[1] > vals[2] > 0
    assert fit_rate(list(zip((0.2, 0.1, 0.05), vals)))["slope"] > 0.4


def test_report_round_trip(tmp_path):
    rep = ConvergenceReport({"err_L2": 0.8})
    for i, eps in enumerate((0.2, 0.1, 0.05)):
        rep.add(eps, {c: (i + 1.0) * 0 + eps * k for k, c in enumerate(
            ("err_L2", "err_H1", "err_Lg", "err_bulk_u", "err_bulk_grad", "nd_scaled"), 1)})
    with pytest.raises(ValueError):
        rep.add(0.1, {})
    rep.fit()
    assert rep.passed == {"err_L2": True} and rep.ok
    path = tmp_path / "c.csv"
    rep.write_csv(path)
    entries, slopes = read_convergence_csv(path)
    assert len(entries) == 3
    for col, rate in rep.fitted_rates.items():
        recomputed = fit_rate([(e["epsilon"], e[col]) for e in entries])["slope"]
        assert slopes[col] == rate == pytest.approx(recomputed, abs=1e-14)


def test_report_round_off_errors_are_not_applicable():
    rep = ConvergenceReport({"err_L2": 0.8})
    for eps in (0.2, 0.1, 0.05):
        rep.add(eps, dict.fromkeys(
            ("err_L2", "err_H1", "err_Lg", "err_bulk_u", "err_bulk_grad", "nd_scaled"), 1e-15))
    rep.fit()
    assert math.isnan(rep.fitted_rates["err_L2"])
    assert rep.passed["err_L2"] is None and not rep.applicable and rep.ok


def test_report_needs_three_entries():
    rep = ConvergenceReport({})
    rep.add(0.1, {})
    rep.fit()
    assert not rep.complete and not rep.ok
