"""Weighted thin-direction average and its calculus.

In box coordinates ``dr = g ds3`` cancels the ``1/(eps g)`` prefactor:

    M u(s') = (1/eps) int_0^eps U(s', s3) J(psi(s'), r(s)) ds3,

evaluated with the trapezoid rule on the grid layers.  Because the shell's
lumped mass is ``g J sqrt(det theta)`` times the same weights, pairing a
bulk field with a constant extension reproduces ``eps int_Gamma g (M u) eta``
exactly.
"""
from __future__ import annotations

import numpy as np

from .geometry import shape_data, surface_gradient


def average(domain, U):
    """Weighted thin-direction average of a shell field (surface field out)."""
    return average_from_coefficients(domain.coeffs, U)


def average_from_coefficients(coeffs, U):
    """Same as :func:`average` but needs only the pullback tables."""
    g = coeffs.grid
    return np.einsum("ijk,k->ij", np.asarray(U) * coeffs.Jval, g.s3_weights()) / g.eps


def pairing_residual(domain, U, eta):
    """``|int_Omega u eta_bar - eps int_Gamma g (M u) eta|`` and the bulk side.

    Returns ``(residual, lhs)``.
    """
    eta = np.asarray(eta, dtype=float)
    lhs = float(np.dot(domain.mass, (np.asarray(U) * eta[..., None]).ravel()))
    surf = domain.surface()
    rhs = domain.eps * float(np.dot(surf.mass, (average(domain, U) * eta).ravel()))
    return abs(lhs - rhs), lhs


class _AveragingCoefficients:
    """Nodal fields ``B``, ``f_J``, ``b_eps``, ``b_J`` on the reference grid."""

    def __init__(self, domain):
        chart, profile, grid = domain.chart, domain.profile, domain.grid
        c = domain.coeffs
        S1, S2 = grid.surface_nodes()
        sd = shape_data(chart, S1, S2)
        nu = chart.normal(S1, S2)
        P = np.eye(3) - nu[..., :, None] * nu[..., None, :]
        d = c.r[..., None, None]
        self.B = P[:, :, None] - d * sd["W"][:, :, None]
        J = c.Jval
        H = sd["H"][..., None]
        K = sd["K"][..., None]
        r = c.r
        self.fJ = (-H + 2 * r * K) / J

        prof = profile.chart_values(S1, S2)
        grad_g0 = surface_gradient(chart, S1, S2, prof[2], prof[3])[:, :, None]
        grad_g1 = surface_gradient(chart, S1, S2, prof[4], prof[5])[:, :, None]
        eps = grid.eps
        g0 = c.g0val[..., None, None]
        g1 = c.g1val[..., None, None]
        gg = c.gval[..., None, None]
        rr = r[..., None]
        self.b_eps = ((rr - eps * g0) * grad_g1 + (eps * g1 - rr) * grad_g0) / gg

        dH1, dH2, dK1, dK2 = chart.curvature_derivatives(S1, S2)
        grad_H = surface_gradient(chart, S1, S2, dH1, dH2)[:, :, None]
        grad_K = surface_gradient(chart, S1, S2, dK1, dK2)[:, :, None]
        self.b_J = (rr / J[..., None]) * (-grad_H + rr * grad_K)
        self.t1, self.t2 = chart.tangents(S1, S2)


def average_tangential_gradient(domain, U):
    """Chart components of ``grad_Gamma M u`` via the averaging identity

        grad_Gamma M u = M(B grad u) + M((d_nu u + u f_J) b_eps) + M(u b_J).

    Derivatives of ``U`` are centered differences; ``d_nu u = (1/g) dU/ds3``.
    Returns ``(d/ds1 M u, d/ds2 M u)``.
    """
    co = _AveragingCoefficients(domain)
    U = np.asarray(U, dtype=float)
    grad_u = domain.ambient_gradient(U)
    dnu = domain.normal_derivative(U)
    vec = (
        np.einsum("...ij,...j->...i", co.B, grad_u)
        + ((dnu + U * co.fJ)[..., None]) * co.b_eps
        + U[..., None] * co.b_J
    )
    comps = []
    for t in (co.t1, co.t2):
        comps.append(average(domain, np.einsum("ijkc,ijc->ijk", vec, t)))
    return tuple(comps)


def residual_zeta_delta(domain, U):
    """``M(Delta u) - A_g M u`` from the two discrete operators."""
    surf = domain.surface()
    return average(domain, domain.laplacian(U)) - surf.apply_Ag(average(domain, U))


def residual_zeta_F(domain, U, G):
    """Nonlinear commutator ``M(G(u)) - G(M u)``; ``G`` is any callable."""
    return average(domain, G(np.asarray(U))) - G(average(domain, U))
