"""Reference-box coordinates for the thin shell.

The box ``[0,1)^2 x [0, eps]`` is mapped onto the shell by

    Psi(s) = psi(s') + r(s) nu(s'),   r(s) = (eps - s3) g0(s') + s3 g1(s').

The shell's Dirichlet form pulls back to ``int (A grad_s U) . grad_s Phi ds``
with ``A = det(grad_s Psi) (G)^{-1}`` and ``G_ij = d_i Psi . d_j Psi``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, epsilon_limit, metric, shape_data, TWO_PI


@dataclass(frozen=True)
class ReferenceGrid:
    """Vertex-centred grid: ``n1 x n2`` periodic columns, ``n3 + 1`` layers."""

    n1: int
    n2: int
    n3: int
    eps: float

    def __post_init__(self):
        if self.n1 < 8 or self.n2 < 8 or self.n1 % 2 or self.n2 % 2:
            raise ValueError("n1, n2 must be even and >= 8")
        if self.n3 < 2:
            raise ValueError("n3 must be >= 2")
        if not (0 < self.eps < 1):
            raise ValueError("eps must lie in (0, 1)")

    @property
    def h1(self):
        return 1.0 / self.n1

    @property
    def h2(self):
        return 1.0 / self.n2

    @property
    def h3(self):
        return self.eps / self.n3

    @property
    def shape(self):
        return (self.n1, self.n2, self.n3 + 1)

    @property
    def surface_shape(self):
        return (self.n1, self.n2)

    def surface_nodes(self):
        s1 = np.arange(self.n1) * self.h1
        s2 = np.arange(self.n2) * self.h2
        return np.meshgrid(s1, s2, indexing="ij")

    def s3_nodes(self):
        return np.arange(self.n3 + 1) * self.h3

    def s3_weights(self):
        """Trapezoid weights in s3; they sum to ``eps``."""
        w = np.full(self.n3 + 1, self.h3)
        w[0] = w[-1] = 0.5 * self.h3
        return w


@dataclass
class PullbackCoefficients:
    """Per-node geometric tables on the reference grid.

    Array shapes: ``(n1, n2, n3+1)`` for node scalars, trailing ``(3, 3)`` for
    matrices, ``(n1, n2)`` for column quantities.
    """

    grid: ReferenceGrid
    jac: np.ndarray  # rows d_i Psi
    detJac: np.ndarray  # g J sqrt(det theta)
    detJac_3x3: np.ndarray
    Aeps: np.ndarray
    Jval: np.ndarray
    r: np.ndarray
    gval: np.ndarray
    g0val: np.ndarray
    g1val: np.ndarray
    sqrt_det_theta: np.ndarray
    c_ell: float

    @property
    def det_mismatch(self):
        """Max relative gap between the 3x3 determinant and the closed form."""
        return float(np.max(np.abs(self.detJac_3x3 - self.detJac) / np.abs(self.detJac)))


def r_offset(profile, eps, s1, s2, s3):
    g0, g1, *_ = profile.chart_values(s1, s2)
    return (eps - s3) * g0 + s3 * g1


def map_psi(chart, profile, eps, s):
    """Image of a box point ``s = (s1, s2, s3)`` in the shell."""
    s1, s2, s3 = (np.asarray(c, dtype=float) for c in s)
    if np.any(s3 < 0) or np.any(s3 > eps):
        raise GeometryError("s3 must lie in [0, eps]")
    r = r_offset(profile, eps, s1, s2, s3)
    return chart.position(s1, s2) + r[..., None] * chart.normal(s1, s2)


def inverse_map(chart, profile, eps, x):
    """Recover box coordinates from shell points (torus and flat sheet)."""
    x = np.asarray(x, dtype=float)
    if chart.kind == "flat_sheet":
        s1, s2, d = x[..., 0] % 1.0, x[..., 1] % 1.0, x[..., 2]
    elif chart.kind == "torus":
        s1 = (np.arctan2(x[..., 1], x[..., 0]) / TWO_PI) % 1.0
        rho = np.hypot(x[..., 0], x[..., 1]) - chart.R
        s2 = (np.arctan2(x[..., 2], rho) / TWO_PI) % 1.0
        d = np.hypot(rho, x[..., 2]) - chart.a
    else:
        raise GeometryError("inverse map needs a periodic chart")
    g0, g1, *_ = profile.chart_values(s1, s2)
    return np.stack([s1, s2, (d - eps * g0) / (g1 - g0)], axis=-1)


def inverse_check(chart, profile, eps, s):
    """``|Psi^{-1}(Psi(s)) - s|`` with periodic wrap in s'."""
    s = np.asarray(s, dtype=float)
    back = inverse_map(chart, profile, eps, map_psi(chart, profile, eps, s.T).reshape(s.shape))
    diff = back - s
    diff[..., :2] = (diff[..., :2] + 0.5) % 1.0 - 0.5
    return float(np.max(np.abs(diff)))


def build_coefficients(chart, profile, grid, check=True):
    """Tabulate ``det grad Psi``, ``A_eps`` and ``J`` at every grid node."""
    if not chart.periodic:
        raise GeometryError("solver grids need a doubly periodic chart")
    if check and grid.eps > epsilon_limit(chart, profile):
        raise GeometryError(
            f"eps = {grid.eps} exceeds the tubular bound {epsilon_limit(chart, profile):.4g}"
        )
    S1, S2 = grid.surface_nodes()
    s3 = grid.s3_nodes()
    t1, t2 = chart.tangents(S1, S2)
    n1, n2 = chart.normal_derivatives(S1, S2)
    nu = chart.normal(S1, S2)
    theta = metric(chart, S1, S2)
    sqrt_det_theta = np.sqrt(np.linalg.det(theta))
    sd = shape_data(chart, S1, S2)
    g0, g1, d01, d02, d11, d12 = profile.chart_values(S1, S2)
    g = g1 - g0

    e = grid.eps
    S3 = s3[None, None, :]
    r = (e - S3) * g0[..., None] + S3 * g1[..., None]
    dr1 = (e - S3) * d01[..., None] + S3 * d11[..., None]
    dr2 = (e - S3) * d02[..., None] + S3 * d12[..., None]

    row1 = t1[:, :, None, :] + r[..., None] * n1[:, :, None, :] + dr1[..., None] * nu[:, :, None, :]
    row2 = t2[:, :, None, :] + r[..., None] * n2[:, :, None, :] + dr2[..., None] * nu[:, :, None, :]
    row3 = np.broadcast_to((g[..., None] * nu)[:, :, None, :], row1.shape)
    jac = np.stack([row1, row2, row3], axis=-2)

    J = 1.0 - r * sd["H"][..., None] + r * r * sd["K"][..., None]
    detJac = g[..., None] * J * sqrt_det_theta[..., None]
    det3 = np.linalg.det(jac)
    if np.any(det3 <= 0) or np.any(J <= 0):
        raise GeometryError("non-positive pullback Jacobian; eps too large")

    G = np.einsum("...ik,...jk->...ij", jac, jac)
    A = detJac[..., None, None] * np.linalg.inv(G)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    c_ell = float(np.min(np.linalg.eigvalsh(A)))
    if c_ell <= 0:
        raise GeometryError("pullback coefficient matrix is not elliptic")

    return PullbackCoefficients(
        grid=grid,
        jac=jac,
        detJac=detJac,
        detJac_3x3=det3,
        Aeps=A,
        Jval=J,
        r=r,
        gval=g,
        g0val=g0,
        g1val=g1,
        sqrt_det_theta=sqrt_det_theta,
        c_ell=c_ell,
    )


def dump_coefficients(coeffs, path):
    """Write node index, detJac and the six entries of ``A_eps`` as CSV."""
    A = coeffs.Aeps.reshape(-1, 3, 3)
    det = coeffs.detJac.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "detJac", "A11", "A12", "A13", "A22", "A23", "A33"])
        for i in range(det.size):
            a = A[i]
            w.writerow([i] + [repr(float(v)) for v in
                              (det[i], a[0, 0], a[0, 1], a[0, 2], a[1, 1], a[1, 2], a[2, 2])])
