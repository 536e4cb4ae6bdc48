"""Multilinear (Q1) stiffness assembly on periodic/bounded tensor grids and
the shared linearly implicit Cahn--Hilliard stepper.

Both the thin-shell solver (3D, periodic in s1/s2, natural boundary in s3)
and the surface solver (2D, fully periodic) discretize a divergence-form
operator ``div(A grad U)`` through the weak form tested against nodal hat
functions.  Coefficients are taken constant per cell (mean of the cell's
corner values), the mass matrix is lumped, so that

    L U = -M^{-1} K U

with ``K`` symmetric positive semidefinite and ``K @ 1 = 0``.  Dropping the
boundary term of the weak form is what imposes the Neumann condition.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Raised when an iterative solve fails to reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def _reference_element_matrices(h):
    """Return S[p, q, a, b] = int d_p phi_a d_q phi_b over one cell of size h.

    ``h`` is the tuple of cell widths; corners are ordered lexicographically
    over {0, 1}^d with the last axis fastest.
    """
    d = len(h)
    corners = list(itertools.product((0, 1), repeat=d))
    nc = len(corners)
    S = np.zeros((d, d, nc, nc))

    def mass(hk, a, b):
        return hk / 3.0 if a == b else hk / 6.0

    def stiff(hk, a, b):
        return 1.0 / hk if a == b else -1.0 / hk

    def mixed(a, b):
        # int l_a' l_b over [0, h]
        return 0.5 if a == 1 else -0.5

    for p in range(d):
        for q in range(d):
            for ia, a in enumerate(corners):
                for ib, b in enumerate(corners):
                    val = 1.0
                    for k in range(d):
                        if p == q == k:
                            val *= stiff(h[k], a[k], b[k])
                        elif k == p and k != q:
                            val *= mixed(a[k], b[k])
                        elif k == q and k != p:
                            val *= mixed(b[k], a[k])
                        else:
                            val *= mass(h[k], a[k], b[k])
                    S[p, q, ia, ib] = val
    return S, corners


def cell_means(nodal, periodic):
    """Average nodal values over the corners of each cell.

    ``nodal`` has the grid shape in its leading axes (trailing axes are
    carried along).  Periodic axes keep their length, bounded axes lose one.
    """
    d = len(periodic)
    out = 0.0
    for corner in itertools.product((0, 1), repeat=d):
        arr = nodal
        for ax, (c, per) in enumerate(zip(corner, periodic)):
            if per:
                if c:
                    arr = np.roll(arr, -1, axis=ax)
            else:
                n = arr.shape[ax]
                arr = np.take(arr, np.arange(c, n - 1 + c), axis=ax)
        out = out + arr
    return out / 2**d


def assemble_stiffness(shape, h, periodic, coeff_cells):
    """Assemble the Q1 stiffness matrix for ``div(A grad .)``.

    Parameters
    ----------
    shape : tuple of int
        Number of nodes per axis.
    h : tuple of float
        Grid spacing per axis.
    periodic : tuple of bool
        Whether each axis wraps around.
    coeff_cells : ndarray, shape (*cells, d, d)
        Symmetric coefficient matrix per cell.

    Returns
    -------
    scipy.sparse.csr_matrix
    """
    d = len(shape)
    S, corners = _reference_element_matrices(h)
    cells_shape = coeff_cells.shape[:d]
    ncell = int(np.prod(cells_shape))
    Ke = np.einsum("cpq,pqab->cab", coeff_cells.reshape(ncell, d, d), S)

    node_id = np.arange(int(np.prod(shape))).reshape(shape)
    cell_idx = np.indices(cells_shape).reshape(d, -1)
    corner_nodes = np.empty((ncell, len(corners)), dtype=np.int64)
    for ic, corner in enumerate(corners):
        idx = []
        for ax in range(d):
            j = cell_idx[ax] + corner[ax]
            if periodic[ax]:
                j = j % shape[ax]
            idx.append(j)
        corner_nodes[:, ic] = node_id[tuple(idx)]

    rows = np.repeat(corner_nodes, len(corners), axis=1).ravel()
    cols = np.tile(corner_nodes, (1, len(corners))).ravel()
    n = node_id.size
    K = sps.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    # exact symmetry; assembly order can leave round-off asymmetry
    return ((K + K.T) * 0.5).tocsr()


def pcg(apply_A, b, x0=None, tol=1e-11, maxiter=500, precond=None):
    """Preconditioned conjugate gradients with a relative residual test.

    Inner products are plain ``numpy.dot`` on contiguous float64 vectors, so
    repeated runs reproduce bit for bit.  Works on consistent singular
    systems as long as ``b`` lies in the range of ``A``.

    Returns ``(x, info)`` where info holds ``iterations`` and ``residual``
    (relative, in the Euclidean norm).
    """
    bnorm = np.linalg.norm(b)
    if not np.isfinite(bnorm):
        raise SolverError("non-finite right-hand side", float("nan"), 0)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    if bnorm == 0.0:
        return np.zeros_like(b), {"iterations": 0, "residual": 0.0}
    r = b - apply_A(x)
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return x, {"iterations": 0, "residual": res}
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = np.dot(r, z)
    for it in range(1, maxiter + 1):
        Ap = apply_A(p)
        pAp = np.dot(p, Ap)
        if pAp <= 0.0:
            raise SolverError("non-positive curvature in CG", res, it)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, {"iterations": it, "residual": res}
        z = precond(r) if precond is not None else r
        rz_new = np.dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not converge in {maxiter} iterations (residual {res:.3e})",
        res,
        maxiter,
    )


@dataclass
class StepInfo:
    iterations: int
    residual: float


@dataclass
class StabilizedStepper:
    """Linearly implicit stabilized scheme for ``u_t = L w``,
    ``w = -L u + F'(u)`` with ``L = -M^{-1} K``.

    One step solves

        (u+ - u)/tau = L w+,   w+ = -L u+ + F'(u) + S (u+ - u),

    which after eliminating ``w+`` is the SPD system

        (M + tau K M^{-1} K + tau S K) u+ = M u - tau K (F'(u) - S u).
    """

    K: sps.csr_matrix
    mass: np.ndarray
    tau: float
    stabilization: float
    dpotential: object
    tol: float = 1e-11
    maxiter: int = 50
    system: sps.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.stabilization < 0:
            raise ValueError("stabilization must be nonnegative")
        Minv = sps.diags(1.0 / self.mass)
        K = self.K
        self.system = (
            sps.diags(self.mass)
            + self.tau * (K @ Minv @ K)
            + (self.tau * self.stabilization) * K
        ).tocsr()
        self._lu = spla.splu(self.system.tocsc(), permc_spec="MMD_AT_PLUS_A")

    def apply_system(self, x):
        Kx = self.K @ x
        return (
            self.mass * x
            + self.tau * (self.K @ (Kx / self.mass))
            + (self.tau * self.stabilization) * Kx
        )

    def step(self, u):
        """Advance ``u`` (flat array) one step; returns ``(u_next, w_next, info)``."""
        S = self.stabilization
        fp = self.dpotential(u)
        rhs = self.mass * u - self.tau * (self.K @ (fp - S * u))
        x, info = pcg(
            self.apply_system,
            rhs,
            x0=u,
            tol=self.tol,
            maxiter=self.maxiter,
            precond=self._lu.solve,
        )
        # The exact solution keeps sum(M u); drop the residual's share of it
        # (a constant shift, which K does not see).
        x += (np.dot(self.mass, u) - np.dot(self.mass, x)) / self.mass.sum()
        w = (self.K @ x) / self.mass + fp + S * (x - u)
        return x, w, StepInfo(info["iterations"], info["residual"])
