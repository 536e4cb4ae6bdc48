"""Norms, bulk/surface difference metrics and log-log rate fitting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

ERROR_COLUMNS = ("err_L2", "err_H1", "err_Lg", "err_bulk_u", "err_bulk_grad", "nd_scaled")


class PreconditionError(ValueError):
    pass


class FitError(ValueError):
    pass


def surface_norm(surf, v, kind="L2", tol=1e-11):
    """``L2``, ``H1`` or ``Lg_semi`` (``|sqrt(g) grad L_g v|``) of a surface field."""
    v = np.asarray(v, dtype=float)
    l2sq = float(np.dot(surf.area_weight, v.ravel() ** 2))
    if kind == "L2":
        return math.sqrt(l2sq)
    if kind == "H1":
        grad = float(np.dot(v.ravel(), surf.K_unweighted @ v.ravel()))
        return math.sqrt(l2sq + max(grad, 0.0))
    if kind == "Lg_semi":
        mean = surf.weighted_mean(v)
        if abs(mean) > 1e-9:
            raise PreconditionError(f"weighted mean {mean:.3e} is not zero")
        phi = surf.solve_Lg(v, tol=tol)
        return math.sqrt(max(surf.weighted_dirichlet(phi), 0.0))
    raise ValueError(f"unknown norm kind {kind!r}")


def bulk_difference(domain, U, v):
    """Scaled shell differences ``e_u`` and ``e_grad`` against a surface field.

    ``e_u = eps^{-1/2} |U - v_bar|`` and
    ``e_grad = eps^{-1/2} |P grad u - grad_Gamma v (extended)|``, both in the
    shell L2 norm.
    """
    U = np.asarray(U, dtype=float)
    v = np.asarray(v, dtype=float)
    scale = domain.eps ** -0.5
    e_u = scale * domain.l2_norm(U - v[..., None])

    surf = domain.surface()
    grad_u = domain.ambient_gradient(U)
    nu = domain.chart.normal(surf.S1, surf.S2)[:, :, None, :]
    tang = grad_u - np.sum(grad_u * nu, axis=-1, keepdims=True) * nu
    diff = tang - surf.tangential_gradient(v)[:, :, None, :]
    sq = np.sum(diff**2, axis=-1).ravel()
    e_grad = scale * math.sqrt(float(np.dot(domain.mass, sq)))
    return {"e_u": e_u, "e_grad": e_grad}


def fit_rate(points):
    """Least-squares slope of ``log(error)`` against ``log(eps)``.

    Returns a dict with ``slope``, ``intercept`` and the RMS ``residual``.
    """
    pts = list(points)
    if len(pts) < 3:
        raise FitError("need at least 3 points")
    x = np.log([p[0] for p in pts])
    errs = np.array([p[1] for p in pts], dtype=float)
    if np.any(~np.isfinite(errs)) or np.any(errs <= 0):
        raise FitError("errors must be positive and finite")
    y = np.log(errs)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + intercept)
    return {"slope": float(slope), "intercept": float(intercept),
            "residual": float(np.sqrt(np.mean(res**2)))}


def smallest_weighted_eigenvalue(surf):
    """Smallest nonzero eigenvalue of ``-A_g`` (weighted generalized problem)."""
    import scipy.sparse as sps

    M = sps.diags(surf.mass)
    # shift by a multiple of M to step past the constant mode
    vals = spla.eigsh(surf.K, k=2, M=M, sigma=-1.0, which="LM",
                      return_eigenvectors=False)
    return float(np.sort(vals)[1])


@dataclass
class ConvergenceReport:
    thresholds: dict
    entries: list = field(default_factory=list)
    fitted_rates: dict = field(default_factory=dict)
    passed: dict = field(default_factory=dict)
    complete: bool = True
    applicable: bool = True
    notes: list = field(default_factory=list)

    def add(self, eps, errors):
        if self.entries and eps >= self.entries[-1]["epsilon"]:
            raise ValueError("epsilons must be strictly decreasing")
        self.entries.append({"epsilon": eps, **errors})

    def fit(self, round_off=1e-11):
        self.fitted_rates, self.passed = {}, {}
        if len(self.entries) < 3:
            self.complete = False
            return self
        for col in ERROR_COLUMNS:
            errs = [e[col] for e in self.entries]
            if max(errs) < round_off or min(errs) <= 0:
                self.fitted_rates[col] = float("nan")
                self.notes.append(f"{col}: errors at round-off level, rate not applicable")
                continue
            self.fitted_rates[col] = fit_rate(
                [(e["epsilon"], e[col]) for e in self.entries])["slope"]
        self.applicable = any(math.isfinite(r) for r in self.fitted_rates.values())
        # None marks a threshold that cannot be judged (round-off errors)
        for col, thr in self.thresholds.items():
            rate = self.fitted_rates.get(col, float("nan"))
            self.passed[col] = bool(rate >= thr) if math.isfinite(rate) else None
        return self

    @property
    def ok(self):
        return self.complete and all(p is not False for p in self.passed.values())

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("epsilon",) + ERROR_COLUMNS)
            for e in self.entries:
                w.writerow([repr(e["epsilon"])] + [repr(float(e[c])) for c in ERROR_COLUMNS])
            w.writerow(["slope"] + [repr(self.fitted_rates.get(c, float("nan")))
                                    for c in ERROR_COLUMNS])


def read_convergence_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    entries = [dict(zip(header, map(float, r))) for r in rows[1:] if r[0] != "slope"]
    slopes = [r for r in rows[1:] if r[0] == "slope"]
    return entries, dict(zip(header[1:], map(float, slopes[0][1:]))) if slopes else {}
