"""Homogeneous free-energy potentials with polynomial growth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """Polynomial potential ``F(z) = sum_k coeffs[k] z^k``.

    ``C0, C2, C3`` are the constants of the growth conditions
    ``F >= -C0``, ``F'' >= -C2``, ``|F'''(z)| <= C3 (|z| + 1)``.
    """

    coeffs: tuple
    C0: float = 0.0
    C2: float = 0.0
    C3: float = 0.0
    name: str = "polynomial"

    @classmethod
    def quartic_double_well(cls):
        # 1/4 (z^2 - 1)^2
        return cls((0.25, 0.0, -0.5, 0.0, 0.25), C0=0.0, C2=1.0, C3=6.0,
                   name="quartic_double_well")

    @classmethod
    def from_coeffs(cls, coeffs, C0=0.0, C2=0.0, C3=0.0):
        return cls(tuple(float(c) for c in coeffs), C0, C2, C3)

    def _poly(self, order):
        c = np.asarray(self.coeffs, dtype=float)
        return P.polyder(c, order) if order else c

    def __call__(self, z):
        return P.polyval(z, self._poly(0))

    def derivative(self, z, order=1):
        return P.polyval(z, self._poly(order))

    def eval(self, z, order=0):
        if order not in (0, 1, 2):
            raise PotentialError("order must be 0, 1 or 2")
        return self.derivative(z, order) if order else self(z)

    def dF(self, z):
        return self.derivative(z, 1)

    def without_nonlinearity(self):
        """The zero potential (used to probe the linear part of a scheme)."""
        return Potential((0.0,), name="zero")

    def max_second_derivative(self, bound):
        """``max F''`` over ``[-bound, bound]`` (by dense sampling)."""
        z = np.linspace(-bound, bound, 4001)
        return float(np.max(self.derivative(z, 2)))


def verify_growth(potential, zrange=(-5.0, 5.0), step=1e-3):
    """Check the three growth inequalities on a sample sweep.

    ``F'''`` is formed by central differences of ``F''``.  Returns a dict of
    booleans plus the worst offending ``z`` per inequality.
    """
    z = np.arange(zrange[0], zrange[1] + 0.5 * step, step)
    with np.errstate(over="ignore", invalid="ignore"):
        F = potential(z)
    if not np.all(np.isfinite(F)):
        raise PotentialError("non-finite potential value")
    F2 = potential.derivative(z, 2)
    F3 = (potential.derivative(z + step, 2) - potential.derivative(z - step, 2)) / (2 * step)
    tol = 1e-9
    m0 = F + potential.C0
    m2 = F2 + potential.C2
    m3 = potential.C3 * (np.abs(z) + 1.0) - np.abs(F3)
    return {
        "C0_ok": bool(m0.min() >= -tol),
        "C2_ok": bool(m2.min() >= -tol),
        "C3_ok": bool(m3.min() >= -tol * (1 + np.abs(F3).max())),
        "worst_z": {
            "C0": float(z[np.argmin(m0)]),
            "C2": float(z[np.argmin(m2)]),
            "C3": float(z[np.argmin(m3)]),
        },
    }
