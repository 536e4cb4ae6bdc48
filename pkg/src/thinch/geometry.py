"""Closed-form surface charts, curvature data and thickness profiles.

Charts are parametrized over the unit square ``s' = (s1, s2)``.  All
evaluation routines accept scalars or arrays of equal shape and return
arrays whose trailing axis holds 3-vector components.

Curvature convention: ``W = -grad_Gamma nu`` with ``nu`` the outward normal,
so convex surfaces have negative principal curvatures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    """Invalid chart, profile, or evaluation outside the valid region."""


@dataclass(frozen=True)
class SurfaceChart:
    """Doubly periodic (torus, flat_sheet) or open (unit_sphere_patch) chart.

    Parameters
    ----------
    kind : {"torus", "flat_sheet", "unit_sphere_patch"}
    R, a : float
        Torus radii (ignored for the other kinds).
    """

    kind: str
    R: float = 2.0
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in ("torus", "flat_sheet", "unit_sphere_patch"):
            raise GeometryError(f"unknown surface kind {self.kind!r}")
        if self.kind == "torus" and not (self.R > self.a > 0):
            raise GeometryError("torus requires R > a > 0")

    @classmethod
    def torus(cls, R=2.0, a=1.0):
        return cls("torus", R, a)

    @classmethod
    def flat_sheet(cls):
        return cls("flat_sheet")

    @classmethod
    def unit_sphere_patch(cls):
        return cls("unit_sphere_patch")

    @property
    def periodic(self):
        return self.kind != "unit_sphere_patch"

    @property
    def tubular_radius(self):
        if self.kind == "torus":
            return self.a / 2
        if self.kind == "flat_sheet":
            return math.inf
        return 0.5

    # -- raw chart data -------------------------------------------------
    def _check(self, s1, s2):
        s1 = np.asarray(s1, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        if self.kind == "unit_sphere_patch":
            if np.any(np.abs(np.sin(np.pi * s2)) < 1e-8):
                raise GeometryError("sphere patch chart is singular at the poles")
        return np.broadcast_arrays(s1, s2)

    def position(self, s1, s2):
        s1, s2 = self._check(s1, s2)
        if self.kind == "flat_sheet":
            return np.stack([s1, s2, np.zeros_like(s1)], axis=-1)
        if self.kind == "torus":
            p1, p2 = TWO_PI * s1, TWO_PI * s2
            rho = self.R + self.a * np.cos(p2)
            return np.stack(
                [rho * np.cos(p1), rho * np.sin(p1), self.a * np.sin(p2)], axis=-1
            )
        lon, pol = TWO_PI * s1, np.pi * s2
        return np.stack(
            [np.sin(pol) * np.cos(lon), np.sin(pol) * np.sin(lon), np.cos(pol)],
            axis=-1,
        )

    def tangents(self, s1, s2):
        """Chart derivatives ``(d psi/d s1, d psi/d s2)``."""
        s1, s2 = self._check(s1, s2)
        z = np.zeros_like(s1)
        if self.kind == "flat_sheet":
            one = np.ones_like(s1)
            return np.stack([one, z, z], -1), np.stack([z, one, z], -1)
        if self.kind == "torus":
            p1, p2 = TWO_PI * s1, TWO_PI * s2
            rho = self.R + self.a * np.cos(p2)
            t1 = TWO_PI * np.stack([-rho * np.sin(p1), rho * np.cos(p1), z], -1)
            t2 = TWO_PI * self.a * np.stack(
                [-np.sin(p2) * np.cos(p1), -np.sin(p2) * np.sin(p1), np.cos(p2)], -1
            )
            return t1, t2
        lon, pol = TWO_PI * s1, np.pi * s2
        t1 = TWO_PI * np.stack(
            [-np.sin(pol) * np.sin(lon), np.sin(pol) * np.cos(lon), z], -1
        )
        t2 = np.pi * np.stack(
            [np.cos(pol) * np.cos(lon), np.cos(pol) * np.sin(lon), -np.sin(pol)], -1
        )
        return t1, t2

    def normal(self, s1, s2):
        s1, s2 = self._check(s1, s2)
        if self.kind == "flat_sheet":
            z = np.zeros_like(s1)
            return np.stack([z, z, np.ones_like(s1)], -1)
        if self.kind == "torus":
            p1, p2 = TWO_PI * s1, TWO_PI * s2
            return np.stack(
                [np.cos(p2) * np.cos(p1), np.cos(p2) * np.sin(p1), np.sin(p2)], -1
            )
        return self.position(s1, s2)

    def normal_derivatives(self, s1, s2):
        """Chart derivatives of the unit normal."""
        s1, s2 = self._check(s1, s2)
        z = np.zeros_like(s1)
        if self.kind == "flat_sheet":
            zero = np.stack([z, z, z], -1)
            return zero, zero.copy()
        if self.kind == "torus":
            p1, p2 = TWO_PI * s1, TWO_PI * s2
            n1 = TWO_PI * np.stack(
                [-np.cos(p2) * np.sin(p1), np.cos(p2) * np.cos(p1), z], -1
            )
            n2 = TWO_PI * np.stack(
                [-np.sin(p2) * np.cos(p1), -np.sin(p2) * np.sin(p1), np.cos(p2)], -1
            )
            return n1, n2
        return self.tangents(s1, s2)

    def curvature_derivatives(self, s1, s2):
        """Chart derivatives ``(dH/ds1, dH/ds2, dK/ds1, dK/ds2)``."""
        s1, s2 = self._check(s1, s2)
        z = np.zeros_like(s1)
        if self.kind != "torus":
            return z, z.copy(), z.copy(), z.copy()
        p2 = TWO_PI * s2
        rho = self.R + self.a * np.cos(p2)
        dH = TWO_PI * self.R * np.sin(p2) / rho**2
        dK = -TWO_PI * self.R * np.sin(p2) / (self.a * rho**2)
        return z, dH, z.copy(), dK


def chart_eval(chart, s1, s2):
    """Position, tangents and outward unit normal at chart points."""
    t1, t2 = chart.tangents(s1, s2)
    return {
        "position": chart.position(s1, s2),
        "tangents": (t1, t2),
        "normal": chart.normal(s1, s2),
    }


def metric(chart, s1, s2):
    """First fundamental form ``theta`` (shape ``(..., 2, 2)``)."""
    t1, t2 = chart.tangents(s1, s2)
    T = np.stack([t1, t2], axis=-2)  # (..., 2, 3)
    return np.einsum("...ik,...jk->...ij", T, T)


def surface_gradient(chart, s1, s2, d1, d2):
    """Tangential gradient (3-vector) from chart derivatives ``d1, d2``."""
    t1, t2 = chart.tangents(s1, s2)
    th_inv = np.linalg.inv(metric(chart, s1, s2))
    c1 = th_inv[..., 0, 0] * d1 + th_inv[..., 0, 1] * d2
    c2 = th_inv[..., 1, 0] * d1 + th_inv[..., 1, 1] * d2
    return c1[..., None] * t1 + c2[..., None] * t2


def shape_data(chart, s1, s2):
    """Weingarten map and curvatures at chart points.

    Returns a dict with ``W`` (..., 3, 3), ``kappa1 <= kappa2``, ``H``, ``K``.
    """
    t1, t2 = chart.tangents(s1, s2)
    n1, n2 = chart.normal_derivatives(s1, s2)
    th_inv = np.linalg.inv(metric(chart, s1, s2))
    T = np.stack([t1, t2], axis=-1)  # (..., 3, 2)
    Dn = np.stack([n1, n2], axis=-1)
    # grad_Gamma nu = T theta^{-1} Dn^T
    W = -np.einsum("...ki,...ij,...lj->...kl", T, th_inv, Dn)
    H = np.trace(W, axis1=-2, axis2=-1)
    K = 0.5 * (H**2 - np.einsum("...ij,...ji->...", W, W))
    disc = np.sqrt(np.maximum(0.25 * H**2 - K, 0.0))
    return {"W": W, "kappa1": 0.5 * H - disc, "kappa2": 0.5 * H + disc, "H": H, "K": K}


def jacobian_J(chart, s1, s2, r, H=None, K=None):
    """Area distortion ``J(y, r) = 1 - r H + r^2 K`` of the offset map."""
    r = np.asarray(r, dtype=float)
    if np.any(np.abs(r) > chart.tubular_radius):
        raise GeometryError("offset exceeds the tubular radius")
    if H is None or K is None:
        sd = shape_data(chart, s1, s2)
        H, K = sd["H"], sd["K"]
    return 1.0 - r * H + r * r * K


@dataclass(frozen=True)
class ThicknessProfile:
    """Inner/outer thickness functions ``g0 < g1`` on the chart.

    Presets
    -------
    constant(c0, c1)
        ``g0 = c0``, ``g1 = c1``.
    sinusoidal(amplitude, frequency, base=1, g0=0)
        ``g1 = base + amplitude cos(2 pi frequency s1)``, ``g0`` constant.
    """

    preset: str = "constant"
    params: tuple = (0.0, 1.0)
    bound: float = field(init=False)

    def __post_init__(self):
        if self.preset == "constant":
            c0, c1 = (float(x) for x in self.params)
            object.__setattr__(self, "params", (c0, c1))
            gmin, gmax = c1 - c0, c1 - c0
        elif self.preset == "sinusoidal":
            defaults = (0.2, 1.0, 1.0, 0.0)
            params = tuple(float(x) for x in self.params)
            if len(params) > 4:
                raise GeometryError("sinusoidal takes at most 4 parameters")
            object.__setattr__(self, "params", params + defaults[len(params):])
            amp, freq, base, g0 = self.params
            gmin, gmax = base - abs(amp) - g0, base + abs(amp) - g0
        else:
            raise GeometryError(f"unknown thickness preset {self.preset!r}")
        if gmin <= 0:
            raise GeometryError("thickness g = g1 - g0 must be positive")
        object.__setattr__(self, "bound", max(1.0 / gmin, gmax))

    @classmethod
    def constant(cls, c0=0.0, c1=1.0):
        return cls("constant", (float(c0), float(c1)))

    @classmethod
    def sinusoidal(cls, amplitude=0.2, frequency=1, base=1.0, g0=0.0):
        return cls("sinusoidal", (amplitude, frequency, base, g0))

    def max_abs(self):
        """``max |g_i|`` over the surface, used for the tubular check."""
        if self.preset == "constant":
            return max(abs(self.params[0]), abs(self.params[1]))
        amp, _, base, g0 = self.params
        return max(abs(g0), abs(base) + abs(amp))

    def chart_values(self, s1, s2):
        """``(g0, g1, dg0/ds1, dg0/ds2, dg1/ds1, dg1/ds2)`` on the chart."""
        s1, s2 = np.broadcast_arrays(np.asarray(s1, float), np.asarray(s2, float))
        z = np.zeros_like(s1)
        if self.preset == "constant":
            c0, c1 = self.params
            return z + c0, z + c1, z, z, z, z
        amp, freq, base, g0 = self.params
        arg = TWO_PI * freq * s1
        g1 = base + amp * np.cos(arg)
        dg1 = -amp * TWO_PI * freq * np.sin(arg)
        return z + g0, g1, z, z, dg1, z


def thickness_eval(profile, chart, s1, s2):
    """Thickness functions and their tangential gradients."""
    g0, g1, d01, d02, d11, d12 = profile.chart_values(s1, s2)
    return {
        "g0": g0,
        "g1": g1,
        "g": g1 - g0,
        "chart_grad_g0": (d01, d02),
        "chart_grad_g1": (d11, d12),
        "grad_g0": surface_gradient(chart, s1, s2, d01, d02),
        "grad_g1": surface_gradient(chart, s1, s2, d11, d12),
    }


def epsilon_limit(chart, profile):
    """Largest admissible thickness parameter (``eps * max|g_i| <= delta``)."""
    m = profile.max_abs()
    if m == 0:
        return 1.0
    return min(1.0, chart.tubular_radius / m)
