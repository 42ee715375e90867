"""Radial charts over the unit sphere and contact-volume quadrature.

A star-shaped surface {rho = 0} is parametrized by unit directions
u in R^{2m} ~ C^m through the first positive radial root of rho.  Integrals
against the contact volume form theta ^ (dtheta)^n are computed by pulling
the form back through that parametrization: theta = i dbar-rho and
dtheta = i ddbar-rho are evaluated exactly from the chart's symbolic jets on
finite-difference tangent vectors of the parametrization (step 1e-6).

The pullback enters through its absolute value, which fixes the orientation
so that the integral of the density 1 is positive.  Node evaluation is pure;
sums use numpy's deterministic pairwise reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParams, NoCrossing, NonTransversal, NotStarShaped
from .hypersurface import HypersurfaceChart

ROOT_TOL = 1e-12
TRANSVERSAL_FLOOR = 1e-10
FD_STEP = 1e-6


@dataclass
class RadialChart:
    """Radial graph data: chart, star center, and the search interval."""

    chart: HypersurfaceChart
    center: np.ndarray | None = None
    t_max: float = 10.0

    def __post_init__(self):
        if self.center is None:
            self.center = np.zeros(self.chart.m, dtype=complex)
        else:
            self.center = np.asarray(self.center, dtype=complex)


@dataclass(frozen=True)
class QuadratureRule:
    """Either a product grid over the angle box or seeded Monte Carlo.

    ``resolution`` is the base per-angle node count for product grids;
    ``samples``/``seed`` drive the Monte-Carlo variant.
    """

    kind: str
    resolution: int = 0
    samples: int = 0
    seed: int = 0

    def describe(self):
        if self.kind == "product-grid":
            return f"grid:{self.resolution}"
        return f"mc:{self.samples}:{self.seed}"


def product_grid(resolution: int) -> QuadratureRule:
    if resolution < 3:
        raise BadParams("grid resolution must be at least 3")
    return QuadratureRule(kind="product-grid", resolution=int(resolution))


def monte_carlo(samples: int, seed: int = 0) -> QuadratureRule:
    if samples < 8:
        raise BadParams("monte-carlo sample count must be at least 8")
    return QuadratureRule(kind="monte-carlo", samples=int(samples), seed=int(seed))


def parse_quad_flag(text: str) -> QuadratureRule:
    """Parse ``grid:<n>`` or ``mc:<samples>[:<seed>]``."""
    parts = text.split(":")
    try:
        if parts[0] == "grid" and len(parts) == 2:
            return product_grid(int(parts[1]))
        if parts[0] == "mc" and len(parts) in (2, 3):
            seed = int(parts[2]) if len(parts) == 3 else 0
            return monte_carlo(int(parts[1]), seed)
    except ValueError as exc:
        raise BadParams(f"malformed quadrature flag {text!r}") from exc
    raise BadParams(f"malformed quadrature flag {text!r} (use grid:<n> or mc:<n>:<seed>)")


# ---- spherical coordinates -----------------------------------------------


def sphere_point(angles: np.ndarray) -> np.ndarray:
    """Unit vectors in R^d from (K, d-1) generalized spherical angles."""
    K, dm1 = angles.shape
    d = dm1 + 1
    u = np.empty((K, d))
    sin_prod = np.ones(K)
    for i in range(dm1):
        u[:, i] = sin_prod * np.cos(angles[:, i])
        sin_prod = sin_prod * np.sin(angles[:, i])
    u[:, d - 1] = sin_prod
    return u


def sphere_angles(u: np.ndarray) -> np.ndarray:
    """Inverse of sphere_point away from the coordinate poles."""
    K, d = u.shape
    angles = np.empty((K, d - 1))
    tail = np.linalg.norm(u, axis=1)
    for i in range(d - 2):
        tail = np.sqrt(np.maximum(tail**2 - u[:, i] ** 2, 0.0))
        angles[:, i] = np.arctan2(tail, u[:, i])
    angles[:, d - 2] = np.arctan2(u[:, d - 1], u[:, d - 2])
    return angles


def sphere_jacobian(angles: np.ndarray) -> np.ndarray:
    """Density of the round measure w.r.t. the angle box: prod sin^{d-1-i}."""
    K, dm1 = angles.shape
    jac = np.ones(K)
    for i in range(dm1 - 1):
        jac = jac * np.sin(angles[:, i]) ** (dm1 - 1 - i)
    return jac


def sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _to_complex(u):
    return u[:, 0::2] + 1j * u[:, 1::2]


# ---- radial root finding ---------------------------------------------------


def _rho_on_ray(rc, U, t):
    P = rc.center[None, :] + t[:, None] * _to_complex(U)
    return np.real(rc.chart.rho_at(P))


def _radial_batch(rc: RadialChart, U: np.ndarray) -> np.ndarray:
    """Smallest positive radial root for each unit direction (K, 2m)."""
    K = U.shape[0]
    t_lo = np.full(K, 1e-4 * rc.t_max)
    f_lo = _rho_on_ray(rc, U, t_lo)
    sign0 = np.sign(f_lo)
    if np.any(sign0 == 0):
        sign0 = np.where(sign0 == 0, -1.0, sign0)

    t_hi = np.full(K, np.nan)
    f_prev, t_prev = f_lo, t_lo
    t = t_lo.copy()
    changes = np.zeros(K, dtype=int)
    lo = t_lo.copy()
    while np.min(t) < rc.t_max:
        t = np.minimum(t * 1.5, rc.t_max)
        f = _rho_on_ray(rc, U, t)
        flip = (np.sign(f) != np.sign(f_prev)) & (np.sign(f_prev) != 0)
        first = flip & np.isnan(t_hi)
        t_hi[first] = t[first]
        lo[first] = t_prev[first]
        changes += flip.astype(int)
        f_prev, t_prev = f, t
        if np.max(t) >= rc.t_max and np.min(t) >= rc.t_max:
            break
    if np.any(np.isnan(t_hi)):
        i = int(np.argmax(np.isnan(t_hi)))
        raise NoCrossing(f"ray {i} misses the surface for t in (0, {rc.t_max}]")
    if np.any(changes > 1):
        i = int(np.argmax(changes))
        raise NotStarShaped(
            f"ray {i} crosses the surface {changes[i]} times: not star-shaped about the center"
        )

    hi = t_hi
    f_lo = _rho_on_ray(rc, U, lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = _rho_on_ray(rc, U, mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    t = 0.5 * (lo + hi)

    Z = _to_complex(U)
    for _ in range(6):
        P = rc.center[None, :] + t[:, None] * Z
        val = np.real(rc.chart.rho_at(P))
        slope = 2.0 * np.real(np.einsum("kj,kj->k", rc.chart.grad_at(P), Z))
        t = t - val / np.where(np.abs(slope) < TRANSVERSAL_FLOOR, np.inf, slope)

    P = rc.center[None, :] + t[:, None] * Z
    val = np.abs(np.real(rc.chart.rho_at(P)))
    slope = 2.0 * np.real(np.einsum("kj,kj->k", rc.chart.grad_at(P), Z))
    if np.max(val) > ROOT_TOL:
        i = int(np.argmax(val))
        raise NoCrossing(f"radial polish stalled at |rho| = {val[i]:.2e} on ray {i}")
    if np.min(np.abs(slope)) < TRANSVERSAL_FLOOR:
        i = int(np.argmin(np.abs(slope)))
        raise NonTransversal(f"|d rho/dt| = {abs(slope[i]):.2e} at the root of ray {i}")
    if np.min(slope) < 0:
        i = int(np.argmin(slope))
        raise NonTransversal(f"d rho/dt = {slope[i]:.2e} < 0 at the root of ray {i}")
    return t


def radial_solve(rc: RadialChart, omega) -> float:
    """First positive root of rho along the ray through direction omega.

    ``omega`` is a unit vector in R^{2m} (or a complex m-vector)."""
    u = np.asarray(omega)
    if np.iscomplexobj(u):
        uu = np.empty(2 * u.shape[0])
        uu[0::2], uu[1::2] = u.real, u.imag
        u = uu
    nrm = np.linalg.norm(u)
    if abs(nrm - 1.0) > 1e-9:
        raise BadParams(f"direction must be normalized, |omega| = {nrm}")
    return float(_radial_batch(rc, u[None, :])[0])


def radial_points(rc: RadialChart, U: np.ndarray) -> np.ndarray:
    """On-surface points for a batch of unit directions."""
    t = _radial_batch(rc, U)
    return rc.center[None, :] + t[:, None] * _to_complex(U)


# ---- contact volume form ----------------------------------------------------


def _pfaffian(D):
    """Pfaffian of stacked antisymmetric (K, 2k, 2k) matrices, recursively."""
    size = D.shape[-1]
    if size == 0:
        return np.ones(D.shape[0])
    if size == 2:
        return D[:, 0, 1]
    acc = np.zeros(D.shape[0], dtype=D.dtype)
    rest0 = list(range(1, size))
    for pos, j in enumerate(rest0):
        rest = np.array([r for r in rest0 if r != j])
        minor = D[:, rest[:, None], rest[None, :]]
        acc = acc + ((-1) ** pos) * D[:, 0, j] * _pfaffian(minor)
    return acc


def contact_volume_density(chart: HypersurfaceChart, P: np.ndarray, V: np.ndarray) -> np.ndarray:
    """theta ^ (dtheta)^n evaluated on tangent vectors V (K, 2n+1, m).

    Tangent vectors are given by their complex coordinate components; theta
    and dtheta come from the chart's exact first and second jets at P.
    """
    n = chart.n
    grad = chart.grad_at(P)
    hess = chart.hess_at(P)
    beta = 1j * np.conj(np.einsum("kj,kij->ki", grad, V))
    A = np.einsum("kia,kab,kjb->kij", V, hess, np.conj(V))
    D = 1j * (A - np.swapaxes(A, 1, 2))

    total = np.zeros(P.shape[0], dtype=complex)
    idx = list(range(2 * n + 1))
    fact = math.factorial(n)
    for i in idx:
        rest = np.array([r for r in idx if r != i])
        minor = D[:, rest[:, None], rest[None, :]]
        total = total + ((-1) ** i) * beta[:, i] * fact * _pfaffian(minor)
    imag = np.max(np.abs(total.imag)) if total.size else 0.0
    if imag > 1e-6 * max(1.0, np.max(np.abs(total.real))):
        raise NonTransversal(f"volume form came out non-real (imag {imag:.2e})")
    return np.real(total)


def _grid_nodes(rule: QuadratureRule, d: int, resolution=None):
    """Gauss-Legendre x uniform product nodes over the angle box of S^{d-1}."""
    res = rule.resolution if resolution is None else resolution
    n_polar = d - 2
    axes, weights = [], []
    for _ in range(n_polar):
        x, w = np.polynomial.legendre.leggauss(res)
        axes.append(0.5 * np.pi * (x + 1.0))
        weights.append(0.5 * np.pi * w)
    k_phi = max(4, res)
    axes.append(2.0 * np.pi * np.arange(k_phi) / k_phi)
    weights.append(np.full(k_phi, 2.0 * np.pi / k_phi))
    grids = np.meshgrid(*axes, indexing="ij")
    wgrids = np.meshgrid(*weights, indexing="ij")
    angles = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return angles, w


def _eval_on_angles(rc: RadialChart, density, angles):
    """|pullback| * density at each angle node, via FD tangents (step 1e-6)."""
    chart = rc.chart
    d = 2 * chart.m
    K = angles.shape[0]

    def param_points(a):
        return radial_points(rc, sphere_point(a))

    P = param_points(angles)
    V = np.empty((K, d - 1, chart.m), dtype=complex)
    for i in range(d - 1):
        step = np.zeros_like(angles)
        step[:, i] = FD_STEP
        V[:, i, :] = (param_points(angles + step) - param_points(angles - step)) / (2 * FD_STEP)
    dens = np.asarray(density(P), dtype=float)
    return np.abs(contact_volume_density(chart, P, V)) * dens, P


def integrate(rc: RadialChart, density, rule: QuadratureRule):
    """Integral of ``density`` against theta ^ (dtheta)^n over the surface.

    Returns (value, error_estimate): refinement-halving error for grids,
    one-sigma sample error for Monte Carlo.
    """
    d = 2 * rc.chart.m
    if rule.kind == "product-grid":
        angles, w = _grid_nodes(rule, d)
        vals, _ = _eval_on_angles(rc, density, angles)
        value = float(np.sum(w * vals))
        half = max(3, rule.resolution // 2)
        angles_h, w_h = _grid_nodes(rule, d, resolution=half)
        vals_h, _ = _eval_on_angles(rc, density, angles_h)
        value_h = float(np.sum(w_h * vals_h))
        return value, abs(value - value_h)
    if rule.kind == "monte-carlo":
        rng = np.random.default_rng(rule.seed)
        U = rng.standard_normal((rule.samples, d))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        angles = sphere_angles(U)
        vals, _ = _eval_on_angles(rc, density, angles)
        jac = sphere_jacobian(angles)
        contrib = vals / jac
        area = sphere_area(d)
        value = float(area * np.mean(contrib))
        err = float(area * np.std(contrib) / math.sqrt(rule.samples))
        return value, err
    raise BadParams(f"unknown quadrature kind {rule.kind!r}")
