"""Kohn-Laplacian values on pluriharmonic restrictions and eigenvalue bounds.

On a level set of a plurisubharmonic potential, the Kohn Laplacian of the
restriction of a pluriharmonic function f~ reduces to a first-order formula
driven by the transverse field: box_b f = n * sum_j conj(xi^j) d f~/dzbar^j.
That formula powers everything here: the tangential energy density
|dbar_b f|^2, eigenmap detection for holomorphic immersions (with the induced
sphere radius), the mean-curvature upper bound for the first positive
eigenvalue, and the energy/tension quotient bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symbolic as sym
from .errors import NotEigenmap, NotPluriharmonic, ZeroEnergy
from .hypersurface import HypersurfaceChart, _as_batch, _frame_batch, _transverse_batch, eval_at, eval_stack
from .immersion import ImmersionSpec
from .quadrature import QuadratureRule, RadialChart, integrate

EIGEN_TOL = 1e-8
ENERGY_FLOOR = 1e-12
CONSTANCY_TOL = 1e-9


class PluriharmonicFunction:
    """A label plus the ambient extension f~, validated pluriharmonic."""

    def __init__(self, ftilde: sym.Expr, label: str = ""):
        self.ftilde = ftilde
        self.label = label
        self._checked = False

    def ensure_valid(self):
        if not self._checked:
            if not sym.is_pluriharmonic(self.ftilde):
                raise NotPluriharmonic(
                    f"{self.label or 'function'} has a nonvanishing mixed second derivative"
                )
            self._checked = True

    def dbar_exprs(self, m):
        return [sym.differentiate(self.ftilde, j, conjugated=True) for j in range(m)]

    def __repr__(self):
        return f"PluriharmonicFunction({self.label or sym.to_text(self.ftilde)})"


@dataclass
class EigenBoundReport:
    """Shared result record for the mean-curvature and tension bounds.

    Fields not produced by a given bound stay None.  ``upper_bound`` is
    n * mean_H2 by construction for the mean-curvature route;
    ``tension_bound`` is total_tension / energy for the quotient route.
    In certified-constant mode (no quadrature) energy and total_tension are
    per-unit-volume constants and ``volume`` is None.
    """

    volume: float | None = None
    mean_H2: float | None = None
    upper_bound: float | None = None
    energy: float | None = None
    total_tension: float | None = None
    tension_bound: float | None = None
    samples_used: int = 0
    volume_error: float | None = None
    mean_error: float | None = None


@dataclass
class TakahashiReport:
    lam: float
    radius: float
    is_eigen: bool
    is_pseudohermitian: bool
    worst_eigen_residual: float
    worst_radius_residual: float


def _xi_batch(chart, P):
    xi, r, _ = _transverse_batch(chart, chart.grad_at(P), chart.hess_at(P))
    return xi, np.real(r)


def _boxb_batch(chart, f: PluriharmonicFunction, P):
    f.ensure_valid()
    xi, _ = _xi_batch(chart, P)
    dbar = eval_stack(f.dbar_exprs(chart.m), P)
    return chart.n * np.einsum("kj,kj->k", np.conj(xi), dbar)


def boxb_pluriharmonic(chart: HypersurfaceChart, f: PluriharmonicFunction, p):
    """Kohn Laplacian of f~|_M via the transverse-field formula."""
    P, single = _as_batch(p, chart.m)
    vals = _boxb_batch(chart, f, P)
    return complex(vals[0]) if single else vals


def _energy_density_batch(chart, f: PluriharmonicFunction, P, fb=None):
    if fb is None:
        fb = _frame_batch(chart, P)
    dbar = eval_stack([sym.differentiate(f.ftilde, j, True) for j in range(chart.m)], P)
    c = np.einsum("kaj,kj->ka", np.conj(fb.Zc), dbar)
    val = np.einsum("ka,kab,kb->k", c, fb.hinv, np.conj(c))
    return np.real(val)


def dbarb_energy_density(chart: HypersurfaceChart, f: PluriharmonicFunction, p):
    """|dbar_b f|^2 at p: nonnegative, zero exactly where f is CR."""
    P, single = _as_batch(p, chart.m)
    vals = _energy_density_batch(chart, f, P)
    return float(vals[0]) if single else vals


def takahashi_check(spec: ImmersionSpec, sample, tol=EIGEN_TOL) -> TakahashiReport:
    """Fit a common eigenvalue in box_b conj(F^d) = lambda conj(F^d).

    The eigenvalue is fitted at the first sample point and verified at the
    rest; on success the induced sphere radius sqrt(n/lambda) is checked
    against |F|, and the transverse field is checked to push onto the
    sphere's own (lambda/n) F, which is the Reeb-matching condition.
    """
    P = np.asarray(sample, dtype=complex)
    if P.ndim == 1:
        P = P[None, :]
    chart, n = spec.chart, spec.n
    xi, _ = _xi_batch(chart, P)

    dfe = spec.dF_exprs()
    N, m = spec.N, spec.dim
    dF = np.empty((P.shape[0], N, m), dtype=complex)
    Fv = np.empty((P.shape[0], N), dtype=complex)
    for d in range(N):
        Fv[:, d] = eval_at(spec.F[d], P)
        for j in range(m):
            dF[:, d, j] = eval_at(dfe[d][j], P)
    boxb = n * np.conj(np.einsum("kdj,kj->kd", dF, xi))

    Fbar = np.conj(Fv)
    anchor = np.abs(Fbar[0]) > 1e-8
    if not np.any(anchor):
        raise NotEigenmap("all components vanish at the first sample point")
    cands = boxb[0][anchor] / Fbar[0][anchor]
    lam = cands[0]
    if np.max(np.abs(cands - lam)) > tol * (1 + abs(lam)):
        raise NotEigenmap(
            f"componentwise ratios disagree: spread {np.max(np.abs(cands - lam)):.3e}"
        )
    scale = max(1.0, float(np.max(np.abs(Fbar))))
    resid = float(np.max(np.abs(boxb - lam * Fbar)))
    if resid > tol * scale * (1 + abs(lam)):
        raise NotEigenmap(f"eigen residual {resid:.3e} across samples")
    if abs(lam.imag) > tol * (1 + abs(lam)) or lam.real <= 0:
        raise NotEigenmap(f"fitted eigenvalue {lam} is not positive real")
    lam = float(lam.real)

    radius = float(np.sqrt(n / lam))
    radius_resid = float(np.max(np.abs(np.linalg.norm(Fv, axis=1) - radius)))
    reeb_resid = float(
        np.max(np.abs(np.einsum("kdj,kj->kd", dF, xi) - (lam / n) * Fv))
    )
    return TakahashiReport(
        lam=lam,
        radius=radius,
        is_eigen=True,
        is_pseudohermitian=bool(radius_resid < 1e-8 and reeb_resid < 1e-6),
        worst_eigen_residual=resid,
        worst_radius_residual=radius_resid,
    )


def reilly_bound(spec: ImmersionSpec, quad: QuadratureRule, radial: RadialChart | None = None) -> EigenBoundReport:
    """Upper bound n * mean(|H|^2) for the first positive eigenvalue.

    |H|^2 equals the transverse curvature of the induced chart, so the
    integrand needs only the chart jets at each quadrature node.
    """
    chart = spec.chart
    rc = radial if radial is not None else RadialChart(chart)

    def h2_density(P):
        _, r = _xi_batch(chart, P)
        return r

    total_h2, err_h2 = integrate(rc, h2_density, quad)
    volume, err_vol = integrate(rc, lambda P: np.ones(P.shape[0]), quad)
    mean = total_h2 / volume
    return EigenBoundReport(
        volume=volume,
        mean_H2=mean,
        upper_bound=chart.n * mean,
        volume_error=err_vol,
        mean_error=abs(err_h2 / volume) + abs(mean * err_vol / volume),
        samples_used=quad.samples if quad.kind == "monte-carlo" else quad.resolution,
    )


def tension_bound(
    chart: HypersurfaceChart,
    f_components,
    quad: QuadratureRule | None = None,
    radial: RadialChart | None = None,
    sample_points=None,
) -> EigenBoundReport:
    """Quotient bound total_tension / energy for the first eigenvalue.

    With a quadrature rule, both quantities are integrated over the surface.
    Without one, the densities are certified constant on ``sample_points``
    (max-min below 1e-9) and the bound is the ratio of the constants --
    the route for surfaces that no radial chart covers.
    """
    fs = list(f_components)
    for f in fs:
        f.ensure_valid()

    def energy_density(P):
        fb = _frame_batch(chart, P)
        return np.sum([_energy_density_batch(chart, f, P, fb) for f in fs], axis=0)

    def tension_density(P):
        return np.sum([np.abs(_boxb_batch(chart, f, P)) ** 2 for f in fs], axis=0)

    if quad is not None:
        rc = radial if radial is not None else RadialChart(chart)
        energy, _ = integrate(rc, energy_density, quad)
        tension, _ = integrate(rc, tension_density, quad)
        volume, err_vol = integrate(rc, lambda P: np.ones(P.shape[0]), quad)
        if energy < ENERGY_FLOOR * max(1.0, volume):
            raise ZeroEnergy("all components are CR; the quotient is undefined")
        return EigenBoundReport(
            volume=volume,
            energy=energy,
            total_tension=tension,
            tension_bound=tension / energy,
            volume_error=err_vol,
            samples_used=quad.samples if quad.kind == "monte-carlo" else quad.resolution,
        )

    if sample_points is None:
        raise ZeroEnergy("certified-constant mode needs sample_points")
    P = np.asarray(sample_points, dtype=complex)
    e_vals = energy_density(P)
    t_vals = tension_density(P)
    for name, vals in (("energy", e_vals), ("tension", t_vals)):
        spread = float(np.max(vals) - np.min(vals))
        if spread > CONSTANCY_TOL * (1.0 + float(np.mean(np.abs(vals)))):
            raise ZeroEnergy(
                f"{name} density is not constant (spread {spread:.3e}); "
                "use a quadrature rule instead"
            )
    energy = float(np.mean(e_vals))
    tension = float(np.mean(t_vals))
    if energy < ENERGY_FLOOR:
        raise ZeroEnergy("all components are CR; the quotient is undefined")
    return EigenBoundReport(
        volume=None,
        energy=energy,
        total_tension=tension,
        tension_bound=tension / energy,
        samples_used=P.shape[0],
    )
