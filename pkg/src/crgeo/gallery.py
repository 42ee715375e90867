"""Built-in example surfaces, their samplers, and the batched surface scan.

Each gallery entry wires together everything the analysis pipeline needs:
the chart, the holomorphic components when the defining function has the
squared-norm shape, a distinguished pluriharmonic family when one exists,
the conformal exponent relating it to a round base chart, and point
generators (random on-surface samples and deterministic scan grids).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import symbolic as sym
from .errors import BadParams, NotStarShaped, UnknownSurface
from .hypersurface import HypersurfaceChart, _frame_batch, _loghess_batch, _ricci_batch
from .immersion import UMBILIC_TOLERANCE, ImmersionSpec, _sff_batch
from .quadrature import RadialChart, radial_points, sphere_point
from .spectral import PluriharmonicFunction


@dataclass
class SurfaceSpec:
    """A fully wired gallery surface."""

    name: str
    params: dict
    chart: HypersurfaceChart
    immersion: ImmersionSpec | None = None
    sigma: sym.Expr | None = None
    base_chart: HypersurfaceChart | None = None
    plurifamily: list = field(default_factory=list)
    star_shaped: bool = True
    _sampler: object = None

    @property
    def dim(self):
        return self.chart.m

    @property
    def n(self):
        return self.chart.n

    def radial(self) -> RadialChart:
        if not self.star_shaped:
            raise NotStarShaped(f"{self.name} has no radial chart about the origin")
        return RadialChart(self.chart)

    def random_points(self, k: int, seed: int = 0) -> np.ndarray:
        """k exactly-on-surface points, deterministic in the seed."""
        rng = np.random.default_rng(seed)
        if self._sampler is not None:
            return self._sampler(k, rng)
        U = rng.standard_normal((k, 2 * self.dim))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        return radial_points(self.radial(), U)

    def scan_grid(self, budget: int):
        """Deterministic grid of on-surface points covering the whole surface.

        Returns (points (K, m), spacing): ``budget`` is a total point target,
        spread over the chart angles; polar angles get odd node counts so the
        inclusive [0, pi] grids contain the endpoints and the equator.
        ``spacing`` estimates the largest gap between neighboring points.
        """
        if self._sampler is not None:
            return self._scan_param_torus(budget)
        d = 2 * self.dim
        angles, step = _angle_grid(budget, d - 1)
        P = radial_points(self.radial(), sphere_point(angles))
        spacing = step * float(np.max(np.abs(P)))
        return P, spacing

    def _scan_param_torus(self, budget):
        raise NotStarShaped(f"{self.name} does not define a scan grid")


def _odd(k):
    return k if k % 2 == 1 else k + 1


def _angle_grid(budget, n_angles):
    """Product grid over [0,pi]^(n_angles-1) x [0,2pi); polar counts odd."""
    q = max(3, int(round(budget ** (1.0 / n_angles))))
    polar_count = _odd(q)
    axes = [np.linspace(0.0, np.pi, polar_count) for _ in range(n_angles - 1)]
    axes.append(np.linspace(0.0, 2 * np.pi, q, endpoint=False))
    grids = np.meshgrid(*axes, indexing="ij")
    angles = np.stack([g.ravel() for g in grids], axis=1)
    steps = [np.pi / (polar_count - 1)] * (n_angles - 1) + [2 * np.pi / q]
    return angles, max(steps)


# ---- builders ---------------------------------------------------------------


def _identity_vars(m):
    return [sym.var(j) for j in range(m)]


def _build_sphere(r=1.0, n=1):
    radius = float(r)
    n = int(n)
    if radius <= 0:
        raise BadParams("sphere radius must be positive")
    if n < 1:
        raise BadParams("CR dimension n must be at least 1")
    m = n + 1
    F = _identity_vars(m)
    imm = ImmersionSpec(F, dim=m, psi=sym.const(-(radius**2)), name=f"sphere(r={radius},n={n})")
    family = [
        PluriharmonicFunction(sym.var(j, conjugated=True), label=f"conj(z{j + 1})")
        for j in range(m)
    ]
    return SurfaceSpec(
        name="sphere",
        params={"r": radius, "n": n},
        chart=imm.chart,
        immersion=imm,
        plurifamily=family,
    )


def _build_ellipsoid(A=(0.1, 0.2, 0.3), dim=None):
    A = tuple(float(a) for a in np.atleast_1d(A))
    m = len(A) if dim is None else int(dim)
    if m < 2:
        raise BadParams("ellipsoid needs ambient dimension at least 2")
    if len(A) != m:
        raise BadParams(f"ellipsoid expects one coefficient per coordinate: len(A)={len(A)}, dim={m}")
    if max(abs(a) for a in A) >= 1:
        raise BadParams(f"|A_j| >= 1 breaks strict pseudoconvexity on the scan region: A={A}")
    zs = _identity_vars(m)
    quad = sym.const(0)
    for a, z in zip(A, zs):
        quad = sym.add(quad, sym.mul(sym.const(a), sym.mul(z, z)))
    psi = sym.add(sym.re(quad), sym.const(-1))
    imm = ImmersionSpec(zs, dim=m, psi=psi, name=f"ellipsoid(A={A})")
    return SurfaceSpec(
        name="ellipsoid",
        params={"A": A, "dim": m},
        chart=imm.chart,
        immersion=imm,
    )


def _build_whitney(n=1):
    n = int(n)
    if n < 1:
        raise BadParams("CR dimension n must be at least 1")
    m = n + 1
    zs, w = _identity_vars(m)[:-1], sym.var(m - 1)
    F = zs + [sym.mul(z, w) for z in zs] + [sym.mul(w, w)]
    imm = ImmersionSpec(F, dim=m, name=f"whitney(n={n})")
    sigma = sym.log(sym.add(sym.const(1), sym.abs2(w)))
    base = HypersurfaceChart(
        sym.add(sum((sym.abs2(z) for z in _identity_vars(m)), sym.const(0)), sym.const(-1)),
        m,
        name="unit sphere",
    )
    return SurfaceSpec(
        name="whitney",
        params={"n": n},
        chart=imm.chart,
        immersion=imm,
        sigma=sigma,
        base_chart=base,
    )


class _ReinhardtSampler:
    """Exact sampling of { sum_j (log|z_j|^2)^2 = 1 } via log-moduli and phases."""

    def __init__(self, m):
        self.m = m

    def __call__(self, k, rng):
        L = rng.standard_normal((k, self.m))
        L /= np.linalg.norm(L, axis=1, keepdims=True)
        phases = rng.uniform(0.0, 2 * np.pi, size=(k, self.m))
        return np.exp(L / 2.0) * np.exp(1j * phases)

    def scan_grid(self, budget):
        # axes: (m-2) polar + 1 azimuth for the log-moduli sphere, m phases
        m = self.m
        n_axes = 2 * m - 1
        q = max(3, int(round(budget ** (1.0 / n_axes))))
        axes = [np.linspace(0.0, np.pi, _odd(q)) for _ in range(m - 2)]
        axes += [np.linspace(0.0, 2 * np.pi, q, endpoint=False)] * (m + 1)
        grids = np.meshgrid(*axes, indexing="ij")
        angles = np.stack([g.ravel() for g in grids], axis=1)
        L = sphere_point(angles[:, : m - 1])
        phases = angles[:, m - 1 :]
        P = np.exp(L / 2.0) * np.exp(1j * phases)
        step = max([np.pi / (_odd(q) - 1)] * (m - 2) + [2 * np.pi / q])
        return P, step * float(np.e**0.5)


def _build_reinhardt(n=1):
    n = int(n)
    if n < 1:
        raise BadParams("CR dimension n must be at least 1")
    m = n + 1
    rho = sym.const(-1)
    family = []
    for j in range(m):
        lg = sym.log(sym.abs2(sym.var(j)))
        rho = sym.add(rho, sym.intpow(lg, 2))
        family.append(PluriharmonicFunction(lg, label=f"log|z{j + 1}|^2"))
    chart = HypersurfaceChart(rho, m, name=f"reinhardt(n={n})")
    spec = SurfaceSpec(
        name="reinhardt",
        params={"n": n},
        chart=chart,
        plurifamily=family,
        star_shaped=False,
        _sampler=_ReinhardtSampler(m),
    )
    spec._scan_param_torus = lambda budget: spec._sampler.scan_grid(budget)
    return spec


def _build_custom(fields: dict, name="custom"):
    m = fields["dim"]
    rho = fields["rho"]
    imm = None
    if "F" in fields:
        imm = ImmersionSpec(fields["F"], dim=m, psi=fields.get("psi"), name=name)
        gap = sym.add(rho, sym.neg(imm.chart.rho))
        if not sym.appears_zero(gap, tol=1e-9):
            raise BadParams("rho does not match |F|^2 + psi for the given F and psi")
        chart = imm.chart
    else:
        chart = HypersurfaceChart(rho, m, name=name)
    return SurfaceSpec(
        name=name,
        params={"dim": m},
        chart=chart,
        immersion=imm,
        sigma=fields.get("sigma"),
    )


_BUILDERS = {
    "sphere": _build_sphere,
    "ellipsoid": _build_ellipsoid,
    "whitney": _build_whitney,
    "reinhardt": _build_reinhardt,
}

GALLERY_DOC = {
    "sphere": "round sphere |Z|^2 = r^2; params r=1.0, n=1",
    "ellipsoid": "|Z|^2 + Re sum A_j z_j^2 = 1; params A=(0.1,0.2,0.3), dim=len(A)",
    "whitney": "level set |W|^2 = 1 for W = (z, zw, w^2)-type quadratic map; params n=1",
    "reinhardt": "sum_j (log|z_j|^2)^2 = 1 torus bundle; params n=1",
    "custom": "surface file via --surface-file (keys rho, dim, F, psi, sigma)",
}


def gallery(name: str, **params) -> SurfaceSpec:
    """Construct a built-in surface by name."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownSurface(
            f"unknown surface {name!r}; available: {sorted(_BUILDERS)} or custom via file"
        ) from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise BadParams(f"bad parameters for {name}: {exc}") from exc


def load_surface(fields: dict, name="custom") -> SurfaceSpec:
    return _build_custom(fields, name=name)


# ---- batched surface scan ----------------------------------------------------


def scan_surface(surface: SurfaceSpec, budget: int, umbilic_tolerance=UMBILIC_TOLERANCE):
    """Whole-surface scan: curvature scalars and umbilicity at grid points.

    Returns a dict of equal-length arrays plus the grid spacing estimate.
    ``II0norm2``/``is_umbilic`` are present only when the surface carries an
    immersion.
    """
    P, spacing = surface.scan_grid(budget)
    chart = surface.chart
    out = {"points": P, "spacing": spacing}
    if surface.immersion is not None:
        fb, f = _sff_batch(surface.immersion, P)
        out["II0norm2"] = f["II0"]
        out["Hnorm2"] = f["Hnorm2"]
        out["is_umbilic"] = f["II0"] < umbilic_tolerance
    else:
        fb = _frame_batch(chart, P)
    out["r"] = fb.r
    out["J"] = fb.J
    ric, R, L = _ricci_batch(chart, fb)
    out["scalarR"] = R
    out["min_eig_L"] = np.linalg.eigvalsh(L)[:, 0]
    return out
