"""Runnable invariant suites and finite-difference oracles.

Every residual the library's identities promise is checked here against an
explicit threshold, per surface: frame/transverse defining equations,
Hermitian positivity, determinant reality, metric compatibility of the
connection, the traced Gauss identity through two independent routes, the
trace inequalities, conformal-change agreement, quadrature convergence, and
first/second symbolic derivatives against central finite differences on the
real jet (step 1e-5).

``run_suites`` powers the CLI ``check`` subcommand; each result carries the
residual actually measured so report consumers can re-threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symbolic as sym
from .errors import GeometryError
from .gallery import SurfaceSpec
from .hypersurface import (
    _connection_batch,
    _frame_batch,
    _loghess_batch,
    _ricci_batch,
    _transverse_batch,
    conformal_transverse,
    eval_at,
    HypersurfaceChart,
)
from .immersion import _gauss_form, _mixed_sff_batch, _sff_batch
from .quadrature import RadialChart, integrate, monte_carlo, product_grid
from .spectral import PluriharmonicFunction, _boxb_batch, _energy_density_batch

FD_STEP = 1e-5


@dataclass
class CheckResult:
    name: str
    residual: float
    threshold: float
    passed: bool

    @staticmethod
    def from_residual(name, residual, threshold):
        residual = float(residual)
        return CheckResult(name, residual, threshold, bool(residual < threshold))

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: residual {self.residual:.3e} (threshold {self.threshold:.1e})"


# ---- finite-difference oracles ------------------------------------------------


def fd_wirtinger(f, P, j, conjugated, h=FD_STEP):
    """Central-difference Wirtinger derivative of a batch callable."""
    ex = np.zeros(P.shape[1], dtype=complex)
    ex[j] = h
    ey = np.zeros(P.shape[1], dtype=complex)
    ey[j] = 1j * h
    dx = (f(P + ex) - f(P - ex)) / (2 * h)
    dy = (f(P + ey) - f(P - ey)) / (2 * h)
    return 0.5 * (dx + 1j * dy) if conjugated else 0.5 * (dx - 1j * dy)


def max_fd_mismatch(e: sym.Expr, P: np.ndarray, indices=None) -> float:
    """Worst relative gap between symbolic derivatives of e and FD, over
    all first derivatives (barred and unbarred) at the points P."""
    idx = sorted(sym.free_indices(e)) if indices is None else list(indices)
    worst = 0.0
    for j in idx:
        for conjugated in (False, True):
            s = eval_at(sym.differentiate(e, j, conjugated), P)
            f = fd_wirtinger(lambda Q: eval_at(e, Q), P, j, conjugated)
            gap = np.max(np.abs(s - f) / (1.0 + np.abs(s)))
            worst = max(worst, float(gap))
    return worst


def random_exprs(rng, m, count=12, depth=3):
    """Random expression trees over m variables, safe to evaluate anywhere
    in the zero-test sampling box (poles are kept positive-definite)."""
    out = []

    def build(d):
        if d == 0 or rng.random() < 0.25:
            if rng.random() < 0.3:
                return sym.const(complex(rng.normal(), rng.normal()))
            return sym.var(int(rng.integers(m)), bool(rng.integers(2)))
        op = rng.integers(6)
        if op == 0:
            return sym.add(build(d - 1), build(d - 1))
        if op == 1:
            return sym.mul(build(d - 1), build(d - 1))
        if op == 2:
            return sym.neg(build(d - 1))
        if op == 3:
            return sym.intpow(build(d - 1), int(rng.integers(2, 4)))
        if op == 4:
            return sym.recip(sym.add(sym.const(0.5), sym.abs2(build(d - 1))))
        return sym.log(sym.add(sym.const(1), sym.abs2(build(d - 1))))

    for _ in range(count):
        out.append(build(depth))
    return out


def random_pluriharmonic(rng, m, degree=3):
    """Random Re(holomorphic polynomial), an always-valid ambient extension."""
    g = sym.const(0)
    for _ in range(degree):
        coef = sym.const(complex(rng.normal(), rng.normal()))
        mono = coef
        for _ in range(int(rng.integers(1, 3))):
            mono = sym.mul(mono, sym.var(int(rng.integers(m))))
        g = sym.add(g, mono)
    return sym.re(g)


# ---- symbolic-engine suite -----------------------------------------------------


def symcore_suite(seed=0):
    rng = np.random.default_rng(seed)
    m = 3
    exprs = random_exprs(rng, m)
    P = sym._random_coords(rng, m, 50)

    worst_mixed = 0.0
    worst_conj = 0.0
    worst_fd = 0.0
    for e in exprs:
        j, k = rng.integers(m), rng.integers(m)
        a = sym.differentiate(sym.differentiate(e, int(j), False), int(k), True)
        b = sym.differentiate(sym.differentiate(e, int(k), True), int(j), False)
        gap = np.max(np.abs(eval_at(a, P) - eval_at(b, P)))
        worst_mixed = max(worst_mixed, float(gap))

        dc = sym.differentiate(sym.conj(e), int(j), False)
        d = sym.differentiate(e, int(j), True)
        gap = np.max(np.abs(eval_at(dc, P) - np.conj(eval_at(d, P))))
        worst_conj = max(worst_conj, float(gap))

        worst_fd = max(worst_fd, max_fd_mismatch(e, P[:10]))
        for j2 in sym.free_indices(e):
            worst_fd = max(
                worst_fd, max_fd_mismatch(sym.differentiate(e, j2, False), P[:10])
            )

    return [
        CheckResult.from_residual("symbolic.mixed-partial-symmetry", worst_mixed, 1e-9),
        CheckResult.from_residual("symbolic.conjugation-covariance", worst_conj, 1e-12),
        CheckResult.from_residual("symbolic.derivative-vs-fd", worst_fd, 1e-6),
    ]


# ---- per-surface suites ---------------------------------------------------------


def _rel_eigs(L, h):
    """Eigenvalues of the Hermitian form L relative to the metric h."""
    c = np.linalg.cholesky(h)
    cinv = np.linalg.inv(c)
    M = cinv @ L @ np.conj(np.swapaxes(cinv, -1, -2))
    return np.linalg.eigvalsh(M)


def hypersurface_suite(surface: SurfaceSpec, seed=0, npoints=100):
    chart = surface.chart
    rng = np.random.default_rng(seed)
    P = surface.random_points(npoints, seed=seed)
    out = []

    fb = _frame_batch(chart, P)
    grad, hess = fb.grad, fb.hess
    res_pair = np.abs(np.einsum("kj,kj->k", grad, fb.xi) - 1.0)
    res_eig = np.abs(
        np.einsum("kjl,kj->kl", hess, fb.xi) - fb.r[:, None] * np.conj(grad)
    )
    out.append(CheckResult.from_residual(
        "frame.xi-defining-equations", max(np.max(res_pair), np.max(res_eig)), 1e-9))

    raw = np.einsum("kaj,kjl,kbl->kab", fb.Zc, hess, np.conj(fb.Zc))
    herm = np.max(np.abs(raw - np.conj(np.swapaxes(raw, 1, 2))))
    out.append(CheckResult.from_residual("frame.levi-hermitian", herm, 1e-12))
    out.append(CheckResult("frame.levi-positive", float(np.min(fb.heigs)), 1e-10,
                           bool(np.min(fb.heigs) > 1e-10)))
    out.append(CheckResult("frame.J-positive", float(np.min(fb.J)), 0.0, bool(np.min(fb.J) > 0)))

    r2 = np.einsum("kjl,kj,kl->k", hess, fb.xi, np.conj(fb.xi))
    out.append(CheckResult.from_residual(
        "frame.r-consistency", np.max(np.abs(r2 - fb.r)), 1e-9))

    # closed form r = 1/(rho^{j kbar} rho_j rho_kbar) where the Hessian inverts
    cond = np.linalg.cond(hess)
    ok = cond < 1e8
    if np.any(ok):
        sol = np.linalg.solve(np.swapaxes(hess[ok], 1, 2), np.conj(grad[ok])[..., None])[..., 0]
        rcf = 1.0 / np.einsum("kj,kj->k", grad[ok], sol)
        out.append(CheckResult.from_residual(
            "frame.r-closed-form", np.max(np.abs(rcf - fb.r[ok])), 1e-9))

    # frame independence of r, J, scalar R, and the (L, h)-eigenvalues
    Pf = P[: min(10, npoints)]
    per_w = []
    gradf = chart.grad_at(Pf)
    for w in range(chart.m):
        if np.min(np.abs(gradf[:, w])) < 1e-6:
            continue
        fbw = _frame_batch(chart, Pf, w_index=w)
        ric, R, L = _ricci_batch(chart, fbw)
        per_w.append((fbw.r, fbw.J, R, np.sort(_rel_eigs(L, fbw.h), axis=1)))
    spread = 0.0
    for a in per_w[1:]:
        for x, y in zip(per_w[0], a):
            spread = max(spread, float(np.max(np.abs(x - y))))
    out.append(CheckResult.from_residual("frame.w-independence", spread, 1e-8))

    # restricted log-determinant Hessian: PSD for squared-norm surfaces
    if surface.immersion is not None:
        _, _, L = _ricci_batch(chart, fb)
        out.append(CheckResult(
            "loghess.positive-semidefinite",
            float(np.min(_rel_eigs(L, fb.h))), -1e-9,
            bool(np.min(_rel_eigs(L, fb.h)) > -1e-9)))

    # metric compatibility of the connection coefficients
    res = _metric_compatibility(chart, P[: min(25, npoints)])
    out.append(CheckResult.from_residual("connection.metric-compatibility", res, 1e-8))

    # conformal change: formula route vs direct transverse solve on e^sigma rho
    res = _conformal_tworoute(surface, rng, P[: min(20, npoints)])
    out.append(CheckResult.from_residual("conformal.two-route", res, 1e-8))

    # symbolic jets against finite differences
    out.append(CheckResult.from_residual(
        "fd.first-and-second-jets", _fd_suite(surface, P[: min(50, npoints)]), 1e-6))
    return out


def _metric_compatibility(chart, P):
    worst = 0.0
    grad = chart.grad_at(P)
    for w in np.unique(np.argmax(np.abs(grad), axis=1)):
        mask = np.argmax(np.abs(grad), axis=1) == w
        fb = _frame_batch(chart, P[mask], w_index=int(w))
        omega = _connection_batch(chart, fb, include_reeb=False)
        n, m = chart.n, chart.m
        dsyms = chart._levi_entry_derivs(int(w))
        dh = np.empty((fb.P.shape[0], n, n, m), dtype=complex)
        for b in range(n):
            for mu in range(n):
                for j in range(m):
                    dh[:, b, mu, j] = eval_at(dsyms[b][mu][j], fb.P)
        Zgh = np.einsum("kgj,kbmj->kgbm", fb.Zc, dh)
        lhs = Zgh
        t1 = np.einsum("kbsg,ksm->kgbm", omega[:, :, :, :n], fb.h)
        t2 = np.einsum("kmsg,kbs->kgbm", np.conj(omega[:, :, :, n : 2 * n]), fb.h)
        worst = max(worst, float(np.max(np.abs(lhs - t1 - t2))))
    return worst


def _conformal_tworoute(surface, rng, P):
    chart = surface.chart
    candidates = [sym.const(0.35)]
    if surface.sigma is not None:
        candidates.append(surface.sigma)
    q = random_pluriharmonic(rng, chart.m, degree=2)
    positive = sym.add(sym.const(1.0), sym.mul(sym.const(0.1), sym.abs2(q)))
    candidates.append(sym.log(positive))
    worst = 0.0
    for sigma in candidates:
        rhat = conformal_transverse(chart, sigma, P)
        efac = None
        if sigma.op == "log":
            efac = sigma.args[0]
        elif sigma.op == "const":
            efac = sym.const(np.exp(sigma.payload))
        if efac is None:
            continue
        hat_chart = HypersurfaceChart(sym.mul(efac, chart.rho), chart.m)
        xi2, r2, _ = _transverse_batch(hat_chart, hat_chart.grad_at(P), hat_chart.hess_at(P))
        worst = max(worst, float(np.max(np.abs(rhat - np.real(r2)))))
    return worst


def _fd_suite(surface: SurfaceSpec, P):
    chart = surface.chart
    worst = 0.0
    worst = max(worst, max_fd_mismatch(chart.rho, P))
    for j in range(chart.m):
        worst = max(worst, max_fd_mismatch(chart.jet((j, False)), P))
    worst = max(worst, max_fd_mismatch(sym.log(chart.fefferman_expr()), P))
    # frame-dependent expressions carry 1/rho_w: only points where that
    # coordinate is a valid frame choice are in their domain
    grad = np.abs(chart.grad_at(P))
    w = int(np.argmax(grad[0]))
    Pw = P[grad[:, w] > 0.3 * np.max(grad, axis=1)]
    for row in chart._levi_entry_exprs(w):
        for e in row:
            worst = max(worst, max_fd_mismatch(e, Pw))
    if surface.immersion is not None:
        spec = surface.immersion
        for comp in spec.F:
            worst = max(worst, max_fd_mismatch(comp, P))
        zf, _ = spec._frame_dF_exprs(w)
        for row in zf:
            for e in row:
                worst = max(worst, max_fd_mismatch(e, Pw))
    for f in surface.plurifamily:
        worst = max(worst, max_fd_mismatch(f.ftilde, P))
    return worst


def immersion_suite(surface: SurfaceSpec, seed=0, npoints=50):
    spec = surface.immersion
    if spec is None:
        return []
    chart = spec.chart
    n = spec.n
    rng = np.random.default_rng(seed + 1)
    P = surface.random_points(npoints, seed=seed + 1)
    out = []

    fb, f = _sff_batch(spec, P)
    out.append(CheckResult.from_residual(
        "sff.normality", np.max(f["normality"]), 1e-9))
    out.append(CheckResult.from_residual(
        "sff.symmetry", np.max(f["symmetry"]), 1e-9))
    out.append(CheckResult.from_residual(
        "sff.mean-curvature-vs-transverse", np.max(np.abs(f["Hnorm2"] - fb.r)), 1e-9))
    out.append(CheckResult.from_residual(
        "sff.torsion-symmetric",
        np.max(np.abs(f["torsion"] - np.swapaxes(f["torsion"], 1, 2))), 1e-9))

    # two-route traced Gauss identity
    L = _loghess_batch(chart, fb)
    G = _gauss_form(f["holo"], fb.hinv)
    out.append(CheckResult.from_residual(
        "gauss.traced-two-route", np.max(np.abs(L - G)), 1e-7))

    # trace identities against the chart-only Ricci route
    ric_ll, R_ll, _ = _ricci_batch(chart, fb)
    hh = f["Hnorm2"][:, None, None] * fb.h
    gap = np.max(np.abs(ric_ll - ((n + 1) * hh - L)))
    out.append(CheckResult.from_residual("gauss.ricci-trace-identity", gap, 1e-7))
    R_gauss = n * (n + 1) * f["Hnorm2"] - f["II0"]
    out.append(CheckResult.from_residual(
        "gauss.scalar-curvature-identity", np.max(np.abs(R_gauss - R_ll)), 1e-8))

    # Ricci upper bound: eigenvalues of Ric - (n+1)|H|^2 h stay nonpositive
    slack = _rel_eigs((n + 1) * hh - ric_ll, fb.h)
    out.append(CheckResult(
        "gauss.ricci-upper-bound", float(np.min(slack)), -1e-9, bool(np.min(slack) > -1e-9)))

    # mixed part: II(Z_alpha, Z_betabar) = h_{alpha betabar} conj(H)
    worst_mixed = 0.0
    worst_trace = 0.0
    for w in np.unique(fb.w):
        mask = fb.w == w
        sub = fb.subset(mask)
        sub.fidx = tuple(j for j in range(chart.m) if j != w)
        M = _mixed_sff_batch(spec, sub)
        pred = np.einsum("kab,kd->kabd", sub.h, np.conj(f["H"][mask]))
        worst_mixed = max(worst_mixed, float(np.max(np.abs(M - pred))))
        Htr = np.einsum("kab,kabd->kd", sub.hinv, np.conj(M)) / n
        worst_trace = max(worst_trace, float(np.max(np.abs(Htr - f["H"][mask]))))
    out.append(CheckResult.from_residual("sff.mixed-part-identity", worst_mixed, 1e-8))
    out.append(CheckResult.from_residual("sff.mean-curvature-trace", worst_trace, 1e-8))

    # Reeb pairing: theta(T) = 1 exactly, and H is metrically normal
    theta_T = np.real(np.conj(np.einsum("kj,kj->k", fb.grad, fb.xi)))
    out.append(CheckResult.from_residual(
        "reeb.contact-pairing", np.max(np.abs(theta_T - 1.0)), 1e-8))
    out.append(CheckResult.from_residual(
        "reeb.mean-curvature-normal", np.max(f["H_tangential"]), 1e-8))

    # invariance of |II0|^2 and |A|^2 under frame re-selection
    Pf = P[: min(10, npoints)]
    vals0 = valsA = None
    spread = spreadA = 0.0
    gradf = chart.grad_at(Pf)
    for w in range(chart.m):
        if np.min(np.abs(gradf[:, w])) < 1e-6:
            continue
        fbw, fw = _sff_batch(spec, Pf, w_index=w)
        a2 = np.real(np.einsum(
            "kab,kpq,kpa,kqb->k", fw["torsion"], np.conj(fw["torsion"]), fbw.hinv, fbw.hinv))
        if vals0 is None:
            vals0, valsA = fw["II0"], a2
        else:
            spread = max(spread, float(np.max(np.abs(fw["II0"] - vals0))))
            spreadA = max(spreadA, float(np.max(np.abs(a2 - valsA))))
    out.append(CheckResult.from_residual("sff.II0-frame-invariance", spread, 1e-8))
    out.append(CheckResult.from_residual("sff.torsion-norm-frame-invariance", spreadA, 1e-8))

    # invariance under a unitary rotation of the normal basis
    A = spec.N - n
    X = rng.standard_normal((A, A)) + 1j * rng.standard_normal((A, A))
    U = np.linalg.qr(X)[0]
    holo_rot = np.einsum("kabx,yx->kaby", f["holo"], U)
    II0_rot = np.real(np.einsum(
        "kpqx,krsx,krp,ksq->k", holo_rot, np.conj(holo_rot), fb.hinv, fb.hinv))
    out.append(CheckResult.from_residual(
        "sff.II0-normal-basis-invariance", np.max(np.abs(II0_rot - f["II0"])), 1e-8))

    # torsion against the ambient pairing route (no normal basis involved)
    amb = -1j * np.einsum("kabx,kx->kab", f["holo"], np.conj(f["Ha"]))
    out.append(CheckResult.from_residual(
        "sff.torsion-ambient-route", np.max(np.abs(amb - f["torsion"])), 1e-9))
    return out


def spectral_suite(surface: SurfaceSpec, seed=0, npoints=50):
    chart = surface.chart
    rng = np.random.default_rng(seed + 2)
    P = surface.random_points(npoints, seed=seed + 2)
    out = []

    # Beltrami linearity on random pluriharmonic extensions
    f1 = PluriharmonicFunction(random_pluriharmonic(rng, chart.m), "f1")
    f2 = PluriharmonicFunction(random_pluriharmonic(rng, chart.m), "f2")
    a, b = complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal())
    combo = PluriharmonicFunction(
        sym.add(sym.mul(sym.const(a), f1.ftilde), sym.mul(sym.const(b), f2.ftilde)), "combo")
    gap = np.max(np.abs(
        _boxb_batch(chart, combo, P)
        - a * _boxb_batch(chart, f1, P)
        - b * _boxb_batch(chart, f2, P)))
    out.append(CheckResult.from_residual("beltrami.linearity", gap, 1e-10))

    # CR functions are annihilated exactly (structural zero)
    hol = PluriharmonicFunction(
        sym.add(sym.mul(sym.var(0), sym.var(chart.m - 1)), sym.intpow(sym.var(0), 2)), "cr")
    vals = _boxb_batch(chart, hol, P)
    out.append(CheckResult.from_residual("beltrami.annihilates-cr", np.max(np.abs(vals)), 1e-15))

    if surface.name == "reinhardt":
        n = chart.n
        worst_b = worst_d = worst_s = 0.0
        dens_sum = np.zeros(P.shape[0])
        for j, f in enumerate(surface.plurifamily):
            Lj = np.log(np.abs(P[:, j]) ** 2)
            bx = _boxb_batch(chart, f, P)
            worst_b = max(worst_b, float(np.max(np.abs(bx - (n / 2) * Lj))))
            dens = _energy_density_batch(chart, f, P)
            worst_d = max(worst_d, float(np.max(np.abs(dens - (0.5 - 0.5 * Lj**2)))))
            dens_sum += dens
        worst_s = float(np.max(np.abs(dens_sum - n / 2)))
        out.append(CheckResult.from_residual("reinhardt.kohn-identity", worst_b, 1e-9))
        out.append(CheckResult.from_residual("reinhardt.energy-density", worst_d, 1e-9))
        out.append(CheckResult.from_residual("reinhardt.energy-sum", worst_s, 1e-9))

    if surface.name == "sphere":
        n = chart.n
        dens_sum = np.zeros(P.shape[0])
        for f in surface.plurifamily:
            dens_sum += _energy_density_batch(chart, f, P)
        out.append(CheckResult.from_residual(
            "sphere.conjugate-energy-sum", np.max(np.abs(dens_sum - n)), 1e-9))
        worst = 0.0
        for j, f in enumerate(surface.plurifamily):
            bx = _boxb_batch(chart, f, P)
            r0 = surface.params["r"]
            worst = max(worst, float(np.max(np.abs(bx - (n / r0**2) * np.conj(P[:, j])))))
        out.append(CheckResult.from_residual("sphere.conjugate-eigenfunctions", worst, 1e-9))
    return out


def quadrature_suite(surface: SurfaceSpec, seed=0):
    if not surface.star_shaped:
        return []
    out = []
    rc = RadialChart(surface.chart)

    def density(P):
        return 1.0 + np.abs(P[:, 0]) ** 2

    resolutions = [4, 8] if surface.dim == 2 else [3, 5]
    vals = [integrate(rc, density, product_grid(r))[0] for r in resolutions]
    ref = integrate(rc, density, product_grid(resolutions[-1] * 2))[0]
    e0, e1 = abs(vals[0] - ref), abs(vals[1] - ref)
    factor = e0 / max(e1, 1e-14)
    out.append(CheckResult("quadrature.refinement-convergence", float(factor), 3.0, bool(factor >= 3.0)))

    vol = integrate(rc, lambda P: np.ones(P.shape[0]), product_grid(resolutions[-1]))[0]
    out.append(CheckResult("quadrature.orientation-positive", float(vol), 0.0, bool(vol > 0)))

    vmc, _ = integrate(rc, density, monte_carlo(4000, seed))
    rel = abs(vmc - ref) / abs(ref)
    out.append(CheckResult("quadrature.grid-vs-monte-carlo", float(rel), 5e-3, bool(rel < 5e-3)))
    return out


def run_suites(surface: SurfaceSpec, seed=0, include_symbolic=True):
    """All applicable invariant suites for one surface."""
    results = []
    if include_symbolic:
        results += symcore_suite(seed)
    results += hypersurface_suite(surface, seed)
    results += immersion_suite(surface, seed)
    results += spectral_suite(surface, seed)
    results += quadrature_suite(surface, seed)
    return results
