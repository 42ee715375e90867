"""Extrinsic geometry of a holomorphic map F with rho = |F|^2 + psi.

For a holomorphic F: C^{n+1} -> C^N and a pluriharmonic psi, the level set
{rho = 0} carries the contact structure pulled back from the flat metric on
C^N, so F becomes an isometric-on-the-Levi-form CR immersion.  This module
computes the second fundamental form of that immersion by comparing the flat
ambient derivative with the intrinsic connection, together with everything
derived from it: the (1,0)-mean curvature, the torsion, the curvature tensor
through the flat-ambient Gauss identity, and the umbilicity tests that
compare the extrinsic data against the log-determinant Hessian of the chart.

Like the chart module, the private ``*_batch`` helpers are vectorized over
(K, m) point arrays; public functions are per-point wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import symbolic as sym
from .errors import NotPluriharmonic, RankDeficientNormalBasis
from .hypersurface import (
    FrameData,
    HypersurfaceChart,
    _as_batch,
    _connection_batch,
    _frame_batch,
    eval_at,
    frame_at,
)

IMMERSION_SV_FLOOR = 1e-8
NORMAL_BASIS_FLOOR = 1e-8
UMBILIC_TOLERANCE = 1e-8


class ImmersionSpec:
    """Holomorphic components F^d plus pluriharmonic psi, with the induced chart.

    ``psi`` defaults to the constant -1, covering the |F|^2 = 1 level sets.
    """

    def __init__(self, F, dim, psi=None, name="", validate=True):
        self.F = list(F)
        self.N = len(self.F)
        self.dim = int(dim)
        self.n = self.dim - 1
        self.psi = sym.const(-1) if psi is None else psi
        self.name = name
        if self.N < self.dim:
            raise RankDeficientNormalBasis(
                f"need at least dim={self.dim} components for an immersion, got {self.N}"
            )
        if validate:
            for d, comp in enumerate(self.F):
                if not sym.is_holomorphic(comp):
                    raise NotPluriharmonic(f"component F[{d}] is not holomorphic")
            if not sym.is_pluriharmonic(self.psi):
                raise NotPluriharmonic("psi has a nonvanishing mixed second derivative")
        rho = self.psi
        for comp in self.F:
            rho = sym.add(rho, sym.abs2(comp))
        self.chart = HypersurfaceChart(rho, self.dim, name=name)
        self._dF = None
        self._d2F: dict[int, list] = {}
        self._mixed: dict[int, list] = {}

    def dF_exprs(self):
        if self._dF is None:
            self._dF = [
                [sym.differentiate(comp, j, False) for j in range(self.dim)] for comp in self.F
            ]
        return self._dF

    def _frame_dF_exprs(self, w):
        """Z_gamma F^d as expressions, plus their d/dz^j derivatives."""
        cached = self._d2F.get(w)
        if cached is None:
            dF = self.dF_exprs()
            rw = self.chart.jet((w, False))
            fidx = [j for j in range(self.dim) if j != w]
            ratios = [sym.mul(self.chart.jet((g, False)), sym.recip(rw)) for g in fidx]
            zf = [
                [sym.add(dF[d][g], sym.neg(sym.mul(ratios[gi], dF[d][w]))) for gi, g in enumerate(fidx)]
                for d in range(self.N)
            ]
            dzf = [
                [[sym.differentiate(e, j, False) for j in range(self.dim)] for e in row]
                for row in zf
            ]
            cached = (zf, dzf)
            self._d2F[w] = cached
        return cached

    def _mixed_exprs(self, w):
        """d/dz^j of conj(Z_gamma F^d), for the mixed part of the form."""
        cached = self._mixed.get(w)
        if cached is None:
            zf, _ = self._frame_dF_exprs(w)
            cached = [
                [[sym.differentiate(sym.conj(e), j, False) for j in range(self.dim)] for e in row]
                for row in zf
            ]
            self._mixed[w] = cached
        return cached

    def __repr__(self):
        return f"ImmersionSpec(N={self.N}, dim={self.dim}, {self.name or 'custom'})"


@dataclass
class SecondFundamentalForm:
    """Per-point extrinsic package in an orthonormal basis of the normal space.

    ``holo[alpha, gamma, a]`` are the holomorphic components, ``H`` the
    ambient (1,0)-mean curvature vector with squared length ``Hnorm2``,
    ``torsion`` the pseudohermitian torsion matrix, ``IIcirc_norm2`` the
    Levi-raised squared norm of the traceless part.  ``residuals`` carries
    the normality/symmetry diagnostics of the computation.
    """

    point: np.ndarray
    frame: FrameData
    normal_basis: np.ndarray
    holo: np.ndarray
    H: np.ndarray
    H_normal: np.ndarray
    Hnorm2: float
    torsion: np.ndarray
    IIcirc_norm2: float
    residuals: dict = field(default_factory=dict)


@dataclass
class CurvatureData:
    """Intrinsic curvature from the flat-ambient Gauss identity."""

    riem: np.ndarray
    ric: np.ndarray
    scalarR: float
    cm_norm2: float


@dataclass
class UmbilicityReport:
    II0norm2: float
    logJ_form: np.ndarray
    logJ_trace_residual: float
    is_umbilic: bool


class _SffBatch:
    __slots__ = (
        "spec", "fb", "dF", "E", "qbasis", "holo", "H", "Ha", "Hnorm2",
        "torsion", "II0", "normality", "symmetry", "H_tangential",
    )


def _project_tangential(V, E, hinv):
    """Split V (K, ..., N) into its normal rest and tangential pairings.

    ``t[..., beta] = <V, E_beta>`` are the Hermitian pairings against the
    pushed frame; the tangential part is recovered through the inverse Levi
    matrix and subtracted.
    """
    t = np.einsum("k...d,kbd->k...b", V, np.conj(E))
    c = np.einsum("k...b,kba->k...a", t, hinv)
    tangential = np.einsum("k...a,kad->k...d", c, E)
    return V - tangential, t


def _normal_basis(E, hinv, N):
    """Orthonormal basis of the orthogonal complement of span{E_alpha}.

    Modified Gram-Schmidt on the coordinate vectors, orthogonalized against
    the tangent span first, picking the largest remaining residual at each
    round (pivoting keeps the construction well-posed for every point of a
    batch at once).
    """
    K, n, _ = E.shape
    A = N - n
    cand = np.broadcast_to(np.eye(N, dtype=complex), (K, N, N)).copy()
    cand, _ = _project_tangential(cand, E, hinv)
    q = np.empty((K, A, N), dtype=complex)
    for a in range(A):
        norms = np.linalg.norm(cand, axis=2)
        pick = np.argmax(norms, axis=1)
        best = norms[np.arange(K), pick]
        if np.min(best) < NORMAL_BASIS_FLOOR:
            i = int(np.argmin(best))
            raise RankDeficientNormalBasis(
                f"normal residual {best[i]:.3e} at point index {i}"
            )
        qa = cand[np.arange(K), pick] / best[:, None]
        q[:, a] = qa
        coef = np.einsum("kcd,kd->kc", cand, np.conj(qa))
        cand = cand - coef[:, :, None] * qa[:, None, :]
    return q


def _sff_group(spec, fb):
    """Second-fundamental-form arrays for a uniform-w frame batch."""
    w = int(fb.w[0])
    n, m, N = spec.n, spec.dim, spec.N
    K = fb.P.shape[0]

    dF = np.empty((K, N, m), dtype=complex)
    dfe = spec.dF_exprs()
    for d in range(N):
        for j in range(m):
            dF[:, d, j] = eval_at(dfe[d][j], fb.P)

    sv = np.linalg.svd(dF, compute_uv=False)
    if np.min(sv[:, -1]) <= IMMERSION_SV_FLOOR:
        i = int(np.argmin(sv[:, -1]))
        raise RankDeficientNormalBasis(
            f"dF singular value {sv[i, -1]:.3e} at point index {i}: not an immersion"
        )

    E = np.einsum("kaj,kdj->kad", fb.Zc, dF)
    q = _normal_basis(E, fb.hinv, N)

    _, dzf = spec._frame_dF_exprs(w)
    d2F = np.empty((K, N, n, m), dtype=complex)
    for d in range(N):
        for g in range(n):
            for j in range(m):
                d2F[:, d, g, j] = eval_at(dzf[d][g][j], fb.P)

    omega = _connection_batch(spec.chart, fb, include_reeb=False)
    ZZF = np.einsum("kaj,kdgj->kagd", fb.Zc, d2F)
    Vraw = ZZF - np.einsum("kgba,kbd->kagd", omega[:, :, :, :n], E)

    Vn, t = _project_tangential(Vraw, E, fb.hinv)
    normality = np.max(np.abs(t).reshape(K, -1), axis=1)

    holo = np.einsum("kagd,kxd->kagx", Vn, np.conj(q))
    symmetry = np.max(np.abs(holo - np.swapaxes(holo, 1, 2)).reshape(K, -1), axis=1)
    holo = 0.5 * (holo + np.swapaxes(holo, 1, 2))

    H = -np.einsum("kdj,kj->kd", dF, fb.xi)
    tH = np.einsum("kd,kbd->kb", H, np.conj(E))
    H_tangential = np.max(np.abs(tH), axis=1)
    Ha = np.einsum("kd,kxd->kx", H, np.conj(q))
    Hnorm2 = np.real(np.einsum("kd,kd->k", H, np.conj(H)))

    torsion = -1j * np.einsum("kabx,kx->kab", holo, np.conj(Ha))

    II0 = np.real(
        np.einsum("kpqx,krsx,krp,ksq->k", holo, np.conj(holo), fb.hinv, fb.hinv)
    )

    out = _SffBatch()
    out.spec, out.fb = spec, fb
    out.dF, out.E, out.qbasis, out.holo = dF, E, q, holo
    out.H, out.Ha, out.Hnorm2 = H, Ha, Hnorm2
    out.torsion, out.II0 = torsion, II0
    out.normality, out.symmetry, out.H_tangential = normality, symmetry, H_tangential
    return out


def _sff_batch(spec: ImmersionSpec, P, w_index=None):
    """Batched computation, grouping points by distinguished coordinate.

    Returns (frame_batch, dict of stacked arrays over the full batch).
    """
    fb = _frame_batch(spec.chart, P, w_index=w_index)
    K = P.shape[0]
    n, N = spec.n, spec.N
    A = N - n
    fields = {
        "holo": np.empty((K, n, n, A), dtype=complex),
        "H": np.empty((K, N), dtype=complex),
        "Ha": np.empty((K, A), dtype=complex),
        "Hnorm2": np.empty(K),
        "torsion": np.empty((K, n, n), dtype=complex),
        "II0": np.empty(K),
        "qbasis": np.empty((K, A, N), dtype=complex),
        "normality": np.empty(K),
        "symmetry": np.empty(K),
        "H_tangential": np.empty(K),
    }
    for wi in np.unique(fb.w):
        mask = fb.w == wi
        sub = fb.subset(mask)
        sub.fidx = tuple(j for j in range(spec.dim) if j != wi)
        g = _sff_group(spec, sub)
        for name in fields:
            fields[name][mask] = getattr(g, name if name != "qbasis" else "qbasis")
    return fb, fields


def second_fundamental_form(spec: ImmersionSpec, p, w_index=None) -> SecondFundamentalForm:
    """Second fundamental form, mean curvature, and torsion at one point."""
    P, _ = _as_batch(p, spec.dim)
    fb, f = _sff_batch(spec, P, w_index=w_index)
    return SecondFundamentalForm(
        point=P[0],
        frame=fb.frame_data(0),
        normal_basis=f["qbasis"][0],
        holo=f["holo"][0],
        H=f["H"][0],
        H_normal=f["Ha"][0],
        Hnorm2=float(f["Hnorm2"][0]),
        torsion=f["torsion"][0],
        IIcirc_norm2=float(f["II0"][0]),
        residuals={
            "normality": float(f["normality"][0]),
            "symmetry": float(f["symmetry"][0]),
            "H_tangential": float(f["H_tangential"][0]),
        },
    )


def torsion_from_II(sff: SecondFundamentalForm) -> np.ndarray:
    """Torsion matrix -i sum_a holo^a_{alpha beta} conj(H^a)."""
    return -1j * np.einsum("abx,x->ab", sff.holo, np.conj(sff.H_normal))


def gauss_curvature(sff: SecondFundamentalForm, frame: FrameData) -> CurvatureData:
    """Curvature tensor from the flat-ambient Gauss identity:
    R_{ab~cd~} = |H|^2 (h_{ab~} h_{cd~} + h_{ad~} h_{cb~}) - holo.holo~."""
    h, hinv = frame.levi, frame.levi_inv
    n = h.shape[0]
    hh = np.einsum("ab,cd->abcd", h, h) + np.einsum("ad,cb->abcd", h, h)
    riem = sff.Hnorm2 * hh - np.einsum("acx,bdx->abcd", sff.holo, np.conj(sff.holo))
    ric = np.einsum("abcd,dc->ab", riem, hinv)
    scalarR = np.einsum("ab,ba->", ric, hinv)
    assert abs(scalarR.imag) < 1e-8 * max(1.0, abs(scalarR))
    scalarR = float(scalarR.real)
    cm = _chern_moser_norm2(riem, ric, scalarR, h, hinv) if n >= 2 else 0.0
    return CurvatureData(riem=riem, ric=ric, scalarR=scalarR, cm_norm2=cm)


def _chern_moser_norm2(riem, ric, R, h, hinv):
    n = h.shape[0]
    mix = (
        np.einsum("ab,cd->abcd", ric, h)
        + np.einsum("cb,ad->abcd", ric, h)
        + np.einsum("ad,cb->abcd", ric, h)
        + np.einsum("cd,ab->abcd", ric, h)
    )
    hh = np.einsum("ab,cd->abcd", h, h) + np.einsum("ad,cb->abcd", h, h)
    S = riem - mix / (n + 2) + R * hh / ((n + 1) * (n + 2))
    val = np.einsum(
        "abcd,pqrs,pa,bq,rc,ds->", S, np.conj(S), hinv, hinv, hinv, hinv
    )
    return float(np.real(val))


def _gauss_form(holo, hinv):
    """(1,1)-form side of the traced Gauss identity:
    G_{gamma sigma~} = h^{alpha beta~} holo_{alpha gamma} holo~_{beta sigma}."""
    return np.einsum("kpgx,kqsx,kqp->kgs", holo, np.conj(holo), hinv)


def umbilicity_report(spec: ImmersionSpec, p, w_index=None, tolerance=UMBILIC_TOLERANCE) -> UmbilicityReport:
    """Evaluate both sides of the traced Gauss identity independently.

    The left side is the restricted Hessian of log J computed from the chart
    alone; the right side is assembled from the second fundamental form.
    """
    from .hypersurface import _loghess_batch

    P, _ = _as_batch(p, spec.dim)
    fb, f = _sff_batch(spec, P, w_index=w_index)
    L = _loghess_batch(spec.chart, fb)
    G = _gauss_form(f["holo"], fb.hinv)
    residual = float(np.max(np.abs(L - G)))
    ii0 = float(f["II0"][0])
    return UmbilicityReport(
        II0norm2=ii0,
        logJ_form=L[0],
        logJ_trace_residual=residual,
        is_umbilic=bool(ii0 < tolerance),
    )


def _mixed_sff_batch(spec: ImmersionSpec, fb):
    """Ambient mixed part II(Z_alpha, Z_betabar) for a uniform-w batch.

    Used by the invariant suite to cross-check the mean-curvature trace
    identity against the transverse field.
    """
    w = int(fb.w[0])
    n, m, N = spec.n, spec.dim, spec.N
    K = fb.P.shape[0]
    mixed_exprs = spec._mixed_exprs(w)
    dconjZF = np.empty((K, N, n, m), dtype=complex)
    for d in range(N):
        for g in range(n):
            for j in range(m):
                dconjZF[:, d, g, j] = eval_at(mixed_exprs[d][g][j], fb.P)
    ambient = np.einsum("kaj,kdbj->kabd", fb.Zc, dconjZF)

    dfe = spec.dF_exprs()
    dF = np.empty((K, N, m), dtype=complex)
    for d in range(N):
        for j in range(m):
            dF[:, d, j] = eval_at(dfe[d][j], fb.P)
    E = np.einsum("kaj,kdj->kad", fb.Zc, dF)
    fidx = list(fb.fidx)
    xi_frame = fb.xi[:, fidx]
    tw = np.einsum("kab,kg,kgd->kabd", fb.h, np.conj(xi_frame), np.conj(E))
    return ambient - tw
