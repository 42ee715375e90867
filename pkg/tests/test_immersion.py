"""Second fundamental form, curvature via the Gauss identity, umbilicity."""

import numpy as np
import pytest

from crgeo import symbolic as sym
from crgeo.errors import NotPluriharmonic, RankDeficientNormalBasis
from crgeo.gallery import gallery, scan_surface
from crgeo.hypersurface import _frame_batch, frame_at, ricci_liluk
from crgeo.immersion import (
    ImmersionSpec,
    _mixed_sff_batch,
    gauss_curvature,
    second_fundamental_form,
    torsion_from_II,
    umbilicity_report,
)


class TestConstruction:
    def test_nonholomorphic_component_rejected(self):
        with pytest.raises(NotPluriharmonic):
            ImmersionSpec([sym.var(0), sym.conj(sym.var(1))], dim=2)

    def test_nonpluriharmonic_psi_rejected(self):
        with pytest.raises(NotPluriharmonic):
            ImmersionSpec([sym.var(0), sym.var(1)], dim=2, psi=sym.abs2(sym.var(0)))

    def test_default_psi_is_minus_one(self):
        spec = ImmersionSpec([sym.var(0), sym.var(1)], dim=2)
        p = np.array([0.6, 0.8j], dtype=complex)
        assert abs(spec.chart.rho_at(p[None, :])[0]) < 1e-14

    def test_too_few_components_rejected(self):
        with pytest.raises(RankDeficientNormalBasis):
            ImmersionSpec([sym.var(0)], dim=2)

    def test_rank_deficient_map_rejected(self):
        # dF never touches z2; the pluriharmonic part keeps the point
        # admissible so the rank check itself has to fire
        spec = ImmersionSpec(
            [sym.var(0), sym.intpow(sym.var(0), 2)],
            dim=2,
            psi=sym.re(sym.var(1)) - 1,
        )
        p = np.array([0.9, -0.9322], dtype=complex)
        p = spec.chart.project(p)
        with pytest.raises(RankDeficientNormalBasis):
            second_fundamental_form(spec, p)


class TestSphere:
    def test_form_vanishes_identically(self):
        surf = gallery("sphere", r=1.0, n=1)
        for p in surf.random_points(10, seed=1):
            sff = second_fundamental_form(surf.immersion, p)
            assert np.max(np.abs(sff.holo)) < 1e-13
            assert np.max(np.abs(sff.torsion)) < 1e-13
            assert abs(sff.Hnorm2 - 1) < 1e-12

    def test_mixed_part_is_levi_times_conj_mean_curvature(self):
        surf = gallery("sphere", r=1.0, n=2)
        spec = surf.immersion
        P = surf.random_points(8, seed=2)
        fb = _frame_batch(spec.chart, P)
        for w in np.unique(fb.w):
            mask = fb.w == w
            sub = fb.subset(mask)
            sub.fidx = tuple(j for j in range(3) if j != w)
            M = _mixed_sff_batch(spec, sub)
            # II(Z_a, Z_bbar) = -h_{a bbar} conj(xi) for the identity map
            pred = -np.einsum("kab,kd->kabd", sub.h, np.conj(sub.xi))
            assert np.max(np.abs(M - pred)) < 1e-12

    def test_gauss_tensor_is_metric_pattern(self):
        surf = gallery("sphere", r=1.0, n=2)
        p = surf.random_points(1, seed=3)[0]
        sff = second_fundamental_form(surf.immersion, p)
        cd = gauss_curvature(sff, sff.frame)
        h = sff.frame.levi
        pattern = np.einsum("ab,cd->abcd", h, h) + np.einsum("ad,cb->abcd", h, h)
        assert np.max(np.abs(cd.riem - pattern)) < 1e-12
        assert abs(cd.scalarR - 6) < 1e-11
        assert cd.cm_norm2 < 1e-22


class TestWhitney:
    def test_traceless_norm_at_equator(self):
        surf = gallery("whitney")
        p = np.array([np.exp(0.3j), 0], dtype=complex)
        sff = second_fundamental_form(surf.immersion, p)
        assert abs(sff.IIcirc_norm2 - 4.0) < 1e-12

    def test_traceless_norm_profile(self):
        # |II0|^2 = 2(n+1)(1 - |w|^2) / (1 + |w|^2)^3 along the sphere
        surf = gallery("whitney")
        for eta in np.linspace(0.1, 1.5, 7):
            p = np.array([np.cos(eta) * np.exp(0.2j), np.sin(eta) * np.exp(-0.6j)])
            sff = second_fundamental_form(surf.immersion, p)
            w2 = np.sin(eta) ** 2
            pred = 4 * (1 - w2) / (1 + w2) ** 3
            assert abs(sff.IIcirc_norm2 - pred) < 1e-10

    def test_umbilic_circle(self):
        surf = gallery("whitney")
        for t in (0.0, 1.1, 2.7):
            rep = umbilicity_report(surf.immersion, np.array([0, np.exp(1j * t)]))
            assert rep.is_umbilic
            assert rep.II0norm2 < 1e-20
        rep = umbilicity_report(surf.immersion, np.array([0.6, 0.8], dtype=complex))
        assert not rep.is_umbilic

    def test_two_route_identity(self):
        surf = gallery("whitney")
        for p in surf.random_points(10, seed=4):
            rep = umbilicity_report(surf.immersion, p)
            assert rep.logJ_trace_residual < 1e-9


class TestTorsion:
    def test_sphere_torsion_vanishes(self):
        surf = gallery("sphere", r=1.0, n=2)
        p = surf.random_points(1, seed=5)[0]
        sff = second_fundamental_form(surf.immersion, p)
        assert np.max(np.abs(torsion_from_II(sff))) < 1e-13

    def test_whitney_torsion_profile(self):
        surf = gallery("whitney")
        # on the w = 0 slice the form's only nonzero component is orthogonal
        # to the mean curvature, so the torsion pairing vanishes there
        sff0 = second_fundamental_form(surf.immersion, np.array([np.exp(0.3j), 0]))
        assert np.max(np.abs(sff0.torsion)) < 1e-13
        # while at generic points it does not
        p = np.array([np.cos(0.7) * np.exp(0.2j), np.sin(0.7) * np.exp(-0.6j)])
        sff = second_fundamental_form(surf.immersion, p)
        assert np.max(np.abs(sff.torsion)) > 0.1
        assert np.max(np.abs(sff.torsion - sff.torsion.T)) < 1e-12

    def test_ellipsoid_torsion_symmetric_and_frame_stable(self):
        surf = gallery("ellipsoid", A=(0.2, 0.3, 0.0))
        P = surf.random_points(6, seed=6)
        for p in P:
            sff = second_fundamental_form(surf.immersion, p)
            A = torsion_from_II(sff)
            assert np.max(np.abs(A - A.T)) < 1e-9
            assert np.max(np.abs(A - sff.torsion)) < 1e-13
            # h-raised squared norm is stable under re-selecting w
            norms = []
            grad = surf.chart.grad_at(p[None, :])[0]
            for w in range(3):
                if abs(grad[w]) < 1e-6:
                    continue
                s2 = second_fundamental_form(surf.immersion, p, w_index=w)
                hinv = s2.frame.levi_inv
                norms.append(np.real(np.einsum(
                    "ab,pq,pa,qb->", s2.torsion, np.conj(s2.torsion), hinv, hinv)))
            assert np.max(np.abs(np.array(norms) - norms[0])) < 1e-8


class TestCurvatureBounds:
    def test_scalar_curvature_identity_everywhere(self):
        for name, params in [("sphere", {"n": 2}), ("ellipsoid", {"A": (0.1, 0.2, 0.3)}), ("whitney", {})]:
            surf = gallery(name, **params)
            n = surf.n
            for p in surf.random_points(10, seed=7):
                sff = second_fundamental_form(surf.immersion, p)
                cd = gauss_curvature(sff, sff.frame)
                assert abs(cd.scalarR - (n * (n + 1) * sff.Hnorm2 - sff.IIcirc_norm2)) < 1e-10

    def test_ricci_dominated_by_mean_curvature(self):
        surf = gallery("ellipsoid", A=(0.1, 0.2, 0.3))
        n = surf.n
        for p in surf.random_points(10, seed=8):
            sff = second_fundamental_form(surf.immersion, p)
            cd = gauss_curvature(sff, sff.frame)
            gap = (n + 1) * sff.Hnorm2 * sff.frame.levi - cd.ric
            assert np.min(np.linalg.eigvalsh(gap)) > -1e-9

    def test_chern_moser_norm_tracks_traceless_form(self):
        # codimension is low here, so both vanish together
        surf = gallery("ellipsoid", A=(0.1, 0.2, 0.3))
        for p in surf.random_points(6, seed=9):
            sff = second_fundamental_form(surf.immersion, p)
            cd = gauss_curvature(sff, sff.frame)
            assert (cd.cm_norm2 > 1e-10) == (sff.IIcirc_norm2 > 1e-10)
        sph = gallery("sphere", r=1.0, n=2)
        p = sph.random_points(1, seed=10)[0]
        sff = second_fundamental_form(sph.immersion, p)
        cd = gauss_curvature(sff, sff.frame)
        assert cd.cm_norm2 < 1e-20 and sff.IIcirc_norm2 < 1e-20

    def test_curvature_tensor_pair_symmetries(self):
        for name, params in [("ellipsoid", {"A": (0.1, 0.2, 0.3)}), ("whitney", {})]:
            surf = gallery(name, **params)
            for p in surf.random_points(5, seed=12):
                sff = second_fundamental_form(surf.immersion, p)
                R = gauss_curvature(sff, sff.frame).riem
                # R_{a b~ c d~} = conj(R_{b a~ d c~}) and symmetry in (a, c)
                assert np.max(np.abs(R - np.conj(np.transpose(R, (1, 0, 3, 2))))) < 1e-9
                assert np.max(np.abs(R - np.transpose(R, (2, 1, 0, 3)))) < 1e-9

    def test_trace_identity_with_chart_route(self):
        surf = gallery("whitney")
        for p in surf.random_points(6, seed=11):
            sff = second_fundamental_form(surf.immersion, p)
            cd = gauss_curvature(sff, sff.frame)
            _, R_chart = ricci_liluk(surf.chart, p)
            assert abs(cd.scalarR - R_chart) < 1e-9


class TestEllipsoidUmbilicity:
    def test_two_nonzero_coefficients_admit_none(self):
        surf = gallery("ellipsoid", A=(0.1, 0.2, 0.0))
        res = scan_surface(surf, 12**3)
        assert res["is_umbilic"].sum() == 0
        assert np.min(res["II0norm2"]) > 1e-7

    def test_single_coefficient_locus_is_plane_ellipse(self):
        A1 = 0.4
        surf = gallery("ellipsoid", A=(A1, 0.0, 0.0))
        res = scan_surface(surf, 12**3)
        flagged = res["points"][res["is_umbilic"]]
        assert flagged.shape[0] > 0
        tail = np.sqrt(np.abs(flagged[:, 1]) ** 2 + np.abs(flagged[:, 2]) ** 2)
        defect = np.abs(
            np.abs(flagged[:, 0]) ** 2 + A1 * np.real(flagged[:, 0] ** 2) - 1
        )
        assert np.max(tail) < res["spacing"]
        assert np.max(defect) < 1e-10
