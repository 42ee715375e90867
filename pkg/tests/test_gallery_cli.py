"""Gallery construction, reports, and the command-line driver end to end."""

import io
import json
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest

from crgeo.cli import main, parse_params, parse_point
from crgeo.errors import BadParams, InputError, UnknownSurface
from crgeo.gallery import gallery, load_surface
from crgeo.dsl import parse_surface_file
from crgeo.report import Report, decode_number


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        rc = main(argv)
    return rc, out.getvalue(), err.getvalue()


class TestGallery:
    def test_sphere_passes_invariants(self):
        surf = gallery("sphere", r=1.0, n=1)
        assert surf.dim == 2
        P = surf.random_points(20, seed=0)
        assert np.max(np.abs(surf.chart.rho_at(P))) < 1e-12

    def test_ellipsoid_needs_matching_dim(self):
        with pytest.raises(BadParams):
            gallery("ellipsoid", A=(0.1, 0.2), dim=3)
        surf = gallery("ellipsoid", A=(0.1, 0.2, 0.3), dim=3)
        assert surf.dim == 3

    def test_ellipsoid_rejects_large_coefficients(self):
        with pytest.raises(BadParams):
            gallery("ellipsoid", A=(1.0, 0.2, 0.0))

    def test_whitney_shape(self):
        surf = gallery("whitney")
        assert surf.immersion.N == 3 and surf.n == 1
        from crgeo.immersion import second_fundamental_form

        sff = second_fundamental_form(surf.immersion, np.array([1.0, 0.0], dtype=complex))
        assert abs(sff.IIcirc_norm2 - 4.0) < 1e-12

    def test_unknown_name(self):
        with pytest.raises(UnknownSurface):
            gallery("torus")

    def test_reinhardt_scan_grid_on_surface(self):
        surf = gallery("reinhardt", n=1)
        P, spacing = surf.scan_grid(10**3)
        assert np.max(np.abs(surf.chart.rho_at(P))) < 1e-12
        assert spacing > 0

    def test_custom_surface_consistency_check(self):
        fields = parse_surface_file(
            "rho = abs2(z1) + abs2(z2) - 1\ndim = 2\nF = [z1, z2]\npsi = -1\n"
        )
        surf = load_surface(fields)
        assert surf.immersion is not None
        bad = dict(fields)
        bad["psi"] = None
        from crgeo import symbolic as sym

        bad["psi"] = sym.const(-2)
        with pytest.raises(BadParams):
            load_surface(bad)


class TestParamParsing:
    def test_scalars_and_tuples(self):
        d = parse_params("r=2,n=1,A=(0.1,0.2,0.0)")
        assert d == {"r": 2, "n": 1, "A": (0.1, 0.2, 0.0)}

    def test_bad_item(self):
        with pytest.raises(InputError):
            parse_params("r")

    def test_point_complex_literals(self):
        p = parse_point("0.5+0.5i, 1", 2)
        assert np.allclose(p, [0.5 + 0.5j, 1.0])

    def test_point_interleaved_reals(self):
        p = parse_point("0,1,0.5,-0.25", 2)
        assert np.allclose(p, [1j, 0.5 - 0.25j])


class TestReport:
    def test_float_round_trip_is_exact(self):
        x = 1 / 3 + 1e-16
        rep = Report(surface={"name": "t"}, command="c", records=[{"x": x}])
        back = Report.from_json(rep.to_json())
        assert decode_number(back.records[0]["x"]) == x

    def test_reencoding_is_byte_identical(self):
        rep = Report(
            surface={"name": "t"},
            command="c",
            records=[{"x": 0.1, "z": 1 + 2j, "flag": True, "k": 3}],
            aggregates={"v": [1.5, None]},
        )
        text = rep.to_json()
        again = Report.from_json(text).to_json()
        assert text == again


class TestReportSchema:
    def test_analyze_and_bound_reports_validate(self):
        import pathlib

        import jsonschema

        schema = json.loads(
            (pathlib.Path(__file__).parent.parent / "docs" / "report.schema.json").read_text()
        )
        def subschema(name):
            return {"$defs": schema["$defs"], "$ref": f"#/$defs/{name}"}

        _, out, _ = run_cli(["analyze", "--surface", "whitney", "--point", "0.6,0.8"])
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        jsonschema.validate(doc["records"][0], subschema("point_record"))
        _, out, _ = run_cli(["bound", "--surface", "sphere", "--params", "r=1,n=1", "--quad", "grid:8"])
        doc = json.loads(out)
        jsonschema.validate(doc, schema)
        jsonschema.validate(doc["aggregates"], subschema("bound_aggregates"))


class TestCli:
    def test_gallery_list(self):
        rc, out, _ = run_cli(["gallery-list"])
        assert rc == 0
        doc = json.loads(out)
        names = {r["name"] for r in doc["records"]}
        assert {"sphere", "ellipsoid", "whitney", "reinhardt", "custom"} <= names

    def test_analyze_sphere_point(self):
        rc, out, _ = run_cli(["analyze", "--surface", "sphere", "--params", "r=1,n=1", "--point", "0,1"])
        assert rc == 0
        doc = json.loads(out)
        rec = doc["records"][0]
        assert decode_number(rec["r"]) == 1.0
        assert decode_number(rec["J"]) == 1.0
        assert decode_number(rec["II0norm2"]) == 0.0

    def test_analyze_is_deterministic(self):
        args = ["analyze", "--surface", "ellipsoid", "--params", "A=(0.1,0.2,0.3)", "--point", "0.2+0.1i,0.3,0.9"]
        _, out1, _ = run_cli(args)
        _, out2, _ = run_cli(args)
        assert out1 == out2

    def test_scan_whitney_umbilics_cluster_on_circle(self, tmp_path):
        out_csv = tmp_path / "scan.csv"
        rc, _, _ = run_cli([
            "scan", "--surface", "whitney", "--grid", "12",
            "--out", str(out_csv), "--meta-out", str(tmp_path / "meta.json"),
        ])
        assert rc == 0
        raw = out_csv.read_bytes()
        assert raw.startswith(b"z1_re,z1_im,z2_re,z2_im,II0norm2,")
        assert b"\r\n" in raw
        text = raw.decode()
        rows = [r.split(",") for r in text.strip().split("\r\n")[1:]]
        flagged = [r for r in rows if r[-1] == "true"]
        assert flagged
        meta = json.loads((tmp_path / "meta.json").read_text())
        spacing = decode_number(meta["aggregates"]["spacing"])
        for r in flagged:
            z = complex(float(r[0]), float(r[1]))
            w = complex(float(r[2]), float(r[3]))
            assert np.hypot(abs(z), abs(w) - 1) < spacing

    def test_bound_sphere(self):
        rc, out, _ = run_cli(["bound", "--surface", "sphere", "--params", "r=1,n=1", "--quad", "grid:12"])
        assert rc == 0
        agg = json.loads(out)["aggregates"]
        assert abs(decode_number(agg["reilly_upper"]) - 1.0) < 1e-3
        assert abs(decode_number(agg["volume"]) - 4 * np.pi**2) / (4 * np.pi**2) < 1e-3
        assert abs(decode_number(agg["tension_upper"]) - 1.0) < 1e-3

    def test_bound_reinhardt_certified(self):
        rc, out, _ = run_cli(["bound", "--surface", "reinhardt", "--params", "n=1", "--quad", "grid:8"])
        assert rc == 0
        agg = json.loads(out)["aggregates"]
        assert agg["reilly_upper"] is None
        assert abs(decode_number(agg["tension_upper"]) - 0.5) < 1e-12

    def test_bound_deterministic_with_mc_seed(self):
        args = ["bound", "--surface", "sphere", "--params", "r=1,n=1", "--quad", "mc:2000:5"]
        _, out1, _ = run_cli(args)
        _, out2, _ = run_cli(args)
        assert out1 == out2

    def test_check_single_surface(self):
        rc, out, _ = run_cli(["check", "--surface", "sphere", "--params", "r=1,n=1"])
        assert rc == 0
        assert "ALL CHECKS PASSED" in out
        assert "FAIL" not in out

    def test_surface_file_analyze(self, tmp_path):
        f = tmp_path / "surf.txt"
        f.write_text("rho = abs2(z1) + abs2(z2) - 1\ndim = 2\nF = [z1, z2]\npsi = -1\n")
        rc, out, _ = run_cli(["analyze", "--surface-file", str(f), "--point", "0,1"])
        assert rc == 0
        assert decode_number(json.loads(out)["records"][0]["r"]) == 1.0

    def test_check_surface_file(self, tmp_path):
        f = tmp_path / "surf.txt"
        f.write_text("rho = abs2(z1) + abs2(z2) - 1\ndim = 2\nF = [z1, z2]\npsi = -1\n")
        rc, out, _ = run_cli(["check", "--surface-file", str(f)])
        assert rc == 0
        assert "ALL CHECKS PASSED" in out

    def test_exit_code_2_on_bad_input(self):
        rc, _, err = run_cli(["analyze", "--surface", "torus", "--point", "0,1"])
        assert rc == 2
        assert json.loads(err)["error"] == "UnknownSurface"
        rc, _, err = run_cli(["analyze", "--surface", "sphere", "--point", "0,1,2"])
        assert rc == 2

    def test_exit_code_3_on_geometry_error(self):
        # the origin cannot be projected onto the sphere
        rc, _, err = run_cli(["analyze", "--surface", "sphere", "--point", "0,0"])
        assert rc == 3
        assert json.loads(err)["error"] == "NotOnSurface"
