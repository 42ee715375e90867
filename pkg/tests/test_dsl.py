"""Expression and surface-file text syntax."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crgeo import symbolic as sym
from crgeo.checks import random_exprs
from crgeo.dsl import parse_expr, parse_expr_list, parse_surface_file
from crgeo.errors import DslError


def ev(text, *coords):
    return sym.evaluate(parse_expr(text), [complex(c) for c in coords])


class TestExpressions:
    def test_precedence(self):
        assert abs(ev("1 + 2*3^2") - 19) < 1e-14

    def test_power_binds_tighter_than_unary_minus(self):
        assert abs(ev("-z1^2", 2.0) - (-4.0)) < 1e-14

    def test_complex_literals(self):
        assert abs(ev("1+2i") - (1 + 2j)) < 1e-14
        assert abs(ev("0.5i") - 0.5j) < 1e-14
        assert abs(ev("i*i") - (-1)) < 1e-14

    def test_abs2_sugar(self):
        assert abs(ev("abs2(z1)", 3 + 4j) - 25) < 1e-14

    def test_functions_and_whitespace(self):
        val = ev("log(1+abs2( z1 ))  - re(z2) + im(z2)", 1.0, 2 + 3j)
        assert abs(val - (np.log(2) - 2 + 3)) < 1e-14

    def test_conj(self):
        assert abs(ev("conj(z1)*z1", 1 + 1j) - 2) < 1e-14

    def test_division_and_negative_power(self):
        assert abs(ev("1/z1 - z1^-1", 0.3 + 0.4j)) < 1e-14

    def test_unknown_identifier(self):
        with pytest.raises(DslError):
            parse_expr("frob(z1)")

    def test_trailing_garbage(self):
        with pytest.raises(DslError):
            parse_expr("z1 + 2 )")

    def test_fractional_exponent_rejected(self):
        with pytest.raises(DslError):
            parse_expr("z1^1.5")

    def test_dimension_bound(self):
        with pytest.raises(DslError):
            parse_expr("z3", dim=2)

    def test_expr_list(self):
        es = parse_expr_list("[z1, z1*z2, z2^2]", dim=2)
        assert len(es) == 3
        assert abs(sym.evaluate(es[1], [2.0, 3.0]) - 6) < 1e-14

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=25, deadline=None, derandomize=True)
    def test_random_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        (e,) = random_exprs(rng, 2, count=1)
        back = parse_expr(sym.to_text(e))
        P = sym._random_coords(rng, 2, 8)
        a = sym.evaluate(e, [P[:, 0], P[:, 1]])
        b = sym.evaluate(back, [P[:, 0], P[:, 1]])
        assert np.max(np.abs(a - b)) < 1e-12 * (1 + np.max(np.abs(a)))

    def test_to_text_round_trip(self):
        e = sym.log(sym.const(1) + sym.abs2(sym.var(0) - 2j * sym.var(1)))
        back = parse_expr(sym.to_text(e))
        pts = [(0.4 + 0.2j, 1.1 - 0.3j), (1.0, 2.0)]
        for z, w in pts:
            assert abs(sym.evaluate(e, [z, w]) - sym.evaluate(back, [z, w])) < 1e-13


SURFACE_TEXT = """
# unit sphere with immersion data
rho = abs2(z1) + abs2(z2) - 1
dim = 2
F   = [z1, z2]
psi = -1
sigma = log(1 + abs2(z2))
"""


class TestSurfaceFile:
    def test_parse_full(self):
        fields = parse_surface_file(SURFACE_TEXT)
        assert fields["dim"] == 2
        assert len(fields["F"]) == 2
        assert abs(sym.evaluate(fields["rho"], [0.6 + 0.8j, 0.0]) - 0.0) < 1e-14
        assert abs(sym.evaluate(fields["psi"], [0.0, 0.0]) + 1) < 1e-14

    def test_missing_rho(self):
        with pytest.raises(DslError):
            parse_surface_file("dim = 2\n")

    def test_unknown_key(self):
        with pytest.raises(DslError):
            parse_surface_file("rho = abs2(z1) - 1\ndim = 2\nfrobnicate = 7\n")

    def test_duplicate_key(self):
        with pytest.raises(DslError):
            parse_surface_file("rho = 1\nrho = 2\ndim = 2\n")
