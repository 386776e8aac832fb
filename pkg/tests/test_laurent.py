import sys
import unittest
from fractions import Fraction
from pathlib import Path

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.laurent import (
    GaussianRational,
    LaurentPolynomial,
    ParseError,
    RationalFunction,
    parse,
    parse_many,
)

VARIABLES = ("x", "y", "z")

exponents = st.tuples(*(st.integers(min_value=-3, max_value=3) for _ in VARIABLES))
coefficients = st.fractions(min_value=-5, max_value=5, max_denominator=6)
polynomials = st.dictionaries(exponents, coefficients, max_size=5).map(
    lambda terms: LaurentPolynomial(VARIABLES, terms)
)


class TestParse(unittest.TestCase):
    def test_variables_in_order_of_appearance(self):
        p = parse("1+x+y^-1-(1+x+y)*z")
        self.assertEqual(p.variables, ("x", "y", "z"))
        self.assertEqual(p.coefficient({"y": -1}), 1)
        self.assertEqual(p.coefficient({"x": 1, "z": 1}), -1)
        self.assertEqual(len(p), 6)

    def test_rational_coefficients(self):
        p = parse("1/2*x - 3/4")
        self.assertEqual(p.coefficient({"x": 1}), Fraction(1, 2))
        self.assertEqual(p.coefficient({}), Fraction(-3, 4))

    def test_powers_and_parentheses(self):
        self.assertEqual(parse("(1+x)^2"), parse("1+2*x+x^2"))
        self.assertEqual(parse("x^(-2)*x^2"), parse("1"))

    def test_unbalanced_parenthesis_reports_position(self):
        with self.assertRaises(ParseError) as ctx:
            parse("1+x+(")
        self.assertEqual(ctx.exception.position, 5)
        self.assertIn("at position 5", str(ctx.exception))
        self.assertTrue(ctx.exception.caret().endswith("     ^"))

    def test_unknown_token(self):
        with self.assertRaisesRegex(ParseError, "unknown token '\\$' at position 2"):
            parse("x+$")

    def test_decimal_constant_rejected(self):
        with self.assertRaisesRegex(ParseError, "decimal constants"):
            parse("0.5*x")

    def test_negative_power_of_sum_rejected(self):
        with self.assertRaisesRegex(ParseError, "Negative power of a non-monomial"):
            parse("(1+x)^-1")

    def test_empty_text(self):
        with self.assertRaisesRegex(ParseError, "empty expression"):
            parse("   ")

    def test_parse_error_is_value_error(self):
        self.assertTrue(issubclass(ParseError, ValueError))

    def test_complex_coefficients_need_flag(self):
        p = parse("x + i", allow_complex=True)
        self.assertTrue(p.is_complex)
        self.assertEqual(p.variables, ("x",))
        self.assertEqual(parse("x + i").variables, ("x", "i"))

    def test_parse_many(self):
        polys = parse_many(["1-x", "1+y"])
        self.assertEqual([p.variables for p in polys], [("x",), ("y",)])


class TestArithmetic(unittest.TestCase):
    def test_product_aligns_variables(self):
        p = parse("1+x") * parse("1+y")
        self.assertEqual(p, parse("1+x+y+x*y"))

    def test_zero_terms_are_dropped(self):
        p = parse("x - x + 1")
        self.assertTrue(p.is_constant())
        self.assertEqual(p.constant_value(), 1)
        self.assertTrue((parse("x") - parse("x")).is_zero)

    def test_gaussian_arithmetic(self):
        i = GaussianRational(Fraction(0), Fraction(1))
        self.assertEqual(i * i, Fraction(-1))
        self.assertEqual(complex(i.inverse()), -1j)

    def test_substitute_inverse(self):
        self.assertEqual(parse("1+2*x-y^2").substitute_inverse(), parse("1+2*x^-1-y^-2"))

    def test_shift_nonnegative(self):
        shifted, shift = parse("x^-2 + y*x").shift_nonnegative("x")
        self.assertEqual(shift, 2)
        self.assertEqual(shifted, parse("1 + y*x^3"))
        self.assertEqual(parse("1+x").shift_nonnegative("x"), (parse("1+x"), 0))

    def test_as_poly_in_and_back(self):
        p = parse("(1-x)*(1-y)+(1+x)*(1+y)*z")
        coeffs = p.as_poly_in("z")
        self.assertEqual(len(coeffs), 2)
        self.assertEqual(coeffs[1], parse("(1+x)*(1+y)"))
        self.assertEqual(LaurentPolynomial.from_coefficients(coeffs, "z"), p)

    def test_as_poly_in_requires_shift(self):
        with self.assertRaisesRegex(ValueError, "negative exponents"):
            parse("z^-1 + x").as_poly_in("z")

    def test_primitive(self):
        p = parse("-1/2*x^2 + 1/3").primitive()
        self.assertEqual(p, parse("3*x^2 - 2"))
        with self.assertRaisesRegex(ValueError, "Zero polynomial"):
            LaurentPolynomial.constant(0).primitive()

    def test_with_variables_requires_superset(self):
        with self.assertRaisesRegex(ValueError, "missing"):
            parse("x+y").with_variables(["x"])

    @settings(derandomize=True, max_examples=60, deadline=None)
    @given(polynomials, polynomials, polynomials)
    def test_ring_axioms(self, a, b, c):
        self.assertEqual(a * (b + c), a * b + a * c)
        self.assertEqual((a * b) * c, a * (b * c))
        self.assertEqual(a + b, b + a)
        self.assertTrue((a - a).is_zero)

    @settings(derandomize=True, max_examples=60, deadline=None)
    @given(polynomials)
    def test_text_round_trip(self, p):
        self.assertEqual(parse(p.to_text()), p)


class TestEvaluation(unittest.TestCase):
    def test_evaluate_point(self):
        p = parse("1+x+y^-1")
        self.assertAlmostEqual(p.evaluate([2, 4]), 3.25)

    def test_zero_with_negative_exponent(self):
        with self.assertRaisesRegex(ValueError, "Zero coordinate"):
            parse("x^-1").evaluate([0])

    def test_torus_matches_pointwise(self):
        p = parse("1+x+y^-1-(1+x+y)*z")
        angles = np.array([[0.1, 0.25, 0.7], [0.9, 0.5, 0.0]])
        many = p.evaluate_on_torus(angles)
        for row, value in zip(angles, many):
            point = np.exp(2j * np.pi * row)
            self.assertAlmostEqual(abs(p.evaluate(point) - value), 0.0, places=12)

    def test_rational_function(self):
        r = RationalFunction.parse("1-x", "1+x")
        self.assertAlmostEqual(r.evaluate([0.5]), 1 / 3)
        with self.assertRaises(ValueError):
            RationalFunction(parse("x"), LaurentPolynomial.constant(0))


if __name__ == "__main__":
    unittest.main()
