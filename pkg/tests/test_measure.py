import math
import os
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.laurent import RationalFunction, parse
from core.measure import (
    IntegrationError,
    MeasureResult,
    QuadratureConfig,
    boundary_curve,
    integrate,
    mahler_1var,
    mahler_direct,
    mahler_jensen_reduced,
    mahler_measure,
    roots,
    roots_batch,
)

ZETA3 = 1.2020569031595942
SMYTH_XYZ = 7 * ZETA3 / (2 * math.pi ** 2)
# m(1 + x + y) = 3 sqrt(3) / (4 pi) L(chi_-3, 2)
SMYTH_XY = 0.3230659472194505

SLOW = os.environ.get("MM_SLOW_TESTS") == "1"


class TestRoots(unittest.TestCase):
    def test_roots_of_quadratic(self):
        found = sorted(roots([2, -3, 1]), key=lambda z: z.real)
        self.assertAlmostEqual(found[0], 1.0, places=12)
        self.assertAlmostEqual(found[1], 2.0, places=12)

    def test_repeated_root(self):
        found = roots([1, -3, 3, -1])
        for z in found:
            self.assertLess(abs(z - 1), 1e-4)

    def test_batch_matches_numpy(self):
        rng = np.random.default_rng(1)
        coeffs = rng.normal(size=(50, 6)) + 1j * rng.normal(size=(50, 6))
        batch = roots_batch(coeffs)
        for row, found in zip(coeffs, batch):
            expected = np.sort_complex(np.roots(row[::-1]))
            self.assertTrue(np.allclose(np.sort_complex(found), expected, atol=1e-9))

    def test_zero_polynomial(self):
        with self.assertRaisesRegex(ValueError, "Zero polynomial"):
            roots([0, 0])


class TestOneVariable(unittest.TestCase):
    def test_linear(self):
        self.assertAlmostEqual(mahler_1var(parse("x-2")), math.log(2), places=14)
        self.assertAlmostEqual(mahler_1var(parse("2*x-1")), math.log(2), places=14)

    def test_cyclotomic_is_zero(self):
        self.assertAlmostEqual(mahler_1var(parse("x^4+x^3+x^2+x+1")), 0.0, places=12)
        self.assertAlmostEqual(mahler_1var(parse("1-x")), 0.0, places=14)

    def test_lehmer(self):
        lehmer = parse("x^10+x^9-x^7-x^6-x^5-x^4-x^3+x+1")
        self.assertAlmostEqual(mahler_1var(lehmer), math.log(1.17628081825991750654), places=12)

    def test_laurent_shift_and_constant(self):
        self.assertAlmostEqual(mahler_1var(parse("x + 1 - x^-1")), mahler_1var(parse("x^2 + x - 1")), places=14)
        self.assertAlmostEqual(mahler_1var(parse("3")), math.log(3), places=14)

    def test_zero_polynomial(self):
        with self.assertRaisesRegex(ValueError, "zero polynomial"):
            mahler_1var(parse("x - x"))

    def test_more_than_one_variable(self):
        with self.assertRaisesRegex(ValueError, "one variable"):
            mahler_1var(parse("x+y"))


class TestConfig(unittest.TestCase):
    def test_from_config_types(self):
        cfg = QuadratureConfig.from_config({"tolerance": 1, "method": "mc", "ignored": True})
        self.assertEqual(cfg.tolerance, 1.0)
        self.assertEqual(cfg.method, "mc")
        with self.assertRaisesRegex(TypeError, "Config key 'quadrature.seed' must be of type int"):
            QuadratureConfig.from_config({"seed": "1"})

    def test_validation(self):
        with self.assertRaisesRegex(ValueError, "Unknown quadrature method"):
            QuadratureConfig(method="simpson")
        with self.assertRaisesRegex(ValueError, "8 randomizations"):
            QuadratureConfig(randomizations=4)

    def test_with_changes_ignores_none(self):
        cfg = QuadratureConfig().with_changes(seed=5, method=None)
        self.assertEqual(cfg.seed, 5)
        self.assertEqual(cfg.method, "auto")

    def test_resolve_method(self):
        self.assertEqual(QuadratureConfig().resolve_method(2), "tensor-gauss")
        self.assertEqual(QuadratureConfig().resolve_method(3), "quasi-mc")

    def test_result_round_trip(self):
        result = MeasureResult(0.5, 1e-6, "jensen/tensor-gauss", 10, {"seed": 3})
        self.assertEqual(MeasureResult.from_dict(result.to_dict()), result)
        self.assertIsNone(MeasureResult.from_dict({"value": 1}))


class TestMultivariate(unittest.TestCase):
    def test_jensen_two_variables(self):
        result = mahler_jensen_reduced(parse("1+x+y"), "y")
        self.assertAlmostEqual(result.value, SMYTH_XY, places=6)
        self.assertEqual(result.metadata["reduced_in"], "y")

    def test_smyth_three_variables(self):
        result = mahler_measure(parse("1+x+y+z"), method="jensen", var="z")
        self.assertLess(abs(result.value - SMYTH_XYZ), 1e-5)
        self.assertEqual(result.metadata["seed"], 0)

    def test_jensen_records_shift(self):
        result = mahler_jensen_reduced(parse("z^-1 + 1 + x"), "z")
        self.assertEqual(result.metadata["shift"], {"z": 1})
        # 1 + z + x z has the measure of 1 + x + y
        self.assertAlmostEqual(result.value, SMYTH_XY, places=6)

    def test_direct_agrees_with_jensen(self):
        cfg = QuadratureConfig(tolerance=1e-6)
        direct = mahler_direct(parse("1+x+y"), cfg)
        self.assertLess(abs(direct.value - SMYTH_XY), 1e-4)

    def test_invariant_under_monomial_multiplication(self):
        p = mahler_measure(parse("1+x+y"))
        q = mahler_measure(parse("x^2*y^-1*(1+x+y)"))
        self.assertAlmostEqual(p.value, q.value, places=8)

    def test_multiplicative(self):
        product = mahler_measure(parse("(1+x+y)*(x-2)"), var="x")
        self.assertAlmostEqual(product.value, SMYTH_XY + math.log(2), places=5)

    def test_auto_dispatch(self):
        self.assertEqual(mahler_measure(parse("x-2")).method, "exact")
        self.assertTrue(mahler_measure(parse("1+x+y")).method.startswith("jensen"))

    def test_absent_variable(self):
        with self.assertRaisesRegex(ValueError, "does not occur"):
            mahler_jensen_reduced(parse("1+x+y"), "w")

    def test_unknown_method(self):
        with self.assertRaisesRegex(ValueError, "Unknown measure method"):
            mahler_measure(parse("1+x+y"), method="magic")

    def test_fully_excluded_integrand(self):
        def nothing(points):
            return np.zeros(len(points)), np.ones(len(points), dtype=bool)

        with self.assertRaisesRegex(IntegrationError, "excluded"):
            integrate(nothing, 2, QuadratureConfig())

    @unittest.skipUnless(SLOW, "set MM_SLOW_TESTS=1 to run")
    def test_fourvar_quasi_mc(self):
        from core.special import dirichlet_beta

        cfg = QuadratureConfig(method="quasi-mc", total_samples=1 << 23)
        result = mahler_measure(parse("(1+x1)*(1+x)+(1-x1)*(1+y)*z"), cfg, var="z")
        self.assertLess(abs(result.value - 24 * dirichlet_beta(4) / math.pi ** 3), 5e-3)


class TestBoundaryCurve(unittest.TestCase):
    def test_symmetric_curve(self):
        curve = boundary_curve(RationalFunction.parse("1-x", "1+y"))
        # (1-x)(1-1/x) - (1+y)(1+1/y), cleared by x y
        expected = parse("(1-x)*(x-1)*y - (1+y)*(y+1)*x").primitive()
        self.assertEqual(curve, expected)

    def test_identically_one(self):
        with self.assertRaisesRegex(ValueError, "identically"):
            boundary_curve(RationalFunction.parse("x", "1"))


if __name__ == "__main__":
    unittest.main()
