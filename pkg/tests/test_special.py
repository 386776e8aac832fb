import cmath
import math
import sys
import unittest
from fractions import Fraction
from pathlib import Path

import mpmath
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.special import (
    Precision,
    bernoulli,
    bloch_wigner,
    dirichlet_beta,
    harmonic,
    li,
    li_with_flag,
    zagier_L,
    zagier_Lhat,
    zeta,
)

ZETA3 = 1.2020569031595942

points = st.builds(
    complex,
    st.floats(min_value=-3, max_value=3, allow_nan=False),
    st.floats(min_value=-3, max_value=3, allow_nan=False),
).filter(lambda z: abs(z) > 0.05 and abs(z - 1) > 0.05)


class TestConstants(unittest.TestCase):
    def test_bernoulli(self):
        self.assertEqual(bernoulli(0), 1)
        self.assertEqual(bernoulli(1), Fraction(-1, 2))
        self.assertEqual(bernoulli(2), Fraction(1, 6))
        self.assertEqual(bernoulli(12), Fraction(-691, 2730))
        self.assertEqual(bernoulli(7), 0)

    def test_harmonic(self):
        self.assertEqual(harmonic(10), Fraction(7381, 2520))

    def test_zeta(self):
        self.assertAlmostEqual(zeta(2), math.pi ** 2 / 6, places=14)
        self.assertAlmostEqual(zeta(3), ZETA3, places=14)
        self.assertAlmostEqual(zeta(5), 1.0369277551433699, places=14)
        with self.assertRaisesRegex(ValueError, "k >= 2"):
            zeta(1)

    def test_zeta_custom_precision(self):
        self.assertAlmostEqual(zeta(3, Precision(target_abs_error=1e-8)), ZETA3, places=8)

    def test_zeta_at_working_digits(self):
        with mpmath.workdps(60):
            value = zeta(3, Precision(digits=60))
            self.assertIsInstance(value, mpmath.mpf)
            self.assertLess(abs(value - mpmath.zeta(3)), mpmath.mpf(10) ** -55)

    def test_dirichlet_beta(self):
        self.assertAlmostEqual(dirichlet_beta(2), 0.915965594177219, places=14)
        self.assertAlmostEqual(dirichlet_beta(4), 0.988944551741105, places=14)

    def test_precision_validation(self):
        with self.assertRaises(ValueError):
            Precision(target_abs_error=0)
        with self.assertRaisesRegex(ValueError, "nonnegative"):
            Precision(digits=-1)


class TestPolylog(unittest.TestCase):
    def test_li1_is_minus_log(self):
        for z in (0.3, -2.0, 0.5 + 0.5j, 3.0):
            self.assertAlmostEqual(abs(li(1, z) + cmath.log(1 - z)), 0.0, places=14)

    def test_special_values(self):
        self.assertAlmostEqual(li(2, 1).real, math.pi ** 2 / 6, places=14)
        self.assertAlmostEqual(li(2, -1).real, -math.pi ** 2 / 12, places=14)
        self.assertAlmostEqual(li(3, -1).real, -0.75 * ZETA3, places=14)
        self.assertAlmostEqual(li(2, 0.5).real, math.pi ** 2 / 12 - math.log(2) ** 2 / 2, places=14)

    def test_matches_mpmath_in_every_region(self):
        for n in (2, 3, 4, 5):
            for z in (0.2 + 0.1j, -0.9 + 0.3j, 1.3 - 0.7j, 0.99j, -5 + 2j, 7.5 - 0.2j, -40.0):
                expected = complex(mpmath.polylog(n, z))
                self.assertLess(abs(li(n, z) - expected), 1e-12 * max(1.0, abs(expected)), (n, z))

    def test_middle_annulus_has_a_route(self):
        for n in (2, 3, 6):
            for radius in (0.51, 0.9, 1.0, 1.2, 1.99):
                for angle in (0.3, 1.5, 3.0, -2.2):
                    z = cmath.rect(radius, angle)
                    expected = complex(mpmath.polylog(n, z))
                    self.assertLess(abs(li(n, z) - expected), 1e-12 * max(1.0, abs(expected)), (n, z))

    def test_working_digits_route(self):
        with mpmath.workdps(50):
            value, on_cut = li_with_flag(4, mpmath.mpf(3), Precision(digits=50))
            self.assertTrue(on_cut)
            self.assertLess(abs(value - mpmath.polylog(4, mpmath.mpc(3))), mpmath.mpf(10) ** -45)
            value, on_cut = li_with_flag(3, -0.25, Precision(digits=50))
            self.assertFalse(on_cut)
            self.assertLess(abs(value - mpmath.polylog(3, -0.25)), mpmath.mpf(10) ** -45)
        with self.assertRaisesRegex(ValueError, "pole"):
            li(1, 1.0, Precision(digits=30))

    def test_cut_convention(self):
        value, on_cut = li_with_flag(2, 3.0)
        self.assertTrue(on_cut)
        self.assertAlmostEqual(value.imag, -math.pi * math.log(3.0), places=13)
        self.assertAlmostEqual(abs(value - complex(mpmath.polylog(2, 3.0))), 0.0, places=13)
        self.assertFalse(li_with_flag(2, 0.5)[1])

    def test_order_must_be_positive(self):
        with self.assertRaisesRegex(ValueError, ">= 1"):
            li(0, 0.5)


class TestSingleValued(unittest.TestCase):
    def test_bloch_wigner_known_value(self):
        # D(e^{i pi/3}) is the maximum of D
        self.assertAlmostEqual(bloch_wigner(cmath.exp(1j * math.pi / 3)), 1.0149416064096536, places=13)
        self.assertEqual(bloch_wigner(2.5), 0.0)

    def test_l2_is_bloch_wigner(self):
        for z in (0.3 + 0.4j, -2 + 1j, 1.5 - 3j):
            self.assertAlmostEqual(zagier_L(2, z), bloch_wigner(z), places=13)

    def test_l3_at_one_and_minus_one(self):
        self.assertAlmostEqual(zagier_L(3, 1), ZETA3, places=14)
        self.assertAlmostEqual(zagier_L(3, -1), -0.75 * ZETA3, places=14)

    def test_lhat_parity(self):
        self.assertEqual(zagier_Lhat(3, 0.5 + 0.5j).imag, 0.0)
        self.assertEqual(zagier_Lhat(2, 0.5 + 0.5j).real, 0.0)

    def test_rejects_low_order(self):
        with self.assertRaises(ValueError):
            zagier_L(1, 0.5)

    @settings(derandomize=True, max_examples=80, deadline=None)
    @given(points)
    def test_inversion(self, z):
        self.assertAlmostEqual(zagier_L(2, 1 / z), -zagier_L(2, z), places=10)
        self.assertAlmostEqual(zagier_L(3, 1 / z), zagier_L(3, z), places=10)

    @settings(derandomize=True, max_examples=80, deadline=None)
    @given(points)
    def test_bloch_wigner_symmetries(self, z):
        self.assertAlmostEqual(bloch_wigner(1 - z), -bloch_wigner(z), places=10)
        self.assertAlmostEqual(bloch_wigner(z.conjugate()), -bloch_wigner(z), places=10)

    @settings(derandomize=True, max_examples=60, deadline=None)
    @given(points)
    def test_real_analytic_continuity_across_cut(self, z):
        above = complex(abs(z) + 1.0, 1e-12)
        below = complex(abs(z) + 1.0, -1e-12)
        self.assertAlmostEqual(zagier_L(3, above), zagier_L(3, below), places=9)


if __name__ == "__main__":
    unittest.main()
