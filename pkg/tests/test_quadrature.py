import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.quadrature import (
    adaptive_cubature,
    evaluate_chunked,
    gauss_legendre,
    lattice_points,
    lattice_rule,
    monte_carlo,
)


def smooth(points):
    return np.cos(2 * np.pi * points[:, 0]) ** 2 * (1 + points[:, 1])


def periodic(points):
    return np.cos(2 * np.pi * points[:, 0]) ** 2 * (1 + np.cos(2 * np.pi * points[:, 1]) ** 2)


class TestGaussLegendre(unittest.TestCase):
    def test_weights_sum_to_one(self):
        nodes, weights = gauss_legendre(8)
        self.assertAlmostEqual(weights.sum(), 1.0, places=14)
        self.assertTrue(np.all((nodes > 0) & (nodes < 1)))

    def test_exact_for_low_degree(self):
        nodes, weights = gauss_legendre(5)
        self.assertAlmostEqual(float(weights @ nodes ** 9), 0.1, places=14)

    def test_order_must_be_positive(self):
        with self.assertRaises(ValueError):
            gauss_legendre(0)


class TestAdaptiveCubature(unittest.TestCase):
    def test_smooth_integrand(self):
        result = adaptive_cubature(smooth, 2, tol=1e-10)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.value, 0.75, places=9)

    def test_log_singularity(self):
        # int_0^1 log|2 sin(pi t)| dt = 0
        result = adaptive_cubature(
            lambda p: np.log(np.abs(2 * np.sin(np.pi * p[:, 0]))), 1, tol=1e-9, max_depth=40
        )
        self.assertLess(abs(result.value), 1e-8)

    def test_excluded_nodes_are_counted(self):
        def masked(points):
            return np.ones(len(points)), points[:, 0] < 0.5

        result = adaptive_cubature(masked, 1, tol=1e-12)
        self.assertAlmostEqual(result.value, 0.5, places=12)
        self.assertAlmostEqual(result.excluded_fraction, 0.5, places=12)

    def test_thread_count_does_not_change_result(self):
        one = adaptive_cubature(smooth, 2, tol=1e-8, threads=1)
        four = adaptive_cubature(smooth, 2, tol=1e-8, threads=4)
        self.assertEqual(one.value, four.value)

    def test_dimension_must_be_positive(self):
        with self.assertRaises(ValueError):
            adaptive_cubature(smooth, 0)


class TestRandomizedRules(unittest.TestCase):
    def test_lattice_points_in_unit_cube(self):
        points = lattice_points(3, 64)
        self.assertEqual(points.shape, (64, 3))
        self.assertTrue(np.all((points >= 0) & (points < 1)))

    def test_lattice_rule_reproducible(self):
        a = lattice_rule(periodic, 2, samples=1 << 14, seed=7)
        b = lattice_rule(periodic, 2, samples=1 << 14, seed=7)
        self.assertEqual(a.value, b.value)
        self.assertEqual(a.error, b.error)
        self.assertLess(abs(a.value - 0.75), 1e-10)

    def test_monte_carlo_error_estimate(self):
        result = monte_carlo(smooth, 2, samples=1 << 16, seed=3)
        self.assertLess(abs(result.value - 0.75), 5 * result.error + 1e-12)
        self.assertGreater(result.error, 0)

    def test_needs_two_randomizations(self):
        with self.assertRaises(ValueError):
            lattice_rule(smooth, 2, samples=128, randomizations=1)


class TestChunkedEvaluation(unittest.TestCase):
    def test_non_finite_values_are_skipped(self):
        values, skipped = evaluate_chunked(
            lambda p: np.log(p[:, 0]), np.array([[0.0], [math.e]])
        )
        self.assertEqual(skipped, 1)
        self.assertEqual(values.tolist(), [0.0, 1.0])


if __name__ == "__main__":
    unittest.main()
