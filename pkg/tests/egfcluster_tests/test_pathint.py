import math
import unittest

import numpy as np
from numpy import testing
from scipy.linalg import expm

from egfcluster.graph import binary_support
from egfcluster.graph import WeightedDigraph
from egfcluster.pathint import baseline_collectiveness
from egfcluster.pathint import coefficient_profile
from egfcluster.pathint import descriptor
from egfcluster.pathint import log_phi_l_set
from egfcluster.pathint import lpath_descriptor
from egfcluster.pathint import normalized_power
from egfcluster.pathint import path_integral_brute
from egfcluster.pathint import row_sum_error_bound
from egfcluster.pathint import set_descriptor
from egfcluster.pathint import spectral_radius
from egfcluster.pathint import truncation_error_bound
from egfcluster.pathint import truncation_order


def complete_graph(n):
    return WeightedDigraph(np.ones((n, n)) - np.eye(n))


def random_graph(rng, n, density=0.5):
    w = rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < density)
    np.fill_diagonal(w, 0.0)
    return WeightedDigraph(w)


SWAP = WeightedDigraph([[0.0, 1.0], [1.0, 0.0]])


class TestPathIntegral(unittest.TestCase):

    def test_brute_force_examples(self):
        g = WeightedDigraph([[0.0, 0.5], [0.25, 0.0]])
        self.assertEqual(path_integral_brute(g, 0, 1, 1), 0.5)
        self.assertEqual(path_integral_brute(g, 0, 0, 2), 0.125)
        self.assertEqual(path_integral_brute(g, 0, 0, 1), 0.0)

    def test_brute_force_guard(self):
        with self.assertRaises(ValueError):
            path_integral_brute(complete_graph(50), 0, 1, 6)
        with self.assertRaises(ValueError):
            path_integral_brute(SWAP, 0, 2, 1)
        with self.assertRaises(ValueError):
            path_integral_brute(SWAP, 0, 1, 0)

    def test_matrix_power_matches_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            l = int(rng.integers(1, 5))
            g = random_graph(rng, n, density=0.7)
            tau = lpath_descriptor(g, l).tau
            for i in range(n):
                for j in range(n):
                    testing.assert_allclose(
                        tau[i, j], path_integral_brute(g, i, j, l), rtol=0, atol=1e-12
                    )

    def test_lpath_examples(self):
        for l in range(1, 7):
            self.assertEqual(lpath_descriptor(SWAP, l).phi_l_set, 1.0)
        self.assertEqual(lpath_descriptor(complete_graph(3), 1).phi_l_set, 2.0)
        result = lpath_descriptor(WeightedDigraph(np.zeros((3, 3))), 3)
        self.assertEqual(result.tau.max(), 0.0)
        self.assertEqual(result.phi_l_set, 0.0)

    def test_lpath_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            g = random_graph(rng, int(rng.integers(2, 31)), density=rng.uniform(0.1, 1.0))
            h = binary_support(g).h
            for l in (1, 2, 5, 13, 20):
                result = lpath_descriptor(g, l)
                self.assertLessEqual(result.phi_l_set, h ** l * (1 + 1e-9) + 1e-9)
                self.assertLessEqual(result.tau.max(), h ** (l - 1) * (1 + 1e-9) + 1e-9)
                self.assertGreaterEqual(result.tau.min(), 0.0)
                self.assertLessEqual(normalized_power(g, l).max(), 1.0 + 1e-9)


class TestTruncation(unittest.TestCase):

    def test_swap_bound(self):
        expected = math.exp(-1) * 2 ** 4 / 24 * 5 / 3
        testing.assert_almost_equal(truncation_error_bound(SWAP, 3), expected)
        testing.assert_almost_equal(truncation_error_bound(SWAP, 3), 0.4087, decimal=4)
        partial = sum(2.0 / math.factorial(l) for l in range(4))
        actual = (2 * math.e - partial) / math.e
        testing.assert_almost_equal(actual, 0.0380, decimal=4)
        self.assertLessEqual(actual, truncation_error_bound(SWAP, 3))

    def test_zero_graph(self):
        self.assertEqual(truncation_error_bound(WeightedDigraph(np.zeros((3, 3))), 0), 0.0)

    def test_geometric_tail_condition(self):
        # entry sum 6 with D = 6: the closed-form branch needs n_order + 2 > 6
        with self.assertRaises(ValueError):
            truncation_error_bound(complete_graph(3), 4)
        with self.assertRaises(ValueError):
            row_sum_error_bound(complete_graph(12), 8)
        with self.assertRaises(ValueError):
            truncation_error_bound(SWAP, -1)

    def test_bounds_cover_measured_tail(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            g = random_graph(rng, int(rng.integers(2, 7)), density=rng.uniform(0.3, 1.0))
            support_sum = int(binary_support(g).a.sum())
            h = binary_support(g).h
            terms = [np.eye(g.n)]
            for l in range(1, support_sum + 250):
                terms.append(terms[-1] @ g.weights / l)
            term_sums = np.array([term.sum() for term in terms]) * math.exp(-h)
            for n_order in range(support_sum - 4, support_sum + 11):
                if n_order < 0:
                    continue
                tail = term_sums[n_order + 1:].sum()
                try:
                    bound = truncation_error_bound(g, n_order)
                except ValueError:
                    continue
                self.assertLessEqual(tail, bound * (1 + 1e-9) + 1e-300)
                try:
                    row_bound = g.n * row_sum_error_bound(g, n_order)
                except ValueError:
                    continue
                self.assertLessEqual(tail, row_bound * (1 + 1e-9) + 1e-300)

    def test_order_search(self):
        order, bound = truncation_order(SWAP, 1e-12)
        self.assertLessEqual(bound, 1e-12)
        self.assertGreaterEqual(order, 8)
        order_loose, _ = truncation_order(SWAP, 1e-3)
        self.assertLessEqual(order_loose, order)

    def test_order_cap(self):
        with self.assertRaises(RuntimeError):
            truncation_order(complete_graph(3), 1e-12, max_order=8)
        with self.assertRaises(ValueError):
            truncation_order(SWAP, 0.0)


class TestDescriptor(unittest.TestCase):

    def test_swap(self):
        result = descriptor(SWAP)
        testing.assert_allclose(result.phi_set, 1.0, rtol=0, atol=1e-12)
        testing.assert_allclose(result.z[0, 1], math.sinh(1) / math.e, rtol=0, atol=1e-12)
        testing.assert_allclose(result.z[0, 0], math.cosh(1) / math.e, rtol=0, atol=1e-12)
        testing.assert_almost_equal(result.z[0, 1], 0.4323, decimal=4)
        testing.assert_almost_equal(result.z[0, 0], 0.5677, decimal=4)
        self.assertEqual(result.h, 1)
        self.assertLessEqual(result.residual_bound, 1e-12)

    def test_half_weight_swap(self):
        result = descriptor(WeightedDigraph([[0.0, 0.5], [0.5, 0.0]]))
        testing.assert_allclose(result.phi_set, math.exp(-0.5), rtol=0, atol=1e-12)

    def test_complete_graph(self):
        result = descriptor(complete_graph(3))
        testing.assert_allclose(result.phi_set, 1.0, rtol=0, atol=1e-12)

    def test_edgeless_graph(self):
        result = descriptor(WeightedDigraph(np.zeros((4, 4))))
        testing.assert_array_equal(result.z, np.eye(4))
        self.assertEqual(result.phi_set, 1.0)

    def test_node_and_set_are_sums(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 12)
        result = descriptor(g)
        testing.assert_allclose(result.phi_node, result.z.sum(axis=1))
        testing.assert_allclose(result.phi_set, result.phi_node.mean())
        testing.assert_allclose(result.z, expm(g.weights) / math.exp(result.h), atol=1e-12)

    def test_bounds_on_random_graphs(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            g = random_graph(rng, int(rng.integers(2, 31)), density=rng.uniform(0.05, 1.0))
            result = descriptor(g)
            slack = 1e-12 + result.residual_bound
            self.assertTrue(np.all(np.isfinite(result.z)))
            self.assertGreaterEqual(result.z.min(), -slack)
            self.assertGreaterEqual(result.phi_set, -slack)
            self.assertLessEqual(result.phi_set, 1.0 + slack)
            h = result.h
            if h == 0:
                continue
            eh = math.exp(h)
            off_diagonal = 1.0 / h - 1.0 / (h * eh)
            upper = np.full((g.n, g.n), off_diagonal) + np.eye(g.n) / eh
            self.assertTrue(np.all(result.z <= upper + slack))

    def test_self_loops_do_not_change_set_descriptor(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            g = random_graph(rng, int(rng.integers(2, 15)))
            h = binary_support(g).h
            with_loops = expm(g.weights + np.eye(g.n)) / math.exp(h + 1)
            testing.assert_allclose(
                descriptor(g).phi_set, with_loops.sum(axis=1).mean(), rtol=0, atol=1e-9
            )

    def test_equal_blocks_reach_one(self):
        w = np.zeros((6, 6))
        w[:3, :3] = 1.0
        w[3:, 3:] = 1.0
        np.fill_diagonal(w, 0.0)
        testing.assert_allclose(descriptor(WeightedDigraph(w)).phi_set, 1.0, atol=1e-9)

        w = np.zeros((5, 5))
        w[:3, :3] = 1.0
        w[3:, 3:] = 1.0
        np.fill_diagonal(w, 0.0)
        self.assertLess(descriptor(WeightedDigraph(w)).phi_set, 1.0 - 1e-6)

        w = np.zeros((6, 6))
        w[:3, :3] = 0.8
        w[3:, 3:] = 1.0
        np.fill_diagonal(w, 0.0)
        self.assertLess(descriptor(WeightedDigraph(w)).phi_set, 1.0 - 1e-6)

    def test_set_descriptor_matches_full_series(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            g = random_graph(rng, int(rng.integers(1, 25)), density=rng.uniform(0.1, 1.0))
            full = descriptor(g)
            fast = set_descriptor(g)
            testing.assert_allclose(fast.phi_node, full.phi_node, rtol=0, atol=1e-12)
            testing.assert_allclose(fast.phi_set, full.phi_set, rtol=0, atol=1e-12)
            self.assertEqual(fast.truncation_order, full.truncation_order)


class TestGrowthRate(unittest.TestCase):

    def test_long_paths_follow_spectral_radius(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            w = rng.uniform(0.05, 1.0, size=(20, 20))
            np.fill_diagonal(w, 0.0)
            g = WeightedDigraph(w)
            radius = spectral_radius(g)
            self.assertLess(abs(log_phi_l_set(g, 500) / 500 - math.log(radius)), 0.01)
            self.assertLessEqual(radius, binary_support(g).h)

    def test_log_set_descriptor_matches_direct(self):
        rng = np.random.default_rng(8)
        g = random_graph(rng, 10, density=0.8)
        for l in (1, 3, 10):
            testing.assert_allclose(
                log_phi_l_set(g, l), math.log(lpath_descriptor(g, l).phi_l_set)
            )
        self.assertEqual(log_phi_l_set(WeightedDigraph(np.zeros((3, 3))), 2), -math.inf)

    def test_spectral_radius_of_complete_graph(self):
        testing.assert_allclose(spectral_radius(complete_graph(6)), 5.0, rtol=1e-10)
        self.assertEqual(spectral_radius(WeightedDigraph(np.zeros((3, 3)))), 0.0)


class TestCoefficientProfile(unittest.TestCase):

    def test_alpha_maxima(self):
        for h in range(2, 31):
            profile = coefficient_profile(complete_graph(h + 1), l_max=40)
            self.assertIn(int(np.argmax(profile.alpha_tilde)) + 1, (h - 1, h))
            testing.assert_allclose(profile.alpha_tilde[0], math.exp(-h))
            testing.assert_allclose(profile.alpha_tilde[h - 2], profile.alpha_tilde[h - 1])
            for l in (1, 5, 17, 40):
                testing.assert_allclose(
                    profile.alpha_tilde[l - 1],
                    h ** (l - 1) / (math.factorial(l) * math.exp(h)),
                    rtol=1e-12,
                )

    def test_h3_example(self):
        profile = coefficient_profile(complete_graph(4), l_max=10)
        testing.assert_allclose(profile.alpha_tilde[1], 3 / (2 * math.exp(3)))
        testing.assert_allclose(profile.alpha_tilde[2], 3 / (2 * math.exp(3)))
        testing.assert_almost_equal(profile.alpha_tilde[1], 0.0747, decimal=4)

    def test_swap_profile(self):
        profile = coefficient_profile(SWAP, l_max=5)
        testing.assert_allclose(profile.alpha_tilde[0], 1 / math.e)
        self.assertEqual(int(np.argmax(profile.alpha_tilde)), 0)
        self.assertEqual(profile.argmax_l, 1)

    def test_component_norms_peak_near_degree(self):
        profile = coefficient_profile(complete_graph(21), l_max=100)
        self.assertIn(profile.argmax_l, (19, 20))
        self.assertEqual(profile.component_norms.max(), 1.0)
        self.assertEqual(len(profile.component_norms), 100)


class TestBaseline(unittest.TestCase):

    def test_edgeless(self):
        self.assertEqual(baseline_collectiveness(WeightedDigraph(np.zeros((4, 4)))), 0.0)

    def test_regular_graph_reaches_one(self):
        testing.assert_allclose(baseline_collectiveness(complete_graph(3)), 1.0)
        testing.assert_allclose(baseline_collectiveness(complete_graph(5), z_reg=0.1), 1.0)

    def test_partly_aligned_regular_graph(self):
        # every row sums to 3.5 = 0.875 H, so the value is zs / (1 - zs) with zs = 7/16
        g = WeightedDigraph(0.875 * (np.ones((5, 5)) - np.eye(5)))
        testing.assert_allclose(baseline_collectiveness(g), 7.0 / 9.0, rtol=1e-12)
        testing.assert_allclose(set_descriptor(g).phi_set, np.exp(-0.5), rtol=1e-10)
        self.assertGreater(baseline_collectiveness(g), set_descriptor(g).phi_set)

    def test_range(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            value = baseline_collectiveness(random_graph(rng, int(rng.integers(2, 20))))
            self.assertGreaterEqual(value, 0.0)
            self.assertLessEqual(value, 1.0 + 1e-9)

    def test_regularizer_range(self):
        with self.assertRaises(ValueError):
            baseline_collectiveness(complete_graph(3), z_reg=0.5)
        with self.assertRaises(ValueError):
            baseline_collectiveness(complete_graph(3), z_reg=0.0)


if __name__ == "__main__":
    unittest.main()
