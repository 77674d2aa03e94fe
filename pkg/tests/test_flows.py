import math
import unittest

import numpy as np

from slitflow import classifier, flows
from slitflow.classifier import CHORDAL_DRIFT, DIPOLAR_DRIFT
from slitflow.conformal import DomainError
from slitflow.flows import DrivingPath


def chordal(kappa=4, alpha=0):
    return classifier.family_spec(CHORDAL_DRIFT, kappa).model(alpha=alpha)


class DrivingTestCase(unittest.TestCase):

    def test_zero_path(self):
        driving = DrivingPath.zero(1.0, 0.1, alpha=2.0)
        self.assertEqual(driving.n_steps, 10)
        np.testing.assert_allclose(driving.values, 2.0 * driving.times)
        self.assertAlmostEqual(driving.at(0.55), 1.1)
        self.assertEqual(driving.truncated(0.5).n_steps, 5)
        self.assertRaises(ValueError, driving.truncated, 2.0)

    def test_reproducible(self):
        one = flows.sample_driving(4.0, 0.0, 1.0, 1e-3, seed=11, path_id=3)
        two = flows.sample_driving(4.0, 0.0, 1.0, 1e-3, seed=11, path_id=3)
        other = flows.sample_driving(4.0, 0.0, 1.0, 1e-3, seed=11, path_id=4)
        np.testing.assert_array_equal(one.increments, two.increments)
        self.assertFalse(np.array_equal(one.increments, other.increments))

    def test_increment_variance(self):
        driving = flows.sample_driving(4.0, 0.0, 10.0, 1e-3, seed=1)
        self.assertAlmostEqual(driving.increments.var() / 1e-3, 1.0, delta=0.05)

    def test_bad_grid(self):
        self.assertRaises(ValueError, flows.sample_driving, 4.0, 0.0, 1.0, 0.0, 1)
        self.assertRaises(ValueError, flows.sample_driving, 4.0, 0.0, 1.0, 2.0, 1)


class LoewnerTestCase(unittest.TestCase):

    def test_vertical_slit(self):
        path = flows.chordal_loewner(DrivingPath.zero(1.0, 1e-3), [3j])
        self.assertLess(abs(path.g[-1, 0] - 1j * math.sqrt(5)), 1e-8)
        self.assertFalse(path.swallowed[0])

    def test_swallow_time(self):
        path = flows.chordal_loewner(DrivingPath.zero(0.5, 1e-3), [1j])
        self.assertAlmostEqual(path.tau[0], 0.25, delta=1e-3)

    def test_capacity(self):
        path = flows.chordal_loewner(DrivingPath.zero(1.0, 1e-3), [100j])
        self.assertLess(abs((path.g[-1, 0] - 100j) * 100j - 2.0), 1e-3)

    def test_trace_of_zero_driving(self):
        driving = DrivingPath.zero(1.0, 1e-3)
        times = np.array([0.25, 1.0])
        points = flows.trace_points(driving, times)
        np.testing.assert_allclose(points, 2j * np.sqrt(times), atol=1e-3)

    def test_trace_times(self):
        self.assertRaises(ValueError, flows.trace_points, DrivingPath.zero(1.0, 1e-3), [2.0])

    def test_strip_midline(self):
        path = flows.dipolar_loewner(DrivingPath.zero(0.5, 1e-3), [0.5j * math.pi])
        expected = 2 * math.acos(math.cos(math.pi / 4) * math.exp(0.25))
        self.assertLess(abs(path.w[-1, 0] - 1j * expected), 1e-8)

    def test_strip_domain(self):
        self.assertRaises(DomainError, flows.dipolar_loewner,
                          DrivingPath.zero(0.5, 1e-3), [4j])

    def test_dipolar_driving_in_half_plane(self):
        driving = flows.sample_driving(2.0, 0.3, 0.5, 1e-4, seed=3)
        exact = flows.half_plane_dipolar_driving(driving)
        euler = flows.dipolar_driving_sde(driving)
        self.assertLess(np.abs(euler - exact).max(), 0.05)


class SlitFlowTestCase(unittest.TestCase):

    def test_noise_free_chordal(self):
        driving = DrivingPath.zero(1.0, 1e-3, kappa=4.0)
        path = flows.integrate_slit_flow(chordal(), [3j], driving)
        self.assertLess(abs(path.w[-1, 0] - 1j * math.sqrt(5)), 1e-5)
        self.assertLess(abs(path.logwp[-1, 0] - math.log(3 / math.sqrt(5))), 1e-5)

    def test_euler_scheme(self):
        driving = DrivingPath.zero(1.0, 1e-4, kappa=4.0)
        path = flows.integrate_slit_flow(chordal(), [3j], driving, scheme=flows.EULER)
        self.assertLess(abs(path.w[-1, 0] - 1j * math.sqrt(5)), 1e-3)
        self.assertRaises(ValueError, flows.integrate_slit_flow, chordal(), [3j],
                          driving, 'midpoint')

    def test_records(self):
        driving = DrivingPath.zero(0.01, 1e-3, kappa=4.0)
        path = flows.integrate_slit_flow(chordal(), [1j, 2j], driving)
        rows = list(path.records(path_id=7))
        self.assertEqual(len(rows), 11 * 2)
        self.assertEqual(rows[0]['path_id'], 7)
        self.assertEqual(rows[0]['im_w'], 1.0)

    def test_points_in_half_plane(self):
        self.assertRaises(DomainError, flows.integrate_slit_flow, chordal(), [-1j],
                          DrivingPath.zero(0.1, 1e-3))

    def test_thread_count_does_not_matter(self):
        model = chordal(6, 0.5)
        args = (model, [1j, 1 + 2j], 0.05, 1e-3, 7, 600)
        one = flows.run_flows(*args, threads=1)
        three = flows.run_flows(*args, threads=3)
        np.testing.assert_array_equal(one.w, three.w)
        np.testing.assert_array_equal(one.logwp, three.logwp)
        np.testing.assert_array_equal(one.brownian, three.brownian)

    def test_single_path_matches_ensemble(self):
        model = chordal(4, 0.0)
        ensemble = flows.run_flows(model, [1j, 1 + 2j], 0.05, 1e-3, 7, 10)
        driving = flows.sample_driving(4.0, 0.0, 0.05, 1e-3, 7, path_id=5)
        path = flows.integrate_slit_flow(model, [1j, 1 + 2j], driving)
        np.testing.assert_allclose(path.w[-1], ensemble.w[5], rtol=1e-12)
        self.assertAlmostEqual(driving.brownian[-1], ensemble.brownian[5], places=12)

    def test_hull_grows(self):
        model = chordal(6, 0.0)
        driving = flows.sample_driving(6.0, 0.0, 0.5, 1e-3, seed=2)
        x, y = np.meshgrid(np.linspace(-1, 1, 15), np.linspace(0.05, 1, 10))
        hull = flows.hull_scan(model, driving, (x + 1j * y).ravel(), [0.1, 0.25, 0.5])
        self.assertEqual(hull.swallowed.shape, (3, 150))
        self.assertTrue(np.all(hull.swallowed[:-1] <= hull.swallowed[1:]))
        np.testing.assert_array_equal(hull.at(0.5), hull.swallowed[-1])

    def test_boundary_log_derivative(self):
        alpha = 0.3
        model = classifier.family_spec(DIPOLAR_DRIFT, 4).model(alpha=alpha)
        value = flows.boundary_log_derivative(model, 2.0, 0.3, 0.1)
        self.assertAlmostEqual(value, -(1 - alpha) * 0.3 + 2.0 * 0.1, places=12)
        self.assertRaises(ValueError, flows.boundary_log_derivative, model, 1.0, 0.3, 0.1)


class StripEndpointsTestCase(unittest.TestCase):

    def test_every_path_ends_somewhere(self):
        ends = flows.strip_endpoints(6.0, 0.0, 0.5j * math.pi, 2.0, 1e-3, seed=5, n_paths=40)
        self.assertEqual(ends.Z.shape, (40,))
        total = (ends.swallowed.astype(int) + ends.escaped_left + ends.escaped_right
                 + ends.running + ends.lost)
        np.testing.assert_array_equal(total, np.ones(40))

    def test_one_point(self):
        self.assertRaises(ValueError, flows.strip_endpoints, 6.0, 0.0, [1j, 2j],
                          1.0, 1e-3, 5, 10)

    def test_status_codes(self):
        stepper = flows.StripStepper(6.0, 0.0)
        Z = np.array([1 + 1j, 21 + 1j, -21 + 2j, 0.5 + 3.2j, 0.5 - 0.1j, 1e-5j])
        codes = stepper.status(Z, np.ones(Z.size, dtype=bool))
        self.assertEqual(list(codes), [flows.ALIVE, flows.ESCAPED, flows.ESCAPED, flows.LOST,
                                       flows.SWALLOWED, flows.SWALLOWED])
