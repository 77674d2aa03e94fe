import cmath
import math
import unittest

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from slitflow.conformal import (CoincidentPoints, DomainError, MobiusAut, OutsideTriangle,
                                ParameterRange, RectangleToHalfPlane, StripToHalfPlane,
                                TriangleSpec, barycentric, green_half_plane,
                                green_pullback, half_plane_to_strip, sc_map_build,
                                strip_to_half_plane)

coordinate = st.floats(min_value=-3.0, max_value=3.0)
height = st.floats(min_value=0.1, max_value=3.0)
points = st.builds(complex, coordinate, height)


class GreenTestCase(unittest.TestCase):

    def test_value_on_the_imaginary_axis(self):
        self.assertAlmostEqual(green_half_plane(1j, 2j), math.log(3.0), places=14)

    def test_diagonal(self):
        self.assertRaises(CoincidentPoints, green_half_plane, 1 + 1j, 1 + 1j)

    def test_arrays(self):
        values = green_half_plane(np.array([1j, 2j]), np.array([2j, 1j]))
        self.assertEqual(values.shape, (2,))
        self.assertAlmostEqual(values[0], values[1], places=14)

    @settings(deadline=None)
    @given(points, points)
    def test_mobius_invariance(self, z1, z2):
        assume(abs(z1 - z2) > 1e-3)
        m = MobiusAut(2.0, 1.0, -1.0, 1.0)
        expected = green_half_plane(z1, z2)
        self.assertAlmostEqual(green_half_plane(m(z1), m(z2)), expected,
                               delta=1e-9 * max(1.0, abs(expected)))

    def test_pullback_by_identity(self):
        self.assertAlmostEqual(green_pullback(MobiusAut.identity(), 1j, 2j),
                               math.log(3.0), places=14)

    def test_pullback_outside(self):
        self.assertRaises(DomainError, green_pullback, lambda z: np.conj(z), 1j, 2j)


class MobiusTestCase(unittest.TestCase):

    def test_normalized(self):
        m = MobiusAut(2.0, 1.0, -1.0, 1.0)
        self.assertAlmostEqual(m.a * m.d - m.b * m.c, 1.0, places=14)

    def test_compose_with_inverse(self):
        m = MobiusAut(2.0, 1.0, -1.0, 1.0)
        np.testing.assert_allclose(m.compose(m.inverse()).matrix(), np.eye(2), atol=1e-14)

    def test_negative_determinant(self):
        self.assertRaises(ParameterRange, MobiusAut, 1.0, 0.0, 0.0, -1.0)

    def test_derivative(self):
        m = MobiusAut(2.0, 1.0, -1.0, 1.0)
        z, h = 0.3 + 0.7j, 1e-6
        numeric = (m(z + h) - m(z - h)) / (2 * h)
        self.assertLess(abs(numeric - m.derivative(z)), 1e-8)

    def test_scaling_and_translation(self):
        self.assertAlmostEqual(MobiusAut.scaling(2.0)(1 + 1j), 2 + 2j)
        self.assertAlmostEqual(MobiusAut.translation(-1.0)(1 + 1j), 1j)


class StripTestCase(unittest.TestCase):

    def test_midline_goes_to_i(self):
        self.assertAlmostEqual(strip_to_half_plane(1j * math.pi / 2), 1j, places=14)

    def test_inverse(self):
        self.assertAlmostEqual(half_plane_to_strip(1j), 1j * math.pi / 2, places=14)
        z = 0.7 + 2.1j
        self.assertAlmostEqual(half_plane_to_strip(strip_to_half_plane(z)), z, places=12)

    def test_outside_strip(self):
        self.assertRaises(DomainError, strip_to_half_plane, 1j * math.pi)
        self.assertRaises(DomainError, half_plane_to_strip, -1j)

    def test_handle_derivative(self):
        transport = StripToHalfPlane()
        z, h = 0.4 + 1.0j, 1e-6
        numeric = (transport(z + h) - transport(z - h)) / (2 * h)
        self.assertLess(abs(numeric - transport.derivative(z)), 1e-8)


class RectangleTestCase(unittest.TestCase):

    def setUp(self):
        self.rect = RectangleToHalfPlane(-1.0, 1.0, 0.0, 1.0)

    def test_interior_goes_to_half_plane(self):
        x, y = np.meshgrid(np.linspace(-0.9, 0.9, 7), np.linspace(0.1, 0.9, 5))
        self.assertTrue(np.all(self.rect(x + 1j * y).imag > 0))

    def test_boundary_points(self):
        self.assertLess(abs(self.rect(0j)), 1e-14)
        self.assertLess(abs(self.rect(-1 + 0j) + 1), 1e-9)
        self.assertLess(abs(self.rect(1 + 0j) - 1), 1e-9)

    def test_derivative(self):
        z, h = 0.2 + 0.4j, 1e-6
        numeric = (self.rect(z + h) - self.rect(z - h)) / (2 * h)
        self.assertLess(abs(numeric - self.rect.derivative(z)), 1e-6)

    def test_degenerate(self):
        self.assertRaises(ParameterRange, RectangleToHalfPlane, 0.0, 0.0, 0.0, 1.0)


class TriangleTestCase(unittest.TestCase):

    def test_equilateral(self):
        tri = TriangleSpec.from_angles(math.pi / 3, math.pi / 3, math.pi / 3)
        self.assertAlmostEqual(tri.C, cmath.exp(1j * math.pi / 3), places=14)
        centroid = (tri.A + tri.B + tri.C) / 3
        for x in barycentric(centroid, tri):
            self.assertAlmostEqual(x, 1 / 3, places=12)

    def test_barycentric_arrays(self):
        tri = TriangleSpec.from_angles(math.pi / 2, math.pi / 4, math.pi / 4)
        a, b, c = barycentric(np.array([tri.A, tri.B, tri.C]), tri)
        np.testing.assert_allclose(a, [1, 0, 0], atol=1e-12)
        np.testing.assert_allclose(b, [0, 1, 0], atol=1e-12)
        np.testing.assert_allclose(c, [0, 0, 1], atol=1e-12)

    def test_outside(self):
        tri = TriangleSpec.from_angles(math.pi / 3, math.pi / 3, math.pi / 3)
        self.assertRaises(OutsideTriangle, barycentric, 2 + 2j, tri)

    def test_bad_angles(self):
        self.assertRaises(ParameterRange, TriangleSpec.from_angles, 1.0, 1.0, 1.0)


class ScMapTestCase(unittest.TestCase):

    def test_kappa_six_is_equilateral(self):
        sc = sc_map_build(6.0, 0.0)
        self.assertLess(abs(sc.triangle.C - cmath.exp(1j * math.pi / 3)), 1e-10)

    def test_right_triangle(self):
        sc = sc_map_build(8.0, 0.5)
        tri = sc.triangle
        self.assertAlmostEqual(tri.angleA, math.pi / 2, places=14)
        self.assertAlmostEqual(tri.angleB, math.pi / 8, places=14)
        self.assertAlmostEqual(tri.angleC, 3 * math.pi / 8, places=14)
        self.assertAlmostEqual(abs(tri.C), math.tan(math.pi / 8), places=10)

    def test_midline_is_symmetric(self):
        sc = sc_map_build(6.0, 0.0)
        a, b, c = barycentric(sc.f(1j * math.pi / 2), sc.triangle)
        self.assertAlmostEqual(b, c, places=8)

    def test_prevertices(self):
        sc = sc_map_build(6.0, 0.3)
        a, _, _ = barycentric(sc.f(1e-9j), sc.triangle)
        self.assertGreater(a, 0.99)
        self.assertLess(abs(sc.h(0j) - sc.triangle.C), 1e-10)
        self.assertLess(abs(sc.h(1 + 0j)), 1e-14)

    def test_derivative(self):
        sc = sc_map_build(6.0, 0.2)
        for z in (0.5 + 0.5j, 2j, -1.5 + 0.3j):
            h = 1e-6
            numeric = (sc.h(z + h) - sc.h(z - h)) / (2 * h)
            self.assertLess(abs(numeric - sc.h_prime(z)), 1e-6 * max(1.0, abs(numeric)))

    def test_ranges(self):
        self.assertRaises(ParameterRange, sc_map_build, 4.0, 0.0)
        self.assertRaises(ParameterRange, sc_map_build, 6.0, 1.0)
        sc = sc_map_build(6.0, 0.0)
        self.assertRaises(DomainError, sc.f, 4j)


class ScMapValuesTestCase(unittest.TestCase):
    """ h and f against expansions at the ends and a direct integral of h' """

    def exponents(self, kappa, alpha):
        p = -1.0 + 2.0 * (1.0 + alpha) / kappa
        q = -4.0 / kappa
        return p, q, special.beta(q + 1.0, -p - q - 1.0)

    def test_left_end_tends_to_c(self):
        for kappa, alpha in ((8.0, 0.2), (6.0, 0.0), (6.0, 0.3)):
            sc = sc_map_build(kappa, alpha)
            p, q, norm = self.exponents(kappa, alpha)
            for Z in (-16 + 1.8j, -16 + 2.5j, -18 + 0.4j):
                leading = cmath.exp(1j * math.pi * q + (p + 1.0) * Z) / ((p + 1.0) * norm)
                self.assertLess(abs(sc.f(Z) - sc.triangle.C - leading), 1e-8,
                                (kappa, alpha, Z))

    def test_right_end_tends_to_b(self):
        for kappa, alpha in ((8.0, 0.2), (6.0, 0.0), (6.0, 0.3)):
            sc = sc_map_build(kappa, alpha)
            p, q, norm = self.exponents(kappa, alpha)
            rate = -p - q - 1.0
            for Z in (16 + 1.8j, 16 + 2.5j, 18 + 0.4j):
                leading = -cmath.exp(-rate * Z) / (rate * norm)
                self.assertLess(abs(sc.f(Z) - 1.0 - leading), 1e-8, (kappa, alpha, Z))

    def test_strip_ends_stay_inside(self):
        sc = sc_map_build(8.0, 0.2)
        x = np.linspace(-18.0, 18.0, 73)
        for y in (0.3, 1.8, 2.9):
            a, b, c = barycentric(sc.f(x + 1j * y), sc.triangle)
            self.assertGreater(min(a.min(), b.min(), c.min()), -1e-9)

    def test_against_integral_of_derivative(self):
        sc = sc_map_build(6.0, 0.3)
        start = 1j
        for z in (0.3 + 0.2j, 1.5 + 0.4j, -2 + 0.5j, 4 + 3j, -0.4 + 1.5j, 0.05 + 0.9j):
            d = z - start
            part = lambda t, take: float(take(sc.h_prime(start + t * d) * d))
            re, _ = integrate.quad(part, 0.0, 1.0, args=(np.real,), epsabs=1e-13,
                                   epsrel=1e-12, limit=200)
            im, _ = integrate.quad(part, 0.0, 1.0, args=(np.imag,), epsabs=1e-13,
                                   epsrel=1e-12, limit=200)
            self.assertLess(abs(sc.h(z) - sc.h(start) - complex(re, im)), 1e-9, z)
