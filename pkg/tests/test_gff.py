import math
import unittest

import numpy as np

from slitflow import classifier, flows, gff
from slitflow.classifier import CHORDAL_DRIFT
from slitflow.conformal import DomainError, MobiusAut, ParameterRange, green_half_plane
from slitflow.gff import RectDomain, TestFn

SMALL = RectDomain(-4.0, 4.0, 0.0, 8.0, mesh=64, modes=256)


class DomainTestCase(unittest.TestCase):

    def test_bad_rectangles(self):
        self.assertRaises(ParameterRange, RectDomain, 1.0, 0.0, 0.0, 1.0)
        self.assertRaises(DomainError, RectDomain, 0.0, 1.0, -1.0, 1.0)
        self.assertRaises(ParameterRange, RectDomain, 0.0, 1.0, 0.0, 1.0, 8, 65)

    def test_unresolved_modes(self):
        self.assertRaises(ParameterRange, gff.eigen_basis,
                          RectDomain(0.0, 10.0, 0.0, 1.0, mesh=8, modes=20))

    def test_support_inside(self):
        field = gff.single_mode(gff.eigen_basis(SMALL), 0)
        self.assertRaises(gff.SupportViolation, gff.pair, field, TestFn(-3.8 + 2j, 0.5))


class EigenBasisTestCase(unittest.TestCase):

    def test_lowest_modes(self):
        basis = gff.eigen_basis(RectDomain(0.0, 1.0, 0.0, 1.0, mesh=32, modes=4))
        self.assertAlmostEqual(basis.eigenvalues[0], 2 * math.pi ** 2, places=12)
        self.assertAlmostEqual(basis.eigenvalues[1], 5 * math.pi ** 2, places=12)
        self.assertEqual(list(basis.m[:3]), [1, 1, 2])
        self.assertEqual(list(basis.n[:3]), [1, 2, 1])

    def test_orthonormal_on_the_mesh(self):
        basis = gff.eigen_basis(RectDomain(0.0, 2.0, 0.0, 1.0, mesh=64, modes=20))
        gram = np.array([basis.project(basis.mode_values(k)) for k in range(basis.size)])
        np.testing.assert_allclose(gram, np.eye(basis.size), atol=1e-10)

    def test_eigenfunctions(self):
        dom = RectDomain(0.0, 1.0, 0.0, 1.0, mesh=64, modes=4)
        basis = gff.eigen_basis(dom)
        e = basis.mode_values(0)
        h = dom.hx
        laplacian = (e[2:, 1:-1] + e[:-2, 1:-1] + e[1:-1, 2:] + e[1:-1, :-2]
                     - 4 * e[1:-1, 1:-1]) / h ** 2
        residual = np.abs(laplacian + basis.eigenvalues[0] * e[1:-1, 1:-1]).max()
        self.assertLess(residual / np.abs(basis.eigenvalues[0] * e).max(), 1e-3)

    def test_evaluate_matches_mesh(self):
        basis = gff.eigen_basis(SMALL)
        values = basis.evaluate(SMALL.points[10:12, 20])
        np.testing.assert_allclose(values[:, 3], basis.mode_values(3)[10:12, 20], atol=1e-12)
        self.assertEqual(basis.evaluate(np.array([9 + 1j]))[0, 0], 0.0)


class PairingTestCase(unittest.TestCase):

    def setUp(self):
        self.basis = gff.eigen_basis(SMALL)
        self.field = gff.sample_field(SMALL, 1)
        self.p = TestFn(0.5 + 2j, 0.5)
        self.q = TestFn(-1 + 3j, 0.7)

    def test_single_mode(self):
        field = gff.single_mode(self.basis, 5, 2.5)
        self.assertAlmostEqual(field.pair_mesh(self.basis.mode_values(5)), 2.5, places=8)

    def test_linear(self):
        vp = gff.mesh_values(SMALL, self.p)
        vq = gff.mesh_values(SMALL, self.q)
        self.assertAlmostEqual(self.field.pair_mesh(vp + vq),
                               gff.pair(self.field, self.p) + gff.pair(self.field, self.q),
                               places=12)

    def test_modified_field(self):
        u = lambda z: np.imag(z)
        values = gff.mesh_values(SMALL, self.p)
        shift = math.fsum((SMALL.points.imag * values).ravel()) * SMALL.cell_area
        modified = self.field.shifted(u)
        self.assertAlmostEqual(modified.pair_mesh(values) - self.field.pair_mesh(values),
                               shift, places=12)
        self.assertAlmostEqual(modified(2j), self.field(2j) + 2.0, places=12)

    def test_reproducible(self):
        one = gff.sample_field(SMALL, 5, 3)
        two = gff.sample_field(SMALL, 5, 3)
        self.assertEqual(one.to_bytes(), two.to_bytes())
        self.assertNotEqual(one.to_bytes(), gff.sample_field(SMALL, 5, 4).to_bytes())
        self.assertEqual(one.header()['K'], 256)

    def test_transport_by_identity(self):
        direct = gff.pair(self.field, self.p)
        moved = gff.pullback_pair(self.field, MobiusAut.identity(), self.p, 'transport')
        self.assertAlmostEqual(moved, direct, places=10)

    def test_transport_by_scaling(self):
        moved = gff.pullback_pair(self.field, MobiusAut.scaling(2.0), self.p, 'transport')
        expected = gff.pair(self.field, TestFn(1 + 4j, 1.0, 0.25))
        self.assertAlmostEqual(moved, expected, places=10)

    def test_transport_against_source(self):
        field = gff.single_mode(self.basis, 0)
        w = MobiusAut(1.0, 0.0, -0.1, 1.0)
        source = gff.pullback_pair(field, w, self.p, 'source')
        moved = gff.pullback_pair(field, w, self.p, 'transport')
        self.assertLess(abs(moved - source), 1e-2 * abs(source))

    def test_unknown_method(self):
        self.assertRaises(ValueError, gff.pullback_pair, self.field,
                          MobiusAut.identity(), self.p, 'sideways')


class FieldStatisticsTestCase(unittest.TestCase):

    def test_pairing_law(self):
        dom = RectDomain(0.0, 4.0, 0.0, 4.0, mesh=64, modes=256)
        basis = gff.eigen_basis(dom)
        p = TestFn(2 + 2j, 1.0)
        values = gff.mesh_values(dom, p)
        energy = gff.spectral_energy(basis, p)
        samples = np.array([gff.sample_field(basis, 0, i).pair_mesh(values)
                            for i in range(400)])
        self.assertLess(abs(samples.mean()), 4 * math.sqrt(energy / 400))
        self.assertLess(abs(samples.var(ddof=1) / energy - 1), 0.3)


class EnergyTestCase(unittest.TestCase):

    def test_spectral_sum_matches_rectangle_green(self):
        dom = RectDomain(-4.0, 4.0, 0.0, 8.0, mesh=128, modes=48 * 48)
        p = TestFn(4j, 1.5)
        spectral = gff.spectral_energy(gff.eigen_basis(dom), p)
        green = gff.energy_product(p, p, gff.rectangle_green(dom), mesh=dom)
        self.assertLess(abs(spectral - green), 1e-2 * green)

    def test_separated_supports(self):
        p, q = TestFn(1 + 2j, 0.2), TestFn(-1 + 3j, 0.2)
        quad = gff.quadrature(p, q)
        mass_p = quad.vp.sum() * quad.cell_area
        mass_q = quad.vq.sum() * quad.cell_area
        expected = 2 * green_half_plane(p.center, q.center) * mass_p * mass_q
        value = gff.energy_product(p, q, gff.HalfPlaneGreen())
        self.assertLess(abs(value - expected), 1e-2 * expected)

    def test_symmetric(self):
        p, q = TestFn(1 + 2j, 0.4), TestFn(1.3 + 2.2j, 0.5)
        green = gff.HalfPlaneGreen()
        self.assertAlmostEqual(gff.energy_product(p, q, green),
                               gff.energy_product(q, p, green), places=10)

    def test_zero_function(self):
        p = TestFn(2j, 0.3)
        self.assertEqual(gff.energy_product(p, TestFn(3j, 0.3, 0.0), gff.HalfPlaneGreen()),
                         0.0)

    def test_energy_decreases_along_loewner_flow(self):
        p = TestFn(2j, 0.3)
        quad = gff.quadrature(p)
        path = flows.chordal_loewner(flows.DrivingPath.zero(0.3, 1e-3, alpha=1.0), quad.zp)
        energies = []
        for k in (0, 100, 200, 300):
            green = gff.PulledBackGreen(gff.SampledMap(quad.zp, path.w[k], path.logwp[k]))
            energies.append(gff.energy_product(p, p, green, quad=quad))
        self.assertAlmostEqual(energies[0],
                               gff.energy_product(p, p, gff.HalfPlaneGreen(), quad=quad),
                               places=10)
        self.assertTrue(all(a > b for a, b in zip(energies, energies[1:])))

    def test_sampled_map_lookup(self):
        sampled = gff.SampledMap([1j, 2j], [1j, 3j], [0.0, 0.5])
        self.assertEqual(sampled(2j), 3j)
        self.assertRaises(DomainError, sampled, 4j)


def chordal_model():
    return classifier.family_spec(CHORDAL_DRIFT, 4).model()


class CouplingTestCase(unittest.TestCase):

    def test_time_zero(self):
        model = chordal_model()
        u = classifier.build_u(model)
        p = TestFn(2j, 0.5)
        sample = gff.coupled_sample(model, u, 0, p, seed=1, dom=SMALL)
        values = gff.mesh_values(SMALL, p)
        field = gff.sample_field(SMALL, 1, 0)
        mean = math.fsum((u(SMALL.points) * values).ravel()) * SMALL.cell_area
        self.assertFalse(sample.rejected)
        self.assertAlmostEqual(sample.field_part, gff.pair(field, p), places=9)
        self.assertAlmostEqual(sample.mean_part, mean, places=9)

    def test_ensemble(self):
        model = chordal_model()
        u = classifier.build_u(model)
        stats = gff.coupled_ensemble(model, u, TestFn(2j, 0.5), T=0.05, dt=1e-3, seed=3,
                                     n_paths=200, dom=SMALL)
        rows = list(stats.rows())
        self.assertEqual([r['stat'] for r in rows],
                         ['mean', 'variance', 'ks', 'energy_rectangle', 'rejected'])
        self.assertFalse(stats.rejected.any())
        self.assertLess(abs(stats.mean_report.zscore), 4.0)
        self.assertLess(stats.energy_rectangle, stats.energy_half_plane)
