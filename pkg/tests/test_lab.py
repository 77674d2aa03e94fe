import unittest

from slitflow import classifier, lab
from slitflow.settings import RunConfig


def configured(command, **flags):
    return RunConfig(**flags).finalize(command)


class ClassifyTestCase(unittest.TestCase):

    def test_catalogue_rows(self):
        outcome = lab.run(configured('classify', kappa=4.0, alpha=0.25))
        self.assertEqual(outcome.columns, lab.CATALOGUE_COLUMNS)
        self.assertEqual(len(outcome.rows), len(classifier.catalogue(4, 0.25)))
        self.assertTrue(outcome.passed)

    def test_identities_cover_every_family(self):
        outcome = lab.run(configured('check-identities'))
        families = set(row['family'] for row in outcome.rows)
        self.assertIn(classifier.RADIAL6_DRIFT, families)
        self.assertIn("%s[-]" % classifier.HYPERBOLIC_BETA, families)
        hadamard = [row for row in outcome.rows
                    if row['name'] in ('hadamard sigma', 'hadamard b')]
        self.assertTrue(all(row['passed'] for row in hadamard))


class SimulateTestCase(unittest.TestCase):

    def test_flow_dump(self):
        outcome = lab.run(configured('simulate', master_seed=1, T=0.01, n_paths=2,
                                     z='1i, 1+1i'))
        self.assertEqual(len(outcome.rows), 2 * 11 * 2)
        self.assertEqual(outcome.rows[-1]['path_id'], 1)

    def test_hull_dump(self):
        outcome = lab.run(configured('simulate', master_seed=1, T=0.05, dump='hull'))
        self.assertEqual(len(outcome.rows), 4 * 41 * 30)

    def test_trace_needs_chordal(self):
        config = configured('simulate', master_seed=1, T=0.05, dump='trace',
                            family=classifier.DIPOLAR_DRIFT, kappa=5.0)
        self.assertRaises(lab.ValidationError, lab.run, config)


class ValidationTestCase(unittest.TestCase):

    def test_cardy_zhan_ranges(self):
        self.assertRaises(lab.ValidationError, lab.run,
                          configured('cardy-zhan', master_seed=1, kappa=3.0))
        self.assertRaises(lab.ValidationError, lab.run,
                          configured('cardy-zhan', master_seed=1, z='0+4i'))

    def test_sc_residual_range(self):
        self.assertRaises(lab.ValidationError, lab.run, configured('sc-residual', kappa=3.0))
