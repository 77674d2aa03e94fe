import os
import shutil
import tempfile
import unittest
from fractions import Fraction

from slitflow.helpers import exact_number, parse_complex
from slitflow.settings import ConfigError, RunConfig, load


class SettingsTestCase(unittest.TestCase):

    def setUp(self):
        self.dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.dir)

    def write(self, text, name='config.yaml'):
        filename = os.path.join(self.dir, name)
        with open(filename, 'w') as stream:
            stream.write(text)
        return filename

    def test_command_defaults(self):
        config = RunConfig().finalize('sc-residual')
        self.assertEqual(config.kappa, 6.0)
        self.assertEqual(config.z, [0.5 + 0.5j, 2j])
        self.assertEqual(config.format, 'csv')

    def test_precedence(self):
        filename = self.write("kappa: 5\nn_paths: 20\nz: '1+1i, 2i'\n")
        config = RunConfig(filename, kappa=7.0, master_seed='12')
        config.finalize('verify-martingales')
        self.assertEqual(config.kappa, 7.0)
        self.assertEqual(config.n_paths, 20)
        self.assertEqual(config.T, 0.3)
        self.assertEqual(config.master_seed, 12)
        self.assertEqual(config.z, [1 + 1j, 2j])

    def test_model_tag(self):
        filename = self.write("model: !Model {family: dipolar-drift, kappa: 6, alpha: 0.3}\n"
                              "---\n"
                              "dt: 0.01\n")
        config = RunConfig(filename).finalize('classify')
        self.assertEqual(config.family, 'dipolar-drift')
        self.assertEqual(config.alpha, 0.3)
        self.assertEqual(config.dt, 0.01)

    def test_json_file(self):
        filename = self.write('{"command": "classify", "kappa": 3, "z": [[0, 1]]}',
                              'config.json')
        config = RunConfig(filename).finalize()
        self.assertEqual(config.command, 'classify')
        self.assertEqual(config.z, [1j])

    def test_unknown_options(self):
        self.assertRaises(ConfigError, RunConfig, colour='red')
        filename = self.write("model: {family: chordal-drift, spin: 1}\n")
        self.assertRaises(ConfigError, RunConfig, filename)

    def test_bad_files(self):
        self.assertRaises(ConfigError, load, os.path.join(self.dir, 'missing.yaml'))
        self.assertRaises(ConfigError, load, self.write("kappa: [1, 2\n"))
        self.assertRaises(ConfigError, RunConfig, self.write("- 1\n- 2\n"))

    def test_validation(self):
        self.assertRaises(ConfigError, RunConfig().finalize, 'simulate')
        self.assertRaises(ConfigError, RunConfig(kappa=-1.0).finalize, 'classify')
        self.assertRaises(ConfigError, RunConfig(family='spiral').finalize, 'classify')
        self.assertRaises(ConfigError, RunConfig(K=100, mesh=8).finalize, 'classify')
        self.assertRaises(ConfigError, RunConfig(n_paths='2.5').finalize, 'classify')
        self.assertRaises(ConfigError, RunConfig(master_seed=2 ** 64).finalize, 'simulate')
        self.assertRaises(ConfigError, RunConfig().finalize, 'fly')

    def test_recorded_leaves_out_threads(self):
        one = RunConfig(threads=1, master_seed=3).finalize('simulate')
        eight = RunConfig(threads=8, master_seed=3, out='x.csv').finalize('simulate')
        self.assertEqual(one.recorded(), eight.recorded())
        self.assertNotIn('threads', one.recorded())
        self.assertEqual(one.recorded()['command'], 'simulate')


class HelpersTestCase(unittest.TestCase):

    def test_parse_complex(self):
        self.assertEqual(parse_complex("0+1.5i"), 1.5j)
        self.assertEqual(parse_complex("-0.5+1.5i"), -0.5 + 1.5j)
        self.assertEqual(parse_complex("2j"), 2j)
        self.assertEqual(parse_complex([1, 2]), 1 + 2j)
        self.assertEqual(parse_complex(3), 3 + 0j)
        self.assertRaises(ValueError, parse_complex, [1, 2, 3])
        self.assertRaises(ValueError, parse_complex, "north")

    def test_exact_number(self):
        self.assertEqual(exact_number(4.0), 4)
        self.assertIsInstance(exact_number(4.0), int)
        self.assertEqual(exact_number(2.5), Fraction(5, 2))
        self.assertEqual(exact_number(0.1), Fraction(1, 10))
        self.assertEqual(exact_number(Fraction(1, 3)), Fraction(1, 3))
