import io
import json
import math
import unittest
from fractions import Fraction

import numpy as np

from slitflow.reports import McReport, ResidualReport, plain, run_header, write_rows

COLUMNS = ('name', 'value', 'passed')
ROWS = [{'name': 'a', 'value': 0.1, 'passed': True},
        {'name': 'b', 'value': np.float64(1 / 3), 'passed': np.bool_(False)}]


class McReportTestCase(unittest.TestCase):

    def test_zscore(self):
        report = McReport("x", 100, 0.5, 4.0, target=0.0)
        self.assertAlmostEqual(report.se, 0.2)
        self.assertAlmostEqual(report.zscore, 2.5)
        self.assertTrue(report.passed)
        self.assertFalse(McReport("x", 100, 0.5, 4.0, threshold=2.0).passed)

    def test_relative_tolerance(self):
        report = McReport("x", 10, 1.02, 1e-8, target=1.0, rel_tolerance=0.05, scale=1.0)
        self.assertTrue(report.passed)
        report = McReport("x", 10, 1.1, 1.0, target=1.0, rel_tolerance=0.05, scale=1.0)
        self.assertFalse(report.passed)

    def test_absolute_tolerance(self):
        report = McReport("x", 10, 0.51, 1e-12, target=0.5, abs_tolerance=0.02)
        self.assertTrue(report.passed)

    def test_degenerate_variance(self):
        self.assertTrue(McReport("x", 5, 1.0, 0.0, target=1.0).passed)
        self.assertTrue(math.isinf(McReport("x", 5, 1.5, 0.0, target=1.0).zscore))

    def test_from_samples(self):
        report = McReport.from_samples("x", [1.0, 2.0, 3.0, 4.0], target=2.5)
        self.assertEqual(report.mean, 2.5)
        self.assertAlmostEqual(report.variance, 5 / 3)
        self.assertEqual(set(report.get_attrs()), set(McReport.FIELDS))


class ResidualReportTestCase(unittest.TestCase):

    def test_pass_and_fail(self):
        self.assertTrue(ResidualReport("r", [1e-13, -2e-13j], 1e-12).passed)
        self.assertFalse(ResidualReport("r", [1e-13, 1e-11], 1e-12).passed)
        self.assertFalse(ResidualReport("r", [float('nan')], 1e-12).passed)
        self.assertEqual(ResidualReport("r", [], 1e-12).max_residual, 0.0)


class WriterTestCase(unittest.TestCase):

    def setUp(self):
        self.header = run_header({'command': 'classify', 'kappa': 6.0}, seed=5)

    def test_plain(self):
        self.assertEqual(plain(np.int64(3)), 3)
        self.assertEqual(plain(1 + 2j), [1.0, 2.0])
        self.assertEqual(plain(Fraction(1, 3)), '1/3')
        self.assertEqual(plain({'a': (np.float64(0.5), None)}), {'a': [0.5, None]})
        self.assertIs(plain(np.bool_(True)), True)

    def test_csv(self):
        stream = io.StringIO()
        write_rows(stream, ROWS, COLUMNS, 'csv', self.header)
        lines = stream.getvalue().splitlines()
        self.assertTrue(lines[0].startswith('# slitflow '))
        self.assertEqual(lines[1], '# config: {"command": "classify", "kappa": 6.0}')
        self.assertEqual(lines[2], '# seed: 5')
        self.assertEqual(lines[3], 'name,value,passed')
        self.assertEqual(lines[4], 'a,0.10000000000000001,true')
        self.assertEqual(float(lines[5].split(',')[1]), 1 / 3)
        self.assertTrue(lines[5].endswith(',false'))

    def test_ndjson(self):
        stream = io.StringIO()
        write_rows(stream, ROWS, COLUMNS, 'ndjson', self.header)
        lines = stream.getvalue().splitlines()
        self.assertEqual(json.loads(lines[0])['header']['seed'], 5)
        self.assertEqual(json.loads(lines[2]), {'name': 'b', 'value': 1 / 3, 'passed': False})

    def test_json(self):
        stream = io.StringIO()
        write_rows(stream, ROWS, COLUMNS, 'json', self.header)
        document = json.loads(stream.getvalue())
        self.assertEqual(document['header']['config']['kappa'], 6.0)
        self.assertEqual(len(document['rows']), 2)

    def test_bytes_do_not_depend_on_row_types(self):
        one, two = io.StringIO(), io.StringIO()
        write_rows(one, ROWS, COLUMNS, 'csv', self.header)
        rows = [{'name': 'a', 'value': np.float64(0.1), 'passed': np.bool_(True)},
                {'name': 'b', 'value': 1 / 3, 'passed': False}]
        write_rows(two, rows, COLUMNS, 'csv', self.header)
        self.assertEqual(one.getvalue(), two.getvalue())

    def test_unknown_format(self):
        self.assertRaises(ValueError, write_rows, io.StringIO(), ROWS, COLUMNS, 'xml',
                          self.header)
