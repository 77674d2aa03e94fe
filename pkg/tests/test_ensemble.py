import unittest
from unittest import mock

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow import ensemble
from slitflow.ensemble import Accumulator, IncrementStream


class StreamTestCase(unittest.TestCase):

    def test_streams_are_keyed(self):
        a = ensemble.path_stream(3, 0).standard_normal(4)
        b = ensemble.path_stream(3, 0).standard_normal(4)
        c = ensemble.path_stream(3, 1).standard_normal(4)
        d = ensemble.path_stream(3, 0, ensemble.REFINEMENT).standard_normal(4)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))
        self.assertFalse(np.array_equal(a, d))

    def test_lazy_stream_matches_array(self):
        n_steps, dt = 2 * ensemble.BLOCK + 5, 1e-3
        expected = ensemble.normal_increments(9, [4, 7], n_steps, dt)
        stream = IncrementStream(9, [4, 7], dt)
        rows = np.array([0, 1])
        got = np.array([stream.column(n, rows) for n in range(n_steps)]).T
        np.testing.assert_array_equal(got, expected)
        np.testing.assert_allclose(stream.brownian, expected.sum(axis=1), atol=1e-12)

    def test_finished_rows_skip_blocks(self):
        n_steps, dt = 3 * ensemble.BLOCK, 1e-3
        expected = ensemble.normal_increments(9, [4, 7], n_steps, dt)
        stream = IncrementStream(9, [4, 7], dt)
        both, first = np.array([0, 1]), np.array([0])
        for n in range(n_steps):
            rows = both if n < 10 or n >= 2 * ensemble.BLOCK else first
            values = stream.column(n, rows)
            np.testing.assert_array_equal(values, expected[rows, n])

    def test_fixed_increments(self):
        fixed = ensemble.FixedIncrements(np.arange(6.0).reshape(2, 3))
        np.testing.assert_array_equal(fixed.column(1, np.array([1])), [4.0])
        np.testing.assert_array_equal(fixed.brownian, [0.0, 4.0])


class ChunkTestCase(unittest.TestCase):

    def test_ranges(self):
        ranges = ensemble.chunk_ranges(600, 256)
        self.assertEqual([(r.start, r.stop) for r in ranges],
                         [(0, 256), (256, 512), (512, 600)])

    def test_map_keeps_order(self):
        func = lambda ids: list(ids)
        one = ensemble.map_chunks(func, 1000, threads=1, size=64)
        four = ensemble.map_chunks(func, 1000, threads=4, size=64)
        self.assertEqual(one, four)
        self.assertEqual(sum(one, []), list(range(1000)))

    @mock.patch.dict('os.environ', {'SLITFLOW_THREADS': '3'})
    def test_threads_from_environment(self):
        self.assertEqual(ensemble.default_threads(), 3)

    @mock.patch.dict('os.environ', {'SLITFLOW_THREADS': 'many'})
    def test_bad_environment(self):
        self.assertGreaterEqual(ensemble.default_threads(), 1)


class AccumulatorTestCase(unittest.TestCase):

    @settings(deadline=None)
    @given(st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=2, max_size=200),
           st.integers(min_value=1, max_value=50))
    def test_chunks_agree_with_numpy(self, values, size):
        chunks = [values[i:i + size] for i in range(0, len(values), size)]
        total = ensemble.accumulate(chunks)
        self.assertEqual(total.n, len(values))
        self.assertAlmostEqual(total.mean, np.mean(values), delta=1e-9)
        self.assertAlmostEqual(total.variance, np.var(values, ddof=1),
                               delta=1e-7 * max(1.0, np.var(values, ddof=1)))

    def test_empty(self):
        total = Accumulator().add([])
        self.assertEqual(total.n, 0)
        self.assertEqual(total.variance, 0.0)

    def test_report(self):
        report = ensemble.accumulate([[1.0, 2.0], [3.0]]).report("x", target=2.0)
        self.assertEqual(report.n, 3)
        self.assertEqual(report.mean, 2.0)
        self.assertEqual(report.zscore, 0.0)
        self.assertTrue(report.passed)
