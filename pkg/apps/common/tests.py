"""
Tests for shared helpers.
"""

import json
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings

from .exceptions import MultisliceError, PreconditionViolated, ResourceError
from .fitting import line_fit, loglog_fit
from .parallel import parallel_map, worker_count
from .reports import format_value, sha256_file, write_csv, write_json
from .rng import stream


class StreamTests(SimpleTestCase):
    """Tests for seeded random streams."""

    def test_same_key_same_draws(self):
        """Identical (seed, index) pairs reproduce identical draws."""
        a = stream(7, 3).random(5)
        b = stream(7, 3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_distinct_indices_differ(self):
        """Different indices give independent streams."""
        self.assertFalse(np.array_equal(stream(7, 0).random(5), stream(7, 1).random(5)))


class ParallelMapTests(SimpleTestCase):
    """Tests for the bounded worker pool."""

    def test_order_preserved(self):
        """Results come back in input order regardless of worker count."""
        items = list(range(50))
        for threads in (1, 4):
            self.assertEqual(parallel_map(lambda v: v * v, items, threads=threads), [v * v for v in items])

    @override_settings(MULTISLICE_THREADS=3)
    def test_worker_count_from_settings(self):
        """The settings value is used when no explicit cap is given."""
        self.assertEqual(worker_count(), 3)
        self.assertEqual(worker_count(2), 2)


class ReportWriterTests(SimpleTestCase):
    """Tests for CSV/JSON writers."""

    def test_float_formatting_round_trips(self):
        """Floats are written with 17 significant digits."""
        value = 0.1 + 0.2
        self.assertEqual(float(format_value(value)), value)
        self.assertEqual(format_value(Fraction(3, 4)), '3/4')
        self.assertEqual(format_value(True), 'true')

    def test_csv_and_json_are_byte_stable(self):
        """Writing the same payload twice gives the same hash."""
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            hashes = []
            for name in ('a', 'b'):
                write_csv(tmp / f'{name}.csv', ['x', 'y'], [(1, 0.5), (2, np.float64(1 / 3))])
                write_json(tmp / f'{name}.json', {'b': [1, 2], 'a': np.int64(4)})
                hashes.append((sha256_file(tmp / f'{name}.csv'), sha256_file(tmp / f'{name}.json')))
            self.assertEqual(hashes[0], hashes[1])
            text = (tmp / 'a.csv').read_text()
            self.assertTrue(text.startswith('x,y\n'))
            self.assertEqual(json.loads((tmp / 'a.json').read_text())['a'], 4)


class FittingTests(SimpleTestCase):
    """Tests for regression helpers."""

    def test_loglog_recovers_power(self):
        """A pure power law has the exponent as log-log slope."""
        x = np.array([1.0, 2.0, 4.0, 8.0])
        fit = loglog_fit(x, 3 * x ** -0.5)
        self.assertAlmostEqual(fit.slope, -0.5, places=10)

    def test_degenerate_fit_is_nan(self):
        """Fewer than two usable points give a NaN slope."""
        self.assertTrue(np.isnan(line_fit([1.0], [2.0]).slope))


class ExceptionTests(SimpleTestCase):
    """Tests for the error hierarchy."""

    def test_hierarchy(self):
        """All service errors share the MultisliceError base."""
        self.assertTrue(issubclass(ResourceError, MultisliceError))
        err = PreconditionViolated('regularity fails', condition='(iv)', details={'level': 1})
        self.assertEqual(err.to_dict()['condition'], '(iv)')
