"""
Report records and the artifact writers (CSV, NDJSON, JSON).

Artifacts are byte-reproducible: they carry the full configuration and the
seed in a header, floats are written with 17 significant digits, and no
timestamps or host data are ever included.
"""
from __future__ import annotations

import csv
import json
import logging
import math

import numpy as np

import slitflow

log = logging.getLogger(__name__)

FORMATS = ('csv', 'ndjson', 'json')
Z_THRESHOLD = 3.0


def plain(value):
    """ Convert numpy scalars and fractions into JSON-friendly values """
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return dict((str(k), plain(v)) for k, v in value.items())
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(v) for v in value]
    if value is None or isinstance(value, str):
        return value
    if hasattr(value, 'numerator') and hasattr(value, 'denominator'):
        return str(value)
    return str(value)


class McReport(object):
    """
    Ensemble statistics of one estimator compared with a target value.
    """

    FIELDS = ('name', 'kappa', 'alpha', 'n', 'mean', 'variance', 'se',
              'target', 'zscore', 'passed', 'seed', 'dt')

    def __init__(self, name, n, mean, variance, target=0.0, seed=None,
                 dt=None, kappa=None, alpha=None, threshold=Z_THRESHOLD,
                 rel_tolerance=None, scale=None, abs_tolerance=None):
        """
        Arguments:
        - `name`: estimator label, e.g. "u_t(1j)"
        - `n`: number of independent samples
        - `mean`, `variance`: sample mean and unbiased sample variance
        - `target`: value the mean is tested against
        - `threshold`: the report passes iff |zscore| < threshold
        - `rel_tolerance`, `scale`: if given, the report passes iff
          |mean - target| < rel_tolerance * |scale| instead
        - `abs_tolerance`: also pass when |mean - target| < abs_tolerance
        """
        self.name = name
        self.n = int(n)
        self.mean = float(mean)
        self.variance = float(variance)
        self.target = float(target)
        self.seed = seed
        self.dt = dt
        self.kappa = kappa
        self.alpha = alpha
        self.threshold = threshold
        self.rel_tolerance = rel_tolerance
        self.scale = scale
        self.abs_tolerance = abs_tolerance
        if self.n > 0 and self.variance <= 0:
            log.warning("%s: degenerate variance over %d samples", name, self.n)

    @classmethod
    def from_samples(cls, name, samples, target=0.0, **kwargs):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        mean = math.fsum(samples) / n
        variance = math.fsum((samples - mean) ** 2) / (n - 1) if n > 1 else 0.0
        return cls(name, n, mean, variance, target=target, **kwargs)

    @property
    def se(self):
        return math.sqrt(self.variance / self.n) if self.n else float('nan')

    @property
    def zscore(self):
        gap = self.mean - self.target
        if self.se > 0:
            return gap / self.se
        return 0.0 if gap == 0 else math.copysign(float('inf'), gap)

    @property
    def relative_error(self):
        if self.scale is None or self.scale == 0:
            return float('nan')
        return abs(self.mean - self.target) / abs(self.scale)

    @property
    def passed(self):
        if self.abs_tolerance is not None and abs(self.mean - self.target) < self.abs_tolerance:
            return True
        if self.rel_tolerance is not None:
            return self.relative_error < self.rel_tolerance
        return abs(self.zscore) < self.threshold

    def __str__(self):
        return "<McReport %s: mean %.6g, z %+.2f, %s>" % (
            self.name, self.mean, self.zscore, "pass" if self.passed else "FAIL")

    def __repr__(self):
        return "McReport(%r, %d, %r, %r, target=%r)" % (
            self.name, self.n, self.mean, self.variance, self.target)

    def get_attrs(self):
        """ Returns a dict of the report columns """
        return dict((attr, getattr(self, attr)) for attr in self.FIELDS)


class ResidualReport(object):
    """
    Pointwise residuals of a deterministic identity and the pass flag
    max |residual| < tolerance.
    """

    FIELDS = ('name', 'n', 'max_residual', 'tolerance', 'passed')

    def __init__(self, name, residuals, tolerance, skipped=0):
        self.name = name
        self.residuals = np.abs(np.asarray(residuals, dtype=complex)).ravel()
        self.tolerance = tolerance
        self.skipped = skipped

    @property
    def n(self):
        return self.residuals.size

    @property
    def max_residual(self):
        return float(self.residuals.max()) if self.n else 0.0

    @property
    def passed(self):
        return bool(np.all(np.isfinite(self.residuals))) and self.max_residual < self.tolerance

    def __str__(self):
        return "<ResidualReport %s: max %.3g (tol %.0e), %s>" % (
            self.name, self.max_residual, self.tolerance,
            "pass" if self.passed else "FAIL")

    def get_attrs(self):
        return dict((attr, getattr(self, attr)) for attr in self.FIELDS)


def run_header(config, seed=None):
    return {'tool': 'slitflow', 'version': slitflow.__version__,
            'config': plain(config), 'seed': seed}


def _cell(value):
    value = plain(value)
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return '%.17g' % value
    if value is None:
        return ''
    if isinstance(value, list):
        return json.dumps(value, sort_keys=True)
    return str(value)


def write_rows(stream, rows, columns, fmt, header):
    """
    Write `rows` (dicts) to `stream` in one of FORMATS.

    Arguments:
    - `columns`: column order for CSV; JSON output keeps every key
    - `header`: run header from `run_header`
    """
    if fmt not in FORMATS:
        raise ValueError("unknown output format %r" % fmt)
    rows = [plain(row) for row in rows]
    if fmt == 'csv':
        stream.write('# %s %s\n' % (header['tool'], header['version']))
        stream.write('# config: %s\n' % json.dumps(header['config'], sort_keys=True))
        stream.write('# seed: %s\n' % json.dumps(header['seed']))
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    elif fmt == 'ndjson':
        stream.write(json.dumps({'header': header}, sort_keys=True) + '\n')
        for row in rows:
            stream.write(json.dumps(row, sort_keys=True) + '\n')
    else:
        json.dump({'header': header, 'rows': rows}, stream, sort_keys=True, indent=1)
        stream.write('\n')
