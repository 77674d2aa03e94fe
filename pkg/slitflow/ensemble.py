"""
Seeding and parallel evaluation of path ensembles.

Every path draws from its own generator, keyed by (master seed, path id,
purpose), so a path sees the same numbers whatever the chunking or the
number of worker threads. Chunk results are merged in path order.
"""
from __future__ import annotations

import logging
import math
import os
from multiprocessing.pool import ThreadPool

import numpy as np

from slitflow.reports import McReport

log = logging.getLogger(__name__)

DRIVING = 0
REFINEMENT = 1
FIELD = 2

CHUNK_SIZE = 256
BLOCK = 1024
THREADS_ENV = 'SLITFLOW_THREADS'


def path_stream(master_seed, path_id, purpose=DRIVING):
    """ Generator of one path for one purpose (driving, refinement, field) """
    seq = np.random.SeedSequence(int(master_seed),
                                 spawn_key=(int(path_id), int(purpose)))
    return np.random.Generator(np.random.PCG64(seq))


def default_threads():
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            log.warning("ignoring %s=%r", THREADS_ENV, value)
    return os.cpu_count() or 1


def chunk_ranges(n_paths, size=CHUNK_SIZE):
    return [range(start, min(start + size, n_paths))
            for start in range(0, n_paths, size)]


def map_chunks(func, n_paths, threads=1, size=CHUNK_SIZE):
    """
    Apply `func` to consecutive ranges of path ids.

    The chunk size does not depend on `threads`, and results come back in
    path order, so anything reduced from them is thread-count independent.
    """
    ranges = chunk_ranges(n_paths, size)
    threads = max(1, int(threads or 1))
    if threads == 1 or len(ranges) < 2:
        return [func(r) for r in ranges]
    log.debug("running %d chunks on %d threads", len(ranges), threads)
    with ThreadPool(min(threads, len(ranges))) as pool:
        return pool.map(func, ranges)


class Accumulator(object):
    """
    Streaming count, mean and sum of squared deviations. Chunks are
    summarized with compensated summation and combined with the pairwise
    update of Chan, Golub and LeVeque.
    """

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return self
        other = Accumulator()
        other.n = values.size
        other.mean = math.fsum(values) / values.size
        other.m2 = math.fsum((values - other.mean) ** 2)
        return self.merge(other)

    def merge(self, other):
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * other.n / n
        self.m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        self.n = n
        return self

    @property
    def variance(self):
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    def report(self, name, target=0.0, **kwargs):
        return McReport(name, self.n, self.mean, self.variance,
                        target=target, **kwargs)


def accumulate(chunks):
    """ Merge per-chunk sample arrays, in order, into one Accumulator """
    total = Accumulator()
    for values in chunks:
        total.add(values)
    return total


class IncrementStream(object):
    """
    Brownian increments of several paths, drawn lazily in fixed blocks of
    BLOCK steps from each path's own generator. A path only draws while
    it is asked for increments, so finished paths cost nothing.
    """

    def __init__(self, master_seed, path_ids, dt, block=BLOCK):
        self.master_seed = master_seed
        self.path_ids = list(path_ids)
        self.root_dt = math.sqrt(dt)
        self.block = block
        self.generators = {}
        self.buffers = np.zeros((len(self.path_ids), block))
        self.loaded = np.full(len(self.path_ids), -1)
        self.brownian = np.zeros(len(self.path_ids))

    def _load(self, row, index):
        gen = self.generators.get(row)
        if gen is None:
            gen = self.generators[row] = path_stream(self.master_seed,
                                                     self.path_ids[row])
        # blocks are consumed in order, so skipped ones are still drawn
        while self.loaded[row] < index:
            self.buffers[row] = gen.standard_normal(self.block) * self.root_dt
            self.loaded[row] += 1

    def column(self, n, rows):
        index, offset = divmod(n, self.block)
        for row in rows[self.loaded[rows] != index]:
            self._load(row, index)
        values = self.buffers[rows, offset]
        self.brownian[rows] += values
        return values


class FixedIncrements(object):
    """ The same interface over a precomputed (paths, steps) array """

    def __init__(self, increments):
        self.increments = np.atleast_2d(increments)
        self.brownian = np.zeros(self.increments.shape[0])

    def column(self, n, rows):
        values = self.increments[rows, n]
        self.brownian[rows] += values
        return values


def normal_increments(master_seed, path_ids, n_steps, dt):
    """
    Increments of variance dt, one row per path id. Row i equals what an
    IncrementStream hands out for the same path.
    """
    n_blocks = -(-n_steps // BLOCK)
    out = np.empty((len(path_ids), n_blocks * BLOCK))
    root_dt = math.sqrt(dt)
    for row, path_id in enumerate(path_ids):
        gen = path_stream(master_seed, path_id)
        for k in range(n_blocks):
            out[row, k * BLOCK:(k + 1) * BLOCK] = gen.standard_normal(BLOCK) * root_dt
    return out[:, :n_steps]
