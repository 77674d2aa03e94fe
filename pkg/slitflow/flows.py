"""
Time-discretized slit flows.

The flow of a model solves the Stratonovich equation

    dw_t(z) = -b(w_t(z)) dt + sqrt(kappa) sigma(w_t(z)) o dB_t,  w_0(z) = z,

together with log w'_t(z). Points are advanced as a (paths x points)
array; a path whose points come close to the pole at 0 finishes the grid
step with smaller substeps, filled in by Brownian-bridge sampling so that
the grid increments stay the same. The deterministic chordal and dipolar
Loewner equations are solved with RK4 against a linearly interpolated
driving function.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from slitflow import ensemble
from slitflow.conformal import DomainError, STRIP_HEIGHT
from slitflow.fields import laurent

log = logging.getLogger(__name__)

class StepExplosion(ArithmeticError): pass
class ReversalInstability(ArithmeticError): pass

SWALLOW_EPS = 1e-4
R_MAX = 1e6
REFINE_C = 0.1
MAX_SUBSTEPS = 1 << 20
TRACE_EPS = 1e-3
ESCAPE_RE = 20.0

HEUN = 'heun'
EULER = 'euler'
SCHEMES = (HEUN, EULER)

ALIVE = 0
SWALLOWED = 1
ESCAPED = 2
# left the strip through Im Z = pi, which the exact flow never does
LOST = 3


def _steps(T, dt):
    if not (dt > 0 and T >= 0):
        raise ValueError("need dt > 0 and T >= 0")
    return int(round(T / dt))


@dataclass(frozen=True, eq=False)
class DrivingPath:
    """
    Brownian increments on a grid of step `dt` and the driving function
    xi_t = sqrt(kappa) B_t + alpha t built from them. `seed` is None for a
    noise-free path; substeps then split increments linearly.
    """

    kappa: float
    alpha: float
    dt: float
    increments: np.ndarray = field(repr=False)
    seed: object = None
    path_id: int = 0

    @property
    def n_steps(self):
        return self.increments.size

    @property
    def T(self):
        return self.n_steps * self.dt

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def brownian(self):
        return np.concatenate([[0.0], np.cumsum(self.increments)])

    @property
    def values(self):
        return math.sqrt(self.kappa) * self.brownian + self.alpha * self.times

    def at(self, t):
        return np.interp(t, self.times, self.values)

    def truncated(self, T):
        n = _steps(T, self.dt)
        if n > self.n_steps:
            raise ValueError("driving path ends at %g < %g" % (self.T, T))
        return replace(self, increments=self.increments[:n])

    @classmethod
    def zero(cls, T, dt, kappa=0.0, alpha=0.0):
        """ B = 0; with alpha != 0 the driving function is alpha t """
        return cls(kappa, alpha, dt, np.zeros(_steps(T, dt)))


def sample_driving(kappa, alpha, T, dt, seed, path_id=0):
    """
    Driving path `path_id` of the ensemble with master seed `seed`.

    The same (seed, path_id, dt, T) always gives the same increments,
    and they coincide with those the ensemble runners use for that path.
    """
    if not 0 < dt <= T:
        raise ValueError("need 0 < dt <= T")
    increments = ensemble.normal_increments(seed, [path_id], _steps(T, dt), dt)[0]
    return DrivingPath(kappa, alpha, dt, increments, seed, path_id)


def sample_drivings(kappa, alpha, T, dt, seed, n_paths):
    increments = ensemble.normal_increments(seed, range(n_paths), _steps(T, dt), dt)
    return [DrivingPath(kappa, alpha, dt, row, seed, i)
            for i, row in enumerate(increments)]


@dataclass(frozen=True, eq=False)
class FlowPath:
    """
    One simulated path at a set of points. `w` and `logwp` have shape
    (len(times), len(z0)); after its swallow time a point keeps the last
    value it had before the step that swallowed it.
    """

    z0: np.ndarray
    times: np.ndarray
    w: np.ndarray
    logwp: np.ndarray
    tau: np.ndarray
    scheme: str
    g: np.ndarray = None

    @property
    def swallowed(self):
        return np.isfinite(self.tau)

    def alive_at(self, t):
        return self.tau > t

    def records(self, path_id=0):
        """ One dict per (time, point), for path dumps """
        for k, t in enumerate(self.times):
            for j in range(self.z0.size):
                w, lw = self.w[k, j], self.logwp[k, j]
                yield {'path_id': path_id, 'point': j, 't': float(t),
                       're_w': w.real, 'im_w': w.imag,
                       're_logwp': lw.real, 'im_logwp': lw.imag,
                       'swallowed': bool(self.tau[j] <= t)}


def _points(z0):
    z = np.atleast_1d(np.asarray(z0, dtype=complex)).ravel()
    if not np.all(np.isfinite(z)) or np.any(z.imag <= 0):
        raise DomainError("flow points must lie in the upper half-plane")
    return z


def _strip_points(z0):
    z = np.atleast_1d(np.asarray(z0, dtype=complex)).ravel()
    if not np.all(np.isfinite(z)) or np.any((z.imag <= 0) | (z.imag >= STRIP_HEIGHT)):
        raise DomainError("points must lie in the strip 0 < Im z < pi")
    return z


# Steppers: one discrete step for arrays of states


def _value(c, z):
    cm1, c0, c1, c2 = c
    return cm1 / z + c0 + z * (c1 + c2 * z)


def _prime(c, z):
    cm1, _, c1, c2 = c
    return -cm1 / (z * z) + c1 + 2.0 * c2 * z


def _second(c, z):
    cm1, _, _, c2 = c
    return 2.0 * cm1 / (z * z * z) + 2.0 * c2


class SlitStepper(object):
    """ Steps (w, log w') of the flow of (b, sigma, kappa) """

    def __init__(self, b, sigma, kappa, scheme=HEUN):
        if scheme not in SCHEMES:
            raise ValueError("unknown scheme %r" % scheme)
        self.b = tuple(float(c) for c in laurent(b).coeffs)
        self.s = tuple(float(c) for c in laurent(sigma).coeffs)
        self.kappa = float(kappa)
        self.root = math.sqrt(self.kappa)
        self.scheme = scheme

    def _strat(self, w):
        return (-_value(self.b, w), self.root * _value(self.s, w),
                -_prime(self.b, w), self.root * _prime(self.s, w))

    def step(self, w, lw, h, dB):
        with np.errstate(all='ignore'):
            if self.scheme == EULER:
                s, sp = _value(self.s, w), _prime(self.s, w)
                half = 0.5 * self.kappa
                drift = -_value(self.b, w) + half * s * sp
                ldrift = -_prime(self.b, w) + half * s * _second(self.s, w)
                return (w + drift * h + self.root * s * dB,
                        lw + ldrift * h + self.root * sp * dB)
            f, g, fl, gl = self._strat(w)
            wp = w + f * h + g * dB
            f2, g2, fl2, gl2 = self._strat(wp)
            return (w + 0.5 * (f + f2) * h + 0.5 * (g + g2) * dB,
                    lw + 0.5 * (fl + fl2) * h + 0.5 * (gl + gl2) * dB)

    def distance(self, w):
        return np.abs(w)

    def status(self, w, alive):
        with np.errstate(invalid='ignore'):
            modulus = np.abs(w)
            bad = ~np.isfinite(w) | (w.imag <= 0) | (modulus < SWALLOW_EPS)
            if np.any(alive & ~bad & (modulus > R_MAX)):
                raise StepExplosion("|w| exceeded %g" % R_MAX)
        return np.where(bad, SWALLOWED, ALIVE)


class StripStepper(object):
    """
    Steps Z_t = g_t - xi_t of the strip Loewner flow,
    dZ = (coth(Z/2) - alpha) dt - sqrt(kappa) dB. Points with
    |Re Z| > ESCAPE_RE have escaped to one of the strip's ends; a step
    across the top edge is a discretization failure and ends the path as
    LOST.
    """

    def __init__(self, kappa, alpha):
        self.kappa = float(kappa)
        self.alpha = float(alpha)
        self.root = math.sqrt(self.kappa)

    def _drift(self, Z):
        return 1.0 / np.tanh(Z / 2.0) - self.alpha

    def step(self, Z, lw, h, dB):
        with np.errstate(all='ignore'):
            f = self._drift(Z)
            Zp = Z + f * h - self.root * dB
            return Z + 0.5 * (f + self._drift(Zp)) * h - self.root * dB, lw

    def distance(self, Z):
        return np.abs(Z)

    def status(self, Z, alive):
        with np.errstate(invalid='ignore'):
            bad = ~np.isfinite(Z) | (Z.imag <= 0) | (np.abs(Z) < SWALLOW_EPS)
            code = np.where(np.abs(Z.real) > ESCAPE_RE, ESCAPED, ALIVE)
            code = np.where(Z.imag >= STRIP_HEIGHT, LOST, code)
        return np.where(bad, SWALLOWED, code)


# The engine


class _Refiner(object):
    """ Sequential Brownian-bridge sampling inside one grid step """

    def __init__(self, seed, path_ids):
        self.seed = seed
        self.path_ids = list(path_ids)
        self.streams = {}

    def split(self, row, rest_B, rest_t, h):
        if h >= rest_t:
            return rest_B
        mean = rest_B * h / rest_t
        if self.seed is None:
            return mean
        gen = self.streams.get(row)
        if gen is None:
            gen = self.streams[row] = ensemble.path_stream(
                self.seed, self.path_ids[row], ensemble.REFINEMENT)
        return mean + math.sqrt(h * (rest_t - h) / rest_t) * gen.standard_normal()


def _advance(stepper, w, lw, state, tau, rows, h, dB, t_end):
    w0 = w[rows]
    l0 = lw[rows] if lw is not None else None
    w1, l1 = stepper.step(w0, l0, h, dB)
    alive = state[rows] == ALIVE
    code = stepper.status(w1, alive)
    stop = alive & (code != ALIVE)
    keep = alive & ((code == ALIVE) | (code == ESCAPED))
    w[rows] = np.where(keep, w1, w0)
    if lw is not None:
        lw[rows] = np.where(keep, l1, l0)
    sub = state[rows]
    sub[stop] = code[stop]
    state[rows] = sub
    sub = tau[rows]
    sub[stop] = t_end
    tau[rows] = sub


def _refine(stepper, w, lw, state, tau, row, t0, dt, dB, refiner):
    rows = np.array([row])
    rest_t, rest_B, t = dt, dB, t0
    substeps = 0
    while rest_t > 0 and np.any(state[row] == ALIVE):
        live = state[row] == ALIVE
        d = stepper.distance(w[row][live]).min()
        h = min(rest_t, REFINE_C * d * d)
        if rest_t - h <= 1e-12 * dt:
            h = rest_t
        piece = refiner.split(row, rest_B, rest_t, h)
        _advance(stepper, w, lw, state, tau, rows, h, np.array([[piece]]), t + h)
        rest_t, rest_B, t = rest_t - h, rest_B - piece, t + h
        substeps += 1
        if substeps > MAX_SUBSTEPS:
            raise StepExplosion("substep limit reached at t = %g" % t)


def integrate_points(stepper, z, noise, n_steps, dt, refiner,
                     observer=None, track_log=True):
    """
    Advance every (path, point) pair over `n_steps` grid steps.

    Arguments:
    - `z`: starting points, shared by all paths
    - `noise`: an ensemble.IncrementStream or ensemble.FixedIncrements
    - `observer`: optional callable(n, w, logwp, state) run after each
      grid step on the full arrays

    Returns (w, logwp, state, tau), each of shape (paths, points).
    """
    n_paths = noise.brownian.size
    w = np.tile(np.asarray(z, dtype=complex), (n_paths, 1))
    lw = np.zeros_like(w) if track_log else None
    state = np.full(w.shape, ALIVE, dtype=np.int8)
    tau = np.full(w.shape, np.inf)
    if observer is not None:
        observer(0, w, lw, state)
    for n in range(n_steps):
        live = np.flatnonzero((state == ALIVE).any(axis=1))
        if live.size:
            dB = noise.column(n, live)
            sub_w = w[live]
            sub_l = lw[live] if lw is not None else None
            sub_state, sub_tau = state[live], tau[live]
            with np.errstate(invalid='ignore'):
                d = np.where(sub_state == ALIVE, stepper.distance(sub_w), np.inf)
            fine = REFINE_C * d.min(axis=1) ** 2 < dt
            coarse = np.flatnonzero(~fine)
            t0 = n * dt
            if coarse.size:
                _advance(stepper, sub_w, sub_l, sub_state, sub_tau, coarse, dt,
                         dB[coarse, None], t0 + dt)
            for r in np.flatnonzero(fine):
                _refine(stepper, sub_w, sub_l, sub_state, sub_tau, r, t0, dt,
                        dB[r], _RowRefiner(refiner, live))
            w[live] = sub_w
            if lw is not None:
                lw[live] = sub_l
            state[live], tau[live] = sub_state, sub_tau
        if observer is not None:
            observer(n + 1, w, lw, state)
    return w, lw, state, tau


class _RowRefiner(object):
    """ Maps rows of a live subset back to rows of the chunk """

    def __init__(self, refiner, live):
        self.refiner = refiner
        self.live = live

    def split(self, row, rest_B, rest_t, h):
        return self.refiner.split(int(self.live[row]), rest_B, rest_t, h)


class _History(object):
    """ Observer keeping every grid value of path 0 """

    def __init__(self, n_steps, n_points, track_log=True):
        self.w = np.empty((n_steps + 1, n_points), dtype=complex)
        self.logwp = np.empty_like(self.w) if track_log else None

    def __call__(self, n, w, lw, state):
        self.w[n] = w[0]
        if self.logwp is not None:
            self.logwp[n] = lw[0]


def integrate_slit_flow(model, z0, driving, scheme=HEUN):
    """
    Simulate the flow of `model` at the points `z0` on one driving path.

    Only the Brownian increments of `driving` enter; the drift comes from
    the model's b. The default scheme is stochastic Heun on the
    Stratonovich form; 'euler' is Euler-Maruyama on the Ito form with the
    Ito drifts of w and log w'.
    """
    z = _points(z0)
    stepper = SlitStepper(model.b, model.sigma, model.kappa, scheme)
    history = _History(driving.n_steps, z.size)
    _, _, _, tau = integrate_points(
        stepper, z, ensemble.FixedIncrements(driving.increments),
        driving.n_steps, driving.dt, _Refiner(driving.seed, [driving.path_id]),
        observer=history)
    return FlowPath(z, driving.times, history.w, history.logwp, tau[0], scheme)


@dataclass(frozen=True, eq=False)
class FlowEnsemble:
    """ Terminal states of an ensemble of flow paths, in path order """

    z0: np.ndarray
    T: float
    dt: float
    seed: int
    scheme: str
    w: np.ndarray
    logwp: np.ndarray
    tau: np.ndarray
    brownian: np.ndarray
    observers: tuple = ()

    @property
    def n_paths(self):
        return self.w.shape[0]

    @property
    def swallowed(self):
        return np.isfinite(self.tau)


def run_flows(model, z0, T, dt, seed, n_paths, threads=1, scheme=HEUN,
              observe=None):
    """
    Simulate `n_paths` independent flow paths of `model` at the points
    `z0` up to time T.

    Arguments:
    - `seed`: master seed; path i uses the streams of (seed, i)
    - `threads`: worker threads; results do not depend on it
    - `observe`: optional factory, called with the path ids of a chunk,
      returning an observer for integrate_points; the observers come back
      in FlowEnsemble.observers in path order
    """
    z = _points(z0)
    n_steps = _steps(T, dt)
    stepper = SlitStepper(model.b, model.sigma, model.kappa, scheme)

    def chunk(ids):
        noise = ensemble.IncrementStream(seed, ids, dt)
        observer = observe(ids) if observe is not None else None
        w, lw, _, tau = integrate_points(stepper, z, noise, n_steps, dt,
                                         _Refiner(seed, ids), observer)
        return w, lw, tau, noise.brownian, observer

    parts = ensemble.map_chunks(chunk, n_paths, threads)
    swallowed = sum(int(np.isfinite(p[2]).sum()) for p in parts)
    if swallowed:
        log.info("%d of %d path-points swallowed before T = %g",
                 swallowed, n_paths * z.size, T)
    return FlowEnsemble(z, T, dt, seed, scheme,
                        np.concatenate([p[0] for p in parts]),
                        np.concatenate([p[1] for p in parts]),
                        np.concatenate([p[2] for p in parts]),
                        np.concatenate([p[3] for p in parts]),
                        tuple(p[4] for p in parts))


def boundary_log_derivative(model, q, t, brownian):
    """
    log w'_t(q) at a boundary point q where b and sigma both vanish:
    -b'(q) t + sqrt(kappa) sigma'(q) B_t, exactly.
    """
    b, sigma = laurent(model.b), laurent(model.sigma)
    if abs(b(q)) > 1e-12 or abs(sigma(q)) > 1e-12:
        raise ValueError("%r is not a fixed point of b and sigma" % (q,))
    root = math.sqrt(float(model.kappa))
    return (-b.prime(q) * np.asarray(t) + root * sigma.prime(q) * np.asarray(brownian)).real


# Deterministic Loewner equations


def _loewner_rk4(rhs, z, driving, inside):
    """
    RK4 for dg/dt = F(g - xi_t), d log g'/dt = F'(g - xi_t) with xi
    linear on each grid step and substeps min(dt, c |g - xi|^2).
    Returns (g, log g', tau) on the grid.
    """
    xi = driving.values
    dt = driving.dt
    n = driving.n_steps
    g = np.empty((n + 1, z.size), dtype=complex)
    lg = np.zeros_like(g)
    g[0] = z
    tau = np.full(z.size, np.inf)
    cur, cur_l = z.copy(), np.zeros(z.size, dtype=complex)
    for k in range(n):
        slope = (xi[k + 1] - xi[k]) / dt
        s = 0.0
        while s < dt:
            alive = ~np.isfinite(tau)
            if not alive.any():
                break
            drive = xi[k] + slope * s
            d = np.abs(cur[alive] - drive).min()
            h = min(dt - s, REFINE_C * d * d)
            if dt - s - h <= 1e-12 * dt:
                h = dt - s
            at = lambda u: xi[k] + slope * u
            with np.errstate(all='ignore'):
                k1, m1 = rhs(cur - at(s))
                k2, m2 = rhs(cur + 0.5 * h * k1 - at(s + 0.5 * h))
                k3, m3 = rhs(cur + 0.5 * h * k2 - at(s + 0.5 * h))
                k4, m4 = rhs(cur + h * k3 - at(s + h))
                nxt = cur + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
                nxt_l = cur_l + h * (m1 + 2 * m2 + 2 * m3 + m4) / 6.0
                gap = np.abs(nxt - at(s + h))
            stop = alive & (~np.isfinite(nxt) | ~inside(nxt) | (gap < SWALLOW_EPS))
            tau[stop] = k * dt + s + h
            move = alive & ~stop
            cur[move], cur_l[move] = nxt[move], nxt_l[move]
            s += h
        g[k + 1], lg[k + 1] = cur, cur_l
    return g, lg, tau


def _chordal_rhs(d):
    return 2.0 / d, -2.0 / (d * d)


def _dipolar_rhs(d):
    return 1.0 / np.tanh(d / 2.0), -0.5 / np.sinh(d / 2.0) ** 2


def chordal_loewner(driving, z0):
    """
    Solve dg_t/dt = 2 / (g_t - xi_t) at the points `z0`. The returned
    path has g_t in `g` and w_t = g_t - xi_t in `w`.
    """
    z = _points(z0)
    g, lg, tau = _loewner_rk4(_chordal_rhs, z, driving, lambda u: u.imag > 0)
    w = g - driving.values[:, None]
    return FlowPath(z, driving.times, w, lg, tau, 'rk4', g=g)


def dipolar_loewner(driving, z0):
    """
    Solve dg_t/dt = coth((g_t - xi_t)/2) in the strip 0 < Im z < pi.
    `w` holds Z_t = g_t - xi_t, `g` the strip map itself.
    """
    z = _strip_points(z0)
    inside = lambda u: (u.imag > 0) & (u.imag < STRIP_HEIGHT)
    g, lg, tau = _loewner_rk4(_dipolar_rhs, z, driving, inside)
    w = g - driving.values[:, None]
    return FlowPath(z, driving.times, w, lg, tau, 'rk4', g=g)


def half_plane_dipolar_driving(driving):
    """ The strip driving function carried to H: tanh(xi_t / 2) """
    return np.tanh(driving.values / 2.0)


def dipolar_driving_sde(driving):
    """
    Euler-Maruyama for the Ito equation of tanh(xi_t / 2),

        dx = (alpha/2)(1 - x^2) dt - (kappa/4) x (1 - x^2) dt
             + (sqrt(kappa)/2)(1 - x^2) dB,

    on the increments of `driving`.
    """
    kappa, alpha, dt = driving.kappa, driving.alpha, driving.dt
    root = math.sqrt(kappa)
    x = np.empty(driving.n_steps + 1)
    x[0] = 0.0
    for k, dB in enumerate(driving.increments):
        c = 1.0 - x[k] * x[k]
        x[k + 1] = (x[k] + (0.5 * alpha * c - 0.25 * kappa * x[k] * c) * dt
                    + 0.5 * root * c * dB)
    return x


def trace_points(driving, times, eps=TRACE_EPS):
    """
    Approximate chordal trace points gamma_t = g_t^{-1}(xi_t + i eps) by
    running the Loewner equation backwards from time t to 0. Accuracy is
    only qualitative: nothing controls the eps error.

    Raises ReversalInstability if a backward path leaves H.
    """
    xi = driving.values
    dt = driving.dt
    index = np.array([int(round(t / dt)) for t in np.atleast_1d(times)])
    if np.any(index < 0) or np.any(index > driving.n_steps):
        raise ValueError("trace times must lie in [0, T]")
    z = xi[index] + 1j * eps
    active = np.zeros(index.size, dtype=bool)
    for k in range(index.max(initial=0), 0, -1):
        starting = index == k
        z[starting] = xi[k] + 1j * eps
        active |= starting
        slope = (xi[k] - xi[k - 1]) / dt
        s = dt
        at = lambda u: xi[k - 1] + slope * u
        while s > 0 and active.any():
            d = np.abs(z[active] - at(s)).min()
            h = min(s, REFINE_C * d * d)
            if s - h <= 1e-12 * dt:
                h = s
            cur = z[active]
            rhs = lambda u, v: 2.0 / (u - at(v))
            k1 = rhs(cur, s)
            k2 = rhs(cur - 0.5 * h * k1, s - 0.5 * h)
            k3 = rhs(cur - 0.5 * h * k2, s - 0.5 * h)
            k4 = rhs(cur - h * k3, s - h)
            nxt = cur - h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            if not np.all(np.isfinite(nxt)) or np.any(nxt.imag <= 0):
                raise ReversalInstability("backward Loewner path left H")
            z[active] = nxt
            s -= h
    return z


@dataclass(frozen=True, eq=False)
class HullSample:
    """ Swallow flags of grid points at several horizons """

    points: np.ndarray
    horizons: np.ndarray
    swallowed: np.ndarray
    trace: np.ndarray = None

    def at(self, T):
        k = int(np.flatnonzero(self.horizons == T)[0])
        return self.swallowed[k]


def hull_scan(model, driving, points, horizons, trace_times=None):
    """
    Which of `points` the flow of `model` swallows by each horizon.

    All horizons are read off one run, so the flags grow with T.
    """
    horizons = np.atleast_1d(np.asarray(horizons, dtype=float))
    run = driving.truncated(horizons.max())
    path = integrate_slit_flow(model, points, run)
    flags = path.tau[None, :] <= horizons[:, None]
    trace = trace_points(run, trace_times) if trace_times is not None else None
    return HullSample(path.z0, horizons, flags, trace)


# Endpoints of the strip flow


@dataclass(frozen=True, eq=False)
class StripEndpoints:
    """ Z at the horizon (or when stopped) and how each path ended """

    z0: complex
    Z: np.ndarray
    state: np.ndarray
    tau: np.ndarray
    T: float
    dt: float
    seed: int

    @property
    def swallowed(self):
        return self.state == SWALLOWED

    @property
    def escaped_right(self):
        return (self.state == ESCAPED) & (self.Z.real > 0)

    @property
    def escaped_left(self):
        return (self.state == ESCAPED) & (self.Z.real < 0)

    @property
    def running(self):
        return self.state == ALIVE

    @property
    def lost(self):
        return self.state == LOST


def strip_endpoints(kappa, alpha, z0, T, dt, seed, n_paths, threads=1):
    """
    Run Z_t = g_t(z0) - xi_t of the strip Loewner flow driven by
    sqrt(kappa) B_t + alpha t until it is swallowed, escapes past
    |Re Z| = ESCAPE_RE, or time T.
    """
    z = _strip_points(z0)
    if z.size != 1:
        raise ValueError("one starting point per run")
    n_steps = _steps(T, dt)
    stepper = StripStepper(kappa, alpha)

    def chunk(ids):
        noise = ensemble.IncrementStream(seed, ids, dt)
        Z, _, state, tau = integrate_points(stepper, z, noise, n_steps, dt,
                                            _Refiner(seed, ids), track_log=False)
        return Z[:, 0], state[:, 0], tau[:, 0]

    parts = ensemble.map_chunks(chunk, n_paths, threads)
    ends = StripEndpoints(complex(z[0]),
                          np.concatenate([p[0] for p in parts]),
                          np.concatenate([p[1] for p in parts]),
                          np.concatenate([p[2] for p in parts]),
                          T, dt, seed)
    lost = int(ends.lost.sum())
    if lost:
        log.warning("%d of %d strip paths stepped across Im Z = pi; dt = %g is "
                    "too coarse for them", lost, n_paths, dt)
    return ends
