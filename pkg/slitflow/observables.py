"""
Observables of coupled flows and the statistics that test them.

Everything here is evaluated in the identity chart of H. Chart factors
enter only through log w'_t, integrated along the flow and never
re-wrapped, so arguments and powers stay continuous along paths.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from slitflow import classifier, ensemble, flows, gff
from slitflow.conformal import green_half_plane, barycentric, sc_map_build
from slitflow.reports import ResidualReport, Z_THRESHOLD

log = logging.getLogger(__name__)

class NeutralityViolation(ValueError): pass
class BranchPointError(ValueError): pass
class AmbiguityExceeded(RuntimeError): pass

NEUTRALITY_TOL = 1e-12
BRANCH_EPS = 1e-9
FD_STEP = 1e-5
CLASS_EPS = 0.05
MAX_AMBIGUOUS = 0.05
QV_TOLERANCE = 0.1
MIN_PATHS = 100
VERTEX_CAP = 10.0


def a_from_background(bb):
    """ The root a > 0 of 2a(a + bb) = 1 """
    return (-bb + math.sqrt(bb * bb + 2.0)) / 2.0


# u_t and the pair martingale


@dataclass(frozen=True, eq=False)
class UProcess:
    """
    u_t(z) = u(w_t(z)) - 2 bb arg w'_t(z) on the grid of one flow path.
    After a point's swallow time the process stays at its last value.
    """

    flow: object
    u: object
    background: float
    values: np.ndarray

    @property
    def times(self):
        return self.flow.times

    @property
    def alive(self):
        return self.flow.times[:, None] < self.flow.tau[None, :]


def u_values(u, background, w, logwp):
    return u(w) - 2.0 * background * np.imag(logwp)


def u_process(flow, u, background=None):
    background = -u.mu / 2.0 if background is None else background
    return UProcess(flow, u, background,
                    u_values(u, background, flow.w, flow.logwp))


def pair_martingale(flow, u, j=0, k=1, background=None):
    """ M_t = u_t(z_j) u_t(z_k) + 2 G_H(w_t(z_j), w_t(z_k)) """
    if j == k:
        raise ValueError("the pair martingale needs two distinct points")
    process = u_process(flow, u, background)
    return (process.values[:, j] * process.values[:, k]
            + 2.0 * green_half_plane(flow.w[:, j], flow.w[:, k]))


def green_series(flow, j=0, k=1):
    """ G_{H_t}(z_j, z_k) along the path """
    return green_half_plane(flow.w[:, j], flow.w[:, k])


# Drift tests


def bonferroni_threshold(checks, threshold=Z_THRESHOLD):
    """ z threshold keeping the family-wise level of `checks` two-sided tests """
    level = 2.0 * stats.norm.sf(threshold)
    return float(stats.norm.isf(level / (2.0 * checks)))


def drift_test(series, name="drift", checkpoints=None, **kwargs):
    """
    z-test of E[X_T - X_0] = 0 over an ensemble.

    Arguments:
    - `series`: (paths, times) samples, or (paths,) terminal increments
    - `checkpoints`: optional time indices tested as well; every test then
      uses the Bonferroni-corrected threshold and a list comes back
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        increments = {None: series}
    else:
        steps = [series.shape[1] - 1] + list(checkpoints or [])
        increments = dict((k, series[:, k] - series[:, 0]) for k in steps)
    n = series.shape[0]
    if n < MIN_PATHS:
        log.warning("%s: only %d paths, the z-test is unreliable", name, n)
    threshold = kwargs.pop('threshold', Z_THRESHOLD)
    if checkpoints:
        threshold = bonferroni_threshold(len(increments), threshold)
    reports = []
    for k, values in increments.items():
        label = name if k is None or k == series.shape[1] - 1 else "%s@%d" % (name, k)
        reports.append(ensemble.accumulate([values]).report(
            label, 0.0, threshold=threshold, **kwargs))
    return reports if checkpoints else reports[0]


# Charges and vertex correlations


@dataclass(frozen=True)
class ChargeVector:
    """
    Charges (tau, tau*; tau-, tau+) at z, conj z and the boundary points
    -1, +1 of H, with the insertion parameter delta.
    """

    tau: float
    tau_star: float
    tau_minus: float
    tau_plus: float
    delta: float = 0.0

    def __post_init__(self):
        total = self.tau + self.tau_star + self.tau_minus + self.tau_plus
        if abs(total) > NEUTRALITY_TOL:
            raise NeutralityViolation("charges add up to %.3g, not 0" % total)

    @classmethod
    def cardy_zhan(cls, a, delta):
        """ (-2a, 0; a - delta, a + delta) """
        return cls(-2.0 * a, 0.0, a - delta, a + delta, delta)

    def lam(self, bb):
        return self.tau ** 2 / 2.0 - self.tau * bb

    def lam_star(self, bb):
        return self.tau_star ** 2 / 2.0 - self.tau_star * bb

    def lam_boundary(self):
        return self.tau_minus ** 2 / 2.0, self.tau_plus ** 2 / 2.0

    def lam_hat(self, a):
        d = self.delta
        return ((self.tau_minus ** 2 - (a - d) * self.tau_minus) / 2.0,
                (self.tau_plus ** 2 - (a + d) * self.tau_plus) / 2.0)

    def nu(self, bb):
        """ (nu+, nu-) """
        return (self.tau * (bb + self.tau_plus), self.tau * (bb + self.tau_minus))

    def nu_star(self, bb):
        return (self.tau_star * (bb + self.tau_plus),
                self.tau_star * (bb + self.tau_minus))

    def nu_hat(self, bb, a):
        d = self.delta
        return (self.tau * (bb - (a + d) / 2.0 + self.tau_plus),
                self.tau * (bb - (a - d) / 2.0 + self.tau_minus))

    def nu_hat_star(self, bb, a):
        d = self.delta
        return (self.tau_star * (bb - (a + d) / 2.0 + self.tau_plus),
                self.tau_star * (bb - (a - d) / 2.0 + self.tau_minus))

    def nu_hat_rooted(self, bb, a):
        """ nu-hat from nu by the rooting shift -tau (a +- delta) / 2 """
        plus, minus = self.nu(bb)
        d = self.delta
        return (plus - self.tau * (a + d) / 2.0, minus - self.tau * (a - d) / 2.0)


def _check_branch(z, points=(1.0, -1.0, 0.0)):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= BRANCH_EPS):
        raise BranchPointError("point on or below the real axis")
    for p in points:
        if np.any(np.abs(z - p) < BRANCH_EPS):
            raise BranchPointError("branch point at %g" % p)
    return z


def _power(base, exponent):
    """ Principal branch; exp(0 log base) is 1 even where log is not finite """
    if exponent == 0:
        return np.ones_like(base)
    return np.exp(exponent * np.log(base))


def vertex_correlation(charges, bb, z, variant='plain'):
    """
    One-point vertex correlation of the charges at z in the identity
    chart, where every chart factor is 1.

    'plain' is (1-w)^nu+ (1+w)^nu- (1-w*)^nu*+ (1+w*)^nu*- (w-w*)^(tau tau*);
    'inserted' uses the hatted exponents and the extra factor
    w^(tau a) w*^(tau* a).
    """
    z = np.asarray(z, dtype=complex)
    points = (1.0, -1.0, 0.0) if variant == 'inserted' else (1.0, -1.0)
    _check_branch(z, points)
    zc = np.conj(z)
    a = a_from_background(bb)
    if variant == 'plain':
        (np_, nm), (sp, sm) = charges.nu(bb), charges.nu_star(bb)
        extra = 1.0
    elif variant == 'inserted':
        (np_, nm), (sp, sm) = charges.nu_hat(bb, a), charges.nu_hat_star(bb, a)
        extra = _power(z, charges.tau * a) * _power(zc, charges.tau_star * a)
    else:
        raise ValueError("unknown variant %r" % variant)
    value = (_power(1 - z, np_) * _power(1 + z, nm) * _power(1 - zc, sp)
             * _power(1 + zc, sm) * _power(z - zc, charges.tau * charges.tau_star)
             * extra)
    return value[()] if np.ndim(value) == 0 else value


def cardy_zhan_vertex(kappa, alpha, z):
    """
    (1-z)^(-1 + 2(1-alpha)/kappa) (1+z)^(-1 + 2(1+alpha)/kappa) z^(-4/kappa)
    """
    cft = classifier.CftParams(kappa, alpha * math.sqrt(2.0 / kappa))
    charges = ChargeVector.cardy_zhan(cft.a, cft.delta)
    return vertex_correlation(charges, cft.background, z, 'inserted')


def chordal_vertex(kappa, alpha, w, logwp, tau=None):
    """
    w^(tau a) exp(-tau alpha a w / 2) (w')^lambda: the chordal limit of
    the dipolar vertex observable. tau defaults to -2a, the charge with
    lambda = 1.
    """
    cft = classifier.CftParams(kappa)
    a, bb = cft.a, cft.background
    tau = -2.0 * a if tau is None else tau
    lam = tau * tau / 2.0 - tau * bb
    w = np.asarray(w, dtype=complex)
    return np.exp(tau * a * np.log(w) - tau * alpha * a * w / 2.0
                  + lam * np.asarray(logwp))


def dipolar_vertex(model, w, logwp, t=None, brownian=None, charges=None):
    """
    The inserted vertex observable along a dipolar flow with marked
    points -2, 2 (the chart z -> z / 2 takes them to -1, 1):
    M(w / 2) (w')^lambda (w'(-2))^lam-hat- (w'(2))^lam-hat+.
    """
    cft = model.cft
    a, bb = cft.a, cft.background
    charges = charges or ChargeVector.cardy_zhan(a, cft.delta)
    w = np.asarray(w, dtype=complex)
    value = vertex_correlation(charges, bb, w / 2.0, 'inserted')
    factor = charges.lam(bb) * np.asarray(logwp)
    if charges.tau_star:
        factor = factor + charges.lam_star(bb) * np.conj(logwp)
    lam_minus, lam_plus = charges.lam_hat(a)
    for q, lam in ((-2.0, lam_minus), (2.0, lam_plus)):
        if lam:
            if t is None or brownian is None:
                raise ValueError("boundary factors need the time and B_t")
            factor = factor + lam * flows.boundary_log_derivative(model, q, t, brownian)
    return value * np.exp(factor)


def vertex_log_derivative_residual(kappa, alpha, z, step=FD_STEP):
    """ Finite-difference d log M against the closed partial fractions """
    z = complex(_check_branch(z))
    m = lambda x: cardy_zhan_vertex(kappa, alpha, x)
    numeric = (m(z + step) - m(z - step)) / (2.0 * step * m(z))
    exact = (-4.0 / kappa / z + (-1.0 + 2.0 * (1 - alpha) / kappa) / (z - 1)
             + (-1.0 + 2.0 * (1 + alpha) / kappa) / (z + 1))
    return abs(numeric - exact)


def bpz_sc_residual(kappa, alpha, z, step=FD_STEP, tolerance=1e-8):
    """
    |h''/h' - (-(4/kappa)/(z - 1) + (-1 + 2(1 + alpha)/kappa)/z)| with h'
    from the Schwarz-Christoffel map and h'' by central differences, and
    the same check for the log-derivative of the vertex observable in its
    chart with marked points 0, -1, 1.
    """
    z = complex(_check_branch(z, (0.0, 1.0, -1.0)))
    sc = sc_map_build(kappa, alpha)
    numeric = (sc.h_prime(z + step) - sc.h_prime(z - step)) / (2.0 * step * sc.h_prime(z))
    rhs = -4.0 / kappa / (z - 1.0) + (-1.0 + 2.0 * (1.0 + alpha) / kappa) / z
    residuals = [abs(numeric - rhs), vertex_log_derivative_residual(kappa, alpha, z, step)]
    return ResidualReport("bpz-sc[kappa=%g, alpha=%g, z=%s]" % (kappa, alpha, z),
                          residuals, tolerance)


# One-point functions of the hatted fields


def chordal_one_point(a, alpha, z):
    """ 2a arg z + alpha a Im z """
    z = _check_branch(z, ())
    return 2.0 * a * np.angle(z) + alpha * a * z.imag


def dipolar_one_point(a, bb, delta, z, q=1.0):
    """
    2a arg z + (2bb - a + delta) arg(1 + z/q) + (2bb - a - delta) arg(1 - z/q)
    with marked points -q, q. With delta = (alpha a / 2) q it tends to the
    chordal one-point function as q grows.
    """
    z = _check_branch(np.asarray(z, dtype=complex) / q, (1.0, -1.0)) * q
    return (2.0 * a * np.angle(z) + (2.0 * bb - a + delta) * np.angle(1 + z / q)
            + (2.0 * bb - a - delta) * np.angle(1 - z / q))


def phi_hat_one_point(model, z, q=1.0):
    """ The one-point function of the hatted field of a chordal or dipolar model """
    cft = model.cft
    alpha = float(model.alpha)
    if model.family == classifier.CHORDAL_DRIFT:
        return chordal_one_point(cft.a, alpha, z)
    if model.family == classifier.DIPOLAR_DRIFT:
        return dipolar_one_point(cft.a, cft.background, cft.delta, z, q)
    raise ValueError("no one-point function for family %r" % model.family)


# Ensemble checks


def _model_u(model, u):
    return classifier.build_u(model) if u is None else u


def vertex_values(model, w, logwp, t=None, brownian=None):
    if model.family == classifier.CHORDAL_DRIFT:
        return chordal_vertex(float(model.kappa), float(model.alpha), w, logwp)
    if model.family == classifier.DIPOLAR_DRIFT:
        return dipolar_vertex(model, w, logwp, t, brownian)
    raise ValueError("no vertex observable for family %r" % model.family)


class _VertexObserver(object):
    """
    The vertex observable at every grid step, stopped at the first step
    where its modulus reaches `cap` times its starting modulus. At a
    swallow time it is set to 0, its limit there.
    """

    def __init__(self, model, v0, cap, n_paths):
        self.model = model
        self.limit = cap * np.abs(v0)
        self.value = np.tile(v0, (n_paths, 1))
        self.stopped = np.zeros(self.value.shape, dtype=bool)
        self.capped = np.zeros(self.value.shape, dtype=bool)

    def __call__(self, n, w, lw, state):
        swallowed = ~self.stopped & (state != flows.ALIVE)
        self.value[swallowed] = 0.0
        self.stopped |= swallowed
        rows, cols = np.nonzero(~self.stopped)
        if n == 0 or not rows.size:
            return
        current = vertex_values(self.model, w[rows, cols], lw[rows, cols])
        self.value[rows, cols] = current
        over = np.abs(current) >= self.limit[cols]
        self.stopped[rows[over], cols[over]] = True
        self.capped[rows[over], cols[over]] = True


def martingale_suite(model, points, pairs, T, dt, seed, n_paths, threads=1,
                     u=None, vertex=True, threshold=Z_THRESHOLD, cap=VERTEX_CAP):
    """
    drift_test reports for u_t at `points`, M_t at `pairs` (index pairs
    into `points`) and the vertex observable at `points`, all from one
    ensemble. u_t and M_t of swallowed points are stopped at their last
    grid value.

    The vertex observable is a local martingale with heavy tails near the
    tip, so it is tested stopped when its modulus first reaches `cap`
    times its starting value; the stopped process is bounded and has the
    same mean.
    """
    u = _model_u(model, u)
    bb = model.cft.background
    z = np.asarray(points, dtype=complex)
    observe = None
    if vertex:
        v0 = vertex_values(model, z, np.zeros_like(z))
        observe = lambda ids: _VertexObserver(model, v0, cap, len(ids))
    run = flows.run_flows(model, z, T, dt, seed, n_paths, threads, observe=observe)
    meta = dict(seed=seed, dt=dt, kappa=float(model.kappa), alpha=float(model.alpha),
                threshold=threshold)
    reports = []
    ut = u_values(u, bb, run.w, run.logwp)
    u0 = u_values(u, bb, z, np.zeros_like(z))
    for j, point in enumerate(z):
        reports.append(drift_test(ut[:, j] - u0[j], "u_t(%s)" % point, **meta))
    for j, k in pairs:
        m0 = u0[j] * u0[k] + 2.0 * green_half_plane(z[j], z[k])
        mt = ut[:, j] * ut[:, k] + 2.0 * green_half_plane(run.w[:, j], run.w[:, k])
        reports.append(drift_test(mt - m0, "M_t(%s, %s)" % (z[j], z[k]), **meta))
    if vertex:
        vt = np.concatenate([o.value for o in run.observers])
        capped = sum(int(o.capped.sum()) for o in run.observers)
        if capped:
            log.info("%d of %d vertex observables stopped at %g times their start",
                     capped, vt.size, cap)
        for j, point in enumerate(z):
            gap = vt[:, j] - v0[j]
            reports.append(drift_test(gap.real, "Re vertex(%s)" % point, **meta))
            reports.append(drift_test(gap.imag, "Im vertex(%s)" % point, **meta))
    return reports


class _PairingObserver(object):
    """ (u_t, p) at every grid step and its realized quadratic variation """

    def __init__(self, u, bb, weights, area, n_paths):
        self.u, self.bb = u, bb
        self.weights = weights
        self.area = area
        self.previous = None
        self.qv = np.zeros(n_paths)

    def __call__(self, n, w, lw, state):
        value = u_values(self.u, self.bb, w, lw) @ self.weights * self.area
        if self.previous is not None:
            self.qv += (value - self.previous) ** 2
        self.previous = value


@dataclass(frozen=True, eq=False)
class QvResult:
    qv: np.ndarray
    energy_drop: np.ndarray
    energy0: float
    report: object


def qv_check(model, p, T, dt, seed, n_paths, threads=1, u=None,
             cells=8, tolerance=QV_TOLERANCE):
    """
    Realized quadratic variation of (u_t, p) against E_0 - E_T, where
    E_t is the energy of p in H_t computed through w_t.
    """
    u = _model_u(model, u)
    bb = model.cft.background
    quad = gff.quadrature(p, cells=cells)
    margin = quad.zp.imag.min()
    if dt > 0.01 * margin ** 2:
        log.warning("dt = %g is coarse for a support %g above the axis; "
                    "the quadratic variation estimate depends on dt", dt, margin)
    observe = lambda ids: _PairingObserver(u, bb, quad.vp, quad.cell_area, len(ids))
    run = flows.run_flows(model, quad.zp, T, dt, seed, n_paths, threads, observe=observe)
    qv = np.concatenate([obs.qv for obs in run.observers])
    energy0 = gff.energy_product(p, p, gff.HalfPlaneGreen(), quad=quad)

    def drops(ids):
        out = []
        for i in ids:
            green = gff.PulledBackGreen(gff.SampledMap(quad.zp, run.w[i], run.logwp[i]))
            out.append(energy0 - gff.energy_product(p, p, green, quad=quad))
        return out

    drop = np.concatenate([np.asarray(c) for c in ensemble.map_chunks(drops, n_paths, threads)])
    scale = math.fsum(drop) / drop.size
    report = ensemble.accumulate([qv]).report(
        "qv(u_t, p)", scale, seed=seed, dt=dt, kappa=float(model.kappa),
        alpha=float(model.alpha), rel_tolerance=tolerance, scale=scale)
    return QvResult(qv, drop, energy0, report)


class _HadamardObserver(object):
    """
    Along each path: the realized covariation of u_t(z1), u_t(z2), and the
    time integrals of Im(1/w1) Im(1/w2) and of L_sigma u(w1) L_sigma u(w2).
    """

    def __init__(self, model, u, dt, n_paths):
        self.model, self.u, self.dt = model, u, dt
        self.bb = model.cft.background
        self.cov = np.zeros(n_paths)
        self.im_integral = np.zeros(n_paths)
        self.lie_integral = np.zeros(n_paths)
        self.previous = None

    def __call__(self, n, w, lw, state):
        alive = (state == flows.ALIVE).all(axis=1)
        values = u_values(self.u, self.bb, w, lw)
        im = np.where(alive, np.imag(1 / w[:, 0]) * np.imag(1 / w[:, 1]), 0.0)
        lie = self.u.lie(self.model.sigma, w)
        lie = np.where(alive, lie[:, 0] * lie[:, 1], 0.0)
        if self.previous is not None:
            pv, pim, plie = self.previous
            du = values - pv
            self.cov += du[:, 0] * du[:, 1]
            self.im_integral += 0.5 * (im + pim) * self.dt
            self.lie_integral += 0.5 * (lie + plie) * self.dt
        self.previous = (values, im, lie)


@dataclass(frozen=True, eq=False)
class HadamardResult:
    green_report: object
    covariation_report: object

    @property
    def passed(self):
        return self.green_report.passed and self.covariation_report.passed


def hadamard_check(model, z1, z2, T, dt, seed, n_paths, threads=1, u=None,
                   green_tolerance=1e-3, cov_tolerance=0.1):
    """
    Pathwise: G_{H_T} - G_H = -4 int Im(1/w1) Im(1/w2) dt for chordal
    flows. In the mean: the realized covariation of u_t(z1), u_t(z2)
    equals kappa int L_sigma u(w1) L_sigma u(w2) dt, twice the decrease
    of the Green's function.
    """
    u = _model_u(model, u)
    z = np.array([z1, z2], dtype=complex)
    kappa = float(model.kappa)
    observe = lambda ids: _HadamardObserver(model, u, dt, len(ids))
    run = flows.run_flows(model, z, T, dt, seed, n_paths, threads, observe=observe)
    cov = np.concatenate([o.cov for o in run.observers])
    im_int = np.concatenate([o.im_integral for o in run.observers])
    lie_int = np.concatenate([o.lie_integral for o in run.observers])
    decrease = green_half_plane(run.w[:, 0], run.w[:, 1]) - green_half_plane(z1, z2)
    green_report = ResidualReport("hadamard G", decrease + 4.0 * im_int, green_tolerance)
    predicted = kappa * lie_int
    scale = math.fsum(predicted) / predicted.size
    cov_report = ensemble.accumulate([cov]).report(
        "covariation u_t", scale, seed=seed, dt=dt, kappa=kappa,
        alpha=float(model.alpha), rel_tolerance=cov_tolerance, scale=scale)
    return HadamardResult(green_report, cov_report)


def hadamard_integral(path, j=0, k=1):
    """ -4 int_0^t Im(1/w_j) Im(1/w_k) ds along one path, trapezoid rule """
    integrand = -4.0 * np.imag(1 / path.w[:, j]) * np.imag(1 / path.w[:, k])
    return integrate.cumulative_trapezoid(integrand, path.times, initial=0.0)


# Cardy-Zhan


@dataclass(frozen=True, eq=False)
class CardyZhanResult:
    z: complex
    counts: dict
    reports: tuple
    oracle: tuple
    martingale: tuple
    n_paths: int

    @property
    def ambiguous_fraction(self):
        return self.counts['ambiguous'] / self.n_paths

    @property
    def passed(self):
        return all(r.passed for r in self.reports)

    def row(self):
        a, b, c = self.reports
        return {'re_z': self.z.real, 'im_z': self.z.imag,
                'a_mc': a.mean, 'b_mc': b.mean, 'c_mc': c.mean,
                'a_sc': self.oracle[0], 'b_sc': self.oracle[1], 'c_sc': self.oracle[2],
                'se': max(r.se for r in self.reports),
                'ambiguous_frac': self.ambiguous_fraction,
                'a_mart': self.martingale[0], 'b_mart': self.martingale[1],
                'c_mart': self.martingale[2], 'passed': self.passed}


def classify_endpoints(sc, ends, eps=CLASS_EPS):
    """
    Per path label 0 (K_oo), 1 (S+), 2 (S-) or -1 (ambiguous). Running
    paths are labelled by the vertex their image is within `eps` of, with
    the coordinates clamped to the triangle first; lost paths stay
    ambiguous.
    """
    labels = np.full(ends.Z.size, -1)
    labels[ends.swallowed] = 0
    labels[ends.escaped_right] = 1
    labels[ends.escaped_left] = 2
    running = np.flatnonzero(ends.running)
    if running.size:
        coords = np.array(barycentric(sc.f(ends.Z[running]), sc.triangle, eps=math.inf))
        coords = np.clip(coords, 0.0, None)
        coords = coords / coords.sum(axis=0)
        best = np.argmax(coords, axis=0)
        near = coords[best, np.arange(running.size)] > 1.0 - eps
        labels[running[near]] = best[near]
    return labels


def cardy_zhan(kappa, alpha, z, n_paths, T_max=30.0, dt=2e-4, seed=0, threads=1,
               eps=CLASS_EPS, max_ambiguous=MAX_AMBIGUOUS):
    """
    Monte Carlo probabilities that z is swallowed, or lies right or left
    of the curve, for the strip flow, against the barycentric coordinates
    of f(z) on the Schwarz-Christoffel triangle.

    Raises AmbiguityExceeded when more than `max_ambiguous` of the paths
    end unclassified; increase T_max.
    """
    sc = sc_map_build(kappa, alpha)
    z = complex(z)
    oracle = barycentric(sc.f(z), sc.triangle)
    ends = flows.strip_endpoints(kappa, alpha, z, T_max, dt, seed, n_paths, threads)
    labels = classify_endpoints(sc, ends, eps)
    counts = {'a': int((labels == 0).sum()), 'b': int((labels == 1).sum()),
              'c': int((labels == 2).sum()), 'ambiguous': int((labels == -1).sum())}
    if counts['ambiguous'] > max_ambiguous * n_paths:
        raise AmbiguityExceeded("%d of %d paths ambiguous at T_max = %g"
                                % (counts['ambiguous'], n_paths, T_max))
    if counts['ambiguous']:
        log.info("%d ambiguous Cardy-Zhan paths at z = %s", counts['ambiguous'], z)
    reports = []
    for k, key in enumerate('abc'):
        indicator = (labels == k).astype(float)
        reports.append(ensemble.accumulate([indicator]).report(
            "%s(%s)" % (key, z), oracle[k], seed=seed, dt=dt, kappa=kappa,
            alpha=alpha, abs_tolerance=0.02))
    # f(Z_T) with exact vertices for finished paths; its mean is f(z)
    image = np.empty(n_paths, dtype=complex)
    A, B, C = sc.triangle.vertices
    image[ends.swallowed] = A
    image[ends.escaped_right] = B
    image[ends.escaped_left] = C
    unfinished = ends.running | ends.lost
    if unfinished.any():
        image[unfinished] = sc.f(ends.Z[unfinished])
    mean_image = complex(math.fsum(image.real) / n_paths, math.fsum(image.imag) / n_paths)
    martingale = barycentric(mean_image, sc.triangle, eps=1.0)
    return CardyZhanResult(z, counts, tuple(reports), oracle, martingale, n_paths)
