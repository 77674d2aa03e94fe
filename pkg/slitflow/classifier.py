"""
Which slit flows couple to a Dirichlet modification of the free field.

A flow (b, sigma, kappa) couples when b and sigma satisfy a rational
relation with two real constants alpha and beta. For normalized fields the
relation is a linear system in (b_{-1}, b_0, b_1), which is solved here in
exact rational arithmetic whenever the inputs are rational. beta only
enters through s = beta sqrt(kappa), so rational s keeps the solve exact.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from slitflow.fields import FieldCoeffs, PARABOLIC, laurent, sigma_classify
from slitflow.reports import ResidualReport

log = logging.getLogger(__name__)

class BranchObstruction(ValueError): pass


class InconsistentSystem(ArithmeticError):
    """ The coupling system has no solution; `residuals` has the misfit """

    def __init__(self, message, residuals):
        ArithmeticError.__init__(self, message)
        self.residuals = residuals


CHORDAL_DRIFT = 'chordal-drift'
PARABOLIC_BETA = 'parabolic-beta'
DIPOLAR_DRIFT = 'dipolar-drift'
HYPERBOLIC_BETA = 'hyperbolic-beta'
RADIAL6_DRIFT = 'radial6-drift'
CUSTOM = 'custom'

FAMILIES = (CHORDAL_DRIFT, PARABOLIC_BETA, DIPOLAR_DRIFT, HYPERBOLIC_BETA,
            RADIAL6_DRIFT)

SOLVE_TOLERANCE = 1e-12
BRANCH_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CftParams:
    """ Constants of the background-charge free field attached to kappa """

    kappa: float
    delta: float = 0.0

    @property
    def a(self):
        return math.sqrt(2.0 / self.kappa)

    @property
    def background(self):
        return math.sqrt(self.kappa / 8.0) - math.sqrt(2.0 / self.kappa)

    @property
    def mu(self):
        """ Order of the pre-pre-Schwarzian u """
        return -2.0 * self.background

    @property
    def central_charge(self):
        return 1.0 - 12.0 * self.background ** 2

    @property
    def insertion_dimension(self):
        return (6.0 - self.kappa) / (2.0 * self.kappa)

    @property
    def boundary_dimensions(self):
        """ (h_-, h_+) = ((a - delta)^2 / 8, (a + delta)^2 / 8) """
        return ((self.a - self.delta) ** 2 / 8.0,
                (self.a + self.delta) ** 2 / 8.0)


def _exact(*values):
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool)
               for v in values)


@dataclass(frozen=True)
class FlowModel:
    """
    One slit flow together with the constants of its coupling.

    `s` is beta sqrt(kappa), kept exact when rational.
    """

    kappa: object
    alpha: object
    beta: float
    b: FieldCoeffs
    sigma: FieldCoeffs
    family: str = CUSTOM
    s: object = None
    item: int = 0
    sign: int = 0
    degenerate: tuple = ()

    @property
    def cft(self):
        kappa = float(self.kappa)
        return CftParams(kappa, float(self.alpha) * math.sqrt(2.0 / kappa))

    @property
    def sigma_class(self):
        return sigma_classify(self.sigma)

    @property
    def u_positive(self):
        """ False for drifts whose u is unbounded below on H """
        return not (self.family == CHORDAL_DRIFT and float(self.alpha) < 0)

    def get_attrs(self):
        return {'family': self.family, 'item': self.item,
                'kappa': self.kappa, 'alpha': self.alpha, 'beta': self.beta,
                'b_coeffs': list(self.b.coeffs),
                'sigma_coeffs': list(self.sigma.coeffs),
                'degenerate': list(self.degenerate)}


def custom_model(kappa, b, sigma, alpha=0.0, beta=0.0):
    kappa_f = float(kappa)
    return FlowModel(kappa, alpha, beta, b, sigma, CUSTOM,
                     s=beta * math.sqrt(kappa_f))


# The linear system


def system_residuals(kappa, s0, s1, alpha, s, b):
    """ Left minus right side of the four coupling equations """
    bm1, b0, b1 = b
    k = kappa
    return (bm1 - (-alpha + 4 * s0),
            (2 * alpha + (k - 4) * s0) * bm1 - (k - 8) * b0
            - (-2 * s + 2 * k * s0 ** 2 - 2 * k * s1 + 24 * s1),
            (k - 4) * s1 * bm1 + alpha * b0 - (k - 6) * b1
            - (-s * s0 + 2 * k * s0 * s1),
            (k - 4) * s1 * b0 - ((k - 4) * s0 - 2 * alpha) * b1
            - (-2 * s + 2 * k * s1) * s1)


@dataclass(frozen=True)
class SystemSolution:
    """
    Solution of the coupling system. `b` is the particular solution with
    every free parameter set to zero; `free` lists null directions in
    (b_0, b_1).
    """

    b: FieldCoeffs
    free: tuple
    residuals: tuple
    exact: bool

    @property
    def unique(self):
        return not self.free

    def with_free(self, value):
        if not self.free:
            return self.b
        bm1, b0, b1 = self.b.coeffs
        d0, d1 = self.free[0]
        return FieldCoeffs.b(bm1, b0 + value * d0, b1 + value * d1)


def _row_reduce(rows, is_zero):
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(2):
        candidates = [i for i in range(r, len(rows)) if not is_zero(rows[i][col])]
        if not candidates:
            continue
        i = max(candidates, key=lambda i: abs(rows[i][col]))
        rows[r], rows[i] = rows[i], rows[r]
        pivot = rows[r][col]
        rows[r] = [x / pivot for x in rows[r]]
        for j in range(len(rows)):
            if j != r:
                factor = rows[j][col]
                rows[j] = [x - factor * y for x, y in zip(rows[j], rows[r])]
        pivots.append(col)
        r += 1
    return rows, pivots


def solve_system(kappa, sigma0, sigma1, alpha, beta=None, s=None,
                 tol=SOLVE_TOLERANCE):
    """
    Solve the coupling system for the drift coefficients.

    Arguments:
    - `kappa`, `sigma0`, `sigma1`, `alpha`: real or rational
    - `beta`: the second coupling constant, or
    - `s`: beta sqrt(kappa) directly (use this to stay exact)

    Returns a SystemSolution; at kappa in {6, 8} it may carry a free
    parameter. Raises InconsistentSystem with the residual vector when the
    equations cannot all hold.
    """
    if s is None:
        if beta is None:
            raise ValueError("one of beta and s is required")
        s = beta * math.sqrt(float(kappa))
    exact = _exact(kappa, sigma0, sigma1, alpha, s)
    if exact:
        kappa, sigma0, sigma1, alpha, s = (Fraction(x) for x in
                                           (kappa, sigma0, sigma1, alpha, s))
        is_zero = lambda x: x == 0
    else:
        kappa, sigma0, sigma1, alpha, s = (float(x) for x in
                                           (kappa, sigma0, sigma1, alpha, s))
        scale = max(1.0, abs(kappa), abs(alpha), abs(s))
        is_zero = lambda x: abs(x) <= tol * scale
    k = kappa
    bm1 = -alpha + 4 * sigma0
    rows = [
        [-(k - 8), 0 * k,
         -2 * s + 2 * k * sigma0 ** 2 - 2 * k * sigma1 + 24 * sigma1
         - (2 * alpha + (k - 4) * sigma0) * bm1],
        [alpha, -(k - 6),
         -s * sigma0 + 2 * k * sigma0 * sigma1 - (k - 4) * sigma1 * bm1],
        [(k - 4) * sigma1, -((k - 4) * sigma0 - 2 * alpha),
         (-2 * s + 2 * k * sigma1) * sigma1],
    ]
    reduced, pivots = _row_reduce(rows, is_zero)
    solution = [0 * k, 0 * k]
    for row, col in zip(reduced, pivots):
        solution[col] = row[2]
    b = (bm1, solution[0], solution[1])
    residuals = system_residuals(k, sigma0, sigma1, alpha, s, b)
    if any(not is_zero(row[2]) for row in reduced[len(pivots):]):
        raise InconsistentSystem("coupling system has no solution", residuals)
    free = []
    for col in range(2):
        if col not in pivots:
            direction = [0 * k, 0 * k]
            direction[col] = 1 + 0 * k
            for row, pcol in zip(reduced, pivots):
                direction[pcol] = -row[col]
            free.append(tuple(direction))
    if free:
        log.info("coupling system at kappa=%s has %d free parameter(s)",
                 kappa, len(free))
    return SystemSolution(FieldCoeffs.b(*b), tuple(free), residuals, exact)


# The families


def _family_coefficients(family, kappa, alpha, s, sign):
    """
    Closed-form (alpha, s, b) of a family, or b = None where the formula
    is singular and the system has to decide.
    """
    one = Fraction(1) if _exact(kappa, alpha) and (s is None or _exact(s)) else 1.0
    kappa, alpha = one * kappa, one * alpha
    if s is not None:
        s = one * s
    if family == CHORDAL_DRIFT:
        return alpha, alpha ** 2, (-alpha, 0 * one, 0 * one)
    if family == PARABOLIC_BETA:
        alpha = 0 * one
        if kappa == 8:
            return alpha, s, None
        return alpha, s, (0 * one, 2 * s / (kappa - 8), 0 * one)
    if family == DIPOLAR_DRIFT:
        return alpha, alpha ** 2 - 1, (-alpha, -one / 2, alpha / 4)
    if family == HYPERBOLIC_BETA:
        alpha = sign * (kappa - 6) / 2
        if kappa == 8:
            return alpha, s, None
        return alpha, s, (-alpha, (3 - kappa) / 2 + 2 * s / (kappa - 8),
                          -sign * (kappa - 2 - 8 * s / (kappa - 8)) / 8)
    if family == RADIAL6_DRIFT:
        return alpha, 1 + alpha ** 2, (-alpha, one / 2, -alpha / 4)
    raise ValueError("unknown family %r" % family)


FAMILY_SIGMA = {
    CHORDAL_DRIFT: FieldCoeffs.sigma(0, 0),
    PARABOLIC_BETA: FieldCoeffs.sigma(0, 0),
    DIPOLAR_DRIFT: FieldCoeffs.sigma(0, Fraction(-1, 4)),
    HYPERBOLIC_BETA: FieldCoeffs.sigma(0, Fraction(-1, 4)),
    RADIAL6_DRIFT: FieldCoeffs.sigma(0, Fraction(1, 4)),
}


@dataclass(frozen=True)
class FamilySpec:
    """ One coupled family at a fixed kappa, with its free parameters """

    item: int
    family: str
    kappa: object
    parameters: str
    b_formula: str
    u_formula: str
    u_tag: str
    degenerate: tuple = ()

    @property
    def sigma(self):
        return FAMILY_SIGMA[self.family]

    def coefficients(self, alpha=0, s=0, sign=1):
        return _family_coefficients(self.family, self.kappa, alpha, s, sign)

    def model(self, alpha=0, beta=None, s=None, sign=1, free=0):
        """
        Instantiate the family.

        Arguments:
        - `alpha`: drift, used by the drift families
        - `beta` or `s`: used by the beta families (s = beta sqrt(kappa))
        - `sign`: branch of the hyperbolic-beta family
        - `free`: value of the free coefficient at a degenerate kappa
        """
        root = math.sqrt(float(self.kappa))
        if s is None:
            s = 0 if beta is None else beta * root
        alpha, s, b = self.coefficients(alpha, s, sign)
        s0, s1 = self.sigma.coeffs
        solution = solve_system(self.kappa, s0, s1, alpha, s=s)
        notes = list(self.degenerate) if solution.free else []
        if b is None:
            coeffs = solution.with_free(free)
        else:
            coeffs = FieldCoeffs.b(*b)
            if solution.free and free:
                bm1, b0, b1 = b
                d0, d1 = solution.free[0]
                coeffs = FieldCoeffs.b(bm1, b0 + free * d0, b1 + free * d1)
        if solution.free and not notes:
            notes = ["free coefficient in the coupling system"]
        return FlowModel(self.kappa, alpha, float(s) / root, coeffs, self.sigma,
                         self.family, s=s, item=self.item,
                         sign=sign if self.family == HYPERBOLIC_BETA else 0,
                         degenerate=tuple(notes))

    def get_attrs(self):
        return {'item': self.item, 'family': self.family,
                'kappa': self.kappa, 'parameters': self.parameters,
                'b_formula': self.b_formula,
                'sigma_coeffs': list(self.sigma.coeffs),
                'u_formula': self.u_formula,
                'u_closed_form_tag': self.u_tag,
                'degenerate': list(self.degenerate)}


def family_spec(family, kappa):
    """ FamilySpec of `family` at `kappa`, including radial6 off kappa = 6 """
    k = kappa
    degenerate = ()
    if family == CHORDAL_DRIFT:
        return FamilySpec(1, family, k, "alpha real; beta = alpha^2/sqrt(kappa)",
                          "b(z) = -2/z + alpha", "2a arg z + alpha a Im z",
                          'chordal')
    if family == PARABOLIC_BETA:
        if k == 6:
            degenerate = ("kappa = 6: b_1 free",)
        elif k == 8:
            degenerate = ("kappa = 8: beta = 0 and b_0 free",)
        return FamilySpec(2, family, k, "alpha = 0; beta real",
                          "b(z) = -2/z - (2 beta sqrt(kappa)/(kappa - 8)) z",
                          "2a arg z", 'parabolic', degenerate)
    if family == DIPOLAR_DRIFT:
        return FamilySpec(3, family, k,
                          "alpha real; beta = (alpha^2 - 1)/sqrt(kappa)",
                          "b(z) = -2/z + alpha + z/2 - (alpha/4) z^2",
                          "2a arg z + (2bb - a(1 + alpha)) arg(2 - z)"
                          " + (2bb - a(1 - alpha)) arg(2 + z)", 'dipolar')
    if family == HYPERBOLIC_BETA:
        if k == 6:
            degenerate = ("kappa = 6: alpha = 0 and b_1 free",)
        elif k == 8:
            degenerate = ("kappa = 8: beta = 0 and b_0 free",)
        return FamilySpec(4, family, k,
                          "alpha = sign (kappa - 6)/2, sign = +-1; beta real",
                          "b(z) = -2/z + sign (kappa - 6)/2"
                          " - ((3 - kappa)/2 + 2 beta sqrt(kappa)/(kappa - 8)) z"
                          " + sign (kappa - 2 - 8 beta sqrt(kappa)/(kappa - 8)) z^2 / 8",
                          "(kappa - 6) a arg(2 + sign z) + 2a arg z",
                          'hyperbolic', degenerate)
    if family == RADIAL6_DRIFT:
        return FamilySpec(5, family, k,
                          "kappa = 6; alpha real; beta = (1 + alpha^2)/sqrt(kappa)",
                          "b(z) = -2/z + alpha - z/2 + (alpha/4) z^2",
                          "-alpha sqrt(1/3) log|(z - 2i)/(z + 2i)| + sqrt(4/3) arg z",
                          'radial6')
    raise ValueError("unknown family %r" % family)


def enumerate_families(kappa):
    """
    The coupled families at `kappa`: chordal with drift, the parabolic
    beta family, dipolar with drift and the hyperbolic beta family at every
    kappa, and radial with drift only at kappa = 6.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    families = [family_spec(f, kappa) for f in FAMILIES[:4]]
    if kappa == 6:
        families.append(family_spec(RADIAL6_DRIFT, kappa))
    return families


def catalogue(kappa, alpha=0, beta=None):
    """ Catalogue rows: every family instantiated at (alpha, beta) """
    rows = []
    for spec in enumerate_families(kappa):
        signs = (1, -1) if spec.family == HYPERBOLIC_BETA else (1,)
        for sign in signs:
            model = spec.model(alpha=alpha, beta=beta, sign=sign)
            row = spec.get_attrs()
            row.update({'alpha': model.alpha, 'beta': model.beta,
                        'b_coeffs': list(model.b.coeffs),
                        'params': {'sign': model.sign, 's': model.s},
                        'degenerate': list(model.degenerate)})
            rows.append(row)
    return rows


# The harmonic observable


@dataclass(frozen=True)
class LogTerm:
    """ coef * log(scale * (z - root)) """

    coef: complex
    root: complex
    scale: complex = 1.0


@dataclass(frozen=True)
class PoleTerm:
    """ coef / (z - root) """

    coef: complex
    root: complex


@dataclass(frozen=True)
class HarmonicU:
    """
    u = Im U for U(z) = sum of log terms + sum of pole terms + linear z,
    a pre-pre-Schwarzian of order `mu`. Logs use the principal branch,
    which is continuous on H for roots on or below the real axis.
    """

    tag: str
    mu: float
    logs: tuple = ()
    poles: tuple = ()
    linear: complex = 0.0
    params: dict = field(default_factory=dict, compare=False)

    def holomorphic(self, z):
        z = np.asarray(z, dtype=complex)
        total = self.linear * z
        for t in self.logs:
            total = total + t.coef * np.log(t.scale * (z - t.root))
        for t in self.poles:
            total = total + t.coef / (z - t.root)
        return total

    def __call__(self, z):
        value = np.imag(self.holomorphic(z))
        return value[()] if np.ndim(value) == 0 else value

    def pullback(self, w, logwp):
        """ u o w + mu arg w', the transformation rule of order mu """
        return self(w) + self.mu * np.imag(logwp)

    def prime(self, z):
        z = np.asarray(z, dtype=complex)
        total = self.linear + 0 * z
        for t in self.logs:
            total = total + t.coef / (z - t.root)
        for t in self.poles:
            total = total - t.coef / (z - t.root) ** 2
        return total

    def second(self, z):
        z = np.asarray(z, dtype=complex)
        total = 0 * z
        for t in self.logs:
            total = total - t.coef / (z - t.root) ** 2
        for t in self.poles:
            total = total + 2 * t.coef / (z - t.root) ** 3
        return total

    def lie(self, v, z):
        """ L_v u = Im(v U' + mu v') """
        v = laurent(v)
        return np.imag(v(z) * self.prime(z) + self.mu * v.prime(z))

    def lie_sigma_squared(self, sigma, z):
        """ L_sigma^2 u = Im(sigma (sigma' U' + sigma U'' + mu sigma'')) """
        s = laurent(sigma)
        sz = s(z)
        return np.imag(sz * (s.prime(z) * self.prime(z) + sz * self.second(z)
                             + self.mu * s.second(z)))

    def branch_roots(self):
        return tuple(t.root for t in self.logs if np.imag(t.root) > 0)


def generic_u(model):
    """
    u from the antiderivative of -a (2 + alpha z)/(z sigma(z)) by partial
    fractions, plus 2bb arg sigma split over the linear factors of sigma.

    Raises BranchObstruction when a root of sigma inside H carries a
    nonzero arg coefficient.
    """
    cft = model.cft
    a, bb = cft.a, cft.background
    alpha = float(model.alpha)
    s0, s1 = model.sigma.as_floats()
    logs = [LogTerm(2 * a, 0.0)]
    poles = []
    linear = 0.0
    tag = sigma_classify(model.sigma).tag
    if s1 != 0 and tag == PARABOLIC:
        r = -s0 / (2 * s1)
        double = (2 + alpha * r) / (-s1 * r)
        logs.append(LogTerm(-2 * a + 4 * bb, r))
        poles.append(PoleTerm(a * double, r))
    elif s1 != 0:
        disc = s0 * s0 - 4 * s1
        root = np.sqrt(complex(disc))
        for r in ((-s0 + root) / (2 * s1), (-s0 - root) / (2 * s1)):
            if disc > 0:
                r = r.real
            residue = (2 + alpha * r) / (r * -(s0 + 2 * s1 * r))
            logs.append(LogTerm(-a * residue + 2 * bb, r))
    elif s0 != 0:
        r = -1.0 / s0
        residue = (2 + alpha * r) / (-s0 * r)
        logs.append(LogTerm(-a * residue + 2 * bb, r))
    else:
        linear = alpha * a
    for t in logs:
        if np.imag(t.root) > 0 and abs(np.real(t.coef)) > BRANCH_TOLERANCE:
            raise BranchObstruction(
                "arg(z - %s) has coefficient %.6g: no continuous branch on H"
                % (t.root, np.real(t.coef)))
    return HarmonicU('generic', cft.mu, tuple(logs), tuple(poles), linear,
                     {'family': model.family})


def build_u(model):
    """
    The harmonic observable u of a coupled flow: the closed form for the
    listed families, the partial-fraction antiderivative otherwise.
    """
    cft = model.cft
    a, bb, mu = cft.a, cft.background, cft.mu
    alpha = float(model.alpha)
    params = {'family': model.family}
    if model.family == CHORDAL_DRIFT:
        return HarmonicU('chordal', mu, (LogTerm(2 * a, 0.0),),
                         linear=alpha * a, params=params)
    if model.family == PARABOLIC_BETA:
        return HarmonicU('parabolic', mu, (LogTerm(2 * a, 0.0),), params=params)
    if model.family == DIPOLAR_DRIFT:
        return HarmonicU('dipolar', mu, (
            LogTerm(2 * a, 0.0),
            LogTerm(2 * bb - a * (1 + alpha), 2.0, -1.0),
            LogTerm(2 * bb - a * (1 - alpha), -2.0)), params=params)
    if model.family == HYPERBOLIC_BETA:
        kappa = float(model.kappa)
        # arg(2 + sign z)
        return HarmonicU('hyperbolic', mu, (
            LogTerm(2 * a, 0.0),
            LogTerm((kappa - 6) * a, -2.0 * model.sign, model.sign)),
            params=params)
    if model.family == RADIAL6_DRIFT and model.kappa == 6:
        gamma = alpha * math.sqrt(1.0 / 3.0)
        return HarmonicU('radial6', mu, (
            LogTerm(math.sqrt(4.0 / 3.0), 0.0),
            LogTerm(-1j * gamma, 2j),
            LogTerm(1j * gamma, -2j)), params=params)
    return generic_u(model)


def u_by_quadrature(model, z, base=1j):
    """
    u(z) - u(base) by integrating Im[-a F + 2bb sigma'/sigma] along the
    segment from `base` to `z`, F = (2 + alpha z)/(z sigma(z)).
    """
    cft = model.cft
    a, bb = cft.a, cft.background
    alpha = float(model.alpha)
    sigma = laurent(model.sigma)
    step = complex(z) - complex(base)

    def integrand(t):
        zeta = base + t * step
        s = sigma(zeta)
        g = -a * (2 + alpha * zeta) / (zeta * s) + 2 * bb * sigma.prime(zeta) / s
        return (g * step).imag

    value, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13,
                              limit=200)
    return value


def annihilation_residuals(model, u, z):
    """ (-L_b + (kappa/2) L_sigma^2) u from the exact derivatives of u """
    kappa = float(model.kappa)
    return -u.lie(model.b, z) + 0.5 * kappa * u.lie_sigma_squared(model.sigma, z)


def annihilation_display_residuals(model, z):
    """
    The same operator from the closed displays
    L_sigma^2 u = 2a Im(sigma/z^2) and
    L_b u = -a Im[b (2 + alpha z)/(z sigma)] + 2bb Im[(b sigma' - b' sigma)/sigma].
    """
    cft = model.cft
    a, bb = cft.a, cft.background
    kappa, alpha = float(model.kappa), float(model.alpha)
    z = np.asarray(z, dtype=complex)
    b, sigma = laurent(model.b), laurent(model.sigma)
    bz, sz = b(z), sigma(z)
    lie_b = (-a * np.imag(bz * (2 + alpha * z) / (z * sz))
             + 2 * bb * np.imag((bz * sigma.prime(z) - b.prime(z) * sz) / sz))
    lie_s2 = 2 * a * np.imag(sz / z ** 2)
    return -lie_b + 0.5 * kappa * lie_s2


def check_annihilation(model, u, samples, tol=1e-8):
    residuals = annihilation_residuals(model, u, np.asarray(samples, dtype=complex))
    report = ResidualReport("annihilation[%s]" % model.family, residuals, tol)
    log.debug("%s", report)
    return report


def bsigma_residuals(model, z):
    """ b(z) minus the coupling relation's right side """
    kappa, alpha = float(model.kappa), float(model.alpha)
    bb = model.cft.background
    root = math.sqrt(kappa)
    beta = float(model.s) / root if model.s is not None else model.beta
    b, sigma = laurent(model.b), laurent(model.sigma)
    z = np.asarray(z, dtype=complex)
    bz, sz = b(z), sigma(z)
    rhs = ((-root * sz * (root * sz + beta * z ** 2)
            - bb * math.sqrt(2 * kappa) * z ** 2 * (b.prime(z) * sz - bz * sigma.prime(z)))
           / (z * (alpha * z + 2)))
    return bz - rhs


def check_bsigma(model, samples, tol=1e-10):
    """ Residual report of the b-sigma relation; skips z = -2/alpha """
    z = np.asarray(samples, dtype=complex).ravel()
    alpha = float(model.alpha)
    keep = np.abs(z * (alpha * z + 2)) > 1e-12
    if not np.all(keep):
        log.warning("skipping %d singular sample(s) of the b-sigma relation",
                    int((~keep).sum()))
    return ResidualReport("bsigma[%s]" % model.family,
                          bsigma_residuals(model, z[keep]), tol,
                          skipped=int((~keep).sum()))
