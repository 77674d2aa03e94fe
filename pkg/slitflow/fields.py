"""
Driving vector fields of a slit flow.

A normalized drift field is b(z) = -2/z - b_{-1} - b_0 z - b_1 z^2 and a
normalized diffusion field is sigma(z) = -1 - sigma_0 z - sigma_1 z^2.
Both are instances of the Laurent fields c_{-1}/z + c_0 + c_1 z + c_2 z^2
with real coefficients, which is the form pushforwards work in.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P

from slitflow.conformal import CoincidentPoints, as_half_plane

log = logging.getLogger(__name__)

class PoleError(ZeroDivisionError): pass
class ShapeError(ValueError): pass
class StepDegeneration(ArithmeticError): pass

FD_STEP = 1e-5
FD_TOLERANCE = 1e-6
SHAPE_TOLERANCE = 1e-12

B_FIELD = 'b'
SIGMA_FIELD = 'sigma'


@dataclass(frozen=True)
class LaurentField:
    """ v(z) = cm1/z + c0 + c1 z + c2 z^2 with real coefficients """

    cm1: float = 0.0
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    @property
    def coeffs(self):
        return (self.cm1, self.c0, self.c1, self.c2)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        cm1, c0, c1, c2 = (float(c) for c in self.coeffs)
        if cm1 != 0 and np.any(z == 0):
            raise PoleError("field has a pole at 0")
        with np.errstate(divide='ignore', invalid='ignore'):
            value = (cm1 / z if cm1 != 0 else 0.0) + c0 + z * (c1 + c2 * z)
        return value[()] if np.ndim(value) == 0 else value

    def prime(self, z):
        z = np.asarray(z, dtype=complex)
        cm1, _, c1, c2 = (float(c) for c in self.coeffs)
        if cm1 != 0 and np.any(z == 0):
            raise PoleError("field has a pole at 0")
        with np.errstate(divide='ignore', invalid='ignore'):
            value = (-cm1 / z ** 2 if cm1 != 0 else 0.0) + c1 + 2.0 * c2 * z
        return value[()] if np.ndim(value) == 0 else value

    def second(self, z):
        z = np.asarray(z, dtype=complex)
        cm1, _, _, c2 = (float(c) for c in self.coeffs)
        if cm1 != 0 and np.any(z == 0):
            raise PoleError("field has a pole at 0")
        with np.errstate(divide='ignore', invalid='ignore'):
            value = (2.0 * cm1 / z ** 3 if cm1 != 0 else 0.0) + 2.0 * c2 + 0.0 * z
        return value[()] if np.ndim(value) == 0 else value

    def numerator(self):
        """ Coefficients of z v(z), lowest degree first """
        return np.array([float(c) for c in self.coeffs])

    def __add__(self, other):
        return LaurentField(*(x + y for x, y in
                              zip(self.coeffs, laurent(other).coeffs)))

    def __mul__(self, scalar):
        return LaurentField(*(scalar * c for c in self.coeffs))

    __rmul__ = __mul__


@dataclass(frozen=True)
class FieldCoeffs:
    """
    Coefficients of a normalized field: (b_{-1}, b_0, b_1) for a drift
    field, (sigma_0, sigma_1) for a diffusion field. Coefficients may be
    Fractions; evaluation always happens in floating point.
    """

    kind: str
    coeffs: tuple

    def __post_init__(self):
        size = {B_FIELD: 3, SIGMA_FIELD: 2}.get(self.kind)
        if size is None:
            raise ShapeError("unknown field kind %r" % self.kind)
        if len(self.coeffs) != size:
            raise ShapeError("%s-field takes %d coefficients" % (self.kind, size))
        object.__setattr__(self, 'coeffs', tuple(self.coeffs))

    @classmethod
    def b(cls, bm1=0, b0=0, b1=0):
        return cls(B_FIELD, (bm1, b0, b1))

    @classmethod
    def sigma(cls, s0=0, s1=0):
        return cls(SIGMA_FIELD, (s0, s1))

    def laurent(self):
        if self.kind == B_FIELD:
            bm1, b0, b1 = self.coeffs
            return LaurentField(-2, -bm1, -b0, -b1)
        s0, s1 = self.coeffs
        return LaurentField(0, -1, -s0, -s1)

    def as_floats(self):
        return tuple(float(c) for c in self.coeffs)

    def __call__(self, z):
        return eval_field(self, z)

    def prime(self, z):
        return eval_field_prime(self, z)

    def second(self, z):
        return self.laurent().second(z)


def laurent(v):
    """ Coerce a FieldCoeffs or LaurentField into a LaurentField """
    if isinstance(v, LaurentField):
        return v
    if isinstance(v, FieldCoeffs):
        return v.laurent()
    raise ShapeError("not a Laurent field: %r" % (v,))


def normalize(v, kind):
    """
    Read a LaurentField back as normalized FieldCoeffs of the given kind.

    Raises ShapeError when the field is not of the normalized form.
    """
    cm1, c0, c1, c2 = v.coeffs
    scale = max(1.0, max(abs(float(c)) for c in v.coeffs))
    close = lambda x, y: abs(float(x) - y) <= SHAPE_TOLERANCE * scale
    if kind == B_FIELD:
        if not close(cm1, -2.0):
            raise ShapeError("drift field must have residue -2 at 0")
        return FieldCoeffs.b(-c0, -c1, -c2)
    if not (close(cm1, 0.0) and close(c0, -1.0)):
        raise ShapeError("diffusion field must be -1 - s0 z - s1 z^2")
    return FieldCoeffs.sigma(-c1, -c2)


def eval_field(c, z):
    """
    Value of a field at `z`.

    Arguments:
    - `c`: FieldCoeffs or LaurentField
    - `z`: complex point or array; z = 0 is a pole of drift fields
    """
    return laurent(c)(z)


def eval_field_prime(c, z):
    return laurent(c).prime(z)


def ito_drift(b, sigma, kappa, z):
    """
    Drift of the Ito form of dw = -b(w) dt + sqrt(kappa) sigma(w) o dB,
    that is -b(z) + (kappa/2) sigma(z) sigma'(z).
    """
    return -eval_field(b, z) + 0.5 * kappa * eval_field(sigma, z) * eval_field_prime(sigma, z)


def log_derivative_drift(b, sigma, kappa, z):
    """
    Ito drift of log w'_t along the flow, evaluated at w:
    -b'(w) + (kappa/2) sigma(w) sigma''(w).

    The Stratonovich form is d log w' = -b'(w) dt + sqrt(kappa) sigma'(w) o dB.
    The drift of w' itself carries the extra (kappa/2) sigma'(w)^2.
    """
    s = laurent(sigma)
    return -eval_field_prime(b, z) + 0.5 * kappa * s(z) * s.second(z)


# Lie derivatives


DIFFERENTIAL = 'differential'
PRE_PRE_SCHWARZIAN = 'pre-pre-schwarzian'


@dataclass(frozen=True)
class ConformalWeight:
    """
    Transformation law of a field at one node: a (lam, lam_star)
    differential, or a pre-pre-Schwarzian form of order mu. `imaginary`
    marks the real field Im F of a pre-pre-Schwarzian F, whose weight term
    is mu Im v' instead of mu v'.
    """

    mode: str
    lam: complex = 0.0
    lam_star: complex = 0.0
    mu: float = 0.0
    imaginary: bool = False

    def __post_init__(self):
        if self.mode == DIFFERENTIAL:
            if self.mu != 0 or self.imaginary:
                raise ShapeError("a differential carries no order mu")
        elif self.mode == PRE_PRE_SCHWARZIAN:
            if self.lam != 0 or self.lam_star != 0:
                raise ShapeError("a pre-pre-Schwarzian carries no dimensions")
        else:
            raise ShapeError("unknown weight mode %r" % self.mode)

    @classmethod
    def differential(cls, lam=0.0, lam_star=0.0):
        return cls(DIFFERENTIAL, lam=lam, lam_star=lam_star)

    @classmethod
    def pre_pre_schwarzian(cls, mu, imaginary=False):
        return cls(PRE_PRE_SCHWARZIAN, mu=mu, imaginary=imaginary)

    def term(self, value, vp):
        if self.mode == DIFFERENTIAL:
            return self.lam * vp * value + self.lam_star * np.conj(vp) * value
        if self.imaginary:
            return self.mu * np.imag(vp)
        return self.mu * vp


SCALAR = ConformalWeight.differential()


def _field_call(v, z):
    if isinstance(v, (FieldCoeffs, LaurentField)):
        return laurent(v)(z), laurent(v).prime(z)
    return v(z), v.prime(z)


def _wirtinger(f, nodes, k, h):
    """ Central-difference d/dz and d/dzbar of f in its k-th node """
    def shifted(delta):
        moved = list(nodes)
        moved[k] = nodes[k] + delta
        return f(*moved)
    fx = (shifted(h) - shifted(-h)) / (2 * h)
    fy = (shifted(1j * h) - shifted(-1j * h)) / (2 * h)
    return (fx - 1j * fy) / 2, (fx + 1j * fy) / 2


def lie_derivative(v, f, weights, nodes, step=FD_STEP, tol=FD_TOLERANCE):
    """
    Lie derivative of a field of several variables along `v`,

        sum_k  v(z_k) d_k f + conj(v(z_k)) dbar_k f + weight term at z_k,

    with derivatives by central differences.

    Arguments:
    - `v`: FieldCoeffs, LaurentField, or any callable with a `prime`
    - `f`: function of len(nodes) complex arguments
    - `weights`: one ConformalWeight, or one per node
    - `nodes`: distinct points where f is differentiated

    Raises StepDegeneration if the estimates at `step` and `step/2`
    disagree by more than `tol`.
    """
    nodes = [complex(z) for z in nodes]
    if len(set(nodes)) != len(nodes):
        raise CoincidentPoints("Lie derivative nodes must be distinct")
    if isinstance(weights, ConformalWeight):
        weights = [weights] * len(nodes)
    value = f(*nodes)

    def estimate(scale):
        total = 0.0
        for k, z in enumerate(nodes):
            h = scale * max(1.0, abs(z))
            d, dbar = _wirtinger(f, nodes, k, h)
            vz, vp = _field_call(v, z)
            total = total + vz * d + np.conj(vz) * dbar + weights[k].term(value, vp)
        return total

    coarse, fine = estimate(step), estimate(step / 2)
    log.debug("lie derivative at %s: %r vs %r", nodes, coarse, fine)
    if abs(coarse - fine) > tol:
        raise StepDegeneration("finite differences disagree by %g" % abs(coarse - fine))
    return fine


def _divided(v, x, y):
    """ (v(x) - v(y)) / (x - y) for a Laurent field, without cancellation """
    cm1, _, c1, c2 = (float(c) for c in v.coeffs)
    return -cm1 / (x * y) + c1 + c2 * (x + y)


def ell(n):
    """ The vector field l_n = -z^(n+1) for n in -2..1 """
    if n not in (-2, -1, 0, 1):
        raise ShapeError("l_n is a Laurent field only for n in -2..1")
    coeffs = [0.0] * 4
    coeffs[n + 2] = -1.0
    return LaurentField(*coeffs)


def lie_green_closed(v, z1, z2):
    """
    Closed form of the Lie derivative of Green's function of H,

        Re[(v(z1) - conj v(z2))/(z1 - conj z2) - (v(z1) - v(z2))/(z1 - z2)],

    the derivative of G(z1, z2) when both points move along v. For a
    drift field this is 4 Im(1/z1) Im(1/z2); for a diffusion field it
    vanishes.
    """
    z1, z2 = as_half_plane(z1), as_half_plane(z2)
    if z1 == z2:
        raise CoincidentPoints("Lie derivative of G on the diagonal")
    v = laurent(v)
    return (_divided(v, z1, z2.conjugate()) - _divided(v, z1, z2)).real


# Conjugacy classes


PARABOLIC = 'parabolic'
HYPERBOLIC = 'hyperbolic'
ELLIPTIC = 'elliptic'


@dataclass(frozen=True)
class SigmaClass:
    tag: str
    discriminant: object


def sigma_classify(sigma):
    """ Conjugacy class of 1 + s0 z + s1 z^2 from its boundary fixed points """
    s0, s1 = sigma.coeffs
    disc = s0 * s0 - 4 * s1
    if s1 == 0:
        tag = HYPERBOLIC if s0 != 0 else PARABOLIC
    elif disc > 0:
        tag = HYPERBOLIC
    elif disc < 0:
        tag = ELLIPTIC
    else:
        tag = PARABOLIC
    return SigmaClass(tag, disc)


def pushforward(phi, v):
    """
    Push a field forward under an automorphism of H,
    (phi_* v)(z) = v(psi(z)) / psi'(z) with psi the inverse of phi.

    A FieldCoeffs comes back as FieldCoeffs of the same kind, a
    LaurentField as a LaurentField. ShapeError if the image leaves that
    class.
    """
    field = laurent(v)
    psi = phi.inverse()
    # psi(z) = N(z) / M(z)
    N = np.array([psi.b, psi.a])
    M = np.array([psi.d, psi.c])
    # M^2 v(N/M) = Q(z) / N(z)
    cm1, c0, c1, c2 = field.numerator()
    Q = P.polyadd(P.polyadd(cm1 * P.polypow(M, 3), c0 * P.polymul(N, P.polypow(M, 2))),
                  P.polyadd(c1 * P.polymul(P.polypow(N, 2), M), c2 * P.polypow(N, 3)))
    Q = np.pad(Q, (0, 4 - len(Q)))
    scale = max(1.0, np.abs(Q).max())
    if abs(N[0]) <= SHAPE_TOLERANCE * abs(N[1]):
        # N = psi.a z
        coeffs = Q / N[1]
    else:
        quotient, remainder = P.polydiv(Q, N)
        if np.abs(remainder).max() > SHAPE_TOLERANCE * scale:
            raise ShapeError("pushforward has a pole away from 0")
        quotient = np.pad(quotient, (0, max(0, 3 - len(quotient))))
        if np.abs(quotient[3:]).max(initial=0.0) > SHAPE_TOLERANCE * scale:
            raise ShapeError("pushforward grows faster than z^2")
        coeffs = np.concatenate([[0.0], quotient[:3]])
    image = LaurentField(*(float(c) for c in coeffs[:4]))
    if isinstance(v, FieldCoeffs):
        return normalize(image, v.kind)
    return image


def pushforward_pointwise(phi, v, z):
    """ Pointwise definition of the pushforward, used as an oracle """
    psi = phi.inverse()
    return laurent(v)(psi(z)) / psi.derivative(z)


# Classical driving fields, normalized and in the half-plane chart


PRESETS = {
    'chordal': (FieldCoeffs.b(0, 0, 0), FieldCoeffs.sigma(0, 0)),
    'dipolar': (FieldCoeffs.b(0, Fraction(-1, 2), 0),
                FieldCoeffs.sigma(0, Fraction(-1, 4))),
    'radial': (FieldCoeffs.b(0, Fraction(1, 2), 0),
               FieldCoeffs.sigma(0, Fraction(1, 4))),
}


def dipolar_chart_fields(alpha):
    """
    Dipolar fields with marked points -1, +1 of H:
    b(z) = (alpha/2)(1 - z^2) - (1 - z^2)/(2z), sigma(z) = -(1 - z^2)/2.
    """
    return (LaurentField(-0.5, alpha / 2.0, 0.5, -alpha / 2.0),
            LaurentField(0.0, -0.5, 0.0, 0.5))

