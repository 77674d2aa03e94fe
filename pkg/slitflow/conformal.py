"""
Complex-analytic primitives: Green's function of the upper half-plane,
automorphisms of the half-plane, the strip/half-plane transport and the
Schwarz-Christoffel map of the strip onto a triangle.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

class CoincidentPoints(ValueError): pass
class DomainError(ValueError): pass
class ParameterRange(ValueError): pass
class OutsideTriangle(ValueError): pass

COINCIDENCE_EPS = 1e-14
TRIANGLE_EPS = 1e-9
JACOBI_NODES = 64


def as_half_plane(z):
    """ Return `z` as a complex number after checking that it lies in H """
    z = complex(z)
    if not (cmath.isfinite(z) and z.imag > 0):
        raise DomainError("%r is not a point of the upper half-plane" % z)
    return z


def green_half_plane(z1, z2):
    """
    Green's function of the upper half-plane,
    log|z1 - conj(z2)| - log|z1 - z2|.

    Works elementwise on arrays. Evaluated as
    0.5 * log1p(4 Im z1 Im z2 / |z1 - z2|^2) so that the boundary decay is
    resolved to full precision.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    dist2 = np.abs(z1 - z2) ** 2
    scale = np.maximum(1.0, np.maximum(np.abs(z1), np.abs(z2)))
    if np.any(dist2 <= (COINCIDENCE_EPS * scale) ** 2):
        raise CoincidentPoints("Green's function evaluated on the diagonal")
    value = 0.5 * np.log1p(4.0 * z1.imag * z2.imag / dist2)
    return value[()] if value.ndim == 0 else value


def green_pullback(w, z1, z2):
    """
    Green's function of the domain of `w`, G_D(z1, z2) = G_H(w(z1), w(z2)).

    Arguments:
    - `w`: a conformal map of its domain into H (any callable)
    - `z1`, `z2`: distinct points of that domain
    """
    try:
        w1, w2 = w(z1), w(z2)
    except (ValueError, ZeroDivisionError, FloatingPointError) as e:
        raise DomainError("map undefined at input: %s" % e)
    for image in (w1, w2):
        image = np.asarray(image)
        if not np.all(np.isfinite(image)) or np.any(image.imag <= 0):
            raise DomainError("map sends the input outside H")
    return green_half_plane(w1, w2)


@dataclass(frozen=True)
class MobiusAut:
    """
    z -> (a z + b) / (c z + d) with real coefficients and ad - bc = 1.

    The constructor rescales any positive determinant to one.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if not det > 0:
            raise ParameterRange("an automorphism of H needs ad - bc > 0")
        s = math.sqrt(det)
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, float(getattr(self, name)) / s)

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def scaling(cls, factor):
        return cls(factor, 0.0, 0.0, 1.0)

    @classmethod
    def translation(cls, shift):
        return cls(1.0, shift, 0.0, 1.0)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        value = (self.a * z + self.b) / (self.c * z + self.d)
        return value[()] if value.ndim == 0 else value

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        value = 1.0 / (self.c * z + self.d) ** 2
        return value[()] if value.ndim == 0 else value

    def second_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        value = -2.0 * self.c / (self.c * z + self.d) ** 3
        return value[()] if value.ndim == 0 else value

    def inverse(self):
        return MobiusAut(self.d, -self.b, -self.c, self.a)

    def compose(self, other):
        """ Return self o other """
        return MobiusAut(self.a * other.a + self.b * other.c,
                         self.a * other.b + self.b * other.d,
                         self.c * other.a + self.d * other.c,
                         self.c * other.b + self.d * other.d)

    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]])


STRIP_HEIGHT = math.pi


def strip_to_half_plane(z):
    """ tanh(z/2), taking the strip 0 < Im z < pi onto H """
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag <= 0) | (z.imag >= STRIP_HEIGHT)) or not np.all(np.isfinite(z)):
        raise DomainError("point outside the open strip 0 < Im z < pi")
    value = np.tanh(z / 2.0)
    return value[()] if value.ndim == 0 else value


def half_plane_to_strip(w):
    """ Inverse of `strip_to_half_plane`: log((1 + w) / (1 - w)) """
    w = np.asarray(w, dtype=complex)
    if np.any(w.imag <= 0) or not np.all(np.isfinite(w)):
        raise DomainError("point outside the upper half-plane")
    value = np.log((1.0 + w) / (1.0 - w))
    return value[()] if value.ndim == 0 else value


class StripToHalfPlane(object):
    """ Conformal-map handle for the transport tanh(z/2) """

    def __call__(self, z):
        return strip_to_half_plane(z)

    def derivative(self, z):
        return 0.5 / np.cosh(np.asarray(z, dtype=complex) / 2.0) ** 2

    def inverse(self, w):
        return half_plane_to_strip(w)


def _sn_cn_dn(z, m):
    """ Jacobi elliptic functions at complex z from real-argument ones """
    z = np.asarray(z, dtype=complex)
    s, c, d, _ = special.ellipj(z.real, m)
    s1, c1, d1, _ = special.ellipj(z.imag, 1.0 - m)
    delta = c1 ** 2 + m * s ** 2 * s1 ** 2
    sn = (s * d1 + 1j * c * d * s1 * c1) / delta
    cn = (c * c1 - 1j * s * d * s1 * d1) / delta
    dn = (d * c1 * d1 - 1j * m * s * c * s1) / delta
    return sn, cn, dn


class RectangleToHalfPlane(object):
    """
    Conformal map of the rectangle [x0, x1] x [y0, y1] onto H built from
    the Jacobi sine amplitude: sn maps [-K, K] x [0, K'] onto H.
    """

    def __init__(self, x0, x1, y0, y1):
        width, height = x1 - x0, y1 - y0
        if width <= 0 or height <= 0:
            raise ParameterRange("degenerate rectangle")
        ratio = 2.0 * height / width
        # K'(m) / K(m) decreases from +inf to 0 on (0, 1)
        self.m = optimize.brentq(
            lambda m: special.ellipk(1.0 - m) / special.ellipk(m) - ratio,
            1e-15, 1.0 - 1e-15, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        self.scale = 2.0 * special.ellipk(self.m) / width
        self.origin = complex(x0 + width / 2.0, y0)

    def _zeta(self, z):
        return (np.asarray(z, dtype=complex) - self.origin) * self.scale

    def __call__(self, z):
        sn, _, _ = _sn_cn_dn(self._zeta(z), self.m)
        return sn

    def derivative(self, z):
        _, cn, dn = _sn_cn_dn(self._zeta(z), self.m)
        return cn * dn * self.scale


@dataclass(frozen=True)
class TriangleSpec:
    """
    Triangle ABC listed counter-clockwise, with A at the origin and B = 1.
    """

    angleA: float
    angleB: float
    angleC: float
    A: complex
    B: complex
    C: complex

    def __post_init__(self):
        angles = (self.angleA, self.angleB, self.angleC)
        if any(not 0 < x < math.pi for x in angles):
            raise ParameterRange("triangle angles must lie in (0, pi)")
        if abs(sum(angles) - math.pi) > 1e-12:
            raise ParameterRange("triangle angles must add up to pi")

    @classmethod
    def from_angles(cls, angleA, angleB, angleC):
        # law of sines with |AB| = 1
        side_ac = math.sin(angleB) / math.sin(angleC)
        return cls(angleA, angleB, angleC,
                   0j, 1 + 0j, side_ac * cmath.exp(1j * angleA))

    @property
    def vertices(self):
        return (self.A, self.B, self.C)

    def combine(self, a, b, c):
        return a * self.A + b * self.B + c * self.C


def barycentric(point, tri, eps=TRIANGLE_EPS):
    """
    Barycentric coordinates (a, b, c) of `point` with respect to `tri`,
    renormalized so that a + b + c = 1.

    Accepts arrays of points; the coordinates then come back as arrays.
    """
    point = np.asarray(point, dtype=complex)
    A, B, C = tri.vertices
    matrix = np.array([[A.real, B.real, C.real],
                       [A.imag, B.imag, C.imag],
                       [1.0, 1.0, 1.0]])
    rhs = np.stack([point.real.ravel(), point.imag.ravel(),
                    np.ones(point.size)])
    coords = np.linalg.solve(matrix, rhs)
    coords = coords / coords.sum(axis=0)
    if np.any(coords < -eps):
        raise OutsideTriangle("point lies outside the triangle")
    coords = coords.reshape((3,) + point.shape)
    if point.ndim == 0:
        return tuple(float(x) for x in coords)
    return coords[0], coords[1], coords[2]


@dataclass(frozen=True)
class ScMap:
    """
    Schwarz-Christoffel map h of H onto a triangle with

        h'(z) = C z^p (z - 1)^q,  p = -1 + 2(1 + alpha)/kappa,  q = -4/kappa,

    and prevertices h(1) = A, h(oo) = B, h(0) = C. The strip map is
    f(Z) = h(exp Z), so f(0) = A, f(+oo) = B, f(-oo) = C.

    h is evaluated from one of the three prevertices by Gauss-Jacobi
    quadrature on [0, 1], the algebraic endpoint singularity carried in the
    weight. Each representation's integrand has one more singular point in
    the integration variable s: 1/(1 - z) from 1, 1/z from 0 and z from oo.
    The representation whose singular point lies farthest from [0, 1] is
    used.
    """

    kappa: float
    alpha: float
    triangle: TriangleSpec
    p: float
    q: float
    norm: complex
    h0_zero: complex
    h0_infinity: float
    nodes: dict = field(repr=False, compare=False)

    def h_prime(self, z):
        z = np.asarray(z, dtype=complex)
        return self.norm * z ** self.p * (z - 1.0) ** self.q

    def h_second_over_first(self, z):
        z = np.asarray(z, dtype=complex)
        return self.q / (z - 1.0) + self.p / z

    def _jacobi(self, key, integrand):
        s, weights = self.nodes[key]
        return np.tensordot(integrand(s), weights, axes=([-1], [0]))

    def h(self, z):
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag < 0):
            raise DomainError("h is evaluated on the closed upper half-plane")
        zz = z[..., None]
        p, q = self.p, self.q

        # every representation is computed; np.choose keeps the clean one
        with np.errstate(all="ignore"):
            from_one = (z - 1.0) ** (q + 1.0) * self._jacobi(
                "one", lambda s: (1.0 + s * (zz - 1.0)) ** p)
            from_zero = self.h0_zero + z ** (p + 1.0) * self._jacobi(
                "zero", lambda s: (s * zz - 1.0) ** q)
            from_infinity = self.h0_infinity - z ** (p + 1.0) * self._jacobi(
                "infinity", lambda s: (zz - s) ** q)
            clearance = np.stack([_interval_distance(1.0 / (1.0 - z)),
                                  _interval_distance(1.0 / z),
                                  _interval_distance(z)])
        clearance = np.nan_to_num(clearance, nan=-1.0, posinf=np.finfo(float).max)
        choice = np.argmax(clearance, axis=0)
        raw = np.choose(choice, [from_one, from_zero, from_infinity])
        raw = np.where(z == 1.0, 0.0, np.where(z == 0.0, self.h0_zero, raw))
        value = raw / self.h0_infinity
        return value[()] if value.ndim == 0 else value

    def f(self, Z):
        """ Strip version of the map, f(Z) = h(exp Z) """
        Z = np.asarray(Z, dtype=complex)
        if np.any((Z.imag < 0) | (Z.imag > STRIP_HEIGHT)):
            raise DomainError("f is evaluated on the closed strip")
        return self.h(np.exp(Z))

    def f_prime(self, Z):
        z = np.exp(np.asarray(Z, dtype=complex))
        return self.h_prime(z) * z


def _interval_distance(s):
    """ Distance from `s` to the interval [0, 1], elementwise """
    return np.abs(s - np.clip(s.real, 0.0, 1.0))


def _jacobi_rule(gamma, n=JACOBI_NODES):
    """ Nodes on [0, 1] and weights for the weight function s^gamma """
    x, w = special.roots_jacobi(n, 0.0, gamma)
    return (1.0 + x) / 2.0, w * 2.0 ** (-gamma - 1.0)


def sc_map_build(kappa, alpha):
    """
    Build the Schwarz-Christoffel map of the strip onto the triangle whose
    hitting-probability barycentric coordinates describe dipolar SLE with
    drift.

    The angle at B = h(oo) is 2(1 - alpha) pi / kappa and the one at
    C = h(0) is 2(1 + alpha) pi / kappa, as the exponents of h' dictate.

    Arguments:
    - `kappa`: SLE parameter, kappa > 4
    - `alpha`: drift, |alpha| < 1
    """
    if not kappa > 4:
        raise ParameterRange("kappa must exceed 4 (angle at A is 1 - 4/kappa)")
    if not -1 < alpha < 1:
        raise ParameterRange("alpha must lie in (-1, 1)")
    p = -1.0 + 2.0 * (1.0 + alpha) / kappa
    q = -4.0 / kappa
    e = -p - q - 2.0
    # h0(z) = integral from 1 to z of z^p (z - 1)^q
    h0_zero = cmath.exp(1j * math.pi * (q + 1.0)) * special.beta(q + 1.0, p + 1.0)
    h0_infinity = float(special.beta(q + 1.0, -p - q - 1.0))
    # angle at h(0) comes from the exponent p, angle at h(oo) from -1 - p - q
    angleA = (1.0 - 4.0 / kappa) * math.pi
    angleB = 2.0 * (1.0 - alpha) / kappa * math.pi
    angleC = 2.0 * (1.0 + alpha) / kappa * math.pi
    triangle = TriangleSpec(angleA, angleB, angleC,
                            0j, 1 + 0j, h0_zero / h0_infinity)
    nodes = {"one": _jacobi_rule(q), "zero": _jacobi_rule(p),
             "infinity": _jacobi_rule(e)}
    return ScMap(kappa=kappa, alpha=alpha, triangle=triangle, p=p, q=q,
                 norm=1.0 / h0_infinity, h0_zero=h0_zero,
                 h0_infinity=h0_infinity, nodes=nodes)
