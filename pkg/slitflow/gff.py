"""
A mode-truncated Gaussian free field on a rectangle and its pairings with
test functions.

The field has covariance 2G, G the Dirichlet Green's function normalized
as log|z1 - conj z2| - log|z1 - z2| on H. With the Dirichlet eigenpairs
(lambda_k, e_k) of the rectangle, 2G = sum 4 pi / lambda_k e_k (x) e_k, so
a sample is sum c_k e_k with c_k = xi_k sqrt(4 pi / lambda_k).

Pairings are midpoint sums over a cell-centred mesh. Energy products
integrate the log singularity exactly over nearby cells and use the
Green's function's smooth part everywhere else.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, spatial, stats

from slitflow import ensemble, flows
from slitflow.conformal import (DomainError, ParameterRange,
                                RectangleToHalfPlane)
from slitflow.reports import McReport

log = logging.getLogger(__name__)

class SupportViolation(ValueError): pass
class InverseFailure(ArithmeticError): pass

NEWTON_TOL = 1e-10
NEWTON_ITER = 50
NEAR_CELLS = 3
QUAD_CELLS = 16
MESH = 256
MODES = 64 * 64


@dataclass(frozen=True)
class RectDomain:
    """
    The rectangle [x0, x1] x [y0, y1] of the closed upper half-plane with
    an M x M cell-centred mesh and a cutoff of K modes.
    """

    x0: float
    x1: float
    y0: float
    y1: float
    mesh: int = MESH
    modes: int = MODES

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ParameterRange("degenerate rectangle")
        if self.y0 < 0:
            raise DomainError("rectangle must lie in the closed upper half-plane")
        if self.mesh < 2 or self.modes < 1:
            raise ParameterRange("need mesh >= 2 and at least one mode")
        if self.modes > self.mesh ** 2:
            raise ParameterRange("K = %d modes exceed the %d x %d mesh"
                                 % (self.modes, self.mesh, self.mesh))

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def hx(self):
        return self.width / self.mesh

    @property
    def hy(self):
        return self.height / self.mesh

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def xs(self):
        return self.x0 + (np.arange(self.mesh) + 0.5) * self.hx

    @property
    def ys(self):
        return self.y0 + (np.arange(self.mesh) + 0.5) * self.hy

    @property
    def points(self):
        """ Cell centres, indexed [i, j] for x_i + i y_j """
        return self.xs[:, None] + 1j * self.ys[None, :]

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return ((z.real > self.x0) & (z.real < self.x1)
                & (z.imag > self.y0) & (z.imag < self.y1))

    def get_attrs(self):
        return {'x0': self.x0, 'x1': self.x1, 'y0': self.y0, 'y1': self.y1,
                'mesh': self.mesh, 'K': self.modes}


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """
    The K lowest Dirichlet eigenpairs of a rectangle,
    e_mn = 2 / sqrt(W H) sin(m pi (x - x0) / W) sin(n pi (y - y0) / H),
    lambda_mn = pi^2 (m^2 / W^2 + n^2 / H^2), in ascending order.
    """

    domain: RectDomain
    m: np.ndarray
    n: np.ndarray
    eigenvalues: np.ndarray
    sx: np.ndarray = field(repr=False)
    sy: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.eigenvalues.size

    @property
    def norm(self):
        return 2.0 / math.sqrt(self.domain.width * self.domain.height)

    def _sines(self, z):
        dom = self.domain
        z = np.asarray(z, dtype=complex).ravel()
        mx = np.arange(1, self.sx.shape[0] + 1)[:, None]
        ny = np.arange(1, self.sy.shape[0] + 1)[:, None]
        inside = dom.contains(z)
        sx = np.sin(mx * math.pi * (z.real - dom.x0) / dom.width) * inside
        sy = np.sin(ny * math.pi * (z.imag - dom.y0) / dom.height)
        return sx, sy

    def evaluate(self, z):
        """ e_k(z) for every mode, shape z.shape + (K,); zero outside """
        z = np.asarray(z, dtype=complex)
        sx, sy = self._sines(z)
        values = self.norm * sx[self.m - 1].T * sy[self.n - 1].T
        return values.reshape(z.shape + (self.size,))

    def grid(self, coefficients):
        """ (mmax, nmax) array holding the coefficient of each (m, n) """
        table = np.zeros((self.sx.shape[0], self.sy.shape[0]))
        table[self.m - 1, self.n - 1] = coefficients
        return table

    def synthesize(self, coefficients, z=None):
        """ sum_k c_k e_k on the mesh, or at the points `z` """
        table = self.grid(coefficients)
        if z is None:
            return self.norm * self.sx.T @ table @ self.sy
        z = np.asarray(z, dtype=complex)
        sx, sy = self._sines(z)
        values = self.norm * np.einsum('mi,mn,ni->i', sx, table, sy)
        return values.reshape(z.shape)

    def mode_values(self, k):
        return self.norm * np.outer(self.sx[self.m[k] - 1], self.sy[self.n[k] - 1])

    def project(self, values):
        """ (e_k, f) for f given on the mesh, by the midpoint rule """
        values = np.asarray(values, dtype=float)
        table = self.sx @ values @ self.sy.T
        return self.norm * self.domain.cell_area * table[self.m - 1, self.n - 1]


@lru_cache(maxsize=8)
def eigen_basis(dom):
    """
    Enumerate (m, n) pairs under a Weyl-law bound, enlarged until at least
    K pairs qualify, and keep the K smallest eigenvalues. Ties are broken
    by (m, n).
    """
    W, H, K = dom.width, dom.height, dom.modes
    bound = 1.5 * 4.0 * math.pi * K / (W * H) + math.pi ** 2 * (1 / W ** 2 + 1 / H ** 2)
    while True:
        mmax = int(W * math.sqrt(bound) / math.pi)
        m = np.arange(1, mmax + 1)
        nmax = np.floor(H * np.sqrt(np.maximum(bound - (math.pi * m / W) ** 2, 0.0))
                        / math.pi).astype(int)
        if nmax.sum() >= K:
            break
        bound *= 2.0
    mm = np.repeat(m, nmax)
    nn = np.concatenate([np.arange(1, k + 1) for k in nmax])
    lam = math.pi ** 2 * (mm ** 2 / W ** 2 + nn ** 2 / H ** 2)
    order = np.lexsort((nn, mm, lam))[:K]
    mm, nn, lam = mm[order], nn[order], lam[order]
    if max(mm.max(), nn.max()) >= dom.mesh:
        raise ParameterRange("mode (%d, %d) is not resolved by a %d-cell mesh"
                             % (mm.max(), nn.max(), dom.mesh))
    sx = np.sin(np.arange(1, mm.max() + 1)[:, None] * math.pi
                * (dom.xs[None, :] - dom.x0) / W)
    sy = np.sin(np.arange(1, nn.max() + 1)[:, None] * math.pi
                * (dom.ys[None, :] - dom.y0) / H)
    log.debug("eigenbasis: %d modes, lambda in [%.4g, %.4g]", K, lam[0], lam[-1])
    return EigenBasis(dom, mm, nn, lam, sx, sy)


# Test functions


@dataclass(frozen=True)
class TestFn:
    """ amplitude * exp(-1 / (1 - |z - center|^2 / radius^2)) on the disc """

    __test__ = False

    center: complex
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterRange("bump radius must be positive")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        r2 = np.abs(z - self.center) ** 2 / self.radius ** 2
        inside = r2 < 1.0
        value = np.zeros(r2.shape)
        value[inside] = self.amplitude * np.exp(-1.0 / (1.0 - r2[inside]))
        return value[()] if value.ndim == 0 else value

    def bounds(self):
        c, r = complex(self.center), self.radius
        return c.real - r, c.real + r, c.imag - r, c.imag + r

    def sample_points(self, h):
        """ Lattice points of spacing h covering the closed disc """
        c, r = complex(self.center), self.radius
        k = int(math.ceil(r / h)) + 1
        offsets = np.arange(-k, k + 1) * h
        z = (c + offsets[:, None] + 1j * offsets[None, :]).ravel()
        return z[np.abs(z - c) <= r + h]


@dataclass(frozen=True, eq=False)
class TransportedFn:
    """
    The test function |(w^{-1})'|^2 p(w^{-1}) carried forward by a
    conformal map w with `__call__` and `derivative`. w^{-1} is found by
    Newton's method seeded from the forward image of a grid on supp p.
    """

    __test__ = False

    inner: object
    w: object
    spacing: float = None
    seeds: tuple = field(default=None, repr=False)

    def __post_init__(self):
        lo_x, hi_x, lo_y, hi_y = self.inner.bounds()
        spacing = self.spacing or min(hi_x - lo_x, hi_y - lo_y) / QUAD_CELLS
        pre = self.inner.sample_points(spacing)
        image = np.asarray(self.w(pre), dtype=complex)
        object.__setattr__(self, 'spacing', spacing)
        object.__setattr__(self, 'seeds', (pre, image))

    def bounds(self):
        image = self.seeds[1]
        return (image.real.min(), image.real.max(),
                image.imag.min(), image.imag.max())

    def sample_points(self, h):
        return self.seeds[1]

    def inverse(self, zeta):
        """ w^{-1}(zeta) and a mask of the points near the image of supp p """
        zeta = np.asarray(zeta, dtype=complex).ravel()
        pre, image = self.seeds
        tree = spatial.cKDTree(np.column_stack([image.real, image.imag]))
        if image.size > 1:
            gaps, _ = tree.query(np.column_stack([image.real, image.imag]), k=2)
            reach = 2.0 * gaps[:, 1].max()
        else:
            reach = self.spacing
        dist, index = tree.query(np.column_stack([zeta.real, zeta.imag]))
        near = dist <= reach
        z = pre[index[near]].astype(complex)
        target = zeta[near]
        done = np.zeros(z.size, dtype=bool)
        for _ in range(NEWTON_ITER):
            with np.errstate(all='ignore'):
                gap = np.asarray(self.w(z)) - target
                done = np.abs(gap) <= NEWTON_TOL * np.maximum(1.0, np.abs(target))
                if done.all():
                    break
                z = np.where(done, z, z - gap / np.asarray(self.w.derivative(z)))
        if not done.all():
            raise InverseFailure("Newton inversion did not converge at %d point(s)"
                                 % int((~done).sum()))
        out = np.full(zeta.size, np.nan + 0j)
        out[near] = z
        return out, near

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        z, near = self.inverse(zeta)
        value = np.zeros(zeta.size)
        zn = z[near]
        value[near] = (np.asarray(self.inner(zn))
                       / np.abs(np.asarray(self.w.derivative(zn))) ** 2)
        value = value.reshape(zeta.shape)
        return value[()] if value.ndim == 0 else value


def transport(p, w):
    return TransportedFn(p, w)


def mesh_values(dom, p):
    """
    Values of a test function on the mesh of `dom`. Arrays pass through;
    test functions must keep their support strictly inside the rectangle.
    """
    if isinstance(p, np.ndarray):
        if p.shape != (dom.mesh, dom.mesh):
            raise ValueError("mesh array has shape %r" % (p.shape,))
        return p
    lo_x, hi_x, lo_y, hi_y = p.bounds()
    if not (lo_x > dom.x0 and hi_x < dom.x1 and lo_y > dom.y0 and hi_y < dom.y1):
        raise SupportViolation("test function support leaves the rectangle")
    return np.asarray(p(dom.points), dtype=float)


# Field samples


@dataclass(frozen=True, eq=False)
class GffSample:
    """ One mode-truncated field sample """

    basis: EigenBasis
    coefficients: np.ndarray
    seed: object = None
    path_id: int = 0

    def __call__(self, z):
        return self.basis.synthesize(self.coefficients, z)

    def values(self):
        return self.basis.synthesize(self.coefficients)

    def pair_mesh(self, values):
        return float(self.coefficients @ self.basis.project(values))

    def shifted(self, u):
        return ModifiedField(self, u)

    def header(self):
        return {'domain': self.basis.domain.get_attrs(), 'K': self.basis.size,
                'seed': self.seed, 'path_id': self.path_id}

    def to_bytes(self):
        return np.asarray(self.coefficients, dtype='<f8').tobytes()


@dataclass(frozen=True, eq=False)
class ModifiedField:
    """ Phi + u for a deterministic function u """

    field: GffSample
    u: object

    @property
    def basis(self):
        return self.field.basis

    def __call__(self, z):
        return self.field(z) + np.asarray(self.u(z))

    def pair_mesh(self, values):
        dom = self.basis.domain
        shift = math.fsum((np.asarray(self.u(dom.points)) * values).ravel())
        return self.field.pair_mesh(values) + shift * dom.cell_area


def sample_field(dom, seed, path_id=0):
    """ Independent N(0, 1) per mode, scaled by sqrt(4 pi / lambda_k) """
    basis = dom if isinstance(dom, EigenBasis) else eigen_basis(dom)
    gen = ensemble.path_stream(seed, path_id, ensemble.FIELD)
    xi = gen.standard_normal(basis.size)
    return GffSample(basis, xi * np.sqrt(4.0 * math.pi / basis.eigenvalues),
                     seed, path_id)


def single_mode(basis, k, value=1.0):
    coefficients = np.zeros(basis.size)
    coefficients[k] = value
    return GffSample(basis, coefficients)


def pair(field, p):
    """ (Phi, p) by mesh quadrature """
    return field.pair_mesh(mesh_values(field.basis.domain, p))


def spectral_energy(basis, p):
    """ sum_k (4 pi / lambda_k) (e_k, p)^2 """
    proj = basis.project(mesh_values(basis.domain, p))
    return math.fsum(4.0 * math.pi / basis.eigenvalues * proj ** 2)


# Green's functions as smooth parts: G(z1, z2) = -log|z1 - z2| + regular


class HalfPlaneGreen(object):
    """ regular part log|z1 - conj z2| """

    def regular(self, z1, z2):
        return np.log(np.abs(z1 - np.conj(z2)))


class PulledBackGreen(object):
    """
    Green's function of the domain of a conformal map w onto H,
    G_H(w(z1), w(z2)). On the diagonal the regular part is
    log(2 Im w) - log|w'|.
    """

    def __init__(self, w):
        self.w = w

    def regular(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        w1 = np.asarray(self.w(z1), dtype=complex)
        w2 = np.asarray(self.w(z2), dtype=complex)
        if np.any(w1.imag <= 0) or np.any(w2.imag <= 0):
            raise DomainError("map sends a quadrature point outside H")
        dz = z1 - z2
        same = dz == 0
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(same, np.asarray(self.w.derivative(z1)),
                             (w1 - w2) / np.where(same, 1.0, dz))
        return np.log(np.abs(w1 - np.conj(w2))) - np.log(np.abs(ratio))


def rectangle_green(dom):
    return PulledBackGreen(RectangleToHalfPlane(dom.x0, dom.x1, dom.y0, dom.y1))


class SampledMap(object):
    """ A map known only at the points it was simulated at """

    def __init__(self, z, w, logwp):
        self.z = np.asarray(z, dtype=complex).ravel()
        self.w = np.asarray(w, dtype=complex).ravel()
        self.logwp = np.asarray(logwp, dtype=complex).ravel()
        self.index = dict((complex(p), k) for k, p in enumerate(self.z))

    def _lookup(self, z):
        z = np.asarray(z, dtype=complex)
        try:
            idx = [self.index[complex(p)] for p in z.ravel()]
        except KeyError as e:
            raise DomainError("map was not sampled at %s" % e)
        return np.asarray(idx, dtype=int).reshape(z.shape)

    def __call__(self, z):
        return self.w[self._lookup(z)]

    def derivative(self, z):
        return np.exp(self.logwp[self._lookup(z)])


# Energy products


@lru_cache(maxsize=None)
def cell_log_mean(di, dj, aspect=1.0):
    """
    E log|(di + s) + i aspect (dj + t)| for independent s, t with the tent
    density 1 - |s| on (-1, 1): the mean log distance, in units of the
    cell width, between uniform points of two cells offset by (di, dj).
    """
    total = 0.0
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            value, _ = integrate.dblquad(
                lambda t, s: 0.5 * np.log((di + sx * s) ** 2
                                          + aspect ** 2 * (dj + sy * t) ** 2)
                * (1.0 - s) * (1.0 - t),
                0.0, 1.0, 0.0, 1.0, epsabs=1e-12, epsrel=1e-10)
            total += value
    return total


@dataclass(frozen=True, eq=False)
class Quadrature:
    """ Cells of a common lattice carrying the supports of p and q """

    hx: float
    hy: float
    zp: np.ndarray
    zq: np.ndarray
    vp: np.ndarray
    vq: np.ndarray
    ip: np.ndarray
    iq: np.ndarray

    @property
    def cell_area(self):
        return self.hx * self.hy


def _lattice(p, ox, oy, hx, hy, shape=None):
    if shape is not None:
        i, j = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing='ij')
    else:
        lo_x, hi_x, lo_y, hi_y = p.bounds()
        i0, i1 = int(math.floor((lo_x - ox) / hx)), int(math.ceil((hi_x - ox) / hx))
        j0, j1 = int(math.floor((lo_y - oy) / hy)), int(math.ceil((hi_y - oy) / hy))
        i, j = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing='ij')
    z = ox + (i + 0.5) * hx + 1j * (oy + (j + 0.5) * hy)
    v = np.asarray(p(z), dtype=float)
    keep = v != 0
    return z[keep], v[keep], np.column_stack([i[keep], j[keep]])


def quadrature(p, q=None, mesh=None, cells=QUAD_CELLS):
    """
    Supports of p and q on one lattice: the mesh of a RectDomain when
    given, otherwise a square lattice through 0 with `cells` cells across
    the smaller radius.
    """
    q = p if q is None else q
    if mesh is not None:
        hx, hy, ox, oy = mesh.hx, mesh.hy, mesh.x0, mesh.y0
        mesh_values(mesh, p)
        mesh_values(mesh, q)
        shape = (mesh.mesh, mesh.mesh)
    else:
        radii = [f.radius for f in (p, q) if hasattr(f, 'radius')]
        if not radii:
            raise ValueError("need a mesh for test functions without a radius")
        hx = hy = min(radii) / cells
        ox = oy = 0.0
        shape = None
    zp, vp, ip = _lattice(p, ox, oy, hx, hy, shape)
    zq, vq, iq = (zp, vp, ip) if q is p else _lattice(q, ox, oy, hx, hy, shape)
    return Quadrature(hx, hy, zp, zq, vp, vq, ip, iq)


def log_kernel(quad):
    """ Cell-averaged log|z1 - z2| between the cells of p and of q """
    d = quad.ip[:, None, :] - quad.iq[None, :, :]
    di, dj = np.abs(d[..., 0]), np.abs(d[..., 1])
    with np.errstate(divide='ignore'):
        kernel = np.log(np.abs(quad.zp[:, None] - quad.zq[None, :]))
    near = (di <= NEAR_CELLS) & (dj <= NEAR_CELLS)
    aspect = quad.hy / quad.hx
    table = np.array([[cell_log_mean(a, b, aspect) for b in range(NEAR_CELLS + 1)]
                      for a in range(NEAR_CELLS + 1)])
    kernel[near] = math.log(quad.hx) + table[di[near], dj[near]]
    return kernel


def energy_product(p, q, green, mesh=None, quad=None):
    """
    (p, q)_E = integral of 2 G(z1, z2) p(z1) q(z2) over D x D.

    Arguments:
    - `green`: an evaluator with `regular(z1, z2)`, the Green's function
      plus log|z1 - z2|
    - `mesh`: RectDomain whose mesh is used as the lattice; optional
    - `quad`: a precomputed Quadrature, overriding `mesh`
    """
    quad = quad or quadrature(p, q, mesh)
    if quad.vp.size == 0 or quad.vq.size == 0:
        return 0.0
    kernel = green.regular(quad.zp[:, None], quad.zq[None, :]) - log_kernel(quad)
    value = 2.0 * quad.cell_area ** 2 * (quad.vp @ kernel @ quad.vq)
    return float(value)


# Pullbacks


def pullback_pair(field, w, p, method='source', spacing=None):
    """
    (Phi o w, p) for a conformal map w into the field's domain.

    'source' sums Phi(w(z)) p(z) over a lattice on supp p; it only needs w
    at the lattice points. 'transport' pairs Phi on its own mesh with the
    transported test function |(w^{-1})'|^2 p(w^{-1}), inverting w by
    Newton's method.
    """
    if method == 'transport':
        return pair(field, TransportedFn(p, w, spacing))
    if method != 'source':
        raise ValueError("unknown pullback method %r" % method)
    quad = quadrature(p)
    image = np.asarray(w(quad.zp), dtype=complex)
    return float(np.dot(field(image), quad.vp) * quad.cell_area)


# Coupling with the flow


def default_domain():
    return RectDomain(-12.0, 12.0, 0.0, 24.0, MESH, MODES)


def default_bump():
    return TestFn(2j, 0.5)


@dataclass(frozen=True, eq=False)
class CoupledSample:
    """ (Phi o w_T, p) + (u_T, p), with its two parts """

    value: float
    field_part: float
    mean_part: float
    rejected: bool
    outside: int = 0


def coupled_value(field, u, w, logwp, swallowed, points, weights, area):
    """ One realization from the flow's values at the support points """
    if np.any(swallowed):
        return CoupledSample(float('nan'), float('nan'), float('nan'), True)
    dom = field.basis.domain
    outside = int((~dom.contains(w)).sum())
    field_part = float(np.dot(field(w), weights) * area)
    mean_part = float(np.dot(u.pullback(w, logwp), weights) * area)
    return CoupledSample(field_part + mean_part, field_part, mean_part, False, outside)


def coupled_sample(model, u, T, p, seed, path_id=0, dt=1e-3, dom=None):
    """
    One joint sample of the flow (driving stream of `path_id`) and an
    independent field (field stream of the same path id).
    """
    dom = dom or default_domain()
    quad = quadrature(p, mesh=dom)
    field = sample_field(dom, seed, path_id)
    if T == 0:
        return coupled_value(field, u, quad.zp, np.zeros_like(quad.zp),
                             np.zeros(quad.zp.size, dtype=bool),
                             quad.zp, quad.vp, quad.cell_area)
    driving = flows.sample_driving(model.kappa, model.alpha, T, dt, seed, path_id)
    path = flows.integrate_slit_flow(model, quad.zp, driving)
    return coupled_value(field, u, path.w[-1], path.logwp[-1], path.swallowed,
                         quad.zp, quad.vp, quad.cell_area)


@dataclass(frozen=True, eq=False)
class CouplingStats:
    """ Ensemble statistics of the coupled pairing """

    values: np.ndarray
    rejected: np.ndarray
    mean_target: float
    energy_half_plane: float
    energy_rectangle: float
    mean_report: object
    variance_report: object
    ks_statistic: float
    ks_critical: float

    @property
    def ks_passed(self):
        return self.ks_statistic < self.ks_critical

    @property
    def passed(self):
        return self.mean_report.passed and self.variance_report.passed and self.ks_passed

    def rows(self):
        yield dict(stat='mean', value=self.mean_report.mean, se=self.mean_report.se,
                   n=self.mean_report.n, target=self.mean_target,
                   passed=self.mean_report.passed)
        yield dict(stat='variance', value=self.variance_report.mean,
                   se=self.variance_report.se, n=self.variance_report.n,
                   target=self.energy_half_plane, passed=self.variance_report.passed)
        yield dict(stat='ks', value=self.ks_statistic, se=None,
                   n=self.mean_report.n, target=self.ks_critical,
                   passed=self.ks_passed)
        yield dict(stat='energy_rectangle', value=self.energy_rectangle, se=None,
                   n=None, target=self.energy_half_plane, passed=None)
        yield dict(stat='rejected', value=int(self.rejected.sum()), se=None,
                   n=self.rejected.size, target=0, passed=None)


def variance_of_variance(samples):
    """ Estimated variance of the unbiased sample variance """
    x = np.asarray(samples, dtype=float)
    n = x.size
    d = x - x.mean()
    s2 = math.fsum(d ** 2) / (n - 1)
    m4 = math.fsum(d ** 4) / n
    return max((m4 - s2 * s2 * (n - 3) / (n - 1)) / n, 0.0)


def coupled_ensemble(model, u, p=None, T=0.5, dt=1e-3, seed=0, n_paths=5000,
                     dom=None, threads=1, variance_tolerance=0.05):
    """
    Joint flow and field samples of (Phi_H o w_T, p) + (u_T, p).

    The mean is tested against (u, p) by z-score; the variance against
    (p, p)_E(H) with relative tolerance `variance_tolerance`; normality
    by a Kolmogorov-Smirnov test at the 1% level. Samples whose support
    points are swallowed are rejected and counted.
    """
    dom = dom or default_domain()
    p = p or default_bump()
    basis = eigen_basis(dom)
    quad = quadrature(p, mesh=dom)
    run = flows.run_flows(model, quad.zp, T, dt, seed, n_paths, threads)

    def chunk(ids):
        out = []
        for i in ids:
            sample = coupled_value(sample_field(basis, seed, i), u, run.w[i],
                                   run.logwp[i], run.swallowed[i], quad.zp,
                                   quad.vp, quad.cell_area)
            out.append((sample.value, sample.rejected, sample.outside))
        return out

    parts = [item for part in ensemble.map_chunks(chunk, n_paths, threads) for item in part]
    values = np.array([v for v, _, _ in parts])
    rejected = np.array([r for _, r, _ in parts], dtype=bool)
    outside = sum(o for _, _, o in parts)
    if rejected.any():
        log.warning("%d of %d coupled samples rejected: support swallowed",
                    int(rejected.sum()), n_paths)
    if outside:
        log.warning("%d image points left the field rectangle", outside)
    kept = values[~rejected]
    mean_target = float(np.dot(u(quad.zp), quad.vp) * quad.cell_area)
    energy_h = energy_product(p, p, HalfPlaneGreen(), quad=quad)
    energy_r = energy_product(p, p, rectangle_green(dom), quad=quad)
    kappa, alpha = float(model.kappa), float(model.alpha)
    mean_report = ensemble.accumulate([kept]).report(
        "coupling mean", mean_target, seed=seed, dt=dt, kappa=kappa, alpha=alpha)
    sample_var = float(np.var(kept, ddof=1)) if kept.size > 1 else 0.0
    variance_report = McReport("coupling variance", kept.size, sample_var,
                               variance_of_variance(kept) * kept.size if kept.size > 3 else 0.0,
                               target=energy_h, seed=seed, dt=dt, kappa=kappa,
                               alpha=alpha, rel_tolerance=variance_tolerance,
                               scale=energy_h)
    standardized = (kept - mean_target) / math.sqrt(energy_h)
    ks = stats.kstest(standardized, 'norm')
    critical = float(stats.kstwo.ppf(0.99, kept.size))
    return CouplingStats(values, rejected, mean_target, energy_h, energy_r,
                         mean_report, variance_report, float(ks.statistic), critical)
