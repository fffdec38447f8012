"""Reference elements: nodal bases, interpolation nodes, derivative operators
and cubature rules for triangles and quadrilaterals.

Conventions
-----------
Reference triangle has vertices (-1,-1), (1,-1), (-1,1); reference quad is
[-1,1]^2.  Faces are numbered counter-clockwise starting from the face that
joins vertex 0 to vertex 1, and every face is parametrized by t in [-1,1]
running from its first to its second vertex.  Face cubature weights
therefore always sum to 2 (the length of the parameter interval).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from ._triangle_rules import TRIANGLE_RULES

TRI = "tri"
QUAD = "quad"

_KIND_ALIASES = {
    "tri": TRI, "triangle": TRI, "Triangle": TRI,
    "quad": QUAD, "quadrilateral": QUAD, "Quadrilateral": QUAD,
}

VERTICES = {
    TRI: np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]),
    QUAD: np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]),
}

MEASURE = {TRI: 2.0, QUAD: 4.0}


class RuleUnavailableError(ValueError):
    """Requested cubature strength exceeds the tabulated rules."""


def canonical_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown element kind {kind!r}") from None


def num_nodes(kind: str, k: int) -> int:
    kind = canonical_kind(kind)
    if kind == TRI:
        return (k + 1) * (k + 2) // 2
    return (k + 1) ** 2


# --------------------------------------------------------------------------
# 1D polynomials and rules


def jacobi_p(x, alpha, beta, n):
    """Orthonormal Jacobi polynomial P_n^(alpha, beta) evaluated at x."""
    x = np.asarray(x, dtype=float)
    gamma0 = (2.0 ** (alpha + beta + 1) / (alpha + beta + 1)
              * math.gamma(alpha + 1) * math.gamma(beta + 1)
              / math.gamma(alpha + beta + 1))
    p_prev = np.full_like(x, 1.0 / math.sqrt(gamma0))
    if n == 0:
        return p_prev
    gamma1 = (alpha + 1) * (beta + 1) / (alpha + beta + 3) * gamma0
    p = ((alpha + beta + 2) * x / 2 + (alpha - beta) / 2) / math.sqrt(gamma1)
    a_old = 2 / (2 + alpha + beta) * math.sqrt(
        (alpha + 1) * (beta + 1) / (alpha + beta + 3))
    for i in range(1, n):
        h1 = 2 * i + alpha + beta
        a_new = 2 / (h1 + 2) * math.sqrt(
            (i + 1) * (i + 1 + alpha + beta) * (i + 1 + alpha) * (i + 1 + beta)
            / (h1 + 1) / (h1 + 3))
        b_new = -(alpha ** 2 - beta ** 2) / h1 / (h1 + 2)
        p_prev, p = p, (-a_old * p_prev + (x - b_new) * p) / a_new
        a_old = a_new
    return p


def grad_jacobi_p(x, alpha, beta, n):
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return math.sqrt(n * (n + alpha + beta + 1)) * jacobi_p(x, alpha + 1, beta + 1, n - 1)


def gauss_legendre_1d(n: int):
    """n-point Gauss-Legendre rule on [-1, 1], exact for degree 2n-1."""
    if n < 1:
        raise ValueError("Gauss-Legendre rule needs n >= 1")
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_lobatto_1d(n: int) -> np.ndarray:
    """n Gauss-Lobatto-Legendre points on [-1, 1] (n >= 2), ascending."""
    if n < 2:
        raise ValueError("Gauss-Lobatto needs at least 2 points")
    if n == 2:
        return np.array([-1.0, 1.0])
    interior, _ = roots_jacobi(n - 2, 1.0, 1.0)
    return np.concatenate([[-1.0], np.sort(interior), [1.0]])


# --------------------------------------------------------------------------
# Modal (orthonormal) bases


def _rs_to_ab(r, s):
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    a = np.full_like(r, -1.0)
    ok = np.abs(s - 1.0) > 1e-14
    a[ok] = 2.0 * (1.0 + r[ok]) / (1.0 - s[ok]) - 1.0
    return a, s


def _modal_indices(kind, k):
    if kind == TRI:
        return [(i, j) for i in range(k + 1) for j in range(k + 1 - i)]
    return [(i, j) for j in range(k + 1) for i in range(k + 1)]


def modal_basis(kind, k, points):
    """Orthonormal modal basis at points; returns (Npts, Nmodes)."""
    r, s = points[:, 0], points[:, 1]
    out = np.empty((len(points), num_nodes(kind, k)))
    if kind == TRI:
        a, b = _rs_to_ab(r, s)
        for m, (i, j) in enumerate(_modal_indices(kind, k)):
            out[:, m] = (math.sqrt(2.0) * jacobi_p(a, 0, 0, i)
                         * jacobi_p(b, 2 * i + 1, 0, j) * (1 - b) ** i)
    else:
        for m, (i, j) in enumerate(_modal_indices(kind, k)):
            out[:, m] = jacobi_p(r, 0, 0, i) * jacobi_p(s, 0, 0, j)
    return out


def modal_gradient(kind, k, points):
    """Derivatives of the modal basis; returns (d/dr, d/ds), each (Npts, Nmodes)."""
    r, s = points[:, 0], points[:, 1]
    n = num_nodes(kind, k)
    dr = np.empty((len(points), n))
    ds = np.empty((len(points), n))
    if kind == TRI:
        a, b = _rs_to_ab(r, s)
        for m, (i, j) in enumerate(_modal_indices(kind, k)):
            fa = jacobi_p(a, 0, 0, i)
            dfa = grad_jacobi_p(a, 0, 0, i)
            gb = jacobi_p(b, 2 * i + 1, 0, j)
            dgb = grad_jacobi_p(b, 2 * i + 1, 0, j)
            half = 0.5 * (1 - b)
            ddr = dfa * gb
            dds = dfa * (gb * (0.5 * (1 + a)))
            if i > 0:
                ddr = ddr * half ** (i - 1)
                dds = dds * half ** (i - 1)
            tmp = dgb * half ** i
            if i > 0:
                tmp = tmp - 0.5 * i * gb * half ** (i - 1)
            dds = dds + fa * tmp
            scale = 2.0 ** (i + 0.5)
            dr[:, m] = ddr * scale
            ds[:, m] = dds * scale
    else:
        for m, (i, j) in enumerate(_modal_indices(kind, k)):
            dr[:, m] = grad_jacobi_p(r, 0, 0, i) * jacobi_p(s, 0, 0, j)
            ds[:, m] = jacobi_p(r, 0, 0, i) * grad_jacobi_p(s, 0, 0, j)
    return dr, ds


# --------------------------------------------------------------------------
# Interpolation nodes

# Warp-and-blend optimization parameters for orders 1..15.
_ALPHA_OPT = (0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
              1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258)


def _warp_factor(k, rout):
    lgl = gauss_lobatto_1d(k + 1)
    req = np.linspace(-1.0, 1.0, k + 1)
    veq = np.stack([jacobi_p(req, 0, 0, i) for i in range(k + 1)], axis=1)
    pmat = np.stack([jacobi_p(rout, 0, 0, i) for i in range(k + 1)], axis=0)
    lmat = np.linalg.solve(veq.T, pmat)
    warp = lmat.T @ (lgl - req)
    interior = np.abs(rout) < 1.0 - 1e-10
    sf = 1.0 - (interior * rout) ** 2
    return warp / sf + warp * (interior - 1.0)


def equispaced_triangle_nodes(k):
    pts = [(-1 + 2 * i / k, -1 + 2 * j / k) for j in range(k + 1) for i in range(k + 1 - j)]
    return np.array(pts, dtype=float)


def _alpha_optimized_triangle_nodes(k):
    alpha = _ALPHA_OPT[k - 1] if k <= 15 else 5.0 / 3.0
    l1, l3 = [], []
    for n in range(k + 1):
        for m in range(k + 1 - n):
            l1.append(n / k)
            l3.append(m / k)
    l1 = np.array(l1)
    l3 = np.array(l3)
    l2 = 1.0 - l1 - l3
    x = -l2 + l3
    y = (-l2 - l3 + 2 * l1) / math.sqrt(3.0)
    blend1 = 4 * l2 * l3
    blend2 = 4 * l1 * l3
    blend3 = 4 * l1 * l2
    warp1 = blend1 * _warp_factor(k, l3 - l2) * (1 + (alpha * l1) ** 2)
    warp2 = blend2 * _warp_factor(k, l1 - l3) * (1 + (alpha * l2) ** 2)
    warp3 = blend3 * _warp_factor(k, l2 - l1) * (1 + (alpha * l3) ** 2)
    x = x + warp1 + math.cos(2 * math.pi / 3) * warp2 + math.cos(4 * math.pi / 3) * warp3
    y = y + math.sin(2 * math.pi / 3) * warp2 + math.sin(4 * math.pi / 3) * warp3
    # equilateral -> reference right triangle
    b1 = (math.sqrt(3.0) * y + 1.0) / 3.0
    b2 = (-3.0 * x - math.sqrt(3.0) * y + 2.0) / 6.0
    b3 = (3.0 * x - math.sqrt(3.0) * y + 2.0) / 6.0
    r = -b2 + b3 - b1
    s = -b2 - b3 + b1
    pts = np.stack([r, s], axis=1)
    # snap roundoff on the edges so shared-face nodes match bitwise
    pts[np.abs(pts + 1.0) < 1e-13] = -1.0
    edge = np.abs(pts.sum(axis=1)) < 1e-13
    pts[edge, 1] = -pts[edge, 0]
    return pts


@lru_cache(maxsize=None)
def _interpolation_nodes_cached(kind, k):
    if kind == TRI:
        if k == 1:
            return VERTICES[TRI].copy()
        return _alpha_optimized_triangle_nodes(k)
    g = gauss_lobatto_1d(k + 1)
    rr, ss = np.meshgrid(g, g, indexing="xy")
    return np.stack([rr.ravel(), ss.ravel()], axis=1)


def interpolation_nodes(kind: str, k: int) -> np.ndarray:
    """Nodal points of order k: alpha-optimized (tri) or tensor Gauss-Lobatto (quad)."""
    if k < 1:
        raise ValueError("order k must be >= 1")
    return _interpolation_nodes_cached(canonical_kind(kind), k).copy()


# --------------------------------------------------------------------------
# Cubature


def max_triangle_strength() -> int:
    return max(TRIANGLE_RULES)


def triangle_volume_cubature(strength: int):
    """Symmetric positive-weight triangle rule exact to degree ``strength``."""
    strength = max(int(strength), 1)
    for deg in sorted(TRIANGLE_RULES):
        if deg >= strength:
            pts, wts = TRIANGLE_RULES[deg]
            return np.array(pts, dtype=float), np.array(wts, dtype=float)
    raise RuleUnavailableError(
        f"triangle cubature of strength {strength} unavailable; "
        f"maximum supported strength is {max_triangle_strength()}")


def quad_volume_cubature(strength: int):
    n = max(1, math.ceil((strength + 1) / 2))
    x, w = gauss_legendre_1d(n)
    rr, ss = np.meshgrid(x, x, indexing="xy")
    ww = np.outer(w, w)
    return np.stack([rr.ravel(), ss.ravel()], axis=1), ww.ravel()


def volume_cubature(kind, strength):
    kind = canonical_kind(kind)
    if kind == TRI:
        return triangle_volume_cubature(strength)
    return quad_volume_cubature(strength)


def face_cubature(strength):
    return gauss_legendre_1d(max(1, math.ceil((strength + 1) / 2)))


def face_vertex_pairs(kind):
    nv = len(VERTICES[canonical_kind(kind)])
    return [(i, (i + 1) % nv) for i in range(nv)]


def face_param_to_ref(kind, face, t):
    """Map face parameter t in [-1,1] to reference-element coordinates."""
    verts = VERTICES[canonical_kind(kind)]
    a, b = face_vertex_pairs(kind)[face]
    t = np.asarray(t, dtype=float)[..., None]
    return 0.5 * (1 - t) * verts[a] + 0.5 * (1 + t) * verts[b]


def face_tangent_ref(kind, face):
    """d r / d t along a face (constant for straight reference faces)."""
    verts = VERTICES[canonical_kind(kind)]
    a, b = face_vertex_pairs(kind)[face]
    return 0.5 * (verts[b] - verts[a])


# --------------------------------------------------------------------------
# Reference element


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    """Nodal basis of order k plus volume/face cubature on one element kind.

    Arrays evaluated at cubature points are precomputed:

    ``vol_basis`` (Nq, Np), ``vol_grad`` (2, Nq, Np),
    ``face_basis`` (nfaces, Nfq, Np), ``face_grad`` (nfaces, 2, Nfq, Np),
    ``face_ref_points`` (nfaces, Nfq, 2).
    """

    kind: str
    k: int
    strength: int
    nodes: np.ndarray
    vol_points: np.ndarray
    vol_weights: np.ndarray
    face_points: np.ndarray
    face_weights: np.ndarray
    vandermonde: np.ndarray = field(repr=False)
    vol_basis: np.ndarray = field(repr=False)
    vol_grad: np.ndarray = field(repr=False)
    face_ref_points: np.ndarray = field(repr=False)
    face_basis: np.ndarray = field(repr=False)
    face_grad: np.ndarray = field(repr=False)

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def num_faces(self):
        return len(VERTICES[self.kind])

    @property
    def vol_cub(self):
        return self.vol_points, self.vol_weights

    @property
    def face_cub(self):
        return self.face_points, self.face_weights

    @property
    def measure(self):
        return MEASURE[self.kind]

    def basis_at(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.solve(self.vandermonde.T,
                               modal_basis(self.kind, self.k, points).T).T

    def grad_at(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        dr, ds = modal_gradient(self.kind, self.k, points)
        vt = self.vandermonde.T
        return (np.linalg.solve(vt, dr.T).T, np.linalg.solve(vt, ds.T).T)

    def face_maps(self, face):
        """Reference coordinates of face cubature points on ``face``."""
        return self.face_ref_points[face]

    def dump_csv(self):
        """Nodes and cubature rules as CSV, full float precision."""
        def f(x):
            return repr(float(x))

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["set", "index", "r", "s", "weight"])
        for i, (r, s) in enumerate(self.nodes):
            w.writerow(["node", i, f(r), f(s), ""])
        for i, ((r, s), wt) in enumerate(zip(self.vol_points, self.vol_weights)):
            w.writerow(["volume", i, f(r), f(s), f(wt)])
        for i, (t, wt) in enumerate(zip(self.face_points, self.face_weights)):
            w.writerow(["face", i, f(t), "", f(wt)])
        return buf.getvalue()


@lru_cache(maxsize=64)
def _build(kind, k, strength):
    nodes = interpolation_nodes(kind, k)
    vdm = modal_basis(kind, k, nodes)
    vol_pts, vol_wts = volume_cubature(kind, strength)
    face_pts, face_wts = face_cubature(strength)
    nf = len(VERTICES[kind])
    face_ref = np.stack([face_param_to_ref(kind, f, face_pts) for f in range(nf)])

    vt = vdm.T

    def nodal(m):
        return np.linalg.solve(vt, m.T).T

    vol_basis = nodal(modal_basis(kind, k, vol_pts))
    vdr, vds = modal_gradient(kind, k, vol_pts)
    vol_grad = np.stack([nodal(vdr), nodal(vds)])
    face_basis = np.stack([nodal(modal_basis(kind, k, p)) for p in face_ref])
    face_grad = []
    for p in face_ref:
        fdr, fds = modal_gradient(kind, k, p)
        face_grad.append(np.stack([nodal(fdr), nodal(fds)]))
    face_grad = np.stack(face_grad)
    arrays = [nodes, vol_pts, vol_wts, face_pts, face_wts, vdm, vol_basis, vol_grad,
              face_ref, face_basis, face_grad]
    for a in arrays:
        a.setflags(write=False)
    return ReferenceElement(kind, k, strength, *arrays)


def build_reference_element(kind: str, k: int, cubature_strength: int | None = None) -> ReferenceElement:
    """Build (and cache) the reference element of order ``k``.

    ``cubature_strength`` defaults to 2k and may not be lower.
    """
    kind = canonical_kind(kind)
    if k < 1:
        raise ValueError("order k must be >= 1")
    if cubature_strength is None:
        cubature_strength = 2 * k
    if cubature_strength < 2 * k:
        raise ValueError(f"cubature strength {cubature_strength} < 2k = {2 * k}")
    return _build(kind, int(k), int(cubature_strength))


def monomial_integral(kind, a, b):
    """Exact integral of r^a s^b over the reference element."""
    kind = canonical_kind(kind)
    if kind == QUAD:
        def one(p):
            return 0.0 if p % 2 else 2.0 / (p + 1)
        return one(a) * one(b)
    # r = 2x - 1, s = 2y - 1 on the unit triangle; expand binomially
    # in exact rationals: the alternating sum cancels badly in floating point
    total = Fraction(0)
    for i in range(a + 1):
        for j in range(b + 1):
            coef = math.comb(a, i) * math.comb(b, j) * 2 ** (i + j) * (-1) ** (a - i + b - j)
            total += Fraction(coef * math.factorial(i) * math.factorial(j), math.factorial(i + j + 2))
    return float(4 * total)
