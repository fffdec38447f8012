"""Structured "ToBeCurved" annulus meshes with polynomial geometry of order
k_g, and the metric terms evaluated at cubature points.

Every element is curved: geometry nodes are placed at the reference
interpolation nodes of order k_g in the rectilinear parameter square and then
pushed through the analytic annulus map, so the geometry interpolant is
globally C^0 and converges to the true curved domain as O(h^(k_g+1)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .reference import (QUAD, TRI, VERTICES, ReferenceElement, build_reference_element,
                        canonical_kind, face_param_to_ref, face_tangent_ref,
                        face_vertex_pairs, interpolation_nodes)

FROM_GEOMETRY = "from_geometry"
EXACT_ANNULUS = "exact_annulus"

_NORMAL_MODES = {
    "from_geometry": FROM_GEOMETRY, "FromGeometry": FROM_GEOMETRY,
    "exact_annulus": EXACT_ANNULUS, "ExactAnnulus": EXACT_ANNULUS, "exact": EXACT_ANNULUS,
}

# boundary tags of the parameter square
INNER, OUTER, THETA_START, THETA_END = "inner", "outer", "theta_start", "theta_end"
ARC_TAGS = (INNER, OUTER)


class InvertedElementError(ValueError):
    pass


class MeshConfigurationError(ValueError):
    pass


# --------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class AnnulusDomain:
    r_inner: float
    r_outer: float
    theta_start: float = 0.0
    theta_end: float = 0.5 * math.pi
    periodic: bool = False
    name: str = "quarter_annulus"

    @property
    def area(self):
        return 0.5 * (self.theta_end - self.theta_start) * (self.r_outer ** 2 - self.r_inner ** 2)

    @property
    def mean_arc_length(self):
        return 0.5 * (self.r_inner + self.r_outer) * (self.theta_end - self.theta_start)

    @property
    def width(self):
        return self.r_outer - self.r_inner


def QuarterAnnulus(r_inner=1.0, r_outer=1.384):
    return AnnulusDomain(r_inner, r_outer, 0.0, 0.5 * math.pi, False, "quarter_annulus")


def FullAnnulus(r_inner=0.5, r_outer=1.0):
    return AnnulusDomain(r_inner, r_outer, 0.0, 2.0 * math.pi, True, "full_annulus")


@dataclass(frozen=True)
class RectangleDomain:
    """Axis-aligned rectangle; the straight-sided debug path."""

    x0: float = -1.0
    x1: float = 1.0
    y0: float = -1.0
    y1: float = 1.0
    name: str = "rectangle"
    periodic: bool = False

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def mean_arc_length(self):
        return self.y1 - self.y0

    @property
    def width(self):
        return self.x1 - self.x0


def annulus_map(p, domain):
    """Map parameter points (rho_hat, theta_hat) in [0,1]^2 to physical (x, y)."""
    p = np.asarray(p, dtype=float)
    if isinstance(domain, RectangleDomain):
        x = domain.x0 + p[..., 0] * (domain.x1 - domain.x0)
        y = domain.y0 + p[..., 1] * (domain.y1 - domain.y0)
        return np.stack([x, y], axis=-1)
    r = domain.r_inner + p[..., 0] * (domain.r_outer - domain.r_inner)
    th = domain.theta_start + p[..., 1] * (domain.theta_end - domain.theta_start)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


# --------------------------------------------------------------------------
# Mesh


@dataclass(eq=False)
class CurvedMesh:
    """Elements with order-k_g geometry nodes and face connectivity.

    ``interior_faces`` rows are (elem_L, face_L, elem_R, face_R, orientation)
    with orientation 1 meaning the right face parameter runs opposite to the
    left one (always the case for consistently oriented 2D meshes).
    """

    kind: str
    k_g: int
    nodes: np.ndarray              # (Ne, Ng, 2) physical geometry nodes
    param_nodes: np.ndarray        # (Ne, Ng, 2) nodes in the parameter square
    connectivity: np.ndarray       # (Ne, nverts) global vertex ids
    interior_faces: np.ndarray     # (Nif, 5)
    boundary_faces: np.ndarray     # (Nbf, 2) elem, face
    boundary_tags: np.ndarray      # (Nbf,) str
    domain: object
    ar_nominal: float = 1.0
    level: int = 0
    n_rho: int = 1
    n_theta: int = 1
    ar_realized: float = field(default=float("nan"))

    @property
    def num_elements(self):
        return len(self.nodes)

    @property
    def num_faces_per_element(self):
        return len(VERTICES[self.kind])

    def neighbors(self):
        """Element adjacency lists through interior faces."""
        nbrs = [[] for _ in range(self.num_elements)]
        for eL, _, eR, _, _ in self.interior_faces:
            nbrs[eL].append(int(eR))
            nbrs[eR].append(int(eL))
        return nbrs

    def vertex_coordinates(self):
        """Physical corner coordinates (Ne, nverts, 2)."""
        return self.nodes[:, _corner_node_indices(self.kind, self.k_g), :]


def _corner_node_indices(kind, k_g):
    nodes = interpolation_nodes(kind, k_g)
    idx = []
    for v in VERTICES[kind]:
        idx.append(int(np.argmin(np.linalg.norm(nodes - v, axis=1))))
    return idx


def _element_aspect_ratio(kind, corners):
    """Longest edge over the height relative to it: L^2 / (c A)."""
    nv = corners.shape[1]
    edges = np.stack([corners[:, (i + 1) % nv] - corners[:, i] for i in range(nv)], axis=1)
    lmax = np.linalg.norm(edges, axis=2).max(axis=1)
    x, y = corners[..., 0], corners[..., 1]
    area = 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1))
    c = 2.0 if kind == TRI else 1.0
    return lmax ** 2 / (c * area)


def _level0_counts(domain, ar_target, n_base):
    n_rho = int(n_base)
    # elements elongated along the arc: arc spacing = ar * radial spacing
    n_theta = round(domain.mean_arc_length * n_rho / (domain.width * ar_target))
    return n_rho, n_theta


def generate_tobecurved_annulus(kind, k_g, level, ar_target, domain, n_base=2,
                                n_theta_base=None):
    """Structured N_rho x N_theta mesh on the parameter square mapped to ``domain``.

    Level-0 counts are N_rho = ``n_base`` and N_theta chosen so that the
    arc-direction spacing is ``ar_target`` times the radial spacing; each
    level doubles both counts.  Triangles split each quad along the
    parameter-space lower-left -> upper-right diagonal.
    """
    kind = canonical_kind(kind)
    if level < 0:
        raise MeshConfigurationError("level must be >= 0")
    if ar_target <= 0:
        raise MeshConfigurationError("ar_target must be positive")
    n_rho0, n_theta0 = _level0_counts(domain, ar_target, n_base)
    if n_theta_base is not None:
        n_theta0 = int(n_theta_base)
    min_theta = 3 if domain.periodic else 1
    if n_rho0 < 1 or n_theta0 < min_theta:
        raise MeshConfigurationError(
            f"aspect ratio {ar_target} unreachable with n_base={n_base}: "
            f"N_rho={n_rho0}, N_theta={n_theta0} (need N_theta >= {min_theta})")
    n_rho, n_theta = n_rho0 * 2 ** level, n_theta0 * 2 ** level
    mesh = structured_mesh(kind, k_g, n_rho, n_theta, domain)
    mesh.ar_nominal = float(ar_target)
    mesh.level = int(level)
    return mesh


def structured_mesh(kind, k_g, n_rho, n_theta, domain):
    """Mesh of the parameter square with n_rho x n_theta cells mapped to ``domain``."""
    kind = canonical_kind(kind)
    if k_g < 1:
        raise MeshConfigurationError("geometry order must be >= 1")
    periodic = bool(getattr(domain, "periodic", False))
    nvr = n_rho + 1
    nvt = n_theta if periodic else n_theta + 1

    def vid(i, j):
        return (j % n_theta if periodic else j) * nvr + i

    cells = []
    param_corners = []
    for j in range(n_theta):
        for i in range(n_rho):
            p00 = (i / n_rho, j / n_theta)
            p10 = ((i + 1) / n_rho, j / n_theta)
            p11 = ((i + 1) / n_rho, (j + 1) / n_theta)
            p01 = (i / n_rho, (j + 1) / n_theta)
            v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if kind == QUAD:
                cells.append((v00, v10, v11, v01))
                param_corners.append((p00, p10, p11, p01))
            else:
                cells.append((v00, v10, v11))
                param_corners.append((p00, p10, p11))
                cells.append((v00, v11, v01))
                param_corners.append((p00, p11, p01))
    conn = np.array(cells, dtype=np.int64)
    pc = np.array(param_corners, dtype=float)

    ref_nodes = interpolation_nodes(kind, k_g)
    r, s = ref_nodes[:, 0], ref_nodes[:, 1]
    if kind == TRI:
        pn = (pc[:, None, 0] + (pc[:, None, 1] - pc[:, None, 0]) * ((r + 1) / 2)[None, :, None]
              + (pc[:, None, 2] - pc[:, None, 0]) * ((s + 1) / 2)[None, :, None])
    else:
        a = ((1 - r) * (1 - s) / 4)[None, :, None]
        b = ((1 + r) * (1 - s) / 4)[None, :, None]
        c = ((1 + r) * (1 + s) / 4)[None, :, None]
        d = ((1 - r) * (1 + s) / 4)[None, :, None]
        pn = a * pc[:, None, 0] + b * pc[:, None, 1] + c * pc[:, None, 2] + d * pc[:, None, 3]
    xy = annulus_map(pn, domain)

    interior, boundary, tags = _connect(kind, conn, pc)
    mesh = CurvedMesh(kind=kind, k_g=int(k_g), nodes=xy, param_nodes=pn, connectivity=conn,
                      interior_faces=interior, boundary_faces=boundary,
                      boundary_tags=tags, domain=domain, n_rho=n_rho, n_theta=n_theta)
    mesh.ar_realized = float(_element_aspect_ratio(kind, mesh.vertex_coordinates()).max())
    return mesh


def square_mesh(kind, n, k_g=1, side=2.0):
    """Straight-sided n x n mesh of a square of the given side centred at 0."""
    half = side / 2
    return structured_mesh(kind, k_g, n, n, RectangleDomain(-half, half, -half, half))


def _connect(kind, conn, param_corners):
    pairs = face_vertex_pairs(kind)
    seen = {}
    interior = []
    for e, cell in enumerate(conn):
        for f, (a, b) in enumerate(pairs):
            key = (min(cell[a], cell[b]), max(cell[a], cell[b]))
            if key in seen:
                e0, f0 = seen.pop(key)
                a0, b0 = pairs[f0]
                orient = 1 if (conn[e0][a0], conn[e0][b0]) == (cell[b], cell[a]) else 0
                interior.append((e0, f0, e, f, orient))
            else:
                seen[key] = (e, f)
    boundary = []
    tags = []
    for (e, f) in sorted(seen.values()):
        a, b = pairs[f]
        mid = 0.5 * (param_corners[e][a] + param_corners[e][b])
        if abs(mid[0]) < 1e-12:
            tag = INNER
        elif abs(mid[0] - 1) < 1e-12:
            tag = OUTER
        elif abs(mid[1]) < 1e-12:
            tag = THETA_START
        elif abs(mid[1] - 1) < 1e-12:
            tag = THETA_END
        else:
            raise MeshConfigurationError(f"unmatched interior face on element {e}")
        boundary.append((e, f))
        tags.append(tag)
    return (np.array(interior, dtype=np.int64).reshape(-1, 5),
            np.array(boundary, dtype=np.int64).reshape(-1, 2),
            np.array(tags, dtype=object))


# --------------------------------------------------------------------------
# Metric terms


@dataclass(eq=False)
class GeometryMaps:
    """Metric terms of the order-k_g geometry at the cubature points of ``ref``.

    Volume arrays have shape (Ne, Nq, ...); face arrays are stored for every
    element-face pair, shape (Ne, nfaces, Nfq, ...), with points in the order
    of that element's own face parameter.
    """

    normal_mode: str
    x_vol: np.ndarray
    jac: np.ndarray
    jac_det: np.ndarray
    inv_jac: np.ndarray
    x_face: np.ndarray
    face_jac: np.ndarray
    face_inv_jac: np.ndarray
    area_elem: np.ndarray
    normal: np.ndarray
    x_nodes: np.ndarray


def _geometry_eval(mesh, points):
    gref = build_reference_element(mesh.kind, mesh.k_g)
    basis = gref.basis_at(points)
    dr, ds = gref.grad_at(points)
    x = np.einsum("qn,end->eqd", basis, mesh.nodes)
    # jac[..., d, a] = d x_d / d r_a
    jac = np.stack([np.einsum("qn,end->eqd", dr, mesh.nodes),
                    np.einsum("qn,end->eqd", ds, mesh.nodes)], axis=-1)
    return x, jac


def _invert(jac):
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1] / det
    inv[..., 1, 1] = jac[..., 0, 0] / det
    inv[..., 0, 1] = -jac[..., 0, 1] / det
    inv[..., 1, 0] = -jac[..., 1, 0] / det
    return det, inv


def compute_geometry_maps(mesh: CurvedMesh, ref: ReferenceElement, normal_mode=FROM_GEOMETRY):
    """Evaluate J_v, inverse Jacobians, J_f and unit normals from the geometry interpolant."""
    try:
        mode = _NORMAL_MODES[normal_mode]
    except KeyError:
        raise ValueError(f"unknown normal mode {normal_mode!r}") from None
    if ref.kind != mesh.kind:
        raise ValueError("reference element kind does not match mesh")

    x_vol, jac = _geometry_eval(mesh, ref.vol_points)
    det, inv = _invert(jac)
    bad = np.nonzero((det <= 0).any(axis=1))[0]
    if len(bad):
        raise InvertedElementError(f"inverted element {int(bad[0])} (nonpositive Jacobian)")

    nf = ref.num_faces
    ne, nfq = mesh.num_elements, len(ref.face_points)
    x_face = np.empty((ne, nf, nfq, 2))
    face_jac = np.empty((ne, nf, nfq, 2, 2))
    for f in range(nf):
        xf, jf = _geometry_eval(mesh, ref.face_ref_points[f])
        x_face[:, f] = xf
        face_jac[:, f] = jf
    fdet, finv = _invert(face_jac)
    if (fdet <= 0).any():
        e = int(np.nonzero((fdet <= 0).any(axis=(1, 2)))[0][0])
        raise InvertedElementError(f"inverted element {e} (nonpositive Jacobian on a face)")

    tangents = np.stack([face_jac[:, f] @ face_tangent_ref(mesh.kind, f) for f in range(nf)], axis=1)
    area = np.linalg.norm(tangents, axis=-1)
    normal = np.stack([tangents[..., 1], -tangents[..., 0]], axis=-1) / area[..., None]

    if mode == EXACT_ANNULUS:
        if not isinstance(mesh.domain, AnnulusDomain):
            raise ValueError("exact annulus normals need an annulus domain")
        for (e, f), tag in zip(mesh.boundary_faces, mesh.boundary_tags):
            if tag in ARC_TAGS:
                xf = x_face[e, f]
                radial = xf / np.linalg.norm(xf, axis=-1, keepdims=True)
                normal[e, f] = -radial if tag == INNER else radial

    gref = build_reference_element(mesh.kind, mesh.k_g)
    x_nodes = np.einsum("qn,end->eqd", gref.basis_at(ref.nodes), mesh.nodes)
    return GeometryMaps(mode, x_vol, jac, det, inv, x_face, face_jac, finv, area, normal, x_nodes)


def discrete_area(mesh, ref=None):
    """|Omega_h| integrated with cubature on the polynomial geometry."""
    if ref is None:
        ref = build_reference_element(mesh.kind, max(mesh.k_g, 1), 2 * max(mesh.k_g, 1) + 2)
    _, jac = _geometry_eval(mesh, ref.vol_points)
    det, _ = _invert(jac)
    return float(np.sum(det * ref.vol_weights))


def mesh_size_h(mesh):
    """h = sqrt(|Omega| / N_elements) with |Omega| the analytic target-domain area.

    Using the exact domain measure keeps h ratios exactly 2 across levels;
    the cubature area of the discrete geometry is available from
    :func:`discrete_area`.
    """
    return math.sqrt(mesh.domain.area / mesh.num_elements)


def boundary_geometry_error(mesh, samples=11):
    """Max distance of geometry-interpolated arc points to the true circles."""
    t = np.linspace(-1.0, 1.0, samples)
    gref = build_reference_element(mesh.kind, mesh.k_g)
    err = 0.0
    for (e, f), tag in zip(mesh.boundary_faces, mesh.boundary_tags):
        if tag not in ARC_TAGS:
            continue
        pts = gref.basis_at(face_param_to_ref(mesh.kind, f, t)) @ mesh.nodes[e]
        radius = mesh.domain.r_inner if tag == INNER else mesh.domain.r_outer
        err = max(err, float(np.abs(np.linalg.norm(pts, axis=1) - radius).max()))
    return err


# --------------------------------------------------------------------------
# Text format and SVG


def write_mesh(mesh, stream):
    """Write the self-describing text mesh format."""
    dom = mesh.domain
    if isinstance(dom, AnnulusDomain):
        dline = f"{dom.name} {dom.r_inner!r} {dom.r_outer!r} {dom.theta_start!r} {dom.theta_end!r} {int(dom.periodic)}"
    else:
        dline = f"rectangle {dom.x0!r} {dom.x1!r} {dom.y0!r} {dom.y1!r}"
    ng = mesh.nodes.shape[1]
    w = stream.write
    w("curved-dg-mesh 1\n")
    w(f"kind {mesh.kind}\nk_g {mesh.k_g}\nelements {mesh.num_elements}\n")
    w(f"geometry_nodes {ng}\ndomain {dline}\n")
    w(f"grid {mesh.n_rho} {mesh.n_theta}\nlevel {mesh.level}\nar_nominal {float(mesh.ar_nominal)!r}\n")
    w(f"ar_realized {float(mesh.ar_realized)!r}\n")
    w("NODES\n")
    for e in range(mesh.num_elements):
        w(" ".join(repr(float(p)) for p in mesh.param_nodes[e].ravel()) + " | "
          + " ".join(repr(float(x)) for x in mesh.nodes[e].ravel()) + "\n")
    w("CONNECTIVITY\n")
    for cell in mesh.connectivity:
        w(" ".join(str(int(v)) for v in cell) + "\n")
    w(f"INTERIOR_FACES {len(mesh.interior_faces)}\n")
    for row in mesh.interior_faces:
        w(" ".join(str(int(v)) for v in row) + "\n")
    w(f"BOUNDARY_FACES {len(mesh.boundary_faces)}\n")
    for (e, f), tag in zip(mesh.boundary_faces, mesh.boundary_tags):
        w(f"{int(e)} {int(f)} {tag}\n")


def read_mesh(stream):
    lines = iter(stream.read().splitlines())
    header = {}
    for line in lines:
        if line == "NODES":
            break
        key, _, val = line.partition(" ")
        header[key] = val
    if header.get("curved-dg-mesh") != "1":
        raise ValueError("not a curved-dg mesh file")
    kind, k_g = header["kind"], int(header["k_g"])
    ne, ng = int(header["elements"]), int(header["geometry_nodes"])
    dparts = header["domain"].split()
    if dparts[0] == "rectangle":
        domain = RectangleDomain(*map(float, dparts[1:5]))
    else:
        domain = AnnulusDomain(float(dparts[1]), float(dparts[2]), float(dparts[3]),
                               float(dparts[4]), bool(int(dparts[5])), dparts[0])
    pn = np.empty((ne, ng, 2))
    xy = np.empty((ne, ng, 2))
    for e in range(ne):
        left, right = next(lines).split("|")
        pn[e] = np.array(left.split(), dtype=float).reshape(ng, 2)
        xy[e] = np.array(right.split(), dtype=float).reshape(ng, 2)
    assert next(lines) == "CONNECTIVITY"
    conn = np.array([next(lines).split() for _ in range(ne)], dtype=np.int64)
    nif = int(next(lines).split()[1])
    interior = np.array([next(lines).split() for _ in range(nif)], dtype=np.int64).reshape(-1, 5)
    nbf = int(next(lines).split()[1])
    rows = [next(lines).split() for _ in range(nbf)]
    boundary = np.array([[int(a), int(b)] for a, b, _ in rows], dtype=np.int64).reshape(-1, 2)
    tags = np.array([t for _, _, t in rows], dtype=object)
    n_rho, n_theta = map(int, header["grid"].split())
    return CurvedMesh(kind=kind, k_g=k_g, nodes=xy, param_nodes=pn, connectivity=conn,
                      interior_faces=interior, boundary_faces=boundary, boundary_tags=tags,
                      domain=domain, ar_nominal=float(header["ar_nominal"]),
                      level=int(header["level"]), n_rho=n_rho, n_theta=n_theta,
                      ar_realized=float(header["ar_realized"]))


def mesh_svg(mesh, samples=8, width=600):
    """SVG wireframe with curved edges sampled from the geometry interpolant."""
    gref = build_reference_element(mesh.kind, mesh.k_g)
    t = np.linspace(-1.0, 1.0, samples + 1)
    nf = mesh.num_faces_per_element
    mats = [gref.basis_at(face_param_to_ref(mesh.kind, f, t[:-1])) for f in range(nf)]
    lo = mesh.nodes.reshape(-1, 2).min(axis=0)
    hi = mesh.nodes.reshape(-1, 2).max(axis=0)
    scale = width / max(hi - lo)
    height = int(math.ceil((hi[1] - lo[1]) * scale)) + 20
    paths = []
    for e in range(mesh.num_elements):
        pts = np.concatenate([m @ mesh.nodes[e] for m in mats])
        sx = 10 + (pts[:, 0] - lo[0]) * scale
        sy = height - 10 - (pts[:, 1] - lo[1]) * scale
        d = "M " + " L ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy)) + " Z"
        paths.append(f'<path d="{d}"/>')
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 20}" height="{height}">\n'
            '<g fill="none" stroke="black" stroke-width="0.5">\n'
            + "\n".join(paths) + "\n</g>\n</svg>\n")
