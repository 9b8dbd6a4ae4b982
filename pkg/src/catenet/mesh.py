"""Discrete surfaces immersed in H2 x R.

Vertices live in the product of the Poincare disk with a real height axis.
All metric quantities are computed through per-vertex log maps: at a vertex
the three components (two horizontal, one vertical) are coordinates in an
orthonormal frame whose horizontal axes align with the disk chart axes.
Geodesic distances, triangle areas (Heron on geodesic lengths), and first
variations of area are exact in the ambient metric up to the flat-triangle
approximation.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import DiskPoint

REGION_TAGS = ("neck", "strip", "transition", "end")

_MIN_ANGLE_DEG = 5.0


@dataclass(frozen=True)
class AmbientPoint:
    """A point (z, t) of the product space."""

    base: DiskPoint
    t: float


@dataclass(frozen=True)
class WeightedNormParams:
    """Weight exponent kappa and Holder exponent mu (metadata only)."""

    kappa: float
    mu: float = 0.5

    def __post_init__(self):
        if not (-1.0 < self.kappa < 1.0):
            raise ValueError("kappa must lie in (-1, 1)")
        if not (0.0 < self.mu < 1.0):
            raise ValueError("mu must lie in (0, 1)")


def _disk_log_vec(z0, z1):
    """Log map of the hyperbolic plane, vectorized.

    Returns a complex array whose modulus is the hyperbolic distance and
    whose argument is the direction in the chart at z0.
    """
    w = (z1 - z0) / (1.0 - np.conjugate(z0) * z1)
    aw = np.abs(w)
    d = 2.0 * np.arctanh(np.minimum(aw, 1.0 - 1e-16))
    safe = np.where(aw == 0.0, 1.0, aw)
    return d * w / safe


def _log3(z0, t0, z1, t1):
    """Ambient log map components in the orthonormal frame at (z0, t0)."""
    v = _disk_log_vec(z0, z1)
    return np.stack([v.real, v.imag, np.asarray(t1 - t0, dtype=float)],
                    axis=-1)


def ambient_distance(z0, t0, z1, t1):
    """Geodesic distance in the product metric."""
    dh = np.abs(_disk_log_vec(np.asarray(z0), np.asarray(z1)))
    return np.hypot(dh, np.asarray(t1, dtype=float) - t0)


def _heron_area(a, b, c):
    s2 = (2.0 * a * a * b * b + 2.0 * b * b * c * c + 2.0 * c * c * a * a
          - a ** 4 - b ** 4 - c ** 4)
    return 0.25 * np.sqrt(np.maximum(s2, 0.0))


def _corner_angles(a, b, c):
    """Euclidean angles of a triangle with side lengths a, b, c.

    Angle i is at the corner opposite side i; the three always sum to pi,
    which makes the combinatorial Gauss-Bonnet identity exact.
    """
    ca = np.clip((b * b + c * c - a * a) / (2.0 * b * c), -1.0, 1.0)
    cb = np.clip((a * a + c * c - b * b) / (2.0 * a * c), -1.0, 1.0)
    alpha = np.arccos(ca)
    beta = np.arccos(cb)
    return alpha, beta, np.pi - alpha - beta


class SurfaceMesh:
    """Triangulated surface with normals, region tags, weight field R,
    and an optional vertex involution realizing the height reflection."""

    def __init__(self, z, t, triangles, normals=None, region=None, R=None,
                 pairing=None, validate=True):
        self.z = np.ascontiguousarray(z, dtype=complex)
        self.t = np.ascontiguousarray(t, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=int)
        n = self.z.shape[0]
        if normals is None:
            normals = _winding_normals(self.z, self.t, self.triangles)
        self.normals = np.ascontiguousarray(normals, dtype=float)
        if region is None:
            region = np.full(n, "strip", dtype="<U10")
        self.region = np.ascontiguousarray(region, dtype="<U10")
        if R is None:
            R = np.ones(n)
        self.R = np.ascontiguousarray(R, dtype=float)
        self.pairing = None if pairing is None else np.ascontiguousarray(
            pairing, dtype=int)
        self._cache = {}
        if validate:
            self._validate()

    # -- basic structure ---------------------------------------------------

    @property
    def n_vertices(self):
        return self.z.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def point(self, i):
        return AmbientPoint(DiskPoint.from_z(complex(self.z[i])),
                            float(self.t[i]))

    def _validate(self):
        n = self.n_vertices
        if self.t.shape != (n,) or self.normals.shape != (n, 3):
            raise ValueError("vertex array shapes disagree")
        if self.region.shape != (n,) or self.R.shape != (n,):
            raise ValueError("per-vertex field shapes disagree")
        if np.any(np.abs(self.z) >= 1.0):
            raise ValueError("vertex base points must lie inside the disk")
        tri = self.triangles
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise ValueError("triangles must be index triples")
        if tri.size and (tri.min() < 0 or tri.max() >= n):
            raise ValueError("triangle references a missing vertex")
        if np.any(np.ptp(np.sort(tri, axis=1), axis=1) == 0) or np.any(
                tri[:, 0] == tri[:, 1]) or np.any(tri[:, 1] == tri[:, 2]) \
                or np.any(tri[:, 0] == tri[:, 2]):
            raise ValueError("triangle repeats a vertex")
        bad = set(np.unique(self.region)) - set(REGION_TAGS)
        if bad:
            raise ValueError("unknown region tags: %s" % sorted(bad))
        if np.any(self.R < 1.0 - 1e-12):
            raise ValueError("weight field R must be >= 1")
        norms = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-8):
            raise ValueError("normals must be unit in the ambient metric")
        self._check_orientation()
        if self.pairing is not None:
            self._check_pairing()

    def _check_orientation(self):
        tri = self.triangles
        directed = {}
        for a, b in ((0, 1), (1, 2), (2, 0)):
            for i, j in zip(tri[:, a], tri[:, b]):
                key = (int(i), int(j))
                directed[key] = directed.get(key, 0) + 1
        for (i, j), cnt in directed.items():
            if cnt > 1:
                raise ValueError(
                    "edge (%d, %d) repeats with the same orientation" % (i, j))
        boundary = []
        for (i, j) in directed:
            if (j, i) not in directed:
                boundary.append((i, j))
        self._cache["boundary_edges"] = boundary

    def _check_pairing(self):
        p = self.pairing
        n = self.n_vertices
        if p.shape != (n,):
            raise ValueError("pairing length mismatch")
        if not np.array_equal(p[p], np.arange(n)):
            raise ValueError("pairing is not an involution")
        scale = 1.0 + np.abs(self.t).max()
        if np.any(np.abs(self.t[p] + self.t) > 1e-6 * scale):
            raise ValueError("pairing does not negate the height")
        if np.any(np.abs(self.z[p] - self.z) > 1e-6):
            raise ValueError("pairing must fix the horizontal footprint")
        if np.any(np.abs(self.R[p] - self.R) > 1e-6 * np.abs(self.R).max()):
            raise ValueError("weight field R must be even under the pairing")
        tri_sets = {frozenset(map(int, tr)) for tr in self.triangles}
        mapped = p[self.triangles]
        for tr in mapped:
            if frozenset(map(int, tr)) not in tri_sets:
                raise ValueError("pairing does not map triangles to triangles")

    # -- derived quantities, cached ----------------------------------------

    def boundary_vertices(self):
        if "boundary_vertices" not in self._cache:
            mask = np.zeros(self.n_vertices, dtype=bool)
            for i, j in self._cache["boundary_edges"]:
                mask[i] = mask[j] = True
            self._cache["boundary_vertices"] = mask
        return self._cache["boundary_vertices"]

    def interior_vertices(self):
        return ~self.boundary_vertices()

    def edge_lengths(self):
        """Geodesic side lengths per triangle, side i opposite corner i."""
        if "edge_lengths" not in self._cache:
            tri = self.triangles
            z, t = self.z, self.t
            sides = []
            for a, b in ((1, 2), (2, 0), (0, 1)):
                sides.append(ambient_distance(z[tri[:, a]], t[tri[:, a]],
                                              z[tri[:, b]], t[tri[:, b]]))
            self._cache["edge_lengths"] = np.stack(sides, axis=1)
        return self._cache["edge_lengths"]

    def triangle_areas(self):
        if "areas" not in self._cache:
            ell = self.edge_lengths()
            self._cache["areas"] = _heron_area(ell[:, 0], ell[:, 1],
                                               ell[:, 2])
        return self._cache["areas"]

    def lumped_areas(self):
        if "lumped" not in self._cache:
            out = np.zeros(self.n_vertices)
            third = self.triangle_areas() / 3.0
            for c in range(3):
                np.add.at(out, self.triangles[:, c], third)
            self._cache["lumped"] = out
        return self._cache["lumped"]

    def min_angle(self):
        ell = self.edge_lengths()
        angs = np.stack(_corner_angles(ell[:, 0], ell[:, 1], ell[:, 2]),
                        axis=1)
        return angs.min()

    def one_ring(self):
        """Plain 1-ring adjacency sets."""
        if "one_ring" not in self._cache:
            n = self.n_vertices
            one = [set() for _ in range(n)]
            for a, b, c in self.triangles:
                one[a].update((b, c))
                one[b].update((a, c))
                one[c].update((a, b))
            self._cache["one_ring"] = one
        return self._cache["one_ring"]

    def neighbor_lists(self):
        """1-ring adjacency, expanded to the 2-ring where fewer than five
        neighbors are available (local fits need five samples)."""
        if "nbrs" not in self._cache:
            one = self.one_ring()
            out = []
            for v in range(self.n_vertices):
                ring = set(one[v])
                if len(ring) < 5:
                    for q in list(ring):
                        ring.update(one[q])
                    ring.discard(v)
                out.append(np.fromiter(sorted(ring), dtype=int))
            self._cache["nbrs"] = out
        return self._cache["nbrs"]

    def neighbor_csr(self):
        """Flattened neighbor lists: (indptr, indices)."""
        if "nbr_csr" not in self._cache:
            nbrs = self.neighbor_lists()
            counts = np.array([len(js) for js in nbrs])
            indptr = np.concatenate([[0], np.cumsum(counts)])
            indices = (np.concatenate(nbrs) if len(nbrs) else
                       np.zeros(0, dtype=int))
            self._cache["nbr_csr"] = (indptr, indices)
        return self._cache["nbr_csr"]

    def require_quality(self):
        ell = self.edge_lengths()
        if np.any(ell < 1e-12):
            bad = np.nonzero(np.any(ell < 1e-12, axis=1))[0]
            raise ValueError("degenerate triangles (zero edge): %s"
                             % bad[:8].tolist())
        angs = np.stack(_corner_angles(ell[:, 0], ell[:, 1], ell[:, 2]),
                        axis=1)
        lim = np.deg2rad(_MIN_ANGLE_DEG)
        bad = np.nonzero(angs.min(axis=1) <= lim)[0]
        if bad.size:
            raise ValueError("sliver triangles below %g degrees: %s"
                             % (_MIN_ANGLE_DEG, bad[:8].tolist()))

    def with_fields(self, region=None, R=None, pairing="keep"):
        """Copy of the mesh with replaced per-vertex metadata."""
        pair = self.pairing if isinstance(pairing, str) else pairing
        return SurfaceMesh(self.z, self.t, self.triangles, self.normals,
                           self.region if region is None else region,
                           self.R if R is None else R, pair)


@dataclass
class ScalarField:
    """Per-vertex real values bound to a specific mesh."""

    mesh: SurfaceMesh
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise ValueError("field length does not match vertex count")

    def even_part(self):
        p = self._pairing()
        return ScalarField(self.mesh, 0.5 * (self.values + self.values[p]))

    def odd_part(self):
        p = self._pairing()
        return ScalarField(self.mesh, 0.5 * (self.values - self.values[p]))

    def _pairing(self):
        if self.mesh.pairing is None:
            raise ValueError("mesh carries no height-reflection pairing")
        return self.mesh.pairing


# ---------------------------------------------------------------------------
# normals


def _winding_normals(z, t, triangles):
    """Per-vertex unit normals from triangle winding.

    Each incident triangle contributes its normal computed in the frame of
    that corner (cross product of the two outgoing log vectors), weighted by
    the corner angle.
    """
    n = z.shape[0]
    acc = np.zeros((n, 3))
    tri = triangles
    for c in range(3):
        v = tri[:, c]
        q1 = tri[:, (c + 1) % 3]
        q2 = tri[:, (c + 2) % 3]
        e1 = _log3(z[v], t[v], z[q1], t[q1])
        e2 = _log3(z[v], t[v], z[q2], t[q2])
        nrm = np.cross(e1, e2)
        mag = np.linalg.norm(nrm, axis=1, keepdims=True)
        mag = np.where(mag == 0.0, 1.0, mag)
        l1 = np.linalg.norm(e1, axis=1)
        l2 = np.linalg.norm(e2, axis=1)
        dots = np.einsum("ij,ij->i", e1, e2) / np.where(
            l1 * l2 == 0.0, 1.0, l1 * l2)
        ang = np.arccos(np.clip(dots, -1.0, 1.0))
        np.add.at(acc, v, nrm / mag * ang[:, None])
    mag = np.linalg.norm(acc, axis=1, keepdims=True)
    if np.any(mag == 0.0):
        raise ValueError("isolated vertex has no incident triangle")
    return acc / mag


# ---------------------------------------------------------------------------
# curvature operators


def mean_curvature(M):
    """Discrete mean curvature (sum of principal curvatures).

    Normal component of the first variation of total area under motion of
    each vertex, divided by the lumped vertex area; positive when the mean
    curvature vector points along the stored normal.  The sum convention is
    used so that the linearization of this operator is the stability
    operator assembled by the solver.
    """
    M.require_quality()
    tri = M.triangles
    z, t = M.z, M.t
    areas = M.triangle_areas()
    grad = np.zeros(M.n_vertices)
    for c in range(3):
        v = tri[:, c]
        qa = tri[:, (c + 1) % 3]
        qb = tri[:, (c + 2) % 3]
        la = _log3(z[v], t[v], z[qa], t[qa])
        lb = _log3(z[v], t[v], z[qb], t[qb])
        a = np.linalg.norm(la, axis=1)
        b = np.linalg.norm(lb, axis=1)
        cc = ambient_distance(z[qa], t[qa], z[qb], t[qb])
        dA_da = a * (b * b + cc * cc - a * a) / (8.0 * areas)
        dA_db = b * (a * a + cc * cc - b * b) / (8.0 * areas)
        nv = M.normals[v]
        dots_a = np.einsum("ij,ij->i", nv, la) / a
        dots_b = np.einsum("ij,ij->i", nv, lb) / b
        np.add.at(grad, v, dA_da * dots_a + dA_db * dots_b)
    return ScalarField(M, grad / M.lumped_areas())


def total_curvature(M):
    """Sum of interior-vertex angle defects (discrete Gauss curvature
    integral).  Boundary terms are available from gauss_bonnet_report."""
    return gauss_bonnet_report(M)["interior_defect"]


def gauss_bonnet_report(M):
    ell = M.edge_lengths()
    angs = np.stack(_corner_angles(ell[:, 0], ell[:, 1], ell[:, 2]), axis=1)
    theta = np.zeros(M.n_vertices)
    for c in range(3):
        np.add.at(theta, M.triangles[:, c], angs[:, c])
    interior = M.interior_vertices()
    boundary = M.boundary_vertices()
    d_int = float(np.sum(2.0 * np.pi - theta[interior]))
    d_bd = float(np.sum(np.pi - theta[boundary]))
    topo = mesh_topology(M)
    return {
        "interior_defect": d_int,
        "boundary_turning": d_bd,
        "euler_characteristic": topo["chi"],
        "identity_gap": d_int + d_bd - 2.0 * np.pi * topo["chi"],
    }


def mesh_topology(M):
    """Vertex/edge/face counts, Euler characteristic, boundary loops, genus."""
    tri = M.triangles
    edges = set()
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for i, j in zip(tri[:, a], tri[:, b]):
            edges.add((min(int(i), int(j)), max(int(i), int(j))))
    V = int(M.n_vertices)
    E = len(edges)
    F = int(M.n_triangles)
    chi = V - E + F
    nxt = {}
    for i, j in M._cache["boundary_edges"]:
        nxt[i] = j
    loops = 0
    seen = set()
    for start in list(nxt):
        if start in seen:
            continue
        loops += 1
        cur = start
        while cur not in seen:
            seen.add(cur)
            cur = nxt[cur]
    genus = (2 - chi - loops) / 2.0
    return {"V": V, "E": E, "F": F, "chi": chi,
            "boundary_loops": loops, "genus": genus}


def ricci_normal(M):
    """Ambient Ricci curvature contracted twice with the unit normal:
    -(1 - vertical component squared) in the product metric."""
    nt = M.normals[:, 2]
    return ScalarField(M, -(1.0 - nt * nt))


def _tangent_frames(M):
    N = M.normals
    ref = np.zeros_like(N)
    ref[:, 2] = 1.0
    flat = np.abs(N[:, 2]) > 0.9
    ref[flat] = np.array([1.0, 0.0, 0.0])
    e1 = np.cross(ref, N)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(N, e1)
    return e1, e2


def _patch_coordinates(M):
    """Neighbor offsets in the tangent frame for every vertex at once.

    Returns flat arrays (x, y, w) aligned with neighbor_csr indices:
    tangential coordinates and normal deviation of the ambient log map.
    """
    if "patches" in M._cache:
        return M._cache["patches"]
    e1, e2 = _tangent_frames(M)
    indptr, indices = M.neighbor_csr()
    counts = np.diff(indptr)
    rep = np.repeat(np.arange(M.n_vertices), counts)
    logs = _log3(M.z[rep], M.t[rep], M.z[indices], M.t[indices])
    x = np.einsum("ij,ij->i", logs, e1[rep])
    y = np.einsum("ij,ij->i", logs, e2[rep])
    w = np.einsum("ij,ij->i", logs, M.normals[rep])
    M._cache["patches"] = (x, y, w)
    return M._cache["patches"]


def _grouped_lstsq(M, design_cols, rhs_flat, n_params):
    """Per-vertex least squares, batched over vertices of equal valence.

    design_cols: list of flat arrays (one per parameter) aligned with
    neighbor_csr; rhs_flat likewise.  Returns (n_vertices, n_params).
    """
    indptr, _ = M.neighbor_csr()
    counts = np.diff(indptr)
    if np.any(counts < n_params):
        v = int(np.argmax(counts < n_params))
        raise ValueError(
            "fit underdetermined at vertex %d (only %d neighbors)"
            % (v, counts[v]))
    coeffs = np.zeros((M.n_vertices, n_params))
    for k in np.unique(counts):
        verts = np.nonzero(counts == k)[0]
        seg = indptr[verts][:, None] + np.arange(k)[None, :]
        A = np.stack([col[seg] for col in design_cols], axis=2)
        rhs = rhs_flat[seg][:, :, None]
        coeffs[verts] = (np.linalg.pinv(A) @ rhs)[:, :, 0]
    return coeffs


def _quadratic_design(M):
    x, y, _ = _patch_coordinates(M)
    return [x, y, 0.5 * x * x, x * y, 0.5 * y * y]


def second_fundamental_norm_sq(M):
    """Squared norm of the second fundamental form from a local quadratic
    fit of the surface in geodesic normal coordinates at each vertex."""
    _, _, w = _patch_coordinates(M)
    coeffs = _grouped_lstsq(M, _quadratic_design(M), w, 5)
    a, b, c = coeffs[:, 2], coeffs[:, 3], coeffs[:, 4]
    return ScalarField(M, a * a + 2.0 * b * b + c * c)


def _field_differences(M, values):
    indptr, indices = M.neighbor_csr()
    rep = np.repeat(np.arange(M.n_vertices), np.diff(indptr))
    return values[indices] - values[rep]


def field_gradient_norm(M, u):
    """Pointwise norm of the tangential gradient by per-vertex least squares."""
    x, y, _ = _patch_coordinates(M)
    g = _grouped_lstsq(M, [x, y], _field_differences(M, u.values), 2)
    return ScalarField(M, np.hypot(g[:, 0], g[:, 1]))


def field_hessian_norm(M, u):
    """Frobenius norm of the tangential Hessian from the quadratic fit."""
    coeffs = _grouped_lstsq(M, _quadratic_design(M),
                            _field_differences(M, u.values), 5)
    a, b, c = coeffs[:, 2], coeffs[:, 3], coeffs[:, 4]
    return ScalarField(M, np.sqrt(a * a + 2.0 * b * b + c * c))


def weighted_norm(M, u, params, order=0):
    """Weighted sup norm: max over vertices of e^{-kappa R} times the sum of
    |u| and requested derivative magnitudes.

    Derivative magnitudes enter on interior vertices only; the one-sided
    stencils on the truncation rim measure the cutoff, not the field.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1, or 2")
    total = np.abs(u.values).astype(float)
    if order >= 1:
        inner = M.interior_vertices()
        total = total + np.where(inner, field_gradient_norm(M, u).values, 0.0)
    if order >= 2:
        total = total + np.where(inner, field_hessian_norm(M, u).values, 0.0)
    return float(np.max(np.exp(-params.kappa * M.R) * total))


# ---------------------------------------------------------------------------
# normal graphs


def normal_graph(M, u, max_displacement=0.2, validate=True):
    """Move each vertex along the ambient geodesic in the normal direction
    by the arclength u; tags, weight, and pairing carry over."""
    vals = u.values
    if np.max(np.abs(vals)) > max_displacement:
        raise ValueError("graph function exceeds the injectivity bound %g"
                         % max_displacement)
    nh = M.normals[:, 0] + 1j * M.normals[:, 1]
    v = vals * nh
    av = np.abs(v)
    w = np.where(av == 0.0, 0.0 * v,
                 np.tanh(0.5 * av) * v / np.where(av == 0.0, 1.0, av))
    z_new = (M.z + w) / (1.0 + np.conjugate(M.z) * w)
    t_new = M.t + vals * M.normals[:, 2]
    out = SurfaceMesh(z_new, t_new, M.triangles, None, M.region, M.R,
                      M.pairing, validate=validate)
    if not validate:
        out._cache["boundary_edges"] = M._cache.get("boundary_edges", [])
    return out


# ---------------------------------------------------------------------------
# structured construction and export


def grid_mesh(Z, T, wrap_u=False, region=None, R=None):
    """Mesh over a structured (nu, nv) grid of vertices.

    When the columns are mirror-symmetric in the height (T[:, ::-1] == -T
    with matching footprint and odd nv), the triangulation is built on the
    upper half and reflected, and the height-reflection pairing is attached.
    """
    Z = np.asarray(Z, dtype=complex)
    T = np.asarray(T, dtype=float)
    if Z.shape != T.shape or Z.ndim != 2:
        raise ValueError("grids must share a 2d shape")
    nu, nv = Z.shape
    if nu < 2 or nv < 2:
        raise ValueError("grid too small")

    def vid(i, j):
        return (i % nu) * nv + j if wrap_u else i * nv + j

    ncol = nu if wrap_u else nu - 1
    symmetric = (nv % 2 == 1
                 and np.allclose(T[:, ::-1], -T, atol=1e-12)
                 and np.allclose(Z[:, ::-1], Z, atol=1e-12))
    tris = []
    if symmetric:
        mid = (nv - 1) // 2
        mirror = np.arange(nu * nv).reshape(nu, nv)[:, ::-1].ravel()
        upper = []
        for i in range(ncol):
            for j in range(mid, nv - 1):
                upper.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
                upper.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
        lower = [(mirror[a], mirror[c], mirror[b]) for a, b, c in upper]
        tris = upper + lower
        pairing = mirror
    else:
        for i in range(ncol):
            for j in range(nv - 1):
                tris.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
                tris.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
        pairing = np.arange(nu * nv) if np.all(T == 0.0) else None
    return SurfaceMesh(Z.ravel(), T.ravel(), np.array(tris), None,
                       region, R, pairing)


def export_off(M, path, sidecar_path=None, fields=None):
    """Write the mesh as an OFF polygon file with coordinates (x, y, t),
    plus an optional tab-separated sidecar of per-vertex fields."""
    with open(path, "w") as fh:
        fh.write("OFF\n%d %d 0\n" % (M.n_vertices, M.n_triangles))
        for zz, tt in zip(M.z, M.t):
            fh.write("%.17g %.17g %.17g\n" % (zz.real, zz.imag, tt))
        for a, b, c in M.triangles:
            fh.write("3 %d %d %d\n" % (a, b, c))
    if sidecar_path is not None:
        names = ["index", "R", "region"]
        cols = [np.arange(M.n_vertices), M.R, M.region]
        for name, arr in (fields or {}).items():
            names.append(name)
            cols.append(np.asarray(arr))
        with open(sidecar_path, "w") as fh:
            fh.write("\t".join(names) + "\n")
            for row in zip(*cols):
                fh.write("\t".join(str(x) for x in row) + "\n")
