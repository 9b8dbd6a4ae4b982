"""Two-ended neck surfaces bridging a pair of vertical planes.

build_ansatz lays out an explicit triangulated surface: each end is a
normal graph over one of two parallel vertical planes, with graph height
amplitude * r^(-1/2) e^(-r) pointing at the other plane, and the ends are
bridged through a catenoid-shaped neck written in Fermi coordinates of
the common perpendicular geodesic.  refine then contracts the ansatz to
discrete minimality while keeping its three reflection symmetries.  The
remaining operators measure the result: length of the neck curve, lowest
stability eigenvalues with reflection parities, scalar fields induced by
one-parameter ambient isometries, and their fluxes through vertex loops.
"""

import numpy as np
from dataclasses import dataclass, field

from scipy import interpolate, optimize, special
from scipy.spatial import cKDTree

from . import geometry as geo
from . import mesh as ms
from . import solver as sv
from .mesh import ScalarField, SurfaceMesh
from .model import PlanarField

__all__ = [
    "CatenoidSpec", "KillingField", "SpectrumReport", "build_ansatz",
    "refine", "necksize", "neck_loop", "killing_jacobi_field", "spectrum",
    "flux", "end_profile", "symmetry_permutation", "standard_axes",
    "standard_killing_fields",
]


# ---------------------------------------------------------------------------
# parameter records


@dataclass(frozen=True)
class CatenoidSpec:
    """Build parameters for one bridged pair of vertical planes.

    eta is the distance between the planes, r_max the truncation radius
    of each end, h the target mesh spacing, and amplitude the height of
    the initial end graphs (the neck model is matched to it, and the
    contraction removes the dependence on the exact value).
    """

    eta: float
    r_max: float = 12.0
    h: float = 0.1
    amplitude: float = 0.3

    def __post_init__(self):
        top = geo.eta0()
        if not 0.0 < self.eta < top:
            raise ValueError(
                "plane separation must lie strictly between 0 and %.6f"
                % top)
        if self.r_max < 6.0:
            raise ValueError("truncation radius must be at least 6")
        if not 0.0 < self.h <= 0.25:
            raise ValueError("mesh spacing must lie in (0, 0.25]")
        if self.amplitude <= 0.0:
            raise ValueError("graph amplitude must be positive")


@dataclass(frozen=True)
class KillingField:
    """Generator of a one-parameter family of ambient isometries.

    kind selects the family: 'vertical' is unit vertical translation,
    'rotation' turns at unit rate about a point of the plane, and
    'translation' slides at unit speed along a geodesic axis toward its
    second ideal endpoint.
    """

    kind: str
    axis: geo.Geodesic | None = None
    center: geo.DiskPoint | None = None

    def __post_init__(self):
        if self.kind not in ("vertical", "rotation", "translation"):
            raise ValueError("unknown Killing field kind %r" % (self.kind,))
        if self.kind == "rotation" and self.center is None:
            raise ValueError("rotation field needs a center point")
        if self.kind == "translation" and self.axis is None:
            raise ValueError("translation field needs a geodesic axis")

    def chart_components(self, z):
        """Horizontal chart vector (complex) and vertical component at z.

        The horizontal part is returned in disk-chart coordinates; frame
        components against an orthonormal frame are obtained by scaling
        with the conformal factor.
        """
        z = np.asarray(z, dtype=complex)
        if self.kind == "vertical":
            return np.zeros_like(z), np.ones(z.shape)
        if self.kind == "rotation":
            p = self.center.z
            horiz = 1j * (z - p) * (1.0 - np.conj(p) * z) / (1.0 - abs(p) ** 2)
            return horiz, np.zeros(z.shape)
        a, b = self.axis.a.z, self.axis.b.z
        return (z - a) * (z - b) / (a - b), np.zeros(z.shape)

    def frame_components(self, z):
        """(n, 3) components in the per-vertex orthonormal frames."""
        horiz, vert = self.chart_components(z)
        cf = geo.conformal_factor(z)
        return np.stack([cf * horiz.real, cf * horiz.imag, vert], axis=-1)


@dataclass(frozen=True)
class SpectrumReport:
    """Lowest stability eigenvalues with reflection parities.

    eigenvalues are those of the negated stability operator, sorted
    increasingly.  parities holds one (vertical, swap, axis) label triple
    per eigenvalue, each label 'even', 'odd', or 'mixed' by correlation
    against the corresponding reflection; residuals are relative
    generalized-eigenproblem residual norms.
    """

    eigenvalues: np.ndarray
    parities: tuple
    residuals: np.ndarray

    def table(self):
        lines = ["index\teigenvalue\tvertical\tswap\taxis\tresidual"]
        for i, lam in enumerate(self.eigenvalues):
            p = self.parities[i]
            lines.append("%d\t%.8e\t%s\t%s\t%s\t%.3e"
                         % (i, lam, p[0], p[1], p[2], self.residuals[i]))
        return "\n".join(lines)


def standard_axes():
    """Axes of the canonical frame: the connecting geodesic of the two
    planes (oriented toward +1) and the equidistant geodesic between
    them (oriented toward +i)."""
    axis = geo.Geodesic.from_angles(np.pi, 0.0)
    cross = geo.Geodesic.from_angles(1.5 * np.pi, 0.5 * np.pi)
    return axis, cross


def standard_killing_fields():
    """The four distinguished generators in the canonical frame, keyed by
    'vertical', 'rotation', 'axis_translation', 'cross_translation'."""
    axis, cross = standard_axes()
    return {
        "vertical": KillingField("vertical"),
        "rotation": KillingField("rotation",
                                 center=geo.DiskPoint(0.0, 0.0)),
        "axis_translation": KillingField("translation", axis=axis),
        "cross_translation": KillingField("translation", axis=cross),
    }


# ---------------------------------------------------------------------------
# profile of the bridged surface


def _graph_height(r, amplitude):
    """End graph profile: the decaying radial solution of the flat-plane
    stability equation, normalized to amplitude * r^(-1/2) e^(-r) at
    large radius."""
    return amplitude * np.sqrt(2.0 / np.pi) * special.k0(r)


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


_MATCH_RADIUS = 1.5


def _ring_average_stretch(r):
    """Average over a transverse ring of the squared metric stretch along
    the axis direction (cosh^2 of the normal coordinate)."""
    return 0.5 * (1.0 + special.i0(2.0 * r))


def _neck_profile(a, rho_max, n_grid=4000):
    """Axis coordinate of the ring-averaged minimal neck profile.

    Minimizes the area functional with the axis stretch replaced by its
    ring average; reduces to the Euclidean catenoid near the axis.
    Returns a function of the transverse radius, valid on [a, rho_max].
    """
    s_max = np.sqrt(max(rho_max * rho_max - a * a, 0.0) + 1e-12)
    s = np.linspace(0.0, s_max, n_grid + 1)
    r = np.hypot(a, s)
    c = _ring_average_stretch(r)
    ca = _ring_average_stretch(a)
    csq = a * np.sqrt(ca)
    gap = np.maximum(r * r * c - csq * csq, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dxds = csq * (s / r) / np.sqrt(c * gap)
    slope0 = 2.0 * a * ca + a * a * special.i1(2.0 * a)
    dxds[0] = np.sqrt(2.0 * a / slope0)
    x = np.concatenate([[0.0], np.cumsum(0.5 * (dxds[1:] + dxds[:-1])
                                         * np.diff(s))])

    def profile(rho):
        rho = np.asarray(rho, dtype=float)
        ss = np.sqrt(np.maximum(rho * rho - a * a, 0.0))
        return np.interp(ss, s, x)

    return profile


def _waist_radius(eta, amplitude):
    """Waist of the neck model, matched to the end graphs at the middle
    of the blend annulus."""
    target = 0.5 * eta - _graph_height(_MATCH_RADIUS, amplitude)

    def g(a):
        return float(_neck_profile(a, _MATCH_RADIUS, n_grid=800)
                     (_MATCH_RADIUS)) - target

    lo = 1e-4
    if target <= max(g(lo) + target, 1e-3):
        raise ValueError("graph amplitude too large for this separation")
    hi = lo
    for a in np.linspace(0.02, 1.45, 72):
        if g(a) > 0.0:
            hi = a
            break
        lo = a
    else:
        raise ValueError("plane separation too large for this graph "
                         "amplitude (no bridge reaches the end graphs)")
    return float(optimize.brentq(g, lo, hi, xtol=1e-12))


def _local_step(rho, h):
    """Target edge length near transverse radius rho: h away from the
    neck, graded down to resolve the waist."""
    return min(h, max(rho / 3.0, h / 8.0))


def _ring_radii(a, r_max, h):
    """Transverse radii of the profile rings, waist first."""
    radii = [a]
    s, rho = 0.0, a
    while rho < 1.0:
        s += _local_step(rho, h)
        rho = float(np.hypot(a, s))
        radii.append(rho)
    while radii[-1] + 1.5 * h < r_max:
        radii.append(radii[-1] + h)
    gap = r_max - radii[-1]
    if gap > 0.75 * h:
        radii.append(radii[-1] + 0.5 * gap)
    radii.append(r_max)
    return radii


def _ring_counts(radii, h):
    """Angular node counts per ring: multiples of four, doubling only."""
    counts = []
    for rho in radii:
        target = 2.0 * np.pi * rho / (1.35 * _local_step(rho, h))
        n = 8 * 2 ** max(0, int(np.ceil(np.log2(target / 8.0))))
        if counts:
            n = max(counts[-1], min(n, 2 * counts[-1]))
        counts.append(n)
    return counts


def _plane_graph_xy(s1, sig, w):
    """Fermi coordinates of plane points displaced toward the center.

    The plane is the vertical one over the geodesic crossing the axis at
    arclength s1 > 0; (sig, .) are flat coordinates on it, and each point
    is pushed the normal distance w toward the opposite plane.
    """
    cw, sw = np.cosh(w), np.sinh(w)
    cs, ss = np.cosh(s1), np.sinh(s1)
    cy, sy = np.cosh(sig), np.sinh(sig)
    x1 = ss * cy * cw - sw * cs
    x0 = cs * cy * cw - sw * ss
    return np.arctanh(x1 / x0), np.arcsinh(cw * sy)


def _ring_vertices(rho, n, x_neck, s_half, amplitude):
    """Fermi coordinates (x, y) and heights t of one ring of n nodes.

    x_neck is the neck-profile axis coordinate at this radius.  Only the
    quarter 0 <= theta <= pi/2 is evaluated; the rest is filled by sign
    flips so the three reflections act exactly on the node set.
    """
    q = n // 4
    theta = 2.0 * np.pi * np.arange(q + 1) / n
    sig = rho * np.cos(theta)
    tau = rho * np.sin(theta)
    sig[q] = 0.0
    tau[0] = 0.0
    chi = float(_smoothstep(rho - 1.0))
    if chi > 0.0:
        xg, yg = _plane_graph_xy(s_half, sig, _graph_height(rho, amplitude))
    if chi == 0.0:
        x, y = np.full(q + 1, x_neck), sig
    elif chi == 1.0:
        x, y = xg, yg
    else:
        x = (1.0 - chi) * x_neck + chi * xg
        y = (1.0 - chi) * sig + chi * yg
    X, Y, T = np.empty(n), np.empty(n), np.empty(n)
    X[:q + 1], Y[:q + 1], T[:q + 1] = x, y, tau
    k = np.arange(q + 1, 2 * q + 1)
    X[k], Y[k], T[k] = X[2 * q - k], -Y[2 * q - k], T[2 * q - k]
    k = np.arange(2 * q + 1, n)
    X[k], Y[k], T[k] = X[n - k], Y[n - k], -T[n - k]
    return X, Y, T


def _fermi_xy_to_disk(x, y):
    """Disk coordinate of the point at Fermi coordinates (x, y) of the
    real diameter (x along the axis, y the signed normal distance)."""
    sy, cy = np.sinh(y), np.cosh(y)
    return (np.sinh(x) * cy + 1j * sy) / (1.0 + np.cosh(x) * cy)


# ---------------------------------------------------------------------------
# band triangulations (all reflection-invariant as triangle sets)


def _band_same(off_c, off_f, n):
    k = np.arange(n)
    k1 = (k + 1) % n
    c0, c1 = off_c + k, off_c + k1
    f0, f1 = off_f + k, off_f + k1
    even = (k % 2 == 0)
    t1 = np.where(even[:, None], np.stack([c0, c1, f1], 1),
                  np.stack([c0, c1, f0], 1))
    t2 = np.where(even[:, None], np.stack([c0, f1, f0], 1),
                  np.stack([c1, f1, f0], 1))
    return np.concatenate([t1, t2])


def _band_double(off_c, off_f, n_c):
    k = np.arange(n_c)
    k1 = (k + 1) % n_c
    c0, c1 = off_c + k, off_c + k1
    f0 = off_f + 2 * k
    f1 = off_f + 2 * k + 1
    f2 = off_f + (2 * k + 2) % (2 * n_c)
    return np.concatenate([np.stack([c0, c1, f1], 1),
                           np.stack([c0, f1, f0], 1),
                           np.stack([c1, f2, f1], 1)])


# ---------------------------------------------------------------------------
# ansatz construction


def build_ansatz(spec):
    """Triangulated two-ended bridge surface for the given parameters.

    The mesh carries the height-reflection pairing, region tags ('neck'
    inside unit transverse radius, 'transition' on the blend annulus,
    'end' outside), the radial weight field R = max(1, r), and a ring
    table on the attribute rings (signed profile index -> vertex ids in
    angular order).  All three reflections of the canonical frame map
    the vertex set to itself exactly.
    """
    a = _waist_radius(spec.eta, spec.amplitude)
    radii = _ring_radii(a, spec.r_max, spec.h)
    counts = _ring_counts(radii, spec.h)
    n_rings = len(radii)
    s_half = 0.5 * spec.eta
    profile = _neck_profile(a, 2.0 + spec.h)

    offs = np.concatenate([[0], np.cumsum(counts)]).astype(int)
    n_plus = int(offs[-1])
    n_total = 2 * n_plus - counts[0]

    x = np.empty(n_total)
    y = np.empty(n_total)
    t = np.empty(n_total)
    rho_of = np.empty(n_total)
    rings = {}
    for i, (rho, n) in enumerate(zip(radii, counts)):
        ids = np.arange(offs[i], offs[i] + n)
        x_neck = float(profile(min(rho, 2.0 + spec.h)))
        X, Y, T = _ring_vertices(rho, n, x_neck, s_half, spec.amplitude)
        if i == 0:
            X[:] = 0.0
        x[ids], y[ids], t[ids] = X, Y, T
        rho_of[ids] = rho
        rings[i] = ids
    base = n_plus - counts[0]
    for i in range(1, n_rings):
        ids = base + np.arange(offs[i], offs[i] + counts[i])
        src = rings[i]
        x[ids] = -x[src]
        y[ids] = y[src]
        t[ids] = t[src]
        rho_of[ids] = rho_of[src]
        rings[-i] = ids

    tris = []
    for i in range(n_rings - 1):
        if counts[i + 1] == counts[i]:
            tris.append(_band_same(offs[i], offs[i + 1], counts[i]))
        else:
            tris.append(_band_double(offs[i], offs[i + 1], counts[i]))
    plus_tris = np.concatenate(tris)
    vmap = np.arange(n_total)
    for i in range(1, n_rings):
        vmap[rings[i]] = rings[-i]
    minus_tris = vmap[plus_tris][:, [0, 2, 1]]
    triangles = np.concatenate([plus_tris, minus_tris])

    pairing = np.empty(n_total, dtype=int)
    for ids in rings.values():
        n = ids.size
        k = np.arange(n)
        pairing[ids] = ids[(n - k) % n]

    region = np.where(rho_of < 1.0, "neck",
                      np.where(rho_of <= 2.0, "transition", "end"))
    out = SurfaceMesh(_fermi_xy_to_disk(x, y), t, triangles,
                      region=region, R=np.maximum(1.0, rho_of),
                      pairing=pairing)
    out.rings = rings
    return out


# ---------------------------------------------------------------------------
# contraction to minimality


def refine(M, tol=1e-3, max_iter=40, kappa=-0.5):
    """Contract the surface to discrete minimality (interior sup of the
    mean curvature at most tol), preserving all three reflections.

    Raises ValueError when the start surface is horizontally degenerate
    and ContractionFailure (carrying the residual history) when the
    iteration does not converge.
    """
    lam, ok = sv.nondegeneracy_check(M)
    if not ok:
        raise ValueError("start surface is horizontally degenerate "
                         "(smallest even-restricted eigenvalue %.3e)" % lam)
    u, _, state = sv.contraction_solve(M, kappa=kappa, tol=tol,
                                       max_iter=max_iter)
    po = symmetry_permutation(M, "axis")
    ps = symmetry_permutation(M, "swap")
    vals = u.values
    vals = 0.25 * (vals + vals[po] + vals[ps] + vals[ps][po])
    out = ms.normal_graph(M, ScalarField(M, vals))
    out.rings = getattr(M, "rings", None)
    res = float(np.abs(ms.mean_curvature(out).values
                       [out.interior_vertices()]).max())
    if res > 1.5 * tol:
        state.message = ("reflection averaging lost minimality "
                         "(interior sup |H| = %.3e)" % res)
        raise sv.ContractionFailure(state.message, state)
    return out


# ---------------------------------------------------------------------------
# reflections as vertex permutations


def symmetry_permutation(M, kind):
    """Vertex permutation realizing one reflection of the canonical frame.

    kind is 'vertical' (height negated), 'swap' (the two ends exchanged),
    or 'axis' (reflection across the vertical plane over the connecting
    geodesic).  Raises when the mesh is not symmetric.
    """
    if kind not in ("vertical", "swap", "axis"):
        raise ValueError("unknown reflection %r" % (kind,))
    axis, _ = standard_axes()
    s, sig = geo.disk_to_fermi(axis, M.z)
    coords = np.stack([s, sig, M.t], axis=1)
    image = coords.copy()
    col = {"swap": 0, "axis": 1, "vertical": 2}[kind]
    image[:, col] = -image[:, col]
    dist, idx = cKDTree(coords).query(image, k=1)
    if dist.max() > 1e-6 * (1.0 + np.abs(coords).max()) \
            or np.bincount(idx, minlength=M.n_vertices).max() > 1 \
            or not np.array_equal(idx[idx], np.arange(M.n_vertices)):
        raise ValueError("mesh is not symmetric under the %s reflection"
                         % kind)
    return idx


# ---------------------------------------------------------------------------
# neck curve


def _edge_neighbors(M):
    nbr = {}
    tri = M.triangles
    for aa, bb in ((0, 1), (1, 2), (2, 0)):
        for i, j in zip(tri[:, aa], tri[:, bb]):
            nbr.setdefault(int(i), set()).add(int(j))
            nbr.setdefault(int(j), set()).add(int(i))
    return nbr


def neck_loop(M):
    """Ordered vertex cycle of the section by the middle vertical plane.

    Selects the vertices lying on the plane over the equidistant geodesic
    and walks them along mesh edges; raises unless they form one closed
    loop.
    """
    axis, _ = standard_axes()
    s, _ = geo.disk_to_fermi(axis, M.z)
    sel = np.flatnonzero(np.abs(s) <= 1e-6)
    if sel.size < 3:
        raise ValueError("the middle-plane section holds no vertex loop")
    on = set(sel.tolist())
    nbr = _edge_neighbors(M)
    ring = {v: sorted(nbr.get(v, set()) & on) for v in on}
    if any(len(r) != 2 for r in ring.values()):
        raise ValueError("middle-plane section is not a single closed loop")
    start = int(sel[0])
    loop = [start]
    prev, cur = None, start
    while True:
        a, b = ring[cur]
        nxt = b if a == prev else a
        if nxt == start:
            break
        loop.append(nxt)
        prev, cur = cur, nxt
    if len(loop) != sel.size:
        raise ValueError("middle-plane section is not a single closed loop")
    return np.array(loop, dtype=int)


def necksize(M):
    """Ambient length of the closed neck curve cut by the middle plane."""
    loop = neck_loop(M)
    a, b = loop, np.roll(loop, -1)
    return float(np.sum(ms.ambient_distance(M.z[a], M.t[a],
                                            M.z[b], M.t[b])))


# ---------------------------------------------------------------------------
# fields from ambient isometries, spectrum, flux


def killing_jacobi_field(M, X):
    """Normal component of a Killing field along the surface."""
    comp = X.frame_components(M.z)
    return ScalarField(M, np.einsum("ij,ij->i", comp, M.normals))


def spectrum(M, m=6):
    """Lowest m stability eigenvalues with reflection parities.

    Eigenvalues are those of the negated stability operator with zero
    boundary values; each eigenvector is labeled even, odd, or mixed
    under the three reflections by mass-weighted correlation with its
    own reflected copy (threshold 0.95).
    """
    sys = sv.assemble_jacobi(M)
    vals, vecs = sv.lowest_eigenpairs(sys, k=m)
    perms = [symmetry_permutation(M, k) for k in ("vertical", "swap", "axis")]
    mass = sys.mass
    free = sys.free()
    A = (-sys.stiffness[free][:, free]).tocsr()
    parities = []
    residuals = []
    for i in range(vals.size):
        v = vecs[:, i]
        norm = float(np.sum(mass * v * v))
        labels = []
        for p in perms:
            c = float(np.sum(mass * v * v[p]) / norm)
            labels.append("even" if c >= 0.95 else
                          "odd" if c <= -0.95 else "mixed")
        parities.append(tuple(labels))
        vf = v[free]
        dv = mass[free] * vf
        residuals.append(float(np.linalg.norm(A @ vf - vals[i] * dv)
                               / np.linalg.norm(dv)))
    return SpectrumReport(vals, tuple(parities), np.array(residuals))


def _loop_edges_exist(M, loop):
    edges = set()
    tri = M.triangles
    for aa, bb in ((0, 1), (1, 2), (2, 0)):
        for i, j in zip(tri[:, aa], tri[:, bb]):
            edges.add((int(i), int(j)) if i < j else (int(j), int(i)))
    a, b = loop, np.roll(loop, -1)
    return all((int(min(i, j)), int(max(i, j))) in edges
               for i, j in zip(a, b))


def flux(M, loop, X):
    """Line integral of the Killing field against the loop conormal.

    loop is an ordered vertex cycle following mesh edges; the conormal is
    the in-surface unit normal to the loop, obtained by turning the
    direction of travel a quarter turn about the surface normal.  Raises
    if the loop does not close up along edges.
    """
    loop = np.asarray(loop, dtype=int)
    if loop.ndim != 1 or loop.size < 3:
        raise ValueError("loop must list at least three vertices")
    if np.unique(loop).size != loop.size:
        raise ValueError("loop repeats a vertex")
    if not _loop_edges_exist(M, loop):
        raise ValueError("loop must close up along mesh edges")
    comp = X.frame_components(M.z)
    a, b = loop, np.roll(loop, -1)
    za, ta, zb, tb = M.z[a], M.t[a], M.z[b], M.t[b]
    ea = ms._log3(za, ta, zb, tb)
    eb = -ms._log3(zb, tb, za, ta)
    ell = ms.ambient_distance(za, ta, zb, tb)

    def conormal(tangent, normals):
        nu = np.cross(tangent, normals)
        return nu / np.linalg.norm(nu, axis=1, keepdims=True)

    ga = np.einsum("ij,ij->i", comp[a], conormal(ea, M.normals[a]))
    gb = np.einsum("ij,ij->i", comp[b], conormal(eb, M.normals[b]))
    return float(np.sum(0.5 * ell * (ga + gb)))


# ---------------------------------------------------------------------------
# end graphs


def end_profile(M, separation, side=1, extent=None, grid_h=0.1):
    """Graph height of one end over its vertical plane, on a flat grid.

    separation is the distance between the two planes and side selects
    the end (+1 or -1).  Vertices of the 'end' region on that side are
    projected to the plane; their normal distances are resampled to a
    uniform grid (zero where the scattered data gives no coverage), ready
    for radial decay fits.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    s1 = 0.5 * separation * side
    q = geo._disk_to_hyp(M.z)
    sdist = q[:, 0] * np.cosh(s1) - q[:, 2] * np.sinh(s1)
    w = -side * np.arcsinh(sdist)
    sig = np.arcsinh(q[:, 1] / np.hypot(1.0, sdist))
    axis, _ = standard_axes()
    s_along, _ = geo.disk_to_fermi(axis, M.z)
    sel = (M.region == "end") & (side * s_along > 0.0)
    if not np.any(sel):
        raise ValueError("no end vertices on the requested side")
    pts = np.stack([sig[sel], M.t[sel]], axis=1)
    if extent is None:
        extent = 0.95 * np.abs(pts).max()
    out = PlanarField.on_box(extent, extent, grid_h)
    ss, tt = out.meshgrid()
    vals = interpolate.CloughTocher2DInterpolator(pts, w[sel])(ss, tt)
    return out.like(np.where(np.isfinite(vals), vals, 0.0))
