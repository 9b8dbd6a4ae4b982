"""Assembly of approximately minimal surfaces over geodesic networks.

Each segment of a validated network carries a refined bridge surface
from the catenoid library, positioned by the isometry that moves the
model pair of vertical planes onto the segment's two lines.  On every
line, each bridge's graph sheet is multiplied by a window that equals
one away from the junction midlines between adjacent necks and drops to
zero inside a narrow collar before each midline.  Windowed sheets are
clipped just short of the midlines, where they coincide exactly with
the bare vertical plane, and the flat rails are zipped into a single
watertight mesh that inherits the height reflection exactly.  All
assembly error is supported inside the junction collars; outside them
the mesh reproduces the library surfaces to refinement tolerance.

A report object measures sup|H| per junction strip in height boxes and
fits its decay against the distance to the nearest neck, and glue_pair
joins two assembled surfaces along a common end plane by merging their
networks and reassembling.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import geometry as geo
from . import mesh as ms
from . import catenoid as cat
from . import solver as sv
from .network import GeodesicNetwork, NetworkRejection, validate

__all__ = [
    "CutoffProfile", "LineStrips", "StripDecomposition", "CatenoidLibrary",
    "GluingReport", "decompose", "assemble", "mean_curvature_report",
    "glue_pair",
]


# ---------------------------------------------------------------------------
# cutoff profile

def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (6.0 * u - 15.0))


@dataclass(frozen=True)
class CutoffProfile:
    """One-sided taper: 0 at distance <= inner from a junction midline,
    1 at distance >= outer, quintic and monotone in between.
    derivative_bound records the measured maximum of |chi'| + |chi''|."""

    inner: float
    outer: float
    derivative_bound: float

    @classmethod
    def make(cls, inner, outer):
        if not 0.0 < inner < outer:
            raise ValueError("cutoff needs 0 < inner < outer")
        d = np.linspace(inner, outer, 20001)
        v = _smoothstep((d - inner) / (outer - inner))
        d1 = np.gradient(v, d)
        d2 = np.gradient(d1, d)
        bound = float((np.abs(d1) + np.abs(d2)).max())
        return cls(float(inner), float(outer), bound)

    def __call__(self, dist):
        dist = np.asarray(dist, dtype=float)
        return _smoothstep((dist - self.inner) / (self.outer - self.inner))


# ---------------------------------------------------------------------------
# strip decomposition

@dataclass(frozen=True)
class LineStrips:
    """Junction layout along one line: neck feet at neck_s, junction
    midlines at q; neck k's window spans bounds[k], where None marks a
    free half-plane side."""

    index: int
    neck_s: tuple
    segments: tuple
    q: tuple
    gaps: tuple
    bounds: tuple

    @property
    def n_necks(self):
        return len(self.neck_s)


@dataclass(frozen=True)
class StripDecomposition:
    """Junction-strip layout of a validated network.

    Junction strips of Fermi half-width q_half_width are centered on the
    midline between adjacent neck feet; the taper collars live inside
    them, between cutoff.inner and cutoff.outer from each midline.  mode
    is "strip" when the gap bound D >= 6 holds and "tight" when narrowed
    collars were requested via collar_scale."""

    metrics: object
    per_line: tuple
    cutoff: CutoffProfile
    collar_scale: float
    q_half_width: float
    mode: str

    def line_strips(self, i):
        return self.per_line[i]


def decompose(metrics, collar_scale=None):
    """Junction-strip layout of a validated network.

    Without an explicit collar_scale the gap bound D >= 6 is enforced;
    passing collar_scale in (0, 1] opts into proportionally narrowed
    junction strips for tighter networks, subject to D >= 6 * scale.
    """
    # Feet on lines deep in the disk carry coordinate noise well above
    # float eps; the 6.0 threshold has ample geometric margin, so give
    # boundary configurations a small slack.
    D = metrics.D + 0.01
    if collar_scale is None:
        if D < 6.0:
            raise ValueError(
                "necks too close for cutoff construction (minimal gap "
                "%.3f < 6); pass collar_scale to narrow the collars" % D)
        scale = 1.0
    else:
        scale = float(collar_scale)
        if not 0.0 < scale <= 1.0:
            raise ValueError("collar_scale must lie in (0, 1]")
        if D < 6.0 * scale:
            raise ValueError(
                "necks too close for cutoff construction (minimal gap "
                "%.3f < %.3f = 6 * collar_scale)" % (D, 6.0 * scale))
    omega = scale
    cutoff = CutoffProfile.make(0.25 * omega, omega)

    per_line = []
    for i in range(len(metrics.neck_s)):
        svals = np.asarray(metrics.neck_s[i], dtype=float)
        q = tuple(float(v) for v in 0.5 * (svals[:-1] + svals[1:]))
        bounds = []
        for k in range(svals.size):
            lo = q[k - 1] if k > 0 else None
            hi = q[k] if k < len(q) else None
            bounds.append((lo, hi))
        per_line.append(LineStrips(
            index=i, neck_s=tuple(float(v) for v in svals),
            segments=tuple(metrics.neck_segments[i]),
            q=q, gaps=tuple(float(v) for v in np.diff(svals)),
            bounds=tuple(bounds)))
    return StripDecomposition(
        metrics=metrics, per_line=tuple(per_line), cutoff=cutoff,
        collar_scale=scale, q_half_width=omega,
        mode="strip" if D >= 6.0 else "tight")


# ---------------------------------------------------------------------------
# catenoid library

class CatenoidLibrary:
    """Cache of refined bridge surfaces keyed by separation.

    Lookup accepts any separation within tol of a stored key; on a miss
    the bridge is built and refined to refine_tol on demand, so every
    cached surface is minimal to that tolerance.
    """

    def __init__(self, h=0.15, r_max=9.0, amplitude=0.3, tol=1e-3,
                 refine_tol=1e-9):
        self.h = float(h)
        self.r_max = float(r_max)
        self.amplitude = float(amplitude)
        self.tol = float(tol)
        self.refine_tol = float(refine_tol)
        self._entries = {}

    def get(self, eta):
        eta = float(eta)
        for key, mesh in self._entries.items():
            if abs(key - eta) <= self.tol:
                return mesh
        spec = cat.CatenoidSpec(eta=eta, r_max=self.r_max, h=self.h,
                                amplitude=self.amplitude)
        first = max(self.refine_tol, 1e-6)
        mesh = cat.refine(cat.build_ansatz(spec), tol=first, max_iter=60)
        if self.refine_tol < first:
            try:
                mesh = cat.refine(mesh, tol=self.refine_tol, max_iter=60)
            except sv.ContractionFailure:
                pass  # float floor of very large meshes; already minimal
                      # to the first-stage tolerance
        self._entries[eta] = mesh
        return mesh


_DEFAULT_LIBRARIES = {}


def _default_library(h, r_max, amplitude):
    key = (round(h, 6), round(r_max, 6), round(amplitude, 6))
    if key not in _DEFAULT_LIBRARIES:
        _DEFAULT_LIBRARIES[key] = CatenoidLibrary(
            h=h, r_max=r_max, amplitude=amplitude)
    return _DEFAULT_LIBRARIES[key]


# ---------------------------------------------------------------------------
# working mesh

class _Work:
    """Mutable vertex/triangle arrays while a piece is shaped and cut."""

    def __init__(self, z, t, tris, region, rho, side):
        self.z = np.asarray(z, dtype=complex)
        self.t = np.asarray(t, dtype=float)
        self.tris = np.asarray(tris, dtype=int)
        self.region = np.asarray(region, dtype="<U10")
        self.rho = np.asarray(rho, dtype=float)
        self.side = np.asarray(side, dtype=float)

    def append_vertex(self, z, t, region, rho, side):
        idx = self.z.size
        self.z = np.concatenate([self.z, [complex(z)]])
        self.t = np.concatenate([self.t, [float(t)]])
        self.region = np.concatenate([self.region, [region]])
        self.rho = np.concatenate([self.rho, [float(rho)]])
        self.side = np.concatenate([self.side, [float(side)]])
        return idx


def _merge_works(works):
    fields = {"z": [], "t": [], "region": [], "rho": [], "side": []}
    tris = []
    offset = 0
    for w in works:
        for name in fields:
            fields[name].append(getattr(w, name))
        tris.append(w.tris + offset)
        offset += w.z.size
    return _Work(np.concatenate(fields["z"]), np.concatenate(fields["t"]),
                 np.concatenate(tris), np.concatenate(fields["region"]),
                 np.concatenate(fields["rho"]),
                 np.concatenate(fields["side"]))


def _succ(tr, v):
    k = int(np.where(tr == v)[0][0])
    return int(tr[(k + 1) % 3])


def _chart_dist(work, a, b):
    return float(np.hypot(abs(work.z[a] - work.z[b]),
                          work.t[a] - work.t[b]))


def _diag_tie_key(work, a, b):
    ts = sorted([round(abs(work.t[a]), 9), round(abs(work.t[b]), 9)])
    return tuple(ts)


def _clip(work, f, exact_line=None):
    """Keep the f <= 0 part of the mesh, splitting crossing triangles at
    the f = 0 line (chart-linear, mirror-consistent).  Vertices with
    f = 0 exactly lie on the cut and are reused instead of duplicated;
    the caller snaps nearly-on-line values to 0 to avoid slivers.  When
    exact_line is (geodesic, s_cut) new cut vertices are placed exactly
    on that plane.  Returns the ids of the rail vertices."""
    f = np.asarray(f, dtype=float)
    tri = work.tris
    tf = f[tri]
    full = tri[(tf <= 0.0).all(axis=1)]
    crossing = tri[(tf > 0.0).any(axis=1) & (tf < 0.0).any(axis=1)]

    cut_cache = {}

    def cut_vertex(a, b):
        key = (a, b) if a < b else (b, a)
        if key in cut_cache:
            return cut_cache[key]
        lam = f[a] / (f[a] - f[b])
        t = work.t[a] + lam * (work.t[b] - work.t[a])
        if abs(t) < 1e-13:
            t = 0.0
        if exact_line is not None:
            g, s_cut = exact_line
            z = complex(geo.fermi_to_disk(g, s_cut, 0.0))
        else:
            z = work.z[a] + lam * (work.z[b] - work.z[a])
        rho = work.rho[a] + lam * (work.rho[b] - work.rho[a])
        idx = work.append_vertex(z, t, "strip", rho, work.side[a])
        cut_cache[key] = idx
        return idx

    new_tris = []
    for tr in crossing:
        poly = []
        for idx in range(3):
            a, b = int(tr[idx]), int(tr[(idx + 1) % 3])
            if f[a] <= 0.0:
                poly.append(a)
            if (f[a] < 0.0 < f[b]) or (f[b] < 0.0 < f[a]):
                poly.append(cut_vertex(a, b))
        if len(poly) == 3:
            new_tris.append(tuple(poly))
        elif len(poly) == 4:
            d02 = _chart_dist(work, poly[0], poly[2])
            d13 = _chart_dist(work, poly[1], poly[3])
            if abs(d02 - d13) < 1e-12:
                first = (_diag_tie_key(work, poly[0], poly[2])
                         <= _diag_tie_key(work, poly[1], poly[3]))
            else:
                first = d02 < d13
            if first:
                new_tris.append((poly[0], poly[1], poly[2]))
                new_tris.append((poly[0], poly[2], poly[3]))
            else:
                new_tris.append((poly[0], poly[1], poly[3]))
                new_tris.append((poly[1], poly[2], poly[3]))

    on_line = [int(v) for v in np.unique(tri) if f[v] == 0.0]
    parts = [x for x in (full, np.array(new_tris, dtype=int).reshape(-1, 3))
             if x.size]
    work.tris = (np.concatenate(parts) if parts
                 else np.empty((0, 3), dtype=int))
    used = np.zeros(work.z.size, dtype=bool)
    if work.tris.size:
        used[work.tris] = True
    return [v for v in sorted(set(cut_cache.values()) | set(on_line))
            if used[v]]


def _ensure_rail_t0(work, rail):
    """Sort a rail by height and insert an exact t = 0 vertex when the
    chain only crosses zero inside an edge; returns the sorted rail."""
    if len(rail) < 2:
        raise ValueError("mesh stitch mismatch: junction rail degenerate")
    order = np.argsort(work.t[rail])
    rail = [rail[k] for k in order]
    t = work.t[rail]
    if np.abs(t).min() < 1e-12:
        return rail
    below = int(np.searchsorted(t, 0.0)) - 1
    if below < 0 or below + 1 >= len(rail):
        raise ValueError("junction rail does not cross the symmetry plane")
    a, b = rail[below], rail[below + 1]
    lam = work.t[a] / (work.t[a] - work.t[b])
    z = work.z[a] + lam * (work.z[b] - work.z[a])
    rho = work.rho[a] + lam * (work.rho[b] - work.rho[a])
    v = work.append_vertex(z, 0.0, "strip", rho, work.side[a])
    has_a = np.any(work.tris == a, axis=1)
    has_b = np.any(work.tris == b, axis=1)
    hit = np.nonzero(has_a & has_b)[0]
    if hit.size != 1:
        raise ValueError("mesh stitch mismatch: rail edge not on the "
                         "boundary")
    k = int(hit[0])
    tr = work.tris[k].copy()
    a0, b0 = int(a), int(b)
    if _succ(tr, a0) != b0:
        a0, b0 = b0, a0
    c = [int(x) for x in tr if x not in (a0, b0)][0]
    work.tris[k] = (a0, v, c)
    work.tris = np.concatenate([work.tris, [[v, b0, c]]])
    return rail[:below + 1] + [v] + rail[below + 1:]


def _zip_rails(work, left, right):
    """Triangulate the band between two rails, each sorted by height and
    containing an exact t = 0 vertex; the upper half is stitched greedily
    by shortest diagonal and reflected to the lower half so the band is
    exactly height-symmetric."""
    iz_l = int(np.argmin(np.abs(work.t[left])))
    iz_r = int(np.argmin(np.abs(work.t[right])))
    mirror = {}
    for chain, iz in ((left, iz_l), (right, iz_r)):
        if len(chain) - 1 - iz != iz:
            raise ValueError("mesh stitch mismatch: junction rail is not "
                             "height-symmetric")
        mirror[chain[iz]] = chain[iz]
        for du in range(1, iz + 1):
            mirror[chain[iz + du]] = chain[iz - du]
    up_l = left[iz_l:]
    up_r = right[iz_r:]

    upper = []
    i = j = 0
    while i < len(up_l) - 1 or j < len(up_r) - 1:
        adv_left = j == len(up_r) - 1 or (
            i < len(up_l) - 1
            and _chart_dist(work, up_l[i + 1], up_r[j])
            <= _chart_dist(work, up_l[i], up_r[j + 1]))
        if adv_left:
            upper.append((up_l[i], up_r[j], up_l[i + 1]))
            i += 1
        else:
            upper.append((up_l[i], up_r[j], up_r[j + 1]))
            j += 1
    upper = np.array(upper, dtype=int).reshape(-1, 3)
    lower = np.array([[mirror[int(v)] for v in row] for row in upper],
                     dtype=int)[:, [0, 2, 1]]
    band = np.concatenate([upper, lower])

    if _band_conflicts(work.tris, band):
        band = band[:, [0, 2, 1]]
    work.tris = np.concatenate([work.tris, band])


def _band_conflicts(tris, band):
    """True when the band repeats a directed edge of the existing mesh
    (so it must be flipped to mesh watertightly)."""
    n = int(max(tris.max(), band.max())) + 1
    codes = set()
    for a, b in ((0, 1), (1, 2), (2, 0)):
        codes.update((tris[:, a].astype(np.int64) * n
                      + tris[:, b]).tolist())
    for a, b in ((0, 1), (1, 2), (2, 0)):
        fwd = band[:, a].astype(np.int64) * n + band[:, b]
        rev = band[:, b].astype(np.int64) * n + band[:, a]
        for code_f, code_r in zip(fwd.tolist(), rev.tolist()):
            if code_f in codes:
                return True
            if code_r in codes:
                return False
    raise ValueError("mesh stitch mismatch: band shares no edge with "
                     "the clipped pieces")


# ---------------------------------------------------------------------------
# placement

def _neck_side_signs(metrics):
    """Sign of the far foot's normal coordinate, per (line, neck index)."""
    signs = {}
    for i in range(len(metrics.neck_s)):
        for k, seg in enumerate(metrics.neck_segments[i]):
            other = seg[1] if seg[0] == i else seg[0]
            foot_there = metrics.feet[seg][1 if seg[0] == i else 0]
            _, sig = geo.fermi_chart(metrics.lines[i], foot_there)
            signs[(i, k)] = 1.0 if sig >= 0 else -1.0
            del other
    return signs


def _orient_pieces(strips):
    """Choose a triangle-winding flip per segment so that the two sheets
    meeting at every junction agree in orientation.  Adjacent necks on
    the same side of their line keep equal flips; necks on opposite
    sides alternate.  Returns {segment: bool}; raises when the network
    admits no consistent choice."""
    metrics = strips.metrics
    signs = _neck_side_signs(metrics)
    constraints = []
    for i, stripline in enumerate(strips.per_line):
        for q_idx in range(len(stripline.q)):
            seg_a = stripline.segments[q_idx]
            seg_b = stripline.segments[q_idx + 1]
            same = signs[(i, q_idx)] * signs[(i, q_idx + 1)] > 0
            constraints.append((seg_a, seg_b, same))
    flip = {}
    for seg in metrics.separations:
        flip.setdefault(seg, None)
    adj = {}
    for a, b, same in constraints:
        adj.setdefault(a, []).append((b, same))
        adj.setdefault(b, []).append((a, same))
    for root in flip:
        if flip[root] is not None:
            continue
        flip[root] = False
        queue = [root]
        while queue:
            cur = queue.pop()
            for other, same in adj.get(cur, ()):
                want = flip[cur] if same else not flip[cur]
                if flip[other] is None:
                    flip[other] = want
                    queue.append(other)
                elif flip[other] != want:
                    raise ValueError(
                        "network admits no orientable assembly: junction "
                        "side pattern is inconsistent around a cycle")
    return flip


def _placement(perp, feet, idx_lo, idx_hi):
    """Isometry carrying the model frame (bridge axis along the oriented
    real diameter, waist at the origin) onto a segment, and the line
    indices hit by the model +x and -x sides."""
    s1, _ = geo.fermi_chart(perp, feet[0])
    s2, _ = geo.fermi_chart(perp, feet[1])
    mid = 0.5 * (s1 + s2)
    iso = geo.dilation_along(perp, mid) @ geo.PlaneIsometry(
        geo._axis_frame_matrix(perp))
    if s2 > s1:
        return iso, mid, idx_hi, idx_lo
    return iso, mid, idx_lo, idx_hi


def _model_side(lib_mesh):
    """Sign of the model-axis coordinate per vertex, 0 on the neck."""
    axis, _ = cat.standard_axes()
    s_along, _ = geo.disk_to_fermi(axis, lib_mesh.z)
    side = np.sign(s_along)
    side[lib_mesh.region == "neck"] = 0.0
    return side


# ---------------------------------------------------------------------------
# assembly

def assemble(strips, library=None, h=0.15, r_max=None, amplitude=0.3):
    """Watertight approximately minimal surface over a decomposed network.

    Each segment receives a positioned library bridge; on every line the
    bridge sheets are multiplied by windows vanishing inside the junction
    collars, clipped at exactly-flat rails just short of the junction
    midlines, and zipped height-symmetrically.  The mesh carries region
    tags, the mollified neck-distance weight R, the exact height pairing,
    and the strip decomposition used to build it.
    """
    metrics = strips.metrics
    if not metrics.lines:
        raise ValueError("metrics lack line geometry; rebuild via validate()")
    lines = metrics.lines
    half_gap = max((float(np.max(g)) * 0.5 for g in metrics.gaps
                    if np.asarray(g).size), default=0.0)
    if r_max is None:
        r_max = max(6.0, half_gap + 2.0)
    omega = strips.q_half_width
    if r_max < half_gap + omega + 0.5:
        raise ValueError(
            "catenoid truncation radius %.2f does not reach past the "
            "junction strips (largest half-gap %.2f); increase r_max"
            % (r_max, half_gap))
    stencil_margin = 2.0 * h
    outer = omega - stencil_margin
    has_junctions = any(stripline.q for stripline in strips.per_line)
    if has_junctions and outer <= strips.cutoff.inner:
        raise ValueError(
            "mesh spacing %.3f too coarse for the junction collar "
            "(half-width %.3f); decrease h or increase collar_scale"
            % (h, omega))
    cutoff = (CutoffProfile.make(strips.cutoff.inner, outer)
              if has_junctions else strips.cutoff)
    for stripline in strips.per_line:
        for k, (lo, hi) in enumerate(stripline.bounds):
            p = stripline.neck_s[k]
            for bound in (lo, hi):
                if bound is not None and abs(bound - p) < 1.05 + outer:
                    raise ValueError(
                        "junction collar would cut into a neck tube "
                        "(foot-to-midline distance %.2f); decrease "
                        "collar_scale" % abs(bound - p))
    if library is None:
        library = _default_library(h, r_max, amplitude)

    flip = _orient_pieces(strips)
    works = []
    rails = {}
    centers = []
    for seg in metrics.separations:
        lib_mesh = library.get(metrics.separations[seg])
        perp = geo.common_perpendicular(lines[seg[0]], lines[seg[1]])
        iso, mid, idx_plus, idx_minus = _placement(
            perp, metrics.feet[seg], seg[0], seg[1])
        centers.append(complex(geo.fermi_to_disk(perp, mid, 0.0)))
        tris = lib_mesh.triangles.copy()
        if flip[seg]:
            tris = tris[:, [0, 2, 1]]
        work = _Work(iso.apply_z(lib_mesh.z), lib_mesh.t.copy(),
                     tris, lib_mesh.region.copy(),
                     np.maximum(lib_mesh.R, 1.0), _model_side(lib_mesh))
        piece_rails = _shape_piece(work, strips, seg, idx_plus, idx_minus,
                                   lines, cutoff,
                                   snap=min(0.3 * h, 0.4 * cutoff.inner))
        base = sum(w.z.size for w in works)
        for key, ids in piece_rails.items():
            if key in rails:
                raise ValueError("mesh stitch mismatch: junction claimed "
                                 "twice")
            rails[key] = [v + base for v in ids]
        works.append(work)

    merged = _merge_works(works)
    for i, q_idx in sorted({key[:2] for key in rails}):
        try:
            lo_ids = rails[(i, q_idx, "lo")]
            hi_ids = rails[(i, q_idx, "hi")]
        except KeyError:
            raise ValueError(
                "junction %d on line %d has only one side; mesh stitch "
                "mismatch" % (q_idx, i))
        left = _ensure_rail_t0(merged, lo_ids)
        right = _ensure_rail_t0(merged, hi_ids)
        _zip_rails(merged, left, right)

    out = _finish_mesh(merged, centers)
    out.strips = strips
    out.neck_centers = tuple(centers)
    out.cutoff_used = cutoff
    out.build_h = float(h)
    out.build_r_max = float(r_max)
    out.build_amplitude = float(amplitude)
    return out


def _shape_piece(work, strips, seg, idx_plus, idx_minus, lines, cutoff,
                 snap):
    """Window the two sheets of a placed piece and clip them at their
    junction rails; returns rail ids keyed (line, junction, 'lo'|'hi').
    Vertices within snap of a cut line are treated as lying on it."""
    rails = {}
    for line_idx, model_sign in ((idx_plus, 1.0), (idx_minus, -1.0)):
        stripline = strips.per_line[line_idx]
        k = stripline.segments.index(tuple(seg))
        lo, hi = stripline.bounds[k]
        g = lines[line_idx]
        mask = work.side == model_sign
        if not np.any(mask):
            raise ValueError("mesh stitch mismatch: placed piece lost a "
                             "sheet")
        s, sig = geo.disk_to_fermi(g, work.z[mask])

        window = np.ones_like(s)
        if lo is not None:
            window = window * cutoff(s - lo)
        if hi is not None:
            window = window * cutoff(hi - s)
        touched = window < 1.0
        if np.any(touched):
            zm = work.z[mask]
            zm[touched] = geo.fermi_to_disk(
                g, s[touched], (window * sig)[touched])
            work.z[mask] = zm

        mask_idx = np.nonzero(mask)[0]
        for bound, half in ((lo, "hi"), (hi, "lo")):
            if bound is None:
                continue
            if half == "lo":            # piece below junction q_k
                cut = bound - 0.5 * cutoff.inner
                fs = s - cut
                q_idx = k
            else:                       # piece above junction q_{k-1}
                cut = bound + 0.5 * cutoff.inner
                fs = cut - s
                q_idx = k - 1
            fs = np.where(np.abs(fs) <= snap, 0.0, fs)
            f = np.full(work.z.size, -1.0)
            f[mask_idx] = fs
            rail = _clip(work, f, exact_line=(g, cut))
            rails[(line_idx, q_idx, half)] = rail
    return rails


def _finish_mesh(work, centers):
    """Drop unreferenced vertices, recompute the distance weight and
    height pairing, and build the mesh."""
    used = np.zeros(work.z.size, dtype=bool)
    used[work.tris] = True
    index = np.cumsum(used) - 1
    work.z = work.z[used]
    work.t = work.t[used]
    work.region = work.region[used]
    work.rho = work.rho[used]
    work.side = work.side[used]
    work.tris = index[work.tris]

    d = np.stack([ms.ambient_distance(work.z, work.t, zc, 0.0)
                  for zc in centers], axis=0)
    rsoft = -np.logaddexp.reduce(-d, axis=0)
    R = np.sqrt(1.0 + np.maximum(rsoft, 0.0) ** 2)
    pts = np.stack([work.z.real, work.z.imag, work.t], axis=1)
    mirrored = np.stack([work.z.real, work.z.imag, -work.t], axis=1)
    dist, pair = cKDTree(pts).query(mirrored)
    if dist.max() > 1e-9:
        raise ValueError("mesh stitch mismatch: height pairing broken by "
                         "%.2e" % dist.max())
    return ms.SurfaceMesh(work.z, work.t, work.tris, region=work.region,
                          R=R, pairing=pair)


# ---------------------------------------------------------------------------
# mean curvature report

@dataclass
class GluingReport:
    """Mean-curvature error of an assembled surface, by junction box."""

    rows: list          # (line, junction, t_center, r, sup_H, vertices)
    slope: float
    intercept: float
    inside_sup: float
    outside_sup: float

    def table(self):
        out = ["line\tjunction\tt_center\tr\tsup_H\tvertices"]
        for row in self.rows:
            out.append("%d\t%d\t%+.1f\t%.4f\t%.6e\t%d" % row)
        out.append("# slope of log(sup_H * sqrt(r)) vs r: %.4f" % self.slope)
        out.append("# sup |H| outside junction strips: %.3e"
                   % self.outside_sup)
        return "\n".join(out)


def mean_curvature_report(M, strips=None):
    """Decay of the assembly error inside the junction strips.

    Sheet vertices with |s - q| within the junction half-width of a
    midline q are grouped into height-2 boxes; each box reports sup|H|
    against r, the distance from the box to the nearest adjacent neck
    (half-gap and height combined).  The slope of log(sup|H| sqrt(r))
    against r fits the decay rate; interior vertices outside every
    junction strip contribute to outside_sup.
    """
    if strips is None:
        strips = getattr(M, "strips", None)
    if strips is None:
        raise ValueError("mesh carries no strip decomposition")
    lines = strips.metrics.lines
    H = np.abs(ms.mean_curvature(M).values)
    interior = M.interior_vertices()
    omega = strips.q_half_width

    in_strip = np.zeros(M.n_vertices, dtype=bool)
    rows = []
    for i, stripline in enumerate(strips.per_line):
        if not stripline.q:
            continue
        s, sig = geo.disk_to_fermi(lines[i], M.z)
        sheet = np.abs(sig) <= 1.0
        for q_idx, q in enumerate(stripline.q):
            sel = sheet & (np.abs(s - q) <= omega) & interior
            in_strip |= sel
            if not np.any(sel):
                continue
            t_sel = M.t[sel]
            h_sel = H[sel]
            half_gap = 0.5 * stripline.gaps[q_idx]
            for t_c in np.arange(0.0, np.abs(t_sel).max() + 1.0, 2.0):
                for sgn in ((1.0,) if t_c == 0.0 else (1.0, -1.0)):
                    box = np.abs(t_sel - sgn * t_c) <= 1.0
                    if box.sum() < 3:
                        continue
                    rows.append((i, q_idx, sgn * t_c,
                                 float(np.hypot(half_gap, t_c)),
                                 float(h_sel[box].max()), int(box.sum())))

    rows.sort(key=lambda row: (row[0], row[1], row[2]))
    rs = np.array([row[3] for row in rows])
    hs = np.array([row[4] for row in rows])
    good = hs > 0
    if good.sum() >= 3:
        y = np.log(hs[good] * np.sqrt(rs[good]))
        A = np.stack([rs[good], np.ones(int(good.sum()))], axis=1)
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        slope, intercept = float(coef[0]), float(coef[1])
    else:
        slope, intercept = float("nan"), float("nan")
    outside = interior & ~in_strip
    return GluingReport(
        rows=rows, slope=slope, intercept=intercept,
        inside_sup=float(H[in_strip].max()) if np.any(in_strip) else 0.0,
        outside_sup=float(H[outside].max()) if np.any(outside) else 0.0)


# ---------------------------------------------------------------------------
# pairwise gluing

def glue_pair(M1, M2, end1, end2, iso1=None, iso2=None, collar_scale=None,
              library=None, h=None, r_max=None, amplitude=None):
    """Join two assembled surfaces along one end plane each.

    end1 and end2 name the end planes (lines of the parents' networks);
    iso1 and iso2 position the parents so those planes coincide.  The
    parents' networks are merged across the now-common line and the
    joint surface is reassembled deterministically from the same
    library, so the necks of both parents persist and the shared plane
    carries all of their sheets.
    """
    for M in (M1, M2):
        if getattr(M, "strips", None) is None:
            raise ValueError("glue_pair needs surfaces built by assemble()")
    iso1 = iso1 or geo.PlaneIsometry.identity()
    iso2 = iso2 or geo.PlaneIsometry.identity()
    for iso in (iso1, iso2):
        if abs(iso.t_shift) > 0.0:
            raise ValueError("vertical shifts break the height reflection")

    nets = []
    ends = []
    for M, iso, end in ((M1, iso1, end1), (M2, iso2, end2)):
        metrics = M.strips.metrics
        if isinstance(end, (int, np.integer)):
            e = int(end)
            if not 0 <= e < len(metrics.lines):
                raise ValueError("end plane index out of range")
        else:
            e = _line_index(metrics.lines, end)
        if e is None:
            raise ValueError("end plane is not a line of the surface's "
                             "network")
        segs = sorted({s for per in metrics.neck_segments for s in per})
        nets.append(([iso.apply_geodesic(L) for L in metrics.lines], segs))
        ends.append(e)

    (lines1, segs1), (lines2, segs2) = nets
    e1, e2 = ends
    if _line_mismatch(lines1[e1], lines2[e2]) > 1e-8:
        raise ValueError("aligned end planes do not coincide; adjust the "
                         "alignment isometries")

    remap = {}
    lines = list(lines1)
    for j, L in enumerate(lines2):
        if j == e2:
            remap[j] = e1
        else:
            remap[j] = len(lines)
            lines.append(L)
    segments = list(segs1) + [tuple(sorted((remap[a], remap[b])))
                              for a, b in segs2]
    try:
        metrics = validate(GeodesicNetwork(tuple(lines), tuple(segments)))
    except NetworkRejection as exc:
        raise ValueError(
            "glued surfaces overlap; bring the parents into general "
            "position first (%s)" % "; ".join(exc.violations)) from exc

    if collar_scale is not None:
        scale = collar_scale
    elif metrics.D >= 6.0 - 0.01:
        scale = None
    else:
        scale = min(M.strips.collar_scale or 1.0 for M in (M1, M2))
    strips = decompose(metrics, collar_scale=scale)
    build_h = h if h is not None else getattr(M1, "build_h", 0.15)
    build_amp = (amplitude if amplitude is not None
                 else getattr(M1, "build_amplitude", 0.3))
    return assemble(strips, library=library, h=build_h, r_max=r_max,
                    amplitude=build_amp)


def _line_index(lines, g):
    for i, L in enumerate(lines):
        if _line_mismatch(L, g) <= 1e-8:
            return i
    return None


def _line_mismatch(g1, g2):
    za = np.exp(1j * np.array([g1.a.angle, g1.b.angle]))
    zb = np.exp(1j * np.array([g2.a.angle, g2.b.angle]))
    direct = max(abs(za[0] - zb[0]), abs(za[1] - zb[1]))
    swapped = max(abs(za[0] - zb[1]), abs(za[1] - zb[0]))
    return float(min(direct, swapped))
