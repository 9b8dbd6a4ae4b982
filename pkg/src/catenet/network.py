"""Geodesic networks: families of disjoint geodesic lines joined by
common-perpendicular segments, the combinatorial skeleton from which the
glued surfaces are assembled.

A network is admissible when every connected pair of lines is ultraparallel
with separation strictly between 0 and eta0(), and no two neck feet on a
line coincide.  Derived metrics: per-segment separations, neck feet and
midpoints on each line, gaps between adjacent necks, the minimal neck
separation D and the maximal neck parameter eta.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import geometry as geo

__all__ = [
    "GeodesicNetwork", "NetworkMetrics", "NetworkRejection", "validate",
    "compute_topology", "symmetric_ring", "comb_network", "cycle_neck_bound",
    "deform", "deformation_dimension",
]


class NetworkRejection(ValueError):
    """Raised when a network fails admissibility; carries the full report."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("network rejected:\n" + "\n".join(self.violations))


@dataclass(frozen=True, eq=False)
class GeodesicNetwork:
    """Lines indexed 0..n-1 plus unordered index pairs marking segments."""

    lines: tuple
    segments: tuple
    allow_disconnected: bool = False

    def __post_init__(self):
        lines = tuple(self.lines)
        n = len(lines)
        seen = set()
        segs = []
        for pair in self.segments:
            i, j = sorted(pair)
            if i == j:
                raise ValueError(f"segment ({i},{j}) connects a line to itself")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"segment ({i},{j}) references a missing line")
            if (i, j) not in seen:
                seen.add((i, j))
                segs.append((i, j))
        object.__setattr__(self, "lines", lines)
        object.__setattr__(self, "segments", tuple(segs))

    @property
    def n_lines(self):
        return len(self.lines)

    def neighbors(self, i):
        out = []
        for a, b in self.segments:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out

    def is_connected(self):
        if self.n_lines == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in self.neighbors(i):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n_lines


@dataclass(frozen=True, eq=False)
class NetworkMetrics:
    """Derived geometry of an admissible network.

    separations maps each segment (i, j) to its length; feet maps it to the
    pair of perpendicular feet (on line i, on line j).  Per line, neck data
    is ordered by the Fermi arclength coordinate along that line.
    """

    separations: dict
    feet: dict
    neck_s: tuple          # per line: array of s-coordinates of its necks
    neck_points: tuple     # per line: tuple of DiskPoint
    neck_segments: tuple   # per line: tuple of segment keys, aligned with neck_s
    midpoints: tuple       # per line: tuple of DiskPoint between adjacent necks
    gaps: tuple            # per line: array of gaps between adjacent necks
    D_per_line: tuple
    D: float
    eta: float
    lines: tuple = ()      # the geodesics themselves, in network order


def validate(net):
    """Check admissibility and return NetworkMetrics; raise NetworkRejection
    listing every violated condition otherwise."""
    violations = []
    separations = {}
    feet = {}
    eta_sup = geo.eta0()
    for i, j in net.segments:
        try:
            sep = geo.geodesic_distance(net.lines[i], net.lines[j])
        except ValueError as exc:
            violations.append(f"segment ({i},{j}): {exc}")
            continue
        if sep.kind != "ultraparallel":
            violations.append(
                f"segment ({i},{j}): lines are {sep.kind}; "
                "connected lines must be ultraparallel")
            continue
        if not sep.length < eta_sup:
            violations.append(
                f"segment ({i},{j}): separation {sep.length:.6f} is not "
                f"strictly below the admissible supremum {eta_sup:.6f}")
            continue
        separations[(i, j)] = sep.length
        feet[(i, j)] = (sep.foot1, sep.foot2)

    if not net.allow_disconnected and not net.is_connected():
        violations.append("network graph is disconnected")

    neck_s, neck_points, neck_segments, midpoints, gaps, d_line = \
        [], [], [], [], [], []
    if not violations:
        for i, line in enumerate(net.lines):
            entries = []
            for key, (f1, f2) in feet.items():
                if i == key[0]:
                    entries.append((geo.fermi_chart(line, f1)[0], f1, key))
                elif i == key[1]:
                    entries.append((geo.fermi_chart(line, f2)[0], f2, key))
            entries.sort(key=lambda e: e[0])
            svals = np.array([e[0] for e in entries])
            for a in range(len(entries) - 1):
                if svals[a + 1] - svals[a] < 1e-9:
                    violations.append(
                        f"line {i}: neck points of segments {entries[a][2]} "
                        f"and {entries[a + 1][2]} coincide")
            neck_s.append(svals)
            neck_points.append(tuple(e[1] for e in entries))
            neck_segments.append(tuple(e[2] for e in entries))
            mids = tuple(line.point_at(0.5 * (svals[a] + svals[a + 1]))
                         for a in range(len(entries) - 1))
            midpoints.append(mids)
            g = np.diff(svals)
            gaps.append(g)
            d_line.append(float(g.min()) if g.size else np.inf)

    if violations:
        raise NetworkRejection(violations)

    return NetworkMetrics(
        separations=separations, feet=feet,
        neck_s=tuple(neck_s), neck_points=tuple(neck_points),
        neck_segments=tuple(neck_segments), midpoints=tuple(midpoints),
        gaps=tuple(gaps), D_per_line=tuple(d_line),
        D=float(min(d_line)), eta=float(max(separations.values())),
        lines=tuple(net.lines))


def compute_topology(net):
    """(genus, ends) of the surface the network encodes: ends = number of
    lines, genus = independent cycles of the segment graph."""
    if not net.is_connected():
        raise ValueError("topology is defined for connected networks only")
    return len(net.segments) - net.n_lines + 1, net.n_lines


def _x_axis():
    return geo.Geodesic.from_angles(np.pi, 0.0)


def _y_axis():
    return geo.Geodesic.from_angles(1.5 * np.pi, 0.5 * np.pi)


def symmetric_ring(j, eta):
    """Ring of j geodesics invariant under rotation by 2pi/j, consecutive
    lines connected at separation exactly eta (solved numerically)."""
    if j < 3:
        raise ValueError("a ring needs at least 3 lines")
    if not 0.0 < eta < geo.eta0():
        raise ValueError("eta must lie strictly between 0 and eta0()")
    omega = 2.0 * np.pi / j

    def gap(psi):
        g0 = geo.Geodesic.from_angles(-psi, psi)
        g1 = geo.Geodesic.from_angles(omega - psi, omega + psi)
        sep = geo.geodesic_distance(g0, g1)
        return sep.length if sep.kind == "ultraparallel" else 0.0

    lo, hi = 1e-4, 0.5 * omega - 1e-9
    if not gap(lo) > eta:
        raise ValueError(f"eta={eta} infeasible for a ring of {j} lines")
    psi = brentq(lambda p: gap(p) - eta, lo, hi, xtol=1e-15)
    lines = [geo.Geodesic.from_angles(omega * i - psi, omega * i + psi)
             for i in range(j)]
    segments = [(i, (i + 1) % j) for i in range(j)]
    return GeodesicNetwork(tuple(lines), tuple(segments))


def comb_network(teeth, eta, spacing):
    """Spine geodesic with `teeth` parallel lines attached at separation eta,
    feet equally spaced along the spine.  Adjacent spine necks are exactly
    `spacing` apart, so the minimal neck separation is `spacing` by
    construction; teeth alternate sides of the spine."""
    if teeth < 1:
        raise ValueError("need at least one tooth")
    if not 0.0 < eta < geo.eta0():
        raise ValueError("eta must lie strictly between 0 and eta0()")
    spine = _x_axis()
    yax = _y_axis()
    s0 = -0.5 * spacing * (teeth - 1)
    lines = [spine]
    segments = []
    for i in range(teeth):
        side = 1.0 if i % 2 == 0 else -1.0
        iso = geo.dilation_along(spine, s0 + i * spacing) \
            @ geo.dilation_along(yax, side * eta)
        lines.append(iso.apply_geodesic(spine))
        segments.append((0, i + 1))
    return GeodesicNetwork(tuple(lines), tuple(segments))


def _cycle_step_trace(k, d, eta):
    """Real half-trace of the edge-midpoint step isometry of the equilateral
    right-angled 2k-gon walk with alternating sides (d, eta)."""
    xax = _x_axis()
    origin = geo.DiskPoint(0.0, 0.0)
    quarter = geo.rotation_about(origin, 0.5 * np.pi)
    step = (geo.dilation_along(xax, 0.5 * d) @ quarter
            @ geo.dilation_along(xax, eta) @ quarter
            @ geo.dilation_along(xax, 0.5 * d))
    return float(np.real(np.trace(step.m))) / 2.0


def cycle_neck_bound(k, D):
    """Largest admissible separation eta for which a closed right-angled
    2k-gon with alternating sides (>= D, eta) exists, within the rotationally
    symmetric family.  The polygon closes when the midpoint-to-midpoint step
    isometry is a rotation by exactly 2pi/k; the walk trace condition is
    solved for eta at the tightest side length d = D."""
    if k < 3:
        raise ValueError("a cycle needs at least 3 lines")
    target = np.cos(np.pi / k)

    def f(eta):
        return abs(_cycle_step_trace(k, D, eta)) - target

    # any closing eta is below the k -> infinity envelope; pad the bracket
    lo, hi = 1e-8, 1.0 + 2.0 * np.arcsinh(1.0 / np.sinh(0.5 * D))
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0.0:
        raise ValueError(f"no closed cycle found for k={k}, D={D}")
    eta = brentq(f, lo, hi, xtol=1e-13)
    return min(float(eta), geo.eta0())


def deformation_dimension(net):
    """Number of endpoint-displacement parameters: two per line."""
    return 2 * net.n_lines


def deform(net, eps, max_step=0.5):
    """Displace the ideal endpoints of every line by the angles in eps
    (shape n_lines x 2) and revalidate.  Raises NetworkRejection if the
    deformed network is no longer admissible."""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (net.n_lines, 2):
        raise ValueError(f"deformation must have shape ({net.n_lines}, 2)")
    if eps.size and np.abs(eps).max() > max_step:
        raise ValueError(f"deformation exceeds the configured bound {max_step}")
    lines = tuple(
        geo.Geodesic.from_angles(g.a.angle + e1, g.b.angle + e2)
        for g, (e1, e2) in zip(net.lines, eps))
    out = GeodesicNetwork(lines, net.segments, net.allow_disconnected)
    validate(out)
    return out
