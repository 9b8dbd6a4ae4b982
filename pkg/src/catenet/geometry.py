"""Poincare disk geometry for surfaces in H2 x R.

Points, oriented geodesics, distances, common perpendiculars, Fermi
coordinates and the isometry group of the product (disk Mobius maps plus
vertical translations/reflections).  The public types carry disk-model data;
distance and perpendicular computations run in the hyperboloid model of
R^{2,1} (signature ++-), where geodesics are plane sections and everything
is closed-form linear algebra.

Conventions:
  * a geodesic is an ordered pair of ideal endpoint angles; orientation is
    the order, positive Fermi offset sigma lies to the side of the pole
    vector (fixed but arbitrary; nothing public depends on it),
  * the Fermi chart of a geodesic is anchored at the point of the geodesic
    closest to the disk center, with arclength s increasing toward the
    second endpoint,
  * tangent vectors for disk_exp / disk_log are complex numbers whose
    argument is the direction in the disk chart and whose modulus is the
    hyperbolic length.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "BoundaryPoint", "DiskPoint", "Geodesic", "GeodesicSeparation",
    "PlaneIsometry", "dist_points", "dist_complex", "geodesic_distance",
    "common_perpendicular", "geodesic_through", "fermi_chart", "fermi_point",
    "fermi_to_disk", "disk_to_fermi", "dilation_along", "reflection_across",
    "rotation_about", "vertical_translation", "vertical_flip", "eta0",
    "disk_exp", "disk_log", "conformal_factor",
]

_TAU = 2.0 * np.pi


# ---------------------------------------------------------------------------
# hyperboloid-model helpers (internal)

def _ldot(u, v):
    """Lorentz inner product with signature (+ + -), last axis = components."""
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] - u[..., 2] * v[..., 2]


def _lcross(u, v):
    """Lorentz cross product: <_lcross(u,v), w> = det[u; v; w]."""
    out = np.empty(np.broadcast(u, v).shape)
    out[..., 0] = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    out[..., 1] = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    out[..., 2] = -(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    return out


def _null(angle):
    """Null vector of the ideal point at the given circle angle."""
    return np.array([np.cos(angle), np.sin(angle), 1.0])


def _disk_to_hyp(z):
    """Unit disk (complex) to upper hyperboloid sheet, shape (..., 3)."""
    z = np.asarray(z, dtype=complex)
    n = np.abs(z) ** 2
    d = 1.0 - n
    out = np.empty(z.shape + (3,))
    out[..., 0] = 2.0 * z.real / d
    out[..., 1] = 2.0 * z.imag / d
    out[..., 2] = (1.0 + n) / d
    return out


def _hyp_to_disk(x):
    """Upper hyperboloid sheet to unit disk (complex)."""
    return (x[..., 0] + 1j * x[..., 1]) / (1.0 + x[..., 2])


def _normalize_spacelike(u):
    return u / np.sqrt(_ldot(u, u))


def _normalize_timelike(p):
    p = p / np.sqrt(-_ldot(p, p))
    if p[2] < 0.0:
        p = -p
    return p


# ---------------------------------------------------------------------------
# point and geodesic types

@dataclass(frozen=True)
class BoundaryPoint:
    """Ideal point on the circle at infinity, stored as an angle in [0, 2pi)."""

    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % _TAU)

    @property
    def z(self):
        return complex(np.cos(self.angle), np.sin(self.angle))


@dataclass(frozen=True)
class DiskPoint:
    """Point of the hyperbolic plane in disk coordinates, strictly interior."""

    x: float
    y: float

    def __post_init__(self):
        if not self.x * self.x + self.y * self.y < 1.0:
            raise ValueError("point must lie strictly inside the unit disk")

    @property
    def z(self):
        return complex(self.x, self.y)

    @classmethod
    def from_z(cls, z):
        return cls(float(np.real(z)), float(np.imag(z)))


@dataclass(frozen=True, eq=False)
class Geodesic:
    """Oriented complete geodesic given by two distinct ideal endpoints."""

    a: BoundaryPoint
    b: BoundaryPoint

    def __post_init__(self):
        gap = (self.a.angle - self.b.angle) % _TAU
        if min(gap, _TAU - gap) < 1e-14:
            raise ValueError("geodesic endpoints must be distinct")

    @classmethod
    def from_angles(cls, a, b):
        return cls(BoundaryPoint(a), BoundaryPoint(b))

    @cached_property
    def _frame(self):
        """(pole u, base point p0, unit tangent T at p0), hyperboloid vectors.

        u is the spacelike unit normal of the geodesic's plane section, p0
        the point of the geodesic closest to the disk center, T the tangent
        there pointing toward endpoint b.
        """
        nb = _null(self.b.angle)
        # _lcross(null(a), null(b)) = 2 sin(d) (cos m, sin m, cos d) with
        # d = (a-b)/2, m = (a+b)/2, and Lorentz norm 2 sin^2 d, so the
        # unit pole has this closed form (stable however deep the line
        # sits toward the ideal boundary, where the endpoint angles
        # nearly coincide and the naive cross product cancels away).
        half = 0.5 * (self.a.angle - self.b.angle)
        mid = 0.5 * (self.a.angle + self.b.angle)
        sd = np.sin(half)
        if sd == 0.0:
            raise ValueError(
                "geodesic endpoints too close together on the ideal "
                "boundary to resolve; recenter the configuration")
        cm, sm, cd = np.cos(mid), np.sin(mid), np.cos(half)
        u = np.array([cm, sm, cd]) / sd
        p0 = np.array([cd * cm, cd * sm, 1.0]) / abs(sd)
        t = _lcross(u, p0)
        if not (np.isfinite(u).all() and np.isfinite(p0).all()):
            raise ValueError(
                "geodesic endpoints too close together on the ideal "
                "boundary to resolve; recenter the configuration")
        # orient toward b: p0 + T must be proportional to the null vector nb
        if abs(_ldot(p0 + t, nb)) > abs(_ldot(p0 - t, nb)):
            t = -t
        return u, p0, t

    @property
    def origin(self):
        """Chart anchor: the point of the geodesic closest to the disk center."""
        return DiskPoint.from_z(_hyp_to_disk(self._frame[1]))

    def point_at(self, s):
        """Point at signed arclength s from the chart anchor."""
        return fermi_point(self, s, 0.0)

    def reversed(self):
        return Geodesic(self.b, self.a)


@dataclass(frozen=True)
class GeodesicSeparation:
    """Classification of a geodesic pair.

    kind is one of 'ultraparallel', 'intersecting', 'asymptotic',
    'coincident'.  For ultraparallel pairs, length is the distance and
    foot1/foot2 are the endpoints of the common perpendicular segment on
    each geodesic.  Intersecting pairs carry the crossing point in meet.
    """

    kind: str
    length: float
    foot1: DiskPoint | None = None
    foot2: DiskPoint | None = None
    meet: DiskPoint | None = None

    @property
    def is_ultraparallel(self):
        return self.kind == "ultraparallel"


# ---------------------------------------------------------------------------
# distances

def dist_complex(z1, z2):
    """Hyperbolic distance between disk points given as complex arrays."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    num = np.abs(z1 - z2)
    den = np.abs(1.0 - np.conj(z1) * z2)
    return 2.0 * np.arctanh(num / den)


def dist_points(p, q):
    """Hyperbolic distance between two DiskPoints."""
    return float(dist_complex(p.z, q.z))


def _shared_endpoints(g1, g2, tol=1e-12):
    hits = 0
    for e1 in (g1.a.angle, g1.b.angle):
        for e2 in (g2.a.angle, g2.b.angle):
            gap = (e1 - e2) % _TAU
            if min(gap, _TAU - gap) < tol:
                hits += 1
    return hits


def geodesic_distance(g1, g2):
    """Distance between two geodesics with the common-perpendicular feet.

    Ultraparallel pairs get the positive distance and the two feet;
    intersecting, asymptotic (one shared ideal endpoint) and coincident
    pairs get distance 0 with the corresponding flag.
    """
    shared = _shared_endpoints(g1, g2)
    if shared >= 2:
        return GeodesicSeparation("coincident", 0.0)
    if shared == 1:
        return GeodesicSeparation("asymptotic", 0.0)
    u1 = g1._frame[0]
    u2 = g2._frame[0]
    k = _ldot(u1, u2)
    # Poles of lines deep toward the ideal boundary have huge Euclidean
    # norms; once the cancellation error in k can reach |k| - 1 the
    # classification below would be garbage, so refuse instead.
    err = (64.0 * np.finfo(float).eps
           * float(np.linalg.norm(u1) * np.linalg.norm(u2)))
    if not np.isfinite(k) or not np.isfinite(err) \
            or abs(abs(k) - 1.0) <= err:
        raise ValueError(
            "geodesic pair lies too deep toward the ideal boundary to "
            "classify; recenter the configuration")
    with np.errstate(invalid="ignore"):
        if abs(k) > 1.0:
            w = _normalize_spacelike(_lcross(u1, u2))
            f1 = _normalize_timelike(_lcross(u1, w))
            f2 = _normalize_timelike(_lcross(u2, w))
            if not (np.isfinite(f1).all() and np.isfinite(f2).all()):
                raise ValueError(
                    "geodesic pair lies too deep toward the ideal boundary "
                    "to classify; recenter the configuration")
            return GeodesicSeparation(
                "ultraparallel", float(np.arccosh(abs(k))),
                DiskPoint.from_z(_hyp_to_disk(f1)),
                DiskPoint.from_z(_hyp_to_disk(f2)))
        meet = _normalize_timelike(_lcross(u1, u2))
    if not np.isfinite(meet).all():
        raise ValueError(
            "geodesic pair lies too deep toward the ideal boundary to "
            "classify; recenter the configuration")
    return GeodesicSeparation("intersecting", 0.0,
                              meet=DiskPoint.from_z(_hyp_to_disk(meet)))


def _geodesic_from_pole(u):
    """Oriented geodesic whose plane section has outward normal u."""
    phi = np.arctan2(u[1], u[0])
    r = np.hypot(u[0], u[1])
    half = np.arccos(np.clip(u[2] / r, -1.0, 1.0))
    cand = Geodesic.from_angles(phi - half, phi + half)
    if _ldot(cand._frame[0], u) < 0.0:
        cand = cand.reversed()
    return cand


def common_perpendicular(g1, g2):
    """The full geodesic containing the shortest segment between two
    ultraparallel geodesics, oriented from g1 toward g2."""
    sep = geodesic_distance(g1, g2)
    if not sep.is_ultraparallel:
        raise ValueError("geodesics are not ultraparallel; no common perpendicular")
    u1 = g1._frame[0]
    u2 = g2._frame[0]
    perp = _geodesic_from_pole(_normalize_spacelike(_lcross(u1, u2)))
    s1, _ = fermi_chart(perp, sep.foot1)
    s2, _ = fermi_chart(perp, sep.foot2)
    if s1 > s2:
        perp = perp.reversed()
    return perp


def geodesic_through(p, q):
    """Oriented geodesic through two distinct interior points, from p to q."""
    hp = _disk_to_hyp(p.z)
    hq = _disk_to_hyp(q.z)
    w = _lcross(hp, hq)
    n = _ldot(w, w)
    if n <= 0.0:
        raise ValueError("points must be distinct")
    g = _geodesic_from_pole(w / np.sqrt(n))
    sp, _ = fermi_chart(g, p)
    sq, _ = fermi_chart(g, q)
    if sp > sq:
        g = g.reversed()
    return g


# ---------------------------------------------------------------------------
# Fermi coordinates

def fermi_to_disk(g, s, sigma):
    """Image of Fermi coordinates (s, sigma) of geodesic g, as complex.

    s is arclength along g from its chart anchor (positive toward the second
    endpoint); sigma is the signed perpendicular distance.  Accepts arrays.
    """
    u, p0, t = g._frame
    s = np.asarray(s, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    x = (np.cosh(sigma)[..., None]
         * (np.cosh(s)[..., None] * p0 + np.sinh(s)[..., None] * t)
         + np.sinh(sigma)[..., None] * u)
    return _hyp_to_disk(x)


def disk_to_fermi(g, z):
    """Fermi coordinates (s, sigma) of complex disk points for geodesic g."""
    u, p0, t = g._frame
    q = _disk_to_hyp(z)
    sigma = np.arcsinh(_ldot(q, u))
    s = np.arcsinh(_ldot(q, t) / np.cosh(sigma))
    return s, sigma


def fermi_chart(g, p):
    """Fermi coordinates of a DiskPoint, as floats."""
    s, sigma = disk_to_fermi(g, p.z)
    return float(s), float(sigma)


def fermi_point(g, s, sigma):
    """DiskPoint at Fermi coordinates (s, sigma) of geodesic g."""
    return DiskPoint.from_z(fermi_to_disk(g, s, sigma))


# ---------------------------------------------------------------------------
# isometries of H2 x R

def _mobius_det_normalize(m):
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    scale = np.abs(m).max()
    if np.isfinite(abs(det)) and abs(det) > 1e-9 * scale * scale:
        return m / np.sqrt(det)
    # det drowned in cancellation (entries ~ e^{L/2} for huge translation
    # lengths L); the map is projective, so plain rescaling is safe
    return m / scale


def _adjugate(m):
    """Projective inverse of a 2x2 Mobius matrix, no subtractive det."""
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)


@dataclass(frozen=True, eq=False)
class PlaneIsometry:
    """Isometry of H2 x R preserving the product structure.

    Disk part: z -> mobius(m, conj(z) if conj_first else z) with m a 2x2
    complex matrix acting as a fractional linear map.  Vertical part:
    t -> t_shift + (-t if t_flip else t).  Closed under composition and
    inverse; orientation-reversing disk maps are exactly those with
    conj_first set.
    """

    m: np.ndarray
    conj_first: bool = False
    t_shift: float = 0.0
    t_flip: bool = False

    def __post_init__(self):
        m = _mobius_det_normalize(np.array(self.m, dtype=complex))
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls):
        return cls(np.eye(2, dtype=complex))

    def apply_z(self, z):
        z = np.conj(z) if self.conj_first else np.asarray(z, dtype=complex)
        (a, b), (c, d) = self.m
        return (a * z + b) / (c * z + d)

    def apply_t(self, t):
        t = np.asarray(t, dtype=float)
        return self.t_shift + (-t if self.t_flip else t)

    def apply_point(self, p):
        return DiskPoint.from_z(self.apply_z(p.z))

    def apply_boundary(self, bp):
        w = self.apply_z(np.exp(1j * bp.angle))
        return BoundaryPoint(np.arctan2(w.imag, w.real))

    def apply_geodesic(self, g):
        return Geodesic(self.apply_boundary(g.a), self.apply_boundary(g.b))

    def __matmul__(self, other):
        m2 = np.conj(other.m) if self.conj_first else other.m
        shift = self.t_shift + (-other.t_shift if self.t_flip else other.t_shift)
        return PlaneIsometry(self.m @ m2,
                             self.conj_first ^ other.conj_first,
                             shift,
                             self.t_flip ^ other.t_flip)

    def inverse(self):
        mi = _adjugate(self.m)
        if self.conj_first:
            mi = np.conj(mi)
        shift = self.t_shift if self.t_flip else -self.t_shift
        return PlaneIsometry(mi, self.conj_first, shift, self.t_flip)


def _translation_matrix(z0):
    return np.array([[1.0, z0], [np.conj(z0), 1.0]], dtype=complex)


def _axis_frame_matrix(g):
    """Mobius matrix sending the oriented real diameter (-1, 1) to g."""
    m = complex(_hyp_to_disk(g._frame[1]))
    tm = _translation_matrix(m)
    zb = np.exp(1j * g.b.angle)
    wb = (zb - m) / (1.0 - np.conj(m) * zb)
    phi = np.arctan2(wb.imag, wb.real)
    rot = np.array([[np.exp(0.5j * phi), 0.0], [0.0, np.exp(-0.5j * phi)]],
                   dtype=complex)
    return _mobius_det_normalize(tm @ rot)


def dilation_along(g, sigma):
    """Hyperbolic translation by signed arclength sigma along geodesic g.

    Fixes both ideal endpoints of g; positive sigma moves points of g toward
    the second endpoint.
    """
    mg = _axis_frame_matrix(g)
    c, s = np.cosh(0.5 * sigma), np.sinh(0.5 * sigma)
    d = np.array([[c, s], [s, c]], dtype=complex)
    return PlaneIsometry(mg @ d @ _adjugate(mg))


def reflection_across(g):
    """Reflection of the disk across geodesic g (t untouched)."""
    mg = _axis_frame_matrix(g)
    return PlaneIsometry(mg @ np.conj(_adjugate(mg)), conj_first=True)


def rotation_about(center, angle):
    """Rotation of the disk by angle about an interior point."""
    tm = _translation_matrix(center.z)
    rot = np.array([[np.exp(0.5j * angle), 0.0], [0.0, np.exp(-0.5j * angle)]],
                   dtype=complex)
    return PlaneIsometry(tm @ rot @ _adjugate(tm))


def vertical_translation(tau):
    return PlaneIsometry(np.eye(2, dtype=complex), t_shift=float(tau))


def vertical_flip():
    return PlaneIsometry(np.eye(2, dtype=complex), t_flip=True)


# ---------------------------------------------------------------------------
# exponential map and metric helpers

def disk_exp(z0, v):
    """Geodesic exponential at disk point z0.

    v is a complex tangent vector: argument = direction in the disk chart at
    z0, modulus = hyperbolic length.  Vectorized over v (and z0 if arrays).
    """
    z0 = np.asarray(z0, dtype=complex)
    v = np.asarray(v, dtype=complex)
    r = np.abs(v)
    scale = np.where(r > 0.0, np.tanh(0.5 * r) / np.where(r > 0.0, r, 1.0), 0.0)
    w = scale * v
    return (w + z0) / (1.0 + np.conj(z0) * w)


def disk_log(z0, z):
    """Inverse of disk_exp: tangent vector at z0 pointing to z."""
    z0 = np.asarray(z0, dtype=complex)
    z = np.asarray(z, dtype=complex)
    w = (z - z0) / (1.0 - np.conj(z0) * z)
    r = np.abs(w)
    scale = np.where(r > 0.0, 2.0 * np.arctanh(r) / np.where(r > 0.0, r, 1.0), 0.0)
    return scale * w


def conformal_factor(z):
    """Scale factor of the hyperbolic metric against the Euclidean one."""
    z = np.asarray(z, dtype=complex)
    return 2.0 / (1.0 - np.abs(z) ** 2)


def eta0():
    """Distance between two opposite sides of an ideal regular quadrilateral.

    This is the supremum of plane separations bridged by the neck surfaces
    this package builds.
    """
    return 2.0 * np.log(1.0 + np.sqrt(2.0))
