import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.optimize import minimize

from catenet import geometry as geo


def disk_points(rng, n, rmax=0.9):
    r = rmax * np.sqrt(rng.uniform(0.0, 1.0, n))
    th = rng.uniform(0.0, 2.0 * np.pi, n)
    return r * np.exp(1j * th)


def random_isometry(rng):
    # moderate translation lengths keep image points away from the disk
    # boundary, where the distance formula sheds digits
    a = rng.uniform(0, 2 * np.pi)
    g = geo.Geodesic.from_angles(a, a + rng.uniform(0.2, 2 * np.pi - 0.2))
    iso = geo.rotation_about(geo.DiskPoint.from_z(0.5 * disk_points(rng, 1)[0]),
                             rng.uniform(0, 2 * np.pi))
    iso = iso @ geo.dilation_along(g, rng.uniform(-1.5, 1.5))
    if rng.uniform() < 0.5:
        iso = iso @ geo.reflection_across(g)
    if rng.uniform() < 0.5:
        iso = iso @ geo.vertical_flip()
    return iso @ geo.vertical_translation(rng.normal())


# ---------------------------------------------------------------------------
# distances

def test_dist_identity_is_zero():
    p = geo.DiskPoint(0.0, 0.0)
    assert geo.dist_points(p, p) == 0.0


def test_dist_along_radius_matches_quadrature():
    # independent oracle: integrate the metric density along the radius
    oracle, err = quad(lambda r: 2.0 / (1.0 - r * r), 0.0, 0.5)
    assert err < 1e-12
    d = geo.dist_points(geo.DiskPoint(0.0, 0.0), geo.DiskPoint(0.5, 0.0))
    assert_allclose(d, oracle, rtol=1e-12)
    assert_allclose(d, 1.0986122886681098, rtol=1e-12)


def test_point_outside_disk_rejected():
    with pytest.raises(ValueError):
        geo.DiskPoint(1.0, 0.0)
    with pytest.raises(ValueError):
        geo.DiskPoint(0.8, 0.7)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dist_metric_properties(seed):
    rng = np.random.default_rng(seed)
    a, b, c = disk_points(rng, 3)
    dab = geo.dist_complex(a, b)
    assert dab >= 0.0
    assert_allclose(dab, geo.dist_complex(b, a), atol=1e-13)
    assert geo.dist_complex(a, c) <= dab + geo.dist_complex(b, c) + 1e-12
    assert geo.dist_complex(a, a) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_isometries_preserve_distance(seed):
    rng = np.random.default_rng(seed)
    iso = random_isometry(rng)
    a, b = disk_points(rng, 2)
    assert abs(geo.dist_complex(iso.apply_z(a), iso.apply_z(b))
               - geo.dist_complex(a, b)) < 1e-10


# ---------------------------------------------------------------------------
# geodesic separation

def cross_ratio_distance(t0, t1, t2, t3):
    """Distance between geodesics (t0,t1), (t2,t3), angles in cyclic order.

    cosh^2(d/2) equals the cross ratio ((a-c)(d-b))/((a-b)(d-c)) of the
    ideal endpoints; independent of the production hyperboloid route.
    """
    a, b, c, d = [np.exp(1j * t) for t in (t0, t1, t2, t3)]
    cr = (((a - c) * (d - b)) / ((a - b) * (d - c))).real
    return 2.0 * np.arccosh(np.sqrt(cr))


def test_ideal_square_opposite_sides():
    g1 = geo.Geodesic.from_angles(0.0, np.pi / 2)
    g2 = geo.Geodesic.from_angles(np.pi, 1.5 * np.pi)
    sep = geo.geodesic_distance(g1, g2)
    assert sep.kind == "ultraparallel"
    assert_allclose(sep.length, 2.0 * np.log(1.0 + np.sqrt(2.0)), rtol=1e-12)
    assert_allclose(sep.length, cross_ratio_distance(0.0, np.pi / 2, np.pi, 1.5 * np.pi),
                    rtol=1e-12)


def test_geodesic_distance_matches_cross_ratio_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        t = np.sort(rng.uniform(0.0, 2.0 * np.pi, 4))
        if min(np.diff(t)) < 1e-2 or (2 * np.pi - t[3] + t[0]) < 1e-2:
            continue
        g1 = geo.Geodesic.from_angles(t[0], t[1])
        g2 = geo.Geodesic.from_angles(t[2], t[3])
        sep = geo.geodesic_distance(g1, g2)
        assert sep.kind == "ultraparallel"
        assert_allclose(sep.length, cross_ratio_distance(*t), rtol=1e-9)


def test_geodesic_distance_matches_minimization_oracle():
    g1 = geo.Geodesic.from_angles(0.0, np.pi / 2)
    g2 = geo.Geodesic.from_angles(np.pi, 1.5 * np.pi)
    sep = geo.geodesic_distance(g1, g2)

    def gap(sv):
        z1 = geo.fermi_to_disk(g1, sv[0], 0.0)
        z2 = geo.fermi_to_disk(g2, sv[1], 0.0)
        return geo.dist_complex(z1, z2)

    res = minimize(gap, [0.3, -0.3], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12})
    assert_allclose(sep.length, res.fun, atol=1e-6)


def test_two_diameters_intersect():
    g1 = geo.Geodesic.from_angles(0.0, np.pi)
    g2 = geo.Geodesic.from_angles(np.pi / 2, 1.5 * np.pi)
    sep = geo.geodesic_distance(g1, g2)
    assert sep.kind == "intersecting"
    assert sep.length == 0.0
    assert abs(sep.meet.z) < 1e-12


def test_coincident_and_asymptotic_flags():
    g1 = geo.Geodesic.from_angles(0.2, 1.7)
    assert geo.geodesic_distance(g1, g1).kind == "coincident"
    assert geo.geodesic_distance(g1, g1.reversed()).kind == "coincident"
    g3 = geo.Geodesic.from_angles(0.2, 4.0)
    assert geo.geodesic_distance(g1, g3).kind == "asymptotic"


def test_feet_realize_the_distance():
    g1 = geo.Geodesic.from_angles(0.1, 1.2)
    g2 = geo.Geodesic.from_angles(2.5, 4.9)
    sep = geo.geodesic_distance(g1, g2)
    assert sep.kind == "ultraparallel"
    assert_allclose(geo.dist_points(sep.foot1, sep.foot2), sep.length, rtol=1e-10)
    # feet lie on their geodesics
    assert abs(geo.fermi_chart(g1, sep.foot1)[1]) < 1e-10
    assert abs(geo.fermi_chart(g2, sep.foot2)[1]) < 1e-10


def test_perpendicular_feet_are_extremal():
    # sigma-coordinate of g2 relative to g1 has vanishing derivative at the foot
    g1 = geo.Geodesic.from_angles(0.1, 1.2)
    g2 = geo.Geodesic.from_angles(2.5, 4.9)
    sep = geo.geodesic_distance(g1, g2)
    s2 = geo.fermi_chart(g2, sep.foot2)[0]
    eps = 1e-5

    def sigma_of(s):
        return abs(geo.fermi_chart(g1, geo.fermi_point(g2, s, 0.0))[1])

    deriv = (sigma_of(s2 + eps) - sigma_of(s2 - eps)) / (2 * eps)
    assert abs(deriv) < 1e-6


def test_separation_invariant_under_isometry():
    rng = np.random.default_rng(3)
    g1 = geo.Geodesic.from_angles(0.1, 1.2)
    g2 = geo.Geodesic.from_angles(2.5, 4.9)
    base = geo.geodesic_distance(g1, g2).length
    for _ in range(5):
        iso = random_isometry(rng)
        moved = geo.geodesic_distance(iso.apply_geodesic(g1),
                                      iso.apply_geodesic(g2)).length
        assert abs(moved - base) < 1e-9


def test_common_perpendicular_contains_feet():
    g1 = geo.Geodesic.from_angles(0.1, 1.2)
    g2 = geo.Geodesic.from_angles(2.5, 4.9)
    sep = geo.geodesic_distance(g1, g2)
    perp = geo.common_perpendicular(g1, g2)
    assert abs(geo.fermi_chart(perp, sep.foot1)[1]) < 1e-10
    assert abs(geo.fermi_chart(perp, sep.foot2)[1]) < 1e-10
    s1 = geo.fermi_chart(perp, sep.foot1)[0]
    s2 = geo.fermi_chart(perp, sep.foot2)[0]
    assert s1 < s2
    assert_allclose(s2 - s1, sep.length, rtol=1e-10)


# ---------------------------------------------------------------------------
# Fermi coordinates

def test_fermi_round_trip():
    rng = np.random.default_rng(11)
    g = geo.Geodesic.from_angles(0.3, 2.0)
    s = rng.uniform(-2, 2, 50)
    sig = rng.uniform(-2, 2, 50)
    z = geo.fermi_to_disk(g, s, sig)
    s2, sig2 = geo.disk_to_fermi(g, z)
    assert_allclose(s2, s, atol=1e-10)
    assert_allclose(sig2, sig, atol=1e-10)


def test_fermi_chart_origin():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    s, sig = geo.fermi_chart(g, g.origin)
    assert abs(s) < 1e-12 and abs(sig) < 1e-12


def test_fermi_sigma_is_point_to_geodesic_distance():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    p = geo.DiskPoint(0.4, -0.2)
    sig = geo.fermi_chart(g, p)[1]
    res = minimize(lambda s: geo.dist_complex(geo.fermi_to_disk(g, s[0], 0.0), p.z),
                   [0.0], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12})
    assert_allclose(abs(sig), res.fun, atol=1e-7)


def test_fermi_s_is_arclength():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    a = geo.fermi_point(g, 0.7, 0.0)
    b = geo.fermi_point(g, -0.4, 0.0)
    assert_allclose(geo.dist_points(a, b), 1.1, rtol=1e-12)


# ---------------------------------------------------------------------------
# isometries

def test_dilation_zero_is_identity():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    d = geo.dilation_along(g, 0.0)
    rng = np.random.default_rng(5)
    z = disk_points(rng, 10)
    assert_allclose(d.apply_z(z), z, atol=1e-14)


def test_dilation_group_law():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    rng = np.random.default_rng(6)
    z = disk_points(rng, 10)
    lhs = (geo.dilation_along(g, 0.6) @ geo.dilation_along(g, -1.1)).apply_z(z)
    rhs = geo.dilation_along(g, -0.5).apply_z(z)
    assert_allclose(lhs, rhs, atol=1e-12)


def test_dilation_translates_along_geodesic():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    d = geo.dilation_along(g, 0.8)
    p = g.point_at(-0.3)
    q = d.apply_point(p)
    assert_allclose(geo.dist_points(p, q), 0.8, rtol=1e-10)
    s, sig = geo.fermi_chart(g, q)
    assert_allclose(s, 0.5, atol=1e-10)
    assert abs(sig) < 1e-10


def test_dilation_fixes_ideal_endpoints():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    d = geo.dilation_along(g, 1.7)
    for bp in (g.a, g.b):
        moved = d.apply_boundary(bp).angle
        assert abs((moved - bp.angle + np.pi) % (2 * np.pi) - np.pi) < 1e-9


def test_reflection_is_involution_fixing_geodesic():
    g = geo.Geodesic.from_angles(0.3, 2.0)
    r = geo.reflection_across(g)
    rng = np.random.default_rng(8)
    z = disk_points(rng, 10)
    assert_allclose(r.apply_z(r.apply_z(z)), z, atol=1e-12)
    on = geo.fermi_to_disk(g, np.linspace(-1.5, 1.5, 7), np.zeros(7))
    assert_allclose(r.apply_z(on), on, atol=1e-12)
    # flips the sign of the Fermi offset
    s, sig = geo.disk_to_fermi(g, z)
    s2, sig2 = geo.disk_to_fermi(g, r.apply_z(z))
    assert_allclose(s2, s, atol=1e-10)
    assert_allclose(sig2, -sig, atol=1e-10)


def test_reflection_swaps_symmetric_feet():
    g = geo.Geodesic.from_angles(0.0, np.pi)
    r = geo.reflection_across(g)
    delta = geo.Geodesic.from_angles(0.4, 1.1)
    mirror = r.apply_geodesic(delta)
    sep = geo.geodesic_distance(delta, mirror)
    assert sep.kind == "ultraparallel"
    assert_allclose(r.apply_point(sep.foot1).z, sep.foot2.z, atol=1e-10)


def test_vertical_parts_compose():
    f = geo.vertical_flip() @ geo.vertical_translation(0.7)
    assert_allclose(f.apply_t(0.2), -0.9)
    assert_allclose(f.inverse().apply_t(f.apply_t(0.2)), 0.2)
    g = geo.vertical_translation(0.7) @ geo.vertical_flip()
    assert_allclose(g.apply_t(0.2), 0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_isometry_inverse_round_trip(seed):
    rng = np.random.default_rng(seed)
    iso = random_isometry(rng)
    z = disk_points(rng, 5)
    t = rng.normal(size=5)
    inv = iso.inverse()
    assert_allclose(inv.apply_z(iso.apply_z(z)), z, atol=1e-10)
    assert_allclose(inv.apply_t(iso.apply_t(t)), t, atol=1e-12)


def test_geodesic_through_points():
    p = geo.DiskPoint(0.1, 0.2)
    q = geo.DiskPoint(-0.3, 0.4)
    g = geo.geodesic_through(p, q)
    sp, sigp = geo.fermi_chart(g, p)
    sq, sigq = geo.fermi_chart(g, q)
    assert abs(sigp) < 1e-10 and abs(sigq) < 1e-10
    assert sp < sq
    assert_allclose(sq - sp, geo.dist_points(p, q), rtol=1e-10)


# ---------------------------------------------------------------------------
# exponential map

def test_disk_exp_log_round_trip():
    rng = np.random.default_rng(13)
    z0 = disk_points(rng, 20)
    v = rng.normal(size=20) * np.exp(1j * rng.uniform(0, 2 * np.pi, 20))
    z = geo.disk_exp(z0, v)
    assert_allclose(geo.disk_log(z0, z), v, atol=1e-10)
    assert_allclose(geo.dist_complex(z0, z), np.abs(v), atol=1e-12)


def test_disk_exp_zero_vector():
    assert geo.disk_exp(0.3 + 0.1j, 0.0) == 0.3 + 0.1j


def test_conformal_factor_at_origin():
    assert geo.conformal_factor(0.0) == 2.0


# ---------------------------------------------------------------------------
# eta0

def test_eta0_value_and_definition():
    assert_allclose(geo.eta0(), 1.7627471740390859, rtol=1e-12)
    g1 = geo.Geodesic.from_angles(0.0, np.pi / 2)
    g2 = geo.Geodesic.from_angles(np.pi, 1.5 * np.pi)
    assert_allclose(geo.eta0(), geo.geodesic_distance(g1, g2).length, rtol=1e-12)
    assert 0.0 < geo.eta0() < np.inf
    assert_allclose(np.cosh(geo.eta0()), 3.0, rtol=1e-12)


# ---------------------------------------------------------------------------
# deep configurations

def _nested_line(psi):
    # endpoints at angles -psi, psi: crosses the positive real axis
    # orthogonally at x = tan(pi/4 - psi/2), distance 2 artanh(x) from 0
    return geo.Geodesic.from_angles(-psi, psi)


def _nested_depth(psi):
    return 2.0 * np.arctanh(np.tan(0.25 * np.pi - 0.5 * psi))


def test_nested_lines_match_cross_ratio_depth():
    psi1, psi2 = 0.5, 0.15
    sep = geo.geodesic_distance(_nested_line(psi1), _nested_line(psi2))
    assert sep.kind == "ultraparallel"
    assert_allclose(sep.length, _nested_depth(psi2) - _nested_depth(psi1),
                    rtol=1e-12)


def test_nested_lines_resolve_deep_in_the_disk():
    psi1, psi2 = 0.5, 1e-7
    sep = geo.geodesic_distance(_nested_line(psi1), _nested_line(psi2))
    assert sep.kind == "ultraparallel"
    assert_allclose(sep.length, _nested_depth(psi2) - _nested_depth(psi1),
                    rtol=1e-8)
    assert abs(sep.foot2.z.imag) < 1e-7
    assert_allclose(sep.foot2.z.real, np.tan(0.25 * np.pi - 0.5 * psi2),
                    rtol=1e-7)


def test_frame_anchor_survives_depth():
    mid = 0.2
    g = geo.Geodesic.from_angles(mid - 7e-8, mid + 7e-8)
    z0 = g.origin.z
    assert abs(z0) < 1.0
    assert_allclose(np.angle(z0), mid, atol=1e-9)


def test_unresolvably_deep_pair_is_refused():
    g1 = geo.Geodesic.from_angles(0.0, 1e-12)
    g2 = geo.Geodesic.from_angles(2.5e-12, 3.5e-12)
    with pytest.raises(ValueError, match="recenter the configuration"):
        geo.geodesic_distance(g1, g2)
