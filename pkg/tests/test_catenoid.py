import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from catenet import catenoid as ct
from catenet import geometry as geo
from catenet import mesh as mh
from catenet import model as md
from catenet import solver as sv


def plane_grid(extent=2.0, h=0.1, t_lo=None):
    s = np.arange(-extent, extent + 1e-9, h)
    t = np.arange(t_lo if t_lo is not None else -extent, extent + 1e-9, h)
    S, T = np.meshgrid(s, t, indexing="ij")
    return mh.grid_mesh(np.tanh(S / 2.0).astype(complex), T), S, T


@pytest.fixture(scope="module")
def coarse_catenoid():
    spec = ct.CatenoidSpec(eta=1.0, r_max=6.0, h=0.2)
    M = ct.build_ansatz(spec)
    return spec, M, ct.refine(M, tol=1e-3)


# ---------------------------------------------------------------------------
# parameter record


def test_spec_validates_parameters():
    with pytest.raises(ValueError, match="plane separation"):
        ct.CatenoidSpec(eta=0.0)
    with pytest.raises(ValueError, match="plane separation"):
        ct.CatenoidSpec(eta=1.7628)
    with pytest.raises(ValueError, match="truncation radius"):
        ct.CatenoidSpec(eta=1.0, r_max=5.0)
    with pytest.raises(ValueError, match="mesh spacing"):
        ct.CatenoidSpec(eta=1.0, h=0.3)
    with pytest.raises(ValueError, match="amplitude"):
        ct.CatenoidSpec(eta=1.0, amplitude=-0.1)


def test_spec_accepts_full_separation_range():
    for eta in (0.05, 0.6, 1.0, 1.76):
        assert ct.CatenoidSpec(eta=eta).eta == eta


# ---------------------------------------------------------------------------
# profile building blocks


def test_graph_height_matches_bessel_quadrature():
    # oracle: K0(1.5) = int_0^inf exp(-1.5 cosh t) dt = 0.213805562647526
    got = ct._graph_height(1.5, 0.3)
    assert_allclose(got, 0.3 * np.sqrt(2.0 / np.pi) * 0.213805562647526,
                    rtol=1e-12)


def test_graph_height_normalization_is_asymptotic():
    # amplitude multiplies r^{-1/2} e^{-r} at large radius
    r = 14.0
    lead = 0.4 * np.exp(-r) / np.sqrt(r)
    assert abs(ct._graph_height(r, 0.4) / lead - 1.0) < 0.01


def test_ring_average_stretch_matches_quadrature():
    th = np.linspace(0.0, 2.0 * np.pi, 20001)
    for rho in (0.3, 0.7, 1.4):
        oracle = np.trapezoid(np.cosh(rho * np.cos(th)) ** 2, th) \
            / (2.0 * np.pi)
        assert_allclose(ct._ring_average_stretch(rho), oracle, rtol=1e-9)


def test_neck_profile_satisfies_first_integral():
    # rho c x' / sqrt(1 + c x'^2) is conserved along the profile
    a = 0.25
    profile = ct._neck_profile(a, 2.5)
    c_of = ct._ring_average_stretch
    const = a * np.sqrt(c_of(a))
    d = 5e-3
    for rho in (0.45, 0.7, 1.1, 1.8):
        xp = (profile(rho + d) - profile(rho - d)) / (2.0 * d)
        c = c_of(rho)
        got = rho * c * xp / np.sqrt(1.0 + c * xp * xp)
        assert_allclose(got, const, rtol=2e-3)


def test_neck_profile_is_increasing_and_starts_at_zero():
    profile = ct._neck_profile(0.2, 3.0)
    rho = np.linspace(0.2, 3.0, 200)
    x = profile(rho)
    assert x[0] == 0.0
    assert (np.diff(x) > 0.0).all()


@settings(max_examples=25, deadline=None)
@given(eta=st.floats(0.15, 1.35))
def test_waist_matches_end_graph_at_blend_middle(eta):
    a = ct._waist_radius(eta, 0.3)
    assert 0.0 < a < 1.5
    bridge = float(ct._neck_profile(a, 1.5, n_grid=800)(1.5))
    assert abs(bridge + ct._graph_height(1.5, 0.3) - 0.5 * eta) < 1e-8


def test_waist_rejects_overlapping_graphs():
    # graphs taller than half the separation leave no room for a bridge
    with pytest.raises(ValueError, match="amplitude too large"):
        ct._waist_radius(0.08, 0.3)


def test_waist_rejects_oversized_amplitude():
    with pytest.raises(ValueError, match="amplitude too large"):
        ct._waist_radius(0.05, 5.0)


def test_waist_rejects_oversized_separation():
    with pytest.raises(ValueError, match="separation too large"):
        ct._waist_radius(1.6, 0.3)


# ---------------------------------------------------------------------------
# ansatz mesh


def test_build_is_deterministic():
    spec = ct.CatenoidSpec(eta=0.9, r_max=6.0, h=0.2)
    m1 = ct.build_ansatz(spec)
    m2 = ct.build_ansatz(spec)
    assert np.array_equal(m1.z, m2.z)
    assert np.array_equal(m1.t, m2.t)
    assert np.array_equal(m1.triangles, m2.triangles)


def test_ansatz_topology_is_an_annulus(coarse_catenoid):
    _, M, _ = coarse_catenoid
    edges = set()
    for tr in M.triangles:
        for i, j in ((tr[0], tr[1]), (tr[1], tr[2]), (tr[2], tr[0])):
            edges.add((min(i, j), max(i, j)))
    chi = M.n_vertices - len(edges) + len(M.triangles)
    assert chi == 0
    n_rings = max(M.rings)
    rim = np.zeros(M.n_vertices, dtype=bool)
    rim[M.rings[n_rings]] = True
    rim[M.rings[-n_rings]] = True
    assert np.array_equal(M.boundary_vertices(), rim)


def test_region_tags_follow_transverse_radius(coarse_catenoid):
    _, M, _ = coarse_catenoid
    for tag in ("neck", "transition", "end"):
        assert (M.region == tag).any()
    assert np.all(M.R[M.region == "neck"] == 1.0)
    assert np.all(M.R[M.region == "end"] > 2.0)
    assert np.all(M.R >= 1.0)


def test_waist_ring_is_centered(coarse_catenoid):
    _, M, _ = coarse_catenoid
    axis, _ = ct.standard_axes()
    ids = M.rings[0]
    s, _sig = geo.disk_to_fermi(axis, M.z[ids])
    assert np.abs(s).max() < 1e-14
    a = ct._waist_radius(1.0, 0.3)
    assert_allclose(M.t[ids].max(), a, rtol=1e-12)
    assert_allclose(M.t[ids].min(), -a, rtol=1e-12)


def test_three_reflections_act_exactly(coarse_catenoid):
    _, M, _ = coarse_catenoid
    axis, _ = ct.standard_axes()
    s, sig = geo.disk_to_fermi(axis, M.z)
    coords = np.stack([s, sig, M.t], axis=1)
    for kind, col in (("swap", 0), ("axis", 1), ("vertical", 2)):
        p = ct.symmetry_permutation(M, kind)
        assert np.array_equal(p[p], np.arange(M.n_vertices))
        image = coords.copy()
        image[:, col] = -image[:, col]
        assert np.abs(image - coords[p]).max() < 1e-12


def test_pairing_is_the_vertical_reflection(coarse_catenoid):
    _, M, _ = coarse_catenoid
    assert np.array_equal(M.pairing, ct.symmetry_permutation(M, "vertical"))


def test_symmetry_permutation_rejects_asymmetric_mesh():
    m, _, _ = plane_grid(extent=1.0, h=0.25, t_lo=-0.5)
    with pytest.raises(ValueError, match="not symmetric"):
        ct.symmetry_permutation(m, "vertical")
    with pytest.raises(ValueError, match="unknown reflection"):
        ct.symmetry_permutation(m, "diagonal")


# ---------------------------------------------------------------------------
# Killing fields


def test_standard_killing_fields_cover_the_frame():
    fields = ct.standard_killing_fields()
    assert set(fields) == {"vertical", "rotation", "axis_translation",
                           "cross_translation"}
    assert fields["vertical"].kind == "vertical"
    assert fields["rotation"].kind == "rotation"
    assert fields["axis_translation"].kind == "translation"


def test_killing_field_guards():
    with pytest.raises(ValueError, match="unknown Killing field"):
        ct.KillingField("boost")
    with pytest.raises(ValueError, match="needs a center"):
        ct.KillingField("rotation")
    with pytest.raises(ValueError, match="needs a geodesic axis"):
        ct.KillingField("translation")


def test_translation_field_matches_isometry_flow():
    axis, cross = ct.standard_axes()
    zs = np.array([0.0 + 0.0j, 0.3 + 0.2j, -0.5 + 0.1j, 0.1 - 0.6j])
    ds = 1e-6
    for g in (axis, cross):
        X = ct.KillingField("translation", axis=g)
        horiz, vert = X.chart_components(zs)
        plus = geo.dilation_along(g, ds)
        minus = geo.dilation_along(g, -ds)
        fd = (plus.apply_z(zs) - minus.apply_z(zs)) / (2.0 * ds)
        assert np.abs(horiz - fd).max() < 1e-8
        assert np.abs(vert).max() == 0.0


def test_rotation_field_matches_isometry_flow():
    p = geo.DiskPoint(0.2, -0.1)
    X = ct.KillingField("rotation", center=p)
    zs = np.array([0.0 + 0.0j, 0.4 + 0.3j, -0.2 + 0.5j])
    ds = 1e-6
    plus = geo.rotation_about(p, ds)
    minus = geo.rotation_about(p, -ds)
    fd = (plus.apply_z(zs) - minus.apply_z(zs)) / (2.0 * ds)
    horiz, vert = X.chart_components(zs)
    assert np.abs(horiz - fd).max() < 1e-8
    assert np.abs(vert).max() == 0.0


def test_translation_field_is_unit_on_its_axis():
    axis, _ = ct.standard_axes()
    X = ct.KillingField("translation", axis=axis)
    zs = np.array([0.0, 0.3, -0.7], dtype=complex)
    comp = X.frame_components(zs)
    assert_allclose(np.linalg.norm(comp, axis=1), 1.0, atol=1e-12)


def test_killing_fields_on_plane_are_exact_jacobi_fields():
    # on the vertical plane over the axis: the cross translation induces
    # cosh(s), the rotation about 0 induces sinh(s), and the vertical and
    # axis translations are tangent (zero normal part)
    m, S, _T = plane_grid(extent=1.5, h=0.15)
    fields = ct.standard_killing_fields()
    sgn = np.sign(m.normals[0, 1])
    phi_cross = ct.killing_jacobi_field(m, fields["cross_translation"])
    assert_allclose(phi_cross.values, sgn * np.cosh(S).ravel(), atol=1e-10)
    phi_rot = ct.killing_jacobi_field(m, fields["rotation"])
    assert_allclose(phi_rot.values, sgn * np.sinh(S).ravel(), atol=1e-10)
    phi_vert = ct.killing_jacobi_field(m, fields["vertical"])
    assert np.abs(phi_vert.values).max() < 1e-12
    phi_axis = ct.killing_jacobi_field(m, fields["axis_translation"])
    assert np.abs(phi_axis.values).max() < 1e-12


# ---------------------------------------------------------------------------
# contraction to minimality


def test_refine_reaches_discrete_minimality(coarse_catenoid):
    _, M, out = coarse_catenoid
    H = mh.mean_curvature(out)
    assert np.abs(H.values[out.interior_vertices()]).max() <= 1e-3
    assert out.rings is not None
    assert np.array_equal(out.pairing, M.pairing)
    assert sv.find_intersections(out) == []


def test_refine_keeps_the_three_reflections(coarse_catenoid):
    _, _, out = coarse_catenoid
    for kind in ("vertical", "swap", "axis"):
        ct.symmetry_permutation(out, kind)


def test_refined_total_curvature(coarse_catenoid):
    _, _, out = coarse_catenoid
    tc = mh.total_curvature(out)
    assert abs(tc + 4.0 * np.pi) / (4.0 * np.pi) < 0.05


# ---------------------------------------------------------------------------
# neck curve


def test_neck_loop_is_an_edge_cycle(coarse_catenoid):
    _, _, out = coarse_catenoid
    loop = ct.neck_loop(out)
    axis, _ = ct.standard_axes()
    s, _sig = geo.disk_to_fermi(axis, out.z)
    assert loop.size == np.sum(np.abs(s) <= 1e-6)
    edges = set()
    for tr in out.triangles:
        for i, j in ((tr[0], tr[1]), (tr[1], tr[2]), (tr[2], tr[0])):
            edges.add((min(i, j), max(i, j)))
    for i, j in zip(loop, np.roll(loop, -1)):
        assert (min(i, j), max(i, j)) in edges


def test_neck_loop_requires_middle_vertices():
    s = np.linspace(0.3, 1.3, 5)
    t = np.linspace(-1.0, 1.0, 5)
    S, T = np.meshgrid(s, t, indexing="ij")
    shifted = mh.grid_mesh(np.tanh(S / 2.0).astype(complex), T)
    with pytest.raises(ValueError, match="no vertex loop"):
        ct.neck_loop(shifted)


def test_necksize_matches_hyperboloid_arithmetic(coarse_catenoid):
    _, _, out = coarse_catenoid
    loop = ct.neck_loop(out)
    a, b = loop, np.roll(loop, -1)
    pa = geo._disk_to_hyp(out.z[a])
    pb = geo._disk_to_hyp(out.z[b])
    dot = pa[:, 2] * pb[:, 2] - pa[:, 0] * pb[:, 0] - pa[:, 1] * pb[:, 1]
    dh = np.arccosh(np.maximum(dot, 1.0))
    oracle = np.sum(np.hypot(dh, out.t[b] - out.t[a]))
    assert_allclose(ct.necksize(out), oracle, rtol=1e-10)
    assert ct.necksize(out) > 0.5


# ---------------------------------------------------------------------------
# spectrum


def test_spectrum_has_index_one_structure(coarse_catenoid):
    _, _, out = coarse_catenoid
    rep = ct.spectrum(out, m=6)
    vals = rep.eigenvalues
    assert vals[0] < 0.0
    assert vals[2] > 0.0
    assert (vals[2:] > 0.0).all()
    sys = sv.assemble_jacobi(out)
    bound = 5.0 * 0.2 ** 2 * np.abs(sys.potential).max()
    assert abs(vals[1]) <= bound
    assert rep.residuals.max() < 1e-8
    assert rep.parities[0] == ("even", "even", "even")
    assert rep.parities[1][0] == "odd"


def test_vertical_mode_correlates_with_translation_field(coarse_catenoid):
    _, _, out = coarse_catenoid
    sys = sv.assemble_jacobi(out)
    _vals, vecs = sv.lowest_eigenpairs(sys, k=2)
    phi = ct.killing_jacobi_field(
        out, ct.standard_killing_fields()["vertical"]).values
    v = vecs[:, 1]
    mass = sys.mass
    corr = np.sum(mass * v * phi) / np.sqrt(
        np.sum(mass * v * v) * np.sum(mass * phi * phi))
    assert abs(corr) >= 0.99


def test_spectrum_report_table_is_tabular(coarse_catenoid):
    _, _, out = coarse_catenoid
    rep = ct.spectrum(out, m=4)
    lines = rep.table().splitlines()
    assert lines[0].split("\t") == ["index", "eigenvalue", "vertical",
                                    "swap", "axis", "residual"]
    assert len(lines) == 5


# ---------------------------------------------------------------------------
# flux


def test_fluxes_cancel_except_along_the_axis(coarse_catenoid):
    _, _, out = coarse_catenoid
    loop = ct.neck_loop(out)
    L = ct.necksize(out)
    fields = ct.standard_killing_fields()
    null_kinds = ("vertical", "rotation", "cross_translation")
    nulls = [abs(ct.flux(out, loop, fields[k])) for k in null_kinds]
    assert max(nulls) <= 1e-6 * L
    f_axis = abs(ct.flux(out, loop, fields["axis_translation"]))
    assert f_axis >= 1e3 * max(max(nulls), 1e-300)
    assert 0.8 * L <= f_axis <= 1.2 * L


def test_flux_guards(coarse_catenoid):
    _, _, out = coarse_catenoid
    loop = ct.neck_loop(out)
    X = ct.standard_killing_fields()["vertical"]
    with pytest.raises(ValueError, match="at least three"):
        ct.flux(out, loop[:2], X)
    with pytest.raises(ValueError, match="repeats a vertex"):
        ct.flux(out, np.concatenate([loop, loop[:1]]), X)
    scrambled = loop.copy()
    scrambled[1], scrambled[len(loop) // 2] = (scrambled[len(loop) // 2],
                                               scrambled[1])
    with pytest.raises(ValueError, match="close up along mesh edges"):
        ct.flux(out, scrambled, X)


# ---------------------------------------------------------------------------
# end graphs


def test_end_profile_recovers_seeded_amplitude():
    spec = ct.CatenoidSpec(eta=1.0)
    M = ct.build_ansatz(spec)
    prof = ct.end_profile(M, spec.eta, side=1)
    rate, far, resid = md.decay_fit(prof, (5.0, 10.0))
    assert abs(rate + 1.0) < 0.1
    amp = far.amplitude
    assert (amp > 0.0).all()
    assert np.abs(amp - spec.amplitude).max() < 0.02
    assert resid <= -0.7


def test_end_profile_sides_mirror(coarse_catenoid):
    spec, _, out = coarse_catenoid
    plus = ct.end_profile(out, spec.eta, side=1, extent=3.0, grid_h=0.2)
    minus = ct.end_profile(out, spec.eta, side=-1, extent=3.0, grid_h=0.2)
    assert_allclose(plus.values, minus.values, atol=1e-10)
    assert plus.values.max() > 0.0


def test_end_profile_guards(coarse_catenoid):
    spec, _, out = coarse_catenoid
    with pytest.raises(ValueError, match="side"):
        ct.end_profile(out, spec.eta, side=2)
