import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_spaces, vec_field
from gwgfem.assembly import interpolate, project_interior
from gwgfem.mesh import build_rectangular, build_triangular, edge_quadrature
from gwgfem.spaces import parse_boundary
from gwgfem.weakops import (
    ElementKernel,
    WeakFunction,
    apply_rb,
    check_rb_injectivity,
    check_rigid_motion_invariance,
    correction_divergence,
    correction_gradient,
    parse_rb,
    weak_divergence,
    weak_gradient,
    weak_strain,
)

QB = parse_rb("qb")
ID = parse_rb("id")


def x_field(pts):
    pts = np.atleast_2d(pts)
    return np.column_stack([pts[:, 0], np.zeros(pts.shape[0])])


def unit_square_weak_x():
    """Unit square element, v0 = (x, 0), vb = 0."""
    mesh = build_rectangular(1)
    spaces = make_spaces(mesh, "p1", "p0")
    wf = WeakFunction.zeros(mesh, spaces)
    wf.interior[0] = project_interior(mesh, 0, spaces, x_field)
    return mesh, spaces, wf


class TestApplyRb:
    def test_projection_fixes_constants(self):
        mesh = build_rectangular(1)
        const = vec_field(lambda x, y: 0.7 + 0 * x, lambda x, y: -0.2 + 0 * x)
        out = apply_rb(mesh, 0, const, parse_boundary("p0"), QB)
        pts = edge_quadrature(mesh, 0, 4).points
        assert np.allclose(out(pts), const(pts), atol=1e-14)

    def test_projection_onto_constants_is_edge_mean(self):
        mesh = build_rectangular(1)
        bottom = [e for e in range(4)
                  if np.allclose(mesh.edge_midpoint[e], [0.5, 0.0])][0]
        out = apply_rb(mesh, bottom, x_field, parse_boundary("p0"), QB)
        assert np.allclose(out(np.array([[0.1, 0.0]])), [[0.5, 0.0]], atol=1e-14)

    def test_identity_passthrough(self):
        mesh = build_rectangular(1)
        out = apply_rb(mesh, 2, x_field, parse_boundary("p0"), ID)
        assert out is x_field

    @pytest.mark.parametrize("kind", ["p0", "p1", "rm"])
    def test_idempotent_on_traces(self, kind):
        # Qb(Qb w) = Qb w, including rm on fine-mesh edges away from origin
        mesh = build_triangular(8)
        cfg = parse_boundary(kind)
        w = vec_field(lambda x, y: np.sin(3 * x) + y, lambda x, y: x * y)
        for e in (0, mesh.num_edges // 2, mesh.num_edges - 1):
            once = apply_rb(mesh, e, w, cfg, QB)
            twice = apply_rb(mesh, e, once, cfg, QB)
            pts = edge_quadrature(mesh, e, 6).points
            assert np.allclose(once(pts), twice(pts), atol=1e-12)

    def test_linearity_on_jumps(self):
        # R_b applied to the jump equals the difference of the images
        mesh = build_rectangular(2)
        cfg = parse_boundary("p1")
        a = vec_field(lambda x, y: np.sin(x + y), lambda x, y: x ** 2)
        b = vec_field(lambda x, y: np.cos(x), lambda x, y: y ** 3)
        jump = lambda pts: a(pts) - b(pts)
        e = int(mesh.interior_edges()[0])
        pts = edge_quadrature(mesh, e, 6).points
        whole = apply_rb(mesh, e, jump, cfg, QB)(pts)
        parts = apply_rb(mesh, e, a, cfg, QB)(pts) - apply_rb(mesh, e, b, cfg, QB)(pts)
        assert np.allclose(whole, parts, atol=1e-13)


class TestCorrections:
    def test_zero_jump_gives_zero(self):
        mesh = build_triangular(2)
        spaces = make_spaces(mesh, "p1", "p1")
        wf = interpolate(mesh, spaces, x_field)  # traces match exactly
        for eid in range(mesh.num_elements):
            d1 = correction_gradient(mesh, eid, wf, spaces, ID)
            d2 = correction_divergence(mesh, eid, wf, spaces, ID)
            assert np.allclose(d1, 0.0, atol=1e-13)
            assert abs(d2) < 1e-13

    def test_unit_square_closed_form(self):
        # independent analytic oracle: delta = -oint (x,0) (x) n ds over the
        # unit square boundary = [[-1, 0], [0, 0]]; divergence = -1
        mesh, spaces, wf = unit_square_weak_x()
        d1 = correction_gradient(mesh, 0, wf, spaces, ID)
        assert np.allclose(d1, [[-1.0, 0.0], [0.0, 0.0]], atol=1e-13)
        d2 = correction_divergence(mesh, 0, wf, spaces, ID)
        assert d2 == pytest.approx(-1.0, abs=1e-13)

    def test_rigid_motion_preserved_under_admissible_pairs(self):
        mesh = build_triangular(2)
        rmf = vec_field(lambda x, y: 0.4 - 1.1 * y, lambda x, y: 0.2 + 1.1 * x)
        for boundary, rb in (("rm", QB), ("p1", QB), ("p0", ID)):
            spaces = make_spaces(mesh, "p1", boundary)
            wf = interpolate(mesh, spaces, rmf)
            for eid in range(mesh.num_elements):
                d1 = correction_gradient(mesh, eid, wf, spaces, rb)
                # correction must recover exactly the jump-free state:
                # strain of the total weak gradient vanishes
                eps = weak_strain(mesh, eid, wf, spaces, rb)
                assert np.abs(eps).max() < 1e-12

    def test_constant_vb_closed_surface(self):
        # v0 = 0, vb = (1, 0) on all edges: oint (1,0).n ds = 0
        mesh = build_rectangular(1)
        spaces = make_spaces(mesh, "p1", "p0")
        wf = WeakFunction.zeros(mesh, spaces)
        wf.boundary[:, 0] = 1.0
        assert correction_divergence(mesh, 0, wf, spaces, ID) == pytest.approx(0.0, abs=1e-13)

    def test_closed_form_matches_gram_solve(self):
        for build, interior in ((build_rectangular, "sin"), (build_triangular, "p1")):
            mesh = build(2)
            spaces = make_spaces(mesh, interior, "p1", seed=4)
            for rb in (QB, ID):
                for eid in range(mesh.num_elements):
                    kern = ElementKernel(mesh, eid, spaces, rb)
                    d1c, d2c = kern.corrections_closed_form()
                    assert np.abs(kern.delta1 - d1c).max() < 1e-12
                    assert np.abs(kern.delta2 - d2c).max() < 1e-12


class TestWeakOperators:
    def test_constant_weak_function(self):
        mesh = build_rectangular(2)
        spaces = make_spaces(mesh, "p1", "p0")
        cfield = vec_field(lambda x, y: 0.3 + 0 * x, lambda x, y: -1.2 + 0 * x)
        wf = interpolate(mesh, spaces, cfield)
        for eid in range(mesh.num_elements):
            wg = weak_gradient(mesh, eid, wf, spaces, QB)
            wd = weak_divergence(mesh, eid, wf, spaces, QB)
            assert np.abs(wg.total).max() < 1e-13
            assert np.abs(wd.total).max() < 1e-13

    def test_classical_cancels_correction(self):
        # v0 = (x, 0), vb = 0 on the unit square: grad v0 = [[1,0],[0,0]]
        # cancels delta exactly
        mesh, spaces, wf = unit_square_weak_x()
        wg = weak_gradient(mesh, 0, wf, spaces, ID)
        assert np.allclose(wg.classical[0], [[1.0, 0.0], [0.0, 0.0]], atol=1e-13)
        assert np.abs(wg.total).max() < 1e-12
        wd = weak_divergence(mesh, 0, wf, spaces, ID)
        assert np.abs(wd.total).max() < 1e-12

    def test_rigid_motion_strain_free_but_rotating(self):
        mesh = build_triangular(1)
        spaces = make_spaces(mesh, "p1", "rm")
        omega = 0.9
        rmf = vec_field(lambda x, y: -omega * y, lambda x, y: omega * x)
        wf = interpolate(mesh, spaces, rmf)
        eps = weak_strain(mesh, 0, wf, spaces, QB)
        assert np.abs(eps).max() < 1e-12
        wg = weak_gradient(mesh, 0, wf, spaces, QB).total
        skew = np.array([[0.0, -omega], [omega, 0.0]])
        assert np.allclose(wg, skew[None], atol=1e-12)

    def test_consistency_when_jump_vanishes(self):
        # R_b(vb - v0) = 0 on all edges => weak operators equal classical
        mesh = build_triangular(2)
        spaces = make_spaces(mesh, "p1", "p1")
        smooth = vec_field(lambda x, y: 0.2 * x + 0.1 * y,
                           lambda x, y: -0.3 * x + 0.7 * y)
        wf = interpolate(mesh, spaces, smooth)
        for eid in range(mesh.num_elements):
            wg = weak_gradient(mesh, eid, wf, spaces, QB)
            assert np.allclose(wg.total, wg.classical, atol=1e-12)

    def test_trace_of_delta1_equals_delta2(self):
        mesh = build_triangular(2)
        spaces = make_spaces(mesh, "sin", "p0", seed=2)
        rng = np.random.default_rng(5)
        for rb in (QB, ID):
            for eid in range(mesh.num_elements):
                kern = ElementKernel(mesh, eid, spaces, rb)
                vloc = rng.normal(size=kern.ndof)
                d1, d2 = kern.correction_pair(vloc)
                assert np.trace(d1) == pytest.approx(d2, abs=1e-12)

    @given(st.integers(0, 7), st.booleans())
    @settings(max_examples=16, deadline=None)
    def test_moment_equation_residuals(self, eid, use_qb):
        mesh = build_triangular(2)
        spaces = make_spaces(mesh, "sigmoid", "p1", seed=11)
        kern = ElementKernel(mesh, eid, spaces, QB if use_qb else ID)
        rng = np.random.default_rng(eid)
        vloc = rng.normal(size=kern.ndof)
        r1, r2 = kern.moment_residuals(vloc)
        scale = max(1.0, np.abs(vloc).max())
        assert np.abs(r1).max() < 1e-12 * scale
        assert abs(r2) < 1e-12 * scale


class TestAssumptionPredicates:
    def test_rm_with_projection_passes(self):
        mesh = build_triangular(4)
        chk = check_rigid_motion_invariance(mesh, parse_boundary("rm"), QB)
        assert chk.passed

    def test_p1_with_projection_passes(self):
        mesh = build_triangular(4)
        chk = check_rigid_motion_invariance(mesh, parse_boundary("p1"), QB)
        assert chk.passed

    def test_identity_always_passes(self):
        mesh = build_rectangular(4)
        chk = check_rigid_motion_invariance(mesh, parse_boundary("p0"), ID)
        assert chk.passed

    @pytest.mark.parametrize("build", [build_rectangular, build_triangular])
    def test_p0_with_projection_fails(self, build):
        # projecting a rotation onto edge constants loses the variation
        mesh = build(4)
        chk = check_rigid_motion_invariance(mesh, parse_boundary("p0"), QB)
        assert not chk.passed
        assert chk.worst > 1e-3

    @pytest.mark.parametrize("kind", ["p0", "p1", "rm"])
    def test_injectivity_on_uniform_meshes(self, kind):
        mesh = build_triangular(8)
        chk = check_rb_injectivity(mesh, parse_boundary(kind))
        assert chk.passed
