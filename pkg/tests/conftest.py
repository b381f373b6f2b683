import numpy as np
import pytest

from gwgfem.assembly import project_boundary, project_interior
from gwgfem.spaces import build_spaces, eval_interior, parse_boundary, parse_interior
from gwgfem.weakops import ElementKernel, WeakFunction


def vec_field(fx, fy):
    """Vectorized 2D field from two scalar callables of (x, y)."""

    def field(pts):
        pts = np.atleast_2d(pts)
        return np.column_stack([fx(pts[:, 0], pts[:, 1]),
                                fy(pts[:, 0], pts[:, 1])])

    return field


def zero_field(pts):
    pts = np.atleast_2d(pts)
    return np.zeros((pts.shape[0], 2))


def make_spaces(mesh, interior="p1", boundary="p0", seed=0, quad=None):
    return build_spaces(mesh, parse_interior(interior, seed=seed),
                        parse_boundary(boundary), quad,
                        seed_entropy=(seed, mesh.n))


@pytest.fixture
def x_comp_field():
    """(x, 0): the workhorse of the hand-derived correction examples."""
    return vec_field(lambda x, y: x, lambda x, y: 0.0 * x)


def operator_identity_residuals(mesh, spaces, rb, phi, grad_phi, eid, quad=10):
    """Residuals of the projection identities for the interpolant of a
    smooth field: the weak strain / weak divergence of {Q0 phi, Qb phi}
    tested against constant matrices/scalars must match the four-term
    expansion in the exact field, the interior projection defect, and the
    two boundary jump terms.  Returns (strain residual, divergence
    residual), both maxima over the constant test bases.
    """
    kern = ElementKernel(mesh, eid, spaces, rb, quad)
    wf = WeakFunction.zeros(mesh, spaces)
    wf.interior[eid] = project_interior(mesh, eid, spaces, phi, quad)
    for e in mesh.element_edges[eid]:
        wf.boundary[e] = project_boundary(mesh, e, spaces, phi, quad)
    vloc = wf.local_coefficients(mesh, eid)

    d1, d2 = kern.correction_pair(vloc)
    w = kern.vol.weights
    pts = kern.vol.points
    grad_q0 = kern.classical_gradient(vloc)
    eps_q0 = 0.5 * (grad_q0 + grad_q0.transpose(0, 2, 1))
    eps_weak = eps_q0 + 0.5 * (d1 + d1.T)[None]
    div_weak = np.trace(grad_q0, axis1=1, axis2=2) + d2

    g_exact = grad_phi(pts)
    eps_exact = 0.5 * (g_exact + g_exact.transpose(0, 2, 1))
    div_exact = np.trace(g_exact, axis1=1, axis2=2)

    # per-edge R_b images of (Qb phi - phi) and (phi - Q0 phi)
    edge_terms = []
    for le, e in enumerate(mesh.element_edges[eid]):
        proj = kern.projectors[le]
        phi_vals = phi(proj.points)
        qb_vals = proj.values_from_coefficients(wf.boundary[e])
        q0_vals = np.einsum(
            "j,jnc->nc", vloc[: kern.n0],
            eval_interior(mesh, eid, spaces.interior,
                          spaces.element_params(eid), proj.points))
        j1 = qb_vals - phi_vals
        j2 = phi_vals - q0_vals
        if rb.kind == "qb":
            j1 = proj.apply(j1)
            j2 = proj.apply(j2)
        edge_terms.append((proj, kern.normals[le], j1, j2))

    worst_eps = 0.0
    for a in range(2):
        for b in range(2):
            psi = np.zeros((2, 2))
            psi[a, b] = 1.0
            lhs = np.einsum("nab,ab,n->", eps_weak, psi, w)
            rhs = np.einsum("nab,ab,n->", eps_exact, psi, w)
            rhs += np.einsum("nab,ab,n->", eps_q0 - eps_exact, psi, w)
            sym_n = psi + psi.T
            for proj, nrm, j1, j2 in edge_terms:
                pn = sym_n @ nrm
                rhs += 0.5 * np.einsum("nc,c,n->", j1, pn, proj.weights)
                rhs += 0.5 * np.einsum("nc,c,n->", j2, pn, proj.weights)
            worst_eps = max(worst_eps, abs(lhs - rhs))

    lhs = np.einsum("n,n->", div_weak, w)
    rhs = np.einsum("n,n->", div_exact, w)
    rhs += np.einsum("n,n->", np.trace(grad_q0, axis1=1, axis2=2) - div_exact, w)
    for proj, nrm, j1, j2 in edge_terms:
        rhs += np.einsum("nc,c,n->", j1, nrm, proj.weights)
        rhs += np.einsum("nc,c,n->", j2, nrm, proj.weights)
    worst_div = abs(lhs - rhs)
    return worst_eps, worst_div
