"""Weak functions, the edge operator R_b, and generalized weak operators.

A weak function is a pair {v0, vb}: per-element interior coefficient
blocks and per-edge boundary coefficient blocks with no continuity between
them (vb is stored once per edge and therefore single-valued).

The generalized weak gradient / divergence of a weak function on an
element T is the classical operator applied to v0 plus a constant
correction obtained from a small moment problem against the boundary
jump R_b(vb - v0):

    (delta1, psi)_T = <R_b(vb - v0), psi n>_dT   for psi in the constant
                                                  matrix space,
    (delta2, phi)_T = <R_b(vb - v0), phi n>_dT   for phi constant scalar.

R_b is either the edgewise L2 projection onto V^b(e) (``qb``) or the
identity.  Everything here is element-local and pure, hence safe to call
concurrently across elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh2D, _gauss_1d, element_quadrature
from .spaces import (
    BoundarySpaceConfig,
    SpaceSet,
    default_quad_degree,
    eval_boundary,
    eval_interior,
    grad_interior,
)

__all__ = [
    "RbOperator",
    "parse_rb",
    "WeakFunction",
    "EdgeProjector",
    "ElementKernel",
    "WeakGradientValue",
    "WeakDivergenceValue",
    "apply_rb",
    "correction_gradient",
    "correction_divergence",
    "weak_gradient",
    "weak_divergence",
    "weak_strain",
    "AssumptionCheck",
    "check_rigid_motion_invariance",
    "check_rb_injectivity",
    "check_assumption_pair",
]

# Constant-matrix basis of the gradient-correction space, row-major entry order.
_G1_BASIS = np.zeros((4, 2, 2))
_G1_BASIS[0, 0, 0] = 1.0
_G1_BASIS[1, 0, 1] = 1.0
_G1_BASIS[2, 1, 0] = 1.0
_G1_BASIS[3, 1, 1] = 1.0


@dataclass(frozen=True)
class RbOperator:
    """Edge operator applied to boundary jumps: L2 projection or identity."""

    kind: str  # "qb" | "identity"

    def __post_init__(self):
        if self.kind not in ("qb", "identity"):
            raise ValueError(f"unknown Rb operator {self.kind!r}")


def parse_rb(spec: str) -> RbOperator:
    if spec == "qb":
        return RbOperator("qb")
    if spec in ("id", "identity"):
        return RbOperator("identity")
    raise ValueError(f"unknown Rb operator {spec!r}")


@dataclass
class WeakFunction:
    """Coefficient blocks of a weak function {v0, vb}.

    ``interior[e]`` holds the interior block of element e in the interior
    basis order; ``boundary[k]`` holds the (single-valued) block of edge k
    in the edge basis order.
    """

    interior: np.ndarray  # (ne, n0)
    boundary: np.ndarray  # (ned, nb)

    @classmethod
    def zeros(cls, mesh: Mesh2D, spaces: SpaceSet) -> "WeakFunction":
        return cls(
            interior=np.zeros((mesh.num_elements, spaces.interior.dim)),
            boundary=np.zeros((mesh.num_edges, spaces.boundary.dim)),
        )

    def local_coefficients(self, mesh: Mesh2D, eid: int) -> np.ndarray:
        """Element-local coefficient vector: interior block then edge blocks
        in the element's local edge order."""
        parts = [self.interior[eid]]
        parts.extend(self.boundary[e] for e in mesh.element_edges[eid])
        return np.concatenate(parts)


class _EdgeClass:
    """Quadrature layout and projection data shared by congruent edges.

    Built from the edge vector only: quadrature offsets relative to the
    midpoint, edge-basis values in a midpoint-centered form (for ``rm``
    the rotation basis vector is centered, which spans the same space but
    keeps the Gram matrix well conditioned far from the origin), the Gram
    matrix, and the value-space projector matrix.
    """

    def __init__(self, kind: str, degree: int, dx: float, dy: float):
        npts = (degree + 2) // 2
        x, w = _gauss_1d(npts)
        vec = np.array([dx, dy])
        self.length = float(np.hypot(dx, dy))
        self.offsets = np.outer(x - 0.5, vec)  # (nq, 2) relative to midpoint
        self.weights = w * self.length
        self.nq = npts

        nb = {"p0": 2, "p1": 4, "rm": 3}[kind]
        B = np.zeros((nb, npts, 2))
        B[0, :, 0] = 1.0
        B[1, :, 1] = 1.0
        if kind == "p1":
            s = x - 0.5  # midpoint-centered arclength / length
            B[2, :, 0] = s
            B[3, :, 1] = s
        elif kind == "rm":
            B[2, :, 0] = -self.offsets[:, 1]
            B[2, :, 1] = self.offsets[:, 0]
        self.centered_basis = B
        self.gram = np.einsum("inc,jnc,n->ij", B, B, self.weights)

        # projector in flattened (point, component) value space
        flat = B.reshape(nb, -1)
        wflat = np.repeat(self.weights, 2)
        coeff_map = np.linalg.solve(self.gram, flat * wflat[None, :])
        self.value_projector = flat.T @ coeff_map  # (2nq, 2nq)

    @property
    def normalized_condition(self) -> float:
        d = np.sqrt(np.diag(self.gram))
        scaled = self.gram / np.outer(d, d)
        return float(np.linalg.cond(scaled))


class EdgeProjector:
    """L2 projection onto V^b(e) for one edge, in quadrature-value space.

    ``coefficients`` returns coefficients in the global basis order of
    :func:`gwgfem.spaces.eval_boundary`; internally the solve uses the
    midpoint-centered basis of the edge class (exact change of basis).
    """

    def __init__(self, mesh: Mesh2D, edge_id: int, cfg: BoundarySpaceConfig,
                 quad_degree: int, cache: dict | None = None):
        p0 = mesh.vertices[mesh.edges[edge_id, 0]]
        p1 = mesh.vertices[mesh.edges[edge_id, 1]]
        dx, dy = p1 - p0
        key = (cfg.kind, quad_degree, round(dx, 12), round(dy, 12))
        if cache is not None and key in cache:
            klass = cache[key]
        else:
            klass = _EdgeClass(cfg.kind, quad_degree, dx, dy)
            if cache is not None:
                cache[key] = klass
        self.klass = klass
        self.cfg = cfg
        self.edge_id = edge_id
        self.mid = mesh.edge_midpoint[edge_id]
        self.points = self.mid + klass.offsets
        self.weights = klass.weights

    @property
    def dim(self) -> int:
        return self.klass.centered_basis.shape[0]

    def basis_values(self) -> np.ndarray:
        """Global-basis values at the projector's quadrature points."""
        B = self.klass.centered_basis.copy()
        if self.cfg.kind == "rm":
            B[2, :, 0] -= self.mid[1]
            B[2, :, 1] += self.mid[0]
        return B

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """Project values (nq, 2) at self.points; coefficients in the global basis."""
        moments = np.einsum("jnc,n,nc->j", self.klass.centered_basis,
                            self.weights, values)
        c = np.linalg.solve(self.klass.gram, moments)
        if self.cfg.kind == "rm":
            c = np.array([c[0] + self.mid[1] * c[2],
                          c[1] - self.mid[0] * c[2],
                          c[2]])
        return c

    def values_from_coefficients(self, coeffs: np.ndarray) -> np.ndarray:
        return np.einsum("j,jnc->nc", coeffs, self.basis_values())

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Project a batch (..., nq, 2) of traces; returns the same shape."""
        shape = values.shape
        flat = values.reshape(-1, shape[-2] * 2)
        out = flat @ self.klass.value_projector.T
        return out.reshape(shape)

    @property
    def normalized_gram_condition(self) -> float:
        return self.klass.normalized_condition


def apply_rb(mesh: Mesh2D, edge_id: int, w, cfg: BoundarySpaceConfig,
             op: RbOperator, quad_degree: int = 10):
    """Apply R_b to a trace on an edge.

    ``w`` is a callable mapping points (nq, 2) on the edge to values
    (nq, 2).  The identity returns ``w`` unchanged; the projection returns
    a callable evaluating the edgewise L2 projection of ``w`` onto V^b(e).
    """
    if op.kind == "identity":
        return w
    proj = EdgeProjector(mesh, edge_id, cfg, quad_degree)
    coeffs = proj.coefficients(np.asarray(w(proj.points), dtype=float))

    def projected(points):
        basis = eval_boundary(mesh, edge_id, cfg, points)
        return np.einsum("j,jnc->nc", coeffs, basis)

    return projected


@dataclass
class WeakGradientValue:
    """Generalized weak gradient on one element: classical part at the
    element quadrature points plus the constant correction."""

    points: np.ndarray  # (nq, 2)
    classical: np.ndarray  # (nq, 2, 2)
    correction: np.ndarray  # (2, 2)

    @property
    def total(self) -> np.ndarray:
        return self.classical + self.correction[None, :, :]


@dataclass
class WeakDivergenceValue:
    points: np.ndarray  # (nq, 2)
    classical: np.ndarray  # (nq,)
    correction: float

    @property
    def total(self) -> np.ndarray:
        return self.classical + self.correction


class ElementKernel:
    """All element-local computations for one element.

    Precomputes interior basis values/gradients at the volume rule,
    boundary jumps of every local basis weak function at the edge rules,
    their R_b images, and the corrections delta1 (constant matrix) and
    delta2 (constant scalar) per local degree of freedom.

    Local dof layout: interior basis functions first, then the edge basis
    blocks in the element's local edge order.
    """

    def __init__(self, mesh: Mesh2D, eid: int, spaces: SpaceSet, rb: RbOperator,
                 quad_degree: int | None = None, edge_cache: dict | None = None):
        if quad_degree is None:
            quad_degree = default_quad_degree(spaces.interior)
        self.mesh = mesh
        self.eid = eid
        self.spaces = spaces
        self.rb = rb
        self.quad_degree = quad_degree

        icfg = spaces.interior
        bcfg = spaces.boundary
        prm = spaces.element_params(eid)
        self.n0 = icfg.dim
        self.nb = bcfg.dim
        self.edge_ids = mesh.element_edges[eid]
        self.m = len(self.edge_ids)
        self.ndof = self.n0 + self.m * self.nb
        self.area = float(mesh.elem_area[eid])
        self.diameter = float(mesh.elem_diameter[eid])
        self.normals = mesh.elem_edge_normals[eid]

        self.vol = element_quadrature(mesh, eid, quad_degree)
        self.V0 = eval_interior(mesh, eid, icfg, prm, self.vol.points)
        self.G0 = grad_interior(mesh, eid, icfg, prm, self.vol.points)

        self.projectors = []
        for e in self.edge_ids:
            proj = None if edge_cache is None else edge_cache.get(("projector", e))
            if proj is None:
                proj = EdgeProjector(mesh, e, bcfg, quad_degree, edge_cache)
                if edge_cache is not None:
                    edge_cache[("projector", e)] = proj
            self.projectors.append(proj)

        # boundary jumps vb - v0 of each local basis function, and their
        # R_b images, per local edge
        self.jumps: list[np.ndarray] = []
        self.rb_jumps: list[np.ndarray] = []
        flux = np.zeros((self.ndof, 2, 2))
        divflux = np.zeros(self.ndof)
        for le, proj in enumerate(self.projectors):
            tr0 = eval_interior(mesh, eid, icfg, prm, proj.points)
            J = np.zeros((self.ndof, proj.points.shape[0], 2))
            J[: self.n0] = -tr0
            base = self.n0 + le * self.nb
            J[base: base + self.nb] = proj.basis_values()
            R = proj.apply(J) if rb.kind == "qb" else J
            self.jumps.append(J)
            self.rb_jumps.append(R)
            edge_int = np.einsum("knc,n->kc", R, proj.weights)
            flux += edge_int[:, :, None] * self.normals[le][None, None, :]
            divflux += edge_int @ self.normals[le]
        self.jump_flux = flux
        self.jump_divflux = divflux

        # corrections through the general Gram-solve path; the correction
        # bases are constant, so their mass matrices only need the rule's
        # total weight
        qarea = float(np.sum(self.vol.weights))
        mass1 = np.einsum("aij,bij->ab", _G1_BASIS, _G1_BASIS) * qarea
        sol = np.linalg.solve(mass1, flux.reshape(self.ndof, 4).T)
        self.delta1 = sol.T.reshape(self.ndof, 2, 2)
        self.delta2 = divflux / qarea

        self._eps = None
        self._div = None

    # -- closed forms (cross-checked against the Gram path in tests) --

    def corrections_closed_form(self) -> tuple[np.ndarray, np.ndarray]:
        """delta1 = |T|^-1 * surface integral of R_b(jump) (x) n, and its
        divergence counterpart."""
        return self.jump_flux / self.area, self.jump_divflux / self.area

    # -- per-dof fields at the volume rule --

    def _fields(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eps is None:
            nq = self.vol.points.shape[0]
            eps = np.zeros((self.ndof, nq, 2, 2))
            eps[: self.n0] = 0.5 * (self.G0 + self.G0.transpose(0, 1, 3, 2))
            eps += 0.5 * (self.delta1 + self.delta1.transpose(0, 2, 1))[:, None]
            div = np.zeros((self.ndof, nq))
            div[: self.n0] = np.trace(self.G0, axis1=2, axis2=3)
            div += self.delta2[:, None]
            self._eps = eps
            self._div = div
        return self._eps, self._div

    # -- local matrices --

    def local_stiffness(self, mu: float, lam: float, rho: float,
                        gamma: float) -> np.ndarray:
        """Local energy matrix: 2 mu (eps_g, eps_g) + lam (div_g, div_g)
        plus the stabilizer rho h_T^gamma <R_b jump, R_b jump>_dT.

        Assembled as F F^T with one weighted factor column per quadrature
        sample, which keeps the matrix symmetric by construction.
        """
        eps, div = self._fields()
        w = self.vol.weights
        scale = rho * self.diameter ** gamma
        blocks = [
            eps.reshape(self.ndof, -1) * np.sqrt(2.0 * mu * np.repeat(w, 4)),
            div * np.sqrt(lam * w),
        ]
        for le, proj in enumerate(self.projectors):
            R = self.rb_jumps[le].reshape(self.ndof, -1)
            blocks.append(R * np.sqrt(scale * np.repeat(proj.weights, 2)))
        F = np.concatenate(blocks, axis=1)
        return F @ F.T

    def local_load(self, f) -> np.ndarray:
        """(f, v0)_T for interior basis functions; edge dofs receive 0."""
        fv = np.asarray(f(self.vol.points), dtype=float)
        b = np.zeros(self.ndof)
        b[: self.n0] = np.einsum("inc,nc,n->i", self.V0, fv, self.vol.weights)
        return b

    def energy(self, vloc: np.ndarray, mu: float, lam: float, rho: float,
               gamma: float) -> float:
        """Local energy of one weak function, evaluated through its fields
        (not v^T A v, so exact-kernel functions come out at field-roundoff
        scale instead of matrix-cancellation scale)."""
        d1, d2 = self.correction_pair(vloc)
        grad = self.classical_gradient(vloc)
        eps = 0.5 * (grad + grad.transpose(0, 2, 1)) + 0.5 * (d1 + d1.T)[None]
        div = np.trace(grad, axis1=1, axis2=2) + d2
        w = self.vol.weights
        val = 2.0 * mu * np.einsum("nab,nab,n->", eps, eps, w)
        val += lam * np.einsum("n,n,n->", div, div, w)
        scale = rho * self.diameter ** gamma
        for le, proj in enumerate(self.projectors):
            rj = np.einsum("k,knc->nc", vloc, self.rb_jumps[le])
            val += scale * np.einsum("nc,nc,n->", rj, rj, proj.weights)
        return float(val)

    # -- weak operators for a local coefficient vector --

    def correction_pair(self, vloc: np.ndarray) -> tuple[np.ndarray, float]:
        d1 = np.einsum("k,kab->ab", vloc, self.delta1)
        d2 = float(vloc @ self.delta2)
        return d1, d2

    def classical_gradient(self, vloc: np.ndarray) -> np.ndarray:
        return np.einsum("k,knab->nab", vloc[: self.n0], self.G0)

    def rb_jump_values(self, vloc: np.ndarray, le: int) -> np.ndarray:
        """R_b(vb - v0) of the weak function on local edge le, at the edge rule."""
        return np.einsum("k,knc->nc", vloc, self.rb_jumps[le])

    def moment_residuals(self, vloc: np.ndarray) -> tuple[np.ndarray, float]:
        """Residuals of the correction moment equations for a weak function:
        (delta, psi)_T - <R_b(vb - v0), psi n>_dT per basis psi."""
        d1, d2 = self.correction_pair(vloc)
        qarea = float(np.sum(self.vol.weights))
        lhs1 = qarea * np.einsum("ab,kab->k", d1, _G1_BASIS)
        rhs1 = np.einsum("k,kab->ab", vloc, self.jump_flux).reshape(4)
        lhs2 = qarea * d2
        rhs2 = float(vloc @ self.jump_divflux)
        return lhs1 - rhs1, lhs2 - rhs2


def _local(mesh, eid, v, spaces, rb, quad_degree):
    kern = ElementKernel(mesh, eid, spaces, rb, quad_degree)
    return kern, v.local_coefficients(mesh, eid)


def correction_gradient(mesh: Mesh2D, eid: int, v: WeakFunction, spaces: SpaceSet,
                        rb: RbOperator, quad_degree: int | None = None) -> np.ndarray:
    """The constant gradient correction delta1 of v on element eid."""
    kern, vloc = _local(mesh, eid, v, spaces, rb, quad_degree)
    return kern.correction_pair(vloc)[0]


def correction_divergence(mesh: Mesh2D, eid: int, v: WeakFunction, spaces: SpaceSet,
                          rb: RbOperator, quad_degree: int | None = None) -> float:
    kern, vloc = _local(mesh, eid, v, spaces, rb, quad_degree)
    return kern.correction_pair(vloc)[1]


def weak_gradient(mesh: Mesh2D, eid: int, v: WeakFunction, spaces: SpaceSet,
                  rb: RbOperator, quad_degree: int | None = None) -> WeakGradientValue:
    kern, vloc = _local(mesh, eid, v, spaces, rb, quad_degree)
    d1, _ = kern.correction_pair(vloc)
    return WeakGradientValue(points=kern.vol.points,
                             classical=kern.classical_gradient(vloc),
                             correction=d1)


def weak_divergence(mesh: Mesh2D, eid: int, v: WeakFunction, spaces: SpaceSet,
                    rb: RbOperator, quad_degree: int | None = None) -> WeakDivergenceValue:
    kern, vloc = _local(mesh, eid, v, spaces, rb, quad_degree)
    _, d2 = kern.correction_pair(vloc)
    grad = kern.classical_gradient(vloc)
    return WeakDivergenceValue(points=kern.vol.points,
                               classical=np.trace(grad, axis1=1, axis2=2),
                               correction=d2)


def weak_strain(mesh: Mesh2D, eid: int, v: WeakFunction, spaces: SpaceSet,
                rb: RbOperator, quad_degree: int | None = None) -> np.ndarray:
    """Symmetrized weak gradient at the element quadrature points; (nq, 2, 2)."""
    g = weak_gradient(mesh, eid, v, spaces, rb, quad_degree).total
    return 0.5 * (g + g.transpose(0, 2, 1))


# -- admissibility predicates for (V^b, R_b) --


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    worst: float
    worst_edge: int
    detail: str


def check_rigid_motion_invariance(mesh: Mesh2D, boundary_cfg: BoundarySpaceConfig,
                                  rb: RbOperator, quad_degree: int = 10,
                                  tol: float = 1e-10) -> AssumptionCheck:
    """Does R_b fix rigid-motion traces on every edge?

    Checks the generators (1,0), (0,1), (-y,x) against their R_b images at
    the edge quadrature points.  The identity passes trivially; the
    projection passes iff rigid-motion traces lie in V^b(e).
    """
    name = "rigid-motion invariance"
    if rb.kind == "identity":
        return AssumptionCheck(name, True, 0.0, -1, "identity preserves all traces")
    rm = BoundarySpaceConfig("rm")
    cache: dict = {}
    worst = 0.0
    worst_edge = -1
    for e in range(mesh.num_edges):
        proj = EdgeProjector(mesh, e, boundary_cfg, quad_degree, cache)
        gens = eval_boundary(mesh, e, rm, proj.points)  # the three generators
        resid = float(np.max(np.abs(proj.apply(gens) - gens)))
        if resid > worst:
            worst = resid
            worst_edge = e
    passed = worst <= tol
    return AssumptionCheck(
        name, passed, worst, worst_edge,
        f"max rigid-motion projection residual {worst:.3e}"
        + ("" if passed else f" on edge {worst_edge}"),
    )


def check_rb_injectivity(mesh: Mesh2D, boundary_cfg: BoundarySpaceConfig,
                         quad_degree: int = 10,
                         condition_limit: float = 1e12) -> AssumptionCheck:
    """Are the edge Gram matrices of V^b(e) nonsingular (R_b one-to-one)?"""
    cache: dict = {}
    worst = 0.0
    worst_edge = -1
    for e in range(mesh.num_edges):
        proj = EdgeProjector(mesh, e, boundary_cfg, quad_degree, cache)
        c = proj.normalized_gram_condition
        if c > worst:
            worst = c
            worst_edge = e
    passed = bool(np.isfinite(worst)) and worst <= condition_limit
    return AssumptionCheck(
        "edge-space injectivity", passed, worst, worst_edge,
        f"max normalized edge Gram condition {worst:.3e}",
    )


def check_assumption_pair(mesh: Mesh2D, boundary_cfg: BoundarySpaceConfig,
                          rb: RbOperator, quad_degree: int = 10):
    """Both admissibility predicates for a (V^b, R_b) pair."""
    return (
        check_rigid_motion_invariance(mesh, boundary_cfg, rb, quad_degree),
        check_rb_injectivity(mesh, boundary_cfg, quad_degree),
    )
