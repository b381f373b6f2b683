"""Local approximation spaces on elements and edges.

Interior spaces are either the vector-valued linears (dimension 6) or an
activation span: the two constant vectors plus ``p`` activation functions
sigma(t_i) with t_i = w_i . (x - x0_i), where the direction w_i and the
anchor x0_i are drawn independently on every element.  Activation basis
vectors alternate components: the i-th one (1-based) lives in component 1
for odd i and component 2 for even i.

Edge spaces are constant vectors (dimension 2), linear vectors in an
edge-local coordinate (dimension 4), or rigid motions span{(1,0), (0,1),
(-y, x)} restricted to the edge (dimension 3).

Basis ordering is fixed and documented per kind; weak-function
coefficient blocks refer to these orderings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import Mesh2D, element_quadrature

__all__ = [
    "ACTIVATIONS",
    "InteriorSpaceConfig",
    "BoundarySpaceConfig",
    "ElementRandomParams",
    "SpaceSet",
    "SpaceConditioningError",
    "parse_interior",
    "parse_boundary",
    "default_quad_degree",
    "sample_element_params",
    "sample_params",
    "build_spaces",
    "eval_interior",
    "grad_interior",
    "eval_boundary",
    "interior_gram_condition",
    "GRAM_CONDITION_LIMIT",
    "MAX_RESAMPLE_ATTEMPTS",
]

GRAM_CONDITION_LIMIT = 1e12
MAX_RESAMPLE_ATTEMPTS = 8

ACTIVATIONS = ("sin", "cos", "sigmoid", "relu", "lrelu")


def _activation_pair(name: str, eps: float) -> tuple[Callable, Callable]:
    """Return (sigma, sigma') for an activation name.

    The relu subgradient at t = 0 is taken as 0 (eps for leaky relu).
    """
    if name == "sin":
        return np.sin, np.cos
    if name == "cos":
        return np.cos, lambda t: -np.sin(t)
    if name == "sigmoid":
        def sig(t):
            return 0.5 * (1.0 + np.tanh(0.5 * t))

        return sig, lambda t: sig(t) * (1.0 - sig(t))
    if name == "relu":
        return (
            lambda t: np.maximum(t, 0.0),
            lambda t: (t > 0).astype(float),
        )
    if name == "lrelu":
        return (
            lambda t: np.where(t > 0, t, eps * t),
            lambda t: np.where(t > 0, 1.0, eps),
        )
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class InteriorSpaceConfig:
    """Descriptor of V0(T).

    kind "p1" is the 6-dimensional vector-linear space; kind "activation"
    spans the two constants plus ``p`` activation basis vectors.
    ``leaky_slope`` is used only by the lrelu activation.
    """

    kind: str  # "p1" | "activation"
    activation: str | None = None
    p: int = 4
    leaky_slope: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("p1", "activation"):
            raise ValueError(f"unknown interior space kind {self.kind!r}")
        if self.kind == "activation":
            if self.activation not in ACTIVATIONS:
                raise ValueError(f"unknown activation {self.activation!r}")
            if self.p < 1:
                raise ValueError("activation count p must be >= 1")

    @property
    def dim(self) -> int:
        return 6 if self.kind == "p1" else 2 + self.p


@dataclass(frozen=True)
class BoundarySpaceConfig:
    """Descriptor of V^b(e): kind in {"p0", "p1", "rm"}."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("p0", "p1", "rm"):
            raise ValueError(f"unknown boundary space kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return {"p0": 2, "p1": 4, "rm": 3}[self.kind]


@dataclass
class ElementRandomParams:
    """Per-element activation parameters: directions w (p, 2) and anchors x0 (p, 2).

    Anchors lie inside the closed element; parameters are never shared
    across elements.  Treated as immutable after sampling.
    """

    w: np.ndarray
    x0: np.ndarray


@dataclass(frozen=True)
class SpaceSet:
    """Interior/boundary space configs plus sampled per-element parameters."""

    interior: InteriorSpaceConfig
    boundary: BoundarySpaceConfig
    params: tuple | None  # per-element ElementRandomParams, None for p1
    gram_condition: np.ndarray | None = None  # per-element interior mass condition

    def element_params(self, eid: int) -> ElementRandomParams | None:
        return None if self.params is None else self.params[eid]


class SpaceConditioningError(RuntimeError):
    """Raised when resampling cannot produce a well-conditioned element basis."""

    def __init__(self, eid: int, condition: float, attempts: int):
        self.eid = eid
        self.condition = condition
        self.attempts = attempts
        super().__init__(
            f"element {eid}: interior Gram condition {condition:.3e} exceeds "
            f"{GRAM_CONDITION_LIMIT:.0e} after {attempts} resampling attempts"
        )


def parse_interior(spec: str, seed: int = 0) -> InteriorSpaceConfig:
    """Parse an interior space string: p1, sin, cos, sigmoid, relu, lrelu:<eps>."""
    if spec == "p1":
        return InteriorSpaceConfig(kind="p1", seed=seed)
    if spec.startswith("lrelu"):
        _, _, tail = spec.partition(":")
        if not tail:
            raise ValueError("lrelu requires a slope, e.g. lrelu:0.1")
        try:
            eps = float(tail)
        except ValueError as exc:
            raise ValueError(f"invalid lrelu slope {tail!r}") from exc
        return InteriorSpaceConfig(kind="activation", activation="lrelu",
                                   leaky_slope=eps, seed=seed)
    if spec in ("sin", "cos", "sigmoid", "relu"):
        return InteriorSpaceConfig(kind="activation", activation=spec, seed=seed)
    raise ValueError(f"unknown interior space {spec!r}")


def parse_boundary(spec: str) -> BoundarySpaceConfig:
    if spec not in ("p0", "p1", "rm"):
        raise ValueError(f"unknown boundary space {spec!r}")
    return BoundarySpaceConfig(kind=spec)


def default_quad_degree(interior: InteriorSpaceConfig) -> int:
    """Degree 10 when activation bases are active, 4 for pure polynomials."""
    return 10 if interior.kind == "activation" else 4


def sample_element_params(
    cfg: InteriorSpaceConfig,
    kind: str,
    vertices: np.ndarray,
    draw: Callable[[], float],
) -> ElementRandomParams:
    """Sample one element's activation parameters from a uniform(0,1) source.

    Draw order, for i = 1..p: direction components (w_x, w_y), each
    uniform draw shifted by -0.5, then the anchor draws:

    * rectangular element (vertices counterclockwise from lower-left):
      two draws rx, ry give x0 = (x1 + rx*(x2-x1), y2 + ry*(y3-y2));
    * triangular element with vertices A1, A2, A3: draws a, r give
      alpha = a, beta = sqrt(r), x0 = beta*(alpha*A1 + (1-alpha)*A2)
      + (1-beta)*A3.
    """
    p = cfg.p
    w = np.empty((p, 2))
    x0 = np.empty((p, 2))
    for i in range(p):
        w[i, 0] = draw() - 0.5
        w[i, 1] = draw() - 0.5
        if kind == "rectangular":
            rx = draw()
            ry = draw()
            x0[i, 0] = vertices[0, 0] + rx * (vertices[1, 0] - vertices[0, 0])
            x0[i, 1] = vertices[1, 1] + ry * (vertices[2, 1] - vertices[1, 1])
        else:
            alpha = draw()
            beta = np.sqrt(draw())
            x0[i] = beta * (alpha * vertices[0] + (1.0 - alpha) * vertices[1]) \
                + (1.0 - beta) * vertices[2]
    return ElementRandomParams(w=w, x0=x0)


def _element_streams(seed_entropy, ne: int):
    """One independent PCG64 generator per element (splittable, reproducible).

    Streams are spawned from a single SeedSequence, so results do not
    depend on element iteration order.
    """
    root = np.random.SeedSequence(seed_entropy)
    return [np.random.Generator(np.random.PCG64(s)) for s in root.spawn(ne)]


def sample_params(mesh: Mesh2D, cfg: InteriorSpaceConfig, seed_entropy=None) -> list:
    """Sample activation parameters for every element (empty list for p1)."""
    if cfg.kind != "activation":
        return []
    if seed_entropy is None:
        seed_entropy = cfg.seed
    streams = _element_streams(seed_entropy, mesh.num_elements)
    return [
        sample_element_params(cfg, mesh.kind, mesh.element_vertices(eid),
                              streams[eid].uniform)
        for eid in range(mesh.num_elements)
    ]


def eval_interior(
    mesh: Mesh2D,
    eid: int,
    cfg: InteriorSpaceConfig,
    params: ElementRandomParams | None,
    points: np.ndarray,
) -> np.ndarray:
    """Interior basis values at ``points``; shape (dim, nq, 2).

    Basis order: constants (1,0), (0,1) first.  For p1 these are followed
    by (xi,0), (0,xi), (eta,0), (0,eta) with xi, eta the barycenter-centered
    coordinates scaled by 1/diameter (a conditioning-friendly basis of the
    same span).  For activation spans they are followed by the activation
    vectors for i = 1..p.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nq = points.shape[0]
    out = np.zeros((cfg.dim, nq, 2))
    out[0, :, 0] = 1.0
    out[1, :, 1] = 1.0
    if cfg.kind == "p1":
        center = mesh.elem_barycenter[eid]
        scale = mesh.elem_diameter[eid]
        xi = (points[:, 0] - center[0]) / scale
        eta = (points[:, 1] - center[1]) / scale
        out[2, :, 0] = xi
        out[3, :, 1] = xi
        out[4, :, 0] = eta
        out[5, :, 1] = eta
    else:
        f, _ = _activation_pair(cfg.activation, cfg.leaky_slope)
        t = np.einsum("pqd,pd->pq", points[None, :, :] - params.x0[:, None, :], params.w)
        vals = f(t)
        for k in range(cfg.p):
            out[2 + k, :, k % 2] = vals[k]
    return out


def grad_interior(
    mesh: Mesh2D,
    eid: int,
    cfg: InteriorSpaceConfig,
    params: ElementRandomParams | None,
    points: np.ndarray,
) -> np.ndarray:
    """Exact analytic basis gradients at ``points``; shape (dim, nq, 2, 2).

    Entry (i, q, a, b) is d(phi_i)_a / d x_b.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nq = points.shape[0]
    out = np.zeros((cfg.dim, nq, 2, 2))
    if cfg.kind == "p1":
        scale = mesh.elem_diameter[eid]
        out[2, :, 0, 0] = 1.0 / scale
        out[3, :, 1, 0] = 1.0 / scale
        out[4, :, 0, 1] = 1.0 / scale
        out[5, :, 1, 1] = 1.0 / scale
    else:
        _, df = _activation_pair(cfg.activation, cfg.leaky_slope)
        t = np.einsum("pqd,pd->pq", points[None, :, :] - params.x0[:, None, :], params.w)
        slopes = df(t)  # (p, nq)
        for k in range(cfg.p):
            out[2 + k, :, k % 2, :] = slopes[k][:, None] * params.w[k][None, :]
    return out


def eval_boundary(
    mesh: Mesh2D,
    edge_id: int,
    cfg: BoundarySpaceConfig,
    points: np.ndarray,
) -> np.ndarray:
    """Edge basis values at ``points`` on the edge; shape (dim, nq, 2).

    p0: (1,0), (0,1).  p1: additionally (s,0), (0,s) where s is the
    midpoint-centered arclength coordinate along the canonical tangent,
    scaled by 1/length.  rm: (1,0), (0,1), (-y, x) at the global point.
    All values are identical from either owner element.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nq = points.shape[0]
    out = np.zeros((cfg.dim, nq, 2))
    out[0, :, 0] = 1.0
    out[1, :, 1] = 1.0
    if cfg.kind == "p1":
        mid = mesh.edge_midpoint[edge_id]
        tangent = mesh.edge_tangent[edge_id]
        s = (points - mid) @ tangent / mesh.edge_length[edge_id]
        out[2, :, 0] = s
        out[3, :, 1] = s
    elif cfg.kind == "rm":
        out[2, :, 0] = -points[:, 1]
        out[2, :, 1] = points[:, 0]
    return out


def interior_gram_condition(
    mesh: Mesh2D,
    eid: int,
    cfg: InteriorSpaceConfig,
    params: ElementRandomParams | None,
    quad_degree: int,
) -> float:
    """2-norm condition estimate of the element interior mass matrix."""
    rule = element_quadrature(mesh, eid, quad_degree)
    vals = eval_interior(mesh, eid, cfg, params, rule.points)
    gram = np.einsum("inc,jnc,n->ij", vals, vals, rule.weights)
    return float(np.linalg.cond(gram))


def build_spaces(
    mesh: Mesh2D,
    interior: InteriorSpaceConfig,
    boundary: BoundarySpaceConfig,
    quad_degree: int | None = None,
    seed_entropy=None,
) -> SpaceSet:
    """Sample parameters and enforce per-element Gram conditioning.

    Elements whose interior mass matrix condition exceeds
    ``GRAM_CONDITION_LIMIT`` are resampled (drawing further from the same
    per-element stream) up to ``MAX_RESAMPLE_ATTEMPTS`` times before
    raising :class:`SpaceConditioningError`.
    """
    if quad_degree is None:
        quad_degree = default_quad_degree(interior)
    ne = mesh.num_elements
    cond = np.empty(ne)
    if interior.kind != "activation":
        for eid in range(ne):
            cond[eid] = interior_gram_condition(mesh, eid, interior, None, quad_degree)
        return SpaceSet(interior=interior, boundary=boundary, params=None,
                        gram_condition=cond)

    if seed_entropy is None:
        seed_entropy = interior.seed
    streams = _element_streams(seed_entropy, ne)
    params = []
    for eid in range(ne):
        draw = streams[eid].uniform
        verts = mesh.element_vertices(eid)
        for attempt in range(1 + MAX_RESAMPLE_ATTEMPTS):
            prm = sample_element_params(interior, mesh.kind, verts, draw)
            c = interior_gram_condition(mesh, eid, interior, prm, quad_degree)
            if c <= GRAM_CONDITION_LIMIT:
                break
        else:
            raise SpaceConditioningError(eid, c, MAX_RESAMPLE_ATTEMPTS)
        cond[eid] = c
        params.append(prm)
    return SpaceSet(interior=interior, boundary=boundary, params=tuple(params),
                    gram_condition=cond)
