"""Lagrange finite element spaces and sparse operator assembly.

The interior space is P2 (one dof per vertex plus one per edge midpoint);
the boundary space is P1 on the boundary polyline.  All quadrature is exact
for the P2 x P2 products that occur: a 6-point degree-4 rule on triangles and
2-point Gauss on boundary edges.  Exponential coefficients are handled
nodally ("pointwise"): a field like exp(2a)*w is formed at the dofs first and
the assembled mass operator is applied to that product vector.

Assembly is deterministic: triplets are reduced in a canonical
(row, col, value) order, so permuting the element loop cannot change a single
bit of the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh2D, BoundaryComponent, boundary_components

__all__ = [
    "FeSpace",
    "FeFunction",
    "assemble_stiffness",
    "assemble_mass",
    "assemble_state_system",
    "assemble_vorticity",
    "assemble_alpha_constraint",
    "assemble_length_chain",
    "trace_operator",
    "boundary_load_vector",
]

# Degree-4 triangle rule (6 points, barycentric, weights sum to 1).
_TRI_A1, _TRI_B1, _TRI_W1 = 0.816847572980459, 0.091576213509771, 0.109951743655322
_TRI_A2, _TRI_B2, _TRI_W2 = 0.108103018168070, 0.445948490915965, 0.223381589678011
_TRI_POINTS = np.array([
    [_TRI_A1, _TRI_B1, _TRI_B1], [_TRI_B1, _TRI_A1, _TRI_B1], [_TRI_B1, _TRI_B1, _TRI_A1],
    [_TRI_A2, _TRI_B2, _TRI_B2], [_TRI_B2, _TRI_A2, _TRI_B2], [_TRI_B2, _TRI_B2, _TRI_A2],
])
_TRI_WEIGHTS = np.array([_TRI_W1] * 3 + [_TRI_W2] * 3)

# 2-point Gauss on [0, 1].
_EDGE_POINTS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_EDGE_WEIGHTS = np.array([0.5, 0.5])


def _p2_shape(lam: np.ndarray) -> np.ndarray:
    """P2 shape values at barycentric points lam (nq, 3) -> (nq, 6)."""
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    return np.column_stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ])


def _p2_grad_ref(lam: np.ndarray) -> np.ndarray:
    """P2 reference gradients at barycentric points -> (nq, 6, 2).

    Reference coordinates (xi, eta) with l0 = 1-xi-eta, l1 = xi, l2 = eta.
    """
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    nq = lam.shape[0]
    g = np.zeros((nq, 6, 2))
    g[:, 0, 0] = 1 - 4 * l0
    g[:, 0, 1] = 1 - 4 * l0
    g[:, 1, 0] = 4 * l1 - 1
    g[:, 2, 1] = 4 * l2 - 1
    g[:, 3, 0] = 4 * (l0 - l1)
    g[:, 3, 1] = -4 * l1
    g[:, 4, 0] = 4 * l2
    g[:, 4, 1] = 4 * l1
    g[:, 5, 0] = -4 * l2
    g[:, 5, 1] = 4 * (l0 - l2)
    return g


def _p1_shape(lam: np.ndarray) -> np.ndarray:
    return lam.copy()


def _p1_grad_ref(lam: np.ndarray) -> np.ndarray:
    nq = lam.shape[0]
    g = np.zeros((nq, 3, 2))
    g[:, 0] = (-1.0, -1.0)
    g[:, 1] = (1.0, 0.0)
    g[:, 2] = (0.0, 1.0)
    return g


@dataclass(frozen=True)
class FeSpace:
    """Lagrange space of order 1 or 2 on a triangulation.

    Order 1 dofs are the mesh vertices; order 2 adds one dof per edge,
    placed at the midpoint.  ``cell_dofs[t]`` lists the local-to-global map
    of triangle ``t`` (3 or 6 entries).
    """

    mesh: Mesh2D
    order: int

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        tri = self.mesh.triangles
        nv = self.mesh.num_vertices
        if self.order == 1:
            object.__setattr__(self, "_edges", None)
            object.__setattr__(self, "cell_dofs", tri.copy())
            object.__setattr__(self, "ndof", nv)
            object.__setattr__(self, "dof_points", self.mesh.vertices.copy())
        else:
            edges = self.mesh.edge_set()
            lookup = {tuple(e): k for k, e in enumerate(map(tuple, edges))}
            cd = np.empty((tri.shape[0], 6), dtype=np.int64)
            cd[:, :3] = tri
            for t, (a, b, c) in enumerate(tri):
                cd[t, 3] = nv + lookup[tuple(sorted((a, b)))]
                cd[t, 4] = nv + lookup[tuple(sorted((b, c)))]
                cd[t, 5] = nv + lookup[tuple(sorted((c, a)))]
            pts = np.vstack([self.mesh.vertices,
                             0.5 * (self.mesh.vertices[edges[:, 0]]
                                    + self.mesh.vertices[edges[:, 1]])])
            object.__setattr__(self, "_edges", edges)
            object.__setattr__(self, "_edge_lookup", lookup)
            object.__setattr__(self, "cell_dofs", cd)
            object.__setattr__(self, "ndof", nv + edges.shape[0])
            object.__setattr__(self, "dof_points", pts)

    def edge_dof(self, a: int, b: int) -> int:
        """Global dof of the midpoint of edge {a, b} (order 2 only)."""
        if self.order != 2:
            raise ValueError("edge dofs exist only for order 2")
        return self.mesh.num_vertices + self._edge_lookup[tuple(sorted((int(a), int(b))))]

    def component_dofs(self, comp: BoundaryComponent, closure: bool = True) -> np.ndarray:
        """Dofs on a boundary chain, in chain order.

        For order 2 the pattern is [v0, m01, v1, m12, ..., vm]; ``closure``
        keeps the chain endpoint vertices (drop them for the open interior of
        the chain, e.g. when the endpoints are corners owned by a neighbor).
        """
        vs = comp.vertices
        if self.order == 1:
            dofs = vs.copy()
        else:
            dofs = np.empty(2 * len(vs) - 1, dtype=np.int64)
            dofs[0::2] = vs
            for k in range(len(vs) - 1):
                dofs[2 * k + 1] = self.edge_dof(vs[k], vs[k + 1])
        return dofs if closure else dofs[1:-1]

    def component_dof_arclen(self, comp: BoundaryComponent, closure: bool = True) -> np.ndarray:
        """Arc lengths matching ``component_dofs`` (midpoints at edge centers)."""
        s = comp.arclen
        if self.order == 1:
            out = s.copy()
        else:
            out = np.empty(2 * len(s) - 1)
            out[0::2] = s
            out[1::2] = 0.5 * (s[:-1] + s[1:])
        return out if closure else out[1:-1]

    def boundary_dofs(self) -> np.ndarray:
        """All dofs on the boundary, sorted ascending."""
        out = set()
        for (a, b) in self.mesh.boundary_edges:
            out.add(int(a))
            out.add(int(b))
            if self.order == 2:
                out.add(self.edge_dof(a, b))
        return np.array(sorted(out), dtype=np.int64)

    def interior_dofs(self) -> np.ndarray:
        mask = np.ones(self.ndof, dtype=bool)
        mask[self.boundary_dofs()] = False
        return np.flatnonzero(mask)


@dataclass
class FeFunction:
    """Coefficient vector in an FeSpace."""

    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.ndof,):
            raise ValueError(f"coefficient length {self.coeffs.shape} != ndof {self.space.ndof}")

    @classmethod
    def zeros(cls, space: FeSpace) -> "FeFunction":
        return cls(space, np.zeros(space.ndof))

    @classmethod
    def from_callable(cls, space: FeSpace, fn) -> "FeFunction":
        p = space.dof_points
        return cls(space, np.asarray(fn(p[:, 0], p[:, 1]), dtype=float))

    def vertex_values(self) -> np.ndarray:
        return self.coeffs[: self.space.mesh.num_vertices]


def _canonical_coo(rows, cols, vals, shape) -> sp.csr_matrix:
    """Duplicate-summing COO -> CSR with a canonical reduction order.

    Triplets are sorted by (row, col, value) before the reduction, so the
    summation order (and hence every output bit) is independent of how the
    element loop produced them.
    """
    rows = np.asarray(rows).ravel()
    cols = np.asarray(cols).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    order = np.lexsort((vals, cols, rows))
    a = sp.coo_matrix((vals[order], (rows[order], cols[order])), shape=shape)
    # coo->csr sums duplicates in the (already canonical) stored order
    out = a.tocsr()
    out.sum_duplicates()
    return out


def _geometry(mesh: Mesh2D):
    p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (nt,2,2), cols
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJT = np.empty_like(J)
    invJT[:, 0, 0] = J[:, 1, 1]
    invJT[:, 0, 1] = -J[:, 1, 0]
    invJT[:, 1, 0] = -J[:, 0, 1]
    invJT[:, 1, 1] = J[:, 0, 0]
    invJT /= det[:, None, None]
    return J, det, invJT


def _assemble_bilinear(space: FeSpace, kind: str) -> sp.csr_matrix:
    mesh = space.mesh
    _, det, invJT = _geometry(mesh)
    area = 0.5 * det
    if space.order == 2:
        shape_fn, grad_fn, nloc = _p2_shape, _p2_grad_ref, 6
    else:
        shape_fn, grad_fn, nloc = _p1_shape, _p1_grad_ref, 3

    lam = _TRI_POINTS
    w = _TRI_WEIGHTS
    if kind == "stiffness":
        gref = grad_fn(lam)  # (nq, nloc, 2)
        # physical gradients: g[t, q, i, :] = invJT[t] @ gref[q, i]
        g = np.einsum("tab,qib->tqia", invJT, gref)
        local = np.einsum("q,tqia,tqja->tij", w, g, g) * area[:, None, None]
    elif kind == "mass":
        s = shape_fn(lam)  # (nq, nloc)
        local = np.einsum("q,qi,qj->ij", w, s, s)[None, :, :] * area[:, None, None]
    else:
        raise ValueError(kind)

    cd = space.cell_dofs
    rows = np.repeat(cd, nloc, axis=1).ravel()
    cols = np.tile(cd, (1, nloc)).ravel()
    return _canonical_coo(rows, cols, local.ravel(), (space.ndof, space.ndof))


def assemble_stiffness(space: FeSpace) -> sp.csr_matrix:
    """Stiffness matrix K with (K v)_i = integral of grad(v) . grad(phi_i)."""
    return _assemble_bilinear(space, "stiffness")


def assemble_mass(space: FeSpace) -> sp.csr_matrix:
    """Mass matrix M with (M v)_i = integral of v phi_i."""
    return _assemble_bilinear(space, "mass")


def _selector(rows: np.ndarray, ndof: int) -> sp.csr_matrix:
    """Identity rows picking the given dofs."""
    m = len(rows)
    return sp.csr_matrix((np.ones(m), (np.arange(m), rows)), shape=(m, ndof))


def assemble_state_system(space: FeSpace, g, dirichlet_mode: str = "full",
                          dirichlet_dofs: np.ndarray | None = None):
    """Stream-function block of the coupled state system.

    Returns ``(A11, A12, b1)`` with ``A11 psi + A12 (exp(2a) * omega) = b1``.
    The first ``ndof`` rows are the weak Laplacian tested with the *full*
    space (boundary test functions included, which imposes the zero normal
    derivative naturally and supplies the equations that close the vorticity
    boundary values); ``A12`` is minus the mass matrix applied to the nodal
    product vector.  After those come identity rows pinning ``psi`` to ``g``
    on the Dirichlet dofs:

    * ``dirichlet_mode="full"``: every boundary dof,
    * ``dirichlet_mode="wall_only"``: dofs on wall components only (inflow
      values are then supplied by separate constraints),
    * or an explicit ``dirichlet_dofs`` array.

    ``g`` may be an FeFunction on ``space``, a plain array over all dofs, or
    a dict dof->value covering at least the Dirichlet dofs.
    """
    if dirichlet_dofs is None:
        if dirichlet_mode == "full":
            dirichlet_dofs = space.boundary_dofs()
        elif dirichlet_mode == "wall_only":
            dofs = []
            for comp in boundary_components(space.mesh):
                if comp.kind == "wall":
                    dofs.append(space.component_dofs(comp))
            dirichlet_dofs = np.unique(np.concatenate(dofs)) if dofs else np.array([], dtype=np.int64)
        else:
            raise ValueError(f"unknown dirichlet_mode {dirichlet_mode!r}")
    dirichlet_dofs = np.asarray(dirichlet_dofs, dtype=np.int64)

    if isinstance(g, FeFunction):
        gvals = g.coeffs[dirichlet_dofs]
    elif isinstance(g, dict):
        missing = [int(d) for d in dirichlet_dofs if int(d) not in g]
        if missing:
            raise ValueError(f"missing boundary data for dof {missing[0]}")
        gvals = np.array([g[int(d)] for d in dirichlet_dofs], dtype=float)
    else:
        g = np.asarray(g, dtype=float)
        gvals = g[dirichlet_dofs]

    K = assemble_stiffness(space)
    M = assemble_mass(space)
    nd = len(dirichlet_dofs)
    A11 = sp.vstack([K, _selector(dirichlet_dofs, space.ndof)], format="csr")
    A12 = sp.vstack([-M, sp.csr_matrix((nd, space.ndof))], format="csr")
    b1 = np.concatenate([np.zeros(space.ndof), gvals])
    return A11, A12, b1


def assemble_vorticity(space: FeSpace) -> sp.csr_matrix:
    """Interior-tested weak Laplacian for the vorticity (no boundary rows)."""
    K = assemble_stiffness(space)
    return K[space.interior_dofs(), :]


def assemble_alpha_constraint(space: FeSpace, kinds):
    """Discrete harmonicity of the conformal parameter plus inflow conditions.

    ``kinds`` maps each inflow component name to "I1" (pin the parameter to
    zero on the component, preserving its length), "I2" (natural zero-Neumann
    rows, preserving curvature), or "I3" (zero-Neumann rows plus one integral
    row per component forcing the deformed component length to stay equal to
    the reference length).  A single string applies to all inflow components.

    Returns ``(A3, A4, b4)``.  ``A3`` stacks the weak Laplacian rows tested
    with all interior dofs, then per component either identity rows (I1) or
    weak rows tested with the component's dofs (I2/I3).  Both use the open
    chain only: the corner endpoint vertices stay unconstrained control dofs
    on the wall side (the corner shear is set by the boundary data scaled by
    exp(-2a) there, so pinning the corners would freeze it).  ``A4`` has one
    row per I3 component holding the boundary quadrature weights of the
    component (so that ``A4 exp(a) = b4`` enforces the length constraint);
    it is None when no component uses I3, and ``b4`` then is None as well.
    """
    comps = [c for c in boundary_components(space.mesh) if c.kind == "inflow"]
    if isinstance(kinds, str):
        kinds = {c.name: kinds for c in comps}
    for c in comps:
        if c.name not in kinds:
            raise ValueError(f"no constraint kind given for inflow component {c.name!r}")
        if kinds[c.name] not in ("I1", "I2", "I3"):
            raise ValueError(f"unknown constraint kind {kinds[c.name]!r}")

    K = assemble_stiffness(space)
    blocks = [K[space.interior_dofs(), :]]
    a4_rows, b4_vals = [], []
    for c in comps:
        kind = kinds[c.name]
        if kind == "I1":
            blocks.append(_selector(space.component_dofs(c, closure=False), space.ndof))
        else:
            strict = space.component_dofs(c, closure=False)
            blocks.append(K[strict, :])
            if kind == "I3":
                if c.length <= 0:
                    raise ValueError(f"I3 on zero-length component {c.name!r}")
                a4_rows.append(boundary_load_vector(space, c))
                b4_vals.append(c.length)
    A3 = sp.vstack(blocks, format="csr")
    if a4_rows:
        A4 = sp.csr_matrix(np.vstack(a4_rows))
        b4 = np.array(b4_vals)
    else:
        A4, b4 = None, None
    return A3, A4, b4


def boundary_load_vector(space: FeSpace, comp: BoundaryComponent) -> np.ndarray:
    """Weights w with w . v = integral of v along the component polyline.

    Exact for the P2 trace (2-point Gauss per edge, i.e. Simpson weights).
    """
    w = np.zeros(space.ndof)
    vs = comp.vertices
    for k in range(len(vs) - 1):
        a, b = int(vs[k]), int(vs[k + 1])
        h = float(np.linalg.norm(space.mesh.vertices[b] - space.mesh.vertices[a]))
        if space.order == 1:
            w[a] += h / 2
            w[b] += h / 2
        else:
            m = space.edge_dof(a, b)
            w[a] += h / 6
            w[b] += h / 6
            w[m] += 2 * h / 3
    return w


def assemble_length_chain(comp: BoundaryComponent, space: FeSpace):
    """Cumulative stretched-length relation along an inflow component.

    The auxiliary length variable L (one value per chain vertex) satisfies
    ``A_k1 L + A_k2 exp(a) = 0``: the first row pins L at the chain start to
    zero, and row i encodes the trapezoidal increment
    ``L[i+1] - L[i] - (h_i / 2) (exp(a_i) + exp(a_{i+1})) = 0``.
    ``A_k2`` has columns over the full space so it can be applied to the
    nodal vector exp(a).
    """
    vs = comp.vertices
    m = len(vs)
    seg = np.diff(comp.arclen)
    r1, c1, v1 = [0], [0], [1.0]
    r2, c2, v2 = [], [], []
    for i in range(m - 1):
        r1 += [i + 1, i + 1]
        c1 += [i + 1, i]
        v1 += [1.0, -1.0]
        r2 += [i + 1, i + 1]
        c2 += [int(vs[i]), int(vs[i + 1])]
        v2 += [-seg[i] / 2, -seg[i] / 2]
    A_k1 = sp.csr_matrix((v1, (r1, c1)), shape=(m, m))
    A_k2 = _canonical_coo(r2, c2, v2, (m, space.ndof))
    return A_k1, A_k2


def trace_operator(space: FeSpace, comps) -> sp.csr_matrix:
    """Boundary trace G onto P1 vertex values of the given components.

    Rows follow the components in the given order and each component's chain
    order; every row has a single unit entry at the matching vertex dof (the
    P2 basis is nodal at vertices).
    """
    rows_vertices = np.concatenate([c.vertices for c in comps])
    return _selector(rows_vertices, space.ndof)
