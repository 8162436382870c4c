"""Domain reconstruction from the conformal parameter, plus analytic oracles.

Two independent routes recover the deformed domain from a vertex field a:

* ``reconstruct``: least-squares fit of new vertex positions so that every
  edge is stretched by exp((a_i + a_j)/2), solved by Gauss-Newton with
  Levenberg damping.  This is the production path and works for any a.
* ``harmonic_conjugate`` + ``integrate_map``: for (discretely) harmonic a,
  build the conjugate field b and integrate exp(a + i b) along a spanning
  tree.  This is the constructive-existence route and serves as an oracle
  for the first one.

Both leave a translation and a rotation undetermined; the gauge is fixed by
pinning one vertex to its reference position and the direction of one
incident boundary edge.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh2D, boundary_components, _orient_boundary
from .fem import FeFunction

__all__ = [
    "Gauge",
    "ReconstructedDomain",
    "default_gauge",
    "reconstruct",
    "harmonic_conjugate",
    "integrate_map",
    "rigid_align",
    "edge_residual",
]


@dataclass(frozen=True)
class Gauge:
    """Removes the rigid-motion freedom of the deformed domain.

    ``vertex`` is pinned to ``position`` and the direction from it along
    ``direction_to`` keeps the angle ``angle`` (radians, measured in the
    reference configuration when built by ``default_gauge``).
    """

    vertex: int
    position: tuple
    direction_to: int
    angle: float


@dataclass
class ReconstructedDomain:
    theta: np.ndarray        # (nv, 2) deformed vertex positions
    gauge: Gauge
    residual: float          # final value of the edge-misfit functional
    iterations: int
    self_overlapping: bool   # any inverted image triangle


def _vertex_field(mesh: Mesh2D, alpha) -> np.ndarray:
    """Vertex values of a conformal parameter given as FeFunction or array."""
    if isinstance(alpha, FeFunction):
        return alpha.vertex_values()
    a = np.asarray(alpha, dtype=float)
    if a.shape[0] == mesh.num_vertices:
        return a
    raise ValueError("alpha must have one value per mesh vertex")


def default_gauge(mesh: Mesh2D) -> Gauge:
    """Pin the lowest-index boundary vertex and its outgoing boundary edge."""
    directed = _orient_boundary(mesh)
    k = int(np.argmin(directed[:, 0]))
    p, q = int(directed[k, 0]), int(directed[k, 1])
    d = mesh.vertices[q] - mesh.vertices[p]
    return Gauge(vertex=p, position=tuple(mesh.vertices[p]),
                 direction_to=q, angle=float(np.arctan2(d[1], d[0])))


def edge_residual(mesh: Mesh2D, theta: np.ndarray, alpha_vertex: np.ndarray) -> float:
    """Value of the edge-misfit functional at given positions."""
    e = mesh.edge_set()
    i, j = e[:, 0], e[:, 1]
    d = theta[i] - theta[j]
    ref = mesh.vertices[i] - mesh.vertices[j]
    target = np.exp(alpha_vertex[i] + alpha_vertex[j]) * np.sum(ref * ref, axis=1)
    r = np.sum(d * d, axis=1) - target
    return float(np.dot(r, r))


def reconstruct(mesh: Mesh2D, alpha, gauge: Gauge | None = None,
                grad_tol: float = 1e-10, max_iter: int = 200) -> ReconstructedDomain:
    """Deform the mesh so each edge length is scaled by exp of the parameter.

    Minimizes  sum_edges (|t_i - t_j|^2 - exp(a_i + a_j) |v_i - v_j|^2)^2
    over vertex positions t, starting from the identity, with the gauge
    eliminated exactly (pinned vertex fixed, pinned edge direction fixed with
    free length).  ``alpha`` is taken at vertices (P1 view of a P2 field).

    An inverted triangle in the result triggers a warning (the prescribed
    scale field may correspond to a self-overlapping image) but the result is
    still returned.
    """
    a = _vertex_field(mesh, alpha)
    if gauge is None:
        gauge = default_gauge(mesh)
    nv = mesh.num_vertices
    p, q = gauge.vertex, gauge.direction_to
    dhat = np.array([np.cos(gauge.angle), np.sin(gauge.angle)])

    edges = mesh.edge_set()
    ei, ej = edges[:, 0], edges[:, 1]
    ref = mesh.vertices[ei] - mesh.vertices[ej]
    ref_sq = np.sum(ref * ref, axis=1)

    # Free parameterization: u = [t_q_len, coords of all vertices != p, q].
    others = np.array([v for v in range(nv) if v not in (p, q)], dtype=np.int64)
    col_of = np.full(nv, -1, dtype=np.int64)  # column of vertex's x coord; y is +1
    col_of[others] = 1 + 2 * np.arange(len(others))
    nfree = 1 + 2 * len(others)

    def positions(u):
        th = np.empty((nv, 2))
        th[p] = gauge.position
        th[q] = th[p] + u[0] * dhat
        th[others] = u[1:].reshape(-1, 2)
        return th

    u = np.empty(nfree)
    u[0] = float(np.linalg.norm(mesh.vertices[q] - mesh.vertices[p]))
    u[1:] = mesh.vertices[others].ravel()

    def gauss_newton(u, target, budget):
        # Jacobian sparsity: per edge, d r / d theta_i = 2 (theta_i - theta_j).
        lam = 1e-8
        used = 0
        theta = positions(u)
        for used in range(1, budget + 1):
            d = theta[ei] - theta[ej]
            r = np.sum(d * d, axis=1) - target
            rows, cols, vals = [], [], []
            for sgn, vidx in ((2.0, ei), (-2.0, ej)):
                grad = sgn * d  # (ne, 2)
                free = col_of[vidx] >= 0
                idx = np.flatnonzero(free)
                rows.append(np.repeat(idx, 2))
                c = col_of[vidx[idx]]
                cols.append(np.column_stack([c, c + 1]).ravel())
                vals.append(grad[idx].ravel())
                pinq = vidx == q
                idxq = np.flatnonzero(pinq)
                rows.append(idxq)
                cols.append(np.zeros(len(idxq), dtype=np.int64))
                vals.append(grad[idxq] @ dhat)
            J = sp.csr_matrix((np.concatenate(vals),
                               (np.concatenate(rows), np.concatenate(cols))),
                              shape=(len(ei), nfree))
            g = 2.0 * (J.T @ r)
            if np.abs(g).max() <= grad_tol:
                break
            JtJ = (J.T @ J).tocsc()
            F0 = float(r @ r)
            while True:
                H = (JtJ + lam * sp.identity(nfree, format="csc")).tocsc()
                du = spla.spsolve(H, -(J.T @ r))
                theta_try = positions(u + du)
                dtry = theta_try[ei] - theta_try[ej]
                rtry = np.sum(dtry * dtry, axis=1) - target
                if float(rtry @ rtry) <= F0 or lam > 1e12:
                    break
                lam *= 10.0
            u = u + du
            theta = positions(u)
            lam = max(lam * 0.3, 1e-12)
        return u, used

    # Continuation in the parameter amplitude: large deformations reached in
    # one leap from the identity tend to fold; tracking t*a for increasing t
    # stays on the orientation-preserving branch.
    spread = float(a.max() - a.min())
    nsteps = max(1, int(np.ceil(spread / 0.25)))
    it = 0
    for k in range(1, nsteps + 1):
        t = k / nsteps
        target = np.exp(t * (a[ei] + a[ej])) * ref_sq
        budget = max_iter if k == nsteps else max(10, max_iter // (2 * nsteps))
        u, used = gauss_newton(u, target, budget)
        it += used

    theta = positions(u)
    d = theta[ei] - theta[ej]
    target = np.exp(a[ei] + a[ej]) * ref_sq
    r = np.sum(d * d, axis=1) - target
    residual = float(r @ r)

    pimg = theta[mesh.triangles]
    d1 = pimg[:, 1] - pimg[:, 0]
    d2 = pimg[:, 2] - pimg[:, 0]
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    overlapping = bool(np.any(areas <= 0))
    if overlapping:
        warnings.warn("reconstructed domain has inverted triangles "
                      "(self-overlapping image)", RuntimeWarning, stacklevel=2)
    return ReconstructedDomain(theta=theta, gauge=gauge, residual=residual,
                               iterations=it, self_overlapping=overlapping)


def _p1_gradients(mesh: Mesh2D):
    """Per-triangle constant gradients of the P1 hat functions: (nt, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g = np.empty((mesh.num_triangles, 3, 2))
    g[:, 1, 0] = d2[:, 1]
    g[:, 1, 1] = -d2[:, 0]
    g[:, 2, 0] = -d1[:, 1]
    g[:, 2, 1] = d1[:, 0]
    g[:, 1:] /= det[:, None, None]
    g[:, 0] = -g[:, 1] - g[:, 2]
    return g, 0.5 * det


def harmonic_conjugate(mesh: Mesh2D, alpha, gauge: Gauge | None = None) -> np.ndarray:
    """Conjugate vertex field b with grad b = (-d2 a, d1 a), b(pinned) = 0.

    Least-squares over triangles: minimize the area-weighted misfit between
    grad b and the rotated gradient of a, which reduces to a P1 Laplace solve
    with one pinned value.  Requires a simply connected mesh (otherwise the
    rotated field has no single-valued potential).
    """
    a = _vertex_field(mesh, alpha)
    nv = mesh.num_vertices
    ne = mesh.edge_set().shape[0]
    if nv - ne + mesh.num_triangles != 1:
        raise ValueError("mesh is not simply connected")
    if gauge is None:
        gauge = default_gauge(mesh)

    g, area = _p1_gradients(mesh)
    grad_a = np.einsum("tid,ti->td", g, a[mesh.triangles])
    rot = np.column_stack([-grad_a[:, 1], grad_a[:, 0]])

    # Normal equations: K b = rhs with the P1 stiffness K.
    tri = mesh.triangles
    local = np.einsum("tia,tja->tij", g, g) * area[:, None, None]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    K = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(nv, nv))
    rhs = np.zeros(nv)
    contrib = np.einsum("tid,td->ti", g, rot) * area[:, None]
    np.add.at(rhs, tri.ravel(), contrib.ravel())

    z0 = gauge.vertex
    keep = np.ones(nv, dtype=bool)
    keep[z0] = False
    idx = np.flatnonzero(keep)
    b = np.zeros(nv)
    b[idx] = spla.spsolve(K[np.ix_(idx, idx)].tocsc(), rhs[idx])
    return b


def integrate_map(mesh: Mesh2D, alpha, beta, gauge: Gauge | None = None) -> np.ndarray:
    """Integrate exp(a + i b) along mesh edges from the pinned vertex.

    Edgewise trapezoidal integration over a breadth-first spanning tree.
    Returns complex vertex positions with T(pinned) = pinned position; the
    gauge rotation is applied as a constant shift of b.
    """
    a = _vertex_field(mesh, alpha)
    b = _vertex_field(mesh, beta)
    if gauge is None:
        gauge = default_gauge(mesh)

    # Rotate so the pinned edge direction is preserved exactly in the limit:
    # b already has b(pinned)=0 from the conjugate construction; any residual
    # constant is absorbed here.
    rot = -b[gauge.vertex]
    expg = np.exp(a + 1j * (b + rot))
    z = mesh.vertices[:, 0] + 1j * mesh.vertices[:, 1]

    edges = mesh.edge_set()
    nv = mesh.num_vertices
    neighbors = [[] for _ in range(nv)]
    for i, j in edges:
        neighbors[int(i)].append(int(j))
        neighbors[int(j)].append(int(i))

    T = np.zeros(nv, dtype=complex)
    T[gauge.vertex] = complex(*gauge.position)
    seen = np.zeros(nv, dtype=bool)
    seen[gauge.vertex] = True
    queue = [gauge.vertex]
    while queue:
        nxt = []
        for i in queue:
            for j in sorted(neighbors[i]):
                if not seen[j]:
                    seen[j] = True
                    T[j] = T[i] + (z[j] - z[i]) * 0.5 * (expg[i] + expg[j])
                    nxt.append(j)
        queue = nxt
    if not np.all(seen):
        raise ValueError("mesh is not edge-connected")
    return T


def rigid_align(points: np.ndarray, reference: np.ndarray):
    """Best rigid motion (rotation + translation) of ``points`` onto
    ``reference`` in the least-squares sense; returns (aligned, rms)."""
    P = np.asarray(points, dtype=float)
    Q = np.asarray(reference, dtype=float)
    cp, cq = P.mean(axis=0), Q.mean(axis=0)
    A = (Q - cq).T @ (P - cp)
    U, _s, Vt = np.linalg.svd(A)
    d = np.sign(np.linalg.det(U @ Vt))
    R = U @ np.diag([1.0, d]) @ Vt
    aligned = (P - cp) @ R.T + cq
    rms = float(np.sqrt(np.mean(np.sum((aligned - Q) ** 2, axis=1))))
    return aligned, rms
