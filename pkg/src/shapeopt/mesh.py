"""Triangulations of the reference domain with labeled boundary segments.

A mesh is a plain triangle list plus a set of labeled boundary edges.  The
labels split the boundary into *inflow* and *wall* components; every
component is an open polyline chain (bounded by label changes) walked in the
counterclockwise orientation of the outer boundary loop.  Meshes are
immutable after construction and validated eagerly, so downstream assembly
code never has to re-check orientation or connectivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mesh2D",
    "BoundaryComponent",
    "MeshError",
    "generate_rectangle",
    "generate_distributor",
    "structured_rectangle",
    "boundary_components",
    "load_mesh",
    "save_mesh",
]

INFLOW = "inflow"
WALL = "wall"


class MeshError(ValueError):
    """Raised for malformed mesh input (parse errors, broken invariants)."""


@dataclass(frozen=True)
class BoundaryComponent:
    """One labeled boundary chain with its arc-length parameterization.

    ``vertices`` lists the chain's vertex indices in boundary order and
    ``arclen[i]`` is the cumulative polyline length from the chain start to
    ``vertices[i]`` (``arclen[0] == 0``, ``arclen[-1] == length``).
    """

    label: int
    name: str
    kind: str  # "inflow" | "wall"
    vertices: np.ndarray  # (m+1,) int, chain order
    arclen: np.ndarray  # (m+1,) float, cumulative

    @property
    def length(self) -> float:
        return float(self.arclen[-1])

    @property
    def edges(self) -> np.ndarray:
        """Chain edges as an (m, 2) index array in chain order."""
        return np.column_stack([self.vertices[:-1], self.vertices[1:]])

    def points(self, mesh: "Mesh2D") -> np.ndarray:
        return mesh.vertices[self.vertices]

    def point_at(self, mesh: "Mesh2D", s) -> np.ndarray:
        """Points on the chain polyline at arc length(s) ``s`` (clamped)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        s = np.clip(s, 0.0, self.length)
        pts = self.points(mesh)
        x = np.interp(s, self.arclen, pts[:, 0])
        y = np.interp(s, self.arclen, pts[:, 1])
        return np.column_stack([x, y])


@dataclass(frozen=True)
class Mesh2D:
    """Immutable triangulation with labeled boundary edges.

    vertices
        (nv, 2) float array of coordinates.
    triangles
        (nt, 3) int array, counterclockwise vertex triples.
    boundary_edges
        (nbe, 2) int array; each row is one boundary edge.
    boundary_labels
        (nbe,) int array, one label per boundary edge.
    label_map
        label -> (kind, name) with kind in {"inflow", "wall"}.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_labels: np.ndarray
    label_map: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "boundary_edges", np.asarray(self.boundary_edges, dtype=np.int64))
        object.__setattr__(self, "boundary_labels", np.asarray(self.boundary_labels, dtype=np.int64))
        _validate(self)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_set(self) -> np.ndarray:
        """All unique undirected triangle edges as a sorted (ne, 2) array."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def kind_of(self, label: int) -> str:
        return self.label_map[int(label)][0]

    def name_of(self, label: int) -> str:
        return self.label_map[int(label)][1]


def _validate(mesh: Mesh2D) -> None:
    nv = mesh.vertices.shape[0]
    tri = mesh.triangles
    if tri.size and (tri.min() < 0 or tri.max() >= nv):
        raise MeshError("triangle references vertex index out of range")

    areas = mesh.triangle_areas()
    bad = np.flatnonzero(areas <= 0)
    if bad.size:
        raise MeshError(f"triangle {bad[0]} has non-positive area {areas[bad[0]]:.3e} "
                        "(orientation must be counterclockwise)")

    # Undirected edge -> number of adjacent triangles.
    e = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    und = np.sort(e, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshError("non-manifold edge shared by more than two triangles")
    count_lookup = {tuple(k): c for k, c in zip(map(tuple, uniq), counts)}

    be = mesh.boundary_edges
    if be.shape[0] != mesh.boundary_labels.shape[0]:
        raise MeshError("boundary edge / label length mismatch")
    seen = set()
    for k, (i, j) in enumerate(map(tuple, np.sort(be, axis=1))):
        if (i, j) in seen:
            raise MeshError(f"boundary edge repeated: ({i}, {j})")
        seen.add((i, j))
        c = count_lookup.get((i, j))
        if c is None:
            raise MeshError(f"boundary edge ({i}, {j}) is not a triangle edge")
        if c != 1:
            raise MeshError(f"boundary edge ({i}, {j}) belongs to {c} triangles, expected 1")

    # Every triangle edge with a single adjacent triangle must be declared.
    n_true_boundary = int(np.sum(counts == 1))
    if n_true_boundary != be.shape[0]:
        raise MeshError(f"mesh has {n_true_boundary} boundary edges "
                        f"but {be.shape[0]} were declared")

    # Closed loops: in the counterclockwise orientation every boundary vertex
    # has exactly one outgoing and one incoming directed edge.
    directed = _orient_boundary(mesh)
    starts = directed[:, 0]
    ends = directed[:, 1]
    if len(np.unique(starts)) != len(starts) or len(np.unique(ends)) != len(ends):
        raise MeshError("boundary edges do not form closed loops")
    if set(starts.tolist()) != set(ends.tolist()):
        raise MeshError("boundary edges do not form closed loops")

    for lab in np.unique(mesh.boundary_labels):
        if int(lab) not in mesh.label_map:
            raise MeshError(f"boundary label {int(lab)} missing from label map")
    for lab, (kind, _name) in mesh.label_map.items():
        if kind not in (INFLOW, WALL):
            raise MeshError(f"label {lab}: kind must be 'inflow' or 'wall', got {kind!r}")


def _orient_boundary(mesh: Mesh2D) -> np.ndarray:
    """Boundary edges directed so the domain lies on the left (CCW loop)."""
    tri = mesh.triangles
    directed = set()
    for a, b, c in tri:
        directed.add((int(a), int(b)))
        directed.add((int(b), int(c)))
        directed.add((int(c), int(a)))
    out = np.empty_like(mesh.boundary_edges)
    for k, (i, j) in enumerate(map(tuple, mesh.boundary_edges)):
        i, j = int(i), int(j)
        if (i, j) in directed:
            out[k] = (i, j)
        elif (j, i) in directed:
            out[k] = (j, i)
        else:  # unreachable after validation
            raise MeshError(f"boundary edge ({i}, {j}) not found in any triangle")
    return out


def boundary_components(mesh: Mesh2D) -> list[BoundaryComponent]:
    """Split the boundary into maximal constant-label chains.

    Chains are walked in counterclockwise boundary order and the result is
    sorted by (smallest vertex index, label), which makes repeated calls
    bit-identical.
    """
    directed = _orient_boundary(mesh)
    nxt = {int(a): (int(b), int(lab))
           for (a, b), lab in zip(directed, mesh.boundary_labels)}

    comps = []
    visited = set()
    for start in sorted(nxt):
        if start in visited:
            continue
        # Collect the whole loop through `start` first.
        loop = [start]
        labels = []
        v = start
        while True:
            w, lab = nxt[v]
            labels.append(lab)
            visited.add(v)
            v = w
            if v == start:
                break
            loop.append(v)
        m = len(loop)
        # Break the loop at label changes.
        breaks = [k for k in range(m) if labels[k - 1] != labels[k]]
        if not breaks:  # single-label loop: start at smallest vertex
            k0 = int(np.argmin(loop))
            chain = [loop[(k0 + t) % m] for t in range(m + 1)]
            comps.append((labels[0], np.array(chain)))
            continue
        for b, k in enumerate(breaks):
            k_end = breaks[(b + 1) % len(breaks)]
            run = (k_end - k) % m or m
            chain = [loop[(k + t) % m] for t in range(run + 1)]
            comps.append((labels[k], np.array(chain)))

    out = []
    for lab, chain in comps:
        pts = mesh.vertices[chain]
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        arclen = np.concatenate([[0.0], np.cumsum(seg)])
        kind, name = mesh.label_map[int(lab)]
        out.append(BoundaryComponent(label=int(lab), name=name, kind=kind,
                                     vertices=chain, arclen=arclen))
    out.sort(key=lambda c: (int(c.vertices.min()), c.label))
    return out


def _split_cells(nx: int, ny: int, vid) -> np.ndarray:
    """Split grid cells into CCW triangles, alternating the diagonal by cell
    parity so that (for even nx, ny) the triangulation is invariant under the
    grid's mirror symmetries."""
    tris = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            if (i + j) % 2 == 0:
                tris.append((v00, v10, v11))
                tris.append((v00, v11, v01))
            else:
                tris.append((v00, v10, v01))
                tris.append((v10, v11, v01))
    return np.array(tris)


def structured_rectangle(nx: int, ny: int, x0: float, x1: float, y0: float, y1: float,
                         label_map: dict | None = None) -> Mesh2D:
    """Structured triangulation of [x0,x1] x [y0,y1].

    Boundary labels: 1 left, 2 right, 3 bottom, 4 top.  The default label map
    marks left/right as inflow and bottom/top as wall.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row j = constant y
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = _split_cells(nx, ny, vid)

    edges, labels = [], []
    for j in range(ny):
        edges.append((vid(0, j), vid(0, j + 1)))
        labels.append(1)
        edges.append((vid(nx, j), vid(nx, j + 1)))
        labels.append(2)
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        labels.append(3)
        edges.append((vid(i, ny), vid(i + 1, ny)))
        labels.append(4)

    if label_map is None:
        label_map = {1: (INFLOW, "inflow_left"), 2: (INFLOW, "inflow_right"),
                     3: (WALL, "wall_bottom"), 4: (WALL, "wall_top")}
    return Mesh2D(verts, tris, np.array(edges), np.array(labels), label_map)


def generate_rectangle(nx: int, ny: int) -> Mesh2D:
    """Reference channel [-1,1] x [-0.5,0.5]; left/right inflow, top/bottom wall."""
    return structured_rectangle(nx, ny, -1.0, 1.0, -0.5, 0.5)


# Funnel dimensions for the distributor benchmark.  Only the inflow widths
# (0.4 top, 1.0 bottom) are externally pinned; tube height 0.5 and funnel
# height 1.0 are this package's convention.
DISTRIBUTOR_TOP_WIDTH = 0.4
DISTRIBUTOR_BOTTOM_WIDTH = 1.0
DISTRIBUTOR_TUBE_HEIGHT = 0.5
DISTRIBUTOR_FUNNEL_HEIGHT = 1.0


def generate_distributor(nx: int, ny: int) -> Mesh2D:
    """Funnel: narrow inflow tube on top widening into a broad bottom outflow.

    Transfinite interpolation of an (nx+1) x (ny+1) grid onto the funnel
    polygon.  ``ny`` must be a multiple of 3 so the flank/tube junction lands
    on a grid line.  Labels: 1 bottom inflow, 2 top inflow, 3 left wall,
    4 right wall.
    """
    if nx < 1 or ny < 3:
        raise ValueError("need nx >= 1 and ny >= 3")
    if ny % 3 != 0:
        raise ValueError("ny must be a multiple of 3 for the funnel geometry")
    h_total = DISTRIBUTOR_FUNNEL_HEIGHT + DISTRIBUTOR_TUBE_HEIGHT

    def width(y):
        taper = (DISTRIBUTOR_BOTTOM_WIDTH - DISTRIBUTOR_TOP_WIDTH) / DISTRIBUTOR_FUNNEL_HEIGHT
        return np.where(y < DISTRIBUTOR_FUNNEL_HEIGHT,
                        DISTRIBUTOR_BOTTOM_WIDTH - taper * y, DISTRIBUTOR_TOP_WIDTH)

    us = np.linspace(0.0, 1.0, nx + 1)
    ysl = np.linspace(0.0, h_total, ny + 1)
    U, Yg = np.meshgrid(us, ysl)
    Xg = (U - 0.5) * width(Yg)
    verts = np.column_stack([Xg.ravel(), Yg.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = _split_cells(nx, ny, vid)

    edges, labels = [], []
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        labels.append(1)
        edges.append((vid(i, ny), vid(i + 1, ny)))
        labels.append(2)
    for j in range(ny):
        edges.append((vid(0, j), vid(0, j + 1)))
        labels.append(3)
        edges.append((vid(nx, j), vid(nx, j + 1)))
        labels.append(4)

    label_map = {1: (INFLOW, "inflow_bottom"), 2: (INFLOW, "inflow_top"),
                 3: (WALL, "wall_left"), 4: (WALL, "wall_right")}
    return Mesh2D(verts, tris, np.array(edges), np.array(labels), label_map)


def save_mesh(mesh: Mesh2D) -> str:
    """Serialize to the plain-text format (see ``load_mesh``)."""
    lines = [f"{mesh.num_vertices} {mesh.num_triangles} {mesh.boundary_edges.shape[0]}"]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r}")
    for a, b, c in mesh.triangles:
        lines.append(f"{a + 1} {b + 1} {c + 1} 0")
    for (a, b), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
        lines.append(f"{a + 1} {b + 1} {lab}")
    return "\n".join(lines) + "\n"


def load_mesh(text: str, label_map: dict | None = None) -> Mesh2D:
    """Parse the plain-text mesh format.

    Line 1: ``nv nt nbe``; then nv lines ``x y``; then nt lines
    ``i j k region`` (1-based vertex indices, region ignored); then nbe lines
    ``i j label``.  ``label_map`` assigns (kind, name) to each label; labels
    without an entry default to wall components named ``label_<n>``.
    """
    rows = text.splitlines()
    lineno = 0

    def next_row():
        nonlocal lineno
        while lineno < len(rows):
            lineno += 1
            s = rows[lineno - 1].strip()
            if s:
                return s
        raise MeshError(f"line {lineno}: unexpected end of mesh file")

    def parse(s, n, conv, what):
        parts = s.split()
        if len(parts) < n:
            raise MeshError(f"line {lineno}: expected {n} fields for {what}, got {len(parts)}")
        try:
            return [conv(p) for p in parts[:n]]
        except ValueError as exc:
            raise MeshError(f"line {lineno}: cannot parse {what}: {exc}") from None

    nv, nt, nbe = parse(next_row(), 3, int, "header")
    verts = np.empty((nv, 2))
    for k in range(nv):
        verts[k] = parse(next_row(), 2, float, f"vertex {k + 1}")
    tris = np.empty((nt, 3), dtype=np.int64)
    for k in range(nt):
        i, j, m, _region = parse(next_row(), 4, int, f"triangle {k + 1}")
        tris[k] = (i - 1, j - 1, m - 1)
    edges = np.empty((nbe, 2), dtype=np.int64)
    labels = np.empty(nbe, dtype=np.int64)
    for k in range(nbe):
        i, j, lab = parse(next_row(), 3, int, f"boundary edge {k + 1}")
        edges[k] = (i - 1, j - 1)
        labels[k] = lab

    if label_map is None:
        label_map = {}
    full_map = dict(label_map)
    for lab in np.unique(labels):
        full_map.setdefault(int(lab), (WALL, f"label_{int(lab)}"))
    return Mesh2D(verts, tris, edges, labels, full_map)


def polygon_area(mesh: Mesh2D) -> float:
    """Domain area from the boundary loop (shoelace over directed edges)."""
    directed = _orient_boundary(mesh)
    p = mesh.vertices[directed[:, 0]]
    q = mesh.vertices[directed[:, 1]]
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))
