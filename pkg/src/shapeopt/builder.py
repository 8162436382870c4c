"""Assembly of the discrete shape optimization problem.

Variables are stacked as ``[delta | a | psi | omega | L_1 | L_2 | ...]``
where ``a`` is the conformal parameter, ``psi``/``omega`` the state fields
(all in the P2 space) and each ``L_k`` holds the stretched-length values
along one isometrically mapped inflow component.  The objective is
``delta + eps * |grad a|^2`` and the constraints are

* the coupled state rows (weak stream-function block, Dirichlet rows),
* interior-tested vorticity rows,
* harmonicity/inflow rows for the parameter (I1/I2/I3 per component),
* one length-integral row per I3 component,
* under the isometric push-forward: trapezoidal length-chain rows and
  inflow Dirichlet rows ``psi = g_k(L)``,
* paired pointwise bounds ``|sigma_d - G omega| <= delta`` at wall vertices,
* box bounds on ``a`` alone.

The starting point solves the state at ``a = 0`` against boundary data that
is *exactly* consistent with the discrete constraint rows (on isometric
components the interpolating spline value is used, not the raw profile), so
every equality is satisfied at ``x0`` to linear-solver accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import make_interp_spline

from .mesh import Mesh2D, BoundaryComponent, boundary_components
from .fem import (FeSpace, FeFunction, assemble_stiffness, assemble_state_system,
                  assemble_vorticity, assemble_alpha_constraint,
                  assemble_length_chain, trace_operator)
from .forward import solve_state, StateSolution
from .nlp import NlpProblem

__all__ = [
    "CaseSpec",
    "VariableLayout",
    "BuiltNlp",
    "OptimalSolution",
    "XYProfile",
    "ArcLengthProfile",
    "GkSpline",
    "spline_gk",
    "build_nlp",
    "extract_solution",
]


class XYProfile:
    """Boundary data given as a function of position, evaluated on a chain."""

    def __init__(self, fn):
        self.fn = fn

    def eval(self, mesh: Mesh2D, comp: BoundaryComponent, s) -> np.ndarray:
        p = comp.point_at(mesh, s)
        return np.asarray(self.fn(p[:, 0], p[:, 1]), dtype=float)


class ArcLengthProfile:
    """Boundary data given per component as a function of arc length."""

    def __init__(self, fns: dict):
        self.fns = fns

    def eval(self, mesh: Mesh2D, comp: BoundaryComponent, s) -> np.ndarray:
        try:
            fn = self.fns[comp.name]
        except KeyError:
            raise KeyError(f"no boundary data for component {comp.name!r}") from None
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.asarray(fn(s), dtype=float)


@dataclass
class CaseSpec:
    """One problem instance: data, bounds and per-component constraint kinds."""

    name: str
    g0: object                    # boundary profile for the stream function
    sigma_d: object               # target wall shear profile (wall components)
    epsilon: float
    alpha_lower: float
    alpha_upper: float
    inflow_kinds: dict            # component name -> "I1" | "I2" | "I3"
    pushforward: str = "B1"       # "B1" (conformal) | "B2" (isometric)

    def validate(self):
        if not (self.alpha_lower <= 0.0 <= self.alpha_upper):
            raise ValueError("bounds must satisfy alpha_lower <= 0 <= alpha_upper "
                             "(the reference domain itself must stay admissible)")
        if self.pushforward not in ("B1", "B2"):
            raise ValueError(f"unknown push-forward mode {self.pushforward!r}")
        for name, kind in self.inflow_kinds.items():
            if kind not in ("I1", "I2", "I3"):
                raise ValueError(f"unknown constraint kind {kind!r} for {name!r}")
            if self.pushforward == "B2" and kind == "I2":
                raise ValueError(
                    f"isometric push-forward needs length-preserving inflow "
                    f"components (I1 or I3), but {name!r} uses I2")


@dataclass
class VariableLayout:
    delta: int
    alpha: slice
    psi: slice
    omega: slice
    lengths: dict                 # component name -> slice
    n: int


class GkSpline:
    """Cubic spline through (arc length, boundary value) vertex data.

    Inside [0, length] this is a not-a-knot cubic interpolant (lower order
    for very short chains); outside it continues linearly with the endpoint
    slope, keeping the composition C^1 when solver iterates overshoot the
    interval.
    """

    def __init__(self, s: np.ndarray, values: np.ndarray):
        s = np.asarray(s, dtype=float)
        values = np.asarray(values, dtype=float)
        k = min(3, len(s) - 1)
        self.lo, self.hi = float(s[0]), float(s[-1])
        self.spline = make_interp_spline(s, values, k=k)
        self.d1 = self.spline.derivative(1)
        self.d2 = self.spline.derivative(2) if k >= 2 else None
        self.val_lo, self.val_hi = float(values[0]), float(values[-1])
        self.slope_lo = float(self.d1(self.lo))
        self.slope_hi = float(self.d1(self.hi))

    def __call__(self, t, nu: int = 0):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.lo, self.hi)
        below = t < self.lo
        above = t > self.hi
        if nu == 0:
            out = self.spline(tc)
            out = np.where(below, self.val_lo + self.slope_lo * (t - self.lo), out)
            out = np.where(above, self.val_hi + self.slope_hi * (t - self.hi), out)
        elif nu == 1:
            out = self.d1(tc)
            out = np.where(below, self.slope_lo, out)
            out = np.where(above, self.slope_hi, out)
        elif nu == 2:
            out = self.d2(tc) if self.d2 is not None else np.zeros_like(tc)
            out = np.where(below | above, 0.0, out)
        else:
            raise ValueError("nu must be 0, 1 or 2")
        return out


def spline_gk(comp: BoundaryComponent, g0, mesh: Mesh2D) -> GkSpline:
    """Precompute the boundary profile along a component as a spline of arc
    length (interpolating the profile exactly at the chain vertices)."""
    vals = g0.eval(mesh, comp, comp.arclen)
    return GkSpline(comp.arclen, vals)


@dataclass
class OptimalSolution:
    delta: float
    alpha: FeFunction
    psi: FeFunction
    omega: FeFunction
    lengths: dict                 # component name -> array
    achieved_sup: float           # recomputed max |sigma_d - G omega|
    sigma_wall: dict              # wall component name -> (arclen, values)


@dataclass
class BuiltNlp:
    """Everything produced by ``build_nlp``; unpacks as (problem, layout, x0)."""

    problem: NlpProblem
    layout: VariableLayout
    x0: np.ndarray
    mesh: Mesh2D
    space: FeSpace
    case: CaseSpec
    wall_comps: list
    G: sp.csr_matrix              # wall trace, rows follow wall_comps chains
    sigma_d_wall: np.ndarray      # target at wall vertices, same row order
    sigma0_wall: np.ndarray       # reference shear at x0, same row order
    splines: dict = field(default_factory=dict)
    eq_blocks: list = field(default_factory=list)   # (name, row count)
    state0: StateSolution = None

    def __iter__(self):
        return iter((self.problem, self.layout, self.x0))

    def bound_activity(self, x: np.ndarray, tol: float = 1e-4) -> dict:
        a = x[self.layout.alpha]
        return {
            "lower": int(np.sum(a - self.case.alpha_lower <= tol)),
            "upper": int(np.sum(self.case.alpha_upper - a <= tol)),
            "min_gap": float(min((a - self.case.alpha_lower).min(initial=np.inf),
                                 (self.case.alpha_upper - a).min(initial=np.inf))),
        }


def _colscale(A: sp.csr_matrix, v: np.ndarray) -> sp.csr_matrix:
    """Column-scaled copy with identical sparsity (keeps structural zeros)."""
    B = A.copy()
    B.data = A.data * v[A.indices]
    return B


def _eval_boundary_values(mesh, space, comps, profile):
    """Profile values at every boundary dof, checking single-valuedness at
    chain junctions (corner dofs shared by two components)."""
    values = {}
    owner = {}
    for comp in comps:
        dofs = space.component_dofs(comp)
        svals = space.component_dof_arclen(comp)
        vals = profile.eval(mesh, comp, svals)
        for d, v in zip(dofs, vals):
            d = int(d)
            if d in values:
                if abs(values[d] - v) > 1e-9 * max(1.0, abs(v)):
                    raise ValueError(
                        f"boundary data is not single-valued at dof {d}: "
                        f"{values[d]!r} from {owner[d]!r} vs {v!r} from {comp.name!r}")
            else:
                values[d] = float(v)
                owner[d] = comp.name
    return values


def build_nlp(mesh: Mesh2D, case: CaseSpec, wall_trace_p1: bool = True) -> BuiltNlp:
    """Assemble the sparse NLP for one case on one mesh.

    Returns a ``BuiltNlp``; it unpacks as ``(problem, layout, x0)``.  At
    ``x0`` every equality holds to linear-solver accuracy and the inequality
    slacks are strictly positive.

    ``wall_trace_p1`` keeps the wall trace of the conformal parameter
    P1-conforming (each wall midpoint dof tied to its vertex neighbors).
    The nodal exponential coupling otherwise admits a spurious sub-vertex
    resonance between the parameter and the vorticity that matches the
    target at every constrained vertex while oscillating violently in
    between; the tie removes exactly that non-convergent mode without
    restricting any continuum parameter field.
    """
    case.validate()
    space = FeSpace(mesh, 2)
    n = space.ndof
    comps = boundary_components(mesh)
    wall_comps = [c for c in comps if c.kind == "wall"]
    inflow_comps = [c for c in comps if c.kind == "inflow"]
    for c in inflow_comps:
        if c.name not in case.inflow_kinds:
            raise ValueError(f"case gives no constraint kind for inflow component "
                             f"{c.name!r}")

    # Components carrying the stretched-length machinery: isometric
    # push-forward on anything not pinned by I1 (where both modes coincide).
    L_comps = [c for c in inflow_comps
               if case.pushforward == "B2" and case.inflow_kinds[c.name] != "I1"]
    L_names = {c.name for c in L_comps}

    g_values = _eval_boundary_values(mesh, space, comps, case.g0)

    all_bdofs = space.boundary_dofs()
    free_inflow_dofs = set()
    for c in L_comps:
        free_inflow_dofs.update(int(d) for d in space.component_dofs(c, closure=False))
    dirichlet_dofs = np.array([d for d in all_bdofs if int(d) not in free_inflow_dofs],
                              dtype=np.int64)

    g_array = np.zeros(n)
    for d, v in g_values.items():
        g_array[d] = v

    splines = {c.name: spline_gk(c, case.g0, mesh) for c in L_comps}

    # Start-point boundary data: on isometric components the constraint rows
    # compare psi with the spline, so the start solve must use spline values.
    g_x0 = g_array.copy()
    for c in L_comps:
        dofs = space.component_dofs(c, closure=False)
        svals = space.component_dof_arclen(c, closure=False)
        g_x0[dofs] = splines[c.name](svals)

    A11, A12, b1 = assemble_state_system(space, g_array, dirichlet_dofs=dirichlet_dofs)
    A2 = assemble_vorticity(space)
    A3, A4, b4 = assemble_alpha_constraint(space, dict(case.inflow_kinds))
    K_reg = assemble_stiffness(space)
    chains = {c.name: assemble_length_chain(c, space) for c in L_comps}

    A_wall = None
    if wall_trace_p1:
        # A few cells at each wall end stay free: the parameter needs a steep
        # boundary-layer transition where a wall meets an inflow component,
        # and more of one where the component's length is pinned (I3: its
        # mean over the inflow is fixed, so the whole adjustment happens at
        # the junction).  Tying those midpoints too makes legitimately
        # reachable targets unreachable.
        corner_owner = {}
        for c in inflow_comps:
            corner_owner[int(c.vertices[0])] = case.inflow_kinds[c.name]
            corner_owner[int(c.vertices[-1])] = case.inflow_kinds[c.name]

        # Allowance grows with how strongly the junction couples the wall
        # trace to the inflow trace: I2 leaves the inflow free, I1 pins its
        # values, I3 pins its stretched mean while preserving curvature.
        _ALLOWANCE = {"I2": 1, "I1": 2, "I3": 3}

        def allowance(corner_vertex):
            kind = corner_owner.get(int(corner_vertex))
            return _ALLOWANCE.get(kind, 2)

        rows, cols, vals = [], [], []
        r = 0
        for c in wall_comps:
            vs = c.vertices
            lo = allowance(vs[0])
            hi = allowance(vs[-1])
            for k in range(lo, len(vs) - 1 - hi):
                mdof = space.edge_dof(vs[k], vs[k + 1])
                rows += [r, r, r]
                cols += [mdof, int(vs[k]), int(vs[k + 1])]
                vals += [1.0, -0.5, -0.5]
                r += 1
        if r:
            A_wall = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))

    G = trace_operator(space, wall_comps)
    sigma_d_wall = np.concatenate([
        case.sigma_d.eval(mesh, c, c.arclen) for c in wall_comps
    ]) if wall_comps else np.zeros(0)

    # Inflow Dirichlet rows under the isometric mapping: strict chain dofs
    # (corner endpoints are owned by the wall rows).  For a vertex dof the
    # argument of g_k is the matching L value; a midpoint dof averages its
    # two neighbors.
    inflow_rows = []  # (comp, P select csr, C map csr)
    for c in L_comps:
        vs = c.vertices
        mk = len(vs)
        dof_rows, crow, ccol, cval = [], [], [], []
        r = 0
        for k in range(mk):
            if 0 < k < mk - 1:
                dof_rows.append(int(vs[k]))
                crow.append(r)
                ccol.append(k)
                cval.append(1.0)
                r += 1
        for k in range(mk - 1):
            dof_rows.append(space.edge_dof(vs[k], vs[k + 1]))
            crow += [r, r]
            ccol += [k, k + 1]
            cval += [0.5, 0.5]
            r += 1
        P = sp.csr_matrix((np.ones(r), (np.arange(r), dof_rows)), shape=(r, n))
        C = sp.csr_matrix((cval, (crow, ccol)), shape=(r, mk))
        inflow_rows.append((c, P, C))

    # Variable layout.
    off = 0
    delta_ix = off
    off += 1
    alpha_sl = slice(off, off + n)
    off += n
    psi_sl = slice(off, off + n)
    off += n
    omega_sl = slice(off, off + n)
    off += n
    length_sl = {}
    for c in L_comps:
        mk = len(c.vertices)
        length_sl[c.name] = slice(off, off + mk)
        off += mk
    nvar = off
    layout = VariableLayout(delta=delta_ix, alpha=alpha_sl, psi=psi_sl,
                            omega=omega_sl, lengths=length_sl, n=nvar)

    # Equality block bookkeeping (row offsets into c_E).
    eq_blocks = [("state", A11.shape[0]), ("vorticity", A2.shape[0]),
                 ("alpha", A3.shape[0])]
    if A_wall is not None:
        eq_blocks.append(("wall_trace", A_wall.shape[0]))
    if A4 is not None:
        eq_blocks.append(("length_integral", A4.shape[0]))
    for c in L_comps:
        eq_blocks.append((f"length_chain:{c.name}", chains[c.name][0].shape[0]))
    for c, P, C in inflow_rows:
        eq_blocks.append((f"inflow_dirichlet:{c.name}", P.shape[0]))
    m_eq = sum(m for _, m in eq_blocks)

    n_wall = G.shape[0]
    m_ineq = 2 * n_wall

    lower = np.full(nvar, -np.inf)
    upper = np.full(nvar, np.inf)
    lower[alpha_sl] = case.alpha_lower
    upper[alpha_sl] = case.alpha_upper

    # Start point: solve the state at a = 0 with the consistent data.
    state0 = solve_state(mesh, FeFunction.zeros(space), g_x0, dirichlet_mode="full",
                         space=space)
    sigma0_wall = G @ state0.omega.coeffs
    delta0 = 1.1 * float(np.abs(sigma_d_wall - sigma0_wall).max(initial=0.0)) + 1e-3

    x0 = np.zeros(nvar)
    x0[delta_ix] = delta0
    x0[psi_sl] = state0.psi.coeffs
    x0[omega_sl] = state0.omega.coeffs
    for c in L_comps:
        x0[length_sl[c.name]] = c.arclen

    # ------------------------------------------------------------------
    # Callbacks.
    def objective(x):
        a = x[alpha_sl]
        return float(x[delta_ix] + case.epsilon * (a @ (K_reg @ a)))

    def gradient(x):
        g = np.zeros(nvar)
        g[delta_ix] = 1.0
        g[alpha_sl] = 2.0 * case.epsilon * (K_reg @ x[alpha_sl])
        return g

    def eq_constraints(x):
        a = x[alpha_sl]
        psi = x[psi_sl]
        w = x[omega_sl]
        e2a = np.exp(2.0 * a)
        ea = np.exp(a)
        parts = [A11 @ psi + A12 @ (e2a * w) - b1, A2 @ w, A3 @ a]
        if A_wall is not None:
            parts.append(A_wall @ a)
        if A4 is not None:
            parts.append(A4 @ ea - b4)
        for c in L_comps:
            Ak1, Ak2 = chains[c.name]
            parts.append(Ak1 @ x[length_sl[c.name]] + Ak2 @ ea)
        for c, P, C in inflow_rows:
            ell = C @ x[length_sl[c.name]]
            parts.append(P @ psi - splines[c.name](ell))
        return np.concatenate(parts)

    zero = lambda r, c: sp.csr_matrix((r, c))

    def eq_jacobian(x):
        a = x[alpha_sl]
        w = x[omega_sl]
        e2a = np.exp(2.0 * a)
        ea = np.exp(a)
        ncols_L = [len(c.vertices) for c in L_comps]
        rows = []
        # state block
        row = [zero(A11.shape[0], 1), _colscale(A12, 2.0 * e2a * w), A11,
               _colscale(A12, e2a)]
        row += [zero(A11.shape[0], m) for m in ncols_L]
        rows.append(row)
        # vorticity
        row = [zero(A2.shape[0], 1), zero(A2.shape[0], n), zero(A2.shape[0], n), A2]
        row += [zero(A2.shape[0], m) for m in ncols_L]
        rows.append(row)
        # alpha
        row = [zero(A3.shape[0], 1), A3, zero(A3.shape[0], n), zero(A3.shape[0], n)]
        row += [zero(A3.shape[0], m) for m in ncols_L]
        rows.append(row)
        if A_wall is not None:
            row = [zero(A_wall.shape[0], 1), A_wall, zero(A_wall.shape[0], n),
                   zero(A_wall.shape[0], n)]
            row += [zero(A_wall.shape[0], m) for m in ncols_L]
            rows.append(row)
        if A4 is not None:
            row = [zero(A4.shape[0], 1), _colscale(A4, ea), zero(A4.shape[0], n),
                   zero(A4.shape[0], n)]
            row += [zero(A4.shape[0], m) for m in ncols_L]
            rows.append(row)
        for ci, c in enumerate(L_comps):
            Ak1, Ak2 = chains[c.name]
            row = [zero(Ak1.shape[0], 1), _colscale(Ak2, ea), zero(Ak1.shape[0], n),
                   zero(Ak1.shape[0], n)]
            row += [Ak1 if cj == ci else zero(Ak1.shape[0], ncols_L[cj])
                    for cj in range(len(L_comps))]
            rows.append(row)
        for ci, (c, P, C) in enumerate(inflow_rows):
            ell = C @ x[length_sl[c.name]]
            dgk = splines[c.name](ell, 1)
            dL = -sp.diags(dgk) @ C
            row = [zero(P.shape[0], 1), zero(P.shape[0], n), P, zero(P.shape[0], n)]
            row += [dL.tocsr() if cj == ci else zero(P.shape[0], ncols_L[cj])
                    for cj in range(len(L_comps))]
            rows.append(row)
        return sp.bmat(rows, format="csr")

    def ineq_constraints(x):
        d = x[delta_ix]
        gw = G @ x[omega_sl]
        return np.concatenate([sigma_d_wall - gw - d, gw - sigma_d_wall - d])

    Ji_const = sp.bmat([
        [sp.csr_matrix(-np.ones((n_wall, 1))), zero(n_wall, n), zero(n_wall, n), -G]
        + [zero(n_wall, len(c.vertices)) for c in L_comps],
        [sp.csr_matrix(-np.ones((n_wall, 1))), zero(n_wall, n), zero(n_wall, n), G]
        + [zero(n_wall, len(c.vertices)) for c in L_comps],
    ], format="csr")

    def ineq_jacobian(x):
        return Ji_const

    # Hessian: fixed sparsity = regularizer pattern + diagonal blocks.
    A12T = A12.T.tocsr()
    A4T = A4.T.tocsr() if A4 is not None else None
    chainT = {name: ops[1].T.tocsr() for name, ops in chains.items()}
    Kcoo = K_reg.tocoo()
    a_off = alpha_sl.start
    w_off = omega_sl.start
    h_rows = [Kcoo.row + a_off, np.arange(n) + a_off,
              np.arange(n) + a_off, np.arange(n) + w_off]
    h_cols = [Kcoo.col + a_off, np.arange(n) + a_off,
              np.arange(n) + w_off, np.arange(n) + a_off]
    ll_idx = []
    for c, P, C in inflow_rows:
        CtC = (C.T @ C).tocoo()  # fixed pattern of the L-block outer products
        off_L = length_sl[c.name].start
        ll_idx.append((c.name, C))
        h_rows.append(CtC.row + off_L)
        h_cols.append(CtC.col + off_L)
    h_rows_all = np.concatenate(h_rows)
    h_cols_all = np.concatenate(h_cols)

    def lagrangian_hessian(x, sigma, y_eq, y_ineq):
        a = x[alpha_sl]
        w = x[omega_sl]
        e2a = np.exp(2.0 * a)
        ea = np.exp(a)
        pos = 0
        y_state = y_eq[pos:pos + A11.shape[0]]
        pos += A11.shape[0] + A2.shape[0] + A3.shape[0]
        if A_wall is not None:
            pos += A_wall.shape[0]
        y_a4 = None
        if A4 is not None:
            y_a4 = y_eq[pos:pos + A4.shape[0]]
            pos += A4.shape[0]
        y_chain = {}
        for c in L_comps:
            mk = chains[c.name][0].shape[0]
            y_chain[c.name] = y_eq[pos:pos + mk]
            pos += mk
        y_inflow = {}
        for c, P, C in inflow_rows:
            y_inflow[c.name] = y_eq[pos:pos + P.shape[0]]
            pos += P.shape[0]

        w1 = A12T @ y_state
        diag_aa = 4.0 * w1 * e2a * w
        if A4 is not None:
            diag_aa = diag_aa + (A4T @ y_a4) * ea
        for c in L_comps:
            diag_aa = diag_aa + (chainT[c.name] @ y_chain[c.name]) * ea
        diag_aw = 2.0 * w1 * e2a

        data = [sigma * 2.0 * case.epsilon * Kcoo.data, diag_aa, diag_aw, diag_aw]
        for name, C in ll_idx:
            ell = C @ x[length_sl[name]]
            d2 = splines[name](ell, 2)
            scal = -y_inflow[name] * d2
            CtDC = (C.T @ sp.diags(scal) @ C).tocoo()
            # realign to the fixed CtC pattern
            CtC = (C.T @ C).tocoo()
            lut = {(r, cc): 0.0 for r, cc in zip(CtC.row, CtC.col)}
            for r, cc, v in zip(CtDC.row, CtDC.col, CtDC.data):
                lut[(r, cc)] = lut.get((r, cc), 0.0) + v
            vals = np.array([lut[(r, cc)] for r, cc in zip(CtC.row, CtC.col)])
            data.append(vals)
        H = sp.coo_matrix((np.concatenate(data), (h_rows_all, h_cols_all)),
                          shape=(nvar, nvar)).tocsr()
        return H

    problem = NlpProblem(
        n=nvar,
        objective=objective,
        gradient=gradient,
        lagrangian_hessian=lagrangian_hessian,
        eq_constraints=eq_constraints,
        eq_jacobian=eq_jacobian,
        ineq_constraints=ineq_constraints,
        ineq_jacobian=ineq_jacobian,
        lower=lower,
        upper=upper,
    )
    problem.sizes(x0)
    assert problem.m_eq == m_eq and problem.m_ineq == m_ineq

    return BuiltNlp(problem=problem, layout=layout, x0=x0, mesh=mesh, space=space,
                    case=case, wall_comps=wall_comps, G=G,
                    sigma_d_wall=sigma_d_wall, sigma0_wall=sigma0_wall,
                    splines=splines, eq_blocks=eq_blocks, state0=state0)


def extract_solution(x: np.ndarray, built: BuiltNlp) -> OptimalSolution:
    """Unpack a solver iterate and recompute the achieved sup-norm misfit
    independently of the delta variable."""
    lay = built.layout
    space = built.space
    alpha = FeFunction(space, x[lay.alpha].copy())
    psi = FeFunction(space, x[lay.psi].copy())
    omega = FeFunction(space, x[lay.omega].copy())
    lengths = {name: x[sl].copy() for name, sl in lay.lengths.items()}
    gw = built.G @ omega.coeffs
    achieved = float(np.abs(built.sigma_d_wall - gw).max(initial=0.0))
    sigma_wall = {}
    pos = 0
    for c in built.wall_comps:
        m = len(c.vertices)
        sigma_wall[c.name] = (c.arclen.copy(), gw[pos:pos + m].copy())
        pos += m
    return OptimalSolution(delta=float(x[lay.delta]), alpha=alpha, psi=psi,
                           omega=omega, lengths=lengths, achieved_sup=achieved,
                           sigma_wall=sigma_wall)
