"""Sparse nonlinear programming: problem container and interior-point solver.

Problems have the form

    minimize f(x)
    subject to c_E(x)  = 0
               c_I(x) <= 0
               l <= x <= u      (entries may be +-inf)

with fixed Jacobian/Hessian sparsity across evaluations.  The solver is a
primal-dual interior-point method: inequality slacks, a log barrier with
monotonically decreasing parameter mu, Newton steps on the perturbed KKT
conditions reduced to a quasidefinite (dx, dy) system, LDL^T factorization
with inertia-driven diagonal regularization, a fraction-to-the-boundary rule
and a filter line search on (constraint violation, barrier objective).  A
plain l1 penalty merit rejects productive steps here: iterates start and
stay essentially feasible, so the penalty term is pure second-order noise
that blocks full Newton steps near degenerate optima; the filter's switching
condition accepts such steps on barrier descent alone.

The KKT factorization uses CHOLMOD (via cvxopt) when available and falls
back to SuperLU; with the fallback, inertia is unavailable and regularization
is driven by factorization failures and line-search rejections alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

try:
    from cvxopt import cholmod as _cholmod
    from cvxopt import matrix as _cvx_matrix, spmatrix as _cvx_spmatrix
    _HAVE_CHOLMOD = True
except ImportError:  # pragma: no cover
    _HAVE_CHOLMOD = False

__all__ = [
    "NlpProblem",
    "NlpSolution",
    "SolverOptions",
    "NlpEvaluationError",
    "solve",
    "check_derivatives",
    "DerivativeReport",
]


class NlpEvaluationError(RuntimeError):
    """A problem callback returned a non-finite value."""


@dataclass
class NlpProblem:
    """Callback bundle describing one NLP.

    All callbacks must be deterministic functions of x with fixed sparsity:

    objective(x) -> float
    gradient(x) -> (n,) array
    eq_constraints(x) -> (m_eq,) array          (== 0)
    eq_jacobian(x) -> (m_eq, n) csr
    ineq_constraints(x) -> (m_ineq,) array      (<= 0)
    ineq_jacobian(x) -> (m_ineq, n) csr
    lagrangian_hessian(x, sigma, y_eq, y_ineq) -> (n, n) csr, the Hessian of
        sigma * f + y_eq . c_E + y_ineq . c_I   (symmetric)
    """

    n: int
    objective: callable
    gradient: callable
    lagrangian_hessian: callable
    eq_constraints: callable = None
    eq_jacobian: callable = None
    ineq_constraints: callable = None
    ineq_jacobian: callable = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        self.lower = (np.full(self.n, -np.inf) if self.lower is None
                      else np.asarray(self.lower, dtype=float))
        self.upper = (np.full(self.n, np.inf) if self.upper is None
                      else np.asarray(self.upper, dtype=float))
        if self.lower.shape != (self.n,) or self.upper.shape != (self.n,):
            raise ValueError("bound arrays must have length n")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        x_probe = None  # sizes probed lazily
        self.m_eq = 0 if self.eq_constraints is None else None
        self.m_ineq = 0 if self.ineq_constraints is None else None

    def sizes(self, x0: np.ndarray):
        if self.m_eq is None:
            self.m_eq = len(self.eq_constraints(x0))
        if self.m_ineq is None:
            self.m_ineq = len(self.ineq_constraints(x0))
        return self.m_eq, self.m_ineq


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 500
    mu0: float = 0.1
    mu_min_factor: float = 0.1    # mu floor = mu_min_factor * tol
    mu_shrink: float = 0.2
    kappa_eps: float = 10.0       # inner loop target: E_mu <= kappa_eps * mu
    tau: float = 0.995            # fraction-to-the-boundary
    max_backtracks: int = 30
    max_inertia_retries: int = 12
    armijo: float = 1e-4
    bound_push: float = 1e-2
    line_search: str = "filter"   # "filter" | "merit" (l1 penalty)
    verbose: bool = False


@dataclass
class NlpSolution:
    x: np.ndarray
    y_eq: np.ndarray
    z_ineq: np.ndarray
    z_lower: np.ndarray
    z_upper: np.ndarray
    status: str                  # optimal | max-iter | line-search-failure
    iterations: int
    kkt: dict                    # stationarity / feasibility / complementarity
    objective: float

    @property
    def success(self) -> bool:
        return self.status == "optimal"


@dataclass
class DerivativeReport:
    per_block: dict
    worst_entry: dict = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.per_block.values()) if self.per_block else 0.0


def _check_finite(arr, name):
    a = np.asarray(arr.data if sp.issparse(arr) else arr, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NlpEvaluationError(f"non-finite value returned by callback {name!r}")
    return arr


class _KktSolver:
    """LDL^T factorization of [[W, Je^T], [Je, -dc I]] with inertia readout."""

    def __init__(self, use_cholmod=_HAVE_CHOLMOD):
        self.use_cholmod = use_cholmod
        self._symbolic = None
        self._pattern_key = None

    def factor(self, K: sp.csr_matrix):
        """Returns (solve, inertia) where inertia = (n_pos, n_neg) or None."""
        if not self.use_cholmod:
            lu = spla.splu(K.tocsc())
            return (lambda b: lu.solve(b)), None
        tril = sp.tril(K.tocoo())
        F = _cvx_spmatrix(tril.data, tril.row.astype(int), tril.col.astype(int),
                          size=K.shape)
        _cholmod.options["supernodal"] = 0
        key = (K.shape, tril.nnz)
        if self._symbolic is None or self._pattern_key != key:
            self._symbolic = _cholmod.symbolic(F)
            self._pattern_key = key
        try:
            _cholmod.numeric(F, self._symbolic)
        except ArithmeticError:
            return None, (0, 0)  # singular: treated as wrong inertia

        sym = self._symbolic
        state = {"open": True}

        def solve(b):
            if not state["open"]:
                _cholmod.numeric(F, sym)
                state["open"] = True
            rhs = _cvx_matrix(np.asarray(b, dtype=float))
            _cholmod.solve(sym, rhs)
            return np.array(rhs).ravel()

        def inertia():
            # getfactor() consumes the numeric factor; re-factor lazily if
            # another solve comes afterwards.
            L = _cholmod.getfactor(sym)
            state["open"] = False
            I = np.array(L.I).ravel()
            J = np.array(L.J).ravel()
            V = np.array(L.V).ravel()
            d = V[I == J]
            return int(np.sum(d > 0)), int(np.sum(d < 0))

        return solve, inertia


def solve(problem: NlpProblem, x0: np.ndarray, opts: SolverOptions | None = None,
          log=None) -> NlpSolution:
    """Run the interior-point iteration from x0.

    ``log`` is an optional callable receiving one formatted line per
    iteration (iter, mu, objective, residuals, step length).
    """
    opts = opts or SolverOptions()
    x = np.asarray(x0, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    n = problem.n
    m_eq, m_in = problem.sizes(x)
    lb, ub = problem.lower, problem.upper
    has_lb = np.isfinite(lb)
    has_ub = np.isfinite(ub)
    il = np.flatnonzero(has_lb)
    iu = np.flatnonzero(has_ub)

    # Push the start strictly inside the bounds.
    k1 = opts.bound_push
    with np.errstate(invalid="ignore"):
        width = np.where(has_lb & has_ub, ub - lb, np.inf)
        pl = np.minimum(k1 * np.maximum(1.0, np.abs(np.where(has_lb, lb, 0.0))),
                        k1 * width)
        pu = np.minimum(k1 * np.maximum(1.0, np.abs(np.where(has_ub, ub, 0.0))),
                        k1 * width)
        x[il] = np.maximum(x[il], (lb + pl)[il])
        x[iu] = np.minimum(x[iu], (ub - pu)[iu])

    def eval_f(x):
        v = problem.objective(x)
        _check_finite(np.array([v]), "objective")
        return float(v)

    def eval_grad(x):
        return np.asarray(_check_finite(problem.gradient(x), "gradient"), dtype=float)

    def eval_ce(x):
        if m_eq == 0:
            return np.zeros(0)
        return np.asarray(_check_finite(problem.eq_constraints(x), "eq_constraints"),
                          dtype=float)

    def eval_ci(x):
        if m_in == 0:
            return np.zeros(0)
        return np.asarray(_check_finite(problem.ineq_constraints(x), "ineq_constraints"),
                          dtype=float)

    def eval_je(x):
        if m_eq == 0:
            return sp.csr_matrix((0, n))
        return _check_finite(problem.eq_jacobian(x), "eq_jacobian").tocsr()

    def eval_ji(x):
        if m_in == 0:
            return sp.csr_matrix((0, n))
        return _check_finite(problem.ineq_jacobian(x), "ineq_jacobian").tocsr()

    def eval_hess(x, y, z):
        H = problem.lagrangian_hessian(x, 1.0, y, z)
        return _check_finite(H, "lagrangian_hessian").tocsr()

    mu = opts.mu0
    mu_min = opts.mu_min_factor * opts.tol

    ci = eval_ci(x)
    s = np.maximum(-ci, 1e-8) if m_in else np.zeros(0)
    z = np.minimum(np.maximum(mu / s, 1e-10), 1e10) if m_in else np.zeros(0)
    y = np.zeros(m_eq)
    zl = mu / np.maximum(x[il] - lb[il], 1e-10) if len(il) else np.zeros(0)
    zu = mu / np.maximum(ub[iu] - x[iu], 1e-10) if len(iu) else np.zeros(0)

    kkt = _KktSolver()
    delta_w_last = 0.0
    status = "max-iter"
    it = 0
    eps = np.finfo(float).eps

    def residuals(x, s, y, z, zl, zu, mu, grad, ce, ci, Je, Ji):
        r_stat = grad.copy()
        if m_eq:
            r_stat += Je.T @ y
        if m_in:
            r_stat += Ji.T @ z
        if len(il):
            r_stat[il] -= zl
        if len(iu):
            r_stat[iu] += zu
        n_mult = m_eq + m_in + len(il) + len(iu)
        smax = 100.0
        ssum = (np.abs(y).sum() + np.abs(z).sum() + np.abs(zl).sum() + np.abs(zu).sum())
        sd = max(smax, ssum / max(1, n_mult)) / smax
        zsum = np.abs(z).sum() + np.abs(zl).sum() + np.abs(zu).sum()
        sc = max(smax, zsum / max(1, m_in + len(il) + len(iu))) / smax
        stat = np.abs(r_stat).max(initial=0.0) / sd
        feas = 0.0
        if m_eq:
            feas = max(feas, np.abs(ce).max())
        if m_in:
            feas = max(feas, np.abs(ci + s).max())
        comp = 0.0
        if m_in:
            comp = max(comp, np.abs(s * z - mu).max())
        if len(il):
            comp = max(comp, np.abs((x[il] - lb[il]) * zl - mu).max())
        if len(iu):
            comp = max(comp, np.abs((ub[iu] - x[iu]) * zu - mu).max())
        return stat, feas, comp / sc, r_stat

    def barrier_and_violation(x, s):
        """(barrier objective, l1 constraint violation); inf outside the
        strictly feasible slab."""
        ok = True
        if m_in and np.any(s <= 0):
            ok = False
        gl = x[il] - lb[il]
        gu = ub[iu] - x[iu]
        if (len(il) and np.any(gl <= 0)) or (len(iu) and np.any(gu <= 0)):
            ok = False
        if not ok:
            return np.inf, np.inf
        phi = eval_f(x)
        if m_in:
            phi -= mu * np.log(s).sum()
        if len(il):
            phi -= mu * np.log(gl).sum()
        if len(iu):
            phi -= mu * np.log(gu).sum()
        theta = 0.0
        if m_eq:
            theta += np.abs(eval_ce(x)).sum()
        if m_in:
            theta += np.abs(eval_ci(x) + s).sum()
        return phi, theta

    # Filter on (violation, barrier) pairs, IPOPT-style.
    gamma_theta, gamma_phi = 1e-5, 1e-5
    s_theta, s_phi, delta_sw = 1.1, 2.3, 1.0
    _, theta_start = barrier_and_violation(x, s)
    theta_max = 1e4 * max(1.0, theta_start)
    theta_min = 1e-4 * max(1.0, theta_start)
    filter_pairs = [(theta_max, -np.inf)]

    def filter_accepts(theta_t, phi_t):
        for th_j, ph_j in filter_pairs:
            if not (theta_t <= (1.0 - gamma_theta) * th_j or
                    phi_t <= ph_j - gamma_phi * th_j):
                return False
        return True

    best = None

    while it < opts.max_iter:
        f = eval_f(x)
        grad = eval_grad(x)
        ce = eval_ce(x)
        ci = eval_ci(x)
        Je = eval_je(x)
        Ji = eval_ji(x)

        stat, feas, comp0, r_stat = residuals(x, s, y, z, zl, zu, 0.0, grad, ce, ci, Je, Ji)
        E0 = max(stat, feas, comp0)
        if best is None or E0 < best[0]:
            best = (E0, x.copy(), s.copy(), y.copy(), z.copy(), zl.copy(), zu.copy())
        if E0 <= opts.tol:
            status = "optimal"
            break
        stat_mu, feas_mu, comp_mu, _ = residuals(x, s, y, z, zl, zu, mu, grad, ce, ci, Je, Ji)
        E_mu = max(stat_mu, feas_mu, comp_mu)
        if E_mu <= opts.kappa_eps * mu and mu > mu_min:
            mu = max(mu_min, opts.mu_shrink * mu)
            filter_pairs = [(theta_max, -np.inf)]
            continue

        H = eval_hess(x, y, z)

        # Condensed primal-dual system in (dx, dy).
        sigma_bounds = np.zeros(n)
        if len(il):
            sigma_bounds[il] += zl / np.maximum(x[il] - lb[il], eps)
        if len(iu):
            sigma_bounds[iu] += zu / np.maximum(ub[iu] - x[iu], eps)
        if m_in:
            sigma_s = z / np.maximum(s, eps)
            JiT_Sig_Ji = (Ji.T @ sp.diags(sigma_s) @ Ji).tocsr()
        else:
            sigma_s = np.zeros(0)
            JiT_Sig_Ji = sp.csr_matrix((n, n))

        b_x = -grad
        if m_eq:
            b_x -= Je.T @ y
        if m_in:
            b_x -= Ji.T @ (sigma_s * (ci + s) + mu / np.maximum(s, eps))
        if len(il):
            b_x[il] += mu / np.maximum(x[il] - lb[il], eps)
        if len(iu):
            b_x[iu] -= mu / np.maximum(ub[iu] - x[iu], eps)
        rhs = np.concatenate([b_x, -ce])

        # A fixed, well-scaled dual regularization: scaling it down with mu
        # makes the quasidefinite Schur complement so stiff that the LDL
        # pivot signs (the inertia readout) drown in roundoff.
        delta_c = 1e-8
        delta_w = 0.0

        def compute_step(delta_w):
            Wmat = H + JiT_Sig_Ji + sp.diags(sigma_bounds + delta_w)
            if m_eq:
                K = sp.bmat([[Wmat, Je.T], [Je, -delta_c * sp.identity(m_eq)]],
                            format="csr")
            else:
                K = Wmat.tocsr()
            solve_k, inertia_fn = kkt.factor(K)
            if solve_k is None:
                return None
            d = solve_k(rhs)
            d = d + solve_k(rhs - K @ d)  # one refinement pass
            if not np.all(np.isfinite(d)):
                return None
            if inertia_fn is not None:
                npos, nneg = inertia_fn()
                if npos != n or nneg != m_eq:
                    return None
            return d

        def bump(delta_w):
            if delta_w == 0.0:
                return 1e-4 if delta_w_last == 0.0 else max(1e-20, delta_w_last / 3.0)
            return delta_w * (100.0 if delta_w_last == 0.0 else 8.0)

        def max_step(v, dv):
            neg = dv < 0
            if not np.any(neg):
                return 1.0
            return min(1.0, float(np.min(opts.tau * v[neg] / (-dv[neg]))))

        accepted = False
        for _attempt in range(opts.max_inertia_retries + 1):
            d = compute_step(delta_w)
            if d is None:
                delta_w = bump(delta_w)
                if delta_w > 1e40:
                    break
                continue

            dx = d[:n]
            dy = d[n:] if m_eq else np.zeros(0)
            if m_in:
                ds = -(ci + s) - Ji @ dx
                dz = mu / np.maximum(s, eps) - z - sigma_s * ds
            else:
                ds = np.zeros(0)
                dz = np.zeros(0)
            dzl = (mu / np.maximum(x[il] - lb[il], eps) - zl
                   - (zl / np.maximum(x[il] - lb[il], eps)) * dx[il]) if len(il) else np.zeros(0)
            dzu = (mu / np.maximum(ub[iu] - x[iu], eps) - zu
                   + (zu / np.maximum(ub[iu] - x[iu], eps)) * dx[iu]) if len(iu) else np.zeros(0)

            alpha_p = 1.0
            if m_in:
                alpha_p = min(alpha_p, max_step(s, ds))
            if len(il):
                alpha_p = min(alpha_p, max_step(x[il] - lb[il], dx[il]))
            if len(iu):
                alpha_p = min(alpha_p, max_step(ub[iu] - x[iu], -dx[iu]))
            alpha_d = 1.0
            if m_in:
                alpha_d = min(alpha_d, max_step(z, dz))
            if len(il):
                alpha_d = min(alpha_d, max_step(zl, dzl))
            if len(iu):
                alpha_d = min(alpha_d, max_step(zu, dzu))

            # Filter line search along the primal direction.
            phi0, theta0 = barrier_and_violation(x, s)
            dphi = grad @ dx
            if m_in:
                dphi -= mu * np.sum(ds / np.maximum(s, eps))
            if len(il):
                dphi -= mu * np.sum(dx[il] / np.maximum(x[il] - lb[il], eps))
            if len(iu):
                dphi += mu * np.sum(dx[iu] / np.maximum(ub[iu] - x[iu], eps))

            alpha = alpha_p
            if opts.line_search == "merit":
                # l1 penalty merit: exactness needs nu above the multiplier
                # norm; grow it from the current dual estimates only.
                dual_norm = 0.0
                for arr in (y + dy if m_eq else y, z, zl, zu):
                    if len(arr):
                        dual_norm = max(dual_norm, float(np.abs(arr).max()))
                nu = max(1.0, 1.1 * dual_norm)
                dmer = dphi - nu * theta0
                mer0 = phi0 + nu * theta0
                for _bt in range(opts.max_backtracks):
                    x_t = x + alpha * dx
                    s_t = s + alpha * ds if m_in else s
                    phi_t, theta_t = barrier_and_violation(x_t, s_t)
                    if (np.isfinite(phi_t) and phi_t + nu * theta_t
                            <= mer0 + opts.armijo * alpha * min(dmer, 0.0)):
                        accepted = True
                        break
                    alpha *= 0.5
            else:
                h_type_used = False
                for _bt in range(opts.max_backtracks):
                    x_t = x + alpha * dx
                    s_t = s + alpha * ds if m_in else s
                    phi_t, theta_t = barrier_and_violation(x_t, s_t)
                    if np.isfinite(phi_t) and filter_accepts(theta_t, phi_t):
                        switching = (dphi < 0 and
                                     alpha * (-dphi) ** s_phi > delta_sw * theta0 ** s_theta)
                        if switching and theta0 <= theta_min:
                            if phi_t <= phi0 + opts.armijo * alpha * dphi:
                                accepted = True
                                break
                        else:
                            if (theta_t <= (1.0 - gamma_theta) * theta0 or
                                    phi_t <= phi0 - gamma_phi * theta0):
                                accepted = True
                                h_type_used = True
                                break
                    alpha *= 0.5
                if accepted and h_type_used:
                    filter_pairs.append(((1.0 - gamma_theta) * theta0,
                                         phi0 - gamma_phi * theta0))
            if accepted:
                break
            # Rejected direction: force more curvature and recompute.
            delta_w = bump(delta_w)
            if delta_w > 1e40:
                break

        if not accepted:
            status = "line-search-failure"
            break
        if delta_w > 0.0:
            delta_w_last = delta_w

        x = x + alpha * dx
        if m_in:
            s = s + alpha * ds
            z = z + alpha_d * dz
            # Keep duals within a large multiplicative corridor of mu/s.
            z = np.minimum(np.maximum(z, mu / (1e10 * np.maximum(s, eps))),
                           1e10 * mu / np.maximum(s, eps))
        if m_eq:
            y = y + alpha_d * dy
        if len(il):
            zl = zl + alpha_d * dzl
            zl = np.minimum(np.maximum(zl, mu / (1e10 * np.maximum(x[il] - lb[il], eps))),
                            1e10 * mu / np.maximum(x[il] - lb[il], eps))
        if len(iu):
            zu = zu + alpha_d * dzu
            zu = np.minimum(np.maximum(zu, mu / (1e10 * np.maximum(ub[iu] - x[iu], eps))),
                            1e10 * mu / np.maximum(ub[iu] - x[iu], eps))
        step_alpha = alpha
        it += 1
        if log is not None:
            extra = ""
            if opts.verbose:
                smin = float(s.min()) if m_in else np.inf
                extra = (f"  a_max {alpha_p:7.1e}  dw {delta_w:8.1e}"
                         f"  smin {smin:8.1e}")
            log(f"iter {it:4d}  mu {mu:9.2e}  f {f: .8e}  stat {stat:8.2e}  "
                f"feas {feas:8.2e}  comp {comp0:8.2e}  alpha {step_alpha:7.1e}{extra}")

    else:
        status = "max-iter"

    if status != "optimal" and best is not None and best[0] < np.inf:
        _, x, s, y, z, zl, zu = best

    grad = eval_grad(x)
    ce = eval_ce(x)
    ci = eval_ci(x)
    Je = eval_je(x)
    Ji = eval_ji(x)
    stat, feas, comp, _ = residuals(x, s, y, z, zl, zu, 0.0, grad, ce, ci, Je, Ji)
    z_lower = np.zeros(n)
    z_upper = np.zeros(n)
    z_lower[il] = zl
    z_upper[iu] = zu
    return NlpSolution(x=x, y_eq=y, z_ineq=z, z_lower=z_lower, z_upper=z_upper,
                       status=status, iterations=it,
                       kkt={"stationarity": float(stat), "feasibility": float(feas),
                            "complementarity": float(comp)},
                       objective=eval_f(x))


def check_derivatives(problem: NlpProblem, x: np.ndarray, h: float = 1e-6) -> DerivativeReport:
    """Central finite differences against the analytic gradient and Jacobians.

    Returns the worst relative error per block ("gradient", "eq_jacobian",
    "ineq_jacobian"), where the relative error of an entry is
    |fd - analytic| / max(1, |fd|, |analytic|).
    """
    x = np.asarray(x, dtype=float)
    n = problem.n
    m_eq, m_in = problem.sizes(x)
    report = {}
    worst = {}

    g = np.asarray(problem.gradient(x), dtype=float)
    fd_g = np.empty(n)
    for j in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        fd_g[j] = (problem.objective(xp) - problem.objective(xm)) / (2 * h)
    denom = np.maximum(1.0, np.maximum(np.abs(fd_g), np.abs(g)))
    err = np.abs(fd_g - g) / denom
    report["gradient"] = float(err.max(initial=0.0))
    if n:
        worst["gradient"] = int(np.argmax(err))

    for name, cfun, jfun, m in (("eq_jacobian", problem.eq_constraints,
                                 problem.eq_jacobian, m_eq),
                                ("ineq_jacobian", problem.ineq_constraints,
                                 problem.ineq_jacobian, m_in)):
        if m == 0 or cfun is None:
            continue
        J = jfun(x).tocsc()
        errmax = 0.0
        wloc = None
        for j in range(n):
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            fd_col = (np.asarray(cfun(xp)) - np.asarray(cfun(xm))) / (2 * h)
            an_col = np.asarray(J[:, j].todense()).ravel()
            denom = np.maximum(1.0, np.maximum(np.abs(fd_col), np.abs(an_col)))
            e = np.abs(fd_col - an_col) / denom
            k = int(np.argmax(e)) if m else 0
            if e[k] > errmax:
                errmax = float(e[k])
                wloc = (k, j)
        report[name] = errmax
        if wloc is not None:
            worst[name] = wloc
    return DerivativeReport(per_block=report, worst_entry=worst)
