"""Coupled stream-function/vorticity solve for a fixed conformal parameter.

Solving the pulled-back Stokes system on the reference mesh for a *given*
parameter field gives the reference wall shear stress and an independent
check on anything the optimizer produces.  The coupled linear system stacks

* the weak stream-function rows (full test space, so the zero normal
  derivative is enforced naturally and the vorticity boundary values are
  closed),
* identity rows pinning the stream function to its boundary data,
* interior-tested Laplace rows for the vorticity,

which is square in (psi, omega).  The wall shear stress is the plain trace
of the vorticity at wall vertices; no smoothing or recovery is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh2D, BoundaryComponent, boundary_components
from .fem import (FeSpace, FeFunction, assemble_state_system, assemble_vorticity,
                  trace_operator)

__all__ = ["StateSolution", "solve_state", "wall_shear"]


class SingularStateSystem(RuntimeError):
    pass


@dataclass
class StateSolution:
    """State fields plus the wall trace of the vorticity."""

    psi: FeFunction
    omega: FeFunction
    sigma: dict  # wall component name -> (arclen, values)
    residual: float

    @property
    def mesh(self) -> Mesh2D:
        return self.psi.space.mesh


def solve_state(mesh: Mesh2D, alpha, g, dirichlet_mode: str = "full",
                dirichlet_dofs=None, space: FeSpace | None = None) -> StateSolution:
    """Solve the pulled-back state system for a given conformal parameter.

    ``alpha`` is an FeFunction (its space is reused) or a plain dof vector;
    ``g`` supplies the stream-function boundary data (FeFunction, dof vector
    or dict, see ``assemble_state_system``).  Linear in ``g`` for fixed
    ``alpha``.  Pure function of its inputs; concurrent calls on distinct
    inputs are safe.
    """
    if space is None:
        space = alpha.space if isinstance(alpha, FeFunction) else FeSpace(mesh, 2)
    avals = alpha.coeffs if isinstance(alpha, FeFunction) else np.asarray(alpha, dtype=float)
    if not np.all(np.isfinite(avals)):
        raise ValueError("alpha must be finite everywhere")

    A11, A12, b1 = assemble_state_system(space, g, dirichlet_mode, dirichlet_dofs)
    A2 = assemble_vorticity(space)
    n = space.ndof

    coef = np.exp(2.0 * avals)
    A12c = A12.copy()
    A12c.data = A12.data * coef[A12.indices]  # column scaling, structure kept

    system = sp.bmat([[A11, A12c], [None, A2]], format="csc")
    rhs = np.concatenate([b1, np.zeros(A2.shape[0])])
    if system.shape[0] != system.shape[1]:
        raise SingularStateSystem(
            f"state system is {system.shape[0]}x{system.shape[1]}, expected square")
    try:
        lu = spla.splu(system)
        sol = lu.solve(rhs)
    except RuntimeError as exc:
        raise SingularStateSystem(f"state system factorization failed: {exc}") from exc

    resid = np.linalg.norm(system @ sol - rhs)
    scale = max(1.0, np.linalg.norm(rhs))
    if not np.isfinite(resid) or resid > 1e-9 * scale:
        raise SingularStateSystem(f"state solve residual {resid:.3e} exceeds tolerance")

    psi = FeFunction(space, sol[:n])
    omega = FeFunction(space, sol[n:])

    sigma = {}
    for comp in boundary_components(mesh):
        if comp.kind == "wall":
            G = trace_operator(space, [comp])
            sigma[comp.name] = (comp.arclen.copy(), G @ omega.coeffs)
    return StateSolution(psi=psi, omega=omega, sigma=sigma, residual=float(resid))


def wall_shear(solution: StateSolution, component: BoundaryComponent):
    """(arc length, shear) pairs along one wall component, ordered by arc length."""
    if component.kind != "wall":
        raise ValueError(f"wall shear requested on {component.kind} component "
                         f"{component.name!r}")
    if component.name in solution.sigma:
        s, vals = solution.sigma[component.name]
        return s.copy(), vals.copy()
    G = trace_operator(solution.psi.space, [component])
    return component.arclen.copy(), G @ solution.omega.coeffs
