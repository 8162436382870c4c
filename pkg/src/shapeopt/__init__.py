"""Sup-norm wall-shear-stress shape optimization for 2D Stokes flow.

The toolkit pulls the shape problem back to a fixed reference domain via a
conformal parameterization, discretizes state and control with P2 Lagrange
elements, solves the resulting sparse NLP with a primal-dual interior-point
method, and reconstructs the optimal domain from the conformal parameter.

Modules
-------
mesh       labeled triangulations, boundary components, mesh file format
fem        P2/P1 spaces and sparse operator assembly
forward    coupled stream-function/vorticity solve, wall shear extraction
nlp        generic sparse NLP container + interior-point solver
builder    assembly of the discrete shape optimization problem
conformal  domain reconstruction and analytic conformal-map oracles
cases      the channel and funnel distributor benchmarks
report     JSON/CSV/SVG artifact writers
cli        `shapeopt run | verify | mesh` entry points
"""

from .mesh import (Mesh2D, BoundaryComponent, generate_rectangle,
                   generate_distributor, boundary_components, load_mesh,
                   save_mesh)
from .fem import FeSpace, FeFunction
from .forward import StateSolution, solve_state, wall_shear
from .nlp import NlpProblem, NlpSolution, SolverOptions, solve, check_derivatives
from .builder import (CaseSpec, VariableLayout, BuiltNlp, OptimalSolution,
                      build_nlp, extract_solution, spline_gk)
from .conformal import (Gauge, ReconstructedDomain, reconstruct,
                        harmonic_conjugate, integrate_map, rigid_align)
from .cases import rectangle_case, distributor_case, make_case

__version__ = "0.1.0"
