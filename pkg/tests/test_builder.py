import numpy as np
import pytest

from shapeopt.mesh import generate_rectangle, boundary_components
from shapeopt.fem import FeSpace
from shapeopt.cases import rectangle_case, rectangle_mesh
from shapeopt.builder import (build_nlp, extract_solution, spline_gk, CaseSpec,
                              XYProfile)
from shapeopt.nlp import check_derivatives


@pytest.fixture(scope="module")
def mesh253():
    return rectangle_mesh(253)


@pytest.fixture(scope="module")
def built1(mesh253):
    return build_nlp(mesh253, rectangle_case(1).case)


@pytest.fixture(scope="module")
def built3(mesh253):
    return build_nlp(mesh253, rectangle_case(3).case)


def test_feasible_start(built1, built3):
    for built in (built1, built3):
        problem, layout, x0 = built
        assert np.abs(problem.eq_constraints(x0)).max() <= 1e-9
        assert problem.ineq_constraints(x0).max() < 0.0


def test_objective_at_start_is_delta0(built1):
    problem, layout, x0 = built1
    assert problem.objective(x0) == pytest.approx(x0[layout.delta], rel=1e-14)


def test_variable_count_near_reference(mesh253):
    # at ~950 vertices the variable count lands within 10% of 10832
    mesh = rectangle_mesh(945)
    built = build_nlp(mesh, rectangle_case(1).case)
    n = built.problem.n
    assert abs(n - 10832) / 10832 < 0.10


def test_layout_disjoint_and_complete(built3):
    problem, layout, x0 = built3
    covered = np.zeros(problem.n, dtype=int)
    covered[layout.delta] += 1
    for sl in (layout.alpha, layout.psi, layout.omega):
        covered[sl] += 1
    for sl in layout.lengths.values():
        covered[sl] += 1
    assert np.all(covered == 1)


def test_i3_adds_one_row_per_component(mesh253):
    b2 = build_nlp(mesh253, rectangle_case(2).case)
    b3 = build_nlp(mesh253, rectangle_case(3).case)
    blocks3 = dict(b3.eq_blocks)
    assert blocks3["length_integral"] == 2
    # isometric push-forward rows: per component, the chain rows equal the
    # number of chain vertices and the inflow rows cover the strict dofs
    comps = {c.name: c for c in boundary_components(mesh253)}
    space = b3.space
    for name in ("inflow_left", "inflow_right"):
        mk = len(comps[name].vertices)
        assert blocks3[f"length_chain:{name}"] == mk
        assert blocks3[f"inflow_dirichlet:{name}"] == 2 * mk - 3


def test_b1_b2_identical_under_i1(mesh253):
    case_b1 = rectangle_case(1).case
    case_b2 = rectangle_case(1).case
    case_b2.pushforward = "B2"
    a = build_nlp(mesh253, case_b1)
    b = build_nlp(mesh253, case_b2)
    assert a.problem.n == b.problem.n
    assert dict(a.eq_blocks) == dict(b.eq_blocks)
    x = a.x0
    assert np.allclose(a.x0, b.x0)
    assert np.abs(a.problem.eq_constraints(x) - b.problem.eq_constraints(x)).max() == 0.0


def test_b2_requires_length_preserving_kinds():
    case = rectangle_case(2).case
    case.pushforward = "B2"
    with pytest.raises(ValueError, match="I1 or I3"):
        case.validate()


def test_spline_interpolates_boundary_data(mesh253):
    comps = {c.name: c for c in boundary_components(mesh253)}
    comp = comps["inflow_left"]
    g0 = rectangle_case(1).case.g0
    gk = spline_gk(comp, g0, mesh253)
    # midpoint of the left inflow is y = 0 where the data vanishes
    assert gk(0.5) == pytest.approx(0.0, abs=1e-12)
    vals = g0.eval(mesh253, comp, comp.arclen)
    assert gk(0.0) == pytest.approx(vals[0])
    assert gk(comp.length) == pytest.approx(vals[-1])


def test_spline_derivative_matches_analytic(mesh253):
    # d/ds of the boundary data along the inflow equals the normal velocity
    comps = {c.name: c for c in boundary_components(mesh253)}
    comp = comps["inflow_left"]
    gk = spline_gk(comp, rectangle_case(1).case.g0, mesh253)
    # finite difference of the analytic composition at mid-chain
    t = 0.5
    h = 1e-6
    p = comp.point_at(mesh253, [t - h, t + h])
    g = rectangle_case(1).case.g0
    fd = (g.fn(*p[1]) - g.fn(*p[0])) / (2 * h)
    assert gk(t, 1) == pytest.approx(fd, rel=2e-3)  # spline slope is O(h^3) off


def test_spline_linear_extension_c1():
    s = np.linspace(0.0, 1.0, 9)
    vals = np.sin(s)
    from shapeopt.builder import GkSpline
    gk = GkSpline(s, vals)
    h = 1e-7
    assert gk(1.0 + 0.3, 1) == pytest.approx(gk(1.0, 1))
    assert gk(1.0 + 0.3) == pytest.approx(gk(1.0) + 0.3 * gk(1.0, 1))
    assert gk(-0.2, 2) == 0.0


def test_derivative_check_at_start(built3):
    problem, layout, x0 = built3
    rng = np.random.default_rng(11)
    xp = x0 + 0.01 * rng.standard_normal(problem.n)
    rep = check_derivatives(problem, xp, h=1e-6)
    assert rep.max_error <= 1e-6


def test_extract_solution_roundtrip(built1):
    problem, layout, x0 = built1
    opt = extract_solution(x0, built1)
    assert opt.delta == x0[layout.delta]
    # achieved sup at the start is below delta0 by construction
    assert opt.achieved_sup <= opt.delta
    assert set(opt.sigma_wall) == {"wall_bottom", "wall_top"}


def test_case_invariant_bounds():
    case = rectangle_case(1).case
    case.alpha_lower = 0.2
    with pytest.raises(ValueError, match="alpha_lower"):
        case.validate()
