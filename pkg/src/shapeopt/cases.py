"""Benchmark problem definitions: rectangle channel and funnel distributor.

The rectangle cases share one data set (quartic inflow profile, cosine wall
shear target, eps = 0.01, bounds +-0.45) and differ only in how the inflow
components are constrained and how the inflow condition is pushed forward.
The distributor case builds its target from the reference solve so that it
matches the reference shear exactly in the component corner points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import (Mesh2D, generate_rectangle, generate_distributor,
                   boundary_components)
from .builder import CaseSpec, XYProfile, ArcLengthProfile
from .forward import StateSolution, wall_shear

__all__ = [
    "BenchmarkCase",
    "rectangle_case",
    "distributor_case",
    "rectangle_mesh",
    "distributor_mesh",
    "make_case",
    "CASE_NAMES",
]

CASE_NAMES = ("example1", "example2", "example3", "example4")


@dataclass
class BenchmarkCase:
    """A CaseSpec plus the analytic closures and documentation that go with it."""

    case: CaseSpec
    u0: object                       # normal-velocity boundary profile
    expected_delta: tuple | None     # (lo, hi) at ~950 vertices, +-0.45 bounds
    notes: str = ""


def _rect_g0(x, y):
    return 20.0 * 0.5**4 * y - 4.0 * y**5


def _rect_u0(x, y):
    return 20.0 * np.sign(x) * (0.5**4 - y**4)


def _rect_sigma_d(x, y):
    return np.sign(y) * (-5.0 * np.cos(1.5 * np.pi * x) + 10.0)


def rectangle_case(example: int) -> BenchmarkCase:
    """Channel benchmarks 1-3, differing only in the admissible-set choice.

    1: inflow pinned to zero (I1); both push-forward modes coincide.
    2: zero-Neumann inflow (I2) with the conformal push-forward.
    3: zero-Neumann plus length integral (I3) with the isometric push-forward.
    """
    if example == 1:
        kinds, mode, rng = "I1", "B1", (0.85, 1.40)
    elif example == 2:
        kinds, mode, rng = "I2", "B1", (0.15, 0.45)
    elif example == 3:
        kinds, mode, rng = "I3", "B2", (0.75, 1.30)
    else:
        raise ValueError("rectangle examples are 1, 2 or 3")
    spec = CaseSpec(
        name=f"example{example}",
        g0=XYProfile(_rect_g0),
        sigma_d=XYProfile(_rect_sigma_d),
        epsilon=0.01,
        alpha_lower=-0.45,
        alpha_upper=0.45,
        inflow_kinds={"inflow_left": kinds, "inflow_right": kinds},
        pushforward=mode,
    )
    return BenchmarkCase(case=spec, u0=XYProfile(_rect_u0), expected_delta=rng)


# Distributor inflow profiles over each component's own arc length; both are
# scaled so the net flux through the component is one.
def _dist_u0_top(t):
    return 375.0 / 4.0 * ((t - 0.2) ** 2 - 0.2**2)


def _dist_u0_bottom(t):
    return -5632.0 / 5.0 * ((t - 0.5) ** 10 - 0.5**10)


def _dist_g0_top(t):
    # 1 + integral of the top profile from 0 to t (walking the loop from the
    # bottom-left corner, the right wall carries the constant 1).
    return 1.0 + 375.0 / 4.0 * (((t - 0.2) ** 3 + 0.2**3) / 3.0 - 0.2**2 * t)


def _dist_g0_bottom(t):
    return -5632.0 / 5.0 * (((t - 0.5) ** 11 + 0.5**11) / 11.0 - 0.5**10 * t)


def distributor_g0() -> ArcLengthProfile:
    """Stream-function boundary data for the funnel (target-independent)."""
    return ArcLengthProfile({
        "inflow_bottom": _dist_g0_bottom,
        "inflow_top": _dist_g0_top,
        "wall_left": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        "wall_right": lambda t: np.ones_like(np.asarray(t, dtype=float)),
    })


def distributor_case(reference: StateSolution, epsilon: float = 0.1,
                     alpha_bound: float = 0.45) -> BenchmarkCase:
    """Funnel benchmark: bottom inflow keeps length and curvature (I3),
    top inflow is pinned (I1), isometric push-forward.

    The target shear on each wall blends the two corner values of the
    reference shear with a square-root ramp, so it agrees with the reference
    solve exactly at the component corners.  ``reference`` must be the a = 0
    solve on the same distributor mesh the case will be built on.
    """
    mesh = reference.psi.space.mesh
    comps = {c.name: c for c in boundary_components(mesh)}
    for needed in ("inflow_top", "inflow_bottom", "wall_left", "wall_right"):
        if needed not in comps:
            raise ValueError(f"reference solution is not on a distributor mesh "
                             f"(missing component {needed!r})")

    def blend(comp_name, reverse):
        comp = comps[comp_name]
        s, sig = wall_shear(reference, comp)
        ell = comp.length
        v0, v1 = float(sig[0]), float(sig[-1])

        if not reverse:
            def fn(t, v0=v0, v1=v1, ell=ell):
                r = np.sqrt(np.clip(t / ell, 0.0, 1.0))
                return (1.0 - r) * v0 + r * v1
        else:
            # parameterized from the far end: sigma_d(s(l - t)) ramps from
            # the value at s(l) toward the value at s(0)
            def fn(t, v0=v0, v1=v1, ell=ell):
                r = np.sqrt(np.clip((ell - t) / ell, 0.0, 1.0))
                return (1.0 - r) * v1 + r * v0
        return fn

    # The left/right walls are mirror images; walking both chains in boundary
    # order, the ramp of one must start where the other one ends.
    sigma_d = ArcLengthProfile({
        "wall_left": blend("wall_left", reverse=False),
        "wall_right": blend("wall_right", reverse=True),
    })

    g0 = distributor_g0()
    u0 = ArcLengthProfile({
        "inflow_bottom": _dist_u0_bottom,
        "inflow_top": _dist_u0_top,
        "wall_left": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        "wall_right": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
    })
    spec = CaseSpec(
        name="example4",
        g0=g0,
        sigma_d=sigma_d,
        epsilon=epsilon,
        alpha_lower=-alpha_bound,
        alpha_upper=alpha_bound,
        inflow_kinds={"inflow_top": "I1", "inflow_bottom": "I3"},
        pushforward="B2",
    )
    return BenchmarkCase(case=spec, u0=u0, expected_delta=None,
                         notes="target built from the reference corner shear")


def rectangle_mesh(target_vertices: int) -> Mesh2D:
    """Channel mesh with roughly the requested vertex count.

    Even cell counts with a 2:1 aspect keep the grid mirror-symmetric in
    both axes.
    """
    best = None
    for ny in range(2, 400, 2):
        for nx in (2 * ny - 2, 2 * ny, 2 * ny + 2, 2 * ny + 4):
            if nx < 2:
                continue
            count = (nx + 1) * (ny + 1)
            err = abs(count - target_vertices)
            if best is None or err < best[0]:
                best = (err, nx, ny)
        if (2 * ny + 1) * (ny + 1) > 4 * target_vertices:
            break
    _, nx, ny = best
    return generate_rectangle(nx, ny)


def distributor_mesh(target_vertices: int) -> Mesh2D:
    """Funnel mesh with roughly the requested vertex count (ny = 3k, nx even)."""
    best = None
    for ny in range(3, 400, 3):
        for nx in (max(2, 2 * round(ny / 5.0)), max(2, 2 * round(ny / 4.0))):
            count = (nx + 1) * (ny + 1)
            err = abs(count - target_vertices)
            if best is None or err < best[0]:
                best = (err, nx, ny)
        if (ny + 1) * 2 > 4 * target_vertices:
            break
    _, nx, ny = best
    return generate_distributor(nx, ny)


def make_case(name: str, mesh: Mesh2D, reference: StateSolution | None = None,
              **overrides) -> BenchmarkCase:
    """Build a named benchmark; example4 derives its target from ``reference``
    (computed by the caller on ``mesh`` at a = 0)."""
    if name in ("example1", "example2", "example3"):
        bench = rectangle_case(int(name[-1]))
    elif name == "example4":
        if reference is None:
            raise ValueError("example4 needs the reference state solution")
        bench = distributor_case(reference)
    else:
        raise ValueError(f"unknown case {name!r}; expected one of {CASE_NAMES}")
    for key, value in overrides.items():
        if not hasattr(bench.case, key):
            raise ValueError(f"unknown case override {key!r}")
        setattr(bench.case, key, value)
    bench.case.validate()
    return bench
