"""Benchmark definitions: geometry, boundary conditions, initial data, exact solutions.

Grids are given as element counts.  For the 2D cases ``(NX, NY)`` counts the
elements across the bounding box; the L-shaped diffraction domain keeps the
same uniform spacing in both blocks, so NX must be a multiple of 13 and NY of 11.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .euler import primitive_to_conservative
from .mesh import Block, BoundarySegment, CartesianMesh, MeshError, build_mesh
from .riemann import exact_riemann

SQRT3 = math.sqrt(3.0)

PULSE_SIGMA = 500.0
LEBLANC_LEFT = (2.0, 0.0, 1e9)
LEBLANC_RIGHT = (1e-3, 0.0, 1.0)
LEBLANC_DOF = 1920
DIFFRACTION_LEFT = (7.041132906907898, 4.07794695481336, 0.0, 30.05945)
DIFFRACTION_RIGHT = (1.4, 0.0, 0.0, 1.0)
DIFFRACTION_SHOCK_MACH = 5.09
DMR_POST = (8.0, 33.0 * SQRT3 / 8.0, -33.0 / 8.0, 116.5)
DMR_PRE = (1.4, 0.0, 0.0, 1.0)
DMR_SHOCK_MACH = 10.0


def parse_grid(text) -> tuple:
    """'64' -> (64,), '52x44' -> (52, 44)."""
    if isinstance(text, (tuple, list)):
        parts = tuple(int(v) for v in text)
    else:
        parts = tuple(int(v) for v in str(text).lower().split("x"))
    if not parts or len(parts) > 2 or min(parts) < 1:
        raise ValueError(f"grid must be NX or NXxNY with positive counts, got {text!r}")
    return parts


@dataclass(frozen=True)
class Case:
    name: str
    d: int
    final_time: float
    extent: tuple
    default_grid: Callable[[int], tuple]
    mesh_builder: Callable[[tuple, float], CartesianMesh]
    primitive_ic: Callable
    inside: Callable
    exact: Callable | None = None

    def mesh(self, grid=None, p: int = 3, gamma: float = 1.4) -> CartesianMesh:
        g = self.default_grid(p) if grid is None else parse_grid(grid)
        if self.d == 2 and len(g) == 1:
            g = (g[0], g[0])
        if self.d == 1 and len(g) != 1:
            raise ValueError(f"{self.name} is one-dimensional; grid must be a single count")
        return self.mesh_builder(g, gamma)


# --- Gaussian pulse ---------------------------------------------------------

def _pulse_mesh(g, gamma):
    return build_mesh([Block(-0.5, 1.0, g[0], -0.5, 1.0, g[1])], [], 2, periodic=(True, True), gamma=gamma)


def _pulse_ic(x, y, sigma=PULSE_SIGMA):
    rho = 0.01 + np.exp(-sigma * (x * x + y * y))
    one = np.ones_like(rho)
    return rho, np.stack([one, one], axis=-1), one


def _wrap(v):
    return (v + 0.5) % 1.0 - 0.5


def _pulse_exact(x, y, t, sigma=PULSE_SIGMA):
    return _pulse_ic(_wrap(x - t), _wrap(y - t), sigma)


# --- Leblanc ----------------------------------------------------------------

def _leblanc_grid(p):
    n, r = divmod(LEBLANC_DOF, p + 1)
    return (n if r == 0 else round(LEBLANC_DOF / (p + 1)),)


def _leblanc_mesh(g, gamma):
    segs = [BoundarySegment(0, -1, -10.0, "outflow"), BoundarySegment(0, 1, 10.0, "outflow")]
    return build_mesh([Block(-10.0, 20.0, g[0])], segs, 1, gamma=gamma)


def _riemann_ic(left, right, x0):
    def ic(x, y):
        rho = np.where(x < x0, left[0], right[0])
        u = np.where(x < x0, left[1], right[1])
        p = np.where(x < x0, left[2], right[2])
        return rho, u[..., None], p
    return ic


def _leblanc_exact(x, y, t):
    rho, u, p = exact_riemann(LEBLANC_LEFT, LEBLANC_RIGHT, x, t)
    return rho, u[..., None], p


# --- density wave (smooth, periodic, 1D) -------------------------------------

def _wave_mesh(g, gamma):
    return build_mesh([Block(0.0, 1.0, g[0])], [], 1, periodic=(True, False), gamma=gamma)


def _wave_ic(x, y):
    rho = 1.0 + 0.5 * np.sin(2.0 * np.pi * x)
    one = np.ones_like(rho)
    return rho, one[..., None], one


def _wave_exact(x, y, t):
    return _wave_ic((x - t) % 1.0, y)


# --- shock diffraction (L-shaped) ---------------------------------------------

def _diffraction_mesh(g, gamma):
    nx, ny = g
    if nx % 13 or ny % 11:
        raise MeshError(f"shock-diffraction grid {nx}x{ny}: NX must be a multiple of 13 and NY of 11 "
                        "so that both blocks conform along x=1 and y=6")
    ex, ey = nx // 13, ny // 11
    blocks = [Block(0.0, 1.0, ex, 6.0, 5.0, 5 * ey), Block(1.0, 12.0, 12 * ex, 0.0, 11.0, ny)]
    segs = [
        BoundarySegment(0, -1, 0.0, "inflow", 6.0, 11.0, DIFFRACTION_LEFT),
        BoundarySegment(0, -1, 1.0, "wall", 0.0, 6.0),
        BoundarySegment(1, -1, 6.0, "wall", 0.0, 1.0),
        BoundarySegment(1, -1, 0.0, "outflow", 1.0, 13.0),
        BoundarySegment(0, 1, 13.0, "outflow"),
        BoundarySegment(1, 1, 11.0, "wall"),
    ]
    return build_mesh(blocks, segs, 2, gamma=gamma)


def _diffraction_ic(x, y):
    left = x < 0.5
    rho = np.where(left, DIFFRACTION_LEFT[0], DIFFRACTION_RIGHT[0])
    u = np.where(left, DIFFRACTION_LEFT[1], DIFFRACTION_RIGHT[1])
    v = np.where(left, DIFFRACTION_LEFT[2], DIFFRACTION_RIGHT[2])
    p = np.where(left, DIFFRACTION_LEFT[3], DIFFRACTION_RIGHT[3])
    return rho, np.stack([u, v], axis=-1), p


def _diffraction_inside(x, y, tol=1e-12):
    box = (x >= -tol) & (x <= 13 + tol) & (y >= -tol) & (y <= 11 + tol)
    return box & ~((x < 1 - tol) & (y < 6 - tol))


# --- double Mach reflection ----------------------------------------------------

def _dmr_mesh(g, gamma):
    nx, ny = g
    segs = [
        BoundarySegment(0, -1, 0.0, "inflow", state=DMR_POST),
        BoundarySegment(0, 1, 4.0, "outflow"),
        BoundarySegment(1, -1, 0.0, "post-shock", 0.0, 1.0 / 6.0, DMR_POST),
        BoundarySegment(1, -1, 0.0, "wall", 1.0 / 6.0, 4.0),
        BoundarySegment(1, 1, 3.0, "wall"),
    ]
    h = 4.0 / nx
    split = h * round(1.0 / (6.0 * h))
    if abs(split - 1.0 / 6.0) > 1e-9:
        # x = 1/6 is not a grid line; snap the switch to the nearest one
        segs[2] = BoundarySegment(1, -1, 0.0, "post-shock", 0.0, split, DMR_POST)
        segs[3] = BoundarySegment(1, -1, 0.0, "wall", split, 4.0)
    return build_mesh([Block(0.0, 4.0, nx, 0.0, 3.0, ny)], segs, 2, gamma=gamma)


def _dmr_ic(x, y):
    post = y > SQRT3 * (x - 1.0 / 6.0)
    vals = [np.where(post, a, b) for a, b in zip(DMR_POST, DMR_PRE)]
    return vals[0], np.stack([vals[1], vals[2]], axis=-1), vals[3]


def _box(x0, x1, y0=None, y1=None, tol=1e-12):
    def inside(x, y):
        ok = (x >= x0 - tol) & (x <= x1 + tol)
        if y0 is not None:
            ok &= (y >= y0 - tol) & (y <= y1 + tol)
        return ok
    return inside


CASES = {
    "gaussian-pulse": Case("gaussian-pulse", 2, 1.0, (-0.5, 0.5, -0.5, 0.5), lambda p: (16, 16),
                           _pulse_mesh, _pulse_ic, _box(-0.5, 0.5, -0.5, 0.5), _pulse_exact),
    "leblanc": Case("leblanc", 1, 1e-4, (-10.0, 10.0, 0.0, 0.0), _leblanc_grid, _leblanc_mesh,
                    _riemann_ic(LEBLANC_LEFT, LEBLANC_RIGHT, 0.0), _box(-10.0, 10.0), _leblanc_exact),
    "shock-diffraction": Case("shock-diffraction", 2, 2.3, (0.0, 13.0, 0.0, 11.0), lambda p: (52, 44),
                              _diffraction_mesh, _diffraction_ic, _diffraction_inside),
    "dmr": Case("dmr", 2, 0.2, (0.0, 4.0, 0.0, 3.0), lambda p: (96, 72), _dmr_mesh, _dmr_ic, _box(0.0, 4.0, 0.0, 3.0)),
    "density-wave": Case("density-wave", 1, 1.0, (0.0, 1.0, 0.0, 0.0), lambda p: (16,), _wave_mesh, _wave_ic,
                         _box(0.0, 1.0), _wave_exact),
}
ALIASES = {"pulse": "gaussian-pulse", "diffraction": "shock-diffraction", "double-mach": "dmr"}


def get_case(name: str) -> Case:
    key = ALIASES.get(name, name)
    if key not in CASES:
        raise ValueError(f"unknown case {name!r}; choose from {sorted(CASES)}")
    return CASES[key]


def initial_condition(case, x, y=None, gamma: float = 1.4) -> np.ndarray:
    """Conservative initial state at physical points."""
    case = get_case(case) if isinstance(case, str) else case
    x = np.asarray(x, dtype=float)
    y = np.zeros_like(x) if y is None else np.asarray(y, dtype=float)
    if not np.all(case.inside(x, y)):
        raise ValueError(f"point outside the {case.name} domain")
    rho, vel, p = case.primitive_ic(x, y)
    return primitive_to_conservative(rho, vel, p, gamma)


def exact_solution(case, x, t: float, y=None, gamma: float = 1.4) -> np.ndarray:
    """Conservative exact state (pulse, Leblanc and the density wave only)."""
    case = get_case(case) if isinstance(case, str) else case
    if case.exact is None:
        raise ValueError(f"no exact solution available for {case.name}")
    x = np.asarray(x, dtype=float)
    y = np.zeros_like(x) if y is None else np.asarray(y, dtype=float)
    rho, vel, p = case.exact(x, y, t)
    return primitive_to_conservative(rho, vel, p, gamma)


def shock_position(case, t: float, y: float | None = None) -> float:
    """x-position of the undisturbed incident shock for the 2D shock cases."""
    case = get_case(case) if isinstance(case, str) else case
    if case.name == "shock-diffraction":
        return 0.5 + DIFFRACTION_SHOCK_MACH * math.sqrt(1.4 * DIFFRACTION_RIGHT[3] / DIFFRACTION_RIGHT[0]) * t
    if case.name == "dmr":
        # oblique shock inclined at 60 degrees moving at Mach 10 into gas with unit sound speed
        speed = DMR_SHOCK_MACH * math.sqrt(1.4 * DMR_PRE[3] / DMR_PRE[0]) / math.sin(math.pi / 3.0)
        return 1.0 / 6.0 + (y or 0.0) / SQRT3 + speed * t
    raise ValueError(f"no incident shock defined for {case.name}")
