"""Case setup, run driver, error norms, convergence studies and max-CFL search."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import output
from .cases import Case, get_case
from .euler import FluxConfig, PositivityError, primitive_to_conservative
from .limiter import LimiterConfig, limit_field
from .reference_ops import c_plus as default_c_plus
from .residual import Discretization
from .sensor import SCHEMES, SensorConfig, update_c_field
from .time_march import RunLog, Solver, StepLimitExceeded, TimeConfig

log = logging.getLogger(__name__)


@dataclass
class CaseConfig:
    """Everything needed to reproduce one run; field names mirror the CLI flags."""

    case: str = "gaussian-pulse"
    scheme: str = "afr"
    p: int = 3
    grid: str | None = None
    cfl: float = 0.1
    final_time: float | None = None
    cfl_mode: str = "adaptive"
    flux: str = "ec-ra"
    dissipation: str = "roe"
    limiter: bool = True
    positivity_eps: float = 1e-13
    kappa: float = 1.0
    sensor_variable: str = "density"
    sensor_update: str = "step"
    c_plus: float | None = None
    entropy_projection: bool = True
    gamma: float = 1.4
    sigma: float = 500.0
    max_steps: int = 10_000_000
    log_every: int = 1
    line_samples: int = 2048
    out: str | None = None

    def __post_init__(self):
        get_case(self.case)
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 1 <= self.p <= 5:
            raise ValueError(f"supported degrees are 1..5, got {self.p}")
        if not self.cfl > 0:
            raise ValueError("CFL must be positive")
        if self.final_time is not None and not self.final_time > 0:
            raise ValueError("final time must be positive")

    def replace(self, **changes) -> "CaseConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict) -> "CaseConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        clean = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(clean) - names)
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
        if isinstance(clean.get("limiter"), str):
            clean["limiter"] = clean["limiter"].lower() in ("on", "true", "yes", "1")
        if clean.get("grid") is not None:
            clean["grid"] = str(clean["grid"])
        return cls(**clean)


def resolve_case(config: CaseConfig) -> Case:
    case = get_case(config.case)
    if case.name == "gaussian-pulse" and config.sigma != 500.0:
        from . import cases as _c
        case = dataclasses.replace(case, primitive_ic=partial(_c._pulse_ic, sigma=config.sigma),
                                   exact=partial(_c._pulse_exact, sigma=config.sigma))
    return case


@dataclass
class Simulation:
    config: CaseConfig
    case: Case
    disc: Discretization
    sensor: SensorConfig
    solver: Solver
    U0: np.ndarray
    time: TimeConfig

    @property
    def mesh(self):
        return self.disc.mesh


def project_initial_condition(case: Case, disc: Discretization, gamma: float) -> np.ndarray:
    X, Y = disc.node_coordinates()
    rho, vel, p = case.primitive_ic(X, Y)
    return np.ascontiguousarray(primitive_to_conservative(rho, vel, p, gamma))


def build_simulation(config: CaseConfig) -> Simulation:
    case = resolve_case(config)
    mesh = case.mesh(config.grid, config.p, config.gamma)
    flux = FluxConfig(config.flux, config.dissipation, config.gamma)
    disc = Discretization(mesh, config.p, flux, config.entropy_projection)
    cp = config.c_plus if config.c_plus is not None else default_c_plus(config.p)
    sensor = SensorConfig(cp, config.p, config.kappa, config.sensor_variable)
    lim_cfg = LimiterConfig(config.limiter, config.positivity_eps)
    basis = disc.ops.basis

    def c_update(U):
        return update_c_field(U, config.scheme, sensor, basis, disc.d, config.gamma)

    limiter = None
    if config.limiter:
        def limiter(U, step, stage):
            return limit_field(U, disc.Vq, disc.Vf, disc.wq, disc.d, config.gamma, lim_cfg, step, stage)

    solver = Solver(disc, c_update, limiter, cp)
    U0 = project_initial_condition(case, disc, config.gamma)
    if limiter is not None:
        limiter(U0, 0, 0)
    tcfg = TimeConfig(config.cfl, config.final_time or case.final_time, config.sensor_update,
                      config.max_steps, config.log_every, config.cfl_mode)
    return Simulation(config, case, disc, sensor, solver, U0, tcfg)


@dataclass
class RunResult:
    sim: Simulation
    U: np.ndarray
    t: float
    c: np.ndarray
    log: RunLog
    wall_time: float
    failure: str | None = None

    @property
    def completed(self) -> bool:
        return self.failure is None


def run_simulation(sim: Simulation, run_log: RunLog | None = None, raise_on_failure: bool = True) -> RunResult:
    start = time.perf_counter()
    run_log = run_log if run_log is not None else RunLog()
    try:
        U, t, run_log = sim.solver.run(sim.U0, sim.time, run_log=run_log)
        failure = None
    except (PositivityError, StepLimitExceeded) as err:
        if raise_on_failure:
            raise
        U, t, failure = sim.U0, float("nan"), str(err)
        run_log.append({"failure": failure})
    c = sim.solver.c if sim.solver.c is not None else np.zeros(sim.mesh.n_elements)
    return RunResult(sim, U, t, np.array(c), run_log, time.perf_counter() - start, failure)


def run_case(config: CaseConfig, raise_on_failure: bool = True) -> RunResult:
    sim = build_simulation(config)
    run_log = RunLog()
    if config.out:
        os.makedirs(config.out, exist_ok=True)
        path = os.path.join(config.out, "run_log.ndjson")
        if os.path.exists(path):
            os.remove(path)
        run_log.path = path
    result = run_simulation(sim, run_log, raise_on_failure)
    if config.out:
        write_run_outputs(result, config.out)
    return result


# --- reporting -----------------------------------------------------------------

def default_line(case: Case):
    """Start and end of the line extraction for each case."""
    xmin, xmax, ymin, ymax = case.extent
    if case.name == "shock-diffraction":
        return (1.0, 0.0), (13.0, 11.0)
    if case.name == "dmr":
        return (xmin, 1.5), (xmax, 1.5)
    if case.d == 2:
        return (xmin, 0.0), (xmax, 0.0)
    return (xmin, 0.0), (xmax, 0.0)


def write_run_outputs(result: RunResult, out: str) -> dict:
    sim = result.sim
    disc = sim.disc
    paths = {}
    if disc.d == 1:
        rows = output.nodal_line_1d(disc, result.U, result.c)
        paths["line"] = output.write_csv(os.path.join(out, "line.csv"), ["x", "rho", "P", "c"], rows)
    else:
        a, b = default_line(sim.case)
        rows = output.line_samples(disc, result.U, result.c, a, b, sim.config.line_samples)
        paths["line"] = output.write_csv(os.path.join(out, "line.csv"), ["s", "x", "y", "rho", "P", "c"], rows)
    avg = disc.cell_averages(result.U)
    paths["vtk"] = output.write_vtk_blocks(os.path.join(out, "fields"), disc.mesh,
                                           {"c": result.c, "density": avg[:, 0]})
    summary = {
        "config": dataclasses.asdict(sim.config),
        "completed": result.completed,
        "failure": result.failure,
        "t": result.t,
        "steps": sim.solver.steps,
        "limiter_activations": sim.solver.total_activations,
        "wall_time": result.wall_time,
        "max_c": float(np.max(result.c)),
        "c_plus": sim.sensor.c_plus,
        "dof": disc.mesh.dof(disc.p),
    }
    if sim.case.exact is not None and result.completed:
        rep = error_norms(disc, result.U, sim.case, result.t)
        summary["errors"] = {"L1": rep.l1, "L2": rep.l2, "Linf": rep.linf}
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, default=float)
    paths["summary"] = os.path.join(out, "summary.json")
    return paths


# --- error norms -----------------------------------------------------------------

@dataclass
class ErrorReport:
    """Density error norms on one grid (``l1``, ``l2``, ``linf``); per-variable arrays in ``*_all``."""

    grid: tuple
    dof: int
    l1: float
    l2: float
    linf: float
    l1_all: np.ndarray = field(repr=False, default=None)
    l2_all: np.ndarray = field(repr=False, default=None)
    linf_all: np.ndarray = field(repr=False, default=None)


def observed_order(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    return math.log(e_coarse / e_fine) / math.log(ratio)


def _evaluate_on(disc, U, r):
    """Solution at the tensor points built from reference coordinates ``r``."""
    L = disc.ops.basis.evaluate(r)
    if disc.d == 1:
        return np.einsum("ia,eav->eiv", L, U[:, 0])[:, None]
    return np.einsum("jb,ia,ebav->ejiv", L, L, U)


def _physical(disc, r):
    m = disc.mesh
    xs = m.x0[:, None] + 0.5 * (r[None, :] + 1.0) * m.hx[:, None]
    if disc.d == 1:
        return xs[:, None, :], np.zeros_like(xs)[:, None, :]
    ys = m.y0[:, None] + 0.5 * (r[None, :] + 1.0) * m.hy[:, None]
    n = r.size
    return (np.broadcast_to(xs[:, None, :], (m.n_elements, n, n)),
            np.broadcast_to(ys[:, :, None], (m.n_elements, n, n)))


def error_norms(disc, U, case: Case, t: float, exact=None, n_quad: int | None = None,
                n_sample: int | None = None) -> ErrorReport:
    """L1/L2 by over-integrated Gauss quadrature, Linf over an over-sampled equispaced set."""
    from .cases import exact_solution

    exact = exact or (lambda x, y: exact_solution(case, x, t, y, disc.gamma))
    n_quad = n_quad or disc.p + 4
    n_sample = n_sample or 2 * disc.p + 3
    xq, wq = np.polynomial.legendre.leggauss(n_quad)
    X, Y = _physical(disc, xq)
    err = _evaluate_on(disc, U, xq) - exact(X, Y)
    if disc.d == 1:
        w = disc.mesh.jacobian[:, None, None] * wq[None, None, :]
    else:
        w = disc.mesh.jacobian[:, None, None] * np.outer(wq, wq)[None]
    l1 = np.einsum("ejk,ejkv->v", w, np.abs(err))
    l2 = np.sqrt(np.einsum("ejk,ejkv->v", w, err**2))
    rs = np.linspace(-1.0, 1.0, n_sample)
    Xs, Ys = _physical(disc, rs)
    linf = np.max(np.abs(_evaluate_on(disc, U, rs) - exact(Xs, Ys)), axis=(0, 1, 2))
    grid = (disc.mesh.n_elements,) if disc.d == 1 else tuple(sorted({b.nx for b in disc.mesh.blocks}))
    return ErrorReport(grid, disc.mesh.dof(disc.p), float(l1[0]), float(l2[0]), float(linf[0]), l1, l2, linf)


def converge(config: CaseConfig, grids, csv_path: str | None = None):
    """Run ``config`` on each grid; returns reports and L2 orders between successive grids."""
    reports = []
    for g in grids:
        res = run_case(config.replace(grid=str(g), out=None))
        rep = error_norms(res.sim.disc, res.U, res.sim.case, res.t)
        rep.grid = (g,) if not isinstance(g, (tuple, list)) else tuple(g)
        reports.append(rep)
        log.info("%s p=%d grid %s: L2 %.3e", config.scheme, config.p, g, rep.l2)
    orders = [float("nan")] + [observed_order(a.l2, b.l2) for a, b in zip(reports, reports[1:])]
    if csv_path:
        rows = []
        for g, rep, o in zip(grids, reports, orders):
            rows.append([config.scheme, config.p, str(g), rep.dof, rep.l1, rep.l2, rep.linf, o])
        output.write_csv(csv_path, ["scheme", "p", "grid", "dof", "L1", "L2", "Linf", "order_L2"], rows)
    return reports, orders


# --- maximum stable CFL --------------------------------------------------------------

class BracketError(ValueError):
    pass


def run_passes(config: CaseConfig, cfl: float) -> bool:
    """True when the run reaches the final time without positivity abort or non-finite state."""
    res = run_case(config.replace(cfl=cfl, out=None), raise_on_failure=False)
    return res.completed and bool(np.all(np.isfinite(res.U)))


def max_cfl_bisect(config: CaseConfig, lo: float = 0.0, hi: float = 1.0, tol: float = 0.01,
                   passes=None) -> float:
    """Largest CFL (to ``tol``) for which ``passes`` holds, assuming failure above it."""
    passes = passes or partial(run_passes, config)
    if passes(hi):
        raise BracketError(f"upper bracket CFL={hi} passes; widen the bracket")
    if lo > 0 and not passes(lo):
        raise BracketError(f"lower bracket CFL={lo} fails; lower it")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo


def sweep(config: CaseConfig, schemes=SCHEMES, cfls=(), csv_path: str | None = None):
    """Run each scheme at each CFL; rows of (scheme, cfl, completed, wall time, max c)."""
    rows = []
    for scheme in schemes:
        for cfl in cfls:
            res = run_case(config.replace(scheme=scheme, cfl=cfl, out=None), raise_on_failure=False)
            rows.append([scheme, cfl, int(res.completed), res.wall_time, float(np.max(res.c))])
    if csv_path:
        output.write_csv(csv_path, ["scheme", "cfl", "completed", "wall_time", "max_c"], rows)
    return rows
