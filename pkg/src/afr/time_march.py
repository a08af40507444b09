"""SSPRK3 time advancement with CFL-based step selection."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .euler import PositivityError

log = logging.getLogger(__name__)

SENSOR_UPDATES = ("step", "stage")
CFL_MODES = ("initial", "adaptive")


class StepLimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeConfig:
    cfl: float
    final_time: float
    sensor_update: str = "step"
    max_steps: int = 10_000_000
    log_every: int = 1
    cfl_mode: str = "adaptive"

    def __post_init__(self):
        if not self.cfl > 0:
            raise ValueError(f"CFL must be positive, got {self.cfl}")
        if not self.final_time > 0:
            raise ValueError(f"final time must be positive, got {self.final_time}")
        if self.sensor_update not in SENSOR_UPDATES:
            raise ValueError(f"sensor_update must be one of {SENSOR_UPDATES}")
        if self.cfl_mode not in CFL_MODES:
            raise ValueError(f"cfl_mode must be one of {CFL_MODES}")
        if self.max_steps < 1 or self.log_every < 1:
            raise ValueError("max_steps and log_every must be positive")


def reference_spacing(extent, dof: int, d: int) -> float:
    """(x_max - x_min) / DOF^(1/d)."""
    return (extent[1] - extent[0]) / dof ** (1.0 / d)


def compute_dt(cfl: float, dx: float, lam: float, t: float = 0.0, final_time: float = math.inf) -> float:
    """CFL dx / lam, shortened so the step lands exactly on ``final_time``."""
    if not lam > 0:
        raise ValueError(f"maximum wave speed must be positive, got {lam}")
    dt = cfl * dx / lam
    remaining = final_time - t
    if dt >= remaining or remaining - dt < 1e-12 * max(1.0, final_time):
        dt = remaining
    return dt


def ssprk3_step(u, dt: float, rhs: Callable, post_stage: Callable | None = None, before_stage: Callable | None = None):
    """Three-stage Shu-Osher SSPRK3 step.

    ``rhs(u)`` returns du/dt; ``post_stage(u, stage)`` may modify the stage
    value in place (limiting) and ``before_stage(u, stage)`` runs before each
    residual evaluation (sensor refresh).  Stages are numbered 1 to 3.
    """
    post = post_stage or (lambda v, s: None)
    pre = before_stage or (lambda v, s: None)
    pre(u, 1)
    u1 = u + dt * rhs(u)
    post(u1, 1)
    pre(u1, 2)
    u2 = 0.75 * u + 0.25 * (u1 + dt * rhs(u1))
    post(u2, 2)
    pre(u2, 3)
    u3 = u / 3.0 + 2.0 / 3.0 * (u2 + dt * rhs(u2))
    post(u3, 3)
    return u3


@dataclass
class RunLog:
    records: list = field(default_factory=list)
    path: str | None = None

    def append(self, record: dict):
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(record) + "\n")

    def column(self, key):
        return np.array([r[key] for r in self.records if key in r])


class Solver:
    """Ties a discretization, sensor policy and limiter into a time integrator.

    ``c_update(U)`` returns the per-element FR parameters for the current
    state; ``limiter(U, step, stage)`` limits in place and returns per-element
    theta.
    """

    def __init__(self, disc, c_update: Callable, limiter: Callable | None, c_plus: float):
        self.disc = disc
        self.c_update = c_update
        self.limiter = limiter
        self.c_plus = c_plus
        self.c = None
        self.steps = 0
        self.total_activations = 0
        self.max_c = 0.0

    def wavespeed(self, U) -> float:
        disc = self.disc
        lam = K.max_wavespeed(np.ascontiguousarray(U), disc.Vq, disc.d, disc.gamma)
        if lam < 0:
            raise PositivityError("inadmissible state while computing wavespeed")
        return lam

    def run(self, U0, config: TimeConfig, t0: float = 0.0, run_log: RunLog | None = None,
            callback: Callable | None = None):
        """Advance ``U0`` to ``config.final_time``; returns (U, t, log)."""
        disc = self.disc
        run_log = run_log if run_log is not None else RunLog()
        dx = reference_spacing(disc.mesh.extent, disc.mesh.dof(disc.p), disc.d)
        U = np.array(U0, dtype=float)
        t = t0
        lam0 = self.wavespeed(U)
        self.c = self.c_update(U)
        totals0 = disc.totals(U)
        step = 0
        activations = 0
        self.steps = 0
        self.total_activations = 0
        self.max_c = float(np.max(self.c))
        while t < config.final_time:
            if step >= config.max_steps:
                raise StepLimitExceeded(f"step guard {config.max_steps} exceeded at t={t:g}")
            lam = lam0 if config.cfl_mode == "initial" else self.wavespeed(U)
            dt = compute_dt(config.cfl, dx, lam, t, config.final_time)
            step += 1
            activations = 0
            current = [1]

            def before(v, stage):
                current[0] = stage
                if stage == 1 or config.sensor_update == "stage":
                    self.c = self.c_update(v)
                    self.max_c = max(self.max_c, float(np.max(self.c)))

            def post(v, stage):
                nonlocal activations
                if not np.all(np.isfinite(v)):
                    raise PositivityError(f"non-finite state (step {step}, stage {stage})", step=step, stage=stage)
                if self.limiter is not None:
                    theta = self.limiter(v, step, stage)
                    activations += int(np.count_nonzero(theta < 1.0))

            def rhs(v):
                try:
                    return disc.rhs(v, self.c)
                except PositivityError as err:
                    raise PositivityError(f"{err} (step {step}, stage {current[0]})", element=err.element,
                                          step=step, stage=current[0]) from err

            U = ssprk3_step(U, dt, rhs, post, before)
            self.steps = step
            self.total_activations += activations
            t = config.final_time if abs(config.final_time - t - dt) <= 1e-14 * config.final_time else t + dt
            if step % config.log_every == 0 or t >= config.final_time:
                tot = disc.totals(U)
                run_log.append({
                    "step": step,
                    "t": t,
                    "dt": dt,
                    "totals": tot.tolist(),
                    "entropy": disc.entropy_integral(U),
                    "limiter_activations": activations,
                    "limiter_activations_total": self.total_activations,
                    "max_eps": float(np.max(self.c) / self.c_plus) if self.c_plus > 0 else 0.0,
                    "max_c": float(np.max(self.c)),
                })
            if callback is not None:
                callback(U, t, step)
        self.c = self.c_update(U)
        log.info("reached t=%g in %d steps; mass drift %.3e", t, step,
                 float(abs(disc.totals(U)[0] - totals0[0]) / max(abs(totals0[0]), 1e-300)))
        return U, t, run_log
