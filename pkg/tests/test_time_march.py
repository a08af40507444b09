import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afr.cases import get_case
from afr.euler import PositivityError
from afr.harness import CaseConfig, build_simulation, run_simulation
from afr.time_march import (
    RunLog,
    StepLimitExceeded,
    TimeConfig,
    compute_dt,
    reference_spacing,
    ssprk3_step,
)


def decay(u):
    return -u


def test_ssprk3_single_step_value():
    u = ssprk3_step(np.array([1.0]), 0.1, decay)
    assert u[0] == pytest.approx(1 - 0.1 + 0.005 - 0.1**3 / 6, abs=1e-15)
    assert u[0] == pytest.approx(0.9048333333, abs=1e-10)


def test_ssprk3_third_order():
    def error(n):
        u = np.array([1.0])
        for _ in range(n):
            u = ssprk3_step(u, 1.0 / n, decay)
        return abs(u[0] - math.exp(-1.0))

    errs = [error(n) for n in (10, 20, 40, 80)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(7.5 < r < 8.5 for r in ratios)


def test_zero_rhs_unchanged():
    u = np.random.default_rng(0).random((3, 4))
    out = ssprk3_step(u, 0.7, np.zeros_like)
    assert np.array_equal(out, u)


def test_stage_hooks_order():
    calls = []
    ssprk3_step(np.ones(2), 0.1, decay, post_stage=lambda v, s: calls.append(("post", s)),
                before_stage=lambda v, s: calls.append(("pre", s)))
    assert calls == [("pre", 1), ("post", 1), ("pre", 2), ("post", 2), ("pre", 3), ("post", 3)]


def test_reference_spacing_leblanc():
    mesh = get_case("leblanc").mesh("900")
    assert mesh.dof(3) == 3600
    assert reference_spacing(mesh.extent, mesh.dof(3), 1) == pytest.approx(20 / 3600, rel=1e-15)
    pulse = get_case("gaussian-pulse").mesh("16")
    assert reference_spacing(pulse.extent, pulse.dof(2), 2) == pytest.approx(1 / 48, rel=1e-14)


def test_compute_dt_examples():
    assert compute_dt(0.5, 0.1, 1.0) == pytest.approx(0.05, rel=1e-15)
    assert compute_dt(0.5, 0.1, 1.0, t=0.97, final_time=1.0) == pytest.approx(0.03, rel=1e-12)
    with pytest.raises(ValueError):
        compute_dt(0.5, 0.1, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 2.0), st.floats(1e-4, 1.0), st.floats(1e-2, 1e5))
def test_dt_linear_in_cfl(cfl, dx, lam):
    assert compute_dt(cfl / 2, dx, lam) == compute_dt(cfl, dx, lam) / 2
    assert compute_dt(cfl, dx, lam) <= compute_dt(cfl * 1.5, dx, lam)


def test_time_config_validation():
    for kw in ({"cfl": 0.0, "final_time": 1.0}, {"cfl": 0.1, "final_time": -1.0},
               {"cfl": 0.1, "final_time": 1.0, "sensor_update": "never"},
               {"cfl": 0.1, "final_time": 1.0, "cfl_mode": "fixed"},
               {"cfl": 0.1, "final_time": 1.0, "max_steps": 0}):
        with pytest.raises(ValueError):
            TimeConfig(**kw)


def test_pulse_mass_conserved_and_lands_on_T():
    cfg = CaseConfig(case="gaussian-pulse", scheme="afr", p=2, grid="16", cfl=0.2, final_time=1.0, log_every=50)
    result = run_simulation(build_simulation(cfg))
    assert result.completed and result.t == 1.0
    totals = result.log.column("totals")
    sim0 = build_simulation(cfg)
    m0 = sim0.disc.totals(sim0.U0)
    drift = np.abs(totals - m0) / np.abs(m0)
    assert drift[:, 0].max() <= 1e-12
    assert drift.max() <= 1e-12
    steps = result.log.column("step")
    assert np.all(np.diff(steps) > 0)
    assert np.all(result.log.column("dt") > 0)


def test_step_guard():
    cfg = CaseConfig(case="density-wave", scheme="dg", p=2, grid="8", cfl=0.1, final_time=1.0, max_steps=3)
    sim = build_simulation(cfg)
    with pytest.raises(StepLimitExceeded):
        run_simulation(sim, raise_on_failure=True)


def test_positivity_abort_reports_stage():
    cfg = CaseConfig(case="leblanc", scheme="dg", p=3, grid="40", cfl=0.5, final_time=1e-4, limiter=False)
    result = run_simulation(build_simulation(cfg), raise_on_failure=False)
    assert not result.completed
    assert "element" in result.failure and "step 1" in result.failure and "stage" in result.failure
    with pytest.raises(PositivityError) as err:
        run_simulation(build_simulation(cfg), raise_on_failure=True)
    assert err.value.step == 1 and err.value.stage in (1, 2, 3) and err.value.element is not None


def test_run_log_ndjson(tmp_path):
    path = tmp_path / "log.ndjson"
    log = RunLog(path=str(path))
    log.append({"step": 1, "t": 0.1})
    log.append({"step": 2, "t": 0.2})
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and '"step": 2' in lines[1]
    np.testing.assert_array_equal(log.column("t"), [0.1, 0.2])
