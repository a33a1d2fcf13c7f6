"""Verification battery: runs a configuration and checks every monotone
or conserved quantity, the moment-identity refinement order, and the
barrier subsolution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .diagnostics import liapunov_lower_bound, virial_residual_study
from .initial_data import build_initial_state
from .solver import run


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class VerifyReport:
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(check.ok for check in self.checks)

    def lines(self) -> list[str]:
        return [
            f"[{'PASS' if c.ok else 'FAIL'}] {c.name}: {c.detail}"
            for c in self.checks
        ]


def run_verification(cfg: RunConfig,
                     refinement_sizes=(64, 128, 256, 512)) -> VerifyReport:
    """Execute the full battery for one configuration."""
    checks: list[CheckResult] = []
    params = cfg.params
    model = cfg.diffusion.build()
    state0 = build_initial_state(cfg.initial, params, cfg.grid)
    track = params.eps > 0.0
    outcome, series = run(state0, params, model, cfg.grid, cfg.solver,
                          qs=cfg.qs, track_subsolution=track)

    # conservation
    mass_drift = float(np.max(np.abs(series.mass - params.M)))
    mass_tol = 1e-10 * max(1.0, params.M)
    checks.append(CheckResult(
        "mass-conservation", mass_drift <= mass_tol,
        f"max drift {mass_drift:.3e} (tol {mass_tol:.1e})"))
    vmean_drift = float(np.max(np.abs(series.v_mean)))
    checks.append(CheckResult(
        "chemical-mean", vmean_drift <= 1e-10,
        f"max |mean v| {vmean_drift:.3e} (tol 1e-10)"))
    min_u = float(np.min(series.final_state.u))
    checks.append(CheckResult(
        "non-negativity", min_u >= -1e-13,
        f"final min u {min_u:.3e} (floor -1e-13)"))

    # free energy
    L = series.L
    steps_ok = np.all(np.diff(L) <= 1e-6 * (1.0 + np.abs(L[:-1])))
    worst = float(np.max(np.diff(L) - 1e-6 * (1.0 + np.abs(L[:-1]))))
    checks.append(CheckResult(
        "free-energy-monotone", bool(steps_ok),
        f"worst step excess {worst:.3e}"))
    floor = liapunov_lower_bound(params)
    lowest = float(np.min(L))
    checks.append(CheckResult(
        "free-energy-floor", lowest >= floor - 1e-8,
        f"min L {lowest:.6g} >= {floor:.6g} - 1e-8"))
    diss_excess = float(np.max(L + series.diss_cum - L[0]))
    diss_tol = 1e-4 * (1.0 + abs(float(L[0])))
    checks.append(CheckResult(
        "dissipation-inequality", diss_excess <= diss_tol,
        f"max excess {diss_excess:.3e} (tol {diss_tol:.1e})"))

    # moment identity refinement
    if params.eps <= 0.0:
        checks.append(CheckResult(
            "virial-order", True, "skipped (explicit mode needs eps > 0)"))
    elif not model.tail_integrable:
        checks.append(CheckResult(
            "virial-order", True, "skipped (flux primitive needs p > 1)"))
    else:
        q = cfg.qs[0] if cfg.qs else 3.0
        t_probe = min(0.1, 0.5 * cfg.solver.t_end)
        sizes, residuals, order = virial_residual_study(
            params, model,
            lambda grid: build_initial_state(cfg.initial, params, grid),
            q=max(q, 2.0), grid_sizes=refinement_sizes, t_probe=t_probe)
        if np.all(residuals < 1e-10):
            checks.append(CheckResult(
                "virial-order", True,
                f"residuals below 1e-10 at all sizes (max {residuals.max():.2e})"))
        else:
            checks.append(CheckResult(
                "virial-order", order >= 1.0,
                f"measured order {order:.2f} over n = {list(map(int, sizes))}, "
                f"residuals {[f'{r:.2e}' for r in residuals]}"))

    # barrier subsolution
    if series.barrier_gap is None:
        checks.append(CheckResult(
            "barrier-subsolution", True, "skipped (eps = 0)"))
    else:
        min_gap = float(np.min(series.barrier_gap))
        max_grad = float(np.max(series.grad_h_max))
        bound = series.grad_h_bound
        ok = min_gap >= -1e-6 and max_grad <= bound + 1e-6
        checks.append(CheckResult(
            "barrier-subsolution", ok,
            f"min gap {min_gap:.3e} (tol -1e-6), grad {max_grad:.4g} "
            f"<= {bound:.4g} + 1e-6"))

    return VerifyReport(tuple(checks))
