"""Time integration of the coupled system with blow-up detection.

The cell equation is advanced by a conservative explicit finite-volume
step whose diffusive flux differences the antiderivative of the
diffusivity; the chemoattractant equation is advanced explicitly,
implicitly, or solved quasi-statically (eps = 0).  Interface fluxes
vanish at both walls, so the discrete mass of u and the discrete mean of
v are conserved to round-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .diffusion import ConstantDiffusion, DiffusionModel, PowerLawDiffusion
from .errors import EpsZeroError, SingularSystemError, StepRejectedError
from .model import DENSITY_FLOOR, Grid, Params, RunOutcome, State

V_SOLVERS = ("explicit", "implicit", "elliptic")

# Steps of sustained sup-norm growth that, at the dt floor, count as
# numerical blow-up.
GROWTH_WINDOW = 100


@dataclass(frozen=True)
class SolverConfig:
    """Numerical controls for a run.

    ``blowup_threshold = None`` resolves to ``1e6 * M`` at run time.
    ``output_stride`` is the number of accepted steps between diagnostic
    records.
    """

    cfl_safety: float = 0.4
    dt_init: float = 1e-6
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    t_end: float = 1.0
    blowup_threshold: float | None = None
    v_solver: str = "implicit"
    output_stride: int = 100

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.dt_min < self.dt_init <= self.dt_max:
            raise ValueError("need dt_min < dt_init <= dt_max")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.v_solver not in V_SOLVERS:
            raise ValueError(f"v_solver must be one of {V_SOLVERS}")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")

    def threshold(self, params: Params) -> float:
        thr = 1e6 * params.M if self.blowup_threshold is None else self.blowup_threshold
        if thr <= params.M:
            raise ValueError("blowup_threshold must exceed M")
        return thr


def check_v_solver(mode: str, params: Params) -> None:
    if mode not in V_SOLVERS:
        raise ValueError(f"unknown v_solver {mode!r}")
    if mode == "elliptic" and params.eps != 0.0:
        raise ValueError("elliptic v_solver requires eps = 0")
    if mode in ("explicit", "implicit") and params.eps == 0.0:
        raise EpsZeroError(f"{mode} v_solver requires eps > 0; use elliptic")


def _powerlaw_coeffs(model: DiffusionModel) -> tuple[float, float] | None:
    """(c1, p) for models the compiled power-law path can evaluate."""
    if isinstance(model, PowerLawDiffusion):
        return model.c1, model.p
    if isinstance(model, ConstantDiffusion):
        return model.value, 0.0
    return None


def u_flux(state: State, model: DiffusionModel, grid: Grid) -> np.ndarray:
    """Interface fluxes of the cell equation, n+1 values, walls zero.

    Reference (vectorised numpy) implementation of the same flux the
    compiled stepping kernels use: diffusive part from differences of the
    antiderivative of a, drift part upwinded by the sign of the v
    difference.
    """
    u, v, dx = state.u, state.v, grid.dx
    phi = model.a_antiderivative(u)
    dv = np.diff(v)
    u_up = np.where(dv > 0.0, u[:-1], u[1:])
    flux = np.zeros(grid.n + 1)
    flux[1:-1] = np.diff(phi) / dx - u_up * dv / dx
    return flux


def v_rhs(state: State, params: Params, grid: Grid) -> np.ndarray:
    """Discrete time derivative of v: (D lap(v) - gamma v + u - M) / eps."""
    if params.eps <= 0.0:
        raise EpsZeroError("v_rhs needs eps > 0; eps = 0 is the elliptic mode")
    lap = laplacian_neumann(state.v, grid.dx)
    return (params.D * lap - params.gamma * state.v + state.u - params.M) / params.eps


def laplacian_neumann(v: np.ndarray, dx: float) -> np.ndarray:
    """Three-point Laplacian with mirrored ghost cells."""
    padded = np.concatenate([v[:1], v, v[-1:]])
    return (padded[:-2] - 2.0 * v + padded[2:]) / (dx * dx)


def elliptic_v(state: State, params: Params, grid: Grid) -> np.ndarray:
    """Solve D lap(v) - gamma v = M - u for the quasi-static chemical.

    With gamma = 0 the Neumann system is singular; solvability needs the
    discrete compatibility sum(u - M) dx = 0, and the returned profile is
    pinned by mean-zero projection.
    """
    if params.eps != 0.0:
        raise ValueError("elliptic_v applies to the eps = 0 regime")
    if params.gamma == 0.0:
        defect = abs(state.mass - params.M)
        if defect > 1e-8 * max(1.0, params.M):
            raise SingularSystemError(
                f"gamma = 0 needs sum(u - M) dx = 0; defect {defect:.3e}"
            )
    v_out = np.empty(grid.n)
    _kernels.v_solve_elliptic(state.u, v_out, params.D, params.gamma,
                              params.M, grid.dx)
    return v_out


def step(state: State, params: Params, model: DiffusionModel, grid: Grid,
         dt: float, v_solver: str = "implicit") -> State:
    """Advance one accepted step of size dt and return the new state.

    Raises :class:`StepRejectedError` when the update produces densities
    below the floor or non-finite values; callers should halve dt.
    """
    check_v_solver(v_solver, params)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    u, v, dx = state.u, state.v, grid.dx
    n = grid.n
    phi = np.empty(n)
    u_out = np.empty(n)
    v_out = np.empty(n)
    pl = _powerlaw_coeffs(model)
    if pl is not None:
        c1, p = pl
        _kernels.prep_powerlaw(u, v, phi, c1, p, dx)
    else:
        phi[:] = model.a_antiderivative(u)
    mn, mx, tot = _kernels.advance_u(u, v, phi, u_out, dx, dt)
    _check_accept(mn, mx, tot, dt)
    if v_solver == "implicit":
        ssq = _kernels.v_step_implicit(u_out, v, v_out, params.eps, params.D,
                                       params.gamma, params.M, dx, dt)
    elif v_solver == "explicit":
        ssq = _kernels.v_step_explicit(u, v, v_out, params.eps, params.D,
                                       params.gamma, params.M, dx, dt)
    else:
        ssq = _kernels.v_solve_elliptic(u_out, v_out, params.D, params.gamma,
                                        params.M, dx)
    if not math.isfinite(ssq):
        raise StepRejectedError(f"chemical solve produced non-finite values at dt={dt:.3e}")
    u_out[(u_out < 0.0) & (u_out >= DENSITY_FLOOR)] = 0.0
    return State(t=state.t + dt, u=u_out, v=v_out)


def _check_accept(mn: float, mx: float, tot: float, dt: float) -> None:
    if not (math.isfinite(tot) and math.isfinite(mx)):
        raise StepRejectedError(f"non-finite density at dt={dt:.3e}")
    if mn < DENSITY_FLOOR:
        raise StepRejectedError(
            f"density fell to {mn:.3e} (< floor {DENSITY_FLOOR:.0e}) at dt={dt:.3e}"
        )


def stable_dt(state: State, params: Params, model: DiffusionModel,
              grid: Grid, config: SolverConfig) -> float:
    """CFL step: cfl * min(dx^2 / (2 max abar), dx / max|dv/dx|, and for
    the explicit chemical mode eps dx^2 / (2 D)), clamped to
    [dt_min, dt_max].  abar is the interface secant |dPhi/du| with a(u)
    as the flat-pair fallback."""
    dt = _cfl_dt(state.u, state.v, model, grid.dx, params, config)
    return min(max(dt, config.dt_min), config.dt_max)


def _cfl_dt(u, v, model, dx, params, config) -> float:
    phi = np.empty(u.size)
    pl = _powerlaw_coeffs(model)
    if pl is not None:
        amax, vmax = _kernels.prep_powerlaw(u, v, phi, pl[0], pl[1], dx)
    else:
        phi[:] = model.a_antiderivative(u)
        amax, vmax = _kernels.prep_generic(u, v, phi, model.a(u), dx)
    dt = dx * dx / (2.0 * amax) if amax > 0.0 else math.inf
    if vmax > 0.0:
        dt = min(dt, dx / vmax)
    if config.v_solver == "explicit":
        dt = min(dt, params.eps * dx * dx / (2.0 * params.D))
    return config.cfl_safety * dt


class _GrowthMonitor:
    """Ring buffer of recent sup norms; detects a full window of
    monotone growth."""

    def __init__(self, window: int = GROWTH_WINDOW):
        self.window = window
        self.ring = np.empty(window + 1)
        self.count = 0
        self.streak = 0
        self.prev = -math.inf

    def push(self, sup: float) -> None:
        if sup >= self.prev:
            self.streak += 1
        else:
            self.streak = 0
        self.ring[self.count % (self.window + 1)] = sup
        self.count += 1
        self.prev = sup

    def growing(self) -> bool:
        if self.count <= self.window or self.streak < self.window:
            return False
        oldest = self.ring[self.count % (self.window + 1)]
        return self.prev > oldest


def run(initial: State, params: Params, model: DiffusionModel, grid: Grid,
        config: SolverConfig, *, qs: tuple[float, ...] = (3.0,),
        table=None, track_subsolution: bool = False):
    """Advance until the horizon, a detected blow-up, or a dt underflow.

    Returns ``(RunOutcome, DiagnosticsSeries)``.  Blow-up is declared
    when the sup norm of u crosses the configured threshold, or when the
    time step is pinned at dt_min while the sup norm grew monotonically
    over the last ``GROWTH_WINDOW`` accepted steps.

    Parameters
    ----------
    qs : tuple of float
        Moment exponents tracked in the diagnostics records.
    table : EntropyTable, optional
        Reused entropy table; built from the model when omitted.
    track_subsolution : bool
        Co-integrate the barrier subsolution of the cumulative chemical
        profile (requires eps > 0).
    """
    from .diagnostics import DiagnosticsCollector, SubsolutionTracker

    check_v_solver(config.v_solver, params)
    threshold = config.threshold(params)
    mode = config.v_solver
    dx = grid.dx
    n = grid.n

    tracker = None
    if track_subsolution:
        if params.eps <= 0.0:
            raise EpsZeroError("subsolution tracking requires eps > 0")
        tracker = SubsolutionTracker(initial, params, grid)
    collector = DiagnosticsCollector(params, model, grid, qs=qs, table=table,
                                     stride=config.output_stride, tracker=tracker)

    u = initial.u.copy()
    v = initial.v.copy()
    t = float(initial.t)
    t_end = config.t_end
    pl = _powerlaw_coeffs(model)
    phi = np.empty(n)
    u_new = np.empty(n)
    v_new = np.empty(n)
    monitor = _GrowthMonitor()
    collector.start(t, u, v)

    k = 0
    reason = "horizon-reached"
    horizon_tol = 1e-12 * max(1.0, t_end)
    while t < t_end - horizon_tol:
        if pl is not None:
            amax, vmax = _kernels.prep_powerlaw(u, v, phi, pl[0], pl[1], dx)
        else:
            phi[:] = model.a_antiderivative(u)
            amax, vmax = _kernels.prep_generic(u, v, phi, model.a(u), dx)
        dt = dx * dx / (2.0 * amax) if amax > 0.0 else math.inf
        if vmax > 0.0:
            dt = min(dt, dx / vmax)
        if mode == "explicit":
            dt = min(dt, params.eps * dx * dx / (2.0 * params.D))
        dt = min(config.cfl_safety * dt, config.dt_max)
        if k == 0:
            dt = min(dt, config.dt_init)
        at_floor = dt <= config.dt_min
        dt = max(dt, config.dt_min)
        dt = min(dt, t_end - t)

        # attempt the step, halving on rejection
        while True:
            mn, mx, tot = _kernels.advance_u(u, v, phi, u_new, dx, dt)
            ok = math.isfinite(tot) and math.isfinite(mx) and mn >= DENSITY_FLOOR
            if ok:
                if mode == "implicit":
                    ssq = _kernels.v_step_implicit(u_new, v, v_new, params.eps,
                                                   params.D, params.gamma,
                                                   params.M, dx, dt)
                elif mode == "explicit":
                    ssq = _kernels.v_step_explicit(u, v, v_new, params.eps,
                                                   params.D, params.gamma,
                                                   params.M, dx, dt)
                else:
                    ssq = _kernels.v_solve_elliptic(u_new, v_new, params.D,
                                                    params.gamma, params.M, dx)
                ok = math.isfinite(ssq)
            if ok:
                break
            dt *= 0.5
            at_floor = True
            if dt < config.dt_min:
                reason = "blowup-detected" if monitor.growing() else "dt-underflow"
                outcome = RunOutcome(reason, t, float(np.max(u)), k)
                series = collector.finish(t, u, v, outcome)
                return outcome, series

        neg = (u_new < 0.0) & (u_new >= DENSITY_FLOOR)
        if np.any(neg):
            u_new[neg] = 0.0
        u, u_new = u_new, u
        v, v_new = v_new, v
        t += dt
        k += 1
        sup = mx
        monitor.push(sup)
        if tracker is not None:
            tracker.advance(dt, mode)
        collector.on_step(k, t, dt, u, v, params.eps * ssq)

        if sup > threshold:
            reason = "blowup-detected"
            break
        if at_floor and monitor.growing():
            reason = "blowup-detected"
            break

    outcome = RunOutcome(reason, t, float(np.max(u)), k)
    series = collector.finish(t, u, v, outcome)
    return outcome, series
