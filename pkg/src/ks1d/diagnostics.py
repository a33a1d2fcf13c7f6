"""Functionals tracked along trajectories.

Everything the analysis gives us is computable from a state snapshot:
the Liapunov (free-energy) functional and its dissipation, the cumulative
mass/chemical profiles, the q-moments of the cumulative mass whose
evolution obeys an exact virial-type identity, and the barrier
subsolution bounding the cumulative chemical profile from below.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .diffusion import DiffusionModel, EntropyTable
from .errors import ComparisonViolatedError, EpsZeroError, QOutOfRangeError
from .model import Grid, Params, RunOutcome, State


@dataclass(frozen=True)
class CumulativeState:
    """Node values of U(x) = int_0^x u and V(x) = int_0^x v.

    U(0) = 0 and U(1) = M; V(0) = V(1) = 0 since v has zero mean.  Both
    are exact integrals of the piecewise-constant cell data.
    """

    U: np.ndarray
    V: np.ndarray


def cumulative(state: State, grid: Grid) -> CumulativeState:
    """Cumulative profiles at the n+1 cell edges."""
    dx = grid.dx
    U = np.concatenate([[0.0], np.cumsum(state.u) * dx])
    V = np.concatenate([[0.0], np.cumsum(state.v) * dx])
    return CumulativeState(U=U, V=V)


def _centered_gradient(v: np.ndarray, dx: float) -> np.ndarray:
    """Centered differences with mirrored (Neumann) ghost cells."""
    padded = np.concatenate([v[:1], v, v[-1:]])
    return (padded[2:] - padded[:-2]) / (2.0 * dx)


def liapunov(state: State, table: EntropyTable, params: Params, grid: Grid) -> float:
    """Free energy int(b(u) - u v + D/2 |v_x|^2 + gamma/2 v^2) dx.

    Midpoint rule on cell values; the v gradient uses centered
    differences consistent with the no-flux walls.  Along solutions this
    functional is non-increasing and bounded below by -M^2 / (2 D).
    """
    u, v, dx = state.u, state.v, grid.dx
    grad = _centered_gradient(v, dx)
    b_u = np.atleast_1d(table.entropy(u))
    integrand = b_u - u * v + 0.5 * params.D * grad**2 + 0.5 * params.gamma * v**2
    return float(np.sum(integrand) * dx)


def liapunov_lower_bound(params: Params) -> float:
    """-M^2 / (2 D), the one-dimensional floor of the free energy."""
    return -params.M**2 / (2.0 * params.D)


def dissipation_rate(state: State, params: Params, grid: Grid) -> float:
    """eps * ||dv/dt||_2^2 with dv/dt taken from the discrete v equation."""
    if params.eps <= 0.0:
        raise EpsZeroError("dissipation rate needs eps > 0")
    from .solver import v_rhs

    rate = v_rhs(state, params, grid)
    return params.eps * float(np.sum(rate**2) * grid.dx)


def cumulative_moment(cum: CumulativeState, q: float, grid: Grid) -> float:
    """q-moment ||U||_q^q / q of the cumulative mass profile, by the
    trapezoid rule on node values.  Strictly positive on valid states
    since U(1) = M > 0."""
    if q < 2.0:
        raise QOutOfRangeError(f"moment exponent must be >= 2, got {q}")
    return float(np.trapezoid(cum.U**q, dx=grid.dx)) / q


def h1_norm(v: np.ndarray, grid: Grid) -> float:
    """(sum v^2 dx + sum (dv/dx)^2 dx)^(1/2), forward differences on the
    interior interfaces."""
    v = np.asarray(v, dtype=float)
    dx = grid.dx
    grad = np.diff(v) / dx
    return math.sqrt(float(np.sum(v**2) * dx + np.sum(grad**2) * dx))


class VirialBreakdown(NamedTuple):
    """Right side of the moment identity and its six constituents."""

    total: float
    feedback: float        # (M/D) m_q
    offset: float          # -M^(q+1) / (q (q+1) D)
    wall_flux: float       # M^(q-1) A(u(1))
    bulk_diffusion: float  # -(q-1) int U^(q-2) u A(u)
    chemical_lag: float    # (eps/(q D)) int U^q dv/dt
    decay_coupling: float  # -(gamma/D) int U^(q-1) u V


def virial_rhs(state: State, cum: CumulativeState, model: DiffusionModel,
               params: Params, grid: Grid, q: float,
               dvdt: np.ndarray | None = None) -> VirialBreakdown:
    """Evaluate the exact rate of change of the q-moment of U.

    The identity reads

        dm_q/dt = (M/D) m_q - M^(q+1)/(q(q+1)D) + M^(q-1) A(u(1))
                  - (q-1) int U^(q-2) u A(u) dx
                  + (eps/(qD)) int U^q dv/dt dx
                  - (gamma/D) int U^(q-1) u V dx

    with A the flux primitive.  Node profiles are averaged to cell
    midpoints (exact for the piecewise-linear U, V); the wall density
    u(1) is the last cell average.  ``dvdt`` defaults to the discrete v
    residual when eps > 0 and drops out when eps = 0.
    """
    if q < 2.0:
        raise QOutOfRangeError(f"moment exponent must be >= 2, got {q}")
    u, dx = state.u, grid.dx
    M, D, eps, gamma = params.M, params.D, params.eps, params.gamma
    mid_U = 0.5 * (cum.U[:-1] + cum.U[1:])
    A_u = np.atleast_1d(model.flux_primitive(u))

    mq = cumulative_moment(cum, q, grid)
    feedback = (M / D) * mq
    offset = -(M ** (q + 1.0)) / (q * (q + 1.0) * D)
    wall_flux = M ** (q - 1.0) * float(A_u[-1])
    bulk = -(q - 1.0) * float(np.sum(mid_U ** (q - 2.0) * u * A_u) * dx)
    if eps > 0.0:
        if dvdt is None:
            from .solver import v_rhs

            dvdt = v_rhs(state, params, grid)
        lag = (eps / (q * D)) * float(np.sum(mid_U**q * dvdt) * dx)
    else:
        lag = 0.0
    if gamma > 0.0:
        mid_V = 0.5 * (cum.V[:-1] + cum.V[1:])
        coupling = -(gamma / D) * float(np.sum(mid_U ** (q - 1.0) * u * mid_V) * dx)
    else:
        coupling = 0.0
    total = feedback + offset + wall_flux + bulk + lag + coupling
    return VirialBreakdown(total, feedback, offset, wall_flux, bulk, lag, coupling)


# ---------------------------------------------------------------------------
# barrier subsolution of the cumulative chemical profile


class SubsolutionTracker:
    """Co-integrates the barrier V_m = (M/6D)(x^3 - x) + h alongside a run.

    h solves eps h_t = D h_xx - gamma h with h = 0 at both walls and
    h(0) = min(V(0) + (M/6D)(x - x^3), 0) <= 0, so the comparison
    principle gives V >= V_m for all times.  The wall-to-wall gradient of
    h stays bounded by ||v0||_inf + M/(3D).
    """

    def __init__(self, state0: State, params: Params, grid: Grid):
        if params.eps <= 0.0:
            raise EpsZeroError("subsolution barrier requires eps > 0")
        self.params = params
        self.grid = grid
        nodes = grid.nodes()
        cum0 = cumulative(state0, grid)
        self.barrier = (params.M / (6.0 * params.D)) * (nodes**3 - nodes)
        self.h = np.minimum(cum0.V + (params.M / (6.0 * params.D)) * (nodes - nodes**3), 0.0)
        self.h[0] = 0.0
        self.h[-1] = 0.0
        self._h_new = np.empty_like(self.h)
        self.v0_inf = float(np.max(np.abs(state0.v)))
        self.grad_bound = self.v0_inf + params.M / (3.0 * params.D)

    def advance(self, dt: float, mode: str) -> None:
        p, dx = self.params, self.grid.dx
        if mode == "explicit":
            _kernels.h_step_explicit(self.h, self._h_new, p.eps, p.D, p.gamma, dx, dt)
        else:
            _kernels.h_step_implicit(self.h, self._h_new, p.eps, p.D, p.gamma, dx, dt)
        self.h, self._h_new = self._h_new, self.h

    def gap(self, V: np.ndarray) -> float:
        """min(V - V_m) over the nodes; negative values violate the barrier."""
        return float(np.min(V - self.barrier - self.h))

    def grad_h_max(self) -> float:
        return float(np.max(np.abs(np.diff(self.h)))) / self.grid.dx


@dataclass(frozen=True)
class SubsolutionReport:
    min_gap: float
    max_grad_h: float
    grad_bound: float
    n_records: int


def subsolution_check(series: "DiagnosticsSeries", params: Params,
                      tol: float = 1e-6) -> SubsolutionReport:
    """Verify V >= V_m - tol and the gradient bound on a recorded run.

    The barrier comparison is a theorem for the continuum system, so a
    violation beyond tolerance signals a scheme defect.
    """
    if series.barrier_gap is None:
        raise ValueError("run was not tracked with track_subsolution=True")
    min_gap = float(np.min(series.barrier_gap))
    max_grad = float(np.max(series.grad_h_max))
    bound = series.grad_h_bound
    if min_gap < -tol:
        raise ComparisonViolatedError(
            f"cumulative chemical profile undershoots its barrier by {-min_gap:.3e}"
        )
    if max_grad > bound + tol:
        raise ComparisonViolatedError(
            f"barrier gradient {max_grad:.6g} exceeds bound {bound:.6g}"
        )
    return SubsolutionReport(min_gap, max_grad, bound, len(series.t))


# ---------------------------------------------------------------------------
# per-run record series


@dataclass
class DiagnosticsSeries:
    """Arrays of per-record scalars, one entry per diagnostic record.

    ``mq``, ``virial_lhs``, ``virial_rhs`` map each tracked exponent q to
    its array.  ``virial_lhs`` is the centered time difference of m_q
    across the accepted steps adjacent to the record (NaN where no
    neighbours exist); keeping it independent of the scheme's internal
    fluxes makes the identity check a genuine cross-validation.
    """

    qs: tuple[float, ...]
    t: np.ndarray
    mass: np.ndarray
    v_mean: np.ndarray
    L: np.ndarray
    diss_cum: np.ndarray
    sup_u: np.ndarray
    h1_v: np.ndarray
    mq: dict[float, np.ndarray]
    virial_lhs: dict[float, np.ndarray]
    virial_rhs: dict[float, np.ndarray]
    barrier_gap: np.ndarray | None
    grad_h_max: np.ndarray | None
    grad_h_bound: float | None
    final_state: State
    outcome: RunOutcome | None

    def __len__(self) -> int:
        return self.t.size

    def columns(self) -> list[tuple[str, np.ndarray]]:
        cols: list[tuple[str, np.ndarray]] = [
            ("t", self.t), ("mass", self.mass), ("v_mean", self.v_mean),
            ("L", self.L), ("diss_cum", self.diss_cum),
        ]
        cols += [(f"mq_q{q:g}", self.mq[q]) for q in self.qs]
        cols += [(f"virial_lhs_q{q:g}", self.virial_lhs[q]) for q in self.qs]
        cols += [(f"virial_rhs_q{q:g}", self.virial_rhs[q]) for q in self.qs]
        cols += [("sup_u", self.sup_u), ("h1_v", self.h1_v)]
        return cols

    def to_csv(self, path) -> None:
        """One row per record; header row mandatory."""
        cols = self.columns()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([name for name, _ in cols])
            for i in range(len(self)):
                writer.writerow([repr(float(arr[i])) for _, arr in cols])


class DiagnosticsCollector:
    """Accumulates records during a run; owned by :func:`ks1d.solver.run`."""

    def __init__(self, params: Params, model: DiffusionModel, grid: Grid, *,
                 qs: tuple[float, ...] = (3.0,), table: EntropyTable | None = None,
                 stride: int = 100, tracker: SubsolutionTracker | None = None):
        for q in qs:
            if q < 2.0:
                raise QOutOfRangeError(f"tracked exponents must be >= 2, got {q}")
        self.params = params
        self.model = model
        self.grid = grid
        self.qs = tuple(qs)
        self.table = table if table is not None else EntropyTable(model)
        self.stride = stride
        self.tracker = tracker
        self._virial_available = model.tail_integrable
        self.diss_cum = 0.0
        self._rows: list[dict] = []
        self._mq_hist: dict[int, tuple[float, np.ndarray]] = {}
        self._pending: tuple[int, int] | None = None  # (row index, record step)
        self._recorded_step = -1

    # -- helpers -----------------------------------------------------------

    def _mq_vec(self, u: np.ndarray) -> np.ndarray:
        U = np.concatenate([[0.0], np.cumsum(u) * self.grid.dx])
        dx = self.grid.dx
        return np.array([float(np.trapezoid(U**q, dx=dx)) / q for q in self.qs])

    def _near_record(self, k: int) -> bool:
        rem = k % self.stride
        return rem == 0 or rem == 1 or rem == self.stride - 1

    def _push_mq(self, k: int, t: float, u: np.ndarray) -> None:
        self._mq_hist[k] = (t, self._mq_vec(u))
        for key in [key for key in self._mq_hist if key < k - 2]:
            del self._mq_hist[key]

    def _record(self, k: int, t: float, u: np.ndarray, v: np.ndarray) -> None:
        state = State(t=t, u=u, v=v)
        cum = cumulative(state, self.grid)
        row: dict = {
            "t": t,
            "mass": state.mass,
            "v_mean": state.v_mean,
            "L": liapunov(state, self.table, self.params, self.grid),
            "diss_cum": self.diss_cum,
            "sup_u": state.sup_u,
            "h1_v": h1_norm(v, self.grid),
        }
        entry = self._mq_hist.get(k)
        mqv = entry[1] if entry is not None else self._mq_vec(u)
        dvdt = None
        if self.params.eps > 0.0:
            from .solver import v_rhs

            dvdt = v_rhs(state, self.params, self.grid)
        for i, q in enumerate(self.qs):
            row[f"mq{i}"] = float(mqv[i])
            if self._virial_available:
                row[f"rhs{i}"] = virial_rhs(state, cum, self.model, self.params,
                                            self.grid, q, dvdt=dvdt).total
            else:
                row[f"rhs{i}"] = math.nan
            row[f"lhs{i}"] = math.nan
        if self.tracker is not None:
            row["gap"] = self.tracker.gap(cum.V)
            row["grad_h"] = self.tracker.grad_h_max()
        self._rows.append(row)
        self._recorded_step = k
        if (k - 1) in self._mq_hist:
            self._pending = (len(self._rows) - 1, k)
        else:
            self._pending = None

    def _finalize_pending(self, k: int) -> None:
        if self._pending is None:
            return
        row_idx, k_rec = self._pending
        if k != k_rec + 1:
            return
        before = self._mq_hist.get(k_rec - 1)
        after = self._mq_hist.get(k)
        if before is not None and after is not None:
            t0, m0 = before
            t1, m1 = after
            lhs = (m1 - m0) / (t1 - t0)
            for i in range(len(self.qs)):
                self._rows[row_idx][f"lhs{i}"] = float(lhs[i])
        self._pending = None

    # -- protocol driven by the run loop ------------------------------------

    def start(self, t: float, u: np.ndarray, v: np.ndarray) -> None:
        self._push_mq(0, t, u)
        self._record(0, t, u, v)
        self._pending = None

    def on_step(self, k: int, t: float, dt: float, u: np.ndarray,
                v: np.ndarray, rate: float) -> None:
        """Called after every accepted step; ``rate`` is eps ||dv/dt||^2
        for the step just taken (its time integral is exact for the
        piecewise-constant discrete rate)."""
        self.diss_cum += dt * rate
        if self._near_record(k):
            self._push_mq(k, t, u)
        self._finalize_pending(k)
        if k % self.stride == 0:
            self._record(k, t, u, v)

    def finish(self, t: float, u: np.ndarray, v: np.ndarray,
               outcome: RunOutcome) -> DiagnosticsSeries:
        if self._recorded_step != outcome.steps:
            self._push_mq(outcome.steps, t, u)
            self._record(outcome.steps, t, u, v)
        rows = self._rows
        get = lambda key: np.array([row[key] for row in rows])
        series = DiagnosticsSeries(
            qs=self.qs,
            t=get("t"), mass=get("mass"), v_mean=get("v_mean"), L=get("L"),
            diss_cum=get("diss_cum"), sup_u=get("sup_u"), h1_v=get("h1_v"),
            mq={q: get(f"mq{i}") for i, q in enumerate(self.qs)},
            virial_lhs={q: get(f"lhs{i}") for i, q in enumerate(self.qs)},
            virial_rhs={q: get(f"rhs{i}") for i, q in enumerate(self.qs)},
            barrier_gap=get("gap") if self.tracker is not None else None,
            grad_h_max=get("grad_h") if self.tracker is not None else None,
            grad_h_bound=self.tracker.grad_bound if self.tracker is not None else None,
            final_state=State(t=t, u=u, v=v),
            outcome=outcome,
        )
        return series


# ---------------------------------------------------------------------------
# refinement study of the moment identity


def virial_residual_study(params: Params, model: DiffusionModel,
                          initial_factory: Callable[[Grid], State],
                          q: float, grid_sizes=(64, 128, 256, 512),
                          t_probe: float = 0.1, dt_factor: float = 0.25):
    """Measure |d m_q/dt - identity right side| at t_probe under grid
    refinement with dt proportional to dx^2 (explicit chemical updates,
    so the discrete v rate is the exact step rate).

    Returns (sizes, residuals, order); ``order`` is the least-squares
    slope of log residual against log dx.
    """
    from .solver import step

    if params.eps <= 0.0:
        raise EpsZeroError("the refinement study runs the explicit v mode")
    residuals = []
    for n in grid_sizes:
        grid = Grid(n)
        state = initial_factory(grid)
        dt = t_probe / math.ceil(t_probe / (dt_factor * grid.dx**2))
        n_steps = round(t_probe / dt)
        for _ in range(n_steps - 1):
            state = step(state, params, model, grid, dt, v_solver="explicit")
        state_prev = state
        state_mid = step(state_prev, params, model, grid, dt, v_solver="explicit")
        state_next = step(state_mid, params, model, grid, dt, v_solver="explicit")
        m_prev = cumulative_moment(cumulative(state_prev, grid), q, grid)
        m_next = cumulative_moment(cumulative(state_next, grid), q, grid)
        lhs = (m_next - m_prev) / (state_next.t - state_prev.t)
        rhs = virial_rhs(state_mid, cumulative(state_mid, grid), model, params,
                         grid, q).total
        residuals.append(abs(lhs - rhs))
    residuals = np.array(residuals)
    sizes = np.asarray(grid_sizes, dtype=float)
    if np.all(residuals < 1e-12):
        order = math.inf
    else:
        slope = np.polyfit(np.log(sizes), np.log(np.maximum(residuals, 1e-300)), 1)[0]
        order = -float(slope)
    return sizes, residuals, order
