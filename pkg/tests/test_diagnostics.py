import csv
import dataclasses
import math

import numpy as np
import pytest

import ks1d
from ks1d import (
    Grid,
    Params,
    SolverConfig,
    State,
    SubsolutionTracker,
    cumulative,
    cumulative_moment,
    dissipation_rate,
    h1_norm,
    liapunov,
    liapunov_lower_bound,
    run,
    subsolution_check,
    validate_initial,
    virial_residual_study,
    virial_rhs,
)
from ks1d.errors import ComparisonViolatedError, EpsZeroError, QOutOfRangeError


def make_state(u, v, t=0.0):
    return State(t=t, u=np.asarray(u, dtype=float), v=np.asarray(v, dtype=float))


def neumann_eigenvalue(dx):
    return 2.0 * (1.0 - math.cos(math.pi * dx)) / (dx * dx)


class TestCumulative:
    def test_flat_density_is_linear(self):
        grid = Grid(8)
        cum = cumulative(make_state(np.full(8, 2.0), np.zeros(8)), grid)
        np.testing.assert_allclose(cum.U, 2.0 * grid.nodes(), rtol=0, atol=1e-15)
        np.testing.assert_allclose(cum.V, 0.0, atol=1e-16)

    def test_total_mass_at_right_wall(self, rng):
        grid = Grid(32)
        u = rng.uniform(0.0, 3.0, 32)
        cum = cumulative(make_state(u, np.zeros(32)), grid)
        assert cum.U[0] == 0.0
        assert cum.U[-1] == pytest.approx(np.mean(u), rel=1e-14)
        assert np.all(np.diff(cum.U) >= 0.0)

    def test_ramp_profile_exact_at_nodes(self):
        # cell averages come from the exact antiderivative, so the node
        # values of U reproduce it to round-off
        grid = Grid(64)
        M, delta = 1.0, 0.5
        u0 = ks1d.edge_ramp(M, delta, grid)
        cum = cumulative(make_state(u0, np.zeros(64)), grid)
        nodes = grid.nodes()
        expected = M * (np.maximum(nodes + delta - 1.0, 0.0) / delta) ** 2
        np.testing.assert_allclose(cum.U, expected, rtol=0, atol=1e-13)


class TestLiapunov:
    def test_unit_steady_state_is_zero(self, quadratic_table):
        grid = Grid(16)
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=1.0)
        state = make_state(np.ones(16), np.zeros(16))
        assert liapunov(state, quadratic_table, params, grid) == pytest.approx(0.0, abs=1e-12)

    def test_flat_state_equals_entropy_value(self, unit_constant_table):
        # constant diffusivity: b(M) = M log M - M + 1
        grid = Grid(16)
        M = 3.0
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=M)
        state = make_state(np.full(16, M), np.zeros(16))
        expected = M * math.log(M) - M + 1.0
        assert liapunov(state, unit_constant_table, params, grid) == pytest.approx(
            expected, rel=1e-8)

    def test_floor_on_smooth_states(self, quadratic_table, rng):
        grid = Grid(64)
        params = Params(eps=1.0, D=1.0, gamma=0.5, M=2.0)
        x = grid.centers()
        floor = liapunov_lower_bound(params)
        for _ in range(25):
            u = rng.uniform(0.0, 3.0, 64)
            u *= params.M / np.mean(u)
            amps = rng.normal(0.0, 1.0, 4)
            v = sum(a * np.cos((k + 1) * np.pi * x) for k, a in enumerate(amps))
            state = make_state(u, v)
            assert liapunov(state, quadratic_table, params, grid) >= floor - 1e-8


class TestDissipationRate:
    def test_steady_state(self):
        grid = Grid(16)
        params = Params(eps=1.0, D=1.0, gamma=0.5, M=1.0)
        assert dissipation_rate(make_state(np.ones(16), np.zeros(16)), params, grid) == 0.0

    def test_constant_chemical_offset(self):
        grid = Grid(16)
        params = Params(eps=0.5, D=1.0, gamma=2.0, M=1.0)
        state = make_state(np.ones(16), np.full(16, 3.0))
        # rate = eps * (gamma c / eps)^2 = gamma^2 c^2 / eps
        assert dissipation_rate(state, params, grid) == pytest.approx(
            2.0**2 * 3.0**2 / 0.5, rel=1e-13)

    def test_manufactured_decay(self):
        # v = A e^{-t} cos(pi x) with u chosen so the v equation gives
        # dv/dt = -v; the rate is eps A^2 e^{-2t} / 2
        eps, D, gamma, M, A, t = 0.7, 1.0, 0.3, 1.0, 0.05, 0.3
        params = Params(eps=eps, D=D, gamma=gamma, M=M)
        errs = []
        for n in (64, 128):
            grid = Grid(n)
            x = grid.centers()
            c = np.cos(np.pi * x) * A * math.exp(-t)
            u = M + (D * np.pi**2 + gamma - eps) * c
            state = make_state(u, c, t=t)
            rate = dissipation_rate(state, params, grid)
            expected = eps * A**2 * math.exp(-2.0 * t) / 2.0
            errs.append(abs(rate - expected) / expected)
        assert errs[0] <= 8e-3
        assert errs[1] <= errs[0] / 3.0

    def test_eps_zero_refused(self):
        grid = Grid(16)
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=1.0)
        with pytest.raises(EpsZeroError):
            dissipation_rate(make_state(np.ones(16), np.zeros(16)), params, grid)


class TestCumulativeMoment:
    def test_flat_density_quadrature_exact(self):
        # trapezoid of x^2 carries the classical dx^2/6 excess
        grid = Grid(64)
        cum = cumulative(make_state(np.ones(64), np.zeros(64)), grid)
        expected = (1.0 / 3.0 + grid.dx**2 / 6.0) / 2.0
        assert cumulative_moment(cum, 2.0, grid) == pytest.approx(expected, rel=1e-13)
        assert cumulative_moment(cum, 2.0, grid) == pytest.approx(1.0 / 6.0, abs=grid.dx**2)

    def test_flat_density_general_exponent(self):
        grid = Grid(256)
        M, q = 2.0, 3.5
        cum = cumulative(make_state(np.full(256, M), np.zeros(256)), grid)
        assert cumulative_moment(cum, q, grid) == pytest.approx(
            M**q / (q * (q + 1.0)), rel=1e-4)

    def test_ramp_against_brute_force(self):
        # oracle: trapezoid of the exact cumulative profile on 10^6 nodes
        M, delta, q = 1.0, 0.5, 2.0
        xs = np.linspace(0.0, 1.0, 1_000_001)
        U = M * (np.maximum(xs + delta - 1.0, 0.0) / delta) ** 2
        oracle = float(np.trapezoid(U**q, x=xs)) / q
        assert oracle == pytest.approx(M**q * delta / (q * (2 * q + 1.0)), abs=1e-12)
        assert oracle == pytest.approx(0.05, abs=1e-12)

        grid = Grid(64)
        cum = cumulative(make_state(ks1d.edge_ramp(M, delta, grid), np.zeros(64)), grid)
        assert cumulative_moment(cum, q, grid) == pytest.approx(oracle, abs=0.7 * grid.dx**2)

    def test_exponent_validation(self):
        grid = Grid(8)
        cum = cumulative(make_state(np.ones(8), np.zeros(8)), grid)
        with pytest.raises(QOutOfRangeError):
            cumulative_moment(cum, 1.5, grid)

    def test_strictly_positive(self, rng):
        grid = Grid(32)
        u = rng.uniform(0.0, 2.0, 32)
        u[0] = 0.0
        cum = cumulative(make_state(u, np.zeros(32)), grid)
        assert cumulative_moment(cum, 3.0, grid) > 0.0


class TestVirialRhs:
    def test_steady_state_vanishes_under_refinement(self, quadratic_model):
        params = Params(eps=1.0, D=1.0, gamma=0.5, M=2.0)
        totals = []
        for n in (32, 64, 128):
            grid = Grid(n)
            state = make_state(np.full(n, 2.0), np.zeros(n))
            out = virial_rhs(state, cumulative(state, grid), quadratic_model,
                             params, grid, 3.0)
            totals.append(abs(out.total))
        assert totals[0] <= 0.1
        assert totals[1] <= totals[0] / 3.0
        assert totals[2] <= totals[1] / 3.0

    def test_term_structure_at_steady_state(self, quadratic_model):
        # feedback + offset cancel to O(dx^2); wall flux + bulk diffusion too
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=1.0)
        grid = Grid(128)
        state = make_state(np.ones(128), np.zeros(128))
        out = virial_rhs(state, cumulative(state, grid), quadratic_model,
                         params, grid, 3.0)
        assert out.chemical_lag == 0.0  # dv/dt = 0 at the steady state
        assert out.decay_coupling == 0.0  # gamma = 0
        assert abs(out.feedback + out.offset) <= grid.dx**2
        assert abs(out.wall_flux + out.bulk_diffusion) <= grid.dx**2

    def test_eps_zero_drops_lag_term(self, quadratic_model, rng):
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=1.0)
        grid = Grid(32)
        u = rng.uniform(0.2, 2.0, 32)
        u *= 1.0 / np.mean(u)
        state = make_state(u, np.zeros(32))
        out = virial_rhs(state, cumulative(state, grid), quadratic_model,
                         params, grid, 2.5)
        assert out.chemical_lag == 0.0

    def test_recorded_identity_on_smooth_run(self, quadratic_model):
        # centered-in-time lhs against the identity rhs at a mid-run record
        grid = Grid(64)
        params = Params(eps=1.0, D=1.0, gamma=0.5, M=1.0)
        u0 = ks1d.gaussian_bump(1.0, 0.5, 0.1, grid)
        state = validate_initial(u0, np.zeros(64), params, grid)
        config = SolverConfig(t_end=0.05, output_stride=20, v_solver="explicit",
                              cfl_safety=0.3)
        _, series = run(state, params, quadratic_model, grid, config, qs=(3.0,))
        lhs = series.virial_lhs[3.0]
        rhs = series.virial_rhs[3.0]
        inner = slice(1, -1)
        assert np.all(np.isfinite(lhs[inner]))
        np.testing.assert_allclose(lhs[inner], rhs[inner], rtol=0.02, atol=1e-4)


class TestH1Norm:
    def test_zero(self):
        assert h1_norm(np.zeros(16), Grid(16)) == 0.0

    def test_cosine_second_order(self):
        expected = math.sqrt(0.5 + np.pi**2 / 2.0)
        errs = []
        for n in (64, 128, 256):
            grid = Grid(n)
            v = np.cos(np.pi * grid.centers())
            errs.append(abs(h1_norm(v, grid) - expected))
        assert errs[0] <= 5e-3
        assert errs[1] <= errs[0] / 3.0
        assert errs[2] <= errs[1] / 3.0

    def test_sup_norm_embedding(self):
        # ||v||_inf <= ||v||_H1 + O(dx) on smooth mean-zero profiles
        for n in (64, 256):
            grid = Grid(n)
            x = grid.centers()
            v = np.cos(np.pi * x) + 0.3 * np.cos(2.0 * np.pi * x)
            assert np.max(np.abs(v)) <= h1_norm(v, grid) + 5.0 * grid.dx


class TestSubsolution:
    def test_zero_chemical_gives_zero_barrier_correction(self):
        # x - x^3 >= 0 on [0, 1], so h(0) = min(0 + positive, 0) = 0
        grid = Grid(32)
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=1.0)
        state = validate_initial(np.ones(32), np.zeros(32), params, grid)
        tracker = SubsolutionTracker(state, params, grid)
        np.testing.assert_array_equal(tracker.h, 0.0)
        assert tracker.grad_bound == pytest.approx(1.0 / 3.0)

    def test_negative_chemical_dip_activates_barrier(self):
        grid = Grid(64)
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=1.0)
        v0 = -2.0 * np.cos(np.pi * grid.centers())
        state = validate_initial(np.ones(64), v0, params, grid)
        tracker = SubsolutionTracker(state, params, grid)
        assert np.min(tracker.h) < -0.1
        assert np.all(tracker.h <= 0.0)
        assert tracker.h[0] == 0.0 and tracker.h[-1] == 0.0

    @pytest.mark.parametrize("mode", ["implicit", "explicit"])
    def test_barrier_holds_along_run(self, quadratic_model, mode):
        grid = Grid(64)
        params = Params(eps=1.0, D=1.0, gamma=0.5, M=1.0)
        u0 = ks1d.gaussian_bump(1.0, 0.7, 0.08, grid)
        v0 = -0.4 * np.cos(np.pi * grid.centers())
        state = validate_initial(u0, v0, params, grid)
        config = SolverConfig(t_end=0.1, output_stride=100, v_solver=mode,
                              cfl_safety=0.3)
        _, series = run(state, params, quadratic_model, grid, config,
                        track_subsolution=True)
        report = subsolution_check(series, params, tol=1e-6)
        assert report.min_gap >= -1e-8
        assert report.max_grad_h <= report.grad_bound + 1e-8

    def test_violation_raises(self, quadratic_model):
        grid = Grid(32)
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=1.0)
        state = validate_initial(np.ones(32), np.zeros(32), params, grid)
        config = SolverConfig(t_end=0.01, output_stride=50)
        _, series = run(state, params, quadratic_model, grid, config,
                        track_subsolution=True)
        broken = dataclasses.replace(series, barrier_gap=np.array([-1.0]))
        with pytest.raises(ComparisonViolatedError):
            subsolution_check(broken, params)

    def test_requires_tracking(self, quadratic_model):
        grid = Grid(32)
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=1.0)
        state = validate_initial(np.ones(32), np.zeros(32), params, grid)
        config = SolverConfig(t_end=0.01, output_stride=50)
        _, series = run(state, params, quadratic_model, grid, config)
        with pytest.raises(ValueError):
            subsolution_check(series, params)


class TestSeriesCsv:
    def test_header_and_column_order(self, quadratic_model, tmp_path):
        grid = Grid(32)
        params = Params(eps=1.0, D=1.0, gamma=0.0, M=1.0)
        state = validate_initial(np.ones(32), np.zeros(32), params, grid)
        config = SolverConfig(t_end=0.01, output_stride=10)
        _, series = run(state, params, quadratic_model, grid, config, qs=(2.0, 3.0))
        path = tmp_path / "diagnostics.csv"
        series.to_csv(path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "t", "mass", "v_mean", "L", "diss_cum",
            "mq_q2", "mq_q3", "virial_lhs_q2", "virial_lhs_q3",
            "virial_rhs_q2", "virial_rhs_q3", "sup_u", "h1_v",
        ]
        assert len(rows) == 1 + len(series)
        assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-14)


class TestVirialResidualStudy:
    def test_order_at_least_linear(self, quadratic_model):
        params = Params(eps=1.0, D=1.0, gamma=0.5, M=1.0)
        sizes, residuals, order = virial_residual_study(
            params, quadratic_model,
            lambda grid: validate_initial(
                ks1d.gaussian_bump(1.0, 0.5, 0.1, grid), np.zeros(grid.n),
                params, grid),
            q=3.0, grid_sizes=(16, 32, 64), t_probe=0.05)
        assert np.all(np.diff(residuals) < 0.0)
        assert order >= 1.0
