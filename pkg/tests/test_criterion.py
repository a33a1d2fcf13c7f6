import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

import ks1d
from ks1d import (
    CertificateQuery,
    Grid,
    Params,
    PowerLawDiffusion,
    blowup_indicator,
    blowup_time_bound,
    certify,
    critical_mass,
    initial_energy_bound,
    initial_moment,
    moment_envelope,
    perturbation_threshold,
    scan_q,
    validate_q,
)
from ks1d.errors import (
    ModelNotCertifiableError,
    NotCertifiedError,
    QOutOfRangeError,
    ThresholdPreconditionError,
    UnresolvedMomentError,
)

REFERENCE = Params(eps=0.0, D=1.0, gamma=0.0, M=10.0)


class TestEnergyBound:
    def test_reference_value(self):
        # c1 (1 + M) + M^2/(2D) = 11 + 50 at c1 = 1, M = 10, D = 1
        assert initial_energy_bound(0.0, 0.0, REFERENCE, 1.0) == 61.0

    def test_linear_in_first_argument(self):
        base = initial_energy_bound(0.0, 0.0, REFERENCE, 1.0)
        assert initial_energy_bound(1.0, 0.0, REFERENCE, 1.0) == base + 1.0

    @given(z1=st.floats(0, 1e3), z2=st.floats(0, 1e3),
           dz=st.floats(0.0, 1e3))
    @settings(max_examples=60, deadline=None)
    def test_nondecreasing(self, z1, z2, dz):
        base = initial_energy_bound(z1, z2, REFERENCE, 1.0)
        assert initial_energy_bound(z1 + dz, z2, REFERENCE, 1.0) >= base
        assert initial_energy_bound(z1, z2 + dz, REFERENCE, 1.0) >= base


class TestBlowupIndicator:
    def test_reference_arithmetic(self):
        # direct evaluation of the certificate formula at its reference
        # inputs: 61 + 0.6 sqrt(61) - 500
        expected = 61.0 + 0.6 * math.sqrt(61.0) - 500.0
        value = blowup_indicator(0.0, 0.0, 0.0, 4.0, REFERENCE, 1.0, 2.0)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value < 0.0

    def test_positive_at_small_mass(self):
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=1e-3)
        assert blowup_indicator(0.0, 0.0, 0.0, 4.0, params, 1.0, 2.0) > 0.0

    def test_strictly_increasing_in_each_argument(self, rng):
        for _ in range(40):
            params = Params(eps=rng.uniform(0.0, 1.0), D=rng.uniform(0.3, 3.0),
                            gamma=rng.uniform(0.0, 2.0), M=rng.uniform(0.5, 20.0))
            c1 = rng.uniform(0.2, 3.0)
            p = rng.uniform(1.1, 2.0)
            q = rng.uniform(2.05, min(2.0 / (2.0 - p), 8.0))
            z = rng.uniform(0.0, 50.0, 3)
            base = blowup_indicator(*z, q, params, c1, p)
            step = 0.37
            assert blowup_indicator(z[0] + step, z[1], z[2], q, params, c1, p) > base
            assert blowup_indicator(z[0], z[1] + step, z[2], q, params, c1, p) > base
            assert blowup_indicator(z[0], z[1], z[2] + step, q, params, c1, p) > base

    def test_query_type_validates(self):
        with pytest.raises(QOutOfRangeError):
            CertificateQuery(REFERENCE, 1.0, 2.0, q=2.0, z1=0.0, z2=0.0, z3=0.0)
        with pytest.raises(QOutOfRangeError):
            CertificateQuery(REFERENCE, 1.0, 1.5, q=4.5, z1=0.0, z2=0.0, z3=0.0)
        with pytest.raises(ValueError):
            CertificateQuery(REFERENCE, 1.0, 2.0, q=4.0, z1=-1.0, z2=0.0, z3=0.0)
        query = CertificateQuery(REFERENCE, 1.0, 2.0, q=4.0, z1=0.0, z2=0.0, z3=0.0)
        F, P = query.evaluate()
        assert F == 61.0 and P < 0.0


class TestExponentValidation:
    def test_interval_endpoint_included(self):
        validate_q(4.0, 1.5)  # 2/(2-p) = 4 exactly

    def test_beyond_interval(self):
        with pytest.raises(QOutOfRangeError):
            validate_q(4.1, 1.5)

    def test_any_finite_exponent_at_p_two(self):
        validate_q(64.0, 2.0)
        with pytest.raises(QOutOfRangeError):
            validate_q(math.inf, 2.0)


class TestMomentEnvelope:
    def test_origin_value(self):
        # both z terms vanish: E(0) = -M^q/(q(q+1)) = -500
        assert moment_envelope(0.0, 4.0, REFERENCE, 1.0, 2.0) == -500.0

    def test_strictly_increasing(self):
        zs = np.linspace(0.0, 200.0, 101)
        vals = [moment_envelope(z, 4.0, REFERENCE, 1.0, 2.0) for z in zs]
        assert np.all(np.diff(vals) > 0.0)

    def test_composition_identity(self, rng):
        # the scalar certificate is exactly the envelope of the energy
        # bound when eps M is identified with z3
        for _ in range(1000):
            D = rng.uniform(0.3, 3.0)
            gamma = rng.uniform(0.0, 2.0)
            M = rng.uniform(0.5, 20.0)
            c1 = rng.uniform(0.2, 3.0)
            p = rng.uniform(1.05, 2.0)
            q = rng.uniform(2.05, min(2.0 / (2.0 - p), 10.0))
            z1, z2, z3 = rng.uniform(0.0, 100.0, 3)
            params = Params(eps=0.123, D=D, gamma=gamma, M=M)
            indicator = blowup_indicator(z1, z2, z3, q, params, c1, p)
            F = initial_energy_bound(z1, z2, params, c1)
            params_env = Params(eps=z3 / M, D=D, gamma=gamma, M=M)
            composed = moment_envelope(F, q, params_env, c1, p, v0_h1=z2)
            assert abs(indicator - composed) <= 1e-12 * (1.0 + abs(indicator))


class TestBlowupTimeBound:
    def test_reference_value(self):
        env = 61.0 + 0.6 * math.sqrt(61.0) - 500.0
        expected = 61.0 * 1.0 / (10.0 * abs(env))
        t_star = blowup_time_bound(61.0, 4.0, REFERENCE, 1.0, 2.0)
        assert t_star == pytest.approx(expected, rel=1e-13)
        assert t_star == pytest.approx(0.014045, abs=1e-6)

    def test_degenerate_origin(self):
        assert blowup_time_bound(0.0, 4.0, REFERENCE, 1.0, 2.0) == 0.0

    def test_not_certified(self):
        with pytest.raises(NotCertifiedError):
            blowup_time_bound(1e4, 4.0, REFERENCE, 1.0, 2.0)

    def test_decreasing_in_mass(self):
        values = []
        for M in (8.0, 10.0, 14.0, 20.0):
            params = Params(eps=0.0, D=1.0, gamma=0.0, M=M)
            values.append(blowup_time_bound(61.0, 4.0, params, 1.0, 2.0))
        assert np.all(np.diff(values) < 0.0)

    @pytest.mark.parametrize("M,q,x0", [(10.0, 4.0, 61.0), (8.0, 3.0, 30.0),
                                        (15.0, 5.0, 100.0)])
    def test_ode_comparison_hits_zero_earlier(self, M, q, x0):
        # the scalar ODE dX/dt = (M/D) E(X) reaches zero no later than
        # the bound built from the frozen slope E(X(0))
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=M)
        t_star = blowup_time_bound(x0, q, params, 1.0, 2.0)

        def rhs(t, y):
            return [params.M / params.D * moment_envelope(max(y[0], 0.0), q,
                                                          params, 1.0, 2.0)]

        def hit_zero(t, y):
            return y[0]

        hit_zero.terminal = True
        hit_zero.direction = -1
        sol = solve_ivp(rhs, (0.0, 2.0 * t_star), [x0], events=hit_zero,
                        rtol=1e-10, atol=1e-12, max_step=t_star / 50.0)
        assert sol.t_events[0].size == 1
        assert sol.t_events[0][0] <= t_star * (1.0 + 1e-8)


class TestInitialMoment:
    def test_resolved_ramp_matches_closed_form(self):
        M, delta, q = 10.0, 0.1, 4.0
        grid = Grid(2048)
        u0 = ks1d.edge_ramp(M, delta, grid)
        coarse, refined = initial_moment(u0, q, grid)
        expected = M**q * delta / (q * (2.0 * q + 1.0))
        assert refined == pytest.approx(expected, rel=1e-4)
        assert abs(coarse - refined) <= 0.01 * refined

    def test_subgrid_ramp_refused(self):
        grid = Grid(64)
        u0 = ks1d.edge_ramp(10.0, 0.01, grid)
        with pytest.raises(UnresolvedMomentError):
            initial_moment(u0, 4.0, grid)


class TestCertify:
    def setup_method(self):
        self.model = PowerLawDiffusion(1.0, 2.0)

    def test_flat_data_inconclusive(self):
        # m_q(0) = M^q/(q(q+1)) cancels the sink term, leaving the
        # positive remainder: honestly inconclusive
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=10.0)
        grid = Grid(512)
        cert = certify(np.full(512, 10.0), np.zeros(512), params, self.model,
                       4.0, grid)
        assert cert.verdict == "inconclusive"
        assert cert.indicator > 0.0
        assert cert.envelope_at_X0 > 0.0
        assert cert.T_star is None
        assert cert.mq0 == pytest.approx(10.0**4 / 20.0, rel=1e-4)

    def test_concentrated_ramp_certified(self):
        params = Params(eps=1e-3, D=1.0, gamma=0.0, M=10.0)
        grid = Grid(8192)
        u0 = ks1d.edge_ramp(10.0, 0.01, grid)
        cert = certify(u0, np.zeros(8192), params, self.model, 4.0, grid)
        assert cert.certified
        assert cert.indicator < 0.0
        assert cert.envelope_at_X0 <= cert.indicator  # sharper route
        assert cert.T_star is not None and cert.T_star > 0.0
        assert cert.L0 >= 0.0  # v0 = 0 leaves only the entropy part

    def test_undeclared_model_refused(self):
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=10.0)
        grid = Grid(256)
        with pytest.raises(ModelNotCertifiableError):
            certify(np.full(256, 10.0), np.zeros(256), params,
                    ks1d.ConstantDiffusion(1.0), 4.0, grid)

    def test_wrong_declaration_refused(self):
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=10.0)
        grid = Grid(256)
        with pytest.raises(ModelNotCertifiableError):
            certify(np.full(256, 10.0), np.zeros(256), params,
                    ks1d.ConstantDiffusion(1.0, c1=1.0, p=2.0), 4.0, grid)

    def test_scalar_route_flips_at_predicted_chemical_size(self):
        # the scalar certificate is exactly monotone in z2 = ||v0||_H1,
        # so its sign flips at the root found from the formula alone
        from ks1d.diagnostics import h1_norm

        params = Params(eps=1e-3, D=1.0, gamma=0.5, M=10.0)
        grid = Grid(8192)
        u0 = ks1d.edge_ramp(10.0, 0.01, grid)
        _, mq0 = initial_moment(u0, 4.0, grid)
        z3 = params.eps * params.M

        lo, hi = 0.0, 1.0
        while blowup_indicator(mq0, hi, z3, 4.0, params, 1.0, 2.0) < 0.0:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if blowup_indicator(mq0, mid, z3, 4.0, params, 1.0, 2.0) < 0.0:
                lo = mid
            else:
                hi = mid
        z2_root = 0.5 * (lo + hi)

        v_unit = np.cos(np.pi * grid.centers())
        unit_size = h1_norm(v_unit, grid)
        for factor, sign in ((0.99, -1.0), (1.01, 1.0)):
            scale = factor * z2_root / unit_size
            cert = certify(u0, scale * v_unit, params, self.model, 4.0, grid)
            assert math.copysign(1.0, cert.indicator) == sign

    def test_json_round_trip(self):
        params = Params(eps=1e-3, D=1.0, gamma=0.0, M=10.0)
        grid = Grid(8192)
        u0 = ks1d.edge_ramp(10.0, 0.01, grid)
        cert = certify(u0, np.zeros(8192), params, self.model, 4.0, grid)
        blob = json.dumps(cert.to_dict())
        parsed = json.loads(blob)
        assert parsed["verdict"] == "certified-blowup"
        assert parsed["indicator"]["value"] == pytest.approx(cert.indicator)
        assert set(parsed["envelope"]) >= {"linear_term", "power_term",
                                           "sink_term", "value", "at"}


class TestScanQ:
    def test_returns_best_certificate_with_table(self):
        params = Params(eps=1e-3, D=1.0, gamma=0.0, M=10.0)
        grid = Grid(4096)
        u0 = ks1d.edge_ramp(10.0, 0.01, grid)
        best = scan_q(u0, np.zeros(4096), params, PowerLawDiffusion(1.0, 2.0),
                      grid, count=8)
        assert best.certified
        assert len(best.scan) == 8
        qs = [row["q"] for row in best.scan]
        assert all(2.0 < q <= 64.0 for q in qs)
        resolved = [row for row in best.scan if "error" not in row]
        assert resolved  # the moderate exponents certify
        t_stars = [row["T_star"] for row in resolved if row["T_star"] is not None]
        assert best.T_star == pytest.approx(min(t_stars))

    def test_interval_respected_for_small_p(self):
        params = Params(eps=1e-3, D=1.0, gamma=0.0, M=10.0)
        grid = Grid(4096)
        u0 = ks1d.edge_ramp(10.0, 0.05, grid)
        best = scan_q(u0, np.zeros(4096), params, PowerLawDiffusion(1.0, 1.5),
                      grid, count=6)
        assert all(2.0 < row["q"] <= 4.0 + 1e-9 for row in best.scan)


class TestPerturbationThreshold:
    def test_precondition_failure(self):
        params = Params(eps=0.0, D=1.0, gamma=0.0, M=1.0)
        grid = Grid(256)
        u0 = ks1d.edge_ramp(1.0, 0.1, grid)
        with pytest.raises(ThresholdPreconditionError):
            perturbation_threshold(u0, params, PowerLawDiffusion(1.0, 2.0),
                                   4.0, grid)

    def test_root_verified_by_sign_flip(self):
        params = Params(eps=0.0, D=1.0, gamma=0.5, M=10.0)
        grid = Grid(8192)
        u0 = ks1d.edge_ramp(10.0, 0.01, grid)
        model = PowerLawDiffusion(1.0, 2.0)
        theta = perturbation_threshold(u0, params, model, 4.0, grid)
        assert theta > 0.0
        _, mq0 = initial_moment(u0, 4.0, grid)
        below = blowup_indicator(mq0, 0.999 * theta, 0.999 * theta, 4.0,
                                 params, 1.0, 2.0)
        above = blowup_indicator(mq0, 1.001 * theta, 1.001 * theta, 4.0,
                                 params, 1.0, 2.0)
        assert below < 0.0 < above


class TestCriticalMass:
    def test_bracketing(self):
        m_star = critical_mass(1.0, 2.0, 1.0, 0.0, 4.0)
        for factor, sign in ((1.01, -1.0), (0.99, 1.0)):
            params = Params(eps=0.0, D=1.0, gamma=0.0, M=factor * m_star)
            value = blowup_indicator(0.0, 0.0, 0.0, 4.0, params, 1.0, 2.0)
            assert math.copysign(1.0, value) == sign

    def test_known_window(self):
        # hand bracketing of the scalar certificate places the root
        # between 4.5 and 4.6 for these constants
        m_star = critical_mass(1.0, 2.0, 1.0, 0.0, 4.0)
        assert 4.5 <= m_star <= 4.6

    def test_decay_shifts_threshold_up(self):
        assert critical_mass(1.0, 2.0, 1.0, 1.0, 4.0) >= critical_mass(
            1.0, 2.0, 1.0, 0.0, 4.0)
