"""Explicit finite-time blow-up certificates.

The moment m_q(t) of the cumulative mass profile obeys a differential
inequality dX/dt <= (M/D) E(X) for X = m_q + L + M^2/(2D), where E is an
explicit increasing function of one variable.  If E is negative at X(0),
X must reach zero in finite time, which is impossible for a global
solution (it would force m_q = 0 while U(1) = M), so the solution blows
up no later than

    T* = X(0) D / (M |E(X(0))|).

Two certificate routes are exposed: the scalar-data route evaluates the
composition P(z1, z2, z3) = E(F(z1, z2)) from the moment m_q(0), the H1
norm of v0, and eps*M alone; the sharper route evaluates E directly at
the true X(0), which needs the free energy L(u0, v0) by quadrature.  A
negative scalar certificate implies a negative sharp one.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .diffusion import DiffusionModel, EntropyTable, check_entropy_bound, check_flux_bound
from .errors import (
    BoundViolatedError,
    ModelNotCertifiableError,
    NotCertifiedError,
    QOutOfRangeError,
    ThresholdPreconditionError,
    UnresolvedMomentError,
)
from .model import Grid, Params, validate_initial

VERDICT_CERTIFIED = "certified-blowup"
VERDICT_INCONCLUSIVE = "inconclusive"


def q_upper_limit(p: float) -> float:
    """Largest admissible moment exponent: 2/(2-p), infinite at p = 2."""
    return math.inf if p >= 2.0 else 2.0 / (2.0 - p)


def validate_q(q: float, p: float) -> None:
    """The admissible exponents are finite q in (2, 2/(2-p)]."""
    if not math.isfinite(q) or q <= 2.0:
        raise QOutOfRangeError(f"moment exponent must be finite and > 2, got {q}")
    limit = q_upper_limit(p)
    if q > limit * (1.0 + 1e-12):
        raise QOutOfRangeError(
            f"moment exponent {q} exceeds 2/(2-p) = {limit:.6g} for p = {p}"
        )


def initial_energy_bound(z1: float, z2: float, params: Params, c1: float) -> float:
    """Upper bound for m_q(0) + L(u0, v0) + M^2/(2D) in terms of the
    scalar data sizes z1 = m_q(0) and z2 = ||v0||_H1."""
    M, D, gamma = params.M, params.D, params.gamma
    return (c1 * (1.0 + M) + M**2 / (2.0 * D) + z1 + M * z2
            + 0.5 * (D + gamma) * z2**2)


def _power_coefficient(q: float, params: Params, c1: float, p: float) -> float:
    M, D = params.M, params.D
    return c1 * (q - 1.0) * q ** ((q - 2.0) / q) * D / ((p - 1.0) * M ** (p - 1.0))


def moment_envelope_terms(z: float, q: float, params: Params, c1: float,
                          p: float, v0_h1: float = 0.0) -> tuple[float, float, float]:
    """The three summands of E(z): linear part, sublinear power part, and
    the negative equilibrium moment -M^q/(q(q+1))."""
    if z < 0.0:
        raise ValueError("envelope argument must be >= 0")
    M, D, gamma, eps = params.M, params.D, params.gamma, params.eps
    lin = (1.0 + gamma / D + (gamma / M) * v0_h1
           + eps * M ** (q - 1.0) / (4.0 * q * D)) * z
    power = _power_coefficient(q, params, c1, p) * z ** ((q - 2.0) / q)
    sink = -(M**q) / (q * (q + 1.0))
    return lin, power, sink


def moment_envelope(z: float, q: float, params: Params, c1: float, p: float,
                    v0_h1: float = 0.0) -> float:
    """E(z), continuous and strictly increasing on [0, inf)."""
    return sum(moment_envelope_terms(z, q, params, c1, p, v0_h1))


def blowup_indicator_terms(z1: float, z2: float, z3: float, q: float,
                           params: Params, c1: float, p: float) -> tuple[float, float, float]:
    """Summands of the scalar certificate P(z1, z2, z3) = E(F(z1, z2))
    with the chemical-lag weight written through z3 = eps M."""
    if min(z1, z2, z3) < 0.0:
        raise ValueError("certificate arguments must be >= 0")
    validate_q(q, p)
    M, D, gamma = params.M, params.D, params.gamma
    F = initial_energy_bound(z1, z2, params, c1)
    lin = (1.0 + gamma / D + (gamma / M) * z2
           + M ** (q - 2.0) * z3 / (4.0 * q * D)) * F
    power = _power_coefficient(q, params, c1, p) * F ** ((q - 2.0) / q)
    sink = -(M**q) / (q * (q + 1.0))
    return lin, power, sink


def blowup_indicator(z1: float, z2: float, z3: float, q: float,
                     params: Params, c1: float, p: float) -> float:
    """Scalar certificate; strictly increasing in each of z1, z2, z3.
    A negative value certifies finite-time blow-up."""
    return sum(blowup_indicator_terms(z1, z2, z3, q, params, c1, p))


def blowup_time_bound(x0: float, q: float, params: Params, c1: float, p: float,
                      v0_h1: float = 0.0) -> float:
    """Upper bound for the blow-up time from the comparison ODE.

    Since E is increasing and X(t) decreasing, dX/dt <= (M/D) E(X(0)),
    so X reaches zero (impossible for a global solution) no later than
    T* = X(0) D / (M |E(X(0))|).

    Raises :class:`NotCertifiedError` when E(X(0)) >= 0.
    """
    if x0 < 0.0:
        raise ValueError("X(0) must be >= 0")
    e0 = moment_envelope(x0, q, params, c1, p, v0_h1)
    if e0 >= 0.0:
        raise NotCertifiedError(f"envelope at X(0) = {x0:.6g} is {e0:.6g} >= 0")
    return x0 * params.D / (params.M * abs(e0))


@dataclass(frozen=True)
class CertificateQuery:
    """Scalar inputs of the certificate: z1 = m_q(0), z2 = ||v0||_H1,
    z3 = eps M, with the declared diffusivity bound (c1, p)."""

    params: Params
    c1: float
    p: float
    q: float
    z1: float
    z2: float
    z3: float

    def __post_init__(self) -> None:
        validate_q(self.q, self.p)
        if min(self.z1, self.z2, self.z3) < 0.0:
            raise ValueError("z1, z2, z3 must be >= 0")

    def evaluate(self) -> tuple[float, float]:
        """(F value, certificate value)."""
        F = initial_energy_bound(self.z1, self.z2, self.params, self.c1)
        P = blowup_indicator(self.z1, self.z2, self.z3, self.q, self.params,
                             self.c1, self.p)
        return F, P


@dataclass(frozen=True)
class Certificate:
    """Evaluated certificate for concrete initial data."""

    eps: float
    D: float
    gamma: float
    M: float
    c1: float
    p: float
    q: float
    mq0: float
    mq0_coarse: float
    v0_h1: float
    L0: float
    X0: float
    F_val: float
    indicator_terms: tuple[float, float, float]
    indicator: float
    envelope_terms: tuple[float, float, float]
    envelope_at_X0: float
    verdict: str
    T_star: float | None
    scan: tuple = field(default=(), compare=False)

    @property
    def certified(self) -> bool:
        return self.verdict == VERDICT_CERTIFIED

    def to_dict(self) -> dict:
        out = {
            "inputs": {
                "eps": self.eps, "D": self.D, "gamma": self.gamma, "M": self.M,
                "c1": self.c1, "p": self.p, "q": self.q,
            },
            "mq0": self.mq0,
            "mq0_coarse": self.mq0_coarse,
            "v0_h1": self.v0_h1,
            "L0": self.L0,
            "X0": self.X0,
            "F_val": self.F_val,
            "indicator": {
                "linear_term": self.indicator_terms[0],
                "power_term": self.indicator_terms[1],
                "sink_term": self.indicator_terms[2],
                "value": self.indicator,
            },
            "envelope": {
                "linear_term": self.envelope_terms[0],
                "power_term": self.envelope_terms[1],
                "sink_term": self.envelope_terms[2],
                "value": self.envelope_at_X0,
                "at": self.X0,
            },
            "verdict": self.verdict,
            "T_star": self.T_star,
        }
        if self.scan:
            out["scan"] = [dict(row) for row in self.scan]
        return out


def initial_moment(u0, q: float, grid: Grid, refine: int = 16) -> tuple[float, float]:
    """m_q(0) by trapezoid quadrature on the working grid and on a
    ``refine``-times subdivided grid (the cumulative profile is
    interpolated linearly, exactly for piecewise-constant cells).

    Raises :class:`UnresolvedMomentError` when the two values disagree by
    more than 1%, so that a certificate never hinges on quadrature error.
    """
    u0 = np.asarray(u0, dtype=float)
    dx = grid.dx
    U = np.concatenate([[0.0], np.cumsum(u0) * dx])
    coarse = float(np.trapezoid(U**q, dx=dx)) / q
    nodes = grid.nodes()
    fine_nodes = np.linspace(0.0, 1.0, refine * grid.n + 1)
    U_fine = np.interp(fine_nodes, nodes, U)
    refined = float(np.trapezoid(U_fine**q, dx=dx / refine)) / q
    scale = max(abs(refined), 1e-300)
    if abs(coarse - refined) > 0.01 * scale:
        raise UnresolvedMomentError(
            f"m_q(0) quadrature differs by {abs(coarse - refined) / scale:.2%} "
            f"between n = {grid.n} and the {refine}x refined grid; "
            "refine the grid before certifying"
        )
    return coarse, refined


def _certifiable(model: DiffusionModel, table: EntropyTable) -> tuple[float, float]:
    if not model.declares_bound:
        raise ModelNotCertifiableError(
            f"{model.kind} model declares no (c1, p); certification refused"
        )
    c1, p = float(model.c1), float(model.p)
    if not 1.0 < p <= 2.0:
        raise ModelNotCertifiableError(f"certification needs p in (1, 2], got {p}")
    try:
        check_entropy_bound(model, table)
        check_flux_bound(model)
    except BoundViolatedError as exc:
        raise ModelNotCertifiableError(f"declared bound fails: {exc}") from exc
    return c1, p


def certify(u0, v0, params: Params, model: DiffusionModel, q: float, grid: Grid,
            table: EntropyTable | None = None) -> Certificate:
    """Evaluate both certificate routes for concrete initial data.

    The verdict is ``certified-blowup`` when either the scalar
    certificate or the envelope at the true X(0) is negative; the time
    bound T* is attached whenever the envelope route certifies.
    """
    from .diagnostics import h1_norm, liapunov

    if table is None:
        table = EntropyTable(model)
    c1, p = _certifiable(model, table)
    validate_q(q, p)
    state = validate_initial(u0, v0, params, grid)
    mq0_coarse, mq0 = initial_moment(state.u, q, grid)
    z2 = h1_norm(state.v, grid)
    z3 = params.eps * params.M
    L0 = liapunov(state, table, params, grid)
    X0 = mq0 + L0 + params.M**2 / (2.0 * params.D)
    ind_terms = blowup_indicator_terms(mq0, z2, z3, q, params, c1, p)
    indicator = sum(ind_terms)
    env_terms = moment_envelope_terms(max(X0, 0.0), q, params, c1, p, v0_h1=z2)
    envelope = sum(env_terms)
    certified = indicator < 0.0 or envelope < 0.0
    t_star = None
    if envelope < 0.0 and X0 >= 0.0:
        t_star = blowup_time_bound(X0, q, params, c1, p, v0_h1=z2)
    return Certificate(
        eps=params.eps, D=params.D, gamma=params.gamma, M=params.M,
        c1=c1, p=p, q=q, mq0=mq0, mq0_coarse=mq0_coarse, v0_h1=z2, L0=L0,
        X0=X0, F_val=initial_energy_bound(mq0, z2, params, c1),
        indicator_terms=ind_terms, indicator=indicator,
        envelope_terms=env_terms, envelope_at_X0=envelope,
        verdict=VERDICT_CERTIFIED if certified else VERDICT_INCONCLUSIVE,
        T_star=t_star,
    )


def scan_q(u0, v0, params: Params, model: DiffusionModel, grid: Grid,
           count: int = 32, q_cap: float = 64.0,
           table: EntropyTable | None = None) -> Certificate:
    """Try a geometric grid of exponents in (2, 2/(2-p)] (capped at
    ``q_cap`` when p = 2 leaves the interval unbounded) and return the
    best certificate: smallest T* among certified ones, otherwise the
    most negative scalar indicator.  The scan table rides along on the
    returned certificate."""
    if table is None:
        table = EntropyTable(model)
    c1, p = _certifiable(model, table)
    q_hi = min(q_upper_limit(p), q_cap)
    ratio = q_hi / 2.0
    qs = [2.0 * ratio ** ((k + 1) / count) for k in range(count)]
    results = []
    certs = []
    for q in qs:
        try:
            cert = certify(u0, v0, params, model, q, grid, table=table)
        except UnresolvedMomentError as exc:
            # high exponents sharpen the quadrature requirement; record
            # the refusal instead of aborting the whole scan
            results.append({"q": q, "error": str(exc)})
            continue
        certs.append(cert)
        results.append({
            "q": q, "indicator": cert.indicator,
            "envelope_at_X0": cert.envelope_at_X0,
            "verdict": cert.verdict, "T_star": cert.T_star,
        })
    if not certs:
        raise UnresolvedMomentError(
            "no exponent in the scan had a grid-resolved initial moment"
        )
    def rank(c: Certificate):
        return (c.T_star if c.T_star is not None else math.inf, c.indicator)
    best = min(certs, key=rank)
    return dataclasses.replace(best, scan=tuple(results))


def perturbation_threshold(u0, params: Params, model: DiffusionModel, q: float,
                           grid: Grid, rel_tol: float = 1e-9) -> float:
    """Largest theta such that the scalar certificate stays negative for
    all ||v0||_H1 < theta and eps M < theta simultaneously.

    Requires the unperturbed certificate P(m_q(0), 0, 0) < 0; by strict
    monotonicity in (z2, z3) the admissible set is the interval up to the
    root of theta -> P(m_q(0), theta, theta), found by bisection.
    """
    if not model.declares_bound:
        raise ModelNotCertifiableError("perturbation threshold needs declared (c1, p)")
    c1, p = float(model.c1), float(model.p)
    validate_q(q, p)
    _, mq0 = initial_moment(np.asarray(u0, dtype=float), q, grid)
    base = blowup_indicator(mq0, 0.0, 0.0, q, params, c1, p)
    if base >= 0.0:
        raise ThresholdPreconditionError(
            f"unperturbed certificate is {base:.6g} >= 0; no positive threshold exists"
        )
    phi = lambda theta: blowup_indicator(mq0, theta, theta, q, params, c1, p)
    hi = 1.0
    while phi(hi) < 0.0:
        hi *= 2.0
        if hi > 1e30:
            raise RuntimeError("perturbation threshold bracket did not close")
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if phi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def critical_mass(c1: float, p: float, D: float, gamma: float, q: float,
                  rel_tol: float = 1e-6) -> float:
    """Smallest total mass at which the data-free scalar certificate
    P(0, 0, 0) turns negative.

    The certificate tends to +inf as M -> 0 and to -inf as M -> inf
    (the equilibrium moment scales like M^q with q > 2), so a sign
    change exists; a geometric scan brackets the first one and bisection
    refines it."""
    def g(M: float) -> float:
        pars = Params(eps=0.0, D=D, gamma=gamma, M=M)
        return blowup_indicator(0.0, 0.0, 0.0, q, pars, c1, p)

    M = 1.0
    guard = 0
    while g(M) < 0.0:
        M *= 0.5
        guard += 1
        if guard > 200:
            raise RuntimeError("no positive-certificate mass found above 0")
    lo = M
    hi = M
    guard = 0
    while g(hi) >= 0.0:
        lo = hi
        hi *= 1.05
        guard += 1
        if guard > 2000:
            raise RuntimeError("no certified mass found below the scan limit")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return hi
