"""Constructors for admissible initial data.

All cell profiles are produced as exact cell averages (from closed-form
antiderivatives where available), rescaled so the discrete mass is M and
validated; chemical profiles are projected to zero mean.  Exact
averaging matters for the concentrated ramp: its width may be far below
the cell size and certificates must stay honest there.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import DeltaOutOfRangeError, FileParseError
from .model import Grid, Params, State, validate_initial

U_KINDS = ("edge-ramp", "constant", "gaussian-bump", "two-bump", "from-file")
V_KINDS = ("zero", "cosine-modes", "from-file")

_SQRT2 = float(np.sqrt(2.0))


@dataclass(frozen=True)
class InitialSpec:
    """Declarative description of (u0, v0).

    ``kind`` selects the density profile; ``v0_kind`` the chemical one.
    ``delta`` is the edge-ramp support width, ``center``/``width`` (and
    the ``2``-suffixed twins plus ``mass_fraction``) parameterise the
    bumps, ``v0_modes`` are cosine amplitudes (mode k has shape
    cos(k pi x)).
    """

    kind: str = "constant"
    delta: float = 0.1
    center: float = 0.5
    width: float = 0.1
    center2: float = 0.75
    width2: float = 0.05
    mass_fraction: float = 0.5
    u_file: str | None = None
    v0_kind: str = "zero"
    v0_modes: tuple[float, ...] = field(default_factory=tuple)
    v0_file: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in U_KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.v0_kind not in V_KINDS:
            raise ValueError(f"unknown chemical kind {self.v0_kind!r}")


def edge_ramp(M: float, delta: float, grid: Grid) -> np.ndarray:
    """Triangular ramp 2 M max(x + delta - 1, 0) / delta^2 climbing into
    the right wall, carrying mass M on a support of width delta.

    Cell averages come from the exact antiderivative
    W(x) = M ((x + delta - 1)_+ / delta)^2, so mass is exact at any
    resolution, including delta far below the cell width.
    """
    if not 0.0 < delta <= 1.0:
        raise DeltaOutOfRangeError(f"ramp width must lie in (0, 1], got {delta}")
    nodes = grid.nodes()
    W = M * (np.maximum(nodes + delta - 1.0, 0.0) / delta) ** 2
    u = np.diff(W) / grid.dx
    return u * (M / np.mean(u))


def ramp_moment_closed_forms(M: float, delta: float, q: float) -> dict[str, float]:
    """Two closed-form candidates for m_q(0) of the edge ramp.

    Integrating U(x) = M ((x + delta - 1)_+ / delta)^2 directly gives
    M^q delta / (q (2q + 1)); the scaling variant (2M)^q delta / (2q + 1)
    also circulates.  Quadrature agrees with the direct integral; both
    vanish as delta -> 0, which is all the blow-up argument needs.
    """
    return {
        "direct-integral": M**q * delta / (q * (2.0 * q + 1.0)),
        "scaling-variant": (2.0 * M) ** q * delta / (2.0 * q + 1.0),
    }


def gaussian_bump(M: float, center: float, width: float, grid: Grid) -> np.ndarray:
    """Gaussian profile restricted to [0, 1], exact cell averages via the
    error function, normalised to mass M."""
    if width <= 0.0:
        raise ValueError("width must be positive")
    nodes = grid.nodes()
    cdf = 0.5 * (1.0 + erf((nodes - center) / (_SQRT2 * width)))
    u = np.diff(cdf) / grid.dx
    total = float(np.mean(u))
    if total <= 0.0:
        raise ValueError("gaussian bump carries no mass inside the domain")
    return u * (M / total)


def two_bump(M: float, center: float, width: float, center2: float,
             width2: float, mass_fraction: float, grid: Grid) -> np.ndarray:
    """Two gaussian bumps with the given mass split."""
    if not 0.0 <= mass_fraction <= 1.0:
        raise ValueError("mass_fraction must lie in [0, 1]")
    u = (mass_fraction * gaussian_bump(M, center, width, grid)
         + (1.0 - mass_fraction) * gaussian_bump(M, center2, width2, grid))
    return u * (M / np.mean(u))


def cosine_modes(amplitudes, grid: Grid) -> np.ndarray:
    """v0 = sum_k a_k cos(k pi x); every mode has zero mean."""
    x = grid.centers()
    v = np.zeros(grid.n)
    for k, amp in enumerate(amplitudes, start=1):
        v += amp * np.cos(k * np.pi * x)
    return v


def _piecewise_linear_cell_averages(x, y, grid: Grid) -> np.ndarray:
    """Exact cell averages of the piecewise-linear interpolant of (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise FileParseError("profile needs two columns with >= 2 rows")
    if np.any(np.diff(x) <= 0.0):
        raise FileParseError("profile abscissae must be strictly increasing")
    if x[0] > 1e-9 or x[-1] < 1.0 - 1e-9:
        raise FileParseError("profile must cover [0, 1]")
    # antiderivative of the interpolant at the knots, then at cell edges
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])
    slopes = np.diff(y) / np.diff(x)
    edges = np.clip(grid.nodes(), x[0], x[-1])
    idx = np.clip(np.searchsorted(x, edges, side="right") - 1, 0, x.size - 2)
    loc = edges - x[idx]
    F = cum[idx] + y[idx] * loc + 0.5 * slopes[idx] * loc**2
    return np.diff(F) / grid.dx


def load_profile(path, grid: Grid) -> np.ndarray:
    """Two-column CSV (x, value) with a header line, interpolated linearly
    and cell-averaged exactly."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise FileParseError(f"cannot parse profile {path}: {exc}") from exc
    if raw.shape[1] != 2:
        raise FileParseError(f"expected two columns in {path}")
    return _piecewise_linear_cell_averages(raw[:, 0], raw[:, 1], grid)


def build_initial_state(spec: InitialSpec, params: Params, grid: Grid) -> State:
    """Construct, normalise, project, and validate the initial state."""
    M = params.M
    if spec.kind == "edge-ramp":
        u0 = edge_ramp(M, spec.delta, grid)
    elif spec.kind == "constant":
        u0 = np.full(grid.n, M)
    elif spec.kind == "gaussian-bump":
        u0 = gaussian_bump(M, spec.center, spec.width, grid)
    elif spec.kind == "two-bump":
        u0 = two_bump(M, spec.center, spec.width, spec.center2, spec.width2,
                      spec.mass_fraction, grid)
    else:
        if spec.u_file is None:
            raise FileParseError("from-file density needs u_file")
        u0 = load_profile(spec.u_file, grid)
        total = float(np.mean(u0))
        if total <= 0.0:
            raise FileParseError("file density carries no positive mass")
        u0 = u0 * (M / total)

    if spec.v0_kind == "zero":
        v0 = np.zeros(grid.n)
    elif spec.v0_kind == "cosine-modes":
        v0 = cosine_modes(spec.v0_modes, grid)
    else:
        if spec.v0_file is None:
            raise FileParseError("from-file chemical needs v0_file")
        v0 = load_profile(spec.v0_file, grid)

    return validate_initial(u0, v0, params, grid)
