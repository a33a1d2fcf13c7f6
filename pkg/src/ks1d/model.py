"""Core domain types: physical parameters, uniform grid, and discrete state.

The system lives on the unit interval with no-flux boundaries.  A state
holds cell averages of the cell density u (non-negative, fixed mass M)
and the chemoattractant concentration v (zero mean).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MassMismatchError, NegativeDensityError

# Cell values in [DENSITY_FLOOR, 0) are round-off noise and get clamped to
# zero; anything more negative is an error.
DENSITY_FLOOR = -1e-13


def mass_tolerance(M: float) -> float:
    """Absolute tolerance for the discrete mass at validation time."""
    return 1e-10 * max(1.0, M)


def drift_tolerance(M: float, steps: int) -> float:
    """Mass drift allowance along a trajectory of the given length."""
    return 1e-10 * M * (1.0 + steps * 1e-6)


@dataclass(frozen=True)
class Params:
    """Physical constants of the chemotaxis system.

    Attributes
    ----------
    eps : float
        Chemical relaxation time; ``eps > 0`` evolves v in time while
        ``eps = 0`` selects the quasi-static (elliptic) solve for v.
    D : float
        Chemical diffusivity, strictly positive.
    gamma : float
        Chemical decay rate, non-negative.
    M : float
        Total cell mass on (0, 1), strictly positive.
    """

    eps: float
    D: float
    gamma: float
    M: float

    def __post_init__(self) -> None:
        if not self.D > 0.0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not self.M > 0.0:
            raise ValueError(f"M must be positive, got {self.M}")
        if self.eps < 0.0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class Grid:
    """Uniform cell grid on [0, 1] with n cells of width 1/n."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 4:
            raise ValueError(f"grid needs at least 4 cells, got {self.n}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    def centers(self) -> np.ndarray:
        """Cell centers x_i = (i + 1/2) dx."""
        return (np.arange(self.n) + 0.5) * self.dx

    def nodes(self) -> np.ndarray:
        """Cell edges x_k = k dx, k = 0..n."""
        return np.arange(self.n + 1) * self.dx


def _frozen_array(values) -> np.ndarray:
    out = np.array(values, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class State:
    """Cell-averaged (u, v) at time t.  Immutable once constructed."""

    t: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", _frozen_array(self.u))
        object.__setattr__(self, "v", _frozen_array(self.v))
        if self.u.ndim != 1 or self.u.shape != self.v.shape:
            raise ValueError("u and v must be 1-d arrays of equal length")
        if self.t < 0.0:
            raise ValueError("time must be non-negative")

    @property
    def n(self) -> int:
        return self.u.size

    @property
    def mass(self) -> float:
        """Discrete integral of u over (0, 1); equals mean(u) on a unit
        domain with uniform cells."""
        return float(np.mean(self.u))

    @property
    def v_mean(self) -> float:
        return float(np.mean(self.v))

    @property
    def sup_u(self) -> float:
        return float(np.max(self.u))


@dataclass(frozen=True)
class RunOutcome:
    """How a run ended.

    ``reason`` is one of ``horizon-reached``, ``blowup-detected``,
    ``dt-underflow``.  ``max_u`` is the sup norm of u at the final time.
    """

    reason: str
    t_final: float
    max_u: float
    steps: int


def project_mean_zero(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Remove the discrete mean so that sum(v) * dx == 0 to round-off."""
    v = np.asarray(v, dtype=float)
    if v.size != grid.n:
        raise ValueError(f"expected {grid.n} cell values, got {v.size}")
    return v - np.mean(v)


def validate_initial(u0, v0, params: Params, grid: Grid) -> State:
    """Check admissibility of initial data and return the t = 0 state.

    u0 must be non-negative up to the density floor and carry discrete
    mass M within :func:`mass_tolerance`; v0 is projected to zero mean.

    Raises
    ------
    NegativeDensityError
        Some cell of u0 lies below the density floor.
    MassMismatchError
        The discrete integral of u0 differs from M beyond tolerance.
    """
    u0 = np.array(u0, dtype=float, copy=True)
    v0 = np.asarray(v0, dtype=float)
    if u0.size != grid.n or v0.size != grid.n:
        raise ValueError(f"initial vectors must have length {grid.n}")
    umin = float(np.min(u0))
    if umin < DENSITY_FLOOR:
        raise NegativeDensityError(
            f"min(u0) = {umin:.3e} below floor {DENSITY_FLOOR:.1e}"
        )
    u0[u0 < 0.0] = 0.0
    mass = float(np.mean(u0))
    tol = mass_tolerance(params.M)
    if abs(mass - params.M) > tol:
        raise MassMismatchError(
            f"integral of u0 is {mass:.12g}, expected M = {params.M:.12g} "
            f"(tolerance {tol:.1e})"
        )
    return State(t=0.0, u=u0, v=project_mean_zero(v0, grid))
