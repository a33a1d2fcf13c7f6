"""Diffusivity models and their derived functions.

Every model evaluates the diffusivity ``a(r) > 0`` and its exact
antiderivative ``int_0^r a``.  Two derived objects drive the analysis:

* the entropy density ``b`` with ``b'' = a(r)/r`` and ``b(1) = b'(1) = 0``,
  precomputed on a log grid (:class:`EntropyTable`);
* the flux primitive ``A(r) = -int_r^inf a(s) ds``, defined whenever the
  tail of ``a`` is integrable, so that the nonlinear diffusion flux is the
  spatial derivative of ``A(u)``.

Models may declare decay constants ``(c1, p)`` asserting
``a(r) <= c1 (1+r)^(-p)``; the declaration is what blow-up certification
relies on, and :func:`check_entropy_bound` / :func:`check_flux_bound`
verify it numerically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    BoundViolatedError,
    FileParseError,
    ModelNotCertifiableError,
    NegativeArgumentError,
    TailNotIntegrableError,
)

__all__ = [
    "DiffusionModel",
    "PowerLawDiffusion",
    "ConstantDiffusion",
    "TabulatedDiffusion",
    "load_tabulated",
    "EntropyTable",
    "BoundCheckReport",
    "bound_samples",
    "check_entropy_bound",
    "check_flux_bound",
]


def _as_nonnegative(r) -> tuple[np.ndarray, bool]:
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0):
        raise NegativeArgumentError(f"density must be >= 0, got min {arr.min()}")
    return arr, np.isscalar(r) or arr.ndim == 0


def _maybe_scalar(values: np.ndarray, scalar: bool):
    return float(np.asarray(values).reshape(())) if scalar else values


class DiffusionModel:
    """Common interface: diffusivity, antiderivative, tail handling.

    ``c1`` and ``p`` are the *declared* decay-bound constants (may be None
    when the model makes no decay claim).
    """

    kind: str = "abstract"
    c1: float | None = None
    p: float | None = None

    def _a(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _antiderivative(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def tail_integrable(self) -> bool:
        raise NotImplementedError

    def tail_integral(self) -> float:
        """Total integral of a over (0, inf)."""
        raise NotImplementedError

    def a(self, r):
        """Diffusivity a(r) for r >= 0 (scalar or array)."""
        arr, scalar = _as_nonnegative(r)
        return _maybe_scalar(self._a(arr), scalar)

    def a_antiderivative(self, r):
        """Exact antiderivative int_0^r a(s) ds; finite for any finite r."""
        arr, scalar = _as_nonnegative(r)
        return _maybe_scalar(self._antiderivative(arr), scalar)

    def flux_primitive(self, r):
        """A(r) = -int_r^inf a(s) ds = int_0^r a - int_0^inf a (<= 0).

        Raises
        ------
        TailNotIntegrableError
            If the model has no certified integrable tail.
        """
        arr, scalar = _as_nonnegative(r)
        total = self.tail_integral()
        return _maybe_scalar(self._antiderivative(arr) - total, scalar)

    @property
    def declares_bound(self) -> bool:
        return self.c1 is not None and self.p is not None


@dataclass(frozen=True)
class PowerLawDiffusion(DiffusionModel):
    """a(r) = c1 (1 + r)^(-p).

    Any ``p >= 0`` is simulable; the tail is integrable (and hence the
    flux primitive exists) only for ``p > 1``, and certification further
    requires ``p in (1, 2]``.
    """

    c1: float
    p: float
    kind: str = "power-law"

    def __post_init__(self) -> None:
        if not self.c1 > 0.0:
            raise ValueError(f"c1 must be positive, got {self.c1}")
        if self.p < 0.0:
            raise ValueError(f"p must be >= 0, got {self.p}")

    def _a(self, r: np.ndarray) -> np.ndarray:
        return self.c1 * (1.0 + r) ** (-self.p)

    def _antiderivative(self, r: np.ndarray) -> np.ndarray:
        # expm1/log1p form stays accurate near r = 0
        if self.p == 1.0:
            return self.c1 * np.log1p(r)
        return self.c1 * np.expm1((1.0 - self.p) * np.log1p(r)) / (1.0 - self.p)

    @property
    def tail_integrable(self) -> bool:
        return self.p > 1.0

    def tail_integral(self) -> float:
        if not self.tail_integrable:
            raise TailNotIntegrableError(
                f"power-law tail with p = {self.p} <= 1 is not integrable"
            )
        return self.c1 / (self.p - 1.0)


@dataclass(frozen=True)
class ConstantDiffusion(DiffusionModel):
    """a(r) = value.  A declared (c1, p) bound, if any, is certainly wrong
    for p > 0 and exists so the bound checks can demonstrate rejection."""

    value: float
    c1: float | None = None
    p: float | None = None
    kind: str = "constant"

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise ValueError(f"diffusivity must be positive, got {self.value}")

    def _a(self, r: np.ndarray) -> np.ndarray:
        return np.full_like(r, self.value)

    def _antiderivative(self, r: np.ndarray) -> np.ndarray:
        return self.value * r

    @property
    def tail_integrable(self) -> bool:
        return False

    def tail_integral(self) -> float:
        raise TailNotIntegrableError("constant diffusivity has no integrable tail")


class TabulatedDiffusion(DiffusionModel):
    """Piecewise-linear diffusivity from samples (r_j, a_j), r_0 = 0.

    Beyond the last sample the diffusivity follows the declared power
    decay matched at the last point, or stays constant when no (c1, p)
    is declared.  The antiderivative is exact (piecewise quadratic).
    """

    kind = "tabulated"

    def __init__(self, r, a, c1: float | None = None, p: float | None = None):
        r = np.asarray(r, dtype=float)
        a = np.asarray(a, dtype=float)
        if r.ndim != 1 or r.shape != a.shape or r.size < 2:
            raise ValueError("need matching 1-d r and a arrays with >= 2 samples")
        if r[0] != 0.0:
            raise ValueError("tabulated diffusivity must start at r = 0")
        if np.any(np.diff(r) <= 0.0):
            raise ValueError("r samples must be strictly increasing")
        if np.any(a <= 0.0):
            raise ValueError("a samples must be positive")
        self.r_table = r
        self.a_table = a
        self.c1 = c1
        self.p = p
        self._slopes = np.diff(a) / np.diff(r)
        # exact cumulative integral at the knots (trapezoid is exact here)
        self._cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * np.diff(r))]
        )

    def _a(self, r: np.ndarray) -> np.ndarray:
        r_last, a_last = self.r_table[-1], self.a_table[-1]
        out = np.interp(r, self.r_table, self.a_table)
        beyond = r > r_last
        if np.any(beyond):
            if self.p is not None:
                out = np.where(
                    beyond,
                    a_last * ((1.0 + r) / (1.0 + r_last)) ** (-self.p),
                    out,
                )
            else:
                out = np.where(beyond, a_last, out)
        return out

    def _antiderivative(self, r: np.ndarray) -> np.ndarray:
        shape = np.shape(r)
        r = np.atleast_1d(r)
        r_last, a_last = self.r_table[-1], self.a_table[-1]
        idx = np.clip(np.searchsorted(self.r_table, r, side="right") - 1, 0,
                      self.r_table.size - 2)
        loc = r - self.r_table[idx]
        out = self._cum[idx] + self.a_table[idx] * loc + 0.5 * self._slopes[idx] * loc**2
        beyond = r > r_last
        if np.any(beyond):
            rb = np.where(beyond, r, r_last)
            if self.p is None:
                tail = a_last * (rb - r_last)
            elif self.p == 1.0:
                tail = a_last * (1.0 + r_last) * np.log((1.0 + rb) / (1.0 + r_last))
            else:
                tail = (
                    a_last
                    * (1.0 + r_last) ** self.p
                    * ((1.0 + rb) ** (1.0 - self.p) - (1.0 + r_last) ** (1.0 - self.p))
                    / (1.0 - self.p)
                )
            out = np.where(beyond, self._cum[-1] + tail, out)
        return out.reshape(shape)

    @property
    def tail_integrable(self) -> bool:
        return self.p is not None and self.p > 1.0

    def tail_integral(self) -> float:
        if not self.tail_integrable:
            raise TailNotIntegrableError(
                "tabulated diffusivity needs a declared p > 1 for an integrable tail"
            )
        r_last, a_last = self.r_table[-1], self.a_table[-1]
        return float(self._cum[-1] + a_last * (1.0 + r_last) / (self.p - 1.0))


def load_tabulated(path, c1: float | None = None, p: float | None = None) -> TabulatedDiffusion:
    """Read a two-column text file ``r,a`` with a header line."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise FileParseError(f"cannot parse diffusivity table {path}: {exc}") from exc
    if raw.shape[1] != 2:
        raise FileParseError(f"expected two columns r,a in {path}")
    try:
        return TabulatedDiffusion(raw[:, 0], raw[:, 1], c1=c1, p=p)
    except ValueError as exc:
        raise FileParseError(f"invalid diffusivity table {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# entropy density


class EntropyTable:
    """Precomputed entropy density b with b'' = a(r)/r, b(1) = b'(1) = 0.

    Node values come from per-panel Gauss quadrature of
    ``b'(r) = int_1^r a(s)/s ds`` on a two-piece geometric grid that
    contains r = 1 exactly, combined with the model's exact antiderivative
    through ``b(r) = r b'(r) - int_1^r a``.  Evaluation interpolates with a
    cubic spline in log r; below the first node b follows the analytic
    ``b0 + a(0) (r log r - r) + C r`` form, above the last node the linear
    asymptote ``b(R) + b'(R) (r - R)``.
    """

    def __init__(self, model: DiffusionModel, r_min: float = 1e-6,
                 r_max: float = 1e8, n_nodes: int = 2048):
        if not (0.0 < r_min < 1.0 < r_max):
            raise ValueError("need r_min < 1 < r_max")
        self.model = model
        n_lo = max(8, round(n_nodes * np.log(1.0 / r_min)
                            / np.log(r_max / r_min)))
        lo = np.geomspace(r_min, 1.0, n_lo)
        hi = np.geomspace(1.0, r_max, n_nodes - n_lo + 1)
        nodes = np.concatenate([lo[:-1], hi])
        i1 = n_lo - 1
        nodes[i1] = 1.0

        # 7-point Gauss-Legendre on each panel for b' increments
        xg, wg = np.polynomial.legendre.leggauss(7)
        mid = 0.5 * (nodes[1:] + nodes[:-1])
        half = 0.5 * (nodes[1:] - nodes[:-1])
        pts = mid[:, None] + half[:, None] * xg[None, :]
        dg = (half[:, None] * wg[None, :] * model.a(pts) / pts).sum(axis=1)

        g = np.zeros(nodes.size)
        g[i1 + 1:] = np.cumsum(dg[i1:])
        g[:i1] = -np.cumsum(dg[:i1][::-1])[::-1]
        integral_from_1 = model.a_antiderivative(nodes) - model.a_antiderivative(1.0)
        b = nodes * g - integral_from_1
        b[i1] = 0.0
        g[i1] = 0.0

        self.r_nodes = nodes
        self.b_values = b
        self.g_values = g
        self._t = np.log(nodes)
        self._spline_b = CubicSpline(self._t, b)
        self._spline_g = CubicSpline(self._t, g)

        # analytic continuation below r_min: b ~ b0 + a(0)(r log r - r) + C r
        self.b0 = float(model.a_antiderivative(1.0))
        self.a0 = float(model.a(0.0))
        rm = r_min
        self._low_c = (b[0] - self.b0 - self.a0 * (rm * np.log(rm) - rm)) / rm
        self.r_min = r_min
        self.r_max = r_max

    def entropy(self, r):
        """b(r) >= 0 for r >= 0 (scalar or array)."""
        arr, scalar = _as_nonnegative(r)
        shape = arr.shape
        arr = np.atleast_1d(arr)
        out = np.empty_like(arr)
        low = arr < self.r_min
        high = arr > self.r_max
        mid = ~(low | high)
        if np.any(mid):
            out[mid] = self._spline_b(np.log(arr[mid]))
        if np.any(low):
            rl = arr[low]
            rlogr = np.where(rl > 0.0, rl * np.log(np.where(rl > 0.0, rl, 1.0)), 0.0)
            out[low] = self.b0 + self.a0 * (rlogr - rl) + self._low_c * rl
        if np.any(high):
            out[high] = self.b_values[-1] + self.g_values[-1] * (arr[high] - self.r_max)
        out = np.maximum(out, 0.0)
        return _maybe_scalar(out.reshape(shape), scalar)

    def entropy_prime(self, r):
        """b'(r); tends to -inf as r -> 0+ when a(0) > 0."""
        arr, scalar = _as_nonnegative(r)
        shape = arr.shape
        arr = np.atleast_1d(arr)
        out = np.empty_like(arr)
        low = arr < self.r_min
        high = arr > self.r_max
        mid = ~(low | high)
        if np.any(mid):
            out[mid] = self._spline_g(np.log(arr[mid]))
        if np.any(low):
            with np.errstate(divide="ignore"):
                out[low] = self.a0 * np.log(arr[low]) + self._low_c
        if np.any(high):
            out[high] = self.g_values[-1]
        return _maybe_scalar(out.reshape(shape), scalar)


# ---------------------------------------------------------------------------
# certified bound checks


@dataclass(frozen=True)
class BoundCheckReport:
    """Outcome of a bound verification: the least margin (bound minus
    value, negative would mean violation) and where it occurred."""

    name: str
    n_samples: int
    worst_margin: float
    worst_r: float


def bound_samples(r_max: float = 1e8, count: int = 241) -> np.ndarray:
    """Default sample set: 0, 1, and a log sweep up to r_max."""
    return np.unique(np.concatenate([[0.0, 1.0], np.geomspace(1e-8, r_max, count)]))


def _require_declaration(model: DiffusionModel) -> tuple[float, float]:
    if not model.declares_bound:
        raise ModelNotCertifiableError(
            f"{model.kind} model declares no (c1, p) decay bound"
        )
    return float(model.c1), float(model.p)


def entropy_majorant(r, c1: float, p: float) -> np.ndarray:
    """Piecewise bound on b: c1 (r log r - r + 1) on [0,1], c1 (r-1)/p above."""
    r = np.asarray(r, dtype=float)
    rlogr = np.where(r > 0.0, r * np.log(np.where(r > 0.0, r, 1.0)), 0.0)
    return np.where(r <= 1.0, c1 * (rlogr - r + 1.0), c1 * (r - 1.0) / p)


def check_entropy_bound(model: DiffusionModel, table: EntropyTable,
                        samples=None, tol: float = 1e-9) -> BoundCheckReport:
    """Verify a <= c1 (1+r)^(-p) and b <= majorant <= c1 (1+r) at samples.

    Raises :class:`BoundViolatedError` when any inequality fails beyond
    ``tol * (1 + |bound|)``; a failure means the declared (c1, p) is wrong
    for this diffusivity or the quadrature broke down.
    """
    c1, p = _require_declaration(model)
    r = bound_samples() if samples is None else np.asarray(samples, dtype=float)
    a_bound = c1 * (1.0 + r) ** (-p)
    maj = entropy_majorant(r, c1, p)
    lin = c1 * (1.0 + r)
    checks = [
        ("a <= c1(1+r)^-p", a_bound - model.a(r)),
        ("b <= majorant", maj - np.atleast_1d(table.entropy(r))),
        ("majorant <= c1(1+r)", lin - maj),
    ]
    worst_margin, worst_r, worst_name = np.inf, 0.0, ""
    for name, margin in checks:
        k = int(np.argmin(margin))
        if margin[k] < worst_margin:
            worst_margin, worst_r, worst_name = float(margin[k]), float(r[k]), name
        scale = tol * (1.0 + np.abs(margin[k]) + np.abs(a_bound[k]) + np.abs(maj[k]))
        if margin[k] < -scale:
            raise BoundViolatedError(
                f"{name} fails at r = {r[k]:.6g} by {-margin[k]:.3e} "
                f"(declared c1 = {c1}, p = {p})"
            )
    return BoundCheckReport("entropy-bound", r.size, worst_margin, worst_r)


def check_flux_bound(model: DiffusionModel, samples=None,
                     tol: float = 1e-9) -> BoundCheckReport:
    """Verify 0 <= -A(r) r <= c1 r^(2-p) / (p-1) at samples (needs p in (1,2])."""
    c1, p = _require_declaration(model)
    if not 1.0 < p <= 2.0:
        raise ModelNotCertifiableError(f"flux bound needs p in (1, 2], got p = {p}")
    r = bound_samples() if samples is None else np.asarray(samples, dtype=float)
    val = -np.atleast_1d(model.flux_primitive(r)) * r
    bound = c1 * r ** (2.0 - p) / (p - 1.0)
    lower = val  # must be >= 0
    upper = bound - val
    for name, margin in (("-A(r) r >= 0", lower), ("-A(r) r <= bound", upper)):
        k = int(np.argmin(margin))
        if margin[k] < -tol * (1.0 + abs(bound[k])):
            raise BoundViolatedError(
                f"{name} fails at r = {r[k]:.6g} by {-margin[k]:.3e}"
            )
    worst = np.minimum(lower, upper)
    k = int(np.argmin(worst))
    return BoundCheckReport("flux-bound", r.size, float(worst[k]), float(r[k]))
