"""Compiled inner loops: fluxes, tridiagonal solves, CFL scan.

All kernels work on preallocated arrays and return scalars only.  The
power-law diffusivity gets dedicated code paths (common exponents avoid
libm pow); every other model supplies precomputed ``phi = int_0^u a`` and
``a(u)`` arrays per step.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _phi_pl(r, c1, p):
    # expm1/log1p keeps the antiderivative accurate near r = 0, where the
    # naive power difference loses all digits (flat near-vacuum cells
    # would otherwise produce wild interface secants)
    if p == 2.0:
        return c1 * r / (1.0 + r)
    if p == 1.0:
        return c1 * np.log1p(r)
    if p == 0.0:
        return c1 * r
    return c1 * np.expm1((1.0 - p) * np.log1p(r)) / (1.0 - p)


@njit(cache=True, inline="always")
def _a_pl(r, c1, p):
    if p == 2.0:
        q = 1.0 + r
        return c1 / (q * q)
    if p == 0.5:
        return c1 / np.sqrt(1.0 + r)
    if p == 1.0:
        return c1 / (1.0 + r)
    if p == 0.0:
        return c1
    return c1 * (1.0 + r) ** (-p)


@njit(cache=True)
def prep_powerlaw(u, v, phi, c1, p, dx):
    """Fill phi = int_0^u a and scan interface stiffness and drift.

    Returns (amax, vmax): the largest interface diffusivity secant
    |dPhi/du| (falling back to a(u) on flat pairs) and max |dv|/dx.
    """
    n = u.size
    amax = 0.0
    vmax = 0.0
    phi[0] = _phi_pl(u[0], c1, p)
    for j in range(1, n):
        phi[j] = _phi_pl(u[j], c1, p)
        du = u[j] - u[j - 1]
        if du != 0.0:
            ab = abs((phi[j] - phi[j - 1]) / du)
        else:
            ab = _a_pl(u[j], c1, p)
        if ab > amax:
            amax = ab
        g = abs(v[j] - v[j - 1]) / dx
        if g > vmax:
            vmax = g
    return amax, vmax


@njit(cache=True)
def prep_generic(u, v, phi, a_u, dx):
    """Same scan as prep_powerlaw with phi and a(u) already evaluated."""
    n = u.size
    amax = 0.0
    vmax = 0.0
    for j in range(1, n):
        du = u[j] - u[j - 1]
        if du != 0.0:
            ab = abs((phi[j] - phi[j - 1]) / du)
        else:
            ab = a_u[j]
        if ab > amax:
            amax = ab
        g = abs(v[j] - v[j - 1]) / dx
        if g > vmax:
            vmax = g
    return amax, vmax


@njit(cache=True)
def advance_u(u, v, phi, u_out, dx, dt):
    """Conservative update of u from interface fluxes.

    Interface flux between cells j-1 and j is
    ``(phi[j] - phi[j-1])/dx - u_up (v[j] - v[j-1])/dx`` with the upwind
    cell chosen by the sign of the v difference; wall fluxes vanish.
    Returns (min_u, max_u, sum_u) of the updated cells.
    """
    n = u.size
    s = dt / dx
    f_left = 0.0
    for j in range(1, n):
        dv = v[j] - v[j - 1]
        up = u[j - 1] if dv > 0.0 else u[j]
        f = (phi[j] - phi[j - 1]) / dx - up * dv / dx
        u_out[j - 1] = u[j - 1] + s * (f - f_left)
        f_left = f
    u_out[n - 1] = u[n - 1] - s * f_left
    mn = u_out[0]
    mx = u_out[0]
    tot = 0.0
    for j in range(n):
        x = u_out[j]
        if x < mn:
            mn = x
        if x > mx:
            mx = x
        tot += x
    return mn, mx, tot


@njit(cache=True)
def v_step_explicit(u, v, v_out, eps, D, gamma, M, dx, dt):
    """Forward Euler on eps v_t = D lap(v) - gamma v + u - M (Neumann).

    Returns sum((dv/dt)^2) dx, the squared L2 norm of the discrete rate.
    """
    n = v.size
    r = D / (dx * dx)
    ssq = 0.0
    for i in range(n):
        left = v[i - 1] if i > 0 else v[0]
        right = v[i + 1] if i < n - 1 else v[n - 1]
        rate = (r * (left - 2.0 * v[i] + right) - gamma * v[i] + u[i] - M) / eps
        v_out[i] = v[i] + dt * rate
        ssq += rate * rate
    return ssq * dx


@njit(cache=True)
def v_step_implicit(u, v, v_out, eps, D, gamma, M, dx, dt):
    """Backward Euler: (eps/dt + gamma - D lap) v_new = eps v/dt + u - M.

    Thomas solve on the Neumann tridiagonal system.  Returns
    sum((dv/dt)^2) dx.
    """
    n = v.size
    r = D / (dx * dx)
    c = eps / dt + gamma
    cp = np.empty(n)
    w = np.empty(n)
    d0 = c + r
    cp[0] = -r / d0
    w[0] = (eps * v[0] / dt + u[0] - M) / d0
    for i in range(1, n):
        di = c + (r if i == n - 1 else 2.0 * r)
        m = di + r * cp[i - 1]
        cp[i] = -r / m
        w[i] = ((eps * v[i] / dt + u[i] - M) + r * w[i - 1]) / m
    ssq = 0.0
    v_out[n - 1] = w[n - 1]
    d = (v_out[n - 1] - v[n - 1]) / dt
    ssq += d * d
    for i in range(n - 2, -1, -1):
        v_out[i] = w[i] - cp[i] * v_out[i + 1]
        d = (v_out[i] - v[i]) / dt
        ssq += d * d
    return ssq * dx


@njit(cache=True)
def v_solve_elliptic(u, v_out, D, gamma, M, dx):
    """Quasi-static chemical profile: -D lap(v) + gamma v = u - M.

    gamma = 0 is the singular Neumann problem: the right side is
    recentred, one value pinned, and the mean removed afterwards.
    """
    n = u.size
    r = D / (dx * dx)
    cp = np.empty(n)
    w = np.empty(n)
    if gamma > 0.0:
        d0 = gamma + r
        cp[0] = -r / d0
        w[0] = (u[0] - M) / d0
        for i in range(1, n):
            di = gamma + (r if i == n - 1 else 2.0 * r)
            m = di + r * cp[i - 1]
            cp[i] = -r / m
            w[i] = ((u[i] - M) + r * w[i - 1]) / m
        v_out[n - 1] = w[n - 1]
        for i in range(n - 2, -1, -1):
            v_out[i] = w[i] - cp[i] * v_out[i + 1]
    else:
        mean_rhs = 0.0
        for i in range(n):
            mean_rhs += u[i] - M
        mean_rhs /= n
        # pin v[0] = 0, solve rows 1..n-1, then project the mean out
        cp[0] = 0.0
        w[0] = 0.0
        for i in range(1, n):
            di = r if i == n - 1 else 2.0 * r
            m = di + r * cp[i - 1]
            cp[i] = -r / m
            w[i] = ((u[i] - M - mean_rhs) + r * w[i - 1]) / m
        v_out[n - 1] = w[n - 1]
        for i in range(n - 2, -1, -1):
            v_out[i] = w[i] - cp[i] * v_out[i + 1]
        mean_v = 0.0
        for i in range(n):
            mean_v += v_out[i]
        mean_v /= n
        for i in range(n):
            v_out[i] -= mean_v
    return 0.0


@njit(cache=True)
def h_step_implicit(h, h_out, eps, D, gamma, dx, dt):
    """Backward Euler for eps h_t = D h_xx - gamma h on nodes, h = 0 at
    both walls."""
    m = h.size - 2  # interior nodes
    r = D / (dx * dx)
    c = eps / dt + gamma + 2.0 * r
    cp = np.empty(m)
    w = np.empty(m)
    cp[0] = -r / c
    w[0] = (eps * h[1] / dt) / c
    for i in range(1, m):
        denom = c + r * cp[i - 1]
        cp[i] = -r / denom
        w[i] = (eps * h[i + 1] / dt + r * w[i - 1]) / denom
    h_out[0] = 0.0
    h_out[h.size - 1] = 0.0
    h_out[m] = w[m - 1]
    for i in range(m - 2, -1, -1):
        h_out[i + 1] = w[i] - cp[i] * h_out[i + 2]


@njit(cache=True)
def h_step_explicit(h, h_out, eps, D, gamma, dx, dt):
    """Forward Euler companion of h_step_implicit."""
    n = h.size
    r = D / (dx * dx)
    h_out[0] = 0.0
    h_out[n - 1] = 0.0
    for i in range(1, n - 1):
        lap = h[i - 1] - 2.0 * h[i] + h[i + 1]
        h_out[i] = h[i] + dt * (r * lap - gamma * h[i]) / eps
