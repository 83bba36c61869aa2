"""Macroscopic stationary free-boundary solutions.

The field h solves dh/dx = -j / mobility(m(h)) outward from the interface,
with m recovered from h through the envelope branch inverse (stable branch)
or the metastable branch inverse.  Every stable solution is a translated
restriction of the maximal one, which saturates m -> +-1 linearly at +-ell_j.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BranchRangeError, DomainError, InfeasibleError
from .thermo import (
    ThermoParams,
    envelope_prime_inverse,
    metastable_branch_limit,
    metastable_inverse,
    mobility,
    potential_prime,
)

SATURATION_GAP = 1e-6   # stop the maximal solution at m = 1 - SATURATION_GAP
_ODE_RTOL = 1e-10
_ODE_ATOL = 1e-12


@dataclass(frozen=True)
class MaximalSolution:
    """Maximal stable solution centered at its own interface (x0 = 0)."""

    params: ThermoParams
    j: float
    ell_j: float            # stopping abscissa where m reaches 1 - gap
    _h_pos: Callable        # dense h(x) for x in [0, ell_j], j < 0 branch

    def h_of_x(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.ell_j * (1 + 1e-12)):
            raise InfeasibleError("abscissa beyond the maximal interval",
                                  ell_j=self.ell_j)
        sgn = 1.0 if self.j < 0 else -1.0
        out = sgn * np.sign(x) * self._h_pos(np.clip(np.abs(x), 0.0, self.ell_j))
        return out if out.ndim else float(out)

    def m_of_x(self, x):
        x = np.asarray(x, dtype=float)
        h = np.atleast_1d(self.h_of_x(x))
        sgn = 1.0 if self.j < 0 else -1.0
        side = sgn * np.sign(np.atleast_1d(x))
        side[side == 0.0] = 1.0  # interface point reported on the upper side
        out = np.array([
            envelope_prime_inverse(self.params, hv, side=sv)
            for hv, sv in zip(h, side)
        ])
        return out if np.asarray(x).ndim else float(out[0])


@dataclass(frozen=True)
class MetastableMaximal:
    """Metastable solution from the interface out to the branch breakdown."""

    params: ThermoParams
    j: float                # > 0
    ell_break: float        # abscissa where the field reaches the branch edge
    _h_pos: Callable        # dense h(x) <= 0 for x in [0, ell_break]

    def h_of_x(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.ell_break * (1 + 1e-12)):
            raise BranchRangeError("abscissa beyond the metastable range",
                                   breakdown=self.ell_break)
        out = np.sign(x) * self._h_pos(np.clip(np.abs(x), 0.0, self.ell_break))
        return out if out.ndim else float(out)

    def m_of_x(self, x):
        x = np.asarray(x, dtype=float)
        h = np.atleast_1d(self.h_of_x(x))
        branch = np.where(np.atleast_1d(x) >= 0.0, 1.0, -1.0)
        out = np.array([
            metastable_inverse(self.params, hv, bv)
            for hv, bv in zip(h, branch)
        ])
        return out if np.asarray(x).ndim else float(out[0])


@dataclass(frozen=True)
class StefanSolution:
    """Sampled macroscopic pair with the jump row duplicated at x0."""

    params: ThermoParams
    j: float
    x0: float
    ell: float
    ell_j: float
    branch: str             # "stable" | "metastable"
    x: np.ndarray
    h: np.ndarray
    m: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,h,m\n")
        for xv, hv, mv in zip(self.x, self.h, self.m):
            buf.write(f"{xv:.17g},{hv:.17g},{mv:.17g}\n")
        return buf.getvalue()


def solve_maximal(params: ThermoParams, j) -> MaximalSolution:
    """Integrate the field outward from the interface until saturation.

    Adaptive embedded Runge-Kutta on h with m(h) via the branch inverse;
    stops when m reaches 1 - 1e-6 and reports the stopping abscissa.
    """
    if j == 0.0 or not np.isfinite(j):
        raise DomainError("zero or non-finite current has no maximal solution")
    ja = abs(j)
    h_stop = float(potential_prime(params, 1.0 - SATURATION_GAP))

    def rhs(x, h):
        m = envelope_prime_inverse(params, max(h[0], 0.0), side=+1)
        return [ja / float(mobility(params, m))]

    def event(x, h):
        return h[0] - h_stop

    event.terminal = True
    event.direction = 1.0
    # mobility * curvature <= 1 on the outer branch, so ell_j <= (1 - m_beta)/|j|
    x_max = 1.05 * (1.0 - params.m_beta) / ja + 1.0
    sol = solve_ivp(rhs, (0.0, x_max), [0.0], events=event,
                    rtol=_ODE_RTOL, atol=_ODE_ATOL, dense_output=True,
                    method="RK45")
    if sol.t_events[0].size == 0:
        raise DomainError("maximal solution did not reach saturation")
    ell_j = float(sol.t_events[0][0])
    dense = sol.sol

    def h_pos(x):
        x = np.asarray(x, dtype=float)
        return np.maximum(dense(np.clip(x, 0.0, ell_j))[0], 0.0)

    return MaximalSolution(params, float(j), ell_j, h_pos)


def _metastable_maximal(params: ThermoParams, j) -> MetastableMaximal:
    if j <= 0.0 or not np.isfinite(j):
        raise DomainError("metastable arrangement needs a positive current")
    h_edge = -metastable_branch_limit(params)

    def rhs(x, h):
        # trial stages can overshoot the branch edge; clamp them back inside
        hv = float(np.clip(h[0], h_edge * (1.0 - 1e-12), 0.0))
        m = metastable_inverse(params, hv, +1)
        return [-j / float(mobility(params, m))]

    def event(x, h):
        return h[0] - h_edge * (1.0 - 1e-9)

    event.terminal = True
    event.direction = -1.0
    x_max = 2.0 * abs(h_edge) / j + 1.0
    sol = solve_ivp(rhs, (0.0, x_max), [0.0], events=event,
                    rtol=_ODE_RTOL, atol=_ODE_ATOL, dense_output=True,
                    method="RK45")
    if sol.t_events[0].size == 0:
        raise DomainError("metastable solution did not reach the branch edge")
    ell_break = float(sol.t_events[0][0])
    dense = sol.sol

    def h_pos(x):
        x = np.asarray(x, dtype=float)
        return np.minimum(dense(np.clip(x, 0.0, ell_break))[0], 0.0)

    return MetastableMaximal(params, float(j), ell_break, h_pos)


def _sample_with_jump(x0, ell, n_samples):
    """Uniform macroscopic samples on [-ell, ell] with x0 duplicated."""
    base = np.linspace(-ell, ell, n_samples)
    lower = base[base < x0]
    upper = base[base > x0]
    return (np.concatenate([lower, [x0]]), np.concatenate([[x0], upper]))


def solve_fixed_interface(params: ThermoParams, j, x0, ell,
                          n_samples=801,
                          maximal: MaximalSolution | None = None) -> StefanSolution:
    """Restriction/translation of the maximal solution to (-ell, ell).

    m jumps across the plateau at x0 (from -m_beta to +m_beta for j < 0);
    the CSV output carries the duplicated abscissa.
    """
    if ell <= 0.0:
        raise DomainError("half-length must be positive")
    if not -ell < x0 < ell:
        raise DomainError("interface must be interior to the domain")
    maximal = maximal if maximal is not None else solve_maximal(params, j)
    if ell + abs(x0) > maximal.ell_j:
        raise InfeasibleError(
            f"domain half-length {ell} with interface {x0} exceeds the "
            f"maximal interval (ell_j = {maximal.ell_j:.6g})",
            ell_j=maximal.ell_j,
        )
    lower, upper = _sample_with_jump(x0, ell, n_samples)
    sgn = 1.0 if j < 0 else -1.0
    h_lower = np.atleast_1d(maximal.h_of_x(lower - x0))
    h_upper = np.atleast_1d(maximal.h_of_x(upper - x0))
    m_lower = np.array([
        envelope_prime_inverse(params, hv, side=-sgn) for hv in h_lower
    ])
    m_upper = np.array([
        envelope_prime_inverse(params, hv, side=+sgn) for hv in h_upper
    ])
    x = np.concatenate([lower, upper])
    h = np.concatenate([h_lower, h_upper])
    m = np.concatenate([m_lower, m_upper])
    return StefanSolution(params, float(j), float(x0), float(ell),
                          maximal.ell_j, "stable", x, h, m)


def solve_dirichlet(params: ThermoParams, m_minus, m_plus, ell,
                    tol=1e-10, max_iter=200):
    """Two-parameter shooting for boundary data outside the plateau.

    Outer bisection on |j| matches the profile width; the translation then
    matches the boundary values.  Returns (j, x0, solution).
    """
    if not (-1.0 < m_minus < -params.m_beta and params.m_beta < m_plus < 1.0):
        if -1.0 < m_plus < -params.m_beta and params.m_beta < m_minus < 1.0:
            j, x0, sol = solve_dirichlet(params, -m_minus, -m_plus, ell,
                                         tol, max_iter)
            return -j, -x0, solve_fixed_interface(params, -j, -x0, ell)
        raise DomainError("boundary data must straddle the plateau")

    def width_of(ja):
        mx = solve_maximal(params, -ja)
        t_plus = _abscissa_of_m(params, mx, m_plus)
        t_minus = _abscissa_of_m(params, mx, -m_minus)
        return t_plus + t_minus, t_plus, mx

    # bracket |j|: width scales like 1/|j|
    ja = 1.0
    w, _, _ = width_of(ja)
    while w < 2.0 * ell:
        ja *= 0.5
        w, _, _ = width_of(ja)
        if ja < 1e-12:
            raise DomainError("could not bracket the current")
    lo, hi = ja, 2.0 * ja
    w_hi, _, _ = width_of(hi)
    while w_hi > 2.0 * ell:
        hi *= 2.0
        w_hi, _, _ = width_of(hi)
        if hi > 1e12:
            raise DomainError("could not bracket the current")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        w, t_plus, mx = width_of(mid)
        if abs(w - 2.0 * ell) < tol:
            break
        if w > 2.0 * ell:
            lo = mid
        else:
            hi = mid
    else:
        raise DomainError("width bisection did not converge")
    j = -mid
    x0 = ell - t_plus
    return j, x0, solve_fixed_interface(params, j, x0, ell, maximal=mx)


def _abscissa_of_m(params, maximal: MaximalSolution, m_target) -> float:
    """Positive abscissa where the maximal profile reaches m_target."""
    if not params.m_beta < m_target < 1.0:
        raise DomainError("target must lie strictly between m_beta and 1")
    h_target = float(potential_prime(params, m_target))
    from .thermo import _bisect

    f = lambda x: float(maximal._h_pos(x)) - h_target
    if f(maximal.ell_j) < 0.0:
        raise InfeasibleError("target beyond the maximal solution",
                              ell_j=maximal.ell_j)
    return float(_bisect(f, 0.0, maximal.ell_j, tol=1e-14))


def solve_metastable(params: ThermoParams, j, ell, n_samples=801,
                     mirrored=False,
                     maximal: MetastableMaximal | None = None) -> StefanSolution:
    """Metastable arrangement for j > 0: the field decreases through 0 and m
    jumps upward across the plateau at the origin, staying in the metastable
    bands on both sides.

    ``mirrored=True`` returns the sign-flipped arrangement (current -j).
    """
    if mirrored:
        base = solve_metastable(params, -j if j < 0 else j, ell,
                                n_samples=n_samples, maximal=maximal)
        return StefanSolution(params, -base.j, base.x0, base.ell, base.ell_j,
                              base.branch, base.x, -base.h, -base.m)
    if j <= 0.0:
        raise DomainError("metastable arrangement needs j > 0 "
                          "(use mirrored=True for the flipped one)")
    maximal = maximal if maximal is not None else _metastable_maximal(params, j)
    if ell >= maximal.ell_break:
        raise BranchRangeError(
            f"half-length {ell} reaches the branch breakdown "
            f"(at {maximal.ell_break:.6g})",
            breakdown=maximal.ell_break,
        )
    lower, upper = _sample_with_jump(0.0, ell, n_samples)
    h = np.concatenate([maximal.h_of_x(lower), maximal.h_of_x(upper)])
    m = np.concatenate([
        [metastable_inverse(params, hv, -1) for hv in maximal.h_of_x(lower)],
        [metastable_inverse(params, hv, +1) for hv in maximal.h_of_x(upper)],
    ])
    x = np.concatenate([lower, upper])
    return StefanSolution(params, float(j), 0.0, float(ell),
                          maximal.ell_break, "metastable", x, h, np.asarray(m))
