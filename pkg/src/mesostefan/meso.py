"""Mesoscopic building blocks shared by every profile solver.

A state is a pair (h, m) on a grid together with the linearization weight
p = beta / cosh^2(beta J^neum*m + beta h).  At exact fixed points of
m = tanh(beta J^neum*m + beta h) the weight coincides with the mobility
chi(m), which the solvers exploit throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DomainError, SaturationError
from .grids import Grid, Kernel, conv_values, neumann_matrix
from .thermo import ThermoParams

SATURATION_LIMIT = 1.0 - 1e-8
_STALL_RATIO = 0.999
_STALL_STEPS = 50


@dataclass(frozen=True)
class MesoState:
    """Immutable (h, m) pair with its linearization weight and residual."""

    params: ThermoParams
    kernel: Kernel
    grid: Grid
    h: np.ndarray
    m: np.ndarray
    p: np.ndarray
    residual_norm: float

    def weighted_dot(self, f, g) -> float:
        """Inner product with weight 1/p (trapezoid quadrature)."""
        w = f * g / self.p
        return float(np.trapezoid(w, dx=self.grid.spacing))


def _field_argument(params, kernel, grid, h, m):
    return params.beta * (conv_values(kernel, grid, m, "neumann") + h)


def make_state(params: ThermoParams, kernel: Kernel, grid: Grid,
               h: np.ndarray, m: np.ndarray) -> MesoState:
    h = np.asarray(h, dtype=float)
    m = np.asarray(m, dtype=float)
    arg = _field_argument(params, kernel, grid, h, m)
    p = params.beta / np.cosh(arg) ** 2
    res = float(np.max(np.abs(m - np.tanh(arg))))
    h.setflags(write=False)
    m.setflags(write=False)
    p.setflags(write=False)
    return MesoState(params, kernel, grid, h, m, p, res)


def effective_field(params: ThermoParams, kernel: Kernel, grid: Grid,
                    m: np.ndarray) -> np.ndarray:
    """The field h making m an exact fixed point: artanh(m)/beta - J^neum*m."""
    m = np.asarray(m, dtype=float)
    if np.max(np.abs(m)) >= 1.0:
        raise DomainError("magnetization saturates; no finite field")
    return np.arctanh(m) / params.beta - conv_values(kernel, grid, m, "neumann")


def residual(params: ThermoParams, kernel: Kernel, grid: Grid,
             h: np.ndarray, m: np.ndarray) -> float:
    """Sup-norm of m - tanh(beta J^neum*m + beta h)."""
    arg = _field_argument(params, kernel, grid, np.asarray(h, float),
                          np.asarray(m, float))
    return float(np.max(np.abs(m - np.tanh(arg))))


def apply_linearized(state: MesoState, psi: np.ndarray) -> np.ndarray:
    """One application of the linearized fixed-point map p * (J^neum * psi)."""
    return state.p * conv_values(state.kernel, state.grid,
                                 np.asarray(psi, float), "neumann")


def _newton_step(params, kernel, grid, h, m, w_matrix):
    arg = params.beta * (w_matrix @ m + h)
    p = params.beta / np.cosh(arg) ** 2
    f = m - np.tanh(arg)
    jac = sp.identity(grid.n, format="csr") - sp.diags(p) @ sp.csr_matrix(w_matrix)
    delta = spla.spsolve(jac.tocsc(), -f)
    return m + delta


def _sparse_w(kernel, grid):
    w = neumann_matrix(kernel, grid)
    w[np.abs(w) < 1e-300] = 0.0
    return w


def _continuation_solve(params, kernel, grid, h_target, m_seed,
                        n_steps=16, tol=1e-12, max_iter=20_000):
    """Homotopy from the exactly-consistent pair (effective_field(m), m).

    Follows dm/dt = L^-1(-p dh/dt) along the straight field path in n_steps
    explicit increments, then polishes with the damped fixed-point iteration.
    """
    h_path = effective_field(params, kernel, grid, m_seed)
    w = sp.csr_matrix(_sparse_w(kernel, grid))
    ident = sp.identity(grid.n, format="csr")
    m = np.asarray(m_seed, dtype=float).copy()
    dh = (np.asarray(h_target, float) - h_path) / n_steps
    for _ in range(n_steps):
        p = params.beta / np.cosh(params.beta * (w @ m + h_path)) ** 2
        lin = sp.diags(p) @ w - ident          # L = A - 1
        dm = spla.spsolve(lin.tocsc(), -(p * dh))
        m = m + dm
        h_path = h_path + dh
        if np.max(np.abs(m)) >= SATURATION_LIMIT:
            raise SaturationError("continuation left the admissible ball")
    return _picard(params, kernel, grid, h_target, m, tol, max_iter,
                   omega=0.7, allow_escalate=False)


def _picard(params, kernel, grid, h, m, tol, max_iter, omega,
            allow_escalate=True):
    """Damped fixed-point iteration with stall detection and escalation."""
    beta = params.beta
    res_prev = np.inf
    stall = 0
    for it in range(max_iter):
        arg = beta * (conv_values(kernel, grid, m, "neumann") + h)
        target = np.tanh(arg)
        res = float(np.max(np.abs(m - target)))
        if res < tol:
            return m, it
        if res > res_prev:
            omega = max(0.05, 0.5 * omega)
        stall = stall + 1 if res > _STALL_RATIO * res_prev else 0
        if allow_escalate and stall >= _STALL_STEPS:
            return _escalate(params, kernel, grid, h, m, tol, max_iter - it)
        res_prev = res
        m = (1.0 - omega) * m + omega * target
        if np.max(np.abs(m)) >= SATURATION_LIMIT:
            raise SaturationError("iterate saturated: |m| -> 1")
    raise ConvergenceError(
        f"fixed-point iteration stuck at residual {res_prev:.3e} (tol {tol})",
        last=m,
    )


def _escalate(params, kernel, grid, h, m, tol, budget):
    w = _sparse_w(kernel, grid)
    for _ in range(60):
        m_new = _newton_step(params, kernel, grid, h, m, w)
        if np.max(np.abs(m_new)) >= SATURATION_LIMIT:
            break
        res = residual(params, kernel, grid, h, m_new)
        m = m_new
        if res < tol:
            return m, 0
        if not np.isfinite(res):
            break
    return _continuation_solve(params, kernel, grid, h, m,
                               tol=tol, max_iter=max(budget, 1000))


def inner_solve(params: ThermoParams, kernel: Kernel, grid: Grid,
                h: np.ndarray, m_init: np.ndarray, tol=1e-12,
                max_iter=20_000, omega=0.7) -> MesoState:
    """Find m with m = tanh(beta J^neum*m + beta h) near the seed.

    Damped fixed-point iteration; on stall it switches to Newton on the
    discretized system and finally to a field-path continuation from the
    seed.  The result is seed-dependent: only closeness to the seed is
    guaranteed, not global uniqueness.
    """
    h = np.asarray(h, dtype=float)
    m = np.asarray(m_init, dtype=float).copy()
    if np.max(np.abs(m)) >= SATURATION_LIMIT:
        raise SaturationError("seed already saturated")
    m, _ = _picard(params, kernel, grid, h, m, tol, max_iter, omega)
    return make_state(params, kernel, grid, h, m)
