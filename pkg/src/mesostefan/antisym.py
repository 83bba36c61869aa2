"""Antisymmetric profile solvers: stable and metastable branches at x0 = 0.

The outer map takes a field h to the current integral of the auxiliary
magnetization: solve m = tanh(beta J^neum*m + beta h), then set
h_next(x) = -eps j * int_0^x 1/chi(m).  The iteration starts from a
composite seed (interface profile near the origin, scaled macroscopic
solution beyond) and contracts geometrically.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, GridError, SaturationError
from .grids import Grid, Kernel, build_grid, cumulative_from_center
from .instanton import Instanton, threshold_abscissa
from .meso import MesoState, effective_field, inner_solve, make_state
from .stefan import (
    MaximalSolution,
    MetastableMaximal,
    _metastable_maximal,
    solve_maximal,
)
from .thermo import ThermoParams, mobility

MOBILITY_FLOOR = 1e-6
DEFAULT_N0 = 10
MONOTONE_FLOOR = 1e-14
INCREASE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class CompositeSeed:
    """Odd initial pair: interface profile on [0, xi], macroscopic beyond."""

    grid: Grid
    m0: np.ndarray
    h0: np.ndarray
    xi_eps: float
    xi_index: int      # index offset from the center to the gluing point
    n0: int
    x_eps: float


@dataclass
class IterationTrace:
    increments: list = field(default_factory=list)      # sup|h_{k+1} - h_k|
    m_increments: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,increment,ratio,residual\n")
        for k, inc in enumerate(self.increments):
            rat = self.ratios[k - 1] if 0 < k <= len(self.ratios) else float("nan")
            res = self.residuals[k] if k < len(self.residuals) else float("nan")
            buf.write(f"{k},{inc:.17g},{rat:.17g},{res:.17g}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class AntisymResult:
    state: MesoState
    trace: IterationTrace
    seed: CompositeSeed
    branch: str
    eps: float
    j: float
    ell: float
    monotone: bool
    increase_interval: float | None    # meso length of the central rise (metastable)


def build_seed(params: ThermoParams, kernel: Kernel, instanton: Instanton,
               macro, eps, j, ell, n0=DEFAULT_N0) -> CompositeSeed:
    """Composite odd seed on eps^-1[-ell, ell].

    The interface profile fills [0, xi] with xi = x_eps + 2 n0 snapped up to
    the grid; the macroscopic solution, evaluated at eps(x - xi), fills the
    rest.  Requires the instanton to be sampled at the solver spacing so the
    splice introduces no interpolation error.
    """
    grid = build_grid(eps, ell, ell, kernel.spacing)
    if abs(instanton.spacing - grid.spacing) > 1e-12:
        raise GridError("instanton spacing must match the solver spacing")
    x_eps = threshold_abscissa(instanton, eps)
    xi = x_eps + 2.0 * n0
    half = ell / eps
    if xi >= 0.5 * half:
        raise GridError(
            f"gluing point {xi:.2f} collides with the boundary "
            f"(eps^-1 ell / 2 = {0.5 * half:.2f}); shrink eps or n0"
        )
    c = grid.center_index
    xi_index = int(np.ceil(xi / grid.spacing - 1e-12))
    xi_snap = xi_index * grid.spacing

    ic = instanton.center_index
    if xi_index > ic:
        raise GridError("instanton window too small for the gluing point")
    m0 = np.empty(grid.n)
    x_rel = grid.spacing * (np.arange(grid.n) - c)  # exactly symmetric coords
    m0[c:c + xi_index + 1] = instanton.profile[ic:ic + xi_index + 1]
    m0[c + xi_index + 1:] = macro.m_of_x(eps * (x_rel[c + xi_index + 1:] - xi_snap))
    # odd extension m0(-x) = -m0(x)
    m0[:c] = -m0[c + 1:][::-1]
    m0[c] = 0.0
    h0 = effective_field(params, kernel, grid, m0)
    m0.setflags(write=False)
    h0.setflags(write=False)
    return CompositeSeed(grid, m0, h0, float(xi_snap), xi_index, int(n0),
                         float(x_eps))


def t_map(params: ThermoParams, grid: Grid, m: np.ndarray, eps, j) -> np.ndarray:
    """Current integral h(x) = -eps j int_0^x 1/chi(m), odd by construction."""
    chi = np.asarray(mobility(params, m), dtype=float)
    if np.min(chi) < MOBILITY_FLOOR:
        raise SaturationError("mobility below floor: profile saturating")
    h = -eps * j * cumulative_from_center(grid, 1.0 / chi)
    h = 0.5 * (h - h[::-1])
    h[grid.center_index] = 0.0
    return h


def _odd_part(values: np.ndarray) -> np.ndarray:
    return 0.5 * (values - values[::-1])


def solve_stable(params: ThermoParams, kernel: Kernel, eps, j, ell,
                 tol=1e-10, inner_tol=1e-12, max_outer=80, n0=DEFAULT_N0,
                 instanton: Instanton | None = None,
                 macro: MaximalSolution | None = None) -> AntisymResult:
    """Stable-branch antisymmetric solve: strictly monotone m for j != 0."""
    if j == 0.0:
        raise DomainError("zero current: use inner_solve with h = 0 instead")
    if eps > 0.2:
        raise DomainError("scale parameter must satisfy eps <= 0.2")
    from .instanton import compute_instanton

    instanton = instanton or compute_instanton(params, kernel)
    macro = macro or solve_maximal(params, j)
    if ell >= macro.ell_j:
        raise DomainError(
            f"half-length {ell} must stay below the maximal ell_j "
            f"= {macro.ell_j:.6g}"
        )
    if j > 0:
        # mirrored arrangement: solve with -j and flip
        res = solve_stable(params, kernel, eps, -j, ell, tol, inner_tol,
                           max_outer, n0, instanton,
                           solve_maximal(params, -j))
        st = res.state
        flipped = make_state(params, kernel, st.grid, -st.h, -st.m)
        return AntisymResult(flipped, res.trace, res.seed, "stable", eps, j,
                             ell, res.monotone, None)
    seed = build_seed(params, kernel, instanton, macro, eps, j, ell, n0)
    return _iterate(params, kernel, seed, eps, j, ell, "stable",
                    tol, inner_tol, max_outer)


def solve_metastable(params: ThermoParams, kernel: Kernel, eps, j, ell,
                     tol=1e-10, inner_tol=1e-12, max_outer=80,
                     n0=DEFAULT_N0, instanton: Instanton | None = None,
                     macro: MetastableMaximal | None = None) -> AntisymResult:
    """Metastable antisymmetric solve for j > 0 (x0 = 0 only).

    The field decreases while m decreases, rises across the interface, and
    decreases again; the central rise has vanishing macroscopic length.
    """
    if j <= 0.0:
        raise DomainError("metastable arrangement needs j > 0")
    if eps > 0.2:
        raise DomainError("scale parameter must satisfy eps <= 0.2")
    from .instanton import compute_instanton

    instanton = instanton or compute_instanton(params, kernel)
    macro = macro or _metastable_maximal(params, j)
    if ell >= macro.ell_break:
        raise DomainError(
            f"half-length {ell} reaches the metastable breakdown at "
            f"{macro.ell_break:.6g}"
        )
    seed = build_seed(params, kernel, instanton, _MetaRight(macro), eps, j,
                      ell, n0)
    return _iterate(params, kernel, seed, eps, j, ell, "metastable",
                    tol, inner_tol, max_outer)


class _MetaRight:
    """Right half of the metastable macroscopic pair as a seed callable."""

    def __init__(self, maximal: MetastableMaximal):
        self._mx = maximal

    def m_of_x(self, x):
        return self._mx.m_of_x(np.maximum(np.asarray(x, float), 0.0))


def _iterate(params, kernel, seed, eps, j, ell, branch, tol, inner_tol,
             max_outer):
    grid = seed.grid
    trace = IterationTrace()
    h = seed.h0
    m = seed.m0
    trace.residuals.append(0.0)
    bad_ratio_run = 0
    for _ in range(max_outer):
        h_next = t_map(params, grid, m, eps, j)
        inc = float(np.max(np.abs(h_next - h)))
        trace.increments.append(inc)
        if len(trace.increments) >= 2 and trace.increments[-2] > 0:
            ratio = inc / trace.increments[-2]
            trace.ratios.append(ratio)
            bad_ratio_run = bad_ratio_run + 1 if ratio >= 1.0 else 0
            if bad_ratio_run >= 10:
                raise ConvergenceError(
                    "outer iteration stopped contracting", last=trace)
        state = inner_solve(params, kernel, grid, h_next, m, tol=inner_tol)
        m_next = _odd_part(state.m)
        trace.m_increments.append(float(np.max(np.abs(m_next - m))))
        trace.residuals.append(state.residual_norm)
        h, m = h_next, m_next
        if inc < tol:
            final = make_state(params, kernel, grid, h, m)
            mono = _is_monotone(final.m, increasing=(j < 0))
            rise = _central_increase_length(grid, final.m) \
                if branch == "metastable" else None
            return AntisymResult(final, trace, seed, branch, float(eps),
                                 float(j), float(ell), mono, rise)
    raise ConvergenceError(
        f"outer iteration did not reach {tol} in {max_outer} steps",
        last=trace,
    )


def _is_monotone(m: np.ndarray, increasing: bool) -> bool:
    d = np.diff(m)
    return bool(np.all(d > MONOTONE_FLOOR)) if increasing \
        else bool(np.all(d < -MONOTONE_FLOOR))


def _central_increase_length(grid: Grid, m: np.ndarray) -> float:
    """Meso length of the maximal interval around 0 where m increases."""
    d = np.diff(m)
    c = grid.center_index
    rising = d > INCREASE_THRESHOLD
    lo = c
    while lo - 1 >= 0 and rising[lo - 1]:
        lo -= 1
    hi = c
    while hi < rising.size and rising[hi]:
        hi += 1
    return float((hi - lo) * grid.spacing)


def fixed_point_defect(result: AntisymResult) -> float:
    """sup |h(x) + eps j int_0^x 1/chi(m)| for the returned pair."""
    st = result.state
    h_rebuilt = t_map(st.params, st.grid, st.m, result.eps, result.j)
    return float(np.max(np.abs(st.h - h_rebuilt)))


def flux_defect(result: AntisymResult) -> tuple[float, float]:
    """Pointwise transport-law defect chi(m) dh/dx + eps j and its estimate.

    Returns (sup defect, sup quadrature-error estimate).  The estimate is
    the exact discrepancy of differentiating the trapezoid antiderivative:
    |eps j| chi |second difference of 1/chi| / 4.
    """
    st = result.state
    chi = np.asarray(mobility(st.params, st.m))
    dh = np.gradient(st.h, st.grid.spacing, edge_order=2)
    defect = np.abs(chi * dh + result.eps * result.j)
    g = 1.0 / chi
    d2g = np.zeros_like(g)
    d2g[1:-1] = np.abs(g[2:] - 2.0 * g[1:-1] + g[:-2])
    est = np.abs(result.eps * result.j) * chi * d2g / 4.0
    interior = slice(1, -1)
    return (float(np.max(defect[interior])),
            float(np.max(est[interior])))


def hydrodynamic_error(state: MesoState, m_of_x, h_of_x, eps, x0=0.0,
                       exclude_halfwidth=0.0) -> tuple[float, float]:
    """Sup-norm distance to a macroscopic pair at matching arguments.

    The m comparison excludes |eps x - x0| <= exclude_halfwidth (the window
    where the smooth interface lives); the field comparison has no
    exclusion.
    """
    xi = eps * state.grid.points
    m_mac = np.asarray(m_of_x(xi), dtype=float)
    h_mac = np.asarray(h_of_x(xi), dtype=float)
    keep = np.abs(xi - x0) > exclude_halfwidth
    err_m = float(np.max(np.abs(state.m[keep] - m_mac[keep])))
    err_h = float(np.max(np.abs(state.h - h_mac)))
    return err_m, err_h
