"""The standing interface profile of the zero-current problem.

Damped Picard iteration for the odd fixed point of m -> tanh(beta J*m) on a
truncated line, with a Dirichlet-style clamp to +-m_beta outside a one-unit
collar.  The profile, its derivative, the weighted normalization constants
and decay diagnostics feed the composite seeds and the spectral checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .errors import ConvergenceError, DomainError, GridError
from .grids import Kernel, conv_values_filled
from .thermo import ThermoParams, mobility

MIN_HALF_WIDTH = 20.0
MAX_SPACING = 0.05


@dataclass(frozen=True)
class Instanton:
    """Converged interface profile on [-X, X] and its derived quantities."""

    beta: float
    x: np.ndarray
    spacing: float
    profile: np.ndarray      # odd, strictly increasing, -> +-m_beta
    derivative: np.ndarray   # 4th-order centered differences
    p_bar: np.ndarray        # beta (1 - profile^2)
    decay_rate: float        # fitted a in m_beta - profile ~ c exp(-a x)
    decay_r2: float
    norm_sq: float           # int derivative^2 / p_bar
    mean: float              # int derivative / p_bar
    residual: float          # sup norm off the clamp collar
    m_beta: float

    @property
    def half_width(self) -> float:
        return float(self.x[-1])

    @property
    def center_index(self) -> int:
        return (self.x.size - 1) // 2

    def unit_derivative(self) -> np.ndarray:
        """Derivative normalized to unit weighted square integral."""
        return self.derivative / np.sqrt(self.norm_sq)

    def weighted_dot(self, f, g) -> float:
        return float(np.trapezoid(f * g / self.p_bar, dx=self.spacing))


def _derivative_4th(values: np.ndarray, spacing: float,
                    left_fill: float, right_fill: float) -> np.ndarray:
    v = np.concatenate([[left_fill] * 2, values, [right_fill] * 2])
    return (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * spacing)


def _interior(x: np.ndarray, half_width: float) -> np.ndarray:
    return np.abs(x) <= half_width - 1.0 + 1e-12


def compute_instanton(params: ThermoParams, kernel: Kernel, half_width=20.0,
                      tol=1e-12, max_iter=50_000, omega=0.5,
                      seed="sign") -> Instanton:
    """Solve the odd fixed point m = tanh(beta J*m) on [-X, X].

    Oddness is enforced by explicit anti-symmetrization each step, which pins
    the translation freedom of the infinite-line problem.  Outside
    [-X+1, X-1] the profile is clamped to +-m_beta.
    """
    if params.beta <= 1.0:
        raise DomainError("interface profile needs beta > 1")
    if half_width < MIN_HALF_WIDTH:
        raise GridError(f"half width must be >= {MIN_HALF_WIDTH}")
    if kernel.spacing > MAX_SPACING + 1e-12:
        raise GridError(f"spacing must be <= {MAX_SPACING}")

    spacing = kernel.spacing
    n_half = int(round(half_width / spacing))
    x = spacing * np.arange(-n_half, n_half + 1)
    mb = params.m_beta
    beta = params.beta

    if seed == "sign":
        m = mb * np.sign(x)
    elif seed == "tanh":
        m = mb * np.tanh(x)
    else:
        raise DomainError(f"unknown seed {seed!r}")

    interior = _interior(x, half_width)
    clamp = ~interior
    m[clamp] = mb * np.sign(x[clamp])

    residual = np.inf
    for _ in range(max_iter):
        target = np.tanh(beta * conv_values_filled(kernel, m, -mb, mb))
        m_new = (1.0 - omega) * m + omega * target
        m_new[clamp] = mb * np.sign(x[clamp])
        m_new = 0.5 * (m_new - m_new[::-1])
        m = m_new
        residual = float(np.max(np.abs(
            (m - np.tanh(beta * conv_values_filled(kernel, m, -mb, mb)))[interior]
        )))
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"interface profile did not reach {tol} in {max_iter} steps "
            f"(residual {residual:.3e})"
        )

    deriv = _derivative_4th(m, spacing, -mb, mb)
    p_bar = mobility(params, m)
    norm_sq = float(np.trapezoid(deriv * deriv / p_bar, dx=spacing))
    mean = float(np.trapezoid(deriv / p_bar, dx=spacing))
    rate, r2 = _fit_decay(x, m, mb)

    for arr in (x, m, deriv, p_bar):
        arr.setflags(write=False)
    return Instanton(beta, x, spacing, m, deriv, p_bar, rate, r2,
                     norm_sq, mean, residual, mb)


def _fit_decay(x, m, m_beta, v_hi=1e-2, v_lo=1e-11):
    """Linear fit of log(m_beta - m) on the right tail.

    The window is selected by magnitude (v in [v_lo, v_hi]) rather than by
    fixed abscissas: beyond ~1e-12 the gap drowns in rounding for sharp
    profiles, so a fixed window would regress on noise.
    """
    right = x > 0
    v = m_beta - m[right]
    xs = x[right]
    mask = (v > v_lo) & (v < v_hi)
    if mask.sum() < 5:
        raise ConvergenceError("decay window too short for a fit")
    fit = linregress(xs[mask], np.log(v[mask]))
    return float(-fit.slope), float(fit.rvalue ** 2)


def threshold_abscissa(instanton: Instanton, eps) -> float:
    """x with profile(x) = m_beta - eps, by linear interpolation."""
    if not 0.0 < eps < instanton.m_beta:
        raise DomainError("threshold must be in (0, m_beta)")
    if eps < 10.0 * max(instanton.residual, 1e-14):
        # the gap m_beta - profile underflows before such thresholds
        raise DomainError("threshold below the numerical resolution "
                          "of the truncated profile")
    c = instanton.center_index
    v = instanton.m_beta - instanton.profile[c:]
    if v[-1] > eps:
        raise DomainError("threshold beyond the truncation window")
    k = int(np.argmax(v <= eps))
    if k == 0:
        return 0.0
    x0, x1 = instanton.x[c + k - 1], instanton.x[c + k]
    v0, v1 = v[k - 1], v[k]
    t = (v0 - eps) / (v0 - v1)
    return float(x0 + t * (x1 - x0))


def apply_transfer(instanton: Instanton, kernel: Kernel,
                   psi: np.ndarray) -> np.ndarray:
    """One application of the free-line linearized map p_bar (J * psi)."""
    return instanton.p_bar * conv_values_filled(kernel, psi, 0.0, 0.0)


def project_out_unit_mode(instanton: Instanton, f: np.ndarray) -> np.ndarray:
    """Remove the component along the normalized derivative (weighted)."""
    md = instanton.unit_derivative()
    return f - instanton.weighted_dot(f, md) * md


def projected_decay_norms(instanton: Instanton, kernel: Kernel,
                          f: np.ndarray, n_terms=20) -> np.ndarray:
    """Sup norms of repeated transfer applications to the projected part.

    These decay geometrically: the unit eigenvalue lives only on the
    derivative direction, which the projection removes.
    """
    g = project_out_unit_mode(instanton, np.asarray(f, dtype=float))
    norms = [float(np.max(np.abs(g)))]
    for _ in range(n_terms):
        g = apply_transfer(instanton, kernel, g)
        norms.append(float(np.max(np.abs(g))))
    return np.array(norms)


def odd_contraction_factor(instanton: Instanton, kernel: Kernel, n0,
                           test_profiles=None) -> float:
    """Worst measured ratio |A^n0 psi| / |psi| over odd test profiles.

    Diagnostic backing the choice of the gluing offset n0: the transfer
    operator must contract odd functions after n0 applications.
    """
    x = instanton.x
    if test_profiles is None:
        test_profiles = [
            np.sign(x) * (np.abs(x) > 1e-14),
            np.tanh(x),
            np.sin(np.pi * x / x[-1]),
            x / x[-1],
        ]
    worst = 0.0
    for psi in test_profiles:
        g = np.asarray(psi, dtype=float)
        base = float(np.max(np.abs(g)))
        for _ in range(int(n0)):
            g = apply_transfer(instanton, kernel, g)
        worst = max(worst, float(np.max(np.abs(g))) / base)
    return worst
