"""Session fixtures: thermodynamic constants, interface profiles, and the
desk-scale solve sweeps shared across test modules.

Sweep parameters: beta = 2, ell = 1, x0 = 0.2 (off-center), spacing 0.05,
eps in {0.1, 0.05, 0.025}.  The currents are j = -/+ 0.02: the maximal
half-length at beta = 2 is ell_j = 0.039/|j|, so |j| = 0.02 gives
ell_j ~ 1.95 and keeps every feasibility precondition satisfied (including
the off-center requirement 1 + x0 < ell_j), which |j| = 0.2 would violate.
The spectral sweep runs at spacing 0.025 where the eigenvalue discretization
floor sits well below the scale trends being measured.
"""

import numpy as np
import pytest

from mesostefan import antisym, asym, spectral, stefan
from mesostefan.grids import build_kernel
from mesostefan.instanton import compute_instanton
from mesostefan.thermo import make_params

BETA = 2.0
J_STABLE = -0.02
J_META = 0.02
ELL = 1.0
X0 = 0.2
N0 = 2
SPACING = 0.05
SPECTRAL_SPACING = 0.025
EPS_SWEEP = (0.1, 0.05, 0.025)


@pytest.fixture(scope="session")
def params2():
    return make_params(BETA)


@pytest.fixture(scope="session")
def kernel05():
    return build_kernel(SPACING)


@pytest.fixture(scope="session")
def kernel025():
    return build_kernel(SPECTRAL_SPACING)


@pytest.fixture(scope="session")
def inst05(params2, kernel05):
    return compute_instanton(params2, kernel05)


@pytest.fixture(scope="session")
def inst025(params2, kernel025):
    return compute_instanton(params2, kernel025)


@pytest.fixture(scope="session")
def inst_fine(params2):
    kern = build_kernel(0.00625)
    return compute_instanton(params2, kern)


@pytest.fixture(scope="session")
def maximal_stable(params2):
    return stefan.solve_maximal(params2, J_STABLE)


@pytest.fixture(scope="session")
def maximal_meta(params2):
    return stefan._metastable_maximal(params2, J_META)


@pytest.fixture(scope="session")
def stable_sweep(params2, kernel05, inst05, maximal_stable):
    return {
        eps: antisym.solve_stable(params2, kernel05, eps, J_STABLE, ELL,
                                  n0=N0, instanton=inst05,
                                  macro=maximal_stable)
        for eps in EPS_SWEEP
    }


@pytest.fixture(scope="session")
def metastable_sweep(params2, kernel05, inst05, maximal_meta):
    return {
        eps: antisym.solve_metastable(params2, kernel05, eps, J_META, ELL,
                                      n0=N0, instanton=inst05,
                                      macro=maximal_meta)
        for eps in EPS_SWEEP
    }


@pytest.fixture(scope="session")
def asym_sweep(params2, kernel05, inst05, maximal_stable):
    return {
        eps: asym.solve_off_center(params2, kernel05, eps, J_STABLE, X0,
                                   n0=N0, instanton=inst05,
                                   macro=maximal_stable)
        for eps in EPS_SWEEP
    }


@pytest.fixture(scope="session")
def spectral_sweep(params2, kernel025, inst025, maximal_stable):
    """Stable solves plus eigen-data at the finer spectral spacing."""
    out = {}
    for eps in EPS_SWEEP:
        res = antisym.solve_stable(params2, kernel025, eps, J_STABLE, ELL,
                                   n0=N0, instanton=inst025,
                                   macro=maximal_stable)
        pair = spectral.leading_eigenpair(res.state)
        lam2 = spectral.second_eigenvalue(res.state, pair)
        shape = spectral.eigenvector_shape_report(res.state, pair, inst025)
        out[eps] = {"result": res, "pair": pair, "lambda2": lam2,
                    "shape": shape}
    return out


def geometric_mean(values):
    values = np.asarray(values, dtype=float)
    return float(np.exp(np.mean(np.log(values))))
