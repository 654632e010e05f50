"""Quantum local asymptotic normality toolkit.

Log-likelihood ratios, SLD geometry, Holevo-type bounds, Gaussian shift
models, asymptotic diagnostics and smoothed-lattice measurements for
finite-dimensional parametric quantum models.
"""

from .bounds import BoundResult, hgm_nagaoka_bound, holevo_bound, holevo_closed_dinv
from .gaussian import GaussianShiftModel, GaussianState, quasi_char
from .geometry import BUILTINS, GeometryReport, ParamModel, qubit2d, qubit3d, qubit_pure
from .lattice import LatticeConfig, achievability_pipeline, classical_limit_sim, lattice_povm
from .states import fidelity, qllr

__version__ = "0.1.0"
