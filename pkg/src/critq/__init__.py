"""Two-electron variational energies at non-integer nuclear charge and
Puiseux analysis of the critical charge."""

__version__ = "0.1.0"

from .basis import BasisFunction, BasisLayout, BasisSet, ParameterBox, generate_basis
from .branch import BranchPairModel, branch_pair_expand, branch_pair_search
from .engine import SpectralConfig, excited_energy, ground_energy, optimize_box
from .errors import (CritqError, DomainError, FitError, IllConditionedError, NonConvergenceError,
                     NumericalError, StorageError, TrustRangeError, ValidationError)
from .integrals import ExponentTriple, PowerTriple, gamma_integral, quadrature_oracle
from .puiseux import (FREE_CONSTANT, STANDARD_EXPONENTS, THRESHOLD_LOCKED, PuiseuxModel,
                      eval_model, exponent_scan, fit_puiseux)
from .series import EnergyPoint, EnergySeries
from .xispace import XiModel, en_large_n, from_xi_space, to_xi_space
