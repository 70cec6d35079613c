"""Multi-consensus analysis and minimal control-layer synthesis for directed networks."""

from .coarsest import CoarsestEEP, ReachDecomposition, block_decompose, coarsest_eep, gamma_vectors
from .errors import (
    BudgetExceeded,
    ComplexSpectrum,
    DomainError,
    EmptyDifference,
    GraphError,
    Infeasible,
    InsufficientSources,
    MulticonsensusError,
    NonConvergence,
    NonFinite,
    ParseError,
    PartitionError,
    SignViolation,
)
from .exact import Matrix
from .graph import Digraph, is_rooted, is_weakly_connected, laplacian, reaches
from .partition import Partition, characteristic_matrix, is_eep, projector, quotient_laplacian, r_matrix
from .sim import convergence_report, simulate_second, simulate_single
from .stability import Spectrum, eigenvalues, gain_region, routh_check, rl_spectrum_identity, spectral_gamma
from .synthesis import ControlLayer, Mode, apply_layer, build_bip, constructive_add, solve_bip

__version__ = "0.1.0"
