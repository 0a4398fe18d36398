"""Entropy of quasi-free automorphisms of CAR and CCR algebras."""

from .errors import (
    CutoffWarning,
    GridResolutionError,
    InvalidArgument,
    InvalidCorrelation,
    InvalidModel,
    NoncommutingPartitionError,
    NumericError,
    QFEError,
    ResourceLimit,
    SingularModularFlow,
    UndefinedRelativeEntropy,
)
from .spectra import (
    Algebra,
    DirectIntegralModel,
    EigencurveSet,
    FiberGrid,
    MultiplicationModel,
    build_uniform_grid,
    fiberwise_diagonalize,
    integrate,
)
from .dynentropy import (
    SymbolFunction,
    ecar,
    eccr,
    entropy_cor14,
    entropy_rate_empirical,
    entropy_theorem11,
    finiteness_warning,
    lemma31_average,
    toeplitz_restriction,
)
from .car import entropy_car, jordan_wigner, quasifree_density_car
from .ccr import entropy_ccr, quasifree_density_ccr, truncated_fock

__version__ = "0.1.0"
