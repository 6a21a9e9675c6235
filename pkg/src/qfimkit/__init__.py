"""Numerical toolkit for quantum parameter estimation.

Quantum Fisher information via the symmetric logarithmic derivative, Bures
geometry, Cramer-Rao bounds, classical Fisher information of measurements
and a set of worked estimation models.
"""

from .bounds import BoundReport, WeightMatrix, cartan_weight_rotation, crb_classical, qcrb
from .bounds import reparametrize, weighted_bound
from .cfim import OutcomeDensity, Povm, born_probabilities, cfim_continuous, cfim_discrete
from .core import (
    BlockDiag, DensityMatrix, Interval, ParameterPoint, PureState, StatisticalModel,
    derivatives, evaluate, numerical_rank, pseudoinverse,
)
from .errors import (
    BoundaryError, CutoffError, DimensionMismatch, DomainError, InvalidForMixed, ModelError,
    QfimkitError, QuadratureError, RangeError, SupportLeakError,
)
from .geometry import (
    DiscontinuityReport, bures_correction, bures_distance, bures_metric_fd,
    discontinuity_scan, fidelity,
)
from .qfim import (
    QfimResult, SldOperator, model_qfim, pure_saturation_check, qfim, qfim_pure, solve_sld,
    weak_commutation,
)

__version__ = "0.1.0"

__all__ = [
    "BlockDiag",
    "BoundReport",
    "BoundaryError",
    "CutoffError",
    "DensityMatrix",
    "DimensionMismatch",
    "DiscontinuityReport",
    "DomainError",
    "Interval",
    "InvalidForMixed",
    "ModelError",
    "OutcomeDensity",
    "ParameterPoint",
    "Povm",
    "PureState",
    "QfimResult",
    "QfimkitError",
    "QuadratureError",
    "RangeError",
    "SldOperator",
    "StatisticalModel",
    "SupportLeakError",
    "WeightMatrix",
    "born_probabilities",
    "bures_correction",
    "bures_distance",
    "bures_metric_fd",
    "cartan_weight_rotation",
    "cfim_continuous",
    "cfim_discrete",
    "crb_classical",
    "derivatives",
    "discontinuity_scan",
    "evaluate",
    "fidelity",
    "model_qfim",
    "numerical_rank",
    "pseudoinverse",
    "pure_saturation_check",
    "qcrb",
    "qfim",
    "qfim_pure",
    "reparametrize",
    "solve_sld",
    "weak_commutation",
    "weighted_bound",
]
