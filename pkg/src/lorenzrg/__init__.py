"""Renormalization toolkit for Lorenz maps with factored diffeomorphism parts."""

from .core import (
    IDENTITY,
    DiffeoChain,
    Interval,
    LorenzMap,
    PureMap,
    StandardFamily,
    max_safe_distortion,
    pure_nonlinearity_norm,
    validate_lorenz,
    zoom_branch,
    zoom_pure,
)
from .decomposition import (
    LEFT,
    RIGHT,
    PureLorenzMap,
    PureStructure,
    TimeAddress,
    compose_structure,
    depth_counts,
    generate_time_set,
)
from .errors import (
    BranchDomainError,
    ComputationError,
    ConvergenceError,
    CriticalPointError,
    DocumentError,
    DomainError,
    InvalidMapError,
    LorenzError,
    NoRootError,
    NotRenormalizableError,
    PullbackError,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "IDENTITY",
    "LEFT",
    "RIGHT",
    "BranchDomainError",
    "ComputationError",
    "ConvergenceError",
    "CriticalPointError",
    "DiffeoChain",
    "DocumentError",
    "DomainError",
    "Interval",
    "InvalidMapError",
    "LorenzError",
    "LorenzMap",
    "NoRootError",
    "NotRenormalizableError",
    "PullbackError",
    "PureLorenzMap",
    "PureMap",
    "PureStructure",
    "StandardFamily",
    "TimeAddress",
    "compose_structure",
    "depth_counts",
    "generate_time_set",
    "max_safe_distortion",
    "pure_nonlinearity_norm",
    "validate_lorenz",
    "zoom_branch",
    "zoom_pure",
]
