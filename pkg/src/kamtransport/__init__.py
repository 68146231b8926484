"""Transport maps between 1D measures by KAM-Newton score matching.

Each iteration solves a linear two-point boundary value problem for a
near-identity perturbation ``v``, composes ``Id + v`` onto the running map
and pushes the source score forward, until it matches the target score.
"""

from .errors import (
    AssemblyError,
    ConfigError,
    DegenerateJacobianError,
    DegenerateStepError,
    DomainError,
    FlattenError,
    KamTransportError,
    NotInvertibleError,
    PreconditionError,
    SingularDensityError,
    SingularOperatorError,
    StepFailureError,
)
from .grid import Grid, GridFunction, from_function, identity
from .kernels import BACKEND
from .score import ScoreModel, score_operator_1d, score_residual
from .elliptic import EllipticOperator, assemble, solve
from .kam import KamOptions, KamState, TransportMap, flatten, kam_step, run_kam
from .gaussian_affine import affine_step, gaussian_score, run_affine
from .fixedpoint import FpOptions, run_fixed_point
from .ot import Density1D, increasing_rearrangement, wasserstein1
from .scoreop_nd import PointJet, jet_from_map, pushforward_score_at_point
from .config import ExperimentConfig, load_config, parse_config
from .experiment import run_experiment

__version__ = "0.1.0"
