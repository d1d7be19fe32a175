"""Observation-driven count time series: simulation, ergodicity checks and MLE."""
from .errors import ConfigurationError, DivergenceError, DomainError
from .model import (
    Family,
    GarchParams,
    LogLinearParams,
    ModelSpec,
    ParameterSpace,
    ThresholdParams,
    iterate_link,
    link,
    log_observation_density,
    stationary_state,
)
from .sampling import RngStream
from .simulate import Trajectory, simulate, simulate_coupled, simulate_qsharp
from .likelihood import conditional_loglik, stationary_loglik
from .ergodicity import verify_model
from .mle import FitResult, consistency_experiment, fit, misspecification_experiment

__version__ = "0.1.0"
