"""Minimax-optimal subgradient methods under error bounds, with matching hard instances."""

from .error_bounds import ErrorBound, ValidationReport, eval_h, validate_bound
from .exceptions import ConfigError, DomainError, InvalidBoundError
from .hard_instance import (HardInstance, HardOracle, build_hard, f_hard_eval, phi, psi,
                            resisting_subgradient)
from .instances import FunctionOracle, Oracle, OracleMeta, RadialInstance, adversarial_pair, radial_eval
from .rates import (PowerSequence, RateSchedule, delta_asymptote, delta_schedule, n_epsilon,
                    power_sequence)
from .solvers import Trace, decay_gd, polyak_gd, run_span_method

__version__ = "0.1.0"
