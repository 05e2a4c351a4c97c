from .state import FarFieldState, build_farfield, check_farfield_norm, perturbation
from .stream_limit import (
    StreamLimitData,
    bernoulli_bar,
    build_stream_limit,
    check_l_bounds,
    entropy_bar,
    stream_limit_norms,
)
