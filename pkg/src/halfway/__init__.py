"""Law of a Brownian motion observed at a fixed fraction of its time to hit zero."""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    DomainError,
    HalfwayParams,
    excursion_marginal_density,
    halfway_cdf,
    halfway_density,
    halfway_quantile,
    hitting_time_cdf,
    hitting_time_density,
    killed_transition_density,
    tail_constant,
)
