"""Best-arm identification: PRISM, Median Elimination, a uniform baseline and theory bounds."""

from .baseline import UniformPlan, sufficient_m, uniform_best, uniform_trial
from .env import BanditInstance, EnvironmentHandle, make_alpha_instance, shuffle_instance
from .melim import MEConfig, PullOverflowError, median_eliminate
from .metrics import (
    TheoryBounds,
    adaptive_lb,
    alpha_lb,
    error_lb_exact,
    gaps,
    hardness_G,
    hardness_H,
    nonadaptive_lb,
    slice_arms,
    theory_bounds,
)
from .prism import PhaseLog, TrialResult, phase_schedule, prism, theorem1_failure_budget

__version__ = "0.1.0"
