"""Minimum mixed-level covering arrays by column generation."""
from .baselines import GreedyResult, OracleResult, exact_can_oracle, greedy_construct
from .colgen import (
    CGConfig,
    CGEvent,
    CGResult,
    finalize_ip,
    init_artificial_columns,
    lower_bound,
    run_column_generation,
)
from .errors import (
    CAError,
    InfeasibleError,
    InvalidArgumentError,
    InvalidInstanceError,
    InvalidSolutionError,
    SolverError,
)
from .master import Column, MasterSolution, RestrictedMaster, master_solve, reduced_cost
from .model import (
    CAInstance,
    Interaction,
    count_interactions,
    coverage_pattern,
    enumerate_combinations,
    interaction_from_index,
    interaction_index,
    running_example,
    uniform_instance,
    verify_covering_array,
)
from .pricing import Pricer, PricingResult, price, price_exhaustive
from .report import AnalysisReport, analyze

__version__ = "0.1.0"
