"""Online multi-level aggregation with linear delays under Poisson arrivals."""

from .arrivals import ArrivalConfig, Mode, generate, restrict, merge, statistical_selftest
from .baselines import fixed_period, greedy, instant
from .errors import CapacityError, ConstructionError, InputError, MLAError, ScheduleError
from .experiment import ExperimentConfig, RoEReport, appendix_b_separation, run_experiment
from .gen import (AugmentedInstance, BalancedPartition, GenScheduler, balanced_partition,
                  build_heavy_instance, check_partition, gen_schedule, heavy_sequence, split_root)
from .instances import generate_instance, star_instance
from .kernels import BACKEND
from .opt import lower_bound, opt_bruteforce, opt_cost, opt_single_edge_dp, upper_bound_formulas
from .plan import ClusterPlan, build_plan, check_plan, plan_schedule, round_periods, saturation_partition
from .schedule import CostBreakdown, RequestSequence, Schedule, schedule_cost
from .tree import Classification, Instance, Tree, classify, heaviness, minimal_subtree_weight, single_edge

__version__ = "0.1.0"
