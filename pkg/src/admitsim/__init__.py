"""Centralized admission markets: matching, beliefs, and demand estimation."""

from .records import MAX_LIST_LEN as MAX_LIST_LEN
from .records import BlockingPair as BlockingPair
from .records import BeliefRecord as BeliefRecord
from .records import Deviation as Deviation
from .records import DominanceReport as DominanceReport
from .records import MatchOutcome as MatchOutcome
from .records import OmissionVerdict as OmissionVerdict
from .records import ProgramRecord as ProgramRecord
from .records import RankOrderedList as RankOrderedList
from .records import StudentRecord as StudentRecord
from .records import TruthFlags as TruthFlags
from .market import apply_cutoff_rule as apply_cutoff_rule
from .market import check_stability as check_stability
from .market import clear_market as clear_market
from .market import clears as clears
from .market import enumerate_lists as enumerate_lists
from .market import run_matching as run_matching
from .market import verify_strategy_proofness as verify_strategy_proofness
from .harness import misreport_suite as misreport_suite
from .harness import random_market as random_market
from .harness import stability_suite as stability_suite
from .config import AnalysisConfig as AnalysisConfig
from .config import BehaviorConfig as BehaviorConfig
from .config import ConfigError as ConfigError
from .config import ExperimentConfig as ExperimentConfig
from .config import PopulationConfig as PopulationConfig
from .config import UtilityConfig as UtilityConfig
from .config import load_config as load_config
from .config import preset_config as preset_config
from .population import FEATURE_NAMES as FEATURE_NAMES
from .population import anticipated_cutoffs as anticipated_cutoffs
from .population import application_kink_curve as application_kink_curve
from .population import build_features as build_features
from .population import generate_population as generate_population
from .population import generate_reports as generate_reports
from .population import kink_break_test as kink_break_test
from .population import max_slope_change_bin as max_slope_change_bin
from .population import subjective_beliefs as subjective_beliefs
from .population import truthful_reports as truthful_reports
from .population import utilities_for as utilities_for
from .cutoffs import CutoffSampleTable as CutoffSampleTable
from .cutoffs import rational_admission_prob as rational_admission_prob
from .cutoffs import rational_prob_matrix as rational_prob_matrix
from .cutoffs import simulate_cutoffs as simulate_cutoffs
from .beliefs import belief_error as belief_error
from .beliefs import classify_pessimism as classify_pessimism
from .beliefs import combined_belief as combined_belief
from .beliefs import detect_payoff_relevant_omission as detect_payoff_relevant_omission
from .beliefs import outcome_rates as outcome_rates
from .regression import ModelFit as ModelFit
from .regression import RankDeficientError as RankDeficientError
from .regression import build_designs as build_designs
from .regression import ols_fit as ols_fit
from .regression import welch_t_test as welch_t_test
from .regression import wls_fit as wls_fit
from .regression import zscore as zscore
from .clogit import ConvergenceError as ConvergenceError
from .clogit import build_choice_data as build_choice_data
from .clogit import choice_sets_for_mode as choice_sets_for_mode
from .clogit import clogit_fit as clogit_fit
from .clogit import clogit_loglik as clogit_loglik
from .clogit import fit_demand as fit_demand
from .experiment import run_all as run_all

__version__ = "0.1.0"
