"""hierevo: evolution of layered Boolean-logic networks under configurable
selection pressures, with structural hierarchy, modularity, wiring-cost, and
functional-decomposition analysis."""

__version__ = "0.1.0"

from .evolution import EvolutionConfig, Individual, TrialResult, run_trial
from .mapelites import EliteArchive, feature_bin, run_map_elites
from .metrics import MetricsReport, compute_metrics
from .netmodel import LayerShape, NetworkGenome, load_genome, random_genome, save_genome
from .problems import BUILTIN_PROBLEMS, LogicProblem, get_problem

__all__ = [
    "__version__",
    "BUILTIN_PROBLEMS",
    "EliteArchive",
    "EvolutionConfig",
    "Individual",
    "LayerShape",
    "LogicProblem",
    "MetricsReport",
    "NetworkGenome",
    "TrialResult",
    "compute_metrics",
    "feature_bin",
    "get_problem",
    "load_genome",
    "random_genome",
    "run_map_elites",
    "run_trial",
    "save_genome",
]
