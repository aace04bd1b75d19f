"""drskit: rate-quality modelling, cross-over benchmarking, bitstream
quality models, ladder optimization and resolution-switching simulation."""

from . import avc, drs, errors, forest, io, ladder, protocol, rcql, rdmodel, vqm
from .drs import BdResult, DrsTrace, bd_rate, filter_manifest, gain_distribution, simulate
from .ladder import (
    LadderProblem,
    LadderSolution,
    QualityLog,
    best_resolution_probability,
    cumulative_probability,
    optimize_ladder_exhaustive,
    optimize_ladder_greedy,
    weights_from_bandwidth,
)
from .protocol import CvConfig, cross_validate, greedy_feature_selection
from .rcql import RcqlReport, ScoredPoint, build_report, correlations, delta_bitrate, ranking_accuracy, rcql_avg, rcql_s
from .rdmodel import (
    CrossOverResult,
    LogisticParams,
    PchipCurve,
    RDCurve,
    RDPoint,
    eval_logistic,
    find_crossover,
    fit_logistic,
    fit_pchip,
)
from .vqm import FeatureSchema, ForestModel, GopRecord, Hyperparams, feature_importance, predict, train

__version__ = "0.1.0"
