"""Mobility-on-demand rebalancing and market-fragmentation workbench.

The package models a shared-vehicle network as a station graph with
relocation costs, computes minimum-cost rebalancing via a transportation
simplex with shortest-path dual recovery, classifies how costs respond when
demand is split across competing firms, estimates the fragmentation cost by
Monte Carlo under stochastic splits, searches for worst-case deterministic
splits, and ingests raw trip records into station-level demand.
"""

from .adversarial import (AdversarialResult, adversarial_bruteforce,
                          adversarial_search, adversarial_subgradient,
                          pof_of_split)
from .ingest import (IngestReport, StationClustering, SurveyRow,
                     build_demand, cluster_stations, degeneracy_survey,
                     demand_graph_connected, generate_corpus, load_trips,
                     manhattan_costs, survey_to_csv, two_cluster_corpus,
                     wilson_interval)
from .model import (DemandMatrix, GraphValidationReport, NetFlowVector,
                    StationGraph, ValidationError, load_json_file, net_flow,
                    scale_demand, validate_graph)
from .montecarlo import (PofCurve, PofEstimate, SlopeFit, TwoNodePrediction,
                         estimate_pof, fit_loglog_slope, scaling_sweep,
                         two_node_closed_form)
from .regimes import (DegeneracyCertificate, RegimeLabel, classify_regime,
                      dual_degeneracy_oracle, fleet_lower_bound,
                      flow_support_components, heterogeneity_gap)
from .solver import (RebalanceSolution, brute_force_rc, min_cost_rebalance,
                     normalize_duals, rebalance_cost, solve_demand)
from .splitting import (SplitSample, SplitSpec, expected_split, sample_split,
                        share_matrices, trial_rng)

__version__ = "0.1.0"

__all__ = [
    "AdversarialResult", "DegeneracyCertificate", "DemandMatrix",
    "GraphValidationReport", "IngestReport", "NetFlowVector", "PofCurve",
    "PofEstimate", "RebalanceSolution", "RegimeLabel", "SlopeFit",
    "SplitSample", "SplitSpec", "StationClustering", "StationGraph",
    "SurveyRow", "TwoNodePrediction", "ValidationError",
    "adversarial_bruteforce", "adversarial_search", "adversarial_subgradient",
    "brute_force_rc", "build_demand", "classify_regime", "cluster_stations",
    "degeneracy_survey", "demand_graph_connected", "dual_degeneracy_oracle",
    "estimate_pof", "expected_split", "fit_loglog_slope", "fleet_lower_bound",
    "flow_support_components", "generate_corpus", "heterogeneity_gap",
    "load_json_file", "load_trips", "manhattan_costs", "min_cost_rebalance",
    "net_flow", "normalize_duals", "pof_of_split", "rebalance_cost",
    "sample_split", "scale_demand", "scaling_sweep", "share_matrices",
    "solve_demand", "survey_to_csv", "trial_rng", "two_cluster_corpus",
    "two_node_closed_form", "validate_graph", "wilson_interval",
]
