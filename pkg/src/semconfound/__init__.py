"""Unmeasured-confounding bias analysis for linear structural equation models."""

from .dsl import DSLError, DSLSemanticError, DSLSyntaxError, ModelDocument, load, parse, serialize
from .effects import EffectEstimate, EffectTriple, direct_effect, indirect_effect, infer_triple, total_effect
from .estimation import Dataset, fit_equations, fit_sem, load_csv
from .graph import (
    BiasReport,
    Verdict,
    WitnessPath,
    backdoor_open,
    biased_edges,
    classify_bias,
    d_connected,
    edge_identified,
    table1_grid,
)
from .model import Edge, ModelError, PathModel, RoleAssignment, RolesError, Variable, topological_order
from .oracle import implied_covariance, partial_correlation, population_regression
from .sensitivity import Scenario, SensitivityParams, bias_factor, correct, explain_away, sweep
from .simulation import SimulationConfig, generate, replicate, run_experiment

__version__ = "0.1.0"

__all__ = [
    "DSLError",
    "DSLSemanticError",
    "DSLSyntaxError",
    "ModelDocument",
    "load",
    "parse",
    "serialize",
    "EffectEstimate",
    "EffectTriple",
    "direct_effect",
    "indirect_effect",
    "infer_triple",
    "total_effect",
    "Dataset",
    "fit_equations",
    "fit_sem",
    "load_csv",
    "BiasReport",
    "Verdict",
    "WitnessPath",
    "backdoor_open",
    "biased_edges",
    "classify_bias",
    "d_connected",
    "edge_identified",
    "table1_grid",
    "Edge",
    "ModelError",
    "PathModel",
    "RoleAssignment",
    "RolesError",
    "Variable",
    "topological_order",
    "implied_covariance",
    "partial_correlation",
    "population_regression",
    "Scenario",
    "SensitivityParams",
    "bias_factor",
    "correct",
    "explain_away",
    "sweep",
    "SimulationConfig",
    "generate",
    "replicate",
    "run_experiment",
]
