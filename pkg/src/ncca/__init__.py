"""Number-conserving cellular automata with von Neumann neighbourhoods."""

from .conservation import (
    Status,
    Verdict,
    extract_params,
    is_number_conserving,
    materialize,
    prescreen,
    reconstruct,
)
from .enumeration import EnumerationRequest, RuleLabel, classify, enumerate_ncca, enumerate_rnca
from .lattice import LatticeShape, canonical_lambda, direction_set, matching_pair, negate, omega_pairs
from .rules import DenseRule, ParametricRule, StateSet, dimer, homogeneous, monomer
from .simulate import (
    TorusConfiguration,
    exhaustive_oracle,
    finite_support_oracle,
    global_step,
    sampled_oracle,
    sigma,
)

__all__ = [
    "DenseRule", "EnumerationRequest", "LatticeShape", "ParametricRule", "RuleLabel",
    "StateSet", "Status", "TorusConfiguration", "Verdict", "canonical_lambda", "classify",
    "dimer", "direction_set", "enumerate_ncca", "enumerate_rnca", "exhaustive_oracle",
    "extract_params", "finite_support_oracle", "global_step", "homogeneous",
    "is_number_conserving", "materialize", "matching_pair", "monomer", "negate",
    "omega_pairs", "prescreen", "reconstruct", "sampled_oracle", "sigma",
]
