"""Optimal absolutely-continuous dividend strategies for spectrally
one-sided Levy risk models, with a ruin-time (Laplace transform)
constraint solved by Lagrangian duality."""

from .constrained import ConstrainedSolution, dual_profile, solve_sn, solve_sp
from .expmix import ExpMixture
from .models import (
    AssumptionViolated,
    JumpMixture,
    JumpTerm,
    ModelSpec,
    MultipleRootError,
    RootSet,
    classify_variation,
    laplace_exponent,
    laplace_exponent_refracted,
    load_model,
    model_from_dict,
    model_to_dict,
    solve_roots,
)
from .optimizer import ThresholdOptimizer, ThresholdSolution
from .refracted import SNFunctionals, ValueCurve
from .scale import ScaleFamily, ScalePair, asymptotic_check, build_scale, z_change_of_measure
from .simulate import Estimate, SimConfig, simulate_sn, simulate_sp
from .spectrally_positive import SPFunctionals

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated",
    "ConstrainedSolution",
    "Estimate",
    "ExpMixture",
    "JumpMixture",
    "JumpTerm",
    "ModelSpec",
    "MultipleRootError",
    "RootSet",
    "ScaleFamily",
    "ScalePair",
    "SimConfig",
    "SNFunctionals",
    "SPFunctionals",
    "ThresholdOptimizer",
    "ThresholdSolution",
    "ValueCurve",
    "asymptotic_check",
    "build_scale",
    "classify_variation",
    "dual_profile",
    "laplace_exponent",
    "laplace_exponent_refracted",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "simulate_sn",
    "simulate_sp",
    "solve_roots",
    "solve_sn",
    "solve_sp",
    "z_change_of_measure",
]
