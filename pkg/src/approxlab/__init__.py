"""Discretisation numbers and metric approximate subgroups in finite metric groups."""

from __future__ import annotations

from .discretisation import (
    BudgetExceeded,
    Discretisation,
    ScaleLadder,
    covering_number,
    greedy_separated,
    packing_number,
    scale_profile,
)
from .group import (
    ElementSet,
    FiniteMetricGroup,
    MixedGroupsError,
    StructuralError,
    lipschitz_constant,
    validate_group,
)
from .terms import eval_set_term, parse_term, var
from .zoo import GroupSpec, InstanceSpec, make_group, make_instance

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "Discretisation",
    "ElementSet",
    "FiniteMetricGroup",
    "GroupSpec",
    "InstanceSpec",
    "MixedGroupsError",
    "ScaleLadder",
    "StructuralError",
    "covering_number",
    "eval_set_term",
    "greedy_separated",
    "lipschitz_constant",
    "make_group",
    "make_instance",
    "packing_number",
    "parse_term",
    "scale_profile",
    "validate_group",
    "var",
]
