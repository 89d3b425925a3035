"""Numerical exponential charts for matrix Lie groups."""

from __future__ import annotations

from .chart import (
    CHARTS,
    BallLadder,
    LieChart,
    PropertyCheck,
    build_ladder,
    chart_from_spec,
    make_chart,
    verify_ladder,
    verify_property,
)
from .matfuncs import LogDomainError, expm, log_domain_ok, logm

__all__ = [
    "CHARTS",
    "BallLadder",
    "LieChart",
    "LogDomainError",
    "PropertyCheck",
    "build_ladder",
    "chart_from_spec",
    "expm",
    "log_domain_ok",
    "logm",
    "make_chart",
    "verify_ladder",
    "verify_property",
]
