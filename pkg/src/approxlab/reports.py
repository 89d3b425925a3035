"""JSON encoding of reports with exact rationals as ``{"num": int, "den": int}``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib.resources import files
from typing import Any

import numpy as np

HYPOTHESIS_NOT_MET = "hypothesis not met"
VERIFIED = "verified"
VIOLATED = "conclusion violated"


def encode(value: Any) -> Any:
    """Recursively convert to JSON-ready data."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator}
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [encode(v) for v in items]
    if hasattr(value, "to_json"):
        return encode(value.to_json())
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"cannot encode {type(value).__name__}")


def decode_rational(value) -> Fraction:
    return Fraction(int(value["num"]), int(value["den"]))


def dumps(payload: Any, pretty: bool = False) -> str:
    """Deterministic serialisation: sorted keys, fixed separators."""
    data = encode(payload)
    if pretty:
        return json.dumps(data, sort_keys=True, indent=2)
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


@dataclass
class Report:
    """Outcome of a hypothesis-gated check.

    A failed gate is reported as ``hypothesis not met`` and never counts as
    either a verification or a violation.
    """

    claim: str
    gate_checked: bool = True
    gate_passed: bool = True
    gate_values: dict = field(default_factory=dict)
    conclusion_passed: bool | None = None
    witnesses: list = field(default_factory=list)
    numbers: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        if not self.gate_passed:
            return HYPOTHESIS_NOT_MET
        return VERIFIED if self.conclusion_passed else VIOLATED

    @property
    def violated(self) -> bool:
        return self.gate_passed and self.conclusion_passed is False

    def to_json(self) -> dict:
        out = {
            "claim": self.claim,
            "status": self.status,
            "hypothesis_gate": {
                "checked": self.gate_checked,
                "passed": self.gate_passed,
                "values": encode(self.gate_values),
            },
            "conclusion": {
                "passed": self.conclusion_passed,
                "witnesses": encode(self.witnesses),
            },
            "numbers": encode(self.numbers),
        }
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    @classmethod
    def not_met(cls, claim: str, values: dict, **kw) -> "Report":
        return cls(claim, gate_checked=True, gate_passed=False, gate_values=values, **kw)


def load_schema(name: str) -> dict:
    """The shipped JSON schema ``schemas/<name>.json``."""
    return json.loads(files("approxlab").joinpath("schemas", f"{name}.json").read_text())
