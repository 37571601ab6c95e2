"""
Core constants, enumerations and shared result types for covqec.
Every numerical module imports its tolerances from here so that the
"malformed input" and "converged result" tiers stay in one place.
"""

import math
import os
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, Any, Optional

import numpy as np


# Structural assertions (hermiticity, isometry, trace preservation)
STRUCT_TOL = 1e-10
# Reported quantities
NUM_TOL = 1e-7
# Certified duality gap of an SDP solve, relative to 1 + |primal|
SDP_TOL = 1e-7
# Fit of a qubit channel to the rotated dephasing family
FIT_TOL = 1e-7
# Interior-point iteration cap
ITER_MAX = 200

# theta scans
THETA_GRID = 1024
THETA_REFINE_TOP = 3
THETA_TOL = 1e-10
# coarser scan for quantities that need one SDP per theta
SDP_THETA_GRID = 64

PHI_GRID = 256
RESTARTS = 32

DEFAULT_SEED = 0


class Certification(Enum):
    """How much a reported number can be trusted"""
    EXACT = "exact"
    UPPER_BOUND = "upper_bound"
    LOWER_BOUND = "lower_bound"
    HEURISTIC = "heuristic"


class SdpStatus(Enum):
    """Termination status of an SDP solve"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"


@dataclass
class DistanceResult:
    """A distance or information value together with its certification"""
    value: float
    certified: Certification
    witness: Optional[np.ndarray] = None
    argmax: Optional[float] = None
    method: str = ""

    def to_dict(self) -> Dict[str, Any]:
        """Serializable view (the witness state is dropped)"""
        return {
            "value": float(self.value),
            "certified": self.certified.value,
            "argmax": None if self.argmax is None else float(self.argmax),
            "method": self.method,
        }


@dataclass
class BoundEvaluation:
    """One trade-off inequality lhs >= rhs evaluated on a report"""
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    inputs_echo: Dict[str, Any] = field(default_factory=dict)
    endpoint: str = "lower"
    favorable_slack: Optional[float] = None
    branch: str = ""
    skipped: bool = False
    reason: str = ""

    @property
    def violated(self) -> bool:
        """True only when the inequality fails even at the favorable endpoint"""
        if self.skipped:
            return False
        slack = self.slack if self.favorable_slack is None else max(self.slack, self.favorable_slack)
        return slack < -NUM_TOL

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ("lhs", "rhs", "slack", "favorable_slack"):
            value = data[key]
            if value is not None and isinstance(value, float) and math.isinf(value):
                data[key] = "inf" if value > 0 else "-inf"
        return data


def get_seed() -> int:
    """
    Seed shared by every randomized routine

    Returns:
        int: COVQEC_SEED from the environment, or the default seed
    """
    raw = os.environ.get("COVQEC_SEED")
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    return int(raw)


def make_rng(offset: int = 0) -> np.random.Generator:
    """Deterministic generator derived from the session seed"""
    return np.random.default_rng(get_seed() + offset)
