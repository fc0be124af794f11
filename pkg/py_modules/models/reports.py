"""
Report records emitted by the verification harness
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


@dataclass
class DecayReport:
    """Sup residual per radius and the log-log slope of the sup against the radius"""
    radii: List[float]
    sup_residuals: List[float]
    slope: Optional[float]
    samples: int
    reproduced: bool = False
    target: Optional[float] = None
    label: str = ""

    def passes(self, tolerance: float) -> bool:
        if self.reproduced:
            return True
        if self.slope is None or self.target is None:
            return False
        return abs(self.slope - self.target) <= tolerance

    def at_least(self, bound: float) -> bool:
        return self.reproduced or (self.slope is not None and self.slope >= bound)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["slope"] = _finite(self.slope)
        return data


@dataclass
class BarrierReport:
    k_found: Optional[int]
    margin: float
    samples: int
    r1: float = 0.0
    f_bound: float = 0.0
    boundary_bound: float = 1.0
    tangency_value: Optional[float] = None
    scanned: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["scanned"] = [{"k": k, "worst": _finite(w)} for k, w in self.scanned]
        data["margin"] = _finite(self.margin)
        return data


@dataclass
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    dt: float = 0.0
    mean_steps: float = 0.0

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.std_error + 1e-12

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ScanReport:
    """Minimum of |grad_H phi| over boundary samples"""
    min_grad: float
    argmin: List[float]
    samples: int
    characteristic: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ProbeReport:
    """Empirical comparison of the gauge distance d and the Riemannian distance d_e"""
    c1: float
    c2: float
    epsilon: float
    pairs: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class VolumeReport:
    ratio: float
    expected: float
    relative_error: float
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
