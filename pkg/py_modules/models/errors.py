"""
Error hierarchy for the toolkit
Each class name is the error name reported to callers
"""
from typing import Any, Dict, Optional


class CarnotError(Exception):
    """Base error: carries a name and a context dict for reports"""

    def __init__(self, message: str = "", context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    @property
    def name(self) -> str:
        return type(self).__name__

    def to_record(self) -> Dict[str, Any]:
        return {"error": f"{self.name}: {self.message}", "context": {k: str(v) for k, v in self.context.items()}}


# algebra
class JacobiViolation(CarnotError):
    pass


class NotGraded(CarnotError):
    pass


class NotStratified(CarnotError):
    pass


class AntisymmetryViolation(CarnotError):
    pass


class UnknownName(CarnotError):
    pass


class AlgebraMismatch(CarnotError):
    pass


# group / poly
class GroupMismatch(CarnotError):
    pass


class NonpositiveLambda(CarnotError):
    pass


class ArityMismatch(CarnotError):
    pass


# diffop
class BadWord(CarnotError):
    pass


class NotSymmetric(CarnotError):
    pass


class NotElliptic(CarnotError):
    pass


# taylor
class InconsistentData(CarnotError):
    pass


class RankDeficiency(CarnotError):
    pass


class EvaluationFailure(CarnotError):
    pass


# approximator
class CharacteristicPoint(CarnotError):
    pass


class BadGraph(CarnotError):
    pass


class OffTriangular(CarnotError):
    pass


class SingularSystem(CarnotError):
    pass


class FreeKeyInvalid(CarnotError):
    pass


# verify
class DegenerateSample(CarnotError):
    pass


class EmptyShell(CarnotError):
    pass


class NoTangentBall(CarnotError):
    pass


class NonInterior(CarnotError):
    pass


class StuckPath(CarnotError):
    pass


class NotFound(CarnotError):
    pass


class ParseError(CarnotError):
    pass


class NotPolynomial(CarnotError):
    pass


# cli
class UsageError(CarnotError):
    pass


class ComputationFailed(CarnotError):
    pass
