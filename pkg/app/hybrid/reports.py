from pydantic import BaseModel, Field

from app import __version__
from app.hybrid.invariants import BoundReport, WeightedInequality, check_chain, compute_bounds
from app.hybrid.io import input_digest
from app.hybrid.quantum import Behavior, check_no_signaling, evaluate_inequality
from app.hybrid.scenario import HybridScenario


class ReportEnvelope(BaseModel):
    version: str
    digest: str
    report: BoundReport
    timings: dict[str, float] | None = Field(default=None, description="seconds per stage, only when requested")


class QuantumEvaluation(BaseModel):
    value: float
    no_signaling: bool
    normalization_residual: float


def analyze(ineq: WeightedInequality, scenario: HybridScenario, timings: bool = False) -> ReportEnvelope:
    stages: dict[str, float] | None = {} if timings else None
    report = compute_bounds(ineq, timings=stages)
    check_chain(report)
    return ReportEnvelope(version=__version__, digest=input_digest(ineq, scenario), report=report, timings=stages)


def evaluate(behavior: Behavior, ineq: WeightedInequality, scenario: HybridScenario) -> QuantumEvaluation:
    blocks = [list(scenario.a_side), list(scenario.b_side)]
    return QuantumEvaluation(
        value=evaluate_inequality(behavior, ineq),
        no_signaling=check_no_signaling(behavior) and check_no_signaling(behavior, blocks),
        normalization_residual=behavior.normalization_residual(),
    )
