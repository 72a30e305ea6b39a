import json

from celery.utils.log import get_task_logger
from pydantic import Field, ValidationError

from app.core.celery_app import celery_app
from app.hybrid.errors import HybridGraphError, InputError
from app.hybrid.fixtures import BUILTIN_STRATEGIES
from app.hybrid.io import StrategyFile, dump_strategy
from app.hybrid.quantum import optimize_violation, strategy_to_behavior
from app.hybrid.reports import evaluate
from app.tasks.payloads import InequalityPayload, resolve_inequality

logger = get_task_logger(__name__)

# --- Pydantic Models ---


class StrategyPayload(InequalityPayload):
    builtin: str | None = Field(None, example="ghz", description="Can be 'ghz' or 'general'")
    strategy: StrategyFile | None = Field(None, description="explicit state and measurement angles")


class OptimizePayload(InequalityPayload):
    seed: int = Field(0, example=1)
    restarts: int | None = Field(None, ge=1, example=20)


# --- Celery Task: Strategy evaluation ---


@celery_app.task(name="tasks.evaluate_strategy")
def evaluate_strategy(payload: dict):
    """Value, no-signaling check and normalization residual of an explicit strategy."""
    try:
        request = StrategyPayload.model_validate(payload)
        ineq, scenario = resolve_inequality(request)
        if scenario is None:
            raise InputError("quantum evaluation needs a scenario-built inequality")
        if request.strategy is not None:
            state, measurements = request.strategy.build()
        elif request.builtin in BUILTIN_STRATEGIES:
            state, measurements = BUILTIN_STRATEGIES[request.builtin]()
        else:
            raise InputError("payload needs a strategy or a known builtin name")
        evaluation = evaluate(strategy_to_behavior(state, measurements), ineq, scenario)
        logger.info(f"✅ Strategy value {evaluation.value:.6f}")
        return {"status": "completed", **evaluation.model_dump()}
    except (HybridGraphError, ValidationError) as e:
        logger.error(f"❌ evaluate_strategy failed: {e}")
        return {"status": "failed", "error": str(e)}


# --- Celery Task: Violation optimizer ---


@celery_app.task(name="tasks.optimize_strategy")
def optimize_strategy(payload: dict):
    try:
        request = OptimizePayload.model_validate(payload)
        ineq, scenario = resolve_inequality(request)
        if scenario is None:
            raise InputError("optimization needs a scenario-built inequality")
        result = optimize_violation(ineq, scenario, seed=request.seed, restarts=request.restarts)
        evaluation = evaluate(strategy_to_behavior(result.state, result.measurements), ineq, scenario)
        return {
            "status": "completed",
            **evaluation.model_dump(),
            "best_restart": result.seed,
            "strategy": json.loads(dump_strategy(result.state, result.measurements)),
        }
    except (HybridGraphError, ValidationError) as e:
        logger.error(f"❌ optimize_strategy failed: {e}")
        return {"status": "failed", "error": str(e)}
