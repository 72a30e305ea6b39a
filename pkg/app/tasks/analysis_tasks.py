from celery.utils.log import get_task_logger
from pydantic import BaseModel, Field, ValidationError

from app.core.celery_app import celery_app
from app.hybrid.errors import HybridGraphError, InputError
from app.hybrid.fixtures import run_fixtures
from app.hybrid.polytope import VERTEX_BUILDERS
from app.hybrid.reports import analyze
from app.tasks.payloads import InequalityPayload, resolve_inequality

logger = get_task_logger(__name__)

# --- Pydantic Models ---


class AnalyzePayload(InequalityPayload):
    timings: bool = Field(False, example=False)


class VerticesPayload(InequalityPayload):
    kind: str = Field("hstab", example="hstab", description="Can be 'stab', 'qstab' or 'hstab'")


class FixturesPayload(BaseModel):
    only: str | None = Field(None, example="theta")
    h1_weight: str | None = Field(None, example=None)


# --- Celery Task: Bound chain ---


@celery_app.task(name="tasks.analyze_inequality")
def analyze_inequality(payload: dict):
    """
    Computes alpha, alpha_hat, alpha_star and theta for one inequality and
    returns the report envelope.
    """
    try:
        request = AnalyzePayload.model_validate(payload)
        ineq, scenario = resolve_inequality(request)
        if scenario is None:
            raise InputError("analysis needs a scenario-built inequality")
        logger.info(f"📐 Analyzing {ineq.name or 'inequality'} on {ineq.graph.n} events")
        envelope = analyze(ineq, scenario, timings=request.timings)
        return {"status": "completed", **envelope.model_dump(mode="json")}
    except (HybridGraphError, ValidationError) as e:
        logger.error(f"❌ analyze_inequality failed: {e}")
        return {"status": "failed", "error": str(e)}


# --- Celery Task: Vertex export ---


@celery_app.task(name="tasks.enumerate_vertices")
def enumerate_vertices(payload: dict):
    try:
        request = VerticesPayload.model_validate(payload)
        if request.kind not in VERTEX_BUILDERS:
            raise InputError(f"unknown polytope kind {request.kind!r}")
        ineq, _ = resolve_inequality(request)
        polytope = VERTEX_BUILDERS[request.kind](ineq.graph)
        logger.info(f"✅ {len(polytope)} {request.kind} vertices on {ineq.graph.n} coordinates")
        return {
            "status": "completed",
            "kind": request.kind,
            "count": len(polytope),
            "vertices": polytope.to_text().splitlines(),
        }
    except (HybridGraphError, ValidationError) as e:
        logger.error(f"❌ enumerate_vertices failed: {e}")
        return {"status": "failed", "error": str(e)}


# --- Celery Task: Reference fixtures ---


@celery_app.task(name="tasks.verify_reference_fixtures")
def verify_reference_fixtures(payload: dict):
    request = FixturesPayload.model_validate(payload)
    weights = [request.h1_weight] if request.h1_weight else None
    outcomes = run_fixtures(only=request.only, h1_weights=weights)
    passed = bool(outcomes) and all(o.passed for o in outcomes)
    if not passed:
        logger.warning(f"⚠️ {sum(not o.passed for o in outcomes)} fixtures failed")
    return {
        "status": "completed",
        "passed": passed,
        "fixtures": [o.model_dump() for o in outcomes],
    }
