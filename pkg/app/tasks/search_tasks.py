from celery.utils.log import get_task_logger
from pydantic import BaseModel, Field, ValidationError

from app.core.celery_app import celery_app
from app.hybrid.errors import HybridGraphError
from app.hybrid.scenario import HybridScenario
from app.hybrid.search import SearchConfig, scan_for_genuine

logger = get_task_logger(__name__)

# --- Pydantic Models ---


class ScanPayload(BaseModel):
    scenario: dict | None = Field(None, description="defaults to broadcasting with 3 settings per party")
    max_subgraph_size: int = Field(12, ge=5, example=12)
    weight_palette: list[str] = Field(["1", "2"], example=["1", "2"])
    seed: int = Field(0, example=1)
    time_budget: float | None = Field(None, gt=0, example=60)
    max_candidates: int | None = Field(None, ge=1, example=200)


# --- Celery Task: Genuine-inequality scan ---


@celery_app.task(name="tasks.scan_candidates")
def scan_candidates(payload: dict):
    """
    Samples candidate inequalities around B-side odd holes and ranks their
    bound chains by alpha_hat - alpha, then theta - alpha_hat.
    """
    try:
        request = ScanPayload.model_validate(payload)
        scenario = (
            HybridScenario.model_validate(request.scenario)
            if request.scenario
            else HybridScenario.broadcasting(3, 3, 3)
        )
        config = SearchConfig(
            scenario=scenario,
            max_subgraph_size=request.max_subgraph_size,
            weight_palette=tuple(request.weight_palette),
            seed=request.seed,
            time_budget=request.time_budget,
            max_candidates=request.max_candidates,
        )
        outcome = scan_for_genuine(config)
        return {"status": "completed", **outcome.model_dump(mode="json")}
    except (HybridGraphError, ValidationError) as e:
        logger.error(f"❌ scan_candidates failed: {e}")
        return {"status": "failed", "error": str(e)}
