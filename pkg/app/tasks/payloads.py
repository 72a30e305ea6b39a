from pydantic import BaseModel, Field

from app.hybrid.errors import InputError
from app.hybrid.fixtures import H1_EVENTS, named_inequality
from app.hybrid.invariants import WeightedInequality
from app.hybrid.io import parse_inequality
from app.hybrid.scenario import HybridScenario

# --- Pydantic Models ---


class InequalityPayload(BaseModel):
    """An inequality given by its events (and a scenario) or by a named construction."""

    scenario: dict | None = Field(
        None,
        example={
            "parties": [
                {"name": "A", "settings": 3, "outcomes": 2},
                {"name": "B1", "settings": 2, "outcomes": 2},
                {"name": "B2", "settings": 2, "outcomes": 2},
            ],
            "a_side": ["A"],
            "b_side": ["B1", "B2"],
        },
    )
    events: list[str] = Field(default_factory=list, example=list(H1_EVENTS))
    weights: list[str] | None = Field(None, example=None, description="rationals such as '3/2'; default 1 each")
    generate: str | None = Field(None, example=None, description="h1, bowles, mobius:Q, double_bell:Q, cycle:N, ...")


def resolve_inequality(payload: InequalityPayload) -> tuple[WeightedInequality, HybridScenario | None]:
    scenario = HybridScenario.model_validate(payload.scenario) if payload.scenario else None
    if payload.generate:
        return named_inequality(payload.generate, scenario)
    if scenario is None:
        raise InputError("payload needs a scenario alongside its events")
    if payload.weights is not None and len(payload.weights) != len(payload.events):
        raise InputError(f"{len(payload.events)} events but {len(payload.weights)} weights")
    weights = payload.weights or ["1"] * len(payload.events)
    text = "\n".join(f"{e} : {w}" for e, w in zip(payload.events, weights))
    return parse_inequality(text, scenario)
