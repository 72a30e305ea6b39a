"""Scenario, inequality and strategy files."""

import hashlib
import json
from pathlib import Path

from pydantic import BaseModel, Field, ValidationError

from app.hybrid.errors import ParseError, ScenarioError, StrategyError
from app.hybrid.graph import build_graph
from app.hybrid.invariants import WeightedInequality
from app.hybrid.quantum import PureState, QubitMeasurement
from app.hybrid.scenario import HybridScenario, parse_event_label
from app.hybrid.types import to_fraction

DATA_DIR = Path(__file__).resolve().parents[2] / "data"


# --- Scenarios ---


def load_scenario(path: str | Path) -> HybridScenario:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"cannot read scenario file {path}: {e}") from e
    try:
        return HybridScenario.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError(f"invalid scenario in {path}: {e.errors()[0]['msg']}") from e


def dump_scenario(scenario: HybridScenario) -> str:
    return json.dumps(scenario.to_file_dict(), indent=2) + "\n"


# --- Inequalities ---


def parse_inequality(text: str, scenario: HybridScenario | None = None, base_dir: Path | None = None,
                     name: str = "") -> tuple[WeightedInequality, HybridScenario]:
    """Parse lines "outcomes | settings : weight" (weight optional, default 1).

    A "scenario = <path>" directive names the scenario file when none is passed in;
    relative paths resolve against base_dir. "#" starts a comment.
    """
    entries: list[tuple[int, str, str]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("scenario") and "=" in line:
            if scenario is None:
                ref = Path(line.split("=", 1)[1].strip())
                if not ref.is_absolute() and base_dir is not None:
                    ref = base_dir / ref
                scenario = load_scenario(ref)
            continue
        event_text, _, weight_text = line.partition(":")
        entries.append((number, event_text.strip(), weight_text.strip()))

    if not entries:
        raise ParseError("inequality file lists no events")
    if scenario is None:
        raise ParseError("no scenario given and no 'scenario = <path>' directive found")

    events, weights, seen = [], [], {}
    for number, event_text, weight_text in entries:
        outcomes, settings_ = parse_event_label(event_text, scenario.num_parties, number)
        try:
            event = scenario.event(outcomes, settings_)
        except ScenarioError as e:
            raise ParseError(str(e), number) from e
        if event.canonical_index in seen:
            raise ParseError(f"duplicate event {event.label} (first on line {seen[event.canonical_index]})", number)
        seen[event.canonical_index] = number
        try:
            weight = to_fraction(weight_text) if weight_text else to_fraction(1)
        except ValueError as e:
            raise ParseError(str(e), number) from e
        if weight <= 0:
            raise ParseError(f"weight {weight} must be positive", number)
        events.append(event)
        weights.append(weight)

    graph = build_graph(scenario, events)
    return WeightedInequality(graph=graph, weights=tuple(weights), name=name), scenario


def load_inequality(path: str | Path, scenario: HybridScenario | None = None) -> tuple[WeightedInequality, HybridScenario]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read inequality file {path}: {e}") from e
    return parse_inequality(text, scenario, base_dir=path.parent, name=path.stem)


def format_inequality(ineq: WeightedInequality, scenario_ref: str | None = None) -> str:
    lines = [f"scenario = {scenario_ref}"] if scenario_ref else []
    for v, w in enumerate(ineq.weights):
        lines.append(f"{ineq.graph.label(v)} : {w}")
    return "\n".join(lines) + "\n"


def input_digest(ineq: WeightedInequality, scenario: HybridScenario) -> str:
    """sha256 over the canonical form; whitespace, comments and line order do not matter."""
    terms = sorted((e.canonical_index, str(w)) for e, w in zip(ineq.graph.labels or (), ineq.weights))
    payload = json.dumps({"scenario": scenario.to_file_dict(), "terms": terms}, sort_keys=True)
    return "sha256:" + hashlib.sha256(payload.encode()).hexdigest()


# --- Strategies ---


class StrategyFile(BaseModel):
    """state: [re, im] per basis ket; measurements: per party, per setting [polar, phase]."""

    name: str = ""
    state: list[tuple[float, float]] = Field(..., min_length=2)
    measurements: list[list[tuple[float, float]]] = Field(..., min_length=1)
    normalize: bool = False

    def build(self) -> tuple[PureState, tuple[QubitMeasurement, ...]]:
        state = PureState([complex(re, im) for re, im in self.state], normalize=self.normalize)
        return state, tuple(QubitMeasurement(m) for m in self.measurements)


def load_strategy(path: str | Path) -> tuple[PureState, tuple[QubitMeasurement, ...]]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"cannot read strategy file {path}: {e}") from e
    try:
        return StrategyFile.model_validate(raw).build()
    except ValidationError as e:
        raise StrategyError(f"invalid strategy in {path}: {e.errors()[0]['msg']}") from e


def dump_strategy(state: PureState, measurements, name: str = "") -> str:
    body = StrategyFile(
        name=name,
        state=[(float(a.real), float(a.imag)) for a in state.amplitudes],
        measurements=[list(m.angles) for m in measurements],
    )
    return body.model_dump_json(indent=2) + "\n"
