import pytest
from pydantic import ValidationError

from app.hybrid.errors import ParseError, ScenarioError
from app.hybrid.scenario import (
    HybridScenario,
    are_exclusive,
    enumerate_events,
    exclusivity_sides,
    parse_event_label,
    side_events,
)


def test_broadcasting_shape():
    scenario = HybridScenario.broadcasting(3, 2, 2)
    assert scenario.settings_shape == (3, 2, 2)
    assert scenario.num_events == 12 * 8
    assert scenario.a_side == (0,)
    assert scenario.b_side == (1, 2)


def test_sides_resolve_party_names():
    scenario = HybridScenario.model_validate(
        {
            "parties": [{"name": "A", "settings": 2, "outcomes": 2}, {"name": "B", "settings": 2, "outcomes": 2}],
            "a_side": ["A"],
            "b_side": ["B"],
        }
    )
    assert scenario == HybridScenario.bell()


@pytest.mark.parametrize(
    "a_side, b_side",
    [((0,), (0, 1)), ((0,), ()), ((0,), (1,))],
)
def test_sides_must_partition_parties(a_side, b_side):
    parties = [{"name": n, "settings": 2, "outcomes": 2} for n in ("A", "B1", "B2")]
    with pytest.raises(ValidationError):
        HybridScenario.model_validate({"parties": parties, "a_side": a_side, "b_side": b_side})


def test_enumerate_events_positions_are_canonical():
    scenario = HybridScenario.broadcasting(2, 2, 2)
    events = enumerate_events(scenario)
    assert len(events) == scenario.num_events
    for i, e in enumerate(events):
        assert e.canonical_index == i
        assert scenario.event_at(i) == e


def test_event_label_round_trip():
    scenario = HybridScenario.broadcasting(3, 2, 2)
    e = scenario.parse_event("p(1,0,1|2,0,1)")
    assert e.outcomes == (1, 0, 1)
    assert e.settings == (2, 0, 1)
    assert e.label == "101|201"


def test_event_out_of_range():
    with pytest.raises(ScenarioError):
        HybridScenario.broadcasting(3, 2, 2).event((0, 0, 0), (3, 0, 0))


@pytest.mark.parametrize("text", ["100000", "10|00|0", "1x0|000", "10|000"])
def test_bad_event_labels(text):
    with pytest.raises(ParseError):
        parse_event_label(text, 3)


def test_exclusivity_by_side():
    scenario = HybridScenario.broadcasting(3, 2, 2)
    u, v = scenario.parse_event("100|000"), scenario.parse_event("101|000")
    assert exclusivity_sides(scenario, u, v) == (False, True)
    w = scenario.parse_event("010|001")
    # A differs in outcome under the same setting; B1 too.
    assert exclusivity_sides(scenario, u, w) == (True, True)
    assert not are_exclusive(scenario.parse_event("100|000"), scenario.parse_event("000|100"), (0, 1, 2))


def test_are_exclusive_needs_parties():
    scenario = HybridScenario.bell()
    e = scenario.event((0, 0), (0, 0))
    with pytest.raises(ScenarioError):
        are_exclusive(e, e, ())


def test_side_events_cover_local_space():
    scenario = HybridScenario.broadcasting(3, 2, 2)
    assert len(side_events(scenario, "A")) == 3 * 2
    assert len(side_events(scenario, "B")) == 4 * 4
    with pytest.raises(ScenarioError):
        side_events(scenario, "C")
