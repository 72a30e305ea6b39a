from fractions import Fraction

import pytest

from app.hybrid.errors import ParseError, ScenarioError, StrategyError
from app.hybrid.fixtures import H1_EVENTS, ghz_strategy
from app.hybrid.io import (
    dump_scenario,
    dump_strategy,
    format_inequality,
    input_digest,
    load_inequality,
    load_scenario,
    load_strategy,
    parse_inequality,
)
from app.hybrid.scenario import HybridScenario

SCENARIO = HybridScenario.broadcasting(3, 2, 2)


def test_load_bundled_inequality(data_dir, h1):
    ineq, scenario = load_inequality(data_dir / "inequalities" / "antihole7.ineq")
    assert ineq.name == "antihole7"
    assert scenario == SCENARIO
    assert input_digest(ineq, scenario) == input_digest(*h1)


def test_bundled_scenarios_load(data_dir):
    assert load_scenario(data_dir / "scenarios" / "broadcast_4_3_3.json") == HybridScenario.broadcasting(4, 3, 3)
    assert load_scenario(data_dir / "scenarios" / "double_bell_3.json") == HybridScenario.double_bell()


def test_scenario_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_scenario(bad)
    bad.write_text('{"parties": [{"name": "A", "settings": 2, "outcomes": 2}], "a_side": [0], "b_side": [0]}')
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_dump_scenario_reloads(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(dump_scenario(SCENARIO))
    assert load_scenario(path) == SCENARIO


def test_weights_and_label_forms():
    text = "100|000 : 3/2\np(1,0,1|0,0,0) : 2\n010|001\n"
    ineq, _ = parse_inequality(text, SCENARIO)
    assert ineq.weights == (Fraction(3, 2), Fraction(2), Fraction(1))
    assert ineq.graph.label(1) == "101|000"


def test_directive_resolves_relative_to_file(tmp_path, data_dir):
    path = tmp_path / "x.ineq"
    path.write_text(f"scenario = {data_dir / 'scenarios' / 'broadcast_3_2_2.json'}\n100|000\n101|000\n")
    ineq, scenario = load_inequality(path)
    assert scenario == SCENARIO
    assert ineq.graph.num_edges == 1


def test_explicit_scenario_overrides_directive():
    text = "scenario = does/not/exist.json\n100|000\n"
    ineq, scenario = parse_inequality(text, SCENARIO)
    assert scenario == SCENARIO
    assert ineq.graph.n == 1


@pytest.mark.parametrize(
    "text, line",
    [
        ("# only a comment\n\n", None),
        ("100|000\n100|000\n", 2),
        ("100|000 : 0\n", 1),
        ("100|000 : -1/2\n", 1),
        ("100|000 : x\n", 1),
        ("100|300\n", 1),
        ("10|000\n", 1),
    ],
)
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        parse_inequality(text, SCENARIO)
    assert info.value.line == line


def test_missing_scenario():
    with pytest.raises(ParseError):
        parse_inequality("100|000\n")


def test_digest_ignores_layout():
    plain = "\n".join(H1_EVENTS)
    shuffled = "# reordered\n\n" + "\n".join(f"  {e} : 1  # unit" for e in reversed(H1_EVENTS))
    a = input_digest(*parse_inequality(plain, SCENARIO))
    b = input_digest(*parse_inequality(shuffled, SCENARIO))
    assert a == b
    assert a.startswith("sha256:")
    weighted = input_digest(*parse_inequality(plain + " : 2", SCENARIO))
    assert weighted != a


def test_format_inequality_parses_back(h1):
    ineq, scenario = h1
    again, _ = parse_inequality(format_inequality(ineq), scenario)
    assert input_digest(again, scenario) == input_digest(ineq, scenario)


def test_strategy_file_errors(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"state": [[1, 0]], "measurements": [[[0, 0]]]}')
    with pytest.raises(StrategyError):
        load_strategy(path)
    path.write_text('{"state": [[1, 0], [1, 0]], "measurements": [[[0, 0]]]}')
    with pytest.raises(StrategyError):
        load_strategy(path)


def test_dump_strategy_reloads(tmp_path):
    state, measurements = ghz_strategy()
    path = tmp_path / "ghz.json"
    path.write_text(dump_strategy(state, measurements, name="ghz"))
    loaded, loaded_measurements = load_strategy(path)
    assert (loaded.amplitudes == state.amplitudes).all()
    assert loaded_measurements[2].angles == measurements[2].angles
