from itertools import product
from math import prod

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.hybrid.errors import ParseError, ScenarioError

SIDES = ("A", "B")


# --- Pydantic Models ---


class Party(BaseModel):
    """An observed party: a setting variable and an outcome variable."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = Field(..., min_length=1)
    num_settings: int = Field(..., ge=1, alias="settings")
    num_outcomes: int = Field(..., ge=2, alias="outcomes")


class Event(BaseModel):
    model_config = ConfigDict(frozen=True)

    outcomes: tuple[int, ...]
    settings: tuple[int, ...]
    canonical_index: int = Field(..., ge=0)

    @property
    def label(self) -> str:
        return format_event_label(self.outcomes, self.settings)

    def __str__(self) -> str:
        return self.label


class HybridScenario(BaseModel):
    """Parties split into the A-side (local causality) and the B-side block (no-signaling only).

    Sides may be given as party indices or party names.
    """

    model_config = ConfigDict(frozen=True)

    parties: tuple[Party, ...]
    a_side: tuple[int, ...]
    b_side: tuple[int, ...]

    @model_validator(mode="before")
    @classmethod
    def _resolve_names(cls, data):
        if not isinstance(data, dict):
            return data
        parties = data.get("parties") or ()
        names = [p["name"] if isinstance(p, dict) else p.name for p in parties]
        resolved = dict(data)
        for key in ("a_side", "b_side"):
            side = data.get(key) or ()
            out = []
            for entry in side:
                if isinstance(entry, str):
                    if entry not in names:
                        raise ValueError(f"{key} names unknown party {entry!r}")
                    out.append(names.index(entry))
                else:
                    out.append(entry)
            resolved[key] = tuple(out)
        return resolved

    @model_validator(mode="after")
    def _check_partition(self):
        k = len(self.parties)
        if k == 0:
            raise ValueError("scenario needs at least one party")
        names = [p.name for p in self.parties]
        if len(set(names)) != k:
            raise ValueError("party names must be unique")
        a, b = set(self.a_side), set(self.b_side)
        if not a or not b:
            raise ValueError("a_side and b_side must both be nonempty")
        if len(a) != len(self.a_side) or len(b) != len(self.b_side):
            raise ValueError("a side lists a party twice")
        if a & b:
            raise ValueError("a_side and b_side must be disjoint")
        if a | b != set(range(k)):
            raise ValueError("a_side and b_side must cover every party")
        return self

    # --- Named scenarios ---

    @classmethod
    def broadcasting(cls, x_settings: int = 3, y1_settings: int = 2, y2_settings: int = 2, outcomes: int = 2):
        """Alice on the A-side; Bob's share broadcast to B1 and B2."""
        return cls(
            parties=(
                Party(name="A", settings=x_settings, outcomes=outcomes),
                Party(name="B1", settings=y1_settings, outcomes=outcomes),
                Party(name="B2", settings=y2_settings, outcomes=outcomes),
            ),
            a_side=(0,),
            b_side=(1, 2),
        )

    @classmethod
    def double_bell(cls, settings: int = 3, outcomes: int = 2):
        return cls(
            parties=tuple(
                Party(name=name, settings=settings, outcomes=outcomes) for name in ("A1", "A2", "B1", "B2")
            ),
            a_side=(0, 1),
            b_side=(2, 3),
        )

    @classmethod
    def bell(cls, x_settings: int = 2, y_settings: int = 2, outcomes: int = 2):
        return cls(
            parties=(
                Party(name="A", settings=x_settings, outcomes=outcomes),
                Party(name="B", settings=y_settings, outcomes=outcomes),
            ),
            a_side=(0,),
            b_side=(1,),
        )

    # --- Shape helpers ---

    @property
    def num_parties(self) -> int:
        return len(self.parties)

    @property
    def settings_shape(self) -> tuple[int, ...]:
        return tuple(p.num_settings for p in self.parties)

    @property
    def outcomes_shape(self) -> tuple[int, ...]:
        return tuple(p.num_outcomes for p in self.parties)

    @property
    def num_events(self) -> int:
        return prod(self.settings_shape) * prod(self.outcomes_shape)

    def side_parties(self, side: str) -> tuple[int, ...]:
        if side == "A":
            return self.a_side
        if side == "B":
            return self.b_side
        raise ScenarioError(f"unknown side {side!r}; expected one of {SIDES}")

    def event(self, outcomes, settings) -> Event:
        outcomes, settings = tuple(int(o) for o in outcomes), tuple(int(s) for s in settings)
        k = self.num_parties
        if len(outcomes) != k or len(settings) != k:
            raise ScenarioError(f"event needs {k} outcomes and {k} settings, got {len(outcomes)}|{len(settings)}")
        for p, party in enumerate(self.parties):
            if not 0 <= outcomes[p] < party.num_outcomes:
                raise ScenarioError(f"outcome {outcomes[p]} out of range for party {party.name}")
            if not 0 <= settings[p] < party.num_settings:
                raise ScenarioError(f"setting {settings[p]} out of range for party {party.name}")
        return Event(outcomes=outcomes, settings=settings, canonical_index=self._rank(outcomes, settings))

    def parse_event(self, text: str) -> Event:
        outcomes, settings = parse_event_label(text, self.num_parties)
        return self.event(outcomes, settings)

    def event_at(self, index: int) -> Event:
        if not 0 <= index < self.num_events:
            raise ScenarioError(f"canonical index {index} out of range")
        n_out = prod(self.outcomes_shape)
        s_rank, o_rank = divmod(index, n_out)
        return self.event(_unrank(o_rank, self.outcomes_shape), _unrank(s_rank, self.settings_shape))

    def _rank(self, outcomes: tuple[int, ...], settings: tuple[int, ...]) -> int:
        return _rank(settings, self.settings_shape) * prod(self.outcomes_shape) + _rank(outcomes, self.outcomes_shape)

    def to_file_dict(self) -> dict:
        return {
            "parties": [p.model_dump(by_alias=True) for p in self.parties],
            "a_side": [self.parties[i].name for i in self.a_side],
            "b_side": [self.parties[i].name for i in self.b_side],
        }


# --- Mixed-radix ranks (first party most significant) ---


def _rank(digits: tuple[int, ...], radices: tuple[int, ...]) -> int:
    r = 0
    for d, base in zip(digits, radices):
        r = r * base + d
    return r


def _unrank(rank: int, radices: tuple[int, ...]) -> tuple[int, ...]:
    digits = []
    for base in reversed(radices):
        rank, d = divmod(rank, base)
        digits.append(d)
    return tuple(reversed(digits))


# --- Event labels ---


def format_event_label(outcomes, settings) -> str:
    if all(v < 10 for v in (*outcomes, *settings)):
        return "".join(map(str, outcomes)) + "|" + "".join(map(str, settings))
    return ",".join(map(str, outcomes)) + "|" + ",".join(map(str, settings))


def _parse_digits(text: str, k: int, line: int | None) -> tuple[int, ...]:
    text = text.strip()
    if "," in text or " " in text:
        parts = [t for t in text.replace(",", " ").split() if t]
    else:
        parts = list(text)
    try:
        values = tuple(int(t) for t in parts)
    except ValueError as e:
        raise ParseError(f"non-integer entry in {text!r}", line) from e
    if len(values) != k:
        raise ParseError(f"expected {k} entries in {text!r}, got {len(values)}", line)
    return values


def parse_event_label(text: str, k: int, line: int | None = None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Parse "100|000", "(1,0,0|0,0,0)" or "p(100|000)" into (outcomes, settings)."""
    body = text.strip()
    if body.startswith("p("):
        body = body[1:]
    body = body.strip("() ")
    if body.count("|") != 1:
        raise ParseError(f"event {text!r} must contain exactly one '|'", line)
    left, right = body.split("|")
    return _parse_digits(left, k, line), _parse_digits(right, k, line)


# --- Operations ---


def enumerate_events(scenario: HybridScenario) -> list[Event]:
    """All events, settings-major and outcomes-minor; position equals canonical_index."""
    events = []
    for settings in product(*(range(s) for s in scenario.settings_shape)):
        for outcomes in product(*(range(o) for o in scenario.outcomes_shape)):
            events.append(Event(outcomes=outcomes, settings=settings, canonical_index=len(events)))
    return events


def are_exclusive(u: Event, v: Event, party_subset) -> bool:
    """True iff some party in the subset used the same setting and saw different outcomes."""
    if len(u.outcomes) != len(v.outcomes) or len(u.settings) != len(v.settings):
        raise ScenarioError("events come from scenarios with different party counts")
    parties = tuple(party_subset)
    if not parties:
        raise ScenarioError("party subset must be nonempty")
    for p in parties:
        if not 0 <= p < len(u.outcomes):
            raise ScenarioError(f"party index {p} out of range")
        if u.settings[p] == v.settings[p] and u.outcomes[p] != v.outcomes[p]:
            return True
    return False


def exclusivity_sides(scenario: HybridScenario, u: Event, v: Event) -> tuple[bool, bool]:
    return are_exclusive(u, v, scenario.a_side), are_exclusive(u, v, scenario.b_side)


def side_events(scenario: HybridScenario, side: str) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Local (outcomes, settings) pairs of one side's parties, in canonical order."""
    parties = [scenario.parties[i] for i in scenario.side_parties(side)]
    out = []
    for settings in product(*(range(p.num_settings) for p in parties)):
        for outcomes in product(*(range(p.num_outcomes) for p in parties)):
            out.append((outcomes, settings))
    return out
