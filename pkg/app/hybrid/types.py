from fractions import Fraction
from typing import Annotated

from pydantic import PlainSerializer, PlainValidator


def to_fraction(value) -> Fraction:
    """Parse ints, Fractions and "p/q" strings exactly. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational: {value!r}") from e
    raise ValueError(f"expected an exact rational, got {type(value).__name__}")


# Exact rationals serialized as strings ("17/2").
Rational = Annotated[Fraction, PlainValidator(to_fraction), PlainSerializer(str, return_type=str)]

# Labelings are rational vectors indexed by graph vertices.
Labeling = tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def characteristic(n: int, subset) -> Labeling:
    members = set(subset)
    return tuple(ONE if v in members else ZERO for v in range(n))


def format_labeling(point: Labeling) -> str:
    return " ".join(str(x) for x in point)
