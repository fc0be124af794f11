"""
Serialization helpers
Rationals travel as "num/den" strings; reports are deterministic JSON
"""
import json
from fractions import Fraction
from typing import Any, Dict, List, Sequence

from models.errors import ParseError


def format_fraction(value) -> str:
    """Lowest terms with positive denominator; integers without a denominator"""
    q = Fraction(value)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_scalar(value) -> str:
    if isinstance(value, (int, Fraction)):
        return format_fraction(value)
    return repr(float(value))


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"not a rational: {text!r}", {"text": text}) from e


def parse_scalar(text: str):
    """Rational when the text is rational, float otherwise"""
    text = str(text).strip()
    try:
        return Fraction(text)
    except ValueError:
        try:
            return float(text)
        except ValueError as e:
            raise ParseError(f"not a scalar: {text!r}", {"text": text}) from e


def format_coords(coords: Sequence) -> str:
    return ",".join(format_scalar(c) for c in coords)


def parse_coords(text: str) -> List:
    if not str(text).strip():
        return []
    return [parse_scalar(part) for part in str(text).split(",")]


def dumps_report(report: Dict[str, Any]) -> str:
    """Byte-stable JSON for identical inputs"""
    return json.dumps(report, sort_keys=True, indent=2)


def read_report(text: str) -> Dict[str, Any]:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"report is not valid JSON: {e}") from e


def read_rational_table(entries: Sequence[Dict[str, Any]], key: str = "value") -> List[Fraction]:
    return [parse_fraction(entry[key]) for entry in entries]
