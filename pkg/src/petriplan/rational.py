"""Exact rational values and the canonical "p/q" document notation."""

from __future__ import annotations

from fractions import Fraction


def parse_rational(value) -> Fraction:
    """Parse a document-level number: an int, or a "p/q" / "p" string."""
    if isinstance(value, bool):
        raise ValueError("expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed rational {value!r}") from exc
    raise ValueError(f"expected int or 'p/q' string, got {type(value).__name__}")


def format_rational(x: Fraction) -> int | str:
    """Canonical document form: plain int when integral, else "p/q"."""
    if x.denominator == 1:
        return int(x)
    return f"{x.numerator}/{x.denominator}"
