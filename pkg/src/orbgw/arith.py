"""Exact rational arithmetic and half-step degree bookkeeping.

Every invariant value and coefficient in the package is a
:class:`fractions.Fraction`; integers are unbounded so the deep recursions
(denominators like ``4**64``) never leave exact arithmetic.

Curve degrees are stored as non-negative integer *steps*: the actual degree
is ``steps * degree_step`` for the target's minimal effective degree.
"""

from __future__ import annotations

from fractions import Fraction

Rational = Fraction


def make_rational(num: int, den: int = 1) -> Fraction:
    """Return ``num/den`` in reduced form with the sign on the numerator.

    Raises ``ZeroDivisionError`` for a zero denominator.
    """
    if den == 0:
        raise ZeroDivisionError(f"zero denominator in {num}/{den}")
    return Fraction(num, den)


def rat_add(a: Fraction, b: Fraction) -> Fraction:
    return a + b


def rat_mul(a: Fraction, b: Fraction) -> Fraction:
    return a * b


def rat_neg(a: Fraction) -> Fraction:
    return -a


def rat_inverse(a: Fraction) -> Fraction:
    if a == 0:
        raise ZeroDivisionError("inverse of zero")
    return 1 / Fraction(a)


def rat_pow(a: Fraction, n: int) -> Fraction:
    """Exact integer power; negative exponents go through the inverse."""
    if n < 0:
        return rat_inverse(a) ** -n
    return Fraction(a) ** n


def format_rational(r: Fraction) -> str:
    """Render as ``"num/den"``, dropping the denominator when it is 1."""
    r = Fraction(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def parse_rational(text) -> Fraction:
    """Parse ``"num/den"``, an integer string, or an int.

    Floats are refused: they cannot round-trip exactly.
    """
    if isinstance(text, bool) or isinstance(text, float):
        raise ValueError(f"not an exact rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    s = text.strip()
    if "/" in s:
        num, _, den = s.partition("/")
        try:
            return make_rational(int(num), int(den))
        except ValueError:
            raise ValueError(f"not a rational: {text!r}") from None
    try:
        return Fraction(int(s))
    except ValueError:
        raise ValueError(f"not a rational: {text!r}") from None


def steps_to_degree(steps: int, degree_step: Fraction) -> Fraction:
    return steps * degree_step


def degree_to_steps(degree: Fraction, degree_step: Fraction) -> int:
    """Convert an actual curve degree into a step count.

    Raises ``ValueError`` if the degree is negative or off the lattice.
    """
    q = Fraction(degree) / degree_step
    if q.denominator != 1 or q < 0:
        raise ValueError(f"degree {format_rational(degree)} is not a non-negative "
                         f"multiple of {format_rational(degree_step)}")
    return int(q)
