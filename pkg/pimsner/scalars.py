"""Coefficient helpers shared by the exact (sympy) and float code paths."""
from fractions import Fraction
from numbers import Number
from typing import Any, Sequence

import sympy


def exact(value: Any) -> sympy.Expr:
    """Convert a number to an exact sympy scalar (Gaussian rationals for complex input)."""
    if isinstance(value, sympy.Basic):
        return sympy.expand(value)
    if isinstance(value, bool):
        return sympy.Integer(int(value))
    if isinstance(value, int):
        return sympy.Integer(value)
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        return sympy.Rational(value)
    if isinstance(value, complex):
        return sympy.Rational(value.real) + sympy.I * sympy.Rational(value.imag)
    if isinstance(value, str):
        return sympy.Rational(value)
    raise TypeError(f"Cannot convert {value!r} to an exact scalar")


def conj(value: Any) -> Any:
    """Complex conjugate for sympy or Python numbers."""
    if isinstance(value, sympy.Basic):
        return sympy.expand(sympy.conjugate(value))
    if isinstance(value, complex):
        return value.conjugate()
    return value


def is_zero(value: Any, tol: float = 0.0) -> bool:
    """Exact zero test for sympy scalars, tolerance test for floats."""
    if isinstance(value, sympy.Basic):
        return sympy.expand(value) == 0
    return abs(value) <= tol


def from_pair(pair: Any) -> sympy.Expr:
    """Parse the `[re, im]` JSON encoding (a bare number is a real scalar)."""
    if isinstance(pair, Sequence) and not isinstance(pair, str):
        if len(pair) != 2:
            raise ValueError(f"coefficient must be [re, im], got {pair!r}")
        return exact(pair[0]) + sympy.I * exact(pair[1])
    if isinstance(pair, (Number, str)):
        return exact(pair)
    raise ValueError(f"coefficient must be [re, im], got {pair!r}")


def to_pair(value: Any) -> list:
    """Encode a scalar as `[re, im]`; rationals become "p/q" strings, integers stay integers."""
    if isinstance(value, sympy.Basic):
        re, im = sympy.expand(value).as_real_imag()
        return [_encode_real(re), _encode_real(im)]
    value = complex(value)
    return [value.real, value.imag]


def _encode_real(value: sympy.Expr) -> Any:
    if value.is_Integer:
        return int(value)
    if value.is_Rational:
        return f"{value.p}/{value.q}"
    return float(value)
