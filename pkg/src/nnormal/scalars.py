"""Exact Gaussian-rational scalars.

``Rational`` is gmpy2's ``mpq``: always reduced, positive denominator, exact.
``Scalar`` pairs two of them as ``re + im*i``.

Text forms used by the model files::

    rational:  "p/q"  (q omitted when 1, sign carried on p)
    scalar:    ["p/q", "r/s"]   (re, im)

and a compact form for reports (``"1/2-3i"``) that also parses back.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Integral

from gmpy2 import mpq

Rational = type(mpq())

_RATIONAL_RE = re.compile(r"^(-?)(\d+)(?:/(\d+))?$")


class ScalarParseError(ValueError):
    pass


def parse_rational(text: str) -> Rational:
    if not isinstance(text, str):
        raise ScalarParseError(f"rational must be a 'p/q' string, got {text!r}")
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ScalarParseError(f"malformed rational {text!r}")
    sign, p, q = m.groups()
    q = int(q) if q is not None else 1
    if q == 0:
        raise ScalarParseError(f"zero denominator in {text!r}")
    value = mpq(int(p), q)
    return -value if sign else value


def format_rational(q) -> str:
    q = to_rational(q)
    # mpq's str is already "p/q" with the /1 dropped
    return str(q)


def to_rational(x) -> Rational:
    if isinstance(x, Rational):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (Integral, Fraction)):
        return mpq(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot make an exact rational from {type(x).__name__}")


_ZERO = mpq(0)
_ONE = mpq(1)


class Scalar:
    """An exact element of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", to_rational(re))
        object.__setattr__(self, "im", to_rational(im))

    @classmethod
    def _raw(cls, re, im) -> Scalar:
        s = object.__new__(cls)
        object.__setattr__(s, "re", re)
        object.__setattr__(s, "im", im)
        return s

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    def __reduce__(self):
        return (Scalar, (Fraction(int(self.re.numerator), int(self.re.denominator)),
                         Fraction(int(self.im.numerator), int(self.im.denominator))))

    # arithmetic -------------------------------------------------------

    def __add__(self, other):
        o = other if type(other) is Scalar else _coerce(other)
        if o is NotImplemented:
            return o
        return Scalar._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = other if type(other) is Scalar else _coerce(other)
        if o is NotImplemented:
            return o
        return Scalar._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = other if type(other) is Scalar else _coerce(other)
        if o is NotImplemented:
            return o
        if not self.im and not o.im:
            return Scalar._raw(self.re * o.re, _ZERO)
        return Scalar._raw(self.re * o.re - self.im * o.im,
                           self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __neg__(self):
        return Scalar._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def inverse(self) -> Scalar:
        if not self.im:
            if not self.re:
                raise ZeroDivisionError("inverse of zero scalar")
            return Scalar._raw(_ONE / self.re, _ZERO)
        d = self.re * self.re + self.im * self.im
        return Scalar._raw(self.re / d, -self.im / d)

    def conjugate(self) -> Scalar:
        return Scalar._raw(self.re, -self.im)

    def abs_bound(self) -> Rational:
        """|re| + |im|, an exact upper bound on the modulus."""
        return abs(self.re) + abs(self.im)

    # comparison -------------------------------------------------------

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def sort_key(self):
        return (self.re, self.im)

    def __repr__(self):
        return f"Scalar({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


ZERO = Scalar._raw(_ZERO, _ZERO)
ONE = Scalar._raw(_ONE, _ZERO)


def _coerce(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (Rational, Integral, Fraction)) and not isinstance(x, bool):
        return Scalar._raw(mpq(x), _ZERO)
    return NotImplemented


def as_scalar(x) -> Scalar:
    """Coerce ints, rationals, ``(re, im)`` pairs and text to a Scalar."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (tuple, list)) and len(x) == 2:
        return Scalar(x[0], x[1])
    if isinstance(x, str):
        return parse_scalar(x)
    o = _coerce(x)
    if o is NotImplemented:
        raise TypeError(f"cannot make an exact scalar from {x!r}")
    return o


def scalar_to_json(z: Scalar) -> list[str]:
    return [format_rational(z.re), format_rational(z.im)]


def scalar_from_json(obj) -> Scalar:
    if not isinstance(obj, list) or len(obj) != 2:
        raise ScalarParseError(f"scalar must be a [re, im] pair of strings, got {obj!r}")
    return Scalar._raw(parse_rational(obj[0]), parse_rational(obj[1]))


def format_scalar(z: Scalar) -> str:
    if not z.im:
        return str(z.re)
    im = z.im
    if im == 1:
        ims = "i"
    elif im == -1:
        ims = "-i"
    else:
        ims = f"{im}i"
    if not z.re:
        return ims
    if ims.startswith("-"):
        return f"{z.re}{ims}"
    return f"{z.re}+{ims}"


_COMPACT_RE = re.compile(
    r"^(?:(?P<re>-?\d+(?:/\d+)?)(?=$|[+-]))?"
    r"(?:(?P<sign>[+-])?(?P<im>\d+(?:/\d+)?)?i)?$"
)


def parse_scalar(text: str) -> Scalar:
    """Inverse of :func:`format_scalar`."""
    if not text:
        raise ScalarParseError("empty scalar")
    m = _COMPACT_RE.match(text)
    if m is None or (m.group("re") is None and not text.endswith("i")):
        raise ScalarParseError(f"malformed scalar {text!r}")
    re_part = parse_rational(m.group("re")) if m.group("re") is not None else _ZERO
    im_part = _ZERO
    if text.endswith("i"):
        mag = parse_rational(m.group("im")) if m.group("im") is not None else _ONE
        im_part = -mag if m.group("sign") == "-" else mag
        if m.group("re") is not None and m.group("sign") is None:
            raise ScalarParseError(f"malformed scalar {text!r}")
    return Scalar._raw(re_part, im_part)
