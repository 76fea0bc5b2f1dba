"""Exact arithmetic in a real number field Q(theta).

A :class:`NumberField` is given by a monic squarefree polynomial over Q
together with a rational interval isolating one real root. Elements are
:class:`Scalar` values holding ``d`` rational coordinates with respect to
the power basis ``1, theta, ..., theta^(d-1)``.

Signs are decided exactly: a nonzero element is evaluated with interval
arithmetic on the isolating interval, which is bisected until the result
excludes zero.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence


class DomainMismatchError(ValueError):
    """Operands live in different number fields."""


# --- polynomials over Q, coefficient lists low -> high -----------------------


def _trim(p: list[Fraction]) -> list[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_add(p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
    n = max(len(p), len(q))
    out = [Fraction(0)] * n
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] += c
    return _trim(out)


def poly_scale(p: Sequence[Fraction], c: Fraction) -> list[Fraction]:
    return _trim([c * x for x in p])


def poly_sub(p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
    return poly_add(p, poly_scale(q, Fraction(-1)))


def poly_mul(p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
    if not p or not q:
        return []
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def poly_divmod(p: Sequence[Fraction], q: Sequence[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    q = _trim(list(q))
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = _trim(list(p))
    if len(r) < len(q):
        return [], r
    quot = [Fraction(0)] * (len(r) - len(q) + 1)
    lead = q[-1]
    while len(r) >= len(q):
        c = r[-1] / lead
        k = len(r) - len(q)
        quot[k] = c
        for i, b in enumerate(q):
            r[i + k] -= c * b
        r.pop()
        _trim(r)
    return _trim(quot), r


def poly_monic(p: Sequence[Fraction]) -> list[Fraction]:
    p = _trim(list(p))
    if not p:
        return p
    return [c / p[-1] for c in p]


def poly_gcd(p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
    a, b = _trim(list(p)), _trim(list(q))
    while b:
        a, b = b, poly_divmod(a, b)[1]
    return poly_monic(a)


def poly_derivative(p: Sequence[Fraction]) -> list[Fraction]:
    return _trim([i * c for i, c in enumerate(p)][1:])


def poly_eval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def sturm_sequence(p: Sequence[Fraction]) -> list[list[Fraction]]:
    seq = [_trim(list(p)), poly_derivative(p)]
    while seq[-1]:
        rem = poly_divmod(seq[-2], seq[-1])[1]
        seq.append(poly_scale(rem, Fraction(-1)))
    seq.pop()
    return seq


def _sign_changes(seq: list[list[Fraction]], x: Fraction) -> int:
    signs = [v for v in (poly_eval(s, x) for s in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a < 0) != (b < 0))


def count_roots(p: Sequence[Fraction], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots of ``p`` in the half-open interval (lo, hi]."""
    seq = sturm_sequence(p)
    return _sign_changes(seq, lo) - _sign_changes(seq, hi)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def has_rational_root(p: Sequence[Fraction]) -> bool:
    p = _trim(list(p))
    if len(p) <= 1:
        return False
    if p[0] == 0:
        return True
    den = 1
    for c in p:
        den = den * c.denominator // _gcd(den, c.denominator)
    ints = [int(c * den) for c in p]
    for num in _divisors(ints[0]):
        for d in _divisors(ints[-1]):
            for cand in (Fraction(num, d), Fraction(-num, d)):
                if poly_eval(p, cand) == 0:
                    return True
    return False


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


# --- interval arithmetic -----------------------------------------------------


def _imul(a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    prods = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(prods), max(prods)


def _interval_eval(p: Sequence[Fraction], lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    acc = (Fraction(0), Fraction(0))
    for c in reversed(p):
        acc = _imul(acc, (lo, hi))
        acc = (acc[0] + c, acc[1] + c)
    return acc


def to_fraction(x) -> Fraction:
    """Parse an int, Fraction or decimal-free "p/q" string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        if "." in x or "e" in x.lower():
            raise ValueError(f"rational string must be decimal-free: {x!r}")
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational")


# --- the field ---------------------------------------------------------------


class NumberField:
    """Q(theta) for one real root theta of a monic squarefree polynomial.

    ``minpoly`` lists coefficients from the constant term up, ending in 1.
    ``root_between`` is a pair (lo, hi) of rationals with exactly one root
    of ``minpoly`` strictly inside and none at the endpoints.
    """

    def __init__(self, minpoly: Iterable, root_between: Sequence | None = None, name: str | None = None):
        poly = _trim([to_fraction(c) for c in minpoly])
        if len(poly) < 2:
            raise ValueError("minpoly must have degree >= 1")
        if poly[-1] != 1:
            raise ValueError("minpoly must be monic")
        self.minpoly: tuple[Fraction, ...] = tuple(poly)
        self.degree = len(poly) - 1
        if root_between is None:
            if self.degree != 1:
                raise ValueError("root_between is required for degree > 1")
            r = -poly[0]
            root_between = (r - 1, r + 1)
        lo, hi = (to_fraction(v) for v in root_between)
        if not lo < hi:
            raise ValueError("root_between must satisfy lo < hi")
        if len(poly_gcd(poly, poly_derivative(poly))) > 1:
            raise ValueError("minpoly is not squarefree")
        if self.degree > 1 and has_rational_root(poly):
            raise ValueError("minpoly has a rational root; powers of theta are not Q-independent")
        flo, fhi = poly_eval(poly, lo), poly_eval(poly, hi)
        if flo == 0 or fhi == 0 or (flo < 0) == (fhi < 0):
            raise ValueError("minpoly must change sign strictly between lo and hi")
        if count_roots(poly, lo, hi) != 1:
            raise ValueError("root_between must isolate exactly one root")
        self.root_between = (lo, hi)
        self.name = name
        self._iso = (lo, hi)
        self._lock = threading.Lock()
        # x^k mod minpoly for k in [d, 2d-2]
        self._reductions: list[list[Fraction]] = []
        for k in range(self.degree, 2 * self.degree - 1):
            mono = [Fraction(0)] * k + [Fraction(1)]
            rem = poly_divmod(mono, poly)[1]
            self._reductions.append(rem + [Fraction(0)] * (self.degree - len(rem)))

    @classmethod
    def sqrt(cls, n: int) -> "NumberField":
        """Q(sqrt(n)) with the positive root."""
        return cls([-n, 0, 1], (0, max(n, 1) + 1), name=f"sqrt{n}")

    @property
    def gen(self) -> "Scalar":
        if self.degree == 1:
            return Scalar(self, (-self.minpoly[0],))
        return Scalar(self, (Fraction(0), Fraction(1)) + (Fraction(0),) * (self.degree - 2))

    def __call__(self, value) -> "Scalar":
        if isinstance(value, Scalar):
            _check_same(self, value.field)
            return value
        if isinstance(value, (list, tuple)):
            coeffs = [to_fraction(c) for c in value]
            if len(coeffs) > self.degree:
                raise ValueError(f"expected at most {self.degree} coefficients")
            return Scalar(self, tuple(coeffs) + (Fraction(0),) * (self.degree - len(coeffs)))
        return Scalar(self, (to_fraction(value),) + (Fraction(0),) * (self.degree - 1))

    def zero(self) -> "Scalar":
        return self(0)

    def one(self) -> "Scalar":
        return self(1)

    def root_interval(self) -> tuple[Fraction, Fraction]:
        return self._iso

    def _refine(self) -> None:
        with self._lock:
            lo, hi = self._iso
            mid = (lo + hi) / 2
            fm = poly_eval(self.minpoly, mid)
            if fm == 0:
                self._iso = (mid, mid)
            elif (fm < 0) == (poly_eval(self.minpoly, lo) < 0):
                self._iso = (mid, hi)
            else:
                self._iso = (lo, mid)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, NumberField) or self.minpoly != other.minpoly:
            return False
        lo = max(self._iso[0], other._iso[0])
        hi = min(self._iso[1], other._iso[1])
        if lo > hi:
            return False
        if lo == hi:
            return poly_eval(self.minpoly, lo) == 0
        return count_roots(self.minpoly, lo, hi) == 1 or poly_eval(self.minpoly, lo) == 0

    def __hash__(self) -> int:
        return hash(self.minpoly)

    def to_json(self) -> dict:
        return {
            "minpoly": [_frac_str(c) for c in self.minpoly],
            "root_between": [_frac_str(c) for c in self.root_between],
        }

    def __repr__(self) -> str:
        if self.degree == 1:
            return "QQ"
        return f"NumberField(minpoly={[str(c) for c in self.minpoly]}, root_between={tuple(str(c) for c in self.root_between)})"


def _check_same(f: NumberField, g: NumberField) -> None:
    if f is not g and f != g:
        raise DomainMismatchError(f"mixed number fields: {f!r} vs {g!r}")


def _frac_str(c: Fraction) -> str:
    return str(c)


QQ = NumberField([0, 1], (-1, 1), name="QQ")


class Scalar:
    """Immutable element sum(coeffs[k] * theta^k) of a :class:`NumberField`."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: NumberField, coeffs: tuple[Fraction, ...]):
        if len(coeffs) != field.degree:
            raise ValueError("coefficient vector has wrong length")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    def _coerce(self, other) -> "Scalar | None":
        if isinstance(other, Scalar):
            _check_same(self.field, other.field)
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.field(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar(self.field, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return Scalar(self.field, tuple(-a for a in self.coeffs))

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar(self.field, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            c = Fraction(other)
            return Scalar(self.field, tuple(a * c for a in self.coeffs))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self.field.degree
        if d == 1:
            return Scalar(self.field, (self.coeffs[0] * o.coeffs[0],))
        prod = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(o.coeffs):
                if b:
                    prod[i + j] += a * b
        out = prod[:d]
        for k, c in enumerate(prod[d:]):
            if c:
                red = self.field._reductions[k]
                for i in range(d):
                    out[i] += c * red[i]
        return Scalar(self.field, tuple(out))

    __rmul__ = __mul__

    def inv(self) -> "Scalar":
        if not any(self.coeffs):
            raise ZeroDivisionError("inverse of zero")
        d = self.field.degree
        if d == 1:
            return Scalar(self.field, (1 / self.coeffs[0],))
        # extended Euclid: track s with s*a == r (mod minpoly)
        f = list(self.field.minpoly)
        r0, r1 = f, _trim(list(self.coeffs))
        s0, s1 = [], [Fraction(1)]
        while len(r1) > 1:
            q, rem = poly_divmod(r0, r1)
            r0, r1 = r1, rem
            s0, s1 = s1, poly_sub(s0, poly_mul(q, s1))
        if not r1:
            raise ZeroDivisionError("element is a zero divisor (minpoly is reducible)")
        s = poly_scale(s1, 1 / r1[0])
        s = poly_divmod(s, f)[1]
        return Scalar(self.field, tuple(s) + (Fraction(0),) * (d - len(s)))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            c = Fraction(other)
            return Scalar(self.field, tuple(a / c for a in self.coeffs))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inv()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inv()

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        out, base = self.field.one(), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        o = self._coerce(other) if not isinstance(other, Scalar) else other
        if o is None:
            return NotImplemented
        if o.field is not self.field and o.field != self.field:
            return False
        return self.coeffs == o.coeffs

    def __hash__(self) -> int:
        if all(c == 0 for c in self.coeffs[1:]):
            return hash(self.coeffs[0])
        return hash(self.coeffs)

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def rational_coords(self) -> tuple[Fraction, ...]:
        return self.coeffs

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return self.coeffs[0]

    def _is_zero_at_root(self) -> bool:
        if not any(self.coeffs):
            return True
        g = poly_gcd(list(self.coeffs), list(self.field.minpoly))
        if len(g) <= 1:
            return False
        lo, hi = self.field.root_interval()
        if lo == hi:
            return poly_eval(g, lo) == 0
        return count_roots(g, lo, hi) > 0

    def approx(self, eps) -> tuple[Fraction, Fraction]:
        """Rational interval of width <= eps containing the real value."""
        eps = to_fraction(eps) if not isinstance(eps, float) else Fraction(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        if self.is_rational():
            return self.coeffs[0], self.coeffs[0]
        poly = _trim(list(self.coeffs))
        while True:
            lo, hi = self.field.root_interval()
            a, b = _interval_eval(poly, lo, hi)
            if b - a <= eps:
                return a, b
            self.field._refine()

    def sign(self) -> int:
        if self.is_rational():
            c = self.coeffs[0]
            return (c > 0) - (c < 0)
        if self._is_zero_at_root():
            return 0
        poly = _trim(list(self.coeffs))
        while True:
            lo, hi = self.field.root_interval()
            a, b = _interval_eval(poly, lo, hi)
            if a > 0:
                return 1
            if b < 0:
                return -1
            self.field._refine()

    def to_rational_approx(self, eps=Fraction(1, 2**70)) -> Fraction:
        lo, hi = self.approx(eps)
        return (lo + hi) / 2

    def __float__(self) -> float:
        if self.is_rational():
            return float(self.coeffs[0])
        return float(self.to_rational_approx())

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def to_json(self):
        if self.is_rational():
            return str(self.coeffs[0])
        return [str(c) for c in self.coeffs]

    def __str__(self) -> str:
        if self.is_rational():
            return str(self.coeffs[0])
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if k == 0 else ("θ" if k == 1 else f"θ^{k}")
            if not mono:
                terms.append(str(c))
            elif c == 1:
                terms.append(mono)
            elif c == -1:
                terms.append("-" + mono)
            else:
                terms.append(f"{c}*{mono}")
        return " + ".join(terms).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Scalar({self})"


# module-level helpers mirroring the operation names


def add(a: Scalar, b: Scalar) -> Scalar:
    return a + b


def mul(a: Scalar, b: Scalar) -> Scalar:
    return a * b


def neg(a: Scalar) -> Scalar:
    return -a


def inv(a: Scalar) -> Scalar:
    return a.inv()


def rational_coords(a: Scalar) -> tuple[Fraction, ...]:
    return a.rational_coords()


def sign(a: Scalar) -> int:
    return a.sign()


def approx(a: Scalar, eps) -> tuple[Fraction, Fraction]:
    return a.approx(eps)
