"""Exact scalar arithmetic: q-Laurent units, rational functions of q, truncated h-series.

The deformation parameter is h, with q = e^{h/2}.  A ``QLaurent`` is a finite
linear combination of powers q^a (rational a allowed, so level shifts such as
e^{hc/2} with rational c stay exact).  Realizing q^a means substituting the
truncated exponential sum for e^{ah/2}; the result is an ``HSeries``, a tuple
of rational coefficients modulo h^hcap.
"""

from __future__ import annotations

import math
from fractions import Fraction

Frac = Fraction


def _frac(x) -> Frac:
    return x if isinstance(x, Fraction) else Fraction(x)


class QLaurent:
    """Finite sum of c_a * q^a with exact rational c_a and rational exponents a."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        d = {}
        if coeffs:
            for a, c in coeffs.items():
                c = _frac(c)
                if c:
                    d[_frac(a)] = c
        self.coeffs = d

    @staticmethod
    def one():
        return QLaurent({Frac(0): Frac(1)})

    @staticmethod
    def zero():
        return QLaurent()

    @staticmethod
    def qpow(a, coeff=1):
        return QLaurent({_frac(a): _frac(coeff)})

    def is_zero(self):
        return not self.coeffs

    def is_monomial(self):
        return len(self.coeffs) == 1

    def monomial_parts(self):
        """Return (exponent, coefficient) for a single-term element."""
        ((a, c),) = self.coeffs.items()
        return a, c

    def __add__(self, other):
        d = dict(self.coeffs)
        for a, c in other.coeffs.items():
            v = d.get(a, Frac(0)) + c
            if v:
                d[a] = v
            else:
                d.pop(a, None)
        return QLaurent(d)

    def __neg__(self):
        return QLaurent({a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QLaurent({Frac(0): other})
        d = {}
        for a, c in self.coeffs.items():
            for b, e in other.coeffs.items():
                k = a + b
                v = d.get(k, Frac(0)) + c * e
                if v:
                    d[k] = v
                else:
                    d.pop(k, None)
        return QLaurent(d)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, QLaurent) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def subs_q_one(self) -> Frac:
        """Value at q = 1."""
        return sum(self.coeffs.values(), Frac(0))

    def qminus1_valuation(self, bound=64) -> int:
        """Largest v <= bound with (q-1)^v dividing self (integer exponents only)."""
        if self.is_zero():
            return bound
        cur = self
        v = 0
        while v < bound and cur.subs_q_one() == 0:
            cur = cur._divide_qminus1()
            v += 1
        return v

    def _divide_qminus1(self):
        # shift to a polynomial in q, divide by (q - 1), shift back
        exps = list(self.coeffs)
        if any(a.denominator != 1 for a in exps):
            raise ValueError("(q-1)-division needs integer q-exponents")
        m = min(a.numerator for a in exps)
        poly = {int(a) - m: c for a, c in self.coeffs.items()}
        deg = max(poly)
        out = {}
        carry = Frac(0)
        # synthetic division by (q - 1), highest power first
        for k in range(deg, 0, -1):
            carry = carry + poly.get(k, Frac(0))
            if carry:
                out[k - 1] = carry
        if carry + poly.get(0, Frac(0)) != 0:
            raise ArithmeticError("not divisible by q-1")
        return QLaurent({Frac(k + m): c for k, c in out.items()})

    def realize(self, hcap: int) -> "HSeries":
        """Substitute q = e^{h/2} truncated to h^hcap."""
        out = [Frac(0)] * hcap
        for a, c in self.coeffs.items():
            term = exp_h(a / 2, hcap)
            for k in range(hcap):
                out[k] += c * term.c[k]
        return HSeries(tuple(out))

    def __repr__(self):
        if not self.coeffs:
            return "0"
        bits = []
        for a in sorted(self.coeffs):
            c = self.coeffs[a]
            if a == 0:
                bits.append(f"{c}")
            else:
                bits.append(f"{c}*q^{a}")
        return " + ".join(bits)


class QFraction:
    """Ratio of two QLaurent elements with integer q-exponents.

    Used for the coefficients of the q-difference equation solve; kept
    unevaluated so regularity at q = 1 can be inspected exactly.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: QLaurent, den: QLaurent = None):
        if den is None:
            den = QLaurent.one()
        if den.is_zero():
            raise ZeroDivisionError("QFraction with zero denominator")
        # cancel common powers of (q-1) so realization sees a unit denominator
        while (not num.is_zero()) and num.subs_q_one() == 0 and den.subs_q_one() == 0:
            num = num._divide_qminus1()
            den = den._divide_qminus1()
        while den.subs_q_one() == 0:
            if not num.is_zero() and num.subs_q_one() == 0:
                num = num._divide_qminus1()
                den = den._divide_qminus1()
            else:
                break
        self.num = num
        self.den = den

    @staticmethod
    def of(x) -> "QFraction":
        if isinstance(x, QFraction):
            return x
        if isinstance(x, QLaurent):
            return QFraction(x)
        return QFraction(QLaurent({Frac(0): _frac(x)}))

    def is_zero(self):
        return self.num.is_zero()

    def __add__(self, other):
        other = QFraction.of(other)
        return QFraction(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other):
        return self + (-QFraction.of(other))

    def __neg__(self):
        return QFraction(-self.num, self.den)

    def __mul__(self, other):
        other = QFraction.of(other)
        return QFraction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QFraction.of(other)
        return QFraction(self.num * other.den, self.den * other.num)

    def __eq__(self, other):
        other = QFraction.of(other)
        return (self.num * other.den) == (other.num * self.den)

    def qminus1_valuation(self, bound=64) -> int:
        return self.num.qminus1_valuation(bound) - self.den.qminus1_valuation(bound)

    def regular_at_one(self) -> bool:
        return self.den.subs_q_one() != 0

    def realize(self, hcap: int) -> "HSeries":
        den = self.den.realize(hcap)
        if den.c[0] == 0:
            raise ArithmeticError("denominator vanishes at q=1; cannot realize")
        return self.num.realize(hcap) * den.inverse()

    def __repr__(self):
        return f"({self.num!r})/({self.den!r})"


class HSeries:
    """Truncated series in h with exact rational coefficients, modulo h^hcap."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = tuple(_frac(x) for x in coeffs)

    @staticmethod
    def const(x, hcap: int):
        return HSeries((_frac(x),) + (Frac(0),) * (hcap - 1))

    @staticmethod
    def zero(hcap: int):
        return HSeries((Frac(0),) * hcap)

    @staticmethod
    def h(hcap: int, power: int = 1):
        co = [Frac(0)] * hcap
        if power < hcap:
            co[power] = Frac(1)
        return HSeries(co)

    @property
    def hcap(self) -> int:
        return len(self.c)

    def is_zero(self):
        return all(x == 0 for x in self.c)

    def h_valuation(self) -> int:
        for k, x in enumerate(self.c):
            if x:
                return k
        return self.hcap

    def _chk(self, other):
        if self.hcap != other.hcap:
            raise ValueError("h-series caps differ: %d vs %d" % (self.hcap, other.hcap))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HSeries.const(other, self.hcap)
        self._chk(other)
        return HSeries(tuple(a + b for a, b in zip(self.c, other.c)))

    __radd__ = __add__

    def __neg__(self):
        return HSeries(tuple(-a for a in self.c))

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HSeries.const(other, self.hcap)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return HSeries(tuple(a * other for a in self.c))
        self._chk(other)
        n = self.hcap
        out = [Frac(0)] * n
        for i, a in enumerate(self.c):
            if not a:
                continue
            for j in range(n - i):
                b = other.c[j]
                if b:
                    out[i + j] += a * b
        return HSeries(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HSeries.const(other, self.hcap)
        return isinstance(other, HSeries) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def inverse(self) -> "HSeries":
        """Multiplicative inverse; requires a unit (nonzero constant term)."""
        if self.c[0] == 0:
            raise ArithmeticError("inverting a non-unit h-series")
        n = self.hcap
        inv = [Frac(0)] * n
        inv[0] = 1 / self.c[0]
        for k in range(1, n):
            s = Frac(0)
            for j in range(1, k + 1):
                s += self.c[j] * inv[k - j]
            inv[k] = -s / self.c[0]
        return HSeries(inv)

    def sqrt_unit(self) -> "HSeries":
        """Square root with constant term +sqrt(c0); requires c0 = 1."""
        if self.c[0] != 1:
            raise ArithmeticError("h-series square root requires constant term 1")
        n = self.hcap
        r = [Frac(0)] * n
        r[0] = Frac(1)
        for k in range(1, n):
            s = Frac(0)
            for j in range(1, k):
                s += r[j] * r[k - j]
            r[k] = (self.c[k] - s) / 2
        return HSeries(r)

    def shift_down(self, k: int) -> "HSeries":
        """Divide by h^k; the low coefficients must vanish.

        The top k coefficients of the result are unknown at this cap and set
        to zero; callers track the reduced reliable order themselves.
        """
        if any(self.c[i] for i in range(min(k, self.hcap))):
            raise ArithmeticError("h-division with nonzero remainder")
        return HSeries(self.c[k:] + (Frac(0),) * min(k, self.hcap))

    def truncate(self, n: int) -> "HSeries":
        return HSeries(tuple(self.c[i] if i < n else Frac(0) for i in range(self.hcap)))

    def __repr__(self):
        bits = [f"{a}*h^{k}" for k, a in enumerate(self.c) if a]
        return " + ".join(bits) if bits else "0"


def exp_h(a, hcap: int) -> HSeries:
    """Truncated exponential series of a*h."""
    a = _frac(a)
    co = []
    for k in range(hcap):
        co.append(a ** k / math.factorial(k))
    return HSeries(co)


def realize_q(e: QLaurent, hcap: int) -> HSeries:
    """Substitute q = e^{h/2} into a q-Laurent element, truncated to h^hcap."""
    if hcap < 1:
        raise ValueError("hcap must be >= 1")
    return e.realize(hcap)
