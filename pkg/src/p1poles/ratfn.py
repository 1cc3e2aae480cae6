"""Polynomials and rational functions in one variable with exact rational coefficients."""
from __future__ import annotations

from functools import reduce
from math import lcm as ilcm

import gmpy2
from gmpy2 import mpq

from .series import rat, rat_str

ZERO = mpq(0)
ONE = mpq(1)


def _trim(cs):
    cs = list(cs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


class Poly:
    """Dense polynomial, coefficients ascending. The zero polynomial has no coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs=()):
        self.c = _trim(rat(a) for a in coeffs)

    @classmethod
    def monomial(cls, n: int, a=1) -> "Poly":
        return cls([ZERO] * n + [rat(a)])

    @property
    def deg(self) -> int:
        return len(self.c) - 1

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        return self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        return f"Poly({[rat_str(a) for a in self.c]})"

    def __getitem__(self, i):
        return self.c[i] if 0 <= i < len(self.c) else ZERO

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.c), len(other.c))
        return Poly(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-a for a in self.c)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if not self.c or not other.c:
            return Poly()
        out = [ZERO] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a == 0:
                continue
            for j, b in enumerate(other.c):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly([1])
        for _ in range(n):
            out = out * self
        return out

    def divmod(self, other: "Poly"):
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.c)
        q = [ZERO] * max(len(r) - other.deg, 0)
        lead = other.c[-1]
        for i in range(len(r) - 1, other.deg - 1, -1):
            f = r[i] / lead
            if f == 0:
                continue
            q[i - other.deg] = f
            for j, b in enumerate(other.c):
                r[i - other.deg + j] -= f * b
        return Poly(q), Poly(r[:other.deg] if other.deg > 0 else [])

    def monic(self) -> "Poly":
        return Poly(a / self.c[-1] for a in self.c) if self.c else self

    def deriv(self) -> "Poly":
        return Poly(i * a for i, a in enumerate(self.c) if i > 0)

    def theta(self) -> "Poly":
        """s d/ds."""
        return Poly(i * a for i, a in enumerate(self.c))

    def __call__(self, s):
        acc = 0
        for a in reversed(self.c):
            acc = acc * s + a
        return acc

    def content_int(self):
        """Primitive integer coefficients and the rational factor: self = factor * prim."""
        if not self.c:
            return [], ONE
        den = reduce(ilcm, (int(a.denominator) for a in self.c), 1)
        ints = [int(a * den) for a in self.c]
        g = reduce(gmpy2.gcd, ints)
        g = int(abs(g))
        return [i // g for i in ints], mpq(g, den)

    def valuation(self) -> int:
        for i, a in enumerate(self.c):
            if a != 0:
                return i
        return -1


def _as_poly(v) -> Poly:
    return v if isinstance(v, Poly) else Poly([v])


def pgcd(a: Poly, b: Poly) -> Poly:
    while b:
        a, b = b, a.divmod(b)[1]
    return a.monic() if a else Poly([1])


S = Poly([0, 1])
S_MINUS_1 = Poly([-1, 1])


class RationalFn:
    """num/den in lowest terms with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, reduce_=True):
        num = _as_poly(num) if not isinstance(num, (list, tuple)) else Poly(num)
        den = Poly([1]) if den is None else (_as_poly(den) if not isinstance(den, (list, tuple)) else Poly(den))
        if not den:
            raise ZeroDivisionError("zero denominator")
        if reduce_ and num:
            g = pgcd(num, den)
            if g.deg > 0:
                num = num.divmod(g)[0]
                den = den.divmod(g)[0]
        if not num:
            den = Poly([1])
        lead = den.c[-1]
        if lead != 1:
            num = Poly(a / lead for a in num.c)
            den = Poly(a / lead for a in den.c)
        self.num, self.den = num, den

    def __eq__(self, other):
        if not isinstance(other, RationalFn):
            other = RationalFn(other)
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RationalFn({self.num!r}, {self.den!r})"

    def __add__(self, other):
        other = _as_rf(other)
        if self.den == other.den:
            return RationalFn(self.num + other.num, self.den)
        return RationalFn(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den, reduce_=False)

    def __sub__(self, other):
        return self + (-_as_rf(other))

    def __rsub__(self, other):
        return _as_rf(other) - self

    def __mul__(self, other):
        other = _as_rf(other)
        return RationalFn(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rf(other)
        if not other.num:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.num * other.den, self.den * other.num)

    def theta(self) -> "RationalFn":
        """s d/ds."""
        return RationalFn(self.num.theta() * self.den - self.num * self.den.theta(), self.den * self.den)

    def __call__(self, s):
        return self.num(s) / self.den(s)

    def expand_at_infinity(self, n: int) -> dict:
        """Coefficients {k: a_k} of sum a_k s^-k, for k from -(deg num - deg den) up to n."""
        if not self.num:
            return {}
        dn, dd = self.num.deg, self.den.deg
        # G(1/u) = u^(dd-dn) * P(u)/Q(u) with reversed coefficient lists
        P = list(reversed(self.num.c))
        Q = list(reversed(self.den.c))
        k0 = dd - dn
        length = n - k0 + 1
        out = {}
        ser = []
        for i in range(max(length, 0)):
            acc = P[i] if i < len(P) else ZERO
            for j in range(1, min(i, len(Q) - 1) + 1):
                acc -= Q[j] * ser[i - j]
            ser.append(acc / Q[0])
            out[k0 + i] = ser[-1]
        return out

    def pole_orders(self) -> dict:
        """Multiplicities of s = 0 and s = 1 in the denominator, plus the leftover degree."""
        d = self.den
        a = 0
        while d.deg > 0 and d[0] == 0:
            d = d.divmod(S)[0]
            a += 1
        b = 0
        while d.deg > 0:
            q, r = d.divmod(S_MINUS_1)
            if r:
                break
            d, b = q, b + 1
        return {"s=0": a, "s=1": b, "other_degree": d.deg}

    def integer_form(self):
        """(num_int, den_int): primitive integer coefficient lists with a common scale.

        The sign makes the lowest nonzero denominator coefficient positive.
        """
        ni, nf = self.num.content_int()
        di, df = self.den.content_int()
        ratio = nf / df
        # num/den = ratio * ni/di; fold the ratio into integers
        p, q = int(ratio.numerator), int(ratio.denominator)
        ni = [p * a for a in ni]
        di = [q * a for a in di]
        g = reduce(gmpy2.gcd, [a for a in ni + di if a] or [1])
        g = int(abs(g)) or 1
        ni = [a // g for a in ni]
        di = [a // g for a in di]
        v = next(a for a in di if a != 0)
        if v < 0:
            ni = [-a for a in ni]
            di = [-a for a in di]
        return ni, di

    def to_json(self) -> dict:
        ni, di = self.integer_form()
        return {"num": [rat_str(a) for a in self.num.c] or ["0/1"],
                "den": [rat_str(a) for a in self.den.c],
                "num_int": ni, "den_int": di}

    @classmethod
    def from_json(cls, d: dict) -> "RationalFn":
        return cls(Poly([rat(a) for a in d["num"]]), Poly([rat(a) for a in d["den"]]))

    def latex(self, var: str = "s") -> str:
        ni, di = self.integer_form()
        return r"\frac{%s}{%s}" % (_poly_latex(ni, var), _poly_latex(di, var))


def _as_rf(v) -> RationalFn:
    if isinstance(v, RationalFn):
        return v
    return RationalFn(_as_poly(v))


def _poly_latex(cs, var):
    terms = []
    for i in range(len(cs) - 1, -1, -1):
        a = cs[i]
        if a == 0:
            continue
        mag = abs(a)
        coef = "" if (mag == 1 and i > 0) else str(mag)
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{{{i}}}")
        sign = "-" if a < 0 else "+"
        terms.append((sign, coef + mono))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, t in terms[1:]:
        out += f" {sign} {t}"
    return out


def solve_exact(rows, rhs):
    """Solve the (possibly overdetermined) linear system rows @ x = rhs over the rationals.

    Returns (solution with free variables set to zero, list of free column indices),
    or None when the system is inconsistent.
    """
    n = len(rows[0]) if rows else 0
    A = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(A)) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][col]
        A[r] = [a * inv for a in A[r]]
        for i in range(len(A)):
            if i != r and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(col)
        r += 1
        if r == len(A):
            break
    for i in range(r, len(A)):
        if A[i][n] != 0:
            return None
    x = [ZERO] * n
    for i, col in enumerate(pivots):
        x[col] = A[i][n]
    free = [c for c in range(n) if c not in pivots]
    return x, free
