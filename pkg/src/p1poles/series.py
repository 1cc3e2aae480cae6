"""Exact formal series for the P1 normal form

    h'' + h'/x - h - h^2/2 - F/x^4 = 0,        F = 392/625,

its decaying asymptotic series ``h0 ~ sum c_m x^-m`` and the one-parameter
transseries ``sum_k C^k x^(-k/2) e^(-kx) hk(x)`` with ``hk ~ sum_m c_km x^-m``.

All coefficients are exact rationals (gmpy2.mpq, which compares equal to
fractions.Fraction). Evaluation to floating point happens only in
:meth:`PowerSeries1x.evaluate`.

The change of variables between P1 ``y'' = 6y^2 + z`` and the normal form is
also kept here (:class:`VariableMap`).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpq

from ._prec import mpc

FORCING = mpq(392, 625)

ZERO = mpq(0)


def rat(v) -> mpq:
    if isinstance(v, str):
        return mpq(v)
    if isinstance(v, Fraction):
        return mpq(v.numerator, v.denominator)
    return mpq(v)


def rat_str(q) -> str:
    q = rat(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class PowerSeries1x:
    """Truncated series ``sum_{m=m_min}^{order} a_m x^-m`` with exact coefficients.

    Coefficients beyond ``order`` are unknown, not zero; arithmetic keeps the
    smallest order that is still exact.
    """

    coeffs: tuple
    order: int
    m_min: int = 0

    def __post_init__(self):
        if len(self.coeffs) != self.order - self.m_min + 1:
            raise ValueError("coeffs length does not match m_min..order")

    @classmethod
    def from_list(cls, coeffs, m_min: int = 0) -> "PowerSeries1x":
        cs = tuple(rat(c) for c in coeffs)
        return cls(cs, m_min + len(cs) - 1, m_min)

    def __getitem__(self, m: int):
        if m < self.m_min:
            return ZERO
        if m > self.order:
            raise IndexError(f"coefficient x^-{m} beyond truncation order {self.order}")
        return self.coeffs[m - self.m_min]

    def _dense(self, lo: int, hi: int) -> list:
        return [self[m] if m <= self.order else ZERO for m in range(lo, hi + 1)]

    def __add__(self, other: "PowerSeries1x") -> "PowerSeries1x":
        lo = min(self.m_min, other.m_min)
        hi = min(self.order, other.order)
        return PowerSeries1x(tuple(self[m] + other[m] for m in range(lo, hi + 1)), hi, lo)

    def __neg__(self) -> "PowerSeries1x":
        return PowerSeries1x(tuple(-c for c in self.coeffs), self.order, self.m_min)

    def __sub__(self, other: "PowerSeries1x") -> "PowerSeries1x":
        return self + (-other)

    def scale(self, c) -> "PowerSeries1x":
        c = rat(c)
        return PowerSeries1x(tuple(c * a for a in self.coeffs), self.order, self.m_min)

    def __mul__(self, other):
        if not isinstance(other, PowerSeries1x):
            return self.scale(other)
        lo = self.m_min + other.m_min
        # exact through the first unknown term of either factor
        hi = min(self.order + other.m_min, other.order + self.m_min)
        out = []
        for n in range(lo, hi + 1):
            acc = ZERO
            for i in range(self.m_min, n - other.m_min + 1):
                acc += self[i] * other[n - i]
            out.append(acc)
        return PowerSeries1x(tuple(out), hi, lo)

    __rmul__ = __mul__

    def deriv(self) -> "PowerSeries1x":
        """d/dx: x^-m -> -m x^-(m+1)."""
        return PowerSeries1x(tuple(-m * self[m] for m in range(self.m_min, self.order + 1)),
                             self.order + 1, self.m_min + 1)

    def shift(self, n: int = 1) -> "PowerSeries1x":
        """Multiply by x^-n."""
        return PowerSeries1x(self.coeffs, self.order + n, self.m_min + n)

    def truncate(self, order: int) -> "PowerSeries1x":
        order = min(order, self.order)
        return PowerSeries1x(tuple(self[m] for m in range(self.m_min, order + 1)), order, self.m_min)

    def optimal_index(self, x) -> int:
        """Index of the smallest nonzero term at x (terms before it are summed)."""
        ax = abs(mpc(x))
        best, best_m = None, self.order + 1
        for m in range(self.m_min, self.order + 1):
            c = self[m]
            if c == 0:
                continue
            t = abs(gmpy2.mpfr(c)) / ax ** m
            if best is None or t < best:
                best, best_m = t, m
        return best_m

    def evaluate(self, x, *, optimal: bool = True, derivative: bool = False):
        """Return ``(value, derivative, error)`` at x.

        With ``optimal`` the sum stops before its smallest term and ``error`` is
        that term's magnitude; otherwise every stored term is used and ``error``
        is the magnitude of the last one.
        """
        x = mpc(x)
        stop = self.optimal_index(x) if optimal else self.order + 1
        val = mpc(0)
        der = mpc(0)
        xi = 1 / x
        for m in range(self.m_min, min(stop, self.order + 1)):
            c = self[m]
            if c == 0:
                continue
            t = c * xi ** m
            val += t
            der += -m * t * xi
        if stop <= self.order:
            err = abs(self[stop] * xi ** stop)
        else:
            last = next((m for m in range(self.order, self.m_min - 1, -1) if self[m] != 0), None)
            err = abs(self[last] * xi ** last) if last is not None else gmpy2.mpfr(0)
        return (val, der, err) if derivative else (val, err)

    def to_json(self) -> dict:
        return {"kind": "power_series_1x", "m_min": self.m_min, "order": self.order,
                "coeffs": [rat_str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, d: dict) -> "PowerSeries1x":
        return cls(tuple(rat(c) for c in d["coeffs"]), d["order"], d["m_min"])


def compute_h0_series(M: int, forcing=FORCING) -> PowerSeries1x:
    """Asymptotic series of the decaying solutions, exact through x^-M.

    Substituting ``sum c_n x^-n`` gives, order by order,
    ``c_n = (n-2)^2 c_{n-2} - 1/2 sum_{i+j=n} c_i c_j - F [n = 4]``.
    """
    if M < 4:
        raise ValueError("M must be at least 4")
    forcing = rat(forcing)
    c = [ZERO] * (M + 1)
    for n in range(4, M + 1):
        acc = (n - 2) ** 2 * c[n - 2]
        conv = ZERO
        for i in range(4, n - 3):
            conv += c[i] * c[n - i]
        acc -= conv / 2
        if n == 4:
            acc -= forcing
        c[n] = acc
    return PowerSeries1x(tuple(c), M, 0)


class ResonanceError(ArithmeticError):
    """A linear coefficient of the level recursion vanished unexpectedly."""


@dataclass(frozen=True)
class TransseriesTable:
    """Coefficients ``c[k][m]`` of ``hk = sum_m c_km x^-m``; row 0 is h0 (c_10 = 1)."""

    K: int
    M: int
    entries: tuple
    forcing: mpq = field(default=FORCING)

    def __getitem__(self, km):
        k, m = km
        return self.entries[k][m]

    def row(self, k: int) -> PowerSeries1x:
        return PowerSeries1x(self.entries[k], self.M, 0)

    def to_json(self) -> dict:
        return {"kind": "transseries_table", "K": self.K, "M": self.M,
                "forcing": rat_str(self.forcing),
                "entries": [[rat_str(c) for c in row] for row in self.entries]}

    @classmethod
    def from_json(cls, d: dict) -> "TransseriesTable":
        if d.get("kind") != "transseries_table":
            raise ValueError("not a transseries_table document")
        entries = tuple(tuple(rat(c) for c in row) for row in d["entries"])
        return cls(d["K"], d["M"], entries, rat(d.get("forcing", "392/625")))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def compute_transseries_table(K: int, M: int, forcing=FORCING) -> TransseriesTable:
    """Substitute the transseries into the normal form and solve level by level.

    Level k (k >= 1) satisfies, as a formal series in 1/x,

        hk'' + (-2k + (1-k)/x) hk' + (k^2-1 + (k^2-k)/x + k^2/(4x^2)) hk - h0 hk
            = 1/2 sum_{0<j<k} hj h(k-j).

    For k >= 2 the coefficient of x^-m fixes c_km (divisor k^2 - 1).  For k = 1
    the x^-(m+1) coefficient fixes c_1m (divisor 2m); m = 0 is resonant and is
    set by the normalisation c_10 = 1.
    """
    if K < 1 or M < 0:
        raise ValueError("need K >= 1 and M >= 0")
    h0 = compute_h0_series(max(M + 1, 4), forcing)
    c0 = [h0[m] for m in range(M + 2)]
    rows = [c0[:M + 1]]

    # level 1
    c1 = [ZERO] * (M + 1)
    c1[0] = mpq(1)
    for m in range(1, M + 1):
        acc = -((m - 1) * m + mpq(1, 4)) * c1[m - 1]
        for i in range(4, m + 2):
            acc += c0[i] * c1[m + 1 - i]
        div = 2 * m
        if div == 0:
            raise ResonanceError("vanishing divisor at level 1")
        c1[m] = acc / div
    rows.append(c1)

    for k in range(2, K + 1):
        # rhs = 1/2 sum_{0<j<k} hj h(k-j), using symmetry
        rhs = [ZERO] * (M + 1)
        for j in range(1, k // 2 + 1):
            a, b = rows[j], rows[k - j]
            w = mpq(1, 2) if 2 * j == k else mpq(1)
            for n in range(M + 1):
                acc = ZERO
                for i in range(n + 1):
                    acc += a[i] * b[n - i]
                rhs[n] += w * acc
        div = mpq(k * k - 1)
        if div == 0:
            raise ResonanceError(f"vanishing divisor at level {k}")
        ck = [ZERO] * (M + 1)
        for m in range(M + 1):
            acc = rhs[m]
            if m >= 1:
                acc -= (2 * k * (m - 1) + k * k - k) * ck[m - 1]
            if m >= 2:
                acc -= ((m - 2) * (m - 1) - (1 - k) * (m - 2) + mpq(k * k, 4)) * ck[m - 2]
            for i in range(4, m + 1):
                acc += c0[i] * ck[m - i]
            ck[m] = acc / div
        rows.append(ck)
    return TransseriesTable(K, M, tuple(tuple(r) for r in rows), rat(forcing))


# -- change of variables ---------------------------------------------------

class BranchError(ValueError):
    """Point on the branch cut (or at the origin) of the chosen root branch."""


_MAX_ARG = gmpy2.const_pi() * 4 / 5


def x_of_z(z):
    """``30x = (-24z)^(5/4)``, principal root; z on the negative axis maps to x > 0."""
    z = mpc(z)
    w = -24 * z
    if w == 0:
        raise BranchError("z = 0 has no image")
    if abs(gmpy2.phase(w)) >= _MAX_ARG:
        raise BranchError("z outside the sector |arg(-24z)| < 4pi/5 of the principal branch")
    return w ** mpq(5, 4) / 30


def z_of_x(x):
    x = mpc(x)
    if x == 0:
        raise BranchError("x = 0 has no image")
    if x.imag == 0 and x.real < 0:
        raise BranchError("x on the negative real axis (branch cut)")
    return -(30 * x) ** mpq(4, 5) / 24


def _quarter_root(z):
    """(-24 z)^(1/4), equal to (30 x)^(1/5) on the principal branch."""
    return (-24 * z) ** mpq(1, 4)


def normal_to_p1(x, h, hp):
    """(x, h, h') -> (z, y, y') with y = (30x)^(2/5)/12 (1 - 4/(25x^2) + h)."""
    x, h, hp = mpc(x), mpc(h), mpc(hp)
    z = z_of_x(x)
    w = (30 * x) ** mpq(1, 5)
    w2 = w * w
    q = 1 - mpq(4, 25) / (x * x) + h
    y = w2 * q / 12
    dydx = (mpq(2, 5) * w2 / x * q + w2 * (mpq(8, 25) / x ** 3 + hp)) / 12
    return z, y, -w * dydx


def p1_to_normal(z, y, yp):
    z, y, yp = mpc(z), mpc(y), mpc(yp)
    x = x_of_z(z)
    w = _quarter_root(z)
    w2 = w * w
    q = 12 * y / w2
    h = q - 1 + mpq(4, 25) / (x * x)
    dydx = -yp / w
    hp = (12 * dydx - mpq(2, 5) * w2 / x * q) / w2 - mpq(8, 25) / x ** 3
    return x, h, hp


def dz_dx(x):
    return -1 / (30 * mpc(x)) ** mpq(1, 5)


def sqrt6_over_z(z):
    """The branch of sqrt(6/z) used by the map: 12i / (-24z)^(1/2)."""
    z = mpc(z)
    return 12j / (-24 * z) ** mpq(1, 2)


@dataclass(frozen=True)
class VariableMap:
    """Map between P1 states (z, y, y') and normal-form states (x, h, h').

    ``direction='forward'`` maps (z, y, y') -> (x, h, h'); ``'inverse'`` the
    other way. Only the principal sheet |arg(-24 z)| < 4pi/5 is used, on which
    the two directions are mutually inverse.
    """

    direction: str = "forward"

    def __post_init__(self):
        if self.direction not in ("forward", "inverse"):
            raise ValueError("direction must be 'forward' or 'inverse'")

    def __call__(self, state):
        a, b, c = state
        if self.direction == "forward":
            return p1_to_normal(a, b, c)
        return normal_to_p1(a, b, c)

    def inverse(self) -> "VariableMap":
        return VariableMap("inverse" if self.direction == "forward" else "forward")


def map_p1_normal(state, vmap: VariableMap = VariableMap()):
    return vmap(state)
