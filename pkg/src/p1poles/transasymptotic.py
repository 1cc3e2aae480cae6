"""Two-scale (matched) representation h ~ sum_m x^-m G_m(s), s = 12 e^x x^(1/2) / C.

Each G_m is a rational function of s. Substituting the representation into the
normal form and collecting x^-m gives

    (theta^2 - 1 - G_0) G_m = -r_m,        theta = s d/ds,

with r_m built from G_0..G_{m-1}. G_m is found by exact linear algebra on a
rational ansatz with poles at s = 0 and s = 1 only. The one homogeneous
solution that is rational, s(s+1)/(s-1)^3, is fixed by requiring that the
expansion at s = infinity reproduce the transseries coefficients
c_{km} 12^k s^-k (the 1/s coefficient must equal 12 c_{1m}).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpq

from ._prec import mpc
from .ratfn import Poly, RationalFn, S, S_MINUS_1, pgcd, solve_exact
from .series import FORCING, compute_transseries_table, rat

HALF = mpq(1, 2)


class GmAnsatzError(ArithmeticError):
    """No rational G_m with the allowed pole orders solves the order-m equation."""


def g0() -> RationalFn:
    return RationalFn(Poly([0, 12]), S_MINUS_1 ** 2)


def _d1(G: list, m: int) -> RationalFn:
    """Coefficient of x^-m in d/dx sum_j x^-j G_j(s)."""
    out = G[m].theta() if m < len(G) else RationalFn(0)
    if 1 <= m and m - 1 < len(G):
        g = G[m - 1]
        out = out + g.theta() * HALF - g * (m - 1)
    return out


def _residual(G: list, m: int, forcing) -> RationalFn:
    """Order-m coefficient of the normal-form residual with G_m taken as zero."""
    Gz = list(G[:m]) + [RationalFn(0)]
    d1 = {j: _d1(Gz, j) for j in range(max(m - 1, 0), m + 1)}
    # second derivative: apply the same rule to the d1 coefficients
    d2 = d1[m].theta()
    if m >= 1:
        d2 = d2 + d1[m - 1].theta() * HALF - d1[m - 1] * (m - 1)
    r = d2 + (d1[m - 1] if m >= 1 else 0)
    quad = RationalFn(0)
    for i in range(1, m):
        quad = quad + Gz[i] * Gz[m - i]
    r = r - quad * HALF
    if m == 4:
        r = r - RationalFn(Poly([forcing]))
    return r


def _lcm(a: Poly, b: Poly) -> Poly:
    return (a * b).divmod(pgcd(a, b))[0].monic()


def _solve_order(G: list, m: int, c0m, c1m, cap: int, forcing):
    r = _residual(G, m, forcing)
    G0 = G[0]
    base_den = S ** cap * S_MINUS_1 ** cap
    W = _lcm(S ** cap * S_MINUS_1 ** (cap + 2), r.den)
    cols = []
    inf1 = []
    inf0 = []
    nb = 2 * cap + 1
    for i in range(nb):
        b = RationalFn(Poly.monomial(i), base_den, reduce_=False)
        Lb = b.theta().theta() - b - G0 * b
        prod = Lb * RationalFn(W)
        if prod.den.deg != 0:
            raise AssertionError("common denominator does not clear the operator image")
        cols.append(prod.num)
        ex = b.expand_at_infinity(1)
        inf0.append(ex.get(0, mpq(0)))
        inf1.append(ex.get(1, mpq(0)))
    rhs_poly = -(r * RationalFn(W))
    if rhs_poly.den.deg != 0:
        raise AssertionError("common denominator does not clear the inhomogeneity")
    rhs_p = rhs_poly.num
    nrows = max(max((c.deg for c in cols), default=0), rhs_p.deg) + 1
    rows = [[c[j] for c in cols] for j in range(nrows)]
    rhs = [rhs_p[j] for j in range(nrows)]
    rows.append(inf0)
    rhs.append(rat(c0m))
    rows.append(inf1)
    rhs.append(12 * rat(c1m))
    sol = solve_exact(rows, rhs)
    if sol is None:
        return None
    x, free = sol
    if free:
        raise GmAnsatzError(f"order {m}: solution not unique at pole-order cap {cap}")
    return RationalFn(Poly(x), base_den)


def compute_Gm(m_max: int, *, forcing=FORCING, extra_cap: int = 4, check_levels: int = 4):
    """Return [G_0, ..., G_{m_max}] as exact rational functions of s.

    The ansatz allows poles of order ``cap`` at s = 0 and s = 1, starting with
    cap = m + 2 and growing up to m + 2 + ``extra_cap``. The expansion of every
    G_m at infinity is checked against the transseries table through
    ``check_levels`` levels.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    forcing = rat(forcing)
    table = compute_transseries_table(max(check_levels, 1), max(m_max, 0), forcing)
    G = [g0()]
    for m in range(1, m_max + 1):
        Gm = None
        for cap in range(m + 2, m + 3 + extra_cap):
            Gm = _solve_order(G, m, table[0, m], table[1, m], cap, forcing)
            if Gm is not None:
                break
        if Gm is None:
            raise GmAnsatzError(
                f"order {m}: no rational solution with pole order <= {m + 2 + extra_cap} at s = 0, 1")
        ex = Gm.expand_at_infinity(check_levels)
        for k in range(check_levels + 1):
            if ex.get(k, 0) != table[k, m] * mpq(12) ** k:
                raise GmAnsatzError(f"order {m}: expansion at infinity disagrees with the table at level {k}")
        G.append(Gm)
    return G


def gm_to_json(G: list) -> list:
    out = []
    for m, g in enumerate(G):
        d = {"m": m}
        d.update(g.to_json())
        d["pole_orders"] = g.pole_orders()
        out.append(d)
    return out


def gm_from_json(doc: list) -> list:
    return [RationalFn.from_json(d) for d in sorted(doc, key=lambda d: d["m"])]


# -- numerical evaluation ---------------------------------------------------


class PoleProximityError(ValueError):
    """The matching variable s is within the margin of the pole s = 1."""


@dataclass(frozen=True)
class MatchingPoint:
    """A point x together with the transseries constant C.

    ``s = 12 e^x x^(1/2) / C`` and ``v = x + ln(x)/2 - ln(C/12)``, principal
    branches, so that s = exp(v).
    """

    x: object
    C: object

    def __post_init__(self):
        if mpc(self.C) == 0:
            raise ValueError("C must be nonzero")

    @property
    def v(self):
        x = mpc(self.x)
        return x + gmpy2.log(x) / 2 - gmpy2.log(mpc(self.C) / 12)

    @property
    def s(self):
        x = mpc(self.x)
        return 12 * gmpy2.exp(x) * gmpy2.sqrt(x) / mpc(self.C)


@dataclass
class MatchedValue:
    value: object
    error: float
    asymptotic: bool
    terms: list = field(default_factory=list)


def eval_matched(p: MatchingPoint, m_max: int, G: list | None = None, *,
                 eps: float = 1e-3, ratio: float = 0.5) -> MatchedValue:
    """Sum x^-m G_m(s) for m <= m_max.

    ``error`` is |t_{m_max+1}| + |t_{m_max+2}|, the first two omitted terms
    (G_m(infinity) vanishes for odd m, so a single omitted term can be
    structurally tiny). ``asymptotic`` is False when some nonzero retained
    term exceeds ``ratio`` times the previous nonzero one.
    """
    if G is None or len(G) < m_max + 3:
        G = compute_Gm(m_max + 2)
    s = p.s
    if abs(s - 1) < eps:
        raise PoleProximityError(f"|s - 1| = {float(abs(s - 1)):.3g} < {eps}")
    xi = 1 / mpc(p.x)
    terms = [G[m](s) * xi ** m for m in range(m_max + 3)]
    total = mpc(0)
    for t in terms[:m_max + 1]:
        total += t
    mags = [float(abs(t)) for t in terms]
    ok = True
    prev = None
    for a in mags[:m_max + 1]:
        if a == 0:
            continue
        if prev is not None and a > ratio * prev:
            ok = False
        prev = a
    return MatchedValue(total, mags[m_max + 1] + mags[m_max + 2], ok, terms[:m_max + 1])


# -- pole array ---------------------------------------------------------------


class NewtonError(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


def solve_log_equation(L, x0=None, *, tol: float = 1e-12, maxit: int = 100):
    """Root of x + ln(x)/2 = L by Newton's method, principal log."""
    L = mpc(L)
    if x0 is None:
        x0 = L - gmpy2.log(L) / 2 if L != 0 else mpc(1)
    x = mpc(x0)
    trace = [complex(x)]
    for _ in range(maxit):
        f = x + gmpy2.log(x) / 2 - L
        dx = f / (1 + 1 / (2 * x))
        # damp steps that would cross the branch cut
        xn = x - dx
        while xn.real <= 0 and xn.imag == 0 or abs(dx) > abs(x):
            dx /= 2
            xn = x - dx
        x = xn
        trace.append(complex(x))
        res = abs(x + gmpy2.log(x) / 2 - L)
        if res < tol * max(1.0, float(abs(L))) and abs(dx) < tol * max(1.0, float(abs(x))):
            return x
    raise NewtonError("Newton iteration for x + ln(x)/2 = L did not converge", trace)


def pole_array(C, N: int) -> list:
    """Roots x_k of x + ln(x)/2 = ln(C/12) + 2 k pi i for k = -N..N (ordered by k)."""
    C = mpc(C)
    if abs(C) <= 12:
        raise ValueError("need |C| > 12")
    base = gmpy2.log(C / 12)
    out = []
    for k in range(-N, N + 1):
        L = base + 2 * k * gmpy2.const_pi() * 1j
        out.append(solve_log_equation(L))
    return out


# -- accuracy of the leading matched term --------------------------------------


@dataclass
class MatchingReport:
    C: float
    sup: float
    argsup: complex
    n_points: int
    max_drift: float


def matching_sup(C: float, *, margin: float = 0.2, re_s_min: float = 0.8, im_max: float = 3.0,
                 spacing: float = 0.25, x_seed: float = 30.0, ctl=None) -> MatchingReport:
    """sup |h(x; C) - 12 s/(s-1)^2| over grid points with |s-1| >= margin, Re s > re_s_min, |Im x| <= im_max.

    h is obtained by integrating P1 from the seeded solution along horizontal
    lines Im x = b, entering from the right.
    """
    import math

    from .ode import StepControl, default_table, integrate_path, normal_from_p1, seed_p1, z_path_from_x
    from ._prec import working_precision
    from .series import z_of_x

    ctl = ctl or StepControl(digits=25)
    L = math.log(C / 12)
    x1 = float(solve_log_equation(L).real)
    right = x1 + 8
    st = seed_p1(C, x_seed, default_table(), digits=ctl.digits)
    n_im = int(round(im_max / spacing))
    best, arg, n, drift = 0.0, None, 0, 0.0
    for j in range(-n_im, n_im + 1):
        b = j * spacing
        xs = [complex(right - i * spacing, b) for i in range(int((right - x1 + 1) / spacing) + 1)]
        s_of = lambda x: 12 * complex(gmpy2.exp(mpc(x)) * gmpy2.sqrt(mpc(x))) / C
        keep = [x for x in xs if abs(s_of(x) - 1) >= margin and s_of(x).real > re_s_min]
        if not keep:
            continue
        with working_precision(ctl.digits):
            tr = integrate_path(st, z_path_from_x([x_seed, complex(x_seed, b), keep[0]], 0.5, ctl.digits), ctl)
            cur = tr.last
            for x in keep:
                tr = integrate_path(cur, z_path_from_x([complex(normal_from_p1(cur).x), x], 0.05, ctl.digits),
                                    ctl)
                if tr.event == "blowup":
                    raise RuntimeError(f"pole met at Im x = {b} before x = {x}")
                drift = max(drift, tr.max_drift())
                cur = tr.last
                h = complex(normal_from_p1(cur).h)
                s = s_of(x)
                d = abs(h - 12 * s / (s - 1) ** 2)
                n += 1
                if d > best:
                    best, arg = d, x
    return MatchingReport(C, best, arg, n, drift)
