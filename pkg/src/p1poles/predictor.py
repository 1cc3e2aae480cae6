"""Convergent-transseries functions h_k on [A, x_max] and pole predictions for real C.

The solution with constant C is  h = h0 + sum_k C^k F_k,  F_k = x^(-k/2) e^(-kx) h_k,
where h_k -> k/12^(k-1) and

    h_k'' + (-2k + (1-k)/x) h_k' + (k^2-1 + (k^2-k)/x + k^2/(4x^2) - h0) h_k
        = 1/2 sum_{0<j<k} h_j h_{k-j}.

All bounded solutions are unique for k >= 2 and the homogeneous modes decay
when integrating toward smaller x, so the levels are integrated inward from
x_max with data from the asymptotic series. h_1 = e^x y_- where y_- is the
decaying solution of  y'' = (1 + h0 - 1/(4x^2)) y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy import integrate, optimize

from ._prec import mpc, working_precision
from .ode import StepControl, default_table, integrate_path, seed_p1
from .series import p1_to_normal, z_of_x
from .transasymptotic import pole_array

A_MIN = 2.5
X_MAX = 40.0
X_SEED = 30.0
N_GRID = 2048


def chebyshev_grid(a: float, b: float, n: int = N_GRID) -> np.ndarray:
    """Chebyshev points of the second kind on [a, b], ascending."""
    j = np.arange(n)
    return (a + b) / 2 - (b - a) / 2 * np.cos(np.pi * j / (n - 1))


# -- the h0 fixture ------------------------------------------------------------


@dataclass
class H0Fixture:
    """h0 = solution seeded with C = 0 at x_seed, as a Chebyshev interpolant on [a, b]."""

    a: float
    b: float
    cheb: npcheb.Chebyshev
    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    max_drift: float
    seed_err: float

    def __call__(self, x):
        return self.cheb(x)

    def envelope_ok(self) -> bool:
        """-x^-4 < h0 < c4 x^-4 (c4 = -392/625) at the interpolation nodes."""
        x = self.nodes
        return bool(np.all((self.values > -x ** -4) & (self.values < -392 / 625 * x ** -4)))


@lru_cache(maxsize=8)
def h0_fixture(a: float = 9 / 4, b: float = X_MAX, x_seed: float = X_SEED, n: int = 161,
               digits: int = 30) -> H0Fixture:
    """Integrate the C = 0 seed from x_seed both ways and sample at Chebyshev nodes."""
    ctl = StepControl(digits=digits)
    st = seed_p1(0, x_seed, default_table(), digits=digits)
    nodes = np.sort(npcheb.chebpts1(n) * (b - a) / 2 + (a + b) / 2)
    vals = np.empty(n)
    ders = np.empty(n)
    drift = 0.0
    from .ode import seed_at_infinity
    seed_err = float(seed_at_infinity(0, x_seed, default_table(), digits=digits).err)
    with working_precision(digits):
        for side in ("in", "out"):
            idx = np.nonzero(nodes < x_seed)[0][::-1] if side == "in" else np.nonzero(nodes >= x_seed)[0]
            if len(idx) == 0:
                continue
            zs = [z_of_x(float(nodes[i])) for i in idx]
            tr = integrate_path(st, zs, ctl)
            if tr.event != "completed":
                raise RuntimeError("h0 fixture integration hit a singularity")
            drift = max(drift, tr.max_drift())
            for i, s in zip(idx, tr.waypoint_states):
                _, h, hp = p1_to_normal(s.z, s.y, s.yp)
                vals[i] = float(h.real)
                ders[i] = float(hp.real)
    cheb = npcheb.Chebyshev.fit(nodes, vals, n - 1, domain=[a, b])
    return H0Fixture(a, b, cheb, nodes, vals, ders, drift, seed_err)


class EnvelopeError(ValueError):
    """The h0 fixture leaves (-x^-4, c4 x^-4) somewhere on [A, x_max]."""


def envelope_threshold(h0: H0Fixture, n: int = 100001) -> float:
    """Largest sampled x where h0 leaves the envelope (h0.a if it never does)."""
    x = np.linspace(h0.a, h0.b, n)
    v = h0(x)
    bad = ~((v > -x ** -4) & (v < -392 / 625 * x ** -4))
    return float(x[bad].max()) if bad.any() else h0.a


@lru_cache(maxsize=1)
def default_A() -> float:
    """max(2.5, first x beyond which the fixture satisfies the envelope), rounded up to 0.01."""
    t = envelope_threshold(h0_fixture())
    return max(A_MIN, math.ceil((t + 1e-3) * 100) / 100)


def check_envelope(A: float, h0: H0Fixture) -> None:
    t = envelope_threshold(h0)
    if A <= t:
        raise EnvelopeError(f"h0 fixture violates the envelope at x = {t:.4f} >= A = {A}")


# -- homogeneous basis -----------------------------------------------------------


@dataclass
class HomogeneousBasis:
    """y_- = e^-x f and y_+ = e^x g on [A, x_max] with Wronskian y_- y_+' - y_-' y_+ = 2."""

    A: float
    x_max: float
    grid: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    g: np.ndarray
    gp: np.ndarray
    h0: H0Fixture
    f_sol: object = field(repr=False, default=None)
    g_sol: object = field(repr=False, default=None)
    contraction_norm: float = float("nan")
    contraction_diff: float = float("nan")

    @property
    def wronskian(self) -> np.ndarray:
        return 2 * self.f * self.g + self.f * self.gp - self.fp * self.g

    def y_minus(self, x):
        return np.exp(-np.asarray(x)) * self.f_sol(x)[0]

    def y_plus(self, x):
        return np.exp(np.asarray(x)) * self.g_sol(x)[0]

    def u(self, t, s):
        """y_+(t) y_-(s) - y_-(t) y_+(s), computed in factored form to avoid overflow."""
        ft, gt = self.f_sol(t)[0], self.g_sol(t)[0]
        fs, gs = self.f_sol(s)[0], self.g_sol(s)[0]
        return gt * fs * np.exp(t - s) - ft * gs * np.exp(s - t)


def _h1_series_data(x: float):
    row = default_table().row(1)
    with working_precision(30):
        v, d, _ = row.evaluate(x, derivative=True)
    return float(v.real), float(d.real)


def build_basis(A: float | None = None, x_max: float = X_MAX, h0: H0Fixture | None = None, *,
                n_grid: int = N_GRID, rtol: float = 1e-13) -> HomogeneousBasis:
    """Decaying and growing solutions of y'' = (1 + h0 - 1/(4x^2)) y.

    f = e^x y_- solves f'' - 2f' + (1/(4x^2) - h0) f = 0 and is integrated
    inward from x_max with its asymptotic series; g = e^-x y_+ solves
    g'' + 2g' + (1/(4x^2) - h0) g = 0 outward from A with g(A) = 1 and g'(A)
    fixed by the Wronskian. The contraction form of the f equation is
    evaluated as an independent check.
    """
    A = default_A() if A is None else A
    if A < 9 / 4:
        raise ValueError("A must be at least 9/4")
    h0 = h0 or h0_fixture(9 / 4, x_max)
    check_envelope(A, h0)
    grid = chebyshev_grid(A, x_max, n_grid)

    def rf(x, u):
        return [u[1], 2 * u[1] - (0.25 / x ** 2 - h0(x)) * u[0]]

    f0, fp0 = _h1_series_data(x_max)
    fs = integrate.solve_ivp(rf, (x_max, A), [f0, fp0], method="DOP853", rtol=rtol, atol=1e-16,
                             dense_output=True)
    if not fs.success:
        raise RuntimeError(fs.message)
    fA, fpA = fs.sol(A)

    def rg(x, u):
        return [u[1], -2 * u[1] - (0.25 / x ** 2 - h0(x)) * u[0]]

    g0 = 1.0
    gp0 = (2 - 2 * fA * g0 + fpA * g0) / fA
    gs = integrate.solve_ivp(rg, (A, x_max), [g0, gp0], method="DOP853", rtol=rtol, atol=1e-16,
                             dense_output=True)
    if not gs.success:
        raise RuntimeError(gs.message)
    F = fs.sol(grid)
    G = gs.sol(grid)
    basis = HomogeneousBasis(A, x_max, grid, F[0], F[1], G[0], G[1], h0, fs.sol, gs.sol)
    basis.contraction_norm, basis.contraction_diff = _contraction_check(basis)
    return basis


def _qv_tail_series(n_terms: int = 30):
    """Asymptotic series of q(s) f(s), q = h0 - 1/(4 s^2), f ~ h~_1, as a PowerSeries1x."""
    from .series import PowerSeries1x
    t = default_table()
    q = t.row(0).truncate(n_terms) + PowerSeries1x.from_list([0, 0, -0.25] + [0] * (n_terms - 2))
    return q * t.row(1).truncate(n_terms)


def _contraction_check(b: HomogeneousBasis, iters: int = 40):
    """Iterate f = 1 + J f, (J f)(x) = int_x^inf (1 - e^(-2(s-x)))/2 q(s) f(s) ds, q = h0 - 1/(4s^2).

    The plain part uses Chebyshev integration on [A, x_max] plus the
    asymptotic-series tail; the exponential part uses Gauss-Laguerre nodes.
    Returns (sup_x of J applied to 1 with |q|, max |f_iter - f_ode|).
    """
    A, X = b.A, b.x_max
    n = 257
    x = np.sort(npcheb.chebpts2(n) * (X - A) / 2 + (X + A) / 2)
    q = b.h0(x) - 0.25 / x ** 2
    ser = _qv_tail_series()
    q_ser = default_table().row(0).truncate(30)
    tail_qv = sum(float(ser[m]) * X ** (1 - m) / (m - 1) for m in range(2, ser.order + 1))
    tail_q = sum(float(q_ser[m]) * X ** (1 - m) / (m - 1) for m in range(4, 31)) - 0.25 / X
    lag_t, lag_w = np.polynomial.laguerre.laggauss(60)

    def qv_far(s):
        return sum(float(ser[m]) * s ** -m for m in range(2, 20))

    def q_far(s):
        return sum(float(q_ser[m]) * s ** -m for m in range(4, 20)) - 0.25 / s ** 2

    def apply(vals, absval=False):
        w = -q if absval else q
        prod = npcheb.Chebyshev.fit(x, w * vals, n - 1, domain=[A, X])
        I1 = -prod.integ(lbnd=X)(x) + (-tail_q if absval else tail_qv)
        out = np.empty(n)
        for i, xi in enumerate(x):
            s = xi + lag_t / 2
            inside = s <= X
            F = np.empty_like(s)
            F[inside] = prod(s[inside])
            far = s[~inside]
            F[~inside] = [-q_far(v) for v in far] if absval else [qv_far(v) for v in far]
            out[i] = 0.5 * np.dot(lag_w, F)
        return 0.5 * I1 - 0.5 * out

    with working_precision(20):
        norm = float(np.max(apply(np.ones(n), absval=True)))
        f = np.ones(n)
        for _ in range(iters):
            fn = 1 + apply(f)
            if np.max(np.abs(fn - f)) < 1e-16:
                f = fn
                break
            f = fn
    diff = float(np.max(np.abs(f - b.f_sol(x)[0])))
    return norm, diff


def contraction_bound(x0: float) -> float:
    """(1/(8 x0)) (1 + 1/(3 x0^2)), the a-priori bound on the contraction norm."""
    return 1 / (8 * x0) * (1 + 1 / (3 * x0 ** 2))


# -- the levels h_k --------------------------------------------------------------


@dataclass
class HkGrid:
    k: int
    grid: np.ndarray
    h: np.ndarray
    hp: np.ndarray

    @property
    def limit(self) -> float:
        return self.k / 12.0 ** (self.k - 1)

    @property
    def upper_ok(self) -> np.ndarray:
        return (self.h > 0) & (self.h < self.limit)

    @property
    def lower_bound(self) -> np.ndarray:
        x = self.grid
        return (1 - 1 / (8 * x)) * (1 - 9 / (4 * x)) ** ((self.k - 1) / 2) * self.limit

    @property
    def lower_ok(self) -> np.ndarray:
        return self.h >= self.lower_bound

    @property
    def F(self) -> np.ndarray:
        x = self.grid
        return x ** (-self.k / 2) * np.exp(-self.k * x) * self.h

    @property
    def H(self) -> np.ndarray:
        x = self.grid
        return x ** (-(self.k - 1) / 2) * np.exp(-self.k * x) * self.h

    @property
    def decreasing_ok(self) -> np.ndarray:
        """d/dx ln F_k = h'/h - k - k/(2x) < 0."""
        x = self.grid
        return self.hp / self.h - self.k - self.k / (2 * x) < 0

    def violations(self) -> dict:
        return {"upper": int(np.sum(~self.upper_ok)), "lower": int(np.sum(~self.lower_ok)),
                "decreasing": int(np.sum(~self.decreasing_ok))}


@dataclass
class HkGrids:
    """Levels 1..k_max on the grid plus a dense interpolant q_k(x) = h_k(x) 12^(k-1)/k."""

    k_max: int
    A: float
    x_max: float
    levels: list
    basis: HomogeneousBasis
    sol: object = field(repr=False, default=None)

    def h(self, x) -> np.ndarray:
        """Array of h_1..h_kmax at x (scalar x)."""
        q = self.sol(x)[: self.k_max]
        k = np.arange(1, self.k_max + 1)
        return q * k / 12.0 ** (k - 1)

    def log_h(self, x) -> np.ndarray:
        q = self.sol(x)[: self.k_max]
        k = np.arange(1, self.k_max + 1)
        return np.log(q) + np.log(k) - (k - 1) * math.log(12.0)

    def __getitem__(self, k) -> HkGrid:
        return self.levels[k - 1]

    def violations(self, k_upto: int | None = None) -> dict:
        out = {"upper": 0, "lower": 0, "decreasing": 0}
        for L in self.levels[: k_upto or self.k_max]:
            for key, v in L.violations().items():
                out[key] += v
        return out

    def limit_estimate(self, k: int, x: float) -> float:
        """h_k(x) minus the optimally truncated 1/x tail of its asymptotic series."""
        row = default_table().row(k)
        with working_precision(30):
            v, _ = row.evaluate(x)
        tail = float(v.real) - float(row[0])
        return float(self.h(x)[k - 1]) - tail


def _level_rhs(K: int, h0):
    k = np.arange(1, K + 1, dtype=float)
    jw = np.arange(1, K + 1, dtype=float)

    def rhs(x, u):
        q = u[:K]
        qp = u[K:]
        a = jw * q
        conv = np.convolve(a, a)[: K - 1]  # index n -> sum_{i+j=n+2} i q_i j q_j
        src = np.zeros(K)
        src[1:] = 6.0 / k[1:] * conv[: K - 1]
        coef = k * k - 1 + (k * k - k) / x + k * k / (4 * x * x) - h0(x)
        qpp = src - (-2 * k + (1 - k) / x) * qp - coef * q
        return np.concatenate([qp, qpp])

    return rhs


def build_hk(k_max: int = 40, basis: HomogeneousBasis | None = None, *, rtol: float = 1e-13,
             A: float | None = None, x_max: float = X_MAX) -> HkGrids:
    """Integrate levels 1..k_max inward from x_max with asymptotic-series data."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    basis = basis or build_basis(A, x_max)
    A, x_max = basis.A, basis.x_max
    table = default_table(max(k_max, 1), 60)
    q0 = np.empty(k_max)
    qp0 = np.empty(k_max)
    with working_precision(30):
        for k in range(1, k_max + 1):
            v, d, _ = table.row(k).evaluate(x_max, derivative=True)
            s = mpc(12) ** (k - 1) / k
            q0[k - 1] = float((v * s).real)
            qp0[k - 1] = float((d * s).real)
    rhs = _level_rhs(k_max, basis.h0)
    sol = integrate.solve_ivp(rhs, (x_max, A), np.concatenate([q0, qp0]), method="DOP853",
                              rtol=rtol, atol=1e-15, dense_output=True)
    if not sol.success:
        raise RuntimeError(sol.message)
    grid = basis.grid
    Q = sol.sol(grid)
    levels = []
    for k in range(1, k_max + 1):
        s = k / 12.0 ** (k - 1)
        levels.append(HkGrid(k, grid, Q[k - 1] * s, Q[k_max + k - 1] * s))
    return HkGrids(k_max, A, x_max, levels, basis, sol.sol)


def hk_quadrature(grids: HkGrids, k: int, x: float, *, epsabs: float = 1e-14) -> float:
    """h_k(x) from the variation-of-constants integral with the basis f, g.

    h_k(x) = 1/4 int_x^inf (t/x)^((1-k)/2) [e^(-(k-1)(t-x)) g(t) f(x)
                                             - e^(-(k+1)(t-x)) f(t) g(x)] S_k(t) dt,
    S_k = sum_{0<j<k} h_j h_{k-j}. Beyond x_max the integrand uses the limits.
    """
    if k < 2:
        raise ValueError("quadrature form applies to k >= 2")
    b = grids.basis
    X = grids.x_max
    fx, gx = b.f_sol(x)[0], b.g_sol(x)[0]

    def S(t):
        hs = grids.h(t)
        return sum(hs[j - 1] * hs[k - j - 1] for j in range(1, k))

    def integrand(t):
        w = (t / x) ** ((1 - k) / 2)
        return 0.25 * w * (np.exp(-(k - 1) * (t - x)) * b.g_sol(t)[0] * fx
                           - np.exp(-(k + 1) * (t - x)) * b.f_sol(t)[0] * gx) * S(t)

    val, _ = integrate.quad(integrand, x, X, epsabs=epsabs, epsrel=1e-12, limit=400)
    Sinf = sum(j / 12.0 ** (j - 1) * (k - j) / 12.0 ** (k - j - 1) for j in range(1, k))

    def tail(t):
        w = (t / x) ** ((1 - k) / 2)
        return 0.25 * w * (np.exp(-(k - 1) * (t - x)) * fx - np.exp(-(k + 1) * (t - x)) * gx) * Sinf

    tv, _ = integrate.quad(tail, X, np.inf, epsabs=epsabs)
    return val + tv


# -- C0 and predictions ------------------------------------------------------------


def _phi(t):
    return 0.5 * math.log(t) + t - math.log(1 - 9 / (4 * t))


def _dphi(t):
    return 0.5 / t + 1 - 9 / (4 * t * t - 9 * t)


def c0_minimizer(A: float) -> float:
    if A <= 9 / 4:
        raise ValueError("A must exceed 9/4")
    if _dphi(A) >= 0:
        return A
    T = A + 1.0
    while _dphi(T) <= 0:
        T *= 2
    res = optimize.minimize_scalar(_phi, bounds=(A, T), method="bounded",
                                   options={"xatol": 1e-13})
    return float(res.x)


def compute_C0(A: float | None = None) -> float:
    """12 min_{t>=A} sqrt(t) e^t / (1 - 9/(4t))."""
    A = default_A() if A is None else A
    return 12 * math.exp(_phi(c0_minimizer(A)))


@dataclass
class PolePrediction:
    C: complex
    A: float
    C0: float
    guaranteed: bool
    x_lo: float | None = None
    x_hi: float | None = None
    x_asym: complex | None = None
    x_lim: float | None = None
    x_div: float | None = None
    diagnostics: dict = field(default_factory=dict)
    array: list = field(default_factory=list)

    def to_json(self) -> dict:
        c = complex(self.C)
        out = {"kind": "pole_prediction", "C": [c.real, c.imag], "A": self.A, "C0": self.C0,
               "guaranteed": self.guaranteed, "x_lo": self.x_lo, "x_hi": self.x_hi,
               "x_asym": None if self.x_asym is None else [complex(self.x_asym).real,
                                                           complex(self.x_asym).imag],
               "x_lim": self.x_lim, "x_div": self.x_div, "diagnostics": self.diagnostics}
        if self.array:
            out["array"] = [{"k": k, "x": [complex(v).real, complex(v).imag]} for k, v in self.array]
        return out


def bracket(C: float, A: float | None = None) -> tuple[float | None, float]:
    """(x_lo, x_hi) with x_lo <= x_p <= x_hi.

    x_hi solves x + ln(x)/2 = ln(C/12). x_lo solves the same equation with
    -ln(1 - 9/(4x)) added on the left, taken on the branch x >= argmin; it is
    None when no such root exists (C below C0).
    """
    A = default_A() if A is None else A
    L = math.log(C / 12)
    top = max(L, 1.0) + 10
    x_hi = optimize.brentq(lambda x: x + 0.5 * math.log(x) - L, 1e-12, top, xtol=1e-15, rtol=1e-15)
    t_star = c0_minimizer(max(A, 9 / 4 + 1e-9))
    f = lambda x: _phi(x) - L
    if f(t_star) > 0:
        return None, x_hi
    x_lo = optimize.brentq(f, t_star, top, xtol=1e-15, rtol=1e-15)
    return x_lo, x_hi


def x_asymptotic(C) -> complex:
    L = complex(np.log(complex(C) / 12))
    return L - 0.5 * np.log(L)


def richardson(seq: np.ndarray, ks: np.ndarray, order: int) -> float:
    """Extrapolate seq(k) to 1/k -> 0 by a degree-``order`` polynomial in 1/k (Neville)."""
    h = 1.0 / ks[-(order + 1):]
    v = list(seq[-(order + 1):])
    for m in range(1, order + 1):
        for i in range(order, m - 1, -1):
            v[i] = (h[i - m] * v[i] - h[i] * v[i - 1]) / (h[i - m] - h[i])
    return v[order]


def log_rho(grids: HkGrids, x: float, *, order: int = 4, tol: float = 1e-6):
    """ln limsup_k (h_k(x))^(1/k) by Richardson on ln (h_k/k)^(1/k) in 1/k.

    Returns (value, converged, last three extrapolants).
    """
    K = grids.k_max
    ks = np.arange(1, K + 1, dtype=float)
    lh = grids.log_h(x)
    a = (lh - np.log(ks)) / ks
    ex = [richardson(a[: K - j], ks[: K - j], order) for j in (2, 1, 0)]
    ok = max(ex) - min(ex) < tol
    return ex[-1], ok, ex


def log_ratio(grids: HkGrids, x: float, *, order: int = 4, tol: float = 1e-6):
    """ln lim h_{k+1}/h_k by Richardson in 1/k on the ratios with the k-growth removed."""
    K = grids.k_max
    lh = grids.log_h(x)
    ks = np.arange(1, K, dtype=float)
    r = lh[1:] - lh[:-1] - np.log((ks + 1) / ks)
    ex = [richardson(r[: K - 1 - j], ks[: K - 1 - j], order) for j in (2, 1, 0)]
    ok = max(ex) - min(ex) < tol
    return ex[-1], ok, ex


def _solve_divergence(C: float, grids: HkGrids, lr, lo: float, hi: float):
    """Root of ln C - x/... : C x^(-1/2) e^(-x) rho(x) = 1 on [lo, hi]."""
    lnC = math.log(C)

    def F(x):
        return lnC - 0.5 * math.log(x) - x + lr(grids, x)[0]

    xs = np.linspace(lo, hi, 60)
    vals = [F(x) for x in xs]
    for i in range(len(xs) - 1, 0, -1):
        if vals[i] < 0 <= vals[i - 1] or vals[i] <= 0 < vals[i - 1]:
            root = optimize.brentq(F, xs[i - 1], xs[i], xtol=1e-13)
            return root, lr(grids, root)
    return None, None


def predict(C, grids: HkGrids | None = None, *, A: float | None = None, complex_array: int | None = None,
            order: int = 4, tol: float = 1e-6) -> PolePrediction:
    """Bracket, asymptotic and limsup estimates for the first pole of h(.; C).

    For complex C (or when ``complex_array`` is given) the roots of
    x + ln(x)/2 = ln(C/12) + 2 k pi i for |k| <= complex_array are returned.
    """
    Cc = complex(C)
    if A is None:
        A = grids.A if grids is not None else default_A()
    C0 = compute_C0(A)
    real = Cc.imag == 0 and Cc.real > 0
    pred = PolePrediction(Cc, A, C0, guaranteed=real and Cc.real > C0)
    pred.x_asym = x_asymptotic(Cc) if abs(Cc) > 12 else None
    if pred.x_asym is not None and pred.x_asym.imag == 0:
        pred.x_asym = pred.x_asym.real
    if complex_array is not None or not real:
        N = complex_array or 0
        with working_precision(30):
            roots = pole_array(Cc, N)
        pred.array = [(k, complex(r)) for k, r in zip(range(-N, N + 1), roots)]
        if not real:
            return pred
    if Cc.real > 12:
        pred.x_lo, pred.x_hi = bracket(Cc.real, A)
    if not pred.guaranteed:
        pred.diagnostics["note"] = "C <= C0: a real pole is not guaranteed"
    if grids is None:
        return pred
    lo = grids.A + 1e-9
    hi = grids.x_max - 1e-9
    x_lim, info = _solve_divergence(Cc.real, grids, lambda g, x: log_rho(g, x, order=order, tol=tol), lo, hi)
    if x_lim is not None and info[1]:
        pred.x_lim = float(x_lim)
        pred.diagnostics["limsup_extrapolants"] = [float(v) for v in info[2]]
        if pred.x_lo is not None and pred.x_hi is not None and not (pred.x_lo <= x_lim <= pred.x_hi):
            pred.diagnostics["bracket_violation"] = True
    elif x_lim is not None:
        pred.diagnostics["limsup"] = "extrapolation did not converge"
        pred.diagnostics["limsup_extrapolants"] = [float(v) for v in info[2]]
    else:
        pred.diagnostics["limsup"] = "no divergence crossing on the grid"
    if pred.guaranteed:
        x_div, info = _solve_divergence(Cc.real, grids, lambda g, x: log_ratio(g, x, order=order, tol=tol), lo, hi)
        if x_div is not None and info[1]:
            pred.x_div = float(x_div)
    return pred


def divergence_scan(C: float, grids: HkGrids, *, order: int = 4, tol: float = 1e-6) -> dict:
    """Where the ratio test for sum C^k F_k(x) crosses 1, scanning downward in x."""
    if C <= compute_C0(grids.A):
        raise ValueError("divergence scan requires C > C0")
    x, info = _solve_divergence(C, grids, lambda g, x: log_ratio(g, x, order=order, tol=tol),
                                grids.A + 1e-9, grids.x_max - 1e-9)
    if x is None:
        return {"x_div": None, "converged": False}
    return {"x_div": float(x), "converged": bool(info[1]), "extrapolants": [float(v) for v in info[2]]}


def ratio_terms(C: float, grids: HkGrids, x: float) -> np.ndarray:
    """|C F_{k+1}(x) / F_k(x)| for k = 1..k_max-1."""
    h = grids.h(x)
    return C * x ** -0.5 * math.exp(-x) * h[1:] / h[:-1]


def partial_sum(C: float, grids: HkGrids, x: float, n: int | None = None):
    """h0(x) + sum_{k<=n} C^k F_k(x) and its x-derivative."""
    n = n or grids.k_max
    v = grids.sol(x)
    k = np.arange(1, n + 1)
    q, qp = v[:n], v[grids.k_max: grids.k_max + n]
    s = k / 12.0 ** (k - 1)
    hk, hkp = q * s, qp * s
    xi = C * x ** -0.5 * math.exp(-x)
    w = xi ** k
    val = grids.basis.h0(x) + np.sum(w * hk)
    der = grids.basis.h0.cheb.deriv()(x) + np.sum(w * (hkp - hk * (k + k / (2 * x))))
    return val, der


@lru_cache(maxsize=4)
def default_grids(k_max: int = 40, A: float | None = None, x_max: float = X_MAX) -> HkGrids:
    return build_hk(k_max, build_basis(A, x_max))
