"""Double poles of P1 solutions: Laurent data, location, crossing and certificates.

Near a pole z~ every solution has the form

    y = (z - z~)^-2 + sum_{j>=2} c_j (z - z~)^j,   c_2 = -z~/10, c_3 = -1/6, c_4 free,

with  [(j+1)(j+2) - 12] c_{j+2} = 6 sum_{i+l=j} c_i c_l + z~[j=0] + [j=1].
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpq

from ._prec import DEFAULT_DIGITS, mpc, pair, working_precision
from .ode import (P1State, P1Trajectory, StepControl, default_table, integrate_path,
                  radius_bound, seed_p1)
from .series import rat, x_of_z, z_of_x

def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) or type(v) is type(mpq(1))


@dataclass
class LaurentExpansion:
    """Coefficients c_j, j = -2..N, of the Laurent series at a double pole."""

    zt: object
    c4: object
    N: int
    coeffs: dict
    rho: float
    rho_adjusted: bool = False

    def __getitem__(self, j):
        return self.coeffs.get(j, 0) if j <= self.N else _raise(j, self.N)

    @property
    def radius(self) -> float:
        """Certified convergence radius 1/rho."""
        return 1.0 / self.rho

    def extend(self, N: int) -> "LaurentExpansion":
        return laurent_from_pole(self.zt, self.c4, N) if N > self.N else self

    def evaluate(self, z):
        """(y, y', primitive) at z; the primitive is -1/u + sum c_j u^(j+1)/(j+1), u = z - z~."""
        u = mpc(z) - mpc(self.zt)
        y = 1 / (u * u)
        yp = -2 / (u * u * u)
        prim = -1 / u
        upow = u  # u^(j-1) for j = 2
        for j in range(2, self.N + 1):
            c = self.coeffs[j]
            if c != 0:
                yp += j * c * upow
                t = c * upow * u
                y += t
                prim += t * u / (j + 1)
            upow = upow * u
        return y, yp, prim

    def terms_needed(self, r: float, digits: int) -> int:
        """Order N at which the growth bound puts the tail below 10^-digits at radius r."""
        q = r * self.rho
        if q >= 1:
            raise ValueError("radius outside the certified disk")
        n = 4
        while (n + 1) / 3 * self.rho ** 2 * q ** n / (1 - q) > 10.0 ** (-digits) and n < 2000:
            n += 1
        return n


def _raise(j, N):
    raise IndexError(f"Laurent coefficient {j} beyond truncation {N}")


def laurent_from_pole(zt, c4, N: int = 40) -> LaurentExpansion:
    """Laurent coefficients through (z - z~)^N. Exact when z~ and c4 are rational."""
    if N < 4:
        raise ValueError("N must be >= 4")
    conv = rat if (_is_exact(zt) and _is_exact(c4)) else mpc
    zt_, c4_ = conv(zt), conv(c4)
    c = {-2: conv(1), -1: conv(0), 0: conv(0), 1: conv(0)}
    c[2] = -zt_ / 10
    c[3] = conv(mpq(-1, 6))
    c[4] = c4_
    for j in range(3, N - 1):
        acc = conv(0)
        for i in range(2, j - 1):
            acc += c[i] * c[j - i]
        acc = 6 * acc
        c[j + 2] = acc / ((j + 1) * (j + 2) - 12)
    for j in list(c):
        if j > N:
            del c[j]
    rho = _growth_rho(c)
    adjusted = False
    for k in range(2, min(N, 40) + 1):
        a = float(abs(c[k]))
        if a > (k + 1) / 3 * rho ** (k + 2):
            rho = max(rho, (3 * a / (k + 1)) ** (1 / (k + 2)))
            adjusted = True
    return LaurentExpansion(zt_, c4_, N, c, rho, adjusted)


def _growth_rho(c) -> float:
    """rho with |c_i| <= (i+1) rho^(i+2) / 3 for the seed indices i = 2, 3, 4."""
    return max((3 * float(abs(c[i])) / (i + 1)) ** (1 / (i + 2)) for i in (2, 3, 4))


def growth_certificate(lx: LaurentExpansion, kmax: int = 40) -> bool:
    lx = lx.extend(kmax)
    return all(float(abs(lx.coeffs[k])) <= (k + 1) / 3 * lx.rho ** (k + 2) * (1 + 1e-12)
               for k in range(2, kmax + 1))


@dataclass
class PoleRecord:
    z: object
    c4: object
    err: float
    C: object = None
    x: object = None
    order: int = 2
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order != 2:
            raise ValueError("only double poles are represented")
        if not self.err > 0:
            raise ValueError("uncertainty must be positive")
        if self.x is None:
            try:
                with working_precision(DEFAULT_DIGITS):
                    self.x = x_of_z(self.z)
            except ValueError:
                self.x = None

    def to_json(self) -> dict:
        return {"z": pair(self.z), "x": None if self.x is None else pair(self.x),
                "c4": pair(self.c4), "order": 2, "err": float(self.err),
                "C": None if self.C is None else pair(self.C)}

    @classmethod
    def from_json(cls, d: dict) -> "PoleRecord":
        c = lambda v: None if v is None else complex(*v)
        return cls(z=c(d["z"]), c4=c(d["c4"]), err=d["err"], C=c(d.get("C")), x=c(d.get("x")))


class SingularityTypeError(RuntimeError):
    """Trajectory data are not consistent with a double pole."""


def _fit_single(st: P1State, zt0, c4_0, N: int, digits: int, maxit: int = 40):
    """Solve Laurent(z) = y, Laurent'(z) = y' for (z~, c4) by Newton with a difference Jacobian.

    c4 enters at relative order u^6, so its difference step and tolerance
    scale with |u|^-6.
    """
    z, y, yp = mpc(st.z), mpc(st.y), mpc(st.yp)
    zt, c4 = mpc(zt0), mpc(c4_0)
    eps = gmpy2.mpfr(10) ** (-(digits // 2))
    u0 = float(abs(z - zt))
    dz_step = eps * max(u0, 1e-30)
    dc_step = eps * max(1.0, u0 ** -3)
    ctol = max(1.0, u0 ** -6)

    def F(a, b):
        v, dv, _ = laurent_from_pole(a, b, N).evaluate(z)
        # scale so both components are O(1) near the pole
        u = z - a
        return (v - y) * u * u, (dv - yp) * u * u * u

    tol = 10.0 ** (-(digits - 8))
    for _ in range(maxit):
        f1, f2 = F(zt, c4)
        g1, g2 = F(zt + dz_step, c4)
        h1, h2 = F(zt, c4 + dc_step)
        j11, j21 = (g1 - f1) / dz_step, (g2 - f2) / dz_step
        j12, j22 = (h1 - f1) / dc_step, (h2 - f2) / dc_step
        det = j11 * j22 - j12 * j21
        if det == 0:
            break
        dz = (f1 * j22 - f2 * j12) / det
        dc = (j11 * f2 - j21 * f1) / det
        zt -= dz
        c4 -= dc
        if abs(dz) < tol * (1 + abs(zt)) and abs(dc) < tol * ctol * (1 + abs(c4)):
            return zt, c4, True
    return zt, c4, False


def locate_pole(traj: P1Trajectory, *, window=(1e2, 1e6), N: int = 40, C=None,
                rel_tol: float = 1e-6, digits: int | None = None) -> PoleRecord:
    """Fit (z~, c4) to the trailing states of a trajectory that ended near a pole.

    Each state in the |y| window gives one estimate by solving the two
    Laurent matching equations; the record holds their mean and the spread as
    uncertainty. Estimates that disagree by more than ``rel_tol`` mean the
    singularity is not a double pole.
    """
    digits = digits or traj.digits
    with working_precision(digits):
        sts = [s for s in traj.states if window[0] <= abs(s.y) <= window[1]]
        if len(sts) < 3:
            sts = traj.states[-min(len(traj.states), 8):]
        if len(sts) < 3:
            raise SingularityTypeError("need at least three trailing regular states")
        sts = sts[-12:]
        ests = []
        zt, c4 = None, mpc(0)
        for s in reversed(sts):
            guess = mpc(s.z) + 2 * mpc(s.y) / mpc(s.yp) if zt is None else zt
            try:
                n_s = min(N, laurent_from_pole(guess, c4, 8).terms_needed(
                    1.5 * float(abs(mpc(s.z) - guess)), digits))
            except ValueError:
                n_s = N
            zt_i, c4_i, ok = _fit_single(s, guess, c4, max(n_s, 8), digits)
            if not ok:
                continue
            lx = laurent_from_pole(zt_i, c4_i, N)
            if abs(mpc(s.z) - zt_i) >= 0.8 * lx.radius:
                continue
            ests.append((zt_i, c4_i, float(abs(mpc(s.z) - zt_i))))
            zt, c4 = zt_i, c4_i
        if len(ests) < 2:
            raise SingularityTypeError("Laurent model could not be matched to the trailing states")
        n = len(ests)
        zm = sum(e[0] for e in ests) / n
        spread_z = max(float(abs(e[0] - zm)) for e in ests)
        # c4 is best determined away from the pole: use the outer half of the estimates
        outer = sorted(ests, key=lambda e: -e[2])[:max(2, n // 2)]
        cm = sum(e[1] for e in outer) / len(outer)
        spread_c = max(float(abs(e[1] - cm)) for e in outer)
        if spread_z > rel_tol * (1 + float(abs(zm))) or spread_c > rel_tol * 1e2 * (1 + float(abs(cm))):
            raise SingularityTypeError(
                f"unexpected singularity type: pole estimates spread {spread_z:.3g} (z), {spread_c:.3g} (c4)")
        err = max(spread_z, 10.0 ** (-(digits - 14)))
        diag = {"n_states": n, "spread_z": spread_z, "spread_c4": spread_c,
                "closest": min(float(abs(mpc(s.z) - zm)) for s in sts)}
        return PoleRecord(z=zm, c4=cm, err=err, C=C, diagnostics=diag)


class CrossingError(ValueError):
    pass


def cross_pole(rec: PoleRecord, exit_point, *, entry: P1State | None = None,
               digits: int = DEFAULT_DIGITS) -> P1State:
    """State at ``exit_point`` from the Laurent series of the pole.

    With ``entry`` (a regular state inside the certified disk) the integral I
    and energy constant are carried across; the primitive has no logarithm,
    so the increment is path independent.
    """
    with working_precision(digits):
        lx = laurent_from_pole(mpc(rec.z), mpc(rec.c4), 40)
        zt = mpc(rec.z)
        pts = [mpc(exit_point)] + ([mpc(entry.z)] if entry is not None else [])
        for p in pts:
            r = float(abs(p - zt))
            if r == 0:
                raise CrossingError("point coincides with the pole")
            if r >= lx.radius:
                raise CrossingError(f"|z - z~| = {r:.3g} outside certified radius {lx.radius:.3g}")
        need = max(lx.terms_needed(float(abs(p - zt)), digits) for p in pts)
        lx = lx.extend(max(need, 40))
        y, yp, prim = lx.evaluate(pts[0])
        if entry is None:
            return P1State(pts[0], y, yp, 0, None)
        _, _, prim0 = lx.evaluate(pts[1])
        return P1State(pts[0], y, yp, mpc(entry.I) + prim - prim0, entry.E)


@dataclass
class ContourCertificate:
    oint_y: complex
    oint_zy: complex
    dI_loop: complex
    coeffs: dict
    radius: float
    max_drift: float

    def passes(self, abs_tol: float = 1e-8, rel_tol: float = 1e-6) -> bool:
        return (abs(self.oint_y) < abs_tol
                and abs(self.oint_zy - 2j * math.pi) < rel_tol * 2 * math.pi)


def contour_certificate(rec: PoleRecord, start: P1State, *, r: float | None = None, n: int = 64,
                        ctl: StepControl = StepControl()) -> ContourCertificate:
    """Integrate around a circle about the pole and test its Laurent structure.

    Trapezoid sums over the n nodes give oint y dz, oint (z - z~) y dz and the
    Fourier estimates of the Laurent coefficients c_-2..c_4; the change of I
    around the loop is a second route to oint y dz.
    """
    with working_precision(ctl.digits):
        zt = mpc(rec.z)
        if r is None:
            lx = laurent_from_pole(zt, mpc(rec.c4), 40)
            r = min(0.25, 0.5 * lx.radius)
        d0 = mpc(start.z) - zt
        theta0 = gmpy2.phase(d0) if d0 != 0 else gmpy2.mpfr(0)
        two_pi = 2 * gmpy2.const_pi()
        nodes = [zt + r * gmpy2.exp(1j * (theta0 + two_pi * j / n)) for j in range(n + 1)]
        tr = integrate_path(start, nodes, ctl, record=False)
        if tr.event != "completed":
            raise SingularityTypeError("integration around the pole hit another singularity")
        ws = tr.waypoint_states
        ys = [mpc(s.y) for s in ws[:n]]
        us = [nodes[j] - zt for j in range(n)]
        w = two_pi / n
        oint_y = sum(y * 1j * u for y, u in zip(ys, us)) * w
        oint_zy = sum(y * 1j * u * u for y, u in zip(ys, us)) * w
        coeffs = {k: complex(sum(y / u ** k for y, u in zip(ys, us)) / n) for k in range(-2, 5)}
        dI = ws[n].I - ws[0].I
        return ContourCertificate(complex(oint_y), complex(oint_zy), complex(dI), coeffs, float(r),
                                  max(s.drift() for s in ws))


def hunt_pole(start: P1State, target, ctl: StepControl = StepControl(), *, max_iter: int = 25,
              C=None) -> tuple[PoleRecord, P1Trajectory]:
    """Integrate toward ``target`` and steer with z + 2y/y' until the solution blows up."""
    with working_precision(ctl.digits):
        st = start
        tgt = mpc(target)
        for _ in range(max_iter):
            tr = integrate_path(st, [tgt], ctl)
            if tr.event == "blowup":
                return locate_pole(tr, C=C), tr
            st = tr.last
            step = 2 * mpc(st.y) / mpc(st.yp)
            # keep the steering step inside the analytic disk
            R = radius_bound(st)
            if abs(step) > 2 * R:
                step = step / abs(step) * 2 * R
            tgt = mpc(st.z) + step * gmpy2.mpfr("1.05")
        raise RuntimeError("pole steering did not reach a blow-up")


@dataclass
class NoPole:
    """Integration reached x = A without a blow-up."""

    C: object
    A: float
    guaranteed: bool
    reason: str = "no pole guaranteed on the positive real axis"

    def to_json(self):
        return {"outcome": "no_pole", "C": pair(self.C), "A": self.A, "reason": self.reason}


def first_real_pole(C, *, A: float | None = None, x_seed: float = 30.0, ctl: StepControl = StepControl(),
                    table=None, C0: float | None = None, x_stop: float | None = None):
    """Integrate inward along the positive x axis from x_seed and return the first pole.

    Integration stops at ``x_stop`` (default A). Returns a :class:`PoleRecord`
    (x~ real) or :class:`NoPole`. For C above C0 a pole on [A, x_seed] is
    guaranteed, so not meeting one there is treated as a numerical failure.
    """
    from .predictor import compute_C0, default_A
    A = default_A() if A is None else A
    x_stop = A if x_stop is None else x_stop
    if C0 is None:
        C0 = compute_C0(A)
    Cc = complex(C)
    if Cc.imag != 0 or Cc.real <= 0:
        raise ValueError("first_real_pole needs real C > 0")
    table = table or default_table()
    st = seed_p1(Cc.real, x_seed, table, digits=ctl.digits)
    with working_precision(ctl.digits):
        zA = z_of_x(x_stop)
        tr = integrate_path(st, [zA], ctl)
    if tr.event != "blowup":
        if Cc.real > C0 and x_stop <= A:
            raise RuntimeError(f"no pole found on [A, x_seed] although C = {Cc.real} > C0 = {C0}")
        return NoPole(Cc.real, A, False)
    rec = locate_pole(tr, C=Cc.real)
    rec.diagnostics["guaranteed"] = Cc.real > C0
    rec.diagnostics["trajectory"] = tr
    return rec


@dataclass
class PoleFreeCertificate:
    ok: bool
    n_samples: int
    uncovered: list
    trajectories: list

    def max_drift(self):
        return max((t.max_drift() for t in self.trajectories), default=0.0)


def certify_pole_free(start: P1State, x_start, re_range, im_values, *, samples: int = 25,
                      ctl: StepControl = StepControl(), spacing: float = 0.25) -> PoleFreeCertificate:
    """Show a rectangle in the x plane holds no pole.

    From ``start`` (at x_start) the solution is integrated along horizontal
    lines Im x = b for b in ``im_values`` across ``re_range``. Every accepted
    state contributes the disk of radius min(R, 1) in z on which the solution
    is analytic; a grid of sample points of the rectangle must be covered.
    """
    from .ode import z_path_from_x

    lo, hi = re_range
    disks = []
    trajs = []
    x0 = complex(x_start)
    for b in im_values:
        pts = [x0, complex(hi + 1, b), complex(hi, b), complex(lo, b)]
        zs = z_path_from_x(pts, spacing, ctl.digits)
        tr = integrate_path(start, zs, ctl)
        trajs.append(tr)
        for s in tr.states:
            disks.append((complex(s.z), min(radius_bound(s), 1.0)))
    ib = [min(im_values), max(im_values)]
    uncovered = []
    n = 0
    with working_precision(ctl.digits):
        for i in range(samples):
            for j in range(samples):
                xr = lo + (hi - lo) * i / (samples - 1)
                xi = ib[0] + (ib[1] - ib[0]) * j / (samples - 1)
                zp = complex(z_of_x(complex(xr, xi)))
                n += 1
                if not any(abs(zp - c) < r for c, r in disks):
                    uncovered.append(complex(xr, xi))
    ok = not uncovered and all(t.event == "completed" for t in trajs)
    return PoleFreeCertificate(ok, n, uncovered, trajs)
