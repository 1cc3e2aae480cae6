"""Taylor-series integration of P1 y'' = 6y^2 + z and of its normal form along complex paths.

Step control uses the analyticity-radius lower bound

    R = 1 / max(|y|^(1/2), |y'/2|^(1/3), |y^2 + z/6|^(1/4))

at the expansion point, and the running integral I = int y dz is carried so
that the first integral  E = y'^2 - 4y^3 - 2zy + 2I  can be monitored.
"""
from __future__ import annotations

import csv
import json
import math
import zlib
from dataclasses import dataclass, field, replace

import gmpy2

from ._prec import DEFAULT_DIGITS, mpc, precision_like, working_precision
from .series import (FORCING, TransseriesTable, compute_transseries_table, normal_to_p1,
                     p1_to_normal, rat, x_of_z, z_of_x)


@dataclass(frozen=True)
class P1State:
    z: object
    y: object
    yp: object
    I: object = 0
    E: object = None

    def energy(self):
        with precision_like(self.y, self.yp, self.z):
            return energy(mpc(self.z), mpc(self.y), mpc(self.yp), mpc(self.I))

    def with_energy(self) -> "P1State":
        return replace(self, E=self.energy())

    def drift(self) -> float:
        if self.E is None:
            return 0.0
        with precision_like(self.y, self.E):
            return float(abs(self.energy() - self.E) / (1 + abs(self.E)))


@dataclass(frozen=True)
class NormalState:
    x: object
    h: object
    hp: object
    err: float = 0.0

    def __post_init__(self):
        if mpc(self.x) == 0:
            raise ValueError("x = 0 is the singular point of the normal form")


@dataclass(frozen=True)
class StepControl:
    digits: int = DEFAULT_DIGITS
    safety: float = 0.25
    order: int | None = None
    blowup: float | None = None
    max_step: float = 1.0
    drift_tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.safety < 1:
            raise ValueError("safety must lie in (0, 1)")
        if self.digits < 10:
            raise ValueError("digits must be >= 10")

    @property
    def blowup_level(self) -> float:
        """|y| at which integration stops. By default the point where 10^-digits
        roundoff in y, amplified by 12|y|^2, reaches about 1e-12 in the energy."""
        if self.blowup is not None:
            return self.blowup
        return min(1e6, 10.0 ** ((self.digits - 13) / 3))

    @property
    def taylor_order(self) -> int:
        if self.order is not None:
            return self.order
        # 0.25^N must reach the target precision
        return int(math.ceil(self.digits * math.log(10) / math.log(4))) + 4


def energy(z, y, yp, I):
    return yp * yp - 4 * y * y * y - 2 * z * y + 2 * I


def taylor_coeffs_regular(state: P1State, order: int) -> list:
    """Taylor coefficients of y about state.z through (z - z0)^order.

    (k+1)(k+2) c_{k+2} = 6 sum_{m<=k} c_m c_{k-m} + z0 [k=0] + [k=1].
    """
    c = [mpc(state.y), mpc(state.yp)]
    z0 = mpc(state.z)
    for k in range(0, order - 1):
        acc = _conv_sym(c, k)
        acc = 6 * acc
        if k == 0:
            acc += z0
        elif k == 1:
            acc += 1
        c.append(acc / ((k + 1) * (k + 2)))
    return c[:order + 1]


def _conv_sym(c, k):
    """sum_{m=0}^k c_m c_{k-m} using symmetry."""
    acc = 0
    half = (k + 1) // 2
    for m in range(half):
        acc += c[m] * c[k - m]
    acc *= 2
    if k % 2 == 0:
        acc += c[k // 2] * c[k // 2]
    return acc


def radius_bound(state: P1State) -> float:
    """Lower bound on the radius of analyticity at state.z (inf for the all-zero state)."""
    y, yp, z = mpc(state.y), mpc(state.yp), mpc(state.z)
    m = max(float(abs(y)) ** 0.5, (float(abs(yp)) / 2) ** (1 / 3),
            float(abs(y * y + z / 6)) ** 0.25)
    return math.inf if m == 0 else 1.0 / m


@dataclass
class P1Trajectory:
    """Accepted states of one integration run.

    ``event`` is 'completed' or 'blowup'; after a blow-up ``states[-1]`` is the
    last regular state. ``waypoint_states`` holds the state reached at each
    waypoint. ``crossings`` lists pole records passed through when crossing
    was enabled.
    """

    states: list = field(default_factory=list)
    event: str = "completed"
    waypoint_states: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    digits: int = DEFAULT_DIGITS

    @property
    def last(self) -> P1State:
        return self.states[-1]

    def max_drift(self) -> float:
        return max((s.drift() for s in self.states), default=0.0)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re_z", "im_z", "re_y", "im_y", "re_yp", "im_yp", "abs_E_drift"])
            for s in self.states:
                z, y, yp = complex(s.z), complex(s.y), complex(s.yp)
                w.writerow([repr(z.real), repr(z.imag), repr(y.real), repr(y.imag),
                            repr(yp.real), repr(yp.imag), repr(s.drift())])

    def to_bytes(self) -> bytes:
        payload = {"version": 1, "digits": self.digits, "event": self.event,
                   "states": [[_cstr(s.z), _cstr(s.y), _cstr(s.yp), _cstr(s.I),
                               None if s.E is None else _cstr(s.E)] for s in self.states]}
        return MAGIC + zlib.compress(json.dumps(payload).encode())

    @classmethod
    def from_bytes(cls, data: bytes) -> "P1Trajectory":
        if not data.startswith(MAGIC):
            raise ValueError("not a P1TRAJ1 checkpoint")
        payload = json.loads(zlib.decompress(data[len(MAGIC):]).decode())
        digits = payload["digits"]
        with working_precision(digits):
            states = [P1State(*(None if v is None else mpc(v) for v in row)) for row in payload["states"]]
        return cls(states=states, event=payload["event"], digits=digits)


MAGIC = b"P1TRAJ1\n"


def _cstr(v) -> str:
    with precision_like(v):
        return str(mpc(v))


class BlowUp(Exception):
    pass


def _advance(state: P1State, t, coeffs):
    """Evaluate the Taylor polynomial (and its derivative and integral) at offset t."""
    n = len(coeffs) - 1
    y = coeffs[n]
    yp = n * coeffs[n]
    Iacc = coeffs[n] / (n + 1)
    for k in range(n - 1, -1, -1):
        y = y * t + coeffs[k]
        if k >= 1:
            yp = yp * t + k * coeffs[k]
        Iacc = Iacc * t + coeffs[k] / (k + 1)
    return P1State(state.z + t, y, yp, state.I + Iacc * t, state.E)


def _tail(coeffs, h: float) -> float:
    """Size of the last few retained terms; several are used because P1 series can be lacunary."""
    n = len(coeffs) - 1
    return sum(float(abs(coeffs[k])) * h ** k for k in range(n - 4, n + 1))


def _coef_radius(coeffs) -> float:
    """Crude radius estimate from the tail of the coefficient list."""
    n = len(coeffs) - 1
    best = math.inf
    for k in range(max(n - 4, 2), n + 1):
        a = float(abs(coeffs[k]))
        if a > 0:
            best = min(best, a ** (-1.0 / k))
    return best


def _step(state: P1State, dz_dir, remaining: float, ctl: StepControl, tol):
    """One accepted Taylor step along the unit direction dz_dir. Returns (state, h)."""
    N = ctl.taylor_order
    coeffs = taylor_coeffs_regular(state, N)
    R = radius_bound(state)
    h = min(ctl.safety * R, ctl.max_step, 0.5 * _coef_radius(coeffs), remaining)
    scale = 1 + float(abs(state.y))
    while True:
        if h < 1e-30:
            raise BlowUp("step underflow")
        err = _tail(coeffs, h)
        if err <= tol * scale:
            break
        h /= 2
    t = dz_dir * h if h != remaining else None
    return coeffs, h, t


def integrate_path(start: P1State, path, ctl: StepControl = StepControl(), *,
                   cross_poles: bool = False, record: bool = True) -> P1Trajectory:
    """Integrate P1 from ``start`` along the polyline through ``path`` (list of complex z).

    Stops with ``event='blowup'`` when |y| would exceed ``ctl.blowup_level`` or the
    step size underflows; with ``cross_poles`` the pole is located and stepped
    over with its Laurent series instead and integration continues.
    """
    with working_precision(ctl.digits):
        st = P1State(mpc(start.z), mpc(start.y), mpc(start.yp), mpc(start.I),
                     None if start.E is None else mpc(start.E))
        if st.E is None:
            st = st.with_energy()
        traj = P1Trajectory(states=[st], digits=ctl.digits)
        tol = 10.0 ** (-ctl.digits)
        for wp in path:
            wp = mpc(wp)
            while True:
                diff = wp - st.z
                remaining = float(abs(diff))
                if remaining == 0:
                    break
                direction = diff / abs(diff)
                try:
                    coeffs, h, t = _step(st, direction, remaining, ctl, tol)
                except BlowUp:
                    if cross_poles:
                        st = _cross(traj, wp, ctl)
                        continue
                    traj.event = "blowup"
                    return traj
                if t is None:
                    t = diff
                new = _advance(st, t, coeffs)
                if t is diff:
                    new = replace(new, z=wp)
                if abs(new.y) > ctl.blowup_level:
                    if cross_poles:
                        st = _cross(traj, wp, ctl)
                        continue
                    traj.event = "blowup"
                    return traj
                st = new
                if record:
                    traj.states.append(st)
                else:
                    traj.states[-1:] = [st]
            traj.waypoint_states.append(st)
        return traj


def _cross(traj: P1Trajectory, wp, ctl: StepControl) -> P1State:
    from .poles import cross_pole, locate_pole

    rec = locate_pole(traj)
    st = traj.last
    zt = mpc(rec.z)
    d = wp - zt
    dist = float(abs(st.z - zt))
    if abs(d) == 0:
        raise BlowUp("path ends on a pole")
    exit_point = zt + d / abs(d) * min(dist, float(abs(d)))
    new = cross_pole(rec, exit_point, entry=st)
    traj.crossings.append(rec)
    traj.states.append(new)
    return new


# -- normal form -------------------------------------------------------------


@dataclass
class NormalTrajectory:
    states: list
    event: str = "completed"
    energy_drift: float = 0.0
    p1: P1Trajectory | None = None


def p1_state_from_normal(ns: NormalState, I=0) -> P1State:
    z, y, yp = normal_to_p1(ns.x, ns.h, ns.hp)
    return P1State(z, y, yp, mpc(I)).with_energy()


def normal_from_p1(st: P1State) -> NormalState:
    x, h, hp = p1_to_normal(st.z, st.y, st.yp)
    return NormalState(x, h, hp)


def _normal_taylor(x0, h0, hp0, N, forcing):
    """Taylor coefficients of h about x0 and of I(x) - I(x0) (dI/dx = y dz/dx)."""
    a = [mpc(h0), mpc(hp0)]
    g = []  # coefficients of h + h^2/2
    b = []  # coefficients of x^-3
    inv = 1 / x0
    for n in range(N + 1):
        b.append((-1) ** n * ((n + 1) * (n + 2) // 2) * inv ** (3 + n))
    for n in range(0, N - 1):
        g.append(a[n] + _conv_sym(a, n) / 2)
        acc = x0 * g[n] + (g[n - 1] if n >= 1 else 0) + forcing * b[n] - (n + 1) ** 2 * a[n + 1]
        a.append(acc / (x0 * (n + 1) * (n + 2)))
    # I' = -(30x)^(1/5) (1 - 4/(25x^2) + h) / 12
    w0 = (30 * x0) ** gmpy2.mpq(1, 5)
    fifth = []
    coef = mpc(1)
    for n in range(N + 1):
        fifth.append(coef * inv ** n)
        coef = coef * (gmpy2.mpq(1, 5) - n) / (n + 1)
    q = []
    for n in range(N + 1):
        v = a[n] + (-gmpy2.mpq(4, 25)) * (-1) ** n * (n + 1) * inv ** (2 + n)
        if n == 0:
            v += 1
        q.append(v)
    dI = []
    for n in range(N + 1):
        acc = 0
        for m in range(n + 1):
            acc += fifth[m] * q[n - m]
        dI.append(-w0 * acc / 12)
    return a[:N + 1], dI


def _normal_advance(x0, a, dI, t):
    n = len(a) - 1
    h = a[n]
    hp = n * a[n]
    Ia = dI[n] / (n + 1)
    for k in range(n - 1, -1, -1):
        h = h * t + a[k]
        if k >= 1:
            hp = hp * t + k * a[k]
        Ia = Ia * t + dI[k] / (k + 1)
    return h, hp, Ia * t


def integrate_normal(start: NormalState, path, ctl: StepControl = StepControl(), *,
                     method: str = "p1", forcing=FORCING) -> NormalTrajectory:
    """Integrate the normal form along the polyline through ``path`` (complex x).

    ``method='p1'`` maps to P1 variables, integrates there along the images of
    the waypoints, and maps back. ``'direct'`` uses the Taylor recursion of the
    normal form itself; its step is the P1 radius bound rescaled by |dx/dz|
    and kept below half the distance to x = 0. Both monitor the P1 first
    integral.
    """
    if method not in ("p1", "direct"):
        raise ValueError("method must be 'p1' or 'direct'")
    with working_precision(ctl.digits):
        for wp in path:
            if mpc(wp) == 0:
                raise ValueError("path through x = 0")
        if method == "p1":
            st = p1_state_from_normal(start)
            zpath = [z_of_x(w) for w in path]
            tr = integrate_path(st, zpath, ctl)
            states = [normal_from_p1(s) for s in tr.states]
            return NormalTrajectory(states, tr.event, tr.max_drift(), tr)
        return _integrate_normal_direct(start, path, ctl, rat(forcing))


def _integrate_normal_direct(start, path, ctl, forcing):
    N = ctl.taylor_order
    tol = 10.0 ** (-ctl.digits)
    x, h, hp = mpc(start.x), mpc(start.h), mpc(start.hp)
    I = mpc(0)
    p1 = p1_state_from_normal(NormalState(x, h, hp))
    E0 = p1.E
    states = [NormalState(x, h, hp)]
    drift = 0.0
    for wp in path:
        wp = mpc(wp)
        while True:
            diff = wp - x
            remaining = float(abs(diff))
            if remaining == 0:
                break
            z, y, yp = normal_to_p1(x, h, hp)
            Rz = radius_bound(P1State(z, y, yp))
            Rx = Rz * float(abs((30 * x) ** gmpy2.mpq(1, 5)))
            a, dI = _normal_taylor(x, h, hp, N, forcing)
            step = min(ctl.safety * Rx, 0.5 * float(abs(x)), ctl.max_step,
                       0.5 * _coef_radius(a), remaining)
            scale = 1 + float(abs(h))
            while True:
                if step < 1e-30:
                    return NormalTrajectory(states, "blowup", drift)
                err = _tail(a, step)
                if err <= tol * scale:
                    break
                step /= 2
            t = diff if step == remaining else diff / abs(diff) * step
            h, hp, dIv = _normal_advance(x, a, dI, t)
            x = wp if step == remaining else x + t
            I = I + dIv
            z, y, yp = normal_to_p1(x, h, hp)
            if abs(y) > ctl.blowup_level:
                return NormalTrajectory(states, "blowup", drift)
            drift = max(drift, float(abs(energy(z, y, yp, I) - E0) / (1 + abs(E0))))
            states.append(NormalState(x, h, hp))
    return NormalTrajectory(states, "completed", drift)


# -- seeding from the transseries ------------------------------------------------


class SeedError(ValueError):
    """x_seed too small for the requested C."""


def seed_at_infinity(C, x_seed, table: TransseriesTable | None = None, *,
                     digits: int = DEFAULT_DIGITS) -> NormalState:
    """Initial data (h, h') at x_seed from the truncated transseries.

    Each level is summed up to (not including) its smallest term; levels are
    added while their size exceeds the working precision. ``err`` on the
    returned state is the sum of the omitted smallest terms and the first
    omitted level.
    """
    if table is None:
        table = default_table()
    with working_precision(digits):
        C = mpc(C)
        x = mpc(x_seed)
        xi_abs = float(abs(C * gmpy2.exp(-x) / gmpy2.sqrt(x)))
        if xi_abs >= 1 / 24:
            raise SeedError(f"|C| e^-x x^-1/2 = {xi_abs:.3g} must be below 1/24 at x_seed")
        xi = C * gmpy2.exp(-x) / gmpy2.sqrt(x)
        h, hp, err = table.row(0).evaluate(x, derivative=True)
        floor = 10.0 ** (-digits - 2)
        err = float(err)
        kmax = 0
        if C != 0:
            xik = mpc(1)
            for k in range(1, table.K + 1):
                xik = xik * xi
                v, d, e = table.row(k).evaluate(x, derivative=True)
                term = xik * v
                h += term
                hp += xik * (d - v * (k + k / (2 * x)))
                err += float(abs(xik) * e)
                kmax = k
                if float(abs(term)) < floor:
                    break
            if kmax == table.K:
                err += float(abs(xik * xi) * (table.K + 1) / 12 ** table.K)
        return NormalState(x, h, hp, err)


_TABLE_CACHE: dict = {}


def default_table(K: int = 40, M: int = 60) -> TransseriesTable:
    key = (K, M)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = compute_transseries_table(K, M)
    return _TABLE_CACHE[key]


def seed_p1(C, x_seed, table=None, *, digits: int = DEFAULT_DIGITS) -> P1State:
    """Seed as a P1 state with I = 0 and its energy constant."""
    ns = seed_at_infinity(C, x_seed, table, digits=digits)
    with working_precision(digits):
        return p1_state_from_normal(ns)


def x_path(points, spacing: float = 0.5) -> list:
    """Subdivide a polyline in x so that its image in z is well approximated by chords."""
    out = []
    pts = [complex(p) for p in points]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(abs(b - a) / spacing)))
        for j in range(1, n + 1):
            out.append(a + (b - a) * j / n)
    return out


def z_path_from_x(points, spacing: float = 0.5, digits: int = DEFAULT_DIGITS) -> list:
    with working_precision(digits):
        return [z_of_x(p) for p in x_path(points, spacing)]


__all__ = ["P1State", "NormalState", "StepControl", "P1Trajectory", "NormalTrajectory",
           "taylor_coeffs_regular", "radius_bound", "integrate_path", "integrate_normal",
           "seed_at_infinity", "seed_p1", "energy", "x_of_z", "z_of_x", "x_path",
           "z_path_from_x", "default_table", "SeedError"]
