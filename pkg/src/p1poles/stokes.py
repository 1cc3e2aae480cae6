"""Effective transseries constant on the antistokes lines +-i R^+.

A solution seeded on the positive real axis with constant C is continued
along the arc |x| = R to x = +-iR and then outward along the imaginary axis.
There the truncated transseries is inverted for the constant C_eff that
reproduces h. On these lines every level is of comparable size, so C_eff is
determined to roughly the optimal-truncation accuracy of the series.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import gmpy2

from ._prec import mpc, working_precision
from .ode import (StepControl, default_table, integrate_path, normal_from_p1, seed_p1,
                  z_path_from_x)


class StokesFitError(RuntimeError):
    pass


def invert_transseries(x, h, table=None, *, C0=None, tol: float = 1e-25, maxit: int = 50):
    """Solve sum_k c^k x^(-k/2) e^(-kx) H_k(x) = h - H_0(x) for c by Newton.

    Returns (c, err) where err is the optimal-truncation error of the levels,
    each weighted by |c x^(-1/2) e^(-x)|^k, divided by |x^(-1/2) e^(-x) H_1|.
    """
    table = table or default_table()
    x = mpc(x)
    e1 = gmpy2.exp(-x) / gmpy2.sqrt(x)
    H = []
    errs = []
    for k in range(table.K + 1):
        v, e = table.row(k).evaluate(x)
        H.append(v)
        errs.append(float(e))
    rhs = mpc(h) - H[0]
    c = rhs / (e1 * H[1]) if C0 is None else mpc(C0)
    for _ in range(maxit):
        f = -rhs
        df = mpc(0)
        p = mpc(1)
        for k in range(1, table.K + 1):
            df += k * p * e1 ** k * H[k]
            p *= c
            f += p * e1 ** k * H[k]
        dc = f / df
        c -= dc
        if abs(dc) < tol * max(1, abs(c)):
            w = float(abs(c * e1))
            err = sum(e * w ** k for k, e in enumerate(errs))
            return c, err / float(abs(e1 * H[1]))
    raise StokesFitError("Newton inversion of the transseries did not converge")


@dataclass
class AntistokesLimit:
    C: complex
    plus: complex
    minus: complex
    err: float
    radii: list
    samples: dict = field(default_factory=dict)
    max_drift: float = 0.0

    @property
    def S(self) -> complex:
        return self.plus - self.minus

    def to_json(self) -> dict:
        c = lambda v: [complex(v).real, complex(v).imag]
        return {"kind": "antistokes_limit", "C": c(self.C), "plus": c(self.plus), "minus": c(self.minus),
                "S": c(self.S), "err": self.err, "radii": list(self.radii)}


def antistokes_limit(C, *, R: float = 30.0, radii=(30.0, 40.0), ctl: StepControl = StepControl(),
                     spacing: float = 0.5, table=None) -> AntistokesLimit:
    """C_eff on x = +-i r for r in ``radii`` (all >= R), for the solution seeded at x = R.

    ``plus``/``minus`` are the values at the largest radius; ``err`` is the
    largest change between radii plus the inversion error.
    """
    table = table or default_table()
    radii = sorted(radii)
    if radii[0] < R:
        raise ValueError("radii must not be below the seeding radius")
    st = seed_p1(C, R, table, digits=ctl.digits)
    out = {}
    err = 0.0
    drift = 0.0
    n_arc = max(8, int(math.ceil(R * math.pi / 2 / spacing)))
    for sign in (1, -1):
        arc = [R * cmath.exp(1j * sign * math.pi / 2 * j / n_arc) for j in range(n_arc + 1)]
        legs = [arc] + [[1j * sign * a, 1j * sign * b] for a, b in zip(radii[:-1], radii[1:])]
        if radii[0] > R:
            legs[0] = arc + [1j * sign * radii[0]]
        cur = st
        vals = []
        with working_precision(ctl.digits):
            for leg in legs:
                tr = integrate_path(cur, z_path_from_x(leg, spacing, ctl.digits), ctl)
                if tr.event == "blowup":
                    raise StokesFitError(f"pole met on the way to x = {leg[-1]}")
                drift = max(drift, tr.max_drift())
                cur = tr.last
                ns = normal_from_p1(cur)
                c, e = invert_transseries(ns.x, ns.h, table)
                vals.append(complex(c))
                err = max(err, e)
        out[sign] = vals
    for vals in out.values():
        for a, b in zip(vals[:-1], vals[1:]):
            err = max(err, abs(b - a))
    return AntistokesLimit(complex(C), out[1][-1], out[-1][-1], err, radii,
                           {"+": out[1], "-": out[-1]}, drift)


__all__ = ["invert_transseries", "antistokes_limit", "AntistokesLimit", "StokesFitError"]
