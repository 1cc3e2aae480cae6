import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from p1poles._prec import mpc, working_precision
from p1poles.ode import P1State, P1Trajectory, StepControl, integrate_path
from p1poles.poles import (CrossingError, NoPole, PoleRecord, SingularityTypeError, contour_certificate,
                           cross_pole, first_real_pole, growth_certificate, hunt_pole, laurent_from_pole,
                           locate_pole)
from p1poles.predictor import bracket, compute_C0

CTL = StepControl(digits=30)


def synthetic_trajectory(zt, c4, direction=1, radii=np.linspace(0.3, 0.1, 12), N=60):
    with working_precision(30):
        lx = laurent_from_pole(mpc(zt), mpc(c4), N)
        states = []
        for r in radii:
            z = mpc(zt) + mpc(direction) * float(r)
            y, yp, _ = lx.evaluate(z)
            states.append(P1State(z, y, yp))
    return P1Trajectory(states=states, event="blowup", digits=30)


def test_laurent_structure_at_zero():
    lx = laurent_from_pole(0, 0, 10)
    assert lx[-2] == 1 and lx[-1] == 0 and lx[0] == 0 and lx[1] == 0
    assert lx[2] == 0 and lx[3] == Fraction(-1, 6)


@given(st.fractions(-3, 3, max_denominator=20), st.fractions(-3, 3, max_denominator=20))
def test_c5_vanishes(zt, c4):
    lx = laurent_from_pole(zt, c4, 8)
    assert lx[5] == 0 and lx[2] == -zt / 10 and lx[4] == c4


def test_c6_hand_value():
    # [(5)(6) - 12] c6 = 6 c2^2 with c2 = -1/10
    assert laurent_from_pole(1, 0, 6)[6] == Fraction(1, 300)


def test_laurent_solves_p1_symbolically():
    u = sp.Symbol("u")
    zt, c4 = sp.Rational(3, 2), sp.Rational(-2, 7)
    N = 14
    lx = laurent_from_pole(Fraction(3, 2), Fraction(-2, 7), N)
    y = sum(sp.Rational(str(lx[j])) * u ** j for j in range(-2, N + 1))
    r = sp.expand((sp.diff(y, u, 2) - 6 * y ** 2 - (zt + u)) * u ** 4)
    for n in range(0, N + 1):
        assert r.coeff(u, n) == 0


@given(st.complex_numbers(max_magnitude=4), st.complex_numbers(max_magnitude=4))
@settings(max_examples=25)
def test_growth_certificate(zt, c4):
    with working_precision(30):
        lx = laurent_from_pole(mpc(zt), mpc(c4), 40)
    assert growth_certificate(lx, 40)


def test_synthetic_recovery():
    rec = locate_pole(synthetic_trajectory(2, 0.3))
    assert abs(complex(rec.z) - 2) < 1e-9
    assert abs(complex(rec.c4) - 0.3) < 1e-6
    assert rec.order == 2 and rec.err > 0


def test_random_recovery_100():
    rng = np.random.default_rng(12345)
    worst_z = worst_c = 0.0
    for _ in range(100):
        r = rng.uniform(1, 3)
        zt = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
        c4 = np.sqrt(rng.uniform(0, 1)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        d = np.exp(1j * rng.uniform(0, 2 * np.pi))
        rec = locate_pole(synthetic_trajectory(zt, c4, d, radii=np.linspace(0.25, 0.08, 10), N=40))
        worst_z = max(worst_z, abs(complex(rec.z) - zt))
        worst_c = max(worst_c, abs(complex(rec.c4) - c4))
    assert worst_z < 1e-6 and worst_c < 1e-6


def test_non_double_pole_rejected():
    states = []
    with working_precision(30):
        for r in np.linspace(0.3, 0.01, 12):
            z = mpc(1 + r)
            states.append(P1State(z, 1 / (z - 1) ** 3, -3 / (z - 1) ** 4))
    with pytest.raises(SingularityTypeError):
        locate_pole(P1Trajectory(states=states, event="blowup", digits=30))


def test_record_json_and_validation():
    rec = PoleRecord(z=-2 + 0j, c4=0.1 + 0j, err=1e-9, C=5.0)
    d = rec.to_json()
    assert set(d) == {"z", "x", "c4", "order", "err", "C"}
    back = PoleRecord.from_json(d)
    assert back.to_json() == d
    with pytest.raises(ValueError):
        PoleRecord(z=0, c4=0, err=0.0)
    with pytest.raises(ValueError):
        PoleRecord(z=0, c4=0, err=1.0, order=1)


def test_cross_pole_symmetric_points():
    rec = PoleRecord(z=0j, c4=0j, err=1e-12)
    d = 1e-2
    with working_precision(30):
        a = cross_pole(rec, d)
        b = cross_pole(rec, -d)
        lx = laurent_from_pole(0, 0, 20)
    diff = complex(a.y - b.y)
    # odd part: 2 c3 d^3 + 2 c7 d^7 + ...
    assert abs(diff - 2 * float(lx[3]) * d ** 3) < 10 * abs(float(lx[7])) * d ** 7 + 1e-25


def test_cross_pole_outside_radius():
    rec = PoleRecord(z=0j, c4=0j, err=1e-12)
    with pytest.raises(CrossingError):
        cross_pole(rec, 50)
    with pytest.raises(CrossingError):
        cross_pole(rec, 0)


@pytest.fixture(scope="module")
def real_pole():
    C = 2 * compute_C0()
    rec = first_real_pole(C, ctl=CTL)
    return C, rec


def test_first_real_pole_in_bracket(real_pole):
    C, rec = real_pole
    lo, hi = bracket(C)
    x = complex(rec.x).real
    assert lo - 1e-8 <= x <= hi + 1e-8
    assert abs(complex(rec.x).imag) < 1e-20


def test_first_real_pole_monotone(real_pole):
    C, rec = real_pole
    rec2 = first_real_pole(3 * C, ctl=CTL)
    assert complex(rec2.x).real > complex(rec.x).real


def test_no_pole_below_C0():
    out = first_real_pole(100.0, ctl=CTL)
    assert isinstance(out, NoPole) and not out.guaranteed


def test_double_pole_certificate(real_pole):
    C, rec = real_pole
    tr = rec.diagnostics["trajectory"]
    start = next(s for s in reversed(tr.states) if abs(complex(s.z - rec.z)) > 0.2)
    cert = contour_certificate(rec, start, ctl=CTL)
    assert cert.passes()
    assert abs(cert.oint_y) < 1e-8 and abs(cert.dI_loop) < 1e-8
    assert max(abs(cert.coeffs[k]) for k in (-1, 0, 1)) < 1e-8
    assert abs(cert.coeffs[-2] - 1) < 1e-8
    zt = complex(rec.z)
    assert abs(cert.coeffs[2] + zt / 10) < 1e-6
    assert abs(cert.coeffs[3] + 1 / 6) < 1e-6
    assert abs(cert.coeffs[4] - complex(rec.c4)) < 1e-6


def test_cross_round_trip(real_pole):
    """Cross the pole with the Laurent series, then return around a semicircle by integration."""
    C, rec = real_pole
    tr = rec.diagnostics["trajectory"]
    zt = complex(rec.z)
    with working_precision(30):
        entry = next(s for s in reversed(tr.states) if abs(complex(s.z) - zt) > 0.15)
        r = abs(complex(entry.z) - zt)
        exit_pt = 2 * zt - complex(entry.z)
        out = cross_pole(rec, exit_pt, entry=entry, digits=30)
        arc = [zt + r * np.exp(1j * t) for t in np.linspace(np.pi / 16, np.pi, 16)]
        back = integrate_path(out, [exit_pt] + arc, CTL)
    assert back.event == "completed"
    end = back.last
    assert abs(complex(end.y - entry.y)) < 1e-8 * (1 + abs(complex(entry.y)))
    assert abs(complex(end.yp - entry.yp)) < 1e-8 * (1 + abs(complex(entry.yp)))
    assert abs(complex(end.I - entry.I)) < 1e-8
    assert back.max_drift() < 1e-10


def test_two_approach_directions_agree():
    with working_precision(30):
        from p1poles.ode import seed_p1

        st = seed_p1(1e6, 30, digits=30)
        rec1, _ = hunt_pole(st, mpc(-3.5), CTL)
        z1 = complex(rec1.z)
        # come in from above the pole instead
        tr = integrate_path(st, [mpc(z1 + 0.6j)], CTL)
        rec2, _ = hunt_pole(tr.last, mpc(z1), CTL)
    assert abs(complex(rec2.z) - z1) < 2 * (rec1.err + rec2.err) + 1e-20
