"""Painleve I transseries data, pole prediction from the constant C, and verification by integration."""
from .series import (PowerSeries1x, TransseriesTable, VariableMap, compute_h0_series,
                     compute_transseries_table, map_p1_normal, x_of_z, z_of_x)
from .ratfn import Poly, RationalFn
from .transasymptotic import MatchingPoint, compute_Gm, eval_matched, pole_array
from .ode import (NormalState, P1State, P1Trajectory, StepControl, integrate_normal, integrate_path,
                  radius_bound, seed_at_infinity, taylor_coeffs_regular)
from .poles import (LaurentExpansion, PoleRecord, cross_pole, first_real_pole, laurent_from_pole,
                    locate_pole)
from .predictor import (PolePrediction, build_basis, build_hk, compute_C0, divergence_scan,
                        predict)

__version__ = "0.1.0"
