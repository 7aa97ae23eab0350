"""Stabilized explicit Runge-Kutta schemes for optimal control.

Chebyshev (order 1) and RKC (order 2) recurrences for the state, their
explicit double-adjoint recurrences for the costate, and the outer
fixed-point iteration that couples them through control stationarity.
"""

from .errors import *  # noqa: F401,F403
from .chebkernel import ChebEval, cheb_eval, cheb_table, cheb_values
from .tableau import ButcherTableau, double_adjoint, stability_function
from .stabcoeffs import (
    StabilizedCoefficients,
    cheb1_coeffs,
    classical_rkc_coeffs,
    coefficients,
    rkc2_coeffs,
    select_stages,
    unroll_tableau,
)
from .ivp import integrate
from .problems import BurgersGrid, ControlProblem, burgers_problem, hager_problem, make_problem, stiff_sp_problem
from .sweeps import SweepRecord, StationaritySolver

__version__ = "0.1.0"
