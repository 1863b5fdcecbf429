"""Townes ground state: shooting solver, optimal-constant identities, moments.

The profile solves Q'' + Q'/r - Q + Q^3 = 0 with Q'(0) = 0, positive and
decaying.  The shooting amplitude Q(0) separates two trajectory classes:
too-small amplitudes reach a positive local minimum and then grow without
bound, too-large amplitudes cross zero.  Bisection on the amplitude between
those classes pins the decaying solution.

The coordinate singularity at r=0 is removed by starting the integration from
the series Q(r) ~ Q(0) + r^2 (Q(0) - Q(0)^3)/4.  Beyond a matching radius the
profile is continued by the decaying free-field solution c*K0(r), whose
quadratic integrals have closed forms in modified Bessel functions; all
ground-state integrals are therefore accumulated along the ODE solve rather
than through grid quadrature, which leaves the three expressions for the
optimal constant (mass, Dirichlet energy, half quartic) consistent to the
integrator tolerance instead of the grid's.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.special import k0, k1, kn

from .radial import RadialFunction, RadialGrid, TWO_PI, kinetic, mass, quartic

__all__ = [
    "GroundStateData",
    "BracketError",
    "shoot_q",
    "moment",
    "gn_defect",
]

_SERIES_START = 1e-8  # radius where the power-series launch hands over to the ODE


class BracketError(RuntimeError):
    """Initial shooting bracket does not separate the two trajectory classes."""


def _rhs(r, y):
    q, dq = y
    return (dq, -dq / r + q - q**3)


def _launch_state(amplitude: float, r0: float):
    c2 = (amplitude - amplitude**3) / 4.0
    return [amplitude + c2 * r0 * r0, 2.0 * c2 * r0]


def classify_amplitude(amplitude: float, r_end: float, rtol: float = 1e-12) -> str:
    """Classify a shooting amplitude as 'cross', 'diverge' or 'clean'.

    'cross': the trajectory goes negative.  'diverge': it reaches a positive
    local minimum (after which it must grow).  'clean': neither happened
    before r_end, i.e. numerically indistinguishable from the decaying branch.
    """
    crossed = lambda r, y: y[0]
    crossed.terminal, crossed.direction = True, -1
    bottomed = lambda r, y: y[1]
    bottomed.terminal, bottomed.direction = True, 1
    sol = solve_ivp(
        _rhs,
        (_SERIES_START, r_end),
        _launch_state(amplitude, _SERIES_START),
        method="DOP853",
        rtol=rtol,
        atol=1e-14,
        events=(crossed, bottomed),
    )
    if sol.t_events[0].size:
        return "cross"
    if sol.t_events[1].size:
        return "diverge"
    return "clean"


@dataclass(frozen=True)
class GroundStateData:
    """Townes profile, its normalization, and the constants derived from it."""

    q: RadialFunction = field(repr=False)
    q0: RadialFunction = field(repr=False)
    a_star: float
    q_origin: float
    consistency_spread: float
    bracket_width: float
    tail_match_error: float
    tail_amplitude: float = field(repr=False)
    r_match: float = field(repr=False)
    _interp: object = field(repr=False, default=None)
    _moments: dict = field(default_factory=dict, repr=False)

    def moment(self, p: float) -> float:
        return moment(self, p)


def shoot_q(
    grid: RadialGrid,
    tol: float = 1e-12,
    bracket: tuple[float, float] = (2.0, 2.5),
    max_iter: int = 200,
    ode_rtol: float = 1e-12,
) -> GroundStateData:
    """Compute the Townes state on `grid` by amplitude bisection.

    `tol` is the bisection bracket width on Q(0).  Raises BracketError when the
    initial bracket does not have a diverging lower end and a crossing upper
    end, and RuntimeError when the bracket fails to shrink within max_iter.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = bracket
    r_end = grid.r_max
    if classify_amplitude(lo, r_end, ode_rtol) != "diverge":
        raise BracketError(f"lower amplitude {lo} does not diverge")
    if classify_amplitude(hi, r_end, ode_rtol) != "cross":
        raise BracketError(f"upper amplitude {hi} does not cross zero")

    iterations = 0
    while hi - lo > tol:
        iterations += 1
        if iterations > max_iter:
            raise RuntimeError(f"amplitude bisection did not reach {tol} in {max_iter} steps")
        mid = 0.5 * (lo + hi)
        kind = classify_amplitude(mid, r_end, ode_rtol)
        if kind == "cross":
            hi = mid
        elif kind == "diverge":
            lo = mid
        else:
            # indistinguishable from the decaying branch over this domain
            lo = hi = mid
            break
    amplitude = 0.5 * (lo + hi)

    # final integration with running integrals of Q^2 r, Q'^2 r, Q^4 r
    r_match = min(8.0, 0.75 * grid.r_max)
    r0 = _SERIES_START

    def rhs_full(r, y):
        q, dq = y[0], y[1]
        return (dq, -dq / r + q - q**3, q * q * r, dq * dq * r, q**4 * r)

    sol = solve_ivp(
        rhs_full,
        (r0, r_match),
        _launch_state(amplitude, r0) + [0.0, 0.0, 0.0],
        method="DOP853",
        rtol=min(ode_rtol, 1e-13),
        atol=1e-16,
        dense_output=True,
    )
    q_m, dq_m, int_mass, int_kin, int_quart = sol.y[:, -1]

    # continue with the decaying free-field solution c*K0(r)
    c_val = q_m / k0(r_match)
    c_der = -dq_m / k1(r_match)
    tail_match_error = abs(c_val / c_der - 1.0)

    k0m, k1m, k2m = k0(r_match), k1(r_match), kn(2, r_match)
    tail_mass = c_val**2 * 0.5 * r_match**2 * (k1m**2 - k0m**2)
    tail_kin = c_val**2 * 0.5 * r_match**2 * (k0m * k2m - k1m**2)
    tail_quart = quad(lambda r: (c_val * k0(r)) ** 4 * r, r_match, np.inf)[0]

    mass_q = TWO_PI * (int_mass + tail_mass)
    kin_q = TWO_PI * (int_kin + tail_kin)
    quart_q = TWO_PI * (int_quart + tail_quart)

    candidates = np.array([mass_q, kin_q, 0.5 * quart_q])
    spread = float((candidates.max() - candidates.min()) / candidates.mean())

    r = grid.nodes
    values = np.empty(grid.n)
    inside = r <= r_match
    values[inside] = sol.sol(np.maximum(r[inside], r0))[0]
    values[~inside] = c_val * k0(r[~inside])
    values[0] = amplitude
    q_prof = RadialFunction(grid, values)
    q0_prof = RadialFunction(grid, values / np.sqrt(mass(q_prof)))

    return GroundStateData(
        q=q_prof,
        q0=q0_prof,
        a_star=float(mass_q),
        q_origin=float(amplitude),
        consistency_spread=spread,
        bracket_width=float(hi - lo),
        tail_match_error=float(tail_match_error),
        tail_amplitude=float(c_val),
        r_match=float(r_match),
        _interp=sol.sol,
    )


def moment(gs: GroundStateData, p: float) -> float:
    """Weighted moment int |Q0|^2 / |x|^p dx, 0 < p < 2, cached per exponent.

    Accumulated as integrator-grade quadrature of the dense ODE solution with
    a series head below the launch radius and the Bessel tail beyond the
    matching radius, normalized by the mass integral.
    """
    if not 0.0 < p < 2.0:
        raise ValueError(f"moment exponent p must lie in (0, 2), got {p}")
    cached = gs._moments.get(p)
    if cached is not None:
        return cached
    r0 = _SERIES_START
    s = gs.q_origin
    head = s * s * r0 ** (2.0 - p) / (2.0 - p)
    body = quad(
        lambda r: gs._interp(r)[0] ** 2 * r ** (1.0 - p),
        r0,
        gs.r_match,
        limit=200,
        epsabs=1e-13,
        epsrel=1e-12,
    )[0]
    tail = quad(
        lambda r: (gs.tail_amplitude * k0(r)) ** 2 * r ** (1.0 - p),
        gs.r_match,
        np.inf,
        limit=200,
    )[0]
    value = TWO_PI * (head + body + tail) / gs.a_star
    gs._moments[p] = value
    return value


def gn_defect(u: RadialFunction, a_star: float, mass_tol: float = 1e-8) -> float:
    """Optimal-inequality defect kinetic(u) - (a_star/2)*quartic(u) for unit-mass u.

    Nonnegative up to quadrature error for every normalized profile; zero at
    the normalized ground state.
    """
    m = mass(u)
    if abs(m - 1.0) > mass_tol:
        raise ValueError(f"profile is not normalized: mass = {m!r}")
    return kinetic(u) - 0.5 * a_star * quartic(u)
