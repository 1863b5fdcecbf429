"""Small-b sweeps, scaled-energy records, and limit extrapolation.

A sweep minimizes at a decreasing list of b values, warm-starting each point
from the previous frame profile.  At a = a* the relevant scaled quantities are

    scaled_energy    = b^(p/(4-p)) * E(b)        -> closed-form limit
    kinetic_scaled   = b^(2/(4-p)) * K(u_b)      bounded
    potential_scaled = b^(p/(4-p)) * S_p(u_b)    bounded away from 0

and the rescaled minimizer w_b(x) = eps*u_b(eps*x), eps = b^(1/(4-p)),
converges in H1 to the dilated normalized ground state.  For a > a* the
recorded scaled energy is b*E(b).  Limits are estimated by fitting
y(b) = L + c*b^gamma over the sweep, since no convergence rate is available
a priori.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .energy import EnergyBreakdown, ModelParams, blowup_scale_limit
from .flow import FlowOptions, MinimizeResult, minimize
from .radial import RadialFunction, h1_distance, kinetic, rescale_profile
from .townes import GroundStateData, moment

__all__ = [
    "SweepRecord",
    "LimitFit",
    "run_sweep",
    "estimate_limit",
    "fit_power_limit",
    "profile_convergence",
]


@dataclass(frozen=True)
class SweepRecord:
    b: float
    energy: EnergyBreakdown
    scaled_energy: float
    beta_est: float
    profile_h1: float  # nan when no limiting profile is predicted (a > a*)
    kinetic_scaled: float
    potential_scaled: float
    mu: float
    residual: float
    iterations: int
    converged: bool
    profile: RadialFunction = field(repr=False)  # frame coordinates


@dataclass(frozen=True)
class LimitFit:
    estimate: float
    rate: float  # nan flags the last-sample fallback
    residual: float
    samples_used: int


def run_sweep(
    gs: GroundStateData,
    p: float,
    b_list,
    *,
    a_ratio: float = 1.0,
    opts: FlowOptions | None = None,
) -> list[SweepRecord]:
    """One record per b, warm-started in decreasing b order.

    a_ratio = 1 runs the critical case (limit profile diagnostics filled in);
    a_ratio > 1 runs the supercritical case.  Nonconvergent points are flagged
    in their record and the sweep continues from the best iterate.
    """
    b_arr = [float(b) for b in b_list]
    if not b_arr or any(b <= 0 for b in b_arr):
        raise ValueError("b_list must contain positive values")
    if any(b2 >= b1 for b1, b2 in zip(b_arr, b_arr[1:])):
        raise ValueError("b_list must be strictly decreasing for warm-started sweeps")
    if a_ratio < 1.0:
        raise ValueError("sweeps cover a >= a_star; got a_ratio < 1")
    if opts is None:
        opts = FlowOptions(frame="blowup", residual_tol=1e-5)

    m_p = moment(gs, p)
    critical = a_ratio == 1.0
    if critical:
        init_scale = blowup_scale_limit(p, m_p)
        reference = rescale_profile(gs.q0, init_scale)
    else:
        init_scale = math.sqrt((a_ratio - 1.0) / 2.0)
        reference = None
    current = rescale_profile(gs.q0, init_scale)

    records = []
    for b in b_arr:
        params = ModelParams(a=a_ratio * gs.a_star, b=b, p=p)
        result = minimize(params, current, opts, a_star=gs.a_star)
        current = result.profile
        records.append(_make_record(result, params, critical, reference))
    return records


def _make_record(
    result: MinimizeResult,
    params: ModelParams,
    critical: bool,
    reference: RadialFunction | None,
) -> SweepRecord:
    b, p = params.b, params.p
    total = result.breakdown.total
    kin_phys = result.breakdown.kinetic
    pot_phys = -result.breakdown.potential  # the singular moment itself
    scaled = b ** (p / (4.0 - p)) * total if critical else b * total
    kinetic_scaled = b ** (2.0 / (4.0 - p)) * kin_phys
    potential_scaled = b ** (p / (4.0 - p)) * pot_phys
    beta_est = math.sqrt(kinetic_scaled)
    if critical and reference is not None:
        profile_h1 = h1_distance(result.profile, reference)
    else:
        profile_h1 = float("nan")
    return SweepRecord(
        b=b,
        energy=result.breakdown,
        scaled_energy=scaled,
        beta_est=beta_est,
        profile_h1=profile_h1,
        kinetic_scaled=kinetic_scaled,
        potential_scaled=potential_scaled,
        mu=result.mu,
        residual=result.residual,
        iterations=result.iterations,
        converged=result.converged,
        profile=result.profile,
    )


def profile_convergence(record_profile: RadialFunction, gs: GroundStateData, p: float):
    """(beta_est, profile_h1) of a rescaled minimizer against its predicted limit.

    The profile must already be in blow-up coordinates w_b = eps*u_b(eps*x);
    then kinetic(w_b)^(1/2) estimates the limiting dilation and the H1 distance
    is measured against the ground state dilated by the closed-form value.
    """
    beta_est = math.sqrt(kinetic(record_profile))
    target = rescale_profile(gs.q0, blowup_scale_limit(p, moment(gs, p)))
    return beta_est, h1_distance(record_profile, target)


def estimate_limit(records, column: str) -> LimitFit:
    """Fit a scaled column as L + c*b^gamma over the converged records."""
    usable = [r for r in records if r.converged and np.isfinite(getattr(r, column))]
    if len(usable) < 3:
        raise ValueError(f"limit fit needs at least 3 converged records, got {len(usable)}")
    b = np.array([r.b for r in usable])
    y = np.array([float(getattr(r, column)) for r in usable])
    return fit_power_limit(b, y)


def fit_power_limit(b, y) -> LimitFit:
    """Nonlinear least squares for the limit L of a scaled sweep column.

    Samples are sorted by b; with 9 or more of them only the smallest-b two
    thirds enter the fit, since the asymptotic model carries the most error at
    the large-b end of a multi-decade sweep.  The model is
    y = L + c1*b^gamma + c2*b^(2*gamma) when at least 6 samples remain (the
    second term absorbs the next correction order) and a single power
    otherwise.  Record order never matters.  Falls back to the smallest-b
    sample with rate = nan when the fit is ill-conditioned.
    """
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=float)
    if b.size < 3:
        raise ValueError("power-law fit needs at least 3 samples")
    order = np.argsort(b)
    b, y = b[order], y[order]
    n_used = int(b.size if b.size < 9 else math.ceil(2 * b.size / 3))
    b, y = b[:n_used], y[:n_used]
    two_term = b.size >= 6

    def design_for(gamma):
        cols = [np.ones_like(b), b**gamma]
        if two_term:
            cols.append(b ** (2.0 * gamma))
        return np.column_stack(cols)

    best = None
    for gamma in np.linspace(0.05, 2.0, 79):
        design = design_for(gamma)
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        ssr = float(np.sum((y - design @ coef) ** 2))
        if best is None or ssr < best[0]:
            best = (ssr, coef, gamma)

    def model_residual(theta):
        gamma = theta[-1]
        return y - design_for(gamma) @ theta[:-1]

    try:
        n_lin = 3 if two_term else 2
        fit = least_squares(
            model_residual,
            x0=[*best[1], best[2]],
            bounds=([-np.inf] * n_lin + [0.01], [np.inf] * n_lin + [4.0]),
        )
        if not np.all(np.isfinite(fit.x)):
            raise RuntimeError("non-finite fit")
        rms = float(np.sqrt(np.mean(fit.fun**2)))
        return LimitFit(float(fit.x[0]), float(fit.x[-1]), rms, int(b.size))
    except Exception:
        scale = float(abs(y[0] - y[1]))
        return LimitFit(float(y[0]), float("nan"), scale, int(b.size))
