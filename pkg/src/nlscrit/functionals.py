"""Energy, Pohozaev functional, fiber maps and their critical points.

Along the mass-preserving dilation u_tau(x) = tau^(N/2) u(tau x) the energy
restricted to a fixed profile becomes an explicit function of tau,

    psi(tau) = tau^2/2 g - tau^ts/ts s - (mu/q) tau^(q gamma_q) h,

with g = ||grad u||_2^2, s = int |u|^ts, h = int |u|^q.  Its critical
points are the roots of phi(tau) = tau psi'(tau) = P(u_tau).  Below the
mass-critical exponent and in the admissible regimes the root structure is
a pair tau_plus < tau_minus (local min at negative level, global max at
nonnegative level); at the mass-critical exponent there is either one root
(a maximum) or none.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import constants as cst
from .grid import Profile, RadialGrid, grad_l2_sq, lq_norm_pow, mass

MASS_RTOL = 1e-6


class RegimeError(ValueError):
    """The requested operation has no structure in this parameter regime."""


class StructuralAnomalyError(RuntimeError):
    """Observed fiber-root structure contradicts the admissible patterns."""


@dataclass(frozen=True)
class FiberNorms:
    grad2: float   # ||grad u||_2^2
    crit: float    # int |u|^ts
    sub: float     # int |u|^q
    mass: float    # int |u|^2


def fiber_norms(params: cst.ProblemParams, grid: RadialGrid, u: Profile) -> FiberNorms:
    ex = cst.exponents(params)
    return FiberNorms(grad2=grad_l2_sq(grid, u),
                      crit=lq_norm_pow(grid, u, ex.two_star),
                      sub=lq_norm_pow(grid, u, params.q),
                      mass=mass(grid, u))


def energy(params: cst.ProblemParams, grid: RadialGrid, u: Profile) -> float:
    """E(u) = 1/2 ||grad u||^2 - 1/ts int |u|^ts - mu/q int |u|^q."""
    nm = fiber_norms(params, grid, u)
    ex = cst.exponents(params)
    return 0.5 * nm.grad2 - nm.crit / ex.two_star - params.mu / params.q * nm.sub


def pohozaev(params: cst.ProblemParams, grid: RadialGrid, u: Profile) -> float:
    """P(u) = ||grad u||^2 - int |u|^ts - mu gamma_q int |u|^q."""
    nm = fiber_norms(params, grid, u)
    ex = cst.exponents(params)
    return nm.grad2 - nm.crit - params.mu * ex.gamma_q * nm.sub


def lagrange_multiplier(params: cst.ProblemParams, grid: RadialGrid, u: Profile) -> float:
    """lambda = (||grad u||^2 - int |u|^ts - mu int |u|^q) / ||u||_2^2,
    obtained by pairing the stationary equation with u itself.  Meaningful
    when u approximately solves it; no residual check is enforced here."""
    nm = fiber_norms(params, grid, u)
    return (nm.grad2 - nm.crit - params.mu * nm.sub) / nm.mass


# ---------------------------------------------------------------------------
# fiber maps as functions of tau, given the norms of the base profile

def psi_value(params: cst.ProblemParams, nm: FiberNorms, tau) -> float | np.ndarray:
    ex = cst.exponents(params)
    tau = np.asarray(tau, dtype=float)
    with np.errstate(under="ignore"):
        out = (0.5 * tau**2 * nm.grad2
               - tau**ex.two_star * nm.crit / ex.two_star
               - params.mu / params.q * tau**ex.q_gamma_q * nm.sub)
    return float(out) if out.ndim == 0 else out


def phi_value(params: cst.ProblemParams, nm: FiberNorms, tau) -> float | np.ndarray:
    ex = cst.exponents(params)
    tau = np.asarray(tau, dtype=float)
    with np.errstate(under="ignore"):
        out = (tau**2 * nm.grad2 - tau**ex.two_star * nm.crit
               - params.mu * ex.gamma_q * tau**ex.q_gamma_q * nm.sub)
    return float(out) if out.ndim == 0 else out


def psi_second(params: cst.ProblemParams, nm: FiberNorms, tau: float) -> float:
    ex = cst.exponents(params)
    ts, gq = ex.two_star, ex.q_gamma_q
    return (nm.grad2 - (ts - 1.0) * tau ** (ts - 2.0) * nm.crit
            - params.mu * ex.gamma_q * (gq - 1.0) * tau ** (gq - 2.0) * nm.sub)


@dataclass(frozen=True)
class FiberReport:
    tau_plus: float | None
    tau_minus: float | None            # at critical q this is the single root
    e_at_tau_plus: float | None
    e_at_tau_minus: float | None
    psi_second_at_tau_minus: float | None
    strictly_decreasing: bool          # critical q, no root: psi < 0 and falling
    samples: list = field(default_factory=list, repr=False)  # (tau, psi, phi)


def _reduced(params, nm, ex):
    """phi(tau) / tau^(q gamma_q): increases to a single peak, then falls."""
    ts, gq = ex.two_star, ex.q_gamma_q

    def red(tau: float) -> float:
        return (nm.grad2 * tau ** (2.0 - gq) - nm.crit * tau ** (ts - gq)
                - params.mu * ex.gamma_q * nm.sub)
    peak = ((2.0 - gq) * nm.grad2 / ((ts - gq) * nm.crit)) ** (1.0 / (ts - 2.0))
    return red, peak


def fiber_critical_points(params: cst.ProblemParams, grid: RadialGrid, u: Profile,
                          thresholds: cst.Thresholds | None = None,
                          n_samples: int = 512) -> FiberReport:
    """Locate the dilation parameters where P(u_tau) = 0.

    Requires u on the mass sphere (relative tolerance MASS_RTOL).  Below the
    mass-critical exponent the admissible regimes are Omega1/Omega2; above
    the threshold curve no root structure is described and the call is
    refused.  At the mass-critical exponent the unique root exists iff
    ||grad u||^2 > mu gamma_q int |u|^q and has a closed form, which is
    cross-checked against a log-spaced scan.
    """
    nm = fiber_norms(params, grid, u)
    if abs(nm.mass - params.a) > MASS_RTOL * params.a:
        raise ValueError(
            f"u is not on the mass sphere: ||u||_2^2 = {nm.mass:.12g}, a = {params.a:.12g}")
    ex = cst.exponents(params)
    if ex.q_class == "supercritical":
        raise RegimeError("no fiber analysis above the mass-critical exponent")

    taus = np.logspace(-6.0, 6.0, n_samples)
    samples = list(zip(taus.tolist(),
                       np.asarray(psi_value(params, nm, taus)).tolist(),
                       np.asarray(phi_value(params, nm, taus)).tolist()))

    if ex.q_class == "critical":
        excess = nm.grad2 - params.mu * ex.gamma_q * nm.sub
        if excess <= 0.0:
            return FiberReport(tau_plus=None, tau_minus=None, e_at_tau_plus=None,
                               e_at_tau_minus=None, psi_second_at_tau_minus=None,
                               strictly_decreasing=True, samples=samples)
        tau_u = (excess / nm.crit) ** (1.0 / (ex.two_star - 2.0))
        # scan cross-check: phi must change sign exactly once, near tau_u
        sgn = np.sign([p for _, _, p in samples])
        flips = np.flatnonzero(np.diff(sgn) != 0)
        if flips.size != 1:
            raise StructuralAnomalyError(
                f"expected a single fiber root at critical q, scan found {flips.size}")
        return FiberReport(tau_plus=None, tau_minus=tau_u, e_at_tau_plus=None,
                           e_at_tau_minus=psi_value(params, nm, tau_u),
                           psi_second_at_tau_minus=psi_second(params, nm, tau_u),
                           strictly_decreasing=False, samples=samples)

    if thresholds is None:
        thresholds = cst.thresholds(params)
    if thresholds.regime is cst.Regime.OMEGA3:
        raise RegimeError(
            "no two-root fiber structure is available above the threshold curve "
            "(regime Omega3); refuse rather than guess")

    red, peak = _reduced(params, nm, ex)
    if red(peak) <= 0.0:
        raise StructuralAnomalyError(
            "fiber map has no root although the regime guarantees two; "
            "the profile may be under-resolved on this grid")
    lo = peak
    while red(lo) > 0.0:
        lo /= 2.0
        if lo < 1e-14:
            raise StructuralAnomalyError("no lower fiber root above tau = 1e-14")
    hi = peak
    while red(hi) > 0.0:
        hi *= 2.0
        if hi > 1e14:
            raise StructuralAnomalyError("no upper fiber root below tau = 1e14")
    tau_p = brentq(red, lo, peak, xtol=1e-300, rtol=8.9e-16)
    tau_m = brentq(red, peak, hi, xtol=1e-300, rtol=8.9e-16)
    return FiberReport(tau_plus=tau_p, tau_minus=tau_m,
                       e_at_tau_plus=psi_value(params, nm, tau_p),
                       e_at_tau_minus=psi_value(params, nm, tau_m),
                       psi_second_at_tau_minus=psi_second(params, nm, tau_m),
                       strictly_decreasing=False, samples=samples)
