"""Special radial profiles: scalar-field ground states, extremal bubbles,
cutoff families, Gaussians and trial functions.

The ground state solved here is the positive decreasing solution of

    A u'' + A (N-1)/r u' - B u + |u|^(q-2) u = 0,
    A = (q-2) N / 4,   B = 1 + (q-2)(2-N)/4,

found by bisection shooting on u(0): initial heights that are too large
produce a sign crossing, too small a turning point; the ground state sits
on the boundary.  Its far field decays like r^(-(N-1)/2) exp(-kappa r),
kappa = sqrt(B/A), which is also used to extend the sampled profile past
the last reliable integration point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from .grid import Profile, RadialGrid, lq_norm_pow, mass


def ode_coefficients(dim: int, q: float) -> tuple[float, float]:
    A = (q - 2.0) * dim / 4.0
    B = 1.0 + (q - 2.0) * (2.0 - dim) / 4.0
    if A <= 0.0 or B <= 0.0:
        raise ValueError(f"no ground state normalization for dim={dim}, q={q}")
    return A, B


def weinstein_decay_rate(dim: int, q: float) -> float:
    A, B = ode_coefficients(dim, q)
    return math.sqrt(B / A)


@dataclass(frozen=True)
class ShootingConfig:
    sigma_lo: float | None = None      # bracket endpoints for u(0); autodetected if None
    sigma_hi: float | None = None
    step: float = 2.0e-3               # RK4 step during bisection
    step_final: float = 1.0e-3         # RK4 step for the returned trajectory
    bracket_rtol: float = 1.0e-12
    decay_threshold: float = 1.0e-13   # relative height at which decay is accepted
    max_bisect: int = 200
    r_end_factor: float = 60.0         # integrate to r_end_factor / kappa


@dataclass(frozen=True)
class ShootingReport:
    sigma: float
    bracket_width: float
    bisections: int
    kappa: float
    r_match: float
    residual_max: float


class ShootingError(RuntimeError):
    pass


def _integrate(dim: int, q: float, sigma: float, h: float, r_end: float,
               decay_threshold: float, store: bool = False):
    """RK4 march; classify as 'cross' | 'turn' | 'decay'."""
    A, B = ode_coefficients(dim, q)
    nm1 = dim - 1.0

    def acc(r, u, v):
        return (B * u - abs(u) ** (q - 2.0) * u) / A - nm1 * v / r

    r0 = 1.0e-6
    upp0 = (B * sigma - sigma ** (q - 1.0)) / (A * dim)
    u = sigma + 0.5 * upp0 * r0 * r0
    v = upp0 * r0
    r = r0
    tiny = decay_threshold * sigma
    out = [] if store else None
    nsteps = int(math.ceil((r_end - r0) / h))
    for _ in range(nsteps):
        if store:
            out.append((r, u, v))
        if u < 0.0:
            return "cross", r, out
        if v > 0.0 and u < 0.6 * sigma:
            return "turn", r, out
        if u > 2.0 * sigma:
            return "turn", r, out
        if 0.0 < u < tiny and v < 0.0:
            return "decay", r, out
        k1u = v
        k1v = acc(r, u, v)
        k2u = v + 0.5 * h * k1v
        k2v = acc(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v)
        k3u = v + 0.5 * h * k2v
        k3v = acc(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v)
        k4u = v + h * k3v
        k4v = acc(r + h, u + h * k3u, v + h * k3v)
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        r += h
    return "decay", r, out


@lru_cache(maxsize=32)
def _shoot(dim: int, q: float, cfg: ShootingConfig):
    """Bisect on u(0); return dense trajectory of the ground state."""
    A, B = ode_coefficients(dim, q)
    kappa = math.sqrt(B / A)
    r_end = min(cfg.r_end_factor / kappa, 600.0)

    lo, hi = cfg.sigma_lo, cfg.sigma_hi
    if lo is None or hi is None:
        rest = B ** (1.0 / (q - 2.0))
        s = 1.2 * rest
        lo = None
        for _ in range(80):
            kind, _, _ = _integrate(dim, q, s, cfg.step, r_end, cfg.decay_threshold)
            if kind == "cross":
                hi = s
                break
            lo = s
            s *= 1.5
        else:
            raise ShootingError(f"no crossing trajectory found up to u(0)={s:.3e}")
        if lo is None:
            lo = hi / 1.5
    else:
        k_lo, _, _ = _integrate(dim, q, lo, cfg.step, r_end, cfg.decay_threshold)
        k_hi, _, _ = _integrate(dim, q, hi, cfg.step, r_end, cfg.decay_threshold)
        if not (k_lo != "cross" and k_hi == "cross"):
            raise ShootingError(
                f"bracket ({lo}, {hi}) does not straddle the crossing dichotomy "
                f"(classified {k_lo}/{k_hi})")

    nb = 0
    for nb in range(cfg.max_bisect):
        if hi - lo <= cfg.bracket_rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        kind, _, _ = _integrate(dim, q, mid, cfg.step, r_end, cfg.decay_threshold)
        if kind == "cross":
            hi = mid
        else:
            lo = mid
    else:
        raise ShootingError(f"bisection failed to converge; last bracket ({lo}, {hi})")

    sigma = 0.5 * (lo + hi)
    _, _, traj = _integrate(dim, q, sigma, cfg.step_final, r_end,
                            cfg.decay_threshold, store=True)
    tr = np.asarray(traj)
    r, u, v = tr[:, 0], tr[:, 1], tr[:, 2]

    # keep the monotone decaying part only
    iend = len(u)
    bad = np.flatnonzero(u <= 0.0)
    if bad.size:
        iend = bad[0]
    turning = np.flatnonzero((v[:iend] > 0.0) & (r[:iend] > 1.0))
    if turning.size:
        iend = turning[0]
    if iend < 16:
        raise ShootingError("degenerate trajectory after bisection")
    r, u, v = r[:iend], u[:iend], v[:iend]

    # 4th-order residual check, independent of the RK4 right-hand side
    h = cfg.step_final
    upp = (-u[4:] + 16.0 * u[3:-1] - 30.0 * u[2:-2] + 16.0 * u[1:-3] - u[:-4]) / (12.0 * h * h)
    up = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * h)
    rm = r[2:-2]
    res = A * (upp + (dim - 1.0) * up / rm) - B * u[2:-2] + np.abs(u[2:-2]) ** (q - 2.0) * u[2:-2]
    report = ShootingReport(sigma=sigma, bracket_width=hi - lo, bisections=nb,
                            kappa=kappa, r_match=r[-1],
                            residual_max=float(np.max(np.abs(res))))
    return r, u, report


def weinstein_ground_state(dim_or_params, q: float | None = None,
                           grid: RadialGrid | None = None,
                           config: ShootingConfig | None = None,
                           with_report: bool = False):
    """Ground state of the scalar field equation, sampled on `grid`.

    Accepts either (dim, q, grid) or (params, grid).  Beyond the last
    integration point the analytic far field
    u(r_m) (r_m/r)^((N-1)/2) exp(-kappa (r - r_m)) is used.
    """
    if q is None or isinstance(q, RadialGrid):
        params = dim_or_params
        grid = q if isinstance(q, RadialGrid) else grid
        dim, qq = params.dim, params.q
    else:
        dim, qq = int(dim_or_params), float(q)
    if grid is None:
        raise ValueError("a sampling grid is required")
    cfg = config or ShootingConfig()
    r_ode, u_ode, report = _shoot(dim, qq, cfg)

    interp = PchipInterpolator(np.concatenate([[0.0], r_ode]),
                               np.concatenate([[u_ode[0]], u_ode]),
                               extrapolate=False)
    r_m = r_ode[-1]
    u_m = u_ode[-1]
    nodes = grid.nodes
    vals = np.empty_like(nodes)
    inside = nodes <= r_m
    vals[inside] = interp(nodes[inside])
    out = ~inside
    with np.errstate(under="ignore"):
        vals[out] = u_m * (r_m / nodes[out]) ** ((dim - 1.0) / 2.0) \
            * np.exp(-report.kappa * (nodes[out] - r_m))
    prof = Profile(grid, vals)
    if with_report:
        return prof, report
    return prof


def aubin_talenti(dim: int, b: float, grid: RadialGrid, amplitude: float = 1.0) -> Profile:
    """Extremal bubble amplitude * (b / (b^2 + r^2))^((N-2)/2)."""
    if b <= 0.0 or amplitude <= 0.0:
        raise ValueError("b and amplitude must be positive")
    r = grid.nodes
    vals = amplitude * (b / (b * b + r * r)) ** ((dim - 2.0) / 2.0)
    return Profile(grid, vals)


# ---------------------------------------------------------------------------
# cutoff machinery

def smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic smoothstep: 0 at t<=0, 1 at t>=1, C^2 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)


def cutoff_factors(r: np.ndarray, n_cut: float):
    """(phi, 1-phi) for the radial cutoff that is 1 on [0, n] and 0 beyond 2n.

    The complement is returned separately because 1 - phi underflows in the
    region where phi is within rounding of 1; downstream tail computations
    need it to full relative accuracy."""
    s = smoothstep((np.asarray(r) - n_cut) / n_cut)
    return 1.0 - s, s


def cutoff_profile(u: Profile, n_cut: float) -> Profile:
    """v(r) = phi(r/n) u(r): identical to u on B_n, zero outside B_2n."""
    if 2.0 * n_cut > u.grid.r_max:
        raise ValueError(f"cutoff support 2n = {2*n_cut} exceeds r_max = {u.grid.r_max}")
    phi, _ = cutoff_factors(u.grid.nodes, n_cut)
    return Profile(u.grid, phi * u.values)


def gaussian(params, sigma: float, grid: RadialGrid) -> Profile:
    """c exp(-r^2 / (2 sigma^2)) with int |.|^2 = a analytically."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    N = grid.dim
    c = math.sqrt(params.a) / (sigma ** (N / 2.0) * math.pi ** (N / 4.0))
    with np.errstate(under="ignore"):
        vals = c * np.exp(-grid.nodes ** 2 / (2.0 * sigma ** 2))
    return Profile(grid, vals)


def normalize_mass_lq(params, u: Profile, a: float | None = None) -> Profile:
    """Rescale u to alpha u(beta x) with ||.||_2^2 = a and ||.||_q = 1.

    Only meaningful at the mass-critical exponent q = 2 + 4/N, where the
    two normalizations can be met simultaneously while the Gagliardo-
    Nirenberg quotient of u is preserved.
    """
    from . import constants

    if not constants.is_critical(params):
        raise ValueError("the joint mass/Lq normalization requires q = 2 + 4/N")
    if a is None:
        a = params.a
    g = u.grid
    N, q = g.dim, params.q
    l2 = math.sqrt(mass(g, u))
    lq = lq_norm_pow(g, u, q) ** (1.0 / q)
    if l2 == 0.0 or lq == 0.0:
        raise ValueError("cannot normalize the zero profile")
    x = l2 / (math.sqrt(a) * lq)
    alpha = x ** (N / 2.0) / lq
    beta = x ** (q / 2.0)
    if abs(beta - 1.0) < 1e-12:      # already normalized: no resampling noise
        return Profile(g, alpha * u.values)
    from .grid import rescale
    # alpha u(beta r) = (alpha / beta^(N/2)) * [beta^(N/2) u(beta r)]
    scaled = rescale(u, beta)
    return Profile(g, (alpha / beta ** (N / 2.0)) * scaled.values)


# ---------------------------------------------------------------------------
# seeded trial functions for scans and probes

@dataclass(frozen=True)
class TrialFunction:
    """Gaussian with a low-order polynomial modulation; closed form, so it
    can be dilated exactly before sampling."""

    sigma: float
    coeffs: tuple[float, float, float]

    def __call__(self, r: np.ndarray) -> np.ndarray:
        t = np.asarray(r) / self.sigma
        c1, c2, c3 = self.coeffs
        p = 1.0 + t * (c1 + t * (c2 + t * c3))
        with np.errstate(under="ignore"):
            return p * np.exp(-0.5 * t * t)

    def profile(self, grid: RadialGrid, target_mass: float, tau: float = 1.0) -> Profile:
        """Sample the tau-dilation tau^(N/2) f(tau r), renormalized to the
        requested mass on the grid."""
        vals = tau ** (grid.dim / 2.0) * self(tau * grid.nodes)
        m = float(np.dot(grid.full_weights, vals * vals))
        return Profile(grid, vals * math.sqrt(target_mass / m))


def random_trial(rng: np.random.Generator, sigma_range=(0.6, 2.5),
                 coeff_scale: float = 0.3) -> TrialFunction:
    lo, hi = sigma_range
    sigma = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    coeffs = tuple(rng.uniform(-coeff_scale, coeff_scale, size=3))
    return TrialFunction(sigma=sigma, coeffs=coeffs)
