"""Joint bandwidth and pilot-overhead optimizer for a single pilot-assisted link.

The model: a block-fading channel stays constant over tiles of Tc seconds by
Bc hertz, giving Lc = Tc*Bc symbols per tile. A fraction alpha of each tile
carries pilots; the receiver forms an MMSE channel estimate and the remaining
symbols carry data at an effective SNR degraded by the estimation error. With
received power density pd = Pr/N0 fixed, widening the bandwidth W lowers the
per-symbol SNR rho = pd/W, so the achievable rate

    R(W, alpha) = (1 - alpha) * W * E[log2(1 + rho_eff * X)]

has an interior maximum in W. This module evaluates R, exposes the two
stationarity residuals, solves for the optimum, and rounds it onto the
(W = m*Bc, pilots = n) lattice.

All SNR-like quantities are linear (not dB). pd is always Pr/N0 in hertz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import SolverError
from .fading import FadingModel

LOG2E = 1.0 / math.log(2.0)

# Bandwidth-residual tolerance at the solution. The pilot residual reaches
# 1e-9 directly; the bandwidth residual passes through quadrature expectations
# whose cancellation error floors near 1e-12 in the worst case, so its
# documented acceptance bound is the looser of the two.
R_W_TOL = 1e-7
R_ALPHA_TOL = 1e-9

_BISECT_MAX_ITER = 200
_BRACKET_LO = 1e-6
_BRACKET_HI = 10.0


@dataclass(frozen=True)
class PowerDensity:
    """Received power over noise spectral density, Pr/N0, in hertz."""

    pr_over_n0_hz: float

    def __post_init__(self):
        if not (self.pr_over_n0_hz > 0.0 and math.isfinite(self.pr_over_n0_hz)):
            raise ValueError(f"Pr/N0 must be positive and finite, got {self.pr_over_n0_hz}")


def _pd_hz(pd) -> float:
    """Accept a PowerDensity or a bare float in hertz."""
    value = pd.pr_over_n0_hz if isinstance(pd, PowerDensity) else float(pd)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"Pr/N0 must be positive and finite, got {pd!r}")
    return value


@dataclass(frozen=True)
class CoherenceBlock:
    """Coherence tile: length lc = tc_s * bc_hz symbols.

    bc_hz / tc_s may be omitted when only the length matters; lattice
    operations (discretize, exhaustive_search) require bc_hz.
    """

    lc: float
    bc_hz: Optional[float] = None
    tc_s: Optional[float] = None

    def __post_init__(self):
        if not (self.lc >= 2.0 and math.isfinite(self.lc)):
            raise ValueError(f"coherence length must be >= 2 (one pilot plus one data symbol), got {self.lc}")
        if self.bc_hz is not None and not self.bc_hz > 0.0:
            raise ValueError("coherence bandwidth must be positive")
        if self.tc_s is not None and not self.tc_s > 0.0:
            raise ValueError("coherence time must be positive")
        if self.bc_hz is not None and self.tc_s is not None:
            product = self.bc_hz * self.tc_s
            if abs(product - self.lc) > 1e-9 * self.lc:
                raise ValueError(
                    f"inconsistent coherence block: tc*bc = {product} but lc = {self.lc}"
                )

    @classmethod
    def from_tc_bc(cls, tc_s: float, bc_hz: float) -> "CoherenceBlock":
        return cls(lc=tc_s * bc_hz, bc_hz=bc_hz, tc_s=tc_s)

    @classmethod
    def from_length(cls, lc: float, bc_hz: Optional[float] = None) -> "CoherenceBlock":
        return cls(lc=lc, bc_hz=bc_hz)


@dataclass(frozen=True)
class EstimationQuality:
    """MMSE split of the channel power between estimate and residual error."""

    est_power: float
    err_power: float


def estimation_quality(rho: float, alpha: float, lc: float) -> EstimationQuality:
    """Power captured by the MMSE estimate vs left in the error, summing to 1."""
    _check_point(rho, alpha, lc)
    pilot_energy = alpha * lc * rho
    est = pilot_energy / (1.0 + pilot_energy)
    return EstimationQuality(est_power=est, err_power=1.0 - est)


@dataclass(frozen=True)
class OperatingPoint:
    """A (bandwidth, pilot ratio) choice and its derived quantities."""

    w_hz: float
    alpha: float
    rho: float
    rho_eff: float
    rate_bps: float
    pilot_count: Optional[int] = None
    flags: Tuple[str, ...] = ()


class ClosedForm(NamedTuple):
    rho: float
    alpha: float
    rate_factor: float


class RefinedForm(NamedTuple):
    rho: float
    alpha: float


def _check_point(rho: float, alpha: float, lc: float) -> None:
    if not (rho > 0.0 and math.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"pilot ratio must lie in (0,1), got {alpha}")
    if not lc >= 2.0:
        raise ValueError(f"coherence length must be >= 2, got {lc}")


def effective_snr(rho: float, alpha: float, lc: float) -> float:
    """Post-estimation SNR: alpha*Lc*rho^2 / (1 + (1 + alpha*Lc)*rho).

    Strictly increasing in rho and in alpha*Lc; estimation error acts as
    extra noise, so the value never exceeds rho itself.
    """
    _check_point(rho, alpha, lc)
    return _rho_eff(rho, alpha, lc)


def _rho_eff(rho, alpha, lc):
    al = alpha * lc
    return al * rho * rho / (1.0 + (1.0 + al) * rho)


def rate(pd, w_hz: float, alpha: float, cb: CoherenceBlock, fading: FadingModel) -> float:
    """Pilot-penalized achievable rate in bits/second at bandwidth w_hz."""
    pd_hz = _pd_hz(pd)
    if not w_hz > 0.0:
        raise ValueError(f"bandwidth must be positive, got {w_hz}")
    rho = pd_hz / w_hz
    snr = effective_snr(rho, alpha, cb.lc)
    return (1.0 - alpha) * w_hz * fading.expected_log1p(snr) * LOG2E


def condition_residuals(rho: float, alpha: float, lc: float, fading: FadingModel):
    """Residuals of the two stationarity conditions; both vanish at the optimum.

    r_w    : bandwidth condition (d rate / d W = 0), expectation form.
    r_alpha: pilot condition, the polynomial rho*(alpha^2*Lc + 2*alpha - 1) - (1 - 3*alpha).
    """
    _check_point(rho, alpha, lc)
    al = alpha * lc
    denom = 1.0 + (1.0 + al) * rho
    snr = al * rho * rho / denom
    r_w = fading.expected_log1p(snr) - (1.0 + denom) / denom * (
        1.0 - fading.expected_inv1p(snr)
    )
    r_alpha = rho * (alpha * alpha * lc + 2.0 * alpha - 1.0) - (1.0 - 3.0 * alpha)
    return r_w, r_alpha


def alpha_given_rho(rho: float, lc: float) -> float:
    """Pilot ratio solving the pilot condition at a given rho.

    Uses the rationalized root of the quadratic, stable for small rho*Lc:
        alpha = (1 + rho) / (sqrt((3/2 + rho)^2 + (1 + rho)*rho*Lc) + 3/2 + rho)
    Limits: 1/3 as rho -> 0 and 1/(1 + sqrt(1 + Lc)) as rho -> inf, so for
    Lc > 3 the value always lies between those two bounds.
    """
    if not (rho > 0.0 and math.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho}")
    if not lc >= 2.0:
        raise ValueError(f"coherence length must be >= 2, got {lc}")
    b = 1.5 + rho
    return (1.0 + rho) / (math.sqrt(b * b + (1.0 + rho) * rho * lc) + b)


@lru_cache(maxsize=4096)
def _solve_rho_on_curve(lc: float, fading: FadingModel) -> float:
    """Root of the bandwidth residual along the alpha(rho) curve.

    The residual is negative below the optimum and positive above it, so a
    sign bisection converges unconditionally once bracketed. The initial
    bracket [1e-6, 10] covers every practical coherence length; it is grown
    geometrically if a pathological input escapes it.
    """

    def residual(r: float) -> float:
        return condition_residuals(r, alpha_given_rho(r, lc), lc, fading)[0]

    lo, hi = _BRACKET_LO, _BRACKET_HI
    grow = 0
    while residual(lo) > 0.0:
        lo *= 0.25
        grow += 1
        if grow > 50:
            raise SolverError(f"could not bracket the bandwidth optimum from below (lc={lc})")
    grow = 0
    while residual(hi) < 0.0:
        hi *= 4.0
        grow += 1
        if grow > 50:
            raise SolverError(f"could not bracket the bandwidth optimum from above (lc={lc})")

    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if residual(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-10 * mid:
            break
    else:
        raise SolverError(
            f"bandwidth bisection did not converge within {_BISECT_MAX_ITER} iterations (lc={lc})"
        )
    return 0.5 * (lo + hi)


@lru_cache(maxsize=4096)
def _solve_rho_fixed_alpha(alpha: float, lc: float, fading: FadingModel) -> float:
    """Root of the bandwidth residual in rho with the pilot ratio pinned."""

    def residual(r: float) -> float:
        return condition_residuals(r, alpha, lc, fading)[0]

    lo, hi = _BRACKET_LO, _BRACKET_HI
    grow = 0
    while residual(lo) > 0.0:
        lo *= 0.25
        grow += 1
        if grow > 50:
            raise SolverError("could not bracket the fixed-overhead bandwidth optimum from below")
    grow = 0
    while residual(hi) < 0.0:
        hi *= 4.0
        grow += 1
        if grow > 50:
            raise SolverError("could not bracket the fixed-overhead bandwidth optimum from above")
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if residual(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-10 * mid:
            break
    else:
        raise SolverError(f"fixed-overhead bisection did not converge within {_BISECT_MAX_ITER} iterations")
    return 0.5 * (lo + hi)


def solve_continuous(pd, cb: CoherenceBlock, fading: FadingModel) -> OperatingPoint:
    """Continuous-relaxation optimum: bandwidth and pilot ratio jointly optimal.

    Substitutes the pilot condition's alpha(rho) into the rate and bisects the
    bandwidth residual in rho, which is exact because the rate is unimodal
    along that curve. At lc == 2 the relaxation is skipped: the pilot lattice
    has the single point alpha = 1/2, so only the bandwidth is optimized and
    the result carries a "lattice_only" flag.
    """
    pd_hz = _pd_hz(pd)
    if cb.lc == 2.0:
        rho = _solve_rho_fixed_alpha(0.5, 2.0, fading)
        alpha = 0.5
        flags = ("lattice_only",)
    else:
        rho = _solve_rho_on_curve(cb.lc, fading)
        alpha = alpha_given_rho(rho, cb.lc)
        flags = ()
        r_w, r_alpha = condition_residuals(rho, alpha, cb.lc, fading)
        if abs(r_w) > R_W_TOL or abs(r_alpha) > R_ALPHA_TOL:
            raise SolverError(
                f"stationarity residuals out of tolerance at the solution: "
                f"r_w={r_w:.3e}, r_alpha={r_alpha:.3e} (lc={cb.lc})"
            )
    w = pd_hz / rho
    snr = _rho_eff(rho, alpha, cb.lc)
    rate_bps = (1.0 - alpha) * w * fading.expected_log1p(snr) * LOG2E
    return OperatingPoint(w_hz=w, alpha=alpha, rho=rho, rho_eff=snr, rate_bps=rate_bps, flags=flags)


def closed_form_first_order(lc: float) -> ClosedForm:
    """Leading-order optimum for large Lc.

    rho = (4/Lc)^(1/3), alpha = (2*Lc)^(-1/3), and the rate approaches
    rate_factor * Pr/N0 with rate_factor = (1 - (4/Lc)^(1/3)) * log2(e).
    """
    if not lc >= 2.0:
        raise ValueError(f"coherence length must be >= 2, got {lc}")
    rho = (4.0 / lc) ** (1.0 / 3.0)
    alpha = (2.0 * lc) ** (-1.0 / 3.0)
    return ClosedForm(rho=rho, alpha=alpha, rate_factor=(1.0 - rho) * LOG2E)


def closed_form_refined(lc: float) -> RefinedForm:
    """First-order forms plus empirical second-order corrections.

    rho = 2*(2Lc)^(-1/3) + (3/2)*(2Lc)^(-2/3), alpha = (2Lc)^(-1/3) + (5/8)*(2Lc)^(-2/3).
    Both corrections are positive, so refined >= first-order for every Lc.
    """
    if not lc >= 2.0:
        raise ValueError(f"coherence length must be >= 2, got {lc}")
    u = (2.0 * lc) ** (-1.0 / 3.0)
    return RefinedForm(rho=2.0 * u + 1.5 * u * u, alpha=u + 0.625 * u * u)


def _lattice_rate(pd_hz: float, m: int, n: int, cb: CoherenceBlock, fading: FadingModel) -> float:
    w = m * cb.bc_hz
    alpha = n / cb.lc
    rho = pd_hz / w
    return (1.0 - alpha) * w * fading.expected_log1p(_rho_eff(rho, alpha, cb.lc)) * LOG2E


def _pilot_bounds(lc: float) -> Tuple[int, int]:
    # integer pilot counts leaving at least one data symbol
    n_max = math.ceil(lc) - 1
    return 1, max(1, n_max)


def discretize(op: OperatingPoint, cb: CoherenceBlock, pd, fading: FadingModel) -> OperatingPoint:
    """Round a continuous optimum onto the (W = m*Bc, integer pilots) lattice.

    Evaluates the rate at all floor/ceil combinations of the two coordinates
    and keeps the best, which can only improve on naive rounding. If Bc
    already exceeds the beneficial bandwidth the floor W = Bc is returned
    with a "bandwidth_floor" flag: the relaxation's interior optimum does
    not exist on the lattice.
    """
    if cb.bc_hz is None:
        raise ValueError("discretize needs a coherence block with bc_hz set")
    pd_hz = _pd_hz(pd)
    n_lo, n_hi = _pilot_bounds(cb.lc)
    flags = tuple(op.flags)

    m_star = op.w_hz / cb.bc_hz
    if m_star < 1.0:
        m_candidates = [1]
        if "bandwidth_floor" not in flags:
            flags = flags + ("bandwidth_floor",)
    else:
        m_candidates = sorted({math.floor(m_star), math.ceil(m_star)})
    n_star = op.alpha * cb.lc
    n_candidates = sorted(
        {min(max(math.floor(n_star), n_lo), n_hi), min(max(math.ceil(n_star), n_lo), n_hi)}
    )

    best = None
    for m in m_candidates:
        for n in n_candidates:
            r = _lattice_rate(pd_hz, m, n, cb, fading)
            if best is None or r > best[0]:
                best = (r, m, n)
    rate_bps, m, n = best
    w = m * cb.bc_hz
    alpha = n / cb.lc
    rho = pd_hz / w
    return OperatingPoint(
        w_hz=w,
        alpha=alpha,
        rho=rho,
        rho_eff=_rho_eff(rho, alpha, cb.lc),
        rate_bps=rate_bps,
        pilot_count=n,
        flags=flags,
    )


def exhaustive_search(pd, cb: CoherenceBlock, fading: FadingModel, m_max: int) -> OperatingPoint:
    """Global lattice maximizer over W in {Bc..m_max*Bc} and every pilot count.

    The pilot dimension is scanned in full when the coherence length is small
    enough; otherwise a geometric coarse pass is refined to step 1 around its
    best point, and the winner is verified against its full 3x3 lattice
    neighborhood. A "maximum_at_edge" flag marks a rate still increasing at
    m_max, meaning the bracket was too small.
    """
    if cb.bc_hz is None:
        raise ValueError("exhaustive_search needs a coherence block with bc_hz set")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    pd_hz = _pd_hz(pd)
    lc = cb.lc
    n_lo, n_hi = _pilot_bounds(lc)

    if n_hi - n_lo < 4096:
        n_grid = np.arange(n_lo, n_hi + 1)
        coarse = False
    else:
        n_grid = np.unique(np.geomspace(n_lo, n_hi, 512).round().astype(int))
        coarse = True
    alpha_grid = n_grid / lc

    best_rate, best_m, best_n = -1.0, 1, n_lo
    chunk = max(1, int(4e6 // max(len(n_grid), 1)))
    for m0 in range(1, m_max + 1, chunk):
        ms = np.arange(m0, min(m0 + chunk, m_max + 1))
        w = ms[:, None] * cb.bc_hz
        rho = pd_hz / w
        al = alpha_grid[None, :] * lc
        snr = al * rho * rho / (1.0 + (1.0 + al) * rho)
        rates = (1.0 - alpha_grid[None, :]) * w * fading.expected_log1p(snr) * LOG2E
        idx = np.unravel_index(np.argmax(rates), rates.shape)
        if rates[idx] > best_rate:
            best_rate = float(rates[idx])
            best_m = int(ms[idx[0]])
            best_n = int(n_grid[idx[1]])

    if coarse:
        # refine the pilot dimension to step 1 near the coarse winner
        lo = max(n_lo, best_n // 2)
        hi = min(n_hi, best_n * 2)
        n_fine = np.arange(lo, hi + 1)
        for m in {max(1, best_m - 1), best_m, min(m_max, best_m + 1)}:
            w = m * cb.bc_hz
            rho = pd_hz / w
            al = n_fine.astype(float)  # alpha * lc is exactly the pilot count
            alpha = n_fine / lc
            snr = al * rho * rho / (1.0 + (1.0 + al) * rho)
            rates = (1.0 - alpha) * w * fading.expected_log1p(snr) * LOG2E
            i = int(np.argmax(rates))
            if rates[i] > best_rate:
                best_rate = float(rates[i])
                best_m = m
                best_n = int(n_fine[i])

    # 3x3 neighborhood certificate; also catches any coarse-pass miss locally
    improved = True
    while improved:
        improved = False
        for m in range(max(1, best_m - 1), min(m_max, best_m + 1) + 1):
            for n in range(max(n_lo, best_n - 1), min(n_hi, best_n + 1) + 1):
                r = _lattice_rate(pd_hz, m, n, cb, fading)
                if r > best_rate:
                    best_rate, best_m, best_n = r, m, n
                    improved = True

    flags = ("maximum_at_edge",) if best_m == m_max and m_max > 1 else ()
    w = best_m * cb.bc_hz
    alpha = best_n / lc
    rho = pd_hz / w
    return OperatingPoint(
        w_hz=w,
        alpha=alpha,
        rho=rho,
        rho_eff=_rho_eff(rho, alpha, lc),
        rate_bps=best_rate,
        pilot_count=best_n,
        flags=flags,
    )


def rate_fixed_bandwidth(pd, w_hz: float, cb: CoherenceBlock, fading: FadingModel) -> OperatingPoint:
    """Best rate at a pinned bandwidth, optimizing only the pilot count.

    Golden-section search on the continuous pilot ratio, then the better of
    the two integer pilot counts around it. The rate is unimodal in alpha at
    fixed W, so the section search cannot miss the basin.
    """
    pd_hz = _pd_hz(pd)
    if not w_hz > 0.0:
        raise ValueError(f"bandwidth must be positive, got {w_hz}")
    rho = pd_hz / w_hz
    lc = cb.lc

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 1e-9, 1.0 - 1e-9

    def se(alpha: float) -> float:
        return (1.0 - alpha) * fading.expected_log1p(_rho_eff(rho, alpha, lc))

    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = se(c), se(d)
    for _ in range(60):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = se(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = se(d)
    alpha_cont = 0.5 * (a + b)

    n_lo, n_hi = _pilot_bounds(lc)
    candidates = {
        min(max(math.floor(alpha_cont * lc), n_lo), n_hi),
        min(max(math.ceil(alpha_cont * lc), n_lo), n_hi),
    }
    best = None
    for n in candidates:
        alpha = n / lc
        r = (1.0 - alpha) * w_hz * fading.expected_log1p(_rho_eff(rho, alpha, lc)) * LOG2E
        if best is None or r > best[0]:
            best = (r, n)
    rate_bps, n = best
    alpha = n / lc
    return OperatingPoint(
        w_hz=w_hz,
        alpha=alpha,
        rho=rho,
        rho_eff=_rho_eff(rho, alpha, lc),
        rate_bps=rate_bps,
        pilot_count=n,
    )
