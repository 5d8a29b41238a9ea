"""Reference transmission schemes the pilot-assisted optimizer is judged against.

Rates are bits/second given pd = Pr/N0 in hertz; spectral efficiencies are
bits/s/Hz. The full-CSIR infinite-bandwidth rate pd*log2(e) upper-bounds
every scheme here.
"""

from __future__ import annotations

import math
import warnings

from . import core
from .core import LOG2E, CoherenceBlock
from .fading import FadingModel

CSIR_INFINITE_BW = "csir-infinite-bw"
CSIR_FINITE_BW = "csir-finite-bw"
PEAKY_FSK = "peaky-fsk"
NON_PEAKY_MI = "non-peaky-mi"
MI_LOWER_BOUND = "mi-lower-bound"
PILOT_POWER_BOOST = "pilot-power-boost"


def csir_rate(pd, w_hz=None, fading: FadingModel = None) -> float:
    """Rate with a genie-provided channel estimate.

    w_hz None (or inf) gives the wideband limit pd*log2(e); a finite
    bandwidth gives W*E[log2(1 + (pd/W)*X)], strictly increasing in W with
    the wideband limit as supremum.
    """
    pd_hz = core._pd_hz(pd)
    if w_hz is None or w_hz == math.inf:
        return pd_hz * LOG2E
    if not w_hz > 0.0:
        raise ValueError(f"bandwidth must be positive, got {w_hz}")
    if fading is None:
        raise ValueError("finite-bandwidth CSIR rate needs a fading model")
    return w_hz * fading.expected_log1p(pd_hz / w_hz) * LOG2E


def peaky_fsk_rate(pd, lc: float) -> float:
    """Duty-cycled wideband FSK: (1 - 1/Lc) * pd * log2(e).

    The only non-coherent scheme here whose penalty decays as fast as 1/Lc.
    """
    pd_hz = core._pd_hz(pd)
    if not lc >= 1.0:
        raise ValueError(f"coherence length must be >= 1, got {lc}")
    return (1.0 - 1.0 / lc) * pd_hz * LOG2E


def non_peaky_mi_rate(pd, lc: float, fading: FadingModel) -> float:
    """Wideband mutual information under an average-power (non-peaky) constraint.

    (1 - sqrt(kappa * ln(pi) * ln(Lc) / Lc)) * pd * log2(e), with kappa the
    channel kurtosis and natural logarithms throughout. The bracket is an
    asymptotic penalty; when it goes negative at small Lc the rate clamps to
    zero with a warning.
    """
    pd_hz = core._pd_hz(pd)
    if not lc > 1.0:
        raise ValueError(f"coherence length must be > 1, got {lc}")
    bracket = 1.0 - math.sqrt(fading.kurtosis() * math.log(math.pi) * math.log(lc) / lc)
    if bracket < 0.0:
        warnings.warn(
            f"non-peaky penalty exceeds 1 at lc={lc} (kurtosis {fading.kurtosis():.3g}); "
            "rate clamped to 0",
            stacklevel=2,
        )
        return 0.0
    return bracket * pd_hz * LOG2E


def mi_lower_bound_se(rho: float, lc: float) -> float:
    """Spectral efficiency bound log2(1 + rho) - log2(1 + rho*Lc)/Lc.

    Nonnegative for every rho >= 0, Lc >= 1; behaves as rho^2*(Lc-1)/2 * log2(e)
    for small rho, which is the quadratic low-SNR penalty regime.
    """
    if rho < 0.0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if not lc >= 1.0:
        raise ValueError(f"coherence length must be >= 1, got {lc}")
    return math.log2(1.0 + rho) - math.log2(1.0 + rho * lc) / lc


def equal_power_se(rho: float, alpha: float, lc: float, fading: FadingModel) -> float:
    """Spectral efficiency of the equal-power pilot scheme, bits/s/Hz."""
    return (1.0 - alpha) * fading.expected_log1p(core.effective_snr(rho, alpha, lc)) * LOG2E


def pilot_power_boost_se(rho: float, alpha: float, lc: float, fading: FadingModel) -> float:
    """Spectral efficiency when pilot symbols carry more power than data symbols.

    One pilot symbol per block takes power rho_pilot = alpha*Lc*rho and the
    Lc-1 data symbols take rho_data = (1-alpha)*rho*Lc/(Lc-1), preserving the
    average power rho exactly. Near the joint optimum the advantage over the
    equal-power scheme is negligible; at high SNR with heavy overhead it is
    strictly positive.
    """
    if not lc >= 2.0:
        raise ValueError(f"coherence length must be >= 2, got {lc}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"pilot ratio must lie in (0,1), got {alpha}")
    if not (rho > 0.0 and math.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho}")
    rho_pilot = alpha * lc * rho
    rho_data = (1.0 - alpha) * rho * lc / (lc - 1.0)
    est_share = rho_pilot / (1.0 + rho_pilot)
    snr = rho_data * est_share / (1.0 + rho_data / (1.0 + rho_pilot))
    return (1.0 - 1.0 / lc) * fading.expected_log1p(snr) * LOG2E


def boost_power_identity_gap(rho: float, alpha: float, lc: float) -> float:
    """Average-power bookkeeping residual of the boost split; zero up to rounding."""
    rho_pilot = alpha * lc * rho
    rho_data = (1.0 - alpha) * rho * lc / (lc - 1.0)
    return (rho_pilot / lc + (lc - 1.0) / lc * rho_data) - rho
