"""Beam-switching antenna arrays reduced to the single-antenna optimizer.

A transmitter sweeping Kt candidate beams spends pilot energy on every
candidate, while data flows only through the selected beam with estimation
gain G1 and post-selection combining gain G2. That folds into the scalar
problem by substituting

    rho_tilde = G1 * G2 * rho          (stronger per-symbol SNR)
    lc_tilde  = Lc / (Kt * G2)         (coherence shared across the sweep)

so every result from `core` carries over; this module owns the bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from . import core
from .core import LOG2E, CoherenceBlock, OperatingPoint, ClosedForm
from .errors import ConfigError
from .fading import FadingModel

EXPLICIT = "explicit"
IDEAL_DIRECTIONAL = "ideal-directional"
RICH_SCATTERING = "rich-scattering"


@dataclass(frozen=True)
class ArrayConfig:
    """Antenna counts plus the three scalars the optimizer consumes.

    nt, nr: transmit / receive element counts.
    kt:     candidate beams swept with pilots.
    g1:     mean gain through the selected beam during estimation, <= nt*nr.
    g2:     combining gain applied from the data stage on, <= nr.
    """

    nt: int
    nr: int
    kt: int
    g1: float
    g2: float
    gain_model: str = EXPLICIT

    def __post_init__(self):
        for name, v in (("nt", self.nt), ("nr", self.nr), ("kt", self.kt)):
            if not (isinstance(v, int) and v >= 1):
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        if not self.g1 >= 1.0:
            raise ValueError(f"g1 must be >= 1, got {self.g1}")
        if not self.g2 >= 1.0:
            raise ValueError(f"g2 must be >= 1, got {self.g2}")
        if self.g1 > self.nt * self.nr * (1.0 + 1e-12):
            raise ValueError(f"g1 = {self.g1} exceeds nt*nr = {self.nt * self.nr}")
        if self.g2 > self.nr * (1.0 + 1e-12):
            raise ValueError(f"g2 = {self.g2} exceeds nr = {self.nr}")
        if self.gain_model not in (EXPLICIT, IDEAL_DIRECTIONAL, RICH_SCATTERING):
            raise ValueError(f"unknown gain model {self.gain_model!r}")

    @classmethod
    def siso(cls) -> "ArrayConfig":
        return cls(nt=1, nr=1, kt=1, g1=1.0, g2=1.0)

    @classmethod
    def ideal_directional(cls, nt: int, nr: int) -> "ArrayConfig":
        """Perfectly directional elements: full array gain, one beam pair per element pair."""
        return cls(nt=nt, nr=nr, kt=nt * nr, g1=float(nt * nr), g2=1.0,
                   gain_model=IDEAL_DIRECTIONAL)

    @classmethod
    def rich_scattering(cls, nt: int, nr: int) -> "ArrayConfig":
        """I.i.d. channel entries: the hottest of nt*nr beams averages nt+nr."""
        return cls(nt=nt, nr=nr, kt=nt * nr, g1=float(nt + nr), g2=1.0,
                   gain_model=RICH_SCATTERING)

    @classmethod
    def simo(cls, nr: int, g2: float = None) -> "ArrayConfig":
        """Receive combining only: no beam sweep, estimation sees a single antenna."""
        g2 = float(nr) if g2 is None else float(g2)
        return cls(nt=1, nr=nr, kt=1, g1=1.0, g2=g2)

    @classmethod
    def miso(cls, nt: int, kt: int = None, g1: float = None) -> "ArrayConfig":
        """Transmit beam sweep with a single receive antenna."""
        kt = nt if kt is None else kt
        g1 = float(nt) if g1 is None else float(g1)
        return cls(nt=nt, nr=1, kt=kt, g1=g1, g2=1.0)


@dataclass(frozen=True)
class SubstitutedProblem:
    """Scalar-problem view of an array link."""

    lc_tilde: float
    gain: float          # G1*G2, multiplies the power density
    sweep_penalty: float  # Kt*G2, divides the coherence length

    @property
    def gain_pair(self) -> Tuple[float, float]:
        return self.gain, self.sweep_penalty


def substitute(cfg: ArrayConfig, cb: CoherenceBlock) -> SubstitutedProblem:
    """Effective coherence length and gain pair for the scalar problem."""
    penalty = cfg.kt * cfg.g2
    lc_tilde = cb.lc / penalty
    if lc_tilde < 2.0:
        raise ConfigError(
            f"coherence exhausted by beam sweep: lc/(kt*g2) = {lc_tilde:.3f} < 2 "
            f"(lc={cb.lc}, kt={cfg.kt}, g2={cfg.g2})"
        )
    return SubstitutedProblem(lc_tilde=lc_tilde, gain=cfg.g1 * cfg.g2, sweep_penalty=penalty)


def _substituted_block(cb: CoherenceBlock, lc_tilde: float) -> CoherenceBlock:
    # bandwidth lattice is a property of the channel, not of the sweep
    return CoherenceBlock(lc=lc_tilde, bc_hz=cb.bc_hz)


def _check_pair(gain: float, sweep_penalty: float, lc: float) -> float:
    if gain <= 0.0 or sweep_penalty < 1.0:
        raise ConfigError(f"bad gain pair ({gain}, {sweep_penalty})")
    lc_tilde = lc / sweep_penalty
    if lc_tilde < 2.0:
        raise ConfigError(
            f"coherence exhausted by beam sweep: lc/(kt*g2) = {lc_tilde:.3f} < 2 "
            f"(lc={lc}, penalty={sweep_penalty})"
        )
    return lc_tilde


def solve_with_gains(pd, cb: CoherenceBlock, gain: float, sweep_penalty: float,
                     fading: FadingModel) -> OperatingPoint:
    """Optimal bandwidth and pilot ratio under an explicit (gain, penalty) pair.

    The density pd is pre-gain: the solver runs at pd*gain with coherence
    shortened by the sweep penalty, and reports rho back in pre-gain units.
    Budgets that already fold the array gain into pd pass gain = 1.
    """
    lc_tilde = _check_pair(gain, sweep_penalty, cb.lc)
    pd_hz = core._pd_hz(pd)
    point = core.solve_continuous(pd_hz * gain, _substituted_block(cb, lc_tilde), fading)
    return OperatingPoint(
        w_hz=point.w_hz,
        alpha=point.alpha,
        rho=point.rho / gain,
        rho_eff=point.rho_eff,
        rate_bps=point.rate_bps,
        pilot_count=point.pilot_count,
        flags=point.flags,
    )


def fixed_bandwidth_with_gains(pd, w_hz: float, cb: CoherenceBlock, gain: float,
                               sweep_penalty: float, fading: FadingModel) -> OperatingPoint:
    """Pilot-only optimization at pinned bandwidth under an explicit gain pair."""
    lc_tilde = _check_pair(gain, sweep_penalty, cb.lc)
    point = core.rate_fixed_bandwidth(core._pd_hz(pd) * gain, w_hz,
                                      _substituted_block(cb, lc_tilde), fading)
    return OperatingPoint(
        w_hz=point.w_hz,
        alpha=point.alpha,
        rho=point.rho / gain,
        rho_eff=point.rho_eff,
        rate_bps=point.rate_bps,
        pilot_count=point.pilot_count,
        flags=point.flags,
    )


def solve_mimo(pd, cb: CoherenceBlock, cfg: ArrayConfig, fading: FadingModel) -> OperatingPoint:
    """Jointly optimal bandwidth and pilot ratio for an array link.

    Solves the substituted scalar problem, then reports rho per antenna
    element (divide the substituted SNR by G1*G2). Bandwidth, pilot ratio,
    effective SNR and rate carry over unchanged.
    """
    sub = substitute(cfg, cb)
    return solve_with_gains(pd, cb, sub.gain, sub.sweep_penalty, fading)


def mimo_rate(pd, w_hz: float, alpha: float, cb: CoherenceBlock, cfg: ArrayConfig,
              fading: FadingModel) -> float:
    """Rate of an array link at an explicit (bandwidth, pilot ratio) choice."""
    sub = substitute(cfg, cb)
    return core.rate(core._pd_hz(pd) * sub.gain, w_hz, alpha,
                     _substituted_block(cb, sub.lc_tilde), fading)


def mimo_rate_fixed_bandwidth(pd, w_hz: float, cb: CoherenceBlock, cfg: ArrayConfig,
                              fading: FadingModel) -> OperatingPoint:
    """Pilot-only optimization at pinned bandwidth for an array link."""
    sub = substitute(cfg, cb)
    return fixed_bandwidth_with_gains(pd, w_hz, cb, sub.gain, sub.sweep_penalty, fading)


def closed_form_mimo(cfg: ArrayConfig, lc: float) -> ClosedForm:
    """Leading-order array optimum.

    rho (per antenna) = (4*Kt*G2/Lc)^(1/3) / (G1*G2),
    alpha             = (Kt*G2/(2*Lc))^(1/3),
    rate_factor       = (1 - (4*Kt*G2/Lc)^(1/3)) * G1*G2 * log2(e),
    with the rate itself being rate_factor * Pr/N0. Reduces to the scalar
    closed forms when Kt = G1 = G2 = 1.
    """
    penalty = cfg.kt * cfg.g2
    if lc / penalty < 2.0:
        raise ConfigError(
            f"coherence exhausted by beam sweep: lc/(kt*g2) = {lc / penalty:.3f} < 2"
        )
    x = (4.0 * penalty / lc) ** (1.0 / 3.0)
    gain = cfg.g1 * cfg.g2
    return ClosedForm(
        rho=x / gain,
        alpha=(penalty / (2.0 * lc)) ** (1.0 / 3.0),
        rate_factor=(1.0 - x) * gain * LOG2E,
    )
