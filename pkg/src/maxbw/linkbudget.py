"""Deployment parameters to received power density: path loss, gains, noise.

Everything here works in decibels until the final conversion; the optimizer
only ever sees the linear Pr/N0 in hertz plus the array gain pair.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .beamform import RICH_SCATTERING, ArrayConfig
from .core import PowerDensity
from .errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0

# Thermal noise density at 290 K. Together with the receiver noise figure this
# fixes the absolute SNR scale; every published anchor in the acceptance suite
# is reproduced with this constant.
NOISE_DENSITY_DBM_PER_HZ = -174.0

FREE_SPACE = "freespace"
BLOCKED_LOS = "blockedlos"
UMI_NLOS = "umi-nlos"
CUSTOM = "custom"

ELEMENT_POWER = "element-power"
EIRP = "eirp"

_BLOCKAGE_EXCESS_DB = 25.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if not x > 0.0:
        raise ValueError(f"cannot take dB of non-positive value {x}")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class PathLossModel:
    """Distance/frequency to loss in dB.

    Built-ins: free space, free space plus a 25 dB blockage excess, and the
    3GPP urban-micro NLOS fit extrapolated in frequency. Custom tables
    interpolate loss linearly in log10(distance) and clamp outside the table
    with a warning.
    """

    kind: str
    table: tuple = field(default_factory=tuple)  # ((distance_m, loss_db), ...)

    def __post_init__(self):
        if self.kind not in (FREE_SPACE, BLOCKED_LOS, UMI_NLOS, CUSTOM):
            raise ValueError(f"unknown path loss kind {self.kind!r}")
        if self.kind == CUSTOM:
            if len(self.table) < 2:
                raise ValueError("custom path loss table needs at least two points")
            pts = sorted((float(d), float(l)) for d, l in self.table)
            if any(d <= 0.0 for d, _ in pts):
                raise ValueError("custom table distances must be positive")
            if len({d for d, _ in pts}) != len(pts):
                raise ValueError("custom table distances must be distinct")
            object.__setattr__(self, "table", tuple(pts))

    @classmethod
    def free_space(cls) -> "PathLossModel":
        return cls(FREE_SPACE)

    @classmethod
    def blocked_los(cls) -> "PathLossModel":
        return cls(BLOCKED_LOS)

    @classmethod
    def umi_nlos(cls) -> "PathLossModel":
        return cls(UMI_NLOS)

    @classmethod
    def custom_table(cls, points) -> "PathLossModel":
        return cls(CUSTOM, tuple((float(d), float(l)) for d, l in points))

    @classmethod
    def from_csv(cls, path) -> "PathLossModel":
        """Two-column CSV (distance_m, loss_db); header optional."""
        points = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip():
                    continue
                try:
                    points.append((float(row[0]), float(row[1])))
                except ValueError:
                    if points:
                        raise
                    continue
        return cls.custom_table(points)


def path_loss_db(model: PathLossModel, fc_hz: float, d_m: float) -> float:
    """Loss in dB at carrier fc_hz and distance d_m (>= 1 m, model validity)."""
    if not fc_hz > 0.0:
        raise ValueError(f"carrier frequency must be positive, got {fc_hz}")
    if not d_m >= 1.0:
        raise ValueError(f"distance must be >= 1 m for these models, got {d_m}")
    if model.kind == FREE_SPACE:
        return 20.0 * math.log10(4.0 * math.pi * d_m * fc_hz / SPEED_OF_LIGHT)
    if model.kind == BLOCKED_LOS:
        return 20.0 * math.log10(4.0 * math.pi * d_m * fc_hz / SPEED_OF_LIGHT) + _BLOCKAGE_EXCESS_DB
    if model.kind == UMI_NLOS:
        return 36.7 * math.log10(d_m) + 22.7 + 26.0 * math.log10(fc_hz / 1e9)
    dists = np.array([d for d, _ in model.table])
    losses = np.array([l for _, l in model.table])
    if d_m < dists[0] or d_m > dists[-1]:
        warnings.warn(
            f"distance {d_m} m outside custom table [{dists[0]}, {dists[-1]}]; loss clamped",
            stacklevel=2,
        )
    return float(np.interp(math.log10(d_m), np.log10(dists), losses))


@dataclass(frozen=True)
class LinkBudget:
    """One radio link described either per element or through its EIRP.

    Element-power mode needs pt_element_dbm; EIRP mode needs eirp_dbm with the
    transmit array gain already folded in. Receive element gain is gr_element_dbi
    in both modes; the receive array factor comes from the paired ArrayConfig.
    """

    fc_hz: float
    d_m: float
    mode: str
    pt_element_dbm: Optional[float] = None
    eirp_dbm: Optional[float] = None
    gt_element_dbi: float = 0.0
    gr_element_dbi: float = 0.0
    noise_figure_db: float = 0.0
    path_loss: PathLossModel = field(default_factory=PathLossModel.free_space)

    def __post_init__(self):
        if not self.fc_hz > 0.0:
            raise ValueError(f"carrier frequency must be positive, got {self.fc_hz}")
        if not self.d_m > 0.0:
            raise ValueError(f"distance must be positive, got {self.d_m}")
        if self.noise_figure_db < 0.0:
            raise ValueError(f"noise figure must be >= 0 dB, got {self.noise_figure_db}")
        if self.mode == ELEMENT_POWER:
            if self.pt_element_dbm is None:
                raise ConfigError("element-power mode requires pt_element_dbm")
            if self.eirp_dbm is not None:
                raise ConfigError("element-power mode must not also set eirp_dbm")
        elif self.mode == EIRP:
            if self.eirp_dbm is None:
                raise ConfigError("eirp mode requires eirp_dbm")
            if self.pt_element_dbm is not None:
                raise ConfigError("eirp mode must not also set pt_element_dbm")
        else:
            raise ConfigError(f"unknown link budget mode {self.mode!r}")


def eirp_dbm_of(lb: LinkBudget, cfg: ArrayConfig) -> float:
    """EIRP implied by the budget: element power + element gain + 20log10(nt)."""
    if lb.mode == EIRP:
        return lb.eirp_dbm
    return lb.pt_element_dbm + lb.gt_element_dbi + 20.0 * math.log10(cfg.nt)


def power_density(lb: LinkBudget, cfg: ArrayConfig) -> Tuple[PowerDensity, Tuple[float, float]]:
    """Optimizer inputs for a link: power density and the array gain pair.

    The returned pair (gain, sweep_penalty) feeds the scalar substitution:
    the optimizer runs on (pd * gain, Lc / sweep_penalty).

    Element-power mode returns the per-element Pr/N0 (sum transmit power,
    element gains only) with pair (G1*G2, Kt*G2). EIRP mode folds all array
    gain into the density itself, because the EIRP contains the transmit
    array factor and the receive array factor rides along as 10log10(nr);
    its pair is (1, Kt*G2), scaled by G1*G2/(nt*nr) when combining is partial.
    Both descriptions of the same physical link give identical optimizer
    inputs, and a rich-scattering config cannot be expressed in EIRP mode at
    all (its estimation gain nt+nr is not a product of per-side array factors).
    """
    pl = path_loss_db(lb.path_loss, lb.fc_hz, lb.d_m)
    base = -pl - NOISE_DENSITY_DBM_PER_HZ - lb.noise_figure_db
    if lb.mode == ELEMENT_POWER:
        pd_db = lb.pt_element_dbm + 10.0 * math.log10(cfg.nt) + lb.gt_element_dbi \
            + lb.gr_element_dbi + base
        return PowerDensity(db_to_linear(pd_db)), (cfg.g1 * cfg.g2, cfg.kt * cfg.g2)

    if cfg.gain_model == RICH_SCATTERING:
        raise ConfigError(
            "rich-scattering estimation gain cannot be folded into an EIRP; "
            "describe the link in element-power mode instead"
        )
    gr_total = lb.gr_element_dbi + 10.0 * math.log10(cfg.nr)
    pd_db = lb.eirp_dbm + gr_total + base
    # derate when the config's total gain falls short of the full array product
    derate = cfg.g1 * cfg.g2 / (cfg.nt * cfg.nr)
    return PowerDensity(db_to_linear(pd_db) * derate), (1.0, cfg.kt * cfg.g2)


SUM_POWER = "sum-power"
RF_SOC = "rf-soc"
PHASED_SOC = "phased-soc"
LARGE_ARRAY = "large-array"
FCC_CAP = "fcc"

_EIRP_ROWS = (SUM_POWER, RF_SOC, PHASED_SOC, LARGE_ARRAY, FCC_CAP)


def eirp_table(row: str, nt: Optional[int] = None, w_hz: Optional[float] = None) -> float:
    """Reference transmit-capability figures in dBm.

    sum-power:    38 + 10log10(nt), combining per-element PAs.
    rf-soc:       36, single RF system-on-chip.
    phased-soc:   52, high-power phased-array SoC.
    large-array:  28 + 20log10(nt), low per-element power, large array.
    fcc:          regulatory outdoor cap, 75 dBm per 100 MHz: 75 + 10log10(W/100 MHz).
    """
    if row not in _EIRP_ROWS:
        raise ValueError(f"unknown EIRP table row {row!r}; valid rows: {_EIRP_ROWS}")
    if row == SUM_POWER:
        if nt is None:
            raise ValueError("sum-power row needs nt")
        return 38.0 + 10.0 * math.log10(nt)
    if row == RF_SOC:
        return 36.0
    if row == PHASED_SOC:
        return 52.0
    if row == LARGE_ARRAY:
        if nt is None:
            raise ValueError("large-array row needs nt")
        return 28.0 + 20.0 * math.log10(nt)
    if w_hz is None:
        raise ValueError("fcc row needs the signaling bandwidth w_hz")
    return fcc_eirp_cap_dbm(w_hz)


def fcc_eirp_cap_dbm(w_hz: float) -> float:
    """Outdoor EIRP ceiling growing 10log10 with bandwidth above 100 MHz."""
    if not w_hz > 0.0:
        raise ValueError(f"bandwidth must be positive, got {w_hz}")
    return 75.0 + 10.0 * math.log10(w_hz / 100e6)
