"""Multi-user bandwidth and power reallocation with a no-regression guarantee.

Users start from an equal-split baseline (own power budget Pt, own bandwidth
budget W0, pilot overhead optimized). Reallocation may move power and
bandwidth between users subject to the pooled budgets and to the rule that
nobody ends below their baseline rate. Bandwidth lives on each user's
coherence lattice; power is searched on a dB grid, coarse pass then refined.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import core
from .core import LOG2E, CoherenceBlock
from .errors import ConfigError
from .fading import FadingModel

MAX_WEAK = "max-weak"
MAX_STRONG = "max-strong"
SUM_RATE = "sum"

OBJECTIVES = (MAX_WEAK, MAX_STRONG, SUM_RATE)

_REL_IMPROVE = 1e-6
_OFFSET_LO_DB = -20.0


@dataclass(frozen=True)
class UserLink:
    """One user's channel and baseline budget.

    gain_hz_per_watt: combined channel gain referenced to the noise density,
    (Pr/N0)/Pt, so pd = gain * transmit power. Includes path loss, antenna
    and beamforming gains, and the receiver noise figure.
    """

    gain_hz_per_watt: float
    pt_w: float
    w0_hz: float
    cb: CoherenceBlock
    fading: FadingModel

    def __post_init__(self):
        if not self.gain_hz_per_watt > 0.0:
            raise ValueError(f"gain must be positive, got {self.gain_hz_per_watt}")
        if not self.pt_w > 0.0:
            raise ValueError(f"baseline power must be positive, got {self.pt_w}")
        if not self.w0_hz > 0.0:
            raise ValueError(f"baseline bandwidth must be positive, got {self.w0_hz}")
        if self.cb.bc_hz is None:
            raise ValueError("allocation needs coherence blocks with bc_hz set")

    def pd_hz(self, p_w: float) -> float:
        return self.gain_hz_per_watt * p_w


@dataclass(frozen=True)
class AllocationEntry:
    p_w: float
    w_hz: float
    rate_bps: float
    pilot_count: Optional[int]
    baseline_bps: float


@dataclass(frozen=True)
class Allocation:
    entries: Tuple[AllocationEntry, ...]
    objective: str
    objective_value: float
    baseline_value: float
    flags: Tuple[str, ...] = ()


def fixed_bandwidth_rate(user: UserLink, p_w: float, w_hz: float) -> core.OperatingPoint:
    """Rate at pinned power and bandwidth, integer pilot count optimized."""
    return core.rate_fixed_bandwidth(user.pd_hz(p_w), w_hz, user.cb, user.fading)


def baseline_rates(users: Sequence[UserLink]) -> List[float]:
    """Each user's rate at its own (Pt, W0) with only the pilots optimized."""
    if not users:
        raise ValueError("need at least one user")
    return [fixed_bandwidth_rate(u, u.pt_w, u.w0_hz).rate_bps for u in users]


def _rates_flat(user: UserLink, p_vec: np.ndarray, w_vec: np.ndarray,
                iters: int = 26) -> np.ndarray:
    """Vectorized pilot-optimized rates at per-candidate power and bandwidth.

    Search-path approximation of fixed_bandwidth_rate: every kept candidate
    is re-scored with the scalar path before it can enter the result, so the
    shorter golden section here only steers the search.
    """
    lc = user.cb.lc
    rho = user.gain_hz_per_watt * p_vec / w_vec
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0

    def se(alpha):
        al = alpha * lc
        snr = al * rho * rho / (1.0 + (1.0 + al) * rho)
        return (1.0 - alpha) * user.fading.expected_log1p(snr)

    a = np.full_like(rho, 1e-9)
    b = np.full_like(rho, 1.0 - 1e-9)
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = se(c), se(d)
    for _ in range(iters):
        keep_low = fc > fd
        b = np.where(keep_low, d, b)
        a = np.where(keep_low, a, c)
        c = b - inv_phi * (b - a)
        d = a + inv_phi * (b - a)
        fc, fd = se(c), se(d)
    alpha_c = 0.5 * (a + b)

    n_hi = max(1, math.ceil(lc) - 1)
    n_floor = np.clip(np.floor(alpha_c * lc), 1, n_hi)
    n_ceil = np.clip(np.ceil(alpha_c * lc), 1, n_hi)
    best = np.maximum(se(n_floor / lc), se(n_ceil / lc))
    return best * w_vec * LOG2E


def _cap_steps(user: UserLink, p_w: float) -> int:
    """Upper lattice step count worth considering at power p_w (ceil of the
    continuous bandwidth optimum; the true lattice argmax is this or one less)."""
    point = core.solve_continuous(user.pd_hz(p_w), user.cb, user.fading)
    return max(1, math.ceil(point.w_hz / user.cb.bc_hz - 1e-9))


def _power_offsets(step: float, hi_db: float) -> np.ndarray:
    grid = np.arange(_OFFSET_LO_DB, hi_db + 1e-12, step)
    # the baseline power and the full-budget corner must be reachable exactly
    return np.unique(np.concatenate([grid, [0.0, hi_db]]))


def _segment(lo: int, hi: int, max_points: int) -> np.ndarray:
    if hi <= lo:
        return np.array([max(1, lo)], dtype=int)
    if hi - lo + 1 <= max_points:
        return np.arange(lo, hi + 1)
    return np.unique(np.linspace(lo, hi, max_points).round().astype(int))


def _objective_values(r_weak, r_strong, objective: str):
    if objective == MAX_WEAK:
        return r_weak
    if objective == MAX_STRONG:
        return r_strong
    return r_weak + r_strong


def _best_over_offsets(weak: UserLink, strong: UserLink, p_budget: float, w_budget: float,
                       base_weak: float, base_strong: float, objective: str,
                       offsets_db: np.ndarray, m_center: Optional[int] = None):
    """Top feasible candidates over a power-offset grid, or None.

    Candidates are (p_weak, w_weak, p_strong, w_strong) with both bandwidths
    on their lattices, w_strong taking what the budget leaves up to its own
    beneficial maximum. All candidates are scored in one vectorized pass.
    """
    bc_w, bc_s = weak.cb.bc_hz, strong.cb.bc_hz
    p_w_rows: List[np.ndarray] = []
    w_w_rows: List[np.ndarray] = []
    w_s_rows: List[np.ndarray] = []

    for off in offsets_db:
        p_w = weak.pt_w * 10.0 ** (off / 10.0)
        p_s = p_budget - p_w
        if p_s <= 0.0:
            continue
        cap_w = _cap_steps(weak, p_w)
        cap_s = _cap_steps(strong, p_s)
        m_hi = min(cap_w, int((w_budget - bc_s) // bc_w))
        if m_hi < 1:
            continue
        if cap_w * bc_w + cap_s * bc_s <= w_budget:
            ms = np.unique(np.array([max(1, cap_w - 1), min(cap_w, m_hi)]))
        elif m_center is None:
            ms = _segment(1, m_hi, 24)
        else:
            # unit-stride polish window around the incumbent split
            ms = _segment(max(1, m_center - 12), min(m_hi, m_center + 12), 25)
        w_w = ms * bc_w
        avail = ((w_budget - w_w) // bc_s).astype(int)
        # the strong user's lattice argmax is cap_s or cap_s - 1; try both
        for cap in (cap_s - 1, cap_s):
            if cap < 1:
                continue
            n_s = np.minimum(cap, avail)
            valid = n_s >= 1
            if not valid.any():
                continue
            w_w_rows.append(w_w[valid].astype(float))
            w_s_rows.append(n_s[valid] * bc_s)
            p_w_rows.append(np.full(int(valid.sum()), p_w))

    if not p_w_rows:
        return None
    p_w_all = np.concatenate(p_w_rows)
    w_w_all = np.concatenate(w_w_rows)
    w_s_all = np.concatenate(w_s_rows)
    p_s_all = p_budget - p_w_all

    r_w = _rates_flat(weak, p_w_all, w_w_all)
    r_s = _rates_flat(strong, p_s_all, w_s_all)
    feasible = (r_w >= base_weak * (1.0 - 1e-9)) & (r_s >= base_strong * (1.0 - 1e-9))
    if not feasible.any():
        return None
    vals = np.where(feasible, _objective_values(r_w, r_s, objective), -np.inf)
    order = np.argsort(vals)[::-1]
    top = order[: min(4, int(feasible.sum()))]
    return [
        (float(vals[i]), float(p_w_all[i]), float(w_w_all[i]),
         float(p_s_all[i]), float(w_s_all[i]))
        for i in top
    ]


def _allocate_pair_budget(u1: UserLink, u2: UserLink, p_budget: float, w_budget: float,
                          base1: float, base2: float, objective: str,
                          ) -> Tuple[AllocationEntry, AllocationEntry, Tuple[str, ...]]:
    weak_first = u1.gain_hz_per_watt <= u2.gain_hz_per_watt
    weak, strong = (u1, u2) if weak_first else (u2, u1)
    base_weak, base_strong = (base1, base2) if weak_first else (base2, base1)

    def scalar_entry(user, p, w, base):
        point = fixed_bandwidth_rate(user, p, w)
        return AllocationEntry(p_w=p, w_hz=w, rate_bps=point.rate_bps,
                               pilot_count=point.pilot_count, baseline_bps=base)

    # the baseline split is always feasible and seeds the search
    best_weak = scalar_entry(weak, weak.pt_w, weak.w0_hz, base_weak)
    best_strong = scalar_entry(strong, strong.pt_w, strong.w0_hz, base_strong)
    best_val = _objective_values(best_weak.rate_bps, best_strong.rate_bps, objective)

    hi_db = 10.0 * math.log10(p_budget / weak.pt_w)

    def consider(candidates):
        nonlocal best_val, best_weak, best_strong
        for val, p_w, w_w, p_s, w_s in candidates or []:
            if val <= best_val * (1.0 - 1e-9):
                continue
            cand_weak = scalar_entry(weak, p_w, w_w, base_weak)
            cand_strong = scalar_entry(strong, p_s, w_s, base_strong)
            if cand_weak.rate_bps < base_weak or cand_strong.rate_bps < base_strong:
                continue  # vectorized pass was optimistic at the tolerance edge
            val_exact = _objective_values(cand_weak.rate_bps, cand_strong.rate_bps, objective)
            if val_exact > best_val:
                best_val = val_exact
                best_weak, best_strong = cand_weak, cand_strong

    consider(_best_over_offsets(weak, strong, p_budget, w_budget,
                                base_weak, base_strong, objective,
                                _power_offsets(1.0, hi_db)))

    # refine the power split to 0.1 dB around the incumbent, still scanning
    # the full bandwidth segment: the best split can sit on the feasibility
    # boundary far from the coarse winner's bandwidth
    around = 10.0 * math.log10(best_weak.p_w / weak.pt_w)
    fine = np.unique(np.clip(around + np.arange(-1.0, 1.0 + 1e-12, 0.1),
                             _OFFSET_LO_DB, hi_db))
    consider(_best_over_offsets(weak, strong, p_budget, w_budget,
                                base_weak, base_strong, objective, fine))

    # unit-stride bandwidth polish at the winning power split
    winner = np.array([10.0 * math.log10(best_weak.p_w / weak.pt_w)])
    m_center = max(1, round(best_weak.w_hz / weak.cb.bc_hz))
    consider(_best_over_offsets(weak, strong, p_budget, w_budget,
                                base_weak, base_strong, objective,
                                winner, m_center=m_center))

    flags: Tuple[str, ...] = ()
    if best_weak.p_w != weak.pt_w or best_weak.w_hz != weak.w0_hz:
        off_db = 10.0 * math.log10(best_weak.p_w / weak.pt_w)
        if off_db <= _OFFSET_LO_DB + 0.05 or off_db >= hi_db - 0.05:
            flags = flags + ("power_grid_edge",)

    e1, e2 = (best_weak, best_strong) if weak_first else (best_strong, best_weak)
    return e1, e2, flags


def allocate_pair(u1: UserLink, u2: UserLink, objective: str) -> Allocation:
    """Two-user reallocation of pooled power and bandwidth.

    Maximizes the chosen objective over a power grid (0.1 dB after
    refinement) times the bandwidth lattice, keeping both users at or above
    their baseline rates. The baseline itself is always a candidate, so the
    result can never be worse than no reallocation.
    """
    if objective not in OBJECTIVES:
        raise ConfigError(f"unknown objective {objective!r}; valid: {OBJECTIVES}")
    base1, base2 = baseline_rates([u1, u2])
    p_budget = u1.pt_w + u2.pt_w
    w_budget = u1.w0_hz + u2.w0_hz
    e1, e2, flags = _allocate_pair_budget(u1, u2, p_budget, w_budget, base1, base2, objective)
    entries = (e1, e2)
    return Allocation(
        entries=entries,
        objective=objective,
        objective_value=_group_objective([u1, u2], entries, objective),
        baseline_value=_group_objective_from_rates([u1, u2], [base1, base2], objective),
        flags=flags,
    )


def _group_objective_from_rates(users, rates, objective: str) -> float:
    gains = [u.gain_hz_per_watt for u in users]
    if objective == MAX_WEAK:
        return rates[int(np.argmin(gains))]
    if objective == MAX_STRONG:
        return rates[int(np.argmax(gains))]
    return float(sum(rates))


def _group_objective(users, entries, objective: str) -> float:
    return _group_objective_from_rates(users, [e.rate_bps for e in entries], objective)


def allocate_group(users: Sequence[UserLink], objective: str) -> Allocation:
    """Greedy pairwise reallocation for k >= 2 users.

    Repeatedly re-solves two-user subproblems over the pair's currently held
    resources (fairness always judged against the original baselines) and
    accepts a pair move only when the group objective improves by more than
    1e-6 relative. A heuristic: only k = 2 is exhaustive.
    """
    if objective not in OBJECTIVES:
        raise ConfigError(f"unknown objective {objective!r}; valid: {OBJECTIVES}")
    users = list(users)
    if len(users) < 2:
        raise ValueError("group allocation needs at least two users")
    bases = baseline_rates(users)
    entries = [
        AllocationEntry(p_w=u.pt_w, w_hz=u.w0_hz, rate_bps=b,
                        pilot_count=fixed_bandwidth_rate(u, u.pt_w, u.w0_hz).pilot_count,
                        baseline_bps=b)
        for u, b in zip(users, bases)
    ]
    flags: Tuple[str, ...] = ()
    current = _group_objective(users, entries, objective)

    for _round in range(20):
        improved = False
        for i in range(len(users)):
            for j in range(i + 1, len(users)):
                p_budget = entries[i].p_w + entries[j].p_w
                w_budget = entries[i].w_hz + entries[j].w_hz
                ei, ej, pair_flags = _allocate_pair_budget(
                    users[i], users[j], p_budget, w_budget,
                    bases[i], bases[j], objective,
                )
                trial = list(entries)
                trial[i], trial[j] = ei, ej
                value = _group_objective(users, trial, objective)
                if value > current * (1.0 + _REL_IMPROVE):
                    entries = trial
                    current = value
                    improved = True
                    flags = tuple(sorted(set(flags + pair_flags)))
        if not improved:
            break

    return Allocation(
        entries=tuple(entries),
        objective=objective,
        objective_value=current,
        baseline_value=_group_objective_from_rates(users, bases, objective),
        flags=flags,
    )


def check_allocation(users: Sequence[UserLink], alloc: Allocation) -> None:
    """Raise AssertionError unless budgets, fairness, and no-harm all hold."""
    p_budget = sum(u.pt_w for u in users)
    w_budget = sum(u.w0_hz for u in users)
    p_sum = sum(e.p_w for e in alloc.entries)
    w_sum = sum(e.w_hz for e in alloc.entries)
    assert p_sum <= p_budget * (1.0 + 1e-9), f"power budget violated: {p_sum} > {p_budget}"
    assert w_sum <= w_budget * (1.0 + 1e-9), f"bandwidth budget violated: {w_sum} > {w_budget}"
    for idx, (user, entry) in enumerate(zip(users, alloc.entries)):
        assert entry.rate_bps >= entry.baseline_bps * (1.0 - 1e-12), (
            f"user {idx} below baseline: {entry.rate_bps} < {entry.baseline_bps}"
        )
    assert alloc.objective_value >= alloc.baseline_value * (1.0 - 1e-12), "objective regressed"


def synthetic_gains(k: int, median_db: float, sigma_db: float, seed: int) -> List[float]:
    """Log-normal demo gains in Hz/W; synthetic, not drawn from any deployment data."""
    rng = np.random.default_rng(seed)
    return [10.0 ** ((median_db + sigma_db * z) / 10.0) for z in rng.standard_normal(k)]


def load_users_csv(path, cb: CoherenceBlock, fading: FadingModel) -> List[UserLink]:
    """Users from CSV rows (gain_dB, Pt_dBm, W0_Hz); header optional.

    gain_dB is the combined channel gain over noise density in dB(Hz/W).
    """
    users = []
    header_allowed = True
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            try:
                gain_db, pt_dbm, w0_hz = (float(x) for x in row[:3])
            except ValueError:
                # only the leading row may be non-numeric (column header)
                if header_allowed:
                    header_allowed = False
                    continue
                raise ConfigError(f"{path}:{lineno}: bad user row {row!r}") from None
            header_allowed = False
            users.append(UserLink(
                gain_hz_per_watt=10.0 ** (gain_db / 10.0),
                pt_w=10.0 ** ((pt_dbm - 30.0) / 10.0),
                w0_hz=w0_hz,
                cb=cb,
                fading=fading,
            ))
    if not users:
        raise ConfigError(f"no users parsed from {path}")
    return users
