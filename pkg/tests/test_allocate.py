"""Reallocation must conserve budgets, never harm anyone, and beat doing nothing."""

import math

import numpy as np
import pytest

from maxbw import allocate, core
from maxbw.allocate import Allocation, UserLink
from maxbw.core import CoherenceBlock
from maxbw.errors import ConfigError
from maxbw.fading import FadingModel

RAY = FadingModel.rayleigh()
CB = CoherenceBlock.from_tc_bc(tc_s=1e-3, bc_hz=2.5e6)  # lc 2500


def _user(gain_db, pt_w=1.0, w0_hz=100e6):
    return UserLink(gain_hz_per_watt=10.0 ** (gain_db / 10.0), pt_w=pt_w,
                    w0_hz=w0_hz, cb=CB, fading=RAY)


# ------------------------------------------------------------------ baselines


def test_baseline_rates_frozen():
    weak, strong = _user(68.0), _user(80.0)
    b = allocate.baseline_rates([weak, strong])
    assert b[0] == pytest.approx(7323150.239136475, rel=1e-9)
    assert b[1] == pytest.approx(82126777.15501831, rel=1e-9)


def test_fixed_bandwidth_rate_is_core_path():
    u = _user(75.0)
    mine = allocate.fixed_bandwidth_rate(u, 2.0, 80e6)
    ref = core.rate_fixed_bandwidth(u.gain_hz_per_watt * 2.0, 80e6, CB, RAY)
    assert mine == ref


# ----------------------------------------------------------------- pair cases


def test_pair_max_weak_strictly_improves():
    # weak's beneficial bandwidth (~75 MHz) sits below its 100 MHz baseline,
    # so it can sell lattice steps to the strong user in exchange for power
    weak, strong = _user(68.0), _user(80.0)
    alloc = allocate.allocate_pair(weak, strong, "max-weak")
    allocate.check_allocation([weak, strong], alloc)
    assert alloc.objective_value == pytest.approx(8234391.392957786, rel=1e-6)
    assert alloc.objective_value > alloc.baseline_value * 1.05
    # the weak user ended with more power and less bandwidth than it started
    assert alloc.entries[0].p_w > weak.pt_w
    assert alloc.entries[0].w_hz < weak.w0_hz


def test_pair_max_strong_and_sum():
    weak, strong = _user(68.0), _user(80.0)
    st = allocate.allocate_pair(weak, strong, "max-strong")
    allocate.check_allocation([weak, strong], st)
    assert st.objective_value == pytest.approx(92029420.50058612, rel=1e-6)

    sm = allocate.allocate_pair(weak, strong, "sum")
    allocate.check_allocation([weak, strong], sm)
    assert sm.objective_value == pytest.approx(99363034.96833415, rel=1e-6)
    assert sm.objective_value >= st.objective_value


def test_pair_symmetry():
    weak, strong = _user(68.0), _user(80.0)
    a = allocate.allocate_pair(weak, strong, "max-weak")
    b = allocate.allocate_pair(strong, weak, "max-weak")
    assert a.objective_value == pytest.approx(b.objective_value, rel=1e-9)
    assert a.entries[0].w_hz == b.entries[1].w_hz
    assert a.entries[0].p_w == pytest.approx(b.entries[1].p_w, rel=1e-12)


def test_pair_bandwidth_stays_on_lattices():
    weak, strong = _user(68.0), _user(80.0)
    alloc = allocate.allocate_pair(weak, strong, "sum")
    for e in alloc.entries:
        steps = e.w_hz / CB.bc_hz
        assert steps == pytest.approx(round(steps), abs=1e-9)
        assert steps >= 1


def test_identical_pair_with_excess_demand_keeps_baseline():
    # both users want more bandwidth than the pool holds; any transfer harms
    # the donor, so the baseline split is already optimal
    hot = _user(80.0, w0_hz=50e6)
    alloc = allocate.allocate_pair(hot, hot, "sum")
    assert alloc.objective_value == alloc.baseline_value
    assert alloc.entries[0].w_hz == 50e6
    assert alloc.entries[0].p_w == 1.0


def test_unknown_objective():
    with pytest.raises(ConfigError):
        allocate.allocate_pair(_user(68.0), _user(80.0), "fairness")
    with pytest.raises(ConfigError):
        allocate.allocate_group([_user(68.0), _user(80.0)], "fairness")


# ---------------------------------------------------------------- group cases


def test_group_identical_users_return_baseline():
    users = [_user(75.0) for _ in range(3)]
    for obj in allocate.OBJECTIVES:
        g = allocate.allocate_group(users, obj)
        allocate.check_allocation(users, g)
        assert g.objective_value == pytest.approx(g.baseline_value, rel=1e-9)


def test_group_heterogeneous_sum_improves():
    users = [_user(65.0), _user(75.0), _user(85.0)]
    g = allocate.allocate_group(users, "sum")
    allocate.check_allocation(users, g)
    assert g.objective_value == pytest.approx(254557618.10576, rel=1e-5)
    assert g.objective_value > g.baseline_value * 1.2
    # pooled budgets conserved
    assert sum(e.p_w for e in g.entries) <= 3.0 * (1.0 + 1e-9)
    assert sum(e.w_hz for e in g.entries) <= 300e6 * (1.0 + 1e-9)


def test_group_objective_targets_right_user():
    # max-weak is the lowest-gain user's rate even when rates cross
    users = [_user(65.0), _user(85.0)]
    g = allocate.allocate_group(users, "max-weak")
    assert g.objective_value == g.entries[0].rate_bps
    g = allocate.allocate_group(users, "max-strong")
    assert g.objective_value == g.entries[1].rate_bps


def test_group_needs_two():
    with pytest.raises(ValueError):
        allocate.allocate_group([_user(75.0)], "sum")


def test_check_allocation_catches_harm():
    weak, strong = _user(68.0), _user(80.0)
    good = allocate.allocate_pair(weak, strong, "sum")
    bad_entry = allocate.AllocationEntry(
        p_w=good.entries[0].p_w, w_hz=good.entries[0].w_hz,
        rate_bps=good.entries[0].baseline_bps * 0.5,
        pilot_count=1, baseline_bps=good.entries[0].baseline_bps)
    bad = Allocation(entries=(bad_entry, good.entries[1]),
                     objective=good.objective,
                     objective_value=good.objective_value,
                     baseline_value=good.baseline_value)
    with pytest.raises(AssertionError):
        allocate.check_allocation([weak, strong], bad)


# ------------------------------------------------------------------ utilities


def test_userlink_validation():
    with pytest.raises(ValueError):
        UserLink(gain_hz_per_watt=0.0, pt_w=1.0, w0_hz=1e8, cb=CB, fading=RAY)
    with pytest.raises(ValueError):
        UserLink(gain_hz_per_watt=1e7, pt_w=-1.0, w0_hz=1e8, cb=CB, fading=RAY)
    with pytest.raises(ValueError):
        UserLink(gain_hz_per_watt=1e7, pt_w=1.0, w0_hz=0.0, cb=CB, fading=RAY)
    with pytest.raises(ValueError):
        # no bandwidth lattice, no allocation
        UserLink(gain_hz_per_watt=1e7, pt_w=1.0, w0_hz=1e8,
                 cb=CoherenceBlock(lc=2500.0), fading=RAY)


def test_power_offsets_hit_exact_endpoints():
    offs = allocate._power_offsets(1.0, 3.01)
    assert 0.0 in offs
    assert 3.01 in offs
    assert offs[0] == allocate._OFFSET_LO_DB
    assert np.all(np.diff(offs) > 0)


def test_cap_steps_brackets_continuous_optimum():
    u = _user(80.0)
    cap = allocate._cap_steps(u, 1.0)
    w_cont = core.solve_continuous(u.pd_hz(1.0), CB, RAY).w_hz
    assert cap == math.ceil(w_cont / CB.bc_hz - 1e-9)
    assert cap >= 1


def test_synthetic_gains_deterministic():
    a = allocate.synthetic_gains(5, 75.0, 6.0, seed=42)
    b = allocate.synthetic_gains(5, 75.0, 6.0, seed=42)
    assert a == b
    assert len(a) == 5
    assert all(g > 0 for g in a)
    flat = allocate.synthetic_gains(3, 70.0, 0.0, seed=1)
    assert flat == [pytest.approx(1e7)] * 3


def test_load_users_csv(tmp_path):
    p = tmp_path / "users.csv"
    p.write_text("gain_dB,Pt_dBm,W0_Hz\n68,30,100e6\n80,30,100e6\n")
    users = allocate.load_users_csv(p, CB, RAY)
    assert len(users) == 2
    assert users[0].gain_hz_per_watt == pytest.approx(10.0 ** 6.8)
    assert users[0].pt_w == pytest.approx(1.0)  # 30 dBm
    assert users[1].w0_hz == 100e6

    q = tmp_path / "noheader.csv"
    q.write_text("68,30,100e6\n")
    assert len(allocate.load_users_csv(q, CB, RAY)) == 1

    r = tmp_path / "bad.csv"
    r.write_text("68,30,100e6\n80,oops,100e6\n")
    with pytest.raises(ValueError):
        allocate.load_users_csv(r, CB, RAY)

    # a malformed row right after the header must raise, not vanish
    t = tmp_path / "badfirst.csv"
    t.write_text("gain_dB,Pt_dBm,W0_Hz\n68,30,abc\n80,30,100e6\n")
    with pytest.raises(ConfigError, match="badfirst.csv:2"):
        allocate.load_users_csv(t, CB, RAY)

    s = tmp_path / "empty.csv"
    s.write_text("gain_dB,Pt_dBm,W0_Hz\n")
    with pytest.raises(ConfigError):
        allocate.load_users_csv(s, CB, RAY)
