import math

import numpy as np
import pytest

from so3nav import so3
from so3nav.analysis import (
    EnergyLedger,
    PassivityReport,
    assumption_monitor,
    energy_tick,
    estimate_beta,
    lemma1_monitor,
    passivity_index,
    passivity_index_realified,
    passivity_sweep,
)
from so3nav.errors import PoleOnAxis
from so3nav.navigation import (
    LeaderState,
    QuasiAverageState,
    ReferenceState,
    SyncGains,
    step_navigation,
)
from so3nav.operators import TransferMatrix2x2, passive_reference_model

from conftest import random_rotation


class _IdentityGain:
    """Duck-typed stand-in for a pure unit-gain operator."""

    def freq_response(self, omega):
        return np.eye(2, dtype=complex)


def _first_order_lag():
    # (s + 1)/(s + 1)^2 = 1/(s + 1) on both diagonal entries
    return TransferMatrix2x2(diag_num=((1.0, 1.0), (1.0, 1.0)), diag_den=((2.0, 1.0), (2.0, 1.0)))


def _non_passive_model():
    # (s - 1)/(s + 1)^2: nu(w) proportional to 3 w^2 - 1, crossing at 1/sqrt(3)
    return TransferMatrix2x2(diag_num=((1.0, -1.0), (1.0, -1.0)), diag_den=((2.0, 1.0), (2.0, 1.0)))


def test_passivity_index_identity_gain():
    for w in (0.0, 0.3, 10.0):
        assert abs(passivity_index(_IdentityGain(), w) - 1.0) < 1e-15


def test_passivity_index_first_order_lag():
    tm = _first_order_lag()
    for w in np.geomspace(1e-2, 1e2, 50):
        assert abs(passivity_index(tm, w) - 1.0 / (1.0 + w * w)) < 1e-12


def test_passivity_index_non_passive_dc():
    assert abs(passivity_index(_non_passive_model(), 0.0) - (-1.0)) < 1e-12


def test_passivity_index_rejects_negative_frequency():
    with pytest.raises(ValueError):
        passivity_index(_first_order_lag(), -1.0)


def test_closed_form_matches_realified_eigensolve(rng):
    for _ in range(100):
        tm = TransferMatrix2x2(
            diag_num=(tuple(rng.uniform(-2, 2, 2)), tuple(rng.uniform(-2, 2, 2))),
            diag_den=(tuple(rng.uniform(0.1, 5, 2)), tuple(rng.uniform(0.1, 5, 2))),
            offdiag=tuple(rng.uniform(-1, 1, 2)),
        )
        w = float(rng.uniform(0, 50))
        assert abs(passivity_index(tm, w) - passivity_index_realified(tm, w)) < 1e-12


def test_pole_on_axis_guard():
    # Hurwitz validation makes this unreachable through the constructor; build
    # a marginal model directly to confirm the guard fires
    tm = object.__new__(TransferMatrix2x2)
    object.__setattr__(tm, "diag_num", ((1.0, 1.0), (1.0, 1.0)))
    object.__setattr__(tm, "diag_den", ((0.0, 1.0), (0.0, 1.0)))
    object.__setattr__(tm, "offdiag", (0.0, 0.0))
    with pytest.raises(PoleOnAxis):
        tm.freq_response(1.0)


def test_sweep_passive_reference_model():
    report = passivity_sweep(passive_reference_model(), 1e-2, 1e2, 400)
    assert report.is_passive
    assert len(report.omega) == 400
    assert report.nu[0] == passivity_index(passive_reference_model(), report.omega[0])


def test_sweep_brackets_analytic_crossing():
    tm = _non_passive_model()
    report = passivity_sweep(tm, 1e-2, 1e2, 400)
    assert not report.is_passive
    crossing = 1.0 / math.sqrt(3.0)
    grid = report.omega
    sign_flips = np.flatnonzero(np.diff(np.sign(report.nu)))
    assert len(sign_flips) >= 1
    k = sign_flips[0]
    assert grid[k] <= crossing <= grid[k + 1]


def test_sweep_validates_grid():
    with pytest.raises(ValueError):
        passivity_sweep(_first_order_lag(), 1.0, 0.5, 10)
    with pytest.raises(ValueError):
        passivity_sweep(_first_order_lag(), 0.1, 1.0, 1)


def test_report_serialization(tmp_path):
    report = passivity_sweep(_first_order_lag(), 0.1, 10.0, 16)
    report.to_csv(tmp_path / "r.csv")
    report.to_json(tmp_path / "r.json")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "omega,nu" and len(lines) == 17
    summary = report.summary()
    assert summary["is_passive"] is True


def test_energy_ledger_synchronized_equilibrium(rng):
    r = random_rotation(rng)
    qa, leader, ref = QuasiAverageState(r), LeaderState(r.copy()), ReferenceState(r.copy())
    gains = SyncGains(3.0)
    ledger = EnergyLedger()
    for _ in range(50):
        energy_tick(ledger, qa, leader, ref, np.zeros(3), gains, 1 / 120)
    series = ledger.series()
    assert np.allclose(series["S_r"], 0.0, atol=1e-12)
    assert np.allclose(series["S_rl"], 0.0, atol=1e-12)
    assert np.allclose(np.diff(series["V"]), 0.0, atol=1e-15)


def test_energy_ledger_zero_command_dissipation(rng):
    # pure synchronization run: S_h stays at beta, V never increases
    qa = QuasiAverageState(np.eye(3))
    leader = LeaderState(so3.exp_so3([0.6, -0.2, 0.4]))
    ref = ReferenceState(so3.exp_so3([0.1, 0.2, 0.0]))
    gains = SyncGains(2.0)
    dt = 1.0 / 120.0
    ledger = EnergyLedger()
    for _ in range(1200):
        energy_tick(ledger, qa, leader, ref, np.zeros(3), gains, dt)
        qa, leader, _ = step_navigation(qa, leader, ref, gains, np.zeros(3), dt)
    series = ledger.series()
    assert series["beta"] == 0.0
    assert np.allclose(series["S_h"], 0.0, atol=1e-15)
    dv = np.diff(series["V"]) / dt
    bound = series["bound"][:-1]
    assert np.all(dv <= bound + 1e-6 + 2.0 * dt)
    assert np.all(np.diff(series["V"]) <= 1e-9)


def test_energy_ledger_serialization(tmp_path, rng):
    qa = QuasiAverageState(np.eye(3))
    leader = LeaderState(so3.exp_so3([0.4, 0.0, 0.2]))
    ref = ReferenceState(np.eye(3))
    gains = SyncGains(2.0)
    ledger = EnergyLedger()
    for _ in range(100):
        energy_tick(ledger, qa, leader, ref, np.zeros(3), gains, 1 / 120)
        qa, leader, _ = step_navigation(qa, leader, ref, gains, np.zeros(3), 1 / 120)
    ledger.to_csv(tmp_path / "energy.csv")
    ledger.to_json(tmp_path / "energy.json")
    lines = (tmp_path / "energy.csv").read_text().splitlines()
    assert lines[0] == "t,S_r,S_rl,S_h,V,bound" and len(lines) == 101
    import json

    summary = json.loads((tmp_path / "energy.json").read_text())
    assert summary["V_final"] <= summary["V_initial"] + 1e-12
    assert summary["beta"] == 0.0


def test_lemma1_monitor_values():
    r = random_rotation(np.random.default_rng(7))
    assert lemma1_monitor(QuasiAverageState(r), ReferenceState(r.copy()))["h_value"] == pytest.approx(2.0)
    qa = QuasiAverageState(so3.exp_so3([0, math.pi / 2, 0]))
    m = lemma1_monitor(qa, ReferenceState(np.eye(3)))
    assert abs(m["h_value"]) < 1e-12 and m["on_boundary"]
    qa = QuasiAverageState(so3.exp_so3([0, 2 * math.pi / 3, 0]))
    assert lemma1_monitor(qa, ReferenceState(np.eye(3)))["h_value"] == pytest.approx(-1.0)


def test_assumption_monitor_values():
    r = random_rotation(np.random.default_rng(3))
    m = assumption_monitor(LeaderState(r), ReferenceState(r.copy()))
    assert m["sym_Rrl_min_eig"] == pytest.approx(2.0) and m["positive_definite"]
    leader = LeaderState(so3.exp_so3([math.pi / 2, 0, 0]))
    m = assumption_monitor(leader, ReferenceState(np.eye(3)))
    assert abs(m["sym_Rrl_min_eig"]) < 1e-12 and not m["positive_definite"]
    leader = LeaderState(so3.exp_so3([math.pi / 4, 0, 0]))
    m = assumption_monitor(leader, ReferenceState(np.eye(3)))
    assert m["sym_Rrl_min_eig"] == pytest.approx(math.sqrt(2.0)) and m["positive_definite"]


def test_estimate_beta():
    ledger = EnergyLedger()
    ledger.t = [0.0, 1.0, 2.0]
    ledger.integral = [0.0, 0.5, 0.2]
    assert estimate_beta(ledger) == 0.0
    ledger.integral = [0.0, -0.3, 0.1]
    assert estimate_beta(ledger) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        estimate_beta(EnergyLedger())


def test_estimate_beta_monotone_in_horizon():
    ledger = EnergyLedger()
    ledger.t = list(np.arange(6) * 1.0)
    ledger.integral = [0.0, -0.1, 0.2, -0.4, 0.1, -0.05]
    betas = []
    for k in range(1, 7):
        sub = EnergyLedger()
        sub.t = ledger.t[:k]
        sub.integral = ledger.integral[:k]
        betas.append(estimate_beta(sub))
    assert all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))
