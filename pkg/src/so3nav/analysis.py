"""Energy and passivity analysis: the frequency-domain passivity index of
operator models, and trajectory monitors for the storage functions, the
forward-invariance certificate, and the dissipation bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import so3
from .navigation import LeaderState, QuasiAverageState, ReferenceState, SyncGains, relative_rotations
from .operators import TransferMatrix2x2

PASSIVITY_TOL = 1e-9


def passivity_index(model: TransferMatrix2x2, omega: float) -> float:
    """nu(w) = min eig(H(jw) + H(jw)^H) / 2 via the closed-form 2x2 Hermitian
    eigensolve. Nonnegative for all w iff the stable model is passive."""
    if omega < 0.0:
        raise ValueError("omega must be nonnegative")
    h = model.freq_response(omega)
    m = h + h.conj().T
    a = m[0, 0].real
    c = m[1, 1].real
    b = m[0, 1]
    lam_min = 0.5 * (a + c) - math.sqrt((0.5 * (a - c)) ** 2 + abs(b) ** 2)
    return 0.5 * lam_min


def passivity_index_realified(model: TransferMatrix2x2, omega: float) -> float:
    """Same index via the symmetric eigensolve of the realified 4x4 matrix;
    kept as an independent cross-check of the closed form."""
    h = model.freq_response(omega)
    m = h + h.conj().T
    big = np.block([[m.real, -m.imag], [m.imag, m.real]])
    return 0.5 * float(np.linalg.eigvalsh(big)[0])


@dataclass
class PassivityReport:
    omega: np.ndarray
    nu: np.ndarray
    is_passive: bool
    worst_frequency: float
    worst_value: float
    beta_estimate: float | None = None

    def to_csv(self, path) -> None:
        lines = ["omega,nu"]
        for w, v in zip(self.omega, self.nu):
            lines.append(f"{w:.17g},{v:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")

    def summary(self) -> dict:
        return {
            "is_passive": bool(self.is_passive),
            "worst_frequency": float(self.worst_frequency),
            "worst_value": float(self.worst_value),
            "beta_estimate": None if self.beta_estimate is None else float(self.beta_estimate),
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2))


def passivity_sweep(
    model: TransferMatrix2x2, omega_min: float, omega_max: float, points: int
) -> PassivityReport:
    """Evaluate the passivity index on a logarithmic frequency grid."""
    if not (0.0 < omega_min < omega_max):
        raise ValueError("need 0 < omega_min < omega_max")
    if points < 2:
        raise ValueError("need at least 2 grid points")
    grid = np.geomspace(omega_min, omega_max, points)
    nu = np.array([passivity_index(model, w) for w in grid])
    worst = int(np.argmin(nu))
    return PassivityReport(
        omega=grid,
        nu=nu,
        is_passive=bool(np.all(nu >= -PASSIVITY_TOL)),
        worst_frequency=float(grid[worst]),
        worst_value=float(nu[worst]),
    )


@dataclass
class EnergyLedger:
    """Per-tick energy bookkeeping along a trajectory.

    Stores the two rotation energies, the passivity integrand
    f = vee(sk(R_l^T R_r)) . omega_h_body and its running trapezoidal integral,
    and the dissipation bound
    B = -k_s/2 (lmin(Rbar_r + Rbar_r^T) + lmin(R_rl + R_rl^T)) phi(R_l^T Rbar).
    The human storage S_h = beta + integral and the total V = S_r + S_rl + S_h
    are derived via series() once beta is known (estimated post hoc by default).
    """

    t: list[float] = field(default_factory=list)
    s_r: list[float] = field(default_factory=list)
    s_rl: list[float] = field(default_factory=list)
    integrand: list[float] = field(default_factory=list)
    integral: list[float] = field(default_factory=list)
    bound: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def series(self, beta: float | None = None) -> dict[str, np.ndarray]:
        integral = np.asarray(self.integral)
        if beta is None:
            beta = estimate_beta(self)
        s_h = beta + integral
        s_r = np.asarray(self.s_r)
        s_rl = np.asarray(self.s_rl)
        return {
            "t": np.asarray(self.t),
            "S_r": s_r,
            "S_rl": s_rl,
            "S_h": s_h,
            "V": s_r + s_rl + s_h,
            "bound": np.asarray(self.bound),
            "beta": beta,
        }

    def to_csv(self, path, beta: float | None = None) -> None:
        s = self.series(beta)
        lines = ["t,S_r,S_rl,S_h,V,bound"]
        for k in range(len(s["t"])):
            lines.append(
                ",".join(f"{s[c][k]:.17g}" for c in ("t", "S_r", "S_rl", "S_h", "V", "bound"))
            )
        Path(path).write_text("\n".join(lines) + "\n")

    def summary(self, beta: float | None = None) -> dict:
        s = self.series(beta)
        dv = np.diff(s["V"])
        return {
            "beta": float(s["beta"]),
            "V_initial": float(s["V"][0]),
            "V_final": float(s["V"][-1]),
            "max_dV": float(np.max(dv)) if len(dv) else 0.0,
        }

    def to_json(self, path, beta: float | None = None) -> None:
        Path(path).write_text(json.dumps(self.summary(beta), indent=2))


def energy_tick(
    ledger: EnergyLedger,
    qa: QuasiAverageState,
    leader: LeaderState,
    reference: ReferenceState,
    omega_h_body,
    gains: SyncGains,
    dt: float,
) -> EnergyLedger:
    """Append one record; the passivity integral advances by the trapezoidal rule."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    r_rl, r_bar_r = relative_rotations(qa, leader, reference)
    e_full = so3._vee_unchecked(so3.sk(leader.rotation.T @ reference.rotation))
    f = float(e_full @ np.asarray(omega_h_body, dtype=float))
    # the sums below are symmetric by construction; skip the symmetry check
    lam_r = so3._lambda_min_sym3_unchecked(r_bar_r + r_bar_r.T)
    lam_rl = so3._lambda_min_sym3_unchecked(r_rl + r_rl.T)
    b = -0.5 * gains.k_s * (lam_r + lam_rl) * so3.phi(leader.rotation.T @ qa.rotation)
    t = ledger.t[-1] + dt if ledger.t else 0.0
    if ledger.integrand:
        integral = ledger.integral[-1] + 0.5 * (ledger.integrand[-1] + f) * dt
    else:
        integral = 0.0
    ledger.t.append(t)
    ledger.s_r.append(so3.phi(r_bar_r))
    ledger.s_rl.append(so3.phi(r_rl))
    ledger.integrand.append(f)
    ledger.integral.append(integral)
    ledger.bound.append(b)
    return ledger


def lemma1_monitor(qa: QuasiAverageState, reference: ReferenceState) -> dict:
    """Forward-invariance certificate h = tr(R_r^T R_bar) - 1; the invariant
    set is h >= 0 and its boundary sits at |h| below 1e-6."""
    m = reference.rotation.T @ qa.rotation
    h = float(m[0, 0] + m[1, 1] + m[2, 2]) - 1.0
    return {"h_value": h, "on_boundary": abs(h) < 1e-6}


def assumption_monitor(leader: LeaderState, reference: ReferenceState) -> dict:
    """Positive definiteness of R_rl + R_rl^T, required of the operator."""
    r_rl = reference.rotation.T @ leader.rotation
    lam = so3._lambda_min_sym3_unchecked(r_rl + r_rl.T)
    return {"sym_Rrl_min_eig": lam, "positive_definite": lam > 1e-9}


def estimate_beta(ledger: EnergyLedger) -> float:
    """Smallest nonnegative beta such that the recorded passivity integral
    stays above -beta: beta = max(0, sup_tau -integral(tau))."""
    if not ledger.t:
        raise ValueError("ledger is empty")
    return max(0.0, float(-np.min(ledger.integral)))
