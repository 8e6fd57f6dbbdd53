"""Human-operator models: the structured 2x2 LTI model (two poles, one zero on
the diagonal, constant off-diagonal), scripted playback operators, and the
command mapping used by the live teleoperation interface.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import so3
from .errors import PoleOnAxis, RateMismatch
from .navigation import LeaderState, ReferenceState

OMEGA_MAX = 1.0  # rad/s, norm saturation of the spatial command
K_OMEGA_DEFAULT = 0.8  # controller-attitude command gain
SIM_RATE_HZ = 120.0


@dataclass(frozen=True)
class TransferMatrix2x2:
    """Structured 2x2 transfer matrix H(s).

    Diagonal entries are (b1 s + b0) / (s^2 + a1 s + a0), off-diagonal entries
    are the constants (h12, h21). Denominators must be Hurwitz (a1, a0 > 0) so
    the internal state stays bounded for bounded inputs.
    """

    diag_num: tuple[tuple[float, float], tuple[float, float]]
    diag_den: tuple[tuple[float, float], tuple[float, float]]
    offdiag: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for a1, a0 in self.diag_den:
            if not (a1 > 0.0 and a0 > 0.0):
                raise ValueError(f"denominator (a1={a1}, a0={a0}) is not Hurwitz")

    def freq_response(self, omega: float) -> np.ndarray:
        """H(j omega) as a 2x2 complex matrix. Raises PoleOnAxis if a
        denominator vanishes on the imaginary axis."""
        s = 1j * omega
        h = np.zeros((2, 2), dtype=complex)
        for k in range(2):
            b1, b0 = self.diag_num[k]
            a1, a0 = self.diag_den[k]
            den = s * s + a1 * s + a0
            if abs(den) < 1e-12:
                raise PoleOnAxis(f"denominator of diagonal entry {k} vanishes at omega={omega}")
            h[k, k] = (b1 * s + b0) / den
        h[0, 1] = self.offdiag[0]
        h[1, 0] = self.offdiag[1]
        return h

    def dc_gain(self) -> np.ndarray:
        return np.array(
            [
                [self.diag_num[0][1] / self.diag_den[0][1], self.offdiag[0]],
                [self.offdiag[1], self.diag_num[1][1] / self.diag_den[1][1]],
            ]
        )

    def poles(self) -> np.ndarray:
        """Poles of both diagonal entries, shape (2, 2) complex."""
        return np.array([np.roots([1.0, a1, a0]) for a1, a0 in self.diag_den])

    def to_dict(self, rate_hz: float = SIM_RATE_HZ) -> dict:
        return {
            "rate_hz": rate_hz,
            "diag": [
                {"num": list(self.diag_num[k]), "den": list(self.diag_den[k])} for k in range(2)
            ],
            "offdiag": list(self.offdiag),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransferMatrix2x2":
        return cls(
            diag_num=tuple(tuple(entry["num"]) for entry in d["diag"]),
            diag_den=tuple(tuple(entry["den"]) for entry in d["diag"]),
            offdiag=tuple(d.get("offdiag", (0.0, 0.0))),
        )


def save_model(tm: TransferMatrix2x2, path, rate_hz: float = SIM_RATE_HZ) -> None:
    Path(path).write_text(json.dumps(tm.to_dict(rate_hz), indent=2))


def load_model(path) -> tuple[TransferMatrix2x2, float]:
    d = json.loads(Path(path).read_text())
    return TransferMatrix2x2.from_dict(d), float(d.get("rate_hz", SIM_RATE_HZ))


def _realize(tm: TransferMatrix2x2) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Controllable-canonical state space of the structured matrix: block
    diagonal per entry, constants as feedthrough."""
    a = np.zeros((4, 4))
    b = np.zeros((4, 2))
    c = np.zeros((2, 4))
    d = np.array([[0.0, tm.offdiag[0]], [tm.offdiag[1], 0.0]])
    for k in range(2):
        b1, b0 = tm.diag_num[k]
        a1, a0 = tm.diag_den[k]
        i = 2 * k
        a[i, i + 1] = 1.0
        a[i + 1, i] = -a0
        a[i + 1, i + 1] = -a1
        b[i + 1, k] = 1.0
        c[k, i] = b0
        c[k, i + 1] = b1
    return a, b, c, d


def _zoh(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    n, m = b.shape
    block = np.zeros((n + m, n + m))
    block[:n, :n] = a
    block[:n, n:] = b
    ed = expm(block * dt)
    return ed[:n, :n], ed[:n, n:]


@dataclass
class OperatorModel:
    """Discrete-time simulation of an operator model at a fixed rate.

    Holds the mutable internal state; exactly one loop should own an instance.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    rate_hz: float
    structure: TransferMatrix2x2 | None = None
    a_d: np.ndarray = field(init=False)
    b_d: np.ndarray = field(init=False)
    x: np.ndarray = field(init=False)

    def __post_init__(self):
        self.a_d, self.b_d = _zoh(self.a, self.b, 1.0 / self.rate_hz)
        self.x = np.zeros(self.a.shape[0])

    @classmethod
    def from_structure(cls, tm: TransferMatrix2x2, rate_hz: float = SIM_RATE_HZ) -> "OperatorModel":
        a, b, c, d = _realize(tm)
        return cls(a=a, b=b, c=c, d=d, rate_hz=rate_hz, structure=tm)

    @classmethod
    def from_static_gain(cls, k: np.ndarray, rate_hz: float = SIM_RATE_HZ) -> "OperatorModel":
        """Memoryless operator u = K e; useful as a degenerate test double."""
        k = np.asarray(k, dtype=float)
        z = np.zeros((1, 1))
        return cls(a=z, b=np.zeros((1, 2)), c=np.zeros((2, 1)), d=k, rate_hz=rate_hz)

    def reset(self) -> None:
        self.x = np.zeros(self.a.shape[0])

    def step(self, error_e, dt: float) -> np.ndarray:
        """Output for the current tick, then advance the internal state."""
        if abs(dt - 1.0 / self.rate_hz) > 1e-12:
            raise RateMismatch(f"dt={dt} does not match model rate {self.rate_hz} Hz")
        e = np.asarray(error_e, dtype=float)
        y = self.c @ self.x + self.d @ e
        self.x = self.a_d @ self.x + self.b_d @ e
        return y

    def freq_response_realization(self, omega: float) -> np.ndarray:
        """C (j w I - A)^-1 B + D; must agree with the structure's response."""
        n = self.a.shape[0]
        return self.c @ np.linalg.solve(1j * omega * np.eye(n) - self.a, self.b) + self.d


@dataclass(frozen=True)
class OperatorSignals:
    """One tick of operator output in every frame the loop needs."""

    error_e: np.ndarray
    u_h: np.ndarray
    omega_h_body: np.ndarray
    omega_h_spatial: np.ndarray


def compute_error(leader: LeaderState, reference: ReferenceState) -> np.ndarray:
    """First two components of vee(sk(R_l^T R_r)); the third (yaw) is not fed
    back because the operator does not regulate spin about the pointing axis."""
    q = leader.rotation.T @ reference.rotation
    return so3._vee_unchecked(so3.sk(q))[:2]


def saturate_norm(v: np.ndarray, limit: float = OMEGA_MAX) -> np.ndarray:
    nrm = float(np.linalg.norm(v))
    if nrm > limit:
        return v * (limit / nrm)
    return v


def synthetic_operator_step(
    model: OperatorModel, error_e, leader: LeaderState, dt: float
) -> OperatorSignals:
    """Advance the operator model one tick and map its output to commands.

    Saturation acts on the spatial norm; scaling both frames by the same factor
    keeps the third body component exactly zero.
    """
    e = np.asarray(error_e, dtype=float)
    u = model.step(e, dt)
    omega_body = np.array([u[0], u[1], 0.0])
    omega_spatial = leader.rotation @ omega_body
    nrm = float(np.linalg.norm(omega_spatial))
    if nrm > OMEGA_MAX:
        scale = OMEGA_MAX / nrm
        omega_spatial = omega_spatial * scale
        omega_body = omega_body * scale
    return OperatorSignals(
        error_e=e, u_h=omega_body[:2].copy(), omega_h_body=omega_body, omega_h_spatial=omega_spatial
    )


def passive_reference_model() -> TransferMatrix2x2:
    """Built-in strictly passive operator: both diagonal entries
    0.7 (s + 1) / (s + 1)^2 = 0.7 / (s + 1), zero off-diagonal.

    Positive real (Re H(jw) = 0.7 / (1 + w^2) > 0) with nonsingular DC gain.
    The impulse response is positive with L1 norm 0.7, so for error components
    bounded by 1 the command norm stays below 0.7 sqrt(2) < 1: never saturates.
    """
    return TransferMatrix2x2(
        diag_num=((0.7, 0.7), (0.7, 0.7)),
        diag_den=((2.0, 1.0), (2.0, 1.0)),
        offdiag=(0.0, 0.0),
    )


def teleop_command_map(r_t, r_0, k_omega: float = K_OMEGA_DEFAULT) -> np.ndarray:
    """Controller-attitude command: k_omega * vee(log(R_t R_0^T)), norm-saturated."""
    if k_omega <= 0.0:
        raise ValueError("k_omega must be positive")
    v = k_omega * so3.log_so3(np.asarray(r_t, dtype=float) @ np.asarray(r_0, dtype=float).T)
    return saturate_norm(v)


class ScriptedOperator:
    """Deterministic playback of spatial commands from a schedule of
    half-open intervals [(t0, t1, omega_h_s), ...]; zero outside all intervals."""

    def __init__(self, schedule):
        items = []
        for t0, t1, vec in schedule:
            if not t1 > t0:
                raise ValueError(f"interval ({t0}, {t1}) is empty")
            items.append((float(t0), float(t1), np.asarray(vec, dtype=float)))
        items.sort(key=lambda it: it[0])
        for (a0, a1, _), (b0, _, _) in zip(items, items[1:]):
            if b0 < a1:
                raise ValueError("schedule intervals overlap")
        self.starts = [it[0] for it in items]
        self.schedule = items

    def command(self, t: float) -> np.ndarray:
        i = bisect.bisect_right(self.starts, t) - 1
        if i >= 0:
            t0, t1, vec = self.schedule[i]
            if t0 <= t < t1:
                return vec
        return np.zeros(3)

    @classmethod
    def from_command_series(cls, t, commands, dt: float) -> "ScriptedOperator":
        """Per-tick playback of a recorded command series; interval ends abut
        the next recorded time stamp exactly so replays never overlap."""
        t = np.asarray(t, dtype=float)
        ends = np.append(t[1:], t[-1] + dt)
        return cls([(t[k], ends[k], commands[k]) for k in range(len(t))])
