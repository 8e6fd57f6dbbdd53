"""Virtual-leader navigation layer: quasi-average rotation, reference frames,
and the passivity-based synchronization law coupling leader and average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import so3


@dataclass(frozen=True)
class LeaderState:
    rotation: np.ndarray

    def __post_init__(self):
        so3.check_rotation(self.rotation)
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))

    @property
    def d_l(self) -> np.ndarray:
        return self.rotation[:, 2]


@dataclass(frozen=True)
class QuasiAverageState:
    rotation: np.ndarray

    def __post_init__(self):
        so3.check_rotation(self.rotation)
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))

    @property
    def z_axis(self) -> np.ndarray:
        return self.rotation[:, 2]


@dataclass(frozen=True)
class ReferenceState:
    """Reference rotation; constant over a trial, z-axis is the target direction."""

    rotation: np.ndarray

    def __post_init__(self):
        so3.check_rotation(self.rotation)
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))

    @property
    def d_r(self) -> np.ndarray:
        return self.rotation[:, 2]


@dataclass(frozen=True)
class SyncGains:
    k_s: float

    def __post_init__(self):
        if not self.k_s > 0.0:
            raise ValueError("k_s must be positive")


def align_z_axis(target) -> np.ndarray:
    """Minimal-geodesic rotation from identity whose z-axis equals target.

    Antipodal targets use the documented convention: rotation of pi about e_1.
    """
    t = np.asarray(target, dtype=float)
    nrm = np.linalg.norm(t)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"target must be unit-norm, got ||t|| = {nrm}")
    t = t / nrm
    cos = t[2]
    if cos < -1.0 + 1e-9:
        return np.diag([1.0, -1.0, -1.0])
    c = np.cross(so3.E3, t)
    ch = so3.hat(c)
    # Rodrigues with sin = ||c||, cos = e_3 . t; (1-cos)/sin^2 = 1/(1+cos)
    return so3.I3 + ch + (ch @ ch) / (1.0 + cos)


def human_filter_command(qa: QuasiAverageState, leader: LeaderState, gains: SyncGains) -> np.ndarray:
    """Spatial velocity k_s R_bar vee(sk(R_bar^T R_l)) steering the average toward the leader."""
    q = qa.rotation.T @ leader.rotation
    return gains.k_s * (qa.rotation @ so3._vee_unchecked(so3.sk(q)))


def leader_velocity(
    leader: LeaderState, qa: QuasiAverageState, omega_h_spatial, gains: SyncGains
) -> np.ndarray:
    """Body velocity of the leader: coupling toward the average plus the human command."""
    q = leader.rotation.T @ qa.rotation
    return gains.k_s * so3._vee_unchecked(so3.sk(q)) + leader.rotation.T @ np.asarray(
        omega_h_spatial, dtype=float
    )


def step_navigation(
    qa: QuasiAverageState,
    leader: LeaderState,
    reference: ReferenceState,
    gains: SyncGains,
    omega_h_spatial,
    dt: float,
) -> tuple[QuasiAverageState, LeaderState, np.ndarray]:
    """Advance quasi-average (spatial frame) and leader (body frame) one step
    from the same snapshot; returns the filtered command for the network."""
    omega_tilde = human_filter_command(qa, leader, gains)
    omega_l = leader_velocity(leader, qa, omega_h_spatial, gains)
    new_qa = QuasiAverageState(so3.step_rotation_spatial(qa.rotation, omega_tilde, dt))
    new_leader = LeaderState(so3.step_rotation(leader.rotation, omega_l, dt))
    return new_qa, new_leader, omega_tilde


def relative_rotations(
    qa: QuasiAverageState, leader: LeaderState, reference: ReferenceState
) -> tuple[np.ndarray, np.ndarray]:
    """Relative rotations (R_rl, R_bar_r) = (R_r^T R_l, R_r^T R_bar), re-projected to SO(3)."""
    r_rl = so3.normalize_rotation(reference.rotation.T @ leader.rotation)
    r_bar_r = so3.normalize_rotation(reference.rotation.T @ qa.rotation)
    return r_rl, r_bar_r
