"""The n-body rigid network: collective z-axis state, average direction, and
the null-space projection that keeps autonomous control invisible in the average.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3
from .errors import DegenerateAverage, RankDeficient

EPS_AVG = 1e-6
EPS_RANK = 1e-8

_E3_HAT = so3.hat(so3.E3)


@dataclass(frozen=True)
class BodyState:
    rotation: np.ndarray
    id: int

    def __post_init__(self):
        so3.check_rotation(self.rotation)


@dataclass(frozen=True)
class NetworkState:
    """Rotations of all n bodies, shape (n, 3, 3), plus derived directions.

    d_stack is the stacked z-axes (3n,), d_bar the normalized average direction.
    """

    rotations: np.ndarray
    d_stack: np.ndarray = field(init=False, repr=False)
    sum_norm: float = field(init=False, repr=False)
    d_bar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rot = np.asarray(self.rotations, dtype=float)
        if rot.ndim != 3 or rot.shape[1:] != (3, 3) or rot.shape[0] < 1:
            raise ValueError(f"rotations must have shape (n, 3, 3), got {rot.shape}")
        err = np.einsum("nji,njk->nik", rot, rot) - so3.I3
        if np.max(np.abs(err)) > 1e-8:
            raise ValueError("a body rotation is not orthonormal")
        object.__setattr__(self, "rotations", rot)
        d = rot[:, :, 2]  # R_i e_3 is the third column
        sigma = d.sum(axis=0)
        nrm = float(np.linalg.norm(sigma))
        if nrm <= EPS_AVG:
            raise DegenerateAverage(f"||sum d_i|| = {nrm:.3e} <= {EPS_AVG}")
        object.__setattr__(self, "d_stack", d.reshape(-1))
        object.__setattr__(self, "sum_norm", nrm)
        object.__setattr__(self, "d_bar", sigma / nrm)

    @property
    def n(self) -> int:
        return self.rotations.shape[0]

    @property
    def directions(self) -> np.ndarray:
        """Per-body z-axes, shape (n, 3)."""
        return self.d_stack.reshape(-1, 3)


@dataclass(frozen=True)
class CommandDecomposition:
    """Stacked body-frame velocity command split into human and autonomous parts."""

    omega_h: np.ndarray
    omega_a: np.ndarray

    @property
    def omega_total(self) -> np.ndarray:
        return self.omega_h + self.omega_a


def collective_jacobian_S(net: NetworkState) -> np.ndarray:
    """Block-diagonal (3n, 3n) matrix with i-th block -R_i hat(e_3); maps the
    stacked body velocities to the stacked z-axis velocities."""
    n = net.n
    s = np.zeros((3 * n, 3 * n))
    for i in range(n):
        s[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = -net.rotations[i] @ _E3_HAT
    return s


def average_jacobian(net: NetworkState) -> np.ndarray:
    """Jacobian of the average direction w.r.t. the stacked z-axes, (3, 3n).

    Every 3x3 block equals (I - d_bar d_bar^T) / ||sum d_j|| by the quotient rule.
    """
    if net.sum_norm <= EPS_AVG:
        raise DegenerateAverage("average direction undefined")
    block = (so3.I3 - np.outer(net.d_bar, net.d_bar)) / net.sum_norm
    return np.tile(block, (1, net.n))


def stealthy_projector_A(net: NetworkState) -> np.ndarray:
    """Orthogonal projector onto the null space of the average dynamics.

    A = I - W (W^T W)^+ W^T with W = (d(d_bar)/dd S)^T. The 3x3 normal matrix
    W^T W always annihilates d_bar (the average stays on the unit sphere), so
    only the two tangent-plane eigenvalues are inverted; the configuration is
    degenerate when the tangent rank drops below 2.
    """
    w = (average_jacobian(net) @ collective_jacobian_S(net)).T
    normal = w.T @ w
    eigval, eigvec = np.linalg.eigh(normal)
    if eigval[1] <= EPS_RANK:
        raise RankDeficient(
            f"tangent rank of W^T W below 2 (eigenvalues {eigval}); degenerate configuration"
        )
    inv = np.zeros((3, 3))
    for i in range(3):
        if eigval[i] > EPS_RANK:
            inv += np.outer(eigvec[:, i], eigvec[:, i]) / eigval[i]
    return np.eye(3 * net.n) - w @ inv @ w.T


def assemble_command(net: NetworkState, omega_h_spatial_tilde, omega_a_raw) -> CommandDecomposition:
    """Distribute a spatial human command to the bodies and project the raw
    autonomous command through the stealthy projector."""
    omega_tilde = np.asarray(omega_h_spatial_tilde, dtype=float)
    raw = np.asarray(omega_a_raw, dtype=float)
    omega_h = np.einsum("nji,j->ni", net.rotations, omega_tilde).reshape(-1)
    if np.any(raw != 0.0):
        omega_a = stealthy_projector_A(net) @ raw
    else:
        omega_a = np.zeros(3 * net.n)
    return CommandDecomposition(omega_h=omega_h, omega_a=omega_a)


def step_network(net: NetworkState, cmd: CommandDecomposition, dt: float) -> NetworkState:
    """Advance every body by one Lie-Euler step with its slice of the command."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    omega = cmd.omega_total.reshape(-1, 3)
    new_rot = np.empty_like(net.rotations)
    for i in range(net.n):
        new_rot[i] = so3.step_rotation(net.rotations[i], omega[i], dt)
    return NetworkState(rotations=new_rot)


def demo_autonomous_law(net: NetworkState, graph: list[list[int]], gain: float = 1.0) -> np.ndarray:
    """Attitude-consensus demo payload for the stealthy projector:
    omega_a_i = gain * sum_{j in N_i} vee(sk(R_i^T R_j)), stacked (3n,).

    The graph is an adjacency list over body indices 0..n-1 and must be connected.
    """
    _check_connected(graph, net.n)
    out = np.zeros(3 * net.n)
    for i in range(net.n):
        acc = np.zeros(3)
        for j in graph[i]:
            q = net.rotations[i].T @ net.rotations[j]
            acc += so3._vee_unchecked(so3.sk(q))
        out[3 * i : 3 * i + 3] = gain * acc
    return out


def ring_graph(n: int) -> list[list[int]]:
    if n == 1:
        return [[]]
    if n == 2:
        return [[1], [0]]
    return [[(i - 1) % n, (i + 1) % n] for i in range(n)]


def complete_graph(n: int) -> list[list[int]]:
    return [[j for j in range(n) if j != i] for i in range(n)]


def _check_connected(graph: list[list[int]], n: int) -> None:
    if len(graph) != n:
        raise ValueError(f"graph has {len(graph)} nodes, network has {n}")
    if n == 1:
        return
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in graph[i]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != n:
        raise ValueError("graph is not connected")
