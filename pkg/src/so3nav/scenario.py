"""Scenario configuration, the coupled closed-loop simulation engine, trajectory
records with lossless CSV round-trip, and batch invariant verification.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import so3
from .analysis import EnergyLedger, assumption_monitor, energy_tick, lemma1_monitor
from .errors import DegenerateAverage
from .navigation import (
    LeaderState,
    QuasiAverageState,
    ReferenceState,
    SyncGains,
    align_z_axis,
    human_filter_command,
    leader_velocity,
)
from .network import (
    NetworkState,
    assemble_command,
    complete_graph,
    demo_autonomous_law,
    ring_graph,
    stealthy_projector_A,
    step_network,
)
from .operators import (
    OMEGA_MAX,
    OperatorModel,
    OperatorSignals,
    ScriptedOperator,
    compute_error,
    load_model,
    passive_reference_model,
    saturate_norm,
    synthetic_operator_step,
)

log = logging.getLogger(__name__)

DEFAULT_RATE_HZ = 120.0
REFERENCE_MAX_ANGLE_DEG = 85.0
# slack slope for the discrete dissipation check: dV <= dt (B + 1e-6 + C dt)
DISSIPATION_SLACK_C = 2.0
Z_AXIS_TOL = 1e-4
STEALTH_TOL = 1e-5
CONVERGENCE_TOL = 1e-3
CONVERGENCE_WINDOW_S = 30.0


def _take(d: dict, allowed: dict, ctx: str) -> dict:
    unknown = set(d) - set(allowed)
    if unknown:
        raise ValueError(f"unknown keys in {ctx}: {sorted(unknown)}")
    out = dict(allowed)
    out.update(d)
    return out


@dataclass(frozen=True)
class ReferenceSpec:
    mode: str = "random"  # random | fixed
    period_s: float = 15.0
    max_angle_deg: float = REFERENCE_MAX_ANGLE_DEG
    d_r: tuple[float, float, float] | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceSpec":
        v = _take(d, {"mode": "random", "period_s": 15.0, "max_angle_deg": REFERENCE_MAX_ANGLE_DEG, "d_r": None}, "reference")
        if v["mode"] not in ("random", "fixed"):
            raise ValueError(f"unknown reference mode {v['mode']!r}")
        if v["mode"] == "fixed" and v["d_r"] is None:
            raise ValueError("fixed reference requires d_r")
        return cls(mode=v["mode"], period_s=float(v["period_s"]), max_angle_deg=float(v["max_angle_deg"]), d_r=None if v["d_r"] is None else tuple(v["d_r"]))


@dataclass(frozen=True)
class OperatorSpec:
    kind: str = "passive_default"  # passive_default | model_file | scripted | none | live
    path: str | None = None
    schedule: tuple = ()

    @classmethod
    def from_dict(cls, d: dict) -> "OperatorSpec":
        v = _take(d, {"kind": "passive_default", "path": None, "schedule": ()}, "operator")
        if v["kind"] not in ("passive_default", "model_file", "scripted", "none", "live"):
            raise ValueError(f"unknown operator kind {v['kind']!r}")
        if v["kind"] == "model_file" and not v["path"]:
            raise ValueError("model_file operator requires path")
        sched = tuple((float(t0), float(t1), tuple(vec)) for t0, t1, vec in v["schedule"])
        return cls(kind=v["kind"], path=v["path"], schedule=sched)


@dataclass(frozen=True)
class AutonomousSpec:
    kind: str = "none"  # none | consensus
    gain: float = 0.5
    graph: str | tuple = "complete"  # complete | ring | explicit adjacency list

    @classmethod
    def from_dict(cls, d: dict) -> "AutonomousSpec":
        v = _take(d, {"kind": "none", "gain": 0.5, "graph": "complete"}, "autonomous")
        if v["kind"] not in ("none", "consensus"):
            raise ValueError(f"unknown autonomous kind {v['kind']!r}")
        g = v["graph"]
        if not isinstance(g, str):
            g = tuple(tuple(int(j) for j in nb) for nb in g)
        return cls(kind=v["kind"], gain=float(v["gain"]), graph=g)


@dataclass(frozen=True)
class InitialSpec:
    bodies: str = "identity"  # identity | random_spread
    spread_rad: float = 0.5
    leader_offset_rad: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "InitialSpec":
        v = _take(d, {"bodies": "identity", "spread_rad": 0.5, "leader_offset_rad": 0.0}, "initial")
        if v["bodies"] not in ("identity", "random_spread"):
            raise ValueError(f"unknown initial bodies mode {v['bodies']!r}")
        return cls(bodies=v["bodies"], spread_rad=float(v["spread_rad"]), leader_offset_rad=float(v["leader_offset_rad"]))


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 3
    dt: float = 1.0 / DEFAULT_RATE_HZ
    duration_s: float = 30.0
    k_s: float = 3.0
    seed: int = 0
    integrator: str = "lie_euler"  # lie_euler | rkmk4
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    operator: OperatorSpec = field(default_factory=OperatorSpec)
    autonomous: AutonomousSpec = field(default_factory=AutonomousSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.dt <= 0 or self.duration_s <= 0:
            raise ValueError("dt and duration_s must be positive")
        if self.k_s <= 0:
            raise ValueError("k_s must be positive")
        if self.integrator not in ("lie_euler", "rkmk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        v = _take(
            d,
            {
                "n": 3,
                "dt": 1.0 / DEFAULT_RATE_HZ,
                "duration_s": 30.0,
                "k_s": 3.0,
                "seed": 0,
                "integrator": "lie_euler",
                "reference": {},
                "operator": {},
                "autonomous": {},
                "initial": {},
            },
            "scenario",
        )
        return cls(
            n=int(v["n"]),
            dt=float(v["dt"]),
            duration_s=float(v["duration_s"]),
            k_s=float(v["k_s"]),
            seed=int(v["seed"]),
            integrator=v["integrator"],
            reference=ReferenceSpec.from_dict(dict(v["reference"])),
            operator=OperatorSpec.from_dict(dict(v["operator"])),
            autonomous=AutonomousSpec.from_dict(dict(v["autonomous"])),
            initial=InitialSpec.from_dict(dict(v["initial"])),
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dt": self.dt,
            "duration_s": self.duration_s,
            "k_s": self.k_s,
            "seed": self.seed,
            "integrator": self.integrator,
            "reference": {
                "mode": self.reference.mode,
                "period_s": self.reference.period_s,
                "max_angle_deg": self.reference.max_angle_deg,
                **({"d_r": list(self.reference.d_r)} if self.reference.d_r else {}),
            },
            "operator": {
                "kind": self.operator.kind,
                **({"path": self.operator.path} if self.operator.path else {}),
                **({"schedule": [[t0, t1, list(v)] for t0, t1, v in self.operator.schedule]} if self.operator.schedule else {}),
            },
            "autonomous": {
                "kind": self.autonomous.kind,
                "gain": self.autonomous.gain,
                "graph": self.autonomous.graph if isinstance(self.autonomous.graph, str) else [list(nb) for nb in self.autonomous.graph],
            },
            "initial": {
                "bodies": self.initial.bodies,
                "spread_rad": self.initial.spread_rad,
                "leader_offset_rad": self.initial.leader_offset_rad,
            },
        }


def load_config(path) -> ScenarioConfig:
    return ScenarioConfig.from_dict(json.loads(Path(path).read_text()))


def random_reference(rng: np.random.Generator, current_d_bar, max_angle_deg: float = REFERENCE_MAX_ANGLE_DEG) -> np.ndarray:
    """Uniform direction on the unit sphere, rejected until within max_angle of
    the current average; keeps the positive-definiteness assumption reachable."""
    d_bar = np.asarray(current_d_bar, dtype=float)
    cos_min = math.cos(math.radians(max_angle_deg))
    while True:
        v = rng.standard_normal(3)
        nrm = np.linalg.norm(v)
        if nrm < 1e-12:
            continue
        v = v / nrm
        if float(v @ d_bar) >= cos_min:
            return v


def _random_rotvec_in_ball(rng: np.random.Generator, radius: float) -> np.ndarray:
    v = rng.standard_normal(3)
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        return np.zeros(3)
    return (radius * rng.uniform() ** (1.0 / 3.0)) * (v / nrm)


@dataclass
class TrajectoryRecord:
    """Columnar per-tick record of one scenario run."""

    meta: dict
    data: dict[str, np.ndarray]

    @property
    def n_ticks(self) -> int:
        return len(self.data["t"])

    def body_rotation(self, i: int, k: int) -> np.ndarray:
        cols = [f"body{i}_{r}{c}" for r in range(3) for c in range(3)]
        return np.array([self.data[c][k] for c in cols]).reshape(3, 3)

    def rotation_series(self, prefix: str) -> np.ndarray:
        """All ticks of a flattened rotation column group, shape (N, 3, 3)."""
        cols = [f"{prefix}_{r}{c}" for r in range(3) for c in range(3)]
        return np.stack([self.data[c] for c in cols], axis=1).reshape(-1, 3, 3)

    def vector_series(self, prefix: str) -> np.ndarray:
        return np.stack([self.data[f"{prefix}_{ax}"] for ax in "xyz"], axis=1)

    def save_csv(self, path) -> None:
        cols = list(self.data.keys())
        n = self.n_ticks
        lines = ["# " + json.dumps(self.meta, sort_keys=True), ",".join(cols)]
        arrays = [self.data[c] for c in cols]
        for k in range(n):
            lines.append(",".join(f"{a[k]:.17g}" for a in arrays))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load_csv(cls, path) -> "TrajectoryRecord":
        text = Path(path).read_text().splitlines()
        meta = json.loads(text[0][2:]) if text[0].startswith("# ") else {}
        cols = text[1].split(",")
        rows = [line.split(",") for line in text[2:] if line]
        arr = np.array([[float(x) for x in row] for row in rows])
        data = {c: arr[:, i] for i, c in enumerate(cols)}
        return cls(meta=meta, data=data)


class _Columns:
    """Append-only column store with a fixed column order."""

    def __init__(self, keys: list[str]):
        self.keys = keys
        self.cols: list[list[float]] = [[] for _ in keys]

    def append(self, values: list[float]) -> None:
        for col, v in zip(self.cols, values):
            col.append(v)

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(v, dtype=float) for k, v in zip(self.keys, self.cols)}


class SimulationEngine:
    """One closed-loop session: operator command in, one tick of coupled
    network + navigation dynamics out, with monitors recorded per tick.

    The engine is deterministic: time is tick-indexed, all randomness flows
    from the seeded generator, and nothing reads the wall clock.
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.gains = SyncGains(cfg.k_s)
        self.dt = cfg.dt
        self.tick_index = 0
        self.trial_id = 0
        self.trial_start_tick = 0
        self.start_pressed = True
        self.gap_before_next = False
        self.aborted: str | None = None

        if cfg.initial.bodies == "identity":
            rots = np.stack([so3.I3.copy() for _ in range(cfg.n)])
        else:
            rots = np.stack(
                [so3.exp_so3(_random_rotvec_in_ball(self.rng, cfg.initial.spread_rad)) for _ in range(cfg.n)]
            )
        self.net = NetworkState(rotations=rots)
        r_bar0 = align_z_axis(self.net.d_bar)
        self.qa = QuasiAverageState(r_bar0)
        if cfg.initial.leader_offset_rad > 0.0:
            offset = so3.exp_so3(_random_rotvec_in_ball(self.rng, cfg.initial.leader_offset_rad))
            self.leader = LeaderState(so3.normalize_rotation(r_bar0 @ offset))
        else:
            self.leader = LeaderState(r_bar0.copy())

        if cfg.reference.mode == "fixed":
            d_r = np.asarray(cfg.reference.d_r, dtype=float)
            d_r = d_r / np.linalg.norm(d_r)
        else:
            d_r = random_reference(self.rng, self.net.d_bar, cfg.reference.max_angle_deg)
        self.reference = ReferenceState(align_z_axis(d_r))
        self.period_ticks = max(1, int(round(cfg.reference.period_s / cfg.dt)))

        self.operator_model: OperatorModel | None = None
        self.scripted: ScriptedOperator | None = None
        if cfg.operator.kind == "passive_default":
            self.operator_model = OperatorModel.from_structure(passive_reference_model(), 1.0 / cfg.dt)
        elif cfg.operator.kind == "model_file":
            tm, rate = load_model(cfg.operator.path)
            if abs(rate - 1.0 / cfg.dt) > 1e-9:
                tm_rate = 1.0 / cfg.dt
                log.warning("model file rate %.3f Hz overridden by scenario rate %.3f Hz", rate, tm_rate)
            self.operator_model = OperatorModel.from_structure(tm, 1.0 / cfg.dt)
        elif cfg.operator.kind == "scripted":
            self.scripted = ScriptedOperator(list(cfg.operator.schedule))

        if cfg.autonomous.kind == "consensus":
            if isinstance(cfg.autonomous.graph, str):
                self.graph = ring_graph(cfg.n) if cfg.autonomous.graph == "ring" else complete_graph(cfg.n)
            else:
                self.graph = [list(nb) for nb in cfg.autonomous.graph]
        else:
            self.graph = None

        self.ledger = EnergyLedger()
        keys = ["t", "trial_id", "start_pressed"]
        for i in range(cfg.n):
            keys += [f"body{i}_{a}{b}" for a in range(3) for b in range(3)]
        for name in ("Rbar", "Rl", "Rr"):
            keys += [f"{name}_{a}{b}" for a in range(3) for b in range(3)]
        for name in ("dbar", "dl", "dr", "omega_tilde", "whs", "whb"):
            keys += [f"{name}_{ax}" for ax in "xyz"]
        keys += [
            "e1", "e2", "u1", "u2", "omega_a_norm",
            "S_r", "S_rl", "passivity_integrand", "passivity_integral", "bound_B",
            "lemma_h", "lemma_on_boundary", "assum_min_eig", "assum_pd", "gap_before",
        ]
        self._columns = _Columns(keys)
        self._pd_warned_trial = -1

    @property
    def t(self) -> float:
        return self.tick_index * self.dt

    def set_reference(self, d_r) -> None:
        d_r = np.asarray(d_r, dtype=float)
        self.reference = ReferenceState(align_z_axis(d_r / np.linalg.norm(d_r)))
        self.trial_id += 1
        self.trial_start_tick = self.tick_index

    def press_start(self) -> None:
        self.start_pressed = True

    def _operator_signals(self, omega_h_s_live: np.ndarray | None) -> OperatorSignals:
        e2 = compute_error(self.leader, self.reference)
        if self.operator_model is not None:
            return synthetic_operator_step(self.operator_model, e2, self.leader, self.dt)
        if omega_h_s_live is not None:
            omega_s = saturate_norm(np.asarray(omega_h_s_live, dtype=float))
        elif self.scripted is not None:
            omega_s = saturate_norm(self.scripted.command(self.t))
        else:
            omega_s = np.zeros(3)
        omega_b = self.leader.rotation.T @ omega_s
        return OperatorSignals(error_e=e2, u_h=omega_b[:2].copy(), omega_h_body=omega_b, omega_h_spatial=omega_s)

    def _autonomous_raw(self, net: NetworkState) -> np.ndarray:
        if self.graph is None:
            return np.zeros(3 * net.n)
        return demo_autonomous_law(net, self.graph, self.cfg.autonomous.gain)

    def maybe_change_reference(self) -> bool:
        """Random-reference schedule: redraw at trial boundaries (not at t=0)."""
        if (
            self.cfg.reference.mode == "random"
            and self.tick_index > 0
            and (self.tick_index - self.trial_start_tick) >= self.period_ticks
        ):
            d_r = random_reference(self.rng, self.net.d_bar, self.cfg.reference.max_angle_deg)
            self.set_reference(d_r)
            return True
        return False

    def tick(self, omega_h_s_live: np.ndarray | None = None) -> None:
        """Record the current state with this tick's commands, then advance."""
        self.maybe_change_reference()
        sig = self._operator_signals(omega_h_s_live)
        omega_tilde = human_filter_command(self.qa, self.leader, self.gains)
        omega_l = leader_velocity(self.leader, self.qa, sig.omega_h_spatial, self.gains)
        raw_a = self._autonomous_raw(self.net)
        cmd = assemble_command(self.net, omega_tilde, raw_a)

        energy_tick(self.ledger, self.qa, self.leader, self.reference, sig.omega_h_body, self.gains, self.dt)
        lemma = lemma1_monitor(self.qa, self.reference)
        assum = assumption_monitor(self.leader, self.reference)
        if not assum["positive_definite"] and self._pd_warned_trial != self.trial_id:
            log.warning(
                "PositivityViolation: sym(R_rl) lost positive definiteness at t=%.3f (trial %d)",
                self.t,
                self.trial_id,
            )
            self._pd_warned_trial = self.trial_id

        row = [self.t, float(self.trial_id), float(self.start_pressed)]
        row += self.net.rotations.reshape(-1).tolist()
        row += self.qa.rotation.reshape(-1).tolist()
        row += self.leader.rotation.reshape(-1).tolist()
        row += self.reference.rotation.reshape(-1).tolist()
        for v in (self.net.d_bar, self.leader.d_l, self.reference.d_r, omega_tilde, sig.omega_h_spatial, sig.omega_h_body):
            row += (float(v[0]), float(v[1]), float(v[2]))
        row += (
            float(sig.error_e[0]), float(sig.error_e[1]), float(sig.u_h[0]), float(sig.u_h[1]),
            float(np.linalg.norm(cmd.omega_a)),
            self.ledger.s_r[-1], self.ledger.s_rl[-1], self.ledger.integrand[-1],
            self.ledger.integral[-1], self.ledger.bound[-1],
            lemma["h_value"], float(lemma["on_boundary"]),
            assum["sym_Rrl_min_eig"], float(assum["positive_definite"]),
            float(self.gap_before_next),
        )
        self.gap_before_next = False
        self._columns.append(row)

        if self.cfg.integrator == "lie_euler":
            self.net = step_network(self.net, cmd, self.dt)
            self.qa = QuasiAverageState(so3.step_rotation_spatial(self.qa.rotation, omega_tilde, self.dt))
            self.leader = LeaderState(so3.step_rotation(self.leader.rotation, omega_l, self.dt))
        else:
            self._rkmk4_advance(sig.omega_h_spatial)
        self.tick_index += 1

    def _coupled_field(self, rots: np.ndarray, r_bar: np.ndarray, r_l: np.ndarray, omega_h_s: np.ndarray):
        """Stage velocities of the coupled ODE with the human command held."""
        net = NetworkState(rotations=rots)
        qa = QuasiAverageState(so3.normalize_rotation(r_bar))
        leader = LeaderState(so3.normalize_rotation(r_l))
        omega_tilde = human_filter_command(qa, leader, self.gains)
        omega_l = leader_velocity(leader, qa, omega_h_s, self.gains)
        raw_a = self._autonomous_raw(net)
        cmd = assemble_command(net, omega_tilde, raw_a)
        return cmd.omega_total.reshape(-1, 3), omega_tilde, omega_l

    def _rkmk4_advance(self, omega_h_s: np.ndarray) -> None:
        """4th-order Munthe-Kaas step of the product state (bodies, R_bar, R_l).

        Bodies and leader integrate in the body frame, the quasi-average in the
        spatial frame; each component combines stages with its own dexpinv.
        """
        dt = self.dt
        n = self.net.n
        rots0 = self.net.rotations
        r_bar0 = self.qa.rotation
        r_l0 = self.leader.rotation

        def advance(us_body: np.ndarray, u_bar: np.ndarray, u_l: np.ndarray):
            new = np.empty_like(rots0)
            for i in range(n):
                new[i] = rots0[i] @ so3.exp_so3(us_body[i])
            return new, so3.exp_so3(u_bar) @ r_bar0, r_l0 @ so3.exp_so3(u_l)

        k1_b, k1_bar, k1_l = self._coupled_field(rots0, r_bar0, r_l0, omega_h_s)
        u2_b, u2_bar, u2_l = 0.5 * dt * k1_b, 0.5 * dt * k1_bar, 0.5 * dt * k1_l
        f2 = self._coupled_field(*advance(u2_b, u2_bar, u2_l), omega_h_s)
        k2_b = np.stack([so3.dexpinv_body(u2_b[i], f2[0][i]) for i in range(n)])
        k2_bar = so3.dexpinv_spatial(u2_bar, f2[1])
        k2_l = so3.dexpinv_body(u2_l, f2[2])

        u3_b, u3_bar, u3_l = 0.5 * dt * k2_b, 0.5 * dt * k2_bar, 0.5 * dt * k2_l
        f3 = self._coupled_field(*advance(u3_b, u3_bar, u3_l), omega_h_s)
        k3_b = np.stack([so3.dexpinv_body(u3_b[i], f3[0][i]) for i in range(n)])
        k3_bar = so3.dexpinv_spatial(u3_bar, f3[1])
        k3_l = so3.dexpinv_body(u3_l, f3[2])

        u4_b, u4_bar, u4_l = dt * k3_b, dt * k3_bar, dt * k3_l
        f4 = self._coupled_field(*advance(u4_b, u4_bar, u4_l), omega_h_s)
        k4_b = np.stack([so3.dexpinv_body(u4_b[i], f4[0][i]) for i in range(n)])
        k4_bar = so3.dexpinv_spatial(u4_bar, f4[1])
        k4_l = so3.dexpinv_body(u4_l, f4[2])

        u_b = (dt / 6.0) * (k1_b + 2.0 * k2_b + 2.0 * k3_b + k4_b)
        u_bar = (dt / 6.0) * (k1_bar + 2.0 * k2_bar + 2.0 * k3_bar + k4_bar)
        u_l = (dt / 6.0) * (k1_l + 2.0 * k2_l + 2.0 * k3_l + k4_l)
        new_rots, new_bar, new_l = advance(u_b, u_bar, u_l)
        for i in range(n):
            new_rots[i] = so3.normalize_rotation(new_rots[i])
        self.net = NetworkState(rotations=new_rots)
        self.qa = QuasiAverageState(so3.normalize_rotation(new_bar))
        self.leader = LeaderState(so3.normalize_rotation(new_l))

    def record(self) -> TrajectoryRecord:
        meta = {"config": self.cfg.to_dict(), "aborted": self.aborted}
        return TrajectoryRecord(meta=meta, data=self._columns.to_arrays())


def run_scenario(cfg: ScenarioConfig) -> TrajectoryRecord:
    """Run the full closed loop for the configured duration; deterministic
    under a fixed seed. Aborts with a flagged partial record if the average
    direction degenerates mid-run."""
    engine = SimulationEngine(cfg)
    n_ticks = int(round(cfg.duration_s / cfg.dt))
    try:
        for _ in range(n_ticks):
            engine.tick()
    except DegenerateAverage as exc:
        engine.aborted = str(exc)
        log.warning("scenario aborted: %s", exc)
    return engine.record()


@dataclass
class CheckResult:
    status: str  # pass | fail | excluded | skipped
    value: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def verify_invariants(
    record: TrajectoryRecord,
    paired: TrajectoryRecord | None = None,
    slack_c: float = DISSIPATION_SLACK_C,
) -> dict[str, CheckResult]:
    """Check the trajectory-level invariants on a record (and a paired record
    for the stealthiness comparison). Every check reads only record columns."""
    out: dict[str, CheckResult] = {}
    data = record.data
    dt = data["t"][1] - data["t"][0] if len(data["t"]) > 1 else 0.0

    # z-axis tracking of the quasi-average
    r_bar = record.rotation_series("Rbar")
    d_bar = record.vector_series("dbar")
    z_err = float(np.max(np.linalg.norm(r_bar[:, :, 2] - d_bar, axis=1)))
    out["z_axis_tracking"] = CheckResult("pass" if z_err <= Z_AXIS_TOL else "fail", z_err)

    # orthonormality of every recorded rotation
    worst = 0.0
    n_bodies = record.meta.get("config", {}).get("n", 0)
    prefixes = [f"body{i}" for i in range(n_bodies)] + ["Rbar", "Rl", "Rr"]
    for p in prefixes:
        if f"{p}_00" not in data:
            continue
        rs = record.rotation_series(p)
        err = np.linalg.norm(np.einsum("nji,njk->nik", rs, rs) - so3.I3, axis=(1, 2))
        worst = max(worst, float(np.max(err)))
    out["orthonormality"] = CheckResult("pass" if worst <= 1e-9 else "fail", worst)

    # Lemma 1 forward invariance, conditional on the assumption monitor
    pd_ok = bool(np.all(data["assum_pd"] > 0.5))
    min_h = float(np.min(data["lemma_h"]))
    if not pd_ok:
        out["lemma1"] = CheckResult("excluded", min_h, "assumption monitor failed; scenario excluded")
    else:
        out["lemma1"] = CheckResult("pass" if min_h >= -1e-9 else "fail", min_h)

    # dissipation: per-step dV within slack of the bound, within each trial
    s_total = data["S_r"] + data["S_rl"]
    f = data["passivity_integrand"]
    trial = data["trial_id"]
    dv = np.diff(s_total) + 0.5 * (f[:-1] + f[1:]) * dt
    same_trial = trial[:-1] == trial[1:]
    margin = dv - dt * (data["bound_B"][:-1] + 1e-6 + slack_c * dt)
    worst_margin = float(np.max(margin[same_trial])) if np.any(same_trial) else 0.0
    if not pd_ok:
        out["dissipation"] = CheckResult("excluded", worst_margin, "assumption monitor failed")
    else:
        out["dissipation"] = CheckResult("pass" if worst_margin <= 0.0 else "fail", worst_margin)

    # saturation of the human spatial command
    whs = record.vector_series("whs")
    max_cmd = float(np.max(np.linalg.norm(whs, axis=1))) if len(whs) else 0.0
    out["saturation"] = CheckResult("pass" if max_cmd <= OMEGA_MAX + 1e-12 else "fail", max_cmd)

    # per-trial convergence of the average to the reference; only trials
    # observed for at least the convergence window can be judged
    d_r = record.vector_series("dr")
    errs = np.linalg.norm(d_bar - d_r, axis=1)
    worst_trial_err = 0.0
    judged = 0
    for tid in np.unique(trial):
        mask = trial == tid
        t_rel = data["t"][mask] - data["t"][mask][0]
        if t_rel[-1] < CONVERGENCE_WINDOW_S - 2 * dt:
            continue
        window = mask.copy()
        window[mask] = t_rel <= CONVERGENCE_WINDOW_S
        worst_trial_err = max(worst_trial_err, float(np.min(errs[window])))
        judged += 1
    if judged == 0:
        out["convergence"] = CheckResult("skipped", 0.0, "no trial observed for a full window")
    elif not pd_ok:
        out["convergence"] = CheckResult("excluded", worst_trial_err, "assumption monitor failed")
    else:
        out["convergence"] = CheckResult("pass" if worst_trial_err < CONVERGENCE_TOL else "fail", worst_trial_err)

    # stealthiness against a paired run
    if paired is not None:
        d_bar_b = paired.vector_series("dbar")
        m = min(len(d_bar), len(d_bar_b))
        dev = float(np.max(np.linalg.norm(d_bar[:m] - d_bar_b[:m], axis=1)))
        out["stealthiness"] = CheckResult("pass" if dev <= STEALTH_TOL else "fail", dev)
    else:
        out["stealthiness"] = CheckResult("skipped", 0.0, "no paired record")

    return out


def pointwise_stealth_error(net: NetworkState, omega_a_raw) -> float:
    """Norm of the average-velocity component of a projected autonomous command."""
    from .network import average_jacobian, collective_jacobian_S

    a = stealthy_projector_A(net)
    js = average_jacobian(net) @ collective_jacobian_S(net)
    return float(np.linalg.norm(js @ (a @ np.asarray(omega_a_raw, dtype=float))))
