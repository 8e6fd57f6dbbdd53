"""Identification of the structured 2x2 operator transfer matrix from recorded
sessions: dead-time trimming, anti-alias decimation, trial-wise splitting, and
prediction-error minimization by damped Gauss-Newton with multi-start.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import butter, cont2discrete, filtfilt, lfilter

from .errors import DegenerateReference, EmptyAfterTrim, InsufficientData
from .operators import TransferMatrix2x2

N_FREE_PARAMS = 10  # (b1, b0, a1, a0) per diagonal entry plus (h12, h21)

SESSION_COLUMNS = (
    ["t", "e1", "e2", "u1", "u2", "whs_x", "whs_y", "whs_z"]
    + [f"Rl_{i}{j}" for i in range(3) for j in range(3)]
    + [f"Rbar_{i}{j}" for i in range(3) for j in range(3)]
    + [f"Rr_{i}{j}" for i in range(3) for j in range(3)]
    + ["dr_x", "dr_y", "dr_z", "trial_id", "start_pressed"]
)


@dataclass
class SessionLog:
    """Uniform-rate recording of one teleoperation session."""

    t: np.ndarray
    error_e: np.ndarray  # (N, 2)
    u_h: np.ndarray  # (N, 2)
    omega_h_s: np.ndarray  # (N, 3)
    r_l: np.ndarray  # (N, 9) row-major
    r_bar: np.ndarray  # (N, 9)
    r_r: np.ndarray  # (N, 9)
    d_r: np.ndarray  # (N, 3)
    trial_id: np.ndarray  # (N,) int
    start_pressed: np.ndarray  # (N,) bool
    rate_hz: float

    def __post_init__(self):
        dt = np.diff(self.t)
        if len(dt) and (np.any(dt <= 0) or np.max(np.abs(dt - dt[0])) > 1e-9):
            raise ValueError("time stamps must be strictly increasing at a fixed rate")

    def __len__(self) -> int:
        return len(self.t)

    def save_csv(self, path) -> None:
        rows = np.column_stack(
            [
                self.t,
                self.error_e,
                self.u_h,
                self.omega_h_s,
                self.r_l,
                self.r_bar,
                self.r_r,
                self.d_r,
                self.trial_id.astype(float),
                self.start_pressed.astype(float),
            ]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SESSION_COLUMNS)
            for row in rows:
                writer.writerow([f"{x:.17g}" for x in row])

    @classmethod
    def load_csv(cls, path) -> "SessionLog":
        data = np.genfromtxt(path, delimiter=",", names=True)
        if data.ndim == 0:
            data = data.reshape(1)
        cols = {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}
        t = cols["t"]
        if len(t) < 2:
            raise ValueError("session log needs at least two samples")
        rate = 1.0 / float(np.median(np.diff(t)))
        return cls(
            t=t,
            error_e=np.column_stack([cols["e1"], cols["e2"]]),
            u_h=np.column_stack([cols["u1"], cols["u2"]]),
            omega_h_s=np.column_stack([cols["whs_x"], cols["whs_y"], cols["whs_z"]]),
            r_l=np.column_stack([cols[f"Rl_{i}{j}"] for i in range(3) for j in range(3)]),
            r_bar=np.column_stack([cols[f"Rbar_{i}{j}"] for i in range(3) for j in range(3)]),
            r_r=np.column_stack([cols[f"Rr_{i}{j}"] for i in range(3) for j in range(3)]),
            d_r=np.column_stack([cols["dr_x"], cols["dr_y"], cols["dr_z"]]),
            trial_id=cols["trial_id"].astype(int),
            start_pressed=cols["start_pressed"] > 0.5,
            rate_hz=rate,
        )


@dataclass
class IdentificationConfig:
    resample_rate: float = 10.0  # samples/s after decimation
    trim_dead_time: bool = True
    max_iter: int = 80
    restarts: int = 8
    tol: float = 1e-12  # relative cost decrease below which GN stops
    seed: int = 0
    workers: int = 1


@dataclass
class DataSet:
    """Trial segments of (input, output) at a common rate."""

    segments: list[tuple[np.ndarray, np.ndarray]]
    rate_hz: float

    @property
    def n_samples(self) -> int:
        return sum(len(e) for e, _ in self.segments)


@dataclass
class FitResult:
    model: TransferMatrix2x2 | None
    fit_id_percent: list[float]
    fit_id_aggregate: float
    fit_val_percent: list[float]
    fit_val_aggregate: float
    residual_norm: float
    converged: bool
    restarts_used: int = 0
    degenerate: bool = False

    def to_json(self, path) -> None:
        d = {
            "params": None if self.model is None else self.model.to_dict(),
            "fit_id": self.fit_id_percent,
            "fit_id_aggregate": self.fit_id_aggregate,
            "fit_val": self.fit_val_percent,
            "fit_val_aggregate": self.fit_val_aggregate,
            "residual_norm": self.residual_norm,
            "converged": bool(self.converged),
            "restarts_used": self.restarts_used,
            "degenerate": bool(self.degenerate),
        }
        Path(path).write_text(json.dumps(d, indent=2))


def preprocess(log: SessionLog, cfg: IdentificationConfig) -> tuple[DataSet, DataSet]:
    """Trim per-trial dead time, low-pass and decimate, then split trials into
    identification (first half) and validation (second half) sets."""
    factor = log.rate_hz / cfg.resample_rate
    if abs(factor - round(factor)) > 1e-9 or factor < 1:
        raise ValueError(f"rate {log.rate_hz} is not an integer multiple of {cfg.resample_rate}")
    factor = int(round(factor))
    # 4th-order zero-phase low-pass at 0.4 x the target rate
    ba = butter(4, 0.4 * cfg.resample_rate / (log.rate_hz / 2.0))

    trial_ids = sorted(set(log.trial_id.tolist()))
    segments = []
    for tid in trial_ids:
        mask = log.trial_id == tid
        e = log.error_e[mask]
        u = log.u_h[mask]
        pressed = log.start_pressed[mask]
        if cfg.trim_dead_time:
            idx = np.flatnonzero(pressed)
            if len(idx) == 0:
                raise EmptyAfterTrim(f"trial {tid} has no samples after the start press")
            e = e[idx[0] :]
            u = u[idx[0] :]
        if factor > 1:
            if len(e) > 15:  # filtfilt needs padding room; short tails skip the filter
                e = filtfilt(*ba, e, axis=0)
                u = filtfilt(*ba, u, axis=0)
            e = e[::factor]
            u = u[::factor]
        segments.append((e, u))

    half = (len(segments) + 1) // 2
    id_set = DataSet(segments=segments[:half], rate_hz=cfg.resample_rate)
    val_set = DataSet(segments=segments[half:], rate_hz=cfg.resample_rate)
    return id_set, val_set


def _discretize(tm: TransferMatrix2x2, rate_hz: float) -> list[tuple[np.ndarray, np.ndarray]]:
    dt = 1.0 / rate_hz
    filters = []
    for k in range(2):
        b1, b0 = tm.diag_num[k]
        a1, a0 = tm.diag_den[k]
        bz, az, _ = cont2discrete(([b1, b0], [1.0, a1, a0]), dt, method="zoh")
        filters.append((bz[0], az))
    return filters


def _simulate_discrete(filters, offdiag, e: np.ndarray) -> np.ndarray:
    out = np.empty_like(e)
    out[:, 0] = lfilter(filters[0][0], filters[0][1], e[:, 0]) + offdiag[0] * e[:, 1]
    out[:, 1] = lfilter(filters[1][0], filters[1][1], e[:, 1]) + offdiag[1] * e[:, 0]
    return out


def simulate_model(tm: TransferMatrix2x2, e: np.ndarray, rate_hz: float) -> np.ndarray:
    """Zero-initial-state response of the structured model to input e at the
    given rate; each diagonal entry is a ZOH-discretized filter, constants pass
    straight through."""
    return _simulate_discrete(_discretize(tm, rate_hz), tm.offdiag, e)


def fit_percent(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Normalized-residual fit 100 (1 - ||y - y_hat|| / ||y - mean(y)||).

    100 means exact match, 0 means no better than the mean predictor.
    """
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if len(y) != len(y_hat) or len(y) < 2:
        raise ValueError("series must have equal length >= 2")
    denom = np.linalg.norm(y - np.mean(y))
    if denom == 0.0:
        raise DegenerateReference("target series is constant")
    return 100.0 * (1.0 - np.linalg.norm(y - y_hat) / denom)


def _theta_to_model(theta: np.ndarray) -> TransferMatrix2x2:
    return TransferMatrix2x2(
        diag_num=((theta[0], theta[1]), (theta[4], theta[5])),
        diag_den=((np.exp(theta[2]), np.exp(theta[3])), (np.exp(theta[6]), np.exp(theta[7]))),
        offdiag=(theta[8], theta[9]),
    )


def _model_to_theta(tm: TransferMatrix2x2) -> np.ndarray:
    return np.array(
        [
            tm.diag_num[0][0],
            tm.diag_num[0][1],
            np.log(tm.diag_den[0][0]),
            np.log(tm.diag_den[0][1]),
            tm.diag_num[1][0],
            tm.diag_num[1][1],
            np.log(tm.diag_den[1][0]),
            np.log(tm.diag_den[1][1]),
            tm.offdiag[0],
            tm.offdiag[1],
        ]
    )


LOG_PARAM_BOX = 15.0  # |log a| bound keeping the pole search numerically sane


def _residual(theta: np.ndarray, data: DataSet) -> np.ndarray:
    tm = _theta_to_model(theta)
    filters = _discretize(tm, data.rate_hz)
    parts = [(_simulate_discrete(filters, tm.offdiag, e) - u).ravel() for e, u in data.segments]
    return np.concatenate(parts)


def _try_cost(theta: np.ndarray, data: DataSet) -> tuple[np.ndarray | None, float]:
    if np.max(np.abs(theta[[2, 3, 6, 7]])) > LOG_PARAM_BOX:
        return None, np.inf
    try:
        r = _residual(theta, data)
    except (ValueError, np.linalg.LinAlgError):
        return None, np.inf
    c = float(r @ r)
    if not np.isfinite(c):
        return None, np.inf
    return r, c


def _gauss_newton(theta0: np.ndarray, data: DataSet, cfg: IdentificationConfig) -> tuple[np.ndarray, float, bool]:
    """Damped (Levenberg-style) Gauss-Newton with forward-difference Jacobians."""
    theta = theta0.copy()
    r = _residual(theta, data)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    for _ in range(cfg.max_iter):
        jac = np.empty((len(r), len(theta)))
        for j in range(len(theta)):
            h = 1e-6 * max(1.0, abs(theta[j]))
            tp = theta.copy()
            tp[j] += h
            jac[:, j] = (_residual(tp, data) - r) / h
        g = jac.T @ r
        jtj = jac.T @ jac
        improved = False
        for _ in range(12):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj) + 1e-12), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + step
            rt, ct = _try_cost(trial, data)
            if rt is not None and ct < cost:
                rel = (cost - ct) / max(cost, 1e-300)
                theta, r, cost = trial, rt, ct
                lam = max(lam * 0.3, 1e-12)
                improved = True
                if rel < cfg.tol:
                    converged = True
                break
            lam *= 10.0
        if not improved:
            converged = True
            break
        if converged:
            break
    return theta, cost, converged


def _initial_guesses(id_set: DataSet, cfg: IdentificationConfig) -> list[np.ndarray]:
    e_all = np.vstack([e for e, _ in id_set.segments])
    u_all = np.vstack([u for _, u in id_set.segments])
    k_dc, *_ = np.linalg.lstsq(e_all, u_all, rcond=None)
    k_dc = k_dc.T  # (2, 2): u ~ K e
    rng = np.random.default_rng(cfg.seed)
    a0_grid = np.geomspace(0.1, 10.0, cfg.restarts)
    guesses = []
    for i, a0 in enumerate(a0_grid):
        a1 = 2.0 * np.sqrt(a0)
        jitter = 1.0 if i == 0 else 1.0 + 0.1 * rng.standard_normal()
        theta = np.array(
            [
                k_dc[0, 0] * jitter,
                k_dc[0, 0] * a0,
                np.log(a1),
                np.log(a0),
                k_dc[1, 1] * jitter,
                k_dc[1, 1] * a0,
                np.log(a1),
                np.log(a0),
                k_dc[0, 1],
                k_dc[1, 0],
            ]
        )
        guesses.append(theta)
    return guesses


def identify(id_set: DataSet, cfg: IdentificationConfig | None = None) -> FitResult:
    """Prediction-error fit of the structured model on the identification set.

    Multi-start damped Gauss-Newton; the best restart by residual norm wins,
    ties broken by restart index. Never raises on non-convergence: the best
    candidate is returned with converged=False.
    """
    cfg = cfg or IdentificationConfig()
    n = id_set.n_samples
    if n < 10 * N_FREE_PARAMS:
        raise InsufficientData(f"{n} samples < 10 x {N_FREE_PARAMS} free parameters")
    u_all = np.vstack([u for _, u in id_set.segments])
    if np.linalg.norm(u_all - u_all.mean(axis=0)) == 0.0:
        return FitResult(
            model=None,
            fit_id_percent=[float("nan"), float("nan")],
            fit_id_aggregate=float("nan"),
            fit_val_percent=[],
            fit_val_aggregate=float("nan"),
            residual_norm=0.0,
            converged=False,
            degenerate=True,
        )

    guesses = _initial_guesses(id_set, cfg)
    results = []
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_gauss_newton, g, id_set, cfg) for g in guesses]
            results = [f.result() for f in futures]
    else:
        results = [_gauss_newton(g, id_set, cfg) for g in guesses]

    best_idx = min(range(len(results)), key=lambda i: (results[i][1], i))
    theta, cost, converged = results[best_idx]
    model = _theta_to_model(theta)

    fits = _fit_on(model, id_set)
    return FitResult(
        model=model,
        fit_id_percent=fits,
        fit_id_aggregate=float(np.mean(fits)),
        fit_val_percent=[],
        fit_val_aggregate=float("nan"),
        residual_norm=float(np.sqrt(cost)),
        converged=converged,
        restarts_used=len(guesses),
    )


def _fit_on(model: TransferMatrix2x2, data: DataSet) -> list[float]:
    y = np.vstack([u for _, u in data.segments])
    y_hat = np.vstack([simulate_model(model, e, data.rate_hz) for e, _ in data.segments])
    return [fit_percent(y[:, k], y_hat[:, k]) for k in range(2)]


def validate(model: TransferMatrix2x2, val_set: DataSet) -> tuple[list[float], float]:
    """Zero-initial-state simulation fit on held-out trials. Unstable
    candidates are rejected before any simulation."""
    for a1, a0 in model.diag_den:
        if not (a1 > 0.0 and a0 > 0.0):
            raise ValueError("model is unstable; refusing to validate")
    fits = _fit_on(model, val_set)
    return fits, float(np.mean(fits))
