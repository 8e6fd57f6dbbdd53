"""Command-line entry points: simulate, verify, analyze-passivity, identify,
serve, and batch."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


def _cmd_simulate(args) -> int:
    from .scenario import load_config, run_scenario

    cfg = load_config(args.config)
    record = run_scenario(cfg)
    record.save_csv(args.out)
    print(f"wrote {record.n_ticks} ticks to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    from .scenario import TrajectoryRecord, verify_invariants

    record = TrajectoryRecord.load_csv(args.traj)
    paired = TrajectoryRecord.load_csv(args.paired) if args.paired else None
    report = verify_invariants(record, paired=paired)
    failed = 0
    for name, check in report.items():
        print(f"{check.status.upper():8s} {name}: {check.value:.3e} {check.detail}")
        if check.status == "fail":
            failed += 1
    return 1 if failed else 0


def _cmd_analyze_passivity(args) -> int:
    from .analysis import passivity_sweep
    from .operators import load_model

    tm, _ = load_model(args.model)
    report = passivity_sweep(tm, args.omega_min, args.omega_max, args.points)
    report.to_csv(args.out)
    summary_path = Path(args.out).with_suffix(".json")
    report.to_json(summary_path)
    print(json.dumps(report.summary()))
    return 0


def _cmd_identify(args) -> int:
    from .operators import save_model
    from .sysid import IdentificationConfig, SessionLog, identify, preprocess, validate

    log = SessionLog.load_csv(args.input)
    cfg = IdentificationConfig(resample_rate=args.resample, restarts=args.restarts, seed=args.seed)
    id_set, val_set = preprocess(log, cfg)
    result = identify(id_set, cfg)
    if result.model is not None and val_set.segments:
        result.fit_val_percent, result.fit_val_aggregate = validate(result.model, val_set)
    result.to_json(args.out)
    if result.model is not None and args.model_out:
        save_model(result.model, args.model_out)
    print(
        f"converged={result.converged} fit_id={result.fit_id_aggregate:.2f}% "
        f"fit_val={result.fit_val_aggregate:.2f}%"
    )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .scenario import load_config
    from .teleop import create_app

    cfg = load_config(args.config)
    app = create_app(cfg, record_dir=args.record_dir, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _cmd_batch(args) -> int:
    from concurrent.futures import ProcessPoolExecutor

    from .scenario import load_config

    config_paths = sorted(Path(args.configs).glob("*.json"))
    if not config_paths:
        print(f"no .json configs under {args.configs}", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(str(p), str(out_dir / f"{p.stem}.csv")) for p in config_paths]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for path, n in pool.map(_run_one, jobs):
            print(f"{path}: {n} ticks")
    return 0


def _run_one(job: tuple[str, str]) -> tuple[str, int]:
    from .scenario import load_config, run_scenario

    cfg_path, out_path = job
    record = run_scenario(load_config(cfg_path))
    record.save_csv(out_path)
    return out_path, record.n_ticks


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="so3nav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario to a trajectory CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="check trajectory invariants")
    p.add_argument("--traj", required=True)
    p.add_argument("--paired", default=None, help="paired run for the stealthiness check")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("analyze-passivity", help="frequency sweep of the passivity index")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--omega-min", type=float, default=1e-2)
    p.add_argument("--omega-max", type=float, default=1e2)
    p.add_argument("--points", type=int, default=400)
    p.set_defaults(func=_cmd_analyze_passivity)

    p = sub.add_parser("identify", help="fit the operator model from a session log")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-out", default=None)
    p.add_argument("--resample", type=float, default=10.0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("serve", help="run the live teleoperation service")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--record-dir", default=None)
    p.add_argument("--static-dir", default=None, help="serve the browser client from this directory at /ui")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("batch", help="run a directory of scenario configs")
    p.add_argument("--configs", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_batch)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
