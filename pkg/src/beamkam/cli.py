"""Command-line front end: ``beamkam {run,sweep,measure,verify,bounds}``.

Every command writes line-oriented JSON records whose first line is a header
echoing the effective configuration. Nothing time- or host-dependent is
written, so identical inputs give byte-identical outputs.

Exit codes: 0 ok, 1 failed bound check, 2 configuration error, 3 resonant
parameter, 4 diverging Lie series, 5 missing run artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds as bounds_lab
from .config import ConfigError, RunConfig, load_config, with_fields
from .driver import (RunResult, compose_embedding, embedding_sup_norm, load_records, load_state,
                     run_iteration, theta_samples)
from .exceptions import DivergenceWarning, ResonantParameterError
from .measure import MeasureConfig, mc_measure
from .verifier import default_step, direct_integrate, pde_residual, reconstruct_solution

EXIT_OK, EXIT_BOUNDS, EXIT_CONFIG, EXIT_RESONANT, EXIT_DIVERGENCE, EXIT_MISSING = 0, 1, 2, 3, 4, 5

REPORT_FIELDS = {
    "step": "v, b, eps_v, alpha_v, R_rel (low part / eps_v), R_next_rel, realized_ratio, scheduled_ratio, "
            "residual (relative homological residual), screen_margin, max_drift, Omega",
    "final": "status, error, q_sup_norm (sampled sup over theta of ||q||_{a,p+2}), Omega",
}


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _line(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True)


def _write_lines(path: Path, lines: Sequence[str]):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(ln + "\n" for ln in lines))


def _header(command: str, cfg: RunConfig, seed: int, **extra) -> str:
    return _line({"type": "header", "command": command, "config": cfg.effective(), "seed": seed,
                  "fields": REPORT_FIELDS, **extra})


def _parse_grid(text: str | None):
    if text is None:
        return None
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _effective_config(args) -> RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["omega_seed"] = args.seed
    grid = _parse_grid(getattr(args, "epsilon_grid", None))
    if grid is not None:
        overrides["epsilon_grid"] = grid
    return load_config(args.config, **overrides)


def _seed(args) -> int:
    return 0 if args.seed is None else int(args.seed)


# ---------------------------------------------------------------------- run
def _final_line(result: RunResult, cfg: RunConfig, seed: int) -> dict:
    q_sup = embedding_sup_norm(result.state, cfg.a, cfg.p, cfg.embedding_samples, seed) if result.state.chain else 0.0
    return {"type": "final", "status": result.status, "error": result.error, "steps": len(result.records),
            "q_sup_norm": q_sup, "Omega": list(result.normal.Omega)}


def cmd_run(args) -> int:
    cfg = _effective_config(args)
    seed = _seed(args)
    out = Path(args.out)
    beam, forcing, omega = cfg.beam(), cfg.hierarchy(), cfg.omega_vector()
    start = records = None
    if args.resume:
        path = Path(args.resume)
        if not path.exists():
            print(f"missing artifact: snapshot {path}", file=sys.stderr)
            return EXIT_MISSING
        start, records = load_state(path), load_records(path)
    code = EXIT_OK
    try:
        result = run_iteration(beam, forcing, omega, cfg.v_max, cfg.settings(), cfg.s0, cfg.r0, start=start,
                               snapshot_dir=out / "snapshots", start_records=records)
    except ResonantParameterError as exc:
        result, code = exc.partial, EXIT_RESONANT
    except DivergenceWarning as exc:
        result, code = exc.partial, EXIT_DIVERGENCE
    h2 = forcing.validate_H2()
    lines = [_header("run", cfg, seed, omega=list(omega), H2_passed=h2.passed, H2_messages=list(h2.messages),
                     schedule=[vars(r) for r in result.schedule.rows]),
             _line({"type": "initial", **result.initial})]
    lines += [_line({"type": "step", **r.to_dict()}) for r in result.records]
    lines.append(_line(_final_line(result, cfg, seed)))
    _write_lines(out / "report.jsonl", lines)
    b = max((link.b for link in result.state.chain), default=cfg.b_schedule[0])
    rows = ["sample," + ",".join(f"theta_{i}" for i in range(b)) + "," + ",".join(
        f"q_{j}" for j in range(beam.n_modes))]
    for i, th in enumerate(theta_samples(b, cfg.embedding_samples, seed)):
        q, _ = compose_embedding(result.state, th)
        rows.append(",".join([str(i)] + [repr(float(x)) for x in th] + [repr(float(x)) for x in q]))
    _write_lines(out / "embedding.csv", rows)
    if code == EXIT_RESONANT:
        print(f"resonant parameter: k={result.error['k']} l={result.error['l']} at step {result.error['step']}",
              file=sys.stderr)
    elif code == EXIT_DIVERGENCE:
        print(f"divergent Lie series at step {result.error['step']}", file=sys.stderr)
    return code


# -------------------------------------------------------------------- sweep
def _slope(xs, ys):
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    ok = (ys > 0) & np.isfinite(ys)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)[0])


def cmd_sweep(args) -> int:
    cfg = _effective_config(args)
    seed = _seed(args)
    grid = list(cfg.epsilon_grid)
    if len(grid) < 3:
        raise ConfigError([f"epsilon_grid: a sweep needs at least 3 points, got {len(grid)}"])
    omega = cfg.omega_vector()
    lines = [_header("sweep", cfg, seed, omega=list(omega))]
    eps_ok, q_norms, r_norms = [], [], []
    for eps in grid:
        c = with_fields(cfg, epsilon=eps)
        res = run_iteration(c.beam(), c.hierarchy(), omega, c.v_max, c.settings(), c.s0, c.r0,
                            raise_errors=False)
        q = embedding_sup_norm(res.state, c.a, c.p, c.embedding_samples, seed) if res.state.chain else 0.0
        r_final = res.records[-1].R_next_norm if res.records else None
        lines.append(_line({"type": "point", "eps": eps, "status": res.status, "error": res.error,
                            "steps": len(res.records), "q_sup_norm": q, "R_final_norm": r_final,
                            "max_drift": res.normal.max_drift()}))
        if res.status in ("ok", "contraction_lost"):
            eps_ok.append(eps)
            q_norms.append(q)
            r_norms.append(r_final if r_final is not None else 0.0)
    q_slope, r_slope = _slope(eps_ok, q_norms), _slope(eps_ok, r_norms)
    lines.append(_line({"type": "fit", "q_slope": q_slope, "R_slope": r_slope, "n_points": len(eps_ok),
                        "target_q_slope": 0.5 - cfg.rho / 8.0,
                        "note": None if q_slope is not None else "slope undefined (fewer than 2 positive norms)"}))
    _write_lines(Path(args.out) / "sweep.jsonl", lines)
    return EXIT_OK


# ------------------------------------------------------------------ measure
def cmd_measure(args) -> int:
    cfg = _effective_config(args)
    seed = _seed(args)
    mcfg = MeasureConfig(m=cfg.m, N=cfg.N, rho=cfg.rho, s0=cfg.s0, r0=cfg.r0, b_schedule=cfg.b_schedule,
                         K_meas=cfg.K_meas, seed=seed)
    est = mc_measure(cfg.v_max, cfg.samples, cfg.epsilon_grid, mcfg)
    out = Path(args.out)
    _write_lines(out / "measure.csv", est.csv_lines())
    lines = [_header("measure", cfg, seed)]
    lines += [_line({"type": "row", **vars(r)}) for r in est.rows]
    lines.append(_line({"type": "fit", "fitted_C": est.fitted_C, "fitted_exponent": est.fitted_exponent,
                        "beta": est.beta, "neglected_tail": est.neglected_tail, "notes": est.notes}))
    _write_lines(out / "measure.jsonl", lines)
    return EXIT_OK


# ------------------------------------------------------------------- verify
def _latest_snapshot(out: Path) -> Path | None:
    snaps = sorted((out / "snapshots").glob("state_*.txt"))
    return snaps[-1] if snaps else None


def cmd_verify(args) -> int:
    cfg = _effective_config(args)
    seed = _seed(args)
    out = Path(args.out)
    missing = []
    if not (out / "report.jsonl").exists():
        missing.append(f"{out / 'report.jsonl'} (run the 'run' command first)")
    snap = _latest_snapshot(out)
    if snap is None:
        missing.append(f"{out / 'snapshots'}/state_*.txt")
    if missing:
        for m in missing:
            print(f"missing artifact: {m}", file=sys.stderr)
        return EXIT_MISSING
    state = load_state(snap)
    beam, forcing, omega = cfg.beam(), cfg.hierarchy(), cfg.omega_vector()
    h = default_step(beam)
    if cfg.window is not None:
        window = cfg.window
    else:
        b = max((link.b for link in state.chain), default=cfg.b_schedule[0])
        window = 2.0 * math.pi / float(np.min(np.abs(omega[:b])))
    t = h * np.arange(int(round(window / h)) + 1)
    rec = reconstruct_solution(state.chain, beam, omega, t)
    rep = pde_residual(rec.u, t, rec.x, forcing, beam, omega)
    base = pde_residual(np.zeros_like(rec.u), t, rec.x, forcing, beam, omega)
    traj = direct_integrate(rec.q[0], beam.mu * rec.chi[0], forcing, beam, omega, (0.0, float(t[-1])), h)
    dist = float(np.max(np.abs(traj.q - rec.q)))
    lines = [_header("verify", cfg, seed, snapshot=snap.name, steps=state.v, window=window,
                     columns={"trajectory.csv": "t, q_rec_j, q_int_j", "residual.csv": "t, sup_x |residual|"}),
             _line({"type": "residual", **rep.summary(), "integration_distance": dist,
                    "residual_0_steps": base.sup,
                    "ratio_to_0_steps": rep.sup / base.sup if base.sup > 0 else None})]
    _write_lines(out / "verify.jsonl", lines)
    n = beam.n_modes
    rows = ["t," + ",".join(f"q_rec_{j}" for j in range(n)) + "," + ",".join(f"q_int_{j}" for j in range(n))]
    for i, ti in enumerate(t):
        rows.append(",".join([repr(float(ti))] + [repr(float(x)) for x in rec.q[i]]
                             + [repr(float(x)) for x in traj.q[i]]))
    _write_lines(out / "trajectory.csv", rows)
    _write_lines(out / "residual.csv", ["t,sup_residual"] + [f"{float(a)!r},{float(b)!r}"
                                                              for a, b in zip(rep.t, rep.sup_t)])
    return EXIT_OK


# ------------------------------------------------------------------- bounds
def cmd_bounds(args) -> int:
    seed = _seed(args)
    checks = bounds_lab.default_suite(seed=seed)
    lines = [_line({"type": "header", "command": "bounds", "seed": seed, "n_checks": len(checks)})]
    lines += [_line({"type": "check", **c.to_dict()}) for c in checks]
    failed = [c for c in checks if not c.passed]
    lines.append(_line({"type": "summary", "passed": len(checks) - len(failed), "failed": len(failed)}))
    _write_lines(Path(args.out) / "bounds.jsonl", lines)
    return EXIT_OK if not failed else EXIT_BOUNDS


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "measure": cmd_measure, "verify": cmd_verify, "bounds": cmd_bounds}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamkam", description="Quasi-periodic beam tori by KAM iteration.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "bounds", help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="seed for omega sampling, Monte Carlo and theta samples")
        p.add_argument("--out", default="out", help="output directory")
        if name in ("sweep", "measure"):
            p.add_argument("--epsilon-grid", default=None, help="comma-separated epsilon values")
        if name == "run":
            p.add_argument("--resume", default=None, help="continue from a state snapshot")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
