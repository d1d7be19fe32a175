"""Batch front end: ``odts <command> --config <path> [--out <dir>] [--seed <u64>]``.

Exit status: 0 on success, 1 when a simulation diverges, 2 when the
configuration, data or output directory is invalid, 3 when ``verify`` finds
a failing condition.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import COMMANDS, ExperimentConfig, load_config
from .errors import ConfigurationError, DivergenceError, DomainError
from .sampling import RngStream

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID, EXIT_VERDICT = 0, 1, 2, 3


class _Invalid(Exception):
    pass


def _x0(cfg):
    return None if cfg["run.x0"] == "auto" else cfg["run.x0"]


def _write(out, name, text):
    with open(os.path.join(out, name), "w", newline="") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_counts(path) -> np.ndarray:
    from .simulate import read_trajectory_csv

    try:
        with open(path) as fh:
            first = fh.readline().strip()
        if first == "k,x,y":
            return read_trajectory_csv(path)[1]
        return np.loadtxt(path, dtype=float, ndmin=1)
    except (OSError, ValueError) as exc:
        raise _Invalid(f"cannot read data file {path!r}: {exc}") from None


def run_simulate(cfg: ExperimentConfig, out: str) -> int:
    from .simulate import simulate

    traj = simulate(cfg.model(), x0=_x0(cfg), n=cfg["run.n"], rng=RngStream(cfg["run.seed"]),
                    burn_in=cfg["run.burn_in"])
    _write(out, "trajectory.csv", traj.to_csv())
    return EXIT_OK


def run_verify(cfg: ExperimentConfig, out: str) -> int:
    from .ergodicity import verify_model

    model = cfg.model()
    space = cfg.space()
    if space is not None:
        theta = model.params.vector()
        if not space.contains(theta):
            raise _Invalid(f"parameters {theta.tolist()} violate the {space.kind} parameter space "
                           f"(max violation {space.max_violation(theta):.3g})")
    report = verify_model(model, RngStream(cfg["run.seed"]), replicates=cfg["run.coupling_replicates"],
                          moment_horizon=cfg["run.moment_horizon"])
    _write(out, "verify.report", report.to_text())
    return EXIT_OK if report.verdict else EXIT_VERDICT


def run_fit(cfg: ExperimentConfig, out: str) -> int:
    from .likelihood import stationary_loglik
    from .mle import fit
    from .simulate import simulate

    space = cfg.space()
    rng = RngStream(cfg["run.seed"])
    history, truth = None, None
    if cfg["io.data"]:
        y = _read_counts(cfg["io.data"])
    else:
        if not cfg.has_model:
            raise _Invalid("fit needs either io.data or complete model parameters")
        model = cfg.model()
        traj = simulate(model, n=cfg["run.n"], rng=rng.child(0), burn_in=cfg["run.burn_in"])
        y, history, truth = traj.y, traj.history, model.params.vector()
    res = fit(space, y, x0=_x0(cfg), starts=cfg["run.starts"], rng=rng.child(1))
    summary = {
        "family": space.family.value,
        "coords": list(space.names),
        "theta_hat": [float(t) for t in res.theta_hat],
        "loglik": res.loglik,
        "n": res.n,
        "starts": res.starts,
        "winner": res.winner,
        "converged": res.converged,
        "iterations": res.iterations,
        "active_constraints": res.active_constraints,
        "flags": res.flags,
        "x0": res.x0,
    }
    if truth is not None:
        summary["truth"] = [float(t) for t in truth[: space.dim]]
    m = space.default_truncation() if cfg["run.truncation"] == "auto" else cfg["run.truncation"]
    if history is not None and history.size >= m + 1:
        summary["stationary_loglik"] = stationary_loglik(space.model(res.theta_hat), y, history, m).value
        summary["truncation"] = m
    _write(out, "summary.json", _json(summary))
    return EXIT_OK


def _experiment_outputs(report, out):
    _write(out, "consistency.csv", report.to_csv())
    _write(out, "summary.json", report.summary_json())


def run_consistency(cfg: ExperimentConfig, out: str) -> int:
    from .mle import consistency_experiment

    model = cfg.model()
    report = consistency_experiment(cfg.space(), model.params.vector(), cfg["run.n_grid"], cfg["run.replicates"],
                                    RngStream(cfg["run.seed"]), starts=cfg["run.starts"],
                                    burn_in=cfg["run.burn_in"], x0=_x0(cfg), workers=cfg["run.workers"])
    _experiment_outputs(report, out)
    return EXIT_OK


def run_misspec(cfg: ExperimentConfig, out: str) -> int:
    from .mle import misspecification_experiment

    report = misspecification_experiment(cfg.model(), cfg.space(), cfg["run.n_grid"], cfg["run.replicates"],
                                         RngStream(cfg["run.seed"]), starts=cfg["run.starts"],
                                         burn_in=cfg["run.burn_in"], x0=_x0(cfg), workers=cfg["run.workers"])
    _experiment_outputs(report, out)
    return EXIT_OK


RUNNERS = {
    "simulate": run_simulate,
    "verify": run_verify,
    "fit": run_fit,
    "consistency": run_consistency,
    "misspec": run_misspec,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="odts", description="Simulate, certify and fit observation-driven count models.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="key = value configuration file")
    ap.add_argument("--out", default=None, help="output directory (default: io.out, else the current directory)")
    ap.add_argument("--seed", type=int, default=None, help="override run.seed (unsigned 64-bit)")
    return ap


def run(cfg: ExperimentConfig) -> int:
    out = cfg["io.out"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise _Invalid(f"cannot create output directory {out!r}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise _Invalid(f"output directory {out!r} is not writable")
    _write(out, "resolved.config", cfg.resolved_text())
    return RUNNERS[cfg.command](cfg, out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise _Invalid(f"cannot read config {args.config!r}: {exc}") from None
        cfg = load_config(text, command=args.command, seed=args.seed, out=args.out)
        return run(cfg)
    except (_Invalid, ConfigurationError, DomainError) as exc:
        print(f"odts: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DivergenceError as exc:
        print(f"odts: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
