"""Experiment harness and command-line entry point.

Builds s-sparse unit teachers, sweeps (sparsity, seed) cells through the
RVSCGD solver, and writes reproducible artifacts: per-run trace CSVs, a
summary table of angular errors / loss / recovered sparsity by sparsity
level, a structured JSON summary with precondition and limit-point
diagnostics, and an angle-descent plot.  All CSV/JSON artifacts are
bit-reproducible from an identical configuration; wall-clock times go to a
separate file excluded from that guarantee.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .optimizer import HyperParams, RunResult, TraceRecord, run
from .penalties import PenaltySpec
from .population import ZERO_TOL, angle, population_loss

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "build_teacher",
    "run_experiment",
    "emit_table",
    "emit_angle_plot",
    "main",
]

SUMMARY_MEASURES = ("theta_u_wstar", "theta_w_wstar", "f_u", "u_l0")


def build_teacher(d: int, s: int) -> np.ndarray:
    """Unit teacher with s equal leading entries: s^(-1/2) * (1,...,1,0,...,0)."""
    if not 1 <= s <= d:
        raise ValueError(f"sparsity s={s} must satisfy 1 <= s <= d={d}")
    w = np.zeros(d)
    w[:s] = s ** -0.5
    return w


@dataclass(frozen=True)
class ExperimentConfig:
    hyper: HyperParams
    s_values: tuple[int, ...]
    seeds: tuple[int, ...]
    out_dir: Path
    emit_plot: bool = False

    def __post_init__(self):
        if not self.s_values:
            raise ValueError("at least one sparsity level is required")
        if any(s > self.hyper.d for s in self.s_values):
            raise ValueError("every sparsity level must be <= d")
        if not self.seeds:
            raise ValueError("at least one seed is required")


@dataclass
class RunSummary:
    s: int
    seed: int
    theta_u_wstar: float  # nan when u collapsed to zero
    theta_w_wstar: float
    f_u: float
    u_l0: int
    theta0: float
    iterations: int
    stop_reason: str
    wall_time: float
    result: RunResult


def summarize(s: int, seed: int, result: RunResult, wstar, k: int,
              wall_time: float) -> RunSummary:
    u = result.final.u
    if np.linalg.norm(u) > ZERO_TOL:
        theta_u = angle(u, wstar)
        f_u = population_loss(u, wstar, k)
    else:
        theta_u = np.nan
        f_u = np.nan
    return RunSummary(
        s=s,
        seed=seed,
        theta_u_wstar=theta_u,
        theta_w_wstar=result.diagnostics.theta_bar,
        f_u=f_u,
        u_l0=int(np.count_nonzero(u)),
        theta0=result.precondition.theta0,
        iterations=result.iterations,
        stop_reason=result.stop_reason,
        wall_time=wall_time,
        result=result,
    )


def _fmt(x: float) -> str:
    return "nan" if np.isnan(x) else repr(float(x))


def trace_csv_text(trace: list[TraceRecord]) -> str:
    lines = ["iter,theta,gamma,lagrangian,floss,u_sparsity,step_norm"]
    for r in trace:
        lines.append(f"{r.t},{_fmt(r.theta)},{_fmt(r.gamma)},{_fmt(r.lagrangian)},"
                     f"{_fmt(r.floss)},{r.u_sparsity},{_fmt(r.step_norm)}")
    return "\n".join(lines) + "\n"


def _cell(values, reducer) -> str:
    arr = np.asarray(values, dtype=float)
    return f"{reducer(arr):.4f}"


def emit_table(results: list[RunSummary]) -> str:
    """Summary CSV: one column per sparsity level, per-cell median over seeds."""
    if not results:
        raise ValueError("no results to tabulate")
    levels = sorted({r.s for r in results})
    header = "measure," + ",".join(f"s={s}" for s in levels)
    by_level = {s: [r for r in results if r.s == s] for s in levels}
    rows = [header]
    for measure in SUMMARY_MEASURES:
        cells = [_cell([getattr(r, measure) for r in by_level[s]], np.median)
                 for s in levels]
        rows.append(f"{measure}," + ",".join(cells))
    return "\n".join(rows) + "\n"


def emit_minmax_table(results: list[RunSummary]) -> str:
    levels = sorted({r.s for r in results})
    by_level = {s: [r for r in results if r.s == s] for s in levels}
    rows = ["measure,stat," + ",".join(f"s={s}" for s in levels)]
    for measure in SUMMARY_MEASURES:
        for stat, fn in (("min", np.min), ("max", np.max)):
            cells = [_cell([getattr(r, measure) for r in by_level[s]], fn)
                     for s in levels]
            rows.append(f"{measure},{stat}," + ",".join(cells))
    return "\n".join(rows) + "\n"


def emit_angle_plot(trace: list[TraceRecord], svg_path: Path, csv_path: Path) -> None:
    """Angle-vs-iteration data CSV plus a deterministic SVG line chart."""
    if not trace:
        raise ValueError("cannot plot an empty trace")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csv_path.write_text(
        "iter,theta\n" + "".join(f"{r.t},{_fmt(r.theta)}\n" for r in trace))

    with plt.rc_context({"svg.hashsalt": "rvscgd"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        ts = [r.t for r in trace]
        thetas = [r.theta for r in trace]
        if len(trace) == 1:
            ax.plot(ts, thetas, "o")
        else:
            ax.plot(ts, thetas)
        ax.set_xlabel("iteration")
        ax.set_ylabel("angle(w, w*) [rad]")
        ax.set_title("Angle descent")
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _json_ready(obj):
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return "nan" if np.isnan(x) else x
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def summary_json_text(results: list[RunSummary]) -> str:
    payload = []
    for r in results:
        res = r.result
        payload.append({
            "s": r.s,
            "seed": r.seed,
            "theta_u_wstar": r.theta_u_wstar,
            "theta_w_wstar": r.theta_w_wstar,
            "f_u": r.f_u,
            "u_l0": r.u_l0,
            "theta0": r.theta0,
            "iterations": r.iterations,
            "stop_reason": r.stop_reason,
            "guard_violation_iter": res.guard_violation_iter,
            "monotonicity_flags": res.monotonicity_flags,
            "precondition": asdict(res.precondition) | {"all_ok": res.precondition.all_ok},
            "diagnostics": asdict(res.diagnostics),
        })
    return json.dumps(_json_ready(payload), sort_keys=True, indent=2) + "\n"


def run_experiment(cfg: ExperimentConfig) -> list[RunSummary]:
    """Run every (sparsity, seed) cell and write all artifacts to out_dir."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: list[RunSummary] = []
    for s in cfg.s_values:
        wstar = build_teacher(cfg.hyper.d, s)
        for seed in cfg.seeds:
            hp = replace(cfg.hyper, seed=seed)
            rng = np.random.default_rng(seed)
            t0 = time.perf_counter()
            result = run(hp, wstar, rng=rng)
            wall = time.perf_counter() - t0
            summary = summarize(s, seed, result, wstar, hp.k, wall)
            results.append(summary)
            (out / f"trace_s{s}_seed{seed}.csv").write_text(
                trace_csv_text(result.trace))
        if cfg.emit_plot:
            first = next(r for r in results if r.s == s and r.seed == cfg.seeds[0])
            emit_angle_plot(first.result.trace,
                            out / f"angle_s{s}_seed{cfg.seeds[0]}.svg",
                            out / f"angle_s{s}_seed{cfg.seeds[0]}.csv")
    (out / "summary.csv").write_text(emit_table(results))
    (out / "summary_minmax.csv").write_text(emit_minmax_table(results))
    (out / "summary.json").write_text(summary_json_text(results))
    (out / "runtimes.csv").write_text(
        "s,seed,wall_time_s\n" + "".join(
            f"{r.s},{r.seed},{r.wall_time:.3f}\n" for r in results))
    return results


# ---------------------------------------------------------------------------
# CLI

def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def read_config_file(path: Path) -> dict[str, str]:
    """Simple key-value config: one ``key = value`` pair per line, # comments."""
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {line!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rvscgd",
        description="Sparse filter recovery by relaxed variable splitting "
                    "coarse gradient descent.")
    p.add_argument("--config", type=Path, default=None,
                   help="key=value config file; explicit flags override it")
    p.add_argument("--k", type=int, default=20, help="number of patches")
    p.add_argument("--d", type=int, default=50, help="filter dimension")
    p.add_argument("--s-list", type=_parse_int_list, default=(2, 4, 6, 8, 10),
                   help="comma-separated teacher sparsity levels")
    p.add_argument("--penalty", choices=("l1", "l0", "tl1"), default="l0")
    p.add_argument("--tl1-a", type=float, default=1.0,
                   help="TL1 shape parameter (tl1 penalty only)")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4,
                   help="penalty strength")
    p.add_argument("--beta", type=float, default=1e-3, help="splitting weight")
    p.add_argument("--eta", type=float, default=1e-5, help="learning rate")
    p.add_argument("--delta", type=float, default=0.1, help="initial-angle margin")
    p.add_argument("--prox-param", choices=("ratio", "raw"), default="raw",
                   help="prox strength: ratio = lambda/beta, raw = lambda")
    p.add_argument("--mode", choices=("population", "empirical"), default="population")
    p.add_argument("--samples", type=int, default=1000,
                   help="dataset size (empirical mode)")
    p.add_argument("--resample", action="store_true",
                   help="draw a fresh dataset each iteration (empirical mode)")
    p.add_argument("--seed-list", type=_parse_int_list, default=(0, 1, 2, 3, 4),
                   help="comma-separated run seeds")
    p.add_argument("--max-iters", type=int, default=500_000)
    p.add_argument("--step-tol", type=float, default=1e-6)
    p.add_argument("--out", type=Path, default=Path("rvscgd_out"),
                   help="output directory")
    p.add_argument("--emit-plot", action="store_true",
                   help="write angle-descent SVG + CSV per sparsity level")
    return p


_CONFIG_PARSERS = {
    "k": int, "d": int, "s-list": _parse_int_list, "penalty": str,
    "tl1-a": float, "lambda": float, "beta": float, "eta": float,
    "delta": float, "prox-param": str, "mode": str, "samples": int,
    "resample": lambda v: v.lower() in ("1", "true", "yes"),
    "seed-list": _parse_int_list, "max-iters": int, "step-tol": float,
    "out": Path, "emit-plot": lambda v: v.lower() in ("1", "true", "yes"),
}

_CONFIG_DESTS = {
    "lambda": "lam", "s-list": "s_list", "tl1-a": "tl1_a",
    "prox-param": "prox_param", "seed-list": "seed_list",
    "max-iters": "max_iters", "step-tol": "step_tol", "emit-plot": "emit_plot",
}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        file_values = read_config_file(args.config)
        unknown = set(file_values) - set(_CONFIG_PARSERS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        defaults = {
            _CONFIG_DESTS.get(key, key): _CONFIG_PARSERS[key](val)
            for key, val in file_values.items()
        }
        parser.set_defaults(**defaults)
        args = parser.parse_args(argv)  # reparse so explicit flags win
    return args


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    hyper = HyperParams(
        k=args.k, d=args.d, eta=args.eta, beta=args.beta, lam=args.lam,
        delta=args.delta, penalty=PenaltySpec(args.penalty, a=args.tl1_a),
        prox_param=args.prox_param, mode=args.mode, samples=args.samples,
        resample=args.resample, max_iters=args.max_iters, step_tol=args.step_tol,
    )
    return ExperimentConfig(hyper=hyper, s_values=tuple(args.s_list),
                            seeds=tuple(args.seed_list), out_dir=args.out,
                            emit_plot=args.emit_plot)


def main(argv=None) -> int:
    args = None
    try:
        args = parse_args(argv)
        cfg = config_from_args(args)
        run_experiment(cfg)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        manifest = {"error": f"{type(exc).__name__}: {exc}"}
        try:
            out = Path(getattr(args, "out", "rvscgd_out"))
            out.mkdir(parents=True, exist_ok=True)
            manifest["partial_outputs"] = sorted(
                p.name for p in out.iterdir() if p.is_file())
            (out / "error_manifest.json").write_text(
                json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        except OSError:
            pass
        print(json.dumps(manifest, sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
