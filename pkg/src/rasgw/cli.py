"""Command-line entry point: ``rasgw {dist,flow,ablate,replay}``.

Every result file is accompanied by a run manifest holding the exact argument
vector; ``rasgw replay MANIFEST`` re-executes it and reproduces the numbers
bitwise (timings excluded).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .core import (
    CloudParseError,
    DomainError,
    EstimatorSpec,
    RngStream,
    ScaleFamily,
    load_csv,
    match_sizes,
    pad_to_common,
    save_csv,
)
from .estimators import estimate
from .gradflow import FlowConfig, FlowDivergedError, ReferenceMetric, run_flow
from .synthetic import flow_problem

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3
METHODS = ("sgw", "max-sgw", "dsgw", "ebsgw", "rpsgw", "rasgw", "iwrasgw")


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: list[str]
    spec: dict
    seed: int
    version: str = __version__
    backend: str = _kernels.BACKEND
    wall_time_s: float = 0.0
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")


# --- argument parsing ----------------------------------------------------------


def _add_estimator_flags(p: argparse.ArgumentParser, default_method: str = "rasgw", methods=METHODS) -> None:
    p.add_argument("--method", choices=methods, default=default_method)
    p.add_argument("--projections", "-M", type=int, default=500, help="number of directions M")
    p.add_argument("--inner", "-L", type=int, default=50, help="directions per importance block (L)")
    p.add_argument("--outer", "-H", type=int, default=1, help="number of importance blocks (H)")
    p.add_argument("--kappa", type=float, default=50.0)
    p.add_argument("--family", choices=("vmf", "ps"), default="ps")
    p.add_argument("--energy", choices=("exp", "id"), default="exp")
    p.add_argument("--opt-iters", type=int, default=100, help="ascent iterations for max-sgw/dsgw")
    p.add_argument("--step-size", type=float, default=0.05, help="ascent step for max-sgw/dsgw")
    p.add_argument("--restarts", type=int, default=8, help="max-sgw restarts")


def _add_flow_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source-dim", type=int, default=2, help="dimension of the data (target) cloud")
    p.add_argument("--gen-dim", type=int, default=None, help="dimension of the moving cloud (default: 3 if source-dim is 2, else 2)")
    p.add_argument("--target", default="gaussian4", help="gaussian4, gaussian8 or csv:PATH")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--eval-every", type=int, default=100)
    p.add_argument("--reference", choices=[r.value for r in ReferenceMetric], default=ReferenceMetric.GW_CG.value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rasgw", description="Relation-aware sliced Gromov-Wasserstein tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="cap on worker threads (env RA_SGW_THREADS)")

    d = sub.add_parser("dist", parents=[common], help="estimate a discrepancy between two CSV clouds")
    _add_estimator_flags(d)
    d.add_argument("--out", type=Path, default=None, help="JSON result path")
    d.add_argument("mu", type=Path)
    d.add_argument("nu", type=Path)

    f = sub.add_parser("flow", parents=[common], help="gradient flow of a Gaussian cloud onto a target")
    _add_estimator_flags(f, methods=("sgw", "rasgw", "iwrasgw"))
    _add_flow_flags(f)
    f.add_argument("--out", type=Path, required=True, help="output directory")

    a = sub.add_parser("ablate", parents=[common], help="sweep kappa or the number of projections")
    _add_estimator_flags(a)
    a.add_argument("--param", choices=("kappa", "projections"), required=True)
    a.add_argument("--values", required=True, help="comma-separated list")
    a.add_argument("--repeats", type=int, default=10)
    a.add_argument("--scenario", choices=("dist", "flow"), default="dist")
    a.add_argument("--mu", type=Path, default=None, help="dist scenario: first CSV (default: synthetic pair)")
    a.add_argument("--nu", type=Path, default=None, help="dist scenario: second CSV")
    _add_flow_flags(a)
    a.add_argument("--out", type=Path, required=True, help="CSV table path")

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest", type=Path)
    r.add_argument("--threads", type=int, default=None)
    return parser


def _spec_from(args, **override) -> EstimatorSpec:
    kw = dict(
        method=args.method,
        projections=args.projections,
        inner=args.inner,
        outer=args.outer,
        scale=ScaleFamily(args.family, args.kappa),
        energy=args.energy,
        opt_iters=args.opt_iters,
        step_size=args.step_size,
        restarts=args.restarts,
    )
    kw.update(override)
    if isinstance(kw["scale"], tuple):
        kw["scale"] = ScaleFamily(*kw["scale"])
    try:
        return EstimatorSpec(**kw)
    except DomainError as e:
        raise UsageError(str(e)) from e


def _flow_config(args, spec: EstimatorSpec) -> FlowConfig:
    try:
        return FlowConfig(
            estimator=spec,
            steps=args.steps,
            learning_rate=args.lr,
            eval_every=args.eval_every,
            reference_metric=args.reference,
        )
    except DomainError as e:
        raise UsageError(str(e)) from e


def _gen_dim(args) -> int:
    if args.gen_dim is not None:
        return args.gen_dim
    return 3 if args.source_dim == 2 else 2


def _finite(x: float, what: str) -> float:
    if not np.isfinite(x):
        raise FloatingPointError(f"{what} is not finite ({x})")
    return float(x)


# --- commands ------------------------------------------------------------------


def _load_pair(p_mu: Path, p_nu: Path, seed: int):
    mu, nu = load_csv(p_mu), load_csv(p_nu)
    mu, nu = pad_to_common(mu, nu)
    return match_sizes(mu, nu, RngStream(seed, 1))


def cmd_dist(args, argv: list[str]) -> int:
    t0 = time.perf_counter()
    spec = _spec_from(args)
    mu, nu = _load_pair(args.mu, args.nu, args.seed)
    res = estimate(mu, nu, spec, RngStream(args.seed, 0))
    value = _finite(res.value, "estimate")
    print(f"{value:.12g}")
    if args.out is not None:
        manifest = RunManifest(argv, spec.to_dict(), args.seed, wall_time_s=time.perf_counter() - t0, outputs=[str(args.out)])
        payload = {
            "value": value,
            "raw_mean": float(res.raw_mean),
            "M": int(len(res.costs)),
            "kappa": spec.scale.kappa,
            "seed": args.seed,
            "wall_time_s": res.wall_time,
            "method": spec.method.value,
            "stderr": float(res.stderr),
            "manifest": manifest.to_dict(),
        }
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def cmd_flow(args, argv: list[str]) -> int:
    t0 = time.perf_counter()
    spec = _spec_from(args)
    cfg = _flow_config(args, spec)
    src, tgt = flow_problem(args.target, args.source_dim, _gen_dim(args), args.n, args.seed)
    final, trace = run_flow(src, tgt, cfg, RngStream(args.seed, 2**32))
    _finite(trace.records[-1].value, "final flow value")
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "trace.jsonl", out / "final.csv", out / "manifest.json"]
    files[0].write_text(trace.to_jsonl())
    save_csv(final, files[1])
    spec_d = spec.to_dict() | {
        "target": args.target,
        "source_dim": args.source_dim,
        "gen_dim": _gen_dim(args),
        "n": args.n,
        "steps": args.steps,
        "lr": args.lr,
        "eval_every": args.eval_every,
        "reference": args.reference,
    }
    RunManifest(argv, spec_d, args.seed, wall_time_s=time.perf_counter() - t0, outputs=[str(p) for p in files]).write(files[2])
    print(f"{trace.records[0].ref:.12g} -> {trace.records[-1].ref:.12g}")
    return EXIT_OK


def _parse_values(param: str, text: str) -> list:
    try:
        vals = [float(v) if param == "kappa" else int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise UsageError(f"--values must be a comma-separated list of numbers: {e}") from e
    if not vals:
        raise UsageError("--values is empty")
    return vals


def _ablate_metric(args, spec: EstimatorSpec, rep: int, pair) -> float:
    seed = args.seed + rep
    if args.scenario == "dist":
        return estimate(pair[0], pair[1], spec, RngStream(seed, 0)).value
    cfg = _flow_config(args, spec)
    src, tgt = flow_problem(args.target, args.source_dim, _gen_dim(args), args.n, seed)
    _, trace = run_flow(src, tgt, cfg, RngStream(seed, 2**32))
    return trace.records[-1].ref


def cmd_ablate(args, argv: list[str]) -> int:
    t0 = time.perf_counter()
    values = _parse_values(args.param, args.values)
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    pair = None
    if args.scenario == "dist":
        if (args.mu is None) != (args.nu is None):
            raise UsageError("give both --mu and --nu or neither")
        if args.mu is not None:
            pair = _load_pair(args.mu, args.nu, args.seed)
        else:
            src, tgt = flow_problem("gaussian4", 3, 2, args.n, args.seed)
            pair = pad_to_common(tgt, src)
    rows = []
    for v in values:
        if args.param == "kappa":
            spec = _spec_from(args, scale=(args.family, v))
        else:
            spec = _spec_from(args, projections=v)
        metrics, times = [], []
        for rep in range(args.repeats):
            t = time.perf_counter()
            metrics.append(_finite(_ablate_metric(args, spec, rep, pair), "ablation metric"))
            times.append(time.perf_counter() - t)
        m, tm = np.asarray(metrics), np.asarray(times)
        rows.append((args.param, v, m.mean(), m.std(ddof=1) if m.size > 1 else 0.0, tm.mean(), tm.std(ddof=1) if tm.size > 1 else 0.0))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "value", "metric_mean", "metric_std", "time_mean_s", "time_std_s"])
        for r in rows:
            w.writerow([r[0], repr(r[1]), *(repr(float(x)) for x in r[2:])])
    manifest_path = args.out.with_name(args.out.name + ".manifest.json")
    spec_d = _spec_from(args).to_dict() | {"param": args.param, "values": values, "repeats": args.repeats, "scenario": args.scenario}
    RunManifest(argv, spec_d, args.seed, wall_time_s=time.perf_counter() - t0, outputs=[str(args.out), str(manifest_path)]).write(manifest_path)
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        manifest = json.loads(args.manifest.read_text())
        if "manifest" in manifest:
            manifest = manifest["manifest"]
        argv = list(manifest["command"])
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise CloudParseError(f"unreadable manifest {args.manifest}: {e}") from e
    if args.threads is not None:
        argv = [a for i, a in enumerate(argv) if a != "--threads" and (i == 0 or argv[i - 1] != "--threads")]
        argv += ["--threads", str(args.threads)]
    return main(argv)


def _resolve_threads(args) -> None:
    n = getattr(args, "threads", None)
    if n is None and os.environ.get("RA_SGW_THREADS"):
        try:
            n = int(os.environ["RA_SGW_THREADS"])
        except ValueError as e:
            raise UsageError("RA_SGW_THREADS must be an integer") from e
    if n is not None and n < 1:
        raise UsageError("--threads must be >= 1")
    _kernels.set_threads(n)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _resolve_threads(args)
        if args.command == "replay":
            return cmd_replay(args)
        return {"dist": cmd_dist, "flow": cmd_flow, "ablate": cmd_ablate}[args.command](args, argv)
    except UsageError as e:
        print(f"rasgw: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CloudParseError, DomainError, OSError) as e:
        print(f"rasgw: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, FlowDivergedError, ArithmeticError) as e:
        print(f"rasgw: numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
