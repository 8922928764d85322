"""Command-line entry point for experiments, timing tables and batch solving.

Subcommands:

* ``stability``  noise-free accuracy over random problem instances
* ``noise``      Gaussian pixel-noise sweep
* ``drift``      rotation-drift sweep with local-optimization comparison
* ``timing``     per-solve wall-time table with a 30 fps iteration budget
* ``ransac``     repeated robust estimation on a contaminated synthetic scene
* ``solve``      run a solver or RANSAC on a user-supplied correspondence file
* ``schema``     print / write the machine-readable CSV column manifest

Every run writes a ``manifest.json`` echoing the full configuration next to
its outputs.  ``GRAVHOM_THREADS`` caps worker processes for the experiment
subcommands; results are identical for any worker count.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import schemas, solvers, synth
from .exceptions import GravhomError
from .geometry import Intrinsics, extract_pose, rot_to_quat
from .ransac import RansacConfig, run_ransac

_SOLVER_ALIASES = {"calib": "calibrated", "calibrated": "calibrated",
                   "fhf": "fhf", "frhfr": "frhfr"}
_DEFAULT_SIGMAS = [0.0, 0.1, 0.5, 1.0, 2.0]
_FRAME_BUDGET_US = 33333  # one frame at 30 fps


@dataclass
class RunManifest:
    """Echo of one CLI invocation, written next to its outputs."""

    subcommand: str
    config: dict
    seed: int
    artifact_version: int
    started_at: str
    finished_at: str = ""
    outputs: list[str] = field(default_factory=list)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _worker_count(n_units: int) -> int:
    cap = os.environ.get("GRAVHOM_THREADS", "1")
    try:
        cap = max(1, int(cap))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_units))


def _start_manifest(args: argparse.Namespace) -> RunManifest:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return RunManifest(
        subcommand=args.subcommand, config=config,
        seed=getattr(args, "seed", 0),
        artifact_version=schemas.SCHEMA_VERSION,
        started_at=_now())


def _finish(manifest: RunManifest, outdir: Path, outputs: list[Path]) -> None:
    manifest.finished_at = _now()
    manifest.outputs = [p.name for p in outputs]
    path = outdir / "manifest.json"
    path.write_text(json.dumps(asdict(manifest), indent=2, default=str) + "\n")
    print(f"wrote {', '.join(manifest.outputs)} + manifest.json to {outdir}")


def _outdir(args) -> Path:
    d = Path(args.output)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_json_default,
                               allow_nan=True) + "\n")


def _write_records(outdir: Path, stem: str, schema: str, rows: list[dict],
                   fmt: str) -> Path:
    if fmt == "json":
        path = outdir / f"{stem}.json"
        cols = schemas.SCHEMAS[schema].names
        _dump_json(path, {"schema": schema,
                          "version": schemas.SCHEMA_VERSION,
                          "manifest": "manifest.json",
                          "rows": [{c: r.get(c) for c in cols} for r in rows]})
    else:
        path = outdir / f"{stem}.csv"
        schemas.write_csv(path, schema, rows)
    return path


# ---------------------------------------------------------------------------
# stability / noise / drift
# ---------------------------------------------------------------------------

def _stability_chunk(chunk):
    n, solver, seed, start = chunk
    return synth.stability_experiment(n, solver, base_seed=seed, start=start)


def cmd_stability(args) -> int:
    manifest = _start_manifest(args)
    outdir = _outdir(args)
    solver = _SOLVER_ALIASES[args.solver]
    workers = _worker_count(max(args.instances // 250, 1))
    if workers > 1:
        bounds = np.linspace(0, args.instances, workers + 1).astype(int)
        chunks = [(int(b - a), solver, args.seed, int(a))
                  for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [r for part in pool.map(_stability_chunk, chunks)
                       for r in part]
    else:
        records = synth.stability_experiment(args.instances, solver,
                                             base_seed=args.seed)
    csv_path = _write_records(outdir, "stability", "stability", records,
                              args.format)
    summary = synth.quantile_summary(records)
    summary["manifest"] = "manifest.json"
    summary_path = outdir / "stability_summary.json"
    _dump_json(summary_path, summary)
    _finish(manifest, outdir, [csv_path, summary_path])
    return 0


def _noise_block(block):
    sigma, n, solver, seed, offset = block
    recs, _ = synth.noise_experiment([sigma], n, solver, base_seed=seed,
                                     seed_index_offset=offset)
    return recs


def cmd_noise(args) -> int:
    if not args.noise_sigma:
        raise UsageError("at least one --noise-sigma value is required")
    manifest = _start_manifest(args)
    outdir = _outdir(args)
    solver = _SOLVER_ALIASES[args.solver]
    sigmas = args.noise_sigma
    workers = _worker_count(len(sigmas))
    if workers > 1:
        blocks = [(s, args.instances, solver, args.seed, si * args.instances)
                  for si, s in enumerate(sigmas)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [r for part in pool.map(_noise_block, blocks) for r in part]
        summary = {str(s): synth.quantile_summary(
            [r for r in records if r.get("sigma") == s]) for s in sigmas}
    else:
        records, summary = synth.noise_experiment(sigmas, args.instances,
                                                  solver, base_seed=args.seed)
    csv_path = _write_records(outdir, "noise", "noise", records, args.format)
    summary["manifest"] = "manifest.json"
    summary_path = outdir / "noise_summary.json"
    _dump_json(summary_path, summary)
    _finish(manifest, outdir, [csv_path, summary_path])
    return 0


def cmd_drift(args) -> int:
    manifest = _start_manifest(args)
    outdir = _outdir(args)
    solver = _SOLVER_ALIASES[args.solver]
    records = synth.drift_experiment(args.drift_deg, solver=solver,
                                     noise_sigma=args.noise_sigma,
                                     n_per_level=args.instances,
                                     base_seed=args.seed)
    csv_path = _write_records(outdir, "drift", "drift", records, args.format)
    _finish(manifest, outdir, [csv_path])
    return 0


# ---------------------------------------------------------------------------
# timing
# ---------------------------------------------------------------------------

def _timing_row(solver: str, n: int, warmup: int, seed: int) -> dict:
    """Mean per-solve wall time; median-of-means over batches of 1000."""
    rng = np.random.default_rng(seed)
    total = warmup + n
    prepared = []
    i = 0
    while len(prepared) < total:
        s = synth.instance_seed(seed, i)
        i += 1
        cfg = synth._minimal_config(solver, s, rng)
        try:
            inst = synth.generate(cfg)
        except GravhomError:
            continue
        corrs = inst.correspondences(range(solvers.MIN_SAMPLE[solver]))
        intr = inst.intrinsics if solver == "calibrated" else None
        prepared.append((corrs, intr))

    times = np.empty(total)
    for k, (corrs, intr) in enumerate(prepared):
        t0 = time.perf_counter()
        try:
            solvers.solve(corrs, solver, intr)
        except GravhomError:
            pass
        times[k] = time.perf_counter() - t0
    times = times[warmup:] * 1e6  # microseconds

    batch = 1000
    n_batches = max(len(times) // batch, 1)
    means = [float(np.mean(b)) for b in np.array_split(times[:n_batches * batch]
                                                       if len(times) >= batch
                                                       else times, n_batches)]
    mean_us = float(np.median(means))
    return {"solver": solver, "n_instances": n,
            "mean_us": mean_us,
            "median_us": float(np.median(times)),
            "std_us": float(np.std(times)),
            "budget_iterations": int(_FRAME_BUDGET_US // mean_us)}


def cmd_timing(args) -> int:
    manifest = _start_manifest(args)
    outdir = _outdir(args)
    solver_list = ([_SOLVER_ALIASES[args.solver]] if args.solver
                   else ["calibrated", "fhf", "frhfr"])
    rows = [_timing_row(s, args.instances, args.warmup, args.seed)
            for s in solver_list]
    csv_path = outdir / "timing.csv"
    schemas.write_csv(csv_path, "timing", rows)
    json_path = outdir / "timing.json"
    _dump_json(json_path, {"manifest": "manifest.json", "rows": rows})
    txt_path = outdir / "timing.txt"
    lines = [f"{'solver':<12} {'mean us':>10} {'median us':>10} "
             f"{'iters @30fps':>12}"]
    for r in rows:
        lines.append(f"{r['solver']:<12} {r['mean_us']:>10.1f} "
                     f"{r['median_us']:>10.1f} {r['budget_iterations']:>12d}")
    txt_path.write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _finish(manifest, outdir, [csv_path, json_path, txt_path])
    return 0


# ---------------------------------------------------------------------------
# ransac
# ---------------------------------------------------------------------------

def cmd_ransac(args) -> int:
    manifest = _start_manifest(args)
    outdir = _outdir(args)
    solver = _SOLVER_ALIASES[args.solver]
    timed = args.time_budget_ms is not None
    if timed and args.iterations is not None:
        raise UsageError("--time-budget-ms and --iterations are exclusive")
    max_iter = args.iterations if args.iterations is not None else 1000

    trace_rows, repeat_stats = [], []
    true_counts = []
    for rep in range(args.repeats):
        seed = synth.instance_seed(args.seed, rep)
        rng = np.random.default_rng(seed)
        params = synth.sample_scene_params(rng, distortion=(solver == "frhfr"))
        cfg = synth.SceneConfig(
            n_points=args.points, noise_sigma=args.noise_sigma,
            outlier_fraction=1.0 - args.inlier_fraction,
            rng_seed=seed, **params)
        inst = synth.generate(cfg)
        true_counts.append(int(inst.inlier_mask.sum()))
        rc = RansacConfig(
            solver=solver, threshold_px=args.threshold_px, scale=inst.scale,
            max_iterations=max_iter,
            time_budget_ms=args.time_budget_ms if timed else None,
            seed=seed,
            intrinsics=inst.intrinsics if solver == "calibrated" else None)
        report = run_ransac(inst.pts1, inst.pts2,
                            inst.r1_reported, inst.r2_reported, rc)
        for row in report.trace:
            trace_rows.append({"repeat": rep, **row})
        est, gt = report.inlier_mask, inst.inlier_mask
        tp = int(np.sum(est & gt))
        repeat_stats.append({
            "repeat": rep, "seed": seed,
            "n_iterations": report.n_iterations,
            "stop_reason": report.stop_reason,
            "final_inlier_count": report.best_inlier_count,
            "true_inlier_count": true_counts[-1],
            "precision": tp / max(int(est.sum()), 1),
            "recall": tp / max(int(gt.sum()), 1),
            "elapsed_ms": report.elapsed_ms,
        })

    trace_schema = "ransac_trace_timed" if timed else "ransac_trace"
    trace_path = outdir / "ransac_trace.csv"
    schemas.write_csv(trace_path, trace_schema, trace_rows)

    # Averaged best-so-far inlier curve across repeats, by iteration index.
    max_it = max((r["iteration"] for r in trace_rows), default=0)
    curve = []
    last = {}
    for it in range(1, max_it + 1):
        for r in trace_rows:
            if r["iteration"] == it:
                last[r["repeat"]] = r
        rows_at = [last[k] for k in last]
        curve.append({
            "iteration": it,
            "mean_inlier_count": float(np.mean(
                [r["inlier_count"] for r in trace_rows if r["iteration"] == it])),
            "mean_best_inlier_count": float(np.mean(
                [r["best_inlier_count"] for r in rows_at])),
            "n_repeats": len(rows_at)})
    curve_path = outdir / "ransac_curve.csv"
    schemas.write_csv(curve_path, "ransac_curve", curve)

    final_counts = [r["final_inlier_count"] for r in repeat_stats]
    report_obj = {
        "manifest": "manifest.json",
        "solver": solver,
        "repeats": args.repeats,
        "mean_final_inlier_count": float(np.mean(final_counts)),
        "mean_true_inlier_count": float(np.mean(true_counts)),
        "mean_precision": float(np.mean([r["precision"] for r in repeat_stats])),
        "mean_recall": float(np.mean([r["recall"] for r in repeat_stats])),
        "per_repeat": repeat_stats,
    }
    report_path = outdir / "ransac_report.json"
    _dump_json(report_path, report_obj)
    print(f"mean final inliers {report_obj['mean_final_inlier_count']:.1f} "
          f"(true {report_obj['mean_true_inlier_count']:.1f}), "
          f"precision {report_obj['mean_precision']:.3f}, "
          f"recall {report_obj['mean_recall']:.3f}")
    _finish(manifest, outdir, [trace_path, curve_path, report_path])
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _solution_record(sol, r1, r2) -> dict:
    rec = {"h1": sol.hy.h1, "h2": sol.hy.h2, "h3": sol.hy.h3,
           "f": sol.f, "lam": sol.lam, "residual": sol.residual,
           "solver": sol.tag}
    try:
        pose = extract_pose(sol.hy, r1, r2)
        rec["rotation_quat_wxyz"] = rot_to_quat(pose.rotation).tolist()
        rec["translation_dir"] = pose.translation_dir.tolist()
    except GravhomError as exc:
        rec["pose_error"] = exc.category
    return rec


def cmd_solve(args) -> int:
    manifest = _start_manifest(args)
    outdir = _outdir(args)
    solver = _SOLVER_ALIASES[args.solver]
    corrs, scale = schemas.load_correspondences(args.input, args.sidecar)
    intr = None
    if solver == "calibrated":
        if args.focal is None:
            raise UsageError("--focal is required for the calibrated solver")
        intr = Intrinsics(args.focal, args.lam)

    out = {"manifest": "manifest.json", "solver": solver,
           "n_correspondences": len(corrs), "scale_px": scale}
    if args.ransac:
        rc = RansacConfig(solver=solver, threshold_px=args.threshold_px,
                          scale=scale, max_iterations=args.iterations or 1000,
                          time_budget_ms=args.time_budget_ms,
                          seed=args.seed, intrinsics=intr)
        report = run_ransac(np.array([c.p1 for c in corrs]),
                            np.array([c.p2 for c in corrs]),
                            corrs[0].r1, corrs[0].r2, rc)
        out["mode"] = "ransac"
        out["inlier_count"] = report.best_inlier_count
        out["inlier_mask"] = report.inlier_mask.astype(int).tolist()
        out["n_iterations"] = report.n_iterations
        out["solutions"] = [_solution_record(report.solution,
                                             corrs[0].r1, corrs[0].r2)]
    else:
        m = solvers.MIN_SAMPLE[solver]
        sols = solvers.solve(corrs[:m], solver, intr)
        out["mode"] = "minimal"
        out["sample_indices"] = list(range(m))
        out["solutions"] = [_solution_record(s, corrs[0].r1, corrs[0].r2)
                            for s in sols]
    path = outdir / "solutions.json"
    _dump_json(path, out)
    print(f"{len(out['solutions'])} solution(s) written")
    _finish(manifest, outdir, [path])
    return 0


def cmd_schema(args) -> int:
    text = json.dumps(schemas.schema_manifest(), indent=2)
    if args.output:
        outdir = _outdir(args)
        (outdir / "schema_manifest.json").write_text(text + "\n")
        print(f"wrote schema_manifest.json to {outdir}")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class UsageError(GravhomError):
    category = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error category=usage: {message}", file=sys.stderr)
        raise SystemExit(2)


def _add_common(p, instances_default=1000):
    p.add_argument("--seed", type=int, default=0,
                   help="base seed; equal seeds give bitwise-equal data output")
    p.add_argument("--output", default="out", help="output directory")
    p.add_argument("--instances", type=int, default=instances_default,
                   help="number of problem instances")
    p.add_argument("--format", choices=["csv", "json"], default="csv",
                   help="record file format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gravhom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    solver_kw = dict(choices=sorted(_SOLVER_ALIASES), default="frhfr",
                     help="minimal solver variant")

    p = sub.add_parser("stability", help="noise-free accuracy experiment")
    p.add_argument("--solver", **solver_kw)
    _add_common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("noise", help="pixel-noise sensitivity sweep")
    p.add_argument("--solver", **solver_kw)
    p.add_argument("--noise-sigma", type=float, nargs="+",
                   default=_DEFAULT_SIGMAS,
                   help="pixel sigma levels (space separated)")
    _add_common(p, instances_default=200)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("drift", help="rotation-drift sweep with LO comparison")
    p.add_argument("--solver", **solver_kw)
    p.add_argument("--drift-deg", type=float, nargs="+",
                   default=[0.0, 0.1, 0.5, 1.0, 2.0, 5.0],
                   help="yaw drift magnitudes in degrees")
    p.add_argument("--noise-sigma", type=float, default=0.0,
                   help="pixel noise sigma")
    _add_common(p, instances_default=200)
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("timing", help="per-solve wall-time table")
    p.add_argument("--solver", choices=sorted(_SOLVER_ALIASES), default=None,
                   help="restrict to one solver (default: all)")
    p.add_argument("--warmup", type=int, default=1000,
                   help="warmup solves excluded from statistics")
    _add_common(p, instances_default=10000)
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("ransac", help="robust estimation on synthetic scenes")
    p.add_argument("--solver", **solver_kw)
    p.add_argument("--points", type=int, default=200,
                   help="correspondences per scene")
    p.add_argument("--inlier-fraction", type=float, default=0.7)
    p.add_argument("--noise-sigma", type=float, default=1.0,
                   help="pixel noise sigma on inliers")
    p.add_argument("--threshold-px", type=float, default=4.0)
    p.add_argument("--time-budget-ms", type=float, default=None,
                   help="wall-clock budget per repeat (default: iteration cap)")
    p.add_argument("--iterations", type=int, default=None,
                   help="iteration cap (deterministic mode, default 1000)")
    p.add_argument("--repeats", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_ransac)

    p = sub.add_parser("solve", help="solve a user-supplied correspondence file")
    p.add_argument("--input", required=True, help="correspondence CSV")
    p.add_argument("--sidecar", default=None,
                   help="image-size JSON (default: CSV path with .json)")
    p.add_argument("--solver", **solver_kw)
    p.add_argument("--ransac", action="store_true",
                   help="robust estimation over all rows instead of a "
                        "minimal sample")
    p.add_argument("--threshold-px", type=float, default=4.0)
    p.add_argument("--time-budget-ms", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--focal", type=float, default=None,
                   help="known focal length (calibrated solver)")
    p.add_argument("--lam", type=float, default=0.0,
                   help="known distortion coefficient (calibrated solver)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("schema", help="print the CSV column manifest")
    p.add_argument("--output", default=None,
                   help="write schema_manifest.json to this directory")
    p.set_defaults(func=cmd_schema)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error category=usage: {exc}", file=sys.stderr)
        return 2
    except GravhomError as exc:
        print(f"error category={exc.category}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
