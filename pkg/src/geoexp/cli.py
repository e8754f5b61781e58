"""Batch command-line front-end.

Subcommands build maps (`param`), dump traced grids (`trace-dump`), answer
inverse queries (`logmap`), run the analytic sphere experiment
(`error-sphere`), score parameterizations (`metrics`), and solve on-surface
curves (`curve`). Every run writes a manifest capturing all parameters,
seeds, and implicit-evaluation counters; `rerun` replays a manifest and
reproduces outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__, rng
from .curves import build_chart, sample_curve, solve_closed_curve
from .distortion import lscm_energy_corners, sphere_error_experiment, symmetric_dirichlet_corners
from .errors import GeoExpError, SceneError
from .implicit import ProjectionConfig, SmoothingConfig
from .logmap import LogQueryConfig, build_map_mesh, export_obj, load_obj_with_uv, log, multivalued_log
from .scene import load_scene
from .splinemap import fit
from .tracer import TraceParams, dump_trace_csv, radial_trace

EXIT_OK = 0
EXIT_IO = 2
EXIT_NUMERIC = 3
EXIT_CONFIG = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are config errors, not I/O
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_trace_args(p, n_default=None):
    p.add_argument("--scene", required=True, help="scene config file")
    p.add_argument("--seed-point", nargs=3, type=float, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--n", type=int, required=n_default is None, default=n_default)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--alignment-cosine", type=float, default=1.0 / np.sqrt(2.0))
    p.add_argument("--kappa", type=float, default=1e3)
    p.add_argument("--no-smoothing", action="store_true")
    p.add_argument("--no-substepping", action="store_true")
    p.add_argument("--raw-gradients", action="store_true",
                   help="skip Monte Carlo gradient smoothing (exact-SDF fast path)")
    p.add_argument("--epsilon", type=float, default=1e-4, help="gradient smoothing ball radius")
    p.add_argument("--gradient-samples", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=1e-10, help="projection tolerance")


def _add_common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="master seed for all sampling")
    p.add_argument("--threads", type=int, default=0,
                   help="cap module-level parallelism (0 = default); GEOEXP_THREADS equivalent")


def build_parser() -> _Parser:
    ap = _Parser(prog="geoexp", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("param", help="trace, fit, and mesh a local map; write OBJ + CSV")
    _add_trace_args(p)
    p.add_argument("--interior-samples", type=int, default=10000)
    p.add_argument("--boundary-samples", type=int, default=0, help="0 means 8m")
    p.add_argument("--project-mesh", action="store_true", help="project mesh vertices to the isosurface")
    _add_common(p)

    p = sub.add_parser("trace-dump", help="trace and write the raw grid CSV")
    _add_trace_args(p)
    _add_common(p)

    p = sub.add_parser("logmap", help="inverse-map queries against a freshly built map")
    _add_trace_args(p)
    p.add_argument("--interior-samples", type=int, default=10000)
    p.add_argument("--boundary-samples", type=int, default=0)
    p.add_argument("--max-radius", type=float, default=1e-2)
    p.add_argument("--query", nargs=3, type=float, action="append", required=True,
                   metavar=("X", "Y", "Z"))
    p.add_argument("--multi", action="store_true", help="report all preimages")
    _add_common(p)

    p = sub.add_parser("error-sphere", help="mean error vs the analytic sphere exponential map")
    p.add_argument("--m-values", nargs="+", type=int, default=[5, 50, 500])
    p.add_argument("--n-values", nargs="+", type=int, default=None,
                   help="steps per m value (default: n*h = 1 at the given h)")
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--substepping", action="store_true")
    p.add_argument("--smoothing", action="store_true")
    p.add_argument("--interior-samples", type=int, default=2000)
    p.add_argument("--boundary-samples", type=int, default=500)
    _add_common(p)

    p = sub.add_parser("metrics", help="distortion energies of an OBJ with vt coordinates")
    p.add_argument("--obj", required=True)
    _add_common(p)

    p = sub.add_parser("curve", help="closed on-surface curve through constraint points")
    p.add_argument("--scene", required=True)
    p.add_argument("--constraint", nargs=3, type=float, action="append", required=True,
                   metavar=("X", "Y", "Z"))
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--no-smoothing", action="store_true")
    p.add_argument("--no-substepping", action="store_true")
    p.add_argument("--raw-gradients", action="store_true")
    p.add_argument("--interior-samples", type=int, default=4000)
    p.add_argument("--max-radius", type=float, default=1e-2)
    p.add_argument("--samples-per-segment", type=int, default=50)
    _add_common(p)

    p = sub.add_parser("rerun", help="replay a previous run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="override output directory")
    return ap


def _configs(args):
    smoothing = SmoothingConfig(
        epsilon=args.epsilon,
        sample_count=args.gradient_samples,
        seed=rng.label_key(args.seed, "smoothing"),
        enabled=not args.raw_gradients,
    )
    projection = ProjectionConfig(tolerance=args.tolerance)
    params = TraceParams(
        m=args.m, n=args.n, h=args.h,
        alignment_cosine=args.alignment_cosine,
        kappa=args.kappa,
        smoothing_enabled=not args.no_smoothing,
        substepping_enabled=not args.no_substepping,
    )
    return params, smoothing, projection


def _write_manifest(args, outputs, surfaces=()):
    payload = {
        "version": __version__,
        "command": args.command,
        "parameters": {
            k: v for k, v in sorted(vars(args).items()) if k not in ("command", "func")
        },
        "counters": {
            "field_evaluations": int(sum(s.eval_count for s in surfaces)),
            "gradient_evaluations": int(sum(s.gradient_count for s in surfaces)),
        },
        "outputs": outputs,
    }
    path = os.path.join(args.out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def cmd_param(args) -> int:
    surface = load_scene(args.scene)
    params, smoothing, projection = _configs(args)
    trace = radial_trace(surface, np.array(args.seed_point), params, smoothing, projection)
    local_map = fit(trace)
    cfg = LogQueryConfig(
        interior_samples=args.interior_samples,
        boundary_samples=args.boundary_samples or None,
        project_to_surface=args.project_mesh,
        seed=rng.label_key(args.seed, "disc"),
    )
    mesh = build_map_mesh(local_map, cfg)
    obj_path = os.path.join(args.out, "map.obj")
    csv_path = os.path.join(args.out, "trace.csv")
    export_obj(mesh, obj_path)
    dump_trace_csv(trace, csv_path)
    _write_manifest(args, {"map_obj": "map.obj", "trace_csv": "trace.csv"}, [surface])
    print(f"map: {len(mesh.uv)} vertices, {len(mesh.triangles)} triangles -> {obj_path}")
    return EXIT_OK


def cmd_trace_dump(args) -> int:
    surface = load_scene(args.scene)
    params, smoothing, projection = _configs(args)
    trace = radial_trace(surface, np.array(args.seed_point), params, smoothing, projection)
    csv_path = os.path.join(args.out, "trace.csv")
    dump_trace_csv(trace, csv_path)
    _write_manifest(args, {"trace_csv": "trace.csv"}, [surface])
    print(f"trace: {trace.m} x {trace.n} grid -> {csv_path}")
    return EXIT_OK


def cmd_logmap(args) -> int:
    surface = load_scene(args.scene)
    params, smoothing, projection = _configs(args)
    trace = radial_trace(surface, np.array(args.seed_point), params, smoothing, projection)
    local_map = fit(trace)
    cfg = LogQueryConfig(
        interior_samples=args.interior_samples,
        boundary_samples=args.boundary_samples or None,
        max_radius=args.max_radius,
        seed=rng.label_key(args.seed, "disc"),
    )
    mesh = build_map_mesh(local_map, cfg)
    lines = []
    for q in args.query:
        if args.multi:
            vals = multivalued_log(mesh, np.array(q))
            if not vals:
                lines.append("none")
            else:
                lines.append("; ".join(f"{float(u[0])!r} {float(u[1])!r}" for u in vals))
        else:
            u = log(mesh, np.array(q))
            lines.append("none" if u is None else f"{float(u[0])!r} {float(u[1])!r}")
    out_path = os.path.join(args.out, "logmap.txt")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    _write_manifest(args, {"values": "logmap.txt"}, [surface])
    return EXIT_OK


def cmd_error_sphere(args) -> int:
    n_values = args.n_values
    if n_values is None:
        n_values = [max(1, round(1.0 / args.h)) for _ in args.m_values]
    if len(n_values) != len(args.m_values):
        raise SceneError("--n-values must match --m-values")
    csv_path = os.path.join(args.out, "error_sphere.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "n", "h", "mean_error", "traced_curve_error"])
        for m, n in zip(args.m_values, n_values):
            mean_err, curve_err = sphere_error_experiment(
                m=m, n=n, h=args.h,
                substepping=args.substepping, smoothing=args.smoothing,
                samples=(args.interior_samples, args.boundary_samples),
                seed=args.seed,
            )
            w.writerow([m, n, repr(args.h), repr(mean_err), repr(curve_err)])
            print(f"m={m} n={n} h={args.h}: mean={mean_err:.3e} curve={curve_err:.3e}")
    _write_manifest(args, {"csv": "error_sphere.csv"})
    return EXIT_OK


def cmd_metrics(args) -> int:
    positions, uvs, pos_tris, uv_tris = load_obj_with_uv(args.obj)
    if len(pos_tris) == 0:
        raise SceneError(f"no faces in {args.obj}")
    sd = symmetric_dirichlet_corners(uvs[uv_tris], positions[pos_tris])
    ls = lscm_energy_corners(uvs[uv_tris], positions[pos_tris])
    csv_path = os.path.join(args.out, "metrics.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["triangle", "area3d", "symmetric_dirichlet", "lscm"])
        for k in range(len(pos_tris)):
            w.writerow([k, repr(float(sd.areas[k])), repr(float(sd.energies[k])),
                        repr(float(ls.energies[k]))])
    summary = (
        f"symmetric_dirichlet mean={sd.weighted_mean!r} median={sd.median!r} max={sd.max!r} "
        f"lscm mean={ls.weighted_mean!r} median={ls.median!r} max={ls.max!r} "
        f"degenerate={sd.degenerate_triangles} flipped={sd.flipped_triangles}"
    )
    with open(os.path.join(args.out, "metrics_summary.txt"), "w") as fh:
        fh.write(summary + "\n")
    print(summary)
    _write_manifest(args, {"csv": "metrics.csv", "summary": "metrics_summary.txt"})
    return EXIT_OK


def cmd_curve(args) -> int:
    surface = load_scene(args.scene)
    params = TraceParams(
        m=args.m, n=args.n, h=args.h,
        smoothing_enabled=not args.no_smoothing,
        substepping_enabled=not args.no_substepping,
    )
    smoothing = SmoothingConfig(
        seed=rng.label_key(args.seed, "smoothing"), enabled=not args.raw_gradients
    )
    cfg = LogQueryConfig(
        interior_samples=args.interior_samples,
        max_radius=args.max_radius,
        seed=rng.label_key(args.seed, "disc"),
    )
    charts = [
        build_chart(surface, np.array(c), params, smoothing, log_cfg=cfg)
        for c in args.constraint
    ]
    curve = solve_closed_curve(charts)
    pts = sample_curve(curve, args.samples_per_segment)
    obj_path = os.path.join(args.out, "curve.obj")
    with open(obj_path, "w") as fh:
        fh.write("# geoexp closed surface curve polyline\n")
        for p in pts:
            fh.write(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        for i in range(len(pts)):
            fh.write(f"l {i + 1} {(i + 1) % len(pts) + 1}\n")
    report = f"segments={curve.segment_count} residual={curve.residual!r}"
    with open(os.path.join(args.out, "curve_report.txt"), "w") as fh:
        fh.write(report + "\n")
    print(report)
    _write_manifest(args, {"polyline": "curve.obj", "report": "curve_report.txt"}, [surface])
    return EXIT_OK


def cmd_rerun(args) -> int:
    with open(args.manifest) as fh:
        payload = json.load(fh)
    command = payload["command"]
    stored = dict(payload["parameters"])
    if args.out is not None:
        stored["out"] = args.out
    argv = [command]
    for key, val in stored.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif val is None:
            continue
        elif key in ("query", "constraint"):
            for row in val:
                argv.append(flag)
                argv.extend(str(x) for x in row)
        elif isinstance(val, (list, tuple)):
            argv.append(flag)
            argv.extend(str(x) for x in val)
        elif key == "manifest":
            continue
        else:
            argv.append(flag)
            argv.append(str(val))
    return main(argv)


_COMMANDS = {
    "param": cmd_param,
    "trace-dump": cmd_trace_dump,
    "logmap": cmd_logmap,
    "error-sphere": cmd_error_sphere,
    "metrics": cmd_metrics,
    "curve": cmd_curve,
    "rerun": cmd_rerun,
}


def _apply_thread_cap(args) -> None:
    cap = getattr(args, "threads", 0) or int(os.environ.get("GEOEXP_THREADS", "0") or 0)
    if cap > 0:
        try:
            import numba

            numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))
        except (ImportError, ValueError):
            pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None):
        os.makedirs(args.out, exist_ok=True)
    _apply_thread_cap(args)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as e:
        print(f"geoexp: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"geoexp: {e}", file=sys.stderr)
        return EXIT_IO
    except (SceneError, ValueError) as e:
        print(f"geoexp: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GeoExpError as e:
        print(f"geoexp: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
