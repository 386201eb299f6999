"""Batch front-end: validate space files, integrate, and emit CSV/JSON artifacts.

Exit codes: 0 all mandatory checks pass and the computation finished,
1 check failures or aborted dynamics, 2 parse/schema errors.  Output files
are written atomically and deterministically (17 significant digits), so
identical inputs give byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import serialize
from .connection import canonical_first, curvature, sectional_curvature, torsion
from .deffile import DefFileError, build_space, check_space, parse_definition
from .reductive import DecompositionError
from .transport import CurveSpec, geodesic, geodesic_convergence, parallel_transport, realize_curve

__all__ = ["main"]


def _read_definition(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise DefFileError(f"cannot read {path}: {exc}") from exc
    return parse_definition(text)


def _tol_overrides(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise DefFileError(f"--tol expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        out[name.strip()] = float(value)
    return out


def _floats_arg(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(",", " ").split()])


def _prepare(args, need_pass: bool = True):
    """Parse, build and gate on the check battery (unless --force)."""
    defn = _read_definition(args.file)
    bundle, alpha = build_space(defn, force=args.force)
    reports, passed = check_space(bundle, _tol_overrides(args.tol))
    tainted = any(r.tainted for r in reports) or (not passed and args.force)
    if need_pass and not passed and not args.force:
        _emit_report(args, bundle, reports, passed)
        print("mandatory checks failed; rerun with --force to integrate anyway",
              file=sys.stderr)
        return None
    if alpha is None:
        alpha = canonical_first(bundle.dec)
    return bundle, alpha, reports, passed, tainted


def _emit_report(args, bundle, reports, passed, extra=None):
    meta = {"space": bundle.name, **(extra or {})}
    text = serialize.report_json(reports, passed, extra=meta)
    if getattr(args, "json", False):
        sys.stdout.write(text)
    else:
        for r in reports:
            flag = "PASS" if r.passed else "FAIL"
            kind = "" if r.mandatory else " (informational)"
            print(f"[{flag}] {r.check}{kind}: residual {r.max_residual:.3e} "
                  f"tol {r.tolerance:.1e}")
        print(f"space {bundle.name}: {'PASS' if passed else 'FAIL'}")
    if getattr(args, "out", None):
        serialize.atomic_write_text(args.out + ".report.json", text)


# -- commands ----------------------------------------------------------------------


def cmd_check(args) -> int:
    defn = _read_definition(args.file)
    bundle, _alpha = build_space(defn, force=args.force)
    reports, passed = check_space(bundle, _tol_overrides(args.tol))
    _emit_report(args, bundle, reports, passed)
    return 0 if passed else 1


def cmd_geodesic(args) -> int:
    prep = _prepare(args)
    if prep is None:
        return 1
    bundle, alpha, reports, passed, tainted = prep
    x0 = _floats_arg(args.x0)
    traj = geodesic(alpha, None, x0, (args.t0, args.t1), args.step,
                    reproject=args.reproject)
    traj.meta["tainted"] = traj.meta.get("tainted", False) or tainted
    serialize.atomic_write_text(
        args.out + ".csv", serialize.trajectory_csv(traj, bundle.name, alpha.label))
    serialize.atomic_write_text(
        args.out + ".json", serialize.trajectory_json(traj, bundle.name, alpha.label))
    drift = traj.meta.get("group_drift")
    leak = traj.meta.get("horizontality_leak")
    print(f"geodesic: {len(traj)} samples, step {traj.meta['step']:.6g}, "
          f"group drift {drift if drift is None else format(drift, '.3e')}, "
          f"h-leak {leak if leak is None else format(leak, '.3e')}")
    if traj.meta.get("blow_up"):
        print(f"blow-up abort at t = {traj.meta['aborted_at']:.6g}; "
              "partial trajectory written", file=sys.stderr)
        return 1
    return 0


def _parse_curve(args, dec) -> CurveSpec:
    spec = args.curve
    if spec.startswith("one_parameter:"):
        x0 = _floats_arg(spec.split(":", 1)[1])
        return CurveSpec.one_parameter(x0, (args.t0, args.t1))
    if spec.startswith("velocity_file:"):
        times, rows = _read_samples(spec.split(":", 1)[1])
        return CurveSpec.velocity_samples(times, rows)
    if spec.startswith("group_file:"):
        times, rows = _read_samples(spec.split(":", 1)[1])
        d = dec.algebra.matrix_dim
        if rows.shape[1] != d * d:
            raise DefFileError(
                f"group sample rows must hold {d * d} matrix entries, got {rows.shape[1]}")
        return CurveSpec.group_samples(times, rows.reshape(-1, d, d))
    raise DefFileError(
        "--curve must be one_parameter:<coords>, velocity_file:<path> or group_file:<path>")


def _read_samples(path: str):
    try:
        raw = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except OSError as exc:
        raise DefFileError(f"cannot read samples from {path}: {exc}") from exc
    except ValueError as exc:
        raise DefFileError(f"malformed sample file {path}: {exc}") from exc
    return raw[:, 0], raw[:, 1:]


def cmd_transport(args) -> int:
    prep = _prepare(args)
    if prep is None:
        return 1
    bundle, alpha, reports, passed, tainted = prep
    curve = _parse_curve(args, bundle.dec)
    base = realize_curve(bundle.dec, curve, step=args.step)
    seeds = [_floats_arg(z) for z in args.z0]
    results = [parallel_transport(alpha, base, z) for z in seeds]
    for traj in results:
        traj.meta["tainted"] = traj.meta.get("tainted", False) or tainted

    suffixes = [""] if len(results) == 1 else [f"_seed{i}" for i in range(len(results))]
    for suffix, traj in zip(suffixes, results):
        serialize.atomic_write_text(
            args.out + suffix + ".csv",
            serialize.trajectory_csv(traj, bundle.name, alpha.label))
        serialize.atomic_write_text(
            args.out + suffix + ".json",
            serialize.trajectory_json(traj, bundle.name, alpha.label))

    if bundle.metric is not None and results:
        g = bundle.metric.gram
        drift = 0.0
        for a in range(len(results)):
            for b in range(a, len(results)):
                za, zb = results[a].transported, results[b].transported
                vals = np.einsum("sk,kl,sl->s", za, g, zb)
                drift = max(drift, float(np.max(np.abs(vals - vals[0]))))
        print(f"transport: gram-value drift across seeds {drift:.3e}")
    for warning in results[0].meta.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_tensors(args) -> int:
    prep = _prepare(args, need_pass=False)
    if prep is None:
        return 1
    bundle, alpha, reports, passed, tainted = prep
    if not passed and not args.force:
        _emit_report(args, bundle, reports, passed)
        return 1
    tor = torsion(alpha)
    curv = curvature(alpha)
    anti = float(np.max(np.abs(curv.coeffs + np.swapaxes(curv.coeffs, 1, 2)))) \
        if curv.coeffs.size else 0.0
    meta = {"space": bundle.name, "alpha": alpha.label,
            "curvature_antisymmetry_residual": anti, "tainted": tainted}
    serialize.atomic_write_text(args.out + "_torsion.json",
                                serialize.tensor_json(tor, meta))
    serialize.atomic_write_text(args.out + "_torsion.csv", serialize.tensor_csv(tor))
    serialize.atomic_write_text(args.out + "_curvature.json",
                                serialize.tensor_json(curv, meta))
    if bundle.metric is not None:
        entries = []
        eye = np.eye(bundle.dec.N)
        for i in range(bundle.dec.N):
            for j in range(i + 1, bundle.dec.N):
                try:
                    val = sectional_curvature(alpha, bundle.metric, eye[i], eye[j],
                                              riem=curv)
                except ValueError:
                    val = None
                entries.append((i, j, val))
        serialize.atomic_write_text(args.out + "_sectional.csv",
                                    serialize.sectional_csv(entries))
    print(f"tensors: wrote torsion/curvature for {bundle.name} "
          f"(curvature antisymmetry {anti:.3e})")
    return 0


def cmd_convergence(args) -> int:
    prep = _prepare(args)
    if prep is None:
        return 1
    bundle, alpha, reports, passed, tainted = prep
    steps = [float(s) for s in args.steps.replace(",", " ").split()]
    x0 = _floats_arg(args.x0)
    result = geodesic_convergence(alpha, None, x0, (args.t0, args.t1), steps)
    if result.exact:
        print("convergence: exact (errors at machine precision)")
    else:
        print(f"convergence: measured order {result.slope:.3f}")
    for s, e in zip(result.steps, result.errors):
        print(f"  step {s:.6g}: error {e:.6e}")
    if args.out:
        payload = {
            "steps": result.steps, "errors": result.errors,
            "slope": result.slope, "exact": result.exact, "space": bundle.name,
        }
        import json
        serialize.atomic_write_text(args.out + ".json",
                                    json.dumps(payload, sort_keys=True, indent=1) + "\n")
    return 0


# -- argument plumbing --------------------------------------------------------------


def _common(sub):
    sub.add_argument("file", help="space-definition file")
    sub.add_argument("--json", action="store_true", help="print reports as JSON")
    sub.add_argument("--tol", action="append", metavar="NAME=VALUE",
                     help="override a named tolerance (repeatable)")
    sub.add_argument("--force", action="store_true",
                     help="proceed despite failed checks; outputs are tainted")
    sub.add_argument("--out", default=None, help="output path prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redhom",
        description="diagnostics and transport on reductive homogeneous spaces",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("check", help="run the diagnostic battery")
    _common(p)
    p.set_defaults(func=cmd_check)

    p = subs.add_parser("geodesic", help="integrate a geodesic")
    _common(p)
    p.add_argument("--x0", required=True, help="initial velocity coordinates, comma separated")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--reproject", action="store_true",
                   help="polar-reproject the frame to the group each step")
    p.set_defaults(func=cmd_geodesic)

    p = subs.add_parser("transport", help="parallel-transport seeds along a curve")
    _common(p)
    p.add_argument("--curve", required=True,
                   help="one_parameter:<coords> | velocity_file:<csv> | group_file:<csv>")
    p.add_argument("--z0", action="append", required=True,
                   help="seed coordinates, comma separated (repeatable)")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.set_defaults(func=cmd_transport)

    p = subs.add_parser("tensors", help="emit torsion/curvature/sectional tables")
    _common(p)
    p.set_defaults(func=cmd_tensors)

    p = subs.add_parser("convergence", help="estimate the integrator order")
    _common(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--steps", default="0.2,0.1,0.05,0.025")
    p.set_defaults(func=cmd_convergence)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None) is None and args.command in (
            "geodesic", "transport", "tensors"):
        args.out = "redhom_out"
    try:
        return args.func(args)
    except DefFileError as exc:
        print(f"definition error: {exc}", file=sys.stderr)
        return 2
    except DecompositionError as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
