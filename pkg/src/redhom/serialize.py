"""Deterministic CSV/JSON emission for trajectories, tensors and reports.

All floats are written with 17 significant digits so identical inputs give
byte-identical files; writes go to a temporary file in the target directory
followed by an atomic rename, so no partial file survives an error.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

__all__ = [
    "fmt",
    "atomic_write_text",
    "trajectory_csv",
    "trajectory_json",
    "tensor_json",
    "tensor_csv",
    "sectional_csv",
    "report_json",
]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".redhom-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta_header(traj, space: str, alpha: str) -> str:
    step = traj.meta.get("step")
    integ = traj.meta.get("integrator", "")
    return (
        f"# space={space} alpha={alpha} "
        f"step={fmt(step) if step is not None else 'n/a'} integrator={integ}"
    )


def trajectory_columns(traj):
    d = traj.frames.shape[1]
    n = traj.velocities.shape[1]
    cols = ["t"]
    cols += [f"g_{i}{j}" for i in range(d) for j in range(d)]
    cols += [f"x_{k + 1}" for k in range(n)]
    if traj.transported is not None:
        cols += [f"z_{k + 1}" for k in range(n)]
    return cols


def trajectory_csv(traj, space: str = "", alpha: str = "") -> str:
    lines = [_meta_header(traj, space, alpha), ",".join(trajectory_columns(traj))]
    flat_frames = traj.frames.reshape(len(traj), -1)
    for i in range(len(traj)):
        row = [fmt(traj.times[i])]
        row += [fmt(v) for v in flat_frames[i]]
        row += [fmt(v) for v in traj.velocities[i]]
        if traj.transported is not None:
            row += [fmt(v) for v in traj.transported[i]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else str(v)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def trajectory_json(traj, space: str = "", alpha: str = "") -> str:
    payload = {
        "meta": _jsonable({**traj.meta, "space": space, "alpha": alpha}),
        "columns": trajectory_columns(traj),
        "times": [float(t) for t in traj.times],
        "frames": traj.frames.tolist(),
        "velocities": traj.velocities.tolist(),
        "transported": traj.transported.tolist() if traj.transported is not None else None,
    }
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def tensor_json(tensor, extra_meta=None) -> str:
    payload = {
        "kind": tensor.kind,
        "shape": list(tensor.coeffs.shape),
        "layout": "row-major",
        "tainted": tensor.tainted,
        "coefficients": [float(v) for v in tensor.coeffs.ravel()],
    }
    payload.update(_jsonable(extra_meta or {}))
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def tensor_csv(tensor) -> str:
    """Rank-3 tensors as (k, i, j, value) rows with 1-based indices."""
    coeffs = tensor.coeffs
    if coeffs.ndim != 3:
        raise ValueError("CSV output is defined for rank-3 tensors only")
    lines = ["k,i,j,value"]
    n = coeffs.shape[0]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                lines.append(f"{k + 1},{i + 1},{j + 1},{fmt(coeffs[k, i, j])}")
    return "\n".join(lines) + "\n"


def sectional_csv(entries) -> str:
    """Basis-plane sectional curvatures as (i, j, value-or-degenerate) rows."""
    lines = ["i,j,sectional"]
    for i, j, val in entries:
        lines.append(f"{i + 1},{j + 1},{'degenerate' if val is None else fmt(val)}")
    return "\n".join(lines) + "\n"


def report_json(reports, passed: bool, extra=None) -> str:
    payload = {
        "pass": bool(passed),
        "checks": [r.to_json_dict() for r in reports],
    }
    payload.update(_jsonable(extra or {}))
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"
