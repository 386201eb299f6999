"""Horizontal lifts, geodesics, parallel transport, and Euler-Arnold dynamics.

Everything is driven through m-coordinates.  A curve on the quotient is
represented by a horizontal frame curve ``g(t)`` in the group together with
the velocity coordinates ``x(t)`` defined by ``g^-1 g' = mat(x)``; a vector
field along the curve is the coordinate curve ``z(t)`` of its lift into the
moving frame.  The governing ODEs are then

* horizontal lift of ``c(t)``:   write ``g = c h``, ``h' = -pr_h(c^-1 c') h``
* geodesic:                      ``x' = -alpha(x, x)``, ``g' = g mat(x)``
* parallel transport:            ``z' = -alpha(x(t), z)``
* Euler-Arnold (Levi-Civita):    ``x' = (pr_m ad_x)^*(x)``

The integrator is classical fixed-step RK4 on the coupled system, with the
frame update as a plain matrix ODE; drift off the group is left observable
(an optional polar reprojection caps it).  Lift and transport are linear
ODEs, so their RK4 update is precomputed as one transition matrix per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import GroupElement, expand_in_matrix_basis, expm
from .connection import AlphaMap, levi_civita_alpha
from .reductive import MetricOnM, ReductiveDecomposition, check_metric_invariance

__all__ = [
    "CurveSpec",
    "Trajectory",
    "horizontal_lift",
    "geodesic",
    "parallel_transport",
    "euler_arnold_field",
    "EulerArnoldField",
    "convergence_probe",
    "ConvergenceResult",
    "geodesic_convergence",
    "realize_curve",
]

BLOWUP_NORM = 1e6
FD_COARSE_WARNING = 1e-4
HORIZONTALITY_TOL = 1e-8


# -- finite differences and interpolation -----------------------------------------


def _uniform_spacing(times: np.ndarray):
    d = np.diff(times)
    if d.size == 0:
        return False, 0.0
    uniform = bool(np.max(np.abs(d - d[0])) <= 1e-9 * max(abs(float(d[0])), 1e-300))
    return uniform, float(d[0])


def _fd4_uniform(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order derivative estimates on a uniform grid (len >= 5)."""
    d = np.empty_like(y)
    d[2:-2] = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * h)
    c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    d[0] = np.tensordot(c0, y[:5], axes=(0, 0)) / h
    d[1] = np.tensordot(c1, y[:5], axes=(0, 0)) / h
    d[-1] = -np.tensordot(c0, y[-1:-6:-1], axes=(0, 0)) / h
    d[-2] = -np.tensordot(c1, y[-1:-6:-1], axes=(0, 0)) / h
    return d


def _fd_derivatives(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second-order derivative estimates, tolerant of nonuniform grids."""
    order = 2 if len(times) >= 3 else 1
    return np.gradient(values, times, axis=0, edge_order=order)


def _best_fd(times: np.ndarray, values: np.ndarray):
    """Highest-order derivative estimate available for the grid: (derivs, order)."""
    uniform, h = _uniform_spacing(times)
    if uniform and len(times) >= 5:
        return _fd4_uniform(values, h), 4
    return _fd_derivatives(times, values), 2


def _hermite_midpoints(values, derivs, dt):
    """Cubic Hermite value at each interval midpoint; dt has shape (M-1,)."""
    shape = (-1,) + (1,) * (values.ndim - 1)
    dt = dt.reshape(shape)
    return 0.5 * (values[:-1] + values[1:]) + dt * (derivs[:-1] - derivs[1:]) / 8.0


def _fd_error_estimate(times, values):
    """Difference between 2nd- and 4th-order derivative estimates, or None."""
    uniform, h = _uniform_spacing(times)
    if not uniform or len(times) < 5:
        return None
    return float(np.max(np.abs(_fd_derivatives(times, values) - _fd4_uniform(values, h))))


# -- trajectories -----------------------------------------------------------------


@dataclass
class Trajectory:
    """Time-sampled frame curve with velocity (and optionally transported) coordinates.

    ``frames[i]`` is the group matrix g(t_i), ``velocities[i]`` the
    m-coordinates of g^-1 g' at t_i, and ``transported[i]`` the coordinates
    of a parallel vector field when one has been integrated.  ``meta``
    records the integrator, step size and drift diagnostics.
    """

    dec: ReductiveDecomposition
    times: np.ndarray
    frames: np.ndarray
    velocities: np.ndarray
    transported: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.times) == len(self.frames) == len(self.velocities)):
            raise ValueError("times, frames and velocities must have equal length")
        if self.transported is not None and len(self.transported) != len(self.times):
            raise ValueError("transported samples must match the time grid")

    def __len__(self):
        return len(self.times)

    def diagnostics(self) -> dict:
        """Finite-difference horizontality and drift measurements.

        The velocity residual and h-leak are estimated from derivatives of
        the stored frames, so they carry an O(spacing^fd_order) noise floor
        on top of the true integration error.
        """
        return frame_diagnostics(self.dec, self.times, self.frames, self.velocities)


def frame_diagnostics(dec, times, frames, velocities) -> dict:
    alg = dec.algebra
    out = {"group_drift": None, "horizontality_leak": None,
           "velocity_residual": None, "fd_order": None}
    if alg.orthogonal:
        eye = np.eye(frames.shape[1])
        out["group_drift"] = float(
            np.max(np.abs(np.einsum("mji,mjk->mik", frames, frames) - eye))
        )
    if alg.matrix_basis is None or len(times) < 3:
        return out
    uniform, h = _uniform_spacing(times)
    if uniform and len(times) >= 5:
        gdot = _fd4_uniform(frames, h)
        out["fd_order"] = 4
    else:
        gdot = _fd_derivatives(times, frames)
        out["fd_order"] = 2
    body = np.linalg.solve(frames, gdot)
    coords, resid = expand_in_matrix_basis(alg.matrix_basis, body, strict=False)
    split = dec._cob_inv @ coords.T
    out["expansion_residual"] = float(np.max(resid))
    out["horizontality_leak"] = (
        float(np.max(np.abs(split[: dec.q]))) if dec.q else 0.0
    )
    out["velocity_residual"] = float(np.max(np.abs(split[dec.q:].T - velocities)))
    return out


# -- curve specifications ----------------------------------------------------------


@dataclass
class CurveSpec:
    """A curve handed to the lift/transport machinery.

    Three kinds: ``one_parameter`` (the curve exp(t X0), already
    horizontal), ``piecewise_velocity`` (velocity coordinates sampled in t,
    interpolated linearly when frames are reconstructed), and
    ``group_samples`` (group matrices sampled in t, to be lifted).
    """

    kind: str
    t_span: tuple | None = None
    x0: np.ndarray | None = None
    times: np.ndarray | None = None
    values: np.ndarray | None = None
    initial_frame: np.ndarray | None = None

    @classmethod
    def one_parameter(cls, x0, t_span, initial_frame=None):
        t0, t1 = float(t_span[0]), float(t_span[1])
        if not t1 > t0:
            raise ValueError("t_span must be a nonempty interval")
        return cls(kind="one_parameter", x0=np.asarray(x0, dtype=float),
                   t_span=(t0, t1), initial_frame=initial_frame)

    @classmethod
    def velocity_samples(cls, times, xs, initial_frame=None):
        times = np.asarray(times, dtype=float)
        xs = np.asarray(xs, dtype=float)
        _check_times(times)
        return cls(kind="piecewise_velocity", times=times, values=xs,
                   t_span=(float(times[0]), float(times[-1])),
                   initial_frame=initial_frame)

    @classmethod
    def group_samples(cls, times, mats, initial_frame=None):
        times = np.asarray(times, dtype=float)
        mats = np.asarray(mats, dtype=float)
        _check_times(times)
        if np.any(np.abs(np.linalg.det(mats)) < 1e-12):
            raise ValueError("group samples contain a numerically singular matrix")
        return cls(kind="group_samples", times=times, values=mats,
                   t_span=(float(times[0]), float(times[-1])),
                   initial_frame=initial_frame)


def _check_times(times):
    if times.ndim != 1 or len(times) < 2:
        raise ValueError("need at least two strictly increasing sample times")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")


def _frame_matrix(g0, dec, default_identity=True):
    if g0 is None:
        if not default_identity:
            raise ValueError("an initial frame is required")
        return np.eye(dec.algebra.matrix_dim)
    if isinstance(g0, GroupElement):
        return np.array(g0.matrix, dtype=float)
    return np.array(g0, dtype=float)


# -- horizontal lift ---------------------------------------------------------------


def horizontal_lift(dec: ReductiveDecomposition, curve: CurveSpec,
                    g0=None) -> Trajectory:
    """Lift sampled group matrices to a horizontal frame curve.

    Writing ``g = c h``, horizontality of g forces ``h' = -pr_h(c^-1 c') h``,
    which is integrated with RK4 across the sample grid; the derivative
    ``c^-1 c'`` comes from finite differences of the samples with cubic
    Hermite interpolation at interval midpoints.  The initial condition is
    ``h(t0) = c(t0)^-1 g0`` (identity when g0 is omitted).
    """
    if curve.kind != "group_samples":
        raise ValueError("horizontal_lift expects a group_samples curve")
    alg = dec.algebra
    alg._require_matrices()
    times = curve.times
    mats = curve.values
    d = alg.matrix_dim
    if mats.shape[1:] != (d, d):
        raise ValueError(f"group samples must be {d}x{d} matrices")
    m = len(times)
    warnings_list = []

    cdot, fd_order = _best_fd(times, mats)
    body = np.linalg.solve(mats, cdot)                   # c^-1 c' at samples
    coords, resid = expand_in_matrix_basis(alg.matrix_basis, body, strict=False)
    worst_resid = float(np.max(resid))
    if worst_resid > 2e-2:
        raise ValueError(
            f"samples do not stay on the group: c^-1 c' leaves the algebra by {worst_resid:.3e}"
        )

    if fd_order == 4:
        # spread between the 2nd- and 4th-order estimates bounds the grid error
        body2 = np.linalg.solve(mats, _fd_derivatives(times, mats))
        fd_err = float(np.max(np.abs(body - body2)))
    else:
        fd_err = None
    if fd_err is None:
        warnings_list.append("nonuniform or short grid: finite-difference error not estimated")
    elif fd_err > FD_COARSE_WARNING:
        warnings_list.append(
            f"samples too coarse: estimated c^-1 c' finite-difference error {fd_err:.3e}"
        )

    split = dec._cob_inv @ coords.T                      # (n, m)
    h_coords = split[: dec.q].T                          # (m, q)
    m_coords = split[dec.q:].T                           # (m, N)

    # generator of the compensating curve: A(t) = -mat(pr_h(c^-1 c'))
    a_nodes = -np.einsum("mr,rab->mab", h_coords, dec.h_matrices) if dec.q \
        else np.zeros((m, d, d))
    a_dot, _ = _best_fd(times, a_nodes)
    dt = np.diff(times)
    a_mid = _hermite_midpoints(a_nodes, a_dot, dt)
    trans = _rk4_linear_transitions(a_nodes[:-1], a_mid, a_nodes[1:], dt)

    explicit_frame = g0 if g0 is not None else curve.initial_frame
    if explicit_frame is None:
        h0 = np.eye(d)  # default: the lift starts at the first group sample
    else:
        h0 = np.linalg.solve(mats[0], _frame_matrix(explicit_frame, dec))
    hs = np.empty((m, d, d))
    hs[0] = h0
    cur = h0
    for i in range(m - 1):
        cur = trans[i] @ cur
        hs[i + 1] = cur

    frames = np.einsum("mab,mbc->mac", mats, hs)

    # x = m-coords of g^-1 g' = Ad_{h^-1}(pr_m(c^-1 c'))
    pm_mats = np.einsum("mk,kab->mab", m_coords, dec.m_matrices)
    conj = np.einsum("mab,mbc->mac", np.linalg.solve(hs, pm_mats), hs)
    xc, xresid = expand_in_matrix_basis(alg.matrix_basis, conj, strict=False)
    xsplit = dec._cob_inv @ xc.T
    ad_leak = float(np.max(np.abs(xsplit[: dec.q]))) if dec.q else 0.0
    xs = xsplit[dec.q:].T

    meta = {
        "integrator": "rk4-lift",
        "step": float(np.max(dt)),
        "samples": m,
        "warnings": warnings_list,
        "fd_order": fd_order,
        "fd_error_estimate": fd_err,
        "body_expansion_residual": worst_resid,
        "isotropy_conjugation_leak": ad_leak,
    }
    traj = Trajectory(dec, np.array(times), frames, np.ascontiguousarray(xs), meta=meta)
    meta.update(traj.diagnostics())
    return traj


def _rk4_linear_transitions(a0, amid, a1, dt):
    """Per-step RK4 transition matrices for the linear ODE y' = A(t) y."""
    shape = (-1,) + (1,) * (a0.ndim - 1)
    d = dt.reshape(shape)
    k1 = a0
    k2 = amid + 0.5 * d * _bmm(amid, k1)
    k3 = amid + 0.5 * d * _bmm(amid, k2)
    k4 = a1 + d * _bmm(a1, k3)
    eye = np.eye(a0.shape[-1])
    return eye + d / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _bmm(a, b):
    return np.einsum("mij,mjk->mik", a, b)


# -- geodesics ---------------------------------------------------------------------


def geodesic(alpha: AlphaMap, g0, x0, t_span, step: float,
             reproject: bool = False, blowup_norm: float = BLOWUP_NORM) -> Trajectory:
    """Integrate the geodesic system x' = -alpha(x, x), g' = g mat(x).

    Fixed-step RK4 on the coupled state; the step is shrunk slightly if the
    interval is not an integer multiple of the request.  A blow-up guard
    aborts once |x| exceeds ``blowup_norm`` and returns the partial
    trajectory (completeness holds for lifts, not for arbitrary alpha).
    With ``reproject=True`` every frame is pulled back to the orthogonal
    group by polar projection; off by default so drift stays observable.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    dec = alpha.dec
    dec.algebra._require_matrices()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be a nonempty interval")
    nsteps = max(1, math.ceil((t1 - t0) / step - 1e-12))
    h = (t1 - t0) / nsteps
    times = np.linspace(t0, t1, nsteps + 1)

    mm = dec.m_matrices
    coeffs = alpha.coeffs
    d = dec.algebra.matrix_dim
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (dec.N,):
        raise ValueError(f"x0 must have length {dec.N}")
    g = _frame_matrix(g0, dec)

    frames = np.empty((nsteps + 1, d, d))
    xs = np.empty((nsteps + 1, dec.N))
    frames[0] = g
    xs[0] = x

    def xdot(v):
        return -np.einsum("kij,i,j->k", coeffs, v, v)

    aborted_at = None
    last = nsteps
    for i in range(nsteps):
        k1x = xdot(x)
        k1g = g @ np.tensordot(x, mm, axes=1)
        x2 = x + 0.5 * h * k1x
        k2x = xdot(x2)
        k2g = (g + 0.5 * h * k1g) @ np.tensordot(x2, mm, axes=1)
        x3 = x + 0.5 * h * k2x
        k3x = xdot(x3)
        k3g = (g + 0.5 * h * k2g) @ np.tensordot(x3, mm, axes=1)
        x4 = x + h * k3x
        k4x = xdot(x4)
        k4g = (g + h * k3g) @ np.tensordot(x4, mm, axes=1)
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        g = g + h / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g)
        if reproject:
            u, _, vt = np.linalg.svd(g)
            g = u @ vt
        frames[i + 1] = g
        xs[i + 1] = x
        if np.max(np.abs(x)) > blowup_norm:
            aborted_at = float(times[i + 1])
            last = i + 1
            break

    frames = frames[: last + 1]
    xs = xs[: last + 1]
    times = times[: last + 1]
    meta = {
        "integrator": "rk4",
        "step": h,
        "requested_step": step,
        "alpha": alpha.label,
        "tainted": not alpha.checked,
        "reprojected": reproject,
        "blow_up": aborted_at is not None,
        "aborted_at": aborted_at,
    }
    traj = Trajectory(dec, times, frames, xs, meta=meta)
    meta.update(traj.diagnostics())
    return traj


# -- parallel transport ------------------------------------------------------------


def parallel_transport(alpha: AlphaMap, base: Trajectory, z0) -> Trajectory:
    """Transport coordinates z along a base trajectory: z' = -alpha(x(t), z).

    Integration reuses the base grid, with cubic Hermite interpolation of
    the velocity coordinates at interval midpoints (from finite-difference
    derivatives, which preserves the integrator's order).  Returns a copy of
    the base trajectory with the transported coordinates attached.
    """
    if len(base) < 2:
        raise ValueError("base trajectory has no intervals to integrate over")
    dec = alpha.dec
    if base.dec is not dec:
        raise ValueError("alpha and base trajectory use different decompositions")
    z = np.asarray(z0, dtype=float).copy()
    if z.shape != (dec.N,):
        raise ValueError(f"z0 must have length {dec.N}")

    times = base.times
    xs = base.velocities
    warnings_list = list(base.meta.get("warnings", []))
    fd_err = _fd_error_estimate(times, xs)
    if fd_err is not None and fd_err > FD_COARSE_WARNING:
        warnings_list.append(
            f"transport grid too coarse: velocity interpolation error ~{fd_err:.3e}"
        )

    dxs, _ = _best_fd(times, xs)
    dt = np.diff(times)
    x_mid = _hermite_midpoints(xs, dxs, dt)
    a_nodes = -np.einsum("kij,si->skj", alpha.coeffs, xs)
    a_mid = -np.einsum("kij,si->skj", alpha.coeffs, x_mid)
    trans = _rk4_linear_transitions(a_nodes[:-1], a_mid, a_nodes[1:], dt)

    zs = np.empty((len(base), dec.N))
    zs[0] = z
    for i in range(len(base) - 1):
        z = trans[i] @ z
        zs[i + 1] = z

    meta = dict(base.meta)
    meta.update({
        "transport_alpha": alpha.label,
        "tainted": meta.get("tainted", False) or not alpha.checked,
        "warnings": warnings_list,
    })
    return Trajectory(dec, base.times, base.frames, base.velocities,
                      transported=zs, meta=meta)


# -- Euler-Arnold ------------------------------------------------------------------


class EulerArnoldField:
    """The metric adjoint field x -> (pr_m ad_x)^*(x) driving geodesics.

    Agreement with -alpha_LC(x, x) is asserted on every evaluation (the two
    must coincide for an invariant metric).
    """

    def __init__(self, dec: ReductiveDecomposition, metric: MetricOnM):
        report = check_metric_invariance(dec, metric)
        if not report.passed:
            raise ValueError(
                f"metric is not Ad(H)-invariant (residual {report.max_residual:.3e})"
            )
        self.dec = dec
        self.metric = metric
        self._alpha_lc = levi_civita_alpha(dec, metric)
        self._gram = metric.gram

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ad_m = self.dec.ad_m_matrix(x)
        g = self._gram
        val = np.linalg.solve(g, ad_m.T @ (g @ x))
        ref = -self._alpha_lc(x, x)
        scale = max(1.0, float(np.max(np.abs(val))))
        err = float(np.max(np.abs(val - ref)))
        if err > 1e-10 * scale:
            raise AssertionError(
                f"adjoint field disagrees with Levi-Civita alpha by {err:.3e}"
            )
        return val


def euler_arnold_field(dec: ReductiveDecomposition, metric: MetricOnM) -> EulerArnoldField:
    """Build the geodesic right-hand side for an invariant (pseudo-)metric."""
    return EulerArnoldField(dec, metric)


# -- convergence probe -------------------------------------------------------------


@dataclass
class ConvergenceResult:
    steps: list
    errors: list
    slope: float | None
    exact: bool

    def __repr__(self):
        if self.exact:
            return "ConvergenceResult(exact)"
        return f"ConvergenceResult(slope={self.slope:.3f})"


def convergence_probe(error_at_step, steps) -> ConvergenceResult:
    """Least-squares order estimate from errors at several step sizes.

    ``error_at_step`` maps a step size to a scalar error against a reference
    solution.  Errors at machine precision short-circuit to the ``exact``
    sentinel instead of fitting noise.
    """
    steps = [float(s) for s in steps]
    if len(steps) < 3:
        raise ValueError("need at least three step sizes for an order estimate")
    errors = [float(error_at_step(s)) for s in steps]
    if max(errors) <= 1e-13:
        return ConvergenceResult(steps, errors, None, True)
    safe = [max(e, 1e-300) for e in errors]
    slope = float(np.polyfit(np.log(steps), np.log(safe), 1)[0])
    return ConvergenceResult(steps, errors, slope, False)


def geodesic_convergence(alpha: AlphaMap, g0, x0, t_span, steps,
                         reference: str = "auto", fine_factor: int = 100) -> ConvergenceResult:
    """Convergence of the geodesic frame against a closed form or a fine run.

    With ``reference='auto'`` the closed-form frame ``g0 exp(T mat(x0))`` is
    used whenever alpha vanishes on the diagonal (then x stays constant);
    otherwise a run at ``min(steps)/fine_factor`` serves as reference.
    """
    dec = alpha.dec
    sym = 0.5 * (alpha.coeffs + np.swapaxes(alpha.coeffs, 1, 2))
    diagonal_free = float(np.max(np.abs(sym))) <= 1e-15 if sym.size else True
    if reference == "exp" or (reference == "auto" and diagonal_free):
        span = float(t_span[1]) - float(t_span[0])
        ref = _frame_matrix(g0, dec) @ expm(span * dec.m_matrix(np.asarray(x0, dtype=float)))
    else:
        fine = geodesic(alpha, g0, x0, t_span, min(float(s) for s in steps) / fine_factor)
        ref = fine.frames[-1]

    def err(step):
        run = geodesic(alpha, g0, x0, t_span, step)
        return float(np.max(np.abs(run.frames[-1] - ref)))

    return convergence_probe(err, steps)


# -- curve realization --------------------------------------------------------------


def realize_curve(dec: ReductiveDecomposition, spec: CurveSpec,
                  step: float | None = None, g0=None) -> Trajectory:
    """Turn a curve specification into a trajectory with frames and velocities."""
    if spec.kind == "group_samples":
        return horizontal_lift(dec, spec, g0=g0)
    if spec.kind == "one_parameter":
        if step is None or step <= 0:
            raise ValueError("one-parameter curves need a positive step")
        return _one_parameter_trajectory(dec, spec, step, g0)
    if spec.kind == "piecewise_velocity":
        return _velocity_trajectory(dec, spec, g0)
    raise ValueError(f"unknown curve kind {spec.kind!r}")


def _one_parameter_trajectory(dec, spec, step, g0):
    dec.algebra._require_matrices()
    x0 = np.asarray(spec.x0, dtype=float)
    if x0.shape != (dec.N,):
        raise ValueError(f"one-parameter direction must have length {dec.N}")
    t0, t1 = spec.t_span
    nsteps = max(1, math.ceil((t1 - t0) / step - 1e-12))
    h = (t1 - t0) / nsteps
    times = np.linspace(t0, t1, nsteps + 1)
    d = dec.algebra.matrix_dim
    inc = expm(h * dec.m_matrix(x0))
    frames = np.empty((nsteps + 1, d, d))
    frames[0] = _frame_matrix(g0 if g0 is not None else spec.initial_frame, dec)
    for i in range(nsteps):
        frames[i + 1] = frames[i] @ inc
    xs = np.tile(x0, (nsteps + 1, 1))
    meta = {"integrator": "exp", "step": h, "curve": "one_parameter"}
    traj = Trajectory(dec, times, frames, xs, meta=meta)
    meta.update(traj.diagnostics())
    return traj


def _velocity_trajectory(dec, spec, g0):
    dec.algebra._require_matrices()
    times = spec.times
    xs = np.asarray(spec.values, dtype=float)
    if xs.shape != (len(times), dec.N):
        raise ValueError(f"velocity samples must have shape (len(times), {dec.N})")
    d = dec.algebra.matrix_dim
    dt = np.diff(times)
    x_mid = 0.5 * (xs[:-1] + xs[1:])        # order-1 interpolation of the samples
    a0 = np.einsum("sk,kab->sab", xs, dec.m_matrices)
    am = np.einsum("sk,kab->sab", x_mid, dec.m_matrices)
    frames = np.empty((len(times), d, d))
    frames[0] = _frame_matrix(g0 if g0 is not None else spec.initial_frame, dec)
    # g' = g mat(x): right-multiplication, so transition acts from the right
    for i in range(len(times) - 1):
        h = dt[i]
        g = frames[i]
        k1 = g @ a0[i]
        k2 = (g + 0.5 * h * k1) @ am[i]
        k3 = (g + 0.5 * h * k2) @ am[i]
        k4 = (g + h * k3) @ a0[i + 1]
        frames[i + 1] = g + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    meta = {"integrator": "rk4", "step": float(np.max(dt)), "curve": "piecewise_velocity"}
    traj = Trajectory(dec, np.array(times), frames, xs.copy(), meta=meta)
    meta.update(traj.diagnostics())
    return traj
