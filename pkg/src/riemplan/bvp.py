"""Two-point boundary problems: the bi-exponential map and Newton shooting.

The bi-exponential map sends initial covariant acceleration and jerk (y, z)
to the endpoint position and velocity of the trajectory ODE started at
(p, v).  When its differential in (y, z) is invertible, prescribing both
endpoint positions and velocities is a well-posed local problem; the solver
is a damped Newton iteration on that map with a finite-difference Jacobian.

The Newton iteration runs on the discretized flow: residual, Jacobian and
the returned trajectory all share one fixed RK4 grid, so convergence is
measured against the same curve the caller receives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, CurveState, _rk4_step, grid_steps, integrate_ivp, action
from .errors import (
    ChartEscapeError,
    CriticalPointError,
    NonconvergenceError,
    NumericalError,
    PlannerError,
)

__all__ = [
    "BoundaryData",
    "ShootingResult",
    "hermite_seed",
    "biexp",
    "biexp_jacobian",
    "solve_bvp",
    "continuation_sweep",
    "multi_seed_scan",
]


@dataclass
class BoundaryData:
    """Endpoint positions and velocities on an interval [a, b]."""

    q_a: np.ndarray
    v_a: np.ndarray
    q_b: np.ndarray
    v_b: np.ndarray
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        self.q_a = np.asarray(self.q_a, float)
        self.v_a = np.asarray(self.v_a, float)
        self.q_b = np.asarray(self.q_b, float)
        self.v_b = np.asarray(self.v_b, float)
        if not self.b > self.a:
            raise ValueError("boundary interval needs b > a")

    @property
    def span(self) -> float:
        return float(self.b - self.a)

    def validate(self, chart) -> None:
        chart.check_point(self.q_a, "start point")
        chart.check_point(self.q_b, "end point")


@dataclass
class ShootingResult:
    y: np.ndarray
    z: np.ndarray
    trajectory: Trajectory
    residual: float
    jacobian_condition: float
    iterations: int


def hermite_seed(boundary: BoundaryData) -> tuple[np.ndarray, np.ndarray]:
    """Initial (y, z) from the flat cubic interpolant in chart coordinates.

    Exact on Euclidean charts with V = 0; a serviceable starting point for
    short windows elsewhere.  Gamma and V are deliberately ignored.
    """
    tau = boundary.span
    dq = boundary.q_b - boundary.q_a
    c2 = (3.0 * dq - (2.0 * boundary.v_a + boundary.v_b) * tau) / tau**2
    c3 = (-2.0 * dq + (boundary.v_a + boundary.v_b) * tau) / tau**3
    return 2.0 * c2, 6.0 * c3


def _flow_bundle(chart, potential, p, v, ys, zs, t, steps):
    """Endpoint (q, qdot) of the trajectory flow for a batch of (y, z) rows."""
    ys = np.atleast_2d(np.asarray(ys, float))
    zs = np.atleast_2d(np.asarray(zs, float))
    m = ys.shape[0]
    u = np.empty((m, 4, chart.dim))
    u[:, 0] = p
    u[:, 1] = v
    u[:, 2] = ys
    u[:, 3] = zs
    h = t / steps
    for k in range(steps):
        u = _rk4_step(chart, potential, u, h)
        if not np.all(np.isfinite(u)):
            raise NumericalError(f"nonfinite flow state at t = {(k + 1) * h:.6g}")
        if not np.all(chart.contains(u[:, 0])):
            raise ChartEscapeError("flow left the chart domain", (k + 1) * h)
    return u[:, 0], u[:, 1]


def biexp(chart, potential, p, v, y, z, t, h=None):
    """(q(t), qdot(t)) for the trajectory started at the 4-jet (p, v, y, z)."""
    steps, _ = grid_steps(t, h)
    q, qd = _flow_bundle(chart, potential, np.asarray(p, float), np.asarray(v, float), y, z, t, steps)
    return q[0], qd[0]


def _fd_rows(y, z):
    """Perturbation bundle for the central-difference Jacobian in (y, z).

    Row layout: (y+he_1, y-he_1, ..., z+he_n, z-he_n); one shared step per
    the documented 1e-5 relative rule.
    """
    n = y.size
    step = 1e-5 * (1.0 + float(np.linalg.norm(np.concatenate([y, z]))))
    ys = np.tile(y, (4 * n, 1))
    zs = np.tile(z, (4 * n, 1))
    for i in range(n):
        ys[2 * i, i] += step
        ys[2 * i + 1, i] -= step
        zs[2 * n + 2 * i, i] += step
        zs[2 * n + 2 * i + 1, i] -= step
    return ys, zs, step


def biexp_jacobian(chart, potential, p, v, y, z, t, h=None):
    """d(q(t), qdot(t)) / d(y, z) by central finite differences.

    Columns ordered (y_1..y_n, z_1..z_n); row blocks (q; qdot).
    """
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    steps, _ = grid_steps(t, h)
    n = y.size
    ys, zs, step = _fd_rows(y, z)
    q, qd = _flow_bundle(chart, potential, np.asarray(p, float), np.asarray(v, float), ys, zs, t, steps)
    out = np.empty((2 * n, 2 * n))
    vals = np.concatenate([q, qd], axis=1)  # rows: perturbations, cols: (q, qdot)
    for c in range(2 * n):
        out[:, c] = (vals[2 * c] - vals[2 * c + 1]) / (2.0 * step)
    return out


def solve_bvp(chart, potential, boundary: BoundaryData, seed=None, h=None, max_iter: int = 50) -> ShootingResult:
    """Damped Newton shooting for the endpoint position/velocity problem.

    The residual stacks the chart-coordinate position mismatch over the
    velocity mismatch.  Globalization is backtracking on the residual
    norm (factor 0.5, at most 20 halvings); a trial that escapes the chart
    only rejects that trial.  Nonconvergence carries the best iterate;
    a singular Jacobian raises CriticalPointError since it is exactly the
    degeneracy that signals possible biconjugacy.
    """
    boundary.validate(chart)
    tau = boundary.span
    steps, h_eff = grid_steps(tau, h)
    n = chart.dim
    target = np.concatenate([boundary.q_b, boundary.v_b])
    tol = 1e-8 * (1.0 + float(np.linalg.norm(target)))

    if seed is None:
        y, z = hermite_seed(boundary)
    else:
        y = np.asarray(seed[0], float).copy()
        z = np.asarray(seed[1], float).copy()

    def residual(yy, zz):
        q, qd = _flow_bundle(chart, potential, boundary.q_a, boundary.v_a, yy, zz, tau, steps)
        return np.concatenate([q[0], qd[0]]) - target

    r = residual(y, z)
    rn = float(np.linalg.norm(r))
    best = (rn, y.copy(), z.copy())
    iterations = 0
    for _ in range(max_iter):
        if rn <= tol:
            break
        J = biexp_jacobian(chart, potential, boundary.q_a, boundary.v_a, y, z, tau, h)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] < 1e-12 * sv[0]:
            raise CriticalPointError(
                "bi-exponential differential is singular at the current iterate; "
                "the endpoint may be close to biconjugate"
            )
        dyz = np.linalg.solve(J, -r)
        t_step = 1.0
        accepted = False
        for _ in range(20):
            try:
                r_new = residual(y + t_step * dyz[:n], z + t_step * dyz[n:])
            except (ChartEscapeError, NumericalError):
                t_step *= 0.5
                continue
            rn_new = float(np.linalg.norm(r_new))
            if rn_new < rn:
                accepted = True
                break
            t_step *= 0.5
        if not accepted:
            raise NonconvergenceError(
                "shooting line search stalled",
                best={"y": best[1], "z": best[2], "residual": best[0]},
            )
        y = y + t_step * dyz[:n]
        z = z + t_step * dyz[n:]
        r, rn = r_new, rn_new
        iterations += 1
        if rn < best[0]:
            best = (rn, y.copy(), z.copy())
    else:
        raise NonconvergenceError(
            f"shooting did not converge in {max_iter} iterations "
            f"(best residual {best[0]:.3e})",
            best={"y": best[1], "z": best[2], "residual": best[0]},
        )

    J = biexp_jacobian(chart, potential, boundary.q_a, boundary.v_a, y, z, tau, h)
    sv = np.linalg.svd(J, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    initial = CurveState(boundary.a, boundary.q_a, boundary.v_a, y, z)
    trajectory = integrate_ivp(chart, potential, initial, tau, h_eff)
    return ShootingResult(y, z, trajectory, rn, cond, iterations)


def continuation_sweep(chart, family, boundary: BoundaryData, lams, h=None):
    """Solve along a potential homotopy, warm-starting each stage.

    ``family`` maps a scale value to a Potential; the grid must start at 0
    so the first stage has the reliable flat-seeded V = 0 problem.  Solver
    errors propagate annotated with the failing scale value.
    """
    lams = [float(l) for l in lams]
    if not lams or lams[0] != 0.0:
        raise ValueError("continuation grid must start at 0")
    out = []
    seed = None
    for lam in lams:
        try:
            res = solve_bvp(chart, family(lam), boundary, seed=seed, h=h)
        except PlannerError as exc:
            exc.sweep_lambda = lam
            raise
        out.append(res)
        seed = (res.y, res.z)
    return out


def multi_seed_scan(chart, potential, boundary: BoundaryData, n_seeds: int = 10, rng_seed: int = 0, spread: float = 1.0, h=None):
    """Probe for distinct solutions from scattered seeds; rank by action.

    Seeds are the flat cubic guess plus Gaussian perturbations.  Convergent
    results are deduplicated on (y, z) rounded to 1e-5 granularity and
    returned sorted by increasing action.
    """
    y0, z0 = hermite_seed(boundary)
    scale = spread * (1.0 + float(np.linalg.norm(np.concatenate([y0, z0]))))
    rng = np.random.default_rng(rng_seed)
    seeds = [(y0, z0)]
    for _ in range(max(0, n_seeds - 1)):
        dy, dz = rng.normal(size=(2, chart.dim)) * scale
        seeds.append((y0 + dy, z0 + dz))
    found = {}
    for s in seeds:
        try:
            res = solve_bvp(chart, potential, boundary, seed=s, h=h)
        except PlannerError:
            continue
        key = tuple(
            np.round(np.concatenate([res.y, res.z]) / 1e-5).astype(np.int64).tolist()
        )
        if key not in found:
            found[key] = res
    ranked = [found[k] for k in sorted(found)]
    ranked.sort(key=lambda r: action(chart, potential, r.trajectory))
    return ranked
