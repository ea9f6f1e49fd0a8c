"""Perturbation-field propagation and loss-of-rank detection.

The 1-D rest trajectory on top of a unit Gaussian bump is the main
oracle: its linearization is X'''' = X, whose rank-drop times are the
positive roots of cosh(t)cos(t) = 1.  Those roots are frozen here from a
high-precision offline root solve.
"""

from __future__ import annotations

import functools

import numpy as np
import pytest
import scipy.linalg

from riemplan import (
    ConstructionError,
    CurveState,
    GaussianObstacle,
    JacobiState,
    NumericalError,
    NumericChart,
    QuadraticWell,
    ResolutionWarning,
    ZeroPotential,
    biconjugate_scan,
    biexp_jacobian,
    integrate_ivp,
    negative_direction,
    parse_manifold,
    propagate_jacobi,
)
from riemplan.jacobi import F_operator

EUC1 = parse_manifold("euclidean:1")
EUC2 = parse_manifold("euclidean:2")
S2 = parse_manifold("sphere2")

# positive roots of cosh(t)cos(t) = 1
BEAM_ROOTS = (4.730040744863, 7.853204624096, 10.995607838003, 14.137165491223)

RNG = np.random.default_rng(23)


@functools.cache
def bump_rest(T):
    """Rest trajectory balanced on the tip of a unit Gaussian bump."""
    pot = GaussianObstacle(EUC1, (0.0,), amplitude=1.0, width=1.0)
    z = np.zeros(1)
    return pot, integrate_ivp(EUC1, pot, CurveState(0.0, z, z, z, z), T)


@functools.cache
def bump_scan(T):
    pot, traj = bump_rest(T)
    return biconjugate_scan(EUC1, pot, traj)


@functools.cache
def sphere_case():
    pot = GaussianObstacle(S2, (0.4, 0.2), amplitude=1.0, width=0.6)
    st = CurveState(
        0.0, np.array([-0.3, 0.1]), np.array([0.5, 0.2]), np.array([0.2, -0.3]), np.array([0.1, 0.4])
    )
    return pot, st, integrate_ivp(S2, pot, st, 1.0)


def test_f_operator_flat_zero():
    st = CurveState(0.0, RNG.normal(size=(6, 2)), RNG.normal(size=(6, 2)), RNG.normal(size=(6, 2)), RNG.normal(size=(6, 2)))
    out = F_operator(EUC2, st, RNG.normal(size=(6, 2)), RNG.normal(size=(6, 2)), RNG.normal(size=(6, 2)))
    assert np.all(out == 0.0)


def test_f_operator_constant_curvature_reduction():
    q = np.array([0.2, -0.3])
    v, a, j, X, dX, d2X = RNG.normal(size=(6, 2))
    st = CurveState(0.0, q, v, a, j)

    def R(u, w, s):  # unit-curvature closed form at q
        return S2.inner(q, w, s) * u - S2.inner(q, u, s) * w

    expected = (
        R(R(X, v, v), v, v)
        + R(X, j, v)
        + 2.0 * R(d2X, v, v)
        + 3.0 * (R(X, v, j) + R(X, a, a))
        + 4.0 * R(dX, v, a)
    )
    assert np.max(np.abs(F_operator(S2, st, X, dX, d2X) - expected)) < 1e-10


def test_f_operator_linearity():
    q = np.array([0.2, -0.3])
    st = CurveState(0.0, q, *RNG.normal(size=(3, 2)))
    X1, X2, d1, d2, s1, s2 = RNG.normal(size=(6, 2))
    mix = F_operator(S2, st, 0.7 * X1 + X2, 0.7 * d1 + d2, 0.7 * s1 + s2)
    split = 0.7 * F_operator(S2, st, X1, d1, s1) + F_operator(S2, st, X2, d2, s2)
    assert np.max(np.abs(mix - split)) < 1e-12


def test_propagate_flat_polynomial():
    st = CurveState(0.0, np.zeros(2), np.array([0.4, -0.1]), np.array([0.2, 0.3]), np.array([-0.5, 0.1]))
    traj = integrate_ivp(EUC2, ZeroPotential(EUC2), st, 1.0)
    c = RNG.normal(size=(4, 2))
    out = propagate_jacobi(EUC2, ZeroPotential(EUC2), traj, JacobiState(0.0, c[0], c[1], c[2], c[3]))
    t = traj.ts[:, None]
    exact = c[0] + c[1] * t + c[2] * t**2 / 2 + c[3] * t**3 / 6
    assert np.max(np.abs(out.X - exact)) < 1e-12


def test_propagate_quadratic_well_closed_form():
    pot = QuadraticWell(EUC1, center=(0.0,), stiffness=1.0)
    st = CurveState(0.0, np.array([0.2]), np.array([-0.1]), np.array([0.3]), np.array([0.1]))
    traj = integrate_ivp(EUC1, pot, st, 1.0)
    u0 = np.array([0.5, -0.3, 0.2, 0.4])
    out = propagate_jacobi(EUC1, pot, traj, JacobiState(0.0, u0[:1], u0[1:2], u0[2:3], u0[3:4]))
    A = np.diag(np.ones(3), 1)
    A[3, 0] = -1.0
    exact = np.stack([scipy.linalg.expm(A * t) @ u0 for t in traj.ts])
    assert np.max(np.abs(out.X[:, 0] - exact[:, 0])) < 1e-9


def test_propagate_superposition_and_zero():
    pot, _, traj = sphere_case()
    u1, u2 = RNG.normal(size=(2, 4, 2))
    batch = np.stack([u1, u2, 0.7 * u1 + u2, np.zeros((4, 2))])
    out = propagate_jacobi(
        S2, pot, traj, JacobiState(0.0, batch[:, 0], batch[:, 1], batch[:, 2], batch[:, 3])
    )
    mix = 0.7 * out.X[:, 0] + out.X[:, 1]
    assert np.max(np.abs(out.X[:, 2] - mix)) < 1e-9
    assert np.all(out.X[:, 3] == 0.0)
    assert np.all(out.d3X[:, 3] == 0.0)


def test_propagate_requires_start_time():
    pot, _, traj = sphere_case()
    with pytest.raises(ValueError):
        propagate_jacobi(S2, pot, traj, JacobiState(0.5, np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2)))


def fd_linearization_gap(chart, pot, st, T, h):
    """Sup-norm gap between propagated fields and the FD endpoint Jacobian."""
    traj = integrate_ivp(chart, pot, st, T, h=h)
    n = chart.dim
    J_fd = biexp_jacobian(chart, pot, st.q, st.v, st.a, st.j, T, h=h)
    zero = np.zeros((2 * n, n))
    jets = np.zeros((2 * n, 2, n))
    for i in range(n):
        jets[i, 0, i] = 1.0
        jets[n + i, 1, i] = 1.0
    out = propagate_jacobi(chart, pot, traj, JacobiState(0.0, zero, zero, jets[:, 0], jets[:, 1]))
    X_T = out.X[-1]
    Xdot_T = out.dX[-1] - chart.gamma(traj.qs[-1], traj.vs[-1], X_T)
    J_prop = np.concatenate([X_T, Xdot_T], axis=1).T
    return np.max(np.abs(J_prop - J_fd)) / np.max(np.abs(J_fd))


def test_linearization_matches_fd_sphere():
    pot, st, _ = sphere_case()
    assert fd_linearization_gap(S2, pot, st, 1.0, None) < 1e-4


def test_linearization_matches_fd_numeric_chart():
    # non-symmetric metric: the curvature-gradient terms must participate
    def g(x):
        f = 0.1 * x[..., 0] ** 3 + 0.05 * x[..., 1] ** 3
        return np.exp(2.0 * f)[..., None, None] * np.eye(2)

    chart = NumericChart(2, g, domain_radius=2.0, name="warped-plane")
    # chart-coordinate distance keeps the generic-chart log out of the loop
    pot = GaussianObstacle(chart, (0.3, 0.1), amplitude=0.8, width=0.5, distance="chart")
    st = CurveState(0.0, np.array([0.1, -0.2]), np.array([0.6, 0.4]), np.array([0.3, -0.1]), np.array([0.2, 0.5]))
    assert fd_linearization_gap(chart, pot, st, 0.4, 0.4 / 60) < 1e-3


def test_fundamental_system_stays_full_rank():
    pot, _, traj = sphere_case()
    u0 = np.eye(8).reshape(8, 4, 2)
    out = propagate_jacobi(S2, pot, traj, JacobiState(0.0, u0[:, 0], u0[:, 1], u0[:, 2], u0[:, 3]))
    final = np.concatenate([out.X[-1], out.dX[-1], out.d2X[-1], out.d3X[-1]], axis=1)
    sv = np.linalg.svd(final, compute_uv=False)
    assert sv[-1] / sv[0] >= 1e-10


def test_scan_flat_empty():
    st = CurveState(0.0, np.zeros(2), np.array([0.4, -0.1]), np.array([0.2, 0.3]), np.array([-0.5, 0.1]))
    traj = integrate_ivp(EUC2, ZeroPotential(EUC2), st, 1.0)
    report = biconjugate_scan(EUC2, ZeroPotential(EUC2), traj)
    assert len(report) == 0


def test_scan_quadratic_well_empty():
    # X'''' = -X never loses rank, however long the window
    pot = QuadraticWell(EUC1, center=(0.0,), stiffness=1.0)
    st = CurveState(0.0, np.array([0.1]), np.array([0.05]), np.array([-0.02]), np.array([0.01]))
    traj = integrate_ivp(EUC1, pot, st, 6.0)
    assert len(biconjugate_scan(EUC1, pot, traj)) == 0


def test_scan_finds_beam_roots():
    report = bump_scan(12.0)
    assert len(report) == 3
    for found, exact in zip(report.times, BEAM_ROOTS):
        assert abs(found - exact) < 1e-5
    assert all(s < 1e-6 for s in report.sigma_ratios)
    d = report.to_dict()
    assert len(d["points"]) == 3


def test_scan_interior_anchor():
    pot, traj = bump_rest(12.0)
    report = biconjugate_scan(EUC1, pot, traj, t1=2.0)
    # constant coefficients: pairs depend only on |t2 - t1|
    expected = [report.t1 + r for r in BEAM_ROOTS if report.t1 + r < 12.0]
    assert len(report) == len(expected)
    for found, exact in zip(report.times, expected):
        assert abs(found - exact) < 1e-5


def test_scan_witness_repropagation():
    report = bump_scan(12.0)
    for t2, (w2, w3) in zip(report.times, report.witnesses):
        # re-integrate with the detected time as the final grid node
        pot, traj = bump_rest(t2)
        out = propagate_jacobi(EUC1, pot, traj, JacobiState(0.0, np.zeros(1), np.zeros(1), w2, w3))
        sup = float(np.max(np.abs(out.X)))
        gap = abs(float(out.X[-1, 0])) + abs(float(out.dX[-1, 0]))
        assert gap <= 1e-6 * sup


def test_scan_coarse_grid_warns():
    pot, traj = bump_rest(12.0)
    with pytest.warns(ResolutionWarning):
        biconjugate_scan(EUC1, pot, traj, grid=4)


def test_negative_direction_first_pair():
    pot, traj = bump_rest(6.0)
    report = bump_scan(6.0)
    assert len(report) == 1
    t2 = report.times[0]
    nd = negative_direction(EUC1, pot, traj, 0.0, t2)
    assert nd.value < 0.0
    assert 0.0 < nd.delta < t2
    assert nd.eps > 0.0
    assert np.all(np.isfinite(nd.U))
    assert nd.ts[0] >= 0.0 and nd.ts[-1] <= 6.0


def test_negative_direction_witness_residual():
    pot, traj = bump_rest(6.0)
    t2 = bump_scan(6.0).times[0]
    nd = negative_direction(EUC1, pot, traj, 0.0, t2, delta=0.3, eps=0.0)
    assert abs(nd.value) < 1e-3


def test_negative_direction_rejects_regular_pair():
    pot, traj = bump_rest(6.0)
    with pytest.raises(ValueError, match="not a detected pair"):
        negative_direction(EUC1, pot, traj, 0.0, 2.0)


def test_negative_direction_rejects_bad_order():
    pot, traj = bump_rest(6.0)
    with pytest.raises(ValueError):
        negative_direction(EUC1, pot, traj, 3.0, 3.0)


def test_negative_direction_needs_interior_room():
    pot = GaussianObstacle(EUC1, (0.0,), amplitude=1.0, width=1.0)
    z = np.zeros(1)
    traj = integrate_ivp(EUC1, pot, CurveState(0.0, z, z, z, z), BEAM_ROOTS[0])
    with pytest.raises(ConstructionError):
        negative_direction(EUC1, pot, traj, 0.0, BEAM_ROOTS[0])


def test_propagate_overflow_reports_blowup():
    pot, traj = bump_rest(800.0)
    with np.errstate(over="ignore"), pytest.raises(NumericalError, match="blew up"):
        propagate_jacobi(EUC1, pot, traj, JacobiState(0.0, np.zeros(1), np.zeros(1), np.ones(1), np.zeros(1)))
