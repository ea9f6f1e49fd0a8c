import numpy as np
import warnings

from riemplan.geometry import parse_manifold
from riemplan.potentials import (
    ZeroPotential, GaussianObstacle, QuadraticWell, potential_from_config,
)
from riemplan.dynamics import (
    CurveState, Trajectory, integrate_ivp, action, first_variation,
    quadrature_weights, grid_steps,
)
from riemplan.bvp import BoundaryData, hermite_seed, biexp, solve_bvp, multi_seed_scan
from riemplan.jacobi import (
    JacobiState, F_operator, propagate_jacobi, biconjugate_scan, negative_direction,
)

rng = np.random.default_rng(7)

# --- flat exactness -------------------------------------------------------
E2 = parse_manifold("euclidean:2")
V0 = ZeroPotential(E2)
q0 = np.zeros(2)
v0 = np.array([1.0, -0.5])
y0 = np.array([0.2, 0.4])
z0 = np.array([-0.6, 1.0])
tr = integrate_ivp(E2, V0, CurveState(0.0, q0, v0, y0, z0), 1.0, h=1.0 / 200)
tt = tr.ts[:, None]
exact = q0 + v0 * tt + 0.5 * y0 * tt**2 + z0 * tt**3 / 6.0
print("flat cubic exactness:", np.max(np.abs(tr.qs - exact)))
exact_v = v0 + y0 * tt + 0.5 * z0 * tt**2
print("flat v exactness:", np.max(np.abs(tr.vs - exact_v)))

E1 = parse_manifold("euclidean:1")
V01 = ZeroPotential(E1)
tr1 = integrate_ivp(E1, V01, CurveState(0.0, np.zeros(1), np.zeros(1), np.zeros(1), np.ones(1)), 1.0, h=1.0 / 100)
print("action(t^3/6) - 1/6:", action(E1, V01, tr1) - 1.0 / 6.0)

# --- quadrature weights ---------------------------------------------------
for m in (2, 3, 4, 5, 7, 10):
    ws = quadrature_weights(m + 1, 1.0 / m)
    xs = np.linspace(0, 1, m + 1)
    errs = [abs(ws @ xs**p - 1.0 / (p + 1)) for p in range(4)]
    print(f"quadrature n={m}:", max(errs))

# --- flat BVP: Hermite seed is exact --------------------------------------
bd = BoundaryData(np.zeros(2), np.zeros(2), np.array([1.0 / 6.0, 0.0]), np.array([0.5, 0.0]))
res = solve_bvp(E2, V0, bd)
print("flat solve iters:", res.iterations, "resid:", res.residual, "y,z:", res.y, res.z)

# --- Gaussian potential: closed-form vs FD hessian ------------------------
S2 = parse_manifold("sphere2")
ctr = np.array([0.3, -0.2])
for mode in ("riemannian", "chart"):
    G = GaussianObstacle(S2, ctr, 1.3, 0.7, distance=mode)
    x = np.array([0.4, 0.35])
    X = np.array([0.3, -1.1])
    hc = G.hessian_op(x, X)
    hf = G.hessian_op_fd(x, X)
    print(f"gauss hess {mode}:", np.max(np.abs(hc - hf)))

H2 = parse_manifold("hyperbolic2")
G = GaussianObstacle(H2, np.array([0.1, 0.05]), 0.8, 0.5, distance="riemannian")
x = np.array([0.25, -0.1]); X = np.array([1.0, 0.4])
print("gauss hess hyp:", np.max(np.abs(G.hessian_op(x, X) - G.hessian_op_fd(x, X))))

# --- first variation vanishes at a solved trajectory ----------------------
Vg = GaussianObstacle(E2, np.array([0.1, 0.05]), 0.5, 0.6, distance="chart")
bd2 = BoundaryData(np.zeros(2), np.array([1.0, 0.0]), np.array([1.0, 0.3]), np.array([1.0, 0.5]))
sol = solve_bvp(E2, Vg, bd2, h=1.0 / 400)
print("gauss E2 solve iters:", sol.iterations, "resid:", sol.residual)
ts = sol.trajectory.ts
prof = np.sin(np.pi * ts) ** 2
W = np.stack([prof * 0.3, -prof * 0.8], axis=-1)
fv = first_variation(E2, Vg, sol.trajectory, W)
print("first variation at solution:", fv)

# --- sphere BVP -----------------------------------------------------------
VS = GaussianObstacle(S2, np.array([0.05, 0.02]), 0.6, 0.5, distance="riemannian")
bdS = BoundaryData(np.array([-0.4, -0.1]), np.array([0.8, 0.2]), np.array([0.45, 0.25]), np.array([0.6, -0.3]))
solS = solve_bvp(S2, VS, bdS, h=1.0 / 400)
print("sphere solve iters:", solS.iterations, "resid:", solS.residual,
      "cond:", solS.jacobian_condition)

# --- flat field flow: normalized det == 1, scan empty ---------------------
rep = biconjugate_scan(E2, V0, tr)
print("flat scan times:", rep.times)

# --- linearization of the endpoint map (sphere, coarse) -------------------
p, v = bdS.q_a, np.array([0.8, 0.2])
y, z = hermite_seed(bdS)
hh = 1.0 / 200
X0 = np.zeros((2, 2)); X0j = np.zeros((2, 2))
dirs = rng.standard_normal((2, 2))
dy, dz = dirs[0], dirs[1]
e = 1e-5
qp, vp = biexp(S2, VS, p, v, y + e * dy, z + e * dz, 1.0, h=hh)
qm, vm = biexp(S2, VS, p, v, y - e * dy, z - e * dz, 1.0, h=hh)
fd_q = (qp - qm) / (2 * e)
trS = integrate_ivp(S2, VS, CurveState(0.0, p, v, y, z), 1.0, h=hh)
jac = propagate_jacobi(S2, VS, trS, JacobiState(0.0, np.zeros(2), np.zeros(2), dy, dz))
print("linearization (coord q): fd", fd_q, "field", jac.X[-1])
print("linearization err:", np.max(np.abs(fd_q - jac.X[-1])))

# --- the rest-point panel: quartic beam times -----------------------------
Vtop = GaussianObstacle(E1, np.zeros(1), 1.0, 1.0, distance="chart")
rest = integrate_ivp(E1, Vtop, CurveState(0.0, np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1)), 12.0)
with warnings.catch_warnings(record=True) as wlist:
    warnings.simplefilter("always")
    repB = biconjugate_scan(E1, Vtop, rest)
print("beam times:", repB.times)
print("beam sigma:", repB.sigma_ratios)
expect = [4.730040744863, 7.853204624096, 10.995607838003]
print("beam errs:", [abs(a - b) for a, b in zip(repB.times, expect)])

nd = negative_direction(E1, Vtop, rest, 0.0, repB.times[0])
print("negative direction:", nd.value, "delta:", nd.delta, "eps:", nd.eps)
nd0 = negative_direction(E1, Vtop, rest, 0.0, repB.times[0], delta=0.4, eps=0.0)
print("eps=0 value:", nd0.value)
