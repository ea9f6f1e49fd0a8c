import time
import numpy as np

from riemplan.geometry import parse_manifold
from riemplan.potentials import ZeroPotential, GaussianObstacle
from riemplan.dynamics import CurveState, integrate_ivp
from riemplan.bvp import BoundaryData, solve_bvp
from riemplan.index import (
    AdmissibleField, field_from_profiles, random_field, index_form, decompose,
    second_variation_fd, extended_index, verdict,
)

rng = np.random.default_rng(3)

# --- frozen profile oracle: I = 4/5 for t^2(1-t)^2 on flat [0,1] ----------
E1 = parse_manifold("euclidean:1")
V0 = ZeroPotential(E1)
tr = integrate_ivp(E1, V0, CurveState(0.0, np.zeros(1), np.ones(1), np.zeros(1), np.zeros(1)), 1.0)
ts = tr.ts
P = (ts**2 * (1 - ts) ** 2)[:, None]
dP = (2 * ts - 6 * ts**2 + 4 * ts**3)[:, None]
d2P = (2 - 12 * ts + 12 * ts**2)[:, None]
X = field_from_profiles(tr, P, dP, d2P)
print("I(X,X) - 4/5:", index_form(E1, V0, tr, X, X) - 0.8)

# --- decomposition identities on a curved solve ---------------------------
S2 = parse_manifold("sphere2")
VS = GaussianObstacle(S2, np.array([0.05, 0.02]), 0.6, 0.5, distance="riemannian")
bd = BoundaryData(np.array([-0.4, -0.1]), np.array([0.8, 0.2]),
                  np.array([0.45, 0.25]), np.array([0.6, -0.3]))
sol = solve_bvp(S2, VS, bd)
trS = sol.trajectory
Xf = random_field(trS, rng)
Yf = random_field(trS, rng)
ixy = index_form(S2, VS, trS, Xf, Yf)
iyx = index_form(S2, VS, trS, Yf, Xf)
ic, pp, pm = decompose(S2, VS, trS, Xf, Yf)
print("sum identity:", ixy - (ic + pp + pm))
print("antisym identity:", (ixy - iyx) - 2 * pm)

# --- FD master oracle -----------------------------------------------------
t0 = time.time()
for k in range(3):
    Xa = random_field(trS, rng)
    Ya = random_field(trS, rng)
    ia = index_form(S2, VS, trS, Xa, Ya)
    ib = index_form(S2, VS, trS, Ya, Xa)
    fd = second_variation_fd(S2, VS, trS, Xa, Ya)
    print(f"fd pair {k}: form {0.5*(ia+ib):+.6f} fd {fd:+.6f} diff {abs(0.5*(ia+ib)-fd):.2e}")
print("fd time:", time.time() - t0)

# --- extended index: flat short window is definite ------------------------
E2 = parse_manifold("euclidean:2")
V02 = ZeroPotential(E2)
bd2 = BoundaryData(np.zeros(2), np.zeros(2), np.array([1.0, 0.2]), np.array([1.0, 0.0]))
sol2 = solve_bvp(E2, V02, bd2)
t0 = time.time()
rep = extended_index(E2, V02, sol2.trajectory, 20)
print("flat galerkin:", rep.verdict, "index", rep.index, "kernel", rep.kernel_dim,
      "min eig", rep.eigenvalues[0], "cond", rep.mass_condition, "t", time.time() - t0)

# --- the beam: index jumps after the first pair time ----------------------
Vtop = GaussianObstacle(E1, np.zeros(1), 1.0, 1.0, distance="chart")
zero1 = np.zeros(1)
for T in (3.0, 6.0, 9.0):
    rest = integrate_ivp(E1, Vtop, CurveState(0.0, zero1, zero1, zero1, zero1), T)
    repT = extended_index(E1, Vtop, rest, 40)
    print(f"beam T={T}: {repT.verdict} index {repT.index} min {repT.eigenvalues[0]:.3e}")

# nested dyadic refinement is monotone
rest6 = integrate_ivp(E1, Vtop, CurveState(0.0, zero1, zero1, zero1, zero1), 6.0)
prev = -1
for m in (5, 9, 17, 33):
    r = extended_index(E1, Vtop, rest6, m, dyadic=True)
    print(f"dyadic m={m}: index {r.index} extended {r.extended_index}")
    assert r.extended_index >= prev
    prev = r.extended_index

# --- verdicts -------------------------------------------------------------
t0 = time.time()
vr = verdict(E1, Vtop, rest6)
print("beam T=6 verdict:", vr.classification, "certified:", vr.certified_interval, "t", time.time() - t0)
rest3 = integrate_ivp(E1, Vtop, CurveState(0.0, zero1, zero1, zero1, zero1), 3.0)
vr3 = verdict(E1, Vtop, rest3)
print("beam T=3 verdict:", vr3.classification, "certified:", vr3.certified_interval)
t0 = time.time()
vrS = verdict(S2, VS, trS)
print("sphere verdict:", vrS.classification, "index", vrS.index_report.index,
      "scan", vrS.scan_report.times, "t", time.time() - t0)
