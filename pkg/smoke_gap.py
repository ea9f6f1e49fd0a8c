import time
import numpy as np

from riemplan.geometry import parse_manifold
from riemplan.potentials import GaussianObstacle
from riemplan.bvp import BoundaryData, solve_bvp
from riemplan.dynamics import action
from riemplan.oracle import (DiscretePath, discrete_action, discrete_gradient,
                             minimize_discrete, compare_with_trajectory)

chart = parse_manifold("sphere2")
pot = GaussianObstacle(chart, center=np.array([0.6, -0.3]),
                       amplitude=1.0, width=0.7)
bd = BoundaryData(
    q_a=np.array([-0.8, 0.1]), v_a=np.array([0.5, 0.2]),
    q_b=np.array([0.9, 0.4]), v_b=np.array([0.1, -0.3]),
    a=0.0, b=2.0,
)
res = solve_bvp(chart, pot, bd)
traj = res.trajectory
act_cont = action(chart, pot, traj)
print(f"continuous action {act_cont:.10f}", flush=True)

# consistency order: discrete functional ON the sampled true solution
print("sampled-trajectory consistency:")
for N in (100, 200, 400, 800, 1600):
    ts = np.linspace(bd.a, bd.b, N + 1)
    qs = np.stack([traj.interpolate(float(t)).q for t in ts])
    da = discrete_action(chart, pot, DiscretePath(ts, qs, bd))
    g = discrete_gradient(chart, pot, DiscretePath(ts, qs, bd))
    print(f"  N={N}: disc {da:.8f} err {da-act_cont:+.3e} "
          f"gsup(sampled) {np.max(np.abs(g)):.3e}", flush=True)

# minimizer gap scaling
print("minimizer gap scaling:")
for N in (100, 200, 400, 800):
    t0 = time.time()
    path = minimize_discrete(chart, pot, bd, N=N)
    cmp = compare_with_trajectory(chart, pot, path, traj)
    print(f"  N={N}: min {path.action:.8f} gap_cont {act_cont-path.action:+.3e} "
          f"sup {cmp['sup_distance']:.3e} ({time.time()-t0:.1f}s)", flush=True)
    if N == 400:
        ts = path.ts
        qs_ref = np.stack([traj.interpolate(float(t)).q for t in ts])
        d = np.max(np.abs(path.qs - qs_ref), axis=1)
        idx = np.argsort(d)[-8:][::-1]
        print(f"    largest |delta| at nodes {idx.tolist()} of {N}: "
              f"{np.round(d[idx], 6).tolist()}", flush=True)
        third = len(d) // 3
        print(f"    sup by third: [{d[:third].max():.2e} "
              f"{d[third:2*third].max():.2e} {d[2*third:].max():.2e}]", flush=True)
