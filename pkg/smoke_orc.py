import time
import numpy as np

from riemplan.geometry import parse_manifold
from riemplan.potentials import GaussianObstacle, ZeroPotential
from riemplan.bvp import BoundaryData, solve_bvp
from riemplan.dynamics import action
from riemplan.oracle import (DiscretePath, discrete_action, minimize_discrete,
                             compare_with_trajectory, check_uniqueness_props)

# flat regression, N=100
chart = parse_manifold("euclidean:2")
pot = ZeroPotential(chart)
bd = BoundaryData(
    q_a=np.array([0.0, 0.0]), v_a=np.array([0.3, -0.2]),
    q_b=np.array([1.0, 0.5]), v_b=np.array([-0.1, 0.4]),
    a=0.0, b=1.0,
)
t0 = time.time()
path = minimize_discrete(chart, pot, bd, N=100)
print(f"flat N=100: gsup {path.grad_sup:.3e} action {path.action:.12f} "
      f"iters {path.iterations} ({time.time()-t0:.2f}s)", flush=True)

# sphere N=400 cross-check vs shooting
chart = parse_manifold("sphere2")
pot = GaussianObstacle(chart, center=np.array([0.6, -0.3]),
                       amplitude=1.0, width=0.7)
bd = BoundaryData(
    q_a=np.array([-0.8, 0.1]), v_a=np.array([0.5, 0.2]),
    q_b=np.array([0.9, 0.4]), v_b=np.array([0.1, -0.3]),
    a=0.0, b=2.0,
)
t0 = time.time()
path = minimize_discrete(chart, pot, bd, N=400)
print(f"sphere N=400: gsup {path.grad_sup:.3e} action {path.action:.12f} "
      f"iters {path.iterations} ({time.time()-t0:.2f}s)", flush=True)

res = solve_bvp(chart, pot, bd)
traj = res.trajectory
cmp = compare_with_trajectory(chart, pot, path, traj)
print("  compare:", {k: (f"{v:.4e}" if isinstance(v, float) else v)
                     for k, v in cmp.items()}, flush=True)
assert cmp["sup_distance"] <= 5e-3 and cmp["action_gap"] <= 1e-3

# discretization consistency order of the discrete functional
act_cont = action(chart, pot, traj)
errs = []
for N in (100, 200, 400, 800):
    ts = np.linspace(bd.a, bd.b, N + 1)
    qs = np.stack([traj.interpolate(float(t)).q for t in ts])
    da = discrete_action(chart, pot, DiscretePath(ts, qs, bd))
    errs.append(abs(da - act_cont))
orders = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
print(f"  consistency errs {['%.3e' % e for e in errs]} orders "
      f"{['%.2f' % o for o in orders]}", flush=True)

# uniqueness props end-to-end on the shooting solve
t0 = time.time()
rep = check_uniqueness_props(chart, pot, traj)
print(f"uniqueness ({time.time()-t0:.2f}s): pass={rep['pass']} "
      f"conclusive={rep['conclusive']} jet_fwd={rep['jet_forward_sup']:.2e} "
      f"jet_bwd={rep['jet_backward_sup']:.2e}", flush=True)
for p in rep["restriction_probes"]:
    print("   probe:", p)
