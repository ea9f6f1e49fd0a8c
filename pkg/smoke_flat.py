import numpy as np

from riemplan.geometry import parse_manifold
from riemplan.potentials import ZeroPotential
from riemplan.bvp import BoundaryData
from riemplan.oracle import (DiscretePath, discrete_action, minimize_discrete)

# flat R^1, V=0: discrete functional is quadratic, minimizer exactly
# reachable; continuous minimizer is the Hermite cubic q(t)=t^3.
chart = parse_manifold("euclidean:1")
pot = ZeroPotential(chart)
bd = BoundaryData(q_a=np.array([0.0]), v_a=np.array([0.0]),
                  q_b=np.array([1.0]), v_b=np.array([3.0]), a=0.0, b=1.0)
act_true = 6.0

for N in (100, 200, 400, 800):
    path = minimize_discrete(chart, pot, bd, N=N)
    ts = path.ts
    cub = ts[:, None] ** 3
    d = np.abs(path.qs - cub)[:, 0]
    sam = DiscretePath(ts, cub, bd)
    act_sam = discrete_action(chart, pot, sam)
    k = int(np.argmax(d))
    print(f"N={N}: gsup {path.grad_sup:.1e} sup|q-cubic| {d.max():.3e} "
          f"(at node {k}) act_min {path.action:.8f} act_sampled {act_sam:.8f} "
          f"gap_true {act_true-path.action:+.3e}", flush=True)
    if N == 400:
        third = len(d) // 3
        print(f"   sup by third: [{d[:third].max():.2e} "
              f"{d[third:2*third].max():.2e} {d[2*third:].max():.2e}]")
        print(f"   delta first 6 nodes: {np.round(path.qs[:6,0]-cub[:6,0], 9).tolist()}")
        print(f"   delta last 6 nodes:  {np.round(path.qs[-6:,0]-cub[-6:,0], 9).tolist()}")
