import numpy as np

from riemplan.geometry import parse_manifold
from riemplan.potentials import ZeroPotential
from riemplan.bvp import BoundaryData
from riemplan.oracle import DiscretePath, discrete_action, discrete_gradient

chart = parse_manifold("euclidean:1")
pot = ZeroPotential(chart)
bd = BoundaryData(q_a=np.array([0.0]), v_a=np.array([0.0]),
                  q_b=np.array([1.0]), v_b=np.array([3.0]), a=0.0, b=1.0)

for N in (100, 400):
    ts = np.linspace(0.0, 1.0, N + 1)
    cub = ts[:, None] ** 3
    sam = DiscretePath(ts, cub, bd)
    eps = discrete_gradient(chart, pot, sam)[:, 0]
    nz = np.flatnonzero(np.abs(eps) > 1e-10)
    print(f"N={N}: residual support (free idx): {nz.tolist()}")
    print(f"   values: {['%.4e' % eps[i] for i in nz]}")

    # exact quadratic solve: H = exact FD Hessian of the linear gradient
    dim = len(eps)
    H = np.empty((dim, dim))
    base = sam.free_block().ravel()
    def gr(u):
        return discrete_gradient(chart, pot,
                                 DiscretePath.from_free(bd, N, u))[:, 0]
    e = 1e-4
    for i in range(dim):
        up = base.copy(); up[i] += e
        um = base.copy(); um[i] -= e
        H[:, i] = (gr(up) - gr(um)) / (2 * e)
    H = 0.5 * (H + H.T)
    delta = np.linalg.solve(H, -eps)
    drop = 0.5 * eps @ np.linalg.solve(H, eps)
    print(f"   predicted drop = {drop:.4e}  (act_sampled - act_min)")
    act_sam = discrete_action(chart, pot, sam)
    qmin = DiscretePath.from_free(bd, N, base + delta)
    print(f"   act(sampled) {act_sam:.8f} act(sampled+delta) "
          f"{discrete_action(chart, pot, qmin):.8f} gap_true "
          f"{6.0 - discrete_action(chart, pot, qmin):+.4e}")
    # contribution split: zero out end residuals separately
    for side, mask_idx in (("left", nz[nz < dim // 2]), ("right", nz[nz >= dim // 2])):
        em = np.zeros_like(eps); em[mask_idx] = eps[mask_idx]
        print(f"   drop from {side} residuals alone: "
              f"{0.5 * em @ np.linalg.solve(H, em):.4e}")
