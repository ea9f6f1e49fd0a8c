"""Parallel transport along sampled curves."""

from __future__ import annotations

import numpy as np

__all__ = ["parallel_transport", "transport_frame"]


def _hermite_mid(qa, va, qb, vb, h):
    """Value and derivative of the cubic Hermite interpolant at the midpoint."""
    qm = 0.5 * (qa + qb) + 0.125 * h * (va - vb)
    vm = 1.5 * (qb - qa) / h - 0.25 * (va + vb)
    return qm, vm


def parallel_transport(chart, ts, qs, vs, X0, return_all: bool = False):
    """Transport X0 along the sampled curve (ts, qs, vs).

    ts must be strictly monotone (either direction); qs are positions,
    vs coordinate velocities dq/dt at the samples.  X0 may carry leading
    batch axes.  One classical RK4 step per sample interval, with cubic
    Hermite midpoint reconstruction of the curve.
    """
    ts = np.asarray(ts, float)
    qs = np.asarray(qs, float)
    vs = np.asarray(vs, float)
    X = np.array(X0, float, copy=True)
    out = [X.copy()] if return_all else None
    for k in range(len(ts) - 1):
        h = ts[k + 1] - ts[k]
        qa, qb = qs[k], qs[k + 1]
        va, vb = vs[k], vs[k + 1]
        qm, vm = _hermite_mid(qa, va, qb, vb, h)
        k1 = -chart.gamma(qa, va, X)
        k2 = -chart.gamma(qm, vm, X + 0.5 * h * k1)
        k3 = -chart.gamma(qm, vm, X + 0.5 * h * k2)
        k4 = -chart.gamma(qb, vb, X + h * k3)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if return_all:
            out.append(X.copy())
    if return_all:
        return np.stack(out)
    return X


def transport_frame(chart, ts, qs, vs):
    """g-orthonormal parallel frame along the curve.

    Returns an array of shape (len(ts), n, n) whose [s, i, :] entry is
    the i-th frame vector at time ts[s].  The frame is orthonormalized
    once at the start and stays orthonormal up to integrator error
    because parallel transport is a metric isometry.
    """
    qs = np.asarray(qs, float)
    n = qs.shape[-1]
    g0 = chart.metric(qs[0])
    # Gram-Schmidt of the coordinate basis in the g0 inner product
    basis = np.eye(n)
    frame0 = []
    for i in range(n):
        w = basis[i].astype(float)
        for e in frame0:
            w = w - (e @ g0 @ w) * e
        w = w / np.sqrt(w @ g0 @ w)
        frame0.append(w)
    frame0 = np.stack(frame0)
    return parallel_transport(chart, ts, qs, vs, frame0, return_all=True)
