"""Coordinate-chart differential geometry.

Everything operates on plain numpy arrays of chart coordinates.  A chart
knows its metric and the metric's coordinate derivative; Christoffel
symbols, curvature, geodesics, distance and transport all follow from
those.  Point and vector arguments broadcast over leading axes; the last
axis is always the coordinate axis.

Index conventions:

    metric(x)[..., a, b]              g_ab
    dmetric(x)[..., l, a, b]          d_l g_ab
    christoffel(x)[..., k, i, j]      Gamma^k_ij   (symmetric in i, j)
    dchristoffel(x)[..., l, k, i, j]  d_l Gamma^k_ij

The curvature endomorphism uses the convention

    R(X, Y)Z = nab_X nab_Y Z - nab_Y nab_X Z - nab_[X,Y] Z

so that on the unit sphere R(X, Y)Z = <Y,Z>X - <X,Z>Y for the round
metric.  Charts are immutable and safe to share between threads.
"""

from __future__ import annotations

import numpy as np

from ..errors import ChartDomainError, ChartEscapeError, InjectivityError, NumericalError

__all__ = ["ManifoldChart"]


class ManifoldChart:
    """Base chart: generic coordinate formulas over ``metric``/``dmetric``.

    Subclasses must set ``dim``, ``name`` and ``curvature_kind`` and
    implement ``metric``; everything else has a working (if slower)
    default.  ``curvature_kind`` is one of ``"flat"``,
    ``"constant_curvature"``, ``"lie_group_so3"``, ``"generic_numeric"``.
    """

    dim: int = 0
    name: str = ""
    curvature_kind: str = "generic_numeric"
    #: sectional curvature when the space has a constant one, else None
    space_curvature: float | None = None
    #: relative step for finite-difference fallbacks on analytic data
    fd_step: float = 1e-6

    # -- metric layer -------------------------------------------------

    def metric(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dmetric(self, x: np.ndarray) -> np.ndarray:
        """Coordinate derivative of the metric, central differences by default."""
        x = np.asarray(x, float)
        n = self.dim
        out = np.empty(x.shape[:-1] + (n, n, n))
        for l in range(n):
            h = self.fd_step * (1.0 + np.abs(x[..., l : l + 1]))
            e = np.zeros(n)
            e[l] = 1.0
            gp = self.metric(x + h * e)
            gm = self.metric(x - h * e)
            out[..., l, :, :] = (gp - gm) / (2.0 * h[..., None])
        return out

    def metric_inv(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.inv(self.metric(x))

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum("...ab,...a,...b->...", self.metric(x), u, v)

    def norm(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(x, u, u), 0.0))

    def raise_covector(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.metric_inv(x), w)

    # -- connection layer ---------------------------------------------

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        g_inv = self.metric_inv(x)
        dg = self.dmetric(x)
        # S[..., i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
        s = (
            np.einsum("...ijl->...ijl", dg)
            + np.einsum("...jil->...ijl", dg)
            - np.einsum("...lij->...ijl", dg)
        )
        return 0.5 * np.einsum("...kl,...ijl->...kij", g_inv, s)

    def gamma(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Gamma(u, v)^k, the Christoffel contraction used by every ODE here."""
        return np.einsum("...kij,...i,...j->...k", self.christoffel(x), u, v)

    def dchristoffel(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        n = self.dim
        out = np.empty(x.shape[:-1] + (n, n, n, n))
        for l in range(n):
            h = self.fd_step * (1.0 + np.abs(x[..., l : l + 1]))
            e = np.zeros(n)
            e[l] = 1.0
            cp = self.christoffel(x + h * e)
            cm = self.christoffel(x - h * e)
            out[..., l, :, :, :] = (cp - cm) / (2.0 * h[..., None, None])
        return out

    # -- curvature layer ----------------------------------------------

    def curvature(
        self, x: np.ndarray, X: np.ndarray, Y: np.ndarray, Z: np.ndarray
    ) -> np.ndarray:
        """R(X, Y)Z at x.  Dispatches on ``curvature_kind``."""
        kind = self.curvature_kind
        if kind == "flat":
            return np.zeros(np.broadcast(X, Y, Z).shape)
        if kind == "constant_curvature":
            k = self.space_curvature
            return k * (
                self.inner(x, Y, Z)[..., None] * X
                - self.inner(x, X, Z)[..., None] * Y
            )
        return self.curvature_from_christoffel(x, X, Y, Z)

    def curvature_from_christoffel(
        self, x: np.ndarray, X: np.ndarray, Y: np.ndarray, Z: np.ndarray
    ) -> np.ndarray:
        """R(X, Y)Z from the coordinate formula.

        R^l_kij = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik.
        Works on every chart; the kind-specific paths are cross-checked
        against this in the test suite.
        """
        dG = self.dchristoffel(x)
        t1 = np.einsum("...iljk,...i,...j,...k->...l", dG, X, Y, Z)
        t2 = np.einsum("...jlik,...i,...j,...k->...l", dG, X, Y, Z)
        gYZ = self.gamma(x, Y, Z)
        gXZ = self.gamma(x, X, Z)
        t3 = self.gamma(x, X, gYZ)
        t4 = self.gamma(x, Y, gXZ)
        return t1 - t2 + t3 - t4

    @property
    def locally_symmetric(self) -> bool:
        """True when nabla R vanishes identically on this chart."""
        return self.curvature_kind in ("flat", "constant_curvature", "lie_group_so3")

    # steps for the finite-difference covariant derivatives of R; the
    # second difference needs a much coarser step because the numeric
    # curvature itself carries FD noise that a 1/h^2 factor would amplify
    nabla_step: float = 1e-4
    nabla2_step: float = 1e-2

    def nabla_R(self, x, W, X, Y, Z) -> np.ndarray:
        """(nab_W R)(X, Y)Z.  Exactly zero on locally symmetric charts."""
        if self.locally_symmetric:
            return np.zeros(np.broadcast(X, Y, Z).shape)
        return self._nabla_R_fd(x, W, X, Y, Z, self.nabla_step, order=1)

    def nabla2_R(self, x, W, X, Y, Z) -> np.ndarray:
        """(nab^2_{W,W} R)(X, Y)Z along the geodesic through x with speed W."""
        if self.locally_symmetric:
            return np.zeros(np.broadcast(X, Y, Z).shape)
        return self._nabla_R_fd(x, W, X, Y, Z, self.nabla2_step, order=2)

    def _nabla_R_fd(self, x, W, X, Y, Z, step, order):
        x = np.asarray(x, float)
        if x.ndim != 1:
            raise ValueError("nabla_R expects a single chart point")
        W = np.asarray(W, float)
        if W.ndim > 1:
            args = [np.asarray(a, float) for a in (X, Y, Z)]
            if order == 1 and all(a.ndim == 1 for a in args):
                # first derivative is tensorial in the direction: contract
                # a basis evaluation instead of differencing per row
                D = np.stack(
                    [self._nabla_R_fd(x, e, *args, step, order) for e in np.eye(x.size)]
                )
                return np.einsum("...k,kl->...l", W, D)
            rows = W.reshape(-1, x.size)
            spread = [np.broadcast_to(a, W.shape).reshape(-1, x.size) for a in args]
            out = np.stack(
                [
                    self._nabla_R_fd(x, rows[i], *(s[i] for s in spread), step, order)
                    for i in range(rows.shape[0])
                ]
            )
            return out.reshape(W.shape)
        h = step * (1.0 + float(np.linalg.norm(x)))
        if h < 1e-12:
            raise NumericalError("covariant-derivative step underflow")
        wn = float(self.norm(x, W))
        if wn == 0.0:
            return np.zeros_like(np.asarray(X, float))
        # geodesic through x with velocity W, sampled at +-h in parameter
        sub = 8
        qs_p, vs_p = _geodesic_path(self, x, np.asarray(W, float), h, sub)
        qs_m, vs_m = _geodesic_path(self, x, -np.asarray(W, float), h, sub)
        ds = h / sub
        args = [np.asarray(a, float) for a in (X, Y, Z)]
        moved_p = [_transport_line(self, qs_p, vs_p, a, ds) for a in args]
        moved_m = [_transport_line(self, qs_m, vs_m, a, ds) for a in args]
        Rp = self.curvature(qs_p[-1], *moved_p)
        Rm = self.curvature(qs_m[-1], *moved_m)
        back_p = _transport_line(self, qs_p[::-1], -vs_p[::-1], Rp, ds)
        back_m = _transport_line(self, qs_m[::-1], -vs_m[::-1], Rm, ds)
        if order == 1:
            return (back_p - back_m) / (2.0 * h)
        R0 = self.curvature(x, *args)
        return (back_p - 2.0 * R0 + back_m) / h**2

    # -- geodesic layer -----------------------------------------------

    def exp(self, x: np.ndarray, v: np.ndarray, steps: int | None = None) -> np.ndarray:
        """Endpoint of the geodesic from x with initial velocity v.

        Integrates the geodesic equation with fixed-step classical RK4;
        broadcasts over leading axes.  Raises ChartEscapeError if the
        geodesic leaves the chart domain.
        """
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        x, v = np.broadcast_arrays(x, v)
        if steps is None:
            speed = float(np.max(self.norm(x, v))) if x.size else 0.0
            steps = min(512, max(16, int(48.0 * speed) + 1))
        h = 1.0 / steps
        q = x.astype(float).copy()
        w = v.astype(float).copy()
        for k in range(steps):
            q, w = _rk4_geodesic_step(self, q, w, h)
        if not np.all(self.contains(q)):
            raise ChartEscapeError("geodesic left the chart domain", 1.0)
        return q

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Initial velocity of the geodesic from x reaching y at time 1.

        Generic implementation: Newton shooting on exp with an FD
        Jacobian.  Charts with a closed form override this.
        """
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if x.ndim != 1 or y.ndim != 1:
            x, y = np.broadcast_arrays(x, y)
            return np.stack(
                [self.log(xi, yi) for xi, yi in zip(x.reshape(-1, self.dim), y.reshape(-1, self.dim))]
            ).reshape(x.shape)
        v = y - x
        scale = 1.0 + float(np.linalg.norm(y))
        for _ in range(50):
            r = self.exp(x, v) - y
            if float(np.linalg.norm(r)) <= 1e-10 * scale:
                return v
            J = np.empty((self.dim, self.dim))
            for j in range(self.dim):
                e = np.zeros(self.dim)
                e[j] = 1e-6 * (1.0 + abs(v[j]))
                J[:, j] = (self.exp(x, v + e) - self.exp(x, v - e)) / (2.0 * e[j])
            try:
                dv = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError as exc:
                raise InjectivityError("log-map shooting became singular") from exc
            t = 1.0
            rn = float(np.linalg.norm(r))
            for _ in range(20):
                if float(np.linalg.norm(self.exp(x, v + t * dv) - y)) < rn:
                    break
                t *= 0.5
            v = v + t * dv
        raise InjectivityError("log-map shooting did not converge")

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.norm(x, self.log(x, y))

    # -- domain layer -------------------------------------------------

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        return np.all(np.isfinite(x), axis=-1)

    def check_point(self, x: np.ndarray, what: str = "point") -> None:
        if not np.all(self.contains(x)):
            raise ChartDomainError(f"{what} outside the {self.name} chart domain")

    def __repr__(self):  # pragma: no cover
        return f"<{type(self).__name__} {self.name!r}>"


def _rk4_geodesic_step(chart, q, w, h):
    def acc(qq, ww):
        return -chart.gamma(qq, ww, ww)

    k1q, k1w = w, acc(q, w)
    k2q, k2w = w + 0.5 * h * k1w, acc(q + 0.5 * h * k1q, w + 0.5 * h * k1w)
    k3q, k3w = w + 0.5 * h * k2w, acc(q + 0.5 * h * k2q, w + 0.5 * h * k2w)
    k4q, k4w = w + h * k3w, acc(q + h * k3q, w + h * k3w)
    qn = q + (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
    wn = w + (h / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w)
    return qn, wn


def _geodesic_path(chart, x, v, length, steps):
    """Sample the geodesic s -> exp(x, s v) at s = k*length/steps."""
    h = length / steps
    qs = np.empty((steps + 1, x.size))
    vs = np.empty_like(qs)
    q, w = x.copy(), v.copy()
    qs[0], vs[0] = q, w
    for k in range(steps):
        q, w = _rk4_geodesic_step(chart, q, w, h)
        qs[k + 1], vs[k + 1] = q, w
    return qs, vs


def _transport_line(chart, qs, vs, X0, ds):
    """Parallel transport X0 along a sampled curve with parameter step ds.

    qs, vs are position/velocity samples at uniform parameter spacing ds;
    midpoint data for the RK4 stages is taken as the segment average,
    which is enough at the short lengths this is used for.
    """
    X = np.asarray(X0, float).copy()
    for k in range(len(qs) - 1):
        qa, qb = qs[k], qs[k + 1]
        va, vb = vs[k], vs[k + 1]
        qm, vm = 0.5 * (qa + qb), 0.5 * (va + vb)
        k1 = -chart.gamma(qa, va, X)
        k2 = -chart.gamma(qm, vm, X + 0.5 * ds * k1)
        k3 = -chart.gamma(qm, vm, X + 0.5 * ds * k2)
        k4 = -chart.gamma(qb, vb, X + ds * k3)
        X = X + (ds / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return X
