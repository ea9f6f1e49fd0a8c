"""Shared scenario panel.

Every test module draws from the same small set of boundary-value
scenarios; solving one costs seconds, so solutions (and the optimality
reports built on them) are cached for the whole session.  Request a
scenario through the ``panel`` fixture: ``panel("sphere_obstacle")``.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from riemplan import (
    BoundaryData,
    GaussianObstacle,
    QuadraticWell,
    ZeroPotential,
    parse_manifold,
    solve_bvp,
    verdict,
)

# name -> (manifold, potential factory, q_a, v_a, q_b, v_b, interval)
SCENARIOS = {
    "flat": (
        "euclidean:2",
        ZeroPotential,
        (0.0, 0.0), (0.3, -0.2), (1.0, 0.5), (-0.1, 0.4), (0.0, 1.0),
    ),
    "flat_obstacle": (
        "euclidean:2",
        lambda c: GaussianObstacle(c, (0.5, 0.25), amplitude=1.0, width=0.4),
        (0.0, 0.0), (0.3, -0.2), (1.0, 0.5), (-0.1, 0.4), (0.0, 1.0),
    ),
    "sphere": (
        "sphere2",
        ZeroPotential,
        (-0.8, 0.1), (0.5, 0.2), (0.9, 0.4), (0.1, -0.3), (0.0, 2.0),
    ),
    "sphere_obstacle": (
        "sphere2",
        lambda c: GaussianObstacle(c, (0.6, -0.3), amplitude=1.0, width=0.7),
        (-0.8, 0.1), (0.5, 0.2), (0.9, 0.4), (0.1, -0.3), (0.0, 2.0),
    ),
    "hyperbolic_obstacle": (
        "hyperbolic2",
        lambda c: GaussianObstacle(c, (0.1, 0.0), amplitude=0.8, width=0.5),
        (-0.4, 0.1), (0.25, 0.1), (0.45, -0.15), (0.1, 0.2), (0.0, 1.5),
    ),
    "rotation": (
        "so3",
        ZeroPotential,
        (0.1, -0.2, 0.15), (0.4, 0.1, -0.3), (0.9, 0.3, -0.4), (0.1, -0.2, 0.2),
        (0.0, 1.5),
    ),
    # rest state on top of a bump: V''(0) < 0, so long windows lose optimality
    "well_top": (
        "euclidean:1",
        lambda c: GaussianObstacle(c, (0.0,), amplitude=1.0, width=1.0),
        (0.0,), (0.0,), (0.0,), (0.0,), (0.0, 6.0),
    ),
    "well_top_long": (
        "euclidean:1",
        lambda c: GaussianObstacle(c, (0.0,), amplitude=1.0, width=1.0),
        (0.0,), (0.0,), (0.0,), (0.0,), (0.0, 12.0),
    ),
    # V'' = +1 everywhere: optimality never degrades, however long the window
    "well": (
        "euclidean:1",
        lambda c: QuadraticWell(c, center=(0.0,), stiffness=1.0),
        (0.0,), (0.5,), (0.2,), (-0.1,), (0.0, 6.0),
    ),
}

PANEL = [n for n in SCENARIOS if n != "well_top_long"]


def build_scenario(name):
    man, pot, q_a, v_a, q_b, v_b, (a, b) = SCENARIOS[name]
    chart = parse_manifold(man)
    potential = pot(chart)
    boundary = BoundaryData(
        np.asarray(q_a, float), np.asarray(v_a, float),
        np.asarray(q_b, float), np.asarray(v_b, float), a=a, b=b,
    )
    result = solve_bvp(chart, potential, boundary)
    return SimpleNamespace(
        name=name,
        chart=chart,
        potential=potential,
        boundary=boundary,
        result=result,
        trajectory=result.trajectory,
    )


class Panel:
    def __init__(self):
        self._built = {}
        self._verdicts = {}

    def __call__(self, name):
        if name not in self._built:
            self._built[name] = build_scenario(name)
        return self._built[name]

    def verdict(self, name):
        if name not in self._verdicts:
            s = self(name)
            self._verdicts[name] = verdict(s.chart, s.potential, s.trajectory)
        return self._verdicts[name]

    def candidates(self):
        return [n for n in PANEL if self.verdict(n).classification.startswith("candidate")]


@pytest.fixture(scope="session")
def panel():
    return Panel()
