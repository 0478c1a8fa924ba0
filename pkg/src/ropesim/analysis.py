"""Closed-form quantities for the ideal rope and fall reports built from simulations."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .constitutive import EnergyDensity, energy_of_strain
from .errors import NoArrest, OutsideIdealWindow
from .scenario import CarabinerScenario, Scenario


def initial_velocity(s: Scenario) -> float:
    """Speed when the rope first goes taut after a free fall of ``L - h0``."""
    return math.sqrt(2.0 * s.g * (s.L - s.h0))


def lower_bound_b0(s: Scenario) -> float:
    """Smallest possible peak tension for a fall arrested within ``delta_l`` of stretch."""
    return s.m * s.g * (s.L + s.delta_l - s.h0) / s.delta_l


def ideal_acceleration(s: Scenario) -> float:
    """Constant (negative) acceleration of the climber on the ideal rope."""
    return s.g * (s.h0 - s.L) / s.delta_l


def ideal_arrest_time(s: Scenario) -> float:
    """Time from taut to arrest on the ideal rope; infinite when the climber starts at rest."""
    v0 = initial_velocity(s)
    if v0 == 0.0:
        return math.inf
    return 2.0 * s.delta_l / v0


def closed_form_trajectory(s: Scenario, t: float, x: float | None = None) -> tuple[float, float]:
    """Position and velocity on the ideal rope during the first stretch.

    With ``x`` given, returns the homogeneous field ``y(x, t) = (x / L) y(L, t)``
    and the matching velocity of that rope point.
    """
    T = ideal_arrest_time(s)
    if t < 0 or t > T * (1 + 1e-12):
        raise OutsideIdealWindow(f"t = {t} lies outside the stretch window [0, {T}]")
    a0 = ideal_acceleration(s)
    v0 = initial_velocity(s)
    y = 0.5 * a0 * t * t + v0 * t + s.L
    v = a0 * t + v0
    if x is None:
        return y, v
    return x / s.L * y, x / s.L * v


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _quadrature(L: float, panels: int):
    edges = np.linspace(0.0, L, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return x, w


def jensen_gap(W: EnergyDensity, strain_profile: Callable, s: Scenario, panels: int = 512) -> float:
    """Elastic energy of a strain profile minus that of the uniform profile with the same stretch.

    Uses composite Gauss-Legendre quadrature on ``[0, L]``. The weights are
    positive, so the discrete gap is non-negative for every convex ``W`` (up to
    rounding) and exactly zero for constant profiles.
    """
    x, w = _quadrature(s.L, panels)
    try:
        eps = np.asarray(strain_profile(x), dtype=float)
        if eps.shape != x.shape:
            raise ValueError
    except (TypeError, ValueError):
        eps = np.array([float(strain_profile(xi)) for xi in x])
    total = float(np.dot(w, energy_of_strain(W, eps)))
    mean = float(np.dot(w, eps)) / s.L
    return total - s.L * float(energy_of_strain(W, mean))


@dataclass
class FallReport:
    peak_tension: float
    bound_b0: float
    optimality_gap: float
    max_elongation: float
    arrest_time_t: float
    rest_position: float | None
    energy_dissipated: float
    upper_segment_max_strain: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["upper_segment_max_strain"] is None:
            del d["upper_segment_max_strain"]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def bound_for(s) -> float:
    if isinstance(s, CarabinerScenario):
        s = s.lower_segment_scenario()
    return lower_bound_b0(s)


def make_report(traj, s) -> FallReport:
    """Summarise a simulated fall.

    The arrest time is the first velocity zero-crossing while the rope is
    taut; trajectories without one raise ``NoArrest``.
    """
    if traj is None or len(traj) == 0:
        raise NoArrest("empty trajectory")
    taut = s.taut_length
    stretching = (traj.y >= taut) & (traj.v >= 0)
    arrest = None
    for i in np.flatnonzero(traj.events == "turn"):
        if i > 0 and stretching[i - 1] and traj.y[i] >= taut:
            arrest = float(traj.t[i])
            break
    if arrest is None:
        rests = np.flatnonzero(traj.events == "rest")
        if len(rests) and traj.y[rests[0]] >= taut:
            arrest = float(traj.t[rests[0]])
    if arrest is None:
        raise NoArrest("velocity never reached zero while the rope was taut")

    b0 = bound_for(s)
    peak = float(np.max(traj.tension))
    upper = None
    if traj.strain_upper is not None:
        upper = float(np.max(traj.strain_upper))
    return FallReport(
        peak_tension=peak,
        bound_b0=b0,
        optimality_gap=peak / b0 - 1.0,
        max_elongation=float(np.max(traj.y)) - taut,
        arrest_time_t=arrest,
        rest_position=traj.rest_position,
        energy_dissipated=float(traj.e_diss[-1]),
        upper_segment_max_strain=upper,
    )
