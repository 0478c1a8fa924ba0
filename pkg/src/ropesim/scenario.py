"""Physical problem data for a single fall.

Coordinates point along gravity. The rope is anchored at ``x = 0`` and the
climber starts at ``x = h0`` (negative when above the anchor). All values are
SI: kg, m, s, N; strains are dimensionless and angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import InvalidAngle, InvalidScenario


def capstan_mu(alpha: float, k: float) -> float:
    """Tension ratio across a carabiner, ``exp(-(pi - alpha) * k)``.

    ``alpha`` is the angle between the belayer-side rope and the vertical and
    ``k`` the rope/metal friction coefficient. The ratio is in ``(0, 1]`` for
    valid input; for huge ``k`` it underflows to 0.0, which callers treat as
    a fully locked upper segment.
    """
    if not (0.0 <= alpha < math.pi) or not math.isfinite(alpha):
        raise InvalidAngle(f"alpha must lie in [0, pi), got {alpha!r}")
    if not (k >= 0.0) or not math.isfinite(k):
        raise InvalidAngle(f"friction coefficient k must be >= 0, got {k!r}")
    return math.exp(-(math.pi - alpha) * k)


def _check_positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidScenario(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class Scenario:
    m: float
    g: float
    L: float
    delta_l: float
    h0: float

    def __post_init__(self):
        for name in ("m", "g", "L", "delta_l"):
            _check_positive(name, getattr(self, name))
        if not math.isfinite(self.h0) or abs(self.h0) > self.L:
            raise InvalidScenario(f"h0 must satisfy |h0| <= L ({self.L}), got {self.h0!r}")

    @property
    def taut_length(self) -> float:
        return self.L

    def with_values(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class CarabinerScenario:
    """Rope running from the belayer (x = 0) over a carabiner at ``x = l1`` to the climber.

    ``h0`` is measured from the carabiner, so the climber starts at anchor
    coordinate ``l1 + h0`` and hits the taut point ``l1 + l2`` with speed
    ``sqrt(2 g (l2 - h0))``. ``mu`` overrides the capstan ratio when given.
    """

    m: float
    g: float
    delta_l: float
    h0: float
    l1: float
    l2: float
    alpha: float = math.pi / 2
    k: float = 0.0
    mu_override: float | None = None

    def __post_init__(self):
        for name in ("m", "g", "delta_l", "l1", "l2"):
            _check_positive(name, getattr(self, name))
        if not math.isfinite(self.h0) or abs(self.h0) > self.l2:
            raise InvalidScenario(f"h0 must satisfy |h0| <= l2 ({self.l2}), got {self.h0!r}")
        if self.mu_override is None:
            capstan_mu(self.alpha, self.k)
        elif not (0.0 < self.mu_override <= 1.0):
            raise InvalidScenario(f"mu must lie in (0, 1], got {self.mu_override!r}")

    @property
    def mu(self) -> float:
        if self.mu_override is not None:
            return self.mu_override
        return capstan_mu(self.alpha, self.k)

    @property
    def taut_length(self) -> float:
        return self.l1 + self.l2

    def lower_segment_scenario(self) -> Scenario:
        """The single-rope problem with ``L = l2``; its bound governs the carabiner case."""
        return Scenario(m=self.m, g=self.g, L=self.l2, delta_l=self.delta_l, h0=self.h0)

    def series_scenario(self) -> Scenario:
        """Single rope of length ``l1 + l2`` with the same start point and impact speed."""
        return Scenario(m=self.m, g=self.g, L=self.l1 + self.l2, delta_l=self.delta_l,
                        h0=self.l1 + self.h0)

    def with_values(self, **changes) -> "CarabinerScenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["mu"] = self.mu
        return d
