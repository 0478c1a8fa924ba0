"""One-dimensional constitutive laws for ropes.

A rope law is a monotone piecewise-linear tension-strain curve. Its energy
density is the exact (piecewise-quadratic) integral of that curve. Compression
is free: the tension is zero for every non-positive strain.

The module also covers the lower convex envelope of a sampled microscopic
energy (phase separation produces a tension plateau on every non-convex
stretch) and a two-branch hysteresis law.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BranchOrderViolation, InvalidCurve, InvalidSamples, InvalidScenario, TensionUnreachable

DEFAULT_RAMP_WIDTH = 1e-4


@dataclass(frozen=True)
class TensionCurve:
    """Monotone piecewise-linear tension (N) as a function of strain.

    Knots must start at ``(0, 0)`` with strictly increasing strains and
    non-decreasing tensions. Beyond the last knot the final segment's slope is
    continued; below zero strain the tension is zero.
    """

    strains: tuple[float, ...]
    tensions: tuple[float, ...]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.strains)
        ten = tuple(float(b) for b in self.tensions)
        object.__setattr__(self, "strains", eps)
        object.__setattr__(self, "tensions", ten)
        if len(eps) != len(ten):
            raise InvalidCurve("strains and tensions must have the same length")
        if len(eps) < 2:
            raise InvalidCurve("a tension curve needs at least 2 knots")
        if not all(math.isfinite(v) for v in eps + ten):
            raise InvalidCurve("knots must be finite")
        if eps[0] != 0.0 or ten[0] != 0.0:
            raise InvalidCurve(f"first knot must be (0, 0), got ({eps[0]}, {ten[0]})")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise InvalidCurve("strains must be strictly increasing")
        if any(b < a for a, b in zip(ten, ten[1:])):
            raise InvalidCurve("tensions must be non-decreasing in strain")

    @classmethod
    def from_knots(cls, knots: Sequence[tuple[float, float]], name: str = "custom") -> "TensionCurve":
        eps, ten = zip(*knots)
        return cls(tuple(eps), tuple(ten), name=name)

    @property
    def final_slope(self) -> float:
        return (self.tensions[-1] - self.tensions[-2]) / (self.strains[-1] - self.strains[-2])

    @property
    def sup_tension(self) -> float:
        """Largest tension the law can carry (infinite unless it ends on a plateau)."""
        return math.inf if self.final_slope > 0 else self.tensions[-1]

    def __call__(self, strain: float) -> float:
        return tension(self, strain)

    def evaluate(self, strain) -> np.ndarray:
        """Vectorised tension."""
        e = np.asarray(strain, dtype=float)
        out = np.interp(e, self.strains, self.tensions)
        beyond = e > self.strains[-1]
        if np.any(beyond):
            out = np.where(beyond, self.tensions[-1] + self.final_slope * (e - self.strains[-1]), out)
        return out

    def scaled(self, factor: float) -> "TensionCurve":
        return TensionCurve(self.strains, tuple(factor * b for b in self.tensions), name=self.name)

    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.strains, self.tensions))


def tension(law: TensionCurve, strain: float) -> float:
    """Tension carried at ``strain``; zero in compression."""
    eps = law.strains
    if strain <= 0.0:
        return 0.0
    i = bisect_right(eps, strain)
    ten = law.tensions
    if i >= len(eps):
        return ten[-1] + law.final_slope * (strain - eps[-1])
    e0 = eps[i - 1]
    return ten[i - 1] + (ten[i] - ten[i - 1]) * (strain - e0) / (eps[i] - e0)


def strain_interval_of_tension(law: TensionCurve, b: float) -> tuple[float, float]:
    """All non-negative strains at which the law carries exactly ``b``.

    Returns ``(lo, hi)``; the interval is degenerate off plateaus and ``hi`` is
    infinite on a terminal plateau.
    """
    if not b >= 0.0:
        raise ValueError(f"tension must be non-negative, got {b!r}")
    if b > law.sup_tension:
        raise TensionUnreachable(f"tension {b} exceeds the law's maximum {law.sup_tension}")
    eps, ten = law.strains, law.tensions
    n = len(eps)
    slope = law.final_slope

    j = bisect_left(ten, b)
    if j == 0:
        lo = 0.0
    elif j == n:
        lo = eps[-1] + (b - ten[-1]) / slope
    else:
        lo = eps[j - 1] + (b - ten[j - 1]) * (eps[j] - eps[j - 1]) / (ten[j] - ten[j - 1])

    j = bisect_right(ten, b) - 1
    if j == n - 1:
        hi = math.inf if slope == 0.0 else eps[-1] + (b - ten[-1]) / slope
    else:
        hi = eps[j] + (b - ten[j]) * (eps[j + 1] - eps[j]) / (ten[j + 1] - ten[j])
    return lo, max(lo, hi)


def strain_of_tension(law: TensionCurve, b: float) -> float:
    """Smallest non-negative strain at which the law reaches tension ``b``.

    On a plateau this is the plateau's left end, so any tension strictly below
    a plateau that starts at zero strain maps to (almost) zero strain.
    """
    return strain_interval_of_tension(law, b)[0]


# --------------------------------------------------------------------------
# energy densities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyDensity:
    """Piecewise-quadratic energy density W(strain), in N (J per metre of rope).

    On interval ``i`` the tension ``dW/d(strain)`` varies linearly from
    ``left_tension[i]`` to ``right_tension[i]``. Left of the first knot W is
    extended with constant tension ``left_tension[0]``; right of the last knot
    the final tension slope is continued.
    """

    strains: np.ndarray
    values: np.ndarray
    left_tension: np.ndarray
    right_tension: np.ndarray

    @classmethod
    def from_tension_curve(cls, law: TensionCurve) -> "EnergyDensity":
        eps = np.array(law.strains)
        ten = np.array(law.tensions)
        w = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(eps) * (ten[:-1] + ten[1:]))])
        return cls(eps, w, ten[:-1].copy(), ten[1:].copy())

    @classmethod
    def from_samples(cls, strains, values) -> "EnergyDensity":
        """Piecewise-linear interpolant of sampled energies (tension constant per interval)."""
        eps = np.asarray(strains, dtype=float)
        w = np.asarray(values, dtype=float)
        chord = np.diff(w) / np.diff(eps)
        return cls(eps, w, chord, chord.copy())

    def __call__(self, strain):
        return energy_of_strain(self, strain)

    def tension(self, strain):
        """Right derivative of W."""
        e = np.asarray(strain, dtype=float)
        eps = self.strains
        i = np.clip(np.searchsorted(eps, e, side="right") - 1, 0, len(eps) - 2)
        width = eps[i + 1] - eps[i]
        s = e - eps[i]
        rate = (self.right_tension[i] - self.left_tension[i]) / width
        out = self.left_tension[i] + rate * s
        out = np.where(e < eps[0], self.left_tension[0], out)
        return out if out.ndim else float(out)


def energy_density(law: TensionCurve) -> EnergyDensity:
    return EnergyDensity.from_tension_curve(law)


def energy_of_strain(W: EnergyDensity, strain):
    """Evaluate the energy density exactly (scalar or array input)."""
    e = np.asarray(strain, dtype=float)
    eps = W.strains
    i = np.clip(np.searchsorted(eps, e, side="right") - 1, 0, len(eps) - 2)
    width = eps[i + 1] - eps[i]
    s = e - eps[i]
    tl = W.left_tension[i]
    rate = (W.right_tension[i] - tl) / width
    out = W.values[i] + tl * s + 0.5 * rate * s * s
    out = np.where(e == eps[-1], W.values[-1], out)
    out = np.where(e < eps[0], W.values[0] + W.left_tension[0] * (e - eps[0]), out)
    return out if out.ndim else float(out)


class PropertyReport(NamedTuple):
    nonnegative: bool
    zero_at_origin: bool
    convex: bool

    @property
    def all_pass(self) -> bool:
        return self.nonnegative and self.zero_at_origin and self.convex


def check_properties(W: EnergyDensity, rtol: float = 1e-12) -> PropertyReport:
    """Check non-negativity, W(0) = 0 and convexity.

    Non-negativity is checked over the knot range, including interior minima
    of the quadratic pieces.
    """
    scale = max(float(np.max(np.abs(W.values))), float(np.max(np.abs(W.right_tension))) * float(np.ptp(W.strains)), 1e-300)
    tol = rtol * scale

    tl, tr = W.left_tension, W.right_tension
    width = np.diff(W.strains)
    lows = [float(np.min(W.values))]
    crossing = (tl < 0) & (tr > 0)
    if np.any(crossing):
        s_star = -tl[crossing] * width[crossing] / (tr[crossing] - tl[crossing])
        lows.append(float(np.min(energy_of_strain(W, W.strains[:-1][crossing] + s_star))))
    nonneg = min(lows) >= -tol

    zero = abs(energy_of_strain(W, 0.0)) <= tol

    ttol = rtol * max(float(np.max(np.abs(tr))), float(np.max(np.abs(tl))), 1e-300)
    convex = bool(np.all(tl <= tr + ttol) and np.all(tr[:-1] <= tl[1:] + ttol))
    return PropertyReport(bool(nonneg), bool(zero), convex)


# --------------------------------------------------------------------------
# law constructors
# --------------------------------------------------------------------------

def plateau_law(level: float, ramp_width: float = DEFAULT_RAMP_WIDTH, end_strain: float = 1.0,
                name: str = "plateau") -> TensionCurve:
    """Ramp from zero to ``level`` over ``[0, ramp_width]``, then constant."""
    if not ramp_width > 0:
        raise InvalidCurve(f"ramp width must be positive, got {ramp_width!r}")
    if not level >= 0:
        raise InvalidCurve(f"plateau level must be non-negative, got {level!r}")
    end = max(end_strain, 2.0 * ramp_width)
    return TensionCurve((0.0, ramp_width, end), (0.0, level, level), name=name)


def ideal_plateau_law(scenario, ramp_width: float = DEFAULT_RAMP_WIDTH) -> TensionCurve:
    """The peak-force-optimal law: constant tension mg(L + dL - h0)/dL for any stretch.

    The step at zero strain is smoothed into a linear ramp of width
    ``ramp_width``.
    """
    m, g, L, dl, h0 = scenario.m, scenario.g, scenario.L, scenario.delta_l, scenario.h0
    if not (m > 0 and g > 0 and L > 0 and dl > 0 and abs(h0) <= L):
        raise InvalidScenario("ideal law needs m, g, L, delta_l > 0 and |h0| <= L")
    b0 = m * g * (L + dl - h0) / dl
    return plateau_law(b0, ramp_width, end_strain=max(1.0, 2.0 * dl / L), name="ideal")


def linear_law(modulus: float, max_strain: float = 1.0) -> TensionCurve:
    if not modulus >= 0:
        raise InvalidCurve(f"modulus must be non-negative, got {modulus!r}")
    return TensionCurve((0.0, max_strain), (0.0, modulus * max_strain), name="linear")


# --------------------------------------------------------------------------
# convexification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MicroEnergySamples:
    strains: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.strains, dtype=float)
        w = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "strains", eps)
        object.__setattr__(self, "values", w)
        if eps.ndim != 1 or eps.shape != w.shape:
            raise InvalidSamples("strains and energies must be 1-D arrays of equal length")
        if len(eps) < 3:
            raise InvalidSamples("need at least 3 samples")
        if not (np.all(np.isfinite(eps)) and np.all(np.isfinite(w))):
            raise InvalidSamples("samples must be finite")
        if np.any(np.diff(eps) <= 0):
            raise InvalidSamples("strains must be strictly increasing")
        if np.any(w < 0):
            raise InvalidSamples("microscopic energies must be non-negative")


def _lower_hull(xs, ys) -> list[int]:
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
            if cross < 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def convexify(samples: MicroEnergySamples) -> EnergyDensity:
    """Lower convex envelope of the sampled energy, on the sample grid.

    Wherever the samples are not convex the envelope is the chord between the
    two touching points, i.e. the energy of a two-phase mixture; its tension
    is constant there.
    """
    if not isinstance(samples, MicroEnergySamples):
        samples = MicroEnergySamples(*samples)
    eps, w = samples.strains, samples.values
    hull = _lower_hull(eps, w)
    env = np.interp(eps, eps[hull], w[hull])
    env = np.minimum(env, w)
    env[hull] = w[hull]
    return EnergyDensity.from_samples(eps, env)


# --------------------------------------------------------------------------
# hysteresis
# --------------------------------------------------------------------------

LOADING = "loading"
UNLOADING = "unloading"
RELOADING = "reloading-interior"


@dataclass
class HysteresisLaw:
    """Loading/unloading curve pair with branch memory.

    Increasing strain follows the loading curve, decreasing strain the
    unloading curve, and every reversal is a jump at constant strain between
    the two. Strain increases below the largest strain reached so far are
    tagged ``reloading-interior``; they still follow the loading curve, so the
    energy lost by any closed strain excursion equals the area between the
    curves over it.
    """

    loading: TensionCurve
    unloading: TensionCurve
    branch: str = LOADING
    max_strain: float = 0.0
    anchor_strain: float = 0.0

    def reset(self) -> "HysteresisLaw":
        self.branch, self.max_strain, self.anchor_strain = LOADING, 0.0, 0.0
        return self

    def fresh(self) -> "HysteresisLaw":
        return HysteresisLaw(self.loading, self.unloading)

    def loop_area(self, strain: float) -> float:
        """Energy per unit length lost by the excursion 0 -> strain -> 0."""
        wl = energy_of_strain(energy_density(self.loading), strain)
        wu = energy_of_strain(energy_density(self.unloading), strain)
        return float(wl - wu)


def make_hysteresis(loading: TensionCurve, unloading: TensionCurve, rtol: float = 1e-12) -> HysteresisLaw:
    grid = sorted(set(loading.strains) | set(unloading.strains))
    tol = rtol * max(max(loading.tensions), 1.0)
    for e in grid:
        if tension(unloading, e) > tension(loading, e) + tol:
            raise BranchOrderViolation(f"unloading tension exceeds loading tension at strain {e}")
    if unloading.final_slope > loading.final_slope + rtol * max(abs(loading.final_slope), 1.0):
        raise BranchOrderViolation("unloading curve overtakes the loading curve beyond the last knot")
    return HysteresisLaw(loading, unloading)


def hysteretic_tension(law: HysteresisLaw, strain: float, direction: int) -> float:
    """Tension for a strain moving in ``direction`` (+1 stretching, -1 retracting).

    Updates the law's branch state; ``direction == 0`` keeps the current branch.
    """
    if direction > 0:
        if law.branch == UNLOADING:
            law.anchor_strain = strain
        if strain >= law.max_strain:
            law.branch = LOADING
            law.max_strain = strain
        else:
            law.branch = RELOADING
    elif direction < 0:
        if law.branch != UNLOADING:
            law.anchor_strain = strain
        law.branch = UNLOADING
    curve = law.unloading if law.branch == UNLOADING else law.loading
    return tension(curve, strain)
