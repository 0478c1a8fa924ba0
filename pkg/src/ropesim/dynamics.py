"""Time integration of a climber on a massless rope.

The rope deforms homogeneously, so the climber position ``y`` is the only
degree of freedom: ``m y'' = m g - b``. Tension is zero while the rope is
slack. The integrator is fixed-step RK4 on a uniform time grid; whenever a
step crosses a taut/slack boundary, a velocity zero, or a kink of the tension
law, the crossing is located by bisection and an extra sample is inserted
there. Between kinks the right-hand side is smooth (linear in ``y``).
"""

from __future__ import annotations

import csv
import logging
import math
from bisect import bisect_right
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import initial_velocity
from .constitutive import (
    UNLOADING,
    EnergyDensity,
    HysteresisLaw,
    TensionCurve,
    energy_density,
    energy_of_strain,
    hysteretic_tension,
    strain_interval_of_tension,
    tension,
)
from .errors import ElongationExceeded, NoEquilibrium, NoRest, StepTooLarge, TensionUnreachable
from .scenario import CarabinerScenario, Scenario, capstan_mu

log = logging.getLogger(__name__)

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "capstan_mu",
    "energy_ledger",
    "series_table",
    "simulate_carabiner_fall",
    "simulate_cycles",
    "simulate_fall",
    "solve_segment_tension",
]

TRAJECTORY_COLUMNS = ("t", "y", "v", "strain", "tension_n", "e_kin", "e_grav", "e_el", "e_diss", "event")


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``elongation_tol`` (m) is the overshoot past ``delta_l`` tolerated before
    ``ElongationExceeded``. With ``raise_on_overshoot`` off the run instead
    stops once the stretch passes ``runaway_factor * delta_l``. ``cycles``
    stops the run after that many slack transitions.
    """

    h: float = 1e-5
    event_tol: float = 1e-12
    max_time: float = 5.0
    energy_tol: float = 1e-6
    elongation_tol: float = 1e-3
    raise_on_overshoot: bool = True
    stop_at_arrest: bool = False
    cycles: int | None = None
    runaway_factor: float = 4.0
    rest_tol: float = 1e-9
    check_energy: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step h must be positive, got {self.h!r}")
        if not 0 < self.event_tol < self.h:
            raise ValueError("event tolerance must be positive and smaller than the step")
        if not self.max_time > 0:
            raise ValueError("max_time must be positive")
        if self.cycles is not None and self.cycles < 1:
            raise ValueError("cycles must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    v: np.ndarray
    strain: np.ndarray
    tension: np.ndarray
    e_kin: np.ndarray
    e_grav: np.ndarray
    e_el: np.ndarray
    e_diss: np.ndarray
    events: np.ndarray
    branch: np.ndarray
    strain_upper: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def total_energy(self) -> np.ndarray:
        return self.e_kin + self.e_grav + self.e_el + self.e_diss

    @property
    def rest_position(self) -> float | None:
        idx = np.flatnonzero(self.events == "rest")
        return float(self.y[idx[0]]) if len(idx) else None

    def event_indices(self, kind: str) -> np.ndarray:
        return np.flatnonzero(self.events == kind)

    def rows(self):
        cols = (self.t, self.y, self.v, self.strain, self.tension, self.e_kin, self.e_grav, self.e_el, self.e_diss)
        for i in range(len(self.t)):
            yield [repr(float(c[i])) for c in cols] + [str(self.events[i])]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_COLUMNS)
            w.writerows(self.rows())


# --------------------------------------------------------------------------
# rope models: tension as a piecewise-linear function of climber position
# --------------------------------------------------------------------------

class _PL:
    """Piecewise-linear function; constant left of the first knot, final slope continued on the right."""

    __slots__ = ("xs", "ys", "slopes", "end_slope")

    def __init__(self, xs, ys):
        self.xs = [float(x) for x in xs]
        self.ys = [float(y) for y in ys]
        self.slopes = [(self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]) for i in range(len(self.xs) - 1)]
        self.end_slope = self.slopes[-1]

    def __call__(self, x):
        xs = self.xs
        i = bisect_right(xs, x)
        if i == 0:
            return self.ys[0]
        if i == len(xs):
            return self.ys[-1] + self.end_slope * (x - xs[-1])
        return self.ys[i - 1] + self.slopes[i - 1] * (x - xs[i - 1])

    def array(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, self.ys)
        return np.where(x > self.xs[-1], self.ys[-1] + self.end_slope * (x - self.xs[-1]), out)


def _rope_pl(law: TensionCurve, length: float, offset: float = 0.0) -> _PL:
    return _PL([offset + length * (1.0 + e) for e in law.strains], law.tensions)


class _SingleRope:
    hysteretic = False

    def __init__(self, law: TensionCurve, length: float):
        self.law, self.L, self.taut = law, length, length
        pl = _rope_pl(law, length)
        self.pl = {1: pl, -1: pl}
        self.W = energy_density(law)

    def strains(self, y):
        return y / self.L - 1.0, None

    def elastic_energy(self, y, branch):
        eps = y / self.L - 1.0
        return self.L * energy_of_strain(self.W, eps), np.zeros_like(eps)


class _HystereticRope:
    hysteretic = True

    def __init__(self, law: HysteresisLaw, length: float):
        self.law, self.L, self.taut = law, length, length
        self.pl = {1: _rope_pl(law.loading, length), -1: _rope_pl(law.unloading, length)}
        self.W_load = energy_density(law.loading)
        self.W_unload = energy_density(law.unloading)

    def strains(self, y):
        return y / self.L - 1.0, None

    def elastic_energy(self, y, branch):
        # stored energy follows the loading curve; the part not returned on
        # unloading is booked as dissipated while the strain decreases
        eps = y / self.L - 1.0
        e_el = self.L * energy_of_strain(self.W_load, eps)
        gap = self.L * (e_el / self.L - energy_of_strain(self.W_unload, eps))
        step = np.where(branch[:-1] < 0, gap[:-1] - gap[1:], 0.0)
        return e_el, np.concatenate([[0.0], np.cumsum(step)])


class _CarabinerRope:
    hysteretic = False

    def __init__(self, law: TensionCurve, mu: float, l1: float, l2: float):
        self.law, self.mu, self.l1, self.l2 = law, mu, l1, l2
        self.taut = l1 + l2
        d, b, eu, el = series_table(law, mu, l1, l2)
        self.pl = {1: _PL(self.taut + d, b)}
        self.pl[-1] = self.pl[1]
        self._eu = _PL(d, eu)
        self._el = _PL(d, el)
        self.W = energy_density(law)
        # work done on the rope as a function of total stretch
        self.U = EnergyDensity(np.asarray(d), np.concatenate([[0.0], np.cumsum(0.5 * np.diff(d) * (b[:-1] + b[1:]))]),
                               np.asarray(b[:-1]), np.asarray(b[1:]))

    def strains(self, y):
        d = np.asarray(y) - self.taut
        eu = np.where(d > 0, self._eu.array(d), 0.0)
        el = np.where(d > 0, self._el.array(d), d / self.l2)
        return el, eu

    def elastic_energy(self, y, branch):
        el, eu = self.strains(y)
        e_el = self.l1 * energy_of_strain(self.W, eu) + self.l2 * energy_of_strain(self.W, el)
        d = np.asarray(y) - self.taut
        work = energy_of_strain(self.U, np.maximum(d, 0.0))
        # with mu < 1 the climber does more work than the segments store; the
        # difference is carabiner friction, held as a non-negative state term
        return e_el, np.maximum(work - e_el, 0.0)


# --------------------------------------------------------------------------
# carabiner segment equilibrium
# --------------------------------------------------------------------------

def _split_excess(excess, l1, l2, cap_u, cap_l):
    """Distribute stretch beyond the left-endpoint configuration over plateau capacity."""
    if excess <= 0:
        return 0.0, 0.0
    inf_u, inf_l = math.isinf(cap_u), math.isinf(cap_l)
    if inf_u or inf_l:
        wu = l1 if inf_u else 0.0
        wl = l2 if inf_l else 0.0
        total = wu + wl
        return excess * wu / total / l1, excess * wl / total / l2
    cap = cap_u + cap_l
    if cap <= 0:
        return excess / (l1 + l2), excess / (l1 + l2)
    return excess * cap_u / cap / l1, excess * cap_l / cap / l2


def solve_segment_tension(law: TensionCurve, mu: float, l1: float, l2: float, d: float):
    """Quasi-static tension for a total stretch ``d`` of the two segments.

    The lower segment carries ``b`` and the upper one ``mu * b``. ``b`` is
    found by bisection on ``l1 * s(mu b) + l2 * s(b) = d`` with ``s`` the
    left-endpoint inverse of the law; stretch left over on plateaus is shared
    between segments in proportion to plateau capacity.

    Returns ``(b, strain_upper, strain_lower)``.
    """
    if not math.isfinite(d):
        raise NoEquilibrium(f"stretch must be finite, got {d!r}")
    if d < 0:
        raise ValueError(f"stretch must be non-negative, got {d!r}")
    if d == 0:
        return 0.0, 0.0, 0.0

    def lowest(b):
        try:
            return l1 * strain_interval_of_tension(law, mu * b)[0] + l2 * strain_interval_of_tension(law, b)[0]
        except TensionUnreachable:
            return math.inf

    sup = law.sup_tension
    if math.isfinite(sup) and lowest(sup) <= d:
        b_star = sup
    else:
        lo, hi = 0.0, max(max(law.tensions), 1.0)
        while lowest(hi) <= d:
            lo, hi = hi, 2.0 * hi
            if not math.isfinite(hi):
                raise NoEquilibrium(f"no tension reaches stretch {d}")
        for _ in range(2000):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if lowest(mid) <= d:
                lo = mid
            else:
                hi = mid
        b_star = lo

    lo_u, hi_u = strain_interval_of_tension(law, mu * b_star)
    lo_l, hi_l = strain_interval_of_tension(law, b_star)
    excess = d - (l1 * lo_u + l2 * lo_l)
    du, dl = _split_excess(excess, l1, l2, l1 * (hi_u - lo_u), l2 * (hi_l - lo_l))
    eps_u, eps_l = lo_u + du, lo_l + dl
    return tension(law, eps_l), eps_u, eps_l


def series_table(law: TensionCurve, mu: float, l1: float, l2: float):
    """Exact piecewise-linear form of the carabiner equilibrium as a function of stretch.

    Returns arrays ``(d, b, strain_upper, strain_lower)``; between rows all four
    vary linearly, and the last interval continues linearly beyond the table.
    """
    sup = law.sup_tension
    cands = set(law.tensions)
    if mu > 0:
        cands |= {t / mu for t in law.tensions}
    cands = sorted(c for c in cands if c <= sup)

    rows = []
    tail = None
    for b in cands:
        lo_u, hi_u = strain_interval_of_tension(law, mu * b)
        lo_l, hi_l = strain_interval_of_tension(law, b)
        rows.append((l1 * lo_u + l2 * lo_l, b, lo_u, lo_l))
        if math.isinf(hi_u) or math.isinf(hi_l):
            span = l1 + l2
            du, dl = _split_excess(span, l1, l2, l1 * (hi_u - lo_u), l2 * (hi_l - lo_l))
            tail = (rows[-1][0] + span, b, lo_u + du, lo_l + dl)
            break
        if hi_u > lo_u or hi_l > lo_l:
            rows.append((l1 * hi_u + l2 * hi_l, b, hi_u, hi_l))
    if tail is None:
        b = 2.0 * max(cands[-1], 1.0)
        eu = strain_interval_of_tension(law, mu * b)[0]
        el = strain_interval_of_tension(law, b)[0]
        tail = (l1 * eu + l2 * el, b, eu, el)
    rows.append(tail)

    out = [rows[0]]
    for r in rows[1:]:
        if r[0] > out[-1][0]:
            out.append(r)
    arr = np.array(out)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


# --------------------------------------------------------------------------
# integrator
# --------------------------------------------------------------------------

def _integrate(model, m, g, y0, v0, delta_l, cfg: IntegratorConfig, meta):
    h, tol, t_end = cfg.h, cfg.event_tol, cfg.max_time
    taut = model.taut
    if cfg.raise_on_overshoot:
        cap = taut + delta_l + cfg.elongation_tol
    else:
        cap = taut + cfg.runaway_factor * delta_l
    hysteretic = model.hysteretic
    weight = m * g
    inv_m = 1.0 / m

    branch = 1 if v0 >= 0 else -1
    hlaw = model.law.fresh() if hysteretic else None
    pl = model.pl[branch]
    f = pl.__call__
    xs = pl.xs

    def rk4(y, v, dt):
        a1 = g - f(y) * inv_m
        y2 = y + 0.5 * dt * v
        v2 = v + 0.5 * dt * a1
        a2 = g - f(y2) * inv_m
        y3 = y + 0.5 * dt * v2
        v3 = v + 0.5 * dt * a2
        a3 = g - f(y3) * inv_m
        y4 = y + dt * v3
        v4 = v + dt * a3
        a4 = g - f(y4) * inv_m
        return (y + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
                v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4))

    T, Y, V, B, F, E = [0.0], [y0], [v0], [branch], [f(y0)], ["taut" if y0 >= taut else ""]
    t, y, v = 0.0, y0, v0
    state = (y >= taut, v >= 0.0, bisect_right(xs, y), y > cap)
    k = 0
    arrests = slacks = 0
    stop = None

    while stop is None and t < t_end:
        t_next = min((k + 1) * h, t_end)
        dt = t_next - t
        if dt <= 0.0:
            k += 1
            continue
        y1, v1 = rk4(y, v, dt)
        s1 = (y1 >= taut, v1 >= 0.0, bisect_right(xs, y1), y1 > cap)
        if s1 == state:
            t, y, v = t_next, y1, v1
            k += 1
            T.append(t); Y.append(y); V.append(v); B.append(branch); F.append(f(y)); E.append("")
            continue

        lo, hi = 0.0, dt
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            ym, vm = rk4(y, v, mid)
            sm = (ym >= taut, vm >= 0.0, bisect_right(xs, ym), ym > cap)
            if sm != state:
                hi, y1, v1, s1 = mid, ym, vm, sm
            else:
                lo = mid
        if hi >= dt:
            t = t_next
            k += 1
        else:
            t = t + hi
        was_stretching = state[0] and state[1]
        y, v = y1, v1
        b_in = f(y)
        label = "knot"

        if s1[0] != state[0]:
            label = "taut" if s1[0] else "slack"
            if not s1[0]:
                slacks += 1
                if cfg.cycles is not None and slacks >= cfg.cycles:
                    stop = "cycles"
        if s1[1] != state[1]:
            label = "turn"
            if hysteretic and y >= taut:
                b_load, b_unload = model.pl[1](y), model.pl[-1](y)
                slack_tol = cfg.rest_tol * weight
                if b_unload <= weight + slack_tol and weight <= b_load + slack_tol:
                    label, v, stop = "rest", 0.0, "rest"
                    hysteretic_tension(hlaw, y / model.L - 1.0, branch)
            if stop != "rest":
                new_branch = 1 if v >= 0 else -1
                if hysteretic:
                    hysteretic_tension(hlaw, y / model.L - 1.0, branch)
                    hysteretic_tension(hlaw, y / model.L - 1.0, new_branch)
                if new_branch != branch:
                    branch = new_branch
                    pl = model.pl[branch]
                    f = pl.__call__
                    xs = pl.xs
                if was_stretching and y >= taut:
                    arrests += 1
                    if cfg.stop_at_arrest:
                        stop = "arrest"
        if s1[3] != state[3]:
            label = "overshoot"
            stop = "overshoot"

        T.append(t); Y.append(y); V.append(v); B.append(branch); F.append(b_in); E.append(label)
        state = (y >= taut, v >= 0.0, bisect_right(xs, y), y > cap)

    traj = _finish(model, m, g, T, Y, V, B, F, E, meta)
    traj.metadata["stop_reason"] = stop or "max_time"
    traj.metadata["arrests"] = arrests
    if hysteretic:
        traj.metadata["branch_state"] = {"branch": hlaw.branch, "max_strain": hlaw.max_strain,
                                         "anchor_strain": hlaw.anchor_strain}
    if cfg.check_energy:
        _check_energy(traj, cfg, meta["energy_scale"])
    if stop == "overshoot" and cfg.raise_on_overshoot:
        raise ElongationExceeded(
            f"stretch exceeded delta_l = {delta_l} m (+{cfg.elongation_tol} m) at t = {t:.6g} s", traj)
    return traj


def _finish(model, m, g, T, Y, V, B, F, E, meta):
    t = np.array(T)
    y = np.array(Y)
    v = np.array(V)
    branch = np.array(B, dtype=int)
    strain, upper = model.strains(y)
    e_el, e_diss = model.elastic_energy(y, branch)
    return Trajectory(
        t=t, y=y, v=v, strain=np.asarray(strain, dtype=float), tension=np.array(F),
        e_kin=0.5 * m * v * v, e_grav=-m * g * y, e_el=np.asarray(e_el, dtype=float),
        e_diss=np.asarray(e_diss, dtype=float), events=np.array(E, dtype=object), branch=branch,
        strain_upper=upper, metadata=dict(meta),
    )


def _check_energy(traj: Trajectory, cfg: IntegratorConfig, scale: float):
    total = traj.total_energy
    drift = float(np.max(np.abs(total - total[0])))
    traj.metadata["energy_drift"] = drift / scale
    if drift > 100.0 * cfg.energy_tol * scale:
        raise StepTooLarge(
            f"energy drift {drift:.3g} J is {drift / scale:.3g} of the fall energy; reduce the step h = {cfg.h}")


def _meta(scenario, law, cfg):
    name = getattr(law, "name", None) or type(law).__name__
    if isinstance(law, HysteresisLaw):
        name = f"hysteresis({law.loading.name},{law.unloading.name})"
    return {"scenario": scenario.to_dict(), "law": name, "integrator": cfg.to_dict()}


def simulate_fall(s: Scenario, law, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the fall from the taut instant ``(y, v) = (L, v0)``.

    Elastic laws run until ``max_time`` (or an earlier stop condition from the
    config). Hysteretic laws also stop when the climber comes to rest.
    """
    cfg = cfg or IntegratorConfig()
    if isinstance(law, HysteresisLaw):
        model = _HystereticRope(law, s.L)
    elif isinstance(law, TensionCurve):
        model = _SingleRope(law, s.L)
    else:
        raise TypeError(f"unsupported law type {type(law).__name__}")
    meta = _meta(s, law, cfg)
    meta["energy_scale"] = s.m * s.g * (s.L + s.delta_l - s.h0)
    return _integrate(model, s.m, s.g, s.L, initial_velocity(s), s.delta_l, cfg, meta)


def simulate_carabiner_fall(cs: CarabinerScenario, law: TensionCurve, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Fall with the rope running over a carabiner; the climber-side segment is ``l2`` long.

    The segment equilibrium is tabulated once with ``series_table`` (exact for
    piecewise-linear laws) rather than re-solved at every right-hand-side call.
    """
    cfg = cfg or IntegratorConfig()
    if not isinstance(law, TensionCurve):
        raise TypeError("carabiner falls support elastic tension curves only")
    model = _CarabinerRope(law, cs.mu, cs.l1, cs.l2)
    meta = _meta(cs, law, cfg)
    eq = cs.lower_segment_scenario()
    meta["energy_scale"] = cs.m * cs.g * (cs.l2 + cs.delta_l - cs.h0)
    return _integrate(model, cs.m, cs.g, cs.taut_length, initial_velocity(eq), cs.delta_l, cfg, meta)


def simulate_cycles(s: Scenario, law: HysteresisLaw, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Run a hysteretic rope through repeated stretch/retract cycles until the climber rests."""
    if not isinstance(law, HysteresisLaw):
        raise TypeError("simulate_cycles needs a HysteresisLaw")
    traj = simulate_fall(s, law, cfg)
    if traj.rest_position is None:
        raise NoRest(f"climber still moving at t = {traj.t[-1]:.4g} s", traj)
    return traj


def energy_ledger(y: float, v: float, law, s, e_diss: float = 0.0) -> tuple[float, float, float, float]:
    """Kinetic, gravitational, elastic and dissipated energy (J) of a single state.

    Gravitational potential is zero at the anchor. For hysteretic laws the
    elastic term follows the loading curve; for carabiner scenarios it sums
    both segments at their equilibrium strains.
    """
    e_kin = 0.5 * s.m * v * v
    e_grav = -s.m * s.g * y
    if isinstance(s, CarabinerScenario):
        d = y - s.taut_length
        if d <= 0:
            return e_kin, e_grav, 0.0, e_diss
        _, eu, el = solve_segment_tension(law, s.mu, s.l1, s.l2, d)
        W = energy_density(law)
        return e_kin, e_grav, s.l1 * energy_of_strain(W, eu) + s.l2 * energy_of_strain(W, el), e_diss
    curve = law.loading if isinstance(law, HysteresisLaw) else law
    eps = y / s.L - 1.0
    return e_kin, e_grav, s.L * float(energy_of_strain(energy_density(curve), eps)), e_diss
