import math

import numpy as np
import pytest

import ropesim.design as design
from ropesim import (
    IntegratorConfig,
    LawParameterization,
    ideal_plateau_law,
    linear_law,
    lower_bound_b0,
    optimality_certificate,
    optimize_law,
    simulate_fall,
)
from ropesim.errors import BoundViolation, Infeasible, NotArresting


def test_strain_grid():
    np.testing.assert_allclose(design.strain_grid(3, 0.1, 1e-4), [1e-4, 0.05005, 0.1])
    log = design.strain_grid(4, 0.1, 1e-4, spacing="log")
    assert log[0] == pytest.approx(1e-4) and log[-1] == pytest.approx(0.1)
    assert np.all(np.diff(np.log(log)) == pytest.approx(np.log(10)))
    for args in ((1, 0.1), (3, 0.1, 0.2), (3, 0.1, 1e-4, "cubic")):
        with pytest.raises(ValueError):
            design.strain_grid(*args)


def test_parameterization_is_monotone():
    p = LawParameterization((0.01, 0.05, 0.1))
    law = p.law([100.0, -50.0, 25.0])  # negative increments clip to zero
    assert law.tensions == (0.0, 100.0, 100.0, 125.0)
    assert law.strains == (0.0, 0.01, 0.05, 0.1)
    with pytest.raises(ValueError):
        LawParameterization((0.05, 0.01))
    with pytest.raises(ValueError):
        LawParameterization((0.05,))


def test_input_validation(ref):
    with pytest.raises(ValueError):
        optimize_law(ref, n_knots=1)
    with pytest.raises(ValueError):
        optimize_law(ref, budget=99)


def test_two_knots_recover_plateau(ref):
    res = optimize_law(ref, n_knots=2, budget=500, seed=3)
    b0 = lower_bound_b0(ref)
    assert res.feasible
    assert res.best_law.tensions[1] == pytest.approx(b0, rel=0.02)
    assert res.peak_tension >= b0 * (1 - 1e-3)
    assert res.max_elongation <= ref.delta_l
    assert res.evaluations <= 500
    hist = res.objective_history
    assert all(b <= a for a, b in zip(hist, hist[1:]))


def test_deterministic_given_seed(ref):
    a = optimize_law(ref, n_knots=3, budget=150, seed=11)
    b = optimize_law(ref, n_knots=3, budget=150, seed=11)
    assert a.best_law == b.best_law
    assert a.objective_history == b.objective_history


def test_static_hang_limit(ref):
    s = ref.with_values(h0=ref.L)
    res = optimize_law(s, n_knots=2, budget=150)
    assert res.peak_tension / (s.m * s.g) == pytest.approx(1.0, abs=0.02)


def test_infeasible_when_nothing_arrests(ref):
    cfg = IntegratorConfig(max_time=1e-5, event_tol=1e-13, stop_at_arrest=True, raise_on_overshoot=False)
    with pytest.raises(Infeasible):
        optimize_law(ref, n_knots=2, budget=100, cfg=cfg)


def test_live_bound_check(ref, monkeypatch):
    # a simulator reporting a feasible peak below the bound must abort the search
    monkeypatch.setattr(design, "_peak_and_elongation", lambda law, s, cfg: (0.5 * lower_bound_b0(s), 0.5))
    with pytest.raises(BoundViolation):
        optimize_law(ref, n_knots=2, budget=100)


def test_certificate_ideal(ref):
    gap, dev = optimality_certificate(ideal_plateau_law(ref), ref)
    assert gap == pytest.approx(0.0, abs=1e-9)
    assert dev == pytest.approx(0.0, abs=1e-12)


def test_certificate_linear_law_tuned_by_bisection(ref):
    """Find the modulus that stops the fall at exactly delta_l by simulation, then read the gap."""
    cfg = IntegratorConfig(stop_at_arrest=True, raise_on_overshoot=False, h=1e-4)

    def stretch(k):
        traj = simulate_fall(ref, linear_law(k), cfg)
        return float(np.max(traj.y)) - ref.L

    lo, hi = 1.0, 1e7
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if stretch(mid) > ref.delta_l:
            lo = mid
        else:
            hi = mid
    gap, dev = optimality_certificate(linear_law(hi), ref)
    assert gap == pytest.approx(1.0, abs=1e-6)
    # b / b0 runs from 0.2 to 1.8 over the middle 80%
    assert dev == pytest.approx(0.8, abs=1e-6)


def test_certificate_rejects_soft_laws(ref):
    with pytest.raises(NotArresting):
        optimality_certificate(linear_law(100.0), ref)
    with pytest.raises(NotArresting):
        optimality_certificate(linear_law(1e4), ref, IntegratorConfig(max_time=0.01, stop_at_arrest=True,
                                                                       raise_on_overshoot=False))
