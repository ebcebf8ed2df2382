import numpy as np
import pytest

from orientedcp.critfind import (check_subcritical_decay, estimate_critical_rate,
                                 scan_defaults, survival_indicators_nested,
                                 survival_probability)
from orientedcp.errors import ScanError
from orientedcp.weights import WeightDistribution

CONST = WeightDistribution.constant(1.0)


def test_survival_vanishes_without_transmission():
    # rate ~ 0: origin must hold out alone for the whole horizon
    est = survival_probability(CONST, 2, 4, 1e-12, 10.0, 10_000, seed=1)
    assert est.p_hat <= 0.001
    dead = WeightDistribution.two_point(0.0, strict=False)
    est2 = survival_probability(dead, 2, 4, 1.0, 10.0, 2_000, seed=2)
    assert est2.p_hat <= 0.001


def test_survival_probability_validation():
    with pytest.raises(ValueError):
        survival_probability(CONST, 2, 4, 0.0, 5.0, 10, seed=0)
    with pytest.raises(ValueError):
        survival_probability(CONST, 2, 4, 1.0, 5.0, 0, seed=0)


def test_survival_jobs_invariance():
    one = survival_probability(CONST, 2, 5, 0.6, 4.0, 60, seed=3, jobs=1)
    two = survival_probability(CONST, 2, 5, 0.6, 4.0, 60, seed=3, jobs=2)
    assert one == two


def test_nested_indicators_are_monotone_per_replicate():
    lams = [0.3, 0.6, 1.2]
    ests, ind = survival_indicators_nested(CONST, 2, 5, lams, 4.0, 300, seed=4)
    assert ind.shape == (300, 3)
    assert np.all(ind[:, 0] <= ind[:, 1])
    assert np.all(ind[:, 1] <= ind[:, 2])
    ps = [e.p_hat for e in ests]
    assert ps == sorted(ps)
    assert [e.lam for e in ests] == lams
    assert ps[2] > ps[0]  # the spread must actually bite at these rates


def test_subcritical_decay_report():
    reports = check_subcritical_decay(CONST, 3, [0.1], horizon=50.0, reps=400,
                                      seed=5, occupancy_reps=2000,
                                      survival_side=6)
    (rep,) = reports
    assert rep.rate_floor == pytest.approx(1.0 / 3.0)
    assert rep.envelope_ok
    assert all(r.f_hat <= r.envelope + 3.0 * r.se for r in rep.envelope_rows)
    assert rep.below_floor and rep.survival.p_hat <= rep.noise_floor


def test_subcritical_decay_rejects_rates_at_the_floor():
    with pytest.raises(ValueError, match="not below"):
        check_subcritical_decay(CONST, 3, [0.4], horizon=10.0, reps=10, seed=0)


def test_scan_defaults_table():
    assert scan_defaults(2) == {"side": 24, "horizon": 24.0}
    assert scan_defaults(5) == {"side": 7, "horizon": 16.0}
    assert scan_defaults(7) == {"side": 5, "horizon": 12.0}
    assert scan_defaults(30) == {"side": 4, "horizon": 12.0}


def test_estimate_critical_rate_smoke():
    res = estimate_critical_rate(CONST, 2, side=6, horizon=8.0,
                                 reps_per_probe=300, threshold=0.05,
                                 tol=0.05, seed=6, check_box=False)
    mf = 0.5
    assert res.mean_field_ref == pytest.approx(mf)
    assert res.status in ("converged", "statistically_limited")
    lo, hi = res.bracket
    assert lo <= res.lam_hat <= hi
    # the estimate must sit above the proven subcritical region
    assert res.lam_hat + res.tol >= mf
    assert res.lam_hat < 8.0 * mf
    assert res.scaled == pytest.approx(res.lam_hat / mf)
    assert len(res.trace) >= 3
    assert all(e.reps in (200, 300, 1200) for e in res.trace)
    again = estimate_critical_rate(CONST, 2, side=6, horizon=8.0,
                                   reps_per_probe=300, threshold=0.05,
                                   tol=0.05, seed=6, check_box=False)
    assert again.lam_hat == res.lam_hat
    assert again.trace == res.trace


def test_estimate_critical_rate_box_check():
    res = estimate_critical_rate(CONST, 2, side=4, horizon=5.0,
                                 reps_per_probe=150, threshold=0.05,
                                 tol=0.1, seed=7, check_box=True)
    base, doubled = res.box_check
    assert res.box_converged in (True, False)
    assert (doubled.side, doubled.horizon) == (8, 10.0)
    assert doubled.reps == 200
    assert base.lam == doubled.lam == res.lam_hat


def test_estimate_critical_rate_bracket_failure():
    with pytest.raises(ScanError) as exc:
        estimate_critical_rate(CONST, 2, side=5, horizon=6.0,
                               reps_per_probe=200, threshold=0.999,
                               tol=0.1, seed=8, bracket_budget=1,
                               check_box=False)
    assert "supercritical" in str(exc.value)
    assert len(exc.value.trace) >= 2


def test_estimate_critical_rate_validation():
    dead = WeightDistribution.two_point(0.0, strict=False)
    with pytest.raises(ValueError, match="second moment"):
        estimate_critical_rate(dead, 2)
    with pytest.raises(ValueError, match="threshold"):
        estimate_critical_rate(CONST, 2, threshold=1.5)
    with pytest.raises(ValueError, match="tol"):
        estimate_critical_rate(CONST, 2, tol=-0.1)
