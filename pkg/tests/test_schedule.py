import math

import pytest

from cpve.laws import Binomial, Geometric, Tabulated, ValidationError
from cpve.schedule import (Convergent, ExplicitSchedule, ParametricSchedule, Periodic,
                           constant_schedule, schedule_from_dict, stat_mean, stat_p0,
                           stat_var, stat_var_over_mean_sq, weighted_series)


def test_explicit_schedule_tail_and_limits():
    s = ExplicitSchedule((Tabulated.from_mapping({0: 0.5, 3: 0.5}),), Geometric(0.4))
    assert s.mean(0) == pytest.approx(1.5)
    assert s.mean(5) == pytest.approx(2 / 3)
    assert s.limits(stat_mean) == pytest.approx((2 / 3, 2 / 3))
    assert s.bounds(stat_mean) == pytest.approx((2 / 3, 1.5))
    assert not s.is_constant


def test_parametric_geometric_limits():
    s = ParametricSchedule("geometric", Convergent(0.4, 0.3, 0.5))
    assert s.law(0) == Geometric(0.7)
    lo, hi = s.limits(stat_mean)
    assert lo == hi == pytest.approx(0.4 / 0.6)
    assert s.limits(stat_p0) == pytest.approx((0.6, 0.6))
    lo, hi = s.bounds(stat_mean)
    assert lo == pytest.approx(2 / 3) and hi == pytest.approx(0.7 / 0.3)
    for n in range(30):
        assert lo - 1e-12 <= s.mean(n) <= hi + 1e-12


def test_periodic_schedule_limits():
    s = ParametricSchedule("poisson", Periodic((1.0, 3.0)))
    assert s.mean(0) == 1.0 and s.mean(1) == 3.0 and s.mean(2) == 1.0
    assert s.limits(stat_mean) == (1.0, 3.0)


def test_binomial_variance_interior_maximum():
    s = ParametricSchedule("binomial", Convergent(0.8, -0.6, 0.5), trials=4)
    lo, hi = s.bounds(stat_var)
    assert hi == pytest.approx(Binomial(4, 0.5).var)
    for n in range(40):
        assert lo - 1e-12 <= s.var(n) <= hi + 1e-12


def test_parametric_validation():
    with pytest.raises(ValidationError, match="alpha"):
        ParametricSchedule("geometric", Convergent(0.9, 0.2))
    with pytest.raises(ValidationError):
        ParametricSchedule("binomial", Convergent(0.5))
    with pytest.raises(ValidationError):
        ParametricSchedule("zipf", Convergent(0.5))


def test_weighted_series_geometric_closed_form():
    law = Tabulated.from_mapping({0: 0.1, 1: 0.1, 3: 0.8})
    s = constant_schedule(law)
    eta = 1.25
    lo, hi, conv = weighted_series(s, stat_var_over_mean_sq, eta, n_max=200)
    exact = law.var / law.mean**2 / (1 - 1 / eta)
    assert conv is True
    assert lo <= exact * (1 + 1e-12) and exact <= hi * (1 + 1e-12)
    assert hi - lo < 1e-12


def test_weighted_series_divergent_and_zero():
    s = constant_schedule(Geometric(0.5))
    assert weighted_series(s, stat_mean, 1.0)[2] is False
    det = constant_schedule(Tabulated.from_mapping({2: 1.0}))
    lo, hi, conv = weighted_series(det, stat_var, 1.0)
    assert conv is True and lo == hi == 0.0
    lo, hi, conv = weighted_series(det, stat_var, 2.0)
    assert conv is True and hi == 0.0


def test_round_trip():
    for s in (ParametricSchedule("geometric", Convergent(0.4, 0.3, 0.5)),
              ParametricSchedule("binomial", Periodic((0.2, 0.6)), trials=3),
              ExplicitSchedule((Geometric(0.2),), Geometric(0.3)),
              constant_schedule(Tabulated.from_mapping({0: 0.5, 2: 0.5}))):
        assert schedule_from_dict(s.to_dict()) == s
    assert math.isfinite(ParametricSchedule("poisson", Convergent(2.0)).var(3))
