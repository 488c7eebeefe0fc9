import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpve.control import (BinomialControl, Capped, Identity, Multiplier,
                          PoissonControl, TabulatedControl)
from cpve.criteria import (DUALITY, NONE, Q_LESS, Q_ONE, Verdict, check_duality,
                           check_thm2, check_thm3, check_thm4, check_thm5,
                           criteria_bundle, find_eta, gamma_n, growth_rate_matrix,
                           jensen_tension)
from cpve.laws import Deterministic, Geometric, Tabulated
from cpve.model import ModelSpec
from cpve.schedule import Convergent, ParametricSchedule, constant_schedule


def model(law, control=Identity(), initial=1):
    return ModelSpec(constant_schedule(law), control, initial)


FIXTURE2_LAW = Tabulated.from_mapping({0: 0.1, 1: 0.1, 3: 0.8})
FIXTURE2 = model(FIXTURE2_LAW, BinomialControl(0.5))
MEAN_2 = Tabulated.from_mapping({0: 0.25, 1: 0.25, 3: 0.25, 4: 0.25})  # mean 2
VARYING_GEOMETRIC = ParametricSchedule("geometric", Convergent(0.4, 0.3, 0.5))


def last(rep):
    return rep.hypotheses[-1]


# --------------------------------------------------------------------------
# duality


def test_duality_examples():
    rep = check_duality(model(Geometric(0.4)))
    assert [h.verdict for h in rep.hypotheses] == [Verdict.HOLDS, Verdict.HOLDS]
    assert rep.hypotheses[1].evidence.value == pytest.approx(0.6)
    assert rep.conclusion == DUALITY
    rep = check_duality(model(Deterministic(2)))
    assert rep.hypotheses[1].verdict is Verdict.FAILS and rep.conclusion == NONE
    rep = check_duality(model(Geometric(0.4), PoissonControl(0.8)))
    assert rep.hypotheses[0].verdict is Verdict.HOLDS


def test_duality_uses_limit_of_varying_schedule():
    rep = check_duality(ModelSpec(VARYING_GEOMETRIC, Identity(), 1))
    assert rep.hypotheses[1].evidence.value == pytest.approx(0.6)
    assert rep.hypotheses[1].evidence.method == "closed-form"


# --------------------------------------------------------------------------
# check_thm2


def test_thm2_examples():
    mean_15 = Tabulated.from_mapping({0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25})
    rep = check_thm2(model(mean_15, BinomialControl(0.5)))
    assert last(rep).verdict is Verdict.HOLDS and rep.conclusion == Q_ONE
    rep = check_thm2(model(MEAN_2))
    assert last(rep).verdict is Verdict.FAILS and rep.conclusion == NONE
    rep = check_thm2(ModelSpec(VARYING_GEOMETRIC, Identity(), 1))
    assert rep.diagnostics["liminf_inv_mean"] == pytest.approx(1.5)
    assert last(rep).verdict is Verdict.HOLDS and rep.conclusion == Q_ONE


def test_standing_hypotheses_block_conclusion():
    # the strict inequality holds but liminf p_n0 = 0
    rep = check_thm2(model(Deterministic(0)))
    assert rep.conclusion == Q_ONE
    rep = check_thm2(model(Tabulated.from_mapping({1: 1.0}), BinomialControl(0.5)))
    assert last(rep).verdict is Verdict.HOLDS
    assert rep.verdict("standing: (ii) liminf p_n0 > 0") is Verdict.FAILS
    assert rep.conclusion == NONE


# --------------------------------------------------------------------------
# check_thm3


@pytest.mark.parametrize("s", [0.0, 0.3, 0.9])
def test_gamma_capped_closed_form(s):
    m = model(Geometric(0.6), Capped(5))
    val, conclusive = gamma_n(m, 0, s, k_max=50)
    assert conclusive
    assert val == pytest.approx(Geometric(0.6).pgf(s) ** 5, rel=1e-14)


def test_gamma_examples_and_domain():
    val, conclusive = gamma_n(model(Geometric(0.6), BinomialControl(0.5)), 0, 0.5, k_max=100)
    assert conclusive and val == 0.0
    assert gamma_n(model(Deterministic(0)), 0, 0.0, k_max=10)[0] == 1.0
    for s in (1.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            gamma_n(model(Geometric(0.6)), 0, s)


def test_thm3_examples():
    rep = check_thm3(model(Geometric(0.6), Capped(5)))
    assert last(rep).verdict is Verdict.HOLDS and rep.conclusion == Q_ONE
    for ctrl in (BinomialControl(0.5), Identity()):
        rep = check_thm3(model(Geometric(0.6), ctrl))
        assert last(rep).verdict is Verdict.FAILS and rep.conclusion == NONE
        assert rep.diagnostics["note"] == "not detected on grid"


def test_thm3_rejects_bad_grid():
    with pytest.raises(ValueError):
        check_thm3(model(Geometric(0.6), Capped(5)), s_grid=(0.5, 1.0))


# --------------------------------------------------------------------------
# eta


def test_find_eta_examples():
    law25 = Tabulated.from_mapping({0: 0.25, 3: 0.25, 4: 0.5})  # mean 2.75
    assert find_eta(FIXTURE2) == pytest.approx(1.25)
    assert find_eta(model(law25, BinomialControl(0.5))) == pytest.approx(1.375)
    assert find_eta(model(MEAN_2)) == pytest.approx(2.0)
    assert find_eta(model(Tabulated.from_mapping({0: 0.5, 2: 0.5}))) is None


controls = st.one_of(
    st.just(Identity()),
    st.builds(BinomialControl, st.floats(0.05, 1.0), st.integers(0, 3)),
    st.builds(PoissonControl, st.floats(0.1, 2.0)),
    st.builds(Multiplier, st.sampled_from([Tabulated.from_mapping({0: 0.5, 2: 0.5}),
                                           Tabulated.from_mapping({1: 0.5, 3: 0.5})])),
)


@given(controls, st.floats(0.1, 0.9))
@settings(max_examples=60, deadline=None)
def test_eta_satisfies_definition_on_probe(ctrl, alpha):
    m = model(Geometric(alpha), ctrl)
    eta = find_eta(m)
    k = np.arange(1, 2001)
    prod = Geometric(alpha).mean * np.asarray(ctrl.mean(k), dtype=float) / k
    if eta is None:
        assert prod.min() <= 1.0 + 1e-12
    else:
        assert np.all(prod >= eta * (1 - 1e-12))


@pytest.mark.parametrize("ctrl", [Identity(), BinomialControl(0.5), BinomialControl(0.3, 2),
                                  PoissonControl(0.8), Capped(4)], ids=repr)
def test_pgf_non_increasing_in_k_justifies_infimum(ctrl):
    for u in np.linspace(0.0, 0.99, 9):
        g = np.array([ctrl.pgf(k, u) for k in range(1, 300)])
        assert np.all(np.diff(g) <= 1e-15)


# --------------------------------------------------------------------------
# check_thm4


def test_thm4_identity_fails_with_jensen_tension():
    rep = check_thm4(model(MEAN_2))
    assert rep.verdict("(i) gamma/eta^2 < 1") is Verdict.FAILS
    assert rep.verdict("(ii) sum sigma_n^2/(m_n^2 eta^n) < inf") is Verdict.HOLDS
    assert rep.diagnostics["jensen"]["tension"] is True
    assert rep.diagnostics["jensen"]["min_gamma_over_eta_sq"] == pytest.approx(1.0)
    assert rep.conclusion == NONE


@pytest.mark.parametrize("m", [model(MEAN_2), FIXTURE2, model(Deterministic(3), BinomialControl(0.5)),
                               model(Geometric(0.4)), model(Geometric(0.6), Capped(5))],
                         ids=["identity", "binomial", "deterministic", "subcritical", "capped"])
def test_jensen_tension_on_constant_means(m):
    t = jensen_tension(m)
    assert t["tension"] is True and t["min_gamma_over_eta_sq"] >= 1.0


def test_thm4_deterministic_offspring_series_is_zero():
    rep = check_thm4(model(Deterministic(3), BinomialControl(0.5)))
    h = rep.hypotheses[-1]
    assert h.verdict is Verdict.HOLDS and h.evidence.value == 0.0
    assert rep.verdict("(i) gamma/eta^2 < 1") is Verdict.FAILS


def test_thm4_not_supercritical_is_inconclusive():
    rep = check_thm4(model(Geometric(0.6), Capped(5)))
    assert rep.verdict("uniformly supercritical (eta > 1)") is Verdict.FAILS
    assert rep.conclusion == NONE


# --------------------------------------------------------------------------
# check_thm5


def test_thm5_fixture2_all_hold():
    rep = check_thm5(FIXTURE2, delta=0.1)
    assert rep.all_hold and rep.conclusion == Q_LESS
    assert rep.diagnostics["a"] == pytest.approx(0.5)
    assert rep.diagnostics["b"] == pytest.approx(0.25)
    b = rep.bounds
    assert b["available"] and b["delta_prime"] == pytest.approx(0.05)
    assert b["vacuous"] is True and b["bound_at_N"] is None
    n_min = b["minimal_N"]
    # the threshold of the first factor: C / (rho delta'^2)
    C = 2.5**2 * 0.25 + FIXTURE2_LAW.var * 0.5
    assert n_min == math.floor(C / (1.2 * 0.05**2)) + 1
    assert 0 < b["bound_at_minimal_N"] <= b["P_A0_at_minimal_N"] <= 1


def test_thm5_non_vacuous_at_large_initial():
    n_min = check_thm5(FIXTURE2, delta=0.1).bounds["minimal_N"]
    rep = check_thm5(FIXTURE2.with_initial(n_min + 50), delta=0.1)
    assert rep.bounds["vacuous"] is False
    assert 0 < rep.bounds["bound_at_N"] <= 1


def test_thm5_unbounded_variance_ratio_fails():
    m = model(MEAN_2, Multiplier(Tabulated.from_mapping({0: 0.5, 2: 0.5})))
    rep = check_thm5(m, delta=0.2)
    assert rep.verdict("tau^2(k)/k bounded") is Verdict.FAILS
    assert rep.hypotheses[2].evidence.to_dict()["value"] == "unbounded"
    assert rep.conclusion == NONE and rep.bounds is None


def test_thm5_invalid_delta():
    for d in (0.0, -0.1, 0.25, 1.0):
        with pytest.raises(ValueError):
            check_thm5(FIXTURE2, delta=d)


# --------------------------------------------------------------------------
# growth-rate matrix


def test_growth_rate_matrix_examples():
    mat = growth_rate_matrix(ModelSpec(VARYING_GEOMETRIC, Identity(), 1), 5, 7)
    for n in range(5):
        assert np.allclose(mat[n], VARYING_GEOMETRIC.mean(n))
    mat = growth_rate_matrix(FIXTURE2, 4, 9)
    assert np.allclose(mat, 0.5 * 2.5)
    mat = growth_rate_matrix(model(Deterministic(2), BinomialControl(0.5)), 3, 6)
    assert np.all(mat == 1.0)
    with pytest.raises(ValueError):
        growth_rate_matrix(FIXTURE2, 0, 3)


def test_tabulated_control_is_tail_sampled():
    ctrl = TabulatedControl((Deterministic(0), Tabulated.from_mapping({0: 0.5, 1: 0.5})), BinomialControl(0.5))
    rep = check_thm2(model(Geometric(0.6), ctrl))
    assert last(rep).evidence.method == "tail-sampled"


def test_bundle_covers_all_theorems():
    out = criteria_bundle(FIXTURE2, k_max=200, n_max=100)
    assert out["eta"] == pytest.approx(1.25)
    assert sorted(out["reports"]) == [f"theorem{i}" for i in range(1, 7)]
    for rep in out["reports"].values():
        if rep["conclusion"] != NONE:
            assert all(h["verdict"] == "HOLDS" for h in rep["hypotheses"])
