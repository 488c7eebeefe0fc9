"""Extinction and survival criteria evaluated on a model.

Each checker returns a :class:`ConditionReport` with a three-valued verdict
per hypothesis.  Asymptotic quantities come from the closed forms exposed by
the schedule and control families; a finite probe over ``k <= k_max`` or
``n <= n_max`` is reported alongside as evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .control import TabulatedControl
from .exact import DEFAULT_STATE_CAP, transition_row
from .model import ModelSpec
from .schedule import (Convergent, ParametricSchedule, stat_mean, stat_p0,
                       stat_second, stat_var, stat_var_over_mean_sq,
                       weighted_series)

K_MAX = 10**4
N_MAX = 10**3
S_GRID = tuple(round(0.1 * i, 1) for i in range(10))


class Verdict(str, Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    INCONCLUSIVE = "INCONCLUSIVE"


Q_ONE = "q=1"
Q_LESS = "q<1"
DUALITY = "duality"
NONE = "no-conclusion"


def _num(x):
    if x is None:
        return None
    if isinstance(x, (float, np.floating)) and math.isinf(x):
        return "unbounded"
    if isinstance(x, (float, np.floating)) and math.isnan(x):
        return None
    return float(x) if isinstance(x, (float, np.floating)) else x


@dataclass
class LimitEvidence:
    value: float
    method: str = "closed-form"
    probe_range: str = ""
    conclusive: bool = True

    def to_dict(self):
        return {"value": _num(self.value), "method": self.method,
                "probe_range": self.probe_range, "conclusive": self.conclusive}


@dataclass
class Hypothesis:
    name: str
    verdict: Verdict
    evidence: LimitEvidence

    def to_dict(self):
        return {"name": self.name, "verdict": self.verdict.value, "evidence": self.evidence.to_dict()}


@dataclass
class ConditionReport:
    theorem: str
    hypotheses: list[Hypothesis]
    conclusion: str = NONE
    bounds: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(h.verdict is Verdict.HOLDS for h in self.hypotheses)

    def verdict(self, name: str) -> Verdict:
        for h in self.hypotheses:
            if h.name == name:
                return h.verdict
        raise KeyError(name)

    def to_dict(self):
        def clean(v):
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return _num(v)

        return {"theorem": self.theorem, "hypotheses": [h.to_dict() for h in self.hypotheses],
                "conclusion": self.conclusion, "bounds": clean(self.bounds),
                "diagnostics": clean(self.diagnostics)}


def _k_method(model):
    return "tail-sampled" if isinstance(model.control, TabulatedControl) else "closed-form"


def _decide(ok: bool, conclusive: bool = True) -> Verdict:
    if not conclusive:
        return Verdict.INCONCLUSIVE
    return Verdict.HOLDS if ok else Verdict.FAILS


def _standing(model: ModelSpec) -> list[Hypothesis]:
    rep = check_duality(model)
    return [Hypothesis(f"standing: {h.name}", h.verdict, h.evidence) for h in rep.hypotheses]


def _finish(rep: ConditionReport, conclusion: str) -> ConditionReport:
    rep.conclusion = conclusion if rep.all_hold else NONE
    return rep


# --------------------------------------------------------------------------
# duality and extinction


def check_duality(model: ModelSpec) -> ConditionReport:
    p00 = float(model.control.law(0).pmf(0))
    liminf_p0, _ = model.offspring.limits(stat_p0)
    hyps = [
        Hypothesis("(i) P(phi(0)=0)=1", _decide(p00 == 1.0),
                   LimitEvidence(p00, "closed-form", "k=0")),
        Hypothesis("(ii) liminf p_n0 > 0", _decide(liminf_p0 > 0),
                   LimitEvidence(liminf_p0, "closed-form", "n->inf")),
    ]
    return _finish(ConditionReport("theorem1", hyps), DUALITY)


def check_thm2(model: ModelSpec) -> ConditionReport:
    lhs = model.control.ratio_limit
    _, limsup_m = model.offspring.limits(stat_mean)
    rhs = 1.0 / limsup_m if limsup_m > 0 else math.inf
    hyps = _standing(model) + [
        Hypothesis("limsup E(k)/k < liminf 1/m_n", _decide(lhs < rhs),
                   LimitEvidence(lhs - rhs, _k_method(model), "k->inf, n->inf")),
    ]
    rep = ConditionReport("theorem2", hyps, diagnostics={"limsup_ratio": lhs, "liminf_inv_mean": rhs})
    return _finish(rep, Q_ONE)


def gamma_n(model: ModelSpec, n: int, s: float, k_max: int = K_MAX) -> tuple[float, bool]:
    """inf_{k>=1} g_k(f_n(s)): probe over 1..k_max plus the closed-form tail."""
    if not 0.0 <= s < 1.0:
        raise ValueError(f"s must lie in [0, 1), got {s!r}")
    u = float(model.offspring.law(n).pgf(s))
    ctrl = model.control
    probe = min(ctrl.pgf(k, u) for k in range(1, k_max + 1))
    tail = ctrl.gamma_inf(u, k_max + 1)
    return float(min(probe, tail)), True


def _liminf_gamma(model: ModelSpec, s: float) -> tuple[float, bool]:
    sched = model.offspring
    u_inf, _ = sched.limits(lambda law: float(law.pgf(s)))
    # gamma_inf is non-decreasing in u and continuous below 1
    conclusive = u_inf < 1.0 or not (isinstance(sched, ParametricSchedule)
                                     and isinstance(sched.param, Convergent) and sched.param.offset != 0)
    return model.control.gamma_inf(u_inf, 1), conclusive


def check_thm3(model: ModelSpec, s_grid=S_GRID, k_max: int = K_MAX) -> ConditionReport:
    best = (-1.0, None, False)
    per_s = {}
    for s in s_grid:
        if not 0.0 <= s < 1.0:
            raise ValueError(f"s grid points must lie in [0, 1), got {s!r}")
        val, concl = _liminf_gamma(model, s)
        per_s[str(s)] = val
        if concl and val > best[0]:
            best = (val, s, True)
    any_positive = best[0] > 0
    all_conclusive = all(_liminf_gamma(model, s)[1] for s in s_grid)
    if any_positive:
        verdict = Verdict.HOLDS
    elif all_conclusive:
        verdict = Verdict.FAILS
    else:
        verdict = Verdict.INCONCLUSIVE
    ev = LimitEvidence(max(best[0], 0.0), _k_method(model), f"s in grid, k=1..{k_max}", all_conclusive or any_positive)
    hyps = _standing(model) + [Hypothesis("liminf gamma_n(s) > 0 for some s", verdict, ev)]
    diag = {"liminf_gamma_by_s": per_s, "best_s": best[1]}
    if verdict is Verdict.FAILS:
        diag["note"] = "not detected on grid"
    return _finish(ConditionReport("theorem3", hyps, diagnostics=diag), Q_ONE)


# --------------------------------------------------------------------------
# survival


def find_eta(model: ModelSpec) -> float | None:
    """Largest eta with liminf m_n >= eta k / E(k) for every k >= 1, if > 1."""
    liminf_m, _ = model.offspring.limits(stat_mean)
    r_inf, _ = model.control.ratio_bounds(1)
    eta = liminf_m * r_inf
    return eta if eta > 1.0 else None


def _eta_hypothesis(model, eta):
    liminf_m, _ = model.offspring.limits(stat_mean)
    r_inf, _ = model.control.ratio_bounds(1)
    return Hypothesis("uniformly supercritical (eta > 1)", _decide(eta is not None),
                      LimitEvidence(liminf_m * r_inf, _k_method(model), "k>=1, n->inf"))


def jensen_tension(model: ModelSpec) -> dict:
    """Lower bound on gamma / eta^2 valid for every admissible (gamma, eta).

    d^2(k) >= E(k)^2 forces this ratio to be >= 1 whenever limsup m_n >=
    liminf m_n, so the second-moment survival condition can never be met.
    """
    liminf_m, limsup_m = model.offspring.limits(stat_mean)
    r_inf, _ = model.control.ratio_bounds(1)
    num = limsup_m**2 * model.control.second_ratio_sup(1)
    den = (liminf_m * r_inf) ** 2
    ratio = num / den if den > 0 else math.inf
    return {"min_gamma_over_eta_sq": ratio, "tension": bool(ratio >= 1.0)}


def check_thm4(model: ModelSpec, n_max: int = N_MAX) -> ConditionReport:
    eta = find_eta(model)
    diag = {"eta": eta, "jensen": jensen_tension(model)}
    hyps = _standing(model) + [_eta_hypothesis(model, eta)]
    if eta is None:
        hyps += [Hypothesis("(i) gamma/eta^2 < 1", Verdict.INCONCLUSIVE, LimitEvidence(math.nan, conclusive=False)),
                 Hypothesis("(ii) sum sigma_n^2/(m_n^2 eta^n) < inf", Verdict.INCONCLUSIVE,
                            LimitEvidence(math.nan, conclusive=False))]
        return _finish(ConditionReport("theorem4", hyps, diagnostics=diag), Q_LESS)
    _, limsup_m = model.offspring.limits(stat_mean)
    gamma = limsup_m**2 * model.control.second_ratio_sup(1)
    ratio = gamma / eta**2
    diag["gamma"] = gamma
    hyps.append(Hypothesis("(i) gamma/eta^2 < 1", _decide(ratio < 1.0),
                           LimitEvidence(ratio, _k_method(model), "k>=1, n->inf")))
    lo, hi, conv = weighted_series(model.offspring, stat_var_over_mean_sq, eta, n_max)
    hyps.append(Hypothesis("(ii) sum sigma_n^2/(m_n^2 eta^n) < inf",
                           Verdict.INCONCLUSIVE if conv is None else _decide(conv),
                           LimitEvidence(hi, "closed-form", f"n=0..{n_max} + geometric tail", conv is not None)))
    rep = ConditionReport("theorem4", hyps, diagnostics=diag)
    _finish(rep, Q_LESS)
    if rep.all_hold:
        t0 = float(model.control.mean(model.initial))
        rep.bounds = {"series": [lo, hi], "E_T0": t0,
                      "survival_lower_bound": 1.0 / (hi / t0 + 1.0) if t0 > 0 else 0.0}
    return rep


def _thm5_bound(model, eta, delta_prime, a, b, n_max, eps):
    sched, ctrl = model.offspring, model.control
    m_lo, _ = sched.bounds(stat_mean)
    r_inf, _ = ctrl.ratio_bounds(1)
    eta_b = min(eta, m_lo * r_inf)
    rho = eta_b - delta_prime
    out = {"delta_prime": delta_prime, "eta_from_generation_0": m_lo * r_inf, "rho": rho}
    if rho <= 1.0:
        out["available"] = False
        out["note"] = "uniform supercriticality does not hold from generation 0"
        return out
    n = np.arange(1, n_max + 1)
    C = np.array([sched.mean(int(i)) ** 2 * b + sched.var(int(i)) * a for i in n])
    _, m_hi = sched.bounds(stat_mean)
    _, s2_hi = sched.bounds(stat_var)
    C_sup = m_hi**2 * b + s2_hi * a
    logw = -n * math.log(rho)
    thresh = C * np.exp(logw) / delta_prime**2
    tail_thresh = C_sup * rho ** -(n_max + 1) / ((1 - 1 / rho) * delta_prime**2)
    N_min = int(math.floor(max(thresh.max(), 0.0))) + 1

    def product_bound(N):
        factors = 1.0 - thresh / N
        if np.any(factors <= 0) or 1.0 - tail_thresh / N <= 0:
            return None, None
        row = transition_row(model.with_initial(N), 0, N, eps, DEFAULT_STATE_CAP)
        cut = int(math.floor(rho * N))
        p_a0 = float(row.mass[cut + 1:].sum())
        return p_a0 * float(np.prod(factors)) * (1.0 - tail_thresh / N), p_a0

    N = model.initial
    at_N, pa0_N = product_bound(N) if N >= N_min else (None, None)
    at_min, pa0_min = product_bound(N_min)
    out.update({"available": True, "C_sup": C_sup, "minimal_N": N_min, "N": N,
                "vacuous": at_N is None, "bound_at_N": at_N, "P_A0_at_N": pa0_N,
                "bound_at_minimal_N": at_min, "P_A0_at_minimal_N": pa0_min})
    return out


def check_thm5(model: ModelSpec, delta: float | None = None, delta_prime: float | None = None,
               n_max: int = N_MAX, eps: float = 1e-12) -> ConditionReport:
    eta = find_eta(model)
    hyps = [_eta_hypothesis(model, eta)]
    if eta is None:
        if delta is not None and not delta > 0:
            raise ValueError(f"delta must be positive, got {delta!r}")
        hyps.append(Hypothesis("sum (m_n^2+sigma_n^2)/(eta-delta)^n < inf", Verdict.INCONCLUSIVE,
                               LimitEvidence(math.nan, conclusive=False)))
        return _finish(ConditionReport("theorem5", hyps, diagnostics={"eta": None}), Q_LESS)
    if delta is None:
        delta = (eta - 1.0) / 2
    if not 0.0 < delta < eta - 1.0:
        raise ValueError(f"delta must lie in (0, eta - 1) = (0, {eta - 1.0}), got {delta!r}")
    _, a = model.control.ratio_bounds(1)
    b = model.control.var_ratio_sup(1)
    km = _k_method(model)
    hyps += [
        Hypothesis("E(k)/k bounded", _decide(math.isfinite(a)), LimitEvidence(a, km, "k>=1")),
        Hypothesis("tau^2(k)/k bounded", _decide(math.isfinite(b)), LimitEvidence(b, km, "k>=1")),
    ]
    lo, hi, conv = weighted_series(model.offspring, stat_second, eta - delta, n_max)
    hyps.append(Hypothesis("sum (m_n^2+sigma_n^2)/(eta-delta)^n < inf",
                           Verdict.INCONCLUSIVE if conv is None else _decide(conv),
                           LimitEvidence(hi, "closed-form", f"n=0..{n_max} + geometric tail", conv is not None)))
    rep = ConditionReport("theorem5", hyps, diagnostics={"eta": eta, "delta": delta, "a": a, "b": b})
    _finish(rep, Q_LESS)
    if rep.all_hold:
        dp = min(eta - 1.0, delta) / 2 if delta_prime is None else delta_prime
        if not 0.0 < dp < min(eta - 1.0, delta):
            raise ValueError(f"delta_prime must lie in (0, min(eta-1, delta)), got {dp!r}")
        rep.bounds = _thm5_bound(model, eta, dp, a, b, n_max, eps)
    return rep


def growth_rate_matrix(model: ModelSpec, n_max: int, k_max: int) -> np.ndarray:
    """mu[n, k-1] = m_n E(k) / k for n < n_max and 1 <= k <= k_max."""
    if n_max < 1 or k_max < 1:
        raise ValueError("n_max and k_max must be >= 1")
    m = np.array([model.offspring.mean(n) for n in range(n_max)])
    k = np.arange(1, k_max + 1)
    ratio = np.asarray(model.control.mean(k), dtype=float) / k
    return np.outer(m, ratio)


def criteria_bundle(model: ModelSpec, *, k_max: int = K_MAX, n_max: int = N_MAX, s_grid=S_GRID,
                    delta: float | None = None, delta_prime: float | None = None, eps: float = 1e-12) -> dict:
    from .martingale import check_thm6_hypotheses

    reports = [check_duality(model), check_thm2(model), check_thm3(model, s_grid, k_max),
               check_thm4(model, n_max), check_thm5(model, delta, delta_prime, n_max, eps),
               check_thm6_hypotheses(model, k_max=k_max, n_max=n_max)]
    return {"eta": find_eta(model), "reports": {r.theorem: r.to_dict() for r in reports}}
