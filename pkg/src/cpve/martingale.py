"""Normalization W_n = Z_n / r_n and its numerical checks.

``tau = lim E(k)/k`` and ``r_n = tau^n * prod_{i<n} m_i``.  ``r_n`` is kept both
as a plain product and as ``log r_n``; once the product overflows, W is
evaluated as ``exp(log Z - log r_n)`` for ``Z > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criteria import (K_MAX, N_MAX, ConditionReport, Hypothesis, LimitEvidence,
                       Verdict, _decide, _finish, _k_method, find_eta)
from .exact import (DEFAULT_STATE_CAP, BudgetError, exact_moments,
                    extinction_bounds, propagate)
from .model import ModelSpec
from .schedule import stat_var_over_mean_sq, weighted_series
from .simulate import EXPLODED, MCReport, wilson_interval

W_CONVERGES = "W_n converges (a.s., L1, L2)"
PROFILE_SIZES = tuple(2**i for i in range(9))


class NormalizerError(ValueError):
    """The control family has no finite positive lim E(k)/k."""


class InvariantError(RuntimeError):
    """A property that must hold by construction was violated numerically."""


@dataclass(frozen=True)
class Normalizer:
    tau: float
    log_r: np.ndarray
    monotone_ratio_ok: bool
    eta: float | None = None
    first_index: int | None = None
    r_product: np.ndarray | None = None  # inf once the product overflows

    @property
    def horizon(self) -> int:
        return self.log_r.size - 1

    @property
    def r(self) -> np.ndarray:
        if self.r_product is not None:
            return self.r_product
        with np.errstate(over="ignore"):
            return np.exp(self.log_r)

    @property
    def inv_r(self) -> np.ndarray:
        """1 / r_n, exact where the plain product is finite."""
        r = self.r
        with np.errstate(divide="ignore"):
            return np.where(np.isfinite(r), 1.0 / r, np.exp(-self.log_r))

    def w(self, z, n: int):
        """W_n for sizes ``z``; negative entries (exploded paths) give NaN."""
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape)
        pos = z > 0
        r = self.r[n]
        with np.errstate(over="ignore"):
            direct = z[pos] / r if np.isfinite(r) else np.full(np.count_nonzero(pos), np.inf)
        logged = np.exp(np.log(z[pos]) - self.log_r[n])
        out[pos] = np.where(np.isfinite(direct), direct, logged)
        out[z < 0] = np.nan
        return out


def build_normalizer(model: ModelSpec, horizon: int) -> Normalizer:
    tau = model.control.tau
    if tau is None:
        raise NormalizerError(
            f"control kind {model.control.kind!r} has lim E(k)/k = {model.control.ratio_limit}; "
            "the normalization needs a finite positive limit")
    m = np.array([model.offspring.mean(n) for n in range(horizon)], dtype=float)
    if np.any(m <= 0):
        raise NormalizerError("offspring mean vanishes at some generation; r_n is not defined")
    log_r = np.concatenate([[0.0], np.cumsum(math.log(tau) + np.log(m))])
    with np.errstate(over="ignore"):
        r_product = np.concatenate([[1.0], np.cumprod(tau * m)])
    eta = find_eta(model)
    first = None
    if eta is not None:
        hits = np.nonzero(tau * m >= eta * (1 - 1e-12))[0]
        first = int(hits[0]) if hits.size else None
    return Normalizer(tau, log_r, bool(model.control.ratio_monotone), eta, first, r_product)


@dataclass(frozen=True)
class DeltaSeq:
    delta: np.ndarray  # delta[k - 1] = tau - E(k)/k
    partial_sum: float
    tail_bound: float
    summability: Verdict

    def __getitem__(self, k: int) -> float:
        return float(self.delta[k - 1])

    @property
    def total_bounds(self) -> tuple[float, float]:
        return self.partial_sum, self.partial_sum + self.tail_bound


def delta_sequence(model: ModelSpec, k_max: int = K_MAX) -> DeltaSeq:
    """delta_k for k <= k_max and a verdict on sum k^-1 delta_k."""
    tau = model.control.tau
    if tau is None:
        raise NormalizerError("delta_k needs a finite positive lim E(k)/k")
    k = np.arange(1, k_max + 1, dtype=float)
    delta = tau - np.asarray(model.control.mean(k.astype(np.int64)), dtype=float) / k
    partial = float(np.sum(delta / k))
    tail = float(model.control.delta_tail(k_max))
    verdict = Verdict.HOLDS if math.isfinite(tail) else Verdict.INCONCLUSIVE
    return DeltaSeq(delta, partial, tail, verdict)


@dataclass
class WStats:
    mean_w_by_gen: list[float]
    mean_w_ci: list[tuple[float, float]]
    var_w_by_gen: list[float]
    second_w_ci: list[tuple[float, float]]
    p_w_positive_by_gen: list[float]
    p_w_positive: float
    p_w_positive_ci: tuple[float, float]
    exploded: int

    def to_dict(self):
        def clean(x):
            return None if x is None or not math.isfinite(x) else x

        return {"mean_w_by_gen": [clean(x) for x in self.mean_w_by_gen],
                "mean_w_ci": [[clean(a), clean(b)] for a, b in self.mean_w_ci],
                "var_w_by_gen": [clean(x) for x in self.var_w_by_gen],
                "second_w_ci": [[clean(a), clean(b)] for a, b in self.second_w_ci],
                "p_w_positive_by_gen": self.p_w_positive_by_gen,
                "p_w_positive": self.p_w_positive, "p_w_positive_ci": list(self.p_w_positive_ci),
                "exploded": self.exploded}


def w_statistics(report: MCReport, normalizer: Normalizer) -> WStats:
    """Per-generation mean and variance of W_n, and P(W_H > 0).

    Also stores W_H for every non-exploded path in
    ``report.w_samples_at_horizon``.
    """
    if report.horizon != normalizer.horizon:
        raise ValueError(f"report horizon {report.horizon} does not match normalizer horizon {normalizer.horizon}")
    scale = normalizer.inv_r
    mean = np.asarray(report.mean_z, dtype=float) * scale
    var = np.asarray(report.var_z, dtype=float) * scale**2
    z95 = 1.959963984540054
    half = z95 * np.sqrt(var / report.replications)
    mean2 = np.asarray(report.mean_z2, dtype=float) * scale**2
    half2 = z95 * np.sqrt(np.asarray(report.var_z2, dtype=float) / report.replications) * scale**2
    final = np.asarray(report.final_z)
    w = normalizer.w(final, report.horizon)
    report.w_samples_at_horizon = w[final != EXPLODED].tolist()
    positive = int(np.count_nonzero(final != 0))
    alive = 1.0 - np.asarray(report.extinct_by_gen)
    return WStats(mean.tolist(), list(zip((mean - half).tolist(), (mean + half).tolist())), var.tolist(),
                  list(zip((mean2 - half2).tolist(), (mean2 + half2).tolist())), alive.tolist(),
                  positive / report.replications, wilson_interval(positive, report.replications),
                  int(np.count_nonzero(final == EXPLODED)))


def w_histogram(samples, bins: int = 40) -> dict:
    """Histogram of the positive W samples on a fixed number of equal bins."""
    w = np.asarray(samples, dtype=float)
    pos = w[w > 0]
    out = {"total": int(w.size), "zeros": int(np.count_nonzero(w == 0)), "positive": int(pos.size)}
    if pos.size:
        counts, edges = np.histogram(pos, bins=bins)
        out.update({"edges": edges.tolist(), "counts": counts.tolist()})
    else:
        out.update({"edges": [], "counts": []})
    return out


@dataclass
class SupermartingaleResult:
    intervals: list[tuple[float, float]]
    points: list[float]
    non_increasing: bool
    leaked: float

    @property
    def terminal(self) -> float:
        return self.points[-1]


def _check_ratio_below_tau(model):
    _, r_sup = model.control.ratio_bounds(1)
    tau = model.control.tau
    if tau is None:
        raise NormalizerError("the normalization needs a finite positive lim E(k)/k")
    if r_sup > tau * (1 + 1e-12):
        raise ValueError("E(k)/k exceeds its limit for some k; W_n need not be a supermartingale")


def _mean_w(model, pmfs, state_cap):
    norm = build_normalizer(model, len(pmfs) - 1)
    r = norm.r
    return [(lo / r[n], hi / r[n]) for n, ((lo, hi), _) in enumerate(exact_moments(pmfs, state_cap))]


def supermartingale_check(model: ModelSpec, horizon: int, eps: float = 1e-12,
                          state_cap: int = DEFAULT_STATE_CAP) -> SupermartingaleResult:
    """E[W_n] for n <= horizon from the exact engine, with a monotonicity check.

    Raises :class:`InvariantError` if the intervals show an increase.
    """
    _check_ratio_below_tau(model)
    pmfs = propagate(model, horizon, eps, state_cap=state_cap)
    ints = _mean_w(model, pmfs, state_cap)
    ok = all(ints[n + 1][0] <= ints[n][1] * (1 + 1e-12) for n in range(horizon))
    if not ok:
        raise InvariantError("exact E[W_n] increases although E(k)/k never exceeds tau")
    return SupermartingaleResult(ints, [lo for lo, _ in ints], ok, pmfs[-1].leaked)


def prop1_profile(model: ModelSpec, horizon: int, sizes=PROFILE_SIZES, eps: float = 1e-12,
                  state_cap: int = DEFAULT_STATE_CAP) -> list[dict]:
    """Terminal E[W_H] / N and the extinction bracket at H for each initial size N.

    Sizes whose exact propagation exceeds the state cap are reported as such.
    """
    _check_ratio_below_tau(model)
    rows = []
    for N in sizes:
        m = model.with_initial(int(N))
        try:
            pmfs = propagate(m, horizon, eps, state_cap=state_cap)
        except BudgetError:
            rows.append({"N": int(N), "status": "budget exceeded"})
            continue
        lo, hi = _mean_w(m, pmfs, state_cap)[-1]
        rows.append({"N": int(N), "status": "ok", "E_W_H_per_N": [float(lo) / N, float(hi) / N],
                     "q_H": list(extinction_bounds(pmfs)[-1])})
    return rows


@dataclass
class RecursionRow:
    n: int
    direct: tuple[float, float]
    recursive: float
    rel_err: float


@dataclass
class SecondMomentResult:
    rows: list[RecursionRow]
    non_decreasing: bool
    bounded: bool
    increment_ratio: float | None

    @property
    def max_rel_err(self) -> float:
        return max((r.rel_err for r in self.rows[1:]), default=0.0)


def second_moment_recursion(model: ModelSpec, horizon: int, eps: float = 1e-12,
                            state_cap: int = DEFAULT_STATE_CAP) -> SecondMomentResult:
    """E[W_n^2] computed directly and through the one-step recursion.

    The direct value sums k^2 P(Z_n = k) / r_n^2.  The recursive value uses
    only the law of Z_{n-1} and the closed-form moments of the control and
    offspring laws.
    """
    norm = build_normalizer(model, horizon)
    pmfs = propagate(model, horizon, eps, state_cap=state_cap)
    moments = exact_moments(pmfs, state_cap)
    tau, ir = norm.tau, norm.inv_r
    ctrl = model.control
    rows = [RecursionRow(0, moments[0][1], float(model.initial) ** 2, 0.0)]
    for n in range(horizon):
        p = pmfs[n].mass
        k = np.arange(1, p.size)
        pk = p[1:]
        w2 = (k * ir[n]) ** 2
        e = np.asarray(ctrl.mean(k), dtype=float)
        t2 = np.asarray(ctrl.var(k), dtype=float)
        d = tau - e / k
        sigma2 = model.offspring.var(n)
        prev = float(np.dot(pk, w2))
        corr = float(np.dot(pk, w2 * (t2 / k.astype(float) ** 2 + d * d - 2 * tau * d))) / tau**2
        noise = sigma2 * float(np.dot(pk, e)) * ir[n + 1] ** 2
        if p[0] > 0 and not ctrl.zero_absorbing():
            m = model.offspring.mean(n)
            e0, t0 = float(ctrl.mean(0)), float(ctrl.var(0))
            noise += p[0] * (m * m * (t0 + e0 * e0) + sigma2 * e0) * ir[n + 1] ** 2
        rec = prev + corr + noise
        lo, hi = moments[n + 1][1]
        direct = (lo * ir[n + 1] ** 2, hi * ir[n + 1] ** 2)
        rel = abs(direct[0] - rec) / max(abs(direct[0]), 1e-300)
        rows.append(RecursionRow(n + 1, direct, rec, rel))
    pts = np.array([r.direct[0] for r in rows])
    inc = np.diff(pts)
    non_decreasing = bool(np.all(inc >= -1e-12 * np.abs(pts[1:])))
    ratio = None
    bounded = bool(np.all(np.isfinite(pts)))
    if inc.size >= 3 and inc[-2] > 0:
        ratio = float(inc[-1] / inc[-2])
        bounded = bounded and ratio < 1.0
    return SecondMomentResult(rows, non_decreasing, bounded, ratio)


def check_thm6_hypotheses(model: ModelSpec, k_max: int = K_MAX, n_max: int = N_MAX) -> ConditionReport:
    ctrl = model.control
    km = _k_method(model)
    eta = find_eta(model)
    tau = ctrl.tau
    hyps = [
        Hypothesis("uniformly supercritical (eta > 1)", _decide(eta is not None),
                   LimitEvidence(eta if eta is not None else math.nan, km, "k>=1, n->inf")),
        Hypothesis("tau = lim E(k)/k in (0, inf)", _decide(tau is not None),
                   LimitEvidence(ctrl.ratio_limit, km, "k->inf")),
    ]
    diag = {"tau": tau, "eta": eta}
    if tau is None:
        hyps.append(Hypothesis("(i) delta_k non-increasing, sum delta_k/k < inf", Verdict.INCONCLUSIVE,
                               LimitEvidence(math.nan, km, "", False)))
    else:
        ds = delta_sequence(model, k_max)
        mono = bool(ctrl.ratio_monotone)
        ok = mono and ds.summability is Verdict.HOLDS
        verdict = Verdict.HOLDS if ok else (Verdict.FAILS if not mono else Verdict.INCONCLUSIVE)
        hyps.append(Hypothesis("(i) delta_k non-increasing, sum delta_k/k < inf", verdict,
                               LimitEvidence(ds.total_bounds[1], km, f"k=1..{k_max} + tail bound")))
        diag["delta_sum"] = list(ds.total_bounds)
    k = np.arange(1, k_max + 1)
    partial = float(np.sum(np.asarray(ctrl.var(k), dtype=float) / k.astype(float) ** 3))
    tail = float(ctrl.var3_tail(k_max))
    mono2 = bool(ctrl.var2_nonincreasing(1))
    if not math.isfinite(tail):
        v2 = Verdict.FAILS
    else:
        v2 = Verdict.HOLDS if mono2 else Verdict.FAILS
    hyps.append(Hypothesis("(ii) tau^2(k)/k^2 non-increasing, sum tau^2(k)/k^3 < inf", v2,
                           LimitEvidence(partial + tail, km, f"k=1..{k_max} + tail bound")))
    if eta is None:
        hyps.append(Hypothesis("(iii) sum sigma_n^2/(m_n^2 eta^n) < inf", Verdict.INCONCLUSIVE,
                               LimitEvidence(math.nan, conclusive=False)))
    else:
        lo, hi, conv = weighted_series(model.offspring, stat_var_over_mean_sq, eta, n_max)
        hyps.append(Hypothesis("(iii) sum sigma_n^2/(m_n^2 eta^n) < inf",
                               Verdict.INCONCLUSIVE if conv is None else _decide(conv),
                               LimitEvidence(hi, "closed-form", f"n=0..{n_max} + geometric tail", conv is not None)))
    if tau is not None:
        diag["first_index_tau_m_ge_eta"] = build_normalizer(model, n_max).first_index
    return _finish(ConditionReport("theorem6", hyps, diagnostics=diag), W_CONVERGES)
