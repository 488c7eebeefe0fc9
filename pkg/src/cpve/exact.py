"""Exact propagation of the law of Z_n with explicit truncation accounting.

The law of ``Z_{n+1}`` is obtained as the pgf composition
``P_{T_n}(f_n(s))`` where ``T_n = phi_n(Z_n)`` is the progenitor count.
Each generation gets a budget of ``eps / horizon``, split three ways between
the control laws, the offspring laws and a final trim of the law of Z.  Laws
with unbounded support are cut per progenitor, scaled by the mean count.  Nothing is
renormalized: every dropped piece of mass is added to ``leaked``, so

    mass[0]  <=  P(Z_n = 0)  <=  mass[0] + leaked + escaped * escape_bound.

``escaped`` is only non-zero when ``absorb_above`` is given: mass that moves
above that size is frozen instead of tracked, and :func:`escape_bound`
bounds the chance that such a path later dies out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pmfops
from .model import ModelSpec
from .schedule import stat_mean, stat_var

DEFAULT_STATE_CAP = 10**6


class BudgetError(RuntimeError):
    """Support outgrew the configured state cap."""


@dataclass(frozen=True)
class TruncatedPMF:
    mass: np.ndarray
    leaked: float
    generation: int
    escaped: float = 0.0
    escape_bound: float = 1.0

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def to_dict(self) -> dict:
        return {"generation": self.generation, "leaked": self.leaked, "escaped": self.escaped,
                "escape_bound": self.escape_bound, "mass": self.mass.tolist()}


def growth_failure_bound(model: ModelSpec, size: int, grid: int = 200) -> float:
    """Upper bound on P(Z ever hits 0 | Z reached ``size`` at some generation).

    Chebyshev on one step: with ``eta_u = inf_n m_n * inf_k E(k)/k > 1``,
    ``P(Z_{n+1} <= (eta_u - d) k | Z_n = k) <= C / (d^2 k)`` where
    ``C = sup m_n^2 * sup tau^2(k)/k + sup sigma_n^2 * sup E(k)/k``.
    Summing along geometric growth gives ``C / (d^2 size (1 - 1/(eta_u - d)))``,
    minimised over ``d``.  Returns 1 when the model is not uniformly
    supercritical from generation 0.
    """
    ctrl, sched = model.control, model.offspring
    r_lo, r_hi = ctrl.ratio_bounds(1)
    b = ctrl.var_ratio_sup(1)
    m_lo, m_hi = sched.bounds(stat_mean)
    _, s2_hi = sched.bounds(stat_var)
    eta_u = m_lo * r_lo
    if size < 1 or eta_u <= 1.0 or not all(map(math.isfinite, (r_hi, b, m_hi, s2_hi))):
        return 1.0
    C = m_hi**2 * b + s2_hi * r_hi
    if C == 0.0:
        return 0.0
    d = np.linspace(0, eta_u - 1.0, grid + 2)[1:-1]
    vals = C / (d**2 * size * (1.0 - 1.0 / (eta_u - d)))
    return float(min(1.0, vals.min()))


def _step(model: ModelSpec, n: int, pz: np.ndarray, eps: float, max_len: int):
    """Law of Z_{n+1} from the (sub-probability) law ``pz`` of Z_n.

    Returns ``(pmf below max_len, leaked, beyond)`` where ``beyond`` is the
    mass of states >= max_len.
    """
    pz = np.asarray(pz, dtype=float)
    # per-unit tolerances scaled so each truncation loses at most eps / 3 in total
    # (1 - (1 - l)^k <= k l)
    mean_z = float(np.dot(np.arange(pz.size), pz))
    pt, leak = model.control.progenitor_pmf(pz, eps / (3 * max(1.0, mean_z)), max_len)
    # differences of sums are rounding noise unless a cut actually happened
    t_beyond = 0.0
    if pt.size >= max_len:
        t_beyond = max(float(pz.sum()) - leak - float(pt.sum()), 0.0)
    mean_t = float(np.dot(np.arange(pt.size), pt))
    f, _ = model.offspring.law(n).truncate(eps / (3 * max(1.0, mean_t)))
    out = pmfops.compose(pt, f, max_len)
    composed = pmfops.composed_total(pt, float(f.sum()))
    leak += float(pt.sum()) - composed
    beyond = 0.0
    if (pt.size - 1) * (f.size - 1) + 1 > max_len:
        beyond = max(composed - float(out.sum()), 0.0)
    return out, max(leak, 0.0), beyond, t_beyond


def transition_row(model: ModelSpec, n: int, k: int, eps: float = 1e-12,
                   state_cap: int = DEFAULT_STATE_CAP) -> TruncatedPMF:
    """Law of Z_{n+1} given Z_n = k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if not eps >= 0:
        raise ValueError("eps must be >= 0")
    pz = np.zeros(k + 1)
    pz[k] = 1.0
    out, leak, beyond, t_beyond = _step(model, n, pz, eps, state_cap + 1)
    if beyond + t_beyond > eps:
        raise BudgetError(f"transition from k={k} needs more than {state_cap} states")
    out, trimmed = pmfops.trim(out, eps / 3)
    return TruncatedPMF(out, leak + beyond + t_beyond + trimmed, n + 1)


def propagate(model: ModelSpec, horizon: int, eps: float = 1e-12, *, state_cap: int = DEFAULT_STATE_CAP,
              absorb_above: int | None = None) -> list[TruncatedPMF]:
    """Laws of Z_0 .. Z_horizon.

    Without ``absorb_above`` a :class:`BudgetError` is raised as soon as the
    support would exceed ``state_cap``.  With it, states above the threshold
    are frozen into ``escaped``.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if not eps >= 0:
        raise ValueError("eps must be >= 0")
    if absorb_above is not None and absorb_above > state_cap:
        raise ValueError("absorb_above cannot exceed state_cap")
    N = model.initial
    limit = state_cap if absorb_above is None else absorb_above
    if N > limit:
        raise BudgetError(f"initial size {N} exceeds the state limit {limit}")
    bound = growth_failure_bound(model, absorb_above + 1) if absorb_above is not None else 1.0
    step_eps = eps / max(horizon, 1)
    p = np.zeros(N + 1)
    p[N] = 1.0
    pmfs = [TruncatedPMF(p, 0.0, 0, 0.0, bound)]
    leaked, escaped = 0.0, 0.0
    for n in range(horizon):
        out, leak, beyond, t_beyond = _step(model, n, pmfs[-1].mass, step_eps, limit + 1)
        if absorb_above is None:
            if beyond + t_beyond > step_eps:
                raise BudgetError(
                    f"generation {n + 1}: support exceeds state cap {state_cap}; raise eps or lower the horizon")
            leak += beyond + t_beyond
        else:
            # progenitor overflow is not growth, so it stays unaccounted-for mass
            leak += t_beyond
            escaped += beyond
        out, trimmed = pmfops.trim(out, step_eps / 3)
        leaked += leak + trimmed
        pmfs.append(TruncatedPMF(out, leaked, n + 1, escaped, bound))
    return pmfs


def extinction_bounds(pmfs: list[TruncatedPMF]) -> list[tuple[float, float]]:
    """Per-generation bracket ``(q_n_low, q_n_high)`` for P(Z_n = 0)."""
    out = []
    for p in pmfs:
        low = float(p.mass[0])
        high = min(1.0, low + p.leaked + p.escaped * p.escape_bound)
        out.append((low, high))
    return out


def exact_moments(pmfs: list[TruncatedPMF], state_cap: int = DEFAULT_STATE_CAP):
    """Per-generation ``((mean_low, mean_high), (second_low, second_high))``.

    Leaked mass is placed anywhere in ``[0, state_cap]``; escaped mass has no
    upper bound.
    """
    out = []
    for p in pmfs:
        k = np.arange(p.mass.size, dtype=float)
        m1 = float(np.dot(k, p.mass))
        m2 = float(np.dot(k * k, p.mass))
        if p.escaped > 0:
            out.append(((m1, math.inf), (m2, math.inf)))
        else:
            out.append(((m1, m1 + p.leaked * state_cap), (m2, m2 + p.leaked * float(state_cap) ** 2)))
    return out


def mean_point(pmf: TruncatedPMF) -> float:
    return float(np.dot(np.arange(pmf.mass.size, dtype=float), pmf.mass))
