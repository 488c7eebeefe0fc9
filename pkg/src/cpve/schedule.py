"""Generation-indexed offspring schedules.

A schedule maps every generation ``n >= 0`` to an :class:`IntegerLaw`.
Two shapes are supported:

* :class:`ExplicitSchedule` -- a finite list of laws followed by a tail law
  used for every later generation;
* :class:`ParametricSchedule` -- a geometric, Poisson or binomial family whose
  parameter follows a :class:`Convergent` or :class:`Periodic` sequence.

Both shapes admit exact liminf/limsup of any per-generation statistic, which
is what the asymptotic criteria need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .laws import (Binomial, Geometric, IntegerLaw, Poisson, ValidationError,
                   law_from_dict)

Stat = Callable[[IntegerLaw], float]


def stat_mean(law):
    return law.moments()[0]


def stat_var(law):
    return law.moments()[1]


def stat_second(law):
    return law.moments()[2]


def stat_p0(law):
    return float(law.pmf(0))


def stat_var_over_mean_sq(law):
    mean, var, _ = law.moments()
    return var / mean**2 if mean > 0 else math.inf


# --------------------------------------------------------------------------
# parameter sequences


@dataclass(frozen=True)
class Convergent:
    """theta_n = limit + offset * rate**n, monotone in n."""

    limit: float
    offset: float = 0.0
    rate: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValidationError(f"convergent sequence rate must lie in [0, 1), got {self.rate!r}")

    def __call__(self, n: int) -> float:
        return self.limit + self.offset * self.rate**n

    def closure(self, n_from: int = 0) -> tuple[float, float]:
        a, b = self(n_from), self.limit
        return min(a, b), max(a, b)

    def limit_points(self) -> tuple[float, ...]:
        return (self.limit,)

    def to_dict(self):
        return {"kind": "convergent", "limit": self.limit, "offset": self.offset, "rate": self.rate}


@dataclass(frozen=True)
class Periodic:
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValidationError("periodic sequence needs at least one value")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __call__(self, n: int) -> float:
        return self.values[n % len(self.values)]

    def closure(self, n_from: int = 0) -> tuple[float, float]:
        return min(self.values), max(self.values)

    def limit_points(self) -> tuple[float, ...]:
        return self.values

    def to_dict(self):
        return {"kind": "periodic", "values": list(self.values)}


def sequence_from_dict(d) -> Convergent | Periodic:
    if isinstance(d, (int, float)):
        return Convergent(float(d))
    kind = d.get("kind", "convergent")
    if kind == "constant":
        return Convergent(float(d["value"]))
    if kind == "convergent":
        return Convergent(float(d["limit"]), float(d.get("offset", 0.0)), float(d.get("rate", 0.5)))
    if kind == "periodic":
        return Periodic(tuple(d["values"]))
    raise ValidationError(f"unknown parameter sequence kind {kind!r}")


# --------------------------------------------------------------------------
# schedules


class OffspringSchedule:
    def law(self, n: int) -> IntegerLaw:
        raise NotImplementedError

    def mean(self, n: int) -> float:
        return self.law(n).moments()[0]

    def var(self, n: int) -> float:
        return self.law(n).moments()[1]

    def pgf(self, n: int, s):
        return self.law(n).pgf(s)

    def limits(self, stat: Stat) -> tuple[float, float]:
        """Exact ``(liminf, limsup)`` of ``stat(law(n))``."""
        raise NotImplementedError

    def bounds(self, stat: Stat, n_from: int = 0) -> tuple[float, float]:
        """Bounds ``(lo, hi)`` with ``lo <= stat(law(n)) <= hi`` for all n >= n_from."""
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExplicitSchedule(OffspringSchedule):
    laws: tuple[IntegerLaw, ...]
    tail: IntegerLaw

    def law(self, n):
        if n < 0:
            raise ValueError("generation index must be >= 0")
        return self.laws[n] if n < len(self.laws) else self.tail

    def limits(self, stat):
        v = stat(self.tail)
        return v, v

    def bounds(self, stat, n_from=0):
        vals = [stat(law) for law in self.laws[n_from:]] + [stat(self.tail)]
        return min(vals), max(vals)

    @property
    def is_constant(self):
        return all(law == self.tail for law in self.laws)

    def to_dict(self):
        if not self.laws:
            return {"schedule": "constant", "law": self.tail.to_dict()}
        return {"schedule": "explicit", "generations": [law.to_dict() for law in self.laws],
                "tail": self.tail.to_dict()}


def constant_schedule(law: IntegerLaw) -> ExplicitSchedule:
    return ExplicitSchedule((), law)


_FAMILIES = ("geometric", "poisson", "binomial")


@dataclass(frozen=True)
class ParametricSchedule(OffspringSchedule):
    """Family law whose parameter follows a bounded sequence.

    Every statistic used by the criteria is monotone in the family parameter,
    except the binomial variance which is concave with its maximum at 1/2;
    bounds over a parameter interval are therefore attained at the endpoints
    or at that interior point.
    """

    family: str
    param: Convergent | Periodic
    trials: int | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValidationError(f"parametric family must be one of {_FAMILIES}, got {self.family!r}")
        lo, hi = self.param.closure(0)
        if self.family == "geometric" and not (0.0 < lo and hi < 1.0):
            raise ValidationError(f"geometric alpha_n must stay inside (0, 1); range is [{lo}, {hi}]")
        if self.family == "poisson" and not (lo >= 0.0 and math.isfinite(hi)):
            raise ValidationError(f"poisson mean sequence must stay >= 0; range is [{lo}, {hi}]")
        if self.family == "binomial":
            if self.trials is None or int(self.trials) != self.trials or self.trials < 0:
                raise ValidationError("binomial schedule needs a non-negative integer 'trials'")
            if not (0.0 <= lo and hi <= 1.0):
                raise ValidationError(f"binomial p_n must stay inside [0, 1]; range is [{lo}, {hi}]")

    def _make(self, theta: float) -> IntegerLaw:
        if self.family == "geometric":
            return Geometric(theta)
        if self.family == "poisson":
            return Poisson(theta)
        return Binomial(self.trials, theta)

    def law(self, n):
        if n < 0:
            raise ValueError("generation index must be >= 0")
        return self._make(self.param(n))

    def limits(self, stat):
        vals = [stat(self._make(t)) for t in self.param.limit_points()]
        return min(vals), max(vals)

    def bounds(self, stat, n_from=0):
        if isinstance(self.param, Periodic):
            vals = [stat(self._make(t)) for t in self.param.values]
            return min(vals), max(vals)
        lo, hi = self.param.closure(n_from)
        points = [lo, hi]
        if self.family == "binomial" and lo < 0.5 < hi:
            points.append(0.5)
        vals = [stat(self._make(t)) for t in points]
        return min(vals), max(vals)

    @property
    def is_constant(self):
        if isinstance(self.param, Periodic):
            return len(set(self.param.values)) == 1
        return self.param.offset == 0.0

    def to_dict(self):
        d = {"schedule": "parametric", "family": self.family, "param": self.param.to_dict()}
        if self.trials is not None:
            d["trials"] = int(self.trials)
        return d


def schedule_from_dict(d: dict) -> OffspringSchedule:
    kind = d.get("schedule", "constant")
    if kind == "constant":
        return constant_schedule(law_from_dict(d["law"]))
    if kind == "explicit":
        return ExplicitSchedule(tuple(law_from_dict(x) for x in d.get("generations", [])),
                                law_from_dict(d["tail"]))
    if kind == "parametric":
        return ParametricSchedule(d["family"], sequence_from_dict(d["param"]), d.get("trials"))
    raise ValidationError(f"unknown offspring schedule {kind!r}")


def weighted_series(schedule: OffspringSchedule, stat: Stat, rho: float, n_max: int = 1000):
    """Bracket ``sum_{n>=0} stat(law(n)) / rho**n``.

    Returns ``(low, high, converges)`` where ``converges`` is True, False or
    None (undecided).  For rho > 1 the terms are bounded so the tail beyond
    ``n_max`` is bounded by a geometric series.
    """
    terms = np.array([stat(schedule.law(n)) for n in range(n_max + 1)], dtype=float)
    weights = np.power(float(rho), -np.arange(n_max + 1, dtype=float)) if rho > 0 else None
    if rho > 1.0:
        partial = float(np.dot(terms, weights))
        _, sup_tail = schedule.bounds(stat, n_max + 1)
        if not math.isfinite(sup_tail):
            return partial, math.inf, None
        tail = sup_tail * rho ** -(n_max + 1) / (1.0 - 1.0 / rho)
        return partial, partial + max(tail, 0.0), True
    liminf, _ = schedule.limits(stat)
    if liminf > 0:
        return math.inf, math.inf, False
    _, sup_tail = schedule.bounds(stat, n_max + 1)
    if sup_tail == 0.0 and rho > 0:
        partial = float(np.dot(terms, weights))
        return partial, partial, True
    return math.nan, math.inf, None
