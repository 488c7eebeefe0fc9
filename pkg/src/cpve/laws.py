"""Probability laws on the non-negative integers.

Every law is an immutable value object exposing its pmf, closed-form
moments, pgf, a sampler and a prefix truncation used by the exact engine.
Truncated pmfs are never renormalized: the missing tail mass is returned
alongside the finite pmf so that callers can carry it as an error term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import stats

PMF_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when a law, schedule, control or model is malformed."""


def _check_s(s):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise ValueError(f"pgf argument must lie in [0, 1], got {s!r}")
    return arr


@dataclass(frozen=True)
class IntegerLaw:
    """Base class; concrete kinds are the subclasses below."""

    kind: ClassVar[str] = ""

    # --- interface -------------------------------------------------------
    def pmf(self, j):
        raise NotImplementedError

    def moments(self) -> tuple[float, float, float]:
        """Return ``(mean, variance, second raw moment)``."""
        raise NotImplementedError

    def pgf(self, s):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def sum_sample(self, t, rng: np.random.Generator) -> np.ndarray:
        """Draw ``sum_{i<t} X_i`` for every entry of the count array ``t``.

        Uses the closed-form convolution of the law, so one draw per entry.
        """
        raise NotImplementedError

    @property
    def support_max(self) -> int | None:
        """Largest support point, or ``None`` for unbounded support."""
        return None

    def tail(self, j: int) -> float:
        """P(X > j)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # --- shared ----------------------------------------------------------
    @property
    def mean(self) -> float:
        return self.moments()[0]

    @property
    def var(self) -> float:
        return self.moments()[1]

    def sum_sample_direct(self, t, rng: np.random.Generator) -> np.ndarray:
        """Reference path for :meth:`sum_sample`: draw every summand."""
        t = np.asarray(t, dtype=np.int64)
        out = np.zeros(t.shape, dtype=np.int64)
        for idx, n in np.ndenumerate(t):
            if n > 0:
                out[idx] = int(np.sum(self.sample(rng, size=int(n)), dtype=np.int64))
        return out

    def truncate(self, eps: float) -> tuple[np.ndarray, float]:
        """Smallest prefix ``{0..J}`` whose complement has mass <= eps.

        Returns the dense pmf over ``0..J`` and the leaked tail mass.
        Finite-support laws are returned whole with zero leak.
        """
        if not eps >= 0:
            raise ValueError("eps must be >= 0")
        top = self.support_max
        if top is not None:
            return self.pmf(np.arange(top + 1)), 0.0
        if eps == 0:
            raise ValueError("eps = 0 is only possible for finite-support laws")
        j = self._tail_index(eps)
        return self.pmf(np.arange(j + 1)), float(self.tail(j))

    def _tail_index(self, eps: float) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Tabulated(IntegerLaw):
    """Explicit pmf given as ``((value, probability), ...)``."""

    table: tuple[tuple[int, float], ...]
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        merged: dict[int, float] = {}
        for v, p in self.table:
            v = int(v)
            p = float(p)
            if v < 0:
                raise ValidationError(f"tabulated law has negative value {v}")
            if p < 0 or math.isnan(p):
                raise ValidationError(f"tabulated law has invalid probability {p} at {v}")
            merged[v] = merged.get(v, 0.0) + p
        total = math.fsum(merged.values())
        if abs(total - 1.0) > PMF_TOL:
            raise ValidationError(f"tabulated law probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "table", tuple(sorted(merged.items())))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Tabulated":
        return cls(tuple((int(k), float(v)) for k, v in mapping.items()))

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.table], dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.table], dtype=float)

    @property
    def support_max(self) -> int:
        return int(self.table[-1][0])

    def dense(self) -> np.ndarray:
        out = np.zeros(self.support_max + 1)
        out[self.values] = self.probs
        return out

    def pmf(self, j):
        dense = self.dense()
        j = np.asarray(j)
        inside = (j >= 0) & (j < dense.size)
        res = np.where(inside, dense[np.clip(j, 0, dense.size - 1)], 0.0)
        return float(res) if res.ndim == 0 else res

    def tail(self, j):
        return float(sum(p for v, p in self.table if v > j))

    def moments(self):
        v = self.values.astype(float)
        p = self.probs
        mean = float(np.dot(v, p))
        second = float(np.dot(v * v, p))
        return mean, max(second - mean * mean, 0.0), second

    def pgf(self, s):
        s = _check_s(s)
        res = sum(p * s**v for v, p in self.table)
        return float(res) if np.ndim(res) == 0 else res

    def sample(self, rng, size=None):
        return rng.choice(self.values, size=size, p=self.probs)

    def sum_sample(self, t, rng):
        t = np.asarray(t, dtype=np.int64)
        if len(self.table) == 1:
            return t * self.table[0][0]
        counts = rng.multinomial(t, self.probs)
        return counts @ self.values

    def to_dict(self):
        return {"kind": self.kind, "values": [v for v, _ in self.table],
                "probs": [p for _, p in self.table]}


@dataclass(frozen=True)
class Geometric(IntegerLaw):
    """P(X = j) = (1 - alpha) * alpha**j for j >= 0; mean alpha / (1 - alpha)."""

    alpha: float
    kind: ClassVar[str] = "geometric"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"geometric alpha must lie in (0, 1), got {self.alpha!r}")

    def pmf(self, j):
        j = np.asarray(j)
        res = np.where(j >= 0, (1 - self.alpha) * self.alpha ** np.maximum(j, 0), 0.0)
        return float(res) if res.ndim == 0 else res

    def tail(self, j):
        return float(self.alpha ** (j + 1)) if j >= 0 else 1.0

    def _tail_index(self, eps):
        j = max(int(math.ceil(math.log(eps) / math.log(self.alpha))) - 1, 0)
        while j > 0 and self.tail(j - 1) <= eps:
            j -= 1
        while self.tail(j) > eps:
            j += 1
        return j

    def moments(self):
        a = self.alpha
        mean = a / (1 - a)
        var = a / (1 - a) ** 2
        return mean, var, var + mean * mean

    def pgf(self, s):
        s = _check_s(s)
        res = (1 - self.alpha) / (1 - self.alpha * s)
        return float(res) if res.ndim == 0 else res

    def sample(self, rng, size=None):
        return rng.geometric(1 - self.alpha, size=size) - 1

    def sum_sample(self, t, rng):
        t = np.asarray(t, dtype=np.int64)
        out = np.zeros(t.shape, dtype=np.int64)
        live = t > 0
        if np.any(live):
            out[live] = rng.negative_binomial(t[live], 1 - self.alpha)
        return out

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class Poisson(IntegerLaw):
    lam: float
    kind: ClassVar[str] = "poisson"

    def __post_init__(self):
        if not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise ValidationError(f"poisson mean must be finite and >= 0, got {self.lam!r}")

    @property
    def support_max(self):
        return 0 if self.lam == 0 else None

    def pmf(self, j):
        res = stats.poisson.pmf(j, self.lam)
        return float(res) if np.ndim(res) == 0 else res

    def tail(self, j):
        return float(stats.poisson.sf(j, self.lam))

    def _tail_index(self, eps):
        j = stats.poisson.isf(eps, self.lam)
        # isf returns nan below its working precision; start the search at the mean instead
        j = max(int(j), 0) if math.isfinite(j) else int(self.lam)
        while j > 0 and self.tail(j - 1) <= eps:
            j -= 1
        while self.tail(j) > eps:
            j += 1
        return j

    def moments(self):
        return self.lam, self.lam, self.lam + self.lam**2

    def pgf(self, s):
        s = _check_s(s)
        res = np.exp(self.lam * (s - 1.0))
        return float(res) if res.ndim == 0 else res

    def sample(self, rng, size=None):
        return rng.poisson(self.lam, size=size)

    def sum_sample(self, t, rng):
        t = np.asarray(t, dtype=np.int64)
        return rng.poisson(self.lam * t)

    def to_dict(self):
        return {"kind": self.kind, "mean": self.lam}


@dataclass(frozen=True)
class Binomial(IntegerLaw):
    trials: int
    p: float
    kind: ClassVar[str] = "binomial"

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 0:
            raise ValidationError(f"binomial trials must be a non-negative integer, got {self.trials!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"binomial p must lie in [0, 1], got {self.p!r}")
        object.__setattr__(self, "trials", int(self.trials))

    @property
    def support_max(self):
        return self.trials

    def pmf(self, j):
        res = stats.binom.pmf(j, self.trials, self.p)
        return float(res) if np.ndim(res) == 0 else res

    def tail(self, j):
        return float(stats.binom.sf(j, self.trials, self.p))

    def moments(self):
        mean = self.trials * self.p
        var = mean * (1 - self.p)
        return mean, var, var + mean * mean

    def pgf(self, s):
        s = _check_s(s)
        res = (1 - self.p + self.p * s) ** self.trials
        return float(res) if np.ndim(res) == 0 else res

    def sample(self, rng, size=None):
        return rng.binomial(self.trials, self.p, size=size)

    def sum_sample(self, t, rng):
        t = np.asarray(t, dtype=np.int64)
        return rng.binomial(self.trials * t, self.p)

    def to_dict(self):
        return {"kind": self.kind, "trials": self.trials, "p": self.p}


@dataclass(frozen=True)
class Deterministic(IntegerLaw):
    value: int
    kind: ClassVar[str] = "deterministic"

    def __post_init__(self):
        if int(self.value) != self.value or self.value < 0:
            raise ValidationError(f"deterministic value must be a non-negative integer, got {self.value!r}")
        object.__setattr__(self, "value", int(self.value))

    @property
    def support_max(self):
        return self.value

    def pmf(self, j):
        res = np.where(np.asarray(j) == self.value, 1.0, 0.0)
        return float(res) if res.ndim == 0 else res

    def tail(self, j):
        return 1.0 if self.value > j else 0.0

    def moments(self):
        return float(self.value), 0.0, float(self.value) ** 2

    def pgf(self, s):
        s = _check_s(s)
        res = s**self.value
        return float(res) if np.ndim(res) == 0 else res

    def sample(self, rng, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value, dtype=np.int64)

    def sum_sample(self, t, rng):
        return np.asarray(t, dtype=np.int64) * self.value

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


LAW_KINDS = {cls.kind: cls for cls in (Tabulated, Geometric, Poisson, Binomial, Deterministic)}


def law_from_dict(d: dict) -> IntegerLaw:
    kind = d.get("kind")
    if kind == "tabulated":
        values, probs = d["values"], d["probs"]
        if len(values) != len(probs):
            raise ValidationError("tabulated law needs equally long 'values' and 'probs'")
        return Tabulated(tuple(zip(values, probs)))
    if kind == "geometric":
        return Geometric(float(d["alpha"]))
    if kind == "poisson":
        return Poisson(float(d["mean"]))
    if kind == "binomial":
        return Binomial(d["trials"], float(d["p"]))
    if kind == "deterministic":
        return Deterministic(d["value"])
    raise ValidationError(f"unknown law kind {kind!r}; expected one of {sorted(LAW_KINDS)}")


# Functional aliases used throughout the docs and tests.

def law_pmf(law: IntegerLaw, j):
    return law.pmf(j)


def law_moments(law: IntegerLaw):
    return law.moments()


def law_pgf(law: IntegerLaw, s):
    return law.pgf(s)


def law_sample(law: IntegerLaw, rng: np.random.Generator, size=None):
    return law.sample(rng, size=size)


def law_truncate(law: IntegerLaw, eps: float):
    return law.truncate(eps)
