"""Size-indexed control families ``k -> law of phi(k)``.

The law of ``phi_n(k)`` does not depend on ``n``.  Each family exposes its
moments, pgf, a vectorized sampler, the law of ``phi(Z)`` for a dense law of
``Z`` (used by the exact engine) and closed forms for the k-asymptotics the
extinction and growth criteria need:

* ``ratio_bounds(k_from)``     -- inf/sup of E(k)/k over k >= k_from
* ``ratio_limit``              -- lim E(k)/k (tau when positive)
* ``var_ratio_sup(k_from)``    -- sup of tau^2(k)/k
* ``second_ratio_sup(k_from)`` -- sup of d^2(k)/k^2
* ``gamma_inf(u, k_from)``     -- inf of g_k(u) over k >= k_from
* ``delta_tail(k_max)``, ``var3_tail(k_max)`` -- bounds on the tails of
  sum k^-1 delta_k and sum k^-3 tau^2(k) beyond ``k_max``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from . import pmfops
from .laws import (Binomial, Deterministic, IntegerLaw, Poisson, Tabulated,
                   ValidationError, law_from_dict)


class ControlFamily:
    kind: ClassVar[str] = ""

    def law(self, k: int) -> IntegerLaw:
        raise NotImplementedError

    def mean(self, k):
        """E(k) = E[phi(k)], vectorized over k."""
        raise NotImplementedError

    def var(self, k):
        """tau^2(k) = Var[phi(k)], vectorized over k."""
        raise NotImplementedError

    def second(self, k):
        """d^2(k) = E[phi(k)^2]."""
        return self.var(k) + self.mean(k) ** 2

    def pgf(self, k: int, u):
        """g_k(u) = E[u^phi(k)]."""
        return self.law(int(k)).pgf(u)

    def sample(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def progenitor_pmf(self, pz: np.ndarray, eps: float, max_len: int) -> tuple[np.ndarray, float]:
        """Dense law of phi(Z) for Z ~ pz, and the mass lost to truncation."""
        raise NotImplementedError

    # asymptotics
    ratio_limit: float
    ratio_monotone: bool = True

    def ratio_bounds(self, k_from: int = 1) -> tuple[float, float]:
        raise NotImplementedError

    def var_ratio_sup(self, k_from: int = 1) -> float:
        raise NotImplementedError

    def second_ratio_sup(self, k_from: int = 1) -> float:
        raise NotImplementedError

    def var2_nonincreasing(self, k_from: int = 1) -> bool:
        raise NotImplementedError

    def gamma_inf(self, u: float, k_from: int = 1) -> float:
        raise NotImplementedError

    def delta_tail(self, k_max: int) -> float:
        return 0.0

    def var3_tail(self, k_max: int) -> float:
        raise NotImplementedError

    @property
    def tau(self) -> float | None:
        """lim E(k)/k when it is positive and finite, else None."""
        t = self.ratio_limit
        return t if 0 < t < math.inf else None

    def zero_absorbing(self) -> bool:
        return self.law(0).pmf(0) == 1.0

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(ControlFamily):
    """phi(k) = k: no control, the plain varying-environment process."""

    kind: ClassVar[str] = "identity"
    ratio_limit: ClassVar[float] = 1.0

    def law(self, k):
        return Deterministic(int(k))

    def mean(self, k):
        return np.asarray(k, dtype=float)

    def var(self, k):
        return np.zeros_like(np.asarray(k, dtype=float))

    def pgf(self, k, u):
        return float(u) ** int(k)

    def sample(self, z, rng):
        return np.asarray(z, dtype=np.int64).copy()

    def progenitor_pmf(self, pz, eps, max_len):
        return np.asarray(pz, dtype=float).copy(), 0.0

    def ratio_bounds(self, k_from=1):
        return 1.0, 1.0

    def var_ratio_sup(self, k_from=1):
        return 0.0

    def second_ratio_sup(self, k_from=1):
        return 1.0

    def var2_nonincreasing(self, k_from=1):
        return True

    def gamma_inf(self, u, k_from=1):
        return 1.0 if u >= 1.0 else 0.0

    def var3_tail(self, k_max):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class BinomialControl(ControlFamily):
    """phi(k) ~ Binomial(max(k - removed, 0), c).

    ``removed`` individuals are taken out before each of the rest survives
    independently with probability ``c``; ``removed = 0`` is plain thinning.
    """

    c: float
    removed: int = 0
    kind: ClassVar[str] = "binomial"

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValidationError(f"binomial control c must lie in [0, 1], got {self.c!r}")
        if int(self.removed) != self.removed or self.removed < 0:
            raise ValidationError(f"binomial control 'removed' must be a non-negative integer, got {self.removed!r}")
        object.__setattr__(self, "removed", int(self.removed))

    @property
    def ratio_limit(self):
        return self.c

    def _n(self, k):
        return np.maximum(np.asarray(k) - self.removed, 0)

    def law(self, k):
        return Binomial(int(self._n(k)), self.c)

    def mean(self, k):
        return self.c * self._n(k).astype(float)

    def var(self, k):
        return self.c * (1 - self.c) * self._n(k).astype(float)

    def pgf(self, k, u):
        return (1 - self.c + self.c * float(u)) ** int(self._n(k))

    def sample(self, z, rng):
        return rng.binomial(self._n(np.asarray(z, dtype=np.int64)), self.c)

    def progenitor_pmf(self, pz, eps, max_len):
        pz = np.asarray(pz, dtype=float)
        d = self.removed
        shifted = np.zeros(max(pz.size - d, 1))
        shifted[0] = pz[: d + 1].sum()
        if pz.size > d + 1:
            shifted[1:] = pz[d + 1:]
        return pmfops.compose(shifted, np.array([1 - self.c, self.c]), max_len), 0.0

    def ratio_bounds(self, k_from=1):
        lo = self.c * max(1.0 - self.removed / k_from, 0.0)
        return lo, self.c

    def var_ratio_sup(self, k_from=1):
        return self.c * (1 - self.c)

    def second_ratio_sup(self, k_from=1):
        c, d = self.c, self.removed
        if d == 0:
            return c * (1 - c) / k_from + c * c
        # on k > d: d^2(k)/k^2 = c^2 + (a k + b) / k^2, unimodal in k
        a = c * (1 - c) - 2 * c * c * d
        b = c * c * d * d - c * (1 - c) * d
        start = max(k_from, d + 1)
        cands = {start}
        if a != 0:
            crit = -2 * b / a
            for k in (math.floor(crit), math.ceil(crit)):
                if k >= start:
                    cands.add(int(k))
        vals = [float(self.second(k)) / k**2 for k in cands]
        return max(vals + [c * c])

    def var2_nonincreasing(self, k_from=1):
        d = self.removed
        return d == 0 or self.c * (1 - self.c) == 0 or k_from >= 2 * d

    def gamma_inf(self, u, k_from=1):
        return 1.0 if (u >= 1.0 or self.c == 0.0) else 0.0

    def delta_tail(self, k_max):
        # delta_k = c d / k for k > d
        return self.c * self.removed / k_max

    def var3_tail(self, k_max):
        return self.c * (1 - self.c) / k_max

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "removed": self.removed}


@dataclass(frozen=True)
class PoissonControl(ControlFamily):
    """phi(k) ~ Poisson(rate * k)."""

    rate: float
    kind: ClassVar[str] = "poisson"

    def __post_init__(self):
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ValidationError(f"poisson control rate must be finite and >= 0, got {self.rate!r}")

    @property
    def ratio_limit(self):
        return self.rate

    def law(self, k):
        return Poisson(self.rate * int(k))

    def mean(self, k):
        return self.rate * np.asarray(k, dtype=float)

    def var(self, k):
        return self.rate * np.asarray(k, dtype=float)

    def pgf(self, k, u):
        return math.exp(-self.rate * int(k) * (1.0 - float(u)))

    def sample(self, z, rng):
        return rng.poisson(self.rate * np.asarray(z, dtype=np.int64))

    def progenitor_pmf(self, pz, eps, max_len):
        unit, leak = Poisson(self.rate).truncate(eps)
        out = pmfops.compose(pz, unit, max_len)
        total = pmfops.composed_total(pz, unit.sum())
        return out, float(np.sum(pz)) - total

    def ratio_bounds(self, k_from=1):
        return self.rate, self.rate

    def var_ratio_sup(self, k_from=1):
        return self.rate

    def second_ratio_sup(self, k_from=1):
        return self.rate / k_from + self.rate**2

    def var2_nonincreasing(self, k_from=1):
        return True

    def gamma_inf(self, u, k_from=1):
        return 1.0 if (u >= 1.0 or self.rate == 0.0) else 0.0

    def var3_tail(self, k_max):
        return self.rate / k_max

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Capped(ControlFamily):
    """phi(k) = min(k, cap)."""

    cap: int
    kind: ClassVar[str] = "capped"
    ratio_limit: ClassVar[float] = 0.0
    ratio_monotone: ClassVar[bool] = False

    def __post_init__(self):
        if int(self.cap) != self.cap or self.cap < 1:
            raise ValidationError(f"capped control needs an integer cap >= 1, got {self.cap!r}")
        object.__setattr__(self, "cap", int(self.cap))

    def law(self, k):
        return Deterministic(min(int(k), self.cap))

    def mean(self, k):
        return np.minimum(np.asarray(k, dtype=float), self.cap)

    def var(self, k):
        return np.zeros_like(np.asarray(k, dtype=float))

    def pgf(self, k, u):
        return float(u) ** min(int(k), self.cap)

    def sample(self, z, rng):
        return np.minimum(np.asarray(z, dtype=np.int64), self.cap)

    def progenitor_pmf(self, pz, eps, max_len):
        pz = np.asarray(pz, dtype=float)
        if pz.size <= self.cap + 1:
            return pz.copy(), 0.0
        out = pz[: self.cap + 1].copy()
        out[self.cap] += pz[self.cap + 1:].sum()
        return out, 0.0

    def ratio_bounds(self, k_from=1):
        return 0.0, min(k_from, self.cap) / k_from

    def var_ratio_sup(self, k_from=1):
        return 0.0

    def second_ratio_sup(self, k_from=1):
        return (min(k_from, self.cap) / k_from) ** 2

    def var2_nonincreasing(self, k_from=1):
        return True

    def gamma_inf(self, u, k_from=1):
        return float(u) ** self.cap

    def delta_tail(self, k_max):
        return self.cap / k_max

    def var3_tail(self, k_max):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "cap": self.cap}


@dataclass(frozen=True)
class Multiplier(ControlFamily):
    """phi(k) = F * k for a finite-support random factor F.

    Gives E(k) = E[F] k and tau^2(k) = Var[F] k^2, i.e. all-or-nothing style
    catastrophes when F can be 0.
    """

    factor: IntegerLaw
    kind: ClassVar[str] = "multiplier"

    def __post_init__(self):
        if self.factor.support_max is None:
            raise ValidationError("multiplier control needs a finite-support factor law")

    @property
    def _fpmf(self):
        return self.factor.truncate(1.0)[0]

    @property
    def ratio_limit(self):
        return self.factor.moments()[0]

    def law(self, k):
        k = int(k)
        if k == 0:
            return Deterministic(0)
        p = self._fpmf
        return Tabulated(tuple((int(v) * k, float(p[v])) for v in np.nonzero(p)[0]))

    def mean(self, k):
        return self.factor.moments()[0] * np.asarray(k, dtype=float)

    def var(self, k):
        return self.factor.moments()[1] * np.asarray(k, dtype=float) ** 2

    def pgf(self, k, u):
        return self.factor.pgf(float(u) ** int(k))

    def sample(self, z, rng):
        z = np.asarray(z, dtype=np.int64)
        return np.asarray(self.factor.sample(rng, size=z.shape), dtype=np.int64) * z

    def progenitor_pmf(self, pz, eps, max_len):
        pz = np.asarray(pz, dtype=float)
        p = self._fpmf
        top = int(np.nonzero(p)[0].max()) * (pz.size - 1)
        out = np.zeros(min(top + 1, max_len) if top > 0 else 1)
        ks = np.arange(pz.size)
        for v in np.nonzero(p)[0]:
            idx = ks * int(v)
            keep = idx < out.size
            np.add.at(out, idx[keep], p[v] * pz[keep])
        return out, 0.0

    def ratio_bounds(self, k_from=1):
        m = self.factor.moments()[0]
        return m, m

    def var_ratio_sup(self, k_from=1):
        return math.inf if self.factor.moments()[1] > 0 else 0.0

    def second_ratio_sup(self, k_from=1):
        return self.factor.moments()[2]

    def var2_nonincreasing(self, k_from=1):
        return True

    def gamma_inf(self, u, k_from=1):
        return 1.0 if u >= 1.0 else float(self.factor.pmf(0))

    def var3_tail(self, k_max):
        return math.inf if self.factor.moments()[1] > 0 else 0.0

    def to_dict(self):
        return {"kind": self.kind, "factor": self.factor.to_dict()}


@dataclass(frozen=True)
class TabulatedControl(ControlFamily):
    """Explicit laws for k = 0..K followed by a parametric tail family."""

    table: tuple[IntegerLaw, ...]
    tail: ControlFamily
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        if len(self.table) == 0:
            raise ValidationError("tabulated control needs at least the law for k = 0")
        if isinstance(self.tail, TabulatedControl):
            raise ValidationError("tabulated control tail must be a parametric family")

    @property
    def K(self) -> int:
        return len(self.table) - 1

    @property
    def ratio_limit(self):
        return self.tail.ratio_limit

    @property
    def ratio_monotone(self):
        ks = np.arange(1, self.K + 2)
        r = np.array([self._mean1(k) for k in ks]) / ks
        return bool(np.all(np.diff(r) >= -1e-15)) and self.tail.ratio_monotone

    def law(self, k):
        k = int(k)
        return self.table[k] if k <= self.K else self.tail.law(k)

    def _mean1(self, k):
        return self.table[k].moments()[0] if k <= self.K else float(self.tail.mean(k))

    def _var1(self, k):
        return self.table[k].moments()[1] if k <= self.K else float(self.tail.var(k))

    def mean(self, k):
        k = np.asarray(k)
        out = np.asarray(self.tail.mean(k), dtype=float).copy()
        flat = out.reshape(-1)
        for i, kk in enumerate(np.asarray(k).reshape(-1)):
            if kk <= self.K:
                flat[i] = self.table[int(kk)].moments()[0]
        return out if out.ndim else float(out)

    def var(self, k):
        k = np.asarray(k)
        out = np.asarray(self.tail.var(k), dtype=float).copy()
        flat = out.reshape(-1)
        for i, kk in enumerate(np.asarray(k).reshape(-1)):
            if kk <= self.K:
                flat[i] = self.table[int(kk)].moments()[1]
        return out if out.ndim else float(out)

    def pgf(self, k, u):
        return self.law(k).pgf(u)

    def sample(self, z, rng):
        z = np.asarray(z, dtype=np.int64)
        out = np.zeros(z.shape, dtype=np.int64)
        big = z > self.K
        if np.any(big):
            out[big] = self.tail.sample(z[big], rng)
        for k in np.unique(z[~big]):
            sel = z == k
            out[sel] = self.table[int(k)].sample(rng, size=int(sel.sum()))
        return out

    def progenitor_pmf(self, pz, eps, max_len):
        pz = np.asarray(pz, dtype=float)
        head = pz[: self.K + 1]
        rest = pz.copy()
        rest[: self.K + 1] = 0.0
        out, leak = self.tail.progenitor_pmf(rest, eps, max_len)
        out = out.copy()
        for k, w in enumerate(head):
            if w == 0:
                continue
            p, lk = self.table[k].truncate(eps)
            p = p[:max_len]
            if p.size > out.size:
                out = np.concatenate([out, np.zeros(p.size - out.size)])
            out[: p.size] += w * p
            leak += w * lk
        return out, leak

    def _head(self, k_from):
        return range(k_from, self.K + 1)

    def ratio_bounds(self, k_from=1):
        vals = [self._mean1(k) / k for k in self._head(k_from)]
        lo, hi = self.tail.ratio_bounds(max(k_from, self.K + 1))
        return min(vals + [lo]), max(vals + [hi])

    def var_ratio_sup(self, k_from=1):
        vals = [self._var1(k) / k for k in self._head(k_from)]
        return max(vals + [self.tail.var_ratio_sup(max(k_from, self.K + 1))])

    def second_ratio_sup(self, k_from=1):
        vals = [self.table[k].moments()[2] / k**2 for k in self._head(k_from)]
        return max(vals + [self.tail.second_ratio_sup(max(k_from, self.K + 1))])

    def var2_nonincreasing(self, k_from=1):
        ks = np.arange(k_from, self.K + 2)
        r = np.array([self._var1(k) for k in ks]) / ks.astype(float) ** 2
        head_ok = bool(np.all(np.diff(r) <= 1e-15))
        return head_ok and self.tail.var2_nonincreasing(max(k_from, self.K + 1))

    def gamma_inf(self, u, k_from=1):
        vals = [self.table[k].pgf(u) for k in self._head(k_from)]
        return min(vals + [self.tail.gamma_inf(u, max(k_from, self.K + 1))])

    def delta_tail(self, k_max):
        if k_max <= self.K:
            raise ValueError("probe bound must exceed the tabulated range")
        return self.tail.delta_tail(k_max)

    def var3_tail(self, k_max):
        if k_max <= self.K:
            raise ValueError("probe bound must exceed the tabulated range")
        return self.tail.var3_tail(k_max)

    def to_dict(self):
        return {"kind": self.kind, "table": [law.to_dict() for law in self.table],
                "tail": self.tail.to_dict()}


def control_from_dict(d: dict) -> ControlFamily:
    kind = d.get("kind")
    if kind == "identity":
        return Identity()
    if kind == "binomial":
        return BinomialControl(float(d["c"]), d.get("removed", 0))
    if kind == "poisson":
        return PoissonControl(float(d["rate"]))
    if kind == "capped":
        return Capped(d["cap"])
    if kind == "multiplier":
        return Multiplier(law_from_dict(d["factor"]))
    if kind == "tabulated":
        return TabulatedControl(tuple(law_from_dict(x) for x in d["table"]),
                                control_from_dict(d["tail"]))
    raise ValidationError(f"unknown control kind {kind!r}")
