"""Dense pmf arithmetic on ``0..n`` arrays: convolution, powers, composition.

All routines keep only coefficients below ``max_len`` and never renormalize.
FFT round-off is clipped at zero.
"""

from __future__ import annotations

import numpy as np
from scipy import signal


def _clip(p: np.ndarray) -> np.ndarray:
    return np.maximum(p, 0.0, out=p)


def trim(p: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    """Drop the longest upper tail whose mass is <= eps; return (pmf, dropped)."""
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        return p, 0.0
    tail = np.cumsum(p[::-1])[::-1]
    # tail[j] = mass at j and above; keep 0..J with tail[J+1] <= eps
    ok = np.nonzero(tail <= eps)[0]
    if ok.size == 0:
        return p, 0.0
    cut = int(ok[0])
    if cut == 0:
        cut = 1
    return p[:cut].copy(), float(tail[cut]) if cut < p.size else 0.0


def convolve(a: np.ndarray, b: np.ndarray, max_len: int | None = None) -> np.ndarray:
    out = signal.convolve(a, b, mode="full")
    if max_len is not None:
        out = out[:max_len]
    return _clip(np.array(out, dtype=float))


def power(f: np.ndarray, n: int, max_len: int | None = None) -> np.ndarray:
    """n-fold convolution power of ``f`` by binary exponentiation."""
    result = np.ones(1)
    base = np.asarray(f, dtype=float)
    while n > 0:
        if n & 1:
            result = convolve(result, base, max_len)
        n >>= 1
        if n:
            base = convolve(base, base, max_len)
    return result


def compose(a: np.ndarray, f: np.ndarray, max_len: int) -> np.ndarray:
    """Coefficients of ``sum_l a[l] * f**l`` (pgf composition) below ``max_len``.

    Divide and conquer over ``a``: pairs of blocks are merged as
    ``even + f**(2**i) * odd`` with the powers obtained by repeated squaring,
    and every merge level is a single batched convolution.
    """
    a = np.asarray(a, dtype=float)
    f = np.asarray(f, dtype=float)
    nz = np.nonzero(a)[0]
    if nz.size == 0:
        return np.zeros(1)
    a = a[: nz[-1] + 1]
    if f.size == 1:
        return np.array([composed_total(a, f[0])])
    if nz.size == 1:
        l = int(nz[0])
        return a[l] * power(f, l, max_len)
    blocks = a[:, None]
    pw = f[:max_len].copy()
    while blocks.shape[0] > 1:
        if blocks.shape[0] % 2:
            blocks = np.vstack([blocks, np.zeros((1, blocks.shape[1]))])
        even, odd = blocks[0::2], blocks[1::2]
        prod = signal.convolve(odd, pw[None, :], mode="full")[:, :max_len]
        width = max(even.shape[1], prod.shape[1])
        merged = np.zeros((even.shape[0], width))
        merged[:, : even.shape[1]] += even
        merged[:, : prod.shape[1]] += prod
        blocks = _clip(merged)
        if blocks.shape[0] > 1:
            pw = convolve(pw, pw, max_len)
    out = blocks[0]
    nz = np.nonzero(out)[0]
    return out[: nz[-1] + 1] if nz.size else np.zeros(1)


def composed_total(a: np.ndarray, f_total: float) -> float:
    """Total mass of ``sum_l a[l] f**l`` when ``f`` has total mass ``f_total``."""
    a = np.asarray(a, dtype=float)
    return float(np.dot(a, np.power(float(f_total), np.arange(a.size, dtype=float))))
