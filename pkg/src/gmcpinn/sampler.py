"""Jump distributions of fractional order and deduplicated node sets.

For an order ``alpha`` in (1, 2) the Grunwald-Letnikov weights
``m_k = (-1)**k * Gamma(alpha + 1) / (k! * Gamma(alpha - k + 1))`` satisfy
``m_0 = 1``, ``m_1 = -alpha`` and ``m_k > 0`` for ``k >= 2``. Since the weights
sum to zero, ``p_1 = 2 - alpha`` together with ``p_k = m_k`` (``k >= 2``) is a
probability mass function on the positive integers. For ``alpha`` in (0, 1)
every ``m_k`` with ``k >= 1`` is negative and ``p_k = -m_k`` sums to one.

Jumps are drawn by inverting the cumulative sums ``E_j = p_1 + ... + p_j``:
``Y = k`` when ``E_{k-1} <= u < E_k``. The mass has a heavy tail
(``p_k ~ k**(-1 - alpha)``) and is truncated at ``k_cap``: uniforms above
``E_{k_cap}`` are clamped to ``k_cap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "FracOrder",
    "JumpDistribution",
    "NodeSet",
    "cdf_partial",
    "default_k_cap",
    "draw_nodes",
    "jump_distribution",
    "jump_prob",
    "jump_prob_closed_form",
    "sample_jump",
]

_GUIDE_SIZE = 4096


@dataclass(frozen=True)
class FracOrder:
    """A non-integer fractional order with integer part 0 or 1."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        object.__setattr__(self, "value", v)
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"fractional order must be positive, got {v}")
        if v == round(v):
            raise ValueError(
                f"integer order {v:g} is not supported: Gamma(alpha - k + 1) "
                "has a pole and cos(pi * alpha / 2) vanishes at odd integers"
            )
        if v > 2:
            raise ValueError(f"only orders in (0, 1) or (1, 2) are supported, got {v}")

    @property
    def branch(self) -> int:
        return int(math.floor(self.value))

    @property
    def riesz_coeff(self) -> float:
        """``c = -1 / (2 cos(pi * order / 2))``, positive on (1, 2)."""
        return -1.0 / (2.0 * math.cos(math.pi * self.value / 2.0))


def _as_order(order) -> FracOrder:
    return order if isinstance(order, FracOrder) else FracOrder(order)


def jump_prob_closed_form(order, k: int) -> float:
    """``p_k`` straight from the Gamma-function expression (no recurrence)."""
    a = _as_order(order).value
    if k < 1:
        raise ValueError("k must be >= 1")
    if a > 1 and k == 1:
        return 2.0 - a
    # |Gamma(a+1) / (k! Gamma(a-k+1))| via the reflection formula for
    # negative arguments of Gamma
    m = math.gamma(a + 1) / (math.factorial(k) * math.gamma(a - k + 1)) \
        if k < 170 and a - k + 1 > -170 else None
    if m is None:
        # log-space: 1/Gamma(z) = sin(pi z) Gamma(1-z) / pi for z < 0
        z = a - k + 1
        logm = (math.lgamma(a + 1) - math.lgamma(k + 1)
                + math.lgamma(1 - z) + math.log(abs(math.sin(math.pi * z)) / math.pi))
        return math.exp(logm)
    return abs(m)


def _probs_prefix(alpha: float, n: int) -> np.ndarray:
    """``p_0 .. p_n`` (``p_0 = 0``) from the ratio recurrence."""
    # long products drift in float64; accumulate in extended precision
    p = np.zeros(n + 1, dtype=np.longdouble)
    if n == 0:
        return p.astype(float)
    ks = np.arange(1, n, dtype=np.longdouble)
    ratios = (ks - alpha) / (ks + 1.0)          # p_{k+1} / p_k for a weight m_k
    if alpha > 1:
        p[1] = 2.0 - alpha
        if n >= 2:
            p[2] = alpha * (alpha - 1.0) / 2.0
            p[3:] = p[2] * np.cumprod(ratios[1:])
    else:
        p[1] = alpha
        p[2:] = alpha * np.cumprod(ratios)
    return p


def jump_prob(order, k: int) -> float:
    """Probability ``P(Y = k)`` of a jump of size ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    a = _as_order(order).value
    return float(_probs_prefix(a, k)[k])


def _log_gamma_ratio(z: float, a: float) -> float:
    """``log(Gamma(z + a) / Gamma(z))`` without cancellation for large ``z``."""
    if z < 20:
        return math.lgamma(z + a) - math.lgamma(z)
    # Stirling series written as differences so nothing large is subtracted
    out = (z - 0.5) * math.log1p(a / z) + a * math.log(z + a) - a
    for coeff, power in ((1 / 12, 1), (-1 / 360, 3), (1 / 1260, 5), (-1 / 1680, 7)):
        out += coeff * ((z + a) ** -power - z**-power)
    return out


def _tail_mass(alpha: float, k: int) -> float:
    # sum_{j=0}^{k} m_j = (-1)^k binom(alpha - 1, k) = Gamma(k+1-a) / (Gamma(1-a) k!)
    g1 = math.gamma(1.0 - alpha)
    log_mag = -_log_gamma_ratio(k + 1 - alpha, alpha) - math.log(abs(g1))
    partial = math.copysign(math.exp(log_mag), g1)
    # E_k = 1 + partial for alpha in (1, 2), 1 - partial for alpha in (0, 1)
    return -partial if alpha > 1 else partial


def default_k_cap(n: int) -> int:
    return max(10 * n, 10**4)


class JumpDistribution:
    """Truncated jump law with lazily extended probabilities and CDF.

    Parameters
    ----------
    order
        Fractional order (0 < alpha < 2, non-integer).
    k_cap
        Largest jump that can be returned; uniforms beyond ``E_{k_cap}`` are
        clamped onto it.
    """

    def __init__(self, order, k_cap: int = 10**4):
        self.order = _as_order(order)
        if k_cap < 2:
            raise ValueError("k_cap must be >= 2")
        self.k_cap = int(k_cap)
        self._probs = np.zeros(1)
        self._cdf = np.zeros(1)
        self._guide = None
        self.tail_mass = _tail_mass(self.order.value, self.k_cap)

    @property
    def alpha(self) -> float:
        return self.order.value

    @property
    def cached(self) -> int:
        """Largest ``k`` whose probability has been computed."""
        return len(self._probs) - 1

    def _extend(self, j: int) -> None:
        j = min(j, self.k_cap)
        if j <= self.cached:
            return
        n = min(self.k_cap, max(j, 2 * self.cached, 64))
        probs = _probs_prefix(self.alpha, n)
        self._probs = probs.astype(float)
        self._cdf = np.cumsum(probs).astype(float)
        self._guide = None

    def probs(self, j: int) -> np.ndarray:
        """``[p_0, p_1, ..., p_j]`` with ``p_0 = 0``."""
        self._extend(j)
        return self._probs[: j + 1]

    def cdf(self, j: int) -> float:
        if j < 0:
            raise ValueError("j must be >= 0")
        self._extend(j)
        return float(self._cdf[min(j, self.k_cap)])

    def _full(self) -> None:
        self._extend(self.k_cap)
        if self._guide is None:
            grid = np.arange(_GUIDE_SIZE + 1) / _GUIDE_SIZE
            self._guide = np.searchsorted(self._cdf, grid, side="right")

    def sample(self, u) -> np.ndarray:
        """Inverse-CDF jumps for an array of uniforms on [0, 1)."""
        u = np.asarray(u, dtype=float)
        if u.size and (u.min() < 0.0 or u.max() >= 1.0):
            raise ValueError("uniforms must lie in [0, 1)")
        self._full()
        bucket = (u * _GUIDE_SIZE).astype(np.intp)
        lo = self._guide[bucket]
        hi = self._guide[bucket + 1]
        out = lo.copy()
        amb = lo != hi
        if amb.any():
            out[amb] = np.searchsorted(self._cdf, u[amb], side="right")
        np.minimum(out, self.k_cap, out=out)
        return out

    def clamped(self, u) -> np.ndarray:
        """Mask of uniforms that fall in the truncated tail."""
        self._full()
        return np.asarray(u) >= self._cdf[self.k_cap]

    def __repr__(self) -> str:
        return f"JumpDistribution(alpha={self.alpha}, k_cap={self.k_cap})"


_CHUNK = 1 << 16


@lru_cache(maxsize=64)
def jump_distribution(alpha: float, k_cap: int) -> JumpDistribution:
    """Shared, cached distribution instance (distributions are read-only)."""
    return JumpDistribution(alpha, k_cap)


def cdf_partial(dist: JumpDistribution, j: int) -> float:
    return dist.cdf(j)


def sample_jump(dist: JumpDistribution, u: float) -> int:
    """Smallest ``k`` with ``E_k > u``, clamped at ``dist.k_cap``."""
    if not 0.0 <= u < 1.0:
        raise ValueError(f"uniform must lie in [0, 1), got {u}")
    return int(dist.sample(np.array([u]))[0])


@dataclass
class NodeSet:
    """Distinct jump sizes with multiplicities.

    ``jumps`` is sorted and unique; ``counts[i]`` draws hit ``jumps[i]``.
    ``total`` is the number of raw draws represented and ``clamped`` how many of
    them were clamped at the truncation index.
    """

    jumps: np.ndarray
    counts: np.ndarray
    total: int
    clamped: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_draws(cls, draws, clamped: int = 0) -> NodeSet:
        draws = np.asarray(draws, dtype=np.int64)
        jumps, counts = np.unique(draws, return_counts=True)
        return cls(jumps, counts, int(draws.size), int(clamped))

    @property
    def unique(self) -> int:
        return int(self.jumps.size)

    def as_dict(self) -> dict[int, int]:
        return {int(y): int(c) for y, c in zip(self.jumps, self.counts)}

    def weighted_mean(self, f) -> float:
        """Mean of ``f`` over the raw draws, computed from the distinct jumps."""
        vals = np.asarray(f(self.jumps), dtype=float)
        return float(np.dot(self.counts, vals) / self.total)

    def diagnostics(self) -> dict[str, int]:
        return {"total": self.total, "unique": self.unique, "clamped": self.clamped}


def draw_nodes(dist: JumpDistribution, n: int, k: int, stream) -> NodeSet:
    """Draw ``n * k`` jumps from ``stream`` and aggregate them."""
    if n < 1 or k < 1:
        raise ValueError("N and K must be >= 1")
    total = n * k
    if total <= _CHUNK:
        u = stream.take(total)
        return NodeSet.from_draws(dist.sample(u), int(dist.clamped(u).sum()))
    # large draws: histogram chunk by chunk so temporaries stay in cache
    hist = np.zeros(dist.k_cap + 1, dtype=np.int64)
    clamped = 0
    for start in range(0, total, _CHUNK):
        u = stream.take(min(_CHUNK, total - start))
        hist += np.bincount(dist.sample(u), minlength=dist.k_cap + 1)
        clamped += int(dist.clamped(u).sum())
    jumps = np.flatnonzero(hist)
    return NodeSet(jumps, hist[jumps], total, clamped)
