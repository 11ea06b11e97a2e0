"""Uniform number streams on [0, 1) feeding the inverse-CDF jump sampler.

Three kinds are supported:

``pseudo``
    SplitMix64 evaluated in counter mode: element ``i`` of a stream with seed
    ``s`` is ``mix64(s + (i + 1) * 0x9E3779B97F4A7C15)`` with the standard
    SplitMix64 finalizer, mapped to a double by keeping the top 53 bits.
    Counter mode gives random access, so streams can be split and replayed
    without carrying generator state around.
``sobol``
    The one-dimensional Sobol sequence (direction numbers ``2**-j``) in
    Gray-code order, i.e. the van der Corput radical inverse of ``i ^ (i >> 1)``.
``halton``
    The radical inverse of the index in a prime base.

A stream is an index window ``start_index + stride * cursor`` into the
underlying sequence; :meth:`UniformStream.take` returns consecutive elements
and advances the cursor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "MAX_INDEX",
    "StreamExhausted",
    "StreamKind",
    "UniformStream",
    "halton",
    "make_stream",
    "pseudo_random",
    "radical_inverse",
    "sobol_1d",
    "split",
]

MAX_INDEX = 2**52

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0**-53

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)

# bit-reversal of every byte value
_BYTE_REV = np.array(
    [int(f"{b:08b}"[::-1], 2) for b in range(256)], dtype=np.uint8
)


class StreamExhausted(OverflowError):
    """Raised when a stream is asked for an index beyond :data:`MAX_INDEX`."""


class StreamKind(enum.Enum):
    PSEUDO = "pseudo"
    SOBOL = "sobol"
    HALTON = "halton"


def _splitmix64(counter: np.ndarray, seed: int) -> np.ndarray:
    z = np.uint64(seed % 2**64) + (counter + np.uint64(1)) * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _bit_reverse64(x: np.ndarray) -> np.ndarray:
    b = x.astype(np.uint64).byteswap().view(np.uint8)
    return _BYTE_REV[b].view(np.uint64)


def _vdc_base2(index: np.ndarray) -> np.ndarray:
    # indices < 2**52, so the reversed value has at most 52 significant bits
    return (_bit_reverse64(index) >> np.uint64(11)).astype(np.float64) * _TWO_M53


def radical_inverse(index, base: int) -> np.ndarray:
    """Radical inverse of non-negative integers in ``base``.

    >>> radical_inverse([1, 2, 5], 2).tolist()
    [0.5, 0.25, 0.625]
    """
    idx = np.asarray(index, dtype=np.uint64)
    if base == 2:
        return _vdc_base2(idx)
    # digit loop on blocks of base**k digits at a time via a lookup table
    k = max(1, int(np.floor(16 * np.log(2) / np.log(base))))
    block = base**k
    digits = np.arange(block, dtype=np.int64)
    table = np.zeros(block)
    scale = 1.0 / base
    rest = digits.copy()
    for _ in range(k):
        table += (rest % base) * scale
        rest //= base
        scale /= base
    out = np.zeros(idx.shape)
    rest = idx.astype(np.int64)
    factor = 1.0
    while np.any(rest):
        out += table[rest % block] * factor
        rest //= block
        factor /= block
    return out


@dataclass
class UniformStream:
    """A replayable stream of uniforms on [0, 1).

    Attributes
    ----------
    kind
        Which underlying sequence is used.
    seed
        Seed of the ``pseudo`` kind, ignored otherwise.
    base
        Prime base of the ``halton`` kind, ignored otherwise.
    start_index, stride
        The stream yields sequence elements ``start_index + stride * i``.
    cursor
        Number of elements already consumed.
    """

    kind: StreamKind
    seed: int = 0
    base: int = 2
    start_index: int = 0
    stride: int = 1
    cursor: int = 0

    def __post_init__(self) -> None:
        self.kind = StreamKind(self.kind)
        if self.kind is StreamKind.HALTON and self.base not in _SMALL_PRIMES:
            raise ValueError(f"Halton base must be a small prime, got {self.base}")
        if self.start_index < 0 or self.stride < 1 or self.cursor < 0:
            raise ValueError("start_index and cursor must be >= 0, stride >= 1")

    def indices(self, n: int) -> np.ndarray:
        last = self.start_index + self.stride * (self.cursor + n - 1)
        if n > 0 and last >= MAX_INDEX:
            raise StreamExhausted(
                f"stream index {last} exceeds the supported range 2**52"
            )
        i = np.arange(self.cursor, self.cursor + n, dtype=np.uint64)
        return np.uint64(self.start_index) + np.uint64(self.stride) * i

    def peek(self, n: int) -> np.ndarray:
        """Return the next ``n`` values without advancing."""
        idx = self.indices(n)
        if self.kind is StreamKind.PSEUDO:
            raw = _splitmix64(idx, self.seed)
            return (raw >> np.uint64(11)).astype(np.float64) * _TWO_M53
        if self.kind is StreamKind.SOBOL:
            return _vdc_base2(idx ^ (idx >> np.uint64(1)))
        return radical_inverse(idx, self.base)

    def take(self, n: int) -> np.ndarray:
        """Return the next ``n`` values and advance the cursor."""
        out = self.peek(n)
        self.cursor += n
        return out

    def next(self) -> float:
        return float(self.take(1)[0])

    def skip(self, n: int) -> None:
        self.indices(n)
        self.cursor += n

    def copy(self) -> UniformStream:
        return replace(self)

    def split(self, n: int) -> list[UniformStream]:
        return split(self, n)

    def to_config(self) -> dict[str, object]:
        return {
            "stream": self.kind.value,
            "seed": self.seed,
            "base": self.base,
            "start_index": self.start_index,
        }


def split(stream: UniformStream, n: int) -> list[UniformStream]:
    """Partition the remainder of ``stream`` into ``n`` strided children.

    Child ``j`` yields the parent's elements ``j, j + n, j + 2n, ...`` counted
    from the parent's cursor, so interleaving the children reproduces the
    parent. The parent itself is left untouched and should not be advanced
    alongside its children.

    Strides that are multiples of the base destroy the uniformity of a
    radical-inverse sequence (the even-indexed van der Corput points all lie in
    [0, 1/2)). Prefer contiguous blocks via :meth:`UniformStream.take` when the
    children feed quasi-Monte Carlo estimates.
    """
    if n < 1:
        raise ValueError("split needs n >= 1")
    first = stream.start_index + stream.stride * stream.cursor
    return [
        replace(stream, start_index=first + stream.stride * j,
                stride=stream.stride * n, cursor=0)
        for j in range(n)
    ]


def pseudo_random(seed: int) -> UniformStream:
    return UniformStream(StreamKind.PSEUDO, seed=seed)


def sobol_1d(start_index: int = 1) -> UniformStream:
    return UniformStream(StreamKind.SOBOL, start_index=start_index)



def halton(base: int = 2, start_index: int = 1) -> UniformStream:
    return UniformStream(StreamKind.HALTON, base=base, start_index=start_index)


def make_stream(kind: str, seed: int = 0, base: int = 2,
                start_index: int | None = None) -> UniformStream:
    """Build a stream from its configuration fields.

    Quasi-random kinds start at index 1 by default so the point 0 is skipped.
    """
    kind = StreamKind(kind)
    if start_index is None:
        start_index = 0 if kind is StreamKind.PSEUDO else 1
    return UniformStream(kind, seed=seed, base=base, start_index=start_index)
