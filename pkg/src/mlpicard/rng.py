"""Deterministic hierarchical random streams indexed by integer-sequence labels.

Every stream is addressed by a pair ``(root_seed, theta)`` where ``theta`` is
a nonempty tuple of signed integers.  Two streams with different labels are
statistically independent for all practical purposes, and the draw sequence
of a stream is a pure function of its address: evaluation order, threading,
and batching never change the values drawn.

Algorithm (version tag ``RNG_ALGORITHM``, fixed for reproducibility):

* key derivation: BLAKE2b-256 keyed with the root seed (8 bytes, little
  endian) over the label elements packed as signed 64-bit little-endian
  words; the first 128 bits of the digest key a Philox-4x64 counter-based
  generator.
* uniforms: ``(raw >> 11) * 2**-53`` from 64-bit Philox words, in [0, 1).
* Gaussians: inverse normal CDF (``scipy.special.ndtri``) applied to
  ``((raw >> 11) + 0.5) * 2**-53``, which lies in (0, 1).

Within a stream the draw order is fixed: exactly one uniform first, then
standard Gaussian scalars in consumption order.  Callers that do not need
the uniform still draw it and discard it, so the Gaussian subsequence seen
by a consumer depends only on the stream address.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

RNG_ALGORITHM = "blake2b256/philox4x64/inverse-cdf v1"

ThetaIndex = tuple  # nonempty tuple of signed ints

_U64_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 2.0**-53


class StreamOrderError(RuntimeError):
    """Raised when draws are requested out of the fixed stream order."""


def child(parent: ThetaIndex, a: int, b: int) -> ThetaIndex:
    """Return the label ``parent`` extended by the pair ``(a, b)``."""
    return tuple(parent) + (a, b)


def _philox_key(root_seed: int, theta: ThetaIndex) -> int:
    if len(theta) < 1:
        raise ValueError("stream label must be a nonempty integer sequence")
    seed_bytes = (root_seed & _U64_MASK).to_bytes(8, "little")
    h = hashlib.blake2b(digest_size=32, key=seed_bytes)
    for el in theta:
        h.update(int(el).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest()[:16], "little")


class RandomStream:
    """Single-consumer draw source for one ``(root_seed, theta)`` address.

    The first draw must be :meth:`uniform`; all later draws are Gaussian.
    ``cursor`` counts scalar draws consumed so far.
    """

    __slots__ = ("_bitgen", "_uniform_done", "_gauss_count")

    def __init__(self, key: int):
        self._bitgen = np.random.Philox(key=key)
        self._uniform_done = False
        self._gauss_count = 0

    @property
    def cursor(self) -> int:
        return (1 if self._uniform_done else 0) + self._gauss_count

    def uniform(self) -> float:
        """Draw the stream's single uniform in [0, 1).  Must be the first draw."""
        if self._uniform_done or self._gauss_count:
            raise StreamOrderError("uniform must be the first draw on a stream")
        raw = int(self._bitgen.random_raw())
        self._uniform_done = True
        return (raw >> 11) * _INV_2_53

    def gaussians(self, n: int) -> np.ndarray:
        """Draw ``n`` independent standard normal scalars as a float64 array."""
        if not self._uniform_done:
            raise StreamOrderError("the stream uniform must be drawn (or discarded) first")
        if n == 0:
            return np.empty(0)
        raw = self._bitgen.random_raw(n)
        self._gauss_count += n
        u = ((raw >> np.uint64(11)) + 0.5) * _INV_2_53
        return ndtri(u)


def stream_for(root_seed: int, theta: ThetaIndex) -> RandomStream:
    """Create the stream addressed by ``(root_seed, theta)``.

    Deterministic: the same address always yields bit-identical draw
    sequences.  The root seed is reduced modulo 2**64.
    """
    return RandomStream(_philox_key(root_seed, theta))


def raw_uniform_sequence(root_seed: int, theta: ThetaIndex, count: int) -> np.ndarray:
    """Uniform [0, 1) view of a stream's raw word sequence, for statistics.

    Test instrumentation only: production consumers obey the one-uniform
    draw order, but distributional checks (correlation, KS) need long
    uniform sequences from a single label.
    """
    bitgen = np.random.Philox(key=_philox_key(root_seed, theta))
    raw = bitgen.random_raw(count)
    return (raw >> np.uint64(11)) * _INV_2_53
