"""Reproducible uniform random streams.

Every stochastic decision draws from a :class:`RandomStream` identified by
``(seed, stream_id)``.  The generator is numpy's PCG64 seeded through
``SeedSequence(seed, spawn_key=(stream_id,))``; both are covered by numpy's
stream-stability policy.  Raw 64-bit outputs are turned into doubles here
(top 53 bits times 2**-53) rather than through ``Generator.random`` so the
float conversion is pinned in this repository as well.

One raw output is consumed per uniform and per index draw, which makes the
stream position equal to the number of values drawn.  ``RandomStream(...,
offset=k)`` starts at position ``k`` in O(log k) via ``PCG64.advance``;
chunked generators use this to stay identical to a sequential run.
"""

from __future__ import annotations

import enum

import numpy as np

_BUFFER = 4096
_SCALE = 1.0 / 9007199254740992.0  # 2**-53
_SHIFT = np.uint64(11)
MAX_SEED = 2**64 - 1


class StreamRole(enum.IntEnum):
    """Stream ids, one per stochastic role."""

    SOURCE = 0
    SETTINGS_1 = 1
    SETTINGS_2 = 2
    DELAYS_1 = 3
    DELAYS_2 = 4
    DLM_OUTPUT = 5
    INPUT_PHASE = 6
    INPUT_CHANNEL = 7
    ANGLES = 8


def _to_unit(raw: np.ndarray) -> np.ndarray:
    return (raw >> _SHIFT).astype(np.float64) * _SCALE


class RandomStream:
    """A single-owner stream of uniforms in ``[0, 1)``.

    Parameters
    ----------
    seed:
        Integer in ``[0, 2**64)``.
    stream_id:
        Non-negative integer; use :class:`StreamRole` values.
    offset:
        Number of draws to skip before the first value.
    """

    def __init__(self, seed: int, stream_id: int, offset: int = 0) -> None:
        seed = int(seed)
        stream_id = int(stream_id)
        if not 0 <= seed <= MAX_SEED:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        if stream_id < 0:
            raise ValueError(f"stream_id must be non-negative, got {stream_id}")
        if offset < 0:
            raise ValueError(f"offset must be non-negative, got {offset}")
        self.seed = seed
        self.stream_id = stream_id
        self._bitgen = np.random.PCG64(
            np.random.SeedSequence(seed, spawn_key=(stream_id,))
        )
        if offset:
            self._bitgen.advance(offset)
        self._buf: list[float] = []
        self._pos = 0
        self.position = int(offset)

    def __repr__(self) -> str:
        return (
            f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"position={self.position})"
        )

    def _refill(self) -> None:
        self._buf = _to_unit(self._bitgen.random_raw(_BUFFER)).tolist()
        self._pos = 0

    def next_uniform(self) -> float:
        """Return the next value ``u`` with ``0 <= u < 1``."""
        if self._pos >= len(self._buf):
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        self.position += 1
        return u

    def next_index(self, M: int) -> int:
        """Return ``floor(M * u) + 1``, uniform over ``1..M``."""
        if M < 1:
            raise ValueError(f"M must be a positive integer, got {M}")
        # M*u can round up to M for u close to 1
        return min(int(M * self.next_uniform()), M - 1) + 1

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms as an array; same values as ``n`` scalar calls."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        buffered = self._buf[self._pos : self._pos + n]
        self._pos += len(buffered)
        rest = n - len(buffered)
        out = np.empty(n, dtype=np.float64)
        out[: len(buffered)] = buffered
        if rest:
            out[len(buffered) :] = _to_unit(self._bitgen.random_raw(rest))
        self.position += n
        return out

    def indices(self, n: int, M: int) -> np.ndarray:
        """Next ``n`` indices in ``1..M``; same values as ``n`` scalar calls."""
        if M < 1:
            raise ValueError(f"M must be a positive integer, got {M}")
        k = np.floor(M * self.uniforms(n)).astype(np.int64)
        np.minimum(k, M - 1, out=k)
        return k + 1

    def skip(self, n: int) -> None:
        """Advance the stream by ``n`` draws without producing them."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        in_buf = min(n, len(self._buf) - self._pos)
        self._pos += in_buf
        if n - in_buf:
            self._bitgen.advance(n - in_buf)
        self.position += n


def stream(seed: int, role: StreamRole | int, offset: int = 0) -> RandomStream:
    return RandomStream(seed, int(role), offset)
