"""Event-by-event generation of the two station datasets of an EPRB run.

Per event ``n`` the source draws a polarization angle ``xi``; each station
picks one of its ``M`` rotation angles ``gamma``, records the outcome
``sign(cos 2 theta)`` and a time tag uniform on ``[0, T0 |sin 2 theta|**d]``
with ``theta = xi - gamma + (i - 1) pi/2``.  The ``(i - 1) pi/2`` offset
makes the two particles' polarizations orthogonal; it is applied by the
station functions, so a source angle is the same ``xi`` for both stations
in singlet mode.

Each event consumes exactly one draw from each of the source, settings and
delay streams.  A chunk starting at event ``n0`` opens its streams at offset
``n0``, so any chunking reproduces the sequential run bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np

from .rng import RandomStream, StreamRole

HALF_PI = 0.5 * math.pi

_SETTINGS = {1: StreamRole.SETTINGS_1, 2: StreamRole.SETTINGS_2}
_DELAYS = {1: StreamRole.DELAYS_1, 2: StreamRole.DELAYS_2}


@dataclass(frozen=True)
class SingletRandom:
    """Polarization angle uniform on ``[0, 2 pi)``, drawn per event."""


@dataclass(frozen=True)
class FixedPolarization:
    """Constant source angles (radians) for station 1 and station 2."""

    xi1: float
    xi2: float

    def __post_init__(self) -> None:
        for v in (self.xi1, self.xi2):
            if not (0.0 <= v < 2.0 * math.pi):
                raise ValueError(f"source angle {v} outside [0, 2 pi)")


SourceMode = Union[SingletRandom, FixedPolarization]


@dataclass
class StationConfig:
    """Station ``index`` with rotation angles in degrees."""

    index: int
    angles_deg: Sequence[float]
    T0: float = 1.0
    d: float = 2.0

    def __post_init__(self) -> None:
        if self.index not in (1, 2):
            raise ValueError(f"station index must be 1 or 2, got {self.index}")
        self.angles_deg = tuple(float(a) for a in self.angles_deg)
        if not self.angles_deg:
            raise ValueError("a station needs at least one angle (M >= 1)")
        if not all(math.isfinite(a) for a in self.angles_deg):
            raise ValueError("angles must be finite")
        if not self.T0 > 0:
            raise ValueError(f"T0 must be > 0, got {self.T0}")
        if not self.d >= 0:
            raise ValueError(f"d must be >= 0, got {self.d}")

    @property
    def M(self) -> int:
        return len(self.angles_deg)

    @property
    def angles(self) -> np.ndarray:
        return np.radians(np.asarray(self.angles_deg, dtype=np.float64))


class EventRecord(NamedTuple):
    n: int
    x: int
    t: float
    m: int
    gamma: float


@dataclass
class StationDataset:
    """Columnar event log of one station plus the configuration echo.

    ``n`` are event indices, ``m`` setting indices in ``1..M``, ``x`` the
    outcomes (+1/-1) and ``t`` the time tags.
    """

    station: int
    angles_deg: tuple[float, ...]
    n: np.ndarray
    m: np.ndarray
    x: np.ndarray
    t: np.ndarray
    T0: float = 1.0
    d: float = 2.0
    seed: int = 0
    stream_ids: tuple[int, ...] = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.angles_deg = tuple(float(a) for a in self.angles_deg)
        self.n = np.asarray(self.n, dtype=np.int64)
        self.m = np.asarray(self.m, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.int64)
        self.t = np.asarray(self.t, dtype=np.float64)
        sizes = {self.n.size, self.m.size, self.x.size, self.t.size}
        if len(sizes) != 1:
            raise ValueError("dataset columns must have equal length")

    def __len__(self) -> int:
        return int(self.n.size)

    @property
    def M(self) -> int:
        return len(self.angles_deg)

    @property
    def gamma(self) -> np.ndarray:
        return np.radians(np.asarray(self.angles_deg))[self.m - 1]

    def records(self) -> Iterator[EventRecord]:
        g = self.gamma
        for i in range(len(self)):
            yield EventRecord(
                int(self.n[i]), int(self.x[i]), float(self.t[i]), int(self.m[i]), float(g[i])
            )

    def with_columns(self, **cols) -> "StationDataset":
        """Copy with some columns replaced (e.g. shifted time tags)."""
        kw = dict(n=self.n, m=self.m, x=self.x, t=self.t)
        kw.update(cols)
        return StationDataset(
            self.station, self.angles_deg, T0=self.T0, d=self.d, seed=self.seed,
            stream_ids=self.stream_ids, extra=dict(self.extra), **kw,
        )

    @classmethod
    def concat(cls, parts: Sequence["StationDataset"]) -> "StationDataset":
        first = parts[0]
        return first.with_columns(
            n=np.concatenate([p.n for p in parts]),
            m=np.concatenate([p.m for p in parts]),
            x=np.concatenate([p.x for p in parts]),
            t=np.concatenate([p.t for p in parts]),
        )


def polarization_vector(xi: float, i: int) -> tuple[float, float]:
    a = xi + (i - 1) * HALF_PI
    return math.cos(a), math.sin(a)


def emit_pair(mode: SourceMode, rng: RandomStream) -> tuple[float, float]:
    """Source angles ``(xi1, xi2)`` for one event."""
    if isinstance(mode, FixedPolarization):
        return mode.xi1, mode.xi2
    xi = 2.0 * math.pi * rng.next_uniform()
    return xi, xi


def _theta(xi, gamma, i):
    return np.asarray(xi) - np.asarray(gamma) + (i - 1) * HALF_PI


def detect(xi, gamma, i: int):
    """Outcome ``sign(cos 2 theta)``, with ``sign(0) = +1``."""
    out = np.where(np.cos(2.0 * _theta(xi, gamma, i)) >= 0.0, 1, -1)
    return int(out) if out.ndim == 0 else out


def delay_window(xi, gamma, i: int, T0: float, d: float):
    """Maximum delay ``T0 |sin 2 theta|**d``; ``0**0`` is taken as 1."""
    theta = _theta(xi, gamma, i)
    # always go through the array kernel so scalar and chunked paths agree bitwise
    out = _window(np.atleast_1d(theta), T0, d)
    return float(out[0]) if theta.ndim == 0 else out


def _window(theta: np.ndarray, T0: float, d: float) -> np.ndarray:
    return T0 * np.abs(np.sin(2.0 * theta)) ** d


def delay(xi: float, gamma: float, i: int, T0: float, d: float, rng: RandomStream) -> float:
    """Time tag uniform on ``[0, delay_window]``."""
    return rng.next_uniform() * float(delay_window(xi, gamma, i, T0, d))


def random_angles(M: int, seed: int) -> tuple[list[float], list[float]]:
    """Fill both stations' angle arrays (degrees in ``[0, 360)``) from 2M draws."""
    u = RandomStream(seed, StreamRole.ANGLES).uniforms(2 * M)
    deg = (360.0 * u).tolist()
    return deg[:M], deg[M:]


def _check_stations(st1: StationConfig, st2: StationConfig) -> None:
    if st1.index != 1 or st2.index != 2:
        raise ValueError("station configs must have indices 1 and 2")
    if st1.T0 != st2.T0:
        raise ValueError(f"stations disagree on T0: {st1.T0} vs {st2.T0}")


def _chunk(
    n0: int,
    count: int,
    source: SourceMode,
    stations: tuple[StationConfig, StationConfig],
    seed: int,
) -> tuple[StationDataset, StationDataset]:
    if isinstance(source, FixedPolarization):
        xis = (np.full(count, source.xi1), np.full(count, source.xi2))
    else:
        xi = 2.0 * math.pi * RandomStream(seed, StreamRole.SOURCE, n0).uniforms(count)
        xis = (xi, xi)
    out = []
    for st, xi in zip(stations, xis):
        i = st.index
        m = RandomStream(seed, _SETTINGS[i], n0).indices(count, st.M)
        gamma = st.angles[m - 1]
        theta = _theta(xi, gamma, i)
        x = np.where(np.cos(2.0 * theta) >= 0.0, 1, -1)
        u = RandomStream(seed, _DELAYS[i], n0).uniforms(count)
        t = u * _window(theta, st.T0, st.d)
        out.append(
            StationDataset(
                i, st.angles_deg,
                n=np.arange(n0 + 1, n0 + count + 1), m=m, x=x, t=t,
                T0=st.T0, d=st.d, seed=seed,
                stream_ids=(int(StreamRole.SOURCE), int(_SETTINGS[i]), int(_DELAYS[i])),
            )
        )
    return out[0], out[1]


def iter_experiment(
    N: int,
    station1: StationConfig,
    station2: StationConfig,
    source: SourceMode = SingletRandom(),
    *,
    seed: int = 1,
    chunk_size: int = 1 << 18,
) -> Iterator[tuple[StationDataset, StationDataset]]:
    """Yield the run in consecutive chunks of at most ``chunk_size`` events."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    _check_stations(station1, station2)
    for n0 in range(0, N, chunk_size):
        yield _chunk(n0, min(chunk_size, N - n0), source, (station1, station2), seed)


def run_experiment(
    N: int,
    station1: StationConfig,
    station2: StationConfig,
    source: SourceMode = SingletRandom(),
    *,
    seed: int = 1,
    chunk_size: int = 1 << 18,
) -> tuple[StationDataset, StationDataset]:
    """Generate both station datasets in memory; see :func:`iter_experiment`."""
    parts = list(iter_experiment(N, station1, station2, source, seed=seed, chunk_size=chunk_size))
    return (
        StationDataset.concat([p[0] for p in parts]),
        StationDataset.concat([p[1] for p in parts]),
    )
