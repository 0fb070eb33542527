"""Learning-machine beam splitter and the two-splitter Mach-Zehnder network.

A :class:`DlmBeamSplitter` handles one message at a time in three stages:

1. store the incoming phase message in the register of its input channel and
   update the internal probability vector ``x`` (exponential forgetting with
   parameter ``alpha``),
2. combine registers and ``x`` into two candidate messages ``w`` and ``z``,
3. emit ``w/|w|`` on channel 0 if ``|w|**2 > r`` for a uniform ``r``,
   otherwise ``z/|z|`` on channel 1.

Registers are stored per channel: ``Y0 = (Y00, Y10)`` holds the last message
seen on channel 0, ``Y1 = (Y01, Y11)`` the last one on channel 1 (second index
is the input channel).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .rng import RandomStream, StreamRole

_SQRT_HALF = math.sqrt(0.5)
NORM_TOL = 1e-6
DEGENERATE_NORM = 1e-9


class InvalidMessageError(ValueError):
    pass


class DegenerateEmissionError(RuntimeError):
    """The selected candidate has (numerically) zero norm."""


class PhaseMessage(NamedTuple):
    """Unit vector ``(cos psi, sin psi)``."""

    y1: float
    y2: float

    @classmethod
    def from_angle(cls, psi: float) -> "PhaseMessage":
        return cls(math.cos(psi), math.sin(psi))

    @property
    def angle(self) -> float:
        return math.atan2(self.y2, self.y1)

    def norm(self) -> float:
        return math.hypot(self.y1, self.y2)


class CandidatePair(NamedTuple):
    w: tuple[float, float]
    z: tuple[float, float]

    @property
    def w_norm2(self) -> float:
        return self.w[0] * self.w[0] + self.w[1] * self.w[1]

    @property
    def z_norm2(self) -> float:
        return self.z[0] * self.z[0] + self.z[1] * self.z[1]


def _check_message(y: Sequence[float]) -> PhaseMessage:
    y = PhaseMessage(float(y[0]), float(y[1]))
    if not abs(y.norm() - 1.0) <= NORM_TOL:
        raise InvalidMessageError(f"message {tuple(y)} is not a unit vector")
    return y


@dataclass
class DlmBeamSplitter:
    alpha: float = 0.99
    x: tuple[float, float] = (0.5, 0.5)
    Y0: PhaseMessage = field(default_factory=lambda: PhaseMessage(1.0, 0.0))
    Y1: PhaseMessage = field(default_factory=lambda: PhaseMessage(1.0, 0.0))
    events_processed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        x0, x1 = self.x
        if x0 < 0 or x1 < 0 or abs(x0 + x1 - 1.0) > 1e-12:
            raise ValueError(f"x must be a probability vector, got {self.x}")
        self.x = (float(x0), float(x1))
        self.Y0 = _check_message(self.Y0)
        self.Y1 = _check_message(self.Y1)

    def store_and_learn(self, channel: int, y: Sequence[float]) -> None:
        """Store ``y`` in the channel's register and update ``x``."""
        y = _check_message(y)
        a = self.alpha
        x0, x1 = self.x
        if channel == 0:
            self.Y0 = y
            self.x = (a * x0 + (1.0 - a), a * x1)
        elif channel == 1:
            self.Y1 = y
            self.x = (a * x0, a * x1 + (1.0 - a))
        else:
            raise ValueError(f"channel must be 0 or 1, got {channel}")

    def transform(self) -> CandidatePair:
        s0 = math.sqrt(self.x[0])
        s1 = math.sqrt(self.x[1])
        Y00, Y10 = self.Y0
        Y01, Y11 = self.Y1
        w = (
            (Y00 * s0 - Y11 * s1) * _SQRT_HALF,
            (Y01 * s1 + Y10 * s0) * _SQRT_HALF,
        )
        z = (
            (Y01 * s1 - Y10 * s0) * _SQRT_HALF,
            (Y00 * s0 + Y11 * s1) * _SQRT_HALF,
        )
        return CandidatePair(w, z)

    def process(
        self, channel: int, y: Sequence[float], rng: RandomStream
    ) -> tuple[int, PhaseMessage]:
        """Consume one input event and produce exactly one output event."""
        self.store_and_learn(channel, y)
        out = emit(self.transform(), rng.next_uniform())
        self.events_processed += 1
        return out


def emit(pair: CandidatePair, r: float) -> tuple[int, PhaseMessage]:
    """Select the output channel for uniform ``r`` and normalize the message.

    Raises
    ------
    DegenerateEmissionError
        If the selected candidate has norm below ``1e-9``.
    """
    w2 = pair.w_norm2
    if w2 > r:
        channel, v, n2 = 0, pair.w, w2
    else:
        channel, v, n2 = 1, pair.z, pair.z_norm2
    n = math.sqrt(n2)
    if n < DEGENERATE_NORM:
        raise DegenerateEmissionError(
            f"candidate on channel {channel} has norm {n:.3g}"
        )
    return channel, PhaseMessage(v[0] / n, v[1] / n)


def closed_form_x(
    x_init: Sequence[float], events: Sequence[int], alpha: float
) -> tuple[float, float]:
    """State of ``x`` after ``events`` using the explicit convolution form.

    ``x_n = alpha**n x_0 + (1 - alpha) sum_i alpha**(n-1-i) v_{i+1}`` where
    ``v`` is the one-hot vector of the i-th input channel.
    """
    ev = np.asarray(events, dtype=np.int64)
    n = ev.size
    x0, x1 = float(x_init[0]), float(x_init[1])
    if n == 0:
        return x0, x1
    if np.any((ev != 0) & (ev != 1)):
        raise ValueError("events must be 0 or 1")
    weights = alpha ** np.arange(n - 1, -1, -1, dtype=np.float64)
    on1 = math.fsum(weights[ev == 1])
    on0 = math.fsum(weights[ev == 0])
    decay = alpha**n
    return (
        decay * x0 + (1.0 - alpha) * on0,
        decay * x1 + (1.0 - alpha) * on1,
    )


def phase_shift(y: Sequence[float], phi: float) -> PhaseMessage:
    """Rotate the message by ``phi`` radians."""
    c, s = math.cos(phi), math.sin(phi)
    return PhaseMessage(y[0] * c - y[1] * s, y[0] * s + y[1] * c)


class InputPhase(str, enum.Enum):
    FIXED = "fixed"
    PER_RUN = "per-run"
    PER_EVENT = "per-event"


@dataclass
class MziNetwork:
    """Two beam splitters joined by two phase-shifted paths.

    ``N0``/``N1`` count the first splitter's outputs on channel 0/1.  ``N2``
    counts the second splitter's channel-1 output and ``N3`` its channel-0
    output, so that ``N2`` follows ``cos**2((phi0 - phi1)/2)``.  Mirrors
    are identity on messages; their phase is folded into ``phi0``/``phi1``.
    """

    phi0: float = 0.0
    phi1: float = 0.0
    alpha: float = 0.99
    bs1: DlmBeamSplitter | None = None
    bs2: DlmBeamSplitter | None = None
    N0: int = 0
    N1: int = 0
    N2: int = 0
    N3: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.phi0) and math.isfinite(self.phi1)):
            raise ValueError("phase shifts must be finite")
        if self.bs1 is None:
            self.bs1 = DlmBeamSplitter(self.alpha)
        if self.bs2 is None:
            self.bs2 = DlmBeamSplitter(self.alpha)

    def reset_counts(self) -> None:
        self.N0 = self.N1 = self.N2 = self.N3 = 0

    def process(self, y: Sequence[float], rng: RandomStream) -> int:
        """Route one message entering channel 0 of the first splitter.

        Returns the detector index (2 or 3) that fired.
        """
        k, out = self.bs1.process(0, y, rng)
        if k == 0:
            self.N0 += 1
            out = phase_shift(out, self.phi0)
        else:
            self.N1 += 1
            out = phase_shift(out, self.phi1)
        k2, _ = self.bs2.process(k, out, rng)
        if k2 == 1:
            self.N2 += 1
            return 2
        self.N3 += 1
        return 3

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return self.N0, self.N1, self.N2, self.N3


def _phase_source(
    policy: InputPhase | str, psi0: float, rng: RandomStream
):
    policy = InputPhase(policy)
    if policy is InputPhase.FIXED:
        y = PhaseMessage.from_angle(psi0)
        return lambda: y
    if policy is InputPhase.PER_RUN:
        y = PhaseMessage.from_angle(2.0 * math.pi * rng.next_uniform())
        return lambda: y
    return lambda: PhaseMessage.from_angle(2.0 * math.pi * rng.next_uniform())


def run_mzi(
    N: int,
    phi0: float,
    phi1: float,
    *,
    input_phase: InputPhase | str = InputPhase.PER_RUN,
    psi0: float = 0.0,
    alpha: float = 0.99,
    seed: int = 1,
    network: MziNetwork | None = None,
    output_stream: RandomStream | None = None,
    phase_stream: RandomStream | None = None,
    trace: list | None = None,
) -> tuple[int, int, int, int]:
    """Send ``N`` messages into channel 0 of a Mach-Zehnder network.

    Angles are in radians.  Pass ``network`` and the two streams to continue
    an existing run (counts are reset, splitter state is kept).  If
    ``trace`` is a list, ``(event, path, detector)`` tuples are appended.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not all(math.isfinite(v) for v in (phi0, phi1, psi0)):
        raise ValueError("angles must be finite")
    if network is None:
        network = MziNetwork(phi0, phi1, alpha)
    else:
        network.phi0, network.phi1 = phi0, phi1
        network.reset_counts()
    out_rng = output_stream or RandomStream(seed, StreamRole.DLM_OUTPUT)
    phase_rng = phase_stream or RandomStream(seed, StreamRole.INPUT_PHASE)
    next_message = _phase_source(input_phase, psi0, phase_rng)
    for n in range(N):
        if trace is None:
            network.process(next_message(), out_rng)
        else:
            before = network.N0
            det = network.process(next_message(), out_rng)
            trace.append((n, 0 if network.N0 > before else 1, det))
    return network.counts


def mzi_sweep(
    phi0_values: Sequence[float],
    phi1: float,
    n_per_point: int,
    *,
    input_phase: InputPhase | str = InputPhase.PER_RUN,
    psi0: float = 0.0,
    alpha: float = 0.99,
    seed: int = 1,
    carry_state: bool = True,
) -> list[tuple[float, tuple[int, int, int, int]]]:
    """Counts per ``phi0`` value, one continuous run unless ``carry_state`` is off."""
    out_rng = RandomStream(seed, StreamRole.DLM_OUTPUT)
    phase_rng = RandomStream(seed, StreamRole.INPUT_PHASE)
    network = None
    points = []
    for phi0 in phi0_values:
        if network is None or not carry_state:
            network = MziNetwork(phi0, phi1, alpha)
        counts = run_mzi(
            n_per_point,
            phi0,
            phi1,
            input_phase=input_phase,
            psi0=psi0,
            network=network,
            output_stream=out_rng,
            phase_stream=phase_rng,
        )
        points.append((phi0, counts))
    return points


def run_beam_splitter(
    N: int,
    p0: float,
    psi0: float,
    psi1: float,
    *,
    alpha: float = 0.99,
    transient: int = 0,
    seed: int = 1,
) -> tuple[int, int]:
    """Feed ``transient + N`` events into one splitter and count outputs.

    Each event enters channel 0 with probability ``p0`` carrying phase
    ``psi0``, otherwise channel 1 with ``psi1``.  Only the last ``N``
    events are counted.
    """
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must be in [0, 1], got {p0}")
    if N < 1 or transient < 0:
        raise ValueError("N must be >= 1 and transient >= 0")
    bs = DlmBeamSplitter(alpha)
    out_rng = RandomStream(seed, StreamRole.DLM_OUTPUT)
    in_rng = RandomStream(seed, StreamRole.INPUT_CHANNEL)
    msgs = (PhaseMessage.from_angle(psi0), PhaseMessage.from_angle(psi1))
    counts = [0, 0]
    for n in range(transient + N):
        k = 0 if in_rng.next_uniform() < p0 else 1
        out, _ = bs.process(k, msgs[k], out_rng)
        if n >= transient:
            counts[out] += 1
    return counts[0], counts[1]
