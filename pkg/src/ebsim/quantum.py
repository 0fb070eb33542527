"""Closed-form quantum-theory references. Angles in radians."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np


def bs_intensities(p0: float, psi0: float, psi1: float) -> tuple[float, float]:
    """Output intensities of an ideal 50/50 beam splitter.

    ``p0`` is the probability of an input on channel 0; ``psi0``/``psi1`` are
    the input phases.
    """
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must be in [0, 1], got {p0}")
    i0 = 0.5 * (1.0 + 2.0 * math.sqrt(p0 * (1.0 - p0)) * math.sin(psi0 - psi1))
    return i0, 1.0 - i0


def mzi_probabilities(phi0: float, phi1: float) -> tuple[float, float]:
    """Detector probabilities ``(P2, P3)`` of the Mach-Zehnder network."""
    p2 = math.cos(0.5 * (phi0 - phi1)) ** 2
    return p2, 1.0 - p2


def singlet_E(alpha, beta):
    """Two-particle correlation ``-cos 2(alpha - beta)``; broadcasts over arrays."""
    return -np.cos(2.0 * (np.asarray(alpha) - np.asarray(beta)))


class SingletPrediction(NamedTuple):
    E1: float
    E2: float
    E: float


def singlet_prediction(alpha: float, beta: float) -> SingletPrediction:
    """Single-particle averages vanish for the singlet; ``E`` as above."""
    return SingletPrediction(0.0, 0.0, float(singlet_E(alpha, beta)))


def S_of(E: Callable[[float, float], float], a, b, c, d) -> float:
    """CHSH combination ``E(a,c) - E(a,d) + E(b,c) + E(b,d)``."""
    return float(E(a, c) - E(a, d) + E(b, c) + E(b, d))


def chsh_quantum_max() -> float:
    return 2.0 * math.sqrt(2.0)


def bell_triangle_E(alpha, beta):
    """Correlation of the sign model without any time-window selection.

    Average over a uniform polarization angle ``xi`` of
    ``sign(cos 2(xi - alpha)) * sign(-cos 2(xi - beta))``: a triangle wave
    of period ``pi`` in ``alpha - beta``, equal to ``-1`` at 0, ``0`` at
    ``pi/4`` and ``+1`` at ``pi/2``.
    """
    diff = np.asarray(alpha) - np.asarray(beta)
    # distance to the nearest multiple of pi, in [0, pi/2]
    delta = np.abs(np.mod(diff + 0.5 * np.pi, np.pi) - 0.5 * np.pi)
    return 4.0 * delta / np.pi - 1.0
