"""Sweep of the delay exponent ``d`` against the singlet correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analysis import AnalysisConfig, AnalysisResult, analyze
from .eprb import StationConfig, run_experiment
from .quantum import singlet_E


@dataclass
class DScore:
    """Agreement of one simulated run with ``-cos 2(alpha - beta)``.

    ``chi2_dof`` weights each setting pair by its coincidence count and the
    binomial variance ``1 - q**2`` of the quantum value ``q`` (floored at
    ``1/n``).  The ``max_*`` fields are taken over setting pairs with at
    least one coincidence.
    """

    d: float
    chi2_dof: float
    max_abs_err: float
    max_abs_E1: float
    max_abs_E2: float
    n_coincidences: int
    n_pairs_defined: int
    result: AnalysisResult | None = None


def score_singlet(
    result: AnalysisResult, angles1_deg: Sequence[float], angles2_deg: Sequence[float], d: float
) -> DScore:
    a = np.radians(np.asarray(angles1_deg, dtype=float))
    b = np.radians(np.asarray(angles2_deg, dtype=float))
    q = singlet_E(a[:, None], b[None, :])
    st = result.stats
    ok = st.count > 0
    if not ok.any():
        nan = math.nan
        return DScore(d, nan, nan, nan, nan, 0, 0, result)
    n = st.count[ok].astype(float)
    err = st.E[ok] - q[ok]
    var = np.maximum(1.0 - q[ok] ** 2, 1.0 / n)
    return DScore(
        d=d,
        chi2_dof=float(np.mean(n * err**2 / var)),
        max_abs_err=float(np.max(np.abs(err))),
        max_abs_E1=float(np.max(np.abs(st.E1[ok]))),
        max_abs_E2=float(np.max(np.abs(st.E2[ok]))),
        n_coincidences=result.n_coincidences,
        n_pairs_defined=int(ok.sum()),
        result=result,
    )


def calibrate_d(
    N: int,
    angles1_deg: Sequence[float],
    angles2_deg: Sequence[float],
    d_list: Sequence[float],
    cfg: AnalysisConfig = AnalysisConfig(),
    *,
    T0: float = 1.0,
    seed: int = 1,
    chunk_size: int = 1 << 18,
) -> tuple[float, list[DScore]]:
    """Simulate once per ``d`` (same seed) and return the best ``d`` by chi2/dof."""
    if not d_list:
        raise ValueError("d_list is empty")
    scores = []
    for d in d_list:
        st1 = StationConfig(1, angles1_deg, T0=T0, d=d)
        st2 = StationConfig(2, angles2_deg, T0=T0, d=d)
        ds1, ds2 = run_experiment(N, st1, st2, seed=seed, chunk_size=chunk_size)
        scores.append(score_singlet(analyze(ds1, ds2, cfg), angles1_deg, angles2_deg, d))
    finite = [s for s in scores if math.isfinite(s.chi2_dof)]
    if not finite:
        raise ValueError("no d value produced any coincidence")
    best = min(finite, key=lambda s: s.chi2_dof)
    return best.d, scores
