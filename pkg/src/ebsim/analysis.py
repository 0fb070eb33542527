"""Coincidence counting and correlation analysis of two station datasets.

Pairs are formed either by event index (simulated data, both stations log the
same ``n``) or by greedy one-to-one time matching (real-style data with
unequal counts).  A pair is a coincidence under the discretized rule
``|ceil(t1/tau) - ceil((t2 + delta)/tau)| < ceil(W/tau)`` (default) or the
continuous rule ``|t1 - (t2 + delta)| <= W``.  ``delta`` shifts the raw
station-2 tags before discretization.

Undefined statistics (no coincidences for a setting pair, or a degenerate
marginal for ``rho``) are NaN, never zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .eprb import StationDataset


class Pairing(str, enum.Enum):
    INDEX = "index"
    TIME = "time"


class Rule(str, enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class AnalysisConfig:
    tau: float = 0.00025
    W: float = 0.00025
    delta: float = 0.0
    pairing: Pairing = Pairing.INDEX
    rule: Rule = Rule.DISCRETE

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairing", Pairing(self.pairing))
        object.__setattr__(self, "rule", Rule(self.rule))
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not (math.isfinite(self.W) and self.W >= self.tau):
            raise ValueError(f"W must satisfy W >= tau, got W={self.W}, tau={self.tau}")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")

    @property
    def window_bins(self) -> int:
        # guard against W/tau landing a hair above an integer
        return math.ceil(round(self.W / self.tau, 9))


def discretize(t, tau: float):
    """Time-tag bin ``ceil(t / tau)``."""
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    k = np.ceil(np.asarray(t, dtype=np.float64) / tau).astype(np.int64)
    return int(k) if k.ndim == 0 else k


def _is_coincident(t1, t2_shifted, cfg: AnalysisConfig) -> np.ndarray:
    if cfg.rule is Rule.CONTINUOUS:
        return np.abs(t1 - t2_shifted) <= cfg.W
    k1 = discretize(t1, cfg.tau)
    k2 = discretize(t2_shifted, cfg.tau)
    return np.abs(k1 - k2) < cfg.window_bins


def align_by_index(ds1: StationDataset, ds2: StationDataset) -> tuple[np.ndarray, np.ndarray]:
    """Positions ``(p1, p2)`` such that ``ds1.n[p1] == ds2.n[p2]`` elementwise."""
    if len(ds1) != len(ds2):
        raise ValueError(
            f"index pairing needs equal-length datasets, got {len(ds1)} and {len(ds2)}"
        )
    p1 = np.argsort(ds1.n, kind="stable")
    p2 = np.argsort(ds2.n, kind="stable")
    if not np.array_equal(ds1.n[p1], ds2.n[p2]):
        raise ValueError("index pairing needs both datasets to carry the same event indices")
    return p1, p2


def _greedy_time_match(
    t1: np.ndarray, t2: np.ndarray, cfg: AnalysisConfig
) -> tuple[np.ndarray, np.ndarray]:
    """One-to-one matching, closest coincident pairs first.

    Ties in ``|t1 - t2|`` are broken by the station-1 then station-2
    position in time order, so the result is deterministic.
    """
    o1 = np.argsort(t1, kind="stable")
    o2 = np.argsort(t2, kind="stable")
    a, b = t1[o1], t2[o2]
    reach = cfg.W + cfg.tau
    lo = np.searchsorted(b, a - reach, side="left")
    hi = np.searchsorted(b, a + reach, side="right")
    cnt = hi - lo
    total = int(cnt.sum())
    if total == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    ii = np.repeat(np.arange(a.size), cnt)
    start = np.repeat(np.cumsum(cnt) - cnt, cnt)
    jj = np.arange(total) - start + np.repeat(lo, cnt)
    ok = _is_coincident(a[ii], b[jj], cfg)
    ii, jj = ii[ok], jj[ok]
    dist = np.abs(a[ii] - b[jj])
    order = np.lexsort((jj, ii, dist))
    used1 = np.zeros(a.size, bool)
    used2 = np.zeros(b.size, bool)
    keep1, keep2 = [], []
    for i, j in zip(ii[order].tolist(), jj[order].tolist()):
        if not used1[i] and not used2[j]:
            used1[i] = used2[j] = True
            keep1.append(i)
            keep2.append(j)
    return o1[np.asarray(keep1, np.int64)], o2[np.asarray(keep2, np.int64)]


def match_pairs(
    ds1: StationDataset,
    ds2: StationDataset,
    cfg: AnalysisConfig,
    aligned: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Positions of coincident pairs in ``ds1`` and ``ds2``."""
    if cfg.pairing is Pairing.TIME:
        return _greedy_time_match(ds1.t, ds2.t + cfg.delta, cfg)
    p1, p2 = aligned if aligned is not None else align_by_index(ds1, ds2)
    ok = _is_coincident(ds1.t[p1], ds2.t[p2] + cfg.delta, cfg)
    return p1[ok], p2[ok]


@dataclass
class CoincidenceTable:
    """Counts ``C_xy(m, m')`` stored as ``counts[ix, iy, m-1, m'-1]``.

    ``ix``/``iy`` are 0 for outcome +1 and 1 for outcome -1.
    """

    counts: np.ndarray

    @property
    def M1(self) -> int:
        return self.counts.shape[2]

    @property
    def M2(self) -> int:
        return self.counts.shape[3]

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=(0, 1))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def C(self, x: int, y: int, m: int, mp: int) -> int:
        return int(self.counts[(1 - x) // 2, (1 - y) // 2, m - 1, mp - 1])

    @classmethod
    def from_outcomes(cls, x1, x2, m1, m2, M1: int, M2: int) -> "CoincidenceTable":
        ix = (1 - np.asarray(x1, np.int64)) // 2
        iy = (1 - np.asarray(x2, np.int64)) // 2
        flat = ((ix * 2 + iy) * M1 + (np.asarray(m1) - 1)) * M2 + (np.asarray(m2) - 1)
        counts = np.bincount(flat, minlength=4 * M1 * M2).reshape(2, 2, M1, M2)
        return cls(counts)


def count_coincidences(
    ds1: StationDataset, ds2: StationDataset, cfg: AnalysisConfig
) -> CoincidenceTable:
    i1, i2 = match_pairs(ds1, ds2, cfg)
    return CoincidenceTable.from_outcomes(ds1.x[i1], ds2.x[i2], ds1.m[i1], ds2.m[i2], ds1.M, ds2.M)


class SettingPairStats(NamedTuple):
    E1: float
    E2: float
    E: float
    rho: float
    count: int

    @property
    def defined(self) -> bool:
        return self.count > 0


@dataclass
class PairStatsTable:
    """Per setting pair statistics as ``(M1, M2)`` arrays (NaN where undefined)."""

    E1: np.ndarray
    E2: np.ndarray
    E: np.ndarray
    rho: np.ndarray
    count: np.ndarray

    def at(self, m: int, mp: int) -> SettingPairStats:
        k = (m - 1, mp - 1)
        return SettingPairStats(
            float(self.E1[k]), float(self.E2[k]), float(self.E[k]), float(self.rho[k]),
            int(self.count[k]),
        )


def pair_statistics(table: CoincidenceTable) -> PairStatsTable:
    """Single-particle averages, two-particle average and correlation.

    ``rho`` is the normalized covariance built from the first and second
    moments of ``x`` and ``y``; it is NaN when either variance vanishes.
    """
    c = table.counts.astype(np.float64)
    n = c.sum(axis=(0, 1))
    xs = np.array([1.0, -1.0])
    sx = np.einsum("i,ijab->ab", xs, c)
    sy = np.einsum("j,ijab->ab", xs, c)
    sxy = np.einsum("i,j,ijab->ab", xs, xs, c)
    sxx = np.einsum("i,ijab->ab", xs * xs, c)
    syy = np.einsum("j,ijab->ab", xs * xs, c)
    with np.errstate(invalid="ignore", divide="ignore"):
        E1 = sx / n
        E2 = sy / n
        E = sxy / n
        var1 = sxx / n - E1 * E1
        var2 = syy / n - E2 * E2
        denom = np.sqrt(var1 * var2)
        rho = np.where(denom > 1e-15, (E - E1 * E2) / denom, np.nan)
    return PairStatsTable(E1, E2, E, rho, n.astype(np.int64))


def stats_for(table: CoincidenceTable, m: int, mp: int) -> SettingPairStats:
    """Statistics for setting pair ``(m, mp)`` (1-based)."""
    sub = CoincidenceTable(table.counts[:, :, m - 1 : m, mp - 1 : mp])
    return pair_statistics(sub).at(1, 1)


@dataclass
class ChshResult:
    """CHSH values over all ordered quadruples ``(a, b, c, d)``.

    ``S[a, b, c, d] = E[a,c] - E[a,d] + E[b,c] + E[b,d]`` (0-based indices,
    NaN when any term is undefined).  ``smax`` is the largest ``|S|``;
    ``argmax`` gives the 1-based quadruple and ``s_at_max`` its signed value.
    """

    S: np.ndarray
    smax: float
    argmax: tuple[int, int, int, int]
    s_at_max: float


def chsh(E: np.ndarray | Mapping[tuple[int, int], float]) -> ChshResult:
    """Exhaustive search for the largest ``|S|``.

    ``E`` is an ``(M1, M2)`` array or a mapping ``(m, m') -> E`` with 1-based
    keys.  Quadruples involving an undefined ``E`` are skipped.
    """
    if isinstance(E, Mapping):
        M1 = max(k[0] for k in E)
        M2 = max(k[1] for k in E)
        arr = np.full((M1, M2), np.nan)
        for (m, mp), v in E.items():
            arr[m - 1, mp - 1] = v
        E = arr
    E = np.asarray(E, dtype=np.float64)
    S = (
        E[:, None, :, None]
        - E[:, None, None, :]
        + E[None, :, :, None]
        + E[None, :, None, :]
    )
    absS = np.abs(S)
    if np.all(np.isnan(absS)):
        raise ValueError("no CHSH quadruple has all four correlations defined")
    flat = int(np.nanargmax(absS))
    idx = np.unravel_index(flat, S.shape)
    return ChshResult(
        S=S,
        smax=float(absS[idx]),
        argmax=tuple(int(i) + 1 for i in idx),
        s_at_max=float(S[idx]),
    )


@dataclass
class AnalysisResult:
    cfg: AnalysisConfig
    table: CoincidenceTable
    stats: PairStatsTable
    chsh: ChshResult | None

    @property
    def n_coincidences(self) -> int:
        return self.table.total

    @property
    def smax(self) -> float:
        return self.chsh.smax if self.chsh is not None else math.nan


def analyze(
    ds1: StationDataset,
    ds2: StationDataset,
    cfg: AnalysisConfig,
    aligned: tuple[np.ndarray, np.ndarray] | None = None,
) -> AnalysisResult:
    i1, i2 = match_pairs(ds1, ds2, cfg, aligned)
    table = CoincidenceTable.from_outcomes(ds1.x[i1], ds2.x[i2], ds1.m[i1], ds2.m[i2], ds1.M, ds2.M)
    stats = pair_statistics(table)
    try:
        res = chsh(stats.E)
    except ValueError:
        res = None
    return AnalysisResult(cfg, table, stats, res)


def find_delta(
    ds1: StationDataset,
    ds2: StationDataset,
    resolution: float,
    *,
    max_offset: float | None = None,
    pairing: Pairing | str = Pairing.INDEX,
) -> float:
    """Relative shift that maximizes the number of nearby pairs.

    Histograms ``t1 - t2`` in bins of width ``resolution`` centered on
    multiples of ``resolution`` and returns the most populated center.
    Index pairing uses the differences of equal-index events; time pairing
    uses every pair with ``|t1 - t2| <= max_offset``.  Adding the returned
    value to station-2 tags aligns the stations.
    """
    if len(ds1) == 0 or len(ds2) == 0:
        raise ValueError("find_delta needs non-empty datasets")
    if not resolution > 0:
        raise ValueError(f"resolution must be > 0, got {resolution}")
    pairing = Pairing(pairing)
    if pairing is Pairing.INDEX:
        p1, p2 = align_by_index(ds1, ds2)
        diffs = ds1.t[p1] - ds2.t[p2]
        if max_offset is not None:
            diffs = diffs[np.abs(diffs) <= max_offset]
        if diffs.size == 0:
            raise ValueError("no pairs within max_offset")
        k = np.rint(diffs / resolution).astype(np.int64)
        kmin = int(k.min())
        hist = np.bincount(k - kmin)
        return float((int(np.argmax(hist)) + kmin) * resolution)
    if max_offset is None:
        raise ValueError("time pairing needs max_offset")
    # bins span [-max_offset, max_offset]; pairs are histogrammed block by block
    kmax = int(math.floor(max_offset / resolution + 0.5))
    hist = np.zeros(2 * kmax + 1, np.int64)
    b = np.sort(ds2.t)
    lo = np.searchsorted(b, ds1.t - max_offset, side="left")
    hi = np.searchsorted(b, ds1.t + max_offset, side="right")
    cnt = hi - lo
    ends = np.cumsum(cnt)
    start = 0
    while start < ds1.t.size:
        base = ends[start - 1] if start else 0
        stop = max(start + 1, int(np.searchsorted(ends, base + _PAIR_BLOCK, side="right")))
        c = cnt[start:stop]
        total = int(c.sum())
        if total:
            off = np.repeat(np.cumsum(c) - c, c)
            jj = np.arange(total) - off + np.repeat(lo[start:stop], c)
            d = np.repeat(ds1.t[start:stop], c) - b[jj]
            k = np.rint(d / resolution).astype(np.int64)
            ok = np.abs(k) <= kmax
            hist += np.bincount(k[ok] + kmax, minlength=hist.size)
        start = stop
    if hist.sum() == 0:
        raise ValueError("no pairs within max_offset")
    return float((int(np.argmax(hist)) - kmax) * resolution)


_PAIR_BLOCK = 1 << 22


class WindowPoint(NamedTuple):
    W: float
    smax: float
    n_coincidences: int


def smax_vs_window(
    ds1: StationDataset,
    ds2: StationDataset,
    W_list: Sequence[float],
    cfg: AnalysisConfig = AnalysisConfig(),
) -> list[WindowPoint]:
    """Run the full analysis once per window width."""
    W_list = [float(w) for w in W_list]
    if not W_list:
        raise ValueError("W_list is empty")
    if any(b < a for a, b in zip(W_list, W_list[1:])):
        raise ValueError("W_list must be sorted ascending")
    aligned = align_by_index(ds1, ds2) if cfg.pairing is Pairing.INDEX else None
    out = []
    for W in W_list:
        res = analyze(ds1, ds2, replace(cfg, W=W), aligned)
        out.append(WindowPoint(W, res.smax, res.n_coincidences))
    return out


@dataclass
class Histogram:
    centers: np.ndarray
    values: np.ndarray
    n_pairs: int

    @property
    def empty(self) -> bool:
        return self.n_pairs == 0

    def peak(self) -> float:
        if self.empty:
            return math.nan
        return float(self.centers[int(np.argmax(self.values))])


def coincidence_time_histogram(
    ds1: StationDataset,
    ds2: StationDataset,
    outcome: tuple[int, int],
    setting: tuple[int, int],
    bin_width: float,
    cfg: AnalysisConfig | None = None,
) -> Histogram:
    """Histogram of ``t1 - (t2 + delta)`` over coincident pairs passing the filters.

    Bins are centered on multiples of ``bin_width``; values sum to one.
    With ``cfg=None`` every index pair counts (window wider than any delay).
    """
    if not bin_width > 0:
        raise ValueError(f"bin_width must be > 0, got {bin_width}")
    if cfg is None:
        span = max(ds1.T0, ds2.T0)
        cfg = AnalysisConfig(tau=bin_width, W=max(bin_width, 2.0 * span))
    x, y = outcome
    m, mp = setting
    if x not in (1, -1) or y not in (1, -1):
        raise ValueError(f"outcome filter must be +-1, got {outcome}")
    if not (1 <= m <= ds1.M and 1 <= mp <= ds2.M):
        raise ValueError(f"setting filter {setting} out of range")
    i1, i2 = match_pairs(ds1, ds2, cfg)
    sel = (ds1.x[i1] == x) & (ds2.x[i2] == y) & (ds1.m[i1] == m) & (ds2.m[i2] == mp)
    diffs = ds1.t[i1[sel]] - (ds2.t[i2[sel]] + cfg.delta)
    if diffs.size == 0:
        return Histogram(np.empty(0), np.empty(0), 0)
    k = np.rint(diffs / bin_width).astype(np.int64)
    kmin = int(k.min())
    counts = np.bincount(k - kmin)
    centers = (np.arange(counts.size) + kmin) * bin_width
    return Histogram(centers, counts / counts.sum(), int(diffs.size))
