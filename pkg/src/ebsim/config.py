"""Run configuration: ``key=value`` text or CLI flags, validated in one place.

Angles are given in degrees.  ``tau`` and ``W`` default to ``0.00025 * T0``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Any, Iterable, Mapping

from .errors import ConfigError
from .rng import MAX_SEED

KINDS = (
    "bs", "mzi", "eprb-generate", "eprb-analyze", "smax-sweep",
    "histogram", "oracle", "calibrate-d",
)
DEFAULT_WINDOW_FRACTION = 0.00025


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


@dataclass
class RunConfig:
    kind: str = "eprb-generate"
    seed: int = 1
    # learning machines
    N: int = 1_000_000
    alpha: float = 0.99
    p0: float = 0.5
    psi0: float = 0.0
    psi1: float = 0.0
    transient: int = 1000
    phi0: float = 0.0
    phi1: float = 0.0
    phi_step: float = 10.0
    input_phase: str = "per-run"
    # EPRB generation
    M: int = 20
    angles1: tuple[float, ...] | None = None
    angles2: tuple[float, ...] | None = None
    source: str = "singlet"
    xi1: float = 0.0
    xi2: float = 0.0
    T0: float = 1.0
    d: float = 2.0
    chunk_size: int = 1 << 18
    # analysis
    tau: float | None = None
    W: float | None = None
    delta: float = 0.0
    pairing: str = "index"
    rule: str = "discrete"
    W_list: tuple[float, ...] | None = None
    resolution: float | None = None
    bin_width: float = 0.02
    outcome: tuple[int, ...] = (1, 1)
    setting: tuple[int, ...] = (1, 1)
    d_list: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0)
    table: str = "singlet"
    grid_step: float = 5.0
    # paths
    in1: str | None = None
    in2: str | None = None
    out1: str = "station1.dat"
    out2: str = "station2.dat"
    csv: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _parser_for(name: str):
    t = str(_FIELDS[name].type)
    if "tuple[int" in t:
        return _ints
    if "tuple[float" in t:
        return _floats
    if t.startswith("int"):
        return int
    if t.startswith("float"):
        return float
    return str


def _coerce(name: str, raw: Any) -> Any:
    if name not in _FIELDS:
        raise ConfigError(f"unknown key {name!r}")
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(raw, list) else raw
    raw = raw.strip()
    if raw.lower() in ("", "none") and "None" in str(_FIELDS[name].type):
        return None
    try:
        return _parser_for(name)(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from None


def parse_config(
    text: str = "", overrides: Mapping[str, Any] | Iterable[str] | None = None
) -> RunConfig:
    """Parse ``key=value`` lines (``#`` starts a comment), apply overrides, validate."""
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for item in line.split(";") if ";" in line else _split_items(line):
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"line {lineno}: expected key=value, got {item!r}")
            values[key.strip()] = _coerce(key.strip(), val)
    if overrides:
        items = overrides.items() if isinstance(overrides, Mapping) else (
            o.partition("=")[::2] for o in overrides
        )
        for key, val in items:
            values[key] = _coerce(key, val)
    return validate(RunConfig(**values))


def _split_items(line: str) -> list[str]:
    """Split ``a=1, b=2`` style lines; commas inside list values are kept."""
    items: list[str] = []
    for chunk in line.split(","):
        if "=" in chunk or not items:
            items.append(chunk)
        else:
            items[-1] += "," + chunk
    return [i.strip() for i in items if i.strip()]


def _require(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def validate(cfg: RunConfig) -> RunConfig:
    """Range-check every field and fill derived defaults in place."""
    _require(cfg.kind in KINDS, "kind", f"must be one of {', '.join(KINDS)}")
    _require(0 <= cfg.seed <= MAX_SEED, "seed", "must be in [0, 2**64)")
    _require(cfg.N >= 1, "N", "must be >= 1")
    _require(0.0 < cfg.alpha < 1.0, "alpha", "must be in (0, 1)")
    _require(0.0 <= cfg.p0 <= 1.0, "p0", "must be in [0, 1]")
    _require(cfg.transient >= 0, "transient", "must be >= 0")
    for key in ("psi0", "psi1", "phi0", "phi1", "xi1", "xi2", "delta"):
        _require(math.isfinite(getattr(cfg, key)), key, "must be finite")
    _require(cfg.phi_step > 0, "phi_step", "must be > 0")
    _require(cfg.input_phase in ("fixed", "per-run", "per-event"), "input_phase",
             "must be fixed, per-run or per-event")
    _require(cfg.M >= 1, "M", "must be >= 1")
    for key in ("angles1", "angles2"):
        v = getattr(cfg, key)
        _require(v is None or (len(v) >= 1 and all(map(math.isfinite, v))), key,
                 "must be a non-empty list of finite angles")
    _require(cfg.source in ("singlet", "fixed"), "source", "must be singlet or fixed")
    _require(cfg.T0 > 0, "T0", "must be > 0")
    _require(cfg.d >= 0, "d", "must be >= 0")
    _require(cfg.chunk_size >= 1, "chunk_size", "must be >= 1")
    if cfg.tau is None:
        cfg.tau = DEFAULT_WINDOW_FRACTION * cfg.T0
    if cfg.W is None:
        cfg.W = max(cfg.tau, DEFAULT_WINDOW_FRACTION * cfg.T0)
    if cfg.resolution is None:
        cfg.resolution = 4.0 * cfg.tau
    _require(cfg.tau > 0, "tau", "must be > 0")
    _require(cfg.W >= cfg.tau, "W", f"must satisfy tau <= W (tau={cfg.tau}, W={cfg.W})")
    _require(cfg.pairing in ("index", "time"), "pairing", "must be index or time")
    _require(cfg.rule in ("discrete", "continuous"), "rule", "must be discrete or continuous")
    if cfg.W_list is not None:
        _require(len(cfg.W_list) >= 1, "W_list", "must not be empty")
        _require(list(cfg.W_list) == sorted(cfg.W_list), "W_list", "must be ascending")
        _require(min(cfg.W_list) >= cfg.tau, "W_list", "every W must be >= tau")
    _require(cfg.resolution > 0, "resolution", "must be > 0")
    _require(cfg.bin_width > 0, "bin_width", "must be > 0")
    _require(len(cfg.outcome) == 2 and set(cfg.outcome) <= {1, -1}, "outcome",
             "must be two values from +1/-1")
    _require(len(cfg.setting) == 2 and min(cfg.setting) >= 1, "setting",
             "must be two 1-based setting indices")
    _require(len(cfg.d_list) >= 1 and min(cfg.d_list) >= 0, "d_list",
             "must be non-empty with d >= 0")
    _require(cfg.table in ("singlet", "bell", "mzi", "bs"), "table",
             "must be singlet, bell, mzi or bs")
    _require(cfg.grid_step > 0, "grid_step", "must be > 0")
    return cfg
