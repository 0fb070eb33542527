"""Command-line entry point.

Every subcommand takes ``--config FILE`` (``key=value`` lines) and one
``--<key> VALUE`` flag per configuration field; flags override the file.
Results are CSV with a commented config header, written to ``--csv`` or
stdout.  Angles are degrees.

Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import fields
from typing import Sequence

import numpy as np

from . import quantum
from .analysis import (
    AnalysisConfig,
    analyze,
    coincidence_time_histogram,
    smax_vs_window,
)
from .calibration import calibrate_d
from .config import RunConfig, parse_config
from .dataio import DatasetWriter, emit_curve, format_curve, read_dataset
from .dlm import mzi_sweep, run_beam_splitter
from .eprb import (
    FixedPolarization,
    SingletRandom,
    StationConfig,
    iter_experiment,
    random_angles,
    run_experiment,
)
from .errors import ConfigError, DataError

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

COMMANDS = {
    "bs": "beam splitter output fractions vs the quantum intensities",
    "mzi": "Mach-Zehnder sweep of phi0 (columns phi, N2_frac, quantum_ref)",
    "eprb": "EPRB experiment: 'generate' datasets or 'analyze' them",
    "smax-sweep": "Smax versus coincidence window (columns W, Smax, n_coincidences)",
    "histogram": "time-difference histogram of coincidences (columns bin_center, normalized_count)",
    "oracle": "quantum / Bell-model reference tables",
    "calibrate-d": "sweep the delay exponent d against the singlet correlation",
}


# --- helpers ---------------------------------------------------------------


def _output(cfg: RunConfig, columns, rows, extra: dict | None = None) -> None:
    meta = cfg.as_dict()
    if extra:
        meta.update(extra)
    if cfg.csv:
        emit_curve(cfg.csv, columns, rows, meta)
        print(f"wrote {cfg.csv}", file=sys.stderr)
    else:
        sys.stdout.write(format_curve(columns, rows, meta))


def _station_angles(cfg: RunConfig) -> tuple[list[float], list[float]]:
    if cfg.angles1 is not None and cfg.angles2 is not None:
        return list(cfg.angles1), list(cfg.angles2)
    r1, r2 = random_angles(cfg.M, cfg.seed)
    return (
        list(cfg.angles1) if cfg.angles1 is not None else r1,
        list(cfg.angles2) if cfg.angles2 is not None else r2,
    )


def _source(cfg: RunConfig):
    if cfg.source == "fixed":
        return FixedPolarization(
            math.radians(cfg.xi1) % (2 * math.pi), math.radians(cfg.xi2) % (2 * math.pi)
        )
    return SingletRandom()


def _stations(cfg: RunConfig) -> tuple[StationConfig, StationConfig]:
    a1, a2 = _station_angles(cfg)
    return StationConfig(1, a1, cfg.T0, cfg.d), StationConfig(2, a2, cfg.T0, cfg.d)


def _analysis_config(cfg: RunConfig, W: float | None = None) -> AnalysisConfig:
    return AnalysisConfig(
        tau=cfg.tau, W=cfg.W if W is None else W, delta=cfg.delta,
        pairing=cfg.pairing, rule=cfg.rule,
    )


def _datasets(cfg: RunConfig):
    """Read ``in1``/``in2`` if given, else simulate in memory."""
    if cfg.in1 or cfg.in2:
        if not (cfg.in1 and cfg.in2):
            raise ConfigError("in1/in2: both input files are required")
        return read_dataset(cfg.in1), read_dataset(cfg.in2)
    st1, st2 = _stations(cfg)
    return run_experiment(cfg.N, st1, st2, _source(cfg), seed=cfg.seed, chunk_size=cfg.chunk_size)


def _angle_grid(step: float, stop: float) -> np.ndarray:
    return np.arange(0.0, stop - 1e-9, step)


# --- subcommands -----------------------------------------------------------


def cmd_bs(cfg: RunConfig) -> None:
    c0, c1 = run_beam_splitter(
        cfg.N, cfg.p0, math.radians(cfg.psi0), math.radians(cfg.psi1),
        alpha=cfg.alpha, transient=cfg.transient, seed=cfg.seed,
    )
    i0, i1 = quantum.bs_intensities(cfg.p0, math.radians(cfg.psi0), math.radians(cfg.psi1))
    total = c0 + c1
    _output(
        cfg,
        ["p0", "psi0", "psi1", "N_out0", "N_out1", "frac0", "frac1", "quantum_I0", "quantum_I1"],
        [[cfg.p0, cfg.psi0, cfg.psi1, c0, c1, c0 / total, c1 / total, i0, i1]],
    )


def cmd_mzi(cfg: RunConfig) -> None:
    phis = _angle_grid(cfg.phi_step, 360.0)
    points = mzi_sweep(
        np.radians(phis).tolist(), math.radians(cfg.phi1), cfg.N,
        input_phase=cfg.input_phase, psi0=math.radians(cfg.psi0),
        alpha=cfg.alpha, seed=cfg.seed,
    )
    rows = []
    for deg, (phi0, (_, _, n2, n3)) in zip(phis.tolist(), points):
        p2, _ = quantum.mzi_probabilities(phi0, math.radians(cfg.phi1))
        rows.append([deg, n2 / (n2 + n3), p2])
    _output(cfg, ["phi", "N2_frac", "quantum_ref"], rows)


def cmd_eprb_generate(cfg: RunConfig) -> None:
    st1, st2 = _stations(cfg)
    src = _source(cfg)
    w1 = w2 = None
    try:
        for part1, part2 in iter_experiment(
            cfg.N, st1, st2, src, seed=cfg.seed, chunk_size=cfg.chunk_size
        ):
            if w1 is None:
                w1 = DatasetWriter(cfg.out1, part1, cfg.N)
                w2 = DatasetWriter(cfg.out2, part2, cfg.N)
            w1.write(part1)
            w2.write(part2)
    finally:
        for w in (w1, w2):
            if w is not None:
                w.close()
    print(f"wrote {cfg.out1} and {cfg.out2} ({cfg.N} events each)", file=sys.stderr)


def cmd_eprb_analyze(cfg: RunConfig) -> None:
    ds1, ds2 = _datasets(cfg)
    res = analyze(ds1, ds2, _analysis_config(cfg))
    st = res.stats
    rows = []
    for i, a in enumerate(ds1.angles_deg):
        for j, b in enumerate(ds2.angles_deg):
            rows.append([
                i + 1, j + 1, a, b, int(st.count[i, j]),
                float(st.E1[i, j]), float(st.E2[i, j]), float(st.E[i, j]), float(st.rho[i, j]),
                float(quantum.singlet_E(math.radians(a), math.radians(b))),
            ])
    extra = {"n_coincidences": res.n_coincidences, "Smax": res.smax}
    if res.chsh is not None:
        extra["Smax_settings"] = list(res.chsh.argmax)
    _output(cfg, ["m1", "m2", "alpha", "beta", "count", "E1", "E2", "E", "rho", "quantum_E"],
            rows, extra)
    print(f"coincidences {res.n_coincidences}  Smax {res.smax:.6f}", file=sys.stderr)


def cmd_smax_sweep(cfg: RunConfig) -> None:
    ds1, ds2 = _datasets(cfg)
    W_list = cfg.W_list
    if W_list is None:
        top = max(ds1.T0, ds2.T0)
        W_list = tuple(cfg.tau * 2.0**k for k in range(64) if cfg.tau * 2.0 ** (k - 1) < top)
    pts = smax_vs_window(ds1, ds2, W_list, _analysis_config(cfg))
    _output(cfg, ["W", "Smax", "n_coincidences"], [[p.W, p.smax, p.n_coincidences] for p in pts])


def cmd_histogram(cfg: RunConfig, window_given: bool) -> None:
    ds1, ds2 = _datasets(cfg)
    acfg = _analysis_config(cfg) if window_given else None
    h = coincidence_time_histogram(
        ds1, ds2, tuple(cfg.outcome), tuple(cfg.setting), cfg.bin_width, acfg
    )
    if h.empty:
        raise DataError("no coincidences pass the outcome/setting filter")
    _output(cfg, ["bin_center", "normalized_count"],
            [[float(c), float(v)] for c, v in zip(h.centers, h.values)],
            {"n_pairs": h.n_pairs, "peak": h.peak()})


def cmd_oracle(cfg: RunConfig) -> None:
    if cfg.table in ("singlet", "bell"):
        grid = _angle_grid(cfg.grid_step, 180.0)
        rows = []
        for a in grid.tolist():
            for b in grid.tolist():
                ra, rb = math.radians(a), math.radians(b)
                if cfg.table == "singlet":
                    p = quantum.singlet_prediction(ra, rb)
                    rows.append([a, b, p.E1, p.E2, p.E])
                else:
                    rows.append([a, b, float(quantum.bell_triangle_E(ra, rb))])
        cols = ["alpha", "beta", "E1", "E2", "E"] if cfg.table == "singlet" else ["alpha", "beta", "E"]
        _output(cfg, cols, rows)
    elif cfg.table == "mzi":
        rows = [[p, *quantum.mzi_probabilities(math.radians(p), math.radians(cfg.phi1))]
                for p in _angle_grid(cfg.grid_step, 360.0).tolist()]
        _output(cfg, ["phi0", "P2", "P3"], rows)
    else:
        rows = [[p, *quantum.bs_intensities(cfg.p0, math.radians(p), math.radians(cfg.psi1))]
                for p in _angle_grid(cfg.grid_step, 360.0).tolist()]
        _output(cfg, ["psi0", "I0", "I1"], rows)


def cmd_calibrate_d(cfg: RunConfig) -> None:
    a1, a2 = _station_angles(cfg)
    best, scores = calibrate_d(
        cfg.N, a1, a2, list(cfg.d_list), _analysis_config(cfg),
        T0=cfg.T0, seed=cfg.seed, chunk_size=cfg.chunk_size,
    )
    rows = [[s.d, s.chi2_dof, s.max_abs_err, s.max_abs_E1, s.max_abs_E2, s.n_coincidences]
            for s in scores]
    _output(cfg, ["d", "chi2_dof", "max_abs_err", "max_abs_E1", "max_abs_E2", "n_coincidences"],
            rows, {"d_star": best})
    print(f"d* = {best:g}", file=sys.stderr)


# --- argument parsing ------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key=value configuration file")
    for f in fields(RunConfig):
        if f.name == "kind":
            continue
        flag = "--" + f.name.replace("_", "-")
        names = [flag] if flag == "--" + f.name else [flag, "--" + f.name]
        p.add_argument(*names, dest=f.name, metavar="VALUE", default=None,
                       help=f"default: {f.default!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebsim", description="Event-by-event simulation of single-photon and EPRB experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_)
        if name == "eprb":
            p.add_argument("action", choices=("generate", "analyze"))
        _add_common(p)
    return parser


def _kind(args: argparse.Namespace) -> str:
    return f"eprb-{args.action}" if args.command == "eprb" else args.command


def load_config(args: argparse.Namespace) -> tuple[RunConfig, bool]:
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
    overrides = {"kind": _kind(args)}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if f.name != "kind" and v is not None:
            overrides[f.name] = v
    window_given = "W" in overrides or any(
        line.split("#", 1)[0].replace(" ", "").startswith("W=") or ",W=" in line.replace(" ", "")
        for line in text.splitlines()
    )
    return parse_config(text, overrides), window_given


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, window_given = load_config(args)
        kind = cfg.kind
        if kind == "histogram":
            cmd_histogram(cfg, window_given)
        else:
            {
                "bs": cmd_bs,
                "mzi": cmd_mzi,
                "eprb-generate": cmd_eprb_generate,
                "eprb-analyze": cmd_eprb_analyze,
                "smax-sweep": cmd_smax_sweep,
                "oracle": cmd_oracle,
                "calibrate-d": cmd_calibrate_d,
            }[kind](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
