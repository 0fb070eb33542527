from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebsim.dlm import (
    CandidatePair,
    DegenerateEmissionError,
    DlmBeamSplitter,
    InvalidMessageError,
    MziNetwork,
    PhaseMessage,
    closed_form_x,
    emit,
    mzi_sweep,
    phase_shift,
    run_beam_splitter,
    run_mzi,
)
from ebsim.quantum import bs_intensities
from ebsim.rng import RandomStream

angles = st.floats(-10.0, 10.0, allow_nan=False)
alphas = st.floats(1e-3, 0.999, allow_nan=False)


def test_learning_step():
    bs = DlmBeamSplitter(alpha=0.9)
    bs.store_and_learn(0, (0.0, 1.0))
    assert bs.x == pytest.approx((0.9 * 0.5 + 0.1, 0.45), abs=1e-15)
    assert bs.Y0 == (0.0, 1.0)
    assert bs.Y1 == (1.0, 0.0)
    bs.store_and_learn(1, PhaseMessage.from_angle(math.pi))
    assert bs.x == pytest.approx((0.9 * 0.55, 0.9 * 0.45 + 0.1), abs=1e-15)


def test_rejects_bad_inputs():
    with pytest.raises(InvalidMessageError):
        DlmBeamSplitter().store_and_learn(0, (1.0, 1.0))
    with pytest.raises(ValueError):
        DlmBeamSplitter().store_and_learn(2, (1.0, 0.0))
    with pytest.raises(ValueError):
        DlmBeamSplitter(alpha=1.0)
    with pytest.raises(ValueError):
        DlmBeamSplitter(x=(0.7, 0.7))


@settings(max_examples=200, deadline=None)
@given(a=alphas, x0=st.floats(0.0, 1.0), p0=angles, p1=angles)
def test_candidate_norms_sum_to_one(a, x0, p0, p1):
    bs = DlmBeamSplitter(a, (x0, 1.0 - x0), PhaseMessage.from_angle(p0), PhaseMessage.from_angle(p1))
    pair = bs.transform()
    assert pair.w_norm2 + pair.z_norm2 == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(p=st.floats(0.0, 1.0), psi0=angles, psi1=angles)
def test_w_norm_is_beam_splitter_intensity(p, psi0, psi1):
    # with x pinned at (p0, 1 - p0) the emission probability is exactly I0
    bs = DlmBeamSplitter(0.5, (p, 1.0 - p), PhaseMessage.from_angle(psi0), PhaseMessage.from_angle(psi1))
    i0, _ = bs_intensities(p, psi0, psi1)
    assert bs.transform().w_norm2 == pytest.approx(i0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(a=alphas, events=st.lists(st.integers(0, 1), max_size=300), x0=st.floats(0.0, 1.0))
def test_closed_form_matches_iteration(a, events, x0):
    bs = DlmBeamSplitter(a, (x0, 1.0 - x0))
    for k in events:
        bs.store_and_learn(k, (1.0, 0.0))
    cf = closed_form_x((x0, 1.0 - x0), events, a)
    assert cf == pytest.approx(bs.x, abs=1e-12)
    assert sum(bs.x) == pytest.approx(1.0, abs=1e-12)


def test_emit_threshold_and_normalization():
    pair = CandidatePair((0.6, 0.0), (0.0, 0.8))
    k, y = emit(pair, 0.3599)
    assert k == 0 and y == (1.0, 0.0)
    k, y = emit(pair, 0.36)  # strict inequality
    assert k == 1 and y == (0.0, 1.0)


def test_emit_degenerate():
    with pytest.raises(DegenerateEmissionError):
        emit(CandidatePair((0.5, 0.0), (0.0, 0.0)), 0.5)


def test_phase_shift_rotates():
    y = phase_shift(PhaseMessage.from_angle(0.3), 0.5)
    assert y.angle == pytest.approx(0.8, abs=1e-15)
    assert y.norm() == pytest.approx(1.0, abs=1e-15)


def test_outputs_are_unit_messages():
    bs = DlmBeamSplitter()
    rng = RandomStream(5, 5)
    phases = RandomStream(5, 6).uniforms(2000) * 2 * math.pi
    chans = RandomStream(5, 7).indices(2000, 2) - 1
    for psi, k in zip(phases.tolist(), chans.tolist()):
        _, y = bs.process(int(k), PhaseMessage.from_angle(psi), rng)
        assert abs(y.norm() - 1.0) < 1e-12
    assert bs.events_processed == 2000


def test_mzi_conservation_and_trace():
    trace: list = []
    net = MziNetwork(0.4, 1.1)
    counts = run_mzi(500, 0.4, 1.1, network=net, trace=trace)
    n0, n1, n2, n3 = counts
    assert n0 + n1 == 500 and n2 + n3 == 500
    assert len(trace) == 500
    assert sum(1 for _, path, _ in trace if path == 0) == n0
    assert sum(1 for _, _, det in trace if det == 2) == n2


def test_mzi_reproducible():
    assert run_mzi(2000, 0.3, 0.0, seed=9) == run_mzi(2000, 0.3, 0.0, seed=9)
    assert run_mzi(2000, 0.3, 0.0, seed=9) != run_mzi(2000, 0.3, 0.0, seed=10)


@pytest.mark.parametrize("phi0", [0.0, math.pi / 3, math.pi, 1.5 * math.pi])
def test_mzi_fixed_phase_interference(phi0):
    _, _, n2, n3 = run_mzi(20_000, phi0, 0.0, input_phase="fixed")
    assert n2 / (n2 + n3) == pytest.approx(math.cos(phi0 / 2) ** 2, abs=0.03)


def test_mzi_per_event_phase_washes_out():
    # a fresh random input phase on every event destroys the interference
    _, _, n2, n3 = run_mzi(20_000, 0.0, 0.0, input_phase="per-event")
    assert n2 / (n2 + n3) == pytest.approx(0.5, abs=0.03)


def test_mzi_sweep_shapes():
    pts = mzi_sweep(np.radians([0, 90, 180]).tolist(), 0.0, 1000)
    assert [p for p, _ in pts] == pytest.approx(np.radians([0, 90, 180]).tolist())
    assert all(sum(c[2:]) == 1000 for _, c in pts)


def test_beam_splitter_single_input_is_balanced():
    c0, c1 = run_beam_splitter(20_000, 1.0, 0.0, 0.0, transient=1000)
    assert c0 / (c0 + c1) == pytest.approx(0.5, abs=0.02)


def test_beam_splitter_rejects_bad_p0():
    with pytest.raises(ValueError):
        run_beam_splitter(10, 1.5, 0.0, 0.0)
