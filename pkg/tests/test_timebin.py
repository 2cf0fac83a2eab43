import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from gbsdense.errors import ConfigError, GuardError
from gbsdense.timebin import (
    BeamSplitterOp,
    LoopSchedule,
    LossBudget,
    RoundTrip,
    SingleLoopSpec,
    compile_reck,
    loop_circuit_transfer,
    lossy_device,
    phase_aligned_residual,
    single_loop_transfer,
)

from oracles import sequential_single_loop


def uniform_trip(m, transmissivity, phase=0.0):
    return RoundTrip(tuple(BeamSplitterOp(transmissivity, phase, b) for b in range(m)))


# ------------------------------------------------------------ coupler ops


def test_coupler_matrix_limits():
    assert np.allclose(BeamSplitterOp(1.0, 0.7, 0).matrix(), np.eye(2), atol=1e-15)
    swap = BeamSplitterOp(0.0, 0.3, 0).matrix()
    expect = np.array([[0.0, 1j * np.exp(-0.3j)], [1j * np.exp(0.3j), 0.0]])
    assert np.allclose(swap, expect, atol=1e-15)


@given(st.floats(0.0, 1.0), st.floats(-np.pi, np.pi))
def test_coupler_matrix_is_unitary(transmissivity, phase):
    mat = BeamSplitterOp(transmissivity, phase, 0).matrix()
    assert np.allclose(mat.conj().T @ mat, np.eye(2), atol=1e-12)


def test_coupler_validation():
    with pytest.raises(ValueError, match="transmissivity"):
        BeamSplitterOp(1.2, 0.0, 0)
    with pytest.raises(ValueError, match="bin"):
        BeamSplitterOp(0.5, 0.0, -1)
    with pytest.raises(ValueError, match="finite"):
        BeamSplitterOp(0.5, math.inf, 0)
    assert BeamSplitterOp(0.0, 0.0, 0).is_switch
    assert not BeamSplitterOp(0.5, 0.0, 0).is_switch


# --------------------------------------------------------- single loop


@pytest.mark.parametrize(
    "spec",
    [
        SingleLoopSpec(6, 0.5),
        SingleLoopSpec(6, 0.5, 0.0, 0.72),
        SingleLoopSpec(8, 0.3, 1.3, 0.9),
        SingleLoopSpec(3, 0.95, -0.4, 1.0),
        SingleLoopSpec(1, 0.4, 0.2, 0.8),
    ],
)
def test_single_loop_matches_sequential_simulation(spec):
    lam = single_loop_transfer(spec).matrix
    assert np.max(np.abs(lam - sequential_single_loop(spec))) < 1e-12


def test_single_loop_structure():
    spec = SingleLoopSpec(7, 0.5, 0.0, 0.72)
    lam = single_loop_transfer(spec).matrix
    # Causal: strictly upper triangle empty, diagonal is sqrt(T).
    assert np.max(np.abs(np.triu(lam, k=1))) == 0.0
    assert np.allclose(np.diag(lam), math.sqrt(0.5), atol=1e-15)
    # Entries decay geometrically down each column.
    mags = np.abs(lam[:, 0])
    assert all(mags[j + 1] < mags[j] for j in range(1, 6))
    # Light left circulating at the end is lost, so columns are subnormalized.
    norms = np.linalg.norm(lam, axis=0)
    assert np.all(norms < 1.0)
    assert not single_loop_transfer(spec).is_unitary


def test_single_loop_closed_positions():
    # T = 1 never couples: identity. T = 0 shunts every bin one slot later.
    assert np.allclose(
        single_loop_transfer(SingleLoopSpec(5, 1.0, 0.9, 0.5)).matrix, np.eye(5)
    )
    lam = single_loop_transfer(SingleLoopSpec(4, 0.0)).matrix
    assert np.allclose(lam, -np.eye(4, k=-1), atol=1e-15)


def test_single_loop_spec_validation():
    with pytest.raises(ValueError, match="num_bins"):
        SingleLoopSpec(0, 0.5)
    with pytest.raises(ValueError, match="transmissivity"):
        SingleLoopSpec(4, -0.1)
    with pytest.raises(ValueError, match="loop transmission"):
        SingleLoopSpec(4, 0.5, 0.0, 1.3)


# ---------------------------------------------------------- double loop


def test_identity_anchors():
    assert np.array_equal(
        loop_circuit_transfer(LoopSchedule(5, ())).matrix, np.eye(5)
    )
    sched = LoopSchedule(5, (uniform_trip(5, 1.0),))
    assert np.array_equal(loop_circuit_transfer(sched).matrix, np.eye(5))


@pytest.mark.parametrize("transmissivity", [0.3, 0.5, 0.9])
def test_uniform_trip_is_single_loop_pass(transmissivity):
    m = 5
    sched = LoopSchedule(m, (uniform_trip(m, transmissivity),))
    lam = loop_circuit_transfer(sched).matrix
    ref = single_loop_transfer(SingleLoopSpec(m, transmissivity)).matrix
    assert np.max(np.abs(lam - ref)) < 1e-14


def test_partial_coupling_loses_light():
    trip = RoundTrip((BeamSplitterOp(0.5, 0.0, 0),))
    sched = LoopSchedule(3, (trip,))
    assert not trip.drains_processing_mode(3)
    assert not sched.drains_fully()
    lam = loop_circuit_transfer(sched)
    assert not lam.is_unitary
    assert np.linalg.norm(lam.matrix[:, 0]) == pytest.approx(math.sqrt(0.5), abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_random_schedules_never_amplify(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    trips = []
    for _ in range(int(rng.integers(1, 4))):
        ops = tuple(
            BeamSplitterOp(float(rng.uniform()), float(rng.uniform(-np.pi, np.pi)), b)
            for b in rng.integers(0, m, size=rng.integers(1, 2 * m))
        )
        trips.append(RoundTrip(ops))
    lam = loop_circuit_transfer(LoopSchedule(m, tuple(trips)))
    assert np.linalg.norm(lam.matrix, ord=2) <= 1.0 + 1e-10


# ------------------------------------------------------------- compiler


@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_compile_reck_round_trips_haar_unitaries(seed, m):
    u = unitary_group.rvs(m, random_state=np.random.default_rng(seed))
    sched = compile_reck(u)
    assert len(sched.rounds) == m - 1
    assert sched.drains_fully()
    lam = loop_circuit_transfer(sched)
    assert lam.is_unitary
    assert phase_aligned_residual(lam.matrix, u) < 1e-8


def test_compiled_trip_shape():
    u = unitary_group.rvs(6, random_state=np.random.default_rng(5))
    sched = compile_reck(u)
    for trip in sched.rounds:
        assert len(trip.ops) == 7  # opening swap, 5 couplings, closing swap
        assert trip.ops[0].is_switch and trip.ops[0].bin == 0
        assert trip.ops[-1].is_switch and trip.ops[-1].bin == 0
        middle = trip.ops[1:-1]
        assert [op.bin for op in middle] == [1, 2, 3, 4, 5]
        assert sum(trip.switch_states) == 2


def test_compile_balanced_splitter_uses_half_transmissivity():
    u = np.array([[1.0, 1j], [1j, 1.0]]) / math.sqrt(2.0)
    sched = compile_reck(u)
    assert len(sched.rounds) == 1
    couplings = [op for op in sched.rounds[0].ops if not op.is_switch]
    assert len(couplings) == 1
    assert couplings[0].transmissivity == pytest.approx(0.5, abs=1e-12)
    assert phase_aligned_residual(loop_circuit_transfer(sched).matrix, u) < 1e-12


def test_compile_identity_and_single_mode():
    sched = compile_reck(np.eye(4))
    assert phase_aligned_residual(loop_circuit_transfer(sched).matrix, np.eye(4)) < 1e-12
    assert compile_reck(np.array([[np.exp(0.3j)]])).rounds == ()


def test_compile_rejects_bad_input():
    with pytest.raises(ValueError, match="unitary"):
        compile_reck(np.ones((3, 3)))
    with pytest.raises(ValueError, match="square"):
        compile_reck(np.ones((2, 3)))


# -------------------------------------------------------- serialization


def test_schedule_json_round_trip():
    u = unitary_group.rvs(5, random_state=np.random.default_rng(17))
    sched = compile_reck(u)
    clone = LoopSchedule.from_json(sched.to_json())
    assert clone == sched
    assert np.array_equal(
        loop_circuit_transfer(clone).matrix, loop_circuit_transfer(sched).matrix
    )


def test_schedule_json_rejects_malformed():
    with pytest.raises(ConfigError):
        LoopSchedule.from_json("[]")
    with pytest.raises(ConfigError):
        LoopSchedule.from_json('{"m": 2}')
    with pytest.raises(ConfigError):
        LoopSchedule.from_json(
            '{"m": 2, "rounds": [{"ops": [{"T": 0.5, "phi": 0.0, "bin": 7}]}]}'
        )


def test_schedule_validation():
    with pytest.raises(ValueError, match="bin 5"):
        LoopSchedule(3, (RoundTrip((BeamSplitterOp(0.5, 0.0, 5),)),))
    with pytest.raises(ValueError, match="BeamSplitterOp"):
        RoundTrip((0.5,))
    with pytest.raises(ValueError, match="num_bins"):
        LoopSchedule(0, ())


# ---------------------------------------------------------- loss budget


def test_loss_budget_product_and_override():
    budget = LossBudget(coupling=0.40, switching=0.90, delay=0.80, detection=0.80)
    assert budget.total() == pytest.approx(0.2304, abs=1e-12)
    assert LossBudget(uniform=0.5).total() == pytest.approx(0.5)
    assert LossBudget(coupling=0.1, uniform=0.7).total() == pytest.approx(0.7)
    with pytest.raises(ValueError, match="coupling"):
        LossBudget(coupling=1.2)
    with pytest.raises(ValueError, match="uniform"):
        LossBudget(uniform=-0.1)


def test_lossy_device_scales_amplitudes():
    spec = SingleLoopSpec(4, 0.5)
    clean = single_loop_transfer(spec)
    noisy = lossy_device(clean, LossBudget(uniform=0.49))
    assert np.allclose(noisy.matrix, 0.7 * clean.matrix, atol=1e-15)


# ------------------------------------------------------- phase alignment


@given(st.integers(0, 2**32 - 1))
def test_phase_alignment_mods_out_external_phases(seed):
    rng = np.random.default_rng(seed)
    u = unitary_group.rvs(4, random_state=rng)
    d_out = np.diag(np.exp(1j * rng.uniform(-np.pi, np.pi, 4)))
    d_in = np.diag(np.exp(1j * rng.uniform(-np.pi, np.pi, 4)))
    assert phase_aligned_residual(d_out @ u @ d_in, u) < 1e-12


def test_phase_alignment_detects_difference():
    rng = np.random.default_rng(3)
    u = unitary_group.rvs(4, random_state=rng)
    v = unitary_group.rvs(4, random_state=rng)
    assert phase_aligned_residual(u, v) > 0.05
