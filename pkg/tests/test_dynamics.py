import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from msgate.dynamics import (
    DetuningSchedule,
    DriveField,
    Integrator,
    SimParams,
    bichromatic_pair,
    build_hamiltonian,
    evolve,
    max_dt,
    monochromatic_pair,
    sample_times,
)
from msgate.errors import NormDrift, ScheduleGap, TruncationBreach
from msgate.fockspace import BasisSpec, make_vib_state, partial_trace_internal, product_state
from msgate.kernels import BACKENDS


def _midpoint_expm_oracle(state0, fields, schedule, params, steps_per_unit=400):
    """Exponential midpoint rule on the dense rotating-frame Hamiltonian."""
    psi = state0.amplitudes.copy()
    n = int(math.ceil(params.t_final * steps_per_unit))
    h = params.t_final / n
    for k in range(n):
        H = build_hamiltonian(fields, schedule, params, (k + 0.5) * h).entries
        w, v = np.linalg.eigh(H)
        psi = v @ (np.exp(-1j * w * h) * (v.conj().T @ psi))
    return psi


@pytest.mark.parametrize("echo", [False, True])
def test_matches_independent_propagator(echo):
    b = BasisSpec(5)
    fields = monochromatic_pair(0.3, 0.8, phase=0.4)
    sched = DetuningSchedule.echo(5.0) if echo else DetuningSchedule()
    params = SimParams(eta=0.2, t_final=10.0, basis=b, sample_interval=10.0, guard_tol=None)
    s0 = product_state("gg", make_vib_state("fock", b, n=1), b)
    rec = evolve(s0, fields, sched, params)
    ref = _midpoint_expm_oracle(s0, fields, sched, params)
    assert np.abs(rec.final_state.amplitudes - ref).max() < 2e-5


@given(st.floats(0, 0.3), st.floats(-1.5, 1.5), st.floats(0, 2 * np.pi), st.floats(0, 100),
       st.sampled_from([1, -1]))
def test_hamiltonian_hermitian(rabi, delta, phase, t, sign):
    b = BasisSpec(4)
    params = SimParams(eta=0.1, t_final=1.0, basis=b)
    sched = DetuningSchedule() if sign == 1 else DetuningSchedule.echo(1e-9)
    H = build_hamiltonian(bichromatic_pair(rabi, delta, phase), sched, params, t)
    assert H.hermiticity_error() < 1e-15


def test_frames_are_inverse():
    b = BasisSpec(6)
    params = SimParams(eta=0.1, t_final=1.0, basis=b)
    integ = Integrator(monochromatic_pair(0.1, 0.9), DetuningSchedule(), params)
    phi = np.random.default_rng(1).normal(size=(4, 7)) + 0j
    assert np.allclose(integ.to_interaction(integ.to_rotating(phi, 3.7), 3.7), phi)


def test_internal_rho_frame_independent():
    # the vibrational frame change is diagonal in n, so the reduced state is unchanged
    b = BasisSpec(14)
    params = SimParams(eta=0.1, t_final=50.0, basis=b, sample_interval=50.0)
    s0 = product_state("gg", make_vib_state("coherent", b, alpha=1.0), b)
    rec = evolve(s0, monochromatic_pair(0.2, 0.9), DetuningSchedule(), params)
    rho_rot = partial_trace_internal(rec.final_state).rho
    assert np.abs(rho_rot - rec.internal_rhos[-1]).max() < 1e-13


@given(st.integers(0, 2 ** 31))
def test_norm_and_trace_conserved(seed):
    rng = np.random.default_rng(seed)
    b = BasisSpec(10)
    v = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    blocks = np.zeros((4, 11), dtype=complex)
    blocks[:, :3] = v
    s0 = product_state("gg", make_vib_state("fock", b, n=0), b)
    s0 = type(s0).from_blocks(blocks / np.linalg.norm(blocks), b)
    params = SimParams(eta=0.1, t_final=20.0, basis=b, sample_interval=5.0)
    rec = evolve(s0, monochromatic_pair(0.1, 0.9), DetuningSchedule(), params)
    assert rec.norm_drift < 1e-9
    for rho in rec.internal_rhos:
        assert abs(np.trace(rho) - 1) < 1e-9
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_halving_dt_reduces_drift():
    b = BasisSpec(10)
    s0 = product_state("gg", make_vib_state("fock", b, n=0), b)
    drifts = []
    for fac in (1, 2):
        p = SimParams(eta=0.2, t_final=300.0, basis=b, dt=max_dt(b) / fac, sample_interval=300.0)
        drifts.append(evolve(s0, monochromatic_pair(0.3, 0.9), DetuningSchedule(), p).norm_drift)
    assert drifts[0] / drifts[1] >= 8


def test_dt_bound():
    b = BasisSpec(30)
    assert max_dt(b) == pytest.approx(2 * math.pi / 620)
    with pytest.raises(ValueError):
        SimParams(eta=0.1, t_final=1.0, basis=b, dt=0.011)


def test_truncation_guard_trips():
    b = BasisSpec(6)
    s0 = product_state("gg", make_vib_state("fock", b, n=2), b)
    params = SimParams(eta=0.1, t_final=1.0, basis=b)
    with pytest.raises(TruncationBreach):
        evolve(s0, monochromatic_pair(0.1, 0.9), DetuningSchedule(), params)


def test_norm_drift_error_carries_record():
    b = BasisSpec(6)
    s0 = product_state("gg", make_vib_state("fock", b, n=0), b)
    params = SimParams(eta=0.2, t_final=100.0, basis=b, norm_tol=1e-18, guard_tol=None)
    with pytest.raises(NormDrift) as info:
        evolve(s0, monochromatic_pair(0.3, 0.9), DetuningSchedule(), params)
    assert info.value.record.times[-1] == pytest.approx(100.0)


def test_schedule():
    s = DetuningSchedule.echo(10.0)
    assert s.sign_at(0) == 1 and s.sign_at(9.99) == 1 and s.sign_at(10.0) == -1
    assert s.breakpoints(0, 20) == [10.0]
    assert s.breakpoints(10, 20) == []
    with pytest.raises(ScheduleGap):
        s.sign_at(-1)
    with pytest.raises(ValueError):
        DetuningSchedule(((1.0, 1),))


def test_drive_validation_and_lamb_dicke_warning():
    with pytest.raises(ValueError):
        DriveField(3, 0.1, 0.9)
    with pytest.raises(ValueError):
        DriveField(1, 0.1, 2.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        SimParams(eta=0.5, t_final=1.0, basis=BasisSpec(10))
    assert any("Lamb-Dicke" in str(x.message) for x in w)


def test_sample_times():
    t = sample_times(10.0, 3.0)
    assert list(t) == [0.0, 3.0, 6.0, 9.0, 10.0]
    assert list(sample_times(9.0, 3.0)) == [0.0, 3.0, 6.0, 9.0]


@pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")
def test_backends_agree():
    b = BasisSpec(14)
    s0 = product_state("gg", make_vib_state("coherent", b, alpha=1.0), b)
    params = SimParams(eta=0.1, t_final=200.0, basis=b, sample_interval=20.0)
    fields = bichromatic_pair(0.1, 0.9, phase=0.3)
    sched = DetuningSchedule.echo(70.0)
    a = evolve(s0, fields, sched, params, backend="compiled")
    c = evolve(s0, fields, sched, params, backend="python")
    assert np.abs(a.final_state.amplitudes - c.final_state.amplitudes).max() < 1e-12
    assert np.abs(a.internal_rhos - c.internal_rhos).max() < 1e-12
