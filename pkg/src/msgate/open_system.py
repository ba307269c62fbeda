"""Heating of the vibrational mode: quantum trajectories and a dense oracle.

The reservoir has two jump operators acting on the vibration,
``c1 = sqrt(gamma (1 + n_therm)) a`` and ``c2 = sqrt(gamma n_therm) a^dag``.
Trajectories use the norm-threshold (first-order) jump scheme; the jump
instant is located by bisection inside the RK4 step that crosses the
threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DetuningSchedule,
    Integrator,
    SimParams,
    _check_guard,
    default_sample_interval,
    sample_times,
)
from .errors import DimensionTooLarge, GridMismatch
from .fockspace import BasisSpec, StateVector, destroy, lift, sigma_plus, displacement_unitary

BISECTION_ITERS = 40


@dataclass(frozen=True)
class HeatingParams:
    gamma: float = 0.0
    n_therm: float = 0.0

    def __post_init__(self):
        if self.gamma < 0 or self.n_therm < 0:
            raise ValueError("gamma and n_therm must be >= 0")

    def damping(self, basis: BasisSpec) -> np.ndarray:
        """Diagonal of ``(c1^dag c1 + c2^dag c2) / 2`` on the truncated ladder."""
        n = np.arange(basis.n_levels, dtype=np.float64)
        aad = n + 1.0
        aad[-1] = 0.0  # a a^dag with a^dag truncated at n_max
        return 0.5 * self.gamma * ((1.0 + self.n_therm) * n + self.n_therm * aad)

    def jump_rate(self, mean_n: float) -> float:
        """Expected total jump rate for mean phonon number ``mean_n`` (untruncated)."""
        return self.gamma * ((1.0 + self.n_therm) * mean_n + self.n_therm * (mean_n + 1.0))


@dataclass
class TrajectoryRecord:
    seed: object
    times: np.ndarray
    observables: np.ndarray
    mean_phonons: np.ndarray
    jump_times: list = field(default_factory=list)

    @property
    def quanta_exchanged(self) -> int:
        return len(self.jump_times)


@dataclass
class EnsembleResult:
    n_traj: int
    times: np.ndarray
    mean_observables: np.ndarray
    stderr: np.ndarray
    mean_jumps: float
    jumps_stderr: float
    mean_phonons: np.ndarray


def trajectory_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Independent, order-free seed for trajectory ``index`` of an ensemble."""
    return np.random.SeedSequence([int(master_seed), int(index)])


def _lower(phi):
    out = np.zeros_like(phi)
    out[:, :-1] = phi[:, 1:] * np.sqrt(np.arange(1, phi.shape[1]))
    return out


def _raise(phi):
    out = np.zeros_like(phi)
    out[:, 1:] = phi[:, :-1] * np.sqrt(np.arange(1, phi.shape[1]))
    return out


def mcwf_trajectory(state0, fields, schedule: DetuningSchedule, params: SimParams,
                    heating: HeatingParams, seed=None, backend=None) -> TrajectoryRecord:
    """One Monte Carlo wavefunction realisation; deterministic given ``seed``.

    ``state0`` is a :class:`StateVector` or a callable ``rng -> StateVector``
    (used for thermal initial samples, drawn from the trajectory's own
    generator).
    """
    rng = np.random.default_rng(seed)
    if callable(state0):
        state0 = state0(rng)
    if state0.basis != params.basis:
        raise ValueError("state basis does not match simulation basis")
    integ = Integrator(fields, schedule, params, damp=heating.damping(params.basis), backend=backend)
    times = sample_times(params.t_final, default_sample_interval(fields, params))
    phi = np.ascontiguousarray(state0.blocks())
    phi /= np.linalg.norm(phi)
    n = np.arange(params.basis.n_levels)
    obs = np.empty((times.size, 4, 4), dtype=np.complex128)
    nbar = np.empty(times.size)
    jumps = []
    a_rate = heating.gamma * (1.0 + heating.n_therm)
    ad_rate = heating.gamma * heating.n_therm
    open_ = heating.gamma > 0
    r = rng.random() if open_ else 0.0
    t = 0.0
    for k, t_s in enumerate(times):
        while t < t_s:
            t_new, _, crossed = integ.advance(phi, t, t_s, threshold=r)
            if not crossed:
                t = t_s
                break
            t = t_new
            h = min(params.dt, t_s - t, *[b - t for b in schedule.breakpoints(t, t_s)])
            lo, hi = 0.0, h
            for _ in range(BISECTION_ITERS):
                mid = 0.5 * (lo + hi)
                trial = integ.single_step(phi, t, mid)
                if np.vdot(trial, trial).real < r:
                    hi = mid
                else:
                    lo = mid
            phi[...] = integ.single_step(phi, t, hi)
            t += hi
            # a and a^dag pick up only a global phase between frames
            down = _lower(phi)
            up = _raise(phi)
            w1 = a_rate * np.vdot(down, down).real
            w2 = ad_rate * np.vdot(up, up).real
            op = 1 if rng.random() * (w1 + w2) < w1 else 2
            new = down if op == 1 else up
            phi[...] = new / np.linalg.norm(new)
            jumps.append((t, op))
            r = rng.random()
        _check_guard(phi, params, t)
        nrm2 = np.vdot(phi, phi).real
        obs[k] = phi @ phi.conj().T / nrm2
        p = np.sum(np.abs(phi) ** 2, axis=0)
        nbar[k] = p @ n / p.sum()
    return TrajectoryRecord(seed, times, obs, nbar, jumps)


def _run_one(args):
    return mcwf_trajectory(*args)


def run_ensemble(state0, fields, schedule, params, heating, n_traj: int,
                 master_seed: int = 0, workers: int = 1, backend=None) -> list[TrajectoryRecord]:
    """``n_traj`` trajectories with seeds from :func:`trajectory_seed`.

    Results do not depend on ``workers``; with ``workers > 1`` trajectories
    run in separate processes (``state0`` must then be picklable).
    """
    jobs = [(state0, fields, schedule, params, heating, trajectory_seed(master_seed, i), backend)
            for i in range(n_traj)]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, jobs))


def ensemble_average(records) -> EnsembleResult:
    """Element-wise mean and standard error over trajectories."""
    if not records:
        raise ValueError("no trajectory records")
    t0 = records[0].times
    for rec in records[1:]:
        if rec.times.shape != t0.shape or not np.allclose(rec.times, t0, rtol=0, atol=1e-9):
            raise GridMismatch("trajectory records use different time grids")
    obs = np.stack([rec.observables for rec in records])
    m = len(records)
    mean = obs.mean(axis=0)
    if m > 1:
        err = (obs.real.std(axis=0, ddof=1) + 1j * obs.imag.std(axis=0, ddof=1)) / math.sqrt(m)
    else:
        err = np.zeros_like(mean)
    counts = np.array([rec.quanta_exchanged for rec in records], dtype=np.float64)
    jerr = counts.std(ddof=1) / math.sqrt(m) if m > 1 else 0.0
    nbar = np.mean([rec.mean_phonons for rec in records], axis=0)
    return EnsembleResult(m, t0, mean, err, float(counts.mean()), float(jerr), nbar)


@dataclass
class OracleResult:
    times: np.ndarray
    internal_rhos: np.ndarray
    mean_phonons: np.ndarray
    trace_error: float


def thermal_density(internal, n_bar: float, basis: BasisSpec) -> np.ndarray:
    """``|internal><internal| (x) rho_thermal`` as a dense composite matrix."""
    from .fockspace import internal_state, thermal_populations

    if isinstance(internal, str):
        internal = internal_state(**{internal: 1.0})
    v = np.asarray(internal, dtype=np.complex128)
    return np.kron(np.outer(v, v.conj()), np.diag(thermal_populations(n_bar, basis)))


def pure_density(state: StateVector) -> np.ndarray:
    a = state.amplitudes
    return np.outer(a, a.conj())


def lindblad_oracle(rho0, fields, schedule: DetuningSchedule, params: SimParams,
                    heating: HeatingParams, max_n_max: int = 12) -> OracleResult:
    """Dense RK4 integration of the master equation, for validating trajectories.

    Works in the same interaction picture of ``nu a^dag a`` as the trajectory
    integrator but shares none of its code: the Liouvillian is applied with
    dense matrix products on the full density matrix.
    """
    basis = params.basis
    if basis.n_max > max_n_max:
        raise DimensionTooLarge(f"n_max={basis.n_max} > {max_n_max} for dense master-equation runs")
    rho = np.array(rho0, dtype=np.complex128)
    dim = basis.dim
    if rho.shape != (dim, dim):
        raise ValueError("rho0 does not match basis")
    N = basis.n_levels
    u = displacement_unitary(params.eta, basis).entries
    raise_ops = {ion: lift(sigma_plus(ion), u, basis) for ion in (1, 2)}
    a = destroy(basis)
    cs = [math.sqrt(heating.gamma * (1 + heating.n_therm)) * lift(None, a, basis),
          math.sqrt(heating.gamma * heating.n_therm) * lift(None, a.T, basis)]
    cs = [c for c in cs if np.any(c)]
    k_half = 0.5 * sum(c.T @ c for c in cs) if cs else np.zeros((dim, dim))
    nn = np.tile(np.arange(N), 4).astype(np.float64)
    dn = nn[:, None] - nn[None, :]

    def ham(t, sign):
        h = np.zeros((dim, dim), dtype=np.complex128)
        for f in fields:
            c = 0.5 * f.rabi * np.exp(-1j * sign * f.detuning * t + 1j * f.phase)
            h += c * raise_ops[f.ion]
        h = h + h.conj().T
        return h * np.exp(1j * params.nu * t * dn)

    def rhs(t, sign, r):
        h = ham(t, sign)
        out = -1j * (h @ r - r @ h) - (k_half @ r + r @ k_half)
        for c in cs:
            out += c @ r @ c.T
        return out

    times = sample_times(params.t_final, default_sample_interval(fields, params))
    rhos = np.empty((times.size, 4, 4), dtype=np.complex128)
    nbar = np.empty(times.size)
    diag_n = nn
    trace_err = 0.0
    t = 0.0
    for k, t_s in enumerate(times):
        edges = [t] + schedule.breakpoints(t, t_s) + [t_s]
        for lo, hi in zip(edges, edges[1:]):
            span = hi - lo
            if span <= 0:
                continue
            nsteps = max(1, math.ceil(span / params.dt * (1 - 1e-12)))
            h = span / nsteps
            sign = schedule.sign_at(lo)
            for j in range(nsteps):
                tj = lo + j * h
                k1 = rhs(tj, sign, rho)
                k2 = rhs(tj + h / 2, sign, rho + h / 2 * k1)
                k3 = rhs(tj + h / 2, sign, rho + h / 2 * k2)
                k4 = rhs(tj + h, sign, rho + h * k3)
                rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_s
        tr = np.trace(rho).real
        trace_err = max(trace_err, abs(tr - 1.0))
        rhos[k] = np.einsum("anbn->ab", rho.reshape(4, N, 4, N))
        nbar[k] = float(np.real(np.diag(rho)) @ diag_n)
    return OracleResult(times, rhos, nbar, trace_err)
