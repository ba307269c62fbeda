"""Exact two-ion Hamiltonian and fixed-step Schroedinger integration.

The Hamiltonian is written in the frame rotating at the internal transition
frequency of each ion, with the trap term kept explicit::

    H(t) = nu a^dag a + sum_tones Omega/2 (sigma_+^(ion) U_eta exp(-i s(t) delta t + i phi) + h.c.)

where ``U_eta = exp(i eta (a + a^dag))`` is kept to all orders in ``eta`` and
``s(t) = +-1`` is the detuning schedule sign.

Integration uses classic RK4 in the interaction picture of ``nu a^dag a``
(integrating-factor RK4): the free oscillator phase is applied exactly and
RK4 only sees the laser coupling. This is the same equation of motion; it
removes the stiff ``nu n`` diagonal that otherwise dominates the norm error.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import effective
from .errors import NormDrift, ScheduleGap, TruncationBreach
from .fockspace import (
    GUARD_LEVELS,
    GUARD_TOL,
    BasisSpec,
    OperatorMatrix,
    StateVector,
    displacement_unitary,
    guard_population,
    lift,
    number,
    partial_trace_internal,
    sigma_plus,
)
from .kernels import get_stepper

log = logging.getLogger(__name__)

NORM_TOL = 1e-6
SAMPLES_PER_PERIOD = 200


@dataclass(frozen=True)
class DriveField:
    """One laser tone on one ion; ``rabi`` and ``detuning`` in units of ``nu``."""

    ion: int
    rabi: float
    detuning: float
    phase: float = 0.0

    def __post_init__(self):
        if self.ion not in (1, 2):
            raise ValueError(f"ion must be 1 or 2, got {self.ion!r}")
        if self.rabi < 0:
            raise ValueError("rabi frequency must be >= 0")
        if abs(self.detuning) >= 2:
            raise ValueError(f"|detuning| must be < 2 nu, got {self.detuning}")


def monochromatic_pair(rabi: float, detuning: float, phase: float = 0.0) -> list[DriveField]:
    """Ion 1 at ``+detuning``, ion 2 at ``-detuning``."""
    return [DriveField(1, rabi, detuning, phase), DriveField(2, rabi, -detuning, phase)]


def bichromatic_pair(rabi: float, detuning: float, phase: float = 0.0) -> list[DriveField]:
    """Both ions driven at ``+detuning`` and ``-detuning``."""
    return [DriveField(ion, rabi, s * detuning, phase) for ion in (1, 2) for s in (1, -1)]


def is_bichromatic(fields) -> bool:
    ions = [f.ion for f in fields]
    return ions.count(1) > 1 and ions.count(2) > 1


def nominal_rabi(fields, eta: float) -> float:
    """Second-order rate for a standard pair/bichromatic configuration (0 if undriven)."""
    driven = [f for f in fields if f.rabi > 0]
    if not driven:
        return 0.0
    p = effective.EffectiveParams(
        rabi=max(f.rabi for f in driven),
        eta=eta,
        detuning=max(abs(f.detuning) for f in driven),
        bichromatic=is_bichromatic(driven),
    )
    return effective.effective_rabi(p)


@dataclass(frozen=True)
class DetuningSchedule:
    """Piecewise-constant sign applied to every tone's detuning.

    ``segments`` is a sequence of ``(t_start, sign)``; the first must start
    at 0 and the last extends to infinity.
    """

    segments: tuple = ((0.0, 1),)

    def __post_init__(self):
        segs = tuple((float(t), int(s)) for t, s in self.segments)
        if not segs or segs[0][0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        if any(s not in (1, -1) for _, s in segs):
            raise ValueError("schedule signs must be +1 or -1")
        if any(b[0] <= a[0] for a, b in zip(segs, segs[1:])):
            raise ValueError("schedule start times must be strictly increasing")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls) -> "DetuningSchedule":
        return cls()

    @classmethod
    def echo(cls, t_flip: float) -> "DetuningSchedule":
        return cls(((0.0, 1), (t_flip, -1)))

    def sign_at(self, t: float) -> int:
        if t < 0:
            raise ScheduleGap(f"t = {t} precedes the schedule")
        sign = self.segments[0][1]
        for start, s in self.segments:
            if t >= start:
                sign = s
        return sign

    def breakpoints(self, t_a: float, t_b: float) -> list[float]:
        return [t for t, _ in self.segments[1:] if t_a < t < t_b]


def max_dt(basis: BasisSpec, nu: float = 1.0) -> float:
    """Largest allowed step, ``2 pi / (20 (n_max + 1) nu)``."""
    return 2.0 * math.pi / (20.0 * basis.n_levels * nu)


@dataclass(frozen=True)
class SimParams:
    eta: float
    t_final: float
    basis: BasisSpec = field(default_factory=BasisSpec)
    dt: float | None = None
    nu: float = 1.0
    sample_interval: float | None = None
    guard_levels: int = GUARD_LEVELS
    guard_tol: float | None = GUARD_TOL
    norm_tol: float | None = NORM_TOL

    def __post_init__(self):
        bound = max_dt(self.basis, self.nu)
        if self.dt is None:
            object.__setattr__(self, "dt", bound)
        if self.dt <= 0 or self.dt > bound * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} must be in (0, {bound:.6g}] for n_max={self.basis.n_max}")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if self.sample_interval is not None and self.sample_interval <= 0:
            raise ValueError("sample_interval must be > 0")
        if self.eta * math.sqrt(self.basis.n_levels) >= 1:
            warnings.warn(
                f"eta*sqrt(n_max+1) = {self.eta * math.sqrt(self.basis.n_levels):.3f} >= 1:"
                " outside the Lamb-Dicke regime near the cutoff",
                stacklevel=3,
            )


@dataclass
class EvolutionRecord:
    """Sampled closed-system run.

    ``internal_rhos`` has shape ``(len(times), 4, 4)``; ``final_state`` is in
    the laser-rotating frame.
    """

    times: np.ndarray
    internal_rhos: np.ndarray
    final_state: StateVector
    norm_drift: float
    mean_phonons: np.ndarray
    norms: np.ndarray | None = None

    def element(self, row: str, col: str) -> np.ndarray:
        from .fockspace import internal_index

        return self.internal_rhos[:, internal_index(row), internal_index(col)]

    def population(self, label: str) -> np.ndarray:
        return self.element(label, label).real


def build_hamiltonian(fields, schedule: DetuningSchedule, params: SimParams, t: float) -> OperatorMatrix:
    """Dense ``H(t) / hbar`` on the composite space (rotating frame)."""
    if not fields:
        raise ValueError("at least one drive field is required")
    basis = params.basis
    s = schedule.sign_at(t)
    u = displacement_unitary(params.eta, basis).entries
    h = params.nu * lift(None, number(basis), basis).astype(np.complex128)
    for f in fields:
        c = 0.5 * f.rabi * np.exp(-1j * s * f.detuning * t + 1j * f.phase)
        term = c * lift(sigma_plus(f.ion), u, basis)
        h += term + term.conj().T
    return OperatorMatrix(h, "hermitian")


def sample_times(t_final: float, interval: float) -> np.ndarray:
    k = int(math.floor(t_final / interval + 1e-9))
    times = np.arange(k + 1) * interval
    if t_final - times[-1] > 1e-9 * max(1.0, t_final):
        times = np.append(times, t_final)
    return times


def default_sample_interval(fields, params: SimParams) -> float:
    if params.sample_interval is not None:
        return params.sample_interval
    w = abs(nominal_rabi(fields, params.eta))
    if w == 0 or params.t_final == 0:
        return max(params.t_final, 1.0) / SAMPLES_PER_PERIOD
    return 2.0 * math.pi / w / SAMPLES_PER_PERIOD


class Integrator:
    """Shared RK4 driver for closed runs and quantum trajectories.

    The state ``phi`` is a ``(4, N)`` complex array in the interaction picture
    of ``nu a^dag a``; use :meth:`to_rotating` / :meth:`to_interaction` to convert.
    """

    def __init__(self, fields, schedule: DetuningSchedule, params: SimParams,
                 damp=None, backend=None):
        if not fields:
            raise ValueError("at least one drive field is required")
        self.params = params
        self.schedule = schedule
        self.fields = list(fields)
        n_levels = params.basis.n_levels
        u = displacement_unitary(params.eta, params.basis).entries
        self.U = np.ascontiguousarray(u)
        self.Ud = np.ascontiguousarray(u.conj().T)
        self.damp = np.zeros(n_levels) if damp is None else np.ascontiguousarray(damp, dtype=np.float64)
        self.step = get_stepper(backend)
        self._tones = {}
        for sign in (1, -1):
            tones = []
            for ion in (1, 2):
                fs = [f for f in self.fields if f.ion == ion]
                amps = np.array([0.5 * f.rabi * np.exp(1j * f.phase) for f in fs], dtype=np.complex128)
                freqs = np.array([sign * f.detuning for f in fs], dtype=np.float64)
                tones += [amps, freqs]
            self._tones[sign] = tuple(tones)
        self._n = np.arange(n_levels, dtype=np.float64)

    def to_rotating(self, phi, t):
        return phi * np.exp(-1j * self.params.nu * t * self._n)

    def to_interaction(self, psi, t):
        return psi * np.exp(1j * self.params.nu * t * self._n)

    def _run(self, phi, t0, h, nsteps, sign, threshold):
        a1, f1, a2, f2 = self._tones[sign]
        return self.step(phi, self.U, self.Ud, self.params.nu, self.damp,
                         a1, f1, a2, f2, t0, h, nsteps, threshold)

    def advance(self, phi, t_a, t_b, threshold=0.0):
        """Integrate ``phi`` in place from ``t_a`` to ``t_b``.

        Returns ``(t, drift, crossed)``. If ``threshold > 0`` and the squared
        norm falls below it, integration stops at the start ``t`` of the
        offending step with ``crossed=True``.
        """
        drift = 0.0
        edges = [t_a] + self.schedule.breakpoints(t_a, t_b) + [t_b]
        for lo, hi in zip(edges, edges[1:]):
            span = hi - lo
            if span <= 0:
                continue
            nsteps = max(1, math.ceil(span / self.params.dt * (1 - 1e-12)))
            h = span / nsteps
            sign = self.schedule.sign_at(lo)
            done, d, crossed = self._run(phi, lo, h, nsteps, sign, threshold)
            drift = max(drift, d)
            if crossed:
                return lo + done * h, drift, True
        return t_b, drift, False

    def single_step(self, phi, t, h):
        """One RK4 step of length ``h`` from ``t``; returns a new array."""
        out = phi.copy()
        self._run(out, t, h, 1, self.schedule.sign_at(t), 0.0)
        return out


def _check_guard(phi, params: SimParams, t: float):
    if params.guard_tol is None:
        return
    g = guard_population(phi, params.guard_levels)
    if g > params.guard_tol:
        raise TruncationBreach(
            f"population {g:.3g} above n = {params.basis.n_max - params.guard_levels}"
            f" at t = {t:.6g} exceeds {params.guard_tol:g}; increase n_max"
        )


def evolve(state0: StateVector, fields, schedule: DetuningSchedule, params: SimParams,
           backend=None) -> EvolutionRecord:
    """Integrate the Schroedinger equation from ``state0`` over ``[0, t_final]``.

    No renormalisation is applied; the largest per-step norm deviation is
    reported as ``norm_drift`` and raises :class:`NormDrift` above
    ``params.norm_tol``. :class:`TruncationBreach` is raised when the guard
    population is exceeded at any sample.
    """
    if state0.basis != params.basis:
        raise ValueError("state basis does not match simulation basis")
    if abs(state0.norm() - 1.0) > 1e-9:
        raise ValueError("initial state must be normalised")
    integ = Integrator(fields, schedule, params, backend=backend)
    times = sample_times(params.t_final, default_sample_interval(fields, params))
    phi = np.ascontiguousarray(state0.blocks())
    _check_guard(phi, params, 0.0)
    n = np.arange(params.basis.n_levels)
    rhos = np.empty((times.size, 4, 4), dtype=np.complex128)
    nbar = np.empty(times.size)
    norms = np.empty(times.size)
    drift = 0.0
    t = 0.0
    for k, t_s in enumerate(times):
        if t_s > t:
            t, d, _ = integ.advance(phi, t, t_s)
            drift = max(drift, d)
        _check_guard(phi, params, t)
        rhos[k] = phi @ phi.conj().T
        p = np.sum(np.abs(phi) ** 2, axis=0)
        norms[k] = math.sqrt(p.sum())
        nbar[k] = p @ n / p.sum()
    final = StateVector.from_blocks(integ.to_rotating(phi, t), params.basis)
    rec = EvolutionRecord(times, rhos, final, drift, nbar, norms)
    if params.norm_tol is not None and drift > params.norm_tol:
        err = NormDrift(f"norm drift {drift:.3g} exceeds {params.norm_tol:g}; reduce dt")
        err.record = rec
        raise err
    log.debug("evolve: %d samples, norm drift %.3g", times.size, drift)
    return rec


def final_internal(record: EvolutionRecord):
    return partial_trace_internal(record.final_state)
