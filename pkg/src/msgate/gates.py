"""Two-qubit gate algebra on the internal states ``gg, ge, eg, ee``.

Single-qubit gates are ideal matrices. ``R`` is the ideal bichromatic
evolution; a simulated replacement can be obtained with
:func:`simulated_R`.

Sequence convention
-------------------
A :class:`GateSequence` lists gates in *temporal* order: the first entry
acts first on the state, so ``compose`` returns ``G_last @ ... @ G_first``.
With this convention the nine-gate sequence ``P1, P2^-1, H2, R, P1, H1, P1,
R, P2`` (with ``R`` at ``T = pi / (2 |omega_tilde|)`` and ``omega_tilde < 0``)
equals a CNOT with ion 1 as control and ion 2 as target, up to a global
phase, provided the "Hadamard" steps are the pi/2 pulse
``Y90 = (1/sqrt2) [[1, -1], [1, 1]]`` (``|g> -> (|g> + |e>)/sqrt2``,
``|e> -> (|e> - |g>)/sqrt2``). The textbook Hadamard gives no CNOT for
either reading order or control assignment; ``tests/test_gates.py`` checks
all combinations. :data:`CNOT_SEQUENCE` therefore uses ``Y90``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from . import effective
from .errors import UnknownGate

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_Y90 = np.array([[1, -1], [1, 1]], dtype=np.complex128) / np.sqrt(2)
_P = np.diag([1, 1j])
_I2 = np.eye(2, dtype=np.complex128)

CNOT_12 = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)  # control ion 1, target ion 2
CNOT_21 = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=np.complex128
)  # control ion 2, target ion 1


def _on_ion(op, ion):
    if ion == 1:
        return np.kron(op, _I2)
    if ion == 2:
        return np.kron(_I2, op)
    raise UnknownGate(f"no ion {ion!r}")


@dataclass(frozen=True)
class TwoQubitUnitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (4, 4):
            raise ValueError("two-qubit unitary must be 4x4")
        object.__setattr__(self, "matrix", m)

    def unitarity_error(self) -> float:
        return float(np.abs(self.matrix.conj().T @ self.matrix - np.eye(4)).max())

    def __matmul__(self, other: "TwoQubitUnitary") -> "TwoQubitUnitary":
        return TwoQubitUnitary(self.matrix @ other.matrix)


def gate(name: str, ion: int | None = None, omega_T: float | None = None,
         R_matrix=None) -> TwoQubitUnitary:
    """Named gate: ``"P"``, ``"P_inv"``, ``"H"``, ``"Y90"`` (need ``ion``) or ``"R"``.

    ``R`` is :func:`effective.bichromatic_propagator` at rotation angle
    ``omega_T`` (default ``-pi/2``, i.e. negative ``omega_tilde`` at the gate
    time); pass ``R_matrix`` to substitute another 4x4 matrix.
    """
    if name == "P":
        return TwoQubitUnitary(_on_ion(_P, ion))
    if name == "P_inv":
        return TwoQubitUnitary(_on_ion(_P.conj(), ion))
    if name == "H":
        return TwoQubitUnitary(_on_ion(_H, ion))
    if name == "Y90":
        return TwoQubitUnitary(_on_ion(_Y90, ion))
    if name == "R":
        if R_matrix is not None:
            return TwoQubitUnitary(R_matrix)
        angle = -pi / 2 if omega_T is None else omega_T
        return TwoQubitUnitary(effective.bichromatic_propagator(1.0, angle))
    raise UnknownGate(f"unknown gate {name!r}")


GATE_NAMES = ("P", "P_inv", "H", "Y90", "R")


@dataclass(frozen=True)
class GateSequence:
    """Gates in temporal order; each op is ``(name, ion)`` with ion ``None`` for ``R``."""

    ops: tuple

    def __post_init__(self):
        ops = tuple((str(n), i) for n, i in self.ops)
        for n, _ in ops:
            if n not in GATE_NAMES:
                raise UnknownGate(f"unknown gate {n!r}")
        object.__setattr__(self, "ops", ops)


#: The nine-step CNOT construction, in temporal order (control ion 1).
CNOT_SEQUENCE = GateSequence((
    ("P", 1), ("P_inv", 2), ("Y90", 2), ("R", None), ("P", 1),
    ("Y90", 1), ("P", 1), ("R", None), ("P", 2),
))

#: The same list with textbook Hadamards; not a CNOT.
CNOT_SEQUENCE_HADAMARD = GateSequence(tuple(
    ("H" if n == "Y90" else n, i) for n, i in CNOT_SEQUENCE.ops
))


def compose(seq: GateSequence, omega_T: float | None = None, R_matrix=None,
            temporal: bool = True) -> TwoQubitUnitary:
    """Matrix product of ``seq``. ``temporal=False`` reads the list right to left."""
    u = np.eye(4, dtype=np.complex128)
    for name, ion in seq.ops:
        g = gate(name, ion, omega_T=omega_T, R_matrix=R_matrix).matrix
        u = g @ u if temporal else u @ g
    return TwoQubitUnitary(u)


def fidelity_up_to_phase(U, V) -> float:
    """``|tr(U^dag V)| / 4``."""
    u = U.matrix if isinstance(U, TwoQubitUnitary) else np.asarray(U)
    v = V.matrix if isinstance(V, TwoQubitUnitary) else np.asarray(V)
    return float(abs(np.trace(u.conj().T @ v)) / 4.0)


def simulated_R(rabi: float, eta: float, detuning: float, n_max: int = 8,
                dt: float | None = None, backend=None) -> np.ndarray:
    """4x4 gate from full dynamics of the bichromatic drive, vibration in ``|0>``.

    Each internal basis state is evolved with the vibration starting in the
    ground state for ``T = pi / (2 |omega_tilde|)``; column ``j`` holds the
    amplitudes ``<i, n=0 | psi_j(T)>``. Leakage into ``n > 0`` makes the
    result slightly sub-unitary.
    """
    from .dynamics import DetuningSchedule, SimParams, bichromatic_pair, evolve
    from .fockspace import BasisSpec, make_vib_state, product_state

    p = effective.EffectiveParams(rabi, eta, detuning, bichromatic=True)
    T = effective.gate_time(effective.effective_rabi(p))
    basis = BasisSpec(n_max)
    params = SimParams(eta=eta, t_final=T, basis=basis, dt=dt, sample_interval=T)
    vib0 = make_vib_state("fock", basis, n=0)
    cols = []
    for label in ("gg", "ge", "eg", "ee"):
        rec = evolve(product_state(label, vib0, basis), bichromatic_pair(rabi, detuning),
                     DetuningSchedule(), params, backend=backend)
        cols.append(rec.final_state.amplitudes.reshape(4, -1)[:, 0])
    return np.array(cols).T


def echo_gate_run(initial, params, fields, flip: bool = True, backend=None):
    """Monochromatic-pair gate with the detuning sign flipped at ``T_inv / 2``.

    ``params.t_final`` is overridden with ``T_inv``. Returns the
    :class:`~msgate.dynamics.EvolutionRecord`.
    """
    from dataclasses import replace

    from .dynamics import DetuningSchedule, evolve, is_bichromatic

    if is_bichromatic(fields) or len(fields) != 2:
        raise ValueError("echo gate expects a monochromatic pair of fields")
    f1 = next(f for f in fields if f.ion == 1)
    p = effective.EffectiveParams(f1.rabi, params.eta, abs(f1.detuning))
    T = effective.t_inv(p)
    sched = DetuningSchedule.echo(T / 2) if flip else DetuningSchedule.constant()
    run_params = replace(params, t_final=T)
    return evolve(initial, fields, sched, run_params, backend=backend)
