"""Composite Hilbert space of two two-level ions and one vibrational mode.

Basis ordering is internal-major, Fock-minor::

    index = internal_index * (n_max + 1) + n,   internal_index: gg=0, ge=1, eg=2, ee=3

The first letter refers to ion 1. A state vector therefore reshapes to a
``(4, n_max + 1)`` block array, which is how the integrators hold it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, sqrt

import numpy as np

from .errors import CutoffExceeded, NonNormalizable

INTERNAL_LABELS = ("gg", "ge", "eg", "ee")
_LABEL_INDEX = {lab: i for i, lab in enumerate(INTERNAL_LABELS)}

#: Levels at the top of the ladder that must stay (nearly) empty.
GUARD_LEVELS = 5
GUARD_TOL = 1e-6


def internal_index(label: str) -> int:
    """Index of an internal label such as ``"eg"`` in the 4-dim internal space."""
    try:
        return _LABEL_INDEX[label]
    except KeyError:
        raise ValueError(f"unknown internal label {label!r}") from None


@dataclass(frozen=True)
class BasisSpec:
    """Fock cutoff ``n_max`` for the single vibrational mode (two ions fixed)."""

    n_max: int = 30
    n_ions: int = field(default=2, init=False)

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def n_levels(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 4 * self.n_levels

    def index(self, label: str, n: int) -> int:
        return internal_index(label) * self.n_levels + n


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix with a structural flag (hermitian/unitary/general)."""

    entries: np.ndarray
    flag: str = "general"

    def __post_init__(self):
        if self.flag not in ("hermitian", "unitary", "general"):
            raise ValueError(f"bad operator flag {self.flag!r}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def hermiticity_error(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def unitarity_error(self, n_cols: int | None = None) -> float:
        """``max |U^dag U - I|`` over the leading ``n_cols`` columns."""
        m = self.entries if n_cols is None else self.entries[:, :n_cols]
        g = m.conj().T @ m
        return float(np.abs(g - np.eye(g.shape[0])).max())

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries @ other.entries)
        return self.entries @ other


@dataclass(frozen=True)
class StateVector:
    """Amplitudes over the composite basis (see module docstring for ordering)."""

    amplitudes: np.ndarray
    basis: BasisSpec

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != self.basis.dim:
            raise ValueError(
                f"state has {amps.size} amplitudes, basis needs {self.basis.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_blocks(cls, blocks, basis: BasisSpec) -> "StateVector":
        return cls(np.asarray(blocks, dtype=np.complex128).reshape(-1).copy(), basis)

    def blocks(self) -> np.ndarray:
        """Copy of the amplitudes as a ``(4, n_max + 1)`` array."""
        return self.amplitudes.reshape(4, self.basis.n_levels).copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def phonon_distribution(self) -> np.ndarray:
        b = self.amplitudes.reshape(4, self.basis.n_levels)
        return np.sum(np.abs(b) ** 2, axis=0)

    def mean_phonons(self) -> float:
        p = self.phonon_distribution()
        return float(p @ np.arange(p.size) / p.sum())


@dataclass(frozen=True)
class InternalDensityMatrix:
    """Reduced 4x4 density matrix over ``gg, ge, eg, ee``.

    ``rho[a, b] = sum_n psi(a, n) conj(psi(b, n))``, so ``element("gg", "ee")``
    is the coherence usually written rho_{gg,ee}.
    """

    rho: np.ndarray

    def element(self, row: str, col: str) -> complex:
        return complex(self.rho[internal_index(row), internal_index(col)])

    def population(self, label: str) -> float:
        return float(self.element(label, label).real)

    def fidelity(self, target) -> float:
        """``<target| rho |target>`` for a normalised 4-vector ``target``."""
        t = np.asarray(target, dtype=np.complex128)
        return float(np.real(t.conj() @ self.rho @ t))

    def check(self, tol: float = 1e-9) -> None:
        """Raise ``AssertionError`` if not Hermitian, unit trace, PSD within ``tol``."""
        r = self.rho
        assert np.abs(r - r.conj().T).max() < tol, "not Hermitian"
        assert abs(np.trace(r) - 1.0) < tol, "trace != 1"
        assert np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() > -tol, "not PSD"


# ---------------------------------------------------------------------------
# operators

def destroy(basis: BasisSpec) -> np.ndarray:
    """Truncated annihilation operator on the vibrational factor."""
    return np.diag(np.sqrt(np.arange(1, basis.n_levels, dtype=np.float64)), 1)


def create(basis: BasisSpec) -> np.ndarray:
    return destroy(basis).T.copy()


def number(basis: BasisSpec) -> np.ndarray:
    return np.diag(np.arange(basis.n_levels, dtype=np.float64))


_SIGMA_PLUS_SINGLE = np.array([[0, 0], [1, 0]], dtype=np.complex128)  # |e><g|, order (g, e)


def sigma_plus(ion: int) -> np.ndarray:
    """4x4 raising operator |e><g| on ``ion`` (1 or 2) in the gg, ge, eg, ee basis."""
    eye = np.eye(2)
    if ion == 1:
        return np.kron(_SIGMA_PLUS_SINGLE, eye)
    if ion == 2:
        return np.kron(eye, _SIGMA_PLUS_SINGLE)
    raise ValueError(f"ion must be 1 or 2, got {ion!r}")


def sigma_z(ion: int) -> np.ndarray:
    z = np.diag([-1.0, 1.0]).astype(np.complex128)
    eye = np.eye(2)
    return np.kron(z, eye) if ion == 1 else np.kron(eye, z)


def lift(internal_op, vib_op, basis: BasisSpec) -> np.ndarray:
    """Composite-space matrix ``internal_op (x) vib_op``; ``None`` means identity."""
    a = np.eye(4) if internal_op is None else np.asarray(internal_op)
    b = np.eye(basis.n_levels) if vib_op is None else np.asarray(vib_op)
    return np.kron(a, b)


def displacement_unitary(eta: float, basis: BasisSpec) -> OperatorMatrix:
    """``exp(i eta (a + a^dag))`` on the truncated vibrational space.

    Computed from the eigendecomposition of the real symmetric matrix
    ``eta (a + a^dag)``, so it is exactly unitary on the truncated space; the
    truncation is the only approximation. The returned matrix acts on the
    vibrational factor (``n_max + 1`` square).
    """
    a = destroy(basis)
    w, v = np.linalg.eigh(float(eta) * (a + a.T))
    u = (v * np.exp(1j * w)) @ v.T
    return OperatorMatrix(np.ascontiguousarray(u), "unitary")


# ---------------------------------------------------------------------------
# states

def thermal_populations(n_bar: float, basis: BasisSpec) -> np.ndarray:
    """Bose-Einstein weights ``n_bar^n / (1 + n_bar)^(n+1)`` renormalised to 0..n_max."""
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    n = np.arange(basis.n_levels)
    if n_bar == 0:
        p = (n == 0).astype(np.float64)
    else:
        p = np.exp(n * np.log(n_bar) - (n + 1) * np.log1p(n_bar))
    if p.max() < 1e-15:
        raise NonNormalizable(f"thermal weights for n_bar={n_bar} vanish below n_max")
    return p / p.sum()


def make_vib_state(kind: str, basis: BasisSpec, *, n: int = 0,
                   alpha: complex = 0.0, n_bar: float = 0.0,
                   seed=None) -> np.ndarray:
    """Vibrational amplitude vector of length ``n_max + 1``.

    ``kind`` is ``"fock"`` (uses ``n``), ``"coherent"`` (uses ``alpha``) or
    ``"thermal_sample"`` (draws one Fock state from the thermal distribution
    with mean ``n_bar``; ``seed`` may be an int or a ``numpy.random.Generator``).
    """
    if kind == "fock":
        if not 0 <= n <= basis.n_max:
            raise CutoffExceeded(f"Fock state n={n} outside 0..{basis.n_max}")
        v = np.zeros(basis.n_levels, dtype=np.complex128)
        v[n] = 1.0
        return v
    if kind == "coherent":
        if abs(alpha) ** 2 > basis.n_max / 4:
            raise CutoffExceeded(
                f"|alpha|^2={abs(alpha) ** 2:g} exceeds n_max/4={basis.n_max / 4:g}"
            )
        k = np.arange(basis.n_levels)
        with np.errstate(divide="ignore"):
            log_mag = k * np.log(abs(alpha)) if alpha != 0 else np.where(k == 0, 0.0, -np.inf)
        log_fact = np.array([np.log(float(factorial(int(j)))) for j in k])
        amps = np.exp(-abs(alpha) ** 2 / 2 + log_mag - 0.5 * log_fact)
        amps = amps * np.exp(1j * np.angle(alpha) * k)
        nrm = np.linalg.norm(amps)
        if nrm < 1e-15:
            raise NonNormalizable("coherent amplitudes vanish below n_max")
        return amps / nrm
    if kind == "thermal_sample":
        p = thermal_populations(n_bar, basis)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return make_vib_state("fock", basis, n=int(rng.choice(basis.n_levels, p=p)))
    raise ValueError(f"unknown vibrational state kind {kind!r}")


def internal_state(**amps) -> np.ndarray:
    """Normalised 4-vector from keyword amplitudes, e.g. ``internal_state(gg=1, ee=-1j)``."""
    v = np.zeros(4, dtype=np.complex128)
    for label, a in amps.items():
        v[internal_index(label)] = a
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("internal state has zero norm")
    return v / nrm


def product_state(internal, vib, basis: BasisSpec) -> StateVector:
    """``internal (x) vib``; ``internal`` is a label or a 4-vector."""
    if isinstance(internal, str):
        internal = internal_state(**{internal: 1.0})
    internal = np.asarray(internal, dtype=np.complex128)
    vib = np.asarray(vib, dtype=np.complex128)
    if vib.size != basis.n_levels:
        raise ValueError("vibrational vector does not match basis")
    return StateVector(np.kron(internal, vib), basis)


def partial_trace_internal(state) -> InternalDensityMatrix:
    """Trace out the vibration: ``rho[a, b] = sum_n psi(a, n) conj(psi(b, n))``.

    Accepts a ``StateVector`` or a raw ``(4, N)`` block array.
    """
    b = state.amplitudes.reshape(4, -1) if isinstance(state, StateVector) else np.asarray(state)
    return InternalDensityMatrix(b @ b.conj().T)


def guard_population(blocks: np.ndarray, guard_levels: int = GUARD_LEVELS) -> float:
    """Population in Fock levels above ``n_max - guard_levels`` (relative to the norm)."""
    p = np.sum(np.abs(blocks) ** 2, axis=0)
    n_max = p.size - 1
    return float(p[n_max - guard_levels + 1:].sum() / p.sum())


def coherent_amplitude_formula(alpha: float, n: int) -> float:
    """``exp(-|alpha|^2/2) alpha^n / sqrt(n!)`` for real ``alpha`` (test helper)."""
    return float(np.exp(-alpha ** 2 / 2) * alpha ** n / sqrt(factorial(n)))
