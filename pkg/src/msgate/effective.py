"""Closed-form second-order model of the gate.

All frequencies are in units of the trap frequency ``nu`` and times in
units of ``1/nu``; energies are given as ``E / hbar`` in the same units.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin, sqrt

import numpy as np

from .errors import CarrierPole, PoleAtResonance

POLE_TOL = 1e-6


@dataclass(frozen=True)
class EffectiveParams:
    rabi: float
    eta: float
    detuning: float
    bichromatic: bool = False


def _check_sideband(p: EffectiveParams) -> float:
    gap = 1.0 - p.detuning
    if abs(gap) < POLE_TOL:
        raise PoleAtResonance(f"detuning {p.detuning} is on the sideband pole delta = nu")
    return gap


def effective_rabi(p: EffectiveParams) -> float:
    """``-(Omega eta)^2 / (2 (nu - delta))``, doubled for the bichromatic drive."""
    gap = _check_sideband(p)
    w = -(p.rabi * p.eta) ** 2 / (2.0 * gap)
    return 2.0 * w if p.bichromatic else w


def second_order_rabi(p: EffectiveParams, n: int) -> float:
    """Two-path second-order sum for ``|gg n> -> |ee n>`` before cancellation.

    Path A excites ion 1 first (via ``|eg, n+1>``, energy denominator
    ``delta - nu``); path B excites ion 2 first (via ``|ge, n-1>``,
    denominator ``nu - delta``). Each sideband matrix element is
    ``i eta sqrt(m) Omega / 2`` to first order in ``eta``. The sum is the
    effective coupling ``g``; the Rabi frequency is ``-2 g`` (doubled again
    for the bichromatic drive).
    """
    if n < 0:
        raise ValueError("phonon number must be >= 0")
    gap = _check_sideband(p)
    half = p.rabi / 2.0
    up = (1j * p.eta * sqrt(n + 1) * half) ** 2      # raise then lower through n+1
    down = (1j * p.eta * sqrt(n) * half) ** 2        # lower then raise through n-1
    g = up / (-gap) + down / gap
    w = -2.0 * g.real
    return 2.0 * w if p.bichromatic else w


def stark_shifts(p: EffectiveParams, n: int) -> tuple[float, float, float, float]:
    """Light shifts ``(dE_gg, dE_ee, dE_eg, dE_ge)`` of ``|.. n>`` for the monochromatic pair."""
    gap = _check_sideband(p)
    if abs(p.detuning) < POLE_TOL:
        raise CarrierPole("detuning 0 puts the lasers on the carrier")
    s = (p.eta * p.rabi) ** 2
    carrier = p.rabi ** 2 / (2.0 * p.detuning)
    e_gg = -s / 4.0 / gap
    e_eg = s / 2.0 * n / gap - carrier
    e_ge = -s / 2.0 * (n + 1) / gap + carrier
    return e_gg, e_gg, e_eg, e_ge


def t_inv(p: EffectiveParams) -> float:
    """Population inversion time ``2 pi (nu - delta) / (eta^2 Omega^2)`` (monochromatic pair)."""
    gap = _check_sideband(p)
    return 2.0 * pi * gap / (p.eta ** 2 * p.rabi ** 2)


def gate_time(omega_tilde: float) -> float:
    """Duration ``pi / (2 |omega_tilde|)`` that maps ``|gg>`` to an EPR state."""
    return pi / (2.0 * abs(omega_tilde))


def bichromatic_propagator(omega_tilde: float, T: float) -> np.ndarray:
    """Ideal 4x4 evolution over ``T`` in the gg, ge, eg, ee basis.

    ``{gg, ee}`` rotate with ``+i sin``, ``{ge, eg}`` with ``-i sin``.
    """
    c = cos(omega_tilde * T / 2.0)
    s = sin(omega_tilde * T / 2.0)
    u = np.zeros((4, 4), dtype=np.complex128)
    u[0, 0] = u[3, 3] = u[1, 1] = u[2, 2] = c
    u[3, 0] = u[0, 3] = 1j * s
    u[2, 1] = u[1, 2] = -1j * s
    return u


def physical_transfer_time(nu_hz: float, rabi_hz: float, eta: float, detuning: float) -> float:
    """Seconds for the full ``|gg> -> |ee>`` transfer, from frequencies given as ``f = omega / 2 pi``."""
    p = EffectiveParams(rabi=rabi_hz / nu_hz, eta=eta, detuning=detuning)
    return t_inv(p) / (2.0 * pi * nu_hz)
