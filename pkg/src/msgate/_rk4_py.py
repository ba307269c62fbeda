"""Pure-NumPy RK4 stepper, drop-in replacement for the compiled ``_rk4``."""

import numpy as np


def _coef(amps, freqs, t):
    return np.sum(amps * np.exp(-1j * freqs * t))


def _rhs(phi, U, Ud, nu, damp, amps1, freqs1, amps2, freqs2, t, phase_n):
    c1 = _coef(amps1, freqs1, t)
    c2 = _coef(amps2, freqs2, t)
    d = np.exp(1j * nu * t * phase_n)
    x = phi * d.conj()
    ax = x[0:3] @ U.T  # U x_gg, U x_ge, U x_eg
    bx = x[1:4] @ Ud.T  # Ud x_ge, Ud x_eg, Ud x_ee
    y = np.empty_like(phi)
    c1c = np.conj(c1)
    c2c = np.conj(c2)
    y[0] = c1c * bx[1] + c2c * bx[0]
    y[1] = c1c * bx[2] + c2 * ax[0]
    y[2] = c1 * ax[0] + c2c * bx[2]
    y[3] = c1 * ax[1] + c2 * ax[2]
    return -1j * (y * d) - damp * phi


def rk4_steps(phi, U, Ud, nu, damp, amps1, freqs1, amps2, freqs2,
              t0, dt, nsteps, threshold=0.0):
    """Advance ``phi`` in place; same contract as the compiled kernel."""
    phase_n = np.arange(phi.shape[1], dtype=np.float64)
    args = (U, Ud, nu, damp, amps1, freqs1, amps2, freqs2)
    drift = 0.0
    done = 0
    crossed = False
    h2 = 0.5 * dt
    for k in range(nsteps):
        t = t0 + k * dt
        k1 = _rhs(phi, *args, t, phase_n)
        k2 = _rhs(phi + h2 * k1, *args, t + h2, phase_n)
        k3 = _rhs(phi + h2 * k2, *args, t + h2, phase_n)
        k4 = _rhs(phi + dt * k3, *args, t + dt, phase_n)
        new = phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = float(np.vdot(new, new).real)
        if threshold > 0.0:
            if nrm < threshold:
                crossed = True
                break
        else:
            drift = max(drift, abs(np.sqrt(nrm) - 1.0))
        phi[...] = new
        done += 1
    return done, drift, crossed
