# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 stepper for the two-ion + one-mode state.

The state is held in the interaction picture of ``nu * a^dag a``: each
Fock component carries an extra phase ``exp(i nu n t)`` relative to the
laser-rotating frame. Internal populations are frame independent.

Internally everything is split into separate real and imaginary planes so
the dense matrix-vector products vectorize.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef struct Ctx:
    Py_ssize_t N
    double nu
    const double* ur
    const double* ui
    const double* vr      # U^dag, real part
    const double* vi
    const double* damp
    const double* a1r
    const double* a1i
    const double* f1
    Py_ssize_t n1
    const double* a2r
    const double* a2i
    const double* f2
    Py_ssize_t n2
    double* xr            # scratch, 4N each
    double* xi
    double* axr           # 3N each
    double* axi
    double* bxr
    double* bxi


cdef inline void _coef(const double* ar, const double* ai, const double* f,
                       Py_ssize_t nt, double t, double* cr, double* ci) noexcept nogil:
    # sum_k amp_k * exp(-i f_k t)
    cdef Py_ssize_t k
    cdef double c, s
    cr[0] = 0.0
    ci[0] = 0.0
    for k in range(nt):
        c = cos(f[k] * t)
        s = -sin(f[k] * t)
        cr[0] += ar[k] * c - ai[k] * s
        ci[0] += ar[k] * s + ai[k] * c


cdef extern from "_matvec.h":
    void _matvec3 "msgate_matvec3"(const double* mr, const double* mi,
                                   const double* xr, const double* xi,
                                   double* yr, double* yi, Py_ssize_t n) nogil


cdef void _rhs(Ctx* c, const double* pr, const double* pi,
               double* outr, double* outi, double t) noexcept nogil:
    cdef Py_ssize_t N = c.N, s, n
    cdef double c1r, c1i, c2r, c2i, wr, wi, dr, di, tr, ti
    cdef double* xr = c.xr
    cdef double* xi = c.xi
    cdef double* axr = c.axr
    cdef double* axi = c.axi
    cdef double* bxr = c.bxr
    cdef double* bxi = c.bxi

    _coef(c.a1r, c.a1i, c.f1, c.n1, t, &c1r, &c1i)
    _coef(c.a2r, c.a2i, c.f2, c.n2, t, &c2r, &c2i)

    # x = exp(-i nu n t) phi
    wr = cos(c.nu * t)
    wi = -sin(c.nu * t)
    dr = 1.0
    di = 0.0
    for n in range(N):
        for s in range(4):
            xr[s * N + n] = dr * pr[s * N + n] - di * pi[s * N + n]
            xi[s * N + n] = dr * pi[s * N + n] + di * pr[s * N + n]
        tr = dr * wr - di * wi
        di = dr * wi + di * wr
        dr = tr

    _matvec3(c.ur, c.ui, xr, xi, axr, axi, N)          # U x_gg, U x_ge, U x_eg
    _matvec3(c.vr, c.vi, xr + N, xi + N, bxr, bxi, N)  # Ud x_ge, Ud x_eg, Ud x_ee

    # coupling, written back into x:
    # gg <- c1* Ud x_eg + c2* Ud x_ge
    # ge <- c1* Ud x_ee + c2  U  x_gg
    # eg <- c1  U  x_gg + c2* Ud x_ee
    # ee <- c1  U  x_ge + c2  U  x_eg
    for n in range(N):
        xr[n] = c1r * bxr[N + n] + c1i * bxi[N + n] + c2r * bxr[n] + c2i * bxi[n]
        xi[n] = c1r * bxi[N + n] - c1i * bxr[N + n] + c2r * bxi[n] - c2i * bxr[n]
        xr[N + n] = (c1r * bxr[2 * N + n] + c1i * bxi[2 * N + n]
                     + c2r * axr[n] - c2i * axi[n])
        xi[N + n] = (c1r * bxi[2 * N + n] - c1i * bxr[2 * N + n]
                     + c2r * axi[n] + c2i * axr[n])
        xr[2 * N + n] = (c1r * axr[n] - c1i * axi[n]
                         + c2r * bxr[2 * N + n] + c2i * bxi[2 * N + n])
        xi[2 * N + n] = (c1r * axi[n] + c1i * axr[n]
                         + c2r * bxi[2 * N + n] - c2i * bxr[2 * N + n])
        xr[3 * N + n] = (c1r * axr[N + n] - c1i * axi[N + n]
                         + c2r * axr[2 * N + n] - c2i * axi[2 * N + n])
        xi[3 * N + n] = (c1r * axi[N + n] + c1i * axr[N + n]
                         + c2r * axi[2 * N + n] + c2i * axr[2 * N + n])

    # out = -i exp(i nu n t) y - damp phi
    wi = -wi
    dr = 1.0
    di = 0.0
    for n in range(N):
        for s in range(4):
            tr = dr * xr[s * N + n] - di * xi[s * N + n]
            ti = dr * xi[s * N + n] + di * xr[s * N + n]
            outr[s * N + n] = ti - c.damp[n] * pr[s * N + n]
            outi[s * N + n] = -tr - c.damp[n] * pi[s * N + n]
        tr = dr * wr - di * wi
        di = dr * wi + di * wr
        dr = tr


def rk4_steps(cnp.ndarray phi, cnp.ndarray U, cnp.ndarray Ud, double nu,
              cnp.ndarray damp, cnp.ndarray amps1, cnp.ndarray freqs1,
              cnp.ndarray amps2, cnp.ndarray freqs2,
              double t0, double dt, Py_ssize_t nsteps, double threshold=0.0):
    """Advance ``phi`` (shape ``(4, N)``, complex128) in place.

    Returns ``(steps_done, max_norm_drift, crossed)``. When ``threshold > 0``
    and the squared norm drops below it after a step, that step is undone
    and ``crossed`` is True.
    """
    cdef Py_ssize_t N = phi.shape[1]
    cdef Py_ssize_t L = 4 * N, i, k
    cdef cnp.ndarray[double, ndim=2, mode="c"] ur = np.ascontiguousarray(U.T.real, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] ui = np.ascontiguousarray(U.T.imag, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] vr = np.ascontiguousarray(Ud.T.real, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] vi = np.ascontiguousarray(Ud.T.imag, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] dmp = np.ascontiguousarray(damp, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] a1r = np.ascontiguousarray(np.real(amps1), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] a1i = np.ascontiguousarray(np.imag(amps1), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] a2r = np.ascontiguousarray(np.real(amps2), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] a2i = np.ascontiguousarray(np.imag(amps2), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] f1 = np.ascontiguousarray(freqs1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] f2 = np.ascontiguousarray(freqs2, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] phr = np.ascontiguousarray(phi.real, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] phi_i = np.ascontiguousarray(phi.imag, dtype=np.float64)
    if phi.shape[0] != 4 or U.shape[0] != N or U.shape[1] != N:
        raise ValueError("shape mismatch between state and displacement operator")

    cdef double* buf = <double*> malloc(24 * L * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* pr = &phr[0, 0]
    cdef double* pim = &phi_i[0, 0]
    cdef double* k1r = buf
    cdef double* k1i = buf + L
    cdef double* k2r = buf + 2 * L
    cdef double* k2i = buf + 3 * L
    cdef double* k3r = buf + 4 * L
    cdef double* k3i = buf + 5 * L
    cdef double* k4r = buf + 6 * L
    cdef double* k4i = buf + 7 * L
    cdef double* tr = buf + 8 * L
    cdef double* ti = buf + 9 * L
    cdef double* sr = buf + 10 * L
    cdef double* si = buf + 11 * L
    cdef Ctx c
    c.N = N
    c.nu = nu
    c.ur = &ur[0, 0]
    c.ui = &ui[0, 0]
    c.vr = &vr[0, 0]
    c.vi = &vi[0, 0]
    c.damp = &dmp[0]
    c.n1 = f1.shape[0]
    c.n2 = f2.shape[0]
    c.a1r = &a1r[0] if c.n1 else NULL
    c.a1i = &a1i[0] if c.n1 else NULL
    c.f1 = &f1[0] if c.n1 else NULL
    c.a2r = &a2r[0] if c.n2 else NULL
    c.a2i = &a2i[0] if c.n2 else NULL
    c.f2 = &f2[0] if c.n2 else NULL
    c.xr = buf + 12 * L
    c.xi = buf + 13 * L
    c.axr = buf + 14 * L
    c.axi = buf + 15 * L
    c.bxr = buf + 16 * L
    c.bxi = buf + 17 * L

    cdef double t, h2 = 0.5 * dt, h6 = dt / 6.0, nrm, drift = 0.0
    cdef double nr, ni
    cdef bint crossed = False
    cdef Py_ssize_t done = 0

    with nogil:
        for k in range(nsteps):
            t = t0 + k * dt
            _rhs(&c, pr, pim, k1r, k1i, t)
            for i in range(L):
                tr[i] = pr[i] + h2 * k1r[i]
                ti[i] = pim[i] + h2 * k1i[i]
            _rhs(&c, tr, ti, k2r, k2i, t + h2)
            for i in range(L):
                tr[i] = pr[i] + h2 * k2r[i]
                ti[i] = pim[i] + h2 * k2i[i]
            _rhs(&c, tr, ti, k3r, k3i, t + h2)
            for i in range(L):
                tr[i] = pr[i] + dt * k3r[i]
                ti[i] = pim[i] + dt * k3i[i]
            _rhs(&c, tr, ti, k4r, k4i, t + dt)
            nrm = 0.0
            for i in range(L):
                nr = pr[i] + h6 * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i])
                ni = pim[i] + h6 * (k1i[i] + 2.0 * k2i[i] + 2.0 * k3i[i] + k4i[i])
                sr[i] = nr
                si[i] = ni
                nrm = nrm + nr * nr + ni * ni
            if threshold > 0.0 and nrm < threshold:
                crossed = True
                break
            if threshold <= 0.0:
                nrm = fabs(sqrt(nrm) - 1.0)
                if nrm > drift:
                    drift = nrm
            for i in range(L):
                pr[i] = sr[i]
                pim[i] = si[i]
            done += 1
    free(buf)
    phi[...] = phr + 1j * phi_i
    return done, drift, crossed
