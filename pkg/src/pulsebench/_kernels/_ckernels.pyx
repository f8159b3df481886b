# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: cosine sums, Hamiltonian assembly, Lindblad RHS and
the Dormand-Prince 5(4) driver. Mirrors ``_pykernels`` step for step."""

import numpy as np

from libc.math cimport cos, sqrt, fabs, pow

ctypedef double complex cplx

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0
cdef double ERR_EXP = -0.2
cdef long MAX_STEPS = 10000000

cdef double[7] C_ = [0.0, 1 / 5.0, 3 / 10.0, 4 / 5.0, 8 / 9.0, 1.0, 1.0]
cdef double[7][6] A_ = [
    [0, 0, 0, 0, 0, 0],
    [1 / 5.0, 0, 0, 0, 0, 0],
    [3 / 40.0, 9 / 40.0, 0, 0, 0, 0],
    [44 / 45.0, -56 / 15.0, 32 / 9.0, 0, 0, 0],
    [19372 / 6561.0, -25360 / 2187.0, 64448 / 6561.0, -212 / 729.0, 0, 0],
    [9017 / 3168.0, -355 / 33.0, 46732 / 5247.0, 49 / 176.0, -5103 / 18656.0, 0],
    [35 / 384.0, 0.0, 500 / 1113.0, 125 / 192.0, -2187 / 6784.0, 11 / 84.0],
]
cdef double[7] B_ = [35 / 384.0, 0.0, 500 / 1113.0, 125 / 192.0, -2187 / 6784.0, 11 / 84.0, 0.0]
cdef double[7] E_ = [-71 / 57600.0, 0.0, 71 / 16695.0, -71 / 1920.0, 17253 / 339200.0, -22 / 525.0, 1 / 40.0]
cdef double[7][4] P_ = [
    [1, -8048581381 / 2820520608.0, 8663915743 / 2820520608.0, -12715105075 / 11282082432.0],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799.0, -68118460800 / 10900136933.0, 87487479700 / 32700410799.0],
    [0, -1754552775 / 470086768.0, 14199869525 / 1410260304.0, -10690763975 / 1880347072.0],
    [0, 127303824393 / 49829197408.0, -318862633887 / 49829197408.0, 701980252875 / 199316789632.0],
    [0, -282668133 / 205662961.0, 2019193451 / 616988883.0, -1453857185 / 822651844.0],
    [0, 40617522 / 29380423.0, -110615467 / 29380423.0, 69997945 / 29380423.0],
]


from pulsebench._kernels._pykernels import StepUnderflow


cdef inline double cabs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx conj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


def cosine_sum(double t, const double[::1] amps, const double[::1] freqs, const double[::1] phases):
    """Return ``sum_j amps[j] * cos(freqs[j] * t + phases[j])``."""
    cdef Py_ssize_t j, n = amps.shape[0]
    cdef double acc = 0.0
    with nogil:
        for j in range(n):
            acc += amps[j] * cos(freqs[j] * t + phases[j])
    return acc


cdef void _combine(cplx[:, ::1] out, const cplx[:, ::1] h0, const cplx[:, :, ::1] ops,
                   const double[::1] coefs) noexcept nogil:
    cdef Py_ssize_t a, b, k, d = h0.shape[0], nk = coefs.shape[0]
    cdef double c
    for a in range(d):
        for b in range(d):
            out[a, b] = h0[a, b]
    for k in range(nk):
        c = coefs[k]
        if c == 0.0:
            continue
        for a in range(d):
            for b in range(d):
                out[a, b] = out[a, b] + c * ops[k, a, b]


def combine_terms(h0, ops, coefs):
    """Return ``h0 + sum_k coefs[k] * ops[k]`` as a new array."""
    h0 = np.ascontiguousarray(h0, dtype=complex)
    out = np.empty_like(h0)
    coefs = np.ascontiguousarray(coefs, dtype=float)
    if coefs.shape[0] == 0:
        out[...] = h0
        return out
    _combine(out, h0, np.ascontiguousarray(ops, dtype=complex), coefs)
    return out


cdef void _rhs(cplx[:, ::1] out, const cplx[:, ::1] h, const cplx[:, ::1] rho,
               const cplx[:, :, ::1] ls, const cplx[:, ::1] ldl, cplx[:, ::1] tmp,
               bint has_ls) noexcept nogil:
    # Hermitian rho and H: rho H = (H rho)^+ and rho LdL = (LdL rho)^+.
    cdef Py_ssize_t a, b, c, j, d = rho.shape[0], nj = ls.shape[0]
    cdef cplx acc, acc2
    for a in range(d):
        for b in range(d):
            acc = 0
            for c in range(d):
                acc = acc + h[a, c] * rho[c, b]
            tmp[a, b] = acc
    for a in range(d):
        for b in range(d):
            out[a, b] = -1j * (tmp[a, b] - conj(tmp[b, a]))
    if not has_ls:
        return
    for a in range(d):
        for b in range(d):
            acc = 0
            for c in range(d):
                acc = acc + ldl[a, c] * rho[c, b]
            tmp[a, b] = acc
    for a in range(d):
        for b in range(d):
            out[a, b] = out[a, b] - 0.5 * (tmp[a, b] + conj(tmp[b, a]))
    for j in range(nj):
        for a in range(d):
            for b in range(d):
                acc = 0
                for c in range(d):
                    acc = acc + ls[j, a, c] * rho[c, b]
                tmp[a, b] = acc
        for a in range(d):
            for b in range(d):
                acc2 = 0
                for c in range(d):
                    acc2 = acc2 + tmp[a, c] * conj(ls[j, b, c])
                out[a, b] = out[a, b] + acc2


def lindblad_rhs(h, rho, ls):
    """Lindblad generator ``-i[H, rho] + sum_k (L rho L^+ - {L^+ L, rho}/2)``."""
    h = np.asarray(h, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    ls = np.asarray(ls, dtype=complex).reshape(-1, *rho.shape)
    out = -1j * (h @ rho - rho @ h)
    for op in ls:
        ldl = op.conj().T @ op
        out += op @ rho @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
    return out


cdef class _System:
    cdef object coef_fn
    cdef cplx[:, ::1] h0
    cdef cplx[:, :, ::1] ops
    cdef cplx[:, :, ::1] ls
    cdef cplx[:, ::1] ldl
    cdef cplx[:, ::1] h
    cdef cplx[:, ::1] tmp
    cdef bint has_ls
    cdef Py_ssize_t nk
    cdef double[::1] empty

    cdef void eval(self, double t, const cplx[:, ::1] y, cplx[:, ::1] out) except *:
        cdef const double[::1] c
        if self.nk:
            c = np.ascontiguousarray(self.coef_fn(t), dtype=float)
            _combine(self.h, self.h0, self.ops, c)
            _rhs(out, self.h, y, self.ls, self.ldl, self.tmp, self.has_ls)
        else:
            _rhs(out, self.h0, y, self.ls, self.ldl, self.tmp, self.has_ls)


cdef double _rms_scaled(const cplx[:, ::1] x, const cplx[:, ::1] y, double rtol, double atol) noexcept nogil:
    cdef Py_ssize_t a, b, d = x.shape[0]
    cdef double acc = 0.0, s
    for a in range(d):
        for b in range(d):
            s = atol + rtol * sqrt(cabs2(y[a, b]))
            acc += cabs2(x[a, b]) / (s * s)
    return sqrt(acc / (d * d))


def dp45(coef_fn, h0, ops, ls, rho0, double t0, double t1, t_out, double rtol, double atol,
         double max_step, double first_step, double drift_tol):
    """Compiled Dormand-Prince 5(4) Lindblad integrator; see ``_pykernels.dp45``."""
    cdef _System sysm = _System()
    h0 = np.ascontiguousarray(h0, dtype=complex)
    cdef Py_ssize_t d = h0.shape[0]
    ops = np.ascontiguousarray(ops, dtype=complex).reshape(-1, d, d)
    ls = np.ascontiguousarray(ls, dtype=complex).reshape(-1, d, d)
    sysm.coef_fn = coef_fn
    sysm.h0 = h0
    sysm.ops = ops
    sysm.ls = ls
    sysm.nk = ops.shape[0]
    sysm.has_ls = ls.shape[0] > 0
    sysm.ldl = np.ascontiguousarray(np.einsum("kba,kbc->ac", ls.conj(), ls)) if sysm.has_ls \
        else np.zeros((d, d), dtype=complex)
    sysm.h = np.zeros((d, d), dtype=complex)
    sysm.tmp = np.zeros((d, d), dtype=complex)

    cdef double[::1] tout = np.ascontiguousarray(t_out, dtype=float)
    cdef Py_ssize_t n_out = tout.shape[0]
    out_arr = np.empty((n_out, d, d), dtype=complex)
    cdef cplx[:, :, ::1] out = out_arr
    y_arr = np.array(rho0, dtype=complex, order="C")
    cdef cplx[:, ::1] y = y_arr
    cdef cplx[:, ::1] ynew = np.empty((d, d), dtype=complex)
    cdef cplx[:, ::1] ystage = np.empty((d, d), dtype=complex)
    cdef cplx[:, ::1] err = np.empty((d, d), dtype=complex)
    cdef cplx[:, :, ::1] k = np.empty((7, d, d), dtype=complex)
    cdef cplx[:, ::1] swap
    cdef Py_ssize_t a, b, s, j, i_out = 0
    cdef double t = t0, h, hh, d0, d1, d2, h1, err_norm, factor, t_new, x, tr, herm, target, acc, sc, tol_t
    cdef double[7] q
    cdef cplx z
    cdef long n_acc = 0, n_rej = 0
    cdef bint rejected = False

    target = 0.0
    for a in range(d):
        target += y[a, a].real
    sysm.eval(t, y, k[0])

    if first_step > 0:
        h = first_step
    else:
        d0 = 0.0
        d1 = 0.0
        for a in range(d):
            for b in range(d):
                sc = atol + rtol * sqrt(cabs2(y[a, b]))
                d0 += cabs2(y[a, b]) / (sc * sc)
                d1 += cabs2(k[0, a, b]) / (sc * sc)
        d0 = sqrt(d0 / (d * d))
        d1 = sqrt(d1 / (d * d))
        if d0 < 1e-5 or d1 < 1e-5:
            hh = 1e-6
        else:
            hh = 0.01 * d0 / d1
        hh = min(hh, t1 - t0)
        for a in range(d):
            for b in range(d):
                ystage[a, b] = y[a, b] + hh * k[0, a, b]
        sysm.eval(t + hh, ystage, k[1])
        d2 = 0.0
        for a in range(d):
            for b in range(d):
                sc = atol + rtol * sqrt(cabs2(y[a, b]))
                d2 += cabs2(k[1, a, b] - k[0, a, b]) / (sc * sc)
        d2 = sqrt(d2 / (d * d)) / hh
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, hh * 1e-3)
        else:
            h1 = pow(0.01 / max(d1, d2), 0.2)
        h = min(100 * hh, h1)
    h = min(h, max_step)

    while t < t1:
        if n_acc + n_rej > MAX_STEPS:
            raise StepUnderflow(f"step budget exhausted at t={t!r}")
        if h < 1e-12 * max(1.0, fabs(t)):
            raise StepUnderflow(f"step size underflow at t={t!r} (h={h!r})")
        if t + h >= t1 - 1e-13 * max(1.0, fabs(t1)):
            h = t1 - t
        for s in range(1, 6):
            for a in range(d):
                for b in range(d):
                    z = 0
                    for j in range(s):
                        z = z + A_[s][j] * k[j, a, b]
                    ystage[a, b] = y[a, b] + h * z
            sysm.eval(t + C_[s] * h, ystage, k[s])
        for a in range(d):
            for b in range(d):
                z = 0
                for j in range(6):
                    z = z + B_[j] * k[j, a, b]
                ynew[a, b] = y[a, b] + h * z
        sysm.eval(t + h, ynew, k[6])
        acc = 0.0
        for a in range(d):
            for b in range(d):
                z = 0
                for j in range(7):
                    z = z + E_[j] * k[j, a, b]
                z = h * z
                sc = atol + rtol * max(sqrt(cabs2(y[a, b])), sqrt(cabs2(ynew[a, b])))
                acc += cabs2(z) / (sc * sc)
        err_norm = sqrt(acc / (d * d))
        if err_norm <= 1.0:
            t_new = t + h if t + h < t1 else t1
            tol_t = 1e-13 * max(1.0, fabs(t_new))
            while i_out < n_out and tout[i_out] <= t_new + tol_t:
                if fabs(tout[i_out] - t_new) <= tol_t:
                    out[i_out, :, :] = ynew
                else:
                    x = (tout[i_out] - t) / h
                    for j in range(7):
                        q[j] = x * (P_[j][0] + x * (P_[j][1] + x * (P_[j][2] + x * P_[j][3])))
                    for a in range(d):
                        for b in range(d):
                            z = 0
                            for j in range(7):
                                z = z + q[j] * k[j, a, b]
                            out[i_out, a, b] = y[a, b] + h * z
                i_out += 1
            t = t_new
            swap = y
            y = ynew
            ynew = swap
            k[0, :, :] = k[6]
            n_acc += 1
            herm = 0.0
            tr = 0.0
            for a in range(d):
                tr += y[a, a].real
                for b in range(d):
                    herm = max(herm, sqrt(cabs2(y[a, b] - conj(y[b, a]))))
            if herm > drift_tol or fabs(tr - target) > drift_tol:
                for a in range(d):
                    for b in range(a, d):
                        z = 0.5 * (y[a, b] + conj(y[b, a]))
                        y[a, b] = z
                        y[b, a] = conj(z)
                tr = 0.0
                for a in range(d):
                    tr += y[a, a].real
                for a in range(d):
                    for b in range(d):
                        y[a, b] = y[a, b] * (target / tr)
                sysm.eval(t, y, k[0])
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * pow(err_norm, ERR_EXP))
            if rejected:
                factor = min(1.0, factor)
            h = min(h * factor, max_step)
            rejected = False
        else:
            h *= max(MIN_FACTOR, SAFETY * pow(err_norm, ERR_EXP))
            n_rej += 1
            rejected = True
    while i_out < n_out:
        out[i_out, :, :] = y
        i_out += 1
    return out_arr, np.asarray(y).copy(), n_acc, n_rej, h
