"""Pure numpy implementation of the numerical hot kernels.

This module is the reference implementation and the fallback used when the
compiled extension is unavailable. The compiled version in ``_ckernels.pyx``
follows the same algorithm step for step, so both backends produce the same
trajectories up to floating-point rounding.
"""

import math

import numpy as np

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40]
)
# Continuous extension: y(t + x h) = y + h * sum_i k_i * sum_j P[i, j] x^(j+1).
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
ERR_EXP = -1.0 / 5.0
MAX_STEPS = 10_000_000


class StepUnderflow(RuntimeError):
    """Raised when the adaptive step size collapses below machine resolution."""


def cosine_sum(t, amps, freqs, phases):
    """Return ``sum_j amps[j] * cos(freqs[j] * t + phases[j])``."""
    return float(np.dot(amps, np.cos(freqs * t + phases)))


def combine_terms(h0, ops, coefs):
    """Return ``h0 + sum_k coefs[k] * ops[k]`` as a new array."""
    if len(coefs) == 0:
        return h0.copy()
    return h0 + np.tensordot(coefs, ops, axes=1)


def _lindblad_rhs(h, rho, ls, ldl):
    # Inside the integrator every state is Hermitian, so rho H = (H rho)^+.
    hr = h @ rho
    out = -1j * (hr - hr.conj().T)
    if ls.shape[0]:
        out += np.einsum("kab,bc,kdc->ad", ls, rho, ls.conj(), optimize=False)
        lr = ldl @ rho
        out -= 0.5 * (lr + lr.conj().T)
    return out


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


def _rms(x):
    return math.sqrt(float(np.mean(x.real**2 + x.imag**2)))


def dp45(coef_fn, h0, ops, ls, rho0, t0, t1, t_out, rtol, atol, max_step, first_step, drift_tol):
    """Integrate the Lindblad equation from ``t0`` to ``t1`` with Dormand-Prince 5(4).

    Parameters
    ----------
    coef_fn : callable or None
        ``coef_fn(t)`` returns the real coefficients multiplying ``ops``.
    h0 : ndarray, shape (d, d)
        Static Hamiltonian.
    ops : ndarray, shape (K, d, d)
        Hermitian operators of the time-dependent terms.
    ls : ndarray, shape (J, d, d)
        Collapse operators with rates already folded in.
    rho0 : ndarray, shape (d, d)
        State at ``t0``.
    t0, t1 : float
        Integration span, ``t1 > t0``.
    t_out : ndarray
        Sorted output times inside ``(t0, t1]``; states there come from the
        continuous extension.
    rtol, atol : float
        Tolerances of the RMS error norm.
    max_step : float
        Upper bound on the step size.
    first_step : float
        Initial step; ``<= 0`` selects one automatically.
    drift_tol : float
        Hermiticity and trace drift above this value is projected away after
        each accepted step.

    Returns
    -------
    out : ndarray, shape (len(t_out), d, d)
    rho : ndarray, shape (d, d)
        State at ``t1``.
    n_accepted, n_rejected : int
    h : float
        Last proposed step size.
    """
    ops = np.ascontiguousarray(ops, dtype=complex)
    ls = np.ascontiguousarray(ls, dtype=complex)
    ldl = np.einsum("kba,kbc->ac", ls.conj(), ls) if ls.shape[0] else None
    n_terms = ops.shape[0]
    empty = np.zeros(0)

    def f(t, y):
        c = np.asarray(coef_fn(t), dtype=float) if n_terms else empty
        return _lindblad_rhs(combine_terms(h0, ops, c), y, ls, ldl)

    y = np.array(rho0, dtype=complex)
    t = float(t0)
    target = float(np.trace(y).real)
    t_out = np.asarray(t_out, dtype=float)
    out = np.empty((len(t_out),) + y.shape, dtype=complex)
    i_out = 0
    k = np.empty((7,) + y.shape, dtype=complex)
    k[0] = f(t, y)

    if first_step > 0:
        h = first_step
    else:
        scale = atol + rtol * np.abs(y)
        d0 = _rms(y / scale)
        d1 = _rms(k[0] / scale)
        hh = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        hh = min(hh, t1 - t0)
        f1 = f(t + hh, y + hh * k[0])
        d2 = _rms((f1 - k[0]) / scale) / hh
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, hh * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = min(100 * hh, h1)
    h = min(h, max_step)

    n_acc = 0
    n_rej = 0
    rejected = False
    while t < t1:
        if n_acc + n_rej > MAX_STEPS:
            raise StepUnderflow(f"step budget exhausted at t={t!r}")
        if h < 1e-12 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size underflow at t={t!r} (h={h!r})")
        if t + h >= t1 - 1e-13 * max(1.0, abs(t1)):
            h = t1 - t
        for s in range(1, 6):
            dy = np.tensordot(_A[s], k[:s], axes=1)
            k[s] = f(t + _C[s] * h, y + h * dy)
        y_new = y + h * np.tensordot(_B[:6], k[:6], axes=1)
        k[6] = f(t + h, y_new)
        err = h * np.tensordot(_E, k, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / scale)
        if err_norm <= 1.0:
            t_new = t + h if t + h < t1 else t1
            while i_out < len(t_out) and t_out[i_out] <= t_new + 1e-13 * max(1.0, abs(t_new)):
                if abs(t_out[i_out] - t_new) <= 1e-13 * max(1.0, abs(t_new)):
                    out[i_out] = y_new
                else:
                    x = (t_out[i_out] - t) / h
                    q = _P @ np.array([x, x * x, x**3, x**4])
                    out[i_out] = y + h * np.tensordot(q, k, axes=1)
                i_out += 1
            t = t_new
            y = y_new
            k[0] = k[6]
            n_acc += 1
            herm = float(np.max(np.abs(y - y.conj().T)))
            tr = float(np.trace(y).real)
            if herm > drift_tol or abs(tr - target) > drift_tol:
                y = 0.5 * (y + y.conj().T)
                y *= target / float(np.trace(y).real)
                k[0] = f(t, y)
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * err_norm**ERR_EXP)
            if rejected:
                factor = min(1.0, factor)
            h = min(h * factor, max_step)
            rejected = False
        else:
            h *= max(MIN_FACTOR, SAFETY * err_norm**ERR_EXP)
            n_rej += 1
            rejected = True
    while i_out < len(t_out):
        out[i_out] = y
        i_out += 1
    return out, y, n_acc, n_rej, h
