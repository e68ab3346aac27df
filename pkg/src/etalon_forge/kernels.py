"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names at the bottom of the module dispatch on ``_accel.USE_NUMBA``.
Both variants are importable directly (``*_nb`` / ``*_np``) so tests and the
benchmark can compare them.

Phases passed to these kernels are the one-unit delay phase ``2*pi*u/lambda``
already reduced modulo ``2*pi``; a term with exponent ``e`` contributes
``exp(-1j * e * phase)``.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# sparse polynomial in z^-1


@njit
def sparse_eval_nb(exponents, coeffs, phase):
    out = np.zeros(phase.shape[0], dtype=np.complex128)
    for k in range(phase.shape[0]):
        re = 0.0
        im = 0.0
        for t in range(exponents.shape[0]):
            arg = exponents[t] * phase[k]
            re += coeffs[t] * math.cos(arg)
            im -= coeffs[t] * math.sin(arg)
        out[k] = complex(re, im)
    return out


def sparse_eval_np(exponents, coeffs, phase):
    arg = np.multiply.outer(phase, exponents.astype(np.float64))
    return np.cos(arg) @ coeffs - 1j * (np.sin(arg) @ coeffs)


# ---------------------------------------------------------------------------
# batch of structured intensities sharing one coefficient table


@njit
def batch_intensity_nb(lengths, coeffs, gain, phase):
    # coeffs[mask] belongs to the subset of cavities whose bits are set in mask;
    # its term is the product of the members' round-trip phasors
    n_cand, n = lengths.shape
    n_terms = 1 << n
    out = np.empty((n_cand, phase.shape[0]))
    w = np.empty(n, dtype=np.complex128)
    term = np.empty(n_terms, dtype=np.complex128)
    term[0] = 1.0
    for c in range(n_cand):
        for k in range(phase.shape[0]):
            for m in range(n):
                arg = 2.0 * lengths[c, m] * phase[k]
                w[m] = complex(math.cos(arg), -math.sin(arg))
            acc = coeffs[0] + 0j
            for mask in range(1, n_terms):
                low = mask & -mask
                m = 0
                while (1 << m) != low:
                    m += 1
                term[mask] = term[mask ^ low] * w[m]
                acc += coeffs[mask] * term[mask]
            out[c, k] = gain / (acc.real * acc.real + acc.imag * acc.imag)
    return out


def batch_intensity_np(lengths, coeffs, gain, phase):
    n = lengths.shape[1]
    masks = (np.arange(1 << n)[:, None] >> np.arange(n)) & 1
    exps = (2 * lengths @ masks.T).astype(np.float64)
    out = np.empty((lengths.shape[0], phase.shape[0]))
    for c in range(lengths.shape[0]):
        arg = np.multiply.outer(phase, exps[c])
        re = np.cos(arg) @ coeffs
        im = np.sin(arg) @ coeffs
        out[c] = gain / (re * re + im * im)
    return out


# ---------------------------------------------------------------------------
# 2x2 cascade product  M_n ... M_1 M_0


@njit
def cascade_nb(r, x, phase):
    n = x.shape[0]
    out = np.empty((phase.shape[0], 2, 2), dtype=np.complex128)
    for k in range(phase.shape[0]):
        a = 1.0 + 0j
        b = r[0] + 0j
        c = r[0] + 0j
        d = 1.0 + 0j
        for m in range(n):
            arg = 2.0 * x[m] * phase[k]
            w = complex(math.cos(arg), -math.sin(arg))
            rm = r[m + 1]
            # [[1, rm w], [rm, w]] @ [[a, b], [c, d]]
            na = a + rm * w * c
            nb = b + rm * w * d
            nc = rm * a + w * c
            nd = rm * b + w * d
            a, b, c, d = na, nb, nc, nd
        out[k, 0, 0] = a
        out[k, 0, 1] = b
        out[k, 1, 0] = c
        out[k, 1, 1] = d
    return out


def cascade_np(r, x, phase):
    out = np.empty((phase.shape[0], 2, 2), dtype=np.complex128)
    out[:, 0, 0] = 1.0
    out[:, 0, 1] = r[0]
    out[:, 1, 0] = r[0]
    out[:, 1, 1] = 1.0
    for m in range(x.shape[0]):
        w = np.exp(-2j * x[m] * phase)
        step = np.empty_like(out)
        step[:, 0, 0] = 1.0
        step[:, 0, 1] = r[m + 1] * w
        step[:, 1, 0] = r[m + 1]
        step[:, 1, 1] = w
        out = step @ out
    return out


# ---------------------------------------------------------------------------
# main lobe and stopband rejection


@njit
def lobe_bounds_nb(y, k, depth):
    level = depth * y[k]
    n = y.shape[0]
    left = 0
    for i in range(k - 1, 0, -1):
        if y[i] <= y[i - 1] and y[i] <= y[i + 1] and y[i] < level:
            left = i
            break
    right = n - 1
    for i in range(k + 1, n - 1):
        if y[i] <= y[i - 1] and y[i] <= y[i + 1] and y[i] < level:
            right = i
            break
    return left, right


def lobe_bounds_np(y, k, depth):
    y = np.asarray(y)
    n = y.shape[0]
    if n < 3:
        return 0, n - 1
    inner = y[1:-1]
    is_min = (inner <= y[:-2]) & (inner <= y[2:]) & (inner < depth * y[k])
    idx = np.flatnonzero(is_min) + 1
    before = idx[idx < k]
    after = idx[idx > k]
    left = int(before[-1]) if before.size else 0
    right = int(after[0]) if after.size else n - 1
    return left, right


@njit
def rejection_batch_nb(intensity, depth):
    out = np.empty(intensity.shape[0])
    n = intensity.shape[1]
    for c in range(intensity.shape[0]):
        y = intensity[c]
        k = np.argmax(y)
        left, right = lobe_bounds_nb(y, k, depth)
        side = 0.0
        for i in range(0, left):
            if y[i] > side:
                side = y[i]
        for i in range(right + 1, n):
            if y[i] > side:
                side = y[i]
        if side > 0.0 and y[k] > 0.0:
            out[c] = 10.0 * math.log10(side / y[k])
        else:
            out[c] = -np.inf
    return out


def rejection_batch_np(intensity, depth):
    out = np.empty(intensity.shape[0])
    for c, y in enumerate(intensity):
        k = int(np.argmax(y))
        left, right = lobe_bounds_np(y, k, depth)
        side = np.concatenate((y[:left], y[right + 1:]))
        smax = side.max() if side.size else 0.0
        out[c] = 10.0 * np.log10(smax / y[k]) if smax > 0.0 and y[k] > 0.0 else -np.inf
    return out


# ---------------------------------------------------------------------------
# dispatch

if _accel.USE_NUMBA:
    sparse_eval = sparse_eval_nb
    batch_intensity = batch_intensity_nb
    cascade = cascade_nb
    lobe_bounds = lobe_bounds_nb
    rejection_batch = rejection_batch_nb
else:
    sparse_eval = sparse_eval_np
    batch_intensity = batch_intensity_np
    cascade = cascade_np
    lobe_bounds = lobe_bounds_np
    rejection_batch = rejection_batch_np
