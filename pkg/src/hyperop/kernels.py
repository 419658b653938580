"""Hot loops over the generator multiplication table.

Every kernel has two implementations: a loop version compiled with numba
(suffix ``_nb``) and a vectorised numpy version (suffix ``_np``).  The
unsuffixed functions dispatch on :data:`hyperop._accel.USE_NUMBA`.

A table is the pair ``(idx, sgn)`` of ``(d, d)`` integer arrays with
``i_p i_q = sgn[p, q] * i_{idx[p, q]}``.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


def structure_tensor(idx, sgn):
    """Dense ``C[p, q, r]`` with ``i_p i_q = sum_r C[p, q, r] i_r``."""
    d = idx.shape[0]
    c = np.zeros((d, d, d))
    p, q = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    c[p, q, idx] = sgn
    return c


# -- products ---------------------------------------------------------------

@njit
def mul_batch_nb(a, b, idx, sgn):
    n, d = a.shape
    out = np.zeros((n, d))
    for t in range(n):
        for p in range(d):
            ap = a[t, p]
            if ap == 0.0:
                continue
            for q in range(d):
                out[t, idx[p, q]] += sgn[p, q] * ap * b[t, q]
    return out


def mul_batch_np(a, b, idx, sgn):
    c = structure_tensor(idx, sgn)
    return np.einsum("tp,tq,pqr->tr", a, b, c, optimize=True)


def mul_batch(a, b, idx, sgn):
    """Row-wise products of two ``(n, d)`` coefficient arrays."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if USE_NUMBA:
        return mul_batch_nb(a, b, idx, sgn)
    return mul_batch_np(a, b, idx, sgn)


# -- multiplication matrices ------------------------------------------------

@njit
def left_mats_nb(a, idx, sgn):
    n, d = a.shape
    out = np.zeros((n, d, d))
    for t in range(n):
        for p in range(d):
            ap = a[t, p]
            if ap == 0.0:
                continue
            for q in range(d):
                out[t, idx[p, q], q] += sgn[p, q] * ap
    return out


def left_mats_np(a, idx, sgn):
    c = structure_tensor(idx, sgn)
    return np.einsum("tp,pqr->trq", a, c, optimize=True)


def left_mats(a, idx, sgn):
    """Matrices of ``x -> a_t x`` for each row ``a_t``; shape ``(n, d, d)``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if USE_NUMBA:
        return left_mats_nb(a, idx, sgn)
    return left_mats_np(a, idx, sgn)


@njit
def right_mats_nb(a, idx, sgn):
    n, d = a.shape
    out = np.zeros((n, d, d))
    for t in range(n):
        for q in range(d):
            aq = a[t, q]
            if aq == 0.0:
                continue
            for p in range(d):
                out[t, idx[p, q], p] += sgn[p, q] * aq
    return out


def right_mats_np(a, idx, sgn):
    c = structure_tensor(idx, sgn)
    return np.einsum("tq,pqr->trp", a, c, optimize=True)


def right_mats(a, idx, sgn):
    """Matrices of ``x -> x a_t``; shape ``(n, d, d)``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if USE_NUMBA:
        return right_mats_nb(a, idx, sgn)
    return right_mats_np(a, idx, sgn)


# -- K^n scalar product -----------------------------------------------------

@njit
def kinner_nb(x, y, idx, sgn):
    # sum_l conj(x_l) y_l
    n, d = x.shape
    out = np.zeros(d)
    for t in range(n):
        for p in range(d):
            xp = x[t, p]
            if p > 0:
                xp = -xp
            if xp == 0.0:
                continue
            for q in range(d):
                out[idx[p, q]] += sgn[p, q] * xp * y[t, q]
    return out


def kinner_np(x, y, idx, sgn):
    xc = x.copy()
    xc[:, 1:] *= -1.0
    return mul_batch_np(xc, y, idx, sgn).sum(axis=0)


def kinner(x, y, idx, sgn):
    """K-valued ``sum_l conj(x_l) y_l`` for ``(n, d)`` coordinate arrays."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if USE_NUMBA:
        return kinner_nb(x, y, idx, sgn)
    return kinner_np(x, y, idx, sgn)


def block_left_rep(entries, idx, sgn):
    """Real ``(n d) x (n d)`` matrix of ``x -> A x`` for an ``(n, n, d)`` entry array.

    Layout is coordinate-major, generator-minor: block ``(l, k)`` is the left
    multiplication matrix of ``A[l, k]``.
    """
    n = entries.shape[0]
    d = entries.shape[2]
    mats = left_mats(entries.reshape(n * n, d), idx, sgn).reshape(n, n, d, d)
    return mats.transpose(0, 2, 1, 3).reshape(n * d, n * d)
