# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel implementations.

Mirrors `kcontract._kernels_py` exactly: same entry points, same signatures,
same semantics. Keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt, tanh

cnp.import_array()

BACKEND_NAME = "cython"

FAMILY_LINEAR = 0
FAMILY_TANH = 1
FAMILY_PIECEWISE = 2


cdef double _det_inplace(double[:, ::1] m, Py_ssize_t k):
    """Determinant via in-place LU with partial pivoting; destroys m."""
    cdef Py_ssize_t i, j, col, piv
    cdef double best, factor, tmp, det
    if k == 0:
        return 1.0
    if k == 1:
        return m[0, 0]
    if k == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if k == 3:
        return (
            m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
        )
    det = 1.0
    for col in range(k):
        piv = col
        best = fabs(m[col, col])
        for i in range(col + 1, k):
            if fabs(m[i, col]) > best:
                best = fabs(m[i, col])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != col:
            det = -det
            for j in range(k):
                tmp = m[col, j]
                m[col, j] = m[piv, j]
                m[piv, j] = tmp
        det *= m[col, col]
        for i in range(col + 1, k):
            factor = m[i, col] / m[col, col]
            for j in range(col + 1, k):
                m[i, j] -= factor * m[col, j]
    return det


def minors(a, rows_idx, cols_idx):
    """All order-k minors of ``a`` for the given 0-based row/column index sets."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t[:, ::1] rv = np.ascontiguousarray(rows_idx, dtype=np.intp)
    cdef Py_ssize_t[:, ::1] cv = np.ascontiguousarray(cols_idx, dtype=np.intp)
    cdef Py_ssize_t nr = rv.shape[0], nc = cv.shape[0], k = rv.shape[1]
    cdef Py_ssize_t r, c, i, j
    out_arr = np.empty((nr, nc), dtype=np.float64)
    scratch_arr = np.empty((k, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] scratch = scratch_arr
    for r in range(nr):
        for c in range(nc):
            for i in range(k):
                for j in range(k):
                    scratch[i, j] = av[rv[r, i], cv[c, j]]
            out[r, c] = _det_inplace(scratch, k)
    return out_arr


def column_minors(x, rows_idx):
    """Minors of a batch of tall matrices taking all k columns; x is (B, n, k)."""
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t[:, ::1] rv = np.ascontiguousarray(rows_idx, dtype=np.intp)
    cdef Py_ssize_t batch = xv.shape[0], nr = rv.shape[0], k = rv.shape[1]
    cdef Py_ssize_t b, r, i, j
    out_arr = np.empty((batch, nr), dtype=np.float64)
    scratch_arr = np.empty((k, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] scratch = scratch_arr
    for b in range(batch):
        for r in range(nr):
            for i in range(k):
                for j in range(k):
                    scratch[i, j] = xv[b, rv[r, i], j]
            out[b, r] = _det_inplace(scratch, k)
    return out_arr


def additive_apply(a, diag_idx, off_row, off_col, src_row, src_col, sign):
    """Assemble an additive compound from the precomputed sparsity plan."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t[:, ::1] dv = np.ascontiguousarray(diag_idx, dtype=np.intp)
    cdef Py_ssize_t[::1] orow = np.ascontiguousarray(off_row, dtype=np.intp)
    cdef Py_ssize_t[::1] ocol = np.ascontiguousarray(off_col, dtype=np.intp)
    cdef Py_ssize_t[::1] srow = np.ascontiguousarray(src_row, dtype=np.intp)
    cdef Py_ssize_t[::1] scol = np.ascontiguousarray(src_col, dtype=np.intp)
    cdef double[::1] sgn = np.ascontiguousarray(sign, dtype=np.float64)
    cdef Py_ssize_t nr = dv.shape[0], k = dv.shape[1], m = orow.shape[0]
    cdef Py_ssize_t r, i
    cdef double acc
    out_arr = np.zeros((nr, nr), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(m):
        out[orow[i], ocol[i]] = sgn[i] * av[srow[i], scol[i]]
    for r in range(nr):
        acc = 0.0
        for i in range(k):
            acc += av[dv[r, i], dv[r, i]]
        out[r, r] = acc
    return out_arr


cdef double _interp_value(double y, const double* xs, const double* ys,
                          Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = m - 1, mid
    if y <= xs[0]:
        return ys[0]
    if y >= xs[m - 1]:
        return ys[m - 1]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= y:
            lo = mid
        else:
            hi = mid
    return ys[lo] + (ys[lo + 1] - ys[lo]) / (xs[lo + 1] - xs[lo]) * (y - xs[lo])


cdef double _interp_slope(double y, const double* xs, const double* ys,
                          Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = m - 1, mid
    if y < xs[0] or y > xs[m - 1]:
        return 0.0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= y:
            lo = mid
        else:
            hi = mid
    if lo > m - 2:
        lo = m - 2
    return (ys[lo + 1] - ys[lo]) / (xs[lo + 1] - xs[lo])


cdef void _stage(
    const double* a0, const double* b0, const double* c0, int family,
    const double* pw_x, const double* pw_y, Py_ssize_t pw_len,
    Py_ssize_t n, Py_ssize_t q, Py_ssize_t kf,
    const double* zv, const double* frv, bint with_frames,
    double* yq, double* tq,
    double* k_out, double* f_out,
) noexcept nogil:
    # one RK4 stage evaluation sharing y = c0 z between the field and the
    # variational part: k_out = a0 z + b0 phi(y),
    # f_out = (a0 + b0 diag(phi'(y)) c0) frv; row-major buffers throughout
    cdef Py_ssize_t i, j, r, c
    cdef double acc, t, d, u
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += a0[i * n + j] * zv[j]
        k_out[i] = acc
    if with_frames:
        for i in range(n):
            for c in range(kf):
                acc = 0.0
                for j in range(n):
                    acc += a0[i * n + j] * frv[j * kf + c]
                f_out[i * kf + c] = acc
    if family == 0:
        return
    for r in range(q):
        acc = 0.0
        for j in range(n):
            acc += c0[r * n + j] * zv[j]
        yq[r] = acc
    for r in range(q):
        if family == 1:
            t = tanh(yq[r])
            u = t
            d = 1.0 - t * t  # sech^2 without cosh overflow
        else:
            u = _interp_value(yq[r], pw_x, pw_y, pw_len)
            d = _interp_slope(yq[r], pw_x, pw_y, pw_len)
        for i in range(n):
            k_out[i] += b0[i * q + r] * u
        if with_frames:
            for c in range(kf):
                acc = 0.0
                for j in range(n):
                    acc += c0[r * n + j] * frv[j * kf + c]
                tq[r * kf + c] = d * acc
    if with_frames:
        for i in range(n):
            for c in range(kf):
                acc = 0.0
                for r in range(q):
                    acc += b0[i * q + r] * tq[r * kf + c]
                f_out[i * kf + c] += acc


cdef void _record_slot(
    double[:, :, ::1] states, double[:, :, :, ::1] frames, double[:, ::1] vols,
    cnp.int64_t[::1] collapse,
    double[:, ::1] x, double[:, :, ::1] fr,
    double[:, ::1] qkv, Py_ssize_t[:, ::1] rowsv,
    double[:, ::1] dscratch, double[::1] xk,
    Py_ssize_t slot, bint with_frames, double vol_floor,
):
    cdef Py_ssize_t batch = x.shape[0], n = x.shape[1]
    cdef Py_ssize_t kf = fr.shape[2], nr = rowsv.shape[0]
    cdef Py_ssize_t b, i, c, r, j
    cdef double acc, vnorm
    for b in range(batch):
        for i in range(n):
            states[slot, b, i] = x[b, i]
    if not with_frames:
        return
    for b in range(batch):
        for i in range(n):
            for c in range(kf):
                frames[slot, b, i, c] = fr[b, i, c]
        for r in range(nr):
            for i in range(kf):
                for j in range(kf):
                    dscratch[i, j] = fr[b, rowsv[r, i], j]
            xk[r] = _det_inplace(dscratch, kf)
        vnorm = 0.0
        for r in range(nr):
            acc = 0.0
            for j in range(nr):
                acc += qkv[r, j] * xk[j]
            vnorm += acc * acc
        vnorm = sqrt(vnorm)
        vols[slot, b] = vnorm
        if vnorm < vol_floor and collapse[b] < 0:
            collapse[b] = slot


def rk4_run(
    a0, b0, c0, family, pw_x, pw_y,
    x0, frame0, qk, rows_idx,
    double dt, record_steps, double div_norm, double vol_floor,
):
    """Fixed-step RK4 on dx/dt = a0 x + b0 phi(c0 x) for a batch of trajectories.

    Same contract as the fallback backend: records at the step indices in
    ``record_steps``, freezes trajectories whose norm passes ``div_norm``
    (diverge_step holds the offending step or -1), and flags the first record
    with volume below ``vol_floor`` in collapse_step.
    """
    cdef double[:, ::1] a0v = np.ascontiguousarray(a0, dtype=np.float64)
    cdef double[:, ::1] b0v = np.ascontiguousarray(b0, dtype=np.float64)
    cdef double[:, ::1] c0v = np.ascontiguousarray(c0, dtype=np.float64)
    cdef double[::1] pwx = np.ascontiguousarray(pw_x, dtype=np.float64)
    cdef double[::1] pwy = np.ascontiguousarray(pw_y, dtype=np.float64)
    cdef double[:, ::1] qkv = np.ascontiguousarray(qk, dtype=np.float64)
    cdef Py_ssize_t[:, ::1] rowsv = np.ascontiguousarray(rows_idx, dtype=np.intp)
    cdef Py_ssize_t[::1] recs = np.ascontiguousarray(record_steps, dtype=np.intp)
    cdef int fam = family

    x_arr = np.ascontiguousarray(x0, dtype=np.float64).copy()
    fr_arr = np.ascontiguousarray(frame0, dtype=np.float64).copy()
    cdef double[:, ::1] x = x_arr
    cdef double[:, :, ::1] fr = fr_arr

    cdef Py_ssize_t batch = x.shape[0], n = x.shape[1]
    cdef bint with_frames = fr.shape[2] > 0
    cdef Py_ssize_t kf = fr.shape[2]
    cdef Py_ssize_t q = c0v.shape[0]
    cdef Py_ssize_t nrec = recs.shape[0]
    cdef Py_ssize_t n_steps = recs[nrec - 1]
    cdef Py_ssize_t nr = rowsv.shape[0]

    states_arr = np.empty((nrec, batch, n), dtype=np.float64)
    if with_frames:
        frames_arr = np.empty((nrec, batch, n, kf), dtype=np.float64)
        vols_arr = np.empty((nrec, batch), dtype=np.float64)
    else:
        frames_arr = np.empty((nrec, batch, n, 0), dtype=np.float64)
        vols_arr = np.empty((nrec, batch), dtype=np.float64)
    diverge_arr = np.full(batch, -1, dtype=np.int64)
    collapse_arr = np.full(batch, -1, dtype=np.int64)
    cdef double[:, :, ::1] states = states_arr
    cdef double[:, :, :, ::1] frames = frames_arr
    cdef double[:, ::1] vols = vols_arr
    cdef cnp.int64_t[::1] diverge = diverge_arr
    cdef cnp.int64_t[::1] collapse = collapse_arr

    active_arr = np.ones(batch, dtype=np.uint8)
    cdef unsigned char[::1] active = active_arr

    # stage scratch, one trajectory at a time (max(...) keeps pointers valid
    # for the degenerate q = 0 / kf = 0 layouts, which are never dereferenced)
    k1_a = np.empty(n); k2_a = np.empty(n); k3_a = np.empty(n); k4_a = np.empty(n)
    zv_a = np.empty(n); yq_a = np.empty(max(q, 1))
    f1_a = np.empty((n, max(kf, 1))); f2_a = np.empty((n, max(kf, 1)))
    f3_a = np.empty((n, max(kf, 1))); f4_a = np.empty((n, max(kf, 1)))
    fs_a = np.empty((n, max(kf, 1))); tq_a = np.empty((max(q, 1), max(kf, 1)))
    det_a = np.empty((max(kf, 1), max(kf, 1))); xk_a = np.empty(max(nr, 1))
    cdef double[:, ::1] dscratch = det_a
    cdef double[::1] xk = xk_a

    cdef double[::1] k1v = k1_a, k2v = k2_a, k3v = k3_a, k4v = k4_a
    cdef double[::1] zvv = zv_a, yqv = yq_a
    cdef double[:, ::1] f1v = f1_a, f2v = f2_a, f3v = f3_a, f4v = f4_a
    cdef double[:, ::1] fsv = fs_a, tqv = tq_a
    cdef double* k1 = &k1v[0]
    cdef double* k2 = &k2v[0]
    cdef double* k3 = &k3v[0]
    cdef double* k4 = &k4v[0]
    cdef double* zv = &zvv[0]
    cdef double* yq = &yqv[0]
    cdef double* f1 = &f1v[0, 0]
    cdef double* f2 = &f2v[0, 0]
    cdef double* f3 = &f3v[0, 0]
    cdef double* f4 = &f4v[0, 0]
    cdef double* fs = &fsv[0, 0]
    cdef double* tq = &tqv[0, 0]

    cdef const double* a0p = &a0v[0, 0]
    cdef const double* b0p = NULL
    cdef const double* c0p = NULL
    cdef const double* pwxp = NULL
    cdef const double* pwyp = NULL
    cdef Py_ssize_t pw_len = pwx.shape[0]
    if q > 0:
        b0p = &b0v[0, 0]
        c0p = &c0v[0, 0]
    if pw_len > 0:
        pwxp = &pwx[0]
        pwyp = &pwy[0]
    cdef double* xp = &x[0, 0]
    cdef double* frp = NULL
    if with_frames:
        frp = &fr[0, 0, 0]
    cdef double* xb
    cdef double* frb = NULL

    cdef Py_ssize_t step, b, i, c, rec_pos
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef double nrm

    rec_pos = 0
    if recs[0] == 0:
        _record_slot(states, frames, vols, collapse, x, fr, qkv, rowsv,
                     dscratch, xk, 0, with_frames, vol_floor)
        rec_pos = 1

    for step in range(1, n_steps + 1):
        for b in range(batch):
            if not active[b]:
                continue
            xb = xp + b * n
            if with_frames:
                frb = frp + b * n * kf
            # stage 1 at z = x
            for i in range(n):
                zv[i] = xb[i]
            if with_frames:
                for i in range(n * kf):
                    fs[i] = frb[i]
            _stage(a0p, b0p, c0p, fam, pwxp, pwyp, pw_len, n, q, kf,
                   zv, fs, with_frames, yq, tq, k1, f1)
            # stage 2 at z = x + dt/2 k1
            for i in range(n):
                zv[i] = xb[i] + half * k1[i]
            if with_frames:
                for i in range(n * kf):
                    fs[i] = frb[i] + half * f1[i]
            _stage(a0p, b0p, c0p, fam, pwxp, pwyp, pw_len, n, q, kf,
                   zv, fs, with_frames, yq, tq, k2, f2)
            # stage 3 at z = x + dt/2 k2
            for i in range(n):
                zv[i] = xb[i] + half * k2[i]
            if with_frames:
                for i in range(n * kf):
                    fs[i] = frb[i] + half * f2[i]
            _stage(a0p, b0p, c0p, fam, pwxp, pwyp, pw_len, n, q, kf,
                   zv, fs, with_frames, yq, tq, k3, f3)
            # stage 4 at z = x + dt k3
            for i in range(n):
                zv[i] = xb[i] + dt * k3[i]
            if with_frames:
                for i in range(n * kf):
                    fs[i] = frb[i] + dt * f3[i]
            _stage(a0p, b0p, c0p, fam, pwxp, pwyp, pw_len, n, q, kf,
                   zv, fs, with_frames, yq, tq, k4, f4)
            # combine
            nrm = 0.0
            for i in range(n):
                xb[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                nrm += xb[i] * xb[i]
            if with_frames:
                for i in range(n * kf):
                    frb[i] += sixth * (f1[i] + 2.0 * f2[i] + 2.0 * f3[i] + f4[i])
            if sqrt(nrm) > div_norm:
                diverge[b] = step
                active[b] = 0
        if rec_pos < nrec and step == recs[rec_pos]:
            _record_slot(states, frames, vols, collapse, x, fr, qkv, rowsv,
                         dscratch, xk, rec_pos, with_frames, vol_floor)
            rec_pos += 1

    if not with_frames:
        return states_arr, np.empty((0, 0, 0, 0)), np.empty((0, 0)), diverge_arr, collapse_arr
    return states_arr, frames_arr, vols_arr, diverge_arr, collapse_arr
