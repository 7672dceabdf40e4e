# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: fused k-means assignment, canonical-order
accumulation, k-means++ distance updates, mutual-NN scan, and the
InfoNCE batch loss/gradient. Mirrors ``pure.py``; accumulation order is
ascending row index so both backends produce bit-identical sums."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()


def assign_cosine(double[:, ::1] x, double[:, ::1] centers):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], k = centers.shape[0]
    labels_arr = np.empty(n, dtype=np.int32)
    dists_arr = np.empty(n, dtype=np.float64)
    cdef int[::1] labels = labels_arr
    cdef double[::1] dists = dists_arr
    cdef Py_ssize_t i, j, c, best_c
    cdef double s, best, obj = 0.0
    for i in range(n):
        best = -1e308
        best_c = 0
        for c in range(k):
            s = 0.0
            for j in range(d):
                s += x[i, j] * centers[c, j]
            if s > best:
                best = s
                best_c = c
        labels[i] = <int> best_c
        dists[i] = 1.0 - best
        obj += 1.0 - best
    return labels_arr, obj, dists_arr


def assign_euclidean(double[:, ::1] x, double[:, ::1] centers):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], k = centers.shape[0]
    labels_arr = np.empty(n, dtype=np.int32)
    dists_arr = np.empty(n, dtype=np.float64)
    cdef int[::1] labels = labels_arr
    cdef double[::1] dists = dists_arr
    cdef Py_ssize_t i, j, c, best_c
    cdef double s, diff, best, obj = 0.0
    for i in range(n):
        best = 1e308
        best_c = 0
        for c in range(k):
            s = 0.0
            for j in range(d):
                diff = x[i, j] - centers[c, j]
                s += diff * diff
            if s < best:
                best = s
                best_c = c
        labels[i] = <int> best_c
        dists[i] = best
        obj += best
    return labels_arr, obj, dists_arr


def accumulate_rows(double[:, ::1] x, int[::1] labels, Py_ssize_t k):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    sums_arr = np.zeros((k, d), dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t i, j, g
    for i in range(n):
        g = labels[i]
        counts[g] += 1
        for j in range(d):
            sums[g, j] += x[i, j]
    return sums_arr, counts_arr


def min_dist_update_cosine(double[:, ::1] x, double[::1] center, double[::1] d2):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j
    cdef double s, v
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += x[i, j] * center[j]
        v = 1.0 - s
        if v < d2[i]:
            d2[i] = v


def min_dist_update_euclidean(double[:, ::1] x, double[::1] center, double[::1] d2):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j
    cdef double s, diff
    for i in range(n):
        s = 0.0
        for j in range(d):
            diff = x[i, j] - center[j]
            s += diff * diff
        if s < d2[i]:
            d2[i] = s


def nearest_neighbor_cosine(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    nn_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] nn = nn_arr
    cdef Py_ssize_t i, j, t, best_j
    cdef double s, best
    for i in range(n):
        best = -1e308
        best_j = 0
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for t in range(d):
                s += x[i, t] * x[j, t]
            if s > best:
                best = s
                best_j = j
        nn[i] = <long long> best_j
    return nn_arr


def infonce_loss_grad(double[:, ::1] a, double[:, ::1] b, double tau, bint symmetric):
    cdef Py_ssize_t m = a.shape[0], d = a.shape[1]
    na_arr = np.empty(m, dtype=np.float64)
    nb_arr = np.empty(m, dtype=np.float64)
    u_arr = np.empty((m, d), dtype=np.float64)
    v_arr = np.empty((m, d), dtype=np.float64)
    z_arr = np.empty((m, m), dtype=np.float64)
    g_arr = np.zeros((m, m), dtype=np.float64)
    cdef double[::1] na = na_arr, nb = nb_arr
    cdef double[:, ::1] u = u_arr, v = v_arr, z = z_arr, g = g_arr
    cdef Py_ssize_t i, j, t
    cdef double s, mx, acc, loss_fwd = 0.0, loss_bwd = 0.0, loss, scale

    for i in range(m):
        s = 0.0
        for t in range(d):
            s += a[i, t] * a[i, t]
        na[i] = sqrt(s)
        for t in range(d):
            u[i, t] = a[i, t] / na[i]
        s = 0.0
        for t in range(d):
            s += b[i, t] * b[i, t]
        nb[i] = sqrt(s)
        for t in range(d):
            v[i, t] = b[i, t] / nb[i]

    for i in range(m):
        for j in range(m):
            s = 0.0
            for t in range(d):
                s += u[i, t] * v[j, t]
            z[i, j] = s / tau

    scale = 1.0 / (m * tau)
    # forward direction: softmax over each row
    for i in range(m):
        mx = z[i, 0]
        for j in range(1, m):
            if z[i, j] > mx:
                mx = z[i, j]
        acc = 0.0
        for j in range(m):
            acc += exp(z[i, j] - mx)
        loss_fwd += (log(acc) + mx) - z[i, i]
        for j in range(m):
            g[i, j] += exp(z[i, j] - mx) / acc * scale
        g[i, i] -= scale
    loss_fwd /= m
    loss = loss_fwd

    if symmetric:
        # backward direction: softmax over each column
        for j in range(m):
            mx = z[0, j]
            for i in range(1, m):
                if z[i, j] > mx:
                    mx = z[i, j]
            acc = 0.0
            for i in range(m):
                acc += exp(z[i, j] - mx)
            loss_bwd += (log(acc) + mx) - z[j, j]
            for i in range(m):
                g[i, j] += exp(z[i, j] - mx) / acc * scale
            g[j, j] -= scale
        loss_bwd /= m
        loss = 0.5 * (loss_fwd + loss_bwd)
        for i in range(m):
            for j in range(m):
                g[i, j] *= 0.5

    ga_arr = np.empty((m, d), dtype=np.float64)
    gb_arr = np.empty((m, d), dtype=np.float64)
    cdef double[:, ::1] ga = ga_arr, gb = gb_arr
    # dL/du_i = sum_j g_ij v_j ; project out the radial part, scale by 1/|a_i|
    for i in range(m):
        for t in range(d):
            s = 0.0
            for j in range(m):
                s += g[i, j] * v[j, t]
            ga[i, t] = s
        acc = 0.0
        for t in range(d):
            acc += ga[i, t] * u[i, t]
        for t in range(d):
            ga[i, t] = (ga[i, t] - acc * u[i, t]) / na[i]
    for j in range(m):
        for t in range(d):
            s = 0.0
            for i in range(m):
                s += g[i, j] * u[i, t]
            gb[j, t] = s
        acc = 0.0
        for t in range(d):
            acc += gb[j, t] * v[j, t]
        for t in range(d):
            gb[j, t] = (gb[j, t] - acc * v[j, t]) / nb[j]
    return loss, ga_arr, gb_arr
