# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree kernels. Same contract and selection rule as ``_tree_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef double TIE_RTOL = 1e-10


cdef inline double _midpoint(double a, double b) noexcept nogil:
    cdef double t = a + (b - a) / 2.0
    if a < t:
        return t
    return b


def find_best_splits(const double[:, ::1] Xt, const cnp.intp_t[:, ::1] order,
                     const cnp.intp_t[::1] node_of, const double[::1] g,
                     const double[::1] h, Py_ssize_t n_nodes, double lam,
                     double min_child_weight):
    cdef Py_ssize_t d = Xt.shape[0]
    cdef Py_ssize_t n = Xt.shape[1]
    cdef Py_ssize_t f, k, i, nd
    cdef double x, GL, HL, GR, HR, gain

    G_arr = np.zeros(n_nodes)
    H_arr = np.zeros(n_nodes)
    M_arr = np.full(n_nodes, -np.inf)
    tol_arr = np.zeros(n_nodes)
    GLa_arr = np.zeros(n_nodes)
    HLa_arr = np.zeros(n_nodes)
    prev_arr = np.zeros(n_nodes)
    has_prev_arr = np.zeros(n_nodes, dtype=np.uint8)
    featmax_arr = np.full((n_nodes, d), -np.inf)
    done_arr = np.zeros(n_nodes, dtype=np.uint8)
    best_feat_arr = np.full(n_nodes, -1, dtype=np.intp)
    best_thr_arr = np.zeros(n_nodes)
    best_gain_arr = np.zeros(n_nodes)

    cdef double[::1] G = G_arr
    cdef double[::1] H = H_arr
    cdef double[::1] M = M_arr
    cdef double[::1] tol = tol_arr
    cdef double[::1] GLa = GLa_arr
    cdef double[::1] HLa = HLa_arr
    cdef double[::1] prev = prev_arr
    cdef unsigned char[::1] has_prev = has_prev_arr
    cdef double[:, ::1] featmax = featmax_arr
    cdef unsigned char[::1] done = done_arr
    cdef cnp.intp_t[::1] best_feat = best_feat_arr
    cdef double[::1] best_thr = best_thr_arr
    cdef double[::1] best_gain = best_gain_arr
    cdef Py_ssize_t remaining

    with nogil:
        for i in range(n):
            nd = node_of[i]
            if nd >= 0:
                G[nd] += g[i]
                H[nd] += h[i]

        # pass 1: best gain per (node, feature)
        for f in range(d):
            for k in range(n_nodes):
                GLa[k] = 0.0
                HLa[k] = 0.0
                has_prev[k] = 0
            for k in range(n):
                i = order[f, k]
                nd = node_of[i]
                if nd < 0:
                    continue
                x = Xt[f, i]
                if has_prev[nd] and x > prev[nd]:
                    GL = GLa[nd]
                    HL = HLa[nd]
                    GR = G[nd] - GL
                    HR = H[nd] - HL
                    if HL >= min_child_weight and HR >= min_child_weight:
                        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam)
                                      - G[nd] * G[nd] / (H[nd] + lam))
                        if gain > featmax[nd, f]:
                            featmax[nd, f] = gain
                GLa[nd] += g[i]
                HLa[nd] += h[i]
                prev[nd] = x
                has_prev[nd] = 1

        remaining = 0
        for k in range(n_nodes):
            for f in range(d):
                if featmax[k, f] > M[k]:
                    M[k] = featmax[k, f]
            tol[k] = TIE_RTOL * (1.0 + fabs(M[k]))
            if M[k] > tol[k]:
                remaining += 1
            else:
                done[k] = 1

        # pass 2: first candidate within tolerance of the node maximum
        for f in range(d):
            if remaining == 0:
                break
            for k in range(n_nodes):
                GLa[k] = 0.0
                HLa[k] = 0.0
                has_prev[k] = 0
            for k in range(n_nodes):
                if not done[k] and featmax[k, f] >= M[k] - tol[k]:
                    break
            else:
                continue
            for k in range(n):
                i = order[f, k]
                nd = node_of[i]
                if nd < 0 or done[nd]:
                    continue
                x = Xt[f, i]
                if has_prev[nd] and x > prev[nd]:
                    GL = GLa[nd]
                    HL = HLa[nd]
                    GR = G[nd] - GL
                    HR = H[nd] - HL
                    if HL >= min_child_weight and HR >= min_child_weight:
                        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam)
                                      - G[nd] * G[nd] / (H[nd] + lam))
                        if gain >= M[nd] - tol[nd]:
                            best_feat[nd] = f
                            best_thr[nd] = _midpoint(prev[nd], x)
                            best_gain[nd] = gain
                            done[nd] = 1
                            remaining -= 1
                            continue
                GLa[nd] += g[i]
                HLa[nd] += h[i]
                prev[nd] = x
                has_prev[nd] = 1

    return best_feat_arr, best_thr_arr, best_gain_arr


def predict_tree(const double[:, ::1] X, const cnp.intp_t[::1] feature,
                 const double[::1] threshold, const cnp.intp_t[::1] left,
                 const cnp.intp_t[::1] right, const double[::1] value):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t r, node
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for r in range(n):
            node = 0
            while feature[node] >= 0:
                if X[r, feature[node]] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[r] = value[node]
    return out_arr


def predict_forest(X, trees):
    X = np.ascontiguousarray(X, dtype=np.float64)
    out = np.zeros(X.shape[0])
    for t in trees:
        out += predict_tree(X, t.feature, t.threshold, t.left, t.right, t.value)
    return out
