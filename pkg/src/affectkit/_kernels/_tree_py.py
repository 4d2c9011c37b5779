"""Pure-NumPy tree kernels, used when the compiled extension is unavailable.

Split selection rule shared by every backend: among all candidate splits of
a node whose children both carry hessian >= ``min_child_weight``, let ``M``
be the largest gain and ``tol = TIE_RTOL * (1 + |M|)``. The node splits only
if ``M > tol``, on the first candidate in (feature index, ascending
threshold) order whose gain is ``>= M - tol``. Thresholds sit halfway
between consecutive distinct values; rows with ``x < threshold`` go left.
"""

from __future__ import annotations

import numpy as np

TIE_RTOL = 1e-10


def midpoint(a: float, b: float) -> float:
    """Threshold separating ``a < b``: ``a < t <= b``."""
    t = a + (b - a) / 2.0
    return t if a < t else b


def split_gain(GL, HL, GR, HR, lam):
    return 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - (GL + GR) ** 2 / (HL + HR + lam))


def find_best_splits(Xt, order, node_of, g, h, n_nodes, lam, min_child_weight):
    """Best split per node.

    Xt: (d, n) feature-major matrix; order: (d, n) row indices sorting each
    feature ascending; node_of: (n,) node slot per row, -1 for inactive rows.
    Returns (feature, threshold, gain) arrays of length ``n_nodes``; feature
    is -1 where the node should not split.
    """
    d, n = Xt.shape
    active = node_of >= 0
    G = np.bincount(node_of[active], weights=g[active], minlength=n_nodes)
    H = np.bincount(node_of[active], weights=h[active], minlength=n_nodes)

    nodes, feats, pos, gains, thrs = [], [], [], [], []
    for f in range(d):
        o = order[f]
        nd = node_of[o]
        keep = nd >= 0
        o = o[keep]
        nd = nd[keep]
        if o.size < 2:
            continue
        s = np.argsort(nd, kind="stable")
        o = o[s]
        nd = nd[s]
        x = Xt[f, o]
        go = g[o]
        ho = h[o]
        gc = np.cumsum(go)
        hc = np.cumsum(ho)
        idx = np.arange(o.size)
        seg_start = np.r_[True, nd[1:] != nd[:-1]]
        start = np.maximum.accumulate(np.where(seg_start, idx, 0))
        GL_all = gc - (gc[start] - go[start])
        HL_all = hc - (hc[start] - ho[start])
        j = np.nonzero((nd[:-1] == nd[1:]) & (x[:-1] < x[1:]))[0]
        if j.size == 0:
            continue
        node = nd[j]
        GL = GL_all[j]
        HL = HL_all[j]
        GR = G[node] - GL
        HR = H[node] - HL
        ok = (HL >= min_child_weight) & (HR >= min_child_weight)
        if not ok.any():
            continue
        j, node, GL, HL, GR, HR = j[ok], node[ok], GL[ok], HL[ok], GR[ok], HR[ok]
        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G[node] ** 2 / (H[node] + lam))
        nodes.append(node)
        feats.append(np.full(j.size, f))
        pos.append(j)
        gains.append(gain)
        a, b = x[j], x[j + 1]
        t = a + (b - a) / 2.0
        thrs.append(np.where(a < t, t, b))

    best_feat = np.full(n_nodes, -1, dtype=np.intp)
    best_thr = np.zeros(n_nodes)
    best_gain = np.zeros(n_nodes)
    if not nodes:
        return best_feat, best_thr, best_gain
    nodes = np.concatenate(nodes)
    feats = np.concatenate(feats)
    pos = np.concatenate(pos)
    gains = np.concatenate(gains)
    thrs = np.concatenate(thrs)

    M = np.full(n_nodes, -np.inf)
    np.maximum.at(M, nodes, gains)
    tol = TIE_RTOL * (1.0 + np.abs(M))
    eligible = gains >= (M - tol)[nodes]
    eligible &= (M > tol)[nodes]
    if not eligible.any():
        return best_feat, best_thr, best_gain
    sel = np.nonzero(eligible)[0]
    # candidates were appended feature by feature, ascending position within a feature
    sel = sel[np.lexsort((sel, nodes[sel]))]
    first = np.r_[True, nodes[sel][1:] != nodes[sel][:-1]]
    chosen = sel[first]
    k = nodes[chosen]
    best_feat[k] = feats[chosen]
    best_thr[k] = thrs[chosen]
    best_gain[k] = gains[chosen]
    return best_feat, best_thr, best_gain


def predict_tree(X, feature, threshold, left, right, value):
    """Leaf value reached by each row of ``X`` (n, d)."""
    n = X.shape[0]
    node = np.zeros(n, dtype=np.intp)
    rows = np.arange(n)
    while True:
        f = feature[node]
        internal = f >= 0
        if not internal.any():
            break
        r = rows[internal]
        nd = node[internal]
        go_left = X[r, f[internal]] < threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
    return value[node]


def predict_forest(X, trees):
    out = np.zeros(X.shape[0])
    for t in trees:
        out += predict_tree(X, t.feature, t.threshold, t.left, t.right, t.value)
    return out
