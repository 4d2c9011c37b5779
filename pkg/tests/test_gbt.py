import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affectkit import _kernels
from affectkit.errors import TrainingError
from affectkit.gbt import (
    GBTConfig,
    GBTModel,
    OneVsRestGBT,
    Tree,
    predict_gbt,
    train_gbt,
    train_gbt_multiclass,
)

BACKENDS = _kernels.backends()


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


# --- exhaustive split-search oracle -----------------------------------------


def oracle_tree(X, g, h, rows, depth, max_depth, lam, mcw):
    """Brute-force the greedy tree: try every midpoint of every feature."""
    G = sum(g[r] for r in rows)
    H = sum(h[r] for r in rows)
    leaf = ("leaf", -G / (H + lam))
    if depth == max_depth:
        return leaf
    cands = []
    for f in range(X.shape[1]):
        vals = sorted({X[r, f] for r in rows})
        for a, b in zip(vals, vals[1:]):
            t = a + (b - a) / 2.0
            if not a < t:
                t = b
            left = [r for r in rows if X[r, f] < t]
            right = [r for r in rows if not X[r, f] < t]
            GL, HL = sum(g[r] for r in left), sum(h[r] for r in left)
            GR, HR = sum(g[r] for r in right), sum(h[r] for r in right)
            if HL < mcw or HR < mcw:
                continue
            gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - G**2 / (H + lam))
            cands.append((f, t, gain, left, right))
    if not cands:
        return leaf
    M = max(c[2] for c in cands)
    tol = _kernels.TIE_RTOL * (1 + abs(M))
    if M <= tol:
        return leaf
    f, t, _, left, right = next(c for c in cands if c[2] >= M - tol)
    return (
        "split",
        f,
        t,
        oracle_tree(X, g, h, left, depth + 1, max_depth, lam, mcw),
        oracle_tree(X, g, h, right, depth + 1, max_depth, lam, mcw),
    )


def same_tree(a, b):
    if a[0] != b[0]:
        return False
    if a[0] == "leaf":
        return abs(a[1] - b[1]) <= 1e-12 * (1 + abs(a[1]))
    return a[1] == b[1] and a[2] == b[2] and same_tree(a[3], b[3]) and same_tree(a[4], b[4])


def random_problem(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 17))
    d = int(rng.integers(1, 4))
    if rng.random() < 0.5:
        X = rng.integers(0, 4, size=(n, d)).astype(float)  # many ties
    else:
        X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, size=n).astype(float)
    y[0], y[-1] = 0.0, 1.0
    max_depth = int(rng.integers(1, 5))
    lam = float(rng.choice([0.0, 1.0, 3.0]))
    mcw = float(rng.choice([0.0, 0.1, 1.0]))
    return X, y, max_depth, lam, mcw


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_first_tree_matches_oracle(backend):
    kernel = BACKENDS[backend]
    for seed in range(100):
        X, y, max_depth, lam, mcw = random_problem(seed)
        model = train_gbt(X, y, n_estimators=1, learning_rate=0.3, max_depth=max_depth,
                          reg_lambda=lam, min_child_weight=mcw, kernel=kernel)
        p0 = y.mean()
        g = p0 - y
        h = np.full(len(y), p0 * (1 - p0))
        expected = oracle_tree(X, g, h, list(range(len(y))), 0, max_depth, lam, mcw)
        assert same_tree(model.trees[0].to_nested(), expected), f"seed {seed}"


def test_stump_on_perfect_split():
    X = np.array([[-3.0], [-2.0], [-0.5], [0.5], [1.0], [4.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = train_gbt(X, y, n_estimators=1, max_depth=1, min_child_weight=0.1)
    nested = model.trees[0].to_nested()
    assert nested[0] == "split" and nested[1] == 0 and nested[2] == 0.0
    assert nested[3][0] == "leaf" and nested[4][0] == "leaf"


def test_zero_estimators_gives_base_rate():
    y = np.array([1, 1, 1, 0])
    model = train_gbt(np.zeros((4, 2)), y, n_estimators=0)
    assert np.allclose(model.predict_proba(np.ones((3, 2))), 0.75)


def test_single_class_raises():
    with pytest.raises(TrainingError):
        train_gbt(np.zeros((4, 1)), np.ones(4))


def test_single_leaf_prediction():
    leaf = Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([0.8]))
    model = GBTModel([leaf], learning_rate=0.1, base_score=-0.2, n_features=2)
    assert predict_gbt(model, [5.0, 5.0]) == pytest.approx(sigmoid(-0.2 + 0.1 * 0.8), abs=1e-15)


def test_hand_traced_tree():
    # root: x0 < 1.5 ? (x1 < 0 ? -1 : 2) : 3
    tree = Tree(
        feature=np.array([0, 1, -1, -1, -1]),
        threshold=np.array([1.5, 0.0, 0, 0, 0]),
        left=np.array([1, 3, -1, -1, -1]),
        right=np.array([2, 4, -1, -1, -1]),
        value=np.array([0.0, 0.0, 3.0, -1.0, 2.0]),
    )
    model = GBTModel([tree], learning_rate=0.5, base_score=0.0, n_features=2)
    X = np.array([[0.0, -1.0], [0.0, 1.0], [2.0, -5.0], [1.5, 0.0]])
    expected = sigmoid(0.5 * np.array([-1.0, 2.0, 3.0, 3.0]))
    assert np.allclose(model.predict_proba(X), expected, rtol=0, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(4, 60), d=st.integers(1, 4), depth=st.integers(1, 4))
def test_training_loss_non_increasing(seed, n, d, depth):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    model = train_gbt(X, y, n_estimators=15, learning_rate=0.3, max_depth=depth)
    loss = np.asarray(model.train_loss)
    assert len(loss) == 16
    assert np.all(np.diff(loss) <= 1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
def test_backends_identical():
    rng = np.random.default_rng(5)
    X = rng.integers(0, 5, size=(300, 6)).astype(float) + rng.normal(scale=0.01, size=(300, 6)) * (rng.random((300, 6)) < 0.5)
    y = (X[:, 0] + X[:, 1] + rng.normal(size=300) > 4).astype(int)
    models = {name: train_gbt(X, y, n_estimators=20, max_depth=4, kernel=k) for name, k in BACKENDS.items()}
    assert models["cython"].dumps() == models["python"].dumps()


def test_serialization_exact(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(100, 3))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    model = train_gbt(X, y, n_estimators=10, max_depth=3)
    model.save(tmp_path / "m.json")
    again = GBTModel.load(tmp_path / "m.json")
    assert again.dumps() == model.dumps()
    assert np.array_equal(again.predict_proba(X), model.predict_proba(X))


def test_same_seed_bit_identical():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(80, 4))
    y = (X[:, 2] > 0).astype(int)
    assert train_gbt(X, y, 10, seed=1).dumps() == train_gbt(X, y, 10, seed=1).dumps()


def test_multiclass_separable():
    rng = np.random.default_rng(8)
    X = np.vstack([rng.normal(-2, 0.3, size=(15, 2)), rng.normal(2, 0.3, size=(15, 2))])
    y = ["Food"] * 15 + ["Religion"] * 15
    ovr = train_gbt_multiclass(X, y, config=GBTConfig(n_estimators=10, max_depth=2))
    assert ovr.predict(X) == y
    again = OneVsRestGBT.from_dict(ovr.to_dict())
    assert np.array_equal(again.predict_proba(X), ovr.predict_proba(X))


def test_multiclass_all_same_concept():
    from affectkit.corpus import CONCEPTS

    X = np.random.default_rng(9).normal(size=(10, 2))
    with pytest.raises(TrainingError):
        train_gbt_multiclass(X, ["Food"] * 10, classes=CONCEPTS)
