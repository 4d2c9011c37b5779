"""Hot loops of tree boosting, compiled when possible.

``BACKEND`` is ``"cython"`` when the extension imported and ``"python"``
otherwise. Setting ``AFFECTKIT_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _tree_py
from ._tree_py import TIE_RTOL, midpoint  # noqa: F401

if os.environ.get("AFFECTKIT_PURE_PYTHON"):
    _impl = _tree_py
    BACKEND = "python"
else:
    try:
        from . import _tree_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _tree_py
        BACKEND = "python"

find_best_splits = _impl.find_best_splits
predict_tree = _impl.predict_tree
predict_forest = _impl.predict_forest


def backends():
    """All importable kernel modules keyed by name (for tests and benchmarks)."""
    out = {"python": _tree_py}
    try:
        from . import _tree_cy

        out["cython"] = _tree_cy
    except ImportError:
        pass
    return out
