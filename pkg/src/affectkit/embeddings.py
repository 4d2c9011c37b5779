"""Pretrained word vectors in the plain-text (GloVe-style) format."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Mapping, Sequence

import numpy as np

from .errors import DataError, ParseError

DEFAULT_MAX_LEN = 50


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    index: Mapping[str, int]
    vectors: np.ndarray  # (vocab, dim)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __len__(self) -> int:
        return len(self.index)

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.index[token]]

    def ids(self, tokens: Sequence[str], max_len: int = DEFAULT_MAX_LEN) -> np.ndarray:
        """Row ids for ``tokens`` (lowercased), -1 for OOV and padding."""
        out = np.full(max_len, -1, dtype=np.int64)
        for i, tok in enumerate(tokens[:max_len]):
            out[i] = self.index.get(tok.lower(), -1)
        return out


def load_embeddings(path: str | Path, vocab: Collection[str] | None = None) -> EmbeddingTable:
    """Read ``token v1 ... vd`` lines; the first line fixes the width.

    Duplicate tokens keep their first vector. With ``vocab`` only those
    tokens are kept, which keeps large files cheap to load for a small corpus.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"embedding file not found: {path}")
    index: dict[str, int] = {}
    rows: list[list[float]] = []
    dim = None
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) < 2 or not parts[0]:
                if not line.strip():
                    continue
                raise ParseError(lineno, f"{path}: expected a token and numbers")
            if dim is None:
                dim = len(parts) - 1
            elif len(parts) - 1 != dim:
                raise ParseError(lineno, f"{path}: expected {dim} values, got {len(parts) - 1}")
            token = parts[0]
            if token in index or (vocab is not None and token not in vocab):
                continue
            try:
                values = [float(x) for x in parts[1:]]
            except ValueError:
                raise ParseError(lineno, f"{path}: non-numeric value") from None
            if not all(np.isfinite(values)):
                raise ParseError(lineno, f"{path}: non-finite value")
            index[token] = len(rows)
            rows.append(values)
    if dim is None:
        raise DataError(f"embedding file is empty: {path}")
    vectors = np.asarray(rows, dtype=np.float64).reshape(len(rows), dim)
    vectors.setflags(write=False)
    return EmbeddingTable(dim, index, vectors)


def embed_tokens(tokens: Sequence[str], table: EmbeddingTable, max_len: int = DEFAULT_MAX_LEN) -> np.ndarray:
    """(max_len, dim) matrix; OOV tokens and padding rows are zero, extra tokens dropped."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out = np.zeros((max_len, table.dim))
    for i, tok in enumerate(tokens[:max_len]):
        row = table.index.get(tok.lower())
        if row is not None:
            out[i] = table.vectors[row]
    return out


def lookup_ids(ids: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Gather rows of ``matrix`` for an id array, zero where id < 0."""
    out = matrix[np.maximum(ids, 0)]
    out[ids < 0] = 0.0
    return out
