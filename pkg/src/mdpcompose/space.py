"""Distance and neighborhood queries over trained entity embeddings.

The neighborhood search is a plain linear scan over the action rows; at the
vocabulary sizes this system works with (a few thousand entities) that is
sub-millisecond and needs no index.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path

import numpy as np

from .embedding import EmbeddingTable, Vocabulary
from .errors import UnknownEntityError, UnknownSituationError
from .kg import Concept


class Metric(str, Enum):
    COSINE_DISTANCE = "COSINE_DISTANCE"
    EUCLIDEAN = "EUCLIDEAN"


class EmbeddingSpace:
    def __init__(self, vocab: Vocabulary, matrix: np.ndarray, metric: Metric = Metric.COSINE_DISTANCE):
        if len(vocab) != matrix.shape[0]:
            raise ValueError(
                f"vocabulary has {len(vocab)} entries but the table has "
                f"{matrix.shape[0]} rows"
            )
        self.vocab = vocab
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.metric = metric
        self._action_indices = np.array(vocab.indices_of(Concept.ACTION), dtype=np.int64)
        self._norms = np.linalg.norm(self.matrix, axis=1)

    def vector(self, name: str) -> np.ndarray:
        return self.matrix[self.vocab.index(name)]

    def distance(self, a: str, b: str) -> float:
        ia, ib = self.vocab.index(a), self.vocab.index(b)
        if self.metric is Metric.EUCLIDEAN:
            return float(np.linalg.norm(self.matrix[ia] - self.matrix[ib]))
        na, nb = self._norms[ia], self._norms[ib]
        if na == 0.0 or nb == 0.0:
            raise ValueError("cosine distance is undefined for zero-norm vectors")
        cos = float(self.matrix[ia] @ self.matrix[ib]) / float(na * nb)
        return 1.0 - cos

    def find_closest_actions(self, state_name: str, radius: float) -> list[tuple[str, float]]:
        """All actions within ``radius`` of a state, closest first; ties
        break on the action name. An empty result signals the caller to
        widen the radius."""
        try:
            idx = self.vocab.index(state_name)
        except UnknownEntityError:
            raise UnknownSituationError(
                f"state {state_name!r} has no embedding; request rejected"
            ) from None
        if len(self._action_indices) == 0:
            return []
        query = self.matrix[idx]
        rows = self.matrix[self._action_indices]
        if self.metric is Metric.EUCLIDEAN:
            distances = np.linalg.norm(rows - query, axis=1)
        else:
            qn = self._norms[idx]
            if qn == 0.0:
                raise ValueError("cosine distance is undefined for zero-norm vectors")
            norms = self._norms[self._action_indices]
            with np.errstate(divide="ignore", invalid="ignore"):
                distances = 1.0 - (rows @ query) / (norms * qn)
            distances[norms == 0.0] = np.inf  # zero vectors are never neighbors
        hits = [
            (self.vocab.name(int(ai)), float(d))
            for ai, d in zip(self._action_indices, distances)
            if d <= radius
        ]
        hits.sort(key=lambda pair: (pair[1], pair[0]))
        return hits


def load_tsv(path_vectors, path_metadata, metric: Metric = Metric.COSINE_DISTANCE) -> EmbeddingSpace:
    """Load a space from the exported vectors/metadata TSV pair."""
    vectors = []
    for lineno, line in enumerate(
        Path(path_vectors).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        fields = line.split("\t")
        try:
            vectors.append([float(x) for x in fields])
        except ValueError:
            raise ValueError(
                f"{path_vectors}: line {lineno}: non-numeric field"
            ) from None

    vocab = Vocabulary()
    meta_lines = Path(path_metadata).read_text(encoding="utf-8").splitlines()
    if not meta_lines or meta_lines[0].split("\t") != ["name", "index", "concept"]:
        raise ValueError(f"{path_metadata}: missing name/index/concept header")
    for lineno, line in enumerate(meta_lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path_metadata}: line {lineno}: expected 3 fields")
        name, index_text, concept_text = parts
        try:
            index = int(index_text)
        except ValueError:
            raise ValueError(
                f"{path_metadata}: line {lineno}: non-numeric index"
            ) from None
        try:
            concept = Concept(concept_text)
        except ValueError:
            raise ValueError(
                f"{path_metadata}: line {lineno}: unknown concept {concept_text!r}"
            ) from None
        if vocab.add(name, concept) != index:
            raise ValueError(
                f"{path_metadata}: line {lineno}: index {index} out of order"
            )

    if len(vocab) != len(vectors):
        raise ValueError(
            f"row count mismatch: {len(vectors)} vectors, {len(vocab)} metadata rows"
        )
    widths = {len(v) for v in vectors}
    if len(widths) > 1:
        raise ValueError("vector rows have inconsistent dimensions")
    dimension = widths.pop() if widths else 0
    matrix = np.array(vectors, dtype=np.float64).reshape(len(vectors), dimension)
    return EmbeddingSpace(vocab, matrix, metric=metric)


def space_from_table(vocab: Vocabulary, table: EmbeddingTable, metric: Metric = Metric.COSINE_DISTANCE) -> EmbeddingSpace:
    return EmbeddingSpace(vocab, table.matrix, metric=metric)
