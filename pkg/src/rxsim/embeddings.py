"""EMB1 embedding container: sentence vectors and drug-span vectors.

Text-framed binary format, one record per line:

    EMB1 <dim> <n_sentence> <n_drugspan>
    S <sentence-id> <base64 little-endian float32 x dim>
    D <sentence-id> <drug name> <base64 ...>

Lines starting with '#' are comments and do not count toward the header
counts. Drug names may contain spaces, so the payload is always the
last whitespace-separated field of a D record.
"""

import base64
from dataclasses import dataclass, field

import numpy as np

MAGIC = "EMB1"


class Emb1FormatError(ValueError):
    """Bad magic, truncated file, or record/dimension mismatch."""


@dataclass
class EmbeddingStore:
    dim: int
    sentence_vectors: dict = field(default_factory=dict)
    drug_span_vectors: dict = field(default_factory=dict)

    def add_sentence(self, sentence_id: str, vec) -> None:
        self.sentence_vectors[sentence_id] = self._check(vec)

    def add_drug_span(self, sentence_id: str, drug: str, vec) -> None:
        self.drug_span_vectors[(sentence_id, drug)] = self._check(vec)

    def _check(self, vec) -> np.ndarray:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (self.dim,):
            raise Emb1FormatError(f"vector of dim {arr.shape} in a dim-{self.dim} store")
        return arr

    def __eq__(self, other):
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        if self.dim != other.dim:
            return False
        if set(self.sentence_vectors) != set(other.sentence_vectors):
            return False
        if set(self.drug_span_vectors) != set(other.drug_span_vectors):
            return False
        return all(
            np.array_equal(v, other.sentence_vectors[k]) for k, v in self.sentence_vectors.items()
        ) and all(
            np.array_equal(v, other.drug_span_vectors[k]) for k, v in self.drug_span_vectors.items()
        )


def _encode(vec: np.ndarray) -> str:
    return base64.b64encode(vec.astype("<f4").tobytes()).decode("ascii")


def _decode(payload: str, dim: int, where: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
    except Exception as exc:
        raise Emb1FormatError(f"{where}: bad base64 payload") from exc
    if len(raw) != 4 * dim:
        raise Emb1FormatError(f"{where}: payload holds {len(raw) // 4} floats, expected {dim}")
    return np.frombuffer(raw, dtype="<f4").copy()


def write_emb1(store: EmbeddingStore, path, comments=()) -> None:
    """Serialize a store; records in sorted key order, comments after the header."""
    s_items = sorted(store.sentence_vectors.items())
    d_items = sorted(store.drug_span_vectors.items())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{MAGIC} {store.dim} {len(s_items)} {len(d_items)}\n")
        for comment in comments:
            fh.write(f"# {comment}\n")
        for sid, vec in s_items:
            fh.write(f"S {sid} {_encode(vec)}\n")
        for (sid, drug), vec in d_items:
            fh.write(f"D {sid} {drug} {_encode(vec)}\n")


def read_emb1(path) -> EmbeddingStore:
    """Parse and validate an EMB1 file."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 4 or parts[0] != MAGIC:
            raise Emb1FormatError(f"{path}: bad header {header!r}")
        try:
            dim, n_sentence, n_drugspan = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise Emb1FormatError(f"{path}: non-integer header counts") from exc
        if dim <= 0 or n_sentence < 0 or n_drugspan < 0:
            raise Emb1FormatError(f"{path}: invalid header values {header!r}")

        store = EmbeddingStore(dim=dim)
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            where = f"{path}:{lineno}"
            fields = line.split()
            kind = fields[0]
            if kind == "S":
                if len(fields) != 3:
                    raise Emb1FormatError(f"{where}: S record needs 3 fields")
                sid, payload = fields[1], fields[2]
                if sid in store.sentence_vectors:
                    raise Emb1FormatError(f"{where}: duplicate sentence id {sid!r}")
                store.sentence_vectors[sid] = _decode(payload, dim, where)
            elif kind == "D":
                if len(fields) < 4:
                    raise Emb1FormatError(f"{where}: D record needs at least 4 fields")
                sid, drug, payload = fields[1], " ".join(fields[2:-1]), fields[-1]
                key = (sid, drug)
                if key in store.drug_span_vectors:
                    raise Emb1FormatError(f"{where}: duplicate drug-span record {key}")
                store.drug_span_vectors[key] = _decode(payload, dim, where)
            else:
                raise Emb1FormatError(f"{where}: unknown record kind {kind!r}")

    if len(store.sentence_vectors) != n_sentence:
        raise Emb1FormatError(
            f"{path}: header declares {n_sentence} sentence records, found {len(store.sentence_vectors)}"
        )
    if len(store.drug_span_vectors) != n_drugspan:
        raise Emb1FormatError(
            f"{path}: header declares {n_drugspan} drug-span records, found {len(store.drug_span_vectors)}"
        )
    return store


def load_embedding_store(path) -> EmbeddingStore:
    """Backbone-facing alias for the EMB1 reader."""
    return read_emb1(path)
