"""EMB1 serialization.

Canonical layout (matching the similarity package's reader and writer
byte-for-byte, so a read-rewrite round trip reproduces this file exactly):

    EMB1 <dim> <n_sentence> <n_drugspan>
    # optional comments
    S <sentence-id> <base64 little-endian float32 x dim>
    D <sentence-id> <drug name> <base64 ...>

Records appear in sorted key order: S by sentence id, then D by
(sentence id, drug name). Drug names may contain spaces, so the payload is
always the last whitespace-separated field.
"""

import base64

import numpy as np

MAGIC = "EMB1"


def _encode(vec: np.ndarray) -> str:
    return base64.b64encode(vec.astype("<f4").tobytes()).decode("ascii")


def write_emb1(path, dim: int, sentence_vectors: dict, drug_span_vectors: dict,
               comments=()) -> None:
    for vec in list(sentence_vectors.values()) + list(drug_span_vectors.values()):
        if np.asarray(vec).shape != (dim,):
            raise ValueError(f"vector of shape {np.asarray(vec).shape} in a dim-{dim} export")
    s_items = sorted(sentence_vectors.items())
    d_items = sorted(drug_span_vectors.items())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{MAGIC} {dim} {len(s_items)} {len(d_items)}\n")
        for comment in comments:
            fh.write(f"# {comment}\n")
        for sid, vec in s_items:
            fh.write(f"S {sid} {_encode(np.asarray(vec))}\n")
        for (sid, drug), vec in d_items:
            fh.write(f"D {sid} {drug} {_encode(np.asarray(vec))}\n")
