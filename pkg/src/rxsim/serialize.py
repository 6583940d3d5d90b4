"""Shared checkpoint container: versioned JSON with byte-stable output.

Floats are written through repr, which round-trips 64-bit values
exactly; sorted keys and fixed separators keep same-content files
byte-identical across runs and platforms.
"""

import json

FORMAT = "rxsim-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def checkpoint_bytes(kind: str, payload: dict) -> bytes:
    doc = {"format": FORMAT, "version": VERSION, "kind": kind, "payload": payload}
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("ascii")


def write_checkpoint(path, kind: str, payload: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(kind, payload))


def read_checkpoint(path, kind: str) -> dict:
    with open(path, "rb") as fh:
        try:
            doc = json.loads(fh.read().decode("ascii"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: not a checkpoint file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError(f"{path}: missing {FORMAT} magic")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported version {doc.get('version')!r}")
    if doc.get("kind") != kind:
        raise CheckpointError(f"{path}: expected a {kind!r} checkpoint, found {doc.get('kind')!r}")
    return doc["payload"]
