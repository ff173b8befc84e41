"""Seed plumbing and config hashing.

Every source of randomness in the pipeline draws from a named sub-stream of
the single user seed, so stages can be re-run independently and still
reproduce bit-identical output.
"""

from __future__ import annotations

import hashlib
import json
import random

import numpy as np


def _stream_entropy(seed: int, names: tuple) -> int:
    tag = f"{seed}/" + "/".join(str(n) for n in names)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def substream(seed: int, *names) -> np.random.Generator:
    """Independent numpy generator for the sub-stream named by ``names``."""
    return np.random.Generator(np.random.PCG64(_stream_entropy(seed, names)))


def subrandom(seed: int, *names) -> random.Random:
    """Independent stdlib ``random.Random`` for the named sub-stream."""
    return random.Random(_stream_entropy(seed, names))


def config_hash(payload) -> str:
    """Stable short hash of a JSON-serializable config payload."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def file_fingerprint(paths) -> str:
    """Joint sha256 over the contents of ``paths`` (sorted by name)."""
    h = hashlib.sha256()
    for p in sorted(paths, key=lambda q: str(q)):
        h.update(str(p).rsplit("/", 1)[-1].encode())
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    return h.hexdigest()[:16]
