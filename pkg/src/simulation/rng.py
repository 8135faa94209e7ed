"""
Deterministic random substreams

Every random draw in an experiment comes from a Generator seeded by
(master_seed, tag, *keys), so results never depend on execution order or on
how many workers share the replications.
"""

import json
import zlib
from enum import IntEnum
from typing import Any, Dict

import numpy as np


class StreamTag(IntEnum):
    """What a substream is used for"""
    WEIGHTS = 1
    SIGMA_B = 2
    REPLICATION = 3
    FIXTURE = 4
    PANEL = 5


def substream(master_seed: int, tag: StreamTag, *keys: int) -> np.random.Generator:
    """Independent Generator for (master_seed, tag, keys)"""
    entropy = [int(master_seed), int(tag)] + [int(k) for k in keys]
    if any(value < 0 for value in entropy):
        raise ValueError(f"seed material must be non-negative, got {entropy}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def stable_key(record: Dict[str, Any]) -> int:
    """32-bit key of a JSON-able record, stable across processes"""
    payload = json.dumps(record, sort_keys=True, separators=(',', ':'))
    return zlib.crc32(payload.encode('utf-8'))
