"""Counter-based per-frame random streams.

Frame ``i`` of a (label, point) pair always sees the same Philox stream,
keyed by the master seed, a CRC of the label and the point index, with the
frame index placed in the second counter word. Streams of different frames
are 2**64 blocks apart and never overlap.
"""

import zlib

import numpy as np


def stream_key(seed: int, label: str, point: int) -> np.ndarray:
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), zlib.crc32(label.encode()), int(point)])
    return ss.generate_state(2, np.uint64)


def frame_rng(seed: int, label: str, point: int, index: int) -> np.random.Generator:
    key = stream_key(seed, label, point)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, index, 0, 0]))


def frame_rngs(seed: int, label: str, point: int, start: int, count: int):
    key = stream_key(seed, label, point)
    return [np.random.Generator(np.random.Philox(key=key, counter=[0, i, 0, 0]))
            for i in range(start, start + count)]
