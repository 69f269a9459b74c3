"""Stream IP pairs into a cube.

Every pair sets exactly ``num_ra + num_va`` bits and never reads the cube,
so batches can be applied by any number of workers in any order.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, NamedTuple, Union

import numpy as np

from . import kernels
from .cube import CubeOfBitsArrays

DEFAULT_BATCH = 1 << 16


class IpPair(NamedTuple):
    iip: int
    oip: int


PairSource = Union[Iterable[IpPair], tuple[np.ndarray, np.ndarray]]


def record_pair(cube: CubeOfBitsArrays, pair: IpPair) -> None:
    iip = np.array([pair[0]], dtype=np.uint32)
    oip = np.array([pair[1]], dtype=np.uint32)
    kernels.BACKEND.record_pairs(cube.buf, iip, oip, cube.config)


def _array_batches(iip: np.ndarray, oip: np.ndarray, batch: int):
    for lo in range(0, len(iip), batch):
        yield iip[lo:lo + batch], oip[lo:lo + batch]


def _iter_batches(pairs: Iterable, batch: int):
    it = iter(pairs)
    while True:
        chunk = list(itertools.islice(it, batch))
        if not chunk:
            return
        arr = np.array(chunk, dtype=np.uint64).reshape(-1, 2)
        yield arr[:, 0].astype(np.uint32), arr[:, 1].astype(np.uint32)


def record_stream(cube: CubeOfBitsArrays, pairs: PairSource, workers: int = 1,
                  batch_size: int = DEFAULT_BATCH, backend=None) -> int:
    """Apply every pair to ``cube``; returns the number of pairs processed.

    ``pairs`` is either a ``(iip, oip)`` pair of equal-length arrays or any
    iterable of 2-tuples.  Exceptions raised by the iterable propagate as is.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    kern = kernels.get_backend(backend)
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        iip = np.ascontiguousarray(pairs[0], dtype=np.uint32)
        oip = np.ascontiguousarray(pairs[1], dtype=np.uint32)
        if iip.shape != oip.shape:
            raise ValueError("iip and oip arrays differ in length")
        batches = _array_batches(iip, oip, batch_size)
    else:
        batches = _iter_batches(pairs, batch_size)

    def apply(b):
        kern.record_pairs(cube.buf, b[0], b[1], cube.config)
        return len(b[0])

    if workers <= 1:
        return sum(apply(b) for b in batches)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(apply, batches))
