"""Numpy implementations of the hot kernels (used when ``_ext`` is absent)."""
from __future__ import annotations

import threading

import numpy as np

from . import ipmap
from .config import SketchConfig

_WRITE_LOCK = threading.Lock()


def pair_bit_indices(iip: np.ndarray, oip: np.ndarray, cfg: SketchConfig) -> np.ndarray:
    """Global bit positions set by each pair, shape ``(n, num_arrays)``."""
    m = ipmap.mangle_v(iip, cfg)
    rp = (m & np.uint32((1 << cfg.r) - 1)).astype(np.uint64)
    lp = (m >> np.uint32(cfg.r)).astype(np.uint64)
    row = ipmap.row_index_v(ipmap.mangle_v(oip, cfg), cfg).astype(np.uint64)
    g = np.uint64(cfg.g)
    base = rp * np.uint64(cfg.cols_per_cs)
    out = np.empty((len(m), cfg.num_arrays), dtype=np.uint64)
    for a in range(cfg.num_ra):
        col = ipmap.ra_column_index_v(lp, a, cfg)
        out[:, a] = (base + np.uint64(cfg.col_base[a]) + col) * g + row
    for j in range(cfg.num_va):
        a = cfg.num_ra + j
        col = ipmap.va_column_index_v(lp, j, cfg)
        out[:, a] = (base + np.uint64(cfg.col_base[a]) + col) * g + row
    return out


def record_pairs(buf: np.ndarray, iip: np.ndarray, oip: np.ndarray, cfg: SketchConfig) -> None:
    bits = pair_bit_indices(iip, oip, cfg).ravel()
    byte = (bits >> np.uint64(3)).astype(np.intp)
    mask = np.left_shift(np.uint8(1), (bits & np.uint64(7)).astype(np.uint8))
    with _WRITE_LOCK:
        np.bitwise_or.at(buf, byte, mask)


def _bits(buf: np.ndarray, first_bit: int, nbits: int) -> np.ndarray:
    lo, hi = first_bit // 8, (first_bit + nbits + 7) // 8
    unpacked = np.unpackbits(buf[lo:hi], bitorder="little")
    skip = first_bit - lo * 8
    return unpacked[skip:skip + nbits]


def column_bits(buf: np.ndarray, first_bit: int, g: int) -> np.ndarray:
    return _bits(buf, first_bit, g)


def column_zero_counts(buf: np.ndarray, first_bit: int, ncols: int, g: int) -> np.ndarray:
    if first_bit % 8 == 0 and g % 8 == 0:
        lo = first_bit // 8
        block = buf[lo:lo + ncols * (g // 8)].reshape(ncols, g // 8)
        ones = np.bitwise_count(block).sum(axis=1, dtype=np.int64)
    else:
        ones = _bits(buf, first_bit, ncols * g).reshape(ncols, g).sum(axis=1, dtype=np.int64)
    return g - ones


def and_zero_count(buf: np.ndarray, offsets, g: int, scratch: np.ndarray | None = None) -> int:
    if scratch is None:
        scratch = np.empty(g, dtype=np.uint8)
    scratch[:] = 1
    for off in offsets:
        np.bitwise_and(scratch, _bits(buf, int(off), g), out=scratch)
    return int(g - np.count_nonzero(scratch))
