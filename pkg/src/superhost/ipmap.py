"""Address arithmetic: mangling, right/left split, column and row indexing.

Left-part bit *positions* are counted from the most significant bit of the
``32 - r`` bit left part, so position 0 is its leftmost bit.  A restoring
array's column index is ``cbn(i)`` consecutive positions read cyclically
from ``clbs(i)``, the first position read landing in the index's MSB.

Scalar functions work on Python ints; the ``*_v`` variants take and return
``uint32``/``uint64`` numpy arrays and must agree with them bit for bit.
"""
from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import numpy as np

from .config import MASK32, SketchConfig

MIX_MUL = 0x45D9F3B


def mix32(x: int) -> int:
    h = x & MASK32
    h ^= h >> 16
    h = (h * MIX_MUL) & MASK32
    h ^= h >> 16
    h = (h * MIX_MUL) & MASK32
    h ^= h >> 16
    return h


def mix32_v(x: np.ndarray) -> np.ndarray:
    h = np.asarray(x, dtype=np.uint32).copy()
    with np.errstate(over="ignore"):
        h ^= h >> np.uint32(16)
        h *= np.uint32(MIX_MUL)
        h ^= h >> np.uint32(16)
        h *= np.uint32(MIX_MUL)
        h ^= h >> np.uint32(16)
    return h


def mangle(ip: int, cfg: SketchConfig) -> int:
    return (cfg.mangle_a * ip + cfg.mangle_b) & MASK32


def unmangle(m: int, cfg: SketchConfig) -> int:
    inv = pow(cfg.mangle_a, -1, 1 << 32)
    return (inv * (m - cfg.mangle_b)) & MASK32


def mangle_v(ip: np.ndarray, cfg: SketchConfig) -> np.ndarray:
    x = np.asarray(ip, dtype=np.uint32)
    with np.errstate(over="ignore"):
        return x * np.uint32(cfg.mangle_a) + np.uint32(cfg.mangle_b)


def unmangle_v(m: np.ndarray, cfg: SketchConfig) -> np.ndarray:
    inv = np.uint32(pow(cfg.mangle_a, -1, 1 << 32))
    x = np.asarray(m, dtype=np.uint32)
    with np.errstate(over="ignore"):
        return (x - np.uint32(cfg.mangle_b)) * inv


class IpParts(NamedTuple):
    rp: int
    lp: int


def split_ip(m: int, cfg: SketchConfig) -> IpParts:
    return IpParts(m & ((1 << cfg.r) - 1), (m & MASK32) >> cfg.r)


def join_ip(lp: int, rp: int, cfg: SketchConfig) -> int:
    return ((lp << cfg.r) | rp) & MASK32


def _rotl(lp: int, s: int, width: int) -> int:
    mask = (1 << width) - 1
    return ((lp << s) | (lp >> (width - s))) & mask


def ra_column_index(lp: int, i: int, cfg: SketchConfig) -> int:
    L = cfg.lp_bits
    return _rotl(lp, cfg.clbs[i], L) >> (L - cfg.cbn[i])


def ra_column_index_v(lp: np.ndarray, i: int, cfg: SketchConfig) -> np.ndarray:
    L = cfg.lp_bits
    x = np.asarray(lp, dtype=np.uint64)
    s = np.uint64(cfg.clbs[i])
    rot = ((x << s) | (x >> np.uint64(L - cfg.clbs[i]))) & np.uint64((1 << L) - 1)
    return rot >> np.uint64(L - cfg.cbn[i])


def va_column_index(lp: int, j: int, cfg: SketchConfig) -> int:
    return mix32(lp ^ cfg.va_seeds[j]) & ((1 << cfg.cbn[cfg.num_ra + j]) - 1)


def va_column_index_v(lp: np.ndarray, j: int, cfg: SketchConfig) -> np.ndarray:
    x = np.asarray(lp).astype(np.uint32) ^ np.uint32(cfg.va_seeds[j])
    mask = np.uint64((1 << cfg.cbn[cfg.num_ra + j]) - 1)
    return mix32_v(x).astype(np.uint64) & mask


def row_index(oip: int, cfg: SketchConfig) -> int:
    """Row of an (already mangled) outer address."""
    return mix32(oip ^ cfg.bv_seed) & (cfg.g - 1)


def row_index_v(oip: np.ndarray, cfg: SketchConfig) -> np.ndarray:
    x = np.asarray(oip, dtype=np.uint32) ^ np.uint32(cfg.bv_seed)
    return mix32_v(x) & np.uint32(cfg.g - 1)


def tuple_of(lp: int, cfg: SketchConfig) -> tuple[int, ...]:
    return tuple(ra_column_index(lp, i, cfg) for i in range(cfg.num_ra))


def lp_from_tuple(cols: Sequence[int], cfg: SketchConfig) -> Optional[int]:
    """Rebuild the left part from restoring-array column indices.

    Returns None when a checking part disagrees with the head of the next
    column's efficient part.
    """
    n, L = cfg.num_ra, cfg.lp_bits
    ep, cp = cfg.ep_len, cfg.cp_len
    for i in range(n):
        nxt = (i + 1) % n
        low = cols[i] & ((1 << cp[i]) - 1)
        head = cols[nxt] >> (cfg.cbn[nxt] - cp[i])
        if low != head:
            return None
    lp = 0
    covered = 0
    for i in range(n):
        part = cols[i] >> cp[i]
        # place the ep_len(i)-bit part at positions clbs(i).. (cyclic)
        placed = _rotl(part << (L - ep[i]), L - cfg.clbs[i], L) if L else 0
        span = _rotl(((1 << ep[i]) - 1) << (L - ep[i]), L - cfg.clbs[i], L)
        assert covered & span == 0, "efficient parts overlap"
        covered |= span
        lp |= placed
    return lp


def lp_from_tuple_v(cols: Sequence[np.ndarray], cfg: SketchConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`lp_from_tuple`; returns ``(lp, ok)`` arrays."""
    n, L = cfg.num_ra, cfg.lp_bits
    ep, cp = cfg.ep_len, cfg.cp_len
    cols = [np.asarray(c, dtype=np.uint64) for c in cols]
    ok = np.ones(cols[0].shape, dtype=bool)
    for i in range(n):
        nxt = (i + 1) % n
        low = cols[i] & np.uint64((1 << cp[i]) - 1)
        head = cols[nxt] >> np.uint64(cfg.cbn[nxt] - cp[i])
        ok &= low == head
    lp = np.zeros(cols[0].shape, dtype=np.uint64)
    mask = np.uint64((1 << L) - 1)
    for i in range(n):
        part = (cols[i] >> np.uint64(cp[i])) << np.uint64(L - ep[i])
        s = (L - cfg.clbs[i]) % L
        lp |= ((part << np.uint64(s)) | (part >> np.uint64(L - s))) & mask
    return lp, ok
