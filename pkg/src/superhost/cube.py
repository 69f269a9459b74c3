"""Cube of bits arrays: the bit storage behind the detector.

Bits are addressed ``[cs][array][column][row]`` with rows contiguous inside
a column, columns contiguous inside an array, restoring arrays before
validating arrays, and sketches in ascending order.  Global bit ``k`` lives
in byte ``k // 8`` at bit ``k % 8`` (LSB first); that byte string is the
serialized payload.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .config import SketchConfig


class ConfigMismatch(ValueError):
    """Two sketches built with different configurations cannot be combined."""

    def __init__(self, fields: list[str], detail: str = ""):
        self.fields = fields
        msg = "sketch configs differ on " + ", ".join(fields)
        super().__init__(msg + (f" ({detail})" if detail else ""))


def config_diff(a: SketchConfig, b: SketchConfig) -> list[str]:
    names = ["r", "num_ra", "num_va", "g", "cbn", "clbs", "mangle_a", "mangle_b",
             "va_seeds", "bv_seed"]
    return [n for n in names if getattr(a, n) != getattr(b, n)]


@dataclass
class UnionColumn:
    bits: np.ndarray  # uint8 0/1 per row
    zero_count: int


class CubeOfBitsArrays:
    def __init__(self, config: SketchConfig, buf: np.ndarray | None = None):
        self.config = config
        if buf is None:
            buf = np.zeros(config.nbytes, dtype=np.uint8)
        elif buf.dtype != np.uint8 or buf.ndim != 1 or len(buf) != config.nbytes:
            raise ValueError(f"buffer must be {config.nbytes} uint8 bytes")
        self.buf = buf
        self._lock = threading.Lock()

    @classmethod
    def new(cls, config: SketchConfig) -> "CubeOfBitsArrays":
        config.check()
        return cls(config)

    @property
    def nbytes(self) -> int:
        return self.buf.nbytes

    def __eq__(self, other):
        if not isinstance(other, CubeOfBitsArrays):
            return NotImplemented
        return self.config == other.config and np.array_equal(self.buf, other.buf)

    def __repr__(self):
        return f"CubeOfBitsArrays(r={self.config.r}, arrays={self.config.num_arrays}, g={self.config.g}, {self.nbytes} bytes)"

    def copy(self) -> "CubeOfBitsArrays":
        return CubeOfBitsArrays(self.config, self.buf.copy())

    def popcount(self) -> int:
        return int(np.bitwise_count(self.buf).sum())

    def _bit(self, cs_idx, array_idx, col_idx, row) -> int:
        cfg = self.config
        if not (0 <= cs_idx < cfg.num_cs and 0 <= array_idx < cfg.num_arrays
                and 0 <= col_idx < cfg.col_counts[array_idx] and 0 <= row < cfg.g):
            raise IndexError(f"bit address ({cs_idx}, {array_idx}, {col_idx}, {row}) out of range")
        return cfg.column_bit_offset(cs_idx, array_idx, col_idx) + row

    def set_bit(self, cs_idx: int, array_idx: int, col_idx: int, row: int) -> None:
        k = self._bit(cs_idx, array_idx, col_idx, row)
        with self._lock:
            self.buf[k >> 3] |= np.uint8(1 << (k & 7))

    def get_bit(self, cs_idx: int, array_idx: int, col_idx: int, row: int) -> int:
        k = self._bit(cs_idx, array_idx, col_idx, row)
        return int(self.buf[k >> 3] >> (k & 7)) & 1

    def column_bits(self, cs_idx: int, array_idx: int, col_idx: int) -> np.ndarray:
        off = self._bit(cs_idx, array_idx, col_idx, 0)
        return kernels.BACKEND.column_bits(self.buf, off, self.config.g)

    def zero_count_column(self, cs_idx: int, array_idx: int, col_idx: int) -> int:
        off = self._bit(cs_idx, array_idx, col_idx, 0)
        return int(kernels.BACKEND.column_zero_counts(self.buf, off, 1, self.config.g)[0])

    def array_zero_counts(self, cs_idx: int, array_idx: int) -> np.ndarray:
        """Zero count of every column of one array in one sketch."""
        off = self._bit(cs_idx, array_idx, 0, 0)
        ncols = self.config.col_counts[array_idx]
        return kernels.BACKEND.column_zero_counts(self.buf, off, ncols, self.config.g)

    def union_columns(self, cs_idx: int, cols: Sequence[int]) -> UnionColumn:
        cfg = self.config
        if len(cols) != cfg.num_arrays:
            raise ValueError(f"need one column per array ({cfg.num_arrays}), got {len(cols)}")
        bits = np.ones(cfg.g, dtype=np.uint8)
        for a, c in enumerate(cols):
            np.bitwise_and(bits, self.column_bits(cs_idx, a, c), out=bits)
        return UnionColumn(bits, int(cfg.g - np.count_nonzero(bits)))

    def merge_into(self, other: "CubeOfBitsArrays") -> "CubeOfBitsArrays":
        """OR ``other`` into this cube in place."""
        diff = config_diff(self.config, other.config)
        if diff:
            raise ConfigMismatch(diff)
        np.bitwise_or(self.buf, other.buf, out=self.buf)
        return self


def cube_new(config: SketchConfig) -> CubeOfBitsArrays:
    return CubeOfBitsArrays.new(config)


def merge_cubes(a: CubeOfBitsArrays, b: CubeOfBitsArrays) -> CubeOfBitsArrays:
    diff = config_diff(a.config, b.config)
    if diff:
        raise ConfigMismatch(diff)
    return CubeOfBitsArrays(a.config, np.bitwise_or(a.buf, b.buf))
