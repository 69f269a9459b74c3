"""Sketch files, trace partitioning and the global merge.

File layout (little-endian)::

    "CBA1" | u16 version | u8 r | u8 num_ra | u8 num_va | u32 g
    | u8 cbn * (num_ra+num_va) | u8 clbs * num_ra
    | u32 mangle_a | u32 mangle_b | u32 bv_seed | u32 va_seeds * num_va
    | u64 payload_len | payload
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .config import ConfigError, SketchConfig
from .cube import ConfigMismatch, CubeOfBitsArrays, config_diff
from .ipmap import mix32_v

MAGIC = b"CBA1"
VERSION = 1
POLICIES = ("hash-by-pair", "hash-by-inner", "round-robin")


class SketchFormatError(ValueError):
    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"bad sketch file ({field}): {detail}")


def encode_header(cfg: SketchConfig, payload_len: int) -> bytes:
    parts = [MAGIC, struct.pack("<HBBBI", VERSION, cfg.r, cfg.num_ra, cfg.num_va, cfg.g),
             bytes(cfg.cbn), bytes(cfg.clbs),
             struct.pack("<III", cfg.mangle_a, cfg.mangle_b, cfg.bv_seed),
             struct.pack(f"<{cfg.num_va}I", *cfg.va_seeds),
             struct.pack("<Q", payload_len)]
    return b"".join(parts)


def serialize(cube: CubeOfBitsArrays) -> bytes:
    return encode_header(cube.config, cube.nbytes) + cube.buf.tobytes()


class _Reader:
    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int, field: str):
        if self.pos + n > len(self.data):
            raise SketchFormatError(field, f"truncated: need {n} bytes at offset {self.pos}, "
                                           f"{len(self.data) - self.pos} left")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, field: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), field))


def decode_header(data) -> tuple[SketchConfig, int, int]:
    """Parse a header; returns ``(config, payload_len, payload_offset)``."""
    rd = _Reader(data)
    magic = bytes(rd.take(4, "magic"))
    if magic != MAGIC:
        raise SketchFormatError("magic", f"expected {MAGIC!r}, got {magic!r}")
    version, r, num_ra, num_va, g = rd.unpack("<HBBBI", "header")
    if version != VERSION:
        raise SketchFormatError("version", f"unsupported version {version}")
    cbn = tuple(rd.take(num_ra + num_va, "cbn"))
    clbs = tuple(rd.take(num_ra, "clbs"))
    mangle_a, mangle_b, bv_seed = rd.unpack("<III", "seeds")
    va_seeds = rd.unpack(f"<{num_va}I", "va_seeds")
    (payload_len,) = rd.unpack("<Q", "payload_len")
    try:
        cfg = SketchConfig(r=r, num_ra=num_ra, num_va=num_va, g=g, cbn=cbn, clbs=clbs,
                           mangle_a=mangle_a, mangle_b=mangle_b, va_seeds=va_seeds,
                           bv_seed=bv_seed)
    except ConfigError as exc:
        raise SketchFormatError("config", str(exc)) from None
    if payload_len != cfg.nbytes:
        raise SketchFormatError("payload_len", f"header says {payload_len} bytes, "
                                               f"config implies {cfg.nbytes}")
    return cfg, payload_len, rd.pos


def deserialize(data, writable: bool = True) -> CubeOfBitsArrays:
    cfg, n, off = decode_header(data)
    actual = len(data) - off
    if actual != n:
        raise SketchFormatError("payload", f"expected {n} payload bytes, got {actual}")
    buf = np.frombuffer(data, dtype=np.uint8, count=n, offset=off)
    if writable:
        buf = buf.copy()
    return CubeOfBitsArrays(cfg, buf)


def write_sketch(cube: CubeOfBitsArrays, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_header(cube.config, cube.nbytes))
        fh.write(memoryview(cube.buf))


def read_sketch(path: str | Path) -> CubeOfBitsArrays:
    return deserialize(Path(path).read_bytes(), writable=False)


SketchSource = Union[bytes, bytearray, memoryview, str, Path, CubeOfBitsArrays]


def _load(src: SketchSource) -> CubeOfBitsArrays:
    if isinstance(src, CubeOfBitsArrays):
        return src
    if isinstance(src, (str, Path)):
        return read_sketch(src)
    return deserialize(src, writable=False)


def global_merge(files: Iterable[SketchSource]) -> CubeOfBitsArrays:
    """OR together sketch files (bytes, paths or cubes), folding one at a time."""
    merged = None
    first_idx = 0
    for idx, src in enumerate(files):
        cube = _load(src)
        if merged is None:
            merged = CubeOfBitsArrays(cube.config, cube.buf.copy())
            first_idx = idx
            continue
        diff = config_diff(merged.config, cube.config)
        if diff:
            raise ConfigMismatch(diff, f"input {idx} differs from input {first_idx}")
        np.bitwise_or(merged.buf, cube.buf, out=merged.buf)
    if merged is None:
        raise ValueError("global_merge needs at least one sketch")
    return merged


def router_assignment(iip: np.ndarray, oip: np.ndarray, mode: str, router_count: int) -> np.ndarray:
    if router_count < 1:
        raise ValueError("router_count must be >= 1")
    iip = np.asarray(iip, dtype=np.uint32)
    oip = np.asarray(oip, dtype=np.uint32)
    n = np.uint32(router_count)
    if mode == "hash-by-pair":
        return mix32_v(iip ^ mix32_v(oip ^ np.uint32(0x9E3779B9))) % n
    if mode == "hash-by-inner":
        return mix32_v(iip) % n
    if mode == "round-robin":
        return (np.arange(len(iip), dtype=np.uint64) % router_count).astype(np.uint32)
    raise ValueError(f"unknown partition policy {mode!r}; use one of {POLICIES}")


def partition_trace(iip: np.ndarray, oip: np.ndarray, mode: str,
                    router_count: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a pair stream into ``router_count`` disjoint, order-preserving parts."""
    who = router_assignment(iip, oip, mode, router_count)
    iip = np.asarray(iip, dtype=np.uint32)
    oip = np.asarray(oip, dtype=np.uint32)
    return [(iip[who == k], oip[who == k]) for k in range(router_count)]
