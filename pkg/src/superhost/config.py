"""Structural parameters of a cube-of-bits-arrays sketch.

A :class:`SketchConfig` fixes everything two sketches must share to be
mergeable: the right-part width ``r``, the restoring/validating array
counts, the column height ``g``, per-array column-index widths, the
restoring-array start offsets and every hash/mangling seed.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MASK32 = 0xFFFFFFFF


class ConfigError(ValueError):
    """A configuration violates one of the structural rules."""

    def __init__(self, rule: str, detail: str):
        self.rule = rule
        super().__init__(f"{rule}: {detail}")


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class SketchConfig:
    r: int = 4
    num_ra: int = 3
    num_va: int = 1
    g: int = 4096
    cbn: tuple[int, ...] = (12, 12, 12, 12)
    clbs: tuple[int, ...] = (0, 10, 20)
    mangle_a: int = 0x9E3779B1
    mangle_b: int = 0x7F4A7C15
    va_seeds: tuple[int, ...] = (0x85EBCA6B,)
    bv_seed: int = 0xC2B2AE35
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cbn", tuple(int(c) for c in self.cbn))
        object.__setattr__(self, "clbs", tuple(int(c) for c in self.clbs))
        object.__setattr__(self, "va_seeds", tuple(int(s) for s in self.va_seeds))
        if self.validate:
            self.check()

    # -- derived layout -------------------------------------------------
    @property
    def lp_bits(self) -> int:
        """Width of the left part, ``32 - r``."""
        return 32 - self.r

    @property
    def num_arrays(self) -> int:
        return self.num_ra + self.num_va

    @property
    def ep_len(self) -> tuple[int, ...]:
        n, L = self.num_ra, self.lp_bits
        return tuple((self.clbs[(i + 1) % n] - self.clbs[i]) % L for i in range(n))

    @property
    def cp_len(self) -> tuple[int, ...]:
        return tuple(self.cbn[i] - e for i, e in enumerate(self.ep_len))

    @property
    def col_counts(self) -> tuple[int, ...]:
        return tuple(1 << c for c in self.cbn)

    @property
    def col_base(self) -> tuple[int, ...]:
        """Column offset of each array inside one cardinality sketch."""
        out, acc = [], 0
        for c in self.col_counts:
            out.append(acc)
            acc += c
        return tuple(out)

    @property
    def cols_per_cs(self) -> int:
        return sum(self.col_counts)

    @property
    def num_cs(self) -> int:
        return 1 << self.r

    @property
    def total_bits(self) -> int:
        return self.num_cs * self.cols_per_cs * self.g

    @property
    def nbytes(self) -> int:
        return (self.total_bits + 7) // 8

    def column_bit_offset(self, cs_idx: int, array_idx: int, col_idx: int) -> int:
        return ((cs_idx * self.cols_per_cs + self.col_base[array_idx] + col_idx)
                * self.g)

    def kernel_arrays(self) -> dict:
        """Flat numpy views of the per-array parameters, as the kernels take them."""
        return dict(
            cbn=np.asarray(self.cbn, dtype=np.int32),
            clbs=np.asarray(self.clbs, dtype=np.int32),
            col_base=np.asarray(self.col_base, dtype=np.int64),
            va_seeds=np.asarray(self.va_seeds, dtype=np.uint32),
        )

    def replace(self, **changes) -> "SketchConfig":
        return dataclasses.replace(self, **changes)

    # -- validation -------------------------------------------------------
    def check(self) -> None:
        if not 0 <= self.r <= 31:
            raise ConfigError("r-range", f"r={self.r} must lie in [0, 31]")
        if self.num_ra < 1:
            raise ConfigError("num-ra", f"need at least one restoring array, got {self.num_ra}")
        if self.num_va < 0:
            raise ConfigError("num-va", f"negative validating-array count {self.num_va}")
        if not _is_pow2(self.g):
            raise ConfigError("g-pow2", f"g={self.g} is not a power of two")
        if len(self.cbn) != self.num_arrays:
            raise ConfigError("cbn-length",
                              f"expected {self.num_arrays} widths, got {len(self.cbn)}")
        if len(self.clbs) != self.num_ra:
            raise ConfigError("clbs-length",
                              f"expected {self.num_ra} offsets, got {len(self.clbs)}")
        if len(self.va_seeds) != self.num_va:
            raise ConfigError("va-seeds-length",
                              f"expected {self.num_va} seeds, got {len(self.va_seeds)}")
        for i, c in enumerate(self.cbn):
            if not 0 <= c <= 32:
                raise ConfigError("cbn-range", f"cbn[{i}]={c} outside [0, 32]")
        L = self.lp_bits
        for i, c in enumerate(self.clbs):
            if not 0 <= c < L:
                raise ConfigError("clbs-range", f"clbs[{i}]={c} outside [0, {L})")
        for a, b in zip(self.clbs, self.clbs[1:]):
            if b <= a:
                raise ConfigError("clbs-increasing", f"clbs {list(self.clbs)} not strictly increasing")
        if sum(self.ep_len) != L:
            raise ConfigError("ep-partition",
                              f"efficient parts {list(self.ep_len)} sum to {sum(self.ep_len)}, not {L}")
        ep, cp = self.ep_len, self.cp_len
        for i in range(self.num_ra):
            nxt = ep[(i + 1) % self.num_ra]
            if not 0 <= cp[i] <= nxt:
                raise ConfigError("cp-bounds",
                                  f"cp_len[{i}]={cp[i]} must lie in [0, ep_len[{(i + 1) % self.num_ra}]={nxt}]")
        for name in ("mangle_a", "mangle_b", "bv_seed"):
            v = getattr(self, name)
            if not 0 <= v <= MASK32:
                raise ConfigError("u32-range", f"{name}={v} is not a 32-bit value")
        for j, s in enumerate(self.va_seeds):
            if not 0 <= s <= MASK32:
                raise ConfigError("u32-range", f"va_seeds[{j}]={s} is not a 32-bit value")
        if self.mangle_a % 2 == 0:
            raise ConfigError("mangle-a-odd", f"mangle_a={self.mangle_a:#x} must be odd")


DEFAULT_CONFIG = SketchConfig()


def seeded_config(seed: int, base: SketchConfig = DEFAULT_CONFIG) -> SketchConfig:
    """Same structure as ``base`` with mangling and hash seeds drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    words = [int(w) for w in rng.integers(0, 1 << 32, size=3 + base.num_va, dtype=np.uint64)]
    return base.replace(mangle_a=words[0] | 1, mangle_b=words[1], bv_seed=words[2],
                        va_seeds=tuple(words[3:]))


_LIST_KEYS = {"cbn", "clbs", "va_seeds"}
_INT_KEYS = {"r", "num_ra", "num_va", "g", "mangle_a", "mangle_b", "bv_seed"}


def parse_config_text(text: str, base: SketchConfig = DEFAULT_CONFIG) -> SketchConfig:
    """Parse ``key=value`` lines (``#`` comments allowed) over ``base``."""
    changes: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config-syntax", f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_").lower()
        try:
            if key in _LIST_KEYS:
                changes[key] = tuple(int(v, 0) for v in value.replace(",", " ").split())
            elif key in _INT_KEYS:
                changes[key] = int(value, 0)
            else:
                raise ConfigError("config-key", f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("config-syntax", f"line {lineno}: bad integer in {value!r}") from None
    return base.replace(**changes)


def load_config(path: str | Path, base: SketchConfig = DEFAULT_CONFIG) -> SketchConfig:
    return parse_config_text(Path(path).read_text(), base)


def format_config_text(cfg: SketchConfig) -> str:
    lines = [f"r={cfg.r}", f"num_ra={cfg.num_ra}", f"num_va={cfg.num_va}", f"g={cfg.g}",
             "cbn=" + ",".join(map(str, cfg.cbn)), "clbs=" + ",".join(map(str, cfg.clbs)),
             f"mangle_a={cfg.mangle_a:#010x}", f"mangle_b={cfg.mangle_b:#010x}",
             "va_seeds=" + ",".join(f"{s:#010x}" for s in cfg.va_seeds),
             f"bv_seed={cfg.bv_seed:#010x}"]
    return "\n".join(lines) + "\n"
