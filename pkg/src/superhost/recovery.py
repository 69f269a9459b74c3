"""Recover super hosts from a quiescent cube.

For each cardinality sketch: estimate its load, derive the hot-column
threshold, collect hot columns of every restoring array, then test every
hot-column tuple.  A tuple survives if its checking parts agree and the
AND of all its columns (validating arrays included) is still hot.
"""
from __future__ import annotations

import math
import queue
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import ipmap, kernels
from .cube import CubeOfBitsArrays
from .estimator import LoadEstimate, corrected_estimate, estimate_cs_load, hot_threshold

DEFAULT_TUPLE_CAP = 1 << 24


@dataclass(frozen=True)
class SuperHostRecord:
    ip: int
    estimate: float
    cs_idx: int


@dataclass
class HotColumnSet:
    per_array: list[list[int]]

    @property
    def tuple_count(self) -> int:
        return math.prod(len(h) for h in self.per_array)


@dataclass(frozen=True)
class OverflowReport:
    cs_idx: int
    tuple_count: int
    cap: int


class TupleSpaceOverflow(RuntimeError):
    def __init__(self, report: OverflowReport):
        self.report = report
        super().__init__(f"sketch {report.cs_idx}: {report.tuple_count} hot-column tuples "
                         f"exceed the cap of {report.cap}")


@dataclass
class RecoveryResult:
    records: list[SuperHostRecord] = field(default_factory=list)
    overflows: list[OverflowReport] = field(default_factory=list)


class BufferPool:
    """Fixed set of g-row scratch columns handed out one per tuple check."""

    def __init__(self, size: int, g: int):
        self._free: queue.Queue = queue.Queue()
        for _ in range(max(1, size)):
            self._free.put(np.empty(g, dtype=np.uint8))

    @contextmanager
    def acquire(self):
        buf = self._free.get()
        try:
            yield buf
        finally:
            self._free.put(buf)


def sort_records(records) -> list[SuperHostRecord]:
    return sorted(records, key=lambda rec: (-rec.estimate, rec.ip))


def find_hot_columns(cube: CubeOfBitsArrays, cs_idx: int, theta_bn: float) -> HotColumnSet:
    per_array = []
    for i in range(cube.config.num_ra):
        zeros = cube.array_zero_counts(cs_idx, i)
        per_array.append([int(j) for j in np.flatnonzero(zeros <= theta_bn)])
    return HotColumnSet(per_array)


def check_tuple(cube: CubeOfBitsArrays, cs_idx: int, cols: Sequence[int], theta_bn: float,
                epsilon: float = 0.0, scratch: np.ndarray | None = None) -> Optional[SuperHostRecord]:
    cfg = cube.config
    lp = ipmap.lp_from_tuple(cols, cfg)
    if lp is None:
        return None
    all_cols = list(cols) + [ipmap.va_column_index(lp, j, cfg) for j in range(cfg.num_va)]
    offsets = [cfg.column_bit_offset(cs_idx, a, c) for a, c in enumerate(all_cols)]
    z = kernels.BACKEND.and_zero_count(cube.buf, offsets, cfg.g, scratch)
    if z > theta_bn:
        return None
    ip = ipmap.unmangle(ipmap.join_ip(lp, cs_idx, cfg), cfg)
    return SuperHostRecord(ip, corrected_estimate(z, epsilon, cfg.g), cs_idx)


def candidate_tuples(hot: HotColumnSet, cube_config) -> list[tuple[int, ...]]:
    """Tuples of the hot-column product whose checking parts all agree.

    Builds the chain array by array, joining each column to the columns of
    the next array whose head matches its checking part; the closing check
    (last array back to the first) is applied at the end.  Yields the same
    set as filtering the full Cartesian product.
    """
    cfg = cube_config
    n, cp = cfg.num_ra, cfg.cp_len
    by_head = []
    for i in range(n):
        prev = (i - 1) % n
        groups: dict[int, list[int]] = {}
        for c in hot.per_array[i]:
            groups.setdefault(c >> (cfg.cbn[i] - cp[prev]), []).append(c)
        by_head.append(groups)
    chains = [(c,) for c in hot.per_array[0]]
    for i in range(n - 1):
        mask = (1 << cp[i]) - 1
        chains = [ch + (nxt,) for ch in chains for nxt in by_head[i + 1].get(ch[-1] & mask, ())]
    last = n - 1
    mask = (1 << cp[last]) - 1
    return [ch for ch in chains
            if (ch[-1] & mask) == (ch[0] >> (cfg.cbn[0] - cp[last]))]


def recover_cs(cube: CubeOfBitsArrays, cs_idx: int, theta: float, formula: str = "paper",
               tuple_cap: int = DEFAULT_TUPLE_CAP, pool: BufferPool | None = None,
               load: LoadEstimate | None = None) -> list[SuperHostRecord]:
    cfg = cube.config
    load = load or estimate_cs_load(cube, cs_idx)
    theta_bn = hot_threshold(theta, load.epsilon, cfg.g, formula)
    hot = find_hot_columns(cube, cs_idx, theta_bn)
    if hot.tuple_count > tuple_cap:
        raise TupleSpaceOverflow(OverflowReport(cs_idx, hot.tuple_count, tuple_cap))
    pool = pool or BufferPool(1, cfg.g)
    found: dict[int, SuperHostRecord] = {}
    for cols in candidate_tuples(hot, cfg):
        with pool.acquire() as scratch:
            rec = check_tuple(cube, cs_idx, cols, theta_bn, load.epsilon, scratch)
        if rec is not None and (rec.ip not in found or rec.estimate > found[rec.ip].estimate):
            found[rec.ip] = rec
    return sort_records(found.values())


def recover_all(cube: CubeOfBitsArrays, theta: float, formula: str = "paper",
                tuple_cap: int = DEFAULT_TUPLE_CAP, workers: int = 1) -> RecoveryResult:
    cfg = cube.config
    pool = BufferPool(workers, cfg.g)

    def one(cs):
        try:
            return recover_cs(cube, cs, theta, formula, tuple_cap, pool), None
        except TupleSpaceOverflow as exc:
            return [], exc.report

    if workers <= 1:
        parts = [one(cs) for cs in range(cfg.num_cs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, range(cfg.num_cs)))
    result = RecoveryResult()
    for recs, overflow in parts:
        result.records.extend(recs)
        if overflow is not None:
            result.overflows.append(overflow)
    result.records = sort_records(result.records)
    return result
