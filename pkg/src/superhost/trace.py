"""Trace records: text/binary formats, synthetic traces, time windows."""
from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .oracle import GroundTruth


class TraceFormatError(ValueError):
    def __init__(self, position: str, detail: str):
        self.position = position
        super().__init__(f"{position}: {detail}")


@dataclass
class Trace:
    iip: np.ndarray
    oip: np.ndarray
    ts: Optional[np.ndarray] = None

    def __post_init__(self):
        self.iip = np.asarray(self.iip, dtype=np.uint32)
        self.oip = np.asarray(self.oip, dtype=np.uint32)
        if self.ts is not None:
            self.ts = np.asarray(self.ts, dtype=np.float64)
            if len(self.ts) != len(self.iip):
                raise ValueError("timestamp column length mismatch")
        if len(self.iip) != len(self.oip):
            raise ValueError("iip/oip length mismatch")

    def __len__(self):
        return len(self.iip)

    @property
    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.iip, self.oip

    def take(self, idx) -> "Trace":
        return Trace(self.iip[idx], self.oip[idx], None if self.ts is None else self.ts[idx])

    def records(self):
        ts = self.ts if self.ts is not None else [None] * len(self)
        return list(zip(self.iip.tolist(), self.oip.tolist(), list(ts)))


def ip_to_int(s: str) -> int:
    parts = s.split(".")
    if len(parts) != 4:
        raise ValueError(f"not a dotted quad: {s!r}")
    v = 0
    for p in parts:
        if not p.isdigit() or int(p) > 255:
            raise ValueError(f"not a dotted quad: {s!r}")
        v = (v << 8) | int(p)
    return v


def int_to_ip(v: int) -> str:
    return f"{(v >> 24) & 255}.{(v >> 16) & 255}.{(v >> 8) & 255}.{v & 255}"


# -- text ---------------------------------------------------------------
def parse_text(src: TextIO | Iterable[str]) -> Trace:
    iips, oips, tss = [], [], []
    for lineno, raw in enumerate(src, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (2, 3):
            raise TraceFormatError(f"line {lineno}", f"expected 2 or 3 fields, got {len(fields)}")
        try:
            iips.append(ip_to_int(fields[0]))
            oips.append(ip_to_int(fields[1]))
            if len(fields) == 3:
                tss.append(float(fields[2]))
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}", str(exc)) from None
    if tss and len(tss) != len(iips):
        raise TraceFormatError("trace", "timestamps present on some records but not all")
    return Trace(np.array(iips, dtype=np.uint32), np.array(oips, dtype=np.uint32),
                 np.array(tss) if tss else None)


def _fmt_ts(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


def write_text(trace: Trace, out: TextIO) -> None:
    ts = trace.ts
    for k, (i, o) in enumerate(zip(trace.iip.tolist(), trace.oip.tolist())):
        line = f"{int_to_ip(i)} {int_to_ip(o)}"
        if ts is not None:
            line += " " + _fmt_ts(ts[k])
        out.write(line + "\n")


# -- binary -------------------------------------------------------------
_REC8 = np.dtype([("iip", ">u4"), ("oip", ">u4")])
_REC16 = np.dtype([("iip", ">u4"), ("oip", ">u4"), ("ts", "<u8")])


def parse_binary(data: bytes, record_size: int = 8) -> Trace:
    if record_size not in (8, 16):
        raise ValueError("record_size must be 8 or 16")
    if len(data) % record_size:
        whole = len(data) // record_size
        raise TraceFormatError(f"byte {whole * record_size}",
                               f"trailing {len(data) % record_size} bytes do not form a "
                               f"{record_size}-byte record")
    recs = np.frombuffer(data, dtype=_REC8 if record_size == 8 else _REC16)
    ts = recs["ts"].astype(np.float64) if record_size == 16 else None
    return Trace(recs["iip"].astype(np.uint32), recs["oip"].astype(np.uint32), ts)


def to_binary(trace: Trace, record_size: int = 8) -> bytes:
    if record_size == 16:
        if trace.ts is None:
            raise ValueError("16-byte records need timestamps")
        recs = np.empty(len(trace), dtype=_REC16)
        recs["ts"] = np.floor(trace.ts).astype(np.uint64)
    elif record_size == 8:
        recs = np.empty(len(trace), dtype=_REC8)
    else:
        raise ValueError("record_size must be 8 or 16")
    recs["iip"] = trace.iip
    recs["oip"] = trace.oip
    return recs.tobytes()


def read_trace(path, fmt: str = "text", record_size: int = 8) -> Trace:
    if fmt == "text":
        with open(path, encoding="utf-8") as fh:
            return parse_text(fh)
    if fmt == "binary":
        with open(path, "rb") as fh:
            return parse_binary(fh.read(), record_size)
    raise ValueError(f"unknown trace format {fmt!r}")


def write_trace(trace: Trace, path, fmt: str = "text", record_size: int = 8) -> None:
    if fmt == "text":
        with open(path, "w", encoding="utf-8") as fh:
            write_text(trace, fh)
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(to_binary(trace, record_size))
    else:
        raise ValueError(f"unknown trace format {fmt!r}")


# -- direction normalisation ----------------------------------------------
def normalize_direction(trace: Trace, inner_cidrs: Sequence[str]) -> tuple[Trace, int]:
    """Order raw pairs as (inner, outer) using inner network prefixes.

    Pairs where neither or both addresses are inner are dropped; returns the
    normalised trace and the number of dropped pairs.
    """
    a, b = trace.iip, trace.oip
    a_in = np.zeros(len(a), dtype=bool)
    b_in = np.zeros(len(b), dtype=bool)
    for c in inner_cidrs:
        net = ipaddress.IPv4Network(c, strict=False)
        mask = np.uint32(int(net.netmask))
        base = np.uint32(int(net.network_address))
        a_in |= (a & mask) == base
        b_in |= (b & mask) == base
    keep = a_in ^ b_in
    swap = b_in & ~a_in
    iip = np.where(swap, b, a)[keep]
    oip = np.where(swap, a, b)[keep]
    ts = None if trace.ts is None else trace.ts[keep]
    return Trace(iip, oip, ts), int((~keep).sum())


# -- windows ----------------------------------------------------------------
def split_windows(trace: Trace, window_seconds: float) -> list[tuple[int, Trace]]:
    """Bucket records by ``floor(ts / window_seconds)``, in time order."""
    if window_seconds <= 0:
        raise ValueError("window_seconds must be positive")
    if trace.ts is None:
        raise TraceFormatError("trace", "window splitting needs timestamped records")
    if len(trace) == 0:
        return []
    win = np.floor(trace.ts / window_seconds).astype(np.int64)
    order = np.argsort(win, kind="stable")
    wins, starts = np.unique(win[order], return_index=True)
    bounds = list(starts) + [len(order)]
    return [(int(w), trace.take(order[bounds[k]:bounds[k + 1]])) for k, w in enumerate(wins)]


# -- synthetic traces -------------------------------------------------------
@dataclass
class SynthSpec:
    background_hosts: int = 0
    background_range: tuple[int, int] = (1, 100)
    planted: list[tuple[int, tuple[int, int]]] = field(default_factory=list)
    duplication: float = 1.0
    seed: int = 0
    duration: Optional[float] = None
    start_time: float = 0.0


def _distinct_u32(rng: np.random.Generator, n: int) -> np.ndarray:
    out = np.unique(rng.integers(0, 1 << 32, size=n, dtype=np.uint64))
    while len(out) < n:
        extra = rng.integers(0, 1 << 32, size=n - len(out), dtype=np.uint64)
        out = np.unique(np.concatenate([out, extra]))
    return rng.permutation(out)[:n].astype(np.uint32)


def synth_trace(spec: SynthSpec) -> tuple[Trace, GroundTruth]:
    """Generate a shuffled pair trace with exactly planned per-host cardinalities."""
    rng = np.random.default_rng(spec.seed)
    cards = []
    if spec.background_hosts:
        lo, hi = spec.background_range
        cards.append(rng.integers(lo, hi + 1, size=spec.background_hosts))
    for count, (lo, hi) in spec.planted:
        cards.append(rng.integers(lo, hi + 1, size=count))
    card = np.concatenate(cards).astype(np.int64) if cards else np.zeros(0, dtype=np.int64)
    hosts = _distinct_u32(rng, len(card))
    total = int(card.sum())
    owner = np.repeat(np.arange(len(card)), card)
    oip = rng.integers(0, 1 << 32, size=total, dtype=np.uint64)
    # redraw outer addresses until each host's are distinct
    while True:
        key = (owner.astype(np.uint64) << np.uint64(32)) | oip
        order = np.argsort(key, kind="stable")
        dup = np.zeros(total, dtype=bool)
        if total:
            dup[order[1:]] = key[order[1:]] == key[order[:-1]]
        nd = int(dup.sum())
        if nd == 0:
            break
        oip[dup] = rng.integers(0, 1 << 32, size=nd, dtype=np.uint64)
    if spec.duplication > 1:
        reps = 1 + rng.poisson(spec.duplication - 1, size=total)
        owner = np.repeat(owner, reps)
        oip = np.repeat(oip, reps)
    perm = rng.permutation(len(owner))
    iip_arr = hosts[owner[perm]] if len(owner) else np.zeros(0, dtype=np.uint32)
    oip_arr = oip[perm].astype(np.uint32)
    ts = None
    if spec.duration is not None:
        ts = np.sort(spec.start_time + rng.random(len(perm)) * spec.duration)
        ts = np.floor(ts)
    truth = GroundTruth(dict(zip(hosts.tolist(), card.tolist())))
    return Trace(iip_arr, oip_arr, ts), truth
