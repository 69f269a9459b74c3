"""Exact ground truth and detection scoring (FNR / FPR / FTR)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np


@dataclass
class GroundTruth:
    cardinalities: dict[int, int] = field(default_factory=dict)

    @property
    def flow_count(self) -> int:
        return sum(self.cardinalities.values())

    def super_hosts(self, theta: int) -> dict[int, int]:
        return {ip: n for ip, n in self.cardinalities.items() if n >= theta}


def exact_cardinalities(iip, oip=None) -> GroundTruth:
    """Distinct outer-address count per inner address.

    Accepts either two arrays or one iterable of ``(iip, oip)`` pairs.
    """
    if oip is None:
        arr = np.array(list(iip), dtype=np.uint64).reshape(-1, 2)
        iip, oip = arr[:, 0], arr[:, 1]
    iip = np.asarray(iip, dtype=np.uint64)
    oip = np.asarray(oip, dtype=np.uint64)
    if len(iip) == 0:
        return GroundTruth({})
    flows = np.unique((iip << np.uint64(32)) | oip)
    hosts, counts = np.unique(flows >> np.uint64(32), return_counts=True)
    return GroundTruth(dict(zip(hosts.tolist(), counts.tolist())))


def exact_cardinalities_sets(pairs: Iterable[tuple[int, int]]) -> GroundTruth:
    """Set-per-host reference version; slow, used to cross-check."""
    opp: dict[int, set] = {}
    for i, o in pairs:
        opp.setdefault(int(i), set()).add(int(o))
    return GroundTruth({ip: len(s) for ip, s in opp.items()})


@dataclass
class MetricsReport:
    truth_count: int
    detected_count: int
    missed: int
    spurious: int
    fnr: Optional[float]
    fpr: Optional[float]
    ftr: Optional[float]
    precision: Optional[float]
    boundary_hosts: int = 0

    @property
    def defined(self) -> bool:
        return self.truth_count > 0

    def lines(self) -> list[str]:
        def pct(x):
            return "undefined (no true super hosts)" if x is None else f"{x:.6f}"
        out = [f"true_super_hosts={self.truth_count}",
               f"detected={self.detected_count}",
               f"missed={self.missed}",
               f"spurious={self.spurious}",
               f"fnr={pct(self.fnr)}",
               f"fpr={pct(self.fpr)}",
               f"ftr={pct(self.ftr)}",
               f"precision_conventional={pct(self.precision)}"]
        if self.boundary_hosts:
            out.append(f"warning: {self.boundary_hosts} detected host(s) have cardinality exactly "
                       "theta and count as both true and spurious")
        return out


def score_detection(detected: Iterable, truth: GroundTruth, theta: int) -> MetricsReport:
    """Score detected hosts (records or bare IPs) against exact truth.

    FNR and FPR are both normalised by the number of true super hosts.  A
    detected host whose cardinality is ``<= theta`` is spurious, so a host
    sitting exactly on theta is counted as both a true and a spurious hit.
    """
    if theta < 1:
        raise ValueError("theta must be >= 1")
    det = {getattr(d, "ip", d) for d in detected}
    card = truth.cardinalities
    true_set = {h for h, n in card.items() if n >= theta}
    missed = len(true_set - det)
    spurious = sum(1 for h in det if card.get(h, 0) <= theta)
    boundary = sum(1 for h in det if card.get(h, 0) == theta)
    hits = len(det & true_set)
    precision = hits / len(det) if det else None
    if not true_set:
        return MetricsReport(0, len(det), 0, spurious, None, None, None, precision, boundary)
    fnr = missed / len(true_set)
    fpr = spurious / len(true_set)
    return MetricsReport(len(true_set), len(det), missed, spurious, fnr, fpr, fnr + fpr,
                         precision, boundary)
