"""Kernel backend selection.

The compiled ``_ext`` module is used when it imports; otherwise the numpy
versions in ``_pykernels`` take over.  Setting ``SUPERHOST_PURE_PYTHON=1``
forces the fallback.  Both backends produce bit-identical cubes.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

from . import _pykernels
from .config import SketchConfig

try:
    from . import _ext
except ImportError:  # extension not built
    _ext = None


def _compiled_backend():
    def record_pairs(buf, iip, oip, cfg: SketchConfig):
        arrs = cfg.kernel_arrays()
        _ext.record_pairs_raw(
            buf, np.ascontiguousarray(iip, dtype=np.uint32),
            np.ascontiguousarray(oip, dtype=np.uint32),
            cfg.r, cfg.num_ra, cfg.num_va, cfg.g, arrs["cbn"], arrs["clbs"],
            arrs["col_base"], cfg.cols_per_cs, cfg.mangle_a, cfg.mangle_b, cfg.bv_seed,
            arrs["va_seeds"])

    return SimpleNamespace(
        name="compiled",
        record_pairs=record_pairs,
        column_zero_counts=_ext.column_zero_counts,
        and_zero_count=_ext.and_zero_count,
        column_bits=_pykernels.column_bits,
    )


def _python_backend():
    return SimpleNamespace(
        name="python",
        record_pairs=_pykernels.record_pairs,
        column_zero_counts=_pykernels.column_zero_counts,
        and_zero_count=_pykernels.and_zero_count,
        column_bits=_pykernels.column_bits,
    )


def available_backends() -> list[str]:
    return ["compiled", "python"] if _ext is not None else ["python"]


def get_backend(name: str | None = None) -> SimpleNamespace:
    if name is None:
        return BACKEND
    if name == "compiled":
        if _ext is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled_backend()
    if name == "python":
        return _python_backend()
    raise ValueError(f"unknown backend {name!r}")


if _ext is not None and not os.environ.get("SUPERHOST_PURE_PYTHON"):
    BACKEND = _compiled_backend()
else:
    BACKEND = _python_backend()
