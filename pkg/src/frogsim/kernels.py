"""Step-kernel selection: compiled C kernel when built, numpy fallback, and
the dict-backed kernel for arenas too large to hold densely.

All kernels advance the same WorldState and produce bit-identical traces;
they differ only in speed.  Selection is automatic per run, overridable via
the FROGSIM_KERNEL environment variable or the `kernel=` argument of the
engine entry points.
"""

from __future__ import annotations

import os

import numpy as np

from ._kernel_py import NumpyKernel, SparseKernel

try:
    from . import _ckernel

    HAVE_C_KERNEL = True
except ImportError:  # pragma: no cover
    _ckernel = None
    HAVE_C_KERNEL = False


class CKernel:
    name = "c"

    def advance(self, ws, max_steps: int, stop_off: int) -> int:
        if ws.cnt1 is None:
            ws.cnt1 = np.zeros(ws.arena.cells, dtype=np.int32)
            ws.cnt2 = np.zeros(ws.arena.cells, dtype=np.int32)
        cfg = ws.config
        eta_k = ws.eta_degenerate_k if ws.eta_degenerate_k is not None else -1
        (steps, t, n_active, ev_count, pending_from,
         new1, new2) = _ckernel.advance(
            ws.pos, ws.prefix, ws.ptype, ws.njump, ws.kdelay, ws.act_t,
            ws.birth, ws.pj, ws.n_active,
            ws.disc_time, ws.disc_by, ws.assigned, ws.cnt1, ws.cnt2,
            ws.land_off, ws.land_pid, ws.usite_buf,
            ws.ev_off, ws.ev_t, ws.ev_by, ws.ev_assigned, ws.ev_nact,
            ws.ev_count,
            ws.credit_cnt, ws.credit_last, ws.n_tracked,
            np.asarray(ws.arena.strides, dtype=np.int64), ws.arena.side,
            ws.arena.radius, ws.d,
            cfg.p1, cfg.p2, 1 if cfg.laziness == "collective" else 0,
            ws.aux_prefix1, ws.aux_prefix2, ws.seed_mix,
            cfg.tie.code, cfg.tie.q,
            eta_k, ws.t, max_steps, stop_off)
        ws.t = t
        ws.n_active = n_active
        ws.ev_count = ev_count
        ws.pending_from = pending_from
        if new1 or new2:
            ws.count1 += new1
            ws.count2 += new2
        return steps


_NUMPY = NumpyKernel()
_SPARSE = SparseKernel()
_C = CKernel() if HAVE_C_KERNEL else None


def available_kernels() -> list[str]:
    names = ["c"] if HAVE_C_KERNEL else []
    return names + ["numpy", "sparse"]


def get_kernel(requested, ws):
    """Resolve a kernel for this world; `requested` may be None, a name, or
    an already-resolved kernel object."""
    if requested is not None and not isinstance(requested, str):
        return requested
    name = requested or os.environ.get("FROGSIM_KERNEL") or "auto"
    if name == "auto":
        if ws.dense:
            return _C if HAVE_C_KERNEL else _NUMPY
        return _SPARSE
    if name == "c":
        if not HAVE_C_KERNEL:
            raise RuntimeError("C kernel requested but not built")
        if not ws.dense:
            raise RuntimeError("C kernel requires a dense arena "
                               "(raise max_arena_cells)")
        return _C
    if name == "numpy":
        if not ws.dense:
            raise RuntimeError("numpy kernel requires a dense arena")
        return _NUMPY
    if name == "sparse":
        if ws.dense:
            raise RuntimeError("sparse kernel requires sparse storage "
                               "(set max_arena_cells=0)")
        return _SPARSE
    raise ValueError(f"unknown kernel {name!r}; choices: auto, "
                     + ", ".join(available_kernels()))
