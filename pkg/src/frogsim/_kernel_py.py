"""Python step kernels: a vectorized numpy kernel for dense arenas and a
plain dict-backed kernel for arenas too large to allocate densely.

Both produce traces bit-identical to the C kernel: every random draw is a
pure function of its key, so the only obligations here are the two-phase
step order and ascending-offset processing of fresh discoveries.
"""

from __future__ import annotations

import numpy as np

from . import rng
from .engine import (TYPE1, TYPE2, BY_BOTH, WorldState, resolve_tie_uniform)
from .rng import Stream, v_absorb, v_uniform_bits

_U = np.uint64


class NumpyKernel:
    name = "numpy"

    def advance(self, ws: WorldState, max_steps: int, stop_off: int) -> int:
        cfg = ws.config
        arena = ws.arena
        stride_arr = np.asarray(arena.strides, dtype=np.int64)
        two_d = _U(2 * ws.d)
        p1, p2 = cfg.p1, cfg.p2
        tie_kind, tie_q = cfg.tie.code, cfg.tie.q
        collective = cfg.laziness == "collective"
        k_deg = ws.eta_degenerate_k
        steps = 0
        while steps < max_steps:
            n = ws.n_active
            if len(ws.ev_t) - ws.ev_count < n:
                break
            if k_deg is not None and k_deg > 0 and len(ws.pos) - n < n * k_deg:
                break
            t_next = ws.t + 1

            land_off = land_pid = None
            if n:
                ptype_n = ws.ptype[:n]
                if collective:
                    c1 = ws.source.collective_uniform(ws.d, TYPE1, t_next) <= p1
                    c2 = ws.source.collective_uniform(ws.d, TYPE2, t_next) <= p2
                    jump = np.where(ptype_n == TYPE1, c1, c2)
                elif p1 >= 1.0 and p2 >= 1.0:
                    # forced jumps; skipping the draw cannot desync keyed randomness
                    jump = np.ones(n, dtype=bool)
                else:
                    h = v_absorb(ws.prefix[:n], _U(int(Stream.DELAY)))
                    h = v_absorb(h, ws.njump[:n])
                    h = v_absorb(h, ws.kdelay[:n] + 1)
                    u = v_uniform_bits(h)
                    jump = u <= np.where(ptype_n == TYPE1, p1, p2)
                ws.kdelay[:n][~jump] += 1
                movers = np.nonzero(jump)[0]
                if movers.size:
                    njm = ws.njump[movers] + 1
                    h2 = v_absorb(ws.prefix[movers], _U(int(Stream.JUMP)))
                    h2 = v_absorb(h2, njm)
                    h2 = v_absorb(h2, _U(0))
                    idx = ((h2 >> _U(11)) * two_d) >> _U(53)
                    axis = (idx >> _U(1)).astype(np.int64)
                    delta = np.where(idx & _U(1), stride_arr[axis],
                                     -stride_arr[axis])
                    newpos = ws.pos[movers] + delta
                    ws.pos[movers] = newpos
                    ws.njump[movers] = njm
                    ws.kdelay[movers] = 0
                    fresh = ws.disc_time[newpos] < 0
                    if fresh.any():
                        land_off = newpos[fresh]
                        land_pid = movers[fresh]

            ev_before = ws.ev_count
            if land_off is not None:
                uniq, inv = np.unique(land_off, return_inverse=True)
                tp = ws.ptype[land_pid]
                nu = len(uniq)
                c1 = np.bincount(inv[tp == TYPE1], minlength=nu)
                c2 = np.bincount(inv[tp == TYPE2], minlength=nu)
                assigned = np.where(c1 > 0, TYPE1, TYPE2).astype(np.int8)
                by = assigned.astype(np.int8).copy()
                tied = np.nonzero((c1 > 0) & (c2 > 0))[0]
                for i in tied:
                    by[i] = BY_BOTH
                    u = ws.source.tie_uniform(arena.decode(int(uniq[i])), t_next)
                    assigned[i] = resolve_tie_uniform(int(c1[i]), int(c2[i]),
                                                      tie_kind, tie_q, u)
                ws.disc_time[uniq] = t_next
                ws.disc_by[uniq] = by
                ws.assigned[uniq] = assigned
                nact = np.full(nu, k_deg if k_deg is not None else -1,
                               dtype=np.int32)
                ws.ensure_event_capacity(ws.ev_count + nu)
                sl = slice(ws.ev_count, ws.ev_count + nu)
                ws.ev_t[sl] = t_next
                ws.ev_off[sl] = uniq
                ws.ev_by[sl] = by
                ws.ev_assigned[sl] = assigned
                ws.ev_nact[sl] = nact
                ws.ev_count += nu
                if ws.n_tracked:
                    tracked = land_pid < ws.n_tracked
                    pids = land_pid[tracked]
                    ws.credit_cnt[pids] += 1
                    ws.credit_last[pids] = t_next
                if k_deg is not None and k_deg > 0:
                    offs_rep = np.repeat(uniq, k_deg)
                    js = np.tile(np.arange(1, k_deg + 1, dtype=np.int64), nu)
                    ptypes_rep = np.repeat(assigned, k_deg)
                    ws.append_particles_bulk(offs_rep, js, ptypes_rep, t_next)

            ws.t = t_next
            steps += 1
            if k_deg is None and ws.ev_count > ev_before:
                ws.pending_from = ev_before
                break
            if stop_off >= 0 and ws.disc_time[stop_off] >= 0:
                break
        return steps


class SparseKernel:
    """Scalar dict-backed kernel for arenas exceeding the dense budget.

    Also serves as the most literal reference of the step semantics.
    """

    name = "sparse"

    def advance(self, ws: WorldState, max_steps: int, stop_off: int) -> int:
        cfg = ws.config
        arena = ws.arena
        d = ws.d
        p1, p2 = cfg.p1, cfg.p2
        tie_kind, tie_q = cfg.tie.code, cfg.tie.q
        collective = cfg.laziness == "collective"
        k_deg = ws.eta_degenerate_k
        source = ws.source
        strides = arena.strides
        steps = 0
        while steps < max_steps:
            n = ws.n_active
            if len(ws.ev_t) - ws.ev_count < n:
                break
            if k_deg is not None and k_deg > 0 and len(ws.pos) - n < n * k_deg:
                break
            t_next = ws.t + 1
            if collective and n:
                coin1 = source.collective_uniform(d, TYPE1, t_next) <= p1
                coin2 = source.collective_uniform(d, TYPE2, t_next) <= p2

            landings: dict[int, list[int]] = {}
            for i in range(n):
                tp = int(ws.ptype[i])
                pf = int(ws.prefix[i])
                nj = int(ws.njump[i])
                if collective:
                    jump = coin1 if tp == TYPE1 else coin2
                else:
                    k = int(ws.kdelay[i]) + 1
                    u = (rng.finalize(pf, Stream.DELAY, nj, k) >> 11) * rng._INV_2_53
                    jump = u <= (p1 if tp == TYPE1 else p2)
                if not jump:
                    ws.kdelay[i] += 1
                    continue
                njm = nj + 1
                h = rng.finalize(pf, Stream.JUMP, njm, 0)
                idx = ((h >> 11) * (2 * d)) >> 53
                off = int(ws.pos[i]) + (strides[idx >> 1] if idx & 1
                                        else -strides[idx >> 1])
                ws.pos[i] = off
                ws.njump[i] = njm
                ws.kdelay[i] = 0
                if off not in ws.disc_map:
                    landings.setdefault(off, []).append(i)

            ev_before = ws.ev_count
            for off in sorted(landings):
                pids = landings[off]
                c1 = sum(1 for p in pids if ws.ptype[p] == TYPE1)
                c2 = len(pids) - c1
                if c1 and c2:
                    by = BY_BOTH
                    u = source.tie_uniform(arena.decode(off), t_next)
                    assigned = resolve_tie_uniform(c1, c2, tie_kind, tie_q, u)
                else:
                    by = assigned = TYPE1 if c1 else TYPE2
                ws.disc_map[off] = (t_next, by, assigned)
                ws.append_event(t_next, off, by, assigned,
                                k_deg if k_deg is not None else -1)
                for p in pids:
                    if p < ws.n_tracked:
                        ws.credit_cnt[p] += 1
                        ws.credit_last[p] = t_next
                if k_deg is not None and k_deg > 0:
                    ws.append_particles_for_site(off, k_deg, assigned, t_next)

            ws.t = t_next
            steps += 1
            if k_deg is None and ws.ev_count > ev_before:
                ws.pending_from = ev_before
                break
            if stop_off >= 0 and stop_off in ws.disc_map:
                break
        return steps
