# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled step kernel: the per-particle inner loop of the frog dynamics.

Semantics and key hashing are identical to the Python kernels; see
_kernel_py.py for the readable reference.
"""

from libc.stdlib cimport qsort
from libc.stdint cimport int8_t, int32_t, int64_t, uint64_t

cdef uint64_t GOLDEN = (<uint64_t>0x9E3779B9 << 32) | <uint64_t>0x7F4A7C15
cdef uint64_t MIX_A = (<uint64_t>0xBF58476D << 32) | <uint64_t>0x1CE4E5B9
cdef uint64_t MIX_B = (<uint64_t>0x94D049BB << 32) | <uint64_t>0x133111EB
cdef double INV_2_53 = 1.0 / 9007199254740992.0

cdef enum:
    STREAM_JUMP = 1
    STREAM_DELAY = 2
    STREAM_TIE = 3
    STREAM_AUX = 4

cdef enum:
    TIE_FAIR = 0
    TIE_BIASED = 1
    TIE_MAJORITY = 2
    TIE_ALWAYS1 = 3
    TIE_ALWAYS2 = 4


cdef inline uint64_t mix64(uint64_t z) nogil:
    z ^= z >> 30
    z *= MIX_A
    z ^= z >> 27
    z *= MIX_B
    return z ^ (z >> 31)


cdef inline uint64_t absorb(uint64_t h, uint64_t v) nogil:
    return mix64((h ^ v) * GOLDEN)


cdef inline uint64_t finalize3(uint64_t pf, uint64_t stream, uint64_t n,
                               uint64_t k) nogil:
    return absorb(absorb(absorb(pf, stream), n), k)


cdef inline double u53(uint64_t h) nogil:
    return <double>(h >> 11) * INV_2_53


cdef inline uint64_t site_hash(uint64_t seed_mix, int64_t off,
                               const int64_t* strides, int64_t side,
                               int64_t radius, int d) nogil:
    cdef uint64_t h = seed_mix
    cdef int axis
    cdef int64_t c
    for axis in range(d):
        c = (off // strides[axis]) % side - radius
        h = absorb(h, <uint64_t>c)
    return h


cdef inline int resolve_tie_c(int32_t c1, int32_t c2, int tie_kind,
                              double tie_q, double u) nogil:
    if tie_kind == TIE_ALWAYS1:
        return 1
    if tie_kind == TIE_ALWAYS2:
        return 2
    if tie_kind == TIE_MAJORITY:
        if c1 > c2:
            return 1
        if c2 > c1:
            return 2
        return 1 if u < 0.5 else 2
    if tie_kind == TIE_BIASED:
        return 1 if u < tie_q else 2
    return 1 if u < 0.5 else 2


cdef int cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef int64_t x = (<const int64_t*>a)[0]
    cdef int64_t y = (<const int64_t*>b)[0]
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


def advance(int64_t[::1] pos, uint64_t[::1] prefix, int8_t[::1] ptype,
            int32_t[::1] njump, int32_t[::1] kdelay, int32_t[::1] act_t,
            int64_t[::1] birth, int32_t[::1] pj, int64_t n_active,
            int32_t[::1] disc_time, int8_t[::1] disc_by,
            int8_t[::1] assigned_arr, int32_t[::1] cnt1, int32_t[::1] cnt2,
            int64_t[::1] land_off, int64_t[::1] land_pid,
            int64_t[::1] usite_buf,
            int64_t[::1] ev_off, int32_t[::1] ev_t, int8_t[::1] ev_by,
            int8_t[::1] ev_assigned, int32_t[::1] ev_nact, int64_t ev_count,
            int32_t[::1] credit_cnt, int32_t[::1] credit_last,
            int64_t n_tracked,
            int64_t[::1] strides, int64_t side, int64_t radius, int d,
            double p1, double p2, int collective,
            uint64_t aux_prefix1, uint64_t aux_prefix2, uint64_t seed_mix,
            int tie_kind, double tie_q,
            int64_t eta_k, int64_t t_now, int64_t max_steps,
            int64_t stop_off):
    cdef int64_t pcap = pos.shape[0]
    cdef int64_t ecap = ev_off.shape[0]
    cdef int64_t steps = 0, t_next, n_land, n_u, i, l, uidx, off, pid, stride
    cdef int64_t nj, new1 = 0, new2 = 0, j
    cdef int tp, by, assigned
    cdef bint jump, cj1 = 0, cj2 = 0
    cdef uint64_t h, hsite, idx, two_d = <uint64_t>(2 * d)
    cdef double p, u
    cdef int32_t c1, c2
    cdef int64_t pending_from = -1
    cdef const int64_t* strides_p = &strides[0]

    while steps < max_steps:
        if ecap - ev_count < n_active:
            break
        if eta_k > 0 and pcap - n_active < n_active * eta_k:
            break
        t_next = t_now + 1
        if collective:
            cj1 = u53(finalize3(aux_prefix1, STREAM_AUX,
                                <uint64_t>t_next, 0)) <= p1
            cj2 = u53(finalize3(aux_prefix2, STREAM_AUX,
                                <uint64_t>t_next, 0)) <= p2

        # Phase A: moves
        n_land = 0
        for i in range(n_active):
            tp = ptype[i]
            if collective:
                jump = cj1 if tp == 1 else cj2
            else:
                p = p1 if tp == 1 else p2
                if p >= 1.0:
                    jump = 1  # forced; skipping the draw cannot desync keyed randomness
                else:
                    h = finalize3(prefix[i], STREAM_DELAY, <uint64_t>njump[i],
                                  <uint64_t>(kdelay[i] + 1))
                    jump = u53(h) <= p
            if jump:
                nj = njump[i] + 1
                h = finalize3(prefix[i], STREAM_JUMP, <uint64_t>nj, 0)
                idx = ((h >> 11) * two_d) >> 53
                stride = strides_p[idx >> 1]
                off = pos[i] + (stride if (idx & 1) else -stride)
                pos[i] = off
                njump[i] = <int32_t>nj
                kdelay[i] = 0
                if disc_time[off] < 0:
                    land_off[n_land] = off
                    land_pid[n_land] = i
                    n_land += 1
            else:
                kdelay[i] += 1

        # Phase B: discoveries
        n_u = 0
        for l in range(n_land):
            off = land_off[l]
            if cnt1[off] == 0 and cnt2[off] == 0:
                usite_buf[n_u] = off
                n_u += 1
            pid = land_pid[l]
            if ptype[pid] == 1:
                cnt1[off] += 1
            else:
                cnt2[off] += 1
            if pid < n_tracked:
                credit_cnt[pid] += 1
                credit_last[pid] = <int32_t>t_next

        if n_u > 1:
            qsort(&usite_buf[0], <size_t>n_u, sizeof(int64_t), cmp_i64)

        for uidx in range(n_u):
            off = usite_buf[uidx]
            c1 = cnt1[off]
            c2 = cnt2[off]
            cnt1[off] = 0
            cnt2[off] = 0
            if c1 > 0 and c2 > 0:
                by = 3
                hsite = site_hash(seed_mix, off, strides_p, side, radius, d)
                u = u53(finalize3(absorb(hsite, 0), STREAM_TIE,
                                  <uint64_t>t_next, 0))
                assigned = resolve_tie_c(c1, c2, tie_kind, tie_q, u)
            else:
                by = 1 if c1 > 0 else 2
                assigned = by
            disc_time[off] = <int32_t>t_next
            disc_by[off] = <int8_t>by
            assigned_arr[off] = <int8_t>assigned
            ev_off[ev_count] = off
            ev_t[ev_count] = <int32_t>t_next
            ev_by[ev_count] = <int8_t>by
            ev_assigned[ev_count] = <int8_t>assigned
            ev_nact[ev_count] = <int32_t>eta_k if eta_k >= 0 else -1
            ev_count += 1
            if eta_k > 0:
                hsite = site_hash(seed_mix, off, strides_p, side, radius, d)
                for j in range(1, eta_k + 1):
                    pos[n_active] = off
                    birth[n_active] = off
                    prefix[n_active] = absorb(hsite, <uint64_t>j)
                    ptype[n_active] = <int8_t>assigned
                    njump[n_active] = 0
                    kdelay[n_active] = 0
                    act_t[n_active] = <int32_t>t_next
                    pj[n_active] = <int32_t>j
                    n_active += 1
                if assigned == 1:
                    new1 += eta_k
                else:
                    new2 += eta_k

        t_now = t_next
        steps += 1
        if eta_k < 0 and n_u > 0:
            pending_from = ev_count - n_u
            break
        if stop_off >= 0 and disc_time[stop_off] >= 0:
            break

    return steps, t_now, n_active, ev_count, pending_from, new1, new2
