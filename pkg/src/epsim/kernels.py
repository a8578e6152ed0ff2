"""Hot inner loops: numba kernels with pure numpy/Python fallbacks.

Two kernel families live here:

  * bounded SPSC ring operations (batched push/pop on a shared int64 control
    array) - these run on real OS threads in the stress harness, so the numba
    variants are compiled ``nogil`` and the whole channel state sits in one
    array to keep producer/consumer stores in program order;
  * the delivery-application loop - walks transport deliveries in timestamp
    order, copies payload bytes, decodes immediate words and enforces the
    receiver-side guarantees (write-count fences in low-latency mode,
    per-channel sequence cursors in high-throughput mode).

``epsim._backend`` decides which variant is active; see EPSIM_BACKEND.
"""
from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA

# ---------------------------------------------------------------------------
# SPSC ring layout inside one int64 control array.
# Counters sit a cache line apart; slots (2 words each) follow.
CTL_TAIL = 0
CTL_HEAD = 8
CTL_COMPLETED = 16
CTL_FLAGS = 24
CTL_SLOT0 = 32

FLAG_SHUTDOWN = 1

# delivery-application effect kinds
EFF_LL_WRITE = 0
EFF_LL_ATOMIC = 1
EFF_HT_DATA = 2
EFF_HT_ATOMIC = 3
EFF_HW_ATOMIC = 4

# delivery-application error codes
ERR_OK = 0
ERR_BAD_COUNTER = 1
ERR_LL_PENDING_OVERFLOW = 2
ERR_HT_STALE_SEQ = 3
ERR_HT_DUP_SLOT = 4
ERR_HT_WINDOW_OVERFLOW = 5
ERR_BAD_IMM_KIND = 6

_SEQ_MOD = 1 << 16
_SEQ_WINDOW = 1 << 15


def ctl_words(capacity: int) -> int:
    return CTL_SLOT0 + 2 * capacity


# ---------------------------------------------------------------------------
# SPSC push/pop, fallback flavor


def _push_batch_py(ctl, cap, lo, hi, start, want, max_spin):
    slots = ctl[CTL_SLOT0 : CTL_SLOT0 + 2 * cap].reshape(cap, 2)
    tail = int(ctl[CTL_TAIL])
    pushed = 0
    spins = 0
    while pushed < want:
        head = int(ctl[CTL_HEAD])
        free = cap - (tail - head)
        if free == 0:
            spins += 1
            if spins > max_spin:
                break
            continue
        n = min(want - pushed, free)
        idx = (tail + np.arange(n)) & (cap - 1)
        slots[idx, 0] = lo[start + pushed : start + pushed + n]
        slots[idx, 1] = hi[start + pushed : start + pushed + n]
        tail += n
        ctl[CTL_TAIL] = tail
        pushed += n
    return pushed


def _pop_batch_py(ctl, cap, lo_out, hi_out, start, want, max_spin):
    slots = ctl[CTL_SLOT0 : CTL_SLOT0 + 2 * cap].reshape(cap, 2)
    head = int(ctl[CTL_HEAD])
    popped = 0
    spins = 0
    while popped < want:
        tail = int(ctl[CTL_TAIL])
        avail = tail - head
        if avail == 0:
            spins += 1
            if spins > max_spin:
                break
            continue
        n = min(want - popped, avail)
        idx = (head + np.arange(n)) & (cap - 1)
        lo_out[start + popped : start + popped + n] = slots[idx, 0]
        hi_out[start + popped : start + popped + n] = slots[idx, 1]
        head += n
        ctl[CTL_HEAD] = head
        popped += n
    return popped


# ---------------------------------------------------------------------------
# Delivery application, fallback flavor.
#
# Message arrays arrive pre-sorted by (delivery time, tie rank).  State:
#   regions      uint8  [EP, region_len]   symmetric memory, all ranks
#   counters     int64  [EP, n_counters]   view of each region's counter slab
#   ll_counts    int64  [EP, EP, n_counters]        delivered-write counts
#   ll_pend_x/d  int32  [EP, EP, n_counters, PMAX]  deferred fence atomics
#   ll_pend_n    int32  [EP, EP, n_counters]
#   ht_applied   int64  [EP, EP, n_channels]        per-cursor applied count
#   ht_pend      int32  [EP, EP, n_channels, WMAX]  deferred msg index + 1
#
# Effects are appended to preallocated int64 columns; the caller sizes them
# at 2 * n_messages + slack (every message yields at most a write-count
# effect plus one atomic application).


def _apply_deliveries_py(
    regions,
    counters,
    n_counters_used,
    counter_base,
    mode_ht,
    t_del,
    src_rank,
    dst_rank,
    src_off,
    dst_off,
    length,
    op_hw,
    imm_arr,
    work_id,
    ll_counts,
    ll_pend_x,
    ll_pend_d,
    ll_pend_n,
    ht_applied,
    ht_pend,
    eff_t,
    eff_kind,
    eff_dst,
    eff_src,
    eff_key,
    eff_aux,
    eff_counter,
    eff_work,
    esc_idx,
):
    n = t_del.shape[0]
    pmax = ll_pend_x.shape[3]
    wmax = ht_pend.shape[3]
    ne = 0
    nesc = 0
    for i in range(n):
        src = src_rank[i]
        dst = dst_rank[i]
        ln = length[i]
        if ln > 0:
            do = dst_off[i]
            so = src_off[i]
            regions[dst, do : do + ln] = regions[src, so : so + ln]
        if op_hw[i] != 0:
            cidx = dst_off[i] // 8
            counters[dst, cidx] += length[i]  # hw atomic: length column carries the operand
            eff_t[ne] = t_del[i]
            eff_kind[ne] = EFF_HW_ATOMIC
            eff_dst[ne] = dst
            eff_src[ne] = src
            eff_key[ne] = cidx
            eff_aux[ne] = length[i]
            eff_counter[ne] = counters[dst, cidx]
            eff_work[ne] = work_id[i]
            ne += 1
            continue
        imm = imm_arr[i]
        kind = imm & 3
        if kind >= 2:  # barrier words escalate to the Python protocol layer
            esc_idx[nesc] = i
            nesc += 1
            continue
        if mode_ht == 0:
            cidx = (imm >> 2) & 0x3FF
            operand = (imm >> 12) & 0xFFFFF
            if cidx >= n_counters_used:
                return ne, nesc, ERR_BAD_COUNTER, i
            if kind == 0 or ln > 0:
                # data payload counts toward the fence (piggybacked atomics
                # ride a counted write)
                ll_counts[dst, src, cidx] += 1
                eff_t[ne] = t_del[i]
                eff_kind[ne] = EFF_LL_WRITE
                eff_dst[ne] = dst
                eff_src[ne] = src
                eff_key[ne] = cidx
                eff_aux[ne] = ll_counts[dst, src, cidx]
                eff_counter[ne] = counters[dst, counter_base + cidx]
                eff_work[ne] = work_id[i]
                ne += 1
                # the new write may release deferred atomics
                np_ = ll_pend_n[dst, src, cidx]
                if np_ > 0:
                    have = ll_counts[dst, src, cidx]
                    j = 0
                    while j < ll_pend_n[dst, src, cidx]:
                        if ll_pend_x[dst, src, cidx, j] <= have:
                            counters[dst, counter_base + cidx] += ll_pend_d[dst, src, cidx, j]
                            eff_t[ne] = t_del[i]
                            eff_kind[ne] = EFF_LL_ATOMIC
                            eff_dst[ne] = dst
                            eff_src[ne] = src
                            eff_key[ne] = cidx
                            eff_aux[ne] = ll_pend_x[dst, src, cidx, j]
                            eff_counter[ne] = counters[dst, counter_base + cidx]
                            eff_work[ne] = -1
                            ne += 1
                            last = ll_pend_n[dst, src, cidx] - 1
                            ll_pend_x[dst, src, cidx, j] = ll_pend_x[dst, src, cidx, last]
                            ll_pend_d[dst, src, cidx, j] = ll_pend_d[dst, src, cidx, last]
                            ll_pend_n[dst, src, cidx] = last
                        else:
                            j += 1
            if kind == 1:
                x = operand
                delta = 1 if ln > 0 else operand
                if ll_counts[dst, src, cidx] >= x:
                    counters[dst, counter_base + cidx] += delta
                    eff_t[ne] = t_del[i]
                    eff_kind[ne] = EFF_LL_ATOMIC
                    eff_dst[ne] = dst
                    eff_src[ne] = src
                    eff_key[ne] = cidx
                    eff_aux[ne] = x
                    eff_counter[ne] = counters[dst, counter_base + cidx]
                    eff_work[ne] = work_id[i]
                    ne += 1
                else:
                    p = ll_pend_n[dst, src, cidx]
                    if p >= pmax:
                        return ne, nesc, ERR_LL_PENDING_OVERFLOW, i
                    ll_pend_x[dst, src, cidx, p] = x
                    ll_pend_d[dst, src, cidx, p] = delta
                    ll_pend_n[dst, src, cidx] = p + 1
        else:
            ch = (imm >> 2) & 0x3F
            seq = (imm >> 8) & 0xFFFF
            expected = ht_applied[dst, src, ch] % _SEQ_MOD
            delta_seq = (seq - expected) % _SEQ_MOD
            if delta_seq >= _SEQ_WINDOW:
                return ne, nesc, ERR_HT_STALE_SEQ, i
            if delta_seq == 0:
                ne = _ht_apply_py(
                    regions, counters, counter_base, i, t_del[i], imm, dst, src, work_id[i],
                    ht_applied, eff_t, eff_kind, eff_dst, eff_src, eff_key, eff_aux,
                    eff_counter, eff_work, ne, imm_arr, work_id, t_del,
                )
                # drain any consecutive deferred messages
                while True:
                    slot = ht_applied[dst, src, ch] % wmax
                    pend = ht_pend[dst, src, ch, slot]
                    if pend == 0:
                        break
                    j = pend - 1
                    ht_pend[dst, src, ch, slot] = 0
                    ne = _ht_apply_py(
                        regions, counters, counter_base, j, t_del[i], imm_arr[j], dst, src,
                        work_id[j], ht_applied, eff_t, eff_kind, eff_dst, eff_src, eff_key,
                        eff_aux, eff_counter, eff_work, ne, imm_arr, work_id, t_del,
                    )
            else:
                if delta_seq >= wmax:
                    return ne, nesc, ERR_HT_WINDOW_OVERFLOW, i
                slot = (ht_applied[dst, src, ch] + delta_seq) % wmax
                if ht_pend[dst, src, ch, slot] != 0:
                    return ne, nesc, ERR_HT_DUP_SLOT, i
                ht_pend[dst, src, ch, slot] = i + 1
    return ne, nesc, ERR_OK, -1


def _ht_apply_py(
    regions, counters, counter_base, i, t_now, imm, dst, src, wid,
    ht_applied, eff_t, eff_kind, eff_dst, eff_src, eff_key, eff_aux,
    eff_counter, eff_work, ne, imm_arr, work_id, t_del,
):
    kind = imm & 3
    ch = (imm >> 2) & 0x3F
    seq = (imm >> 8) & 0xFFFF
    operand = (imm >> 24) & 0xFF
    if kind == 0:
        eff_t[ne] = t_now
        eff_kind[ne] = EFF_HT_DATA
        eff_dst[ne] = dst
        eff_src[ne] = src
        eff_key[ne] = ch
        eff_aux[ne] = seq
        eff_counter[ne] = 0
        eff_work[ne] = wid
    else:
        role_head = (operand & 0x80) != 0
        delta = operand & 0x7F
        nch = ht_applied.shape[2]
        cidx = counter_base + (src * nch + ch) * 2 + (1 if role_head else 0)
        counters[dst, cidx] += delta
        eff_t[ne] = t_now
        eff_kind[ne] = EFF_HT_ATOMIC
        eff_dst[ne] = dst
        eff_src[ne] = src
        eff_key[ne] = ch
        eff_aux[ne] = seq
        eff_counter[ne] = counters[dst, cidx]
        eff_work[ne] = wid
    ht_applied[dst, src, ch] += 1
    return ne + 1


# ---------------------------------------------------------------------------
# numba flavor

if USE_NUMBA:
    from numba import njit

    @njit(nogil=True, cache=True)
    def _push_batch_nb(ctl, cap, lo, hi, start, want, max_spin):  # pragma: no cover
        mask = cap - 1
        tail = ctl[CTL_TAIL]
        pushed = 0
        spins = 0
        while pushed < want:
            head = ctl[CTL_HEAD]
            free = cap - (tail - head)
            if free == 0:
                spins += 1
                if spins > max_spin:
                    break
                continue
            n = want - pushed
            if n > free:
                n = free
            for i in range(n):
                s = CTL_SLOT0 + 2 * ((tail + i) & mask)
                ctl[s] = lo[start + pushed + i]
                ctl[s + 1] = hi[start + pushed + i]
            tail += n
            ctl[CTL_TAIL] = tail
            pushed += n
        return pushed

    @njit(nogil=True, cache=True)
    def _pop_batch_nb(ctl, cap, lo_out, hi_out, start, want, max_spin):  # pragma: no cover
        mask = cap - 1
        head = ctl[CTL_HEAD]
        popped = 0
        spins = 0
        while popped < want:
            tail = ctl[CTL_TAIL]
            avail = tail - head
            if avail == 0:
                spins += 1
                if spins > max_spin:
                    break
                continue
            n = want - popped
            if n > avail:
                n = avail
            for i in range(n):
                s = CTL_SLOT0 + 2 * ((head + i) & mask)
                lo_out[start + popped + i] = ctl[s]
                hi_out[start + popped + i] = ctl[s + 1]
            head += n
            ctl[CTL_HEAD] = head
            popped += n
        return popped

    _apply_deliveries_nb = njit(cache=True)(_apply_deliveries_py)
    # rebind the helper so the jitted apply loop calls the jitted helper
    _ht_apply_nb = njit(cache=True)(_ht_apply_py)
    import sys as _sys

    _this = _sys.modules[__name__]

    def _make_nb_apply():
        import inspect

        src = inspect.getsource(_apply_deliveries_py)
        src = src.replace("_apply_deliveries_py", "_apply_deliveries_gen")
        src = src.replace("_ht_apply_py", "_ht_apply_nb")
        ns = {
            "_ht_apply_nb": _ht_apply_nb,
            "EFF_LL_WRITE": EFF_LL_WRITE,
            "EFF_LL_ATOMIC": EFF_LL_ATOMIC,
            "EFF_HW_ATOMIC": EFF_HW_ATOMIC,
            "ERR_BAD_COUNTER": ERR_BAD_COUNTER,
            "ERR_LL_PENDING_OVERFLOW": ERR_LL_PENDING_OVERFLOW,
            "ERR_HT_STALE_SEQ": ERR_HT_STALE_SEQ,
            "ERR_HT_DUP_SLOT": ERR_HT_DUP_SLOT,
            "ERR_HT_WINDOW_OVERFLOW": ERR_HT_WINDOW_OVERFLOW,
            "ERR_OK": ERR_OK,
            "_SEQ_MOD": _SEQ_MOD,
            "_SEQ_WINDOW": _SEQ_WINDOW,
        }
        exec(src, ns)
        return njit(cache=True)(ns["_apply_deliveries_gen"])

    _apply_deliveries_nb = _make_nb_apply()

    push_batch = _push_batch_nb
    pop_batch = _pop_batch_nb
    apply_deliveries = _apply_deliveries_nb
else:
    push_batch = _push_batch_py
    pop_batch = _pop_batch_py
    apply_deliveries = _apply_deliveries_py
