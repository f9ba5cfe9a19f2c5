"""Compiled engine: the reference engine's event loop on flat arrays.

Every handler mirrors its counterpart in reference.py statement for
statement, including float evaluation order, so the two produce identical
traces.  Keep them in lockstep when changing either.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from ..detection import pstdev
from .channel import ALERT_FLOOD, ALERT_UNICAST, DATA, keyed_uniform_nb
from .prepare import PreparedRun
from .trace import EventKind, Trace

TIMER, DELIVER, ALERT = 0, 1, 2
DRAINED, NEED_ROOM = 0, 1

K_SEND = int(EventKind.SEND)
K_DELIVER = int(EventKind.DELIVER)
K_DROP = int(EventKind.DROP)
K_JOIN = int(EventKind.JOIN)
K_LEAVE = int(EventKind.LEAVE)
K_LEADER = int(EventKind.LEADER)
K_SUSPECT = int(EventKind.SUSPECT)
K_UNSUSPECT = int(EventKind.UNSUSPECT)
K_CONVICT = int(EventKind.CONVICT)
K_CLEAR = int(EventKind.CLEAR)
K_INCONCLUSIVE = int(EventKind.INCONCLUSIVE)
K_DEFERRED = int(EventKind.DEFERRED)
K_ALERT_SEND = int(EventKind.ALERT_SEND)
K_ALERT_FLOOD = int(EventKind.ALERT_FLOOD)
K_ALERT_ADOPT = int(EventKind.ALERT_ADOPT)
K_ALERT_DUP = int(EventKind.ALERT_DUP)
K_BLOCKED = int(EventKind.BLOCKED)

# Counter slots in the stats array.
S_SENDS, S_DELIVERIES, S_DROPS, S_PAIRS, S_ALERTS_SENT, S_ALERT_DELIVERIES, S_EVENTS = range(7)


@numba.njit(cache=True)
def _grow_f(a):
    b = np.empty(a.shape[0] * 2, a.dtype)
    b[: a.shape[0]] = a
    return b


@numba.njit(cache=True)
def _grow_i(a):
    b = np.empty(a.shape[0] * 2, a.dtype)
    b[: a.shape[0]] = a
    return b


@numba.njit(cache=True, inline="always")
def _before(t1, s1, t2, s2):
    return t1 < t2 or (t1 == t2 and s1 < s2)


@numba.njit(cache=True)
def _sift_up(ht, hs, hb, pos):
    t, sq, b = ht[pos], hs[pos], hb[pos]
    while pos > 0:
        parent = (pos - 1) >> 1
        if _before(t, sq, ht[parent], hs[parent]):
            ht[pos] = ht[parent]; hs[pos] = hs[parent]; hb[pos] = hb[parent]
            pos = parent
        else:
            break
    ht[pos] = t; hs[pos] = sq; hb[pos] = b


@numba.njit(cache=True)
def _sift_down(ht, hs, hb, size):
    # Restore heap order after the root's key grew (or was replaced).
    pos = 0
    t, sq, b = ht[0], hs[0], hb[0]
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _before(ht[right], hs[right], ht[child], hs[child]):
            child = right
        if _before(ht[child], hs[child], t, sq):
            ht[pos] = ht[child]; hs[pos] = hs[child]; hb[pos] = hb[child]
            pos = child
        else:
            break
    ht[pos] = t; hs[pos] = sq; hb[pos] = b


@numba.njit(cache=True)
def _grow_rows_f(a, rows):
    out = np.empty((rows, a.shape[1]))
    out[: a.shape[0]] = a
    return out


@numba.njit(cache=True)
def _grow_rows_i(a, rows):
    out = np.empty((rows, a.shape[1]), np.int64)
    out[: a.shape[0]] = a
    return out


@numba.njit(cache=True)
def _elect(i, n, member, tab_nR, member_count, leader):
    # Max neighbor count; ties to the smallest id.  Self counts |members|.
    best = i
    best_count = member_count[i]
    for m in range(n):
        if member[i, m]:
            c = tab_nR[i, m]
            if c > best_count or (c == best_count and m < best):
                best = m
                best_count = c
    if best != leader[i]:
        leader[i] = best
        return True
    return False


@numba.njit(cache=True)
def _advance(
    n, nbr_ptr, nbr_idx, send_times, sent, honest,
    cthresh, cons_thresh, loss, delay_mean, delay_jitter, duration, detection, full, key,
    own, has_rec, tab_iR, tab_aR, tab_nR, member, member_count, sum_aw, sum_w, leader,
    suspect, strikes, known, blocked_logged, first_conv, stats,
    m_origin, m_iR, m_aR, m_nR, a_att, a_read, a_det,
    ht, hs, hb, node_k, b_t, b_s, b_g, b_r, b_kind, b_len, b_pos, free,
    tt, tn, tk, tp, ta, tb, tc, parts,
    p_t, p_k, p_g, p_r, p_s, p_j, l_t, l_n, l_k, l_p, l_a, l_b, l_c, ctr,
):
    """Run events until the queue drains or a buffer might overflow.

    Growing arrays inside the event loop defeats the compiler's hoisting, so
    the loop stops with NEED_ROOM instead and the caller grows and resumes.
    """
    nan = np.nan
    k_max = send_times.shape[1]
    log_room = 4 * n + 8
    hsize, seq, n_msgs, n_alerts, nfree, nt = ctr[0], ctr[1], ctr[2], ctr[3], ctr[4], ctr[5]
    status = DRAINED
    while hsize > 0:
        if (nt + log_room > tt.shape[0] or hsize + 2 > ht.shape[0]
                or nfree == 0 or n_alerts == a_att.shape[0]):
            status = NEED_ROOM
            break
        now = ht[0]
        top = hb[0]
        exhausted = True
        if top < 0:
            kind = TIMER
            target = -1 - top
            ref = node_k[target]
        else:
            pos = b_pos[top]
            kind = b_kind[top]
            target = b_g[top, pos]
            ref = b_r[top, pos]
            pos += 1
            if pos < b_len[top]:
                b_pos[top] = pos
                ht[0] = b_t[top, pos]; hs[0] = b_s[top, pos]
                _sift_down(ht, hs, hb, hsize)
                exhausted = False
            else:
                free[nfree] = top
                nfree += 1
        if exhausted:
            hsize -= 1
            if hsize > 0:
                ht[0] = ht[hsize]; hs[0] = hs[hsize]; hb[0] = hb[hsize]
                _sift_down(ht, hs, hb, hsize)
        if now > duration:
            hsize = 0
            break
        stats[S_EVENTS] += 1
        npush = 0
        nlog = 0

        if kind == TIMER:
            i = target
            kk = ref
            own[i] = sent[i, kk]
            if _elect(i, n, member, tab_nR, member_count, leader):
                l_t[nlog] = now; l_n[nlog] = i; l_k[nlog] = K_LEADER; l_p[nlog] = leader[i]
                l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
            # resync running sums, then the outgoing aggregate, both in id order
            sw = 0.0
            w = 0
            agg = own[i]
            wt = 1
            for m in range(n):
                if member[i, m]:
                    sw += tab_aR[i, m] * tab_nR[i, m]
                    w += tab_nR[i, m]
                    agg += tab_aR[i, m] * tab_nR[i, m]
                    wt += tab_nR[i, m]
            sum_aw[i] = sw
            sum_w[i] = w
            agg = agg / wt
            mref = n_msgs
            m_origin[mref] = i; m_iR[mref] = own[i]; m_aR[mref] = agg; m_nR[mref] = member_count[i]
            n_msgs += 1
            stats[S_SENDS] += 1
            if full:
                l_t[nlog] = now; l_n[nlog] = i; l_k[nlog] = K_SEND; l_p[nlog] = -1
                l_a[nlog] = own[i]; l_b[nlog] = agg; l_c[nlog] = member_count[i]; nlog += 1
            for q in range(nbr_ptr[i], nbr_ptr[i + 1]):
                r = nbr_idx[q]
                stats[S_PAIRS] += 1
                if keyed_uniform_nb(key, DATA, i, kk, r, 0) < loss:
                    stats[S_DROPS] += 1
                    if full:
                        l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_DROP; l_p[nlog] = i
                        l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                    continue
                stats[S_DELIVERIES] += 1
                u = keyed_uniform_nb(key, DATA, i, kk, r, 1)
                p_t[npush] = now + (delay_mean + (2.0 * u - 1.0) * delay_jitter)
                p_k[npush] = DELIVER; p_g[npush] = r; p_r[npush] = mref; npush += 1
            if kk + 1 < k_max:
                nxt = send_times[i, kk + 1]
                if nxt <= duration:
                    p_t[npush] = nxt; p_k[npush] = TIMER; p_g[npush] = i; p_r[npush] = kk + 1; npush += 1

        elif kind == DELIVER:
            r = target
            o = m_origin[ref]
            iR = m_iR[ref]
            aR = m_aR[ref]
            nR = m_nR[ref]
            if full:
                l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_DELIVER; l_p[nlog] = o
                l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
            guarded = detection and honest[r]
            done = False
            if guarded and known[r, o]:
                if full or not blocked_logged[r, o]:
                    blocked_logged[r, o] = True
                    l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_BLOCKED; l_p[nlog] = o
                    l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                done = True
            if not done and math.isnan(own[r]):
                has_rec[r, o] = True
                tab_iR[r, o] = iR; tab_aR[r, o] = aR; tab_nR[r, o] = nR
                done = True
            if not done:
                # store (overwrite) the record, keeping running sums in step
                if member[r, o]:
                    sum_aw[r] -= tab_aR[r, o] * tab_nR[r, o]
                    sum_w[r] -= tab_nR[r, o]
                    tab_iR[r, o] = iR; tab_aR[r, o] = aR; tab_nR[r, o] = nR
                    sum_aw[r] += aR * nR
                    sum_w[r] += nR
                else:
                    tab_iR[r, o] = iR; tab_aR[r, o] = aR; tab_nR[r, o] = nR
                has_rec[r, o] = True
                local = (own[r] + sum_aw[r]) / (1 + sum_w[r])
                similar = abs(iR - local) < cthresh and abs(own[r] - aR) < cthresh
                changed = False
                if similar:
                    if not member[r, o]:
                        member[r, o] = True
                        member_count[r] += 1
                        sum_aw[r] += aR * nR
                        sum_w[r] += nR
                        changed = True
                        l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_JOIN; l_p[nlog] = o
                        l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                else:
                    if member[r, o]:
                        member[r, o] = False
                        member_count[r] -= 1
                        sum_aw[r] -= aR * nR
                        sum_w[r] -= nR
                        changed = True
                        l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_LEAVE; l_p[nlog] = o
                        l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                if changed:
                    if _elect(r, n, member, tab_nR, member_count, leader):
                        l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_LEADER; l_p[nlog] = leader[r]
                        l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                if guarded:
                    if similar:
                        if suspect[r, o]:
                            suspect[r, o] = False
                            strikes[r, o] = 0
                            l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_UNSUSPECT; l_p[nlog] = o
                            l_a[nlog] = iR; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                    elif not suspect[r, o]:
                        suspect[r, o] = True
                        strikes[r, o] = 1
                        l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_SUSPECT; l_p[nlog] = o
                        l_a[nlog] = iR; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                    else:
                        strikes[r, o] += 1
                        parts[0] = own[r]
                        np_ = 1
                        for m in range(n):
                            if member[r, m]:
                                parts[np_] = tab_iR[r, m]
                                np_ += 1
                        if np_ < 2:
                            l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_DEFERRED; l_p[nlog] = o
                            l_a[nlog] = iR; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                        else:
                            base = pstdev(parts[:np_])
                            parts[np_] = iR
                            joint = pstdev(parts[: np_ + 1])
                            if base > cons_thresh:
                                vk = K_INCONCLUSIVE
                            elif joint > cons_thresh:
                                vk = K_CONVICT
                            else:
                                vk = K_CLEAR
                            l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = vk; l_p[nlog] = o
                            l_a[nlog] = iR; l_b[nlog] = base; l_c[nlog] = joint; nlog += 1
                            if vk == K_CLEAR:
                                suspect[r, o] = False
                                strikes[r, o] = 0
                            elif vk == K_CONVICT:
                                suspect[r, o] = False
                                strikes[r, o] = 0
                                known[r, o] = True
                                if now < first_conv[o]:
                                    first_conv[o] = now
                                aref = n_alerts
                                a_att[aref] = o; a_read[aref] = iR; a_det[aref] = r
                                n_alerts += 1
                                ld = leader[r]
                                if ld == r:
                                    l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_ALERT_FLOOD; l_p[nlog] = o
                                    l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                                    for q in range(nbr_ptr[r], nbr_ptr[r + 1]):
                                        y = nbr_idx[q]
                                        stats[S_ALERTS_SENT] += 1
                                        if keyed_uniform_nb(key, ALERT_FLOOD, r, o, y, 0) < loss:
                                            continue
                                        u = keyed_uniform_nb(key, ALERT_FLOOD, r, o, y, 1)
                                        p_t[npush] = now + (delay_mean + (2.0 * u - 1.0) * delay_jitter)
                                        p_k[npush] = ALERT; p_g[npush] = y; p_r[npush] = aref; npush += 1
                                else:
                                    l_t[nlog] = now; l_n[nlog] = r; l_k[nlog] = K_ALERT_SEND; l_p[nlog] = o
                                    l_a[nlog] = ld; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                                    stats[S_ALERTS_SENT] += 1
                                    if not keyed_uniform_nb(key, ALERT_UNICAST, r, o, ld, 0) < loss:
                                        u = keyed_uniform_nb(key, ALERT_UNICAST, r, o, ld, 1)
                                        p_t[npush] = now + (delay_mean + (2.0 * u - 1.0) * delay_jitter)
                                        p_k[npush] = ALERT; p_g[npush] = ld; p_r[npush] = aref; npush += 1

        else:  # ALERT
            x = target
            att = a_att[ref]
            if detection and honest[x] and att != x:
                stats[S_ALERT_DELIVERIES] += 1
                if known[x, att]:
                    if full:
                        l_t[nlog] = now; l_n[nlog] = x; l_k[nlog] = K_ALERT_DUP; l_p[nlog] = att
                        l_a[nlog] = a_det[ref]; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                else:
                    known[x, att] = True
                    suspect[x, att] = False
                    strikes[x, att] = 0
                    l_t[nlog] = now; l_n[nlog] = x; l_k[nlog] = K_ALERT_ADOPT; l_p[nlog] = att
                    l_a[nlog] = a_det[ref]; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                    if now < first_conv[att]:
                        first_conv[att] = now
                    if member[x, att]:
                        member[x, att] = False
                        member_count[x] -= 1
                        sum_aw[x] -= tab_aR[x, att] * tab_nR[x, att]
                        sum_w[x] -= tab_nR[x, att]
                        l_t[nlog] = now; l_n[nlog] = x; l_k[nlog] = K_LEAVE; l_p[nlog] = att
                        l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                        if _elect(x, n, member, tab_nR, member_count, leader):
                            l_t[nlog] = now; l_n[nlog] = x; l_k[nlog] = K_LEADER; l_p[nlog] = leader[x]
                            l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                    if leader[x] == x:
                        l_t[nlog] = now; l_n[nlog] = x; l_k[nlog] = K_ALERT_FLOOD; l_p[nlog] = att
                        l_a[nlog] = nan; l_b[nlog] = nan; l_c[nlog] = nan; nlog += 1
                        for q in range(nbr_ptr[x], nbr_ptr[x + 1]):
                            y = nbr_idx[q]
                            stats[S_ALERTS_SENT] += 1
                            if keyed_uniform_nb(key, ALERT_FLOOD, x, att, y, 0) < loss:
                                continue
                            u = keyed_uniform_nb(key, ALERT_FLOOD, x, att, y, 1)
                            p_t[npush] = now + (delay_mean + (2.0 * u - 1.0) * delay_jitter)
                            p_k[npush] = ALERT; p_g[npush] = y; p_r[npush] = ref; npush += 1

        # flush staged log rows and pushes, in order
        for j in range(nlog):
            tt[nt] = l_t[j]; tn[nt] = l_n[j]; tk[nt] = l_k[j]; tp[nt] = l_p[j]
            ta[nt] = l_a[j]; tb[nt] = l_b[j]; tc[nt] = l_c[j]
            nt += 1
        if npush == 0:
            continue
        # every handler stages at most one message batch plus one timer
        nb = 0
        for j in range(npush):
            if p_k[j] == TIMER:
                node_k[p_g[j]] = p_r[j]
                ht[hsize] = p_t[j]; hs[hsize] = seq; hb[hsize] = -1 - p_g[j]
                _sift_up(ht, hs, hb, hsize)
                hsize += 1
            else:
                p_s[j] = seq
                p_j[nb] = j
                nb += 1
            seq += 1
        if nb > 0:
            nfree -= 1
            slot = free[nfree]
            # insertion sort on time; it is stable, so equal times stay in seq order
            for z in range(nb):
                j = p_j[z]
                tj = p_t[j]
                y = z
                while y > 0 and b_t[slot, y - 1] > tj:
                    b_t[slot, y] = b_t[slot, y - 1]; b_s[slot, y] = b_s[slot, y - 1]
                    b_g[slot, y] = b_g[slot, y - 1]; b_r[slot, y] = b_r[slot, y - 1]
                    y -= 1
                b_t[slot, y] = tj; b_s[slot, y] = p_s[j]; b_g[slot, y] = p_g[j]; b_r[slot, y] = p_r[j]
            b_kind[slot] = p_k[p_j[0]]
            b_len[slot] = nb
            b_pos[slot] = 0
            ht[hsize] = b_t[slot, 0]; hs[hsize] = b_s[slot, 0]; hb[hsize] = slot
            _sift_up(ht, hs, hb, hsize)
            hsize += 1


    ctr[0] = hsize; ctr[1] = seq; ctr[2] = n_msgs; ctr[3] = n_alerts; ctr[4] = nfree; ctr[5] = nt
    return status


@numba.njit(cache=True)
def _grow_slots(b_t, b_s, b_g, b_r, b_kind, b_len, b_pos, free, ctr):
    old = b_kind.shape[0]
    cap = 2 * old
    b_t = _grow_rows_f(b_t, cap); b_s = _grow_rows_i(b_s, cap)
    b_g = _grow_rows_i(b_g, cap); b_r = _grow_rows_i(b_r, cap)
    b_kind = _grow_i(b_kind); b_len = _grow_i(b_len); b_pos = _grow_i(b_pos)
    free = _grow_i(free)
    nfree = ctr[4]
    for z in range(cap - 1, old - 1, -1):
        free[nfree] = z
        nfree += 1
    ctr[4] = nfree
    return b_t, b_s, b_g, b_r, b_kind, b_len, b_pos, free


@numba.njit(cache=True)
def _kernel(
    n, nbr_ptr, nbr_idx, send_times, sent, honest,
    cthresh, cons_thresh, loss, delay_mean, delay_jitter, duration,
    detection, full, key,
):
    nan = np.nan
    k_max = send_times.shape[1]

    # node state
    own = np.full(n, nan)
    has_rec = np.zeros((n, n), np.bool_)
    tab_iR = np.zeros((n, n))
    tab_aR = np.zeros((n, n))
    tab_nR = np.zeros((n, n), np.int64)
    member = np.zeros((n, n), np.bool_)
    member_count = np.zeros(n, np.int64)
    sum_aw = np.zeros(n)
    sum_w = np.zeros(n, np.int64)
    leader = np.full(n, -1, np.int64)
    suspect = np.zeros((n, n), np.bool_)
    strikes = np.zeros((n, n), np.int64)
    known = np.zeros((n, n), np.bool_)
    blocked_logged = np.zeros((n, n), np.bool_)
    first_conv = np.full(n, np.inf)
    stats = np.zeros(7, np.int64)

    # message stores; every node sends at most k_max times
    cap_m = max(16, n * k_max)
    m_origin = np.empty(cap_m, np.int64)
    m_iR = np.empty(cap_m)
    m_aR = np.empty(cap_m)
    m_nR = np.empty(cap_m, np.int64)
    a_att = np.empty(64, np.int64)
    a_read = np.empty(64)
    a_det = np.empty(64, np.int64)

    # Event queue.  Heap entries are either a node's next send tick
    # (hb = -1 - node, send index in node_k) or a batch slot holding the
    # deliveries of one broadcast, sorted by (time, seq).  The heap is keyed
    # by each batch's head, so pops come out in global (time, seq) order
    # while the heap itself stays about n entries deep.
    ht = np.empty(2 * n + 16)
    hs = np.empty(2 * n + 16, np.int64)
    hb = np.empty(2 * n + 16, np.int64)
    node_k = np.zeros(n, np.int64)
    width = max(n, 1)
    b_t = np.empty((16, width))
    b_s = np.empty((16, width), np.int64)
    b_g = np.empty((16, width), np.int64)
    b_r = np.empty((16, width), np.int64)
    b_kind = np.empty(16, np.int64)
    b_len = np.zeros(16, np.int64)
    b_pos = np.zeros(16, np.int64)
    free = np.arange(15, -1, -1).astype(np.int64)

    cap_t = 4096 + 8 * n
    tt = np.empty(cap_t)
    tn = np.empty(cap_t, np.int64)
    tk = np.empty(cap_t, np.int64)
    tp = np.empty(cap_t, np.int64)
    ta = np.empty(cap_t)
    tb = np.empty(cap_t)
    tc = np.empty(cap_t)

    parts = np.empty(n + 1)

    hsize = 0
    seq = 0
    if k_max > 0:
        for i in range(n):
            if send_times[i, 0] <= duration:
                ht[hsize] = send_times[i, 0]; hs[hsize] = seq; hb[hsize] = -1 - i
                _sift_up(ht, hs, hb, hsize)
                hsize += 1
                seq += 1

    # Pending pushes/logs are staged in these small buffers by each handler
    # and flushed in order.  One handler logs at most a drop per neighbor
    # plus a handful of rows.
    p_t = np.empty(n + 2)
    p_k = np.empty(n + 2, np.int64)
    p_g = np.empty(n + 2, np.int64)
    p_r = np.empty(n + 2, np.int64)
    p_s = np.empty(n + 2, np.int64)
    p_j = np.empty(n + 2, np.int64)
    l_t = np.empty(4 * n + 8)
    l_n = np.empty(4 * n + 8, np.int64)
    l_k = np.empty(4 * n + 8, np.int64)
    l_p = np.empty(4 * n + 8, np.int64)
    l_a = np.empty(4 * n + 8)
    l_b = np.empty(4 * n + 8)
    l_c = np.empty(4 * n + 8)

    # hsize, seq, n_msgs, n_alerts, nfree, nt
    ctr = np.array([hsize, seq, 0, 0, 16, 0], np.int64)
    while True:
        status = _advance(
            n, nbr_ptr, nbr_idx, send_times, sent, honest,
    cthresh, cons_thresh, loss, delay_mean, delay_jitter, duration, detection, full, key,
    own, has_rec, tab_iR, tab_aR, tab_nR, member, member_count, sum_aw, sum_w, leader,
    suspect, strikes, known, blocked_logged, first_conv, stats,
    m_origin, m_iR, m_aR, m_nR, a_att, a_read, a_det,
    ht, hs, hb, node_k, b_t, b_s, b_g, b_r, b_kind, b_len, b_pos, free,
    tt, tn, tk, tp, ta, tb, tc, parts,
    p_t, p_k, p_g, p_r, p_s, p_j, l_t, l_n, l_k, l_p, l_a, l_b, l_c, ctr,
        )
        if status == DRAINED:
            break
        if ctr[5] + 4 * n + 8 > tt.shape[0]:
            tt = _grow_f(tt); tn = _grow_i(tn); tk = _grow_i(tk); tp = _grow_i(tp)
            ta = _grow_f(ta); tb = _grow_f(tb); tc = _grow_f(tc)
        if ctr[0] + 2 > ht.shape[0]:
            ht = _grow_f(ht); hs = _grow_i(hs); hb = _grow_i(hb)
        if ctr[4] == 0:
            b_t, b_s, b_g, b_r, b_kind, b_len, b_pos, free = _grow_slots(
                b_t, b_s, b_g, b_r, b_kind, b_len, b_pos, free, ctr
            )
        if ctr[3] == a_att.shape[0]:
            a_att = _grow_i(a_att); a_read = _grow_f(a_read); a_det = _grow_i(a_det)

    nt = ctr[5]
    return (
        tt[:nt].copy(), tn[:nt].copy(), tk[:nt].copy(), tp[:nt].copy(),
        ta[:nt].copy(), tb[:nt].copy(), tc[:nt].copy(),
        member, leader, known, suspect, first_conv, stats,
    )


def run_fast(prep: PreparedRun):
    from .reference import RunStats
    from .run import FinalState, RunResult

    cfg = prep.config
    out = _kernel(
        prep.n_nodes,
        prep.nbr_ptr,
        prep.nbr_idx,
        np.ascontiguousarray(prep.send_times),
        np.ascontiguousarray(prep.sent_readings),
        prep.honest_mask(),
        float(cfg.cthresh),
        float(cfg.consensus_threshold),
        float(cfg.loss_probability),
        float(cfg.delay_mean_s),
        float(cfg.delay_jitter_s),
        float(cfg.duration_s),
        bool(cfg.detection_enabled),
        cfg.trace_level == "full",
        np.uint64(prep.channel_key),
    )
    tt, tn, tk, tp, ta, tb, tc, member, leader, known, suspect, first_conv, stats = out
    trace = Trace.from_arrays(prep.meta(), tt, tn, tk, tp, ta, tb, tc)
    final = FinalState(
        members=[frozenset(np.nonzero(row)[0].tolist()) for row in member],
        leaders=leader,
        attackers=[frozenset(np.nonzero(row)[0].tolist()) for row in known],
        suspects=[frozenset(np.nonzero(row)[0].tolist()) for row in suspect],
    )
    rs = RunStats(*(int(v) for v in stats))
    return RunResult(prep=prep, trace=trace, final=final, first_conviction=first_conv, stats=rs)
