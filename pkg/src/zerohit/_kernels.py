"""Hot loops for the random-walk hitting-time simulation, compiled with
numba.

The walk uses exact Gaussian increments with an adaptive step size that
grows quadratically with distance from the barrier, plus an intra-step
bridge crossing correction: a step from a > 0 to b > 0 of length dt is
declared to have crossed zero with probability exp(-2ab/dt).  The same
correction is applied to running-maximum level exceedance.  Paths are
summarized online into a bounded "skeleton" (decimated (t, w) pairs) so
memory stays O(1) even for very long excursions.
"""

from __future__ import annotations

import math

import numba
import numpy as np

BUF_SIZE = 16384
SKEL_CAP = 4096


@numba.njit(nogil=True, cache=True)
def walk_skeleton(gen, buf, pos, x, step0, growth2, cap2, t_cap, bridge_on,
                  skel_t, skel_w, levels, level_hit):
    """One walk from x to its first zero crossing.

    buf/pos: shared buffer of standard normals (refilled in place from gen).
    levels: ascending thresholds for running-maximum exceedance; level_hit
    is overwritten with 0/1 flags.  Exceedance uses the bridge correction
    within steps; on truncation the surviving levels are completed exactly
    with the hit-before-zero probability w/level (one shared uniform keeps
    the exceedance events nested).

    Returns (tau, truncated, n_skeleton, keep_stride, pos).
    """
    w = x
    t = 0.0
    sq_step0 = math.sqrt(step0)
    sq_grow = math.sqrt(growth2)
    sq_cap = math.sqrt(cap2)
    inv_x = 1.0 / x
    cap = skel_t.shape[0]
    m = 0
    keep = 1
    istep = 0
    nbuf = buf.shape[0]
    nlev = levels.shape[0]
    li = 0
    for j in range(nlev):
        if levels[j] <= x:
            level_hit[j] = 1
            li = j + 1
        else:
            level_hit[j] = 0
    while True:
        s = w * inv_x * sq_grow
        if s < 1.0:
            s = 1.0
        elif s > sq_cap:
            s = sq_cap
        sqdt = sq_step0 * s * x
        dt = sqdt * sqdt
        if pos == nbuf:
            buf[:] = gen.standard_normal(nbuf)
            pos = 0
        b = w + sqdt * buf[pos]
        pos += 1
        istep += 1
        # running-max levels, lowest unhit first (events are nested)
        while li < nlev:
            lv = levels[li]
            if b >= lv:
                level_hit[li] = 1
                li += 1
                continue
            e = 2.0 * (lv - w) * (lv - b) / dt
            if e < 30.0 and gen.random() < math.exp(-e):
                level_hit[li] = 1
                li += 1
                continue
            break
        if b <= 0.0:
            return t + dt * w / (w - b), False, m, keep, pos
        if bridge_on:
            e = 2.0 * w * b / dt
            if e < 30.0 and gen.random() < math.exp(-e):
                return t + 0.5 * dt, False, m, keep, pos
        w = b
        t += dt
        if istep % keep == 0:
            if m == cap:
                half = cap // 2
                for j in range(half):
                    skel_t[j] = skel_t[2 * j + 1]
                    skel_w[j] = skel_w[2 * j + 1]
                m = half
                keep *= 2
            skel_t[m] = t
            skel_w[m] = w
            m += 1
        if t >= t_cap:
            if li < nlev:
                uu = gen.random()
                for j in range(li, nlev):
                    if uu * levels[j] < w:
                        level_hit[j] = 1
            return t_cap, True, m, keep, pos


@numba.njit(nogil=True, cache=True)
def readout(x, tau, skel_t, skel_w, m, times, out):
    """Linear interpolation of the walk skeleton at increasing times, with
    the endpoints (0, x) and (tau, 0) pinned exactly."""
    j = 0
    for i in range(times.shape[0]):
        s = times[i]
        if s <= 0.0:
            out[i] = x
            continue
        if s >= tau:
            out[i] = 0.0
            continue
        while j < m and skel_t[j] < s:
            j += 1
        if j == 0:
            t0, w0 = 0.0, x
        else:
            t0, w0 = skel_t[j - 1], skel_w[j - 1]
        if j < m:
            t1, w1 = skel_t[j], skel_w[j]
        else:
            t1, w1 = tau, 0.0
        if t1 > t0:
            out[i] = w0 + (w1 - w0) * (s - t0) / (t1 - t0)
        else:
            out[i] = w0


@numba.njit(nogil=True, cache=True)
def batch_walk(gen, x, step0, growth2, cap2, t_cap, bridge_on,
               us, levels, taus, trunc, vals, level_hits):
    """Run len(taus) independent walks off one generator.

    For each path: stores the hitting time (taus/trunc), the path value at
    the fractions us of the hitting time (vals row; NaN when truncated),
    and the running-max level flags (level_hits row).
    """
    n = taus.shape[0]
    nu = us.shape[0]
    skel_t = np.empty(SKEL_CAP)
    skel_w = np.empty(SKEL_CAP)
    times = np.empty(nu)
    buf = gen.standard_normal(BUF_SIZE)
    pos = 0
    for i in range(n):
        tau, tr, m, keep, pos = walk_skeleton(
            gen, buf, pos, x, step0, growth2, cap2, t_cap, bridge_on,
            skel_t, skel_w, levels, level_hits[i])
        taus[i] = tau
        trunc[i] = tr
        if tr:
            for k in range(nu):
                vals[i, k] = np.nan
        else:
            for k in range(nu):
                times[k] = us[k] * tau
            readout(x, tau, skel_t, skel_w, m, times, vals[i])
    return pos


@numba.njit(nogil=True, cache=True)
def batch_dual_tau(gen, x, step0, growth2, cap2, t_cap,
                   taus_c, trunc_c, taus_u, trunc_u):
    """Coupled hitting-time estimates with and without the bridge
    correction, driven by the same increments.

    The two walks coincide until the first intra-step bridge event, which
    terminates only the corrected estimate; the uncorrected walk continues
    on fresh increments until a sign change (or truncation).
    """
    n = taus_c.shape[0]
    sq_step0 = math.sqrt(step0)
    sq_grow = math.sqrt(growth2)
    sq_cap = math.sqrt(cap2)
    inv_x = 1.0 / x
    buf = gen.standard_normal(BUF_SIZE)
    pos = 0
    for i in range(n):
        w = x
        t = 0.0
        tc = 0.0
        done_c = False
        trc = False
        tru = False
        tu = 0.0
        while True:
            s = w * inv_x * sq_grow
            if s < 1.0:
                s = 1.0
            elif s > sq_cap:
                s = sq_cap
            sqdt = sq_step0 * s * x
            dt = sqdt * sqdt
            if pos == BUF_SIZE:
                buf[:] = gen.standard_normal(BUF_SIZE)
                pos = 0
            b = w + sqdt * buf[pos]
            pos += 1
            if b <= 0.0:
                tu = t + dt * w / (w - b)
                if not done_c:
                    tc = tu
                break
            if not done_c:
                e = 2.0 * w * b / dt
                if e < 30.0 and gen.random() < math.exp(-e):
                    tc = t + 0.5 * dt
                    done_c = True
            w = b
            t += dt
            if t >= t_cap:
                tu = t_cap
                tru = True
                if not done_c:
                    tc = t_cap
                    trc = True
                break
        taus_c[i] = tc
        trunc_c[i] = trc
        taus_u[i] = tu
        trunc_u[i] = tru
    return pos
