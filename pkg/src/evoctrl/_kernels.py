"""numba kernels: the hot interpreter/physics loop.

Every function here mirrors the reference semantics in ``interpreter`` and
``cartpole`` exactly — same instruction effects, same reduction order, same
splitmix64 stream, same sanitization — so results agree with the pure-Python
backend to floating round-off. Keep the two in sync when touching either.
"""

import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)

U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
U64_MIX2 = np.uint64(0x94D049BB133111EB)
U64_30 = np.uint64(30)
U64_27 = np.uint64(27)
U64_31 = np.uint64(31)
U64_11 = np.uint64(11)
U53 = 2.0 ** -53
TWO_PI = 2.0 * math.pi
DEG = 180.0 / math.pi


@njit(**_JIT)
def _rng_u64(state):
    state[0] = state[0] + U64_GOLDEN
    z = state[0]
    z = (z ^ (z >> U64_30)) * U64_MIX1
    z = (z ^ (z >> U64_27)) * U64_MIX2
    return z ^ (z >> U64_31)


@njit(**_JIT)
def _rng_u01(state):
    return np.float64(_rng_u64(state) >> U64_11) * U53


@njit(**_JIT)
def _rng_normal(state, mean, std):
    u1 = (np.float64(_rng_u64(state) >> U64_11) + 1.0) * U53
    u2 = np.float64(_rng_u64(state) >> U64_11) * U53
    return mean + std * math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)


@njit(**_JIT)
def _fin(x):
    if math.isfinite(x):
        return x
    return 0.0


@njit(**_JIT)
def _wrap(i, n):
    return i % n


@njit(**_JIT)
def _exec_block(lo, hi, ops, ins, outs, out_bank, consts, lidx, costs,
                S, V, M, IDX, tracker, vd, md, vtmp, mtmp, rstate):
    """Run a straight-line block (no calls) on one memory bank set.

    Returns accumulated FLOPs. ``tracker`` records the last written slot per
    bank (scalar, vector, index)."""
    flops = 0
    nmin = vd if vd < md else md
    for pc in range(lo, hi):
        k = ops[pc]
        o = outs[pc, 0]
        if k == 1:
            pass
        elif k == 2:
            S[o] = _fin(S[ins[pc, 0]] + S[ins[pc, 1]])
        elif k == 3:
            S[o] = _fin(S[ins[pc, 0]] - S[ins[pc, 1]])
        elif k == 4:
            S[o] = _fin(S[ins[pc, 0]] * S[ins[pc, 1]])
        elif k == 5:
            y = S[ins[pc, 1]]
            S[o] = _fin(S[ins[pc, 0]] / y) if y != 0.0 else 0.0
        elif k == 6:
            S[o] = _fin(abs(S[ins[pc, 0]]))
        elif k == 7:
            x = S[ins[pc, 0]]
            S[o] = _fin(1.0 / x) if x != 0.0 else 0.0
        elif k == 8:
            S[o] = _fin(math.sin(S[ins[pc, 0]]))
        elif k == 9:
            S[o] = _fin(math.cos(S[ins[pc, 0]]))
        elif k == 10:
            S[o] = _fin(math.tan(S[ins[pc, 0]]))
        elif k == 11:
            x = S[ins[pc, 0]]
            S[o] = math.asin(x) if -1.0 <= x <= 1.0 else 0.0
        elif k == 12:
            x = S[ins[pc, 0]]
            S[o] = math.acos(x) if -1.0 <= x <= 1.0 else 0.0
        elif k == 13:
            S[o] = _fin(math.atan(S[ins[pc, 0]]))
        elif k == 14:
            S[o] = _fin(math.exp(S[ins[pc, 0]]))
        elif k == 15:
            x = S[ins[pc, 0]]
            S[o] = _fin(math.log(x)) if x > 0.0 else 0.0
        elif k == 16:
            S[o] = 1.0 if S[ins[pc, 0]] > 0.0 else 0.0
        elif k == 17:
            ia = ins[pc, 0]
            for i in range(vd):
                V[o, i] = 1.0 if V[ia, i] > 0.0 else 0.0
        elif k == 18:
            ia = ins[pc, 0]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = 1.0 if M[ia, i, j] > 0.0 else 0.0
        elif k == 19:
            x = S[ins[pc, 0]]
            ib = ins[pc, 1]
            for i in range(vd):
                V[o, i] = _fin(x * V[ib, i])
        elif k == 20:
            x = S[ins[pc, 0]]
            for i in range(vd):
                V[o, i] = x
        elif k == 21:
            ia = ins[pc, 0]
            for i in range(vd):
                b = V[ia, i]
                V[o, i] = _fin(1.0 / b) if b != 0.0 else 0.0
        elif k == 22:
            ia = ins[pc, 0]
            acc = 0.0
            for i in range(vd):
                acc += V[ia, i] * V[ia, i]
            S[o] = _fin(math.sqrt(acc))
        elif k == 23:
            ia = ins[pc, 0]
            for i in range(vd):
                V[o, i] = abs(V[ia, i])
        elif k == 24:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(vd):
                V[o, i] = _fin(V[ia, i] + V[ib, i])
        elif k == 25:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(vd):
                V[o, i] = _fin(V[ia, i] - V[ib, i])
        elif k == 26:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(vd):
                V[o, i] = _fin(V[ia, i] * V[ib, i])
        elif k == 27:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(vd):
                b = V[ib, i]
                V[o, i] = _fin(V[ia, i] / b) if b != 0.0 else 0.0
        elif k == 28:
            ia, ib = ins[pc, 0], ins[pc, 1]
            acc = 0.0
            for i in range(vd):
                acc += V[ia, i] * V[ib, i]
            S[o] = _fin(acc)
        elif k == 29:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = 0.0
            for i in range(nmin):
                for j in range(nmin):
                    M[o, i, j] = _fin(V[ia, i] * V[ib, j])
        elif k == 30:
            x = S[ins[pc, 0]]
            ib = ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = _fin(x * M[ib, i, j])
        elif k == 31:
            ia = ins[pc, 0]
            for i in range(md):
                for j in range(md):
                    b = M[ia, i, j]
                    M[o, i, j] = _fin(1.0 / b) if b != 0.0 else 0.0
        elif k == 32:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(nmin):
                acc = 0.0
                for j in range(nmin):
                    acc += M[ia, i, j] * V[ib, j]
                vtmp[i] = acc
            for i in range(vd):
                V[o, i] = 0.0
            for i in range(nmin):
                V[o, i] = _fin(vtmp[i])
        elif k == 33:
            ia = ins[pc, 0]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = 0.0
            for i in range(nmin):
                for j in range(md):
                    M[o, i, j] = V[ia, i]
        elif k == 34:
            ia = ins[pc, 0]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = 0.0
            for i in range(md):
                for j in range(nmin):
                    M[o, i, j] = V[ia, j]
        elif k == 35:
            ia = ins[pc, 0]
            acc = 0.0
            for i in range(md):
                for j in range(md):
                    acc += M[ia, i, j] * M[ia, i, j]
            S[o] = _fin(math.sqrt(acc))
        elif k == 36:
            ia = ins[pc, 0]
            for i in range(vd):
                V[o, i] = 0.0
            for i in range(nmin):
                acc = 0.0
                for j in range(md):
                    acc += M[ia, i, j] * M[ia, i, j]
                V[o, i] = _fin(math.sqrt(acc))
        elif k == 37:
            ia = ins[pc, 0]
            for i in range(vd):
                V[o, i] = 0.0
            for j in range(nmin):
                acc = 0.0
                for i in range(md):
                    acc += M[ia, i, j] * M[ia, i, j]
                V[o, j] = _fin(math.sqrt(acc))
        elif k == 38:
            ia = ins[pc, 0]
            for i in range(md):
                for j in range(md):
                    mtmp[i, j] = M[ia, j, i]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = mtmp[i, j]
        elif k == 39:
            ia = ins[pc, 0]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = abs(M[ia, i, j])
        elif k == 40:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = _fin(M[ia, i, j] + M[ib, i, j])
        elif k == 41:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = _fin(M[ia, i, j] - M[ib, i, j])
        elif k == 42:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = _fin(M[ia, i, j] * M[ib, i, j])
        elif k == 43:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    b = M[ib, i, j]
                    M[o, i, j] = _fin(M[ia, i, j] / b) if b != 0.0 else 0.0
        elif k == 44:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    acc = 0.0
                    for kk in range(md):
                        acc += M[ia, i, kk] * M[ib, kk, j]
                    mtmp[i, j] = acc
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = _fin(mtmp[i, j])
        elif k == 45:
            S[o] = min(S[ins[pc, 0]], S[ins[pc, 1]])
        elif k == 46:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(vd):
                V[o, i] = min(V[ia, i], V[ib, i])
        elif k == 47:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = min(M[ia, i, j], M[ib, i, j])
        elif k == 48:
            S[o] = max(S[ins[pc, 0]], S[ins[pc, 1]])
        elif k == 49:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(vd):
                V[o, i] = max(V[ia, i], V[ib, i])
        elif k == 50:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = max(M[ia, i, j], M[ib, i, j])
        elif k == 51:
            ia = ins[pc, 0]
            acc = 0.0
            for i in range(vd):
                acc += V[ia, i]
            S[o] = _fin(acc / vd)
        elif k == 52:
            ia = ins[pc, 0]
            acc = 0.0
            for i in range(md):
                for j in range(md):
                    acc += M[ia, i, j]
            S[o] = _fin(acc / (md * md))
        elif k == 53:
            ia = ins[pc, 0]
            for i in range(vd):
                V[o, i] = 0.0
            for i in range(nmin):
                acc = 0.0
                for j in range(md):
                    acc += M[ia, i, j]
                V[o, i] = _fin(acc / md)
        elif k == 54:
            ia = ins[pc, 0]
            for i in range(vd):
                vtmp[i] = 0.0
            for i in range(nmin):
                acc = 0.0
                for j in range(md):
                    acc += M[ia, i, j]
                mu = acc / md
                var = 0.0
                for j in range(md):
                    var += (M[ia, i, j] - mu) * (M[ia, i, j] - mu)
                vtmp[i] = math.sqrt(var / md)
            for i in range(vd):
                V[o, i] = _fin(vtmp[i])
        elif k == 55:
            ia = ins[pc, 0]
            acc = 0.0
            for i in range(vd):
                acc += V[ia, i]
            mu = acc / vd
            var = 0.0
            for i in range(vd):
                var += (V[ia, i] - mu) * (V[ia, i] - mu)
            S[o] = _fin(math.sqrt(var / vd))
        elif k == 56:
            ia = ins[pc, 0]
            acc = 0.0
            for i in range(md):
                for j in range(md):
                    acc += M[ia, i, j]
            mu = acc / (md * md)
            var = 0.0
            for i in range(md):
                for j in range(md):
                    var += (M[ia, i, j] - mu) * (M[ia, i, j] - mu)
            S[o] = _fin(math.sqrt(var / (md * md)))
        elif k == 57:
            S[o] = _fin(consts[pc, 0])
        elif k == 58:
            V[o, _wrap(lidx[pc, 0], vd)] = _fin(consts[pc, 0])
        elif k == 59:
            M[o, _wrap(lidx[pc, 0], md), _wrap(lidx[pc, 1], md)] = _fin(consts[pc, 0])
        elif k == 60:
            lo_c = consts[pc, 0]
            hi_c = consts[pc, 1]
            S[o] = _fin(lo_c + (hi_c - lo_c) * _rng_u01(rstate))
        elif k == 61:
            ia = ins[pc, 0]
            for i in range(md):
                for j in range(md):
                    M[o, i, j] = M[ia, i, j]
        elif k == 62:
            ia = ins[pc, 0]
            for i in range(vd):
                V[o, i] = V[ia, i]
        elif k == 63:
            IDX[o] = IDX[ins[pc, 0]]
        elif k == 64:
            ia, ib = ins[pc, 0], ins[pc, 1]
            for i in range(vd):
                V[o, i] = _fin(math.pow(V[ia, i], V[ib, i]))
        elif k == 65:
            ia = ins[pc, 0]
            j = _wrap(IDX[ins[pc, 1]], md)
            for i in range(nmin):
                vtmp[i] = M[ia, i, j]
            for i in range(vd):
                V[o, i] = 0.0
            for i in range(nmin):
                V[o, i] = vtmp[i]
        elif k == 66:
            ia = ins[pc, 0]
            i2 = _wrap(IDX[ins[pc, 1]], md)
            for i in range(nmin):
                vtmp[i] = M[ia, i2, i]
            for i in range(vd):
                V[o, i] = 0.0
            for i in range(nmin):
                V[o, i] = vtmp[i]
        elif k == 67:
            S[o] = M[ins[pc, 0], _wrap(IDX[ins[pc, 1]], md), _wrap(IDX[ins[pc, 2]], md)]
        elif k == 68:
            S[o] = V[ins[pc, 0], _wrap(IDX[ins[pc, 1]], vd)]
        elif k == 69:
            for i in range(vd):
                V[o, i] = 0.0
        elif k == 70:
            S[o] = 0.0
        elif k == 71:
            IDX[o] = 0
        elif k == 72:
            ia = ins[pc, 0]
            for i in range(vd):
                x = V[ia, i]
                V[o, i] = math.sqrt(x) if x >= 0.0 else 0.0
        elif k == 73:
            ia = ins[pc, 0]
            for i in range(vd):
                x = V[ia, i]
                V[o, i] = _fin(x * x)
        elif k == 74:
            ia = ins[pc, 0]
            acc = 0.0
            for i in range(vd):
                acc += V[ia, i]
            S[o] = _fin(acc)
        elif k == 75:
            x = S[ins[pc, 0]]
            S[o] = math.sqrt(x) if x >= 0.0 else 0.0
        elif k == 76:
            S[o] = _fin(S[ins[pc, 0]] * S[ins[pc, 1]] + S[ins[pc, 2]])
        elif k == 77:
            S[o] = _fin(S[ins[pc, 0]] * consts[pc, 0])
        elif k == 78:
            i2 = _wrap(lidx[pc, 0], md)
            ia = ins[pc, 0]
            for kk in range(nmin):
                M[o, i2, kk] = V[ia, kk]
        elif k == 79:
            j2 = _wrap(lidx[pc, 0], md)
            ia = ins[pc, 0]
            for kk in range(nmin):
                M[o, kk, j2] = V[ia, kk]
        elif k == 80 or k == 81:
            IDX[o] = md - 1
        elif k == 82:
            IDX[o] = vd - 1
        elif k == 83:
            j3 = _wrap(IDX[ins[pc, 3]], vd)
            S[o] = _fin(V[ins[pc, 0], j3] * V[ins[pc, 1], j3] + S[ins[pc, 2]])
        elif k == 84:
            nn = _wrap(IDX[ins[pc, 2]], vd) + 1
            ia, ib = ins[pc, 0], ins[pc, 1]
            acc = 0.0
            for i in range(nn):
                acc += V[ia, i] * V[ib, i]
            S[o] = _fin(acc)

        flops += costs[pc]
        ob = out_bank[pc]
        if ob == 0:
            tracker[0] = o
        elif ob == 1:
            tracker[1] = o
        elif ob == 3:
            tracker[2] = o
    return flops


@njit(**_JIT)
def _exec_main(ops, callee, ins, outs, out_bank, consts, lidx, costs, func_start,
               S, V, M, IDX, LS, LV, LM, LI, trackers, vd, md,
               vtmp, mtmp, dummy_tracker, rstate):
    """Run the action function, dispatching conditional subroutine calls.

    Returns (flops, instructions_executed)."""
    flops = 0
    ninstr = 0
    pc = func_start[0]
    end = func_start[1]
    while pc < end:
        if ops[pc] != 85:
            # run the whole straight-line segment up to the next call
            seg = pc
            while seg < end and ops[seg] != 85:
                seg += 1
            flops += _exec_block(pc, seg, ops, ins, outs, out_bank, consts,
                                 lidx, costs, S, V, M, IDX, dummy_tracker,
                                 vd, md, vtmp, mtmp, rstate)
            ninstr += seg - pc
            pc = seg
            continue
        ninstr += 1
        s0 = S[ins[pc, 0]]
        s1 = S[ins[pc, 1]]
        cid = callee[pc]
        if s0 < s1:
            LS[cid, 0] = s0
            LS[cid, 1] = s1
            LS[cid, 2] = S[ins[pc, 2]]
            LS[cid, 3] = S[ins[pc, 3]]
            for i in range(vd):
                LV[cid, 0, i] = V[ins[pc, 4], i]
                LV[cid, 1, i] = V[ins[pc, 5], i]
            LI[cid, 0] = IDX[ins[pc, 6]]
            LI[cid, 1] = IDX[ins[pc, 7]]
            lo = func_start[cid + 1]
            hi = func_start[cid + 2]
            flops += _exec_block(lo, hi, ops, ins, outs, out_bank, consts,
                                 lidx, costs, LS[cid], LV[cid], LM[cid],
                                 LI[cid], trackers[cid], vd, md, vtmp,
                                 mtmp, rstate)
            ninstr += hi - lo
        S[outs[pc, 0]] = LS[cid, trackers[cid, 0]]
        for i in range(vd):
            V[outs[pc, 1], i] = LV[cid, trackers[cid, 1], i]
        IDX[outs[pc, 2]] = LI[cid, trackers[cid, 2]]
        pc += 1
    return flops, ninstr


@njit(**_JIT)
def _sched_val(row, t):
    # row = (start, target, t_start, t_stop); step when t_start == t_stop,
    # linear ramp otherwise, constant outside the window
    if t < row[2]:
        return row[0]
    if t >= row[3]:
        return row[1]
    return row[0] + (row[1] - row[0]) * (t - row[2]) / (row[3] - row[2])


@njit(**_JIT)
def _physics_step(x, xd, th, thd, force, phi, D, g, mc, mp, hl, dt):
    """Semi-implicit Euler step of the tilted-track cartpole dynamics."""
    mtot = mc + mp
    pml = mp * hl
    st = math.sin(th)
    ct = math.cos(th)
    temp = (force + pml * thd * thd * st) / mtot + g * math.sin(phi)
    thacc = (g * math.sin(th + phi) - ct * temp - D * thd / pml) / (
        hl * (4.0 / 3.0 - mp * ct * ct / mtot))
    xacc = temp - pml * thacc * ct / mtot
    xd = xd + dt * xacc
    x = x + dt * xd
    thd = thd + dt * thacc
    th = th + dt * thd
    return x, xd, th, thd


@njit(**_JIT)
def run_episodes(ops, callee, ins, outs, out_bank, consts, lidx, costs, func_start,
                 init_s, init_v, init_m, n_cadfs, n_index, vd, md,
                 ep_init, ep_sched, po, noise_on, noise_sigma, ep_seeds,
                 phys):
    """Evaluate one program for a batch of episodes.

    ep_init:  float64[n, 4] initial (x, x_dot, theta, theta_dot)
    ep_sched: float64[n, 4, 4] rows (angle_deg, force, damping, noise_mean),
              cols (start, target, t_start, t_stop)
    phys:     float64[9] = (g, m_cart, m_pole, half_len, force_mag, dt,
              max_steps, angle_limit_deg, x_limit)
    Returns (rewards, steps, flops, instructions) per episode."""
    n_eps = ep_init.shape[0]
    n_s = init_s.shape[0]
    n_v = init_v.shape[0]
    n_m = init_m.shape[0]
    n_i = n_index

    rewards = np.zeros(n_eps)
    steps = np.zeros(n_eps, dtype=np.int64)
    flops = np.zeros(n_eps, dtype=np.int64)
    instrs = np.zeros(n_eps, dtype=np.int64)

    S = np.zeros(n_s)
    V = np.zeros((n_v, vd))
    M = np.zeros((n_m, md, md))
    IDX = np.zeros(n_i, dtype=np.int64)
    nc = max(n_cadfs, 1)
    LS = np.zeros((nc, n_s))
    LV = np.zeros((nc, n_v, vd))
    LM = np.zeros((nc, n_m, md, md))
    LI = np.zeros((nc, n_i), dtype=np.int64)
    trackers = np.zeros((nc, 3), dtype=np.int64)
    dummy_tracker = np.zeros(3, dtype=np.int64)
    vtmp = np.zeros(max(vd, md))
    mtmp = np.zeros((md, md))
    rstate = np.zeros(1, dtype=np.uint64)

    g = phys[0]
    mc = phys[1]
    mp = phys[2]
    hl = phys[3]
    fmag = phys[4]
    dt = phys[5]
    max_steps = int(phys[6])
    ang_lim = phys[7]
    x_lim = phys[8]

    for ep in range(n_eps):
        for i in range(n_s):
            S[i] = init_s[i]
        for i in range(n_v):
            for j in range(vd):
                V[i, j] = init_v[i, j]
        for i in range(n_m):
            for j in range(md):
                for kk in range(md):
                    M[i, j, kk] = init_m[i, j, kk]
        for i in range(n_i):
            IDX[i] = 0
        LS[:] = 0.0
        LV[:] = 0.0
        LM[:] = 0.0
        LI[:] = 0
        trackers[:] = 0
        rstate[0] = ep_seeds[ep]

        x = ep_init[ep, 0]
        xd = ep_init[ep, 1]
        th = ep_init[ep, 2]
        thd = ep_init[ep, 3]
        phi_prev = _sched_val(ep_sched[ep, 0], 0.0)
        total = 0.0
        fl = 0
        ic = 0
        t = 0
        while True:
            tf = np.float64(t)
            phi_deg = _sched_val(ep_sched[ep, 0], tf)
            fmult = _sched_val(ep_sched[ep, 1], tf)
            damp = _sched_val(ep_sched[ep, 2], tf)
            # the pole keeps its absolute orientation when the track tilts
            th -= (phi_deg - phi_prev) / DEG
            phi_prev = phi_deg

            for i in range(vd):
                V[1, i] = 0.0
            if not po:
                V[1, 0] = x
                V[1, 1] = th
            V[1, 2] = xd
            V[1, 3] = thd

            f2, i2 = _exec_main(ops, callee, ins, outs, out_bank, consts, lidx,
                                costs, func_start, S, V, M, IDX, LS, LV, LM,
                                LI, trackers, vd, md, vtmp, mtmp,
                                dummy_tracker, rstate)
            fl += f2
            ic += i2

            act = S[3]
            if act < -1.0:
                act = -1.0
            elif act > 1.0:
                act = 1.0
            if noise_on:
                nmean = _sched_val(ep_sched[ep, 3], tf)
                act = act + _rng_normal(rstate, nmean, noise_sigma)
            force = act * fmult * fmag
            phi = phi_deg / DEG
            x, xd, th, thd = _physics_step(x, xd, th, thd, force, phi, damp,
                                           g, mc, mp, hl, dt)
            t += 1
            tv = th * DEG + phi_deg
            if abs(tv) > ang_lim or abs(x) > x_lim:
                break
            r = 1.0 - abs(tv) / ang_lim
            total += r * r
            if t >= max_steps:
                break
        rewards[ep] = total
        steps[ep] = t
        flops[ep] = fl
        instrs[ep] = ic
    return rewards, steps, flops, instrs


@njit(**_JIT)
def run_policy(ops, callee, ins, outs, out_bank, consts, lidx, costs, func_start,
               init_s, init_v, init_m, n_cadfs, n_index, vd, md, obs_stream, seed):
    """Replay a recorded observation stream through the program (one episode,
    no environment). Returns (raw scalar actions, flops, instructions)."""
    T = obs_stream.shape[0]
    obs_dim = obs_stream.shape[1]
    n_s = init_s.shape[0]
    n_v = init_v.shape[0]
    n_m = init_m.shape[0]

    S = init_s.copy()
    V = init_v.copy()
    M = init_m.copy()
    IDX = np.zeros(n_index, dtype=np.int64)
    nc = max(n_cadfs, 1)
    LS = np.zeros((nc, n_s))
    LV = np.zeros((nc, n_v, vd))
    LM = np.zeros((nc, n_m, md, md))
    LI = np.zeros((nc, n_index), dtype=np.int64)
    trackers = np.zeros((nc, 3), dtype=np.int64)
    dummy_tracker = np.zeros(3, dtype=np.int64)
    vtmp = np.zeros(max(vd, md))
    mtmp = np.zeros((md, md))
    rstate = np.zeros(1, dtype=np.uint64)
    rstate[0] = seed

    actions = np.zeros(T)
    fl = 0
    ic = 0
    for t in range(T):
        for i in range(vd):
            V[1, i] = 0.0
        for i in range(obs_dim):
            V[1, i] = obs_stream[t, i]
        f2, i2 = _exec_main(ops, callee, ins, outs, out_bank, consts, lidx,
                            costs, func_start, S, V, M, IDX, LS, LV, LM, LI,
                            trackers, vd, md, vtmp, mtmp, dummy_tracker,
                            rstate)
        fl += f2
        ic += i2
        actions[t] = S[3]
    return actions, fl, ic


@njit(**_JIT)
def exec_once(ops, callee, ins, outs, out_bank, consts, lidx, costs, func_start,
              S, V, M, IDX, LS, LV, LM, LI, trackers, vd, md, seed):
    """Run the action function once on caller-provided memory arrays."""
    dummy_tracker = np.zeros(3, dtype=np.int64)
    vtmp = np.zeros(max(vd, md))
    mtmp = np.zeros((md, md))
    rstate = np.zeros(1, dtype=np.uint64)
    rstate[0] = seed
    return _exec_main(ops, callee, ins, outs, out_bank, consts, lidx, costs,
                      func_start, S, V, M, IDX, LS, LV, LM, LI, trackers,
                      vd, md, vtmp, mtmp, dummy_tracker, rstate)
