"""Flat closed-loop stepping routine, runnable interpreted or JIT-compiled.

One Python source serves both execution paths: `closed_loop` is a plain
function (the reference path) and `closed_loop_jit` is the same function
compiled by numba with strict IEEE semantics (no fastmath), so the two
produce bit-identical trajectories — the test suite asserts exact
equality. Everything here is scalar arithmetic with an explicit
evaluation order; helpers are `register_jitable` so the compiled caller
inlines the very same source the interpreter runs.

The derivative lines mirror `plant.plant_derivative` term for term
(canonical sign variant); keep them in sync.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from numba.extending import register_jitable

OK = -1          # status: clean run
N_FIXED_COLS = 14  # t, em(4), omega, te, te_ref, u(2), s_d, s_q, s_fused, v_lyap
N_ACC = 6        # tv_d (two halves), tv_q (two halves), switches_d, switches_q


@register_jitable
def _sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@register_jitable
def _sat(s, lam, layer):
    # boundary-layer primitive; same branch order as the library version
    if abs(s) >= layer:
        return lam * _sgn(s)
    return lam * s / layer


@register_jitable
def _deriv(phd, phq, ids, iqs, w, ud, uq, cl,
           ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv):
    d_phd = ac * ids - bc * phd - pp * w * phq
    d_phq = ac * iqs - bc * phq + pp * w * phd
    d_ids = -g1 * ids - g2 * phd + g3 * w * phq + g4 * ud
    d_iqs = -g1 * iqs - g2 * phq - g3 * w * phd + g4 * uq
    te = tq_c * (iqs * phd - ids * phq)
    d_w = (te - cl - fv * w) / jin
    return d_phd, d_phq, d_ids, d_iqs, d_w


@register_jitable
def plant_step(phd, phq, ids, iqs, w, ud, uq, cl, dt,
               ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv):
    """One classical Runge-Kutta step under held inputs."""
    a1, b1, c1, d1, e1 = _deriv(phd, phq, ids, iqs, w, ud, uq, cl,
                                ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv)
    h = 0.5 * dt
    a2, b2, c2, d2, e2 = _deriv(phd + h * a1, phq + h * b1, ids + h * c1,
                                iqs + h * d1, w + h * e1, ud, uq, cl,
                                ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv)
    a3, b3, c3, d3, e3 = _deriv(phd + h * a2, phq + h * b2, ids + h * c2,
                                iqs + h * d2, w + h * e2, ud, uq, cl,
                                ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv)
    a4, b4, c4, d4, e4 = _deriv(phd + dt * a3, phq + dt * b3, ids + dt * c3,
                                iqs + dt * d3, w + dt * e3, ud, uq, cl,
                                ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv)
    sixth = dt / 6.0
    return (
        phd + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        phq + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        ids + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
        iqs + sixth * (d1 + 2.0 * d2 + 2.0 * d3 + d4),
        w + sixth * (e1 + 2.0 * e2 + 2.0 * e3 + e4),
    )


def closed_loop(
    n_steps, dt, stride,
    x_init,
    ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv,
    flux_ref, ids_star, iqs_coef,
    tq_t, tq_v, ld_t, ld_v,
    mode, switch_code, use_eq,
    k_cfg, lam, layer,
    alpha_d, alpha_q, ab_d, ab_q,
    a_single,
    bank_speeds, delta, a_bank, bank_kd, bank_kq,
    out, acc,
):
    """Simulate the controlled machine, recording rows into `out`.

    modes: 0 first-order SMC, 1 super-twisting, 2 multimodel fusion.
    switch codes (mode 0): 0 sign, 1 saturation, 2 proportional.
    Records every `stride`-th step plus the final one. Returns -1 on a
    clean run, else the 1-based step index where the state left the
    finite range.

    `acc` (length N_ACC) receives control-activity tallies taken at the
    integration rate, so they stay exact whatever the record stride:
    per-channel total variation split at mid-horizon
    [tv_d_first, tv_d_second, tv_q_first, tv_q_second] followed by the
    per-channel direction-switch counts [switches_d, switches_q] (a
    switch = consecutive nonzero control increments with opposite
    signs; the first nonzero increment opens the count at 1).
    """
    phd = x_init[0]
    phq = x_init[1]
    ids = x_init[2]
    iqs = x_init[3]
    w = x_init[4]

    n_models = bank_speeds.shape[0]
    val_buf = np.empty(n_models)

    st_wd = 0.0
    st_wq = 0.0
    tq_i = 0
    ld_i = 0
    for i in range(N_ACC):
        acc[i] = 0.0
    n_half = n_steps // 2
    prev_ud = 0.0
    prev_uq = 0.0
    last_nz_d = 0.0
    last_nz_q = 0.0
    r = 0
    k = 0
    while k <= n_steps:
        t = k * dt
        while tq_i + 1 < tq_t.shape[0] and t >= tq_t[tq_i + 1]:
            tq_i += 1
        while ld_i + 1 < ld_t.shape[0] and t >= ld_t[ld_i + 1]:
            ld_i += 1
        te_ref = tq_v[tq_i]
        cl = ld_v[ld_i]

        iqs_star = te_ref * iqs_coef
        e0 = phd - flux_ref
        e1 = phq
        e2 = ids - ids_star
        e3 = iqs - iqs_star
        s_d = alpha_d[0] * e0 + alpha_d[1] * e1 + alpha_d[2] * e2 + alpha_d[3] * e3
        s_q = alpha_q[0] * e0 + alpha_q[1] * e1 + alpha_q[2] * e2 + alpha_q[3] * e3

        vsum = 0.0
        for i in range(n_models):
            dist = w - bank_speeds[i]
            if dist < 0.0:
                dist = -dist
            val_buf[i] = 1.0 / (dist + delta)
            vsum += val_buf[i]

        u_d = 0.0
        u_q = 0.0
        sgn_d = 0.0
        sgn_q = 0.0
        if mode == 0:
            if use_eq == 1:
                num_d = 0.0
                num_q = 0.0
                for j in range(4):
                    axj = (a_single[j, 0] * phd + a_single[j, 1] * phq
                           + a_single[j, 2] * ids + a_single[j, 3] * iqs)
                    num_d += alpha_d[j] * axj
                    num_q += alpha_q[j] * axj
                u_d = -num_d / ab_d
                u_q = -num_q / ab_q
            if switch_code == 0:
                u_d = u_d - k_cfg * _sgn(s_d)
                u_q = u_q - k_cfg * _sgn(s_q)
            elif switch_code == 1:
                u_d = u_d - k_cfg * _sat(s_d, lam, layer)
                u_q = u_q - k_cfg * _sat(s_q, lam, layer)
            else:
                u_d = u_d - k_cfg * s_d
                u_q = u_q - k_cfg * s_q
        elif mode == 1:
            sgn_d = _sgn(s_d)
            sgn_q = _sgn(s_q)
            u_d = -1.5 * math.sqrt(k_cfg) * math.sqrt(abs(s_d)) * sgn_d + st_wd
            u_q = -1.5 * math.sqrt(k_cfg) * math.sqrt(abs(s_q)) * sgn_q + st_wq
        else:
            sat_d = _sat(s_d, lam, layer)
            sat_q = _sat(s_q, lam, layer)
            acc_d = 0.0
            acc_q = 0.0
            for i in range(n_models):
                v_i = val_buf[i] / vsum
                num_d = 0.0
                num_q = 0.0
                for j in range(4):
                    axj = (a_bank[i, j, 0] * phd + a_bank[i, j, 1] * phq
                           + a_bank[i, j, 2] * ids + a_bank[i, j, 3] * iqs)
                    num_d += alpha_d[j] * axj
                    num_q += alpha_q[j] * axj
                acc_d += v_i * (-num_d / ab_d - bank_kd[i] * sat_d)
                acc_q += v_i * (-num_q / ab_q - bank_kq[i] * sat_q)
            u_d = acc_d
            u_q = acc_q

        if k >= 1:
            d_ud = u_d - prev_ud
            d_uq = u_q - prev_uq
            if k <= n_half:
                acc[0] += abs(d_ud)
                acc[2] += abs(d_uq)
            else:
                acc[1] += abs(d_ud)
                acc[3] += abs(d_uq)
            sg = _sgn(d_ud)
            if sg != 0.0:
                if last_nz_d == 0.0:
                    acc[4] = 1.0
                elif sg != last_nz_d:
                    acc[4] += 1.0
                last_nz_d = sg
            sg = _sgn(d_uq)
            if sg != 0.0:
                if last_nz_q == 0.0:
                    acc[5] = 1.0
                elif sg != last_nz_q:
                    acc[5] += 1.0
                last_nz_q = sg
        prev_ud = u_d
        prev_uq = u_q

        if k % stride == 0 or k == n_steps:
            out[r, 0] = t
            out[r, 1] = phd
            out[r, 2] = phq
            out[r, 3] = ids
            out[r, 4] = iqs
            out[r, 5] = w
            out[r, 6] = tq_c * (iqs * phd - ids * phq)
            out[r, 7] = te_ref
            out[r, 8] = u_d
            out[r, 9] = u_q
            out[r, 10] = s_d
            out[r, 11] = s_q
            out[r, 12] = s_d + s_q
            v_lyap = s_d * s_d + s_q * s_q
            if mode == 2:
                v_lyap = v_lyap * n_models
            out[r, 13] = v_lyap
            for i in range(n_models):
                out[r, N_FIXED_COLS + i] = val_buf[i] / vsum
            r += 1

        if k < n_steps:
            if mode == 1:
                st_wd = st_wd - 1.1 * k_cfg * sgn_d * dt
                st_wq = st_wq - 1.1 * k_cfg * sgn_q * dt
            phd, phq, ids, iqs, w = plant_step(
                phd, phq, ids, iqs, w, u_d, u_q, cl, dt,
                ac, bc, g1, g2, g3, g4, pp, tq_c, jin, fv,
            )
            if not (math.isfinite(phd) and math.isfinite(phq)
                    and math.isfinite(ids) and math.isfinite(iqs)
                    and math.isfinite(w)):
                return k + 1
        k += 1
    return OK


closed_loop_jit = njit(cache=True)(closed_loop)
