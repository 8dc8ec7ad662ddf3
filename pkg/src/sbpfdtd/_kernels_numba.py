"""Numba-jitted hot kernels.

Importing this module requires numba; :mod:`sbpfdtd.backend` only does
so when the numba backend is requested.  Each derivative kernel is
specialized to one storage axis so the innermost loop runs along the
contiguous x index.  Lazy compilation specializes on dtype, so the same
source serves float64 and complex128 states.

The arithmetic per element matches the numpy backend exactly (same
operations, same order), keeping the two backends bitwise identical.
"""

import numpy as np
from numba import njit

__all__ = ["KERNELS"]


@njit(cache=True)
def _deriv_ax0(dst, src, lo, hi, ioff, c, top, bot, b0):
    # closure blocks at the far end run after the interior sweep so their
    # rows are reached in stream order (touching them first costs a cold
    # DRAM stall per row); every dst element has exactly one writer here,
    # so the ordering cannot change results
    n1, n2 = dst.shape[1], dst.shape[2]
    m = src.shape[0]
    for r in range(top.shape[0]):
        t0, t1, t2 = top[r, 0], top[r, 1], top[r, 2]
        for j in range(n1):
            for i in range(n2):
                dst[r, j, i] += t0 * src[0, j, i] + t1 * src[1, j, i] + t2 * src[2, j, i]
    for r in range(lo, hi):
        sp = r + ioff
        for j in range(n1):
            for i in range(n2):
                dst[r, j, i] += c * (src[sp + 1, j, i] - src[sp, j, i])
    for r in range(bot.shape[0]):
        t0, t1, t2 = bot[r, 0], bot[r, 1], bot[r, 2]
        for j in range(n1):
            for i in range(n2):
                dst[b0 + r, j, i] += (t0 * src[m - 3, j, i] + t1 * src[m - 2, j, i]
                                      + t2 * src[m - 1, j, i])


@njit(cache=True)
def _deriv_ax1(dst, src, lo, hi, ioff, c, top, bot, b0):
    n0, n2 = dst.shape[0], dst.shape[2]
    m = src.shape[1]
    for k in range(n0):
        for r in range(top.shape[0]):
            t0, t1, t2 = top[r, 0], top[r, 1], top[r, 2]
            for i in range(n2):
                dst[k, r, i] += t0 * src[k, 0, i] + t1 * src[k, 1, i] + t2 * src[k, 2, i]
        for r in range(lo, hi):
            sp = r + ioff
            for i in range(n2):
                dst[k, r, i] += c * (src[k, sp + 1, i] - src[k, sp, i])
        # far-end rows last, continuing the stream (single writer per element)
        for r in range(bot.shape[0]):
            t0, t1, t2 = bot[r, 0], bot[r, 1], bot[r, 2]
            for i in range(n2):
                dst[k, b0 + r, i] += (t0 * src[k, m - 3, i] + t1 * src[k, m - 2, i]
                                      + t2 * src[k, m - 1, i])


@njit(cache=True)
def _deriv_ax2_blocks2(dst, src, lo, hi, ioff, c, top, bot, b0):
    n0, n1 = dst.shape[0], dst.shape[1]
    m = src.shape[2]
    t00, t01, t02 = top[0, 0], top[0, 1], top[0, 2]
    t10, t11, t12 = top[1, 0], top[1, 1], top[1, 2]
    u00, u01, u02 = bot[0, 0], bot[0, 1], bot[0, 2]
    u10, u11, u12 = bot[1, 0], bot[1, 1], bot[1, 2]
    for k in range(n0):
        for j in range(n1):
            s0, s1, s2 = src[k, j, 0], src[k, j, 1], src[k, j, 2]
            dst[k, j, 0] += t00 * s0 + t01 * s1 + t02 * s2
            dst[k, j, 1] += t10 * s0 + t11 * s1 + t12 * s2
            for r in range(lo, hi):
                sp = r + ioff
                dst[k, j, r] += c * (src[k, j, sp + 1] - src[k, j, sp])
            # row tail after the sweep: its cache lines are already hot
            e0, e1, e2 = src[k, j, m - 3], src[k, j, m - 2], src[k, j, m - 1]
            dst[k, j, b0] += u00 * e0 + u01 * e1 + u02 * e2
            dst[k, j, b0 + 1] += u10 * e0 + u11 * e1 + u12 * e2


@njit(cache=True)
def _deriv_ax2_blocks3(dst, src, lo, hi, ioff, c, top, bot, b0):
    n0, n1 = dst.shape[0], dst.shape[1]
    m = src.shape[2]
    t00, t01, t02 = top[0, 0], top[0, 1], top[0, 2]
    t10, t11, t12 = top[1, 0], top[1, 1], top[1, 2]
    t20, t21, t22 = top[2, 0], top[2, 1], top[2, 2]
    u00, u01, u02 = bot[0, 0], bot[0, 1], bot[0, 2]
    u10, u11, u12 = bot[1, 0], bot[1, 1], bot[1, 2]
    u20, u21, u22 = bot[2, 0], bot[2, 1], bot[2, 2]
    for k in range(n0):
        for j in range(n1):
            s0, s1, s2 = src[k, j, 0], src[k, j, 1], src[k, j, 2]
            dst[k, j, 0] += t00 * s0 + t01 * s1 + t02 * s2
            dst[k, j, 1] += t10 * s0 + t11 * s1 + t12 * s2
            dst[k, j, 2] += t20 * s0 + t21 * s1 + t22 * s2
            for r in range(lo, hi):
                sp = r + ioff
                dst[k, j, r] += c * (src[k, j, sp + 1] - src[k, j, sp])
            # row tail after the sweep: its cache lines are already hot
            e0, e1, e2 = src[k, j, m - 3], src[k, j, m - 2], src[k, j, m - 1]
            dst[k, j, b0] += u00 * e0 + u01 * e1 + u02 * e2
            dst[k, j, b0 + 1] += u10 * e0 + u11 * e1 + u12 * e2
            dst[k, j, b0 + 2] += u20 * e0 + u21 * e1 + u22 * e2


@njit(cache=True)
def _deriv_ax2(dst, src, lo, hi, ioff, c, top, bot, b0):
    n0, n1 = dst.shape[0], dst.shape[1]
    m = src.shape[2]
    for k in range(n0):
        for j in range(n1):
            for r in range(top.shape[0]):
                dst[k, j, r] += (top[r, 0] * src[k, j, 0] + top[r, 1] * src[k, j, 1]
                                 + top[r, 2] * src[k, j, 2])
            for r in range(lo, hi):
                sp = r + ioff
                dst[k, j, r] += c * (src[k, j, sp + 1] - src[k, j, sp])
            for r in range(bot.shape[0]):
                dst[k, j, b0 + r] += (bot[r, 0] * src[k, j, m - 3] + bot[r, 1] * src[k, j, m - 2]
                                      + bot[r, 2] * src[k, j, m - 1])


@njit(cache=True)
def _face_ax0(dst, src, i_dst, i_src, coef):
    n1, n2 = dst.shape[1], dst.shape[2]
    for j in range(n1):
        for i in range(n2):
            dst[i_dst, j, i] += coef * src[i_src, j, i]


@njit(cache=True)
def _face_ax1(dst, src, i_dst, i_src, coef):
    n0, n2 = dst.shape[0], dst.shape[2]
    for k in range(n0):
        for i in range(n2):
            dst[k, i_dst, i] += coef * src[k, i_src, i]


@njit(cache=True)
def _face_ax2(dst, src, i_dst, i_src, coef):
    n0, n1 = dst.shape[0], dst.shape[1]
    for k in range(n0):
        for j in range(n1):
            dst[k, j, i_dst] += coef * src[k, j, i_src]


@njit(cache=True)
def _update_e(e, ca, cb, acc):
    n0, n1, n2 = e.shape
    for k in range(n0):
        for j in range(n1):
            for i in range(n2):
                e[k, j, i] = e[k, j, i] * ca[k, j, i] + cb[k, j, i] * acc[k, j, i]


@njit(cache=True)
def _update_h(h, ch, acc):
    n0, n1, n2 = h.shape
    for k in range(n0):
        for j in range(n1):
            for i in range(n2):
                h[k, j, i] += ch[k, j, i] * acc[k, j, i]


def _add_derivative(dst, src, ax, lo, hi, ioff, c, top, bot, b0):
    if ax == 0:
        _deriv_ax0(dst, src, lo, hi, ioff, c, top, bot, b0)
    elif ax == 1:
        _deriv_ax1(dst, src, lo, hi, ioff, c, top, bot, b0)
    # for the contiguous axis the closure rows sit inside the innermost
    # loop, so the common 2- and 3-row blocks get unrolled variants with
    # hoisted coefficients (same per-element expression order, so the
    # result stays bitwise identical to the generic form)
    elif top.shape[0] == 2 and bot.shape[0] == 2:
        _deriv_ax2_blocks2(dst, src, lo, hi, ioff, c, top, bot, b0)
    elif top.shape[0] == 3 and bot.shape[0] == 3:
        _deriv_ax2_blocks3(dst, src, lo, hi, ioff, c, top, bot, b0)
    else:
        _deriv_ax2(dst, src, lo, hi, ioff, c, top, bot, b0)


def _sat_face_add(dst, src, ax, i_dst, i_src, coef):
    if dst.dtype.kind == "c":
        # LLVM's complex multiply rounds differently from numpy's vector
        # loops, which would break bitwise backend agreement.  Complex
        # states only occur in small Bloch-periodic probes, so the numpy
        # slab op costs nothing there.
        d = np.moveaxis(dst, ax, 0)
        s = np.moveaxis(src, ax, 0)
        d[i_dst] += coef * s[i_src]
    elif ax == 0:
        _face_ax0(dst, src, i_dst, i_src, coef)
    elif ax == 1:
        _face_ax1(dst, src, i_dst, i_src, coef)
    else:
        _face_ax2(dst, src, i_dst, i_src, coef)


KERNELS = {
    "add_derivative": _add_derivative,
    "sat_face_add": _sat_face_add,
    "update_e": _update_e,
    "update_h": _update_h,
}
