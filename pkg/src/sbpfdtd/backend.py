"""Kernel backend selection and the pure-numpy reference kernels.

Two interchangeable backends drive the hot loops:

* ``numba``: axis-specialized ``@njit`` kernels (default when numba
  imports cleanly).
* ``numpy``: vectorized slice arithmetic, always available.

Selection: the ``SBPFDTD_BACKEND`` environment variable (``numba`` or
``numpy``) wins; otherwise numba is used when importable.  Both paths
perform the identical per-element arithmetic in the identical order, so
results agree bitwise; the numpy path is the fallback and the reference.

Kernel contract (shared by both implementations):

``add_derivative(dst, src, ax, lo, hi, ioff, c, top, bot, b0)``
    dst[r] += sum of stencil * src rows along storage axis ``ax``:
    closure block ``top`` over rows 0..len(top)-1 against src rows 0..2,
    block ``bot`` over rows b0.. against the last three src rows, and
    the two-point interior dst[r] += c*(src[r+ioff+1] - src[r+ioff])
    for lo <= r < hi.  Blocks may be empty (plain finite-difference
    mode).  Coefficients arrive pre-scaled with sign and 1/h.

``sat_face_add(dst, src, ax, i_dst, i_src, coef)``
    dst[plane i_dst along ax] += coef * src[plane i_src along ax]; the
    transverse plane shapes of the two arrays must match.  Indices
    arrive normalized (nonnegative).  This is the per-face boundary
    penalty applied to the curl accumulator.

``update_e(e, ca, cb, acc)``
    e = ca*e + cb*acc, elementwise; acc is the accumulated curl+SAT
    +source array and is left untouched.

``update_h(h, ch, acc)``
    h += ch*acc, elementwise.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

__all__ = ["active_backend", "select_backend", "available_backends",
           "add_derivative", "sat_face_add", "update_e", "update_h"]


# ---------------------------------------------------------------- numpy path

def _np_add_derivative(dst, src, ax, lo, hi, ioff, c, top, bot, b0):
    d = np.moveaxis(dst, ax, 0)
    s = np.moveaxis(src, ax, 0)
    for r in range(top.shape[0]):
        d[r] += top[r, 0] * s[0] + top[r, 1] * s[1] + top[r, 2] * s[2]
    for r in range(bot.shape[0]):
        d[b0 + r] += bot[r, 0] * s[-3] + bot[r, 1] * s[-2] + bot[r, 2] * s[-1]
    if hi > lo:
        # interior two-point stencil; ioff=0 pairs row r with r+1 (plus-grid
        # result), ioff=-1 pairs r-1 with r (minus-grid result)
        a = s[lo + ioff:hi + ioff]
        b = s[lo + ioff + 1:hi + ioff + 1]
        d[lo:hi] += c * (b - a)


def _np_sat_face_add(dst, src, ax, i_dst, i_src, coef):
    d = np.moveaxis(dst, ax, 0)
    s = np.moveaxis(src, ax, 0)
    d[i_dst] += coef * s[i_src]


def _np_update_e(e, ca, cb, acc):
    e *= ca
    e += cb * acc


def _np_update_h(h, ch, acc):
    h += ch * acc


_NUMPY_KERNELS = {
    "add_derivative": _np_add_derivative,
    "sat_face_add": _np_sat_face_add,
    "update_e": _np_update_e,
    "update_h": _np_update_h,
}


# ---------------------------------------------------------------- selection

def available_backends() -> tuple:
    names = ["numpy"]
    try:
        import numba  # noqa: F401
        names.insert(0, "numba")
    except ImportError:
        pass
    return tuple(names)


_active = None
_kernels = None


def select_backend(name: str | None = None) -> str:
    """Activate a kernel backend; returns the name actually selected.

    With ``name=None`` the SBPFDTD_BACKEND environment variable decides,
    defaulting to numba when available.
    """
    global _active, _kernels
    if name is None:
        name = os.environ.get("SBPFDTD_BACKEND", "").strip().lower() or None
    if name is None:
        name = "numba" if "numba" in available_backends() else "numpy"
    name = name.lower()
    if name == "numpy":
        _kernels = _NUMPY_KERNELS
    elif name == "numba":
        from . import _kernels_numba
        _kernels = _kernels_numba.KERNELS
    else:
        raise ValueError(f"unknown kernel backend {name!r}, expected 'numba' or 'numpy'")
    _active = name
    return name


def active_backend() -> str:
    if _active is None:
        try:
            select_backend()
        except ImportError as exc:  # numba requested but broken
            warnings.warn(f"falling back to numpy kernels: {exc}")
            select_backend("numpy")
    return _active


def add_derivative(dst, src, ax, lo, hi, ioff, c, top, bot, b0):
    active_backend()
    _kernels["add_derivative"](dst, src, ax, lo, hi, ioff, c, top, bot, b0)


def sat_face_add(dst, src, ax, i_dst, i_src, coef):
    active_backend()
    _kernels["sat_face_add"](dst, src, ax, i_dst, i_src, coef)


def update_e(e, ca, cb, acc):
    active_backend()
    _kernels["update_e"](e, ca, cb, acc)


def update_h(h, ch, acc):
    active_backend()
    _kernels["update_h"](h, ch, acc)
