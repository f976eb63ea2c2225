"""In-place block-measurement kernels.

The trajectory loop spends essentially all of its time here, so the group
gather / 3x3 apply / scatter is jitted with numba.  A numpy twin with
identical semantics is kept both as a fallback and as an internal
cross-check; select it by setting QTRAJ_NO_NUMBA=1 (or flipping USE_NUMBA
before use).  Outcome conventions: 0 = up (no click), 1 = down (click).
Sampling modes: 0 = Born, 1 = forced-uniform, 2 = no-click.

Return signature of the kernels is (outcome, p_up, p_down) where outcome
-1 flags an impossible no-click post-selection (p_up < 1e-14) and -2 an
underflowing selected probability (< 1e-300); the state is left untouched
in both error cases.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _NUMBA_OK = True
except ImportError:  # pragma: no cover
    _NUMBA_OK = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


USE_NUMBA = _NUMBA_OK and not os.environ.get("QTRAJ_NO_NUMBA")

P_UP_MIN_NOCLICK = 1e-14
P_UNDERFLOW = 1e-300


@njit(cache=True)
def _measure_numba(amps, g1, g2, triv, par1, par2, use_par, k1u, k1d, k2u, k2d, r, mode):
    # probability pass
    nu = 0.0
    nd = 0.0
    for g in range(g1.shape[0]):
        s = par1[g] if use_par else 1.0
        a0 = amps[g1[g, 0]]
        a1 = s * amps[g1[g, 1]]
        a2 = amps[g1[g, 2]]
        for row in range(3):
            b = k1u[row, 0] * a0 + k1u[row, 1] * a1 + k1u[row, 2] * a2
            nu += b.real * b.real + b.imag * b.imag
            d = k1d[row, 0] * a0 + k1d[row, 1] * a1 + k1d[row, 2] * a2
            nd += d.real * d.real + d.imag * d.imag
    for g in range(g2.shape[0]):
        s = -par2[g] if use_par else 1.0
        a0 = s * amps[g2[g, 0]]
        a1 = amps[g2[g, 1]]
        a2 = amps[g2[g, 2]]
        for row in range(3):
            b = k2u[row, 0] * a0 + k2u[row, 1] * a1 + k2u[row, 2] * a2
            nu += b.real * b.real + b.imag * b.imag
            d = k2d[row, 0] * a0 + k2d[row, 1] * a1 + k2d[row, 2] * a2
            nd += d.real * d.real + d.imag * d.imag
    nt = 0.0
    for t in range(triv.shape[0]):
        a = amps[triv[t]]
        nt += a.real * a.real + a.imag * a.imag
    p_up = nu + nt
    p_down = nd

    if mode == 2:
        if p_up < P_UP_MIN_NOCLICK:
            return -1, p_up, p_down
        up = True
    elif mode == 1:
        up = r < 0.5
    else:
        up = r < p_up
    p_taken = p_up if up else p_down
    if p_taken < P_UNDERFLOW:
        return -2, p_up, p_down

    # write pass
    if up:
        for g in range(g1.shape[0]):
            s = par1[g] if use_par else 1.0
            a0 = amps[g1[g, 0]]
            a1 = s * amps[g1[g, 1]]
            a2 = amps[g1[g, 2]]
            amps[g1[g, 0]] = k1u[0, 0] * a0 + k1u[0, 1] * a1 + k1u[0, 2] * a2
            amps[g1[g, 1]] = s * (k1u[1, 0] * a0 + k1u[1, 1] * a1 + k1u[1, 2] * a2)
            amps[g1[g, 2]] = k1u[2, 0] * a0 + k1u[2, 1] * a1 + k1u[2, 2] * a2
        for g in range(g2.shape[0]):
            s = -par2[g] if use_par else 1.0
            a0 = s * amps[g2[g, 0]]
            a1 = amps[g2[g, 1]]
            a2 = amps[g2[g, 2]]
            amps[g2[g, 0]] = s * (k2u[0, 0] * a0 + k2u[0, 1] * a1 + k2u[0, 2] * a2)
            amps[g2[g, 1]] = k2u[1, 0] * a0 + k2u[1, 1] * a1 + k2u[1, 2] * a2
            amps[g2[g, 2]] = k2u[2, 0] * a0 + k2u[2, 1] * a1 + k2u[2, 2] * a2
        inv = 1.0 / np.sqrt(p_up)
    else:
        for g in range(g1.shape[0]):
            s = par1[g] if use_par else 1.0
            a0 = amps[g1[g, 0]]
            a1 = s * amps[g1[g, 1]]
            a2 = amps[g1[g, 2]]
            amps[g1[g, 0]] = k1d[0, 0] * a0 + k1d[0, 1] * a1 + k1d[0, 2] * a2
            amps[g1[g, 1]] = s * (k1d[1, 0] * a0 + k1d[1, 1] * a1 + k1d[1, 2] * a2)
            amps[g1[g, 2]] = k1d[2, 0] * a0 + k1d[2, 1] * a1 + k1d[2, 2] * a2
        for g in range(g2.shape[0]):
            s = -par2[g] if use_par else 1.0
            a0 = s * amps[g2[g, 0]]
            a1 = amps[g2[g, 1]]
            a2 = amps[g2[g, 2]]
            amps[g2[g, 0]] = s * (k2d[0, 0] * a0 + k2d[0, 1] * a1 + k2d[0, 2] * a2)
            amps[g2[g, 1]] = k2d[1, 0] * a0 + k2d[1, 1] * a1 + k2d[1, 2] * a2
            amps[g2[g, 2]] = k2d[2, 0] * a0 + k2d[2, 1] * a1 + k2d[2, 2] * a2
        for t in range(triv.shape[0]):
            amps[triv[t]] = 0.0
        inv = 1.0 / np.sqrt(p_down)
    for k in range(amps.shape[0]):
        amps[k] *= inv
    return (0 if up else 1), p_up, p_down


def _measure_numpy(amps, g1, g2, triv, par1, par2, use_par, k1u, k1d, k2u, k2d, r, mode):
    a1 = amps[g1]
    a2 = amps[g2]
    if use_par:
        a1 = a1 * np.stack([np.ones_like(par1), par1, np.ones_like(par1)], axis=1)
        a2 = a2 * np.stack([-par2, np.ones_like(par2), np.ones_like(par2)], axis=1)
    b1u, b1d = a1 @ k1u.T, a1 @ k1d.T
    b2u, b2d = a2 @ k2u.T, a2 @ k2d.T
    nt = float(np.sum(np.abs(amps[triv]) ** 2))
    p_up = float(np.sum(np.abs(b1u) ** 2) + np.sum(np.abs(b2u) ** 2)) + nt
    p_down = float(np.sum(np.abs(b1d) ** 2) + np.sum(np.abs(b2d) ** 2))

    if mode == 2:
        if p_up < P_UP_MIN_NOCLICK:
            return -1, p_up, p_down
        up = True
    elif mode == 1:
        up = r < 0.5
    else:
        up = r < p_up
    p_taken = p_up if up else p_down
    if p_taken < P_UNDERFLOW:
        return -2, p_up, p_down

    b1, b2 = (b1u, b2u) if up else (b1d, b2d)
    if use_par:
        b1 = b1 * np.stack([np.ones_like(par1), par1, np.ones_like(par1)], axis=1)
        b2 = b2 * np.stack([-par2, np.ones_like(par2), np.ones_like(par2)], axis=1)
    if not up:
        amps[triv] = 0.0
    amps[g1] = b1
    amps[g2] = b2
    amps *= 1.0 / np.sqrt(p_taken)
    return (0 if up else 1), p_up, p_down


def measure_inplace(amps, groups, channel, use_par, r, mode):
    """Measure one block in place; see module docstring for conventions."""
    fn = _measure_numba if USE_NUMBA else _measure_numpy
    return fn(
        amps,
        groups.g1,
        groups.g2,
        groups.triv,
        groups.par1,
        groups.par2,
        use_par,
        channel.k1_up,
        channel.k1_down,
        channel.k2_up,
        channel.k2_down,
        r,
        mode,
    )
