"""Numba kernels for the per-step hot loops.

Everything here operates on plain float64/int64 arrays; the public modules
own the physics and hand these kernels precomputed step matrices. Kernels are
single-threaded so results never depend on scheduling.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Trace below which a trajectory node is declared dead (log-weight -inf).
DEAD_TRACE = 1e-300


@njit(cache=True)
def ideal_record_chunk(
    v: np.ndarray,
    M0: np.ndarray,
    uniforms: np.ndarray,
    base_step: int,
    out_steps: np.ndarray,
) -> int:
    """Advance a normalised 4-vector through one chunk of detection bins.

    The no-click probability per bin is the trace of M0 @ v (v normalised);
    on a click the state resets to ground and the bin index is recorded.
    Returns the number of clicks written into out_steps.
    """
    count = 0
    for i in range(uniforms.shape[0]):
        w0 = M0[0, 0] * v[0] + M0[0, 1] * v[1] + M0[0, 2] * v[2] + M0[0, 3] * v[3]
        if uniforms[i] < 1.0 - w0:
            out_steps[count] = base_step + i
            count += 1
            v[0] = 1.0
            v[1] = 0.0
            v[2] = 0.0
            v[3] = -1.0
        else:
            w1 = M0[1, 0] * v[0] + M0[1, 1] * v[1] + M0[1, 2] * v[2] + M0[1, 3] * v[3]
            w2 = M0[2, 0] * v[0] + M0[2, 1] * v[1] + M0[2, 2] * v[2] + M0[2, 3] * v[3]
            w3 = M0[3, 0] * v[0] + M0[3, 1] * v[1] + M0[3, 2] * v[2] + M0[3, 3] * v[3]
            v[0] = 1.0
            v[1] = w1 / w0
            v[2] = w2 / w0
            v[3] = w3 / w0
    return count


@njit(cache=True)
def advance_bank_kernel(
    states: np.ndarray,
    logw: np.ndarray,
    mats: np.ndarray,
    bits: np.ndarray,
    start: int,
    stop: int,
    n_dd: int,
    apply_return: bool,
    renorm_every: int,
    snap_steps: np.ndarray,
    snap_logw: np.ndarray,
    snap_states: np.ndarray,
    snap_offset: int,
) -> None:
    """Advance every node of a trajectory bank through record bins [start, stop).

    states: (n_nodes, D) with D = 4 (ideal) or 12 (supersystem); mats:
    (n_nodes, 2, D, D) conditional maps already divided by their ostensible
    probabilities; bits: full record as 0/1 per bin. When apply_return is set,
    a set bit at bin i - n_dd moves the resetting block [8:12) into the ready
    block [0:4) at the end of bin i.

    Log-likelihood offsets accumulate in logw via periodic renormalisation.
    Snapshots: whenever bin index i+1 equals snap_steps[k], the per-node
    log-trace (logw + log trace) and the 4-component atom state (blocks summed
    for D = 12) are stored at row snap_offset + k.
    """
    n_nodes, D = states.shape
    snap_ptr = 0
    n_snaps = snap_steps.shape[0]
    while snap_ptr < n_snaps and snap_steps[snap_ptr] <= start:
        snap_ptr += 1
    tmp = np.empty(D)
    for i in range(start, stop):
        bit = bits[i]
        ret = 0
        if apply_return:
            j = i - n_dd
            if j >= 0 and bits[j] == 1:
                ret = 1
        for node in range(n_nodes):
            M = mats[node, bit]
            v = states[node]
            for r in range(D):
                acc = 0.0
                for c in range(D):
                    acc += M[r, c] * v[c]
                tmp[r] = acc
            for r in range(D):
                v[r] = tmp[r]
            if ret == 1:
                for r in range(4):
                    v[r] += v[8 + r]
                    v[8 + r] = 0.0
        if (i + 1) % renorm_every == 0:
            for node in range(n_nodes):
                v = states[node]
                tr = v[0]
                if D == 12:
                    tr = v[0] + v[4] + v[8]
                if tr > DEAD_TRACE:
                    inv = 1.0 / tr
                    for r in range(D):
                        v[r] *= inv
                    logw[node] += np.log(tr)
                else:
                    for r in range(D):
                        v[r] = 0.0
                    logw[node] = -np.inf
        if snap_ptr < n_snaps and i + 1 == snap_steps[snap_ptr]:
            for node in range(n_nodes):
                v = states[node]
                tr = v[0]
                if D == 12:
                    tr = v[0] + v[4] + v[8]
                if tr > DEAD_TRACE:
                    snap_logw[snap_offset + snap_ptr, node] = logw[node] + np.log(tr)
                else:
                    snap_logw[snap_offset + snap_ptr, node] = -np.inf
                for r in range(4):
                    comp = v[r]
                    if D == 12:
                        comp = v[r] + v[4 + r] + v[8 + r]
                    snap_states[snap_offset + snap_ptr, node, r] = comp
            snap_ptr += 1


@njit(cache=True)
def rk4_linear_trajectory(
    A: np.ndarray, r0: np.ndarray, dt: float, n_steps: int, store_every: int
) -> np.ndarray:
    """Fixed-step RK4 for dr/dt = A r, storing every store_every-th state.

    Returns an array of shape (n_stored, dim) beginning with r0.
    """
    dim = r0.shape[0]
    n_stored = n_steps // store_every + 1
    out = np.empty((n_stored, dim))
    r = r0.copy()
    out[0] = r
    idx = 1
    for i in range(n_steps):
        k1 = A @ r
        k2 = A @ (r + 0.5 * dt * k1)
        k3 = A @ (r + 0.5 * dt * k2)
        k4 = A @ (r + dt * k3)
        r = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % store_every == 0:
            out[idx] = r
            idx += 1
    return out[:idx]
