"""Hot inner kernels, each in a numba flavour and a pure-numpy flavour.

The public names at the bottom of the module are bound to one flavour at
import time (see :mod:`ostrovsky._accel`). Both flavours are importable
directly as ``<name>_numba`` / ``<name>_numpy`` for testing and benchmarks.
"""

import numpy as np
from scipy.signal import lfilter

from ._accel import USE_NUMBA, njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53


# --- exponential Runge-Kutta stage arithmetic --------------------------------

@njit
def etd_stage_numba(e2, v, q, n):
    out = np.empty_like(v)
    for j in range(v.shape[0]):
        out[j] = e2[j] * v[j] + q[j] * n[j]
    return out


def etd_stage_numpy(e2, v, q, n):
    return e2 * v + q * n


@njit
def etd_stage_c_numba(e2, a, q, nb, nv):
    out = np.empty_like(a)
    for j in range(a.shape[0]):
        out[j] = e2[j] * a[j] + q[j] * (2.0 * nb[j] - nv[j])
    return out


def etd_stage_c_numpy(e2, a, q, nb, nv):
    return e2 * a + q * (2.0 * nb - nv)


@njit
def etd_combine_numba(e, v, f1, f2, f3, nv, na, nb, nc):
    out = np.empty_like(v)
    for j in range(v.shape[0]):
        out[j] = (e[j] * v[j] + f1[j] * nv[j]
                  + 2.0 * f2[j] * (na[j] + nb[j]) + f3[j] * nc[j])
    return out


def etd_combine_numpy(e, v, f1, f2, f3, nv, na, nb, nc):
    return e * v + f1 * nv + 2.0 * f2 * (na + nb) + f3 * nc


# --- banded finite-difference route for the nonlocal term --------------------

@njit
def cumulative_trapezoid_numba(u, dx):
    n = u.shape[0]
    out = np.empty(n)
    out[0] = 0.0
    for i in range(1, n):
        out[i] = out[i - 1] + 0.5 * dx * (u[i - 1] + u[i])
    return out


def cumulative_trapezoid_numpy(u, dx):
    out = np.empty(u.shape[0])
    out[0] = 0.0
    np.cumsum(0.5 * dx * (u[:-1] + u[1:]), out=out[1:])
    return out


@njit
def periodic_backward_sweep_numba(s, decay):
    # p_i = decay * p_{i+1} + s_i with p_N == p_0
    n = s.shape[0]
    alpha = np.empty(n)
    acc = 0.0
    for i in range(n - 1, -1, -1):
        acc = decay * acc + s[i]
        alpha[i] = acc
    p0 = alpha[0] / (1.0 - decay ** n)
    out = np.empty(n)
    w = 1.0
    for i in range(n - 1, -1, -1):
        w *= decay
        if w < 1e-300:  # avoid slow subnormal arithmetic; the term is below round-off
            w = 0.0
        out[i] = alpha[i] + w * p0
    return out


def periodic_backward_sweep_numpy(s, decay):
    n = s.shape[0]
    alpha = lfilter([1.0], [1.0, -decay], s[::-1])[::-1]
    p0 = alpha[0] / (1.0 - decay ** n)
    if decay <= 0.0:
        return alpha
    # decay ** (n - i), cut to zero where it would fall below 1e-300
    log_w = (n - np.arange(n, dtype=np.float64)) * np.log(decay)
    w = np.where(log_w < -690.0, 0.0, np.exp(np.maximum(log_w, -690.0)))
    return alpha + w * p0


# --- split-mix 64-bit generator ----------------------------------------------

@njit
def splitmix64_uniform_numba(seed, count):
    out = np.empty(count)
    state = np.uint64(seed)
    for i in range(count):
        state = state + _GOLDEN
        z = state
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
        out[i] = (z >> _S11) * _TWO_M53
    return out


def splitmix64_uniform_numpy(seed, count):
    with np.errstate(over="ignore"):
        state = np.uint64(seed) + np.arange(1, count + 1, dtype=np.uint64) * _GOLDEN
        z = (state ^ (state >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
    return (z >> _S11).astype(np.float64) * _TWO_M53


if USE_NUMBA:
    etd_stage = etd_stage_numba
    etd_stage_c = etd_stage_c_numba
    etd_combine = etd_combine_numba
    cumulative_trapezoid = cumulative_trapezoid_numba
    periodic_backward_sweep = periodic_backward_sweep_numba
    splitmix64_uniform = splitmix64_uniform_numba
else:
    etd_stage = etd_stage_numpy
    etd_stage_c = etd_stage_c_numpy
    etd_combine = etd_combine_numpy
    cumulative_trapezoid = cumulative_trapezoid_numpy
    periodic_backward_sweep = periodic_backward_sweep_numpy
    splitmix64_uniform = splitmix64_uniform_numpy
