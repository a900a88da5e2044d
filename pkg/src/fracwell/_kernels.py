"""Per-pair hot loops.

Every kernel exists twice: a numba loop (``*_jit``) and a vectorised numpy
version (``*_np``). The public names bind to the jit flavour when
``fracwell._accel.NUMBA_ENABLED`` is true. Both are kept importable so the
test-suite and the benchmark can compare them directly.

Pair arrays index an *extended* value vector ``ue`` of length ``M + 1`` whose
last slot is the exterior zero.
"""
import numpy as np

from ._accel import NUMBA_ENABLED, njit


def pair_quotients_np(ue, I, J, phase, rs):
    return (ue[I] - phase * ue[J]) * rs


def scatter_pairs_np(coef, I, J, conj_phase, rs, m):
    """Accumulate ``coef`` into node ``I`` and ``-conj(phase)*coef`` into ``J``.

    Returns a complex vector of length ``m`` (exterior slot dropped).
    """
    a = coef * rs
    b = -conj_phase * a
    re = np.bincount(I, weights=a.real, minlength=m + 1) + np.bincount(J, weights=b.real, minlength=m + 1)
    im = np.bincount(I, weights=a.imag, minlength=m + 1) + np.bincount(J, weights=b.imag, minlength=m + 1)
    return (re + 1j * im)[:m]


def weighted_sum_np(w, vals):
    return float(np.dot(w, vals))


@njit
def pair_quotients_jit(ue, I, J, phase, rs):
    n = I.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for k in range(n):
        out[k] = (ue[I[k]] - phase[k] * ue[J[k]]) * rs[k]
    return out


@njit
def scatter_pairs_jit(coef, I, J, conj_phase, rs, m):
    out = np.zeros(m + 1, dtype=np.complex128)
    for k in range(I.shape[0]):
        a = coef[k] * rs[k]
        out[I[k]] += a
        out[J[k]] -= conj_phase[k] * a
    return out[:m]


@njit
def weighted_sum_jit(w, vals):
    acc = 0.0
    for k in range(w.shape[0]):
        acc += w[k] * vals[k]
    return acc


# a BLAS dot beats the scalar loop at every size we benchmarked, so the
# reduction stays on numpy either way
weighted_sum = weighted_sum_np
if NUMBA_ENABLED:
    pair_quotients = pair_quotients_jit
    scatter_pairs = scatter_pairs_jit
else:
    pair_quotients = pair_quotients_np
    scatter_pairs = scatter_pairs_np
