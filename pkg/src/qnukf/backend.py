"""Dispatch between the numba kernels and the numpy fallback.

The numba path is used whenever numba imports and ``QNUKF_DISABLE_NUMBA`` is
unset. Both paths share signatures::

    transition_batch(X, N, omega_m, accel_m, g, dt) -> (n, 16)
    measurement_batch(X, F) -> (n, 3m)
    oplus_batch(x, D) -> (n, 16)
    ominus_batch(X, x) -> (n, 15)
    weighted_sum(w, A) -> (k,)
    weighted_outer(w, A, B) -> (k, l)
"""

from . import _kernels, _vectorized
from ._jit import USE_NUMBA

NAME = "numba" if USE_NUMBA else "numpy"

_impl = _kernels if USE_NUMBA else _vectorized

transition_batch = _impl.transition_batch
measurement_batch = _impl.measurement_batch
oplus_batch = _impl.oplus_batch
ominus_batch = _impl.ominus_batch
weighted_sum = _impl.weighted_sum
weighted_outer = _impl.weighted_outer
