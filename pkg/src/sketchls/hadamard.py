"""Fast Walsh-Hadamard transform."""

from __future__ import annotations

import math

import numpy as np


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def is_power_of_two(m: int) -> bool:
    return m >= 1 and m & (m - 1) == 0


def fwht(v, inplace: bool = False) -> np.ndarray:
    """Apply ``H_m / sqrt(m)`` (Sylvester ordering) along axis 0.

    Works on vectors and on ``m x k`` matrices column by column, in
    ``O(m log m)`` butterflies per column. The normalized transform is
    symmetric and orthogonal, hence its own inverse.
    """
    a = np.asarray(v, dtype=float)
    if not inplace or not a.flags.c_contiguous or a.dtype != np.float64:
        a = np.array(a, dtype=float, order="C")
    m = a.shape[0]
    if not is_power_of_two(m):
        raise ValueError(f"fwht length must be a power of 2, got {m}")
    flat = a.reshape(m, -1)
    k = flat.shape[1]
    h = 1
    while h < m:
        blocks = flat.reshape(m // (2 * h), 2, h, k)
        top = blocks[:, 0]
        bottom = blocks[:, 1]
        top += bottom          # top <- x + y
        bottom *= -2.0
        bottom += top          # bottom <- (x + y) - 2y = x - y
        h *= 2
    flat *= 1.0 / math.sqrt(m)
    return a


def hadamard_matrix(m: int) -> np.ndarray:
    """Dense ``H_m`` built from the block recursion (small ``m`` only)."""
    if not is_power_of_two(m):
        raise ValueError(f"order must be a power of 2, got {m}")
    h = np.ones((1, 1))
    while h.shape[0] < m:
        h = np.block([[h, h], [h, -h]])
    return h
