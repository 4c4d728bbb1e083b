"""Finite discrete laws and their eta-transform.

The eta-transform of a law ``F`` on ``[0, inf)`` is
``eta_F(z) = E[1 / (1 + z x)]``. It equals 1 at ``z = 0``, decreases strictly
when ``F`` has mass away from zero, and tends to ``F({0})`` as ``z -> inf``.
All elliptical-sampling predictions are built from its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfeasibleError


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A finite law given as ``(atom, weight)`` pairs.

    Atoms are sorted ascending and duplicates are merged on construction.
    Zero-weight atoms are dropped.
    """

    atoms: np.ndarray
    weights: np.ndarray = field(repr=False)

    def __init__(self, atoms: Sequence[float], weights: Sequence[float] | None = None):
        a = np.atleast_1d(np.asarray(atoms, dtype=float))
        if weights is None:
            w = np.full(a.shape, 1.0 / a.size)
        else:
            w = np.atleast_1d(np.asarray(weights, dtype=float))
        if a.ndim != 1 or a.shape != w.shape or a.size == 0:
            raise ValueError("atoms and weights must be non-empty 1-d arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
            raise ValueError("atoms and weights must be finite")
        if np.any(a < 0):
            raise ValueError("atoms must be nonnegative")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        keep = w > 0
        a, w = a[keep], w[keep]
        uniq, inverse = np.unique(a, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, w)
        merged /= merged.sum()
        object.__setattr__(self, "atoms", uniq)
        object.__setattr__(self, "weights", merged)

    @classmethod
    def point_mass(cls, atom: float) -> "DiscreteDistribution":
        return cls([atom], [1.0])

    @classmethod
    def two_point(cls, a1: float, a2: float, p1: float = 0.5) -> "DiscreteDistribution":
        return cls([a1, a2], [p1, 1.0 - p1])

    @classmethod
    def from_samples(cls, samples) -> "DiscreteDistribution":
        """Empirical law of a sample (each distinct value becomes an atom)."""
        s = np.asarray(samples, dtype=float).ravel()
        uniq, counts = np.unique(s, return_counts=True)
        return cls(uniq, counts / counts.sum())

    def __len__(self) -> int:
        return self.atoms.size

    def __repr__(self) -> str:
        pairs = ", ".join(f"{a:g}: {w:g}" for a, w in zip(self.atoms, self.weights))
        return f"DiscreteDistribution({{{pairs}}})"

    @property
    def zero_mass(self) -> float:
        return float(self.weights[self.atoms == 0.0].sum())

    def mean(self) -> float:
        return float(np.dot(self.weights, self.atoms))

    def expect(self, fn) -> float:
        return float(np.dot(self.weights, fn(self.atoms)))

    def quantile(self, q: float) -> float:
        """Left-continuous inverse CDF: smallest atom ``a`` with ``F(a) >= q``."""
        if not 0.0 <= q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        cdf = np.cumsum(self.weights)
        idx = int(np.searchsorted(cdf, q - 1e-15, side="left"))
        return float(self.atoms[min(idx, self.atoms.size - 1)])

    def eta(self, z):
        return eta_transform(self, z)

    def eta_inverse(self, y: float) -> float:
        return eta_inverse(self, y)


def eta_transform(d: DiscreteDistribution, z):
    """``sum_k w_k / (1 + z a_k)``; vectorized over ``z >= 0``."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("eta_transform is defined here for z >= 0")
    out = (d.weights / (1.0 + np.multiply.outer(z_arr, d.atoms))).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def eta_inverse(d: DiscreteDistribution, y: float, tol: float = 1e-12) -> float:
    """Unique ``z >= 0`` with ``eta_d(z) = y``.

    The upper bracket grows geometrically from 1 until ``eta < y``, then the
    bracket is bisected down to float resolution (bisection never fails on a
    monotone function). ``tol`` is the residual that must be reached.

    Raises:
        InfeasibleError: if ``y`` is not in ``(d.zero_mass, 1)``.
    """
    y = float(y)
    floor = d.zero_mass
    if not floor < y < 1.0:
        raise InfeasibleError(
            f"eta-inverse undefined at y={y!r}: need zero-atom mass {floor!r} < y < 1"
        )
    lo, hi = 0.0, 1.0
    while eta_transform(d, hi) >= y:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise InfeasibleError(f"could not bracket eta-inverse at y={y!r}")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if eta_transform(d, mid) > y:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    resid = abs(eta_transform(d, z) - y)
    if resid > tol:
        raise ArithmeticError(f"eta-inverse residual {resid:.3e} above tolerance {tol:.0e}")
    return z
