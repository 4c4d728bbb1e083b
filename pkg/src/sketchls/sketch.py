"""Sketching operators and their application to ``(X, Y)``.

Every constructor is a pure function of its dimensions, its seed and (for the
leverage methods) ``X``. Operators come in three representations:

* ``explicit``: a dense ``r x n`` matrix (gaussian, iid, haar);
* ``mask``: a sorted array of kept row indices (sampling methods);
* ``pipeline``: permutation, random signs, normalized Walsh-Hadamard
  transform and a row mask (srht), never materialized.

iid sketches are left unnormalized; the efficiency ratios do not depend on
the scale of ``S``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from ._rng import make_rng
from .errors import SketchRankError
from .hadamard import fwht, next_power_of_two
from .regression import DesignMatrix, as_design, checked_qr, leverage_scores

METHODS = (
    "gaussian",
    "iid_rademacher",
    "iid_sparse",
    "haar",
    "srht",
    "uniform_sample",
    "leverage_sample",
    "greedy_leverage",
)
ORTHOGONAL_METHODS = frozenset({"haar", "srht", "uniform_sample", "leverage_sample", "greedy_leverage", "identity"})
SAMPLING_METHODS = frozenset({"uniform_sample", "leverage_sample", "greedy_leverage", "identity"})
# short names accepted by the CLI
ALIASES = {
    "iid": "iid_rademacher",
    "rademacher": "iid_rademacher",
    "sparse": "iid_sparse",
    "hadamard": "srht",
    "uniform": "uniform_sample",
    "leverage": "leverage_sample",
    "greedy": "greedy_leverage",
}


def canonical_method(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in METHODS:
        raise ValueError(f"unknown sketching method {name!r}; choose from {METHODS}")
    return name


@dataclass(frozen=True, eq=False)
class SketchOperator:
    """A realized sketch ``S`` with ``realized_rows`` rows acting on ``n`` columns.

    ``n_data`` is the row count of the data the operator accepts; it is smaller
    than ``n`` only for an srht operator padded to a power of two, in which case
    inputs are zero-padded before the pipeline runs.
    """

    method: str
    n: int
    n_data: int
    matrix: np.ndarray | None = None
    rows: np.ndarray | None = None
    perm: np.ndarray | None = None
    signs: np.ndarray | None = None

    @property
    def kind(self) -> str:
        if self.matrix is not None:
            return "explicit"
        if self.perm is not None:
            return "pipeline"
        return "mask"

    @property
    def realized_rows(self) -> int:
        return self.matrix.shape[0] if self.matrix is not None else int(self.rows.size)

    @property
    def padded(self) -> bool:
        return self.n != self.n_data

    @property
    def sts_idempotent(self) -> bool:
        """Whether ``(S'S)^2 = S'S`` holds by construction."""
        return self.method in ORTHOGONAL_METHODS

    def _pad(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.shape[0] == self.n:
            return a
        if a.shape[0] != self.n_data:
            raise ValueError(f"operator expects {self.n_data} rows, got {a.shape[0]}")
        out = np.zeros((self.n,) + a.shape[1:])
        out[: a.shape[0]] = a
        return out

    def apply(self, a) -> np.ndarray:
        """``S a`` for a vector or matrix with ``n`` (or ``n_data``) rows."""
        a = self._pad(a)
        kind = self.kind
        if kind == "explicit":
            return self.matrix @ a
        if kind == "mask":
            return a[self.rows]
        mixed = a[self.perm] * (self.signs if a.ndim == 1 else self.signs[:, None])
        return fwht(mixed, inplace=True)[self.rows]

    def apply_transpose(self, b) -> np.ndarray:
        """``S' b`` for ``b`` with ``realized_rows`` rows; result has ``n`` rows."""
        b = np.asarray(b, dtype=float)
        kind = self.kind
        if kind == "explicit":
            return self.matrix.T @ b
        out = np.zeros((self.n,) + b.shape[1:])
        if kind == "mask":
            out[self.rows] = b
            return out
        out[self.rows] = b
        y = fwht(out, inplace=True)
        y *= self.signs if y.ndim == 1 else self.signs[:, None]
        res = np.empty_like(y)
        res[self.perm] = y
        return res

    def to_dense(self) -> np.ndarray:
        if self.kind == "explicit":
            return self.matrix.copy()
        return self.apply(np.eye(self.n))

    def scaled(self, c: float) -> "SketchOperator":
        """``c * S`` as an explicit operator (scale-invariance checks)."""
        return SketchOperator(f"{self.method}*c", self.n, self.n_data, matrix=c * self.to_dense())

    def dump_csv(self, path) -> None:
        """Write the dense matrix row-major as CSV, for cross-checking."""
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            for row in self.to_dense():
                w.writerow(repr(float(v)) for v in row)


@dataclass(frozen=True, eq=False)
class SketchedProblem:
    sx: np.ndarray
    sy: np.ndarray
    n: int
    p: int
    operator: SketchOperator


def _check_dims(n: int, r: int) -> None:
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")


def _mask_operator(method: str, n: int, keep: np.ndarray) -> SketchOperator:
    rows = np.flatnonzero(keep)
    if rows.size == 0:
        raise SketchRankError(f"{method}: sampling kept no rows")
    return SketchOperator(method, n, n, rows=rows)


def identity_sketch(n: int) -> SketchOperator:
    """The selector of all ``n`` rows (``S = I_n``)."""
    return SketchOperator("identity", n, n, rows=np.arange(n))


def gaussian_sketch(n: int, r: int, seed=0) -> SketchOperator:
    _check_dims(n, r)
    return SketchOperator("gaussian", n, n, matrix=make_rng(seed).standard_normal((r, n)))


def iid_sketch(n: int, r: int, law: str = "rademacher", seed=0, density: float = 0.1) -> SketchOperator:
    """iid ``+-1`` entries (``law="rademacher"``) or ``{+1, 0, -1}`` with
    probabilities ``{q/2, 1-q, q/2}`` (``law="sparse"``, ``q = density``)."""
    _check_dims(n, r)
    rng = make_rng(seed)
    if law == "rademacher":
        s = rng.integers(0, 2, size=(r, n)).astype(float) * 2.0 - 1.0
        return SketchOperator("iid_rademacher", n, n, matrix=s)
    if law == "sparse":
        if not 0.0 < density <= 1.0:
            raise ValueError("sparse density must lie in (0, 1]")
        u = rng.random((r, n))
        s = np.where(u < density / 2, 1.0, np.where(u < density, -1.0, 0.0))
        return SketchOperator("iid_sparse", n, n, matrix=s)
    raise ValueError(f"unknown iid law {law!r}")


def haar_sketch(n: int, r: int, seed=0) -> SketchOperator:
    """Uniform ``r x n`` partial orthogonal matrix.

    QR of an ``n x r`` Gaussian matrix with the sign of each column fixed so
    that ``R`` has a positive diagonal; without that fix the law is not Haar.
    """
    _check_dims(n, r)
    g = make_rng(seed).standard_normal((n, r))
    q, rr = sla.qr(g, mode="economic", overwrite_a=True, check_finite=False)
    q *= np.where(np.diag(rr) < 0, -1.0, 1.0)
    return SketchOperator("haar", n, n, matrix=np.ascontiguousarray(q.T))


def srht_sketch(n: int, r: int, seed=0, exact_rows: bool = False) -> SketchOperator:
    """Subsampled randomized Hadamard transform ``S = B H D P``.

    Data with ``n`` rows are zero-padded to ``m = next_power_of_two(n)``. Each
    of the ``m`` transformed rows is kept independently with probability
    ``r / m`` and the dropped rows are discarded, leaving an operator with
    orthonormal rows. ``exact_rows=True`` keeps exactly ``r`` rows instead.
    """
    _check_dims(n, r)
    m = next_power_of_two(n)
    rng = make_rng(seed)
    perm = rng.permutation(m)
    signs = rng.integers(0, 2, size=m).astype(float) * 2.0 - 1.0
    if exact_rows:
        rows = np.sort(rng.choice(m, size=r, replace=False))
    else:
        rows = np.flatnonzero(rng.random(m) < r / m)
    if rows.size == 0:
        raise SketchRankError("srht: row selection kept no rows")
    return SketchOperator("srht", m, n, rows=rows, perm=perm, signs=signs)


def uniform_sample_sketch(n: int, r: int, seed=0) -> SketchOperator:
    """Keep each row independently with probability ``r / n``."""
    _check_dims(n, r)
    keep = make_rng(seed).random(n) < r / n
    return _mask_operator("uniform_sample", n, keep)


def leverage_probabilities(h: np.ndarray, r: int, p: int) -> np.ndarray:
    return np.minimum(r / p * np.asarray(h, dtype=float), 1.0)


def leverage_sample_sketch(x, r: int, seed=0) -> SketchOperator:
    """Keep row ``i`` independently with probability ``min(r/p * h_i, 1)``."""
    dm = as_design(x)
    if not dm.p < r <= dm.n:
        raise ValueError(f"need p < r <= n, got p={dm.p}, r={r}, n={dm.n}")
    probs = leverage_probabilities(leverage_scores(dm), r, dm.p)
    keep = make_rng(seed).random(dm.n) < probs
    return _mask_operator("leverage_sample", dm.n, keep)


def top_r_rows(scores, r: int) -> np.ndarray:
    """Indices of the ``r`` largest scores, ties to the smaller index, sorted."""
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    return np.sort(order[:r])


def greedy_leverage_sketch(x, r: int, seed=None, scores=None) -> SketchOperator:
    """Deterministically keep the ``r`` rows with the largest leverage.

    ``seed`` is accepted for a uniform constructor signature and ignored.
    """
    dm = as_design(x)
    if not dm.p < r <= dm.n:
        raise ValueError(f"need p < r <= n, got p={dm.p}, r={r}, n={dm.n}")
    h = leverage_scores(dm) if scores is None else np.asarray(scores, dtype=float)
    return SketchOperator("greedy_leverage", dm.n, dm.n, rows=top_r_rows(h, r))


def make_sketch(method: str, x, r: int, seed=0, **options) -> SketchOperator:
    """Dispatch on the method tag. ``x`` supplies ``n`` (and ``X`` for leverage)."""
    method = canonical_method(method)
    n = x.n if isinstance(x, DesignMatrix) else np.asarray(x).shape[0]
    if method == "gaussian":
        return gaussian_sketch(n, r, seed)
    if method == "iid_rademacher":
        return iid_sketch(n, r, "rademacher", seed)
    if method == "iid_sparse":
        return iid_sketch(n, r, "sparse", seed, density=options.get("density", 0.1))
    if method == "haar":
        return haar_sketch(n, r, seed)
    if method == "srht":
        return srht_sketch(n, r, seed, exact_rows=options.get("exact_rows", False))
    if method == "uniform_sample":
        return uniform_sample_sketch(n, r, seed)
    if method == "leverage_sample":
        return leverage_sample_sketch(x, r, seed)
    return greedy_leverage_sketch(x, r)


def apply_sketch(op: SketchOperator, x, y) -> SketchedProblem:
    """Form ``(SX, SY)`` and check that ``SX`` keeps full column rank."""
    xm = np.asarray(x, dtype=float)
    if xm.shape[0] not in (op.n, op.n_data):
        raise ValueError(f"operator acts on {op.n_data} rows, X has {xm.shape[0]}")
    sx = op.apply(xm)
    sy = op.apply(np.asarray(y, dtype=float))
    checked_qr(sx, error=SketchRankError)
    return SketchedProblem(sx, sy, xm.shape[0], xm.shape[1], op)
