"""Wall-clock timing of full OLS versus sketch-and-solve, and a cost model.

The model is ``t_full = a_full n p^2`` and
``t_srht = a_fwht n p log(n) + a_solve r p^2`` (natural log). Fitted
constants are hardware dependent; :data:`REFERENCE_PROFILE` holds one
historical laptop fit for comparison only.
"""

from __future__ import annotations

import csv
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import derive_seed
from .errors import InfeasibleError
from .regression import lstsq_qr
from .sketch import canonical_method, make_sketch

_LATCH = threading.Lock()
TIMING_COLUMNS = ("method", "n", "p", "r", "median_seconds", "iqr_seconds")


@dataclass(frozen=True)
class TimingRecord:
    method: str
    n: int
    p: int
    r: int
    median_seconds: float
    iqr_seconds: float
    samples: tuple[float, ...] = field(default=(), repr=False)


def time_solve(x, y, method: str, r: int | None = None, reps: int = 5, seed: int = 0) -> TimingRecord:
    """Median wall-clock of an end-to-end solve; one warm-up run is discarded.

    ``method="full"`` times plain QR least squares on all rows. Timing runs are
    serialized process-wide; a concurrent call raises ``RuntimeError``.
    """
    if reps < 3:
        raise ValueError("reps must be >= 3")
    xm = np.ascontiguousarray(np.asarray(x, dtype=float))
    ym = np.asarray(y, dtype=float)
    n, p = xm.shape
    if method != "full":
        method = canonical_method(method)
        if r is None:
            raise ValueError("r is required for sketched methods")
    else:
        r = n

    def run(k: int) -> None:
        if method == "full":
            lstsq_qr(xm, ym)
            return
        op = make_sketch(method, xm, r, derive_seed(seed, k + 1))
        lstsq_qr(op.apply(xm), op.apply(ym))

    if not _LATCH.acquire(blocking=False):
        raise RuntimeError("timing runs must not overlap")
    try:
        run(-1)
        samples = []
        for k in range(reps):
            t0 = time.perf_counter()
            run(k)
            samples.append(time.perf_counter() - t0)
    finally:
        _LATCH.release()
    q25, q50, q75 = np.percentile(samples, [25, 50, 75])
    return TimingRecord(method, n, p, int(r), float(q50), float(q75 - q25), tuple(samples))


def write_timing_csv(records, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_COLUMNS)
        for rec in records:
            w.writerow([rec.method, rec.n, rec.p, rec.r, repr(rec.median_seconds), repr(rec.iqr_seconds)])


@dataclass(frozen=True)
class CostModel:
    """Seconds per unit of ``n p^2`` (full), ``n p log n`` (transform), ``r p^2`` (solve)."""

    a_full: float
    a_fwht: float
    a_solve: float
    residuals: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not (self.a_full > 0 and self.a_solve > 0 and self.a_fwht >= 0):
            raise ValueError("cost coefficients must be positive (a_fwht may be 0)")

    def full_time(self, n, p) -> float:
        return self.a_full * n * p * p

    def sketch_time(self, n, p, r) -> float:
        return self.a_fwht * n * p * math.log(n) + self.a_solve * r * p * p


REFERENCE_PROFILE = CostModel(4e-11, 2e-8, 4e-11)


def _features(rec: TimingRecord):
    if rec.method == "full":
        return rec.n * rec.p**2
    return (rec.n * rec.p * math.log(rec.n), rec.r * rec.p**2)


def fit_cost_model(records) -> CostModel:
    """Least squares on relative error for each cost coefficient.

    Needs at least one ``full`` record and two srht records whose feature
    vectors are linearly independent. ``residuals`` holds
    ``(predicted - measured) / measured`` in input order.
    """
    records = list(records)
    full = [r for r in records if r.method == "full"]
    sk = [r for r in records if r.method == "srht"]
    if not full:
        raise InfeasibleError("cost-model grid has no full-OLS timings")
    u = np.array([_features(r) for r in full], dtype=float)
    t = np.array([r.median_seconds for r in full])
    a_full = float(np.sum(u / t) / np.sum((u / t) ** 2))
    feats = np.array([_features(r) for r in sk], dtype=float).reshape(-1, 2)
    ts = np.array([r.median_seconds for r in sk])
    design = feats / ts[:, None]
    if feats.shape[0] < 2 or np.linalg.matrix_rank(design) < 2:
        raise InfeasibleError("cost-model grid under-determines the srht coefficients")
    coef, *_ = np.linalg.lstsq(design, np.ones(len(sk)), rcond=None)
    a_fwht, a_solve = (float(c) for c in coef)
    a_fwht = max(a_fwht, 0.0)
    if a_solve <= 0:
        raise InfeasibleError("fitted solve coefficient is not positive")
    model = CostModel(a_full, a_fwht, a_solve)
    resid = []
    for rec in records:
        if rec.method == "full":
            pred = model.full_time(rec.n, rec.p)
        elif rec.method == "srht":
            pred = model.sketch_time(rec.n, rec.p, rec.r)
        else:
            continue
        resid.append((pred - rec.median_seconds) / rec.median_seconds)
    return CostModel(a_full, a_fwht, a_solve, tuple(resid))


def break_even_r(model: CostModel, n: int, p: int, c: float) -> float:
    """Largest ``r`` whose sketched time is at most ``c`` times the full time.

    Raises:
        InfeasibleError: if even ``r = p`` exceeds the budget.
    """
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    budget = c * model.full_time(n, p) - model.a_fwht * n * p * math.log(n)
    r = budget / (model.a_solve * p * p)
    if r <= p:
        raise InfeasibleError(
            f"transform cost alone leaves no room for r > p within {c:.3g} x full time"
        )
    return float(min(r, n))


def break_even_oe_bound(model: CostModel, n: int, p: int, c: float) -> float:
    """Smallest orthogonal-sketch OE attainable within the time budget ``c``."""
    rho = break_even_r(model, n, p, c) / n
    g = p / n
    return (1 - g) * (1 + g / (rho - g))
