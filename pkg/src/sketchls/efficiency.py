"""Finite-sample efficiencies for a fixed ``(X, S)`` and their Monte-Carlo averages.

With ``Q0 = (X'S'SX)^{-1} X'S'S``, ``Q1 = Q0 Q0'`` and ``Q2 = X Q1 X'`` the
noise-averaged efficiencies are

    VE = tr Q1 / tr (X'X)^{-1}
    PE = tr Q2 / p
    OE = (1 + x_t' Q1 x_t) / (1 + x_t' (X'X)^{-1} x_t)
    RE = (n - 2p + tr Q2) / (n - p)

The RE line follows from ``Y - X beta_s = (I - X Q0) eps``, whose expected
squared norm is ``sigma^2 (n - 2 tr(X Q0) + tr Q2)`` with ``tr(X Q0) = p``,
against ``sigma^2 (n - p)`` for full OLS.

Everything goes through QR factors: with ``SX = Q_s R_s`` we have
``Q1 = R_s^{-1} K R_s^{-T}`` where ``K = Q_s' S S' Q_s``, and ``K = I`` when
``S'S`` is idempotent.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from ._rng import derive_seed
from .errors import PersistentRankFailure, SketchRankError, IllConditionedError
from .regression import DesignMatrix, TestPointPolicy, as_design, checked_qr
from .sketch import SketchOperator, make_sketch

METRICS = ("ve", "pe", "re", "oe")
MAX_COND = 1e12
MAX_ATTEMPTS = 10
QS_RCOND = 1e-6  # below this estimated 1/cond(R_s), form Q_s by Householder


@dataclass(frozen=True)
class EfficiencyReport:
    ve: float
    pe: float
    re: float
    oe: float

    def as_dict(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


def _padded_rows(x: np.ndarray, op: SketchOperator) -> np.ndarray:
    if x.shape[0] == op.n:
        return x
    if x.shape[0] != op.n_data:
        raise ValueError(f"operator acts on {op.n_data} rows, X has {x.shape[0]}")
    return op._pad(x)


def _sketch_factor(sx: np.ndarray, want_q: bool = True):
    try:
        return checked_qr(sx, error=SketchRankError, max_cond=MAX_COND, want_q=want_q)
    except SketchRankError as exc:
        if "condition number" in str(exc):
            raise IllConditionedError(str(exc)) from None
        raise


def _report(dm: DesignMatrix, n, q1, tp: TestPointPolicy) -> EfficiencyReport:
    p = dm.p
    rx, rx_inv = dm.qr[1], dm.r_inverse
    full_q1 = rx_inv @ rx_inv.T           # (X'X)^{-1}
    tr_q1 = float(np.trace(q1))
    # tr(X Q1 X') = ||R Q1^{1/2}||_F^2 computed as sum((R Q1) * R)
    tr_q2 = float(np.sum((rx @ q1) * rx))
    ve = tr_q1 / float(np.sum(rx_inv * rx_inv))
    pe = tr_q2 / p
    re = (n - 2 * p + tr_q2) / (n - p)
    oe = (1.0 + tp.quad(q1)) / (1.0 + tp.quad(full_q1))
    out = EfficiencyReport(ve, pe, re, oe)
    if not all(math.isfinite(v) for v in out.as_dict().values()):
        raise IllConditionedError(f"non-finite efficiency {out}")
    return out


def finite_sample_efficiencies(x, op: SketchOperator, tp: TestPointPolicy | None = None) -> EfficiencyReport:
    """Efficiencies conditional on ``X`` and ``S``, averaged over the noise only.

    Valid for any ``S``. A padded srht operator is evaluated on ``X`` padded
    with zero rows, matching the padded dimensions used by the theory.
    """
    tp = tp or TestPointPolicy()
    dm = as_design(x)
    tp.check(dm.p)
    xm = _padded_rows(dm.entries, op)
    n, p = xm.shape
    sx = op.apply(xm)
    _, rs = _sketch_factor(sx, want_q=False)
    rcond, _ = lapack.dtrcon(rs, norm="1", uplo="U")
    if rcond > QS_RCOND:
        # S' Q_s = S' (SX) R_s^{-1}; safe to form this way when R_s is well conditioned
        g = sla.solve_triangular(rs, op.apply_transpose(sx).T, trans="T").T
    else:
        qs, _ = _sketch_factor(sx)
        g = op.apply_transpose(qs)        # S' Q_s, n x p
    k = g.T @ g                           # Q_s' S S' Q_s
    t = sla.solve_triangular(rs, k)       # R_s^{-1} K
    q1 = sla.solve_triangular(rs, t.T).T  # R_s^{-1} K R_s^{-T}
    q1 = (q1 + q1.T) / 2
    return _report(dm, n, q1, tp)


def finite_sample_orthogonal(x, op: SketchOperator, tp: TestPointPolicy | None = None) -> EfficiencyReport:
    """Cheaper path when ``S'S`` is idempotent: ``Q1 = (X'S'SX)^{-1}``.

    Raises:
        ValueError: if the operator does not satisfy ``(S'S)^2 = S'S``.
    """
    if not op.sts_idempotent:
        dense = op.to_dense()
        sts = dense.T @ dense
        if np.abs(sts @ sts - sts).max() > 1e-10:
            raise ValueError(f"operator {op.method!r} does not have idempotent S'S")
    tp = tp or TestPointPolicy()
    dm = as_design(x)
    tp.check(dm.p)
    xm = _padded_rows(dm.entries, op)
    n, p = xm.shape
    _, rs = _sketch_factor(op.apply(xm), want_q=False)
    rs_inv = sla.solve_triangular(rs, np.eye(p))
    return _report(dm, n, rs_inv @ rs_inv.T, tp)


def efficiencies(x, op: SketchOperator, tp: TestPointPolicy | None = None) -> EfficiencyReport:
    """Pick the orthogonal path when it applies, the general one otherwise."""
    if op.sts_idempotent:
        return finite_sample_orthogonal(x, op, tp)
    return finite_sample_efficiencies(x, op, tp)


def nearest_rank_quantile(values, q: float) -> float:
    v = sorted(values)
    k = max(1, min(len(v), math.ceil(q * len(v))))
    return float(v[k - 1])


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    sd: float
    q05: float
    q95: float

    @classmethod
    def of(cls, values) -> "MetricSummary":
        v = sorted(float(x) for x in values)
        mean = math.fsum(v) / len(v)
        sd = statistics.stdev(v) if len(v) > 1 else 0.0
        return cls(mean, sd, nearest_rank_quantile(v, 0.05), nearest_rank_quantile(v, 0.95))


@dataclass(frozen=True)
class MonteCarloSummary:
    metrics: dict[str, MetricSummary]
    reps: int
    root_seed: int
    retries: int = 0
    realized_rows: tuple[int, ...] = field(default=(), repr=False)
    reports: tuple[EfficiencyReport, ...] = field(default=(), repr=False)

    def __getitem__(self, metric: str) -> MetricSummary:
        return self.metrics[metric]


def draw_report(x, method: str, r: int, seed: int, tp=None, **options):
    """One replicate: draw a sketch and evaluate it, retrying rank failures.

    Attempt 0 uses ``seed`` itself, attempt ``a`` uses ``derive_seed(seed, a)``.
    Returns ``(report, operator, retries)``.
    """
    last = None
    for attempt in range(MAX_ATTEMPTS):
        s = seed if attempt == 0 else derive_seed(seed, attempt)
        try:
            op = make_sketch(method, x, r, s, **options)
            return efficiencies(x, op, tp), op, attempt
        except SketchRankError as exc:
            last = exc
    raise PersistentRankFailure(
        f"{method} r={r}: {MAX_ATTEMPTS} draws rank-deficient (last: {last})"
    )


def monte_carlo_efficiency(
    x,
    method: str,
    r: int,
    reps: int = 10,
    root_seed: int = 0,
    tp: TestPointPolicy | None = None,
    seeds=None,
    **options,
) -> MonteCarloSummary:
    """Average the finite-sample efficiencies over ``reps`` independent sketches.

    Replicate ``k`` uses ``derive_seed(root_seed, k)`` unless explicit ``seeds``
    are supplied. The summary is built from sorted values, so it does not depend
    on replicate order.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    dm = as_design(x)
    if seeds is None:
        seeds = [derive_seed(root_seed, k) for k in range(reps)]
    elif len(seeds) != reps:
        raise ValueError("need one seed per replicate")
    reports, rows, retries = [], [], 0
    for s in seeds:
        rep, op, tries = draw_report(dm, method, r, s, tp, **options)
        reports.append(rep)
        rows.append(op.realized_rows)
        retries += tries
    metrics = {m: MetricSummary.of(getattr(rep, m) for rep in reports) for m in METRICS}
    return MonteCarloSummary(metrics, reps, root_seed, retries, tuple(rows), tuple(reports))
