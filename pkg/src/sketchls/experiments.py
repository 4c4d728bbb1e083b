"""Experiment grids: Monte-Carlo efficiencies joined with their predictions.

Output rows are sorted by ``(method, r, metric)`` before they are written, so
files do not depend on scheduling. Floats are written with ``repr`` and the
same grid and seed reproduce byte-identical CSV files.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import derive_seed
from .efficiency import METRICS, MetricSummary, draw_report, monte_carlo_efficiency
from .eta import DiscreteDistribution
from .hadamard import next_power_of_two
from .regression import (
    DesignMatrix,
    EllipticalSpec,
    TestPointPolicy,
    generate_elliptical_design,
    generate_gaussian_design,
    load_csv_standardize,
)
from .sketch import canonical_method
from .theory import (
    AspectRatios,
    predict_elliptical_sampling,
    predict_gaussian_finite,
    predict_greedy_leverage,
    predict_iid,
    predict_orthogonal,
)

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "method", "n", "p", "r", "padded_n", "gamma", "xi", "metric",
    "empirical_mean", "empirical_sd", "empirical_q05", "empirical_q95",
    "theory_value", "replicates", "retries", "note",
)
ROTATION_CAVEAT = "theory assumes rotationally invariant X"
DATA_KEY = 1_000_003  # derive_seed key reserved for data draws


@dataclass(frozen=True)
class GaussianSource:
    sigma_factor: np.ndarray | None = None

    def draw(self, n, p, seed):
        x = generate_gaussian_design(n, p, self.sigma_factor, seed)
        f = np.eye(p) if self.sigma_factor is None else np.asarray(self.sigma_factor)
        return x, TestPointPolicy(covariance=f.T @ f), DiscreteDistribution.point_mass(1.0)


@dataclass(frozen=True)
class EllipticalSource:
    spec: EllipticalSpec

    def draw(self, n, p, seed):
        x, w = generate_elliptical_design(n, p, self.spec, seed)
        law = self.spec.scale_law
        if not isinstance(law, DiscreteDistribution):
            # continuous scale laws are answered on the realized sample
            law = DiscreteDistribution.from_samples(w * w)
        f = np.eye(p) if self.spec.sigma_factor is None else self.spec.sigma_factor
        return x, TestPointPolicy(covariance=law.mean() * (f.T @ f)), law


@dataclass(frozen=True)
class CsvSource:
    path: str
    response: str | int

    def draw(self, n=None, p=None, seed=None):
        x, _ = load_csv_standardize(self.path, self.response)
        xm = x.entries
        return x, TestPointPolicy(covariance=xm.T @ xm / x.n), None


@dataclass(frozen=True)
class ExperimentGrid:
    """A sweep over ``methods x r_values``.

    ``redraw_data`` draws a fresh ``X`` for every replicate (needed for
    deterministic sketches such as greedy leverage); otherwise ``X`` is drawn
    once and all replicates condition on it.
    """

    n: int
    p: int
    r_values: tuple[int, ...]
    methods: tuple[str, ...]
    reps: int = 10
    root_seed: int = 0
    data_source: GaussianSource | EllipticalSource | CsvSource = field(default_factory=GaussianSource)
    metrics: tuple[str, ...] = METRICS
    redraw_data: bool = False
    greedy_arg_convention: str = "gamma-over-xi"
    workers: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(canonical_method(m) for m in self.methods))
        object.__setattr__(self, "r_values", tuple(int(r) for r in self.r_values))
        if not self.methods:
            raise ValueError("methods must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if any(r <= self.p for r in self.r_values):
            raise ValueError(f"every r must exceed p={self.p}")
        if any(r > self.n for r in self.r_values):
            raise ValueError(f"every r must be at most n={self.n}")
        bad = set(self.metrics) - set(METRICS)
        if bad:
            raise ValueError(f"unknown metrics {sorted(bad)}")


@dataclass(frozen=True)
class ResultRow:
    method: str
    n: int
    p: int
    r: int
    gamma: float
    xi: float
    metric: str
    empirical_mean: float
    empirical_sd: float
    empirical_q05: float
    empirical_q95: float
    theory_value: float | None
    replicates: int
    padded_n: int | None = None
    retries: int = 0
    note: str = ""

    def sort_key(self):
        return (self.method, self.r, self.metric)


def theory_for(method: str, n: int, p: int, r: int, w2_law=None,
               greedy_arg_convention: str = "gamma-over-xi", elliptical: bool = False):
    """The prediction matching ``method``; ``(report or None, note)``."""
    if method == "gaussian":
        return predict_gaussian_finite(n, p, r), ""
    if method in ("iid_rademacher", "iid_sparse"):
        return predict_iid(AspectRatios.from_dims(n, p, r)), ""
    if method == "srht":
        m = next_power_of_two(n)
        return predict_orthogonal(AspectRatios.from_dims(m, p, min(r, m))), ""
    if method == "haar":
        return predict_orthogonal(AspectRatios.from_dims(n, p, r)), ""
    a = AspectRatios.from_dims(n, p, r)
    if method == "uniform_sample":
        if elliptical and w2_law is not None:
            return predict_elliptical_sampling(w2_law, np.full(len(w2_law), a.xi), a), ""
        return predict_orthogonal(a), "" if w2_law is not None else ROTATION_CAVEAT
    if w2_law is None:
        return None, "no elliptical scale law for this data source"
    if method == "leverage_sample":
        return predict_elliptical_sampling(w2_law, "leverage", a), ""
    return predict_greedy_leverage(w2_law, a, greedy_arg_convention), ""


def _theory_dims(method, n, p, r):
    if method == "srht":
        m = next_power_of_two(n)
        return m, p, min(r, m), (m if m != n else None)
    return n, p, r, None


def _rows_for_cell(grid: ExperimentGrid, method, r, summary, reps, retries, n, p, w2_law, elliptical, note=""):
    tn, tp_, tr, padded = _theory_dims(method, n, p, r)
    try:
        report, tnote = theory_for(method, n, p, r, w2_law, grid.greedy_arg_convention, elliptical)
    except Exception as exc:  # infeasible predictions leave the column empty
        report, tnote = None, f"theory unavailable: {exc}"
    if report is None:
        log.warning("%s r=%d: %s", method, r, tnote)
    note = "; ".join(s for s in (note, tnote) if s)
    rows = []
    for metric in grid.metrics:
        s: MetricSummary = summary[metric]
        tv = None if report is None else report.as_dict()[metric]
        rows.append(ResultRow(
            method, n, p, r, tp_ / tn, tr / tn, metric, s.mean, s.sd, s.q05, s.q95,
            None if tv is None else float(tv), reps, padded, retries, note,
        ))
    return rows


def _run_cell(grid: ExperimentGrid, method: str, r: int, fixed):
    cell_seed = derive_seed(grid.root_seed, grid.methods.index(method), r)
    if not grid.redraw_data:
        x, tp, law = fixed
        mc = monte_carlo_efficiency(x, method, r, grid.reps, cell_seed, tp, **grid.options)
        return _rows_for_cell(grid, method, r, mc.metrics, grid.reps, mc.retries, x.n, x.p, law,
                              isinstance(grid.data_source, EllipticalSource))
    reports, retries = [], 0
    law = None
    for k in range(grid.reps):
        x, tp, law = grid.data_source.draw(grid.n, grid.p, derive_seed(grid.root_seed, DATA_KEY, k))
        rep, _, tries = draw_report(x, method, r, derive_seed(cell_seed, k), tp, **grid.options)
        reports.append(rep)
        retries += tries
    summary = {m: MetricSummary.of(getattr(rep, m) for rep in reports) for m in METRICS}
    if isinstance(grid.data_source, EllipticalSource) and isinstance(grid.data_source.spec.scale_law, DiscreteDistribution):
        law = grid.data_source.spec.scale_law
    return _rows_for_cell(grid, method, r, summary, grid.reps, retries, grid.n, grid.p, law,
                          isinstance(grid.data_source, EllipticalSource), "data redrawn per replicate")


def run_grid(grid: ExperimentGrid) -> list[ResultRow]:
    """Monte-Carlo summary and matching prediction for every ``(method, r)``."""
    fixed = None
    if not grid.redraw_data:
        fixed = grid.data_source.draw(grid.n, grid.p, derive_seed(grid.root_seed, DATA_KEY))
    cells = [(m, r) for m in grid.methods for r in grid.r_values]

    def job(cell):
        method, r = cell
        try:
            return _run_cell(grid, method, r, fixed)
        except Exception as exc:
            raise type(exc)(f"[method={method}, r={r}] {exc}") from exc

    if grid.workers > 1:
        with ThreadPoolExecutor(grid.workers) as pool:
            chunks = list(pool.map(job, cells))
    else:
        chunks = [job(c) for c in cells]
    return sorted((row for chunk in chunks for row in chunk), key=ResultRow.sort_key)


def run_empirical(path, response, methods, r_values, reps: int = 10, seed: int = 0,
                  metrics=("re", "oe"), workers: int = 1) -> list[ResultRow]:
    """Sketching on a standardized CSV dataset, conditioning on its ``X``.

    OE uses the in-sample covariance ``X'X/n`` as the test-point law. Uniform
    sampling rows carry a caveat note: the prediction assumes rotational
    invariance, which real data need not satisfy.
    """
    source = CsvSource(str(path), response)
    x, tp, _ = source.draw()
    grid = ExperimentGrid(x.n, x.p, tuple(r_values), tuple(methods), reps, seed, source,
                          tuple(metrics), workers=workers)
    return run_grid_on(grid, x, tp)


def run_grid_on(grid: ExperimentGrid, x: DesignMatrix, tp: TestPointPolicy) -> list[ResultRow]:
    """``run_grid`` with the design supplied directly (no elliptical law)."""
    fixed = (x, tp, None)
    rows = []
    for method in grid.methods:
        for r in grid.r_values:
            rows.extend(_run_cell(grid, method, r, fixed))
    return sorted(rows, key=ResultRow.sort_key)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(rows, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in sorted(rows, key=ResultRow.sort_key):
            d = asdict(row)
            w.writerow(_fmt(d[c]) for c in RESULT_COLUMNS)


def read_results_csv(path) -> list[ResultRow]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            num = lambda k: float(rec[k]) if rec[k] != "" else None  # noqa: E731
            out.append(ResultRow(
                rec["method"], int(rec["n"]), int(rec["p"]), int(rec["r"]),
                num("gamma"), num("xi"), rec["metric"], num("empirical_mean"),
                num("empirical_sd"), num("empirical_q05"), num("empirical_q95"),
                num("theory_value"), int(rec["replicates"]),
                int(rec["padded_n"]) if rec["padded_n"] else None,
                int(rec["retries"]), rec["note"],
            ))
    return out


def write_manifest(path, config: dict, seed: int) -> None:
    """Resolved configuration, seed and package version as ``key = value`` lines."""
    lines = [f"version = {__version__}", f"seed = {seed}"]
    lines += [f"{k} = {config[k]}" for k in sorted(config) if k != "seed"]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes equal underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def default_r_sweep(n: int, p: int, count: int = 9, reps: int = 10, tolerance: float = 0.05) -> tuple[int, ...]:
    """Geometric sweep of ``count`` sketch sizes ending at ``n``.

    Bernoulli samplers keep a random number of rows with spread about
    ``sqrt(r)``, so VE fluctuates by roughly ``sqrt(r) / (r - p)`` per draw.
    The sweep starts where three standard errors of a ``reps``-draw mean stay
    inside ``tolerance``: ``r - p >= 3 sqrt(r) / (tolerance sqrt(reps))``.
    """
    c = 3.0 / (tolerance * math.sqrt(reps))
    root = (c + math.sqrt(c * c + 4 * p)) / 2
    lo = min(math.ceil(root * root), n)
    vals = np.unique(np.round(np.geomspace(lo, n, count)).astype(int))
    return tuple(int(v) for v in vals)
