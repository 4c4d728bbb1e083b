import csv
import threading

import numpy as np
import pytest

from sketchls import bench
from sketchls.bench import (
    REFERENCE_PROFILE,
    CostModel,
    TimingRecord,
    break_even_oe_bound,
    break_even_r,
    fit_cost_model,
    time_solve,
    write_timing_csv,
)
from sketchls.errors import InfeasibleError
from sketchls.regression import generate_gaussian_design


@pytest.fixture(scope="module")
def problem():
    x = generate_gaussian_design(4000, 100, seed=1)
    return x.entries, np.random.default_rng(0).standard_normal(4000)


def test_full_timing_repeatable(problem):
    a = time_solve(*problem, "full", reps=5)
    b = time_solve(*problem, "full", reps=5)
    assert len(a.samples) == 5 and a.median_seconds > 0
    assert 0.5 < a.median_seconds / b.median_seconds < 2.0


def test_keep_all_sampling_close_to_full(problem):
    full = time_solve(*problem, "full", reps=7)
    keep = time_solve(*problem, "uniform_sample", r=4000, reps=7)
    assert keep.median_seconds < 2.0 * full.median_seconds


def test_reps_and_r_validation(problem):
    with pytest.raises(ValueError):
        time_solve(*problem, "full", reps=2)
    with pytest.raises(ValueError):
        time_solve(*problem, "srht", reps=3)


def test_concurrent_use_refused(problem):
    bench._LATCH.acquire()
    try:
        with pytest.raises(RuntimeError):
            time_solve(*problem, "full", reps=3)
    finally:
        bench._LATCH.release()


def _synthetic(model):
    recs = []
    for n, p in ((4096, 64), (8192, 128), (16384, 256)):
        recs.append(TimingRecord("full", n, p, n, model.full_time(n, p), 0.0))
        for r in (n // 8, n // 4, n // 2):
            recs.append(TimingRecord("srht", n, p, r, model.sketch_time(n, p, r), 0.0))
    return recs


def test_fit_recovers_known_model():
    truth = CostModel(3e-11, 1.5e-9, 5e-11)
    fit = fit_cost_model(_synthetic(truth))
    for name in ("a_full", "a_fwht", "a_solve"):
        assert getattr(fit, name) == pytest.approx(getattr(truth, name), rel=0.01)
    assert len(fit.residuals) == len(_synthetic(truth))
    assert max(abs(r) for r in fit.residuals) < 1e-8


def test_fit_underdetermined():
    with pytest.raises(InfeasibleError):
        fit_cost_model([TimingRecord("srht", 100, 10, 50, 1e-3, 0.0)])
    with pytest.raises(InfeasibleError):
        fit_cost_model([TimingRecord("full", 100, 10, 100, 1e-3, 0.0), TimingRecord("srht", 100, 10, 50, 1e-3, 0.0)])


def test_fit_on_measurements(problem):
    x, y = problem
    recs = [time_solve(x, y, "full", reps=3)]
    recs += [time_solve(x, y, "srht", r, reps=3) for r in (500, 1000, 2000)]
    fit = fit_cost_model(recs)
    assert fit.a_full > 0 and len(fit.residuals) == 4


def test_break_even_examples():
    assert break_even_r(CostModel(1e-10, 0.0, 1e-10), 1000, 10, 1.0) == pytest.approx(1000)
    n, p = 70_000, 14_000
    assert break_even_r(REFERENCE_PROFILE, n, p, 1.0) / n == pytest.approx(0.6, abs=0.02)
    with pytest.raises(InfeasibleError):
        break_even_r(REFERENCE_PROFILE, n, p, 0.1)
    with pytest.raises(ValueError):
        break_even_r(REFERENCE_PROFILE, n, p, 0.0)


def test_break_even_monotone_in_c():
    vals = [break_even_r(REFERENCE_PROFILE, 70_000, 14_000, c) for c in np.linspace(0.65, 1.0, 30)]
    assert np.all(np.diff(vals) > 0)


def test_break_even_oe_bound_formula():
    n, p, c = 70_000, 14_000, 0.9
    g = p / n
    floor = 500 * np.log(n) / p
    assert break_even_oe_bound(REFERENCE_PROFILE, n, p, c) == pytest.approx((1 - g) * (1 + g / (c - floor - g)), rel=1e-12)


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(0.0, 1e-9, 1e-10)
    with pytest.raises(ValueError):
        CostModel(1e-10, -1.0, 1e-10)


def test_timing_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_timing_csv([TimingRecord("full", 10, 2, 10, 0.5, 0.1)], path)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["method", "n", "p", "r", "median_seconds", "iqr_seconds"]
    assert rows[1][:4] == ["full", "10", "2", "10"]
