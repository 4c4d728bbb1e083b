"""End-to-end acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion with the measured numbers. The timing check is
hardware dependent and only reported.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from sketchls.bench import break_even_r, fit_cost_model, time_solve
from sketchls.efficiency import finite_sample_efficiencies, monte_carlo_efficiency
from sketchls.eta import DiscreteDistribution, eta_inverse
from sketchls.experiments import EllipticalSource, ExperimentGrid, default_r_sweep, run_grid
from sketchls.hadamard import fwht, hadamard_matrix
from sketchls.regression import EllipticalSpec, generate_gaussian_design
from sketchls.sketch import haar_sketch, identity_sketch, make_sketch, srht_sketch
from sketchls.theory import (
    AspectRatios,
    mp_normalized_inverse_trace,
    mp_stieltjes_zero,
    predict_elliptical_sampling,
    predict_gaussian_finite,
    predict_iid,
    predict_orthogonal,
    prior_bounds,
    two_point_eta_inverse_symmetric,
)

criterion = pytest.mark.criterion


@criterion("1", "projection and sampling VE within 5% across the r sweep (n=2048)")
def test_sweep_matches_theory(note):
    methods = ("gaussian", "iid_rademacher", "haar", "srht", "uniform_sample")
    worst, count = (0.0, None), 0
    for p in (102, 819):
        grid = ExperimentGrid(2048, p, default_r_sweep(2048, p), methods, reps=10, root_seed=2024, metrics=("ve",))
        assert 8 <= len(grid.r_values) <= 10
        for row in run_grid(grid):
            err = abs(row.empirical_mean - row.theory_value) / row.theory_value
            count += 1
            if err > worst[0]:
                worst = (err, f"{row.method} p={p} r={row.r}")
    note(f"{count} cells, worst rel err {worst[0]:.4f} at {worst[1]}")
    assert worst[0] <= 0.05


@criterion("2", "orthogonal OE at n=1e7, p=1e5, r=1e6 equals 11/10 exactly")
def test_intro_worked_example(note):
    oe = predict_orthogonal(AspectRatios.from_dims(10**7, 10**5, 10**6, exact=True)).oe
    note(f"OE = {oe} = {float(oe):.4f}")
    assert oe == Fraction(11, 10)


@criterion("3", "VE(iid) - VE(orthogonal) = 1 exactly on 100 random pairs")
def test_iid_orthogonal_gap(note):
    rng = np.random.default_rng(3)
    gaps = set()
    for _ in range(100):
        g = Fraction(int(rng.integers(1, 999)), 1000)
        xi = g + (1 - g) * Fraction(int(rng.integers(1, 1001)), 1000)
        a = AspectRatios(g, xi)
        gaps.add(predict_iid(a).ve - predict_orthogonal(a).ve)
    note(f"distinct gaps: {sorted(gaps)}")
    assert gaps == {1}


@criterion("4", "eta-inverse bisection vs two-point closed form, 1000 triples, |diff| <= 1e-8")
def test_eta_inverse_closed_form(note):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        d1, d2 = rng.uniform(0.05, 25.0, size=2)
        g = rng.uniform(0.005, 0.95)
        z = eta_inverse(DiscreteDistribution.two_point(d1, d2), 1 - g)
        worst = max(worst, abs(z - two_point_eta_inverse_symmetric(d1, d2, g)))
    note(f"max abs diff {worst:.2e}")
    assert worst <= 1e-8


@criterion("5", "haar/srht rows orthonormal to 1e-10; sampling S'S idempotent exactly")
def test_orthogonality_and_idempotence(note):
    worst = 0.0
    for n in (256, 1000, 4096):
        r = n // 4
        for op in (haar_sketch(n, r, 1), srht_sketch(n, r, 2)):
            k = op.realized_rows
            sst = op.apply(op.apply_transpose(np.eye(k)))
            worst = max(worst, float(np.abs(sst - np.eye(k)).max()))
        x = generate_gaussian_design(n, 8, seed=n)
        for method in ("uniform_sample", "leverage_sample", "greedy_leverage"):
            op = make_sketch(method, x, r, seed=5)
            sts = op.apply_transpose(op.apply(np.eye(n)))
            assert np.array_equal(sts @ sts, sts), (method, n)
    note(f"max |SS' - I| = {worst:.2e}")
    assert worst <= 1e-10


@criterion("6", "FWHT equals naive Hadamard product (m<=64); involution and isometry at 1024")
def test_fwht(note):
    rng = np.random.default_rng(6)
    naive = max(
        float(np.abs(fwht(v) - hadamard_matrix(m) @ v / math.sqrt(m)).max())
        for m in (2, 4, 8, 16, 32, 64)
        for v in [rng.standard_normal(m)]
    )
    v = rng.standard_normal(1024)
    inv = float(np.abs(fwht(fwht(v)) - v).max())
    iso = abs(np.linalg.norm(fwht(v)) - np.linalg.norm(v))
    note(f"naive {naive:.1e}, involution {inv:.1e}, isometry {iso:.1e}")
    assert naive <= 1e-10 and inv <= 1e-12 and iso <= 1e-12


@criterion("7", "elliptical sampling with point-mass scales reduces to orthogonal (10x10 grid)")
def test_point_mass_reduction(note):
    d = DiscreteDistribution.point_mass(1.0)
    worst = 0.0
    for g in np.linspace(0.02, 0.6, 10):
        for xi in np.linspace(g + 0.02, 1.0, 10):
            a = AspectRatios(g, xi)
            e, o = predict_elliptical_sampling(d, "leverage", a), predict_orthogonal(a)
            worst = max(worst, max(abs(e.ve - o.ve), abs(e.pe - o.pe), abs(e.oe - o.oe)))
    note(f"max abs diff {worst:.1e}")
    assert worst <= 1e-10


@criterion("8", "two-point elliptical leverage sampling, randomized and greedy VE within 7%")
def test_elliptical_leverage(note):
    law = DiscreteDistribution.two_point(1.0, 9.0)
    xis = (0.3, 0.5, 0.8)
    grid = ExperimentGrid(4000, 200, tuple(int(x * 4000) for x in xis), ("leverage", "greedy"), reps=50,
                          root_seed=8, data_source=EllipticalSource(EllipticalSpec(law)),
                          metrics=("ve",), redraw_data=True)
    rows = {(r.method, round(r.xi, 3)): r for r in run_grid(grid)}
    errs = {k: abs(r.empirical_mean - r.theory_value) / r.theory_value for k, r in rows.items()}
    worst = max(errs, key=errs.get)
    greedy, randomized = rows[("greedy_leverage", 0.3)], rows[("leverage_sample", 0.3)]
    note(f"worst rel err {errs[worst]:.4f} at {worst[0]} xi={worst[1]}; "
         f"VE at xi=0.3 greedy {greedy.empirical_mean:.3f} vs randomized {randomized.empirical_mean:.3f}")
    assert errs[worst] <= 0.07
    assert greedy.empirical_mean <= randomized.empirical_mean


@criterion("9", "iid sketch RE within 5% of xi/(xi-gamma) at n=2048, p=102, r=1024")
def test_re_limit(note):
    x = generate_gaussian_design(2048, 102, seed=9)
    mc = monte_carlo_efficiency(x, "iid_rademacher", 1024, reps=20, root_seed=9)
    target = 0.5 / (0.5 - 102 / 2048)
    err = abs(mc["re"].mean - target) / target
    note(f"RE {mc['re'].mean:.4f} vs {target:.4f} (rel err {err:.4f})")
    assert err <= 0.05


@criterion("10", "earlier PE/RE bounds strictly exceed the predictions (n=2000, gamma=0.05)")
def test_prior_bounds_dominate(note):
    n, p = 2000, 100
    tightest = math.inf
    for xi in np.linspace(0.15, 1.0, 18):
        r = int(round(xi * n))
        gauss = predict_gaussian_finite(n, p, r)
        orth = predict_orthogonal(AspectRatios.from_dims(n, p, r))
        sub, had = prior_bounds(n, p, r, "subgaussian"), prior_bounds(n, p, r, "hadamard")
        pairs = ((sub.pe, gauss.pe), (sub.re, gauss.re), (had.pe, orth.pe), (had.re, orth.re))
        for bound, pred in pairs:
            assert bound > pred, (r, bound, pred)
            tightest = min(tightest, bound / pred)
    note(f"smallest bound/prediction ratio {tightest:.2f}")


@criterion("11", "normalized trace of (Z'Z/n)^{-1} within 3% of 2 at n=2000, p=1000")
def test_marchenko_pastur(note):
    z = np.random.default_rng(11).standard_normal((2000, 1000))
    val = mp_normalized_inverse_trace(z)
    target = mp_stieltjes_zero(0.5)
    note(f"(1/p) tr = {val:.4f} vs {target}; (1/n) tr = {val / 2:.4f}")
    assert abs(val - target) / target <= 0.03


@criterion("12", "identity sketch gives all four efficiencies 1 to 1e-10 (20 problems)")
def test_identity_sketch(note):
    rng = np.random.default_rng(12)
    worst = 0.0
    for k in range(20):
        n = int(rng.integers(10, 400))
        p = int(rng.integers(1, n // 2))
        x = generate_gaussian_design(n, p, seed=k)
        rep = finite_sample_efficiencies(x, identity_sketch(n))
        worst = max(worst, max(abs(v - 1) for v in rep.as_dict().values()))
    note(f"max |eff - 1| = {worst:.1e}")
    assert worst <= 1e-10


@criterion("13", "srht at r=n/8 vs full OLS timing (n=16384, p=512); break-even monotone in c", gating=False)
def test_timing_report(note):
    n, p = 16384, 512
    x = generate_gaussian_design(n, p, seed=13)
    y = np.random.default_rng(13).standard_normal(n)
    full = time_solve(x.entries, y, "full", reps=3)
    sk = [time_solve(x.entries, y, "srht", r, reps=3) for r in (n // 16, n // 8, n // 4)]
    speedup = full.median_seconds / sk[1].median_seconds
    text = f"full {full.median_seconds:.3f}s, srht r=n/8 {sk[1].median_seconds:.3f}s (x{speedup:.2f})"
    try:
        model = fit_cost_model([full, *sk])
        cs = [c for c in np.linspace(0.1, 1.0, 19)]
        vals = []
        for c in cs:
            try:
                vals.append(break_even_r(model, n, p, c))
            except ValueError:
                continue
        mono = all(b > a for a, b in zip(vals, vals[1:]))
        text += f"; break-even r monotone over {len(vals)} feasible c: {mono}"
    except ValueError as exc:
        text += f"; cost model not fitted ({exc})"
    note(text)


@criterion("X1", "noise-averaged formulas agree with direct simulation of the noise (supplementary)")
def test_noise_simulation_cross_check(note):
    n, p, r = 120, 8, 50
    x = generate_gaussian_design(n, p, seed=21)
    op = make_sketch("gaussian", x, r, seed=22)
    rep = finite_sample_efficiencies(x, op)
    s = op.to_dense()
    rng = np.random.default_rng(23)
    eps = rng.standard_normal((n, 40000))
    xt = rng.standard_normal((p, 40000))
    b_s = np.linalg.lstsq(s @ x.entries, s @ eps, rcond=None)[0]
    b = np.linalg.lstsq(x.entries, eps, rcond=None)[0]
    xe = x.entries
    sim = {
        "ve": np.mean(np.sum(b_s**2, 0)) / np.mean(np.sum(b**2, 0)),
        "pe": np.mean(np.sum((xe @ b_s) ** 2, 0)) / np.mean(np.sum((xe @ b) ** 2, 0)),
        "re": np.mean(np.sum((eps - xe @ b_s) ** 2, 0)) / np.mean(np.sum((eps - xe @ b) ** 2, 0)),
        "oe": np.mean(1 + np.sum(xt * b_s, 0) ** 2) / np.mean(1 + np.sum(xt * b, 0) ** 2),
    }
    errs = {m: abs(sim[m] - getattr(rep, m)) / getattr(rep, m) for m in sim}
    note(", ".join(f"{m} {errs[m]:.4f}" for m in errs))
    assert max(errs.values()) <= 0.03


@criterion("X2", "uniform Bernoulli sampling just above p (r=1.5p, outside the sweep)", gating=False)
def test_uniform_near_p_report(note):
    x = generate_gaussian_design(2048, 102, seed=2024)
    mc = monte_carlo_efficiency(x, "uniform_sample", 153, reps=10, root_seed=2024)
    limit = predict_orthogonal(AspectRatios.from_dims(2048, 102, 153)).ve
    note(f"mean VE {mc['ve'].mean:.2f} vs limit {limit:.2f} (rel err {mc['ve'].mean / limit - 1:+.3f}); "
         f"kept rows {min(mc.realized_rows)}..{max(mc.realized_rows)}")
