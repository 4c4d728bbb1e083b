"""Closed-form efficiency predictions.

Limits are taken as ``n, p, r -> inf`` with ``p/n -> gamma`` and
``r/n -> xi``, ``0 < gamma < xi <= 1``. Functions are written with plain
arithmetic, so passing :class:`fractions.Fraction` ratios gives exact results.

RE is not among the published limits; it is supplied everywhere through the
trace identity ``RE = (1 - 2 gamma + gamma PE) / (1 - gamma)`` and flagged with
``re_derived=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InfeasibleError
from .eta import DiscreteDistribution, eta_inverse

GREEDY_ARG_CONVENTIONS = ("gamma-over-xi", "gamma")
GREEDY_TRUNCATIONS = ("renormalized", "subprobability")


@dataclass(frozen=True)
class AspectRatios:
    gamma: float
    xi: float

    def __post_init__(self):
        if not 0 < self.gamma < self.xi <= 1:
            raise ValueError(f"need 0 < gamma < xi <= 1, got gamma={self.gamma}, xi={self.xi}")

    @classmethod
    def from_dims(cls, n: int, p: int, r: int, exact: bool = False) -> "AspectRatios":
        if exact:
            return cls(Fraction(p, n), Fraction(r, n))
        return cls(p / n, r / n)


@dataclass(frozen=True)
class TheoryReport:
    ve: float
    pe: float
    oe: float
    re: float | None = None
    re_derived: bool = True
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def as_dict(self) -> dict:
        return {"ve": self.ve, "pe": self.pe, "re": self.re, "oe": self.oe}


def re_from_pe(gamma, pe):
    return (1 - 2 * gamma + gamma * pe) / (1 - gamma)


def predict_gaussian_finite(n: int, p: int, r: int) -> TheoryReport:
    """Exact VE = PE = 1 + (n-p)/(r-p-1) for a Gaussian sketch of any full-rank X.

    OE uses the finite version ``(nr - p^2) / (n (r - p))`` of the limit for
    ``X = Z Sigma^{1/2}`` with a test point from the same population. RE is
    exact in expectation: ``(n - 2p + p PE) / (n - p)``.
    """
    n, p, r = int(n), int(p), int(r)
    if not r - p > 1:
        raise ValueError(f"need r - p > 1, got r={r}, p={p}")
    if not n > p:
        raise ValueError("need n > p")
    ve = 1 + Fraction(n - p, r - p - 1)
    oe = Fraction(n * r - p * p, n * (r - p))
    re = re_from_pe(Fraction(p, n), ve)
    return TheoryReport(float(ve), float(ve), float(oe), float(re))


def predict_iid(a: AspectRatios) -> TheoryReport:
    g, x = a.gamma, a.xi
    ve = 1 + (1 - g) / (x - g)
    return TheoryReport(ve, ve, (x - g * g) / (x - g), x / (x - g))


def predict_orthogonal(a: AspectRatios) -> TheoryReport:
    """Haar, SRHT and uniform sampling (the last for rotationally invariant X)."""
    g, x = a.gamma, a.xi
    ve = (1 - g) / (x - g)
    return TheoryReport(ve, ve, (1 - g) / (1 - g / x), re_from_pe(g, ve))


def leverage_keep_probabilities(w2: DiscreteDistribution, a: AspectRatios) -> np.ndarray:
    """Limit of ``min(r/p h_ii, 1)`` per atom of ``w^2``."""
    z = eta_inverse(w2, 1 - float(a.gamma))
    h = 1.0 - 1.0 / (1.0 + w2.atoms * z)
    return np.minimum(float(a.xi) / float(a.gamma) * h, 1.0)


def thinned_law(w2: DiscreteDistribution, keep) -> DiscreteDistribution:
    """Law of ``s w^2`` where ``s | w^2 = a_k`` is Bernoulli(``keep[k]``)."""
    keep = np.asarray(keep, dtype=float)
    atoms = np.concatenate([w2.atoms, np.zeros(w2.atoms.size)])
    weights = np.concatenate([w2.weights * keep, w2.weights * (1.0 - keep)])
    weights = np.clip(weights, 0.0, None)
    return DiscreteDistribution(atoms, weights / weights.sum())


def _feasible_inverse(d: DiscreteDistribution, y: float, what: str) -> float:
    if d.zero_mass >= y:
        raise InfeasibleError(
            f"{what}: mass {d.zero_mass:.6g} at zero is not below {y:.6g}; "
            "too few rows survive sampling for this gamma"
        )
    return eta_inverse(d, y)


def _sampling_report(w2, keep_probs, gamma, inv_sw2, inv_w2, **meta) -> TheoryReport:
    mean_w2 = w2.mean()
    ve = inv_sw2 / inv_w2
    dropped = float(np.dot(w2.weights, w2.atoms * (1.0 - np.asarray(keep_probs))))
    pe = 1.0 + dropped * inv_sw2 / gamma
    oe = (1.0 + mean_w2 * inv_sw2) / (1.0 + mean_w2 * inv_w2)
    return TheoryReport(ve, pe, oe, re_from_pe(gamma, pe), meta=meta)


def predict_elliptical_sampling(w2: DiscreteDistribution, rule, a: AspectRatios) -> TheoryReport:
    """Independent row sampling on elliptical data.

    ``rule`` is ``"leverage"`` or an array of keep probabilities, one per atom
    of ``w2`` (in ``w2.atoms`` order). Probabilities are clipped to ``[0, 1]``
    atom by atom before the law of ``s w^2`` is formed.
    """
    gamma = float(a.gamma)
    if isinstance(rule, str):
        if rule != "leverage":
            raise ValueError(f"unknown sampling rule {rule!r}")
        keep = leverage_keep_probabilities(w2, a)
    else:
        keep = np.clip(np.broadcast_to(np.asarray(rule, dtype=float), w2.atoms.shape), 0.0, 1.0)
    inv_w2 = eta_inverse(w2, 1 - gamma)
    sw2 = thinned_law(w2, keep)
    inv_sw2 = _feasible_inverse(sw2, 1 - gamma, "elliptical sampling")
    return _sampling_report(w2, keep, gamma, inv_sw2, inv_w2, keep=keep, sw2=sw2)


def greedy_keep_fractions(w2: DiscreteDistribution, xi: float) -> np.ndarray:
    """Per-atom kept fraction when the top ``xi`` mass of ``w^2`` is retained.

    The atom straddling the ``1 - xi`` quantile is split so that exactly
    ``xi`` of the mass is kept.
    """
    keep = np.zeros(w2.atoms.size)
    remaining = float(xi)
    for k in range(w2.atoms.size - 1, -1, -1):
        if remaining <= 0:
            break
        take = min(w2.weights[k], remaining)
        keep[k] = take / w2.weights[k]
        remaining -= take
    return keep


def predict_greedy_leverage(
    w2: DiscreteDistribution,
    a: AspectRatios,
    arg_convention: str = "gamma-over-xi",
    truncation: str = "renormalized",
) -> TheoryReport:
    """Keep the ``r`` rows with the largest leverage (largest ``w^2``).

    The kept law ``w~^2`` is either the top-``xi`` part renormalized to a
    probability law or the sub-probability truncation with an atom of mass
    ``1 - xi`` at zero. Its eta-inverse is evaluated at ``1 - gamma/xi``
    (``arg_convention="gamma-over-xi"``) or at ``1 - gamma`` (``"gamma"``).
    Renormalized at ``1 - gamma/xi`` and sub-probability at ``1 - gamma``
    are the same number; that pairing is the default and is what Monte Carlo
    supports. PE always uses ``E[w^2 1(w^2 below the cut)]`` over the full law.
    """
    if arg_convention not in GREEDY_ARG_CONVENTIONS:
        raise ValueError(f"arg_convention must be one of {GREEDY_ARG_CONVENTIONS}")
    if truncation not in GREEDY_TRUNCATIONS:
        raise ValueError(f"truncation must be one of {GREEDY_TRUNCATIONS}")
    gamma, xi = float(a.gamma), float(a.xi)
    keep = greedy_keep_fractions(w2, xi)
    kept_w = w2.weights * keep
    if truncation == "renormalized":
        mask = kept_w > 0
        law = DiscreteDistribution(w2.atoms[mask], kept_w[mask] / kept_w[mask].sum())
    else:
        law = thinned_law(w2, keep)
    y = 1 - gamma / xi if arg_convention == "gamma-over-xi" else 1 - gamma
    inv_w2 = eta_inverse(w2, 1 - gamma)
    inv_kept = _feasible_inverse(law, y, "greedy leverage")
    return _sampling_report(
        w2, keep, gamma, inv_kept, inv_w2, keep=keep, kept_law=law,
        arg_convention=arg_convention, truncation=truncation,
    )


def two_point_eta_inverse(a1: float, a2: float, y: float, p1: float = 0.5) -> float:
    """Closed-form ``eta^{-1}(y)`` for the law ``{a1: p1, a2: 1 - p1}``.

    Positive root of ``y a1 a2 z^2 + (y (a1 + a2) - p1 a2 - (1-p1) a1) z + y - 1 = 0``.
    """
    p2 = 1.0 - p1
    qa = y * a1 * a2
    qb = y * (a1 + a2) - p1 * a2 - p2 * a1
    qc = y - 1.0
    return (-qb + math.sqrt(qb * qb - 4 * qa * qc)) / (2 * qa)


def two_point_eta_inverse_symmetric(d1sq: float, d2sq: float, gamma: float) -> float:
    """``eta^{-1}(1 - gamma)`` for ``{d1^2: 1/2, d2^2: 1/2}`` in the published
    arrangement, with the linear coefficient squared under the root."""
    s = d1sq + d2sq
    b = s - s / (2 * (1 - gamma))
    return (-b + math.sqrt(b * b + 4 * d1sq * d2sq * gamma / (1 - gamma))) / (2 * d1sq * d2sq)


def two_point_leverage_probabilities(d1sq: float, d2sq: float, gamma: float, xi: float):
    """Unclipped ``(pi_1, pi_2)``; they satisfy ``pi_1 + pi_2 = 2 xi``."""
    z = two_point_eta_inverse_symmetric(d1sq, d2sq, gamma)
    return tuple(xi / gamma * (1 - 1 / (1 + d * z)) for d in (d1sq, d2sq))


def two_point_greedy_eta_inverse(d1sq: float, d2sq: float, gamma: float, xi: float) -> float:
    """``eta^{-1}(1 - gamma/xi)`` of the renormalized top-``xi`` law, ``d1 < d2``."""
    if xi <= 0.5:
        return gamma / (d2sq * (xi - gamma))
    b = d1sq + d2sq - ((2 * xi - 1) * d2sq + d1sq) / (2 * (xi - gamma))
    return (-b + math.sqrt(b * b + 4 * d1sq * d2sq * gamma / (xi - gamma))) / (2 * d1sq * d2sq)


@dataclass(frozen=True)
class PriorBounds:
    method: str
    pe: float
    re: float


def prior_bounds(n: int, p: int, r: int, method: str) -> PriorBounds:
    """Earlier high-probability upper bounds on PE and RE (natural log)."""
    if method == "subgaussian":
        return PriorBounds(method, 44 * (1 + n / r), 1 + 44 * p / r)
    if method == "hadamard":
        lg = math.log(n * p)
        return PriorBounds(method, 1 + 40 * lg * (1 + p / r), 40 * lg * (1 + n / r))
    raise ValueError(f"method must be 'subgaussian' or 'hadamard', got {method!r}")


def mp_stieltjes_zero(gamma: float) -> float:
    """Marchenko-Pastur Stieltjes transform at 0: ``1 / (1 - gamma)``."""
    if not 0 <= gamma < 1:
        raise ValueError(f"need 0 <= gamma < 1, got {gamma}")
    return 1 / (1 - gamma)


def mp_normalized_inverse_trace(z: np.ndarray) -> float:
    """``(1/p) tr[(Z'Z/n)^{-1}]`` for an ``n x p`` sample, via Cholesky."""
    n, p = z.shape
    c = np.linalg.cholesky(z.T @ z / n)
    ci = np.linalg.solve(c, np.eye(p))
    return float(np.sum(ci * ci)) / p
