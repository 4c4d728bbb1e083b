"""Data model, least squares, leverage scores and data generators."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from ._rng import derive_seed, make_rng
from .errors import DataError, RankDeficiencyError
from .eta import DiscreteDistribution

SCALE_CONVENTIONS = ("sqrt", "chisq")
_TRCON_MARGIN = 1e3


def checked_qr(a: np.ndarray, error=RankDeficiencyError, max_cond: float | None = None, want_q: bool = True):
    """Thin QR of ``a`` with a rank check on the singular values of ``R``.

    Rank is declared deficient when a singular value falls below
    ``sigma_max * rows * eps``. With ``max_cond`` set, a condition number above
    it raises as well. A cheap 1-norm condition estimate of the triangular
    factor skips the SVD when it is far inside both limits. With
    ``want_q=False`` only ``R`` is formed and ``None`` stands in for ``Q``.
    """
    rows, cols = a.shape
    if rows < cols:
        raise error(f"{rows}x{cols} matrix cannot have full column rank")
    if want_q:
        q, r = np.linalg.qr(a, mode="reduced")
    else:
        q, r = None, np.linalg.qr(a, mode="r")
    limit = 1.0 / (rows * np.finfo(float).eps)
    if max_cond is not None:
        limit = min(limit, max_cond)
    rcond, info = lapack.dtrcon(r, norm="1", uplo="U")
    # kappa_2 <= cols * kappa_1; the estimate can be low, hence the margin
    if info == 0 and rcond > 0 and cols * _TRCON_MARGIN / rcond < limit:
        return q, r
    sv = sla.svdvals(r)
    smax, smin = sv[0], sv[-1]
    if not np.isfinite(smax) or smax == 0.0 or smin <= smax * rows * np.finfo(float).eps:
        raise error(f"column rank below {cols} (singular values {smax:.3e} .. {smin:.3e})")
    if max_cond is not None and smax / smin > max_cond:
        raise error(f"condition number {smax / smin:.3e} exceeds {max_cond:.0e}")
    return q, r


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An ``n x p`` data matrix with ``n > p`` and full column rank."""

    entries: np.ndarray

    def __post_init__(self):
        x = np.array(self.entries, dtype=float)
        if x.ndim != 2:
            raise ValueError("design matrix must be 2-d")
        n, p = x.shape
        if not n > p >= 1:
            raise ValueError(f"need n > p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(x)):
            raise DataError("design matrix contains non-finite entries")
        x.setflags(write=False)
        object.__setattr__(self, "entries", x)
        _ = self.qr  # rank check at construction

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    @property
    def gamma(self) -> float:
        return self.p / self.n

    @cached_property
    def qr(self) -> tuple[np.ndarray, np.ndarray]:
        return checked_qr(self.entries)

    @cached_property
    def r_inverse(self) -> np.ndarray:
        """``R^{-1}`` of the thin QR, so ``(X'X)^{-1} = R^{-1} R^{-T}``."""
        return sla.solve_triangular(self.qr[1], np.eye(self.p))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_design(x) -> DesignMatrix:
    return x if isinstance(x, DesignMatrix) else DesignMatrix(x)


@dataclass(frozen=True)
class GroundTruth:
    beta: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).ravel())
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True, eq=False)
class EllipticalSpec:
    """Rows ``x_i = w_i * Sigma^{1/2} z_i``.

    ``scale_law`` is either a :class:`DiscreteDistribution` over ``w^2`` or the
    tag ``"inverse_chi2"`` for the heavy-tailed law where ``z_i`` is divided by a
    chi-square(1) draw. ``scale_convention`` picks the divisor for that tag:
    ``"sqrt"`` (square root of the chi-square, a true multivariate t_1) or
    ``"chisq"`` (the chi-square itself).
    """

    scale_law: DiscreteDistribution | str
    sigma_factor: np.ndarray | None = None
    scale_convention: str = "sqrt"

    def __post_init__(self):
        law = self.scale_law
        if isinstance(law, str):
            if law != "inverse_chi2":
                raise ValueError(f"unknown scale sampler tag {law!r}")
            if self.scale_convention not in SCALE_CONVENTIONS:
                raise ValueError(f"scale_convention must be one of {SCALE_CONVENTIONS}")
        elif np.any(law.atoms <= 0):
            raise ValueError("scale law atoms must be strictly positive")
        if self.sigma_factor is not None:
            s = np.asarray(self.sigma_factor, dtype=float)
            if s.ndim != 2 or s.shape[0] != s.shape[1] or not np.allclose(s, s.T, atol=1e-12):
                raise ValueError("sigma_factor must be a symmetric square matrix")
            if np.linalg.eigvalsh(s)[0] <= 0:
                raise ValueError("sigma_factor must be positive definite")
            object.__setattr__(self, "sigma_factor", s)

    def draw_w2(self, n: int, rng: np.random.Generator) -> np.ndarray:
        law = self.scale_law
        if isinstance(law, DiscreteDistribution):
            return rng.choice(law.atoms, size=n, p=law.weights)
        chi2 = rng.chisquare(1.0, size=n)
        w = 1.0 / np.sqrt(chi2) if self.scale_convention == "sqrt" else 1.0 / chi2
        return w * w


def heavy_tailed_spec(p: int, scale_convention: str = "sqrt") -> EllipticalSpec:
    """Correlated t_1 rows with ``Sigma_ij = 2 * 2^{-|i-j|}``."""
    idx = np.arange(p)
    sigma = 2.0 * 2.0 ** (-np.abs(idx[:, None] - idx[None, :]))
    vals, vecs = np.linalg.eigh(sigma)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return EllipticalSpec("inverse_chi2", (root + root.T) / 2, scale_convention)


@dataclass(frozen=True)
class TestPointPolicy:
    """How the out-of-sample test point enters OE.

    Either an explicit vector ``point`` or a population ``covariance`` for
    ``E[x_t' A x_t] = tr(A Sigma)``. With neither given, ``Sigma = I``.
    """

    __test__ = False

    point: np.ndarray | None = None
    covariance: np.ndarray | None = None

    def __post_init__(self):
        if self.point is not None and self.covariance is not None:
            raise ValueError("give either an explicit point or a covariance, not both")
        if self.point is not None:
            object.__setattr__(self, "point", np.asarray(self.point, dtype=float).ravel())
        if self.covariance is not None:
            c = np.asarray(self.covariance, dtype=float)
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise ValueError("covariance must be square")
            if np.linalg.eigvalsh((c + c.T) / 2)[0] < -1e-10 * max(1.0, np.abs(c).max()):
                raise ValueError("covariance must be positive semidefinite")
            object.__setattr__(self, "covariance", c)

    def check(self, p: int) -> None:
        if self.point is not None and self.point.size != p:
            raise ValueError(f"test point has length {self.point.size}, expected {p}")
        if self.covariance is not None and self.covariance.shape != (p, p):
            raise ValueError(f"covariance has shape {self.covariance.shape}, expected {(p, p)}")

    def quad(self, a: np.ndarray) -> float:
        """``x_t' A x_t`` or its expectation ``tr(A Sigma)``."""
        if self.point is not None:
            return float(self.point @ a @ self.point)
        if self.covariance is None:
            return float(np.trace(a))
        return float(np.sum(a * self.covariance.T))


def ols_fit(x, y) -> np.ndarray:
    """Least-squares coefficients via thin QR (no normal equations)."""
    dm = as_design(x)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != dm.n:
        raise ValueError(f"response has length {y.shape[0]}, expected {dm.n}")
    q, r = dm.qr
    return sla.solve_triangular(r, q.T @ y)


def lstsq_qr(a: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Plain QR solve without the construction-time checks (used for timing)."""
    q, r = np.linalg.qr(a, mode="reduced")
    return sla.solve_triangular(r, q.T @ y)


def leverage_scores(x) -> np.ndarray:
    """Diagonal of the hat matrix: squared row norms of the thin Q factor."""
    q, _ = as_design(x).qr
    return np.einsum("ij,ij->i", q, q)


def _gaussian_z(n: int, p: int, seed) -> np.ndarray:
    return np.random.default_rng(derive_seed(seed, 0)).standard_normal((n, p))


def generate_gaussian_design(n: int, p: int, sigma_factor=None, seed: int = 0) -> DesignMatrix:
    """Rows ``Sigma^{1/2} z_i`` with iid standard normal ``z_i``."""
    if not n > p >= 1:
        raise ValueError(f"need n > p >= 1, got n={n}, p={p}")
    z = _gaussian_z(n, p, seed)
    if sigma_factor is not None:
        s = np.asarray(sigma_factor, dtype=float)
        if s.shape != (p, p):
            raise ValueError(f"sigma_factor must be {p}x{p}")
        z = z @ s
    return DesignMatrix(z)


def generate_elliptical_design(n: int, p: int, spec: EllipticalSpec, seed: int = 0):
    """Draw ``X`` from the elliptical model; return ``(X, w)``.

    The Gaussian part uses the same stream as :func:`generate_gaussian_design`,
    so a point mass at 1 reproduces it bit for bit.
    """
    if spec.sigma_factor is not None and spec.sigma_factor.shape != (p, p):
        raise ValueError(f"sigma_factor must be {p}x{p}")
    base = generate_gaussian_design(n, p, spec.sigma_factor, seed).entries
    w = np.sqrt(spec.draw_w2(n, np.random.default_rng(derive_seed(seed, 1))))
    return DesignMatrix(base * w[:, None]), w


def simulate_response(x, truth: GroundTruth, seed: int = 0) -> np.ndarray:
    xm = np.asarray(x, dtype=float)
    if truth.beta.size != xm.shape[1]:
        raise ValueError(f"beta has length {truth.beta.size}, expected {xm.shape[1]}")
    noise = make_rng(seed).standard_normal(xm.shape[0])
    return xm @ truth.beta + truth.sigma * noise


def standardize(a: np.ndarray, names=None) -> np.ndarray:
    """Center each column and scale to unit standard deviation (divisor n)."""
    a = np.asarray(a, dtype=float)
    mu = a.mean(axis=0)
    centered = a - mu
    sd = np.sqrt((centered * centered).mean(axis=0))
    scale = np.maximum(np.abs(mu), np.abs(a).max(axis=0))
    const = ~(sd > 1e-12 * np.where(scale > 0, scale, 1.0))
    if np.any(const):
        cols = [names[i] if names else i for i in np.flatnonzero(const)]
        raise DataError(f"constant column(s): {cols}")
    return centered / sd


def load_csv_standardize(path, response_column) -> tuple[DesignMatrix, np.ndarray]:
    """Read a numeric CSV with a header row; standardize predictors and response.

    ``response_column`` is a header name or a 0-based column index.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(record)}"
                )
            values = []
            for col, field_ in enumerate(record):
                text = field_.strip()
                if text == "" or text.lower() in ("na", "nan", "null"):
                    raise DataError(f"{path}:{lineno}: missing value in column {header[col]!r}")
                try:
                    v = float(text)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: cannot parse {text!r} in column {header[col]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: non-finite value in column {header[col]!r}")
                values.append(v)
            rows.append(values)
    if isinstance(response_column, str) and response_column not in header:
        if response_column.lstrip("-").isdigit():
            response_column = int(response_column)
        else:
            raise DataError(f"{path}: no column named {response_column!r}")
    idx = header.index(response_column) if isinstance(response_column, str) else int(response_column)
    if not -len(header) <= idx < len(header):
        raise DataError(f"{path}: response column index {idx} out of range")
    idx %= len(header)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = standardize(np.array(rows), header)
    y = data[:, idx]
    x = np.delete(data, idx, axis=1)
    return DesignMatrix(x), y
