"""Difference-based residual variance estimation and its exact finite-sample moments.

The estimator is the quadratic form ``y' D y / (n - r)`` with
``D = Dt' Dt`` and ``Dt`` the ``(n - r) x n`` banded difference matrix. All
computations here work on the band of ``D`` (half-width ``r``) and never
form the dense matrix.
"""

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from .exceptions import InsufficientDataError
from .seqgen import DifferenceSequence, generate

EQUIDISTANT_TOL = 1e-12


@dataclass(frozen=True)
class ErrorModel:
    """Error distribution summarized by its scale and standardized 3rd/4th moments."""

    sigma: float
    gamma3: float = 0.0
    gamma4: float = 3.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.gamma4 < 1:
            raise ValueError(f"gamma4 must be at least 1, got {self.gamma4}")

    @classmethod
    def normal(cls, sigma=1.0):
        return cls(float(sigma), 0.0, 3.0)

    @property
    def var_eps2(self):
        """Variance of the squared error, ``sigma^4 (gamma4 - 1)``."""
        return self.sigma**4 * (self.gamma4 - 1.0)


@dataclass(frozen=True)
class RegressionSample:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    equidistant: bool = False

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError(f"x and y must be 1-d of equal length, got {x.shape} and {y.shape}")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("design points must be strictly increasing")
        if self.equidistant:
            grid = np.arange(1, x.size + 1) / x.size
            if np.abs(x - grid).max(initial=0.0) > EQUIDISTANT_TOL:
                raise ValueError("equidistant flag set but x_i != i/n")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_responses(cls, y):
        """Attach the equidistant design ``x_i = i/n`` to ordered responses."""
        y = np.asarray(y, dtype=float)
        return cls(np.arange(1, y.size + 1) / y.size, y, equidistant=True)

    @property
    def n(self):
        return self.y.size


def _coeffs(seq):
    return seq.coeffs if isinstance(seq, DifferenceSequence) else np.asarray(seq, dtype=float)


def difference_filter(y, coeffs):
    """``sum_j d_j y[..., i + j]`` for i = 0..n-r-1, along the last axis."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(coeffs, dtype=float)
    r = d.size - 1
    m = y.shape[-1] - r
    if m < 1:
        raise InsufficientDataError(f"need n > r, got n={y.shape[-1]} and r={r}")
    out = d[0] * y[..., :m]
    for j in range(1, r + 1):
        out = out + d[j] * y[..., j : j + m]
    return out


def _filter_adjoint(w, coeffs, n):
    d = np.asarray(coeffs, dtype=float)
    m = w.shape[-1]
    out = np.zeros(w.shape[:-1] + (n,))
    for j in range(d.size):
        out[..., j : j + m] += d[j] * w
    return out


def estimate_variance(sample, seq):
    """Difference-based estimate of the residual variance.

    ``sample`` may be a RegressionSample or the ordered responses. Stacked
    responses (2-d, one replicate per row) give one estimate per row.
    """
    y = sample.y if isinstance(sample, RegressionSample) else np.asarray(sample, dtype=float)
    f = difference_filter(y, _coeffs(seq))
    return np.einsum("...i,...i->...", f, f) / f.shape[-1]


def gram_band(coeffs, n):
    """Upper band of ``D``: row ``c`` holds ``D[a, a + c]`` for a = 0..n-1-c."""
    d = np.asarray(coeffs, dtype=float)
    r = d.size - 1
    m = n - r
    if m < 1:
        raise InsufficientDataError(f"need n > r, got n={n} and r={r}")
    band = np.zeros((r + 1, n))
    for c in range(r + 1):
        for j in range(r + 1 - c):
            band[c, j : j + m] += d[j] * d[j + c]
    return band


def apply_gram(v, coeffs):
    """``D @ v`` via the filter and its adjoint."""
    v = np.asarray(v, dtype=float)
    return _filter_adjoint(difference_filter(v, coeffs), coeffs, v.shape[-1])


@dataclass(frozen=True)
class KernelSummary:
    r: int
    n: int
    gDg: float
    gDDg: float
    gDdiagDu: float
    tr_diagD_sq: float
    tr_Dsq: float


def kernel_summary(g_values, seq, x=None):
    """Quadratic forms and traces of ``D`` entering the exact MSE.

    Runs in O(n r^2) time and O(n r) memory. Passing ``x`` checks the design;
    the formulas assume the equidistant grid and a non-equidistant ``x``
    only raises a warning.
    """
    g = np.asarray(g_values, dtype=float)
    d = _coeffs(seq)
    n, r = g.size, d.size - 1
    if x is not None:
        grid = np.arange(1, n + 1) / n
        if np.shape(x) != g.shape or np.abs(np.asarray(x) - grid).max() > EQUIDISTANT_TOL:
            warnings.warn(
                "design is not equidistant; exact moments assume x_i = i/n",
                stacklevel=2,
            )
    band = gram_band(d, n)
    f = difference_filter(g, d)
    Dg = _filter_adjoint(f, d, n)
    diag = band[0]
    tr_Dsq = diag @ diag + 2.0 * np.sum(band[1:] ** 2)
    return KernelSummary(
        r=r,
        n=n,
        gDg=float(f @ f),
        gDDg=float(Dg @ Dg),
        gDdiagDu=float(Dg @ diag),
        tr_diagD_sq=float(diag @ diag),
        tr_Dsq=float(tr_Dsq),
    )


class ExactMoments(NamedTuple):
    bias: float
    variance: float
    mse: float


def exact_moments(summary, err):
    """Bias, variance and MSE of the estimator for a known mean vector."""
    m = summary.n - summary.r
    s = err.sigma
    bias = summary.gDg / m
    variance = (
        4 * s**2 * summary.gDDg
        + 4 * summary.gDdiagDu * s**3 * err.gamma3
        + s**4 * summary.tr_diagD_sq * (err.gamma4 - 3)
        + 2 * s**4 * summary.tr_Dsq
    ) / m**2
    return ExactMoments(bias, variance, bias**2 + variance)


def exact_mse(g, n, seq, err):
    """Exact moments on the equidistant grid for a mean function ``g``."""
    x = np.arange(1, n + 1) / n
    return exact_moments(kernel_summary(g(x), seq), err)


class DifferenceVarianceEstimator(BaseEstimator):
    """Residual variance of ``y`` given ordered design points ``X``.

    Parameters
    ----------
    r, k : int
        Order and bias level of the optimal-k sequence; ``(3, 1)`` is the
        recommended default.
    coeffs : array-like, optional
        Explicit difference sequence; overrides ``r`` and ``k``.

    Attributes
    ----------
    sequence_ : DifferenceSequence
    sigma2_ : float
    n_samples_ : int
    """

    def __init__(self, r=3, k=1, coeffs=None):
        self.r = r
        self.k = k
        self.coeffs = coeffs

    def _sequence(self):
        if self.coeffs is not None:
            return DifferenceSequence.from_coeffs(self.coeffs)
        return generate(self.r, self.k)

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_2d=False, y_numeric=True)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError(f"expected a single design variable, got {X.shape[1]} columns")
            X = X[:, 0]
        seq = self._sequence()
        sample = RegressionSample(X, y)
        self.sequence_ = seq
        self.sigma2_ = float(estimate_variance(sample, seq))
        self.n_samples_ = sample.n
        self.n_features_in_ = 1
        return self

    @property
    def sigma_(self):
        check_is_fitted(self, "sigma2_")
        return float(np.sqrt(self.sigma2_))
