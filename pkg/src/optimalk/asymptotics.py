"""Leading-order bias and variance of optimal-k estimators.

Scaled quantities divide by ``var(eps^2) / n`` so that an oracle estimator
with known mean has relative MSE one.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import BoundsError, InsufficientDataError
from .seqgen import MAX_ORDER, DifferenceSequence, check_order_level, delta_k_exact, generate


@dataclass(frozen=True)
class Sinusoid:
    """``A sin(w pi x)`` with exact derivatives."""

    amplitude: float = 5.0
    frequency: float = 1.0

    kind = "sinusoid"

    def __call__(self, x):
        return self.amplitude * np.sin(self.frequency * np.pi * np.asarray(x, dtype=float))

    def derivative(self, x, p):
        w = self.frequency * np.pi
        x = np.asarray(x, dtype=float)
        return self.amplitude * w**p * np.sin(w * x + p * np.pi / 2)

    @property
    def description(self):
        return f"{self.amplitude:g}*sin({self.frequency:g}*pi*x)"


@dataclass(frozen=True)
class Tabulated:
    """Mean function known on a grid over [0, 1].

    ``derivatives`` may map an order to tabulated values; other orders are
    obtained by repeated second-order central differences, accurate to O(h^2).
    """

    x: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    derivatives: dict = field(default=None, repr=False)
    label: str = "tabulated"

    kind = "tabulated"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or x.size < 3:
            raise ValueError("tabulated mean function needs matching 1-d grids of at least 3 points")
        if not np.all(np.diff(x) > 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(x, self.x, self.values)

    def grid_derivative(self, p):
        if self.derivatives and p in self.derivatives:
            return np.asarray(self.derivatives[p], dtype=float)
        if p > self.x.size - 2:
            raise BoundsError(f"derivative of order {p} unavailable on a {self.x.size}-point grid")
        out = self.values
        for _ in range(p):
            out = np.gradient(out, self.x, edge_order=2)
        return out

    @property
    def description(self):
        return self.label


def parse_mean_function(text):
    """Parse ``sin:A,W`` (``A sin(W pi x)``) or ``zero``."""
    text = text.strip()
    if text in ("zero", "0", "const"):
        return Sinusoid(0.0, 1.0)
    kind, _, args = text.partition(":")
    if kind != "sin":
        raise ValueError(f"unknown mean function {text!r}; expected sin:A,W or zero")
    try:
        amplitude, frequency = (float(v) for v in args.split(","))
    except ValueError:
        raise ValueError(f"malformed sinusoid {text!r}; expected sin:A,W") from None
    return Sinusoid(amplitude, frequency)


def c_coefficient(seq, p):
    """Taylor functional ``sum_j j^p d_j / p!``."""
    if p < 0 or p > seq.r:
        raise BoundsError(f"expansion order p={p} must lie in 0..r={seq.r}")
    j = np.arange(seq.r + 1, dtype=float)
    return float((j**p) @ seq.coeffs / math.factorial(p))


def j_functional(g, p):
    """Squared L2 norm of the p-th derivative of ``g`` on [0, 1]."""
    if p < 0:
        raise BoundsError(f"derivative order must be nonnegative, got {p}")
    if isinstance(g, Sinusoid):
        w = g.frequency * np.pi
        if g.amplitude == 0 or w == 0:
            return 0.0
        # even p integrates sin^2, odd p integrates cos^2
        sign = -1.0 if p % 2 == 0 else 1.0
        return float(g.amplitude**2 * w ** (2 * p) * (0.5 + sign * np.sin(2 * w) / (4 * w)))
    return float(trapezoid(g.grid_derivative(p) ** 2, g.x))


@dataclass(frozen=True)
class AsymptoticReport:
    r: int
    k: int
    C_next: float
    J_next: float
    bias_leading: float
    var_leading: float
    rvar: float
    rsb: float
    rmse: float
    n: int
    sequence: DifferenceSequence = field(repr=False, compare=False)

    @property
    def log_rvar(self):
        return math.log(self.rvar)

    @property
    def log_rmse(self):
        return math.log(self.rmse)

    def row(self):
        return {
            "r": self.r,
            "k": self.k,
            "rvar": self.rvar,
            "rsb": self.rsb,
            "rmse": self.rmse,
            "log_rvar": self.log_rvar,
            "log_rmse": self.log_rmse,
        }


def theorem3_report(r, k, g, err, n, seq=None):
    """Leading-order bias and variance of ``d_k(r)`` and their scaled forms.

    ``seq`` overrides the generated sequence; the leading bias constant
    depends on which of the equivalent optimal-k sequences is used.
    """
    check_order_level(r, k)
    if n <= r:
        raise InsufficientDataError(f"need n > r, got n={n} and r={r}")
    if err.var_eps2 <= 0:
        raise ValueError("scaling needs var(eps^2) > 0 (gamma4 > 1)")
    seq = generate(r, k) if seq is None else seq
    lam0 = float(4 * delta_k_exact(r, k))
    c_next = c_coefficient(seq, k + 1)
    j_next = j_functional(g, k + 1)
    bias = c_next**2 * j_next / n ** (2 * (k + 1))
    var = (err.var_eps2 + err.sigma**4 * lam0) / n
    scale = err.var_eps2 / n
    rvar = var / scale
    rsb = bias**2 / scale
    return AsymptoticReport(r, k, c_next, j_next, bias, var, rvar, rsb, rvar + rsb, n, seq)


def curve_levels(r):
    """Bias levels plotted for order ``r``: 0..3 and the ordinary level r - 1."""
    return sorted({k for k in (0, 1, 2, 3, r - 1) if 0 <= k <= r - 1})


def figure2_curves(g=None, err=None, n=100, r_max=10):
    """Reports over ``1 <= r <= r_max`` for the levels of :func:`curve_levels`."""
    if not 1 <= r_max <= MAX_ORDER:
        raise BoundsError(f"r_max={r_max} outside 1..{MAX_ORDER}")
    g = Sinusoid(5.0, 4.0) if g is None else g
    from .estimator import ErrorModel

    err = ErrorModel.normal(1.0) if err is None else err
    return [
        theorem3_report(r, k, g, err, n)
        for r in range(1, r_max + 1)
        for k in curve_levels(r)
    ]
