"""Difference sequences: Rice, optimal, ordinary and the optimal-k family.

An optimal-k sequence of order ``r`` minimizes the sum of squared lag
autocorrelations subject to unit norm and to annihilating polynomial trends
of degree ``k``. The minimizer is characterized by its lag products
``D_c``, which follow exactly from the first column of the inverse of a
small Hankel matrix of even power sums; the coefficients are then recovered
by spectral factorization of the self-reciprocal polynomial built from the
``D_c``.
"""

import enum
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from ._exact import divide_by_linear, solve_rational
from ._roots import aberth_roots, aberth_roots_mp
from .exceptions import (
    BoundsError,
    CapacityError,
    ConvergenceError,
    InvalidGramError,
    SelectionError,
)

MAX_ORDER = 64
MAX_LEVEL = 8
# exact power sums are guaranteed to fit a signed integer of this width
INT_BITS = 256

UNIT_CIRCLE_TOL = 1e-8
NORM_TOL = 1e-10
MOMENT_TOL = 1e-8
VERIFY_TOL = 1e-10
# digits for the fallback passes when double precision cannot resolve the roots
EXTENDED_DPS = (30, 60, 120)


class Provenance(enum.Enum):
    CLOSED_FORM_ORDINARY = "ClosedFormOrdinary"
    ROOT_FINDING = "RootFinding"
    EXPLICIT = "Explicit"


def check_order_level(r, k=0):
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)):
        raise BoundsError(f"order r must be an integer, got {r!r}")
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise BoundsError(f"bias level k must be an integer, got {k!r}")
    if not 1 <= r <= MAX_ORDER:
        raise BoundsError(f"order r={r} outside supported range 1..{MAX_ORDER}")
    kmax = min(r - 1, MAX_LEVEL)
    # the ordinary level k = r - 1 has closed forms at every order
    if not (0 <= k <= kmax or k == r - 1):
        raise BoundsError(
            f"bias level k={k} outside supported range 0..{kmax} (or {r - 1}) for r={r}"
        )


def taylor_moments(coeffs, p_max):
    """``C_p = sum_j j^p d_j / p!`` for p = 0..p_max, with matching scales.

    The scale ``sum_j j^p |d_j| / p!`` is what roundoff is measured against.
    """
    d = np.asarray(coeffs, dtype=float)
    j = np.arange(d.size, dtype=float)
    moments, scales = [], []
    for p in range(p_max + 1):
        w = j**p / math.factorial(p)
        moments.append(float(w @ d))
        scales.append(float(w @ np.abs(d)))
    return np.array(moments), np.array(scales)


def lag_products(coeffs):
    """Lag autocorrelations ``D_c = sum_j d_j d_{j+c}`` for c = 1..r."""
    d = np.asarray(coeffs, dtype=float)
    r = d.size - 1
    return np.array([d[: r + 1 - c] @ d[c:] for c in range(1, r + 1)])


@dataclass(frozen=True)
class DifferenceSequence:
    """Normalized difference coefficients ``(d_0, ..., d_r)`` at bias level ``k``."""

    r: int
    k: int
    coeffs: np.ndarray = field(repr=False)
    provenance: Provenance = Provenance.EXPLICIT

    def __post_init__(self):
        d = np.array(self.coeffs, dtype=float)
        d.flags.writeable = False
        object.__setattr__(self, "coeffs", d)
        if d.ndim != 1 or d.size != self.r + 1:
            raise ValueError(f"expected {self.r + 1} coefficients, got shape {d.shape}")
        if not 0 <= self.k <= max(self.r - 1, 0):
            raise BoundsError(f"bias level k={self.k} invalid for r={self.r}")
        if abs(d.sum()) > NORM_TOL:
            raise ValueError(f"coefficients must sum to zero (sum={d.sum():.3e})")
        if abs(d @ d - 1.0) > NORM_TOL:
            raise ValueError(f"coefficients must have unit norm (norm^2={d @ d:.12f})")
        if not (d[0] > 0 and d[-1] != 0):
            raise ValueError("identifiability requires d_0 > 0 and d_r != 0")
        if self.k:
            c, scale = taylor_moments(d, self.k)
            bad = np.abs(c[1:]) > MOMENT_TOL * np.maximum(scale[1:], 1.0)
            if bad.any():
                p = int(np.flatnonzero(bad)[0]) + 1
                raise ValueError(f"C_{p}={c[p]:.3e} does not vanish for bias level k={self.k}")

    @classmethod
    def from_coeffs(cls, coeffs, k=None, normalize=False):
        """Wrap user-supplied coefficients.

        With ``normalize`` the vector is scaled to unit norm and its sign
        fixed so that ``d_0 > 0``. When ``k`` is None the largest level whose
        moment constraints hold is inferred.
        """
        d = np.asarray(coeffs, dtype=float)
        if normalize:
            d = d / np.linalg.norm(d)
            if d[0] < 0:
                d = -d
        r = d.size - 1
        if k is None:
            k = 0
            if r > 1:
                c, scale = taylor_moments(d, r - 1)
                for p in range(1, r):
                    if abs(c[p]) > MOMENT_TOL * max(scale[p], 1.0):
                        break
                    k = p
        return cls(r, k, d, Provenance.EXPLICIT)

    @property
    def label(self):
        return f"d_{self.k}({self.r})"

    def gram(self):
        return GramCoefficients(self.r, lag_products(self.coeffs))

    def reversed(self):
        """The equivalent sequence read backwards, sign-fixed so that d_0 > 0."""
        rev = self.coeffs[::-1].copy()
        return DifferenceSequence(self.r, self.k, rev if rev[0] > 0 else -rev, self.provenance)

    def to_dict(self):
        return {
            "r": self.r,
            "k": self.k,
            "coeffs": [float(v) for v in self.coeffs],
            "delta": delta_of(self),
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, data):
        prov = Provenance(data.get("provenance", Provenance.EXPLICIT.value))
        return cls(int(data["r"]), int(data["k"]), data["coeffs"], prov)


@dataclass(frozen=True)
class GramCoefficients:
    """Lag products ``(D_1, ..., D_r)``.

    ``exact`` optionally carries the same values as Fractions; when present
    the factor ``(t - 1)`` is divided out of the generating polynomial
    without rounding.
    """

    r: int
    values: np.ndarray = field(repr=False)
    exact: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if v.shape != (self.r,):
            raise ValueError(f"expected {self.r} lag products, got shape {v.shape}")

    def moment_sums(self, s_max):
        """``sum_c c^(2s) D_c`` for s = 0..s_max."""
        c = np.arange(1, self.r + 1, dtype=float)
        return np.array([(c ** (2 * s)) @ self.values for s in range(s_max + 1)])


@dataclass(frozen=True)
class BiasMomentMatrix:
    """Even power sums of ``1..r`` and the Hankel matrix built from them."""

    r: int
    k: int
    power_sums: dict = field(repr=False)
    matrix: tuple = field(repr=False)
    inverse_first_column_exact: tuple = field(repr=False)

    @property
    def inverse_first_column(self):
        return np.array([float(v) for v in self.inverse_first_column_exact])

    @property
    def matrix_float(self):
        return np.array(self.matrix, dtype=float)

    def I(self, m):  # noqa: E743
        return self.power_sums[m]


@functools.lru_cache(maxsize=None)
def power_sums(r, k):
    """Exact power sums ``I_m`` and the moment matrix ``V_k`` for order ``r``."""
    check_order_level(r, k)
    r, k = int(r), int(k)
    sums = {}
    for m in range(4 * k + 1):
        value = sum(c**m for c in range(1, r + 1))
        if value.bit_length() >= INT_BITS:
            raise CapacityError(
                f"power sum I_{m} for (r={r}, k={k}) needs {value.bit_length()} bits, "
                f"exceeding the {INT_BITS}-bit capacity"
            )
        sums[m] = value
    matrix = tuple(tuple(sums[2 * (i + j)] for j in range(k + 1)) for i in range(k + 1))
    rhs = [1] + [0] * k
    first_col = tuple(solve_rational(matrix, rhs))
    return BiasMomentMatrix(r, k, sums, matrix, first_col)


def _ordinary_gram_exact(r):
    # D_c = (-1)^c C(2r, r+c) / C(2r, r)
    return tuple(Fraction((-1) ** c * math.comb(2 * r, r + c), math.comb(2 * r, r)) for c in range(1, r + 1))


def delta_k_exact(r, k):
    check_order_level(r, k)
    if k > MAX_LEVEL:
        return Fraction(math.comb(4 * r, 2 * r), math.comb(2 * r, r) ** 2) / 2 - Fraction(1, 2)
    return power_sums(r, k).inverse_first_column_exact[0] / 4


def delta_k(r, k):
    """Minimum sum of squared lag products attainable at level ``k``."""
    return float(delta_k_exact(r, k))


def gram_from_theorem2(r, k):
    """Lag products of the optimal-k sequence, computed exactly then rounded."""
    check_order_level(r, k)
    if k > MAX_LEVEL:
        exact = _ordinary_gram_exact(r)
        return GramCoefficients(r, [float(v) for v in exact], exact)
    lam = power_sums(r, k).inverse_first_column_exact
    exact = tuple(
        -sum(Fraction(c ** (2 * s)) * lam[s] for s in range(k + 1)) / 2
        for c in range(1, r + 1)
    )
    return GramCoefficients(r, [float(v) for v in exact], exact)


def _generating_polynomial(values, r):
    # descending coefficients of t^r {sum_c D_c (t^c + t^-c) + 1}
    coef = [0] * (2 * r + 1)
    coef[r] = 1
    for c in range(1, r + 1):
        coef[r - c] = values[c - 1]
        coef[r + c] = values[c - 1]
    return coef


def _unit_root_multiplicity(gram):
    """Half-multiplicity of ``t = 1`` as a root of the generating polynomial.

    Equals ``1 + #{leading s >= 1 with sum_c c^(2s) D_c = 0}``.
    """
    r = gram.r
    if gram.exact is not None:
        m = 1
        while m < r and sum(Fraction(c ** (2 * m)) * v for c, v in enumerate(gram.exact, 1)) == 0:
            m += 1
        return m
    c = np.arange(1, r + 1, dtype=float)
    m = 1
    while m < r:
        w = c ** (2 * m)
        if abs(w @ gram.values) > 1e-9 * (w @ np.abs(gram.values)):
            break
        m += 1
    return m


def _deflate_unit_root(gram, times):
    """Divide ``(t - 1)^times`` out of the generating polynomial.

    Returns the float quotient and, when exact lag products are known, the
    exact quotient as well.
    """
    if gram.exact is not None:
        coef = _generating_polynomial(gram.exact, gram.r)
        for _ in range(times):
            coef, rem = divide_by_linear(coef, Fraction(1))
            if rem != 0:
                raise InvalidGramError(f"t = 1 is not a root of multiplicity {times}")
        return np.array([float(v) for v in coef]), coef
    coef = _generating_polynomial([float(v) for v in gram.values], gram.r)
    scale = sum(abs(v) for v in coef)
    for _ in range(times):
        coef, rem = divide_by_linear(coef, 1.0)
        if abs(rem) > 1e-8 * scale:
            raise InvalidGramError(
                f"t = 1 is not a root of multiplicity {times} (remainder {rem:.3e})"
            )
    return np.array(coef), None


def _cluster(points, tol):
    """Group indices of nearby complex points."""
    groups = []
    for i in sorted(range(len(points)), key=lambda j: np.angle(points[j])):
        for g in groups:
            if abs(points[g[0]] - points[i]) < tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _select_roots(roots, expected):
    """One root from each reciprocal pair, taking the member on or outside |z| = 1.

    ``roots`` may hold Python complex or mpmath values. Unit-circle roots come
    with even multiplicity; each cluster contributes half its size, as copies
    of its centroid.
    """
    approx = np.array([complex(z) for z in roots])
    mod = np.abs(approx)
    chosen = [roots[i] for i in np.flatnonzero(mod > 1 + UNIT_CIRCLE_TOL)]
    n_outside = len(chosen)
    on_idx = np.flatnonzero(np.abs(mod - 1) <= UNIT_CIRCLE_TOL)
    for group in _cluster(approx[on_idx], 1e-5):
        if len(group) % 2:
            raise SelectionError(
                f"unit-circle root {approx[on_idx[group[0]]]:.6f} has odd multiplicity {len(group)}"
            )
        centroid = sum(roots[on_idx[g]] for g in group) / len(group)
        chosen.extend([centroid / abs(centroid)] * (len(group) // 2))
    if len(chosen) != expected:
        raise SelectionError(
            f"selected {len(chosen)} roots, expected {expected} "
            f"({n_outside} outside, {on_idx.size} on the unit circle)"
        )
    return chosen


def _assemble(chosen, m, imag_tol):
    """Real ascending coefficients of ``(x - 1)^m * prod (x - t_i)``, unit norm."""
    poly = [1]
    for t in chosen + [1] * m:
        poly = [b - t * a for a, b in zip(poly + [0], [0] + poly)]
    # poly is ascending in x since each step maps p(x) -> x p(x) - t p(x)
    re = [complex(c).real for c in poly]
    im = max(abs(complex(c).imag) for c in poly)
    norm = math.sqrt(sum(float(abs(c)) ** 2 for c in poly))
    if im > imag_tol * norm:
        raise SelectionError("selected roots are not closed under conjugation")
    if len(chosen) and not isinstance(chosen[0], complex):
        # extended precision: normalize before rounding
        re_mp = [mpmath.re(c) for c in poly]
        nrm = mpmath.sqrt(mpmath.fsum(c * c for c in re_mp))
        return np.array([float(c / nrm) for c in re_mp])
    a = np.array(re)
    return a / np.linalg.norm(a)


def _reproduces(d, gram, m):
    D = lag_products(d)
    if np.abs(D - gram.values).max() > VERIFY_TOL:
        return False
    if m > 1:
        c, scale = taylor_moments(d, m - 1)
        if (np.abs(c[1:]) > VERIFY_TOL * np.maximum(scale[1:], 1.0)).any():
            return False
    return True


def _canonical(d):
    """Fix sign so d_0 > 0; if the reversal is also admissible pick the smaller one."""
    if d[0] < 0:
        d = -d
    if d[-1] > 0:
        rev = d[::-1]
        for a, b in zip(rev, d):
            if abs(a - b) > 1e-12:
                if a < b:
                    d = rev.copy()
                break
    return d


def sequence_from_gram(gram, k=None):
    """Recover a difference sequence whose lag products are ``gram``.

    The generating polynomial ``R(t)`` carries the factor ``(t - 1)^(2m)``
    with ``m = k + 1``; it is divided out first, the remaining roots are
    located by simultaneous iteration, and the sequence polynomial is
    assembled from ``(t - 1)^m`` times the roots on or outside the unit circle.

    When exact lag products are available and the double-precision result
    fails to reproduce them, the iteration is repeated in extended precision.
    """
    r = gram.r
    if gram.exact is not None:
        if sum(gram.exact) != Fraction(-1, 2):
            raise InvalidGramError(f"lag products sum to {float(sum(gram.exact))}, not -1/2")
    elif abs(gram.values.sum() + 0.5) > NORM_TOL:
        raise InvalidGramError(f"lag products sum to {gram.values.sum():.12f}, not -1/2")

    m = _unit_root_multiplicity(gram)
    if k is not None and m < k + 1:
        raise InvalidGramError(f"lag products do not satisfy the level-{k} moment conditions")
    reduced, reduced_exact = _deflate_unit_root(gram, 2 * m)

    d, failure = None, None
    try:
        roots = [complex(z) for z in aberth_roots(reduced)]
        d = _assemble(_select_roots(roots, r - m), m, 1e-8)
        if not _reproduces(d, gram, m):
            failure = SelectionError("double-precision factor does not reproduce the lag products")
            d = None
    except (SelectionError, ConvergenceError) as exc:
        failure = exc
    if d is None and reduced_exact is not None:
        for dps in EXTENDED_DPS:
            try:
                roots = aberth_roots_mp(reduced_exact, dps)
                with mpmath.workdps(dps):
                    d = _assemble(_select_roots(roots, r - m), m, 10.0 ** (-dps // 2))
            except (SelectionError, ConvergenceError) as exc:
                failure = exc
                continue
            if _reproduces(d, gram, m):
                break
            d = None
    if d is None:
        raise failure

    level = m - 1 if k is None else k
    return DifferenceSequence(r, level, _canonical(d), Provenance.ROOT_FINDING)


@functools.lru_cache(maxsize=None)
def ordinary_sequence(r):
    """Binomial (ordinary) sequence; annihilates polynomials up to degree r - 1."""
    check_order_level(r, 0)
    r = int(r)
    center = math.comb(2 * r, r)
    d = [(-1) ** j * math.sqrt(Fraction(math.comb(r, j) ** 2, center)) for j in range(r + 1)]
    return DifferenceSequence(r, r - 1, _canonical(np.array(d)), Provenance.CLOSED_FORM_ORDINARY)


@functools.lru_cache(maxsize=None)
def generate(r, k):
    """The optimal-k difference sequence ``d_k(r)``."""
    check_order_level(r, k)
    r, k = int(r), int(k)
    if k == r - 1:
        return ordinary_sequence(r)
    return sequence_from_gram(gram_from_theorem2(r, k), k=k)


def rice_sequence():
    return generate(1, 0)


RULE_OF_THUMB = (3, 1)


def rule_of_thumb():
    """``d_1(3)``, the recommended default for practical use."""
    return generate(*RULE_OF_THUMB)


def delta_of(seq):
    """Sum of squared lag products, evaluated directly from coefficients."""
    coeffs = seq.coeffs if isinstance(seq, DifferenceSequence) else seq
    D = lag_products(coeffs)
    return float(D @ D)
