"""Independent reference computations used only by the tests.

None of these share code with the package: dense matrices instead of bands,
mpmath matrix inversion instead of the rational solver, and a generic
constrained optimizer instead of the closed-form construction.
"""

import math

import mpmath
import numpy as np
from scipy.optimize import minimize


def dense_difference_matrix(coeffs, n):
    d = np.asarray(coeffs, dtype=float)
    r = d.size - 1
    Dt = np.zeros((n - r, n))
    for i in range(n - r):
        Dt[i, i : i + r + 1] = d
    return Dt


def dense_kernel_summary(g, coeffs):
    """gDg, gDDg, gD diag(D)u, tr(diag(D)^2), tr(D^2) from the full matrix."""
    g = np.asarray(g, dtype=float)
    Dt = dense_difference_matrix(coeffs, g.size)
    D = Dt.T @ Dt
    diag = np.diag(D)
    return {
        "gDg": g @ D @ g,
        "gDDg": g @ D @ D @ g,
        "gDdiagDu": g @ D @ diag,
        "tr_diagD_sq": diag @ diag,
        "tr_Dsq": np.trace(D @ D),
    }


def dense_exact_moments(g, coeffs, sigma, gamma3=0.0, gamma4=3.0):
    """Moments of a quadratic form y'Ay with y = g + eps, by the textbook formula."""
    g = np.asarray(g, dtype=float)
    Dt = dense_difference_matrix(coeffs, g.size)
    m = Dt.shape[0]
    A = Dt.T @ Dt / m
    a = np.diag(A)
    mean = g @ A @ g + sigma**2 * np.trace(A)
    var = (
        2 * sigma**4 * np.trace(A @ A)
        + 4 * sigma**2 * g @ A @ A @ g
        + 4 * sigma**3 * gamma3 * g @ A @ a
        + sigma**4 * (gamma4 - 3) * a @ a
    )
    bias = mean - sigma**2
    return bias, var, bias**2 + var


def moment_matrix_inverse_entry(r, k, dps=250):
    """V_k^{-1}(1,1) by mpmath LU at high precision."""
    with mpmath.workdps(dps):
        sums = [mpmath.fsum(mpmath.mpf(c) ** m for c in range(1, r + 1)) for m in range(4 * k + 1)]
        V = mpmath.matrix(k + 1, k + 1)
        for i in range(k + 1):
            for j in range(k + 1):
                V[i, j] = sums[2 * (i + j)]
        e = mpmath.matrix([1] + [0] * k)
        return float(mpmath.lu_solve(V, e)[0])


def ordinary_delta(r):
    return (math.comb(4 * r, 2 * r) / math.comb(2 * r, r) ** 2 - 1) / 2


def lag_products(d):
    d = np.asarray(d, dtype=float)
    r = d.size - 1
    return np.array([d[: r + 1 - c] @ d[c:] for c in range(1, r + 1)])


def taylor_constraint_matrix(r, k):
    """Rows j^p / p! for p = 0..k; the sequence must lie in its null space."""
    j = np.arange(r + 1, dtype=float)
    return np.array([j**p / math.factorial(p) for p in range(k + 1)])


def random_constrained_sequence(rng, r, k):
    """Random unit vector with C_0 = ... = C_k = 0, by orthogonal projection."""
    M = taylor_constraint_matrix(r, k)
    q, _ = np.linalg.qr(M.T)
    v = rng.standard_normal(r + 1)
    v -= q @ (q.T @ v)
    return v / np.linalg.norm(v)


def minimize_delta(r, k, starts=20, seed=0):
    """Minimal sum of squared lag products by SLSQP from random starts."""
    rng = np.random.default_rng(seed)
    M = taylor_constraint_matrix(r, k)
    cons = [
        {"type": "eq", "fun": lambda d: M @ d},
        {"type": "eq", "fun": lambda d: d @ d - 1.0},
    ]
    best = math.inf
    for _ in range(starts):
        x0 = random_constrained_sequence(rng, r, k)
        res = minimize(
            lambda d: np.sum(lag_products(d) ** 2), x0, constraints=cons,
            method="SLSQP", options={"ftol": 1e-14, "maxiter": 1000},
        )
        if res.success and np.abs(M @ res.x).max() < 1e-8:
            best = min(best, res.fun)
    return best
