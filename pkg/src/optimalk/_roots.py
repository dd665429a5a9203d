"""Aberth-Ehrlich simultaneous iteration for real-coefficient polynomials."""

import numpy as np

from .exceptions import ConvergenceError

TOL = 1e-13
MAX_ITER = 500


def _backward_error(coeffs, z):
    # |p(z)| relative to sum |a_i| |z|^i
    return np.abs(np.polyval(coeffs, z)) / np.polyval(np.abs(coeffs), np.abs(z))


def aberth_roots(coeffs, tol=TOL, max_iter=MAX_ITER, radius=1.05):
    """All complex roots of the polynomial with descending coefficients ``coeffs``.

    Starting points sit on a circle of the given radius, rotated off the real
    axis so conjugate pairs are not forced to coincide. Iteration stops once
    every root has coefficient-space backward error below ``tol``.
    """
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    stripped = np.trim_zeros(coeffs, "b")
    if stripped.size < coeffs.size:
        # trailing zero coefficients are exact roots at the origin
        zeros = np.zeros(coeffs.size - stripped.size, dtype=complex)
        return np.concatenate([aberth_roots(stripped, tol, max_iter, radius), zeros])
    deg = coeffs.size - 1
    if deg < 1:
        return np.empty(0, dtype=complex)
    coeffs = coeffs / coeffs[0]
    if deg == 1:
        return np.array([-coeffs[1] + 0j])

    deriv = np.polyder(coeffs)
    angles = 2.0 * np.pi * np.arange(deg) / deg + 0.4
    z = radius * np.exp(1j * angles)
    active = np.ones(deg, dtype=bool)

    for _ in range(max_iter):
        err = _backward_error(coeffs, z)
        active = err > tol
        if not active.any():
            break
        p = np.polyval(coeffs, z[active])
        dp = np.polyval(deriv, z[active])
        dp = np.where(dp == 0, 1e-300, dp)
        ratio = p / dp
        diff = z[active, None] - z[None, :]
        idx = np.flatnonzero(active)
        diff[np.arange(idx.size), idx] = np.inf
        repulsion = (1.0 / diff).sum(axis=1)
        z[active] = z[active] - ratio / (1.0 - ratio * repulsion)
    else:
        err = _backward_error(coeffs, z)
        if (err > tol).any():
            raise ConvergenceError(
                f"Aberth iteration did not converge in {max_iter} steps "
                f"(degree {deg}, worst residual {err.max():.3e})",
                worst_residual=float(err.max()),
            )
    return z


def aberth_roots_mp(coeffs, dps, max_iter=MAX_ITER, radius=1.05):
    """Aberth iteration in ``dps``-digit arithmetic on exact (Fraction) coefficients.

    Used when the double-precision coefficients cannot resolve clustered
    roots. Returns a list of ``mpmath.mpc``; the caller owns ``mp.workdps``.
    """
    import mpmath

    with mpmath.workdps(dps):
        a = [mpmath.mpf(c.numerator) / c.denominator for c in coeffs]
        while a and a[0] == 0:
            a.pop(0)
        deg = len(a) - 1
        if deg < 1:
            return []
        a = [c / a[0] for c in a]
        da = [c * (deg - i) for i, c in enumerate(a[:-1])]
        z = [radius * mpmath.expjpi(2 * mpmath.mpf(i) / deg + mpmath.mpf(0.4) / mpmath.pi)
             for i in range(deg)]
        # cubic convergence: two sweeps after half-precision corrections
        # reach the working-precision floor set by root conditioning
        tol = mpmath.mpf(10) ** (-(dps // 2))
        floor = mpmath.mpf(10) ** (8 - dps)
        abs_a = [abs(c) for c in a]
        done = [False] * deg
        polish = 2
        for _ in range(max_iter):
            if all(done):
                if not polish:
                    break
                polish -= 1
            for i in range(deg):
                if done[i] and polish == 2:
                    continue
                zi = z[i]
                p = a[0]
                dp = da[0]
                for c in a[1:]:
                    p = p * zi + c
                for c in da[1:]:
                    dp = dp * zi + c
                # multiple roots converge linearly; accept once p(z) is at rounding level
                if abs(p) <= floor * mpmath.polyval(abs_a, abs(zi)):
                    done[i] = True
                    continue
                ratio = p / dp
                rep = mpmath.fsum(1 / (zi - z[j]) for j in range(deg) if j != i)
                w = ratio / (1 - ratio * rep)
                z[i] = zi - w
                if abs(w) <= tol * max(abs(zi), 1):
                    done[i] = True
        if not all(done):
            raise ConvergenceError(
                f"extended-precision Aberth iteration did not converge "
                f"(degree {deg}, {dps} digits)"
            )
        return z
