"""Exact rational linear algebra for the small moment systems."""

from fractions import Fraction


def solve_rational(matrix, rhs):
    """Solve ``matrix @ x = rhs`` exactly by Gaussian elimination with full pivoting.

    Entries may be ints or Fractions. Returns a list of Fractions.
    Raises ZeroDivisionError if the matrix is singular.
    """
    n = len(matrix)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    cols = list(range(n))

    for i in range(n):
        # full pivoting: largest magnitude in the trailing block
        piv_row, piv_col, best = i, i, Fraction(0)
        for rr in range(i, n):
            for cc in range(i, n):
                if abs(a[rr][cc]) > best:
                    piv_row, piv_col, best = rr, cc, abs(a[rr][cc])
        if best == 0:
            raise ZeroDivisionError("matrix is singular")
        a[i], a[piv_row] = a[piv_row], a[i]
        if piv_col != i:
            for row in a:
                row[i], row[piv_col] = row[piv_col], row[i]
            cols[i], cols[piv_col] = cols[piv_col], cols[i]

        pivot = a[i][i]
        for rr in range(i + 1, n):
            f = a[rr][i] / pivot
            if f:
                row_r, row_i = a[rr], a[i]
                for cc in range(i, n + 1):
                    row_r[cc] -= f * row_i[cc]

    y = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = a[i][n] - sum(a[i][cc] * y[cc] for cc in range(i + 1, n))
        y[i] = s / a[i][i]

    x = [Fraction(0)] * n
    for pos, col in enumerate(cols):
        x[col] = y[pos]
    return x


def divide_by_linear(coeffs, root):
    """Synthetic division of a descending-order polynomial by ``(t - root)``.

    Returns ``(quotient, remainder)``; works for Fractions and floats alike.
    """
    out = [coeffs[0]]
    for c in coeffs[1:]:
        out.append(c + root * out[-1])
    return out[:-1], out[-1]
