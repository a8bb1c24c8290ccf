"""Phase-1 simplex for small dense equality-feasibility problems.

Finds x >= 0 with A x = b, or reports infeasibility.  Sized for kernel
recovery problems (tens of variables), favoring exactness over speed:
dense tableau, Bland's rule against cycling.
"""

import numpy as np

__all__ = ["solve_equality_feasibility"]

PIVOT_TOL = 1e-11


def solve_equality_feasibility(a_eq, b_eq, tol: float = 1e-9):
    """Return a nonnegative solution of A x = b, or None if the phase-1
    optimum (total artificial mass) stays above tol."""
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],):
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    m, n = a.shape
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # Tableau columns: n structural variables, m artificials, rhs.
    t = np.zeros((m + 1, n + m + 1))
    t[:m, :n] = a
    t[:m, n : n + m] = np.eye(m)
    t[:m, -1] = b
    # Reduced costs for min(sum of artificials) with the artificial basis.
    t[m, :n] = -a.sum(axis=0)
    t[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    while True:
        enter = -1
        for j in range(n + m):
            if t[m, j] < -PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = np.inf
        for i in range(m):
            if t[i, enter] > PIVOT_TOL:
                ratio = t[i, -1] / t[i, enter]
                if ratio < best - PIVOT_TOL or (
                    ratio < best + PIVOT_TOL and (leave < 0 or basis[i] < basis[leave])
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            # Phase-1 objective is bounded below by zero, so an unbounded
            # direction means numerical breakdown; report infeasible.
            return None
        piv = t[leave, enter]
        t[leave] /= piv
        col = t[:, enter].copy()
        col[leave] = 0.0
        t -= np.outer(col, t[leave])
        basis[leave] = enter

    if -t[m, -1] > tol:
        return None
    x = np.zeros(n)
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = t[i, -1]
    return np.where(x < 0.0, 0.0, x)
