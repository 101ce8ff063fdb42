"""Pure-Python simplex pivot kernel.

This module and persuade._pivot_cy implement the same loop; the compiled
variant is preferred at import time when available.  Keep the two in
lockstep: the pivot sequence must be identical so solver output does not
depend on which kernel is active.
"""

from __future__ import annotations

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def run_simplex(tab, basis, enterable, max_iter):
    """Pivot a tableau to optimality under Bland's rule.

    Args:
        tab: list of rows of Fractions, all the same length.  Rows
            0..m-1 are constraint rows, row m is the objective row in
            reduced-cost form (entry j holds z_j - c_j for a maximization,
            so the tableau is optimal when every enterable entry is >= 0).
            The last column is the right-hand side.
        basis: list of m column indices, the basic column of each row.
            Updated in place.
        enterable: list of bools per column; false columns never enter.
        max_iter: pivot budget, a safety net only (Bland's rule cannot
            cycle).

    Returns:
        (status, iterations) with status OPTIMAL, UNBOUNDED, or
        ITERATION_LIMIT.
    """
    m = len(basis)
    obj = tab[m]
    ncols = len(obj) - 1
    iters = 0
    while True:
        # Bland entering rule: lowest-index enterable column with a
        # negative reduced cost.
        enter = -1
        for j in range(ncols):
            if enterable[j] and obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return OPTIMAL, iters
        if iters >= max_iter:
            return ITERATION_LIMIT, iters
        iters += 1

        # Ratio test; ties broken by the lowest basic-variable index
        # (Bland leaving rule).
        leave = -1
        best_ratio = None
        for i in range(m):
            a = tab[i][enter]
            if a > 0:
                ratio = tab[i][-1] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED, iters

        prow = tab[leave]
        pivot = prow[enter]
        if pivot != 1:
            inv = 1 / pivot
            for j in range(len(prow)):
                if prow[j]:
                    prow[j] = prow[j] * inv
        nonzero = [j for j in range(len(prow)) if prow[j]]
        for i in range(m + 1):
            if i == leave:
                continue
            row = tab[i]
            factor = row[enter]
            if factor:
                for j in nonzero:
                    row[j] = row[j] - factor * prow[j]
        basis[leave] = enter
