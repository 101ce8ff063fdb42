# cython: language_level=3
"""Compiled simplex pivot kernel.

Mirror of persuade._pivot_py: same Bland entering and leaving rules, so
the pivot sequence (and therefore every solution and dual) is identical
to the pure-Python kernel.  The arithmetic stays on exact Fraction
objects; compilation removes the interpreter overhead of the scan and
elimination loops.
"""

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def run_simplex(list tab, list basis, list enterable, long max_iter):
    cdef Py_ssize_t m = len(basis)
    cdef list obj = tab[m]
    cdef Py_ssize_t ncols = len(obj) - 1
    cdef long iters = 0
    cdef Py_ssize_t enter, leave, i, j, rowlen
    cdef list prow, row, nonzero
    cdef object a, ratio, best_ratio, pivot, inv, factor

    while True:
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
        rowlen = len(prow)
        pivot = prow[enter]
        if pivot != 1:
            inv = 1 / pivot
            for j in range(rowlen):
                if prow[j]:
                    prow[j] = prow[j] * inv
        nonzero = []
        for j in range(rowlen):
            if prow[j]:
                nonzero.append(j)
        for i in range(m + 1):
            if i == leave:
                continue
            row = tab[i]
            factor = row[enter]
            if factor:
                for j in nonzero:
                    row[j] = row[j] - factor * prow[j]
        basis[leave] = enter
