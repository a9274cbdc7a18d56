"""Exact Gaussian elimination over the rationals."""

from fractions import Fraction


def rref(rows, ncols):
    """Reduced row echelon form of a list of rational rows.

    Returns ``(reduced_rows, pivot_columns)``; zero rows are dropped.
    """
    mat = [[Fraction(v) for v in row] for row in rows]
    pivots = []
    lead = 0
    for col in range(ncols):
        pivot = None
        for i in range(lead, len(mat)):
            if mat[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        mat[lead], mat[pivot] = mat[pivot], mat[lead]
        inv = 1 / mat[lead][col]
        mat[lead] = [v * inv for v in mat[lead]]
        for i in range(len(mat)):
            if i != lead and mat[i][col] != 0:
                factor = mat[i][col]
                mat[i] = [a - factor * b for a, b in zip(mat[i], mat[lead])]
        pivots.append(col)
        lead += 1
        if lead == len(mat):
            break
    return mat[:lead], pivots


def nullspace(rows, ncols):
    """Basis of ``{x : A x = 0}`` with one vector per free column.

    Each basis vector has a 1 in its free column and zeros in the other
    free columns.
    """
    reduced, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pc in zip(reduced, pivots):
            vec[pc] = -row[free]
        basis.append(vec)
    return basis
