"""Finite-dimensional real Lie algebras given by exact structure constants.

Indices are 1-based in every public signature and file format
(``[v_a, v_b] = sum_g c(a, b, g) v_g``); storage is 0-based.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from ._rational import nullspace
from .errors import CatalogError, ShapeError, ParseError


@dataclass(frozen=True)
class StructureConstants:
    """Structure constants ``c[a][b][g]`` (0-based storage) of an r-dimensional algebra."""

    r: int
    c: tuple

    def __post_init__(self):
        if self.r < 1:
            raise ShapeError(f"algebra dimension must be >= 1, got {self.r}")
        if len(self.c) != self.r or any(
            len(row) != self.r or any(len(col) != self.r for col in row) for row in self.c
        ):
            raise ShapeError("structure constant tensor must be r x r x r")

    @classmethod
    def from_entries(cls, r, entries, complete=True):
        """Build from ``{(a, b, g): value}`` with 1-based indices.

        With ``complete=True`` each entry also sets ``c(b, a, g) = -value``.
        """
        c = [[[Fraction(0)] * r for _ in range(r)] for _ in range(r)]
        for (a, b, g), val in entries.items():
            if not all(1 <= i <= r for i in (a, b, g)):
                raise ShapeError(f"index {(a, b, g)} out of range 1..{r}")
            val = Fraction(val)
            c[a - 1][b - 1][g - 1] = val
            if complete:
                c[b - 1][a - 1][g - 1] = -val
        return cls(r, tuple(tuple(tuple(col) for col in row) for row in c))

    @classmethod
    def abelian(cls, r):
        return cls.from_entries(r, {})

    def coeff(self, a, b, g):
        """``c(a, b, g)`` with 1-based indices."""
        return self.c[a - 1][b - 1][g - 1]

    def nonzero(self):
        """Yield ``(a, b, g, value)`` 0-based for every nonzero entry."""
        for a, b, g in product(range(self.r), repeat=3):
            val = self.c[a][b][g]
            if val:
                yield a, b, g, val

    def as_array(self):
        return np.array(
            [[[float(v) for v in col] for col in row] for row in self.c], dtype=float
        )

    def to_json(self):
        entries = []
        for a, b, g, val in self.nonzero():
            if a < b:
                entries.append([a + 1, b + 1, g + 1, _frac_str(val)])
        return {"r": self.r, "c": entries}

    @classmethod
    def from_json(cls, data):
        try:
            r = int(data["r"])
            entries = {}
            for a, b, g, val in data["c"]:
                a, b, g = int(a), int(b), int(g)
                if a >= b:
                    raise ParseError(f"entry ({a},{b},{g}) must have alpha < beta")
                entries[(a, b, g)] = Fraction(str(val))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed algebra JSON: {exc}") from exc
        return cls.from_entries(r, entries)


def _frac_str(val):
    val = Fraction(val)
    return str(val.numerator) if val.denominator == 1 else f"{val.numerator}/{val.denominator}"


def validate(sc):
    """List violated antisymmetry and Jacobi identities (empty when valid).

    Each item is a tuple ``(kind, indices, value)`` with 1-based indices.
    """
    r, c = sc.r, sc.c
    report = []
    for a, b, g in product(range(r), repeat=3):
        s = c[a][b][g] + c[b][a][g]
        if s != 0 and a <= b:
            report.append(("antisymmetry", (a + 1, b + 1, g + 1), s))
    for a, b, g, n in product(range(r), repeat=4):
        total = sum(
            c[a][b][mu] * c[mu][g][n] + c[b][g][mu] * c[mu][a][n] + c[g][a][mu] * c[mu][b][n]
            for mu in range(r)
        )
        if total != 0:
            report.append(("jacobi", (a + 1, b + 1, g + 1, n + 1), total))
    return report


def adjoint_matrix(sc, b):
    """Matrix of the Lie-integral flow ``df/dt = M f`` for coefficients ``b``.

    ``M[a, g] = -sum_beta b[beta] c(g, beta, a)``.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (sc.r,):
        raise ShapeError(f"expected {sc.r} coefficients, got shape {b.shape}")
    return -np.einsum("b,gba->ag", b, sc.as_array())


def adjoint_matrix_exact(sc, b):
    """Rational version of :func:`adjoint_matrix` (list of lists of Fractions)."""
    if len(b) != sc.r:
        raise ShapeError(f"expected {sc.r} coefficients, got {len(b)}")
    b = [Fraction(v) for v in b]
    r = sc.r
    return [
        [-sum((b[be] * sc.c[g][be][a] for be in range(r)), Fraction(0)) for g in range(r)]
        for a in range(r)
    ]


def is_lower_triangular(mat, strict=False):
    mat = np.asarray(mat)
    k = 0 if strict else 1
    return bool(np.all(np.triu(mat, k) == 0))


def center_basis(sc):
    """Exact basis of the center ``{w : [w, v_a] = 0 for all a}``."""
    r = sc.r
    rows = [[sc.c[a][b][g] for a in range(r)] for b in range(r) for g in range(r)]
    return nullspace(rows, r)


@dataclass(frozen=True)
class AlgebraCatalogEntry:
    name: str
    sc: StructureConstants
    labels: tuple
    notes: str = field(default="", compare=False)


_SL2 = {(1, 2, 1): -1, (1, 3, 2): -2, (2, 3, 3): -1}

# [v2,v3] = -v1, [v3,v1] = -v2, [v1,v2] = -v3
_SU2 = {(1, 2, 3): -1, (3, 1, 2): -1, (2, 3, 1): -1}

# Read off from the canonical bracket {f, g} = f_x g_p - f_p g_x of
# h1 = -2 sqrt(-p), h2 = p, h3 = x p, h4 = x^2 p, h5 = -2 x sqrt(-p), h6 = 1.
_H6 = {
    (1, 3, 1): Fraction(-1, 2),
    (1, 4, 5): -1,
    (1, 5, 6): 2,
    (2, 3, 2): -1,
    (2, 4, 3): -2,
    (2, 5, 1): -1,
    (3, 4, 4): -1,
    (3, 5, 5): Fraction(-1, 2),
}

_CATALOG = {
    "sl2": (3, _SL2, "sl(2,R) basis with [v1,v2]=-v1, [v1,v3]=-2v2, [v2,v3]=-v3"),
    "su2": (3, _SU2, "su(2) basis with [v1,v2]=-v3, [v3,v1]=-v2, [v2,v3]=-v1"),
    "h6": (
        6,
        _H6,
        "two-photon algebra sl(2,R) + Heisenberg-Weyl; constants read off from "
        "the Hamiltonians of the second-order Riccati system, h6 = 1 central",
    ),
}


def catalog_names():
    return sorted(_CATALOG)


def builtin(name):
    """Catalog entry for ``sl2``, ``su2`` or ``h6``."""
    try:
        r, entries, notes = _CATALOG[name]
    except KeyError:
        raise CatalogError(f"unknown algebra {name!r}; known: {', '.join(catalog_names())}") from None
    sc = StructureConstants.from_entries(r, entries)
    return AlgebraCatalogEntry(name, sc, tuple(f"v{i}" for i in range(1, r + 1)), notes)


def load_json(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    return StructureConstants.from_json(data)
