"""Exact sparse polynomials over ``m`` copies of ``r`` abstract generators.

A :class:`SymPoly` is an element of the m-fold tensor power of the symmetric
algebra of a Lie algebra. Exponent slot ``(a - 1) * r + (alpha - 1)`` holds
the power of generator ``v_alpha`` in copy ``a`` (both 1-based in the text
format and in every public signature).
"""

import re
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb, gcd

import numpy as np

from ._rational import nullspace
from .errors import ParseError, ShapeError, SizeError

DEFAULT_CASIMIR_CAP = 5000


def _order_key(item):
    exps = item[0]
    return (-sum(exps), tuple(-e for e in exps))


class SymPoly:
    """Immutable polynomial with rational coefficients.

    Terms are kept in graded lexicographic order (highest degree first), so
    two equal polynomials have identical ``terms`` tuples.
    """

    __slots__ = ("r", "m", "_terms", "_dict", "_hash", "_arrays")

    def __init__(self, r, m, terms=None):
        if r < 1 or m < 1:
            raise ShapeError(f"need r >= 1 and m >= 1, got r={r}, m={m}")
        n = r * m
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise ShapeError(f"exponent vector {exps} must have length {n}")
            if any(e < 0 for e in exps):
                raise ShapeError(f"negative exponent in {exps}")
            coef = Fraction(coef)
            if coef:
                clean[exps] = clean.get(exps, Fraction(0)) + coef
        clean = {k: v for k, v in clean.items() if v}
        self.r = r
        self.m = m
        self._dict = clean
        self._terms = tuple(sorted(clean.items(), key=_order_key))
        self._hash = None
        self._arrays = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, r, m=1):
        return cls(r, m)

    @classmethod
    def constant(cls, value, r, m=1):
        return cls(r, m, {(0,) * (r * m): value})

    @classmethod
    def gen(cls, alpha, r, m=1, copy=1):
        """Generator ``v_alpha`` in copy ``copy`` (1-based)."""
        if not (1 <= alpha <= r and 1 <= copy <= m):
            raise ShapeError(f"generator v{alpha}_{copy} out of range (r={r}, m={m})")
        exps = [0] * (r * m)
        exps[(copy - 1) * r + alpha - 1] = 1
        return cls(r, m, {tuple(exps): 1})

    @classmethod
    def gens(cls, r, m=1, copy=1):
        return [cls.gen(a, r, m, copy) for a in range(1, r + 1)]

    # -- accessors ------------------------------------------------------------

    @property
    def terms(self):
        return self._terms

    @property
    def nvars(self):
        return self.r * self.m

    def as_dict(self):
        return dict(self._dict)

    def is_zero(self):
        return not self._dict

    def degree(self):
        return max((sum(e) for e in self._dict), default=-1)

    def constant_term(self):
        return self._dict.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, exps):
        return self._dict.get(tuple(exps), Fraction(0))

    def __len__(self):
        return len(self._dict)

    # -- ring operations ------------------------------------------------------

    def _check(self, other):
        if (self.r, self.m) != (other.r, other.m):
            raise ShapeError(
                f"shape mismatch: (r={self.r}, m={self.m}) vs (r={other.r}, m={other.m})"
            )

    def _coerce(self, other):
        if isinstance(other, SymPoly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return SymPoly.constant(other, self.r, self.m)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._dict)
        for k, v in other._dict.items():
            out[k] = out.get(k, 0) + v
        return SymPoly(self.r, self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return SymPoly(self.r, self.m, {k: -v for k, v in self._dict.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, SymPoly):
            return NotImplemented
        self._check(other)
        out = {}
        for ea, ca in self._dict.items():
            for eb, cb in other._dict.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                out[key] = out.get(key, 0) + ca * cb
        return SymPoly(self.r, self.m, out)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = SymPoly.constant(1, self.r, self.m)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, factor):
        factor = Fraction(factor)
        return SymPoly(self.r, self.m, {k: v * factor for k, v in self._dict.items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SymPoly.constant(other, self.r, self.m)
        if not isinstance(other, SymPoly):
            return NotImplemented
        return (self.r, self.m, self._terms) == (other.r, other.m, other._terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.r, self.m, self._terms))
        return self._hash

    def diff(self, slot):
        """Partial derivative with respect to exponent slot ``slot`` (0-based)."""
        out = {}
        for exps, coef in self._dict.items():
            e = exps[slot]
            if e:
                key = exps[:slot] + (e - 1,) + exps[slot + 1:]
                out[key] = coef * e
        return SymPoly(self.r, self.m, out)

    # -- numeric evaluation ---------------------------------------------------

    def arrays(self):
        """``(exponents, coefficients)`` as numpy arrays for the float kernels."""
        if self._arrays is None:
            if self._terms:
                exps = np.array([e for e, _ in self._terms], dtype=np.int64)
            else:
                exps = np.zeros((0, self.nvars), dtype=np.int64)
            coeffs = np.array([float(c) for _, c in self._terms], dtype=float)
            self._arrays = (exps, coeffs)
        return self._arrays

    def evaluate(self, values):
        """Evaluate at generator values, shape ``(nvars,)`` or ``(npts, nvars)``."""
        from ._kernels import poly_eval

        values = np.asarray(values, dtype=float)
        single = values.ndim == 1
        vals = np.atleast_2d(values)
        if vals.shape[1] != self.nvars:
            raise ShapeError(f"expected {self.nvars} generator values, got {vals.shape[1]}")
        exps, coeffs = self.arrays()
        out = poly_eval(exps, coeffs, vals)
        return float(out[0]) if single else out

    def evaluate_grad(self, values):
        """Value and gradient with respect to the generator values."""
        from ._kernels import poly_eval_grad

        values = np.asarray(values, dtype=float)
        single = values.ndim == 1
        vals = np.atleast_2d(values)
        if vals.shape[1] != self.nvars:
            raise ShapeError(f"expected {self.nvars} generator values, got {vals.shape[1]}")
        exps, coeffs = self.arrays()
        val, grad = poly_eval_grad(exps, coeffs, vals)
        if single:
            return float(val[0]), grad[0]
        return val, grad

    # -- text -----------------------------------------------------------------

    def to_text(self):
        if not self._terms:
            return "0"
        parts = []
        for exps, coef in self._terms:
            factors = []
            for slot, e in enumerate(exps):
                if e:
                    copy, alpha = divmod(slot, self.r)
                    name = f"v{alpha + 1}_{copy + 1}"
                    factors.append(name if e == 1 else f"{name}^{e}")
            c = _frac_text(coef)
            parts.append(f"{c} * {' '.join(factors)}" if factors else c)
        return " + ".join(parts)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"SymPoly(r={self.r}, m={self.m}, {self.to_text()!r})"

    @classmethod
    def parse(cls, text, r, m=1):
        return _Parser(text, r, m).parse()


def _frac_text(v):
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<var>v(?P<alpha>\d+)(?:_(?P<copy>\d+))?)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


class _Parser:
    """Recursive-descent parser for polynomial text.

    Accepts the canonical output of :meth:`SymPoly.to_text` as well as
    hand-written forms such as ``"v1*v3 - v2^2"`` (copy suffix defaults to 1).
    """

    def __init__(self, text, r, m):
        self.r, self.m = r, m
        self.text = text
        self.tokens = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            match = _TOKEN.match(text, pos)
            if not match or match.end() == pos:
                raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
            if match.group("num") is not None:
                self.tokens.append(("num", Fraction(match.group("num"))))
            elif match.group("var") is not None:
                alpha = int(match.group("alpha"))
                copy = int(match.group("copy") or 1)
                if not (1 <= alpha <= r and 1 <= copy <= m):
                    raise ParseError(f"variable {match.group('var')} out of range (r={r}, m={m})")
                self.tokens.append(("var", (alpha, copy)))
            else:
                op = match.group("op")
                self.tokens.append(("op", "^" if op == "**" else op))
            pos = match.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise ParseError("empty polynomial expression")
        result = self.expr()
        if self.i != len(self.tokens):
            raise ParseError(f"trailing input in {self.text!r}")
        return result

    def expr(self):
        result = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def starts_atom(self):
        kind, val = self.peek()
        return kind in ("num", "var") or (kind == "op" and val == "(")

    def term(self):
        result = self.unary()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in ("*", "/"):
                self.take()
                rhs = self.unary()
                if val == "*":
                    result = result * rhs
                else:
                    if rhs.degree() > 0 or rhs.is_zero():
                        raise ParseError("division only by nonzero constants")
                    result = result.scale(1 / rhs.constant_term())
            elif self.starts_atom():
                result = result * self.unary()
            else:
                return result

    def unary(self):
        kind, val = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            inner = self.unary()
            return -inner if val == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num" or val.denominator != 1 or val < 0:
                raise ParseError("exponent must be a non-negative integer")
            base = base ** int(val)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return SymPoly.constant(val, self.r, self.m)
        if kind == "var":
            return SymPoly.gen(val[0], self.r, self.m, val[1])
        if (kind, val) == ("op", "("):
            inner = self.expr()
            if self.take() != ("op", ")"):
                raise ParseError("unbalanced parentheses")
            return inner
        raise ParseError(f"unexpected token {val!r}")


# -- functional surface ---------------------------------------------------------


def add(p, q):
    return p + q


def mul(p, q):
    return p * q


def scale(p, factor):
    return p.scale(factor)


def poisson_bracket(p, q, sc):
    """Copy-diagonal Lie-Poisson bracket.

    ``{P, Q} = sum_a sum_{alpha,beta,gamma} c(alpha,beta,gamma) v_gamma^(a)
    dP/dv_alpha^(a) dQ/dv_beta^(a)``.
    """
    p._check(q)
    if sc.r != p.r:
        raise ShapeError(f"algebra has r={sc.r}, polynomials have r={p.r}")
    r, m = p.r, p.m
    entries = {}
    for a, b, g, val in sc.nonzero():
        entries.setdefault((a, b), []).append((g, val))
    out = {}
    for copy in range(m):
        base = copy * r
        dp = {a: p.diff(base + a) for a in range(r)}
        dq = {b: q.diff(base + b) for b in range(r)}
        for (a, b), lin in entries.items():
            if dp[a].is_zero() or dq[b].is_zero():
                continue
            prod = dp[a] * dq[b]
            for g, val in lin:
                slot = base + g
                for exps, coef in prod._dict.items():
                    key = exps[:slot] + (exps[slot] + 1,) + exps[slot + 1:]
                    out[key] = out.get(key, 0) + coef * val
    return SymPoly(r, m, out)


@lru_cache(maxsize=256)
def _coproduct_gen_power(alpha, r, m, k):
    total = SymPoly.zero(r, m)
    for copy in range(1, m + 1):
        total = total + SymPoly.gen(alpha, r, m, copy)
    return total ** k


def coproduct(p, m_target):
    """Image of a one-copy polynomial under the m-th coproduct.

    Every generator ``v_alpha`` is replaced by ``sum_a v_alpha^(a)``.
    """
    if p.m != 1:
        raise ShapeError(f"coproduct needs a one-copy polynomial, got m={p.m}")
    if m_target < 1:
        raise ShapeError("target copy count must be >= 1")
    r = p.r
    result = SymPoly.zero(r, m_target)
    for exps, coef in p.terms:
        term = SymPoly.constant(coef, r, m_target)
        for alpha, e in enumerate(exps):
            if e:
                term = term * _coproduct_gen_power(alpha + 1, r, m_target, e)
        result = result + term
    return result


def embed(p, m, copies=None):
    """Place a k-copy polynomial into ``m >= k`` copies.

    By default copy ``a`` goes to copy ``a``; ``copies[a - 1]`` overrides
    the target of copy ``a``.
    """
    k, r = p.m, p.r
    if copies is None:
        copies = range(1, k + 1)
    copies = list(copies)
    if len(copies) != k or len(set(copies)) != k or not all(1 <= c <= m for c in copies):
        raise ShapeError(f"invalid copy map {copies} from {k} into {m} copies")
    out = {}
    for exps, coef in p.terms:
        new = [0] * (r * m)
        for src, dst in enumerate(copies):
            new[(dst - 1) * r:dst * r] = exps[src * r:(src + 1) * r]
        out[tuple(new)] = coef
    return SymPoly(r, m, out)


def transposition(m, i, j):
    """The copy permutation swapping copies ``i`` and ``j`` (1-based)."""
    perm = list(range(1, m + 1))
    perm[i - 1], perm[j - 1] = perm[j - 1], perm[i - 1]
    return tuple(perm)


def permute_copies(p, sigma):
    """Relabel copies: copy ``a`` becomes copy ``sigma[a - 1]``."""
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(1, p.m + 1)):
        raise ShapeError(f"{sigma} is not a permutation of 1..{p.m}")
    return embed(p, p.m, sigma)


def is_casimir(p, sc):
    """True when ``{P, v_alpha}`` vanishes identically for every generator."""
    if p.m != 1:
        raise ShapeError("Casimir test applies to one-copy polynomials")
    return all(poisson_bracket(p, v, sc).is_zero() for v in SymPoly.gens(p.r))


def monomials(r, degree):
    """Exponent tuples of all degree-``degree`` monomials in ``r`` variables."""
    out = []
    for combo in combinations_with_replacement(range(r), degree):
        exps = [0] * r
        for i in combo:
            exps[i] += 1
        out.append(tuple(exps))
    return out


def _primitive(vec):
    """Scale a rational vector to coprime integers with a positive leading entry."""
    nonzero = [v for v in vec if v]
    if not nonzero:
        return vec
    lcm = 1
    for v in nonzero:
        lcm = lcm * v.denominator // gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, v)
    ints = [v // g for v in ints]
    lead = next(v for v in ints if v)
    sign = 1 if lead > 0 else -1
    return [Fraction(sign * v) for v in ints]


def find_casimirs(sc, dmax, cap=DEFAULT_CASIMIR_CAP):
    """Exact basis of the polynomial Casimirs of degree at most ``dmax``.

    The first element is always the constant ``1``; the others are
    homogeneous (hence free of constant terms), with coprime integer
    coefficients and a positive leading term.
    """
    if dmax < 0:
        raise ShapeError("dmax must be >= 0")
    r = sc.r
    size = comb(r + dmax, dmax)
    if size > cap:
        raise SizeError(f"{size} monomials up to degree {dmax} exceed the cap of {cap}")
    gens = SymPoly.gens(r)
    basis = [SymPoly.constant(1, r)]
    for degree in range(1, dmax + 1):
        monos = monomials(r, degree)
        index = {}
        columns = []
        for mono in monos:
            p = SymPoly(r, 1, {mono: 1})
            col = {}
            for alpha, v in enumerate(gens):
                for exps, coef in poisson_bracket(p, v, sc).terms:
                    key = (alpha, exps)
                    if key not in index:
                        index[key] = len(index)
                    col[index[key]] = coef
            columns.append(col)
        rows = [[Fraction(0)] * len(monos) for _ in range(len(index))]
        for j, col in enumerate(columns):
            for i, coef in col.items():
                rows[i][j] = coef
        for vec in reversed(nullspace(rows, len(monos))):
            vec = _primitive(vec)
            basis.append(SymPoly(r, 1, {mono: c for mono, c in zip(monos, vec) if c}))
    return basis
