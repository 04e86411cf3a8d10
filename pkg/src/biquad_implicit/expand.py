"""Expansion of the Cayley determinant into an explicit trivariate polynomial.

The expanded polynomial ``F(x, y, z)`` is the per-patch implicit equation.  It
is evaluated by nested Horner (``x`` outermost, then ``y``, then ``z``) and can
be emitted as a branch-free straight-line program with exactly the same
operation sequence.

Straight-line program text format
---------------------------------
::

    slp 1
    const c0 = -1.5
    const c1 = 2.0
    r0 = load x
    r1 = mul c0 r0
    r2 = add r1 c1
    out r2

The first line is a version tag.  ``const`` lines form the constant table
(values in shortest round-trip decimal).  Each remaining line assigns one
register with ``load <x|y|z>``, ``const <cK>``, ``add <a> <b>`` or
``mul <a> <b>``, where operands are registers ``rK`` or constants ``cK``.
``out`` names the result register.  Every register is assigned exactly once
before use.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .dixon import CayleyMatrix
from .errors import DegenerateSurfaceError
from .geometry import QUAD, TRIANGLE

DEGREE_BOUND = {TRIANGLE: 5, QUAD: 8}
# a coefficient this small relative to its counterpart in the permanent of |M| is rounding residue
CLEANUP_RTOL = 1e-14
# determinant coefficients this small relative to the entry-magnitude product mean "identically zero"
DEGENERATE_RTOL = 1e-13


def grlex_key(exps):
    i, j, k = exps
    return (i + j + k, i, j, k)


@dataclass(frozen=True)
class TrivariatePoly:
    """Sparse polynomial ``sum c_ijk x^i y^j z^k`` with no stored zeros."""

    terms: dict
    max_degree: int

    def __post_init__(self):
        clean = {tuple(int(e) for e in exps): float(c)
                 for exps, c in self.terms.items() if c != 0}
        for exps in clean:
            if min(exps) < 0 or sum(exps) > self.max_degree:
                raise ValueError(f"monomial {exps} violates degree bound {self.max_degree}")
        object.__setattr__(self, "terms", clean)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def sorted_terms(self) -> list:
        return [(e, self.terms[e]) for e in sorted(self.terms, key=grlex_key)]

    def to_json_dict(self) -> dict:
        return {"max_degree": self.max_degree,
                "terms": [[i, j, k, c] for (i, j, k), c in self.sorted_terms()]}

    def to_json(self) -> str:
        """JSON text with one term per line; floats use the shortest round-trip repr."""
        rows = ",\n".join("  " + json.dumps(t) for t in self.to_json_dict()["terms"])
        body = f"[\n{rows}\n ]" if rows else "[]"
        return f'{{\n "max_degree": {self.max_degree},\n "terms": {body}\n}}\n'

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrivariatePoly":
        if set(doc) != {"max_degree", "terms"}:
            raise ValueError(f"polynomial document keys must be max_degree and terms, got {sorted(doc)}")
        terms = {}
        for row in doc["terms"]:
            i, j, k, c = row
            terms[(i, j, k)] = c
        return cls(terms, int(doc["max_degree"]))


# Error-free transformations for double-double arithmetic on arrays.  The
# Laplace expansion cancels heavily (quad coefficients lose ~1e-9 relative in
# plain float64), so minors are carried as unevaluated sums hi + lo.
_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _fast_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _dd_add(x, y):
    s, e = _two_sum(x[0], y[0])
    return _fast_two_sum(s, e + (x[1] + y[1]))


def _graded_basis(degree: int) -> list:
    return [(i, j, k) for d in range(degree + 1)
            for i in range(d, -1, -1) for j in range(d - i, -1, -1) for k in (d - i - j,)]


class _Layout:
    """Monomial bases by degree and the index maps for multiplying by x, y, z, 1.

    A minor with ``s`` rows is a polynomial of degree <= ``s`` and is stored
    as a vector over ``basis[s]``.  ``targets[s][v]`` gives, for each monomial
    of ``basis[s]``, the index in ``basis[s + 1]`` of that monomial times
    ``x``, ``y``, ``z`` or ``1`` (``v`` = 0, 1, 2, 3).
    """

    def __init__(self, n: int):
        self.basis = [_graded_basis(s) for s in range(n + 1)]
        index = [{m: t for t, m in enumerate(b)} for b in self.basis]
        self.targets = []
        for s in range(n):
            rows = []
            for step in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)):
                rows.append([index[s + 1][tuple(a + b for a, b in zip(m, step))]
                             for m in self.basis[s]])
            self.targets.append(np.array(rows))


class _DoubleDouble:
    def __init__(self, layout: _Layout):
        self.layout = layout

    def one(self):
        return np.ones(1), np.zeros(1)

    def is_zero(self, p):
        return not p[0].any()

    def combine(self, terms, degree: int):
        """Sum of ``form * sub`` over ``terms`` as a double-double vector over ``basis[degree]``."""
        size = len(self.layout.basis[degree])
        if not terms:
            return np.zeros(size), np.zeros(size)
        targets = self.layout.targets[degree - 1]
        forms = np.array([f for f, _ in terms], dtype=float).reshape(-1, 1)
        hi = np.repeat(np.array([sub[0] for _, sub in terms]), 4, axis=0)
        lo = np.repeat(np.array([sub[1] for _, sub in terms]), 4, axis=0)
        p = forms * hi
        f_hi, f_lo = _split(forms)
        h_hi, h_lo = _split(hi)
        err = ((f_hi * h_hi - p) + f_hi * h_lo + f_lo * h_hi) + f_lo * h_lo
        p, err = _fast_two_sum(p, err + forms * lo)
        # scatter every product row into the larger basis, then reduce pairwise
        rows = len(p)
        padded = rows + rows % 2
        acc_hi = np.zeros((padded, size))
        acc_lo = np.zeros((padded, size))
        cols = np.tile(targets, (len(terms), 1))
        acc_hi[np.arange(rows)[:, None], cols] = p
        acc_lo[np.arange(rows)[:, None], cols] = err
        acc = (acc_hi, acc_lo)
        while len(acc[0]) > 1:
            if len(acc[0]) % 2:
                acc = tuple(np.concatenate([a, np.zeros_like(a[:1])]) for a in acc)
            half = len(acc[0]) // 2
            acc = _dd_add((acc[0][:half], acc[1][:half]), (acc[0][half:], acc[1][half:]))
        return acc[0][0], acc[1][0]


class _Rational:
    def __init__(self, layout: _Layout):
        self.layout = layout

    def one(self):
        return np.array([Fraction(1)], dtype=object)

    def is_zero(self, p):
        return not (p != 0).any()

    def combine(self, terms, degree: int):
        out = np.full(len(self.layout.basis[degree]), Fraction(0), dtype=object)
        targets = self.layout.targets[degree - 1]
        for form, sub in terms:
            for v in range(4):
                if form[v]:
                    out[targets[v]] += form[v] * sub
        return out


def determinant_coefficients(cm: CayleyMatrix, exact: bool = False,
                             absolute: bool = False) -> np.ndarray:
    """Dense coefficient cube of ``det M(x, y, z)``, indexed ``[i, j, k]``.

    Laplace expansion down the rows, memoizing each minor by the set of
    columns it still uses (one minor per column subset, no divisions).
    Minors are accumulated in double-double and rounded once at the end.
    With ``exact=True`` the entries are converted to ``Fraction`` and the cube
    is the exact determinant of the given matrix. With ``absolute=True`` the
    entries' coefficients are replaced by their magnitudes and all signs are
    dropped, which gives the permanent of ``|M|``: a bound on how large each
    coefficient's accumulated rounding can be.
    """
    n = cm.n
    layout = _Layout(n)
    if exact:
        ring = _Rational(layout)
        coeffs = np.vectorize(Fraction, otypes=[object])(cm.coeffs)
    else:
        ring = _DoubleDouble(layout)
        coeffs = np.asarray(cm.coeffs, dtype=float)
    if absolute:
        coeffs = np.abs(coeffs)
    entries = [[tuple(coeffs[r, c]) if any(coeffs[r, c]) else None for c in range(n)]
               for r in range(n)]
    memo = {0: ring.one()}

    def minor(mask: int):
        if mask in memo:
            return memo[mask]
        size = bin(mask).count("1")
        row = n - size
        terms = []
        sign = 1
        for col in range(n):
            bit = 1 << col
            if not mask & bit:
                continue
            form = entries[row][col]
            if form is not None:
                sub = minor(mask & ~bit)
                if not ring.is_zero(sub):
                    terms.append((form if sign > 0 or absolute else tuple(-f for f in form), sub))
            sign = -sign
        memo[mask] = ring.combine(terms, size)
        return memo[mask]

    result = minor((1 << n) - 1)
    values = result if exact else result[0] + result[1]
    cube = np.zeros((n + 1,) * 3, dtype=object if exact else float)
    if exact:
        cube[...] = Fraction(0)
    for m, c in zip(layout.basis[n], values):
        cube[m] = c
    return cube


def expand_resultant(cm: CayleyMatrix) -> TrivariatePoly:
    """Expand the Cayley determinant into a canonical sparse polynomial.

    A coefficient is dropped as cancellation residue when it is at most
    ``CLEANUP_RTOL`` times the same coefficient of the permanent of ``|M|``,
    the scale of the rounding it has accumulated. A cutoff relative to the
    largest coefficient would also delete genuine small terms.

    Raises
    ------
    DegenerateSurfaceError
        If the determinant vanishes identically.
    """
    bound = DEGREE_BOUND[cm.kind]
    if cm.degenerate:
        raise DegenerateSurfaceError("the Dixon polynomial of this net vanishes identically")
    cube = determinant_coefficients(cm)
    largest = float(np.max(np.abs(cube)))
    scale = 1.0
    for row in np.abs(np.asarray(cm.coeffs, dtype=float)):
        scale *= float(row.max())
    if largest == 0.0 or largest <= DEGENERATE_RTOL * scale:
        raise DegenerateSurfaceError("the Cayley determinant vanishes identically")
    noise = CLEANUP_RTOL * determinant_coefficients(cm, absolute=True)
    terms = {}
    for exps in zip(*np.nonzero(np.abs(cube) > noise)):
        if sum(exps) > bound:
            raise AssertionError(f"monomial {exps} exceeds degree bound {bound}")
        terms[tuple(int(e) for e in exps)] = float(cube[exps])
    return TrivariatePoly(terms, bound)


def _nest(p: TrivariatePoly) -> dict:
    nested: dict = {}
    for (i, j, k), c in p.terms.items():
        nested.setdefault(i, {}).setdefault(j, {})[k] = c
    return nested


def _horner(blocks: dict, var, ar):
    """Horner over ``{power: block}``; ``var`` is a thunk so unused variables cost nothing."""
    top = max(blocks)
    acc = blocks[top]
    for power in range(top - 1, -1, -1):
        acc = ar.mul(acc, var()[0])
        if power in blocks:
            acc = ar.add(acc, blocks[power])
    return acc


# Compensated Horner: every product and sum is split into a rounded result and
# its exact rounding error (Dekker / Knuth), and the errors are accumulated in
# a second word that is added back once at the end. Built only from add and
# mul so that the straight-line program can replay it bit for bit.

def _sub(ar, a, b):
    return ar.add(a, ar.mul(b, ar.const(-1.0)))


def _split_with(ar, a):
    c = ar.mul(ar.const(_SPLITTER), a)
    hi = _sub(ar, c, _sub(ar, c, a))
    return hi, _sub(ar, a, hi)


def _two_sum_with(ar, a, b):
    s = ar.add(a, b)
    bb = _sub(ar, s, a)
    return s, ar.add(_sub(ar, a, _sub(ar, s, bb)), _sub(ar, b, bb))


def _two_prod_with(ar, a, b, b_split):
    p = ar.mul(a, b)
    ah, al = _split_with(ar, a)
    bh, bl = b_split
    err = ar.add(ar.add(ar.add(_sub(ar, ar.mul(ah, bh), p), ar.mul(ah, bl)), ar.mul(al, bh)),
                 ar.mul(al, bl))
    return p, err


def _comp_horner(blocks: dict, var, ar):
    """Compensated Horner over ``{power: (hi, lo)}``; ``lo`` is ``None`` when known zero."""
    top = max(blocks)
    hi, lo = blocks[top]
    for power in range(top - 1, -1, -1):
        x, x_split = var()
        hi, err = _two_prod_with(ar, hi, x, x_split)
        lo = err if lo is None else ar.add(ar.mul(lo, x), err)
        if power in blocks:
            c_hi, c_lo = blocks[power]
            hi, err = _two_sum_with(ar, hi, c_hi)
            lo = ar.add(lo, err)
            if c_lo is not None:
                lo = ar.add(lo, c_lo)
    return hi, lo


class _FloatArith:
    """Plain IEEE arithmetic on floats or numpy arrays."""

    @staticmethod
    def const(c):
        return c

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def mul(a, b):
        return a * b


def _variables(ar, values: dict, compensated: bool) -> dict:
    """Lazy ``name -> (value, split)`` thunks; the split is built on first use."""
    cache: dict = {}

    def thunk(name):
        def get():
            if name not in cache:
                v = values[name]()
                cache[name] = (v, _split_with(ar, v) if compensated else None)
            return cache[name]
        return get

    return {name: thunk(name) for name in "xyz"}


def _run_horner(p: TrivariatePoly, ar, var: dict, compensated: bool):
    nested = _nest(p)
    if compensated:
        inner = {i: _comp_horner({j: _comp_horner({k: (ar.const(c), None) for k, c in zs.items()},
                                                  var["z"], ar)
                                  for j, zs in ys.items()}, var["y"], ar)
                 for i, ys in nested.items()}
        hi, lo = _comp_horner(inner, var["x"], ar)
        return hi if lo is None else ar.add(hi, lo)
    inner = {i: _horner({j: _horner({k: ar.const(c) for k, c in zs.items()}, var["z"], ar)
                         for j, zs in ys.items()}, var["y"], ar)
             for i, ys in nested.items()}
    return _horner(inner, var["x"], ar)


def evaluate_poly(p: TrivariatePoly, q, compensated: bool = False):
    """Evaluate ``p`` at ``q = (x, y, z)`` by nested Horner, ``x`` outermost.

    Components of ``q`` may be floats or numpy arrays (evaluated
    elementwise). With ``compensated=True`` the same nesting runs with
    error-free products and sums, giving roughly twice the working precision
    before the final rounding; useful near the surface, where the terms cancel.
    """
    if not p.terms:
        return 0.0
    ar = _FloatArith()
    values = dict(zip("xyz", q))
    var = _variables(ar, {n: (lambda n=n: values[n]) for n in "xyz"}, compensated)
    return _run_horner(p, ar, var, compensated)


@dataclass
class StraightLineProgram:
    """Branch-free program: ``ops`` are ``(dest, opcode, operands)`` triples."""

    constants: list = field(default_factory=list)
    ops: list = field(default_factory=list)
    output: str = ""

    @property
    def n_mul(self) -> int:
        return sum(op == "mul" for _, op, _ in self.ops)

    @property
    def n_add(self) -> int:
        return sum(op == "add" for _, op, _ in self.ops)

    def run(self, q):
        inputs = dict(zip("xyz", q))
        regs = {}

        def value(name):
            return self.constants[int(name[1:])] if name[0] == "c" else regs[name]

        for dest, op, args in self.ops:
            if op == "load":
                regs[dest] = inputs[args[0]]
            elif op == "const":
                regs[dest] = value(args[0])
            elif op == "mul":
                regs[dest] = value(args[0]) * value(args[1])
            elif op == "add":
                regs[dest] = value(args[0]) + value(args[1])
            else:
                raise ValueError(f"unknown opcode {op!r}")
        return regs[self.output]

    def to_text(self) -> str:
        lines = ["slp 1"]
        lines += [f"const c{i} = {c!r}" for i, c in enumerate(self.constants)]
        lines += [f"{dest} = {op} {' '.join(args)}" for dest, op, args in self.ops]
        lines.append(f"out {self.output}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StraightLineProgram":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "slp 1":
            raise ValueError("missing 'slp 1' header")
        prog = cls()
        assigned = set()
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "const" and len(parts) == 4 and parts[2] == "=":
                if parts[1] != f"c{len(prog.constants)}":
                    raise ValueError(f"constants out of order at {ln!r}")
                prog.constants.append(float(parts[3]))
            elif parts[0] == "out" and len(parts) == 2:
                prog.output = parts[1]
            elif len(parts) >= 4 and parts[1] == "=":
                dest, op, args = parts[0], parts[2], tuple(parts[3:])
                for a in args if op in ("add", "mul", "const") else ():
                    if a[0] == "r" and a not in assigned:
                        raise ValueError(f"register {a} used before assignment")
                    if a[0] == "c" and int(a[1:]) >= len(prog.constants):
                        raise ValueError(f"unknown constant {a}")
                if dest in assigned:
                    raise ValueError(f"register {dest} assigned twice")
                assigned.add(dest)
                prog.ops.append((dest, op, args))
            else:
                raise ValueError(f"unparseable line {ln!r}")
        if prog.output not in assigned:
            raise ValueError("output register never assigned")
        return prog


class _Emitter:
    """Arithmetic that records operations; values are ``("c", float)`` or ``("r", name)``.

    Operations on two constants are folded at emit time, which gives the same
    IEEE result the program would compute at run time.
    """

    def __init__(self):
        self.prog = StraightLineProgram()
        self._const_index: dict = {}
        self._loads: dict = {}

    def _reg(self) -> str:
        return f"r{len(self.prog.ops)}"

    def _const_name(self, c: float) -> str:
        key = float(c).hex()
        if key not in self._const_index:
            self._const_index[key] = f"c{len(self.prog.constants)}"
            self.prog.constants.append(float(c))
        return self._const_index[key]

    @staticmethod
    def const(c):
        return ("c", float(c))

    def load(self, var: str):
        if var not in self._loads:
            dest = self._reg()
            self.prog.ops.append((dest, "load", (var,)))
            self._loads[var] = ("r", dest)
        return self._loads[var]

    def _op(self, kind, a, b):
        if a[0] == "c" and b[0] == "c":
            return ("c", a[1] * b[1] if kind == "mul" else a[1] + b[1])
        names = tuple(self._const_name(v) if tag == "c" else v for tag, v in (a, b))
        dest = self._reg()
        self.prog.ops.append((dest, kind, names))
        return ("r", dest)

    def add(self, a, b):
        return self._op("add", a, b)

    def mul(self, a, b):
        # 1.0 * v == v exactly, so skipping it keeps results bit-identical
        if a == ("c", 1.0):
            return b
        if b == ("c", 1.0):
            return a
        return self._op("mul", a, b)


def emit_slp(p: TrivariatePoly, compensated: bool = False) -> StraightLineProgram:
    """Straight-line program replaying :func:`evaluate_poly`'s operation sequence.

    The program is bit-identical to ``evaluate_poly(p, q, compensated)``.
    Products by the constant 1 are omitted and constant subexpressions are
    folded; neither changes any result.
    """
    em = _Emitter()
    if not p.terms:
        result = ("c", 0.0)
    else:
        var = _variables(em, {n: (lambda n=n: em.load(n)) for n in "xyz"}, compensated)
        result = _run_horner(p, em, var, compensated)
    if result[0] == "c":
        dest = em._reg()
        em.prog.ops.append((dest, "const", (em._const_name(result[1]),)))
        em.prog.output = dest
    else:
        em.prog.output = result[1]
    return em.prog


def max_monomials(degree: int) -> int:
    """Number of monomials of total degree at most ``degree`` in three variables."""
    return comb(degree + 3, 3)
