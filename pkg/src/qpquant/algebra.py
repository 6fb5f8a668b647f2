"""Lie algebras with a Casimir, PBW-normalized enveloping algebra elements,
and truncated hbar-series in tensor powers of Ug.

Leg positions in the public API (``insert_legs`` slots, ``leg`` helpers) are
1-based, matching the superscript notation ``x^{13,24,5,6}``.  Internally
leg tuples are 0-based.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Sequence

Monomial = tuple[int, ...]
Rational = Fraction


class MalformedSpecError(ValueError):
    pass


class AlgebraMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class LieAlgebraSpec:
    """Structure constants ``[e_i, e_j] = sum_k c[i, j, k] e_k`` plus a
    symmetric tensor ``t = sum t[a][b] e_a (x) e_b``.

    Stored exactly as given; use :func:`make_lie_algebra` to fill in
    antisymmetric partners and defaults.
    """

    basis_names: tuple[str, ...]
    structure_constants: Mapping[tuple[int, int, int], Fraction]
    casimir: tuple[tuple[Fraction, ...], ...]
    name: str = field(default="g", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_pbw_cache", {})
        object.__setattr__(self, "_table", None)

    def __hash__(self):
        return hash((self.basis_names, tuple(sorted(self.structure_constants.items())), self.casimir))

    @property
    def dim(self) -> int:
        return len(self.basis_names)

    def bracket(self, i: int, j: int) -> dict[int, Fraction]:
        if self._table is None:
            table: dict[tuple[int, int], dict[int, Fraction]] = {}
            for (a, b, k), c in self.structure_constants.items():
                if c:
                    table.setdefault((a, b), {})[k] = Fraction(c)
            object.__setattr__(self, "_table", table)
        return self._table.get((i, j), {})

    def index(self, name: str) -> int:
        try:
            return self.basis_names.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a basis element of {self.name}") from None

    def casimir_terms(self) -> list[tuple[int, int, Fraction]]:
        return [(a, b, c) for a, row in enumerate(self.casimir) for b, c in enumerate(row) if c]


def make_lie_algebra(name: str, basis: Sequence[str],
                     brackets: Mapping[tuple[int, int], Mapping[int, object]],
                     casimir: Mapping[tuple[int, int], object] | Sequence[Sequence[object]] | None = None,
                     ) -> LieAlgebraSpec:
    """Build a spec from the brackets with i < j (partners filled by antisymmetry).

    ``casimir`` is either a full matrix or a sparse map; a sparse map is
    symmetrized, so giving (a, b) also sets (b, a).
    """
    n = len(basis)
    sc: dict[tuple[int, int, int], Fraction] = {}
    for (i, j), out in brackets.items():
        for k, c in out.items():
            c = Fraction(c)
            if c:
                sc[(i, j, k)] = c
                if (j, i, k) not in sc and not any((j, i) == key for key in brackets):
                    sc[(j, i, k)] = -c
    t = [[Fraction(0)] * n for _ in range(n)]
    if casimir is None:
        pass
    elif isinstance(casimir, Mapping):
        for (a, b), c in casimir.items():
            t[a][b] = Fraction(c)
            t[b][a] = Fraction(c)
    else:
        t = [[Fraction(c) for c in row] for row in casimir]
    return LieAlgebraSpec(tuple(basis), sc, tuple(tuple(r) for r in t), name=name)


@dataclass(frozen=True)
class Violation:
    identity: str
    witness: tuple
    value: Fraction

    def __str__(self):
        return f"{self.identity} fails at {self.witness}: {self.value}"


def lie_validate(spec: LieAlgebraSpec) -> list[Violation]:
    """All failures of antisymmetry, Jacobi, symmetry and invariance of t.

    Witnesses are reported with basis names.
    """
    n = spec.dim
    if n < 1:
        raise MalformedSpecError("dimension must be positive")
    for (i, j, k) in spec.structure_constants:
        if not all(0 <= x < n for x in (i, j, k)):
            raise MalformedSpecError(f"structure constant index {(i, j, k)} out of range")
    if len(spec.casimir) != n or any(len(r) != n for r in spec.casimir):
        raise MalformedSpecError("casimir must be a dim x dim matrix")
    name = spec.basis_names
    c = lambda i, j, k: spec.bracket(i, j).get(k, Fraction(0))  # noqa: E731
    t = spec.casimir
    out: list[Violation] = []
    for i, j, k in itertools.product(range(n), repeat=3):
        v = c(i, j, k) + c(j, i, k)
        if v:
            out.append(Violation("antisymmetry", (name[i], name[j], name[k]), v))
    for i, j, k, l in itertools.product(range(n), repeat=4):
        v = sum((c(i, j, m) * c(m, k, l) + c(j, k, m) * c(m, i, l) + c(k, i, m) * c(m, j, l)
                 for m in range(n)), Fraction(0))
        if v:
            out.append(Violation("jacobi", (name[i], name[j], name[k], name[l]), v))
    for a, b in itertools.product(range(n), repeat=2):
        if t[a][b] != t[b][a]:
            out.append(Violation("casimir_symmetry", (name[a], name[b]), t[a][b] - t[b][a]))
    for x, a, b in itertools.product(range(n), repeat=3):
        v = sum((c(x, m, a) * t[m][b] + c(x, m, b) * t[a][m] for m in range(n)), Fraction(0))
        if v:
            out.append(Violation("casimir_invariance", (name[x], name[a], name[b]), v))
    return out


def bar(spec: LieAlgebraSpec) -> LieAlgebraSpec:
    """Same Lie algebra with t replaced by -t."""
    nm = spec.name[:-4] if spec.name.endswith("-bar") else spec.name + "-bar"
    t = tuple(tuple(-c for c in row) for row in spec.casimir)
    return LieAlgebraSpec(spec.basis_names, dict(spec.structure_constants), t, name=nm)


def direct_sum(g: LieAlgebraSpec, h: LieAlgebraSpec) -> LieAlgebraSpec:
    n, m = g.dim, h.dim
    names = tuple(f"{g.name}.{b}" for b in g.basis_names) + tuple(f"{h.name}.{b}" for b in h.basis_names)
    sc = dict(g.structure_constants)
    for (i, j, k), c in h.structure_constants.items():
        sc[(i + n, j + n, k + n)] = c
    t = [[Fraction(0)] * (n + m) for _ in range(n + m)]
    for a in range(n):
        for b in range(n):
            t[a][b] = g.casimir[a][b]
    for a in range(m):
        for b in range(m):
            t[a + n][b + n] = h.casimir[a][b]
    return LieAlgebraSpec(names, sc, tuple(map(tuple, t)), name=f"{g.name}+{h.name}")


# ---------------------------------------------------------------------------
# PBW straightening

def _first_descent(word: Monomial) -> int | None:
    for i in range(len(word) - 1):
        if word[i] > word[i + 1]:
            return i
    return None


def _straighten(spec: LieAlgebraSpec, word: Monomial, pick=None) -> dict[Monomial, Fraction]:
    """Normal form of a word; ``pick`` chooses which descent to rewrite
    (None = leftmost, memoized)."""
    memo = spec._pbw_cache if pick is None else {}
    return _straighten_rec(spec, word, pick, memo)


def _straighten_rec(spec, word, pick, memo):
    if word in memo:
        return memo[word]
    descents = [i for i in range(len(word) - 1) if word[i] > word[i + 1]]
    if not descents:
        res = {word: Fraction(1)}
    else:
        i = descents[0] if pick is None else pick(descents)
        j, k = word[i], word[i + 1]
        res = dict(_straighten_rec(spec, word[:i] + (k, j) + word[i + 2:], pick, memo))
        # e_j e_k = e_k e_j + [e_j, e_k]
        for l, c in spec.bracket(j, k).items():
            for mono, d in _straighten_rec(spec, word[:i] + (l,) + word[i + 2:], pick, memo).items():
                v = res.get(mono, 0) + c * d
                if v:
                    res[mono] = v
                else:
                    res.pop(mono, None)
    memo[word] = res
    return res


class EnvElement:
    """Element of Ug as a sparse map from weakly increasing index tuples to
    rationals."""

    __slots__ = ("spec", "terms")

    def __init__(self, spec: LieAlgebraSpec, terms: Mapping[Monomial, object] | None = None):
        self.spec = spec
        clean = {}
        for mono, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                if _first_descent(mono) is not None:
                    raise ValueError(f"monomial {mono} is not in PBW order")
                clean[tuple(mono)] = c
        self.terms = clean

    @classmethod
    def one(cls, spec):
        return cls(spec, {(): 1})

    @classmethod
    def gen(cls, spec, i):
        return cls(spec, {(i,): 1})

    def _check(self, other):
        if other.spec != self.spec:
            raise AlgebraMismatchError("elements of different enveloping algebras")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return EnvElement(self.spec, out)

    def __neg__(self):
        return EnvElement(self.spec, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, EnvElement):
            return env_mul(self, other)
        return EnvElement(self.spec, {m: c * Fraction(other) for m, c in self.terms.items()})

    def __rmul__(self, scalar):
        return EnvElement(self.spec, {m: c * Fraction(scalar) for m, c in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, EnvElement) and self.spec == other.spec and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"EnvElement({render_env(self)})"


def pbw_normalize(word: Iterable[int], coefficient=1, spec: LieAlgebraSpec | None = None,
                  pick=None) -> EnvElement:
    """Rewrite ``coefficient * e_{w1} ... e_{wr}`` into PBW normal form.

    ``pick`` may be a callable choosing one descent position from a list,
    or a ``random.Random`` instance; any choice gives the same result.
    """
    if spec is None:
        raise TypeError("spec is required")
    word = tuple(word)
    for w in word:
        if not 0 <= w < spec.dim:
            raise MalformedSpecError(f"basis index {w} out of range")
    if isinstance(pick, random.Random):
        rng = pick
        pick = lambda ds: rng.choice(ds)  # noqa: E731
    nf = _straighten(spec, word, pick)
    c = Fraction(coefficient)
    return EnvElement(spec, {m: c * d for m, d in nf.items()})


def mono_mul(spec: LieAlgebraSpec, a: Monomial, b: Monomial) -> dict[Monomial, Fraction]:
    if not a:
        return {b: Fraction(1)}
    if not b or a[-1] <= b[0]:
        return {a + b: Fraction(1)}
    return _straighten(spec, a + b)


def env_mul(a: EnvElement, b: EnvElement) -> EnvElement:
    a._check(b)
    out: dict[Monomial, Fraction] = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            for m, d in mono_mul(a.spec, m1, m2).items():
                out[m] = out.get(m, 0) + c1 * c2 * d
    return EnvElement(a.spec, out)


def render_coeff(c: Fraction) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def render_mono(spec: LieAlgebraSpec, mono: Monomial) -> str:
    if not mono:
        return "1"
    parts = []
    for k, grp in itertools.groupby(mono):
        e = len(list(grp))
        parts.append(spec.basis_names[k] + (f"^{e}" if e > 1 else ""))
    return "*".join(parts)


def render_env(x: EnvElement) -> str:
    if not x.terms:
        return "0"
    return " + ".join(f"{render_coeff(c)} {render_mono(x.spec, m)}" for m, c in sorted(x.terms.items()))


# ---------------------------------------------------------------------------
# Truncated series in (Ug)^{(x)k}[[hbar]]

Key = tuple[int, tuple[Monomial, ...]]


class TensorSeries:
    """Sparse element of (Ug)^{(x)legs}[[hbar]] / hbar^{order+1}.

    ``terms`` maps ``(hbar_power, (mono_1, ..., mono_legs))`` to a rational.
    """

    __slots__ = ("spec", "legs", "order", "terms")

    def __init__(self, spec: LieAlgebraSpec, legs: int, order: int,
                 terms: Mapping[Key, object] | None = None):
        if legs < 1 or order < 0:
            raise ValueError("legs must be >= 1 and order >= 0")
        self.spec, self.legs, self.order = spec, legs, order
        clean: dict[Key, Fraction] = {}
        for (p, monos), c in (terms or {}).items():
            if p > order:
                continue
            if len(monos) != legs:
                raise ValueError(f"term {monos} does not have {legs} legs")
            c = Fraction(c)
            if c:
                clean[(p, tuple(monos))] = clean.get((p, tuple(monos)), 0) + c
        self.terms = {k: v for k, v in clean.items() if v}

    # construction helpers
    @classmethod
    def one(cls, spec, legs, order):
        return cls(spec, legs, order, {(0, ((),) * legs): 1})

    @classmethod
    def zero(cls, spec, legs, order):
        return cls(spec, legs, order)

    @classmethod
    def from_legs(cls, spec, order, legs_elems: Sequence[EnvElement], power: int = 0, coeff=1):
        """hbar^power * coeff * (x_1 (x) ... (x) x_k)."""
        terms = {}
        for combo in itertools.product(*(e.terms.items() for e in legs_elems)):
            c = Fraction(coeff)
            for _, ci in combo:
                c *= ci
            terms[(power, tuple(m for m, _ in combo))] = c
        return cls(spec, len(legs_elems), order, terms)

    def _check(self, other):
        if other.spec != self.spec:
            raise AlgebraMismatchError("series over different Lie algebras")
        if other.legs != self.legs or other.order != self.order:
            raise AlgebraMismatchError(
                f"mismatched shapes: {self.legs} legs/order {self.order} vs {other.legs}/{other.order}")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return TensorSeries(self.spec, self.legs, self.order, out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c, hbar_shift: int = 0) -> "TensorSeries":
        c = Fraction(c)
        return TensorSeries(self.spec, self.legs, self.order,
                            {(p + hbar_shift, m): v * c for (p, m), v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TensorSeries):
            return tensor_mul(self, other)
        return self.scale(other)

    __rmul__ = scale

    def __eq__(self, other):
        return (isinstance(other, TensorSeries) and self.spec == other.spec and self.legs == other.legs
                and self.order == other.order and self.terms == other.terms)

    def __hash__(self):
        return hash((self.legs, self.order, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, p: int) -> "TensorSeries":
        """The hbar^p part, as an hbar-free series of the same shape."""
        return TensorSeries(self.spec, self.legs, self.order,
                            {(0, m): c for (q, m), c in self.terms.items() if q == p})

    def truncate(self, order: int) -> "TensorSeries":
        return TensorSeries(self.spec, self.legs, order, self.terms)

    def render(self) -> str:
        return render_series(self)

    def __repr__(self):
        return f"TensorSeries(legs={self.legs}, order={self.order}, {len(self.terms)} terms)"


def tensor_mul(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    a._check(b)
    spec, N = a.spec, a.order
    out: dict[Key, Fraction] = {}
    for (p, ma), ca in a.terms.items():
        for (q, mb), cb in b.terms.items():
            if p + q > N:
                continue
            legs = [mono_mul(spec, x, y) for x, y in zip(ma, mb)]
            c0 = ca * cb
            for combo in itertools.product(*(leg.items() for leg in legs)):
                c = c0
                for _, d in combo:
                    c *= d
                key = (p + q, tuple(m for m, _ in combo))
                out[key] = out.get(key, 0) + c
    return TensorSeries(spec, a.legs, N, out)


def series_power(x: TensorSeries, k: int) -> TensorSeries:
    out = TensorSeries.one(x.spec, x.legs, x.order)
    for _ in range(k):
        out = out * x
    return out


def series_exp(x: TensorSeries) -> TensorSeries:
    """exp(x) for x with zero hbar^0 part, truncated at x.order."""
    if any(p == 0 for p, _ in x.terms):
        raise ValueError("exp needs an element divisible by hbar")
    out = TensorSeries.one(x.spec, x.legs, x.order)
    term = TensorSeries.one(x.spec, x.legs, x.order)
    for k in range(1, x.order + 1):
        term = term * x
        out = out + term.scale(Fraction(1, factorial(k)))
    return out


def series_inverse(x: TensorSeries) -> TensorSeries:
    """Inverse of 1 + y with y divisible by hbar, truncated: sum (-y)^k."""
    one = TensorSeries.one(x.spec, x.legs, x.order)
    y = x - one
    if any(p == 0 for p, _ in y.terms):
        raise ValueError("only series with constant term 1 are inverted")
    out, term = one, one
    for _ in range(x.order):
        term = term * (-y)
        out = out + term
    return out


def _coproduct_parts(mono: Monomial, r: int) -> dict[tuple[Monomial, ...], int]:
    """Iterated coproduct of a PBW monomial into r tensor factors.

    Every basis element is primitive, so the letters are distributed over
    the factors in all r^len ways; order inside a factor is preserved, hence
    each part stays weakly increasing.
    """
    if r == 1:
        return {(mono,): 1}
    out: dict[tuple[Monomial, ...], int] = {}
    for assign in itertools.product(range(r), repeat=len(mono)):
        parts = tuple(tuple(x for x, a in zip(mono, assign) if a == s) for s in range(r))
        out[parts] = out.get(parts, 0) + 1
    return out


def insert_legs(x: TensorSeries, slots: Sequence[Iterable[int]], m: int) -> TensorSeries:
    """Superscript calculus: ``insert_legs(J, [(1,3), (2,4), (5,), (6,)], 6)`` is J^{13,24,5,6}.

    Positions are 1-based.  A slot with several positions applies the
    iterated coproduct to that leg.
    """
    slots = [tuple(s) for s in slots]
    if len(slots) != x.legs:
        raise ValueError(f"need {x.legs} slots, got {len(slots)}")
    seen: set[int] = set()
    for s in slots:
        if not s:
            raise ValueError("empty slot")
        for pos in s:
            if not 1 <= pos <= m:
                raise ValueError(f"position {pos} out of range 1..{m}")
            if pos in seen:
                raise ValueError(f"position {pos} used by two slots")
            seen.add(pos)
    out: dict[Key, Fraction] = {}
    for (p, monos), c in x.terms.items():
        per_leg = [_coproduct_parts(mono, len(s)).items() for mono, s in zip(monos, slots)]
        for combo in itertools.product(*per_leg):
            target: list[Monomial] = [()] * m
            coef = c
            for (parts, mult), s in zip(combo, slots):
                coef *= mult
                for part, pos in zip(parts, s):
                    target[pos - 1] = part
            key = (p, tuple(target))
            out[key] = out.get(key, 0) + coef
    return TensorSeries(x.spec, m, x.order, out)


def leg(x: TensorSeries, *positions, m: int) -> TensorSeries:
    """Shorthand: ``leg(t, 2, 3, m=4)`` is t^{2,3}; ``leg(phi, (1,2), (3,4), (5,6), m=6)``
    is phi^{12,34,56}."""
    return insert_legs(x, [p if isinstance(p, tuple) else (p,) for p in positions], m)


def permute_legs(x: TensorSeries, perm: Sequence[int]) -> TensorSeries:
    """Move leg i to position perm[i] (0-based)."""
    out = {}
    for (p, monos), c in x.terms.items():
        new = [()] * x.legs
        for i, mono in enumerate(monos):
            new[perm[i]] = mono
        out[(p, tuple(new))] = c
    return TensorSeries(x.spec, x.legs, x.order, out)


def casimir_series(spec: LieAlgebraSpec, order: int) -> TensorSeries:
    """t as an hbar-free element on two legs."""
    return TensorSeries(spec, 2, order, {(0, ((a,), (b,))): c for a, b, c in spec.casimir_terms()})


def render_series(x: TensorSeries) -> str:
    """One line per term, sorted by (hbar power, leg monomials)."""
    if not x.terms:
        return "0"
    lines = []
    for (p, monos), c in sorted(x.terms.items()):
        body = " (x) ".join(render_mono(x.spec, m) for m in monos)
        lines.append(f"h^{p} {render_coeff(c)} [{body}]")
    return "\n".join(lines)


@dataclass(frozen=True)
class UniversalMorphism:
    """``v -> perm(element . v)``; perm[i] is the output position of input leg i."""

    permutation: tuple[int, ...]
    element: TensorSeries

    def then(self, after: "UniversalMorphism") -> "UniversalMorphism":
        """``after o self``.

        after.x . perm_s(w) = perm_s(pullback(after.x) . w), where the
        pullback puts after.x's leg perm_s[i] onto leg i.
        """
        if after.element.legs != self.element.legs:
            raise AlgebraMismatchError("morphisms on different numbers of legs")
        inv = [0] * len(self.permutation)
        for i, j in enumerate(self.permutation):
            inv[j] = i
        pulled = permute_legs(after.element, inv)
        perm = tuple(after.permutation[self.permutation[i]] for i in range(len(self.permutation)))
        return UniversalMorphism(perm, pulled * self.element)

    @classmethod
    def element_action(cls, x: TensorSeries):
        return cls(tuple(range(x.legs)), x)


# ---------------------------------------------------------------------------
# bundled Lie algebras

def abelian(n: int, casimir=None, name: str | None = None) -> LieAlgebraSpec:
    if casimir is None:
        casimir = [[int(i == j) for j in range(n)] for i in range(n)]
    return make_lie_algebra(name or f"ab{n}", [f"e{i + 1}" for i in range(n)], {}, casimir)


def gl(n: int) -> LieAlgebraSpec:
    """gl_n in matrix units E_ij (row-major order) with t = sum E_ij (x) E_ji."""
    units = [(i, j) for i in range(n) for j in range(n)]
    idx = {u: k for k, u in enumerate(units)}
    br: dict[tuple[int, int], dict[int, int]] = {}
    for (i, j), (k, l) in itertools.product(units, repeat=2):
        out: dict[int, int] = {}
        if j == k:
            out[idx[(i, l)]] = out.get(idx[(i, l)], 0) + 1
        if l == i:
            out[idx[(k, j)]] = out.get(idx[(k, j)], 0) - 1
        out = {a: b for a, b in out.items() if b}
        if out:
            br[(idx[(i, j)], idx[(k, l)])] = out
    t = [[0] * (n * n) for _ in range(n * n)]
    for (i, j) in units:
        t[idx[(i, j)]][idx[(j, i)]] = 1
    return make_lie_algebra(f"gl{n}", [f"E{i + 1}{j + 1}" for i, j in units], br, t)


def aff1(casimir=None) -> LieAlgebraSpec:
    """aff(1): [e1, e2] = e2."""
    return make_lie_algebra("aff1", ["e1", "e2"], {(0, 1): {1: 1}}, casimir or [[0, 0], [0, 0]])


def cotangent_double() -> LieAlgebraSpec:
    """d = aff(1) semidirect aff(1)^* with the pairing-induced t.

    Basis a, b (aff(1), [a, b] = b) and alpha, beta (dual, coadjoint action):
    [a, beta] = -beta, [b, beta] = alpha.
    """
    br = {(0, 1): {1: 1}, (0, 3): {3: -1}, (1, 3): {2: 1}}
    t = {(0, 2): 1, (1, 3): 1}
    return make_lie_algebra("cotangent_aff1", ["a", "b", "alpha", "beta"], br, t)
