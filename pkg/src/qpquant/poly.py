"""Commutative polynomials in matrix-entry generators and derivations of them."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping

from .algebra import render_coeff

Var = tuple[str, int, int]  # (edge label, row, column), rows/columns 1-based
PolyMonomial = tuple[tuple[Var, int], ...]


def var_name(v: Var) -> str:
    return f"x_{v[0]}_{v[1]}{v[2]}"


_VAR_RE = re.compile(r"^x_(.+)_(\d)(\d)$")


def parse_var(name: str) -> Var:
    m = _VAR_RE.match(name)
    if not m:
        raise ValueError(f"not a matrix-entry generator: {name!r}")
    return (m.group(1), int(m.group(2)), int(m.group(3)))


def _mono_mul(a: PolyMonomial, b: PolyMonomial) -> PolyMonomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


class PolyFun:
    """Immutable sparse polynomial with rational coefficients."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[PolyMonomial, object] | None = None):
        self.terms: dict[PolyMonomial, Fraction] = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                self.terms[m] = c
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict[PolyMonomial, Fraction]) -> "PolyFun":
        p = cls.__new__(cls)
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, c) -> "PolyFun":
        return cls({(): c})

    @classmethod
    def var(cls, v: Var) -> "PolyFun":
        return cls({((v, 1),): 1})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=-1)

    def variables(self) -> set[Var]:
        return {v for m in self.terms for v, _ in m}

    def __add__(self, other):
        if not isinstance(other, PolyFun):
            other = PolyFun.const(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return PolyFun._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return PolyFun._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, PolyFun):
            other = PolyFun.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PolyFun):
            c = Fraction(other)
            if not c:
                return PolyFun()
            return PolyFun._raw({m: v * c for m, v in self.terms.items()})
        out: dict[PolyMonomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return PolyFun._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = PolyFun.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, PolyFun):
            other = PolyFun.const(other)
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            body = "*".join(var_name(v) + (f"^{e}" if e > 1 else "") for v, e in m) or "1"
            parts.append(f"{render_coeff(c)} {body}")
        return " + ".join(parts)

    def __repr__(self):
        return f"PolyFun({self.render()})"


def poly_sum(items: Iterable[PolyFun]) -> PolyFun:
    out: dict[PolyMonomial, Fraction] = {}
    for p in items:
        for m, c in p.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return PolyFun._raw(out)


class Derivation:
    """Derivation determined by its values on generators (Leibniz extension).

    ``label`` names it in renderings, e.g. ``"P.E12"``.
    """

    __slots__ = ("images", "label", "_cache")

    def __init__(self, images: Mapping[Var, PolyFun], label: str = "D"):
        self.images = {v: p for v, p in images.items() if not p.is_zero()}
        self.label = label
        self._cache: dict[PolyMonomial, PolyFun] = {}

    def is_zero(self) -> bool:
        return not self.images

    def _on_monomial(self, m: PolyMonomial) -> PolyFun:
        hit = self._cache.get(m)
        if hit is not None:
            return hit
        acc = []
        for idx, (v, e) in enumerate(m):
            img = self.images.get(v)
            if img is None:
                continue
            rest = list(m)
            if e == 1:
                del rest[idx]
            else:
                rest[idx] = (v, e - 1)
            acc.append(img * PolyFun._raw({tuple(rest): Fraction(e)}))
        out = poly_sum(acc)
        self._cache[m] = out
        return out

    def __call__(self, f: PolyFun) -> PolyFun:
        if not self.images:
            return PolyFun()
        return poly_sum(self._on_monomial(m) * c for m, c in f.terms.items())

    def __add__(self, other: "Derivation") -> "Derivation":
        out = dict(self.images)
        for v, p in other.images.items():
            out[v] = out[v] + p if v in out else p
        return Derivation(out, f"({self.label}+{other.label})")

    def scale(self, c, label: str | None = None) -> "Derivation":
        return Derivation({v: p * c for v, p in self.images.items()}, label or f"{c}*{self.label}")

    def __eq__(self, other):
        return isinstance(other, Derivation) and self.images == other.images

    def __hash__(self):
        return hash(frozenset(self.images.items()))

    def __repr__(self):
        return f"Derivation({self.label})"


def commutator(a: Derivation, b: Derivation) -> Derivation:
    vs = set(a.images) | set(b.images)
    return Derivation({v: a(b.images.get(v, PolyFun())) - b(a.images.get(v, PolyFun())) for v in vs},
                      f"[{a.label},{b.label}]")


def linear_combination(derivs: list[Derivation], coeffs, label: str = "D") -> Derivation:
    out: dict[Var, PolyFun] = {}
    for d, c in zip(derivs, coeffs):
        c = Fraction(c)
        if not c:
            continue
        for v, p in d.images.items():
            q = p * c
            out[v] = out[v] + q if v in out else q
    return Derivation(out, label)


def apply_word(derivs: list[Derivation], word, f: PolyFun) -> PolyFun:
    """Apply d_{w1} o ... o d_{wr} to f (rightmost letter first)."""
    for k in reversed(word):
        if f.is_zero():
            break
        f = derivs[k](f)
    return f
