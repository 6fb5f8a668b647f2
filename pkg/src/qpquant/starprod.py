"""Star products m_hbar = sum hbar^p m_(p), stored as bidifferential operators.

A term ``(c, ops1, ops2)`` of m_(p) means ``c * ops1(f) * ops2(g)`` where
``ops = (d1, ..., dk)`` applies d1 o ... o dk (dk first).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import LieAlgebraSpec, TensorSeries, bar, render_coeff
from .associator import TruncatedAssociator, associator_truncate, fusion_element_J
from .funalg import QuasiPoissonAlgebra, bar_view, disk_block, fuse, reduce, tensor_product
from .moduli import BarView, Fuse, FusionProgram, ProgramError, Reduce, validate_program
from .poly import Derivation, PolyFun, poly_sum

Ops = tuple[Derivation, ...]
Series = list[PolyFun]  # index = hbar power


class OrderMismatchError(ValueError):
    pass


def _key(ops: Ops) -> tuple[int, ...]:
    return tuple(id(d) for d in ops)


@dataclass
class StarProduct:
    base: QuasiPoissonAlgebra
    order: int
    terms: dict[int, dict[tuple, list]] = field(default_factory=dict)
    history: tuple[str, ...] = ()

    def __post_init__(self):
        self._memo: dict = {}

    @classmethod
    def undeformed(cls, base: QuasiPoissonAlgebra, order: int) -> "StarProduct":
        return cls(base, order, {0: {((), ()): [Fraction(1), (), ()]}}, base.history)

    def add_term(self, p: int, c, ops1: Ops, ops2: Ops):
        if p > self.order or not c:
            return
        bucket = self.terms.setdefault(p, {})
        k = (_key(ops1), _key(ops2))
        if k in bucket:
            bucket[k][0] += c
            if not bucket[k][0]:
                del bucket[k]
        else:
            bucket[k] = [Fraction(c), ops1, ops2]

    def term_list(self, p: int) -> list[tuple[Fraction, Ops, Ops]]:
        return [tuple(v) for v in self.terms.get(p, {}).values()]

    # evaluation
    def _apply(self, ops: Ops, f: PolyFun) -> PolyFun:
        if not ops or f.is_zero():
            return f
        key = (_key(ops), f)
        hit = self._memo.get(key)
        if hit is None:
            hit = ops[0](self._apply(ops[1:], f))
            self._memo[key] = hit
        return hit

    def component(self, p: int, f: PolyFun, g: PolyFun) -> PolyFun:
        """m_(p)(f, g)."""
        parts = []
        for c, o1, o2 in self.term_list(p):
            a = self._apply(o1, f)
            if a.is_zero():
                continue
            b = self._apply(o2, g)
            if not b.is_zero():
                parts.append(a * b * c)
        return poly_sum(parts)

    def __call__(self, f, g) -> Series:
        """f * g as an hbar-series; f and g may be PolyFun or series."""
        fs = f if isinstance(f, list) else [f]
        gs = g if isinstance(g, list) else [g]
        out = [PolyFun() for _ in range(self.order + 1)]
        for i, fi in enumerate(fs):
            for j, gj in enumerate(gs):
                for p in range(self.order + 1 - i - j):
                    out[i + j + p] = out[i + j + p] + self.component(p, fi, gj)
        return out

    def render(self) -> str:
        lines = []
        for p in sorted(self.terms):
            rows = []
            for c, o1, o2 in self.term_list(p):
                rows.append((_render_ops(o1), _render_ops(o2), c))
            for r1, r2, c in sorted(rows):
                lines.append(f"h^{p} {render_coeff(c)} [{r1}] [{r2}]")
        return "\n".join(lines)


def _render_ops(ops: Ops) -> str:
    return "*".join(d.label for d in ops) or "1"


_J_CACHE: dict = {}


def _J_for(spec: LieAlgebraSpec, order: int, associator=None) -> TensorSeries:
    if associator is not None:
        return fusion_element_J(spec, order, associator)
    key = (spec, order)
    if key not in _J_CACHE:
        _J_CACHE[key] = fusion_element_J(spec, order)
    return _J_CACHE[key]


def quantize_fusion(S: StarProduct, P: str, Q: str, J: TensorSeries | None = None,
                    merged: str | None = None) -> StarProduct:
    """m' = m o (J .) with J's legs (P on f, Q on f, P on g, Q on g)."""
    A = S.base
    merged = merged or f"{P}{Q}"
    new_base = fuse(A, P, Q, merged)  # validates the points
    if J is None:
        J = _J_for(A.lie_algebra_at(P), S.order)
    if J.order != S.order:
        raise OrderMismatchError(f"J has order {J.order}, star product has order {S.order}")
    dP, dQ = A.points[P].derivs, A.points[Q].derivs
    out = StarProduct(new_base, S.order, {}, S.history + (f"quantum fuse {P} {Q} -> {merged}",))
    for (pj, (u1, u2, u3, u4)), cj in J.terms.items():
        left = tuple(dP[i] for i in u1) + tuple(dQ[i] for i in u2)
        right = tuple(dP[i] for i in u3) + tuple(dQ[i] for i in u4)
        for pm in range(S.order + 1 - pj):
            for c, o1, o2 in S.term_list(pm):
                out.add_term(pj + pm, c * cj, o1 + left, o2 + right)
    return out


def quantize_reduce(S: StarProduct, points, c, degree_bound: int = 2) -> StarProduct:
    return StarProduct(reduce(S.base, points, c, degree_bound), S.order, S.terms,
                       S.history + (f"reduce {points}",))


def quantize_program(p: FusionProgram, order: int = 2) -> StarProduct:
    """Undeformed disks, then quantum fusion / reduction step by step."""
    problems = validate_program(p)
    if problems:
        raise ProgramError(f"program {p.name!r} is invalid: {problems[0]}")
    if order > 2:
        # J needs associator coefficients beyond hbar^2
        associator_truncate(p.spec, order)
    signs = p.initial_signs()
    A = None
    for lab, s, t in p.skeleton.edges:
        block = disk_block(p.model, lab, s, t, signs[s], signs[t])
        A = block if A is None else tensor_product(A, block)
    S = StarProduct.undeformed(A, order)
    for step in p.steps:
        if isinstance(step, Fuse):
            S = quantize_fusion(S, step.p, step.q, merged=step.merged)
        elif isinstance(step, Reduce):
            S = quantize_reduce(S, step.points, step.subalgebra, step.degree_bound)
        elif isinstance(step, BarView):
            S = StarProduct(bar_view(S.base, step.point), S.order, S.terms, S.history + (f"bar {step.point}",))
    return S


def _phi_series_action(S: StarProduct, assoc_by_sign: dict[int, TruncatedAssociator],
                       f: PolyFun, g: PolyFun, h: PolyFun) -> list[tuple[int, Fraction, PolyFun, PolyFun, PolyFun]]:
    """Phi_A (f (x) g (x) h) as a list of (hbar power, coeff, a, b, c).

    Phi of the direct sum of the surviving points' Lie algebras is the
    product of the commuting per-point associators."""
    state = [(0, Fraction(1), f, g, h)]
    N = S.order
    for pa in S.base.points.values():
        Phi = assoc_by_sign[pa.sign].series
        d = pa.derivs
        new = []
        for p0, c0, a, b, cc in state:
            for (p, (u1, u2, u3)), c in Phi.terms.items():
                if p0 + p > N:
                    continue
                x = S._apply(tuple(d[i] for i in u1), a)
                if x.is_zero():
                    continue
                y = S._apply(tuple(d[i] for i in u2), b)
                if y.is_zero():
                    continue
                z = S._apply(tuple(d[i] for i in u3), cc)
                if not z.is_zero():
                    new.append((p0 + p, c0 * c, x, y, z))
        state = new
    return state


def associativity_defect(S: StarProduct, f: PolyFun, g: PolyFun, h: PolyFun,
                         associator: TruncatedAssociator | None = None) -> Series:
    """m(m(f, g), h) - m(1 (x) m)(Phi_A (f (x) g (x) h)) order by order."""
    spec = S.base.spec
    if associator is not None and associator.order != S.order:
        raise OrderMismatchError("associator and star product have different orders")
    assoc = {1: associator or associator_truncate(spec, S.order)}
    assoc[-1] = assoc[1] if associator is not None else associator_truncate(bar(spec), S.order)
    lhs = S(S(f, g), h)
    rhs = [PolyFun() for _ in range(S.order + 1)]
    for p, c, a, b, cc in _phi_series_action(S, assoc, f, g, h):
        inner = S(b, cc)
        outer = S(a, inner)
        for q in range(S.order + 1 - p):
            rhs[p + q] = rhs[p + q] + outer[q] * c
    return [x - y for x, y in zip(lhs, rhs)]


class SemiclassicalBracket:
    """{f, g} = m_(1)(f, g) - m_(1)(g, f)."""

    def __init__(self, S: StarProduct):
        self.star = S

    def __call__(self, f: PolyFun, g: PolyFun) -> PolyFun:
        if self.star.order < 1:
            return PolyFun()
        return self.star.component(1, f, g) - self.star.component(1, g, f)


def semiclassical_limit(S: StarProduct) -> SemiclassicalBracket:
    return SemiclassicalBracket(S)


def is_undeformed_order0(S: StarProduct) -> bool:
    """m_(0) is the plain product: a single term (1, (), ())."""
    return S.term_list(0) == [(Fraction(1), (), ())]


def bidifferential_audit(S: StarProduct) -> bool:
    """Every stored term is (rational, tuple of derivations, tuple of derivations)."""
    for p, bucket in S.terms.items():
        if not 0 <= p <= S.order:
            return False
        for c, o1, o2 in bucket.values():
            if not isinstance(c, Fraction):
                return False
            if not all(isinstance(d, Derivation) for d in o1 + o2):
                return False
    return True
