"""Quasi-Poisson algebras of polynomial functions on products of matrix groups.

Functions live on G^E, one matrix of generators per edge.  A model may pin
some matrix entries to constants (an affine pattern); this is how groups
whose Zariski closure is an affine subspace, such as the 3x3 block group of
the cotangent double, are handled without Groebner reduction.

Sign conventions (kept everywhere):
  * for an edge P -> Q, xi at Q acts by the left-invariant field xi^L
    (x -> x rho(xi)) and xi at P acts by -xi^R (x -> -rho(xi) x);
  * fusing P and Q adds (1/2) sum t^{ab} (Q(e_a) f P(e_b) g - Q(e_a) g P(e_b) f)
    to the bracket, matching the hbar-linear term t^{2,3}/2 of J with legs
    (P on f, Q on f, P on g, Q on g).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .algebra import LieAlgebraSpec, Violation, bar, direct_sum
from .associator import phi_element
from .linalg import Echelon, matmul, nullspace, rank
from .poly import Derivation, PolyFun, Var, apply_word, linear_combination, poly_sum


class FunAlgError(ValueError):
    pass


class NotCoisotropicError(FunAlgError):
    pass


class DegreeOverflowError(FunAlgError):
    pass


class NotInvariantError(FunAlgError):
    pass


Matrix = tuple[tuple[Fraction, ...], ...]


def _frac_matrix(rows) -> Matrix:
    return tuple(tuple(Fraction(x) for x in r) for r in rows)


@dataclass(frozen=True)
class MatrixGroupModel:
    """Faithful representation rho of g on n x n matrices.

    ``pattern[i][j]`` is None for a free entry or the constant the entry is
    pinned to on the group.
    """

    spec: LieAlgebraSpec
    rep: tuple[Matrix, ...]
    pattern: tuple[tuple[Fraction | None, ...], ...] = None
    name: str = field(default="rho", compare=False)

    def __post_init__(self):
        n = len(self.rep[0]) if self.rep else 0
        object.__setattr__(self, "rep", tuple(_frac_matrix(m) for m in self.rep))
        if self.pattern is None:
            object.__setattr__(self, "pattern", tuple((None,) * n for _ in range(n)))
        else:
            object.__setattr__(self, "pattern", tuple(
                tuple(None if x is None else Fraction(x) for x in row) for row in self.pattern))

    @property
    def n(self) -> int:
        return len(self.pattern)

    def rho(self, vec: Sequence) -> Matrix:
        n = self.n
        out = [[Fraction(0)] * n for _ in range(n)]
        for k, c in enumerate(vec):
            c = Fraction(c)
            if c:
                for i in range(n):
                    for j in range(n):
                        out[i][j] += c * self.rep[k][i][j]
        return _frac_matrix(out)

    def free_entries(self) -> list[tuple[int, int]]:
        return [(i + 1, j + 1) for i in range(self.n) for j in range(self.n) if self.pattern[i][j] is None]

    def variables(self, edge: str) -> list[Var]:
        return [(edge, i, j) for i, j in self.free_entries()]

    def matrix(self, edge: str) -> list[list[PolyFun]]:
        n = self.n
        return [[PolyFun.var((edge, i + 1, j + 1)) if self.pattern[i][j] is None
                 else PolyFun.const(self.pattern[i][j]) for j in range(n)] for i in range(n)]

    def validate(self) -> list[Violation]:
        spec, out = self.spec, []
        if len(self.rep) != spec.dim:
            return [Violation("rep_size", (len(self.rep), spec.dim), Fraction(0))]
        for i, j in itertools.combinations(range(spec.dim), 2):
            a, b = self.rep[i], self.rep[j]
            comm = [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(matmul(a, b), matmul(b, a))]
            br = self.rho([spec.bracket(i, j).get(k, 0) for k in range(spec.dim)])
            if any(comm[r][c] != br[r][c] for r in range(self.n) for c in range(self.n)):
                out.append(Violation("rep_homomorphism", (spec.basis_names[i], spec.basis_names[j]), Fraction(1)))
        flat = [[x for row in m for x in row] for m in self.rep]
        if rank(flat) != spec.dim:
            out.append(Violation("rep_injective", (rank(flat),), Fraction(spec.dim - rank(flat))))
        # pinned entries must be preserved by left and right translations
        x = self.matrix("_")
        for k in range(spec.dim):
            r = self.rep[k]
            for i, j in itertools.product(range(self.n), repeat=2):
                if self.pattern[i][j] is None:
                    continue
                right = poly_sum(x[i][m] * r[m][j] for m in range(self.n))
                left = poly_sum(x[m][j] * r[i][m] for m in range(self.n))
                if not right.is_zero() or not left.is_zero():
                    out.append(Violation("pattern_not_preserved", (spec.basis_names[k], i + 1, j + 1), Fraction(1)))
        return out


def gl_model(spec: LieAlgebraSpec) -> MatrixGroupModel:
    """Defining representation of a gl_n spec from :func:`algebra.gl`."""
    n = int(round(spec.dim ** 0.5))
    reps = []
    for i in range(n):
        for j in range(n):
            m = [[0] * n for _ in range(n)]
            m[i][j] = 1
            reps.append(m)
    return MatrixGroupModel(spec, tuple(_frac_matrix(m) for m in reps), name=f"{spec.name}_defining")


def cotangent_model(spec: LieAlgebraSpec) -> MatrixGroupModel:
    """3x3 block representation of the cotangent double of aff(1):
    a = -E22, b = E12, alpha = E13, beta = E23; the group is
    [[1, x, z], [0, w, y], [0, 0, 1]]."""
    def unit(i, j, c=1):
        m = [[0] * 3 for _ in range(3)]
        m[i][j] = c
        return m
    reps = (unit(1, 1, -1), unit(0, 1), unit(0, 2), unit(1, 2))
    pattern = ((1, None, None), (0, None, None), (0, 0, 1))
    return MatrixGroupModel(spec, tuple(_frac_matrix(m) for m in reps), pattern, name="cotangent_block")


# ---------------------------------------------------------------------------
# invariant vector fields

def _check_edge(edge, edges):
    if edges is not None and edge not in edges:
        raise FunAlgError(f"unknown edge {edge!r}")


def left_invariant_field(model: MatrixGroupModel, xi: Sequence, edge: str, edges=None,
                         label: str = "xiL") -> Derivation:
    """x -> x rho(xi) on the generators of ``edge``."""
    _check_edge(edge, edges)
    r, x, n = model.rho(xi), model.matrix(edge), model.n
    return Derivation({(edge, i, j): poly_sum(x[i - 1][m] * r[m][j - 1] for m in range(n))
                       for i, j in model.free_entries()}, label)


def right_invariant_field(model: MatrixGroupModel, xi: Sequence, edge: str, edges=None,
                          label: str = "xiR") -> Derivation:
    """x -> rho(xi) x on the generators of ``edge``."""
    _check_edge(edge, edges)
    r, x, n = model.rho(xi), model.matrix(edge), model.n
    return Derivation({(edge, i, j): poly_sum(x[m][j - 1] * r[i - 1][m] for m in range(n))
                       for i, j in model.free_entries()}, label)


def _unit(k: int, n: int) -> list[int]:
    v = [0] * n
    v[k] = 1
    return v


@dataclass(frozen=True)
class PointAction:
    """Action of g (sign +1) or g-bar (sign -1) at a marked point, one
    derivation per basis element."""

    sign: int
    derivs: tuple[Derivation, ...]

    def of(self, vec: Sequence, label: str = "D") -> Derivation:
        return linear_combination(list(self.derivs), vec, label)


def disk_action(model: MatrixGroupModel, edge: str, source: str, target: str,
                source_sign: int = 1, target_sign: int = 1) -> dict[str, PointAction]:
    """Endpoint actions of a single disk block: -xi^R at the source, xi^L at the target."""
    if source == target:
        raise FunAlgError("a disk block needs two distinct marked points")
    spec = model.spec
    src, tgt = [], []
    for k, nm in enumerate(spec.basis_names):
        e = _unit(k, spec.dim)
        src.append(right_invariant_field(model, e, edge, label=f"{source}.{nm}").scale(-1, f"{source}.{nm}"))
        tgt.append(left_invariant_field(model, e, edge, label=f"{target}.{nm}"))
    return {source: PointAction(source_sign, tuple(src)), target: PointAction(target_sign, tuple(tgt))}


# ---------------------------------------------------------------------------
# coisotropic subalgebras

@dataclass(frozen=True)
class CoisotropicSubalgebra:
    parent: LieAlgebraSpec
    basis_vectors: tuple[tuple[Fraction, ...], ...]
    name: str = field(default="c", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "basis_vectors",
                           tuple(tuple(Fraction(x) for x in v) for v in self.basis_vectors))


def subspace(spec: LieAlgebraSpec, vectors, name: str = "c") -> CoisotropicSubalgebra:
    return CoisotropicSubalgebra(spec, tuple(tuple(v) for v in vectors), name)


def lie_bracket_vec(spec: LieAlgebraSpec, u: Sequence, v: Sequence) -> list[Fraction]:
    out = [Fraction(0)] * spec.dim
    for i, a in enumerate(u):
        if not a:
            continue
        for j, b in enumerate(v):
            if not b:
                continue
            for k, c in spec.bracket(i, j).items():
                out[k] += Fraction(a) * Fraction(b) * c
    return out


def in_span(vectors, w) -> bool:
    vectors = [list(v) for v in vectors]
    if not any(any(x for x in v) for v in vectors):
        return not any(w)
    return rank(vectors + [list(w)]) == rank(vectors)


def subalgebra_violations(spec: LieAlgebraSpec, vectors, name: str) -> list[Violation]:
    out = []
    for i, j in itertools.combinations(range(len(vectors)), 2):
        w = lie_bracket_vec(spec, vectors[i], vectors[j])
        if not in_span(vectors, w):
            out.append(Violation(f"{name}_not_closed", (i, j), Fraction(1)))
    return out


def annihilator(spec: LieAlgebraSpec, vectors) -> list[list[Fraction]]:
    rows = [list(v) for v in vectors if any(v)]
    return nullspace(rows, spec.dim) if rows else [[Fraction(int(i == j)) for j in range(spec.dim)]
                                                    for i in range(spec.dim)]


def coisotropic_check(spec: LieAlgebraSpec, c: CoisotropicSubalgebra | Sequence) -> list[Violation]:
    """Closure under the bracket, and <alpha (x) beta, t> = 0 for all
    alpha, beta annihilating c."""
    vectors = c.basis_vectors if isinstance(c, CoisotropicSubalgebra) else [tuple(v) for v in c]
    for v in vectors:
        if len(v) != spec.dim:
            raise FunAlgError(f"vector {v} has wrong length for {spec.name}")
    out = subalgebra_violations(spec, vectors, "subalgebra")
    ann = annihilator(spec, vectors)
    t = spec.casimir
    for i, al in enumerate(ann):
        for j, be in enumerate(ann):
            if j < i:
                continue
            val = sum((al[a] * t[a][b] * be[b] for a in range(spec.dim) for b in range(spec.dim)), Fraction(0))
            if val:
                out.append(Violation("coisotropy", (i, j), val))
    return out


# ---------------------------------------------------------------------------
# quasi-Poisson algebras

@dataclass(frozen=True)
class Reduction:
    point: str
    subalgebra: CoisotropicSubalgebra
    derivs: tuple[Derivation, ...]
    degree_bound: int


@dataclass(frozen=True)
class QuasiPoissonAlgebra:
    """Polynomial algebra on G^edges with point actions and a biderivation
    {f, g} = sum c (D1 f D2 g - D2 f D1 g)."""

    model: MatrixGroupModel
    edges: tuple[str, ...]
    points: dict[str, PointAction]
    bracket_terms: tuple[tuple[Fraction, Derivation, Derivation], ...] = ()
    reductions: tuple[Reduction, ...] = ()
    invariant_basis: tuple[PolyFun, ...] | None = None
    history: tuple[str, ...] = ()

    @property
    def spec(self) -> LieAlgebraSpec:
        return self.model.spec

    def variables(self) -> list[Var]:
        return [v for e in self.edges for v in self.model.variables(e)]

    def generators(self) -> list[PolyFun]:
        return [PolyFun.var(v) for v in self.variables()]

    def lie_algebra_at(self, point: str) -> LieAlgebraSpec:
        return self.spec if self.points[point].sign > 0 else bar(self.spec)

    def action(self, point: str, vec: Sequence) -> Derivation:
        return self.points[point].of(vec, f"{point}.v")

    def is_invariant(self, f: PolyFun) -> bool:
        return all(d(f).is_zero() for r in self.reductions for d in r.derivs)


def disk_block(model: MatrixGroupModel, edge: str, source: str, target: str,
               source_sign: int = 1, target_sign: int = 1) -> QuasiPoissonAlgebra:
    """C(G) for one edge with zero bracket."""
    return QuasiPoissonAlgebra(model, (edge,), disk_action(model, edge, source, target, source_sign, target_sign),
                               history=(f"disk {edge}: {source} -> {target}",))


def tensor_product(a: QuasiPoissonAlgebra, b: QuasiPoissonAlgebra) -> QuasiPoissonAlgebra:
    if a.model != b.model:
        raise FunAlgError("tensor product of algebras over different models")
    if set(a.edges) & set(b.edges) or set(a.points) & set(b.points):
        raise FunAlgError("tensor factors must have disjoint edges and points")
    return QuasiPoissonAlgebra(a.model, a.edges + b.edges, {**a.points, **b.points},
                               a.bracket_terms + b.bracket_terms, a.reductions + b.reductions,
                               None, a.history + b.history)


def _foreign(A: QuasiPoissonAlgebra, *fs: PolyFun):
    allowed = set(A.variables())
    for f in fs:
        bad = f.variables() - allowed
        if bad:
            raise FunAlgError(f"generators {sorted(bad)} do not belong to this algebra")


def raw_bracket(A: QuasiPoissonAlgebra, f: PolyFun, g: PolyFun) -> PolyFun:
    parts = []
    for c, d1, d2 in A.bracket_terms:
        parts.append((d1(f) * d2(g) - d2(f) * d1(g)) * c)
    return poly_sum(parts)


def bracket_eval(A: QuasiPoissonAlgebra, f: PolyFun, g: PolyFun) -> PolyFun:
    """{f, g}.  On a reduced algebra the arguments must be invariant and the
    result is checked to be invariant."""
    _foreign(A, f, g)
    if A.reductions:
        for h in (f, g):
            if not A.is_invariant(h):
                raise NotInvariantError(f"{h.render()} is not invariant under the reductions")
    out = raw_bracket(A, f, g)
    if A.reductions and not A.is_invariant(out):
        raise NotInvariantError("bracket of invariants is not invariant")
    return out


def fuse(A: QuasiPoissonAlgebra, P: str, Q: str, merged_name: str) -> QuasiPoissonAlgebra:
    if P == Q:
        raise FunAlgError(f"cannot fuse point {P!r} with itself")
    for x in (P, Q):
        if x not in A.points:
            raise FunAlgError(f"unknown point {x!r}")
    if merged_name in A.points and merged_name not in (P, Q):
        raise FunAlgError(f"point name {merged_name!r} already in use")
    ap, aq = A.points[P], A.points[Q]
    if ap.sign != aq.sign:
        raise FunAlgError(f"points {P!r} and {Q!r} carry g and g-bar; re-declare one first")
    spec = A.spec
    merged = tuple(
        Derivation((dp + dq).images, f"{merged_name}.{nm}")
        for dp, dq, nm in zip(ap.derivs, aq.derivs, spec.basis_names))
    half = Fraction(ap.sign, 2)
    new_terms = tuple((half * c, aq.derivs[a], ap.derivs[b]) for a, b, c in spec.casimir_terms())
    points = {k: v for k, v in A.points.items() if k not in (P, Q)}
    points[merged_name] = PointAction(ap.sign, merged)
    return replace(A, points=points, bracket_terms=A.bracket_terms + new_terms,
                   history=A.history + (f"fuse {P} {Q} -> {merged_name}",))


def bar_view(A: QuasiPoissonAlgebra, P: str) -> QuasiPoissonAlgebra:
    """Re-declare the action at P over g-bar (or back over g); the bracket is unchanged."""
    if P not in A.points:
        raise FunAlgError(f"unknown point {P!r}")
    pa = A.points[P]
    points = dict(A.points)
    points[P] = PointAction(-pa.sign, pa.derivs)
    return replace(A, points=points, history=A.history + (f"bar {P}",))


def phi_action(A: QuasiPoissonAlgebra, f1: PolyFun, f2: PolyFun, f3: PolyFun) -> PolyFun:
    """m^(3)(phi . (f1 (x) f2 (x) f3)) with phi of the total action of the surviving points."""
    phi = phi_element(A.spec)
    parts = []
    for pa in A.points.values():
        d = list(pa.derivs)
        for (_, (u1, u2, u3)), c in phi.terms.items():
            a = apply_word(d, u1, f1)
            if a.is_zero():
                continue
            b = apply_word(d, u2, f2)
            if b.is_zero():
                continue
            parts.append(a * b * apply_word(d, u3, f3) * c)
    return poly_sum(parts)


def quasi_jacobi_defect(A: QuasiPoissonAlgebra, f1: PolyFun, f2: PolyFun, f3: PolyFun) -> PolyFun:
    """{f1,{f2,f3}} + c.p. + m^(3)(phi . (f1 (x) f2 (x) f3)); zero for a quasi-Poisson algebra."""
    _foreign(A, f1, f2, f3)
    br = lambda a, b: raw_bracket(A, a, b)  # noqa: E731
    jac = br(f1, br(f2, f3)) + br(f2, br(f3, f1)) + br(f3, br(f1, f2))
    return jac + phi_action(A, f1, f2, f3)


def _monomials_up_to(variables: list[Var], degree: int):
    out = [()]
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(variables, d):
            m: dict[Var, int] = {}
            for v in combo:
                m[v] = m.get(v, 0) + 1
            out.append(tuple(sorted(m.items())))
    return out


def _as_points(point) -> tuple[str, ...]:
    return (point,) if isinstance(point, str) else tuple(point)


def reduction_algebra(A: QuasiPoissonAlgebra, points: Sequence[str]) -> LieAlgebraSpec:
    """Signed Lie algebra acting jointly at ``points`` (direct sum for several)."""
    algs = [A.lie_algebra_at(p) for p in points]
    out = algs[0]
    for g in algs[1:]:
        out = direct_sum(out, g)
    return out


def _reduction_derivs(A: QuasiPoissonAlgebra, points: tuple[str, ...], c: CoisotropicSubalgebra,
                      label: str) -> tuple[Derivation, ...]:
    n = A.spec.dim
    for p in points:
        if p not in A.points:
            raise FunAlgError(f"unknown point {p!r}")
    out = []
    for i, v in enumerate(c.basis_vectors):
        if len(v) != n * len(points):
            raise FunAlgError(f"subalgebra {c.name} has vectors of length {len(v)}, expected {n * len(points)}")
        parts = [A.points[p].of(v[k * n:(k + 1) * n]) for k, p in enumerate(points)]
        d = parts[0]
        for q in parts[1:]:
            d = d + q
        out.append(Derivation(d.images, f"{label}{i}"))
    return tuple(out)


def invariants(A: QuasiPoissonAlgebra, point, c: CoisotropicSubalgebra | None,
               degree_bound: int) -> list[PolyFun]:
    """Basis of polynomials of degree <= degree_bound killed by c at ``point``
    (a name, or a tuple of names for a subalgebra of their direct sum) and by
    every earlier reduction of A.  Reduced echelon form over the monomials
    ordered by (degree, monomial)."""
    if degree_bound < 0:
        raise FunAlgError("degree_bound must be non-negative")
    derivs = [d for r in A.reductions for d in r.derivs]
    if c is not None:
        derivs += list(_reduction_derivs(A, _as_points(point), c, "c"))
    monos = _monomials_up_to(A.variables(), degree_bound)
    col = {m: i for i, m in enumerate(monos)}
    rows: dict[tuple, list[Fraction]] = {}
    for j, m in enumerate(monos):
        f = PolyFun._raw({m: Fraction(1)})
        for k, d in enumerate(derivs):
            for mo, val in d(f).terms.items():
                if mo not in col:
                    raise DegreeOverflowError("action raised the degree")  # never for linear actions
                rows.setdefault((k, mo), [Fraction(0)] * len(monos))[j] += val
    basis = nullspace(list(rows.values()), len(monos))
    return [PolyFun._raw({monos[i]: x for i, x in enumerate(v) if x}) for v in basis]


def reduce(A: QuasiPoissonAlgebra, point, c: CoisotropicSubalgebra, degree_bound: int = 2,
           verify: bool = True, strict_window: bool = False) -> QuasiPoissonAlgebra:
    """Pass to c-invariants at ``point`` (or jointly at a tuple of points,
    with c inside the direct sum of their signed Lie algebras); the points
    disappear.  Brackets of pairs of generating invariants are checked to
    be invariant by applying c directly.  With ``strict_window`` a bracket of
    degree above ``degree_bound`` raises DegreeOverflowError instead."""
    points = _as_points(point)
    for p in points:
        if p not in A.points:
            raise FunAlgError(f"unknown point {p!r}")
    if len(set(points)) != len(points):
        raise FunAlgError("repeated point in reduction")
    bad = coisotropic_check(reduction_algebra(A, points), c)
    if bad:
        raise NotCoisotropicError(f"{c.name} is not coisotropic: {bad[0]}")
    label = "+".join(points)
    red = Reduction(label, c, _reduction_derivs(A, points, c, f"{label}.{c.name}"), degree_bound)
    basis = invariants(A, points, c, degree_bound)
    remaining = {k: v for k, v in A.points.items() if k not in points}
    B = replace(A, points=remaining, reductions=A.reductions + (red,), invariant_basis=tuple(basis),
                history=A.history + (f"reduce {label} by {c.name} deg {degree_bound}",))
    if verify:
        # by Leibniz, closure on generators gives closure on their products;
        # the strict window looks at every pair of basis invariants
        if strict_window:
            fs = [f for f in basis if f.degree() > 0]
        else:
            fs = generating_invariants(B)
        for f, g in itertools.combinations(fs, 2):
            br = raw_bracket(B, f, g)
            if strict_window and br.degree() > degree_bound:
                raise DegreeOverflowError(
                    f"{{{f.render()}, {g.render()}}} has degree {br.degree()} > {degree_bound}; "
                    f"reduce with a larger degree bound")
            if not B.is_invariant(br):
                raise NotInvariantError(f"{{{f.render()}, {g.render()}}} left the invariants")
    return B


def coordinates(A: QuasiPoissonAlgebra, f: PolyFun) -> list[Fraction]:
    """Coefficients of an invariant in A.invariant_basis."""
    if A.invariant_basis is None:
        raise FunAlgError("algebra has no computed invariant basis")
    bound = min(r.degree_bound for r in A.reductions)
    if f.degree() > bound:
        raise DegreeOverflowError(
            f"degree {f.degree()} exceeds the invariant window {bound}; reduce with a larger degree bound")
    monos = sorted({m for b in A.invariant_basis for m in b.terms} | set(f.terms))
    rows = [[b.terms.get(m, Fraction(0)) for b in A.invariant_basis] for m in monos]
    from .linalg import solve
    x = solve(rows, [f.terms.get(m, Fraction(0)) for m in monos])
    if x is None:
        raise NotInvariantError(f"{f.render()} is not in the span of the invariants")
    return x


def render_bracket_table(A: QuasiPoissonAlgebra, fs: list[PolyFun] | None = None) -> list[str]:
    fs = fs if fs is not None else A.generators()
    lines = []
    for f, g in itertools.combinations(fs, 2):
        lines.append(f"{{{f.render()}, {g.render()}}} = {raw_bracket(A, f, g).render()}")
    return lines


def generating_invariants(A: QuasiPoissonAlgebra) -> list[PolyFun]:
    """Nonconstant invariants of the window that are not polynomials in
    invariants of lower degree; the plain generators if nothing was reduced."""
    if A.invariant_basis is None:
        return A.generators()
    basis = sorted((b for b in A.invariant_basis if b.degree() > 0), key=lambda b: b.degree())
    kept: list[PolyFun] = []
    for d in sorted({b.degree() for b in basis}):
        # span of 1 and all products of kept generators of total degree <= d
        span = Echelon()
        span.add({(): 1})
        prods = [(PolyFun.const(1), 0, 0)]  # (product, degree, index of last factor)
        while prods:
            nxt = []
            for p, deg, last in prods:
                for i in range(last, len(kept)):
                    k = kept[i]
                    if deg + k.degree() <= d:
                        q = p * k
                        span.add(q.terms)
                        nxt.append((q, deg + k.degree(), i))
            prods = nxt
        for f in (b for b in basis if b.degree() == d):
            if span.add(f.terms):
                kept.append(f)
    return kept
