"""Skeleton graphs, fusion programs and their assembly into quasi-Poisson
algebras; Manin triples and the bundled Poisson-Lie programs."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .algebra import LieAlgebraSpec, Violation, bar, direct_sum
from .funalg import (
    CoisotropicSubalgebra,
    MatrixGroupModel,
    QuasiPoissonAlgebra,
    bar_view,
    coisotropic_check,
    disk_block,
    fuse,
    reduce,
    subalgebra_violations,
    subspace,
    tensor_product,
)
from .linalg import inverse, rank


class ProgramError(ValueError):
    pass


@dataclass(frozen=True)
class SkeletonGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, str], ...]  # (label, source, target)

    def validate(self) -> list[Violation]:
        out = []
        labels = [e[0] for e in self.edges]
        for lab in sorted({x for x in labels if labels.count(x) > 1}):
            out.append(Violation("duplicate_edge_label", (lab,), Fraction(0)))
        touched = {v for _, s, t in self.edges for v in (s, t)}
        for v in self.vertices:
            if v not in touched:
                out.append(Violation("isolated_vertex", (v,), Fraction(0)))
        for lab, s, t in self.edges:
            if s == t:
                out.append(Violation("loop_edge", (lab, s), Fraction(0)))
            for v in (s, t):
                if v not in self.vertices:
                    out.append(Violation("unknown_vertex", (lab, v), Fraction(0)))
        return out


@dataclass(frozen=True)
class Fuse:
    p: str
    q: str
    merged: str


@dataclass(frozen=True)
class Reduce:
    points: tuple[str, ...]
    subalgebra: CoisotropicSubalgebra
    degree_bound: int = 2


@dataclass(frozen=True)
class BarView:
    point: str


Step = Union[Fuse, Reduce, BarView]


@dataclass(frozen=True)
class FusionProgram:
    name: str
    model: MatrixGroupModel
    skeleton: SkeletonGraph
    steps: tuple[Step, ...] = ()
    split: tuple[tuple[str, ...], tuple[str, ...]] | None = None  # (plus, minus)

    @property
    def spec(self) -> LieAlgebraSpec:
        return self.model.spec

    def initial_signs(self) -> dict[str, int]:
        signs = {v: 1 for v in self.skeleton.vertices}
        if self.split is not None:
            for v in self.split[1]:
                signs[v] = -1
        return signs


def describe_step(step: Step) -> str:
    if isinstance(step, Fuse):
        return f"fuse {step.p} {step.q} -> {step.merged}"
    if isinstance(step, Reduce):
        return f"reduce {'+'.join(step.points)} by {step.subalgebra.name} deg {step.degree_bound}"
    return f"bar {step.point}"


def validate_program(p: FusionProgram) -> list[Violation]:
    """Structural report; witnesses carry the step index (-1 for the skeleton)."""
    out = [Violation(v.identity, (-1,) + v.witness, v.value) for v in p.skeleton.validate()]
    out += [Violation(v.identity, (-1,) + v.witness, v.value) for v in p.model.validate()]
    if p.split is not None:
        plus, minus = p.split
        if set(plus) & set(minus):
            out.append(Violation("split_overlap", (-1,) + tuple(sorted(set(plus) & set(minus))), Fraction(0)))
        if set(plus) | set(minus) != set(p.skeleton.vertices):
            out.append(Violation("split_incomplete", (-1,), Fraction(0)))
    signs = p.initial_signs()
    for i, step in enumerate(p.steps):
        if isinstance(step, Fuse):
            for x in (step.p, step.q):
                if x not in signs:
                    out.append(Violation("unknown_point", (i, x), Fraction(0)))
            if step.p == step.q:
                out.append(Violation("self_fusion", (i, step.p), Fraction(0)))
                continue
            if step.p not in signs or step.q not in signs:
                continue
            if signs[step.p] != signs[step.q]:
                out.append(Violation("fusion_sign_mismatch", (i, step.p, step.q), Fraction(0)))
            if step.merged in signs and step.merged not in (step.p, step.q):
                out.append(Violation("merged_name_in_use", (i, step.merged), Fraction(0)))
            s = signs.pop(step.p)
            signs.pop(step.q)
            signs[step.merged] = s
        elif isinstance(step, Reduce):
            missing = [x for x in step.points if x not in signs]
            if missing:
                out.append(Violation("unknown_point", (i,) + tuple(missing), Fraction(0)))
                continue
            if step.degree_bound < 0:
                out.append(Violation("negative_degree_bound", (i,), Fraction(step.degree_bound)))
            algs = [p.spec if signs[x] > 0 else bar(p.spec) for x in step.points]
            alg = algs[0]
            for g in algs[1:]:
                alg = direct_sum(alg, g)
            if any(len(v) != alg.dim for v in step.subalgebra.basis_vectors):
                out.append(Violation("subalgebra_shape", (i, step.subalgebra.name), Fraction(0)))
                continue
            for v in coisotropic_check(alg, step.subalgebra.basis_vectors):
                out.append(Violation(v.identity, (i, step.subalgebra.name) + v.witness, v.value))
            for x in step.points:
                signs.pop(x)
        else:
            if step.point not in signs:
                out.append(Violation("unknown_point", (i, step.point), Fraction(0)))
            else:
                signs[step.point] = -signs[step.point]
    return out


@dataclass
class TraceRecord:
    step: int
    description: str
    points: tuple[str, ...]
    bracket_terms: int
    invariants: int | None
    status: str
    seconds: float


def assemble(p: FusionProgram, trace: list | None = None) -> QuasiPoissonAlgebra:
    """Disk blocks (zero bracket) for every edge, then the steps in order."""
    problems = validate_program(p)
    if problems:
        raise ProgramError(f"program {p.name!r} is invalid: {problems[0]}")
    signs = p.initial_signs()
    A = None
    for lab, s, t in p.skeleton.edges:
        block = disk_block(p.model, lab, s, t, signs[s], signs[t])
        A = block if A is None else _merge_blocks(A, block)
    for i, step in enumerate(p.steps):
        t0 = time.perf_counter()
        if isinstance(step, Fuse):
            A = fuse(A, step.p, step.q, step.merged)
        elif isinstance(step, Reduce):
            A = reduce(A, step.points, step.subalgebra, step.degree_bound)
        else:
            A = bar_view(A, step.point)
        if trace is not None:
            trace.append(TraceRecord(i, describe_step(step), tuple(A.points), len(A.bracket_terms),
                                     None if A.invariant_basis is None else len(A.invariant_basis),
                                     "ok", time.perf_counter() - t0))
    return A


def _merge_blocks(A: QuasiPoissonAlgebra, block: QuasiPoissonAlgebra) -> QuasiPoissonAlgebra:
    """Tensor product, except that a vertex shared by two edges is already a
    corner connected sum and must be fused explicitly; shared names are
    rejected."""
    shared = set(A.points) & set(block.points)
    if shared:
        raise ProgramError(
            f"vertices {sorted(shared)} are endpoints of several edges; give each disk its own "
            f"endpoint names and join them with fuse steps")
    return tensor_product(A, block)


# ---------------------------------------------------------------------------
# Manin triples

@dataclass(frozen=True)
class ManinTripleData:
    d: LieAlgebraSpec
    h: tuple[tuple[Fraction, ...], ...]
    h_star: tuple[tuple[Fraction, ...], ...]
    twist_f: tuple[tuple[Fraction, ...], ...] | None = None
    name: str = field(default="manin", compare=False)

    def __post_init__(self):
        conv = lambda vs: tuple(tuple(Fraction(x) for x in v) for v in vs)  # noqa: E731
        object.__setattr__(self, "h", conv(self.h))
        object.__setattr__(self, "h_star", conv(self.h_star))
        if self.twist_f is not None:
            object.__setattr__(self, "twist_f", conv(self.twist_f))

    def sub(self, which: str) -> CoisotropicSubalgebra:
        vecs = {"h": self.h, "hstar": self.h_star, "twist": self.twist_f}[which]
        if vecs is None:
            raise ProgramError(f"Manin triple {self.name} has no twist")
        return subspace(self.d, vecs, which)


class NondegeneracyError(ValueError):
    pass


def manin_validate(m: ManinTripleData) -> list[Violation]:
    d = m.d
    t = [list(r) for r in d.casimir]
    try:
        form = inverse(t)
    except ZeroDivisionError:
        raise NondegeneracyError(f"casimir of {d.name} is degenerate") from None
    pair = lambda u, v: sum((u[a] * form[a][b] * v[b] for a in range(d.dim) for b in range(d.dim)),  # noqa: E731
                            Fraction(0))
    out: list[Violation] = []
    parts = [("h", m.h), ("hstar", m.h_star)] + ([("twist", m.twist_f)] if m.twist_f is not None else [])
    for nm, vecs in parts:
        out += subalgebra_violations(d, vecs, nm)
        for i, u in enumerate(vecs):
            for j, v in enumerate(vecs):
                if j >= i and pair(u, v):
                    out.append(Violation(f"{nm}_not_isotropic", (i, j), pair(u, v)))
        if 2 * rank([list(v) for v in vecs]) != d.dim:
            out.append(Violation(f"{nm}_not_half_dimensional", (rank([list(v) for v in vecs]),), Fraction(0)))
    if rank([list(v) for v in m.h + m.h_star]) != rank([list(v) for v in m.h]) + rank([list(v) for v in m.h_star]):
        out.append(Violation("h_hstar_not_transverse", (), Fraction(0)))
    elif rank([list(v) for v in m.h + m.h_star]) != d.dim:
        out.append(Violation("h_hstar_not_spanning", (), Fraction(0)))
    if m.twist_f is not None:
        if rank([list(v) for v in m.h + m.twist_f]) != rank([list(v) for v in m.h]) + rank([list(v) for v in m.twist_f]):
            out.append(Violation("twist_meets_h", (), Fraction(0)))
    return out


def cotangent_manin(twist: int | None = 1) -> ManinTripleData:
    """d = aff(1) + aff(1)^*, h = aff(1)^* (abelian), h* = aff(1).

    The twist f_s = span(a + s beta, b - s alpha) is a Lagrangian
    subalgebra transverse to h for every s."""
    from .algebra import cotangent_double
    d = cotangent_double()
    f = None if twist is None else ((1, 0, 0, twist), (0, 1, -twist, 0))
    return ManinTripleData(d, ((0, 0, 1, 0), (0, 0, 0, 1)), ((1, 0, 0, 0), (0, 1, 0, 0)), f, name="cotangent")


def hyperbolic_manin() -> ManinTripleData:
    """Abelian d of dim 2 with t = e1 (x) e2 + e2 (x) e1."""
    from .algebra import make_lie_algebra
    d = make_lie_algebra("hyp2", ["e1", "e2"], {}, {(0, 1): 1})
    return ManinTripleData(d, ((1, 0),), ((0, 1),), name="hyperbolic")


def diagonal(spec: LieAlgebraSpec) -> CoisotropicSubalgebra:
    n = spec.dim
    return subspace(spec, [tuple(int(k == i) for k in range(n)) * 2 for i in range(n)], "diag")


BUILTIN_PROGRAMS = ("poisson_lie_triangle", "twist_triangle", "double_square", "heisenberg_square",
                    "alt_poisson_lie_triangle")


def _triangle(m: ManinTripleData, tag: str, left: str, right: str, bottom: str | None,
              sign: int = 1):
    """Two disks with top vertices reduced by ``left``/``right`` and their
    bottom endpoints fused.

    A top vertex reduced by h* is the target of its edge (invariants of
    right translations by H*, i.e. functions on G/H*, are polynomial); a
    top vertex reduced by h is the source (functions on H\\G).
    """
    L, R, B1, B2, B = f"{tag}L", f"{tag}R", f"{tag}1", f"{tag}2", f"{tag}B"

    def edge(label, top, bottom_pt, sub):
        return (label, top, bottom_pt) if sub == "h" else (label, bottom_pt, top)

    edges = [edge(f"{tag.lower()}l", L, B1, left), edge(f"{tag.lower()}r", R, B2, right)]
    steps: list[Step] = []
    if sign < 0:
        steps += [BarView(x) for x in (L, B1, R, B2)]
    steps += [Reduce((L,), m.sub(left), 2), Reduce((R,), m.sub(right), 2), Fuse(B1, B2, B)]
    if bottom is not None:
        steps.append(Reduce((B,), m.sub(bottom), 2))
    return [L, R, B1, B2], edges, steps, B


def builtin_program(name: str, m: ManinTripleData, model: MatrixGroupModel) -> FusionProgram:
    if model.spec != m.d:
        raise ProgramError("model and Manin triple use different Lie algebras")
    if name == "poisson_lie_triangle":
        parts = [_triangle(m, "T", "hstar", "h", "hstar")]
    elif name == "twist_triangle":
        parts = [_triangle(m, "T", "hstar", "h", "twist")]
    elif name == "alt_poisson_lie_triangle":
        parts = [_triangle(m, "T", "hstar", "hstar", "h")]
    elif name in ("double_square", "heisenberg_square"):
        lower = _triangle(m, "D", "hstar", "h", None)
        if name == "double_square":
            upper = _triangle(m, "U", "hstar", "h", None, sign=-1)
        else:
            upper = _triangle(m, "U", "h", "hstar", None, sign=-1)
        final = Reduce((lower[3], upper[3]), diagonal(m.d), 2)
        parts = [lower, upper]
    else:
        raise ProgramError(f"unknown builtin program {name!r}; choose from {', '.join(BUILTIN_PROGRAMS)}")
    vertices, edges, steps = [], [], []
    for vs, es, ss, _ in parts:
        vertices += vs
        edges += es
        steps += ss
    if name in ("double_square", "heisenberg_square"):
        steps.append(final)
    return FusionProgram(f"{name}({m.name})", model, SkeletonGraph(tuple(vertices), tuple(edges)), tuple(steps))

