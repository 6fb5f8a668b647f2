"""Text format for Lie algebras, representations, Manin triples and fusion
programs, and the ``qpquant`` command line.

    lie_algebra NAME { dim N; basis id+; bracket [x,y] = c*z + ...; casimir (x,y)=c ...; }
    rep NAME of ALG { dim n; matrix x = [[q,...],...]; pattern [[*,1,...],...]; }
    manin NAME of ALG { h = span((..),..); hstar = span(..); twist = span(..); }
    program NAME over ALG rep REP {
        edge L: P -> Q; split plus(P ..) minus(Q ..);
        fuse P Q -> R; bar P; reduce P[+Q] by SUB [deg K];
    }
    builtin NAME = KIND(MANIN) [rep REP];

SUB is MANIN.h, MANIN.hstar, MANIN.twist, all, zero, diag or span(vec, ...).
"""

from __future__ import annotations

import argparse
import itertools
import json
import re
import sys
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .algebra import LieAlgebraSpec, Violation, lie_validate, render_coeff
from .associator import UnsupportedOrderError, verify_J_coherence
from .funalg import (
    FunAlgError,
    MatrixGroupModel,
    bracket_eval,
    generating_invariants,
    quasi_jacobi_defect,
    raw_bracket,
    subspace,
)
from .moduli import (
    BUILTIN_PROGRAMS,
    BarView,
    Fuse,
    FusionProgram,
    ManinTripleData,
    NondegeneracyError,
    ProgramError,
    Reduce,
    SkeletonGraph,
    assemble,
    builtin_program,
    diagonal,
    manin_validate,
    validate_program,
)
from .poly import PolyFun, parse_var
from .starprod import associativity_defect, is_undeformed_order0, quantize_program, semiclassical_limit

SCHEMA_VERSION = 1


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.col = line, col


class DocumentError(ValueError):
    """Unresolved or duplicate names."""


# ---------------------------------------------------------------------------
# tokens

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<arrow>->)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}\[\](),;=*+\-/:.^])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out, pos, line, col = [], 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind, s = m.lastgroup, m.group()
        if kind != "ws":
            out.append(Token("punct" if kind == "arrow" else kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


# ---------------------------------------------------------------------------
# document model

@dataclass(frozen=True)
class SubRef:
    """Reference to a subalgebra at the reduced points."""
    kind: str  # "manin", "all", "zero", "diag", "span"
    manin: str | None = None
    part: str | None = None
    vectors: tuple[tuple[Fraction, ...], ...] = ()

    def render(self) -> str:
        if self.kind == "manin":
            return f"{self.manin}.{self.part}"
        if self.kind == "span":
            return "span(" + ", ".join(_render_vec(v) for v in self.vectors) + ")"
        return self.kind


@dataclass(frozen=True)
class ProgramDecl:
    name: str
    algebra: str
    rep: str
    edges: tuple[tuple[str, str, str], ...]
    steps: tuple[tuple, ...]  # ("fuse", p, q, r) | ("bar", p) | ("reduce", points, SubRef, deg|None)
    split: tuple[tuple[str, ...], tuple[str, ...]] | None = None


@dataclass(frozen=True)
class BuiltinDecl:
    name: str
    kind: str
    manin: str
    rep: str | None = None


@dataclass
class Document:
    lie_algebras: dict[str, LieAlgebraSpec] = field(default_factory=dict)
    models: dict[str, tuple[str, MatrixGroupModel]] = field(default_factory=dict)
    manin_triples: dict[str, tuple[str, ManinTripleData]] = field(default_factory=dict)
    programs: dict[str, ProgramDecl | BuiltinDecl] = field(default_factory=dict)

    def names(self) -> set[str]:
        return set(self.lie_algebras) | set(self.models) | set(self.manin_triples) | set(self.programs)


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.doc = Document()

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def take(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def peek(self, text: str) -> bool:
        return self.tok.kind in ("punct", "id") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.peek(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.peek(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.take()

    def ident(self) -> Token:
        if self.tok.kind != "id":
            self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.take()

    def integer(self) -> int:
        if self.tok.kind != "num":
            self.error(f"expected an integer, found {self.tok.text or 'end of input'!r}")
        return int(self.take().text)

    def rational(self) -> Fraction:
        neg = self.accept("-")
        n = self.integer()
        d = 1
        if self.accept("/"):
            tok = self.tok
            d = self.integer()
            if d == 0:
                self.error("zero denominator", tok)
        q = Fraction(n, d)
        return -q if neg else q

    def new_name(self) -> Token:
        t = self.ident()
        if t.text in self.doc.names():
            raise DocumentError(f"line {t.line}, column {t.col}: duplicate name {t.text!r}")
        return t

    def ref(self, table: dict, what: str) -> Token:
        t = self.ident()
        if t.text not in table:
            raise DocumentError(f"line {t.line}, column {t.col}: unknown {what} {t.text!r}")
        return t

    def basis_ref(self, spec: LieAlgebraSpec) -> int:
        t = self.ident()
        if t.text not in spec.basis_names:
            raise DocumentError(f"line {t.line}, column {t.col}: {t.text!r} is not a basis element of {spec.name}")
        return spec.basis_names.index(t.text)

    def vector(self) -> tuple[Fraction, ...]:
        self.expect("(")
        out = [self.rational()]
        while self.accept(","):
            out.append(self.rational())
        self.expect(")")
        return tuple(out)

    def span(self) -> tuple[tuple[Fraction, ...], ...]:
        self.expect("span")
        self.expect("(")
        vecs = []
        if not self.peek(")"):
            vecs.append(self.vector())
            while self.accept(","):
                vecs.append(self.vector())
        self.expect(")")
        return tuple(vecs)

    def matrix(self) -> tuple[tuple, ...]:
        self.expect("[")
        rows = [self.row()]
        while self.accept(","):
            rows.append(self.row())
        self.expect("]")
        return tuple(rows)

    def row(self, allow_star: bool = False) -> tuple:
        self.expect("[")
        out = [self.entry(allow_star)]
        while self.accept(","):
            out.append(self.entry(allow_star))
        self.expect("]")
        return tuple(out)

    def entry(self, allow_star: bool):
        if allow_star and self.accept("*"):
            return None
        return self.rational()

    # sections
    def document(self) -> Document:
        while self.tok.kind != "eof":
            head = self.ident()
            {"lie_algebra": self.lie_algebra, "rep": self.rep, "manin": self.manin,
             "program": self.program, "builtin": self.builtin}.get(
                head.text, lambda: self.error(f"unknown section {head.text!r}", head))()
        return self.doc

    def lie_algebra(self):
        name = self.new_name()
        self.expect("{")
        dim, basis, brackets, casimir = None, None, {}, {}
        pending = []
        while not self.accept("}"):
            kw = self.ident()
            if kw.text == "dim":
                dim = self.integer()
            elif kw.text == "basis":
                names = []
                while self.tok.kind == "id":
                    t = self.take()
                    if t.text in names:
                        self.error(f"repeated basis element {t.text!r}", t)
                    names.append(t.text)
                basis = tuple(names)
            elif kw.text in ("bracket", "casimir"):
                # resolved once the basis is known
                start = self.i
                depth = 0
                while not (self.peek(";") and depth == 0):
                    if self.tok.kind == "eof":
                        self.error("unterminated statement")
                    depth += self.peek("(") + self.peek("[") - self.peek(")") - self.peek("]")
                    self.take()
                pending.append((kw.text, start))
            else:
                self.error(f"unknown lie_algebra item {kw.text!r}", kw)
            self.expect(";")
        if basis is None:
            self.error(f"lie_algebra {name.text} has no basis", name)
        if dim is not None and dim != len(basis):
            self.error(f"dim {dim} does not match {len(basis)} basis names", name)
        n = len(basis)
        proto = LieAlgebraSpec(basis, {}, tuple((Fraction(0),) * n for _ in range(n)), name=name.text)
        resume = self.i
        for kind, start in pending:
            self.i = start
            if kind == "bracket":
                self.bracket_item(proto, brackets)
            else:
                while not self.peek(";"):
                    self.expect("(")
                    a = self.basis_ref(proto)
                    self.expect(",")
                    b = self.basis_ref(proto)
                    self.expect(")")
                    self.expect("=")
                    tok = self.tok
                    c = self.rational()
                    if (a, b) in casimir:
                        self.error("casimir entry given twice", tok)
                    casimir[(a, b)] = c
                    self.accept(",")
        self.i = resume
        sc = {}
        for (i, j), out in brackets.items():
            for k, c in out.items():
                if c:
                    sc[(i, j, k)] = c
            if (j, i) not in brackets and i != j:
                for k, c in out.items():
                    if c:
                        sc[(j, i, k)] = -c
        t = [[Fraction(0)] * n for _ in range(n)]
        for (a, b), c in casimir.items():
            t[a][b] = c
            if (b, a) not in casimir:
                t[b][a] = c
        self.doc.lie_algebras[name.text] = LieAlgebraSpec(basis, sc, tuple(tuple(r) for r in t), name=name.text)

    def bracket_item(self, spec: LieAlgebraSpec, brackets: dict):
        first = self.expect("[")
        i = self.basis_ref(spec)
        self.expect(",")
        j = self.basis_ref(spec)
        self.expect("]")
        self.expect("=")
        if (i, j) in brackets:
            self.error("bracket given twice", first)
        out: dict[int, Fraction] = {}
        sign = Fraction(-1) if self.accept("-") else Fraction(1)
        while True:
            if self.accept("-"):
                sign = -sign
            if self.tok.kind == "num":
                c = self.rational()
                if self.accept("*"):
                    k = self.basis_ref(spec)
                    out[k] = out.get(k, 0) + sign * c
                elif c:
                    self.error("a bracket value must be a combination of basis elements")
            else:
                k = self.basis_ref(spec)
                out[k] = out.get(k, 0) + sign
            if self.accept("+"):
                sign = Fraction(1)
            elif self.accept("-"):
                sign = Fraction(-1)
            else:
                break
        brackets[(i, j)] = {k: c for k, c in out.items() if c}

    def rep(self):
        name = self.new_name()
        self.expect("of")
        alg = self.ref(self.doc.lie_algebras, "lie_algebra")
        spec = self.doc.lie_algebras[alg.text]
        self.expect("{")
        dim, mats, pattern = None, {}, None
        while not self.accept("}"):
            kw = self.ident()
            if kw.text == "dim":
                dim = self.integer()
            elif kw.text == "matrix":
                k = self.basis_ref(spec)
                self.expect("=")
                tok = self.tok
                if k in mats:
                    self.error("matrix given twice", tok)
                mats[k] = self.matrix()
            elif kw.text == "pattern":
                self.expect("[")
                rows = [self.row(allow_star=True)]
                while self.accept(","):
                    rows.append(self.row(allow_star=True))
                self.expect("]")
                pattern = tuple(rows)
            else:
                self.error(f"unknown rep item {kw.text!r}", kw)
            self.expect(";")
        if dim is None:
            self.error(f"rep {name.text} has no dim", name)
        shapes = [m for m in mats.values()] + ([pattern] if pattern is not None else [])
        for m in shapes:
            if len(m) != dim or any(len(r) != dim for r in m):
                self.error(f"rep {name.text}: matrices must be {dim} x {dim}", name)
        zero = tuple((Fraction(0),) * dim for _ in range(dim))
        reps = tuple(mats.get(k, zero) for k in range(spec.dim))
        self.doc.models[name.text] = (alg.text, MatrixGroupModel(spec, reps, pattern, name=name.text))

    def manin(self):
        name = self.new_name()
        self.expect("of")
        alg = self.ref(self.doc.lie_algebras, "lie_algebra")
        spec = self.doc.lie_algebras[alg.text]
        self.expect("{")
        parts: dict[str, tuple] = {}
        while not self.accept("}"):
            kw = self.ident()
            if kw.text not in ("h", "hstar", "twist") or kw.text in parts:
                self.error(f"unexpected manin item {kw.text!r}", kw)
            self.expect("=")
            tok = self.tok
            vecs = self.span()
            if any(len(v) != spec.dim for v in vecs):
                self.error(f"vectors must have length {spec.dim}", tok)
            parts[kw.text] = vecs
            self.expect(";")
        for req in ("h", "hstar"):
            if req not in parts:
                self.error(f"manin {name.text} lacks {req}", name)
        data = ManinTripleData(spec, parts["h"], parts["hstar"], parts.get("twist"), name=name.text)
        self.doc.manin_triples[name.text] = (alg.text, data)

    def program(self):
        name = self.new_name()
        self.expect("over")
        alg = self.ref(self.doc.lie_algebras, "lie_algebra")
        self.expect("rep")
        rep = self.ref(self.doc.models, "rep")
        if self.doc.models[rep.text][0] != alg.text:
            raise DocumentError(f"line {rep.line}, column {rep.col}: rep {rep.text!r} is not over {alg.text!r}")
        self.expect("{")
        edges, steps, split = [], [], None
        while not self.accept("}"):
            kw = self.ident()
            if kw.text == "edge":
                lab = self.ident().text
                self.expect(":")
                s = self.ident().text
                self.expect("->")
                t = self.ident().text
                edges.append((lab, s, t))
            elif kw.text == "fuse":
                p, q = self.ident().text, self.ident().text
                self.expect("->")
                steps.append(("fuse", p, q, self.ident().text))
            elif kw.text == "bar":
                steps.append(("bar", self.ident().text))
            elif kw.text == "reduce":
                pts = [self.ident().text]
                while self.accept("+"):
                    pts.append(self.ident().text)
                self.expect("by")
                sub = self.subref()
                deg = None
                if self.accept("deg"):
                    deg = self.integer()
                steps.append(("reduce", tuple(pts), sub, deg))
            elif kw.text == "split":
                if split is not None:
                    self.error("split given twice", kw)
                split = (self.name_list("plus"), self.name_list("minus") if self.peek("minus") else ())
            else:
                self.error(f"unknown program item {kw.text!r}", kw)
            self.expect(";")
        self.doc.programs[name.text] = ProgramDecl(name.text, alg.text, rep.text, tuple(edges), tuple(steps), split)

    def name_list(self, kw: str) -> tuple[str, ...]:
        self.expect(kw)
        self.expect("(")
        out = []
        while self.tok.kind == "id":
            out.append(self.take().text)
            self.accept(",")
        self.expect(")")
        return tuple(out)

    def subref(self) -> SubRef:
        if self.peek("span"):
            return SubRef("span", vectors=self.span())
        t = self.ident()
        if t.text in ("all", "zero", "diag"):
            return SubRef(t.text)
        if t.text not in self.doc.manin_triples:
            raise DocumentError(f"line {t.line}, column {t.col}: unknown subalgebra {t.text!r}")
        self.expect(".")
        part = self.ident()
        if part.text not in ("h", "hstar", "twist"):
            self.error(f"unknown Manin part {part.text!r}", part)
        return SubRef("manin", t.text, part.text)

    def builtin(self):
        name = self.new_name()
        self.expect("=")
        kind = self.ident()
        if kind.text not in BUILTIN_PROGRAMS:
            self.error(f"unknown builtin {kind.text!r}", kind)
        self.expect("(")
        man = self.ref(self.doc.manin_triples, "manin")
        self.expect(")")
        rep = None
        if self.accept("rep"):
            rep = self.ref(self.doc.models, "rep").text
        self.expect(";")
        alg = self.doc.manin_triples[man.text][0]
        if rep is None:
            cands = [k for k, (a, _) in self.doc.models.items() if a == alg]
            if len(cands) != 1:
                raise DocumentError(f"line {name.line}, column {name.col}: builtin {name.text!r} needs "
                                    f"'rep NAME' ({len(cands)} reps over {alg!r})")
        elif self.doc.models[rep][0] != alg:
            raise DocumentError(f"builtin {name.text!r}: rep {rep!r} is not over {alg!r}")
        self.doc.programs[name.text] = BuiltinDecl(name.text, kind.text, man.text, rep)


def parse(text: str) -> Document:
    return _Parser(text).document()


# ---------------------------------------------------------------------------
# rendering

def _lit(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else render_coeff(c)


def _render_vec(v) -> str:
    return "(" + ", ".join(_lit(x) for x in v) + ")"


def _render_matrix(m) -> str:
    cell = lambda x: "*" if x is None else _lit(x)  # noqa: E731
    return "[" + ", ".join("[" + ", ".join(cell(x) for x in r) + "]" for r in m) + "]"


def render_document(doc: Document) -> str:
    out = []
    for name, spec in doc.lie_algebras.items():
        B = spec.basis_names
        out.append(f"lie_algebra {name} {{")
        out.append(f"  dim {spec.dim};")
        out.append(f"  basis {' '.join(B)};")
        n = spec.dim

        def value(i, j):
            br = spec.bracket(i, j)
            if not br:
                return "0"
            return " + ".join(f"{_lit(c)}*{B[k]}" for k, c in sorted(br.items()))
        for i in range(n):
            for j in range(i, n):
                a, b = spec.bracket(i, j), spec.bracket(j, i)
                if i == j:
                    if a:
                        out.append(f"  bracket [{B[i]},{B[i]}] = {value(i, i)};")
                elif a == {k: -c for k, c in b.items()}:
                    if a:
                        out.append(f"  bracket [{B[i]},{B[j]}] = {value(i, j)};")
                else:
                    out.append(f"  bracket [{B[i]},{B[j]}] = {value(i, j)};")
                    out.append(f"  bracket [{B[j]},{B[i]}] = {value(j, i)};")
        entries = []
        t = spec.casimir
        for a in range(n):
            for b in range(a, n):
                if t[a][b] == t[b][a]:
                    if t[a][b]:
                        entries.append(f"({B[a]},{B[b]})={_lit(t[a][b])}")
                else:
                    entries.append(f"({B[a]},{B[b]})={_lit(t[a][b])}")
                    entries.append(f"({B[b]},{B[a]})={_lit(t[b][a])}")
        if entries:
            out.append(f"  casimir {' '.join(entries)};")
        out.append("}")
    for name, (alg, model) in doc.models.items():
        out.append(f"rep {name} of {alg} {{")
        out.append(f"  dim {model.n};")
        for k, m in enumerate(model.rep):
            out.append(f"  matrix {model.spec.basis_names[k]} = {_render_matrix(m)};")
        if any(x is not None for r in model.pattern for x in r):
            out.append(f"  pattern {_render_matrix(model.pattern)};")
        out.append("}")
    for name, (alg, m) in doc.manin_triples.items():
        out.append(f"manin {name} of {alg} {{")
        for part, vecs in (("h", m.h), ("hstar", m.h_star), ("twist", m.twist_f)):
            if vecs is not None:
                out.append(f"  {part} = {SubRef('span', vectors=vecs).render()};")
        out.append("}")
    for name, decl in doc.programs.items():
        if isinstance(decl, BuiltinDecl):
            suffix = f" rep {decl.rep}" if decl.rep else ""
            out.append(f"builtin {name} = {decl.kind}({decl.manin}){suffix};")
            continue
        out.append(f"program {name} over {decl.algebra} rep {decl.rep} {{")
        for lab, s, t in decl.edges:
            out.append(f"  edge {lab}: {s} -> {t};")
        if decl.split is not None:
            minus = f" minus({' '.join(decl.split[1])})" if decl.split[1] else ""
            out.append(f"  split plus({' '.join(decl.split[0])}){minus};")
        for st in decl.steps:
            if st[0] == "fuse":
                out.append(f"  fuse {st[1]} {st[2]} -> {st[3]};")
            elif st[0] == "bar":
                out.append(f"  bar {st[1]};")
            else:
                deg = "" if st[3] is None else f" deg {st[3]}"
                out.append(f"  reduce {'+'.join(st[1])} by {st[2].render()}{deg};")
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# building programs

def _subalgebra(doc: Document, spec: LieAlgebraSpec, ref: SubRef, npoints: int):
    n = spec.dim * npoints
    if ref.kind == "manin":
        return doc.manin_triples[ref.manin][1].sub(ref.part)
    if ref.kind == "all":
        return subspace(spec, [tuple(int(i == j) for j in range(n)) for i in range(n)], "all")
    if ref.kind == "zero":
        return subspace(spec, [], "zero")
    if ref.kind == "diag":
        if npoints != 2:
            return subspace(spec, [tuple(int(k % spec.dim == i) for k in range(n)) for i in range(spec.dim)], "diag")
        return diagonal(spec)
    return subspace(spec, ref.vectors, "span")


def build_program(doc: Document, name: str, degree_bound: int = 2) -> FusionProgram:
    decl = doc.programs[name]
    if isinstance(decl, BuiltinDecl):
        alg, m = doc.manin_triples[decl.manin]
        rep = decl.rep or next(k for k, (a, _) in doc.models.items() if a == alg)
        return replace(builtin_program(decl.kind, m, doc.models[rep][1]), name=name)
    model = doc.models[decl.rep][1]
    vertices = []
    for _, s, t in decl.edges:
        for v in (s, t):
            if v not in vertices:
                vertices.append(v)
    if decl.split is not None:
        vertices += [v for v in decl.split[0] + decl.split[1] if v not in vertices]
    steps = []
    for st in decl.steps:
        if st[0] == "fuse":
            steps.append(Fuse(st[1], st[2], st[3]))
        elif st[0] == "bar":
            steps.append(BarView(st[1]))
        else:
            sub = _subalgebra(doc, model.spec, st[2], len(st[1]))
            sub = replace(sub, name=st[2].render())
            steps.append(Reduce(st[1], sub, degree_bound if st[3] is None else st[3]))
    return FusionProgram(name, model, SkeletonGraph(tuple(vertices), decl.edges), tuple(steps), decl.split)


def parse_poly(text: str) -> PolyFun:
    """Polynomial in generator names x_EDGE_ij, e.g. ``x_a_11*x_a_12 - 1/2 x_a_22^2``."""
    p = _Parser(text)

    def expr():
        acc = term()
        while True:
            if p.accept("+"):
                acc = acc + term()
            elif p.accept("-"):
                acc = acc - term()
            else:
                return acc

    def term():
        acc = factor()
        while p.tok.kind in ("num", "id") or p.peek("*") or p.peek("("):
            p.accept("*")
            acc = acc * factor()
        return acc

    def factor():
        if p.accept("-"):
            return -factor()
        if p.accept("("):
            out = expr()
            p.expect(")")
        elif p.tok.kind == "num":
            out = PolyFun.const(p.rational())
        else:
            t = p.ident()
            try:
                out = PolyFun.var(parse_var(t.text))
            except ValueError as exc:
                p.error(str(exc), t)
        if p.accept("^"):
            out = out ** p.integer()
        return out

    out = expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return out


# ---------------------------------------------------------------------------
# reports

@dataclass
class Record:
    name: str
    status: str
    witness: list[str] = field(default_factory=list)
    detail: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def as_dict(self, timing: bool) -> dict:
        d = {"name": self.name, "status": self.status, "witness": self.witness, "detail": self.detail}
        if timing:
            d["seconds"] = round(self.seconds, 6)
        return d


@dataclass
class Report:
    command: list[str]
    records: list[Record] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.status == "pass" for r in self.records)

    def render(self, fmt: str, timing: bool = False) -> str:
        if fmt == "json":
            return json.dumps({"schema_version": SCHEMA_VERSION, "command": self.command,
                               "ok": self.ok, "records": [r.as_dict(timing) for r in self.records]},
                              indent=2, sort_keys=True) + "\n"
        lines = ["# " + " ".join(self.command)]
        for r in self.records:
            t = f"  ({r.seconds:.3f}s)" if timing else ""
            lines.append(f"{r.status.upper():4}  {r.name}{t}")
            lines += [f"      witness: {w}" for w in r.witness]
            lines += [f"      {d}" for d in r.detail]
        return "\n".join(lines) + "\n"


def _violation_lines(vs: list[Violation]) -> list[str]:
    return [str(v) for v in vs]


def _record(name: str, fn) -> Record:
    t0 = time.perf_counter()
    try:
        witness, detail = fn()
        status = "fail" if witness else "pass"
    except (ProgramError, FunAlgError, NondegeneracyError, ValueError) as exc:
        witness, detail, status = [f"{type(exc).__name__}: {exc}"], [], "fail"
    return Record(name, status, witness, detail, time.perf_counter() - t0)


def _structural(doc: Document, p: FusionProgram, decl) -> list[Record]:
    recs = [_record(f"{p.name}: lie_algebra {p.spec.name}", lambda: (_violation_lines(lie_validate(p.spec)), []))]
    recs.append(_record(f"{p.name}: rep {p.model.name}", lambda: (_violation_lines(p.model.validate()), [])))
    manins = set()
    if isinstance(decl, BuiltinDecl):
        manins.add(decl.manin)
    else:
        manins |= {st[2].manin for st in decl.steps if st[0] == "reduce" and st[2].kind == "manin"}
    for mn in sorted(manins):
        data = doc.manin_triples[mn][1]
        recs.append(_record(f"{p.name}: manin {mn}", lambda data=data: (_violation_lines(manin_validate(data)), [])))
    recs.append(_record(f"{p.name}: program structure", lambda: (_violation_lines(validate_program(p)), [])))
    return recs


def _test_functions(A):
    return generating_invariants(A) if A.reductions else A.generators()


def _table(A) -> list[str]:
    fs = _test_functions(A)
    return [f"{{{f.render()}, {g.render()}}} = {raw_bracket(A, f, g).render()}"
            for f, g in itertools.combinations(fs, 2)]


def _check_suite(doc: Document, p: FusionProgram, decl, order: int, jcache: dict) -> list[Record]:
    recs = _structural(doc, p, decl)
    if any(r.status != "pass" for r in recs):
        return recs
    spec = p.spec
    key = (spec, order)
    if key not in jcache:
        def coherence():
            d = verify_J_coherence(spec, order)
            return ([] if d.is_zero() else [d.render().splitlines()[0]]), []
        jcache[key] = _record(f"{spec.name}: J coherence mod h^{order + 1}", coherence)
        recs.append(jcache[key])
    elif jcache[key].status != "pass":
        recs.append(jcache[key])
    holder = {}

    def do_assemble():
        holder["A"] = assemble(p)
        return [], _table(holder["A"])
    recs.append(_record(f"{p.name}: assemble", do_assemble))
    if "A" not in holder:
        return recs
    A = holder["A"]
    fs = _test_functions(A)

    def qj():
        gs = list(fs)
        if len(gs) < 3:
            gs += [a * b for a, b in itertools.combinations_with_replacement(fs, 2)]
        for f, g, h in itertools.combinations(gs, 3):
            d = quasi_jacobi_defect(A, f, g, h)
            if not d.is_zero():
                return [f"({f.render()}, {g.render()}, {h.render()}): {d.render()}"], []
        return [], [f"{len(gs)} functions"]
    recs.append(_record(f"{p.name}: quasi-Jacobi", qj))

    def do_quantize():
        holder["S"] = quantize_program(p, order)
        return [], []
    recs.append(_record(f"{p.name}: quantize order {order}", do_quantize))
    if "S" not in holder:
        return recs
    S = holder["S"]
    recs.append(_record(f"{p.name}: order-0 product",
                        lambda: ([] if is_undeformed_order0(S) else ["m_(0) is not the plain product"], [])))

    def semi():
        br = semiclassical_limit(S)
        for f, g in itertools.combinations(fs, 2):
            a, b = br(f, g), raw_bracket(A, f, g)
            if a != b:
                return [f"({f.render()}, {g.render()}): {(a - b).render()}"], []
        return [], []
    recs.append(_record(f"{p.name}: semiclassical limit", semi))

    def assoc():
        for f, g, h in itertools.product(fs, repeat=3):
            d = associativity_defect(S, f, g, h)
            for k, x in enumerate(d):
                if not x.is_zero():
                    return [f"({f.render()}, {g.render()}, {h.render()}) at h^{k}: {x.render()}"], []
        return [], [f"{len(fs) ** 3} triples"]
    recs.append(_record(f"{p.name}: associativity mod h^{order + 1}", assoc))
    return recs


class UsageError(ValueError):
    pass


def run(command: str, doc: Document, order: int = 2, degree_bound: int = 2,
        program: str | None = None, args: tuple[str, ...] = ()) -> Report:
    names = [program] if program else list(doc.programs)
    if program and program not in doc.programs:
        raise UsageError(f"no program named {program!r}")
    echo = [command, *args, f"--order={order}", f"--degree-bound={degree_bound}"] + (
        [f"--program={program}"] if program else [])
    rep = Report(echo)
    if command == "validate":
        for nm, spec in doc.lie_algebras.items():
            rep.records.append(_record(f"lie_algebra {nm}", lambda spec=spec: (_violation_lines(lie_validate(spec)), [])))
        for nm, (_, model) in doc.models.items():
            rep.records.append(_record(f"rep {nm}", lambda model=model: (_violation_lines(model.validate()), [])))
        for nm, (_, m) in doc.manin_triples.items():
            rep.records.append(_record(f"manin {nm}", lambda m=m: (_violation_lines(manin_validate(m)), [])))
        for nm in names:
            p = build_program(doc, nm, degree_bound)
            rep.records.append(_record(f"program {nm}", lambda p=p: (_violation_lines(validate_program(p)), [])))
        return rep
    if order < 0:
        raise UsageError("--order must be non-negative")
    if order > 2:
        raise UsageError("orders above 2 need associator coefficients that are not available")
    if command == "assemble":
        for nm in names:
            p = build_program(doc, nm, degree_bound)
            rep.records.append(_record(f"{nm}: assemble", lambda p=p: ([], _table(assemble(p)))))
        return rep
    if command == "bracket":
        if len(names) != 1:
            raise UsageError("bracket needs --program when the file has several programs")
        if len(args) != 2:
            raise UsageError("bracket takes two polynomials")
        f, g = parse_poly(args[0]), parse_poly(args[1])
        p = build_program(doc, names[0], degree_bound)
        rep.records.append(_record(f"{names[0]}: bracket", lambda: (
            [], [f"{{{f.render()}, {g.render()}}} = {bracket_eval(assemble(p), f, g).render()}"])))
        return rep
    if command == "quantize":
        for nm in names:
            p = build_program(doc, nm, degree_bound)
            rep.records.append(_record(f"{nm}: star product order {order}",
                                       lambda p=p: ([], quantize_program(p, order).render().splitlines())))
        return rep
    if command == "check":
        jcache: dict = {}
        for nm in names:
            rep.records += _check_suite(doc, build_program(doc, nm, degree_bound), doc.programs[nm], order, jcache)
        return rep
    raise UsageError(f"unknown command {command!r}")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="qpquant", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["validate", "assemble", "bracket", "quantize", "check"])
    ap.add_argument("file", help="input document, '-' for stdin")
    ap.add_argument("args", nargs="*", help="bracket: the two polynomials F G")
    ap.add_argument("--order", type=int, default=2)
    ap.add_argument("--degree-bound", type=int, default=2)
    ap.add_argument("--format", choices=["text", "json"], default="text")
    ap.add_argument("--program")
    ap.add_argument("--timing", action="store_true", help="include wall-clock seconds per record")
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if ns.file == "-":
            text = sys.stdin.read()
        else:
            with open(ns.file, encoding="utf-8") as fh:
                text = fh.read()
        doc = parse(text)
        report = run(ns.command, doc, ns.order, ns.degree_bound, ns.program, tuple(ns.args))
    except (OSError, ParseError, DocumentError, UsageError, UnsupportedOrderError) as exc:
        print(f"qpquant: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report.render(ns.format, ns.timing))
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
