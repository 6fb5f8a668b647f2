import itertools

import pytest

from qpquant.algebra import make_lie_algebra
from qpquant.funalg import (
    MatrixGroupModel,
    bracket_eval,
    disk_block,
    fuse,
    generating_invariants,
    quasi_jacobi_defect,
    raw_bracket,
    reduce,
    subspace,
    tensor_product,
)
from qpquant.moduli import (
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
    cotangent_manin,
    describe_step,
    diagonal,
    hyperbolic_manin,
    manin_validate,
    validate_program,
)
from qpquant.poly import PolyFun


def single_edge(model, steps=(), split=None):
    return FusionProgram("edge", model, SkeletonGraph(("P", "Q"), (("a", "P", "Q"),)), tuple(steps), split)


def ids(report):
    return {v.identity for v in report}


# ---- validation ------------------------------------------------------------

def test_single_edge_is_valid(gl2_model):
    assert validate_program(single_edge(gl2_model)) == []


def test_self_fusion_is_reported_with_step(gl2_model):
    rep = validate_program(single_edge(gl2_model, [Fuse("P", "P", "R")]))
    assert [(v.identity, v.witness) for v in rep] == [("self_fusion", (0, "P"))]


def test_non_coisotropic_reduce(gl2_model, gl2):
    zero = subspace(gl2, [], "zero")
    rep = validate_program(single_edge(gl2_model, [Fuse("P", "Q", "R"), Reduce(("R",), zero)]))
    assert ids(rep) == {"coisotropy"}
    assert all(v.witness[:2] == (1, "zero") for v in rep)


def test_skeleton_problems(gl2_model):
    sk = SkeletonGraph(("P", "Q", "Z"), (("a", "P", "Q"), ("a", "Q", "Q")))
    rep = validate_program(FusionProgram("bad", gl2_model, sk))
    assert ids(rep) == {"duplicate_edge_label", "isolated_vertex", "loop_edge"}
    assert all(v.witness[0] == -1 for v in rep)


def test_step_problems(gl2_model):
    p = single_edge(gl2_model, [Fuse("P", "X", "R"), BarView("Y")])
    assert ids(validate_program(p)) == {"unknown_point"}
    p = single_edge(gl2_model, [Fuse("P", "Q", "R")], split=(("P",), ("Q",)))
    assert ids(validate_program(p)) == {"fusion_sign_mismatch"}
    p = single_edge(gl2_model, [BarView("Q"), Fuse("P", "Q", "R")], split=(("P",), ("Q",)))
    assert validate_program(p) == []
    p = single_edge(gl2_model, split=(("P",), ("P",)))
    assert ids(validate_program(p)) == {"split_overlap", "split_incomplete"}


def test_invalid_program_is_not_assembled(gl2_model):
    with pytest.raises(ProgramError):
        assemble(single_edge(gl2_model, [Fuse("P", "P", "R")]))


def test_shared_vertices_need_explicit_fusion(gl2_model):
    sk = SkeletonGraph(("P", "Q", "S"), (("a", "P", "Q"), ("b", "Q", "S")))
    with pytest.raises(ProgramError):
        assemble(FusionProgram("v", gl2_model, sk))


# ---- assembly ---------------------------------------------------------------

def test_disk_normalization(gl2_model):
    A = assemble(single_edge(gl2_model))
    assert A.bracket_terms == ()
    assert sorted(A.points) == ["P", "Q"]
    for f, g in itertools.combinations(A.generators(), 2):
        assert bracket_eval(A, f, g).is_zero()


def test_disjoint_additivity(gl2_model):
    sk = SkeletonGraph(("P", "Q", "S", "T"), (("a", "P", "Q"), ("b", "S", "T")))
    A = assemble(FusionProgram("two", gl2_model, sk, (Fuse("S", "T", "U"),)))
    a_gens = [g for g in A.generators() if {v[0] for v in g.variables()} == {"a"}]
    b_gens = [g for g in A.generators() if {v[0] for v in g.variables()} == {"b"}]
    for f in a_gens:
        for g in A.generators():
            assert raw_bracket(A, f, g).is_zero()
    assert any(not raw_bracket(A, f, g).is_zero() for f, g in itertools.combinations(b_gens, 2))


def test_annulus_matches_direct_fusion(gl2_model, annulus_program):
    A = assemble(annulus_program)
    B = fuse(disk_block(gl2_model, "a", "P", "Q"), "P", "Q", "R")
    assert list(A.points) == ["R"]
    assert A.bracket_terms == B.bracket_terms
    assert A.bracket_terms


def test_trace(annulus_program):
    trace = []
    assemble(annulus_program, trace)
    assert [(t.step, t.description, t.points, t.status) for t in trace] == [(0, "fuse P Q -> R", ("R",), "ok")]


def test_describe_step(gl2):
    assert describe_step(Fuse("P", "Q", "R")) == "fuse P Q -> R"
    assert describe_step(Reduce(("A", "B"), diagonal(gl2), 1)) == "reduce A+B by diag deg 1"
    assert describe_step(BarView("P")) == "bar P"


def test_reduction_last_equivalence(cot_manin, cot_model):
    # reduce P (untouched by the fusion) before or after fusing Q and S
    A = tensor_product(disk_block(cot_model, "a", "Q", "P"), disk_block(cot_model, "b", "S", "T"))
    hs = cot_manin.sub("hstar")
    first = fuse(reduce(A, "P", hs, 1), "Q", "S", "X")
    last = reduce(fuse(A, "Q", "S", "X"), "P", hs, 1)
    assert first.bracket_terms == last.bracket_terms
    assert first.invariant_basis == last.invariant_basis
    assert sorted(first.points) == sorted(last.points) == ["T", "X"]


# ---- Manin triples ----------------------------------------------------------

def test_cotangent_manin_is_valid(cot_manin):
    assert manin_validate(cot_manin) == []
    assert manin_validate(cotangent_manin(twist=2)) == []
    assert manin_validate(cotangent_manin(twist=None)) == []


def test_h_equal_hstar_is_not_transverse(cot_manin):
    m = ManinTripleData(cot_manin.d, cot_manin.h, cot_manin.h)
    assert "h_hstar_not_transverse" in ids(manin_validate(m))


def test_twist_meeting_h(cot_manin):
    m = ManinTripleData(cot_manin.d, cot_manin.h, cot_manin.h_star, cot_manin.h)
    assert "twist_meets_h" in ids(manin_validate(m))


def test_hyperbolic_manin_is_valid():
    assert manin_validate(hyperbolic_manin()) == []


def test_non_isotropic_line():
    d = hyperbolic_manin().d
    m = ManinTripleData(d, ((1, 1),), ((0, 1),))
    assert "h_not_isotropic" in ids(manin_validate(m))


def test_singular_casimir():
    d = make_lie_algebra("deg", ["e1", "e2"], {}, {(0, 0): 1})
    with pytest.raises(NondegeneracyError):
        manin_validate(ManinTripleData(d, ((1, 0),), ((0, 1),)))


# ---- builtin programs --------------------------------------------------------

def test_poisson_lie_triangle_schedule(cot_manin, cot_model):
    p = builtin_program("poisson_lie_triangle", cot_manin, cot_model)
    kinds = [type(s).__name__ for s in p.steps]
    assert kinds == ["Reduce", "Reduce", "Fuse", "Reduce"]
    assert [s.subalgebra.name for s in p.steps if isinstance(s, Reduce)] == ["hstar", "h", "hstar"]
    assert validate_program(p) == []


def test_twist_and_alt_schedules(cot_manin, cot_model):
    tw = builtin_program("twist_triangle", cot_manin, cot_model)
    assert tw.steps[-1].subalgebra.name == "twist"
    alt = builtin_program("alt_poisson_lie_triangle", cot_manin, cot_model)
    assert [s.subalgebra.name for s in alt.steps if isinstance(s, Reduce)] == ["hstar", "hstar", "h"]


@pytest.mark.parametrize("name", ["double_square", "heisenberg_square"])
def test_square_final_reduction_is_diagonal(name, cot_manin, cot_model):
    p = builtin_program(name, cot_manin, cot_model)
    last = p.steps[-1]
    assert isinstance(last, Reduce) and len(last.points) == 2
    assert last.subalgebra == diagonal(cot_manin.d)
    assert validate_program(p) == []


def test_unknown_builtin(cot_manin, cot_model, gl2_model):
    with pytest.raises(ProgramError):
        builtin_program("pentagon", cot_manin, cot_model)
    with pytest.raises(ProgramError):
        builtin_program("poisson_lie_triangle", cot_manin, gl2_model)


def test_hyperbolic_triangle_is_commutative():
    m = hyperbolic_manin()
    model = MatrixGroupModel(m.d, (((1, 0), (0, 0)), ((0, 0), (0, 1))), ((None, 0), (0, None)))
    A = assemble(builtin_program("poisson_lie_triangle", m, model))
    gens = generating_invariants(A)
    assert gens
    for f, g in itertools.combinations(gens, 2):
        assert bracket_eval(A, f, g).is_zero()


@pytest.mark.parametrize("name", BUILTIN_PROGRAMS)
def test_builtins_are_quasi_poisson(name, cot_manin, cot_model):
    A = assemble(builtin_program(name, cot_manin, cot_model))
    gens = generating_invariants(A)
    fs = gens + [f * g for f, g in itertools.combinations_with_replacement(gens, 2)] if len(gens) < 3 else gens
    for f, g, h in itertools.combinations(fs, 3):
        assert quasi_jacobi_defect(A, f, g, h).is_zero()
    assert all(isinstance(f, PolyFun) and f.degree() >= 1 for f in gens)
