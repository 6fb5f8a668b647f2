import io
import json
from fractions import Fraction as F
from importlib.resources import files

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpquant.cli import (
    DocumentError,
    ParseError,
    UsageError,
    build_program,
    main,
    parse,
    parse_poly,
    render_document,
    run,
)
from qpquant.moduli import manin_validate
from qpquant.poly import PolyFun

FIX = files("qpquant") / "fixtures"
GL2_TEXT = (FIX / "gl2.qp").read_text()
COT_TEXT = (FIX / "cotangent.qp").read_text()

MINIMAL = """
# one abelian algebra, one edge
lie_algebra u1 { dim 1; basis e; casimir (e,e)=1; }
rep r of u1 { dim 1; matrix e = [[1]]; }
program disk over u1 rep r { edge a: P -> Q; }
"""


def write(tmp_path, text, name="doc.qp"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def x(e, i, j):
    return PolyFun.var((e, i, j))


# ---- parsing ----------------------------------------------------------------

def test_minimal_document():
    doc = parse(MINIMAL)
    assert list(doc.lie_algebras) == ["u1"]
    assert doc.lie_algebras["u1"].casimir == ((F(1),),)
    assert run("validate", doc).ok


def test_defaults_are_zero():
    doc = parse("lie_algebra a2 { dim 2; basis p q; }")
    spec = doc.lie_algebras["a2"]
    assert spec.bracket(0, 1) == {}
    assert spec.casimir == ((0, 0), (0, 0))


def test_bracket_partner_is_filled():
    doc = parse("lie_algebra b { dim 2; basis a b; bracket [a,b] = b; }")
    spec = doc.lie_algebras["b"]
    assert spec.bracket(0, 1) == {1: 1}
    assert spec.bracket(1, 0) == {1: -1}


def test_gl2_fixture_matches_builtin(gl2, gl2_model):
    doc = parse(GL2_TEXT)
    spec = doc.lie_algebras["gl2"]
    assert all(spec.bracket(i, j) == gl2.bracket(i, j) for i in range(4) for j in range(4))
    assert doc.lie_algebras["gl2"].casimir == gl2.casimir
    assert doc.models["std"][1].rep == gl2_model.rep


def test_cotangent_fixture(cot_manin):
    doc = parse(COT_TEXT)
    alg, m = doc.manin_triples["cm"]
    assert manin_validate(m) == []
    assert (m.h, m.h_star) == (cot_manin.h, cot_manin.h_star)


def test_self_fusion_parses_but_fails_validation():
    doc = parse(MINIMAL.replace("edge a: P -> Q; }", "edge a: P -> Q; fuse P P -> R; }"))
    rep = run("validate", doc)
    assert not rep.ok
    assert "self_fusion" in rep.records[-1].witness[0]


@pytest.mark.parametrize("text,line,col", [
    ("lie_algebra g { dim 1; basis e;\n  casimir (e,e)=1.5; }", 2, 18),
    ("lie_algebra g {\n dim 1;\n basis e\n}", 4, 1),
    ("lie_algebra g { dim 1; basis e; }\nrep r of g { dim 1; matrix e = [[1]]; }\n"
     "program p over g rep r { edge a P -> Q; }", 3, 33),
    ("lie_algebra g { dim 1; basis e; } @", 1, 35),
])
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert (err.value.line, err.value.col) == (line, col)
    assert str(err.value).startswith(f"line {line}, column {col}:")


@pytest.mark.parametrize("text,name", [
    ("rep r of nope { dim 1; matrix e = [[1]]; }", "nope"),
    (MINIMAL + "program q over u1 rep missing { edge a: P -> Q; }", "missing"),
    (MINIMAL + "builtin b = poisson_lie_triangle(ghost);", "ghost"),
    ("lie_algebra g { dim 1; basis e; bracket [e,f] = e; }", "f"),
])
def test_unresolved_names(text, name):
    with pytest.raises(DocumentError, match=name):
        parse(text)


def test_duplicate_names():
    with pytest.raises(DocumentError, match="u1"):
        parse(MINIMAL + "lie_algebra u1 { dim 1; basis e; }")


def test_dimension_mismatch():
    with pytest.raises((ParseError, DocumentError)):
        parse("lie_algebra g { dim 2; basis e; }")


# ---- round trip ---------------------------------------------------------------

@pytest.mark.parametrize("text", [MINIMAL, GL2_TEXT, COT_TEXT])
def test_round_trip_fixtures(text):
    doc = parse(text)
    again = parse(render_document(doc))
    assert again == doc
    assert render_document(again) == render_document(doc)


rats = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def documents(draw):
    n = draw(st.integers(1, 3))
    basis = [f"e{i}" for i in range(n)]
    lines = [f"lie_algebra g {{ dim {n}; basis {' '.join(basis)};"]
    for i in range(n):
        for j in range(i + 1, n):
            c = draw(rats)
            if c:
                lines.append(f"bracket [{basis[i]},{basis[j]}] = {c}*{basis[(i + j) % n]};")
    t = [(i, j, draw(rats)) for i in range(n) for j in range(i, n)]
    ent = " ".join(f"({basis[i]},{basis[j]})={c}" for i, j, c in t if c)
    if ent:
        lines.append(f"casimir {ent};")
    lines.append("}")
    m = draw(st.integers(1, 2))
    lines.append(f"rep r of g {{ dim {m};")
    for b in basis:
        rows = ", ".join("[" + ", ".join(str(draw(rats)) for _ in range(m)) + "]" for _ in range(m))
        lines.append(f"matrix {b} = [{rows}];")
    lines.append("}")
    k = draw(st.integers(1, 3))
    lines.append("program p over g rep r {")
    for e in range(k):
        lines.append(f"edge a{e}: P{e} -> Q{e};")
    if k > 1 and draw(st.booleans()):
        lines.append("fuse Q0 P1 -> X;")
    if draw(st.booleans()):
        lines.append("bar P0;")
    if draw(st.booleans()):
        lines.append("reduce Q0 by all deg 1;")
    lines.append("}")
    return "\n".join(lines)


@settings(max_examples=40, deadline=None)
@given(documents())
def test_round_trip_property(text):
    doc = parse(text)
    assert parse(render_document(doc)) == doc


# ---- polynomials ---------------------------------------------------------------

def test_parse_poly():
    assert parse_poly("x_a_11*x_a_12 - 1/2 x_a_22^2") == x("a", 1, 1) * x("a", 1, 2) - x("a", 2, 2) ** 2 * F(1, 2)
    assert parse_poly("-(x_a_11 + 2)x_b_21") == -(x("a", 1, 1) + 2) * x("b", 2, 1)
    assert parse_poly("3") == PolyFun.const(3)
    with pytest.raises(ParseError):
        parse_poly("x_a_11 +")
    with pytest.raises(ParseError):
        parse_poly("y_1")


# ---- commands ------------------------------------------------------------------

def test_check_disk_all_pass():
    rep = run("check", parse(GL2_TEXT), program="disk")
    assert rep.ok
    table = next(r for r in rep.records if r.name == "disk: assemble").detail
    assert table and all(line.endswith("= 0") for line in table)


def test_check_annulus_all_pass():
    rep = run("check", parse(GL2_TEXT), program="annulus")
    assert rep.ok
    names = [r.name for r in rep.records]
    assert "annulus: quasi-Jacobi" in names and "annulus: associativity mod h^3" in names


def test_bracket_command(capsys, tmp_path):
    path = write(tmp_path, GL2_TEXT)
    assert main(["bracket", path, "x_a_11", "x_a_12", "--program", "annulus"]) == 0
    out = capsys.readouterr().out
    assert "= -1/2 x_a_11*x_a_12 + -1/2 x_a_12*x_a_22" in out


def test_bracket_usage():
    doc = parse(GL2_TEXT)
    with pytest.raises(UsageError):
        run("bracket", doc, args=("x_a_11", "x_a_12"))
    with pytest.raises(UsageError):
        run("bracket", doc, program="annulus", args=("x_a_11",))
    with pytest.raises(UsageError):
        run("check", doc, program="nope")


def test_quantize_and_assemble_commands():
    doc = parse(GL2_TEXT)
    q = run("quantize", doc, program="annulus", order=1)
    lines = q.records[0].detail
    assert lines[0] == "h^0 1/1 [1] [1]"
    assert all(line.startswith(("h^0", "h^1")) for line in lines)
    a = run("assemble", doc, program="two_disks")
    assert all(line.endswith("= 0") for line in a.records[0].detail)


def test_builtin_program_from_document(cot_manin):
    doc = parse(COT_TEXT)
    p = build_program(doc, "pl")
    assert p.name == "pl"
    assert [type(s).__name__ for s in p.steps] == ["Reduce", "Reduce", "Fuse", "Reduce"]


def test_exit_codes(tmp_path, capsys):
    good = write(tmp_path, GL2_TEXT)
    assert main(["validate", good]) == 0
    assert main(["check", good, "--order", "3"]) == 2
    assert main(["check", str(tmp_path / "missing.qp")]) == 2
    assert main(["frobnicate", good]) == 2
    bad = write(tmp_path, "lie_algebra g { dim 1 basis e; }", "bad.qp")
    assert main(["validate", bad]) == 2
    assert "line 1, column 23" in capsys.readouterr().err
    selff = write(tmp_path, MINIMAL.replace("edge a: P -> Q; }", "edge a: P -> Q; fuse P P -> R; }"), "s.qp")
    assert main(["validate", selff]) == 1


def test_mutated_casimir_fails_with_witness(tmp_path, capsys):
    text = GL2_TEXT.replace("(E22,E22)=1;", "(E22,E22)=1 (E12,E12)=1;")
    path = write(tmp_path, text)
    assert main(["check", path, "--program", "disk", "--format", "json"]) == 1
    data = json.loads(capsys.readouterr().out)
    assert data["ok"] is False
    failed = [r for r in data["records"] if r["status"] == "fail"]
    assert failed and failed[0]["witness"]
    assert "casimir_invariance" in failed[0]["witness"][0]


def test_json_is_deterministic(tmp_path, capsys):
    path = write(tmp_path, GL2_TEXT)
    outs = []
    for _ in range(2):
        assert main(["check", path, "--format", "json", "--order", "1"]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    data = json.loads(outs[0])
    assert data["schema_version"] == 1
    assert all("seconds" not in r for r in data["records"])


def test_timing_flag(tmp_path, capsys):
    path = write(tmp_path, GL2_TEXT)
    assert main(["validate", path, "--format", "json", "--timing"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert all("seconds" in r for r in data["records"])


def test_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO(MINIMAL))
    assert main(["check", "-"]) == 0
    assert "PASS  disk: assemble" in capsys.readouterr().out
