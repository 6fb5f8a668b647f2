import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpquant.algebra import (
    AlgebraMismatchError,
    EnvElement,
    LieAlgebraSpec,
    MalformedSpecError,
    TensorSeries,
    UniversalMorphism,
    abelian,
    aff1,
    bar,
    casimir_series,
    cotangent_double,
    direct_sum,
    env_mul,
    gl,
    insert_legs,
    leg,
    lie_validate,
    make_lie_algebra,
    pbw_normalize,
    permute_legs,
    render_series,
)

GL2 = gl(2)
E11, E12, E21, E22 = range(4)


def env(spec, d):
    return EnvElement(spec, d)


# ---- lie_validate ---------------------------------------------------------

def test_abelian_identity_casimir_is_valid():
    assert lie_validate(abelian(2)) == []


def test_gl2_trace_form_is_valid():
    assert GL2.basis_names == ("E11", "E12", "E21", "E22")
    assert GL2.bracket(E11, E12) == {E12: 1}
    assert GL2.bracket(E21, E12) == {E22: 1, E11: -1}
    assert lie_validate(GL2) == []


def test_non_invariant_casimir_is_reported_with_witness():
    t = [[0] * 4 for _ in range(4)]
    t[E12][E12] = 1
    bad = LieAlgebraSpec(GL2.basis_names, dict(GL2.structure_constants), tuple(map(tuple, t)), name="bad")
    report = lie_validate(bad)
    assert report
    assert {v.identity for v in report} == {"casimir_invariance"}
    assert ("E11", "E12", "E12") in [v.witness for v in report]


def test_broken_jacobi_and_antisymmetry_are_reported():
    spec = LieAlgebraSpec(("x", "y"), {(0, 1, 1): F(1)}, ((F(0), F(0)), (F(0), F(0))))
    ids = {v.identity for v in lie_validate(spec)}
    assert "antisymmetry" in ids


def test_out_of_range_index_is_malformed():
    spec = LieAlgebraSpec(("x",), {(0, 0, 3): F(1)}, ((F(0),),))
    with pytest.raises(MalformedSpecError):
        lie_validate(spec)


def test_nonsquare_casimir_is_malformed():
    spec = LieAlgebraSpec(("x", "y"), {}, ((F(0), F(0)),))
    with pytest.raises(MalformedSpecError):
        lie_validate(spec)


@pytest.mark.parametrize("spec", [GL2, gl(3), aff1(), cotangent_double(), abelian(3)])
def test_bundled_casimirs_are_invariant(spec):
    n = spec.dim
    t = spec.casimir
    for x, a, b in itertools.product(range(n), repeat=3):
        s = sum(spec.bracket(x, m).get(a, 0) * t[m][b] + spec.bracket(x, m).get(b, 0) * t[a][m]
                for m in range(n))
        assert s == 0


# ---- PBW ------------------------------------------------------------------

def test_pbw_single_letter():
    assert pbw_normalize([0], 1, aff1()) == env(aff1(), {(0,): 1})


def test_pbw_aff1_one_step():
    a = aff1()
    assert pbw_normalize([1, 0], 1, a) == env(a, {(0, 1): 1, (1,): -1})


def test_pbw_gl2_matrix_units():
    assert pbw_normalize([E21, E12], 1, GL2) == env(GL2, {(E12, E21): 1, (E22,): 1, (E11,): -1})


def test_pbw_rejects_bad_index():
    with pytest.raises(MalformedSpecError):
        pbw_normalize([7], 1, GL2)


def test_env_mul_examples():
    a = aff1()
    x = env(a, {(0, 1): 3, (1,): F(1, 2)})
    assert env_mul(EnvElement.one(a), x) == x
    assert env_mul(EnvElement.gen(a, 0), EnvElement.gen(a, 1)) == env(a, {(0, 1): 1})
    # e2 e1 = e1 e2 - e2, so e2 (e1 e2) = e1 e2^2 - e2^2
    assert env_mul(EnvElement.gen(a, 1), env(a, {(0, 1): 1})) == env(a, {(0, 1, 1): 1, (1, 1): -1})


def test_env_mul_mismatched_algebras():
    with pytest.raises(AlgebraMismatchError):
        env_mul(EnvElement.one(GL2), EnvElement.one(aff1()))


def test_env_element_rejects_unsorted_monomial():
    with pytest.raises(ValueError):
        EnvElement(GL2, {(2, 1): 1})


words = st.lists(st.integers(0, 3), max_size=5)


@settings(max_examples=80, deadline=None)
@given(words, st.randoms(use_true_random=False))
def test_pbw_confluence(word, rnd):
    left = pbw_normalize(word, 1, GL2)
    other = pbw_normalize(word, 1, GL2, pick=random.Random(rnd.random()))
    last = pbw_normalize(word, 1, GL2, pick=lambda ds: ds[-1])
    assert left == other == last
    assert all(list(m) == sorted(m) for m in left.terms)


def _random_env(draw_terms):
    out = EnvElement(GL2)
    for word, c in draw_terms:
        out = out + pbw_normalize(word, c, GL2)
    return out


envs = st.lists(st.tuples(st.lists(st.integers(0, 3), max_size=3), st.integers(-2, 2)), max_size=3).map(_random_env)


@settings(max_examples=40, deadline=None)
@given(envs, envs, envs)
def test_env_mul_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


# ---- tensor series --------------------------------------------------------

def test_unit_law_and_truncation():
    t = casimir_series(GL2, 2)
    one4 = TensorSeries.one(GL2, 4, 2)
    j_like = leg(t, 2, 3, m=4).scale(F(1, 2), hbar_shift=1) + one4
    assert one4 * j_like == j_like
    t1 = casimir_series(GL2, 1).scale(1, hbar_shift=1)
    assert (t1 * t1).is_zero()


def test_abelian_square_of_half_t():
    ab = abelian(2)
    t = casimir_series(ab, 2)
    x = TensorSeries.one(ab, 2, 2) + t.scale(F(1, 2), hbar_shift=1)
    expected = TensorSeries.one(ab, 2, 2) + t.scale(1, hbar_shift=1) + (t * t).scale(F(1, 4), hbar_shift=2)
    assert x * x == expected
    # t^2 expanded by hand for t = e1(x)e1 + e2(x)e2
    assert (t * t).terms == {(0, ((0, 0), (0, 0))): 1, (0, ((1, 1), (1, 1))): 1,
                             (0, ((0, 1), (0, 1))): 2}


def test_mismatched_shapes_raise():
    with pytest.raises(AlgebraMismatchError):
        TensorSeries.one(GL2, 2, 2) * TensorSeries.one(GL2, 3, 2)
    with pytest.raises(AlgebraMismatchError):
        TensorSeries.one(GL2, 2, 2) + TensorSeries.one(GL2, 2, 1)


def test_insert_singletons():
    t = casimir_series(GL2, 0)
    t23 = insert_legs(t, [(2,), (3,)], 4)
    assert t23.terms == {(0, ((), (a,), (b,), ())): c for a, b, c in GL2.casimir_terms()}


def test_insert_coproduct_of_primitive():
    x = TensorSeries.from_legs(GL2, 0, [EnvElement.gen(GL2, E12)])
    assert insert_legs(x, [(1, 2)], 2).terms == {(0, ((E12,), ())): 1, (0, ((), (E12,))): 1}


def test_insert_coproduct_on_t():
    t = casimir_series(GL2, 0)
    assert insert_legs(t, [(1, 2), (3,)], 3) == leg(t, 1, 3, m=3) + leg(t, 2, 3, m=3)


def test_insert_errors():
    t = casimir_series(GL2, 0)
    with pytest.raises(ValueError):
        insert_legs(t, [(1, 2), (2,)], 3)
    with pytest.raises(ValueError):
        insert_legs(t, [(1,), (5,)], 3)


def _deg2_series(seed):
    rng = random.Random(seed)
    out = TensorSeries.zero(GL2, 1, 0)
    for _ in range(3):
        w = [rng.randrange(4) for _ in range(rng.randrange(3))]
        out = out + TensorSeries.from_legs(GL2, 0, [pbw_normalize(w, rng.randint(-2, 2), GL2)])
    return out


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_coassociativity(seed):
    x = _deg2_series(seed)
    two = insert_legs(x, [(1, 2)], 2)
    again = insert_legs(two, [(1, 2), (3,)], 3)
    assert again == insert_legs(x, [(1, 2, 3)], 3)
    assert insert_legs(two, [(1,), (2, 3)], 3) == again


def test_coassociativity_on_t():
    t = casimir_series(GL2, 0)
    step = insert_legs(insert_legs(t, [(1, 2), (3,)], 3), [(1, 2), (3,), (4,)], 4)
    assert step == insert_legs(t, [(1, 2, 3), (4,)], 4)


def test_bar_and_direct_sum():
    assert bar(bar(GL2)) == GL2
    ab0 = abelian(2, [[0, 0], [0, 0]])
    assert bar(ab0) == ab0
    assert bar(GL2).casimir[E12][E21] == -1
    s = direct_sum(GL2, GL2)
    assert s.dim == 8
    assert all(not s.bracket(i, j + 4) for i in range(4) for j in range(4))
    assert lie_validate(s) == []


def test_render_series_format():
    ab = abelian(1, [[1]])
    x = TensorSeries.one(ab, 2, 1) + casimir_series(ab, 1).scale(F(1, 2), hbar_shift=1)
    assert render_series(x) == "h^0 1/1 [1 (x) 1]\nh^1 1/2 [e1 (x) e1]"


def test_make_lie_algebra_fills_partners():
    spec = make_lie_algebra("t", ["x", "y"], {(0, 1): {1: 1}}, {(0, 1): 1})
    assert spec.bracket(1, 0) == {1: -1}
    assert spec.casimir == ((0, 1), (1, 0))


def _rand_morphism(seed):
    rng = random.Random(seed)
    perm = list(range(3))
    rng.shuffle(perm)
    x = TensorSeries.one(GL2, 3, 1)
    for _ in range(2):
        legs = [EnvElement.gen(GL2, rng.randrange(4)) if rng.random() < 0.5 else EnvElement.one(GL2)
                for _ in range(3)]
        x = x + TensorSeries.from_legs(GL2, 1, legs, power=rng.randint(0, 1), coeff=rng.randint(-2, 2))
    return UniversalMorphism(tuple(perm), x)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_morphism_composition_associative(s1, s2, s3):
    a, b, c = _rand_morphism(s1), _rand_morphism(s2), _rand_morphism(s3)
    left, right = a.then(b).then(c), a.then(b.then(c))
    assert left.permutation == right.permutation
    assert left.element == right.element


def test_permute_legs_moves_leg_i_to_perm_i():
    x = TensorSeries.from_legs(GL2, 0, [EnvElement.gen(GL2, 0), EnvElement.gen(GL2, 1), EnvElement.one(GL2)])
    y = permute_legs(x, [2, 0, 1])
    assert y.terms == {(0, ((1,), (), (0,))): 1}
