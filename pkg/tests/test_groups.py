import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhfill.errors import BudgetExceededError, InvalidParameterError, UnsupportedKindError
from rhfill.groups import (
    FiniteCyclicOracle,
    FreeAbelianOracle,
    enumerate_ball,
    format_word,
    make_filling,
    make_oracle,
    make_pair,
    parse_word,
    standard_f2_pair,
)

F2 = standard_f2_pair()
G = F2.group


def words(max_len=6):
    """Strategy producing random elements of F2 as generator index lists."""
    return st.lists(st.integers(0, 3), max_size=max_len)


def as_elem(ixs):
    gens = G.generators()
    g = G.identity()
    for i in ixs:
        g = G.multiply(g, gens[i])
    return g


# --- oracle basics ---------------------------------------------------------

def test_free_reduction():
    free = make_oracle({"kind": "free", "rank": 2})
    a = free.generator("a")
    assert free.is_identity(free.multiply(a, free.inverse(a)))
    w = parse_word(free, "a^2.b^1.b^-1.a^-2")
    assert free.is_identity(w)


def test_finite_cyclic_residues():
    z5 = make_oracle({"kind": "finite-cyclic", "order": 5})
    a = z5.generator("a")
    assert z5.is_identity(z5.power(a, 5))
    assert z5.word_length(z5.power(a, 3)) == 2  # a^3 = a^-2
    assert format_word(z5, z5.power(a, 3)) == "a^-2"


def test_free_product_radius3_ball_is_53():
    # independent oracle: brute-force products of up to three generators
    gens = G.generators()
    brute = {G.identity()}
    layer = {G.identity()}
    for _ in range(3):
        layer = {G.multiply(g, s) for g in layer for s in gens}
        brute |= layer
    ball = enumerate_ball(G, 3)
    assert len(brute) == 53
    assert len(ball) == 53
    assert set(ball) == brute


def test_ball_ordering_and_trivia():
    z = make_oracle({"kind": "free-abelian", "rank": 1})
    ball = enumerate_ball(z, 3)
    assert len(ball) == 7
    assert [z.word_length(g) for g in ball] == sorted(z.word_length(g) for g in ball)
    assert enumerate_ball(G, 0) == [G.identity()]


def test_ball_budget():
    with pytest.raises(BudgetExceededError):
        enumerate_ball(G, 10, cap=100)


def test_make_oracle_errors():
    with pytest.raises(UnsupportedKindError):
        make_oracle({"kind": "braid"})
    with pytest.raises(InvalidParameterError):
        make_oracle({"kind": "finite-cyclic", "order": 0})
    with pytest.raises(UnsupportedKindError):
        make_oracle({"kind": "free-product",
                     "factors": [{"kind": "free", "rank": 2}]})


def test_word_roundtrip():
    for text in ["1", "a^3", "a^3.b^-2", "b^-1.a^1.b^2"]:
        assert format_word(G, parse_word(G, text)) == text


# --- group axioms (property) -----------------------------------------------

@settings(max_examples=300, deadline=None)
@given(words(), words(), words())
def test_associativity_and_inverses(xi, yi, zi):
    x, y, z = as_elem(xi), as_elem(yi), as_elem(zi)
    assert G.multiply(G.multiply(x, y), z) == G.multiply(x, G.multiply(y, z))
    assert G.is_identity(G.multiply(x, G.inverse(x)))
    assert G.multiply(G.identity(), x) == x


@settings(max_examples=300, deadline=None)
@given(words())
def test_word_length_subadditive_on_generators(xi):
    x = as_elem(xi)
    for s in G.generators():
        assert G.word_length(G.multiply(x, s)) <= G.word_length(x) + 1


# --- peripheral structure ---------------------------------------------------

def test_membership_and_coset_keys():
    per_a = F2.peripherals[0]
    assert per_a.membership(parse_word(G, "a^3"))
    assert not per_a.membership(parse_word(G, "b^1"))
    k1 = per_a.coset_key(parse_word(G, "b^1.a^2"))
    k2 = per_a.coset_key(parse_word(G, "b^1.a^5"))
    assert k1 == k2 == parse_word(G, "b^1")
    assert per_a.coset_key(parse_word(G, "b^1")) != per_a.coset_key(parse_word(G, "b^2"))


@settings(max_examples=200, deadline=None)
@given(words(), st.integers(0, 1))
def test_coset_key_iff_same_coset(xi, pid):
    per = F2.peripherals[pid]
    g = as_elem(xi)
    # g and g*p share a key for peripheral p; g and g*(other factor gen) do not
    p = per.embed(per.factor.p_from_exponents([3]))
    assert per.coset_key(G.multiply(g, p)) == per.coset_key(g)
    recomposed = G.multiply(per.coset_key(g), per.embed(per.local(g)))
    assert recomposed == g


def test_peripheral_generation():
    for per in F2.peripherals:
        assert per.generates_check(radius=4)


# --- fillings ----------------------------------------------------------------

def test_filling_z2_coordinate_kill():
    o = make_oracle({"kind": "free-product",
                     "factors": [{"kind": "free-abelian", "rank": 2},
                                 {"kind": "free-abelian", "rank": 1}]})
    pair = make_pair(o)
    fill = make_filling(pair, {"0": [[1, 0]]})
    qf = fill.quotient_group.factors[0]
    assert qf.p_order() is None  # quotient is Z
    # the surviving coordinate is exactly the second one
    img = fill.project(parse_word(o, "a^4.b^7"))
    assert fill.quotient_group.word_length(img) == 7


def test_filling_z2_two_torsion():
    o = make_oracle({"kind": "free-product",
                     "factors": [{"kind": "free-abelian", "rank": 2},
                                 {"kind": "free-abelian", "rank": 1}]})
    pair = make_pair(o)
    fill = make_filling(pair, {"0": [[2, 0], [0, 2]]})
    assert fill.quotient_group.factors[0].p_order() == 4
    assert fill.quotient_group.factors[0].divisors == [2, 2]


def test_filling_cyclic_quotients():
    fill = make_filling(F2, {"0": ["a^5"], "1": ["b^7"]})
    Q = fill.quotient_group
    assert [f.p_order() for f in Q.factors] == [5, 7]
    assert Q.is_identity(fill.project(parse_word(G, "a^5")))
    assert Q.is_identity(fill.project(parse_word(G, "b^7")))
    # Z/5 * Z/7 ball count against direct syllable enumeration:
    # length <= 2 means one syllable of length <= 2 or two of length 1
    assert len(enumerate_ball(Q, 2)) == 1 + 4 + 4 + 8


def test_filling_five_seven_not_injective_on_radius4():
    # a^2 and a^-3 differ in F2 but collide mod a^5, both inside radius 4;
    # injectivity on the radius-R ball genuinely needs n > 2R
    fill = make_filling(F2, {"0": ["a^5"], "1": ["b^7"]})
    x, y = parse_word(G, "a^2"), parse_word(G, "a^-3")
    assert x != y
    assert fill.project(x) == fill.project(y)


@settings(max_examples=150, deadline=None)
@given(words(5), words(5))
def test_projection_homomorphism(xi, yi):
    fill = make_filling(F2, {"0": ["a^5"], "1": ["b^5"]})
    x, y = as_elem(xi), as_elem(yi)
    assert fill.project(G.multiply(x, y)) == \
        fill.quotient_group.multiply(fill.project(x), fill.project(y))


def test_projection_one_lipschitz_on_ball():
    fill = make_filling(F2, {"0": ["a^5"], "1": ["b^5"]})
    Q = fill.quotient_group
    for g in enumerate_ball(G, 4):
        assert Q.word_length(fill.project(g)) <= G.word_length(g)


def test_injectivity_window_rule():
    # kernels {a^n},{b^n}: injective on radius R exactly when n > 2R
    for n, radius, expect in [(11, 5, True), (7, 3, True), (6, 3, False)]:
        fill = make_filling(F2, {"0": [f"a^{n}"], "1": [f"b^{n}"]})
        ball = enumerate_ball(G, radius)
        images = {fill.project(g) for g in ball}
        assert (len(images) == len(ball)) is expect


def test_make_filling_rejects_bad_kernels():
    with pytest.raises(InvalidParameterError):
        make_filling(F2, {"3": ["a^5"]})
    with pytest.raises(InvalidParameterError):
        make_filling(F2, {"0": [[1, 2, 3]]})
    with pytest.raises(InvalidParameterError):
        make_filling(F2, {"0": ["b^5"]})  # b is not a letter of peripheral 0


def test_pair_from_free_oracle():
    free = make_oracle({"kind": "free", "rank": 2})
    pair = make_pair(free, {"cyclic-generators": ["a", "b"]})
    assert len(pair.peripherals) == 2
    assert len(enumerate_ball(pair.group, 3)) == 53
