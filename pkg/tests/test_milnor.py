import pytest

from stablyfree.coeff_ring import CoeffHom, NotAUnit, RingMismatch
from stablyfree.construction import (
    DeltaSpec,
    build_sigma_square,
    build_square_A,
    build_square_B,
    build_unit_lemma_square,
    delta,
)
from stablyfree.group_ring import apply_hom_gr
from stablyfree.milnor import (
    FibreData,
    Incompatible,
    InvalidSubgroup,
    MilnorSquare,
    UnsupportedSubgroup,
    act,
    check_exactness,
    contains,
    glue_rank1,
    pullback,
)


def test_square_a_corners(square_a2):
    corners = square_a2.describe()
    assert corners["whole"] == "Z[x]/(-1 + x^4)"
    assert corners["plus"] == "Z[x]/(-1 + x^2)"
    assert corners["minus"] == "Z[x]/(1 + x^2)"
    assert corners["base"] == "Z/2[x]/(-1 + x^2)"
    assert square_a2.fibre.index == 2


def test_square_b_kills_first_factor():
    square = build_square_B(2)
    assert square.plus.variables == ("y",)
    assert square.minus.relations[0] == (1, 1)
    assert square.pi_plus(square.whole.gen("x")) == square.plus.one


def test_pullback_example(square_a2):
    # x^3 is x modulo x^2 - 1 and -x modulo x^2 + 1
    whole = square_a2.group_ring("whole")
    f = whole.parse("1 + x + x^3")
    a_plus, a_minus = square_a2.project(f)
    assert a_plus == square_a2.group_ring("plus").parse("1 + 2*x")
    assert a_minus == square_a2.group_ring("minus").one
    assert pullback(square_a2, a_plus, a_minus) == f
    assert square_a2.pullback(a_plus, a_minus, alternate=True) == f


def test_pullback_rejects_incompatible_pair(square_a2):
    plus, minus = square_a2.group_ring("plus"), square_a2.group_ring("minus")
    with pytest.raises(Incompatible):
        square_a2.pullback(plus.one, minus.parse("x"))


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("build", [build_square_A, build_square_B], ids=["A", "B"])
def test_exactness_named_squares(build, p, rng):
    report = check_exactness(build(p, 2), 200, rng)
    assert report.ok, report.failures[:3]
    assert report.checked == 400


@pytest.mark.parametrize(
    "orders, subgroup, step",
    [((4,), [[2]], 2), ((2, 2), [[1, 0]], 1), ((12,), [[4]], 4)],
)
def test_exactness_sigma_squares(orders, subgroup, step, rng):
    square = build_sigma_square(orders, subgroup, 2)
    assert square.fibre.step == step
    report = check_exactness(square, 200, rng)
    assert report.ok, report.failures[:3]


def test_exactness_unit_lemma_square(rng):
    square = build_unit_lemma_square(3)
    assert str(square.plus) == "Z" and str(square.base) == "Z/3"
    assert check_exactness(square, 100, rng).ok


def test_sigma_square_normalizes_generators():
    square = build_sigma_square((12,), [[8], [4]], 2)
    assert square.fibre == FibreData("x", 12, 4)
    assert square.name == "sigma(C12)"


def test_sigma_square_rejections():
    with pytest.raises(InvalidSubgroup):
        build_sigma_square((4,), [[0]])
    with pytest.raises(InvalidSubgroup):
        build_sigma_square((4, 2), [[1]])
    with pytest.raises(UnsupportedSubgroup):
        build_sigma_square((2, 2), [[1, 1]])


def test_corrupted_square_is_reported():
    good = build_square_A(3)
    corrupted = MilnorSquare(
        name="corrupted",
        rank=good.rank,
        whole=good.whole,
        plus=good.plus,
        minus=good.minus,
        base=good.base,
        pi_plus=good.pi_plus,
        pi_minus=CoeffHom.from_images(good.whole, good.minus, {"x": "x^2"}),
        psi_plus=good.psi_plus,
        psi_minus=good.psi_minus,
        fibre=good.fibre,
    )
    assert corrupted.commutes_on_generators()
    assert not check_exactness(corrupted, 5).ok


def test_module_membership_is_stable(square_a2, rng):
    base = square_a2.group_ring("base")
    alpha = base.parse("1 + (1 - x)*t")
    module = glue_rank1(square_a2, alpha)
    whole = square_a2.group_ring("whole")
    for _ in range(500):
        pair = module.random_member(rng)
        assert contains(module, pair)
        f = whole.random_element(rng, support=2, word_length=2)
        assert contains(module, act(module, pair, f))


def test_glued_delta_module(square_a2, rng):
    module = glue_rank1(square_a2, delta(DeltaSpec(2, 2, 1)))
    plus, minus = square_a2.group_ring("plus"), square_a2.group_ring("minus")
    whole = square_a2.group_ring("whole")
    assert module.contains((plus.zero, minus.zero))
    assert not module.contains((plus.one, minus.one))
    for _ in range(500):
        first, second = module.random_member(rng), module.random_member(rng)
        assert module.contains((first[0] + second[0], first[1] + second[1]))
        f = whole.random_element(rng, support=2, word_length=2)
        g = whole.random_element(rng, support=2, word_length=2)
        assert module.contains(act(module, first, f))
        assert act(module, act(module, first, f), g) == act(module, first, f * g)
        assert act(module, first, whole.one) == first


def test_free_module_contains_every_projection(square_a2, rng):
    module = glue_rank1(square_a2, square_a2.group_ring("base").one)
    plus, minus = square_a2.group_ring("plus"), square_a2.group_ring("minus")
    assert module.contains((plus.one, minus.one))
    whole = square_a2.group_ring("whole")
    for _ in range(500):
        f = whole.random_element(rng, support=3, word_length=2)
        assert module.contains(square_a2.project(f))


@pytest.mark.parametrize(
    "square",
    [build_square_A(3), build_square_B(3), build_sigma_square((12,), [[4]], 2)],
    ids=["A", "B", "sigma"],
)
def test_square_commutes_on_elements(square, rng):
    whole = square.group_ring("whole")
    for _ in range(500):
        a_plus, a_minus = square.project(whole.random_element(rng, support=3, word_length=2))
        assert apply_hom_gr(square.psi_plus, a_plus) == apply_hom_gr(square.psi_minus, a_minus)


def test_module_rejects_non_member(square_a2):
    module = glue_rank1(square_a2, square_a2.group_ring("base").gen(1))
    plus, minus = square_a2.group_ring("plus"), square_a2.group_ring("minus")
    assert not module.contains((plus.one, minus.one))
    assert module.contains((plus.one, minus.gen(1)))
    with pytest.raises(RingMismatch):
        module.contains((minus.one, minus.one))


def test_glue_needs_unit(square_a2):
    base = square_a2.group_ring("base")
    with pytest.raises(NotAUnit):
        glue_rank1(square_a2, base.parse("1 + x"))
    with pytest.raises(NotAUnit):
        glue_rank1(square_a2, base.gen(1), base.gen(2))
