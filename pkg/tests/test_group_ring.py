import pytest

from stablyfree.coeff_ring import CoeffHom, CoeffRing, InvalidRing, NotAUnit, cyclotomic
from stablyfree.construction import DeltaSpec, delta
from stablyfree.free_group import Word
from stablyfree.group_ring import (
    GroupRing,
    InverseFailed,
    apply_hom_gr,
    augmentation,
    gr_inverse_unipotent,
    gr_unit_inverse,
    y_adic_expand,
)


def test_words_do_not_commute(integers_f2):
    s, t = integers_f2.gen(1), integers_f2.gen(2)
    assert s * t != t * s
    assert (s * integers_f2.gen(1, -1)).is_one


def test_coefficients_commute_with_words(f3f2):
    x = f3f2.scalar(f3f2.coefficients.gen("x"))
    t = f3f2.gen(2)
    assert x * t == t * x


def test_parse_and_format(f2f2):
    a = f2f2.parse("1 + (1-x)*t")
    assert a == f2f2.one + f2f2.gen(2) * (f2f2.coefficients.one - f2f2.coefficients.gen("x"))
    assert a.format() == "1 + (1 + x)*t"
    assert f2f2.parse(a.format()) == a
    b = f2f2.parse("(1 + (1-x)*t) * s^2")
    assert b == a * f2f2.gen(1, 2)


def test_format_grouped(f2f2, f3f2, integers_f2):
    assert delta(DeltaSpec(2, 2, 1)).format_grouped() == "1 + (1 + x)*(t + s*t*s^-1)"
    a = f3f2.parse("1 - s - t + x*s^2")
    assert a.format_grouped() == "1 + 2*(s + t) + x*s^2"
    b = integers_f2.parse("s - t - t^2")
    assert b.format_grouped() == "s - (t + t^2)"
    for ring, value in [(f2f2, delta(DeltaSpec(2, 2, 1))), (f3f2, a), (integers_f2, b)]:
        assert ring.parse(value.format_grouped()) == value
    assert f2f2.zero.format_grouped() == "0"


def test_coefficient_names_cannot_shadow_generators():
    with pytest.raises(InvalidRing):
        GroupRing(CoeffRing.group_ring((2,), names=("s",)), 2)


def test_augmentation(f2f2):
    coefficients = f2f2.coefficients
    y = coefficients.one - coefficients.gen("x")
    assert augmentation(f2f2.one + f2f2.gen(2) * y) == coefficients.one + y
    assert augmentation(f2f2.scalar(y)) == y
    assert augmentation(f2f2.parse("t - s*t*s^-1")).is_zero


def test_apply_hom_gr():
    z2 = GroupRing(CoeffRing.group_ring((2,)), 2)
    f2 = CoeffRing.group_ring((2,), 2)
    psi_plus = CoeffHom.from_images(z2.coefficients, f2)
    image = apply_hom_gr(psi_plus, z2.parse("(3 + 2*x)*s"))
    assert image == GroupRing(f2, 2).gen(1)

    gaussian = GroupRing(CoeffRing(("x",), (cyclotomic(4),)), 2)
    psi_minus = CoeffHom.from_images(gaussian.coefficients, f2)
    assert apply_hom_gr(psi_minus, gaussian.parse("x*t")) == GroupRing(f2, 2).parse("x*t")


def test_apply_hom_gr_is_multiplicative(rng):
    z3 = GroupRing(CoeffRing.group_ring((3,)), 2)
    f3 = CoeffRing.group_ring((3,), 3)
    h = CoeffHom.from_images(z3.coefficients, f3)
    for _ in range(100):
        a, b = z3.random_element(rng), z3.random_element(rng)
        assert apply_hom_gr(h, a * b) == apply_hom_gr(h, a) * apply_hom_gr(h, b)
        assert apply_hom_gr(h, a + b) == apply_hom_gr(h, a) + apply_hom_gr(h, b)


def test_unipotent_inverse(f3f2):
    spec = DeltaSpec(3, 2, 1)
    alpha = spec.alpha()
    inverse = gr_inverse_unipotent(alpha)
    assert (alpha * inverse).is_one and (inverse * alpha).is_one
    with pytest.raises(InverseFailed):
        gr_inverse_unipotent(f3f2.gen(1) + f3f2.one)


def test_unipotent_inverse_needs_local_coefficients(integers_f2):
    with pytest.raises(InverseFailed):
        gr_inverse_unipotent(integers_f2.one + integers_f2.gen(2))


def test_unit_inverse(f3f2, integers_f2):
    a = f3f2.parse("2*x*s*t")
    assert (a * gr_unit_inverse(a)).is_one
    b = f3f2.parse("(1 + x)*s + (1 - x)*t")
    assert (b * gr_unit_inverse(b)).is_one
    with pytest.raises(NotAUnit):
        gr_unit_inverse(integers_f2.parse("1 + s"))


def test_y_adic_of_x():
    ring = GroupRing(CoeffRing.group_ring((2,), 2), 2)
    expansion = y_adic_expand(ring.scalar(ring.coefficients.gen("x")))
    prime_field = GroupRing(CoeffRing.integers(2), 2)
    assert expansion.layers == (prime_field.one, prime_field.one)


def test_y_adic_of_delta_one():
    expansion = y_adic_expand(delta(DeltaSpec(2, 2, 1)))
    prime_field = GroupRing(CoeffRing.integers(2), 2)
    assert expansion.layer(0).is_one
    assert expansion.layer(1) == prime_field.parse("t + s*t*s^-1")


@pytest.mark.parametrize("p", [2, 3, 5])
def test_y_adic_round_trip(p, rng):
    ring = GroupRing(CoeffRing.group_ring((p,), p), 2)
    for _ in range(500 // 3 + 1):
        a = ring.random_element(rng, support=4, word_length=3)
        assert y_adic_expand(a).reconstruct(ring) == a


@pytest.mark.parametrize("p", [2, 3])
def test_ring_axioms(p, rng):
    ring = GroupRing(CoeffRing.group_ring((p,), p), 2)
    for _ in range(250):
        a, b, c = (ring.random_element(rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a + b) * c == a * c + b * c
        assert a * ring.one == a == ring.one * a
        assert (a - a).is_zero


def test_shortlex_term_order(integers_f2):
    a = integers_f2.parse("t + s + 1")
    assert a.support == (Word(), Word.generator(1), Word.generator(2))
