import pytest

from stablyfree.coeff_ring import (
    CoeffHom,
    CoeffRing,
    CoeffSection,
    InvalidHom,
    InvalidRing,
    NotAUnit,
    ParseError,
    RingMismatch,
    coeff_unit_inverse,
    cyclotomic,
    cyclotomic_identity,
    sigma_identity,
    sigma_polynomial,
)


def test_exponent_reduction(z4):
    x = z4.gen("x")
    assert x**3 * x**2 == x


def test_char_two_square_of_one_plus_x():
    ring = CoeffRing.group_ring((2,), 2)
    a = ring.one + ring.gen("x")
    assert (a * a).is_zero


def test_cyclotomic_relation():
    ring = CoeffRing(("x",), (cyclotomic(4),))
    x = ring.gen("x")
    assert x * x == ring.constant(-1)


def test_ring_mismatch(z4, f3c3):
    with pytest.raises(RingMismatch):
        z4.one + f3c3.one


@pytest.mark.parametrize(
    "d, expected",
    [
        (1, (-1, 1)),
        (4, (1, 0, 1)),
        (9, (1, 0, 0, 1, 0, 0, 1)),
        (25, (1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1)),
    ],
)
def test_cyclotomic(d, expected):
    assert cyclotomic(d) == expected


@pytest.mark.parametrize(
    "p, expected",
    [
        (2, (1,)),
        (3, (2, 0, 0, 1)),
        (5, (4, 0, 0, 0, 0, 3, 0, 0, 0, 0, 2, 0, 0, 0, 0, 1)),
    ],
)
def test_cyclotomic_identity_values(p, expected):
    assert cyclotomic_identity(p) == expected


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_cyclotomic_identity_holds(p):
    q = cyclotomic_identity(p)
    ring = CoeffRing(("x",), ((0,) * (p * p) + (1,),))
    x = ring.gen("x")
    phi = sum((x**k * c for k, c in enumerate(cyclotomic(p * p))), ring.zero)
    quotient = sum((x**k * c for k, c in enumerate(q)), ring.zero)
    assert phi - quotient * (x**p - 1) == ring.constant(p)
    # coefficient pattern (p-1), .., 2, 1 on x^0, x^p, .., x^(p(p-2))
    assert [q[p * j] for j in range(p - 1)] == list(range(p - 1, 0, -1))


def test_cyclotomic_identity_rejects_composite():
    with pytest.raises(ValueError):
        cyclotomic_identity(4)


@pytest.mark.parametrize("n, k", [(4, 2), (12, 4), (12, 3), (2, 1), (9, 3)])
def test_sigma_identity(n, k):
    q = sigma_identity(n, k)
    ring = CoeffRing(("x",), ((0,) * (n + 1) + (1,),))
    x = ring.gen("x")
    sigma = sum((x**e * c for e, c in enumerate(sigma_polynomial(n, k))), ring.zero)
    quotient = sum((x**e * c for e, c in enumerate(q)), ring.zero)
    assert sigma - quotient * (x**k - 1) == ring.constant(n // k)


def test_sigma_polynomial_needs_divisor():
    with pytest.raises(ValueError):
        sigma_polynomial(6, 4)


def test_reduction_homs():
    z2 = CoeffRing.group_ring((2,))
    f2 = CoeffRing.group_ring((2,), 2)
    psi_plus = CoeffHom.from_images(z2, f2)
    assert psi_plus(z2.parse("3 + 2*x")) == f2.one

    gaussian = CoeffRing(("x",), (cyclotomic(4),))
    psi_minus = CoeffHom.from_images(gaussian, f2)
    assert psi_minus(gaussian.gen("x")) == f2.gen("x")


def test_square_b_bottom_kills_x():
    whole = CoeffRing.group_ring((2, 2))
    quotient = CoeffRing.group_ring((2,), 2, names=("y",))
    phi = CoeffHom.from_images(whole, quotient)
    assert phi(whole.gen("x")) == quotient.one
    assert phi(whole.gen("y")) == quotient.gen("y")


def test_hom_must_respect_relations(z4, f3c3):
    with pytest.raises(InvalidHom):
        CoeffHom.from_images(z4, CoeffRing.group_ring((3,)))
    with pytest.raises(InvalidHom):
        CoeffHom.from_images(f3c3, CoeffRing.integers())


def test_unit_inverse_local(f3c3):
    y = f3c3.one - f3c3.gen("x")
    inverse = coeff_unit_inverse(f3c3.one + y)
    assert inverse == f3c3.one - y + y * y
    assert (y**3).is_zero


def test_unit_inverse_rejects_augmentation_zero():
    ring = CoeffRing.group_ring((2,), 2)
    with pytest.raises(NotAUnit):
        coeff_unit_inverse(ring.one - ring.gen("x"))


def test_unit_inverse_monomial(z4):
    assert coeff_unit_inverse(z4.gen("x") ** 3) == z4.gen("x")
    with pytest.raises(NotAUnit):
        coeff_unit_inverse(z4.one + z4.gen("x"))


def test_torsion_monomials(z4):
    assert len(z4.torsion_monomials) == 4
    zeta5 = CoeffRing(("x",), (cyclotomic(5),))
    assert zeta5.parse("-1 - x - x^2 - x^3") in zeta5.torsion_monomials
    assert zeta5.parse("1 + x") not in zeta5.torsion_monomials
    assert CoeffRing.integers().torsion_monomials == {CoeffRing.integers().one}


def test_local_flag_needs_unipotent_relations():
    with pytest.raises(InvalidRing):
        CoeffRing(("x",), (cyclotomic(4),), 3, local=True)


def test_parse_and_print(z4):
    a = z4.parse("1 + 2*x^3 - x")
    assert str(a) == "1 - x + 2*x^3"
    assert z4.parse(str(a)) == a
    with pytest.raises(ParseError):
        z4.parse("1 + q")


def test_from_presentation():
    ring = CoeffRing.from_presentation(["x"], ["x^2 + 1"])
    assert ring.relations == ((1, 0, 1),)
    assert ring.relation_text(0) == "1 + x^2"
    with pytest.raises(ParseError):
        CoeffRing.from_presentation(["x"], ["x/2 + 1"])


def test_section_lifts_canonical_representatives():
    z3 = CoeffRing.group_ring((3,))
    f3 = CoeffRing.group_ring((3,), 3)
    section = CoeffSection(CoeffHom.from_images(z3, f3))
    a = f3.parse("2 + x^2")
    assert section(a) == z3.parse("2 + x^2")
    assert section.hom(section(a)) == a


RINGS = [
    CoeffRing.group_ring((4,)),
    CoeffRing.group_ring((3,), 3),
    CoeffRing.group_ring((2, 2)),
    CoeffRing(("x",), (cyclotomic(9),)),
    CoeffRing.group_ring((5,), 5),
]


@pytest.mark.parametrize("ring", RINGS, ids=str)
def test_ring_axioms(ring, rng):
    for _ in range(100):
        a, b, c = (ring.random_element(rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a
        assert a * ring.one == a
        assert (a - a).is_zero


def test_hom_multiplicative_and_composes(rng):
    z9 = CoeffRing.group_ring((9,))
    z3 = CoeffRing.group_ring((3,))
    f3 = CoeffRing.group_ring((3,), 3)
    outer = CoeffHom.from_images(z3, f3)
    inner = CoeffHom.from_images(z9, z3)
    composite = outer.compose(inner)
    for _ in range(500):
        a, b = z9.random_element(rng), z9.random_element(rng)
        assert inner(a * b) == inner(a) * inner(b)
        assert inner(a + b) == inner(a) + inner(b)
        assert composite(a) == outer(inner(a))


def test_local_units_are_exactly_nonzero_augmentation(f3c3, rng):
    for _ in range(500):
        a = f3c3.random_element(rng)
        if a.augmentation() == 0:
            with pytest.raises(NotAUnit):
                coeff_unit_inverse(a)
        else:
            assert (a * coeff_unit_inverse(a)).is_one
