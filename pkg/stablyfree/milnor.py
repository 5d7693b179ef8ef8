"""
Milnor squares of the shape

    Z[G]        --pi_plus-->   Z[G/H]
     | pi_minus                  | psi_plus
    Z[G]/(Sigma_H) --psi_minus--> (Z/N)[G/H]

tensored with Z[F_m], for H = <x^k> inside one cyclic coordinate x of order n = N * k.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property

from stablyfree.coeff_ring import (
    CoeffElem,
    CoeffHom,
    CoeffRing,
    CoeffSection,
    InvalidHom,
    NotAUnit,
    RingMismatch,
    Terms,
    binomial_relation,
    default_names,
    monic_divmod,
    sigma_identity,
    sigma_polynomial,
)
from stablyfree.group_ring import (
    GrElem,
    GroupRing,
    apply_hom_gr,
    gr_unit_inverse,
)
from stablyfree.utils import AlgebraError, logger


class Incompatible(AlgebraError):
    pass


class InvalidSubgroup(AlgebraError):
    pass


class UnsupportedSubgroup(AlgebraError):
    pass


def _embed(a: CoeffElem, ring: CoeffRing) -> CoeffElem:
    """Same-named monomials in another ring; variables missing from a's ring get exponent 0."""
    positions = [ring.variables.index(name) for name in a.ring.variables]
    terms: Terms = {}
    for exponent, c in a.terms:
        e = [0] * len(ring.variables)
        for position, k in zip(positions, exponent):
            e[position] = k
        terms[tuple(e)] = terms.get(tuple(e), 0) + c
    return ring.element(terms)


@dataclass(frozen=True)
class FibreData:
    """H = <variable^step> inside a cyclic coordinate of the given order."""

    variable: str
    order: int
    step: int

    def __post_init__(self):
        if self.step < 1 or self.order % self.step or self.step == self.order:
            raise InvalidSubgroup(
                f"<{self.variable}^{self.step}> is not a nontrivial subgroup of C_{self.order}"
            )

    @property
    def index(self) -> int:
        """N = |H|."""
        return self.order // self.step

    @cached_property
    def quotient(self) -> tuple[int, ...]:
        return sigma_identity(self.order, self.step)


@dataclass(frozen=True)
class MilnorSquare:
    name: str
    rank: int
    whole: CoeffRing
    plus: CoeffRing
    minus: CoeffRing
    base: CoeffRing
    pi_plus: CoeffHom
    pi_minus: CoeffHom
    psi_plus: CoeffHom
    psi_minus: CoeffHom
    fibre: FibreData
    orders: tuple[int, ...] = field(default=())

    def __post_init__(self):
        pairs = (
            (self.pi_plus, self.whole, self.plus),
            (self.pi_minus, self.whole, self.minus),
            (self.psi_plus, self.plus, self.base),
            (self.psi_minus, self.minus, self.base),
        )
        for hom, source, target in pairs:
            if hom.source != source or hom.target != target:
                raise InvalidHom(f"Hom {hom.source} -> {hom.target} is not an edge of the square")

    @classmethod
    def from_fibre(
        cls,
        name: str,
        orders: tuple[int, ...],
        coordinate: int,
        step: int,
        rank: int,
    ) -> "MilnorSquare":
        """
        The Sigma_H square of C_{orders[0]} x .. with H = <x^step> in coordinate ``coordinate``.
        """
        names = default_names(len(orders))
        n = orders[coordinate]
        fibre = FibreData(names[coordinate], n, step)
        whole = CoeffRing.group_ring(orders, names=names)
        quotient_orders = list(orders)
        quotient_names = list(names)
        if step == 1:
            del quotient_orders[coordinate]
            del quotient_names[coordinate]
        else:
            quotient_orders[coordinate] = step
        plus = CoeffRing.group_ring(tuple(quotient_orders), names=tuple(quotient_names))
        base = CoeffRing.group_ring(
            tuple(quotient_orders), fibre.index, names=tuple(quotient_names)
        )
        relations = [binomial_relation(k) for k in orders]
        relations[coordinate] = sigma_polynomial(n, step)
        minus = CoeffRing(names, tuple(relations))
        square = cls(
            name=name,
            rank=rank,
            whole=whole,
            plus=plus,
            minus=minus,
            base=base,
            pi_plus=CoeffHom.from_images(whole, plus),
            pi_minus=CoeffHom.from_images(whole, minus),
            psi_plus=CoeffHom.from_images(plus, base),
            psi_minus=CoeffHom.from_images(minus, base),
            fibre=fibre,
            orders=tuple(orders),
        )
        square.validate()
        logger.info("Built square %s: %s", name, square.describe())
        return square

    @cached_property
    def section(self) -> CoeffSection:
        return CoeffSection(self.psi_plus)

    @cached_property
    def minus_section(self) -> CoeffSection:
        return CoeffSection(self.psi_minus)

    def group_ring(self, corner: str) -> GroupRing:
        return GroupRing(getattr(self, corner), self.rank)

    @cached_property
    def sigma(self) -> CoeffElem:
        """Sigma_H as an element of the top corner."""
        x = self.whole.gen(self.fibre.variable)
        return sum(
            (x ** (j * self.fibre.step) for j in range(self.fibre.index)), self.whole.zero
        )

    def commutes_on_generators(self) -> list[str]:
        failures = []
        for name in self.whole.variables:
            g = self.whole.gen(name)
            left = self.psi_plus(self.pi_plus(g))
            right = self.psi_minus(self.pi_minus(g))
            if left != right:
                failures.append(f"psi_plus(pi_plus({name})) = {left} but psi_minus(pi_minus({name})) = {right}")
        return failures

    def validate(self, rng: random.Random | None = None, samples: int = 20):
        """
        :raises InvalidHom: if the square does not commute or the section of psi_plus fails.
        """
        failures = self.commutes_on_generators()
        if failures:
            raise InvalidHom("; ".join(failures))
        rng = rng or random.Random(0)
        section = self.section
        for _ in range(samples):
            c = self.base.random_element(rng)
            if self.psi_plus(section(c)) != c:
                raise InvalidHom(f"Section of psi_plus does not lift {c}")

    def describe(self) -> dict[str, str]:
        return {
            "whole": str(self.whole),
            "plus": str(self.plus),
            "minus": str(self.minus),
            "base": str(self.base),
        }

    def pullback_coeff(self, a_plus: CoeffElem, a_minus: CoeffElem) -> CoeffElem:
        """
        The unique f with pi_plus(f) = a_plus and pi_minus(f) = a_minus.

        f = a_minus~ + Sigma_H * g with N * g = a_plus - pi_plus(a_minus~).

        :raises Incompatible: if the images in the bottom corner differ.
        """
        self._check_compatible(a_plus, a_minus)
        lifted = _embed(a_minus, self.whole)
        difference = a_plus - self.pi_plus(lifted)
        quotient = self._divide_by_index(difference.mapping)
        return lifted + self.sigma * _embed(self.plus.element(quotient), self.whole)

    def pullback_coeff_alternate(self, a_plus: CoeffElem, a_minus: CoeffElem) -> CoeffElem:
        """
        Second reconstruction, f = a_plus~ + (x^k - 1) * (g2 - q * g1) where
        a_minus - pi_minus(a_plus~) = (x^k - 1) * g2 + N * g1 and Sigma_H - q * (x^k - 1) = N.
        """
        self._check_compatible(a_plus, a_minus)
        fibre = self.fibre
        index = self.whole.variables.index(fibre.variable)
        lifted = _embed(a_plus, self.whole)
        error = _embed(a_minus - self.pi_minus(lifted), self.whole)
        g2, rest = monic_divmod(error.mapping, index, binomial_relation(fibre.step))
        g1 = self._divide_by_index(rest)
        x = self.whole.gen(fibre.variable)
        q = sum(
            (x**e * c for e, c in enumerate(fibre.quotient)), self.whole.zero
        )
        correction = self.whole.element(g2) - q * self.whole.element(g1)
        return lifted + (x**fibre.step - 1) * correction

    def _check_compatible(self, a_plus: CoeffElem, a_minus: CoeffElem):
        if a_plus.ring != self.plus or a_minus.ring != self.minus:
            raise RingMismatch("Pair is not in the side corners of the square")
        left, right = self.psi_plus(a_plus), self.psi_minus(a_minus)
        if left != right:
            raise Incompatible(f"Images {left} and {right} differ in {self.base}")

    def _divide_by_index(self, terms: Terms) -> Terms:
        n = self.fibre.index
        if any(c % n for c in terms.values()):
            raise Incompatible(f"{terms} is not divisible by {n}")
        return {e: c // n for e, c in terms.items()}

    def pullback(self, a_plus: GrElem, a_minus: GrElem, alternate: bool = False) -> GrElem:
        """Word-wise pullback of group-ring elements."""
        solve = self.pullback_coeff_alternate if alternate else self.pullback_coeff
        words = set(a_plus.support) | set(a_minus.support)
        whole = self.group_ring("whole")
        return whole.element(
            {w: solve(a_plus.coefficient(w), a_minus.coefficient(w)) for w in words}
        )

    def project(self, f: GrElem) -> tuple[GrElem, GrElem]:
        return apply_hom_gr(self.pi_plus, f), apply_hom_gr(self.pi_minus, f)


def pullback(square: MilnorSquare, a_plus: GrElem, a_minus: GrElem) -> GrElem:
    return square.pullback(a_plus, a_minus)


@dataclass
class ExactnessReport:
    square: str
    samples: int
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _compatible_pair(
    square: MilnorSquare, rng: random.Random
) -> tuple[GrElem, GrElem]:
    """A random a_minus and an a_plus over it that is not built from a common preimage."""
    minus, plus = square.group_ring("minus"), square.group_ring("plus")
    a_minus = minus.random_element(rng, support=3, word_length=2)
    image = apply_hom_gr(square.psi_minus, a_minus)
    noise = plus.random_element(rng, support=2, word_length=2)
    n = square.fibre.index
    a_plus = plus.element(
        {w: square.section(image.coefficient(w)) for w in image.support}
    ) + noise * n
    return a_plus, a_minus


def check_exactness(
    square: MilnorSquare, samples: int = 200, rng: random.Random | None = None
) -> ExactnessReport:
    """
    Samples compatible pairs and checks that both reconstructions agree and project back,
    and that random elements of the top corner commute around the square and round-trip.
    """
    rng = rng or random.Random(0)
    report = ExactnessReport(square.name, samples)
    report.failures.extend(square.commutes_on_generators())
    whole = square.group_ring("whole")
    for i in range(samples):
        f = whole.random_element(rng, support=3, word_length=2)
        a_plus, a_minus = square.project(f)
        if apply_hom_gr(square.psi_plus, a_plus) != apply_hom_gr(square.psi_minus, a_minus):
            report.failures.append(f"sample {i}: square does not commute on {f}")
        pairs = [("round trip", a_plus, a_minus, f)]
        try:
            pairs.append(("pair", *_compatible_pair(square, rng), None))
        except AlgebraError as exc:
            report.failures.append(f"sample {i}: cannot build compatible pair: {exc}")
        for label, u, v, expected in pairs:
            try:
                first = square.pullback(u, v)
                second = square.pullback(u, v, alternate=True)
            except AlgebraError as exc:
                report.failures.append(f"sample {i} ({label}): {exc}")
                continue
            report.checked += 1
            if first != second:
                report.failures.append(f"sample {i} ({label}): reconstructions {first} and {second} differ")
            elif square.project(first) != (u, v):
                report.failures.append(f"sample {i} ({label}): {first} does not project to the pair")
            elif expected is not None and first != expected:
                report.failures.append(f"sample {i} ({label}): {first} is not {expected}")
    logger.info(
        "Exactness of %s: %d reconstructions, %d failures",
        square.name,
        report.checked,
        len(report.failures),
    )
    return report


ModulePair = tuple[GrElem, GrElem]


@dataclass(frozen=True)
class Rank1Module:
    """{(u, v) in A_plus x A_minus : alpha * psi_plus(u) = psi_minus(v)}."""

    square: MilnorSquare
    alpha: GrElem
    alpha_inv: GrElem

    def contains(self, pair: ModulePair) -> bool:
        u, v = pair
        if u.ring != self.square.group_ring("plus") or v.ring != self.square.group_ring("minus"):
            raise RingMismatch("Pair is not in the side corners of the square")
        return self.alpha * apply_hom_gr(self.square.psi_plus, u) == apply_hom_gr(
            self.square.psi_minus, v
        )

    def act(self, pair: ModulePair, f: GrElem) -> ModulePair:
        """(u, v) . f = (u * pi_plus(f), v * pi_minus(f))."""
        if f.ring != self.square.group_ring("whole"):
            raise RingMismatch(f"{f} is not in the top corner")
        u, v = pair
        plus, minus = self.square.project(f)
        return u * plus, v * minus

    def member_over(self, u: GrElem) -> ModulePair:
        """(u, v) with v the name-preserving lift of alpha * psi_plus(u) through psi_minus."""
        target = self.alpha * apply_hom_gr(self.square.psi_plus, u)
        section = self.square.minus_section
        minus = self.square.group_ring("minus")
        pair = u, minus.element({w: section(c) for w, c in target.terms})
        if not self.contains(pair):
            raise Incompatible(f"{target} has no name-preserving preimage under psi_minus")
        return pair

    def random_member(self, rng: random.Random) -> ModulePair:
        plus = self.square.group_ring("plus")
        return self.member_over(plus.random_element(rng, support=2, word_length=2))


def glue_rank1(
    square: MilnorSquare, alpha: GrElem, alpha_inv: GrElem | None = None
) -> Rank1Module:
    """
    :raises NotAUnit: if alpha is not a recognized unit or the witness is not its inverse.
    """
    if alpha.ring != square.group_ring("base"):
        raise RingMismatch(f"{alpha} is not in the bottom corner")
    if alpha_inv is None:
        alpha_inv = gr_unit_inverse(alpha)
    if not ((alpha * alpha_inv).is_one and (alpha_inv * alpha).is_one):
        raise NotAUnit(f"{alpha_inv} is not an inverse of {alpha}")
    return Rank1Module(square, alpha, alpha_inv)


def contains(module: Rank1Module, pair: ModulePair) -> bool:
    return module.contains(pair)


def act(module: Rank1Module, pair: ModulePair, f: GrElem) -> ModulePair:
    return module.act(pair, f)


@dataclass(frozen=True)
class CosetClass:
    """
    The double coset psi_minus(A_minus^*) alpha psi_plus(A_plus^*), with the delta index the
    representative came from when there is one.
    """

    square: MilnorSquare
    representative: GrElem
    delta_index: int | None = None
