"""
Sparse arithmetic in R[F_m], R a CoeffRing. The finite abelian part of G x F_m lives in R,
so coefficients commute with words.
"""

from __future__ import annotations

import math
import random
from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property
from tokenize import TokenError

import sympy
from sympy.parsing.sympy_parser import parse_expr

from stablyfree.coeff_ring import (
    TRANSFORMATIONS,
    CoeffElem,
    CoeffHom,
    CoeffRing,
    InvalidRing,
    NotAUnit,
    ParseError,
    RingMismatch,
    Terms,
    coeff_unit_inverse,
)
from stablyfree.free_group import (
    ALIASES,
    Word,
    format_word,
    generator_index,
    random_word,
)
from stablyfree.utils import AlgebraError


class InverseFailed(AlgebraError):
    pass


@dataclass(frozen=True)
class GroupRing:
    coefficients: CoeffRing
    rank: int

    def __post_init__(self):
        if self.rank < 0:
            raise InvalidRing("Rank of the free group must be non-negative")
        clash = set(self.coefficients.variables) & set(self.word_symbols)
        if clash:
            raise InvalidRing(f"Coefficient variables {sorted(clash)} shadow generators")

    @cached_property
    def word_symbols(self) -> dict[str, sympy.Symbol]:
        names = [f"g{i}" for i in range(1, self.rank + 1)]
        names += [alias for alias, index in ALIASES.items() if index <= self.rank]
        return {name: sympy.Symbol(name, commutative=False) for name in names}

    def element(self, terms: Mapping[Word, "CoeffElem | int"]) -> "GrElem":
        coefficients = self.coefficients
        kept = []
        for word, c in terms.items():
            if isinstance(c, int):
                c = coefficients.constant(c)
            elif c.ring != coefficients:
                raise RingMismatch(f"{c} is not in {coefficients}")
            if word.rank_needed > self.rank:
                raise RingMismatch(f"Word {word} is not in F_{self.rank}")
            if not c.is_zero:
                kept.append((word, c))
        kept.sort(key=lambda item: item[0].sort_key())
        return GrElem(self, tuple(kept))

    def _from_raw(self, raw: dict[Word, Terms]) -> "GrElem":
        coefficients = self.coefficients
        return self.element({w: coefficients.element(t) for w, t in raw.items()})

    @cached_property
    def zero(self) -> "GrElem":
        return GrElem(self, ())

    @cached_property
    def one(self) -> "GrElem":
        return self.element({Word(): 1})

    def word(self, w: Word, coeff: "CoeffElem | int" = 1) -> "GrElem":
        return self.element({w: coeff})

    def gen(self, index: int, power: int = 1) -> "GrElem":
        return self.word(Word.generator(index, power))

    def scalar(self, c: "CoeffElem | int") -> "GrElem":
        return self.element({Word(): c})

    def parse(self, text: str) -> "GrElem":
        symbols = {n: sympy.Symbol(n) for n in self.coefficients.variables}
        symbols.update(self.word_symbols)
        try:
            expr = sympy.expand(
                parse_expr(text, local_dict=symbols, transformations=TRANSFORMATIONS)
            )
        except (SyntaxError, TokenError, TypeError, sympy.SympifyError) as exc:
            raise ParseError(f"Cannot parse {text!r}: {exc}") from exc
        raw: dict[Word, CoeffElem] = {}
        for term in sympy.Add.make_args(expr):
            commutative, noncommutative = term.args_cnc()
            coeff = self.coefficients.from_sympy(sympy.Mul(*commutative))
            word = Word()
            for factor in noncommutative:
                word = word * self._word_from_sympy(factor)
            raw[word] = raw.get(word, self.coefficients.zero) + coeff
        return self.element(raw)

    def _word_from_sympy(self, factor: sympy.Expr) -> Word:
        if isinstance(factor, sympy.Symbol):
            return Word.generator(generator_index(factor.name, self.rank))
        if isinstance(factor, sympy.Pow) and factor.exp.is_Integer:
            return self._word_from_sympy(factor.base) ** int(factor.exp)
        if isinstance(factor, sympy.Mul) and not factor.is_commutative:
            word = Word()
            for arg in factor.args:
                word = word * self._word_from_sympy(arg)
            return word
        raise ParseError(f"{factor} is not a free-group word")

    def random_element(
        self,
        rng: random.Random,
        support: int = 3,
        word_length: int = 3,
        height: int = 3,
    ) -> "GrElem":
        raw: dict[Word, CoeffElem] = {}
        for _ in range(rng.randint(0, support)):
            word = random_word(rng, self.rank, word_length)
            raw[word] = self.coefficients.random_element(rng, height)
        return self.element(raw)

    def __str__(self) -> str:
        return f"{self.coefficients}[F_{self.rank}]"


@dataclass(frozen=True)
class GrElem:
    ring: GroupRing
    terms: tuple[tuple[Word, CoeffElem], ...]

    def _coerce(self, other: "GrElem | CoeffElem | int") -> "GrElem":
        if isinstance(other, GrElem):
            if other.ring is not self.ring and other.ring != self.ring:
                raise RingMismatch(f"{other.ring} differs from {self.ring}")
            return other
        return self.ring.scalar(other)

    def __add__(self, other: "GrElem | CoeffElem | int") -> "GrElem":
        other = self._coerce(other)
        total = dict(self.terms)
        for word, c in other.terms:
            total[word] = total[word] + c if word in total else c
        return self.ring.element(total)

    __radd__ = __add__

    def __neg__(self) -> "GrElem":
        return GrElem(self.ring, tuple((w, -c) for w, c in self.terms))

    def __sub__(self, other: "GrElem | CoeffElem | int") -> "GrElem":
        return self + (-self._coerce(other))

    def __rsub__(self, other: "CoeffElem | int") -> "GrElem":
        return self._coerce(other) - self

    def __mul__(self, other: "GrElem | CoeffElem | int") -> "GrElem":
        if not isinstance(other, GrElem):
            return self.ring.element({w: c * other for w, c in self.terms})
        other = self._coerce(other)
        raw: dict[Word, Terms] = {}
        for u, a in self.terms:
            for v, b in other.terms:
                slot = raw.setdefault(u * v, {})
                for e, c in (a * b).terms:
                    slot[e] = slot.get(e, 0) + c
        return self.ring._from_raw(raw)

    def __rmul__(self, other: "CoeffElem | int") -> "GrElem":
        return self.ring.element({w: other * c for w, c in self.terms})

    def __pow__(self, k: int) -> "GrElem":
        if k < 0:
            raise ValueError("Use gr_unit_inverse for negative powers")
        result, base = self.ring.one, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_one(self) -> bool:
        return self == self.ring.one

    @property
    def support(self) -> tuple[Word, ...]:
        return tuple(w for w, _ in self.terms)

    def coefficient(self, word: Word) -> CoeffElem:
        for w, c in self.terms:
            if w == word:
                return c
        return self.ring.coefficients.zero

    def conjugate_by(self, w: Word) -> "GrElem":
        """w * self * w^-1"""
        return self.ring.word(w) * self * self.ring.word(~w)

    def format(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for word, c in self.terms:
            word_text = format_word(word, self.ring.rank)
            coeff_text = str(c)
            if word.is_identity:
                body = coeff_text
            elif c.is_one:
                body = word_text
            elif (-c).is_one:
                body = f"-{word_text}"
            elif c.is_monomial:
                body = f"{coeff_text}*{word_text}"
            else:
                body = f"({coeff_text})*{word_text}"
            if pieces and body.startswith("-"):
                pieces.append(f"- {body[1:]}")
            elif pieces:
                pieces.append(f"+ {body}")
            else:
                pieces.append(body)
        return " ".join(pieces)

    def format_grouped(self) -> str:
        """Terms sharing a coefficient collected as c*(w_1 + w_2 + ..)."""
        groups: dict[CoeffElem, list[Word]] = {}
        for word, c in self.terms:
            groups.setdefault(c, []).append(word)
        pieces = []
        for c, words in groups.items():
            if len(words) == 1:
                body = self.ring.element({words[0]: c}).format()
            else:
                inner = self.ring.element(dict.fromkeys(words, 1)).format()
                if c.is_one:
                    body = inner
                elif (-c).is_one:
                    body = f"-({inner})"
                elif c.is_monomial:
                    body = f"{c}*({inner})"
                else:
                    body = f"({c})*({inner})"
            if pieces and body.startswith("-"):
                pieces.append(f"- {body[1:]}")
            elif pieces:
                pieces.append(f"+ {body}")
            else:
                pieces.append(body)
        return " ".join(pieces) or "0"

    def __str__(self) -> str:
        return self.format()


def gr_add(a: GrElem, b: GrElem) -> GrElem:
    return a + b


def gr_mul(a: GrElem, b: GrElem) -> GrElem:
    return a * b


def gr_neg(a: GrElem) -> GrElem:
    return -a


def gr_inverse_unipotent(a: GrElem) -> GrElem:
    """
    Inverse of 1 + n where every coefficient of n lies in the maximal ideal of a local
    coefficient ring, as the truncated geometric series sum((-n)^k).

    :raises InverseFailed: if a - 1 is not of that shape or the powers do not vanish in time.
    """
    ring = a.ring
    coefficients = ring.coefficients
    nilpotent = a - ring.one
    if not coefficients.local or any(c.augmentation() for _, c in nilpotent.terms):
        raise InverseFailed(f"{a} is not 1 plus an element with nilpotent coefficients")
    bound = coefficients.nilpotency_bound
    step = -nilpotent
    total, power = ring.one, ring.one
    for _ in range(bound):
        power = power * step
        if power.is_zero:
            break
        total = total + power
    else:
        raise InverseFailed(f"Powers of {nilpotent} did not vanish within {bound} steps")
    if not ((total * a).is_one and (a * total).is_one):
        raise InverseFailed(f"Geometric series is not an inverse of {a}")
    return total


def gr_unit_inverse(a: GrElem) -> GrElem:
    """
    Two-sided inverse of a unit.

    Recognizes c * w with c a coefficient unit, and, over a local coefficient ring, every
    element whose residue is such a trivial unit; over a local ring that is every unit.
    """
    ring = a.ring
    if len(a.terms) == 1:
        ((word, c),) = a.terms
        return ring.word(~word, coeff_unit_inverse(c))
    if ring.coefficients.local:
        residues = [(w, c) for w, c in a.terms if c.augmentation()]
        if len(residues) == 1:
            word, c = residues[0]
            lead_inverse = ring.word(
                ~word, coeff_unit_inverse(ring.coefficients.constant(c.augmentation()))
            )
            try:
                return gr_inverse_unipotent(lead_inverse * a) * lead_inverse
            except InverseFailed as exc:
                raise NotAUnit(str(exc)) from exc
    raise NotAUnit(f"{a} is not a recognized unit of {ring}")


@dataclass(frozen=True)
class YAdicExpansion:
    """Layers T_0..T_{d-1} with a = sum_k y^k T_k, y = 1 - x, over the prime field."""

    layers: tuple[GrElem, ...]
    variable: str

    def layer(self, k: int) -> GrElem:
        return self.layers[k]

    def reconstruct(self, ring: GroupRing) -> GrElem:
        coefficients = ring.coefficients
        y = coefficients.one - coefficients.gen(self.variable)
        total = ring.zero
        for k, layer in enumerate(self.layers):
            y_power = y**k
            total = total + ring.element(
                {w: y_power * c.augmentation() for w, c in layer.terms}
            )
        return total


def y_adic_expand(a: GrElem) -> YAdicExpansion:
    """
    Rewrites the coefficients of a over F_p[x]/((x - 1)^d) in the basis 1, y, .., y^(d-1).
    """
    coefficients = a.ring.coefficients
    if len(coefficients.variables) != 1 or not coefficients.local:
        raise RingMismatch(f"y-adic expansion needs F_p[C_p] coefficients, got {coefficients}")
    p = coefficients.characteristic
    degree = coefficients.degrees[0]
    field = GroupRing(CoeffRing.integers(p), a.ring.rank)
    layers: list[dict[Word, int]] = [{} for _ in range(degree)]
    for word, c in a.terms:
        for (j,), cj in c.terms:
            # x^j = (1 - y)^j
            for k in range(j + 1):
                value = cj * math.comb(j, k) * (-1) ** k
                layers[k][word] = layers[k].get(word, 0) + value
    return YAdicExpansion(
        tuple(field.element({w: v % p for w, v in layer.items()}) for layer in layers),
        coefficients.variables[0],
    )


def apply_hom_gr(h: CoeffHom, a: GrElem) -> GrElem:
    if a.ring.coefficients != h.source:
        raise RingMismatch(f"{a} does not have coefficients in {h.source}")
    target = GroupRing(h.target, a.ring.rank)
    return target.element({w: h(c) for w, c in a.terms})


def augmentation(a: GrElem) -> CoeffElem:
    total = a.ring.coefficients.zero
    for _, c in a.terms:
        total = total + c
    return total
