"""
Commutative coefficient rings Z[x_1..x_r]/(f_1(x_1), .., f_r(x_r)) and (Z/N)[..] quotients.

Every relation is monic in its own variable, so the monomials below the relation degrees
form a basis and reduce-on-write gives a canonical form.
"""

from __future__ import annotations

import itertools
import math
import random
from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from functools import cached_property
from tokenize import TokenError

import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from stablyfree.utils import AlgebraError

Exponents = tuple[int, ...]
Terms = dict[Exponents, int]
Poly = tuple[int, ...]

TRANSFORMATIONS = standard_transformations + (convert_xor,)
POWER_CYCLE_BOUND = 256

_X = sympy.Symbol("x")


class RingMismatch(AlgebraError):
    pass


class InvalidRing(AlgebraError):
    pass


class InvalidHom(AlgebraError):
    pass


class NotAUnit(AlgebraError):
    pass


class IdentityCheckFailed(AlgebraError):
    pass


class ParseError(AlgebraError):
    pass


def binomial_relation(degree: int) -> Poly:
    """Dense coefficients of x^degree - 1."""
    return (-1,) + (0,) * (degree - 1) + (1,)


def monic_divmod(
    terms: Mapping[Exponents, int], index: int, divisor: Poly
) -> tuple[Terms, Terms]:
    """
    Divides a multivariate integer polynomial by a monic polynomial in one variable.

    :param terms: Sparse polynomial, exponent vector -> integer.
    :param index: Position of the variable the divisor is written in.
    :param divisor: Dense coefficients of the divisor, constant term first, leading 1.
    :return: (quotient, remainder) with remainder degree in that variable below deg(divisor).
    """
    degree = len(divisor) - 1
    work = {e: c for e, c in terms.items() if c}
    quotient: Terms = {}
    while True:
        high = [e for e in work if e[index] >= degree]
        if not high:
            break
        top = max(e[index] for e in high)
        for e in [e for e in high if e[index] == top]:
            c = work.pop(e)
            shift = top - degree
            quotient[e[:index] + (shift,) + e[index + 1 :]] = c
            for k, rk in enumerate(divisor[:-1]):
                if not rk:
                    continue
                f = e[:index] + (shift + k,) + e[index + 1 :]
                value = work.get(f, 0) - c * rk
                if value:
                    work[f] = value
                else:
                    work.pop(f, None)
    return quotient, work


def univariate_terms(poly: Poly, index: int, arity: int) -> Terms:
    """Embeds dense univariate coefficients as sparse terms in variable ``index``."""
    zero = [0] * arity
    terms: Terms = {}
    for k, c in enumerate(poly):
        if c:
            exponent = list(zero)
            exponent[index] = k
            terms[tuple(exponent)] = c
    return terms


def _integer_unit_inverse(c: int, characteristic: int) -> int | None:
    if characteristic == 0:
        return c if c in (1, -1) else None
    if math.gcd(c, characteristic) != 1:
        return None
    return pow(c, -1, characteristic)


def _is_unipotent_relation(poly: Poly, p: int) -> bool:
    # f(x) = (x - 1)^d mod p, so (1 - x) is nilpotent and x -> 1 is the residue map
    degree = len(poly) - 1
    return all(
        (c - math.comb(degree, k) * (-1) ** (degree - k)) % p == 0
        for k, c in enumerate(poly)
    )


@dataclass(frozen=True)
class CoeffRing:
    variables: tuple[str, ...] = ()
    relations: tuple[Poly, ...] = ()
    characteristic: int = 0
    local: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(
            self, "relations", tuple(tuple(int(c) for c in r) for r in self.relations)
        )
        if len(self.variables) != len(self.relations):
            raise InvalidRing("Every variable needs exactly one relation")
        if len(set(self.variables)) != len(self.variables):
            raise InvalidRing("Variable names must be distinct")
        for name, relation in zip(self.variables, self.relations):
            if len(relation) < 2 or relation[-1] != 1:
                raise InvalidRing(f"Relation of {name} must be monic of positive degree")
        if self.characteristic < 0:
            raise InvalidRing("Characteristic must be non-negative")
        if self.local:
            if not sympy.isprime(self.characteristic):
                raise InvalidRing("A local ring needs a prime characteristic")
            if not all(
                _is_unipotent_relation(r, self.characteristic) for r in self.relations
            ):
                raise InvalidRing("Local flag needs every relation to be (x - 1)^d mod p")

    @classmethod
    def integers(cls, characteristic: int = 0) -> "CoeffRing":
        return cls(characteristic=characteristic, local=sympy.isprime(characteristic))

    @classmethod
    def group_ring(
        cls,
        orders: tuple[int, ...],
        characteristic: int = 0,
        names: tuple[str, ...] | None = None,
    ) -> "CoeffRing":
        """
        The group ring of C_{n_1} x .. x C_{n_r} over Z or Z/N.

        It is flagged local exactly when N is prime and every n_i is a power of N.
        """
        names = names or default_names(len(orders))
        local = sympy.isprime(characteristic) and all(
            set(sympy.primefactors(n)) <= {characteristic} for n in orders
        )
        return cls(
            tuple(names),
            tuple(binomial_relation(n) for n in orders),
            characteristic,
            local,
        )

    @classmethod
    def from_presentation(
        cls,
        variables: list[str],
        relations: list[str],
        characteristic: int = 0,
        local: bool = False,
    ) -> "CoeffRing":
        dense = []
        for name, text in zip(variables, relations):
            symbol = sympy.Symbol(name)
            try:
                expr = parse_expr(
                    text, local_dict={name: symbol}, transformations=TRANSFORMATIONS
                )
                poly = sympy.Poly(expr, symbol)
            except (SyntaxError, TokenError, TypeError, sympy.SympifyError) as exc:
                raise ParseError(f"Cannot parse relation {text!r}: {exc}") from exc
            except sympy.PolynomialError as exc:
                raise ParseError(f"Relation {text!r} is not a polynomial in {name}") from exc
            if not poly.domain.is_ZZ:
                raise ParseError(f"Relation {text!r} must have integer coefficients")
            dense.append(tuple(int(c) for c in reversed(poly.all_coeffs())))
        if len(dense) != len(variables):
            raise InvalidRing("Every variable needs exactly one relation")
        return cls(tuple(variables), tuple(dense), characteristic, local)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(r) - 1 for r in self.relations)

    @cached_property
    def nilpotency_bound(self) -> int:
        """Power at which every element of the maximal ideal of a local ring vanishes."""
        return sum(d - 1 for d in self.degrees) + 1

    @cached_property
    def torsion_monomials(self) -> frozenset["CoeffElem"]:
        """
        Every product of variable powers, in canonical form. Powers of each variable are
        collected until they repeat, or up to POWER_CYCLE_BOUND of them, so x^4 in
        Z[x]/(1 + x + x^2 + x^3 + x^4) is found even though it is not written as a monomial.
        """
        cycles = []
        for name in self.variables:
            x, power, powers = self.gen(name), self.one, [self.one]
            for _ in range(POWER_CYCLE_BOUND):
                power = power * x
                if power in powers:
                    break
                powers.append(power)
            cycles.append(powers)
        products = set()
        for combination in itertools.product(*cycles):
            value = self.one
            for power in combination:
                value = value * power
            products.add(value)
        return frozenset(products)

    def relation_text(self, index: int) -> str:
        return format_terms(
            (self.variables[index],), univariate_terms(self.relations[index], 0, 1)
        )

    def basis(self) -> Iterator[Exponents]:
        return itertools.product(*(range(d) for d in self.degrees))

    def reduce(self, terms: Mapping[Exponents, int]) -> Terms:
        work = {e: c for e, c in terms.items() if c}
        for index, relation in enumerate(self.relations):
            degree = len(relation) - 1
            if not any(e[index] >= degree for e in work):
                continue
            if relation == binomial_relation(degree):
                folded: Terms = {}
                for e, c in work.items():
                    f = e[:index] + (e[index] % degree,) + e[index + 1 :]
                    folded[f] = folded.get(f, 0) + c
                work = folded
            else:
                _, work = monic_divmod(work, index, relation)
        if self.characteristic:
            n = self.characteristic
            return {e: c % n for e, c in work.items() if c % n}
        return {e: c for e, c in work.items() if c}

    def element(
        self, terms: Mapping[Exponents, int] | int, reduce: bool = True
    ) -> "CoeffElem":
        if isinstance(terms, int):
            return self.constant(terms)
        arity = len(self.variables)
        for e in terms:
            if len(e) != arity or any(k < 0 for k in e):
                raise InvalidRing(f"Exponent {e} does not fit ring with {arity} variables")
        reduced = self.reduce(terms) if reduce else {e: c for e, c in terms.items() if c}
        return CoeffElem(self, tuple(sorted(reduced.items())))

    def constant(self, c: int) -> "CoeffElem":
        return self.element({(0,) * len(self.variables): c})

    @cached_property
    def zero(self) -> "CoeffElem":
        return CoeffElem(self, ())

    @cached_property
    def one(self) -> "CoeffElem":
        return self.constant(1)

    def gen(self, name: str) -> "CoeffElem":
        index = self.variables.index(name)
        exponent = [0] * len(self.variables)
        exponent[index] = 1
        return self.element({tuple(exponent): 1})

    def variable_inverse(self, index: int) -> "CoeffElem":
        relation = self.relations[index]
        inverse_constant = _integer_unit_inverse(relation[0], self.characteristic)
        if inverse_constant is None:
            raise NotAUnit(f"{self.variables[index]} is not a unit")
        terms = univariate_terms(tuple(relation[1:]), index, len(self.variables))
        return self.element(terms) * (-inverse_constant)

    def parse(self, text: str) -> "CoeffElem":
        symbols = {name: sympy.Symbol(name) for name in self.variables}
        try:
            expr = sympy.expand(
                parse_expr(text, local_dict=symbols, transformations=TRANSFORMATIONS)
            )
        except (SyntaxError, TokenError, TypeError, sympy.SympifyError) as exc:
            raise ParseError(f"Cannot parse {text!r}: {exc}") from exc
        return self.from_sympy(expr)

    def from_sympy(self, expr: sympy.Expr) -> "CoeffElem":
        gens = [sympy.Symbol(name) for name in self.variables]
        unknown = expr.free_symbols - set(gens)
        if unknown:
            raise ParseError(f"Unknown symbols {sorted(map(str, unknown))}")
        if not gens:
            if not expr.is_Integer:
                raise ParseError(f"{expr} is not an integer")
            return self.constant(int(expr))
        try:
            poly = sympy.Poly(expr, *gens)
        except sympy.PolynomialError as exc:
            raise ParseError(f"{expr} is not a polynomial in {self.variables}") from exc
        if not poly.domain.is_ZZ:
            raise ParseError(f"{expr} must have integer coefficients")
        return self.element(
            {tuple(int(k) for k in monom): int(c) for monom, c in poly.terms()}
        )

    def random_element(self, rng: random.Random, height: int = 3) -> "CoeffElem":
        bound = self.characteristic - 1 if self.characteristic else height
        return self.element(
            {e: rng.randint(-bound, bound) for e in self.basis() if rng.random() < 0.6}
        )

    def __str__(self) -> str:
        base = "Z" if self.characteristic == 0 else f"Z/{self.characteristic}"
        if not self.variables:
            return base
        relations = ", ".join(self.relation_text(i) for i in range(len(self.variables)))
        return f"{base}[{','.join(self.variables)}]/({relations})"


def format_terms(variables: tuple[str, ...], terms: Mapping[Exponents, int]) -> str:
    if not terms:
        return "0"
    pieces = []
    for e, c in sorted(terms.items(), key=lambda item: (sum(item[0]), item[0])):
        monomial = "*".join(
            name if k == 1 else f"{name}^{k}" for name, k in zip(variables, e) if k
        )
        if not monomial:
            body = str(abs(c))
        elif abs(c) == 1:
            body = monomial
        else:
            body = f"{abs(c)}*{monomial}"
        if not pieces:
            pieces.append(f"-{body}" if c < 0 else body)
        else:
            pieces.append(f"- {body}" if c < 0 else f"+ {body}")
    return " ".join(pieces)


def default_names(count: int) -> tuple[str, ...]:
    if count <= 3:
        return ("x", "y", "z")[:count]
    return tuple(f"x{i}" for i in range(1, count + 1))


@dataclass(frozen=True)
class CoeffElem:
    ring: CoeffRing
    terms: tuple[tuple[Exponents, int], ...]

    def _coerce(self, other: "CoeffElem | int") -> "CoeffElem":
        if isinstance(other, int):
            return self.ring.constant(other)
        if other.ring is not self.ring and other.ring != self.ring:
            raise RingMismatch(f"{other.ring} differs from {self.ring}")
        return other

    def __add__(self, other: "CoeffElem | int") -> "CoeffElem":
        other = self._coerce(other)
        total = dict(self.terms)
        for e, c in other.terms:
            total[e] = total.get(e, 0) + c
        return self.ring.element(total, reduce=bool(self.ring.characteristic))

    __radd__ = __add__

    def __neg__(self) -> "CoeffElem":
        return self.ring.element({e: -c for e, c in self.terms})

    def __sub__(self, other: "CoeffElem | int") -> "CoeffElem":
        return self + (-self._coerce(other))

    def __rsub__(self, other: int) -> "CoeffElem":
        return self._coerce(other) - self

    def __mul__(self, other: "CoeffElem | int") -> "CoeffElem":
        if isinstance(other, int):
            return self.ring.element({e: c * other for e, c in self.terms})
        other = self._coerce(other)
        product: Terms = {}
        for e, c in self.terms:
            for f, d in other.terms:
                g = tuple(a + b for a, b in zip(e, f))
                product[g] = product.get(g, 0) + c * d
        return self.ring.element(product)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "CoeffElem":
        if k < 0:
            return coeff_unit_inverse(self) ** -k
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
    def mapping(self) -> Terms:
        return dict(self.terms)

    def augmentation(self) -> int:
        total = sum(c for _, c in self.terms)
        return total % self.ring.characteristic if self.ring.characteristic else total

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __str__(self) -> str:
        return format_terms(self.ring.variables, self.mapping)


def coeff_unit_inverse(a: CoeffElem) -> CoeffElem:
    """
    Exact inverse of a unit, or NotAUnit.

    Monomials with a unit coefficient are inverted in any ring whose relations have a unit
    constant term. In a local ring every element of nonzero augmentation is a unit and is
    inverted by a geometric series in the nilpotent part. Nothing else is recognized in
    characteristic 0.
    """
    ring = a.ring
    if a.is_monomial:
        ((exponent, c),) = a.terms
        inverse_c = _integer_unit_inverse(c, ring.characteristic)
        if inverse_c is not None:
            try:
                result = ring.constant(inverse_c)
                for index, k in enumerate(exponent):
                    if k:
                        result = result * ring.variable_inverse(index) ** k
            except NotAUnit:
                pass
            else:
                if (result * a).is_one:
                    return result
    if ring.local:
        return _local_inverse(a)
    raise NotAUnit(f"{a} is not a recognized unit of {ring}")


def _local_inverse(a: CoeffElem) -> CoeffElem:
    ring = a.ring
    p = ring.characteristic
    residue = a.augmentation()
    if residue == 0:
        raise NotAUnit(f"{a} lies in the maximal ideal of {ring}")
    scale = pow(residue, -1, p)
    nilpotent = ring.one - a * scale
    total, power = ring.one, ring.one
    for _ in range(ring.nilpotency_bound):
        power = power * nilpotent
        if power.is_zero:
            break
        total = total + power
    inverse = total * scale
    if not (inverse * a).is_one:
        raise NotAUnit(f"Geometric series failed to invert {a}")
    return inverse


@dataclass(frozen=True)
class CoeffHom:
    source: CoeffRing
    target: CoeffRing
    images: tuple[CoeffElem, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if len(self.images) != len(self.source.variables):
            raise InvalidHom("One image per source variable is required")
        for image in self.images:
            if image.ring != self.target:
                raise InvalidHom(f"Image {image} is not in {self.target}")
        if self.source.characteristic:
            n = self.target.characteristic
            if n == 0 or self.source.characteristic % n:
                raise InvalidHom(
                    f"Characteristic {self.source.characteristic} cannot map to {n}"
                )
        for name, relation, image in zip(
            self.source.variables, self.source.relations, self.images
        ):
            value = self.target.zero
            for k, c in enumerate(relation):
                if c:
                    value = value + image**k * c
            if not value.is_zero:
                raise InvalidHom(f"Image of {name} does not satisfy its relation")

    @classmethod
    def from_images(
        cls,
        source: CoeffRing,
        target: CoeffRing,
        images: Mapping[str, "str | CoeffElem"] | None = None,
    ) -> "CoeffHom":
        """Builds a hom; unnamed variables go to the same-named target variable, or 1."""
        images = dict(images or {})
        resolved = []
        for name in source.variables:
            image = images.get(name, name if name in target.variables else "1")
            resolved.append(target.parse(image) if isinstance(image, str) else image)
        return cls(source, target, tuple(resolved))

    def __call__(self, a: CoeffElem) -> CoeffElem:
        return apply_hom(self, a)

    def compose(self, inner: "CoeffHom") -> "CoeffHom":
        """self after inner."""
        if inner.target != self.source:
            raise RingMismatch("Homs do not compose")
        return CoeffHom(inner.source, self.target, tuple(self(i) for i in inner.images))


def apply_hom(h: CoeffHom, a: CoeffElem) -> CoeffElem:
    if a.ring != h.source:
        raise RingMismatch(f"{a} is not in {h.source}")
    target = h.target
    result: Terms = {}
    powers: dict[tuple[int, int], CoeffElem] = {}
    for exponent, c in a.terms:
        value = target.constant(c)
        for index, k in enumerate(exponent):
            if k:
                key = (index, k)
                if key not in powers:
                    powers[key] = h.images[index] ** k
                value = value * powers[key]
        for e, d in value.terms:
            result[e] = result.get(e, 0) + d
    return target.element(result)


def cyclotomic(d: int) -> Poly:
    """Phi_d as dense integer coefficients, constant term first."""
    if d < 1:
        raise ValueError("Cyclotomic index must be positive")
    poly = sympy.Poly(sympy.cyclotomic_poly(d, _X), _X)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


def sigma_polynomial(n: int, k: int) -> Poly:
    """1 + x^k + x^2k + .. + x^(n-k), the norm element of the subgroup <x^k> of C_n."""
    if k < 1 or n % k:
        raise ValueError(f"{k} does not divide {n}")
    return tuple(1 if e % k == 0 else 0 for e in range(n - k + 1))


def sigma_identity(n: int, k: int) -> Poly:
    """
    Returns q with sigma(x) - q(x) * (x^k - 1) = n / k exactly, sigma = sigma_polynomial(n, k).

    :raises IdentityCheckFailed: if the recomputed identity does not hold.
    """
    index = n // k
    sigma = sympy.Poly(list(reversed(sigma_polynomial(n, k))), _X)
    divisor = sympy.Poly(_X**k - 1, _X)
    q, r = sympy.div(sigma - index, divisor)
    if not r.is_zero or (sigma - q * divisor).as_expr() != index:
        raise IdentityCheckFailed(f"sigma identity failed for n={n}, k={k}")
    return tuple(int(c) for c in reversed(q.all_coeffs()))


def cyclotomic_identity(p: int) -> Poly:
    """
    Returns q with Phi_{p^2}(x) - q(x) * (x^p - 1) = p, verified before returning.
    """
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    if cyclotomic(p * p) != sigma_polynomial(p * p, p):
        raise IdentityCheckFailed(f"Phi_{p * p} is not the norm of <x^{p}>")
    q = sigma_identity(p * p, p)
    phi = sympy.Poly(list(reversed(cyclotomic(p * p))), _X)
    lhs = phi - sympy.Poly(list(reversed(q)), _X) * sympy.Poly(_X**p - 1, _X)
    if lhs.as_expr() != p:
        raise IdentityCheckFailed(f"Cyclotomic identity failed for p={p}")
    return q


@dataclass(frozen=True)
class CoeffSection:
    """
    Set-theoretic lift through a hom that reduces coefficients and sends each target variable
    back to the source variable of the same name. Canonical integers in [0, N) lift as they are.
    """

    hom: CoeffHom

    def __post_init__(self):
        source, target = self.hom.source, self.hom.target
        missing = set(target.variables) - set(source.variables)
        if missing:
            raise InvalidHom(f"No source variable to lift {sorted(missing)} to")
        for name in target.variables:
            if self.hom(self(target.gen(name))) != target.gen(name):
                raise InvalidHom(f"Section does not lift {name} through {self.hom.source}")

    def __call__(self, a: CoeffElem) -> CoeffElem:
        source, target = self.hom.source, self.hom.target
        if a.ring != target:
            raise RingMismatch(f"{a} is not in {target}")
        positions = [source.variables.index(name) for name in target.variables]
        lifted: Terms = {}
        for exponent, c in a.terms:
            e = [0] * len(source.variables)
            for position, k in zip(positions, exponent):
                e[position] = k
            lifted[tuple(e)] = c
        return source.element(lifted)
