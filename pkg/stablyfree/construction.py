"""
The delta_n family of unit commutators over F_p[C_p][F_m], the squares it glues over, and the
procedures that tell the resulting rank-1 modules apart or certify them stably free.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import sympy

from stablyfree.coeff_ring import (
    CoeffElem,
    CoeffRing,
    InvalidRing,
    NotAUnit,
    coeff_unit_inverse,
)
from stablyfree.free_group import (
    Conjugators,
    Word,
    format_word,
    solve_conjugation,
    words_of_length,
    words_up_to,
)
from stablyfree.group_ring import (
    GrElem,
    GroupRing,
    augmentation,
    gr_inverse_unipotent,
    gr_unit_inverse,
)
from stablyfree.matrix_k1 import (
    FactorList,
    RMatrix,
    VerificationFailed,
    commutator_diag,
    lift_factors,
    stabilize,
)
from stablyfree.milnor import (
    CosetClass,
    InvalidSubgroup,
    MilnorSquare,
    UnsupportedSubgroup,
)
from stablyfree.utils import AlgebraError, logger, worker_count


class InconsistentResult(AlgebraError):
    pass


def _require_prime(p: int):
    if not sympy.isprime(p):
        raise InvalidRing(f"{p} is not prime")


def build_square_A(p: int, m: int = 2) -> MilnorSquare:
    """Z[C_{p^2}] over Z[zeta_{p^2}] and Z[C_p], glued along F_p[C_p]."""
    _require_prime(p)
    return MilnorSquare.from_fibre("A", (p * p,), 0, p, m)


def build_square_B(p: int, m: int = 2) -> MilnorSquare:
    """Z[C_p x C_p] with H the first factor; the bottom map kills x and reduces mod p."""
    _require_prime(p)
    return MilnorSquare.from_fibre("B", (p, p), 0, 1, m)


def build_unit_lemma_square(p: int, m: int = 2) -> MilnorSquare:
    """Z[C_p] over Z[zeta_p] and Z, glued along F_p."""
    _require_prime(p)
    return MilnorSquare.from_fibre("unit-lemma", (p,), 0, 1, m)


def build_sigma_square(
    orders: Sequence[int], subgroup: Iterable[Sequence[int]], m: int = 2
) -> MilnorSquare:
    """
    The Sigma_H square for G = C_{n_1} x .. x C_{n_r} and H generated by the given exponent
    vectors.

    :raises InvalidSubgroup: if a generator does not fit G or H is trivial.
    :raises UnsupportedSubgroup: if H is not contained in a single cyclic coordinate.
    """
    orders = tuple(orders)
    if not orders or any(n < 2 for n in orders):
        raise InvalidSubgroup(f"Invariant factors {orders} must all be at least 2")
    coordinates: set[int] = set()
    exponents: list[int] = []
    for generator in subgroup:
        generator = tuple(generator)
        if len(generator) != len(orders):
            raise InvalidSubgroup(f"Generator {generator} does not match {len(orders)} factors")
        reduced = [e % n for e, n in zip(generator, orders)]
        for index, e in enumerate(reduced):
            if e:
                coordinates.add(index)
                exponents.append(e)
    if not coordinates:
        raise InvalidSubgroup("Subgroup is trivial")
    if len(coordinates) > 1:
        raise UnsupportedSubgroup("Only subgroups inside one cyclic factor are supported")
    (coordinate,) = coordinates
    step = math.gcd(orders[coordinate], *exponents)
    label = "x".join(f"C{n}" for n in orders)
    return MilnorSquare.from_fibre(f"sigma({label})", orders, coordinate, step, m)


SQUARES = {"A": build_square_A, "B": build_square_B, "unit-lemma": build_unit_lemma_square}


def delta_ring(p: int, m: int) -> GroupRing:
    """F_p[C_p][F_m], the bottom corner of square A."""
    _require_prime(p)
    return GroupRing(CoeffRing.group_ring((p,), p), m)


@dataclass(frozen=True)
class DeltaSpec:
    p: int
    m: int = 2
    n: int = 1
    s: int = 1
    t: int = 2

    def __post_init__(self):
        _require_prime(self.p)
        if self.m < 2:
            raise ValueError("The free group needs rank at least 2")
        if self.n < 1:
            raise ValueError("delta_n needs n >= 1")
        if self.s == self.t or not (1 <= self.s <= self.m and 1 <= self.t <= self.m):
            raise ValueError(f"Generators s=g{self.s}, t=g{self.t} must be distinct in F_{self.m}")

    @property
    def ring(self) -> GroupRing:
        return delta_ring(self.p, self.m)

    def y(self) -> CoeffElem:
        coefficients = self.ring.coefficients
        return coefficients.one - coefficients.gen("x")

    def alpha(self) -> GrElem:
        """1 + y*t."""
        ring = self.ring
        return ring.one + ring.gen(self.t) * self.y()

    def sigma(self) -> Word:
        return Word.generator(self.s, self.n)


@lru_cache(maxsize=256)
def delta(spec: DeltaSpec) -> GrElem:
    """(1 + y*t) * s^n * (1 + y*t)^-1 * s^-n."""
    alpha = spec.alpha()
    alpha_inv = gr_inverse_unipotent(alpha)
    ring = spec.ring
    sigma = spec.sigma()
    result = alpha * ring.word(sigma) * alpha_inv * ring.word(~sigma)
    logger.debug("delta_%d over F_%d has %d terms", spec.n, spec.p, len(result.terms))
    return result


@lru_cache(maxsize=256)
def delta_layers(spec: DeltaSpec) -> tuple[GrElem, ...]:
    """
    y-adic layers of delta_n from the geometric-series inverse of 1 + y*t:
    T_0 = 1 and T_k = (-1)^k s^n t^k s^-n + (-1)^(k-1) t s^n t^(k-1) s^-n.
    """
    prime_field = GroupRing(CoeffRing.integers(spec.p), spec.m)
    sn = Word.generator(spec.s, spec.n)
    t = Word.generator(spec.t)
    layers = [prime_field.one]
    for k in range(1, spec.p):
        first = sn * t**k * ~sn
        second = t * sn * t ** (k - 1) * ~sn
        layers.append(
            prime_field.word(first, (-1) ** k) + prime_field.word(second, (-1) ** (k - 1))
        )
    return tuple(layers)


@dataclass(frozen=True)
class TraceStep:
    layer: int
    constraint: str
    resolution: str


@dataclass(frozen=True)
class EquivalenceWitness:
    """delta_n = gamma * w * delta_n' * v."""

    gamma: CoeffElem
    w: Word
    v: Word


@dataclass
class DistinctnessVerdict:
    p: int
    m: int
    n: int
    n2: int
    verdict: Literal["Distinct", "Equivalent", "Unresolved"]
    trace: list[TraceStep] = field(default_factory=list)
    witness: EquivalenceWitness | None = None
    s: int = 1
    t: int = 2

    @property
    def is_distinct(self) -> bool:
        return self.verdict == "Distinct"


def _matchings(
    lhs: GrElem, rhs: GrElem
) -> list[list[tuple[Word, Word]]]:
    """
    Bijections between the supports of rhs and lhs that preserve coefficients, as lists of
    (rhs word, lhs word) pairs.
    """
    if len(lhs.terms) != len(rhs.terms):
        return []
    matchings = []
    for permuted in itertools.permutations(lhs.terms):
        if all(c == d for (_, c), (_, d) in zip(rhs.terms, permuted)):
            matchings.append([(g, h) for (g, _), (h, _) in zip(rhs.terms, permuted)])
    return matchings


def _solve_matching(pairs: list[tuple[Word, Word]], rank: int) -> tuple[Conjugators | None, str]:
    """Common solutions w of w * g * w^-1 = h over all pairs."""
    g, h = pairs[0]
    solutions = solve_conjugation(g, h)
    if solutions is None:
        return None, f"{format_word(h, rank)} is not conjugate to {format_word(g, rank)}"
    for g, h in pairs[1:]:
        coset = solutions.format(rank)
        solutions = solutions.restrict(g, h)
        if solutions is None:
            return None, (
                f"no w in {coset} conjugates {format_word(g, rank)} to {format_word(h, rank)}"
            )
    return solutions, f"w in {solutions.format(rank)}"


def _equation_text(pairs: list[tuple[Word, Word]], rank: int) -> str:
    return " and ".join(
        f"w*{format_word(g, rank)}*w^-1 = {format_word(h, rank)}" for g, h in pairs
    )


def _scalar_ratio(target: GrElem, source: GrElem) -> CoeffElem | None:
    """gamma with target = gamma * source, read off the identity word, or None."""
    identity = Word()
    try:
        gamma = target.coefficient(identity) * coeff_unit_inverse(source.coefficient(identity))
    except NotAUnit:
        return None
    return gamma if source * gamma == target else None


def certify_distinct(
    p: int, m: int, n: int, n2: int, s: int = 1, t: int = 2
) -> DistinctnessVerdict:
    """
    Decides whether delta_n = gamma * w * delta_n2 * v for a unit gamma of F_p[C_p] and words
    w, v, working layer by layer in the y-adic expansion.

    The y^0 layer forces gamma = 1 + d_1*y + .. and v = w^-1. The y^1 layer forces d_1 = 0
    and turns into conjugation equations, one for each coefficient-preserving matching of
    the supports of T_1.
    """
    spec, spec2 = DeltaSpec(p, m, n, s, t), DeltaSpec(p, m, n2, s, t)
    verdict = DistinctnessVerdict(p, m, n, n2, "Distinct", s=s, t=t)
    layers, layers2 = delta_layers(spec), delta_layers(spec2)
    if not (layers[0].is_one and layers2[0].is_one):
        raise InconsistentResult("y^0 layer of delta is not 1")
    verdict.trace.append(
        TraceStep(0, "c * w * 1 * v = 1", "c = 1 and v = w^-1, so gamma = 1 + d_1*y + ..")
    )

    lhs, rhs = layers[1], layers2[1]
    identity = Word()
    if identity in lhs.support or identity in rhs.support:
        raise InconsistentResult("y^1 layer of delta contains the identity word")
    verdict.trace.append(
        TraceStep(1, "coefficient of 1: 0 = d_1", "d_1 = 0, T_1(n) = w * T_1(n') * w^-1")
    )

    candidates: list[Word] = []
    for pairs in _matchings(lhs, rhs):
        solutions, resolution = _solve_matching(pairs, m)
        if solutions is not None and not solutions.is_singleton:
            raise InconsistentResult(
                f"Conjugation equations left the infinite family {solutions.format(m)}"
            )
        verdict.trace.append(TraceStep(1, _equation_text(pairs, m), resolution))
        if solutions is not None:
            candidates.append(solutions.representative)
    if not candidates:
        verdict.trace.append(
            TraceStep(1, "supports of T_1 must match", "no matching has a solution")
        )

    target, source = delta(spec), delta(spec2)
    for w in candidates:
        conjugated = source.conjugate_by(w)
        gamma = _scalar_ratio(target, conjugated)
        if gamma is None:
            verdict.trace.append(
                TraceStep(
                    2,
                    f"delta_{n} = gamma * {format_word(w, m)} * delta_{n2} * w^-1",
                    "higher layers disagree",
                )
            )
            continue
        verdict.verdict = "Equivalent"
        verdict.witness = EquivalenceWitness(gamma, w, ~w)
        verdict.trace.append(
            TraceStep(2, "full equality", f"gamma = {gamma}, w = {format_word(w, m)}")
        )
        break
    logger.info("delta_%d vs delta_%d over F_%d: %s", n, n2, p, verdict.verdict)
    return verdict


def verify_witness(verdict: DistinctnessVerdict) -> bool:
    """Re-multiplies an Equivalent witness against the deltas built on the verdict's s and t."""
    if verdict.witness is None:
        return False
    spec = DeltaSpec(verdict.p, verdict.m, verdict.n, verdict.s, verdict.t)
    spec2 = DeltaSpec(verdict.p, verdict.m, verdict.n2, verdict.s, verdict.t)
    ring = spec.ring
    w = verdict.witness
    rhs = ring.word(w.w) * delta(spec2) * ring.word(w.v) * w.gamma
    return rhs == delta(spec)


def local_units(p: int) -> list[CoeffElem]:
    """All units of F_p[C_p], every element with nonzero augmentation."""
    coefficients = CoeffRing.group_ring((p,), p)
    units = []
    for values in itertools.product(range(p), repeat=p):
        if sum(values) % p:
            units.append(coefficients.element({(k,): c for k, c in enumerate(values)}))
    return units


@dataclass(frozen=True)
class BruteForceHit:
    gamma: CoeffElem
    w: Word


@dataclass
class BruteForceReport:
    p: int
    m: int
    n: int
    n2: int
    length_bound: int
    words_checked: int = 0
    hits: list[BruteForceHit] = field(default_factory=list)


def _stratum(p: int, m: int, n: int, n2: int, length: int) -> tuple[int, list[BruteForceHit]]:
    target = delta(DeltaSpec(p, m, n))
    source = delta(DeltaSpec(p, m, n2))
    support = set(target.support)
    units = local_units(p)
    checked, hits = 0, []
    for w in words_of_length(m, length):
        checked += 1
        conjugated = source.conjugate_by(w)
        if set(conjugated.support) != support:
            continue
        hits.extend(BruteForceHit(g, w) for g in units if conjugated * g == target)
    return checked, hits


def brute_force_check(
    p: int, m: int, n: int, n2: int, length_bound: int, workers: int | None = None
) -> BruteForceReport:
    """
    Tests delta_n = gamma * w * delta_n2 * w^-1 for every word of length <= length_bound and
    every unit gamma of F_p[C_p].
    """
    for index in (n, n2):
        DeltaSpec(p, m, index)
    workers = workers or worker_count()
    report = BruteForceReport(p, m, n, n2, length_bound)
    lengths = range(length_bound + 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    _stratum,
                    *zip(*((p, m, n, n2, length) for length in lengths)),
                )
            )
    else:
        results = [_stratum(p, m, n, n2, length) for length in lengths]
    for checked, hits in results:
        report.words_checked += checked
        report.hits.extend(hits)
    logger.info(
        "Brute force delta_%d vs delta_%d: %d words, %d hits",
        n,
        n2,
        report.words_checked,
        len(report.hits),
    )
    return report


def agrees(verdict: DistinctnessVerdict, report: BruteForceReport) -> bool:
    """Whether the decision procedure and the bounded search tell the same story."""
    if verdict.verdict == "Distinct":
        return not report.hits
    if verdict.verdict == "Equivalent" and verdict.witness is not None:
        if verdict.witness.w.length > report.length_bound:
            return True
        return any(
            hit.w == verdict.witness.w and hit.gamma == verdict.witness.gamma
            for hit in report.hits
        )
    return True


@dataclass
class Trivialization:
    spec: DeltaSpec
    square: MilnorSquare
    delta: GrElem
    base_factors: FactorList
    lifted: FactorList
    stabilized: RMatrix


def trivialize(p: int, m: int, n: int) -> Trivialization:
    """
    Writes diag(delta_n, 1) as 18 elementary matrices over F_p[C_p][F_m] and lifts them to
    Z[C_p][F_m].

    :raises VerificationFailed: if any product check fails.
    """
    spec = DeltaSpec(p, m, n)
    square = build_square_A(p, m)
    ring = square.group_ring("base")
    alpha = spec.alpha()
    sigma = spec.sigma()
    base_factors = commutator_diag(
        alpha, gr_inverse_unipotent(alpha), ring.word(sigma), ring.word(~sigma)
    )
    value = delta(spec)
    stabilized = stabilize(RMatrix(ring, ((value,),)), 1)
    if base_factors.product != stabilized:
        raise VerificationFailed("Commutator factors do not multiply to diag(delta, 1)")
    lifted = lift_factors(base_factors, square.section)
    logger.info("Trivialized delta_%d over F_%d with %d factors", n, p, len(lifted.factors))
    return Trivialization(spec, square, value, base_factors, lifted, stabilized)


def _coefficient_box(coefficients: CoeffRing, height: int) -> list[CoeffElem]:
    basis = list(coefficients.basis())
    if coefficients.characteristic:
        values = range(coefficients.characteristic)
    else:
        values = range(-height, height + 1)
    box = []
    for vector in itertools.product(values, repeat=len(basis)):
        if any(vector):
            box.append(coefficients.element(dict(zip(basis, vector))))
    return box


def is_trivial_unit(a: GrElem) -> bool:
    """c * w with c a unit scalar times a product of variable powers."""
    if len(a.terms) != 1:
        return False
    ((_, c),) = a.terms
    coefficients = c.ring
    n = coefficients.characteristic
    scalars = (1, -1) if n == 0 else (u for u in range(1, n) if math.gcd(u, n) == 1)
    return any(c * u in coefficients.torsion_monomials for u in scalars)


@dataclass
class UnitSearchReport:
    ring: str
    support_bound: int
    height_bound: int
    word_length: int
    candidates: int = 0
    units: list[GrElem] = field(default_factory=list)

    @property
    def nontrivial(self) -> list[GrElem]:
        return [u for u in self.units if not is_trivial_unit(u)]


def unit_search(
    ring: GroupRing, support_bound: int, height_bound: int = 2, word_length: int = 1
) -> UnitSearchReport:
    """
    Every element with at most support_bound words of length <= word_length and coefficients
    of height <= height_bound that has a two-sided inverse inside the same box.

    Candidates are bucketed by augmentation, and only buckets whose augmentations multiply to
    1 are paired. An augmentation coeff_unit_inverse does not recognize is multiplied against
    every other bucket's augmentation instead.
    """
    if support_bound < 1 or height_bound < 1:
        raise ValueError("Search bounds must be positive")
    words = list(words_up_to(ring.rank, word_length))
    box = _coefficient_box(ring.coefficients, height_bound)
    buckets: dict[CoeffElem, list[GrElem]] = {}
    report = UnitSearchReport(str(ring), support_bound, height_bound, word_length)
    for size in range(1, min(support_bound, len(words)) + 1):
        for support in itertools.combinations(words, size):
            for coeffs in itertools.product(box, repeat=size):
                candidate = ring.element(dict(zip(support, coeffs)))
                report.candidates += 1
                buckets.setdefault(augmentation(candidate), []).append(candidate)
    for aug, members in buckets.items():
        try:
            partners = buckets.get(coeff_unit_inverse(aug), [])
        except NotAUnit:
            partners = [
                b for other, bucket in buckets.items() if (aug * other).is_one for b in bucket
            ]
        for a in members:
            if any((a * b).is_one and (b * a).is_one for b in partners):
                report.units.append(a)
    logger.info(
        "Unit search over %s: %d candidates, %d units, %d nontrivial",
        ring,
        report.candidates,
        len(report.units),
        len(report.nontrivial),
    )
    return report


@dataclass
class FamilyListing:
    p: int
    m: int
    deltas: list[GrElem]
    verdicts: list[list[DistinctnessVerdict]]


def family(p: int, m: int, count: int) -> FamilyListing:
    """delta_1 .. delta_count with the pairwise verdict matrix."""
    if count < 1:
        raise ValueError("Family size must be positive")
    deltas = [delta(DeltaSpec(p, m, n)) for n in range(1, count + 1)]
    verdicts = [
        [certify_distinct(p, m, n, n2) for n2 in range(1, count + 1)]
        for n in range(1, count + 1)
    ]
    return FamilyListing(p, m, deltas, verdicts)


def delta_class(p: int, m: int, n: int) -> CosetClass:
    spec = DeltaSpec(p, m, n)
    return CosetClass(build_square_A(p, m), delta(spec), n)


def compare_classes(
    first: CosetClass, second: CosetClass, length_bound: int = 1
) -> DistinctnessVerdict:
    """
    Delta classes of the same square go through certify_distinct. Other representatives are
    searched for first = gamma * w * second * v with gamma a unit of F_p[C_p] and words of
    length <= length_bound; no hit is reported as Unresolved.
    """
    if first.square != second.square:
        raise ValueError("Classes live over different squares")
    square = first.square
    p, m = square.base.characteristic, square.rank
    if first.delta_index is not None and second.delta_index is not None:
        return certify_distinct(p, m, first.delta_index, second.delta_index)
    if square.base != delta_ring(p, m).coefficients:
        raise UnsupportedSubgroup("Bounded class comparison needs the F_p[C_p] corner")
    for representative in (first.representative, second.representative):
        gr_unit_inverse(representative)
    verdict = DistinctnessVerdict(
        p, m, first.delta_index or 0, second.delta_index or 0, "Unresolved"
    )
    ring = square.group_ring("base")
    words = list(words_up_to(m, length_bound))
    units = local_units(p)
    for w in words:
        left = ring.word(w) * second.representative
        for v in words:
            candidate = left * ring.word(v)
            if set(candidate.support) != set(first.representative.support):
                continue
            for gamma in units:
                if candidate * gamma == first.representative:
                    verdict.verdict = "Equivalent"
                    verdict.witness = EquivalenceWitness(gamma, w, v)
                    verdict.trace.append(
                        TraceStep(0, "bounded search", f"hit at w = {format_word(w, m)}")
                    )
                    return verdict
    verdict.trace.append(
        TraceStep(0, "bounded search", f"no witness with words of length <= {length_bound}")
    )
    return verdict

