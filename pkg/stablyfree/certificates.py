"""
Conversions between algebra objects and the JSON schemas, and self-contained trivialization
certificates.
"""

from stablyfree.coeff_ring import CoeffHom, CoeffRing
from stablyfree.construction import (
    BruteForceReport,
    DeltaSpec,
    DistinctnessVerdict,
    FamilyListing,
    Trivialization,
    UnitSearchReport,
    build_square_A,
    delta,
    delta_layers,
)
from stablyfree.free_group import format_word, parse_word
from stablyfree.group_ring import GrElem, GroupRing, apply_hom_gr, gr_inverse_unipotent
from stablyfree.matrix_k1 import (
    Diagonal,
    Elementary,
    Factor,
    FactorList,
    RMatrix,
    VerificationFailed,
    stabilize,
)
from stablyfree.milnor import ExactnessReport, FibreData, MilnorSquare
from stablyfree.schemas import (
    BruteForceSchema,
    CertificateSchema,
    CommutatorWitnessSchema,
    Element,
    ExactnessSchema,
    FactorSchema,
    FamilySchema,
    FibreSchema,
    HitSchema,
    HomSchema,
    ModuleSchema,
    RingSchema,
    SquareSchema,
    TermSchema,
    TraceStepSchema,
    UnitSearchSchema,
    VerdictSchema,
    VerificationSchema,
    WitnessSchema,
)
from stablyfree.utils import logger

MAX_FACTORS = 18


def ring_schema(ring: CoeffRing) -> RingSchema:
    return RingSchema(
        variables=list(ring.variables),
        relations=[ring.relation_text(i) for i in range(len(ring.variables))],
        characteristic=ring.characteristic,
        local=ring.local,
    )


def ring_from_schema(schema: RingSchema) -> CoeffRing:
    return CoeffRing.from_presentation(
        schema.variables, schema.relations, schema.characteristic, schema.local
    )


def hom_schema(hom: CoeffHom) -> HomSchema:
    return HomSchema(
        images={name: str(image) for name, image in zip(hom.source.variables, hom.images)}
    )


def hom_from_schema(schema: HomSchema, source: CoeffRing, target: CoeffRing) -> CoeffHom:
    return CoeffHom.from_images(source, target, schema.images)


def square_schema(square: MilnorSquare) -> SquareSchema:
    return SquareSchema(
        name=square.name,
        rank=square.rank,
        whole=ring_schema(square.whole),
        plus=ring_schema(square.plus),
        minus=ring_schema(square.minus),
        base=ring_schema(square.base),
        pi_plus=hom_schema(square.pi_plus),
        pi_minus=hom_schema(square.pi_minus),
        psi_plus=hom_schema(square.psi_plus),
        psi_minus=hom_schema(square.psi_minus),
        fibre=FibreSchema(
            variable=square.fibre.variable,
            order=square.fibre.order,
            step=square.fibre.step,
        ),
    )


def square_from_schema(schema: SquareSchema) -> MilnorSquare:
    """Rebuilds a square without checking that it commutes; check_exactness reports that."""
    whole, plus = ring_from_schema(schema.whole), ring_from_schema(schema.plus)
    minus, base = ring_from_schema(schema.minus), ring_from_schema(schema.base)
    return MilnorSquare(
        name=schema.name,
        rank=schema.rank,
        whole=whole,
        plus=plus,
        minus=minus,
        base=base,
        pi_plus=hom_from_schema(schema.pi_plus, whole, plus),
        pi_minus=hom_from_schema(schema.pi_minus, whole, minus),
        psi_plus=hom_from_schema(schema.psi_plus, plus, base),
        psi_minus=hom_from_schema(schema.psi_minus, minus, base),
        fibre=FibreData(schema.fibre.variable, schema.fibre.order, schema.fibre.step),
    )


def element_schema(a: GrElem) -> Element:
    rank = a.ring.rank
    return [TermSchema(word=format_word(w, rank), coeff=str(c)) for w, c in a.terms]


def element_from_schema(terms: Element, ring: GroupRing) -> GrElem:
    total = ring.zero
    for term in terms:
        word = parse_word(term.word, ring.rank)
        total = total + ring.word(word, ring.coefficients.parse(term.coeff))
    return total


def matrix_schema(a: RMatrix) -> list[list[Element]]:
    return [[element_schema(e) for e in row] for row in a.rows]


def matrix_from_schema(rows: list[list[Element]], ring: GroupRing) -> RMatrix:
    return RMatrix(ring, tuple(tuple(element_from_schema(e, ring) for e in row) for row in rows))


def factor_schema(factor: Factor) -> FactorSchema:
    if isinstance(factor, Elementary):
        return FactorSchema(
            kind="elementary", i=factor.i, j=factor.j, coeff=element_schema(factor.coeff)
        )
    return FactorSchema(
        kind="diagonal",
        diagonal=[element_schema(d) for d in factor.entries],
        inverses=[element_schema(d) for d in factor.inverses],
    )


def factor_from_schema(schema: FactorSchema, ring: GroupRing) -> Factor:
    if schema.kind == "elementary":
        if schema.i is None or schema.j is None or schema.coeff is None:
            raise VerificationFailed("Elementary factor needs i, j and coeff")
        return Elementary(schema.i, schema.j, element_from_schema(schema.coeff, ring))
    if schema.diagonal is None or schema.inverses is None:
        raise VerificationFailed("Diagonal factor needs entries and inverses")
    return Diagonal(
        tuple(element_from_schema(d, ring) for d in schema.diagonal),
        tuple(element_from_schema(d, ring) for d in schema.inverses),
    )


def build_certificate(result: Trivialization) -> CertificateSchema:
    square = result.square
    spec = result.spec
    return CertificateSchema(
        p=spec.p,
        m=spec.m,
        n=spec.n,
        coefficients=ring_schema(square.plus),
        base=ring_schema(square.base),
        psi_plus=hom_schema(square.psi_plus),
        size=result.lifted.size,
        factors=[factor_schema(f) for f in result.lifted.factors],
        product=matrix_schema(result.lifted.product),
        image=matrix_schema(result.stabilized),
    )


def verify_certificate(certificate: CertificateSchema) -> VerificationSchema:
    """
    Re-multiplies the lifted factors, maps the product down and compares it with
    diag(delta_n, 1). The embedded rings and psi_plus must be those of square A for (p, m).

    :raises VerificationFailed: on the first check that does not hold.
    """
    spec = DeltaSpec(certificate.p, certificate.m, certificate.n)
    square = build_square_A(spec.p, spec.m)
    coefficients = ring_from_schema(certificate.coefficients)
    base = ring_from_schema(certificate.base)
    if coefficients != square.plus:
        raise VerificationFailed(f"Factors must live over {square.plus}, not {coefficients}")
    if base != square.base:
        raise VerificationFailed(f"Image must live over {square.base}, not {base}")
    psi_plus = hom_from_schema(certificate.psi_plus, coefficients, base)
    if psi_plus != square.psi_plus:
        raise VerificationFailed("psi_plus is not the reduction map of square A")
    lifted_ring = GroupRing(coefficients, certificate.m)
    base_ring = GroupRing(base, certificate.m)
    factors = tuple(factor_from_schema(f, lifted_ring) for f in certificate.factors)
    fl = FactorList(
        certificate.size, factors, matrix_from_schema(certificate.product, lifted_ring)
    ).verify()
    if not fl.is_elementary:
        raise VerificationFailed("Certificate contains a non-elementary factor")
    if len(fl.factors) > MAX_FACTORS:
        raise VerificationFailed(f"Certificate has more than {MAX_FACTORS} factors")
    image = matrix_from_schema(certificate.image, base_ring)
    if fl.product.map(lambda e: apply_hom_gr(psi_plus, e), base_ring) != image:
        raise VerificationFailed("psi_plus of the product differs from the claimed image")
    expected = stabilize(RMatrix(base_ring, ((delta(spec),),)), 1)
    if image != expected:
        raise VerificationFailed(f"Claimed image is not diag(delta_{spec.n}, 1)")
    logger.info("Certificate for delta_%d over F_%d verified", spec.n, spec.p)
    return VerificationSchema(
        valid=True,
        factors=len(fl.factors),
        detail=f"psi_plus of {len(fl.factors)} elementary factors equals diag(delta_{spec.n}, 1)",
    )


def module_schema(spec: DeltaSpec) -> ModuleSchema:
    ring = spec.ring
    alpha = spec.alpha()
    sigma = spec.sigma()
    return ModuleSchema(
        p=spec.p,
        m=spec.m,
        n=spec.n,
        delta=delta(spec).format(),
        y_layers=[layer.format() for layer in delta_layers(spec)],
        commutator_witness=CommutatorWitnessSchema(
            alpha=alpha.format(),
            alpha_inv=gr_inverse_unipotent(alpha).format(),
            sigma=ring.word(sigma).format(),
            sigma_inv=ring.word(~sigma).format(),
        ),
    )


def verdict_schema(verdict: DistinctnessVerdict) -> VerdictSchema:
    witness = None
    if verdict.witness is not None:
        witness = WitnessSchema(
            gamma=str(verdict.witness.gamma),
            w=format_word(verdict.witness.w, verdict.m),
            v=format_word(verdict.witness.v, verdict.m),
        )
    return VerdictSchema(
        p=verdict.p,
        m=verdict.m,
        n=verdict.n,
        n2=verdict.n2,
        verdict=verdict.verdict,
        trace=[TraceStepSchema(**vars(step)) for step in verdict.trace],
        witnesses=witness,
    )


def brute_force_schema(report: BruteForceReport) -> BruteForceSchema:
    return BruteForceSchema(
        length_bound=report.length_bound,
        words_checked=report.words_checked,
        hits=[
            HitSchema(gamma=str(hit.gamma), w=format_word(hit.w, report.m))
            for hit in report.hits
        ],
    )


def exactness_schema(report: ExactnessReport, square: MilnorSquare) -> ExactnessSchema:
    return ExactnessSchema(
        square=report.square,
        samples=report.samples,
        checked=report.checked,
        failures=report.failures,
        ok=report.ok,
        corners=square.describe(),
    )


def family_schema(listing: FamilyListing) -> FamilySchema:
    return FamilySchema(
        p=listing.p,
        m=listing.m,
        deltas=[d.format() for d in listing.deltas],
        matrix=[[v.verdict for v in row] for row in listing.verdicts],
    )


def unit_search_schema(report: UnitSearchReport) -> UnitSearchSchema:
    return UnitSearchSchema(
        ring=report.ring,
        support_bound=report.support_bound,
        height_bound=report.height_bound,
        word_length=report.word_length,
        candidates=report.candidates,
        units=[u.format() for u in report.units],
        nontrivial=[u.format() for u in report.nontrivial],
    )
