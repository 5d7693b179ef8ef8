from typing import Annotated, Literal

import sympy
from pydantic import AfterValidator, BaseModel, Field


def check_prime(p: int) -> int:
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    return p


Prime = Annotated[int, AfterValidator(check_prime)]

OutputFormat = Literal["text", "json"]

Verdict = Literal["Distinct", "Equivalent", "Unresolved"]


class RingSchema(BaseModel):
    variables: list[str] = []
    relations: list[str] = []
    characteristic: int = Field(0, ge=0)
    local: bool = False


class HomSchema(BaseModel):
    images: dict[str, str]


class FibreSchema(BaseModel):
    variable: str
    order: int = Field(ge=2)
    step: int = Field(ge=1)


class SquareSchema(BaseModel):
    name: str
    rank: int = Field(ge=0)
    whole: RingSchema
    plus: RingSchema
    minus: RingSchema
    base: RingSchema
    pi_plus: HomSchema
    pi_minus: HomSchema
    psi_plus: HomSchema
    psi_minus: HomSchema
    fibre: FibreSchema


class TermSchema(BaseModel):
    word: str
    coeff: str


Element = list[TermSchema]


class FactorSchema(BaseModel):
    kind: Literal["elementary", "diagonal"]
    i: int | None = Field(None, ge=1)
    j: int | None = Field(None, ge=1)
    coeff: Element | None = None
    diagonal: list[Element] | None = None
    inverses: list[Element] | None = None


class CertificateSchema(BaseModel):
    p: Prime
    m: int = Field(ge=2)
    n: int = Field(ge=1)
    coefficients: RingSchema
    base: RingSchema
    psi_plus: HomSchema
    size: int = Field(ge=1)
    factors: list[FactorSchema]
    product: list[list[Element]]
    image: list[list[Element]]


class VerificationSchema(BaseModel):
    valid: bool
    factors: int
    detail: str


class TraceStepSchema(BaseModel):
    layer: int
    constraint: str
    resolution: str


class WitnessSchema(BaseModel):
    gamma: str
    w: str
    v: str


class VerdictSchema(BaseModel):
    p: int
    m: int
    n: int
    n2: int
    verdict: Verdict
    trace: list[TraceStepSchema]
    witnesses: WitnessSchema | None = None


class HitSchema(BaseModel):
    gamma: str
    w: str


class BruteForceSchema(BaseModel):
    length_bound: int
    words_checked: int
    hits: list[HitSchema]


class CertifySchema(BaseModel):
    decision: VerdictSchema
    brute_force: BruteForceSchema | None = None
    consistent: bool


class ExactnessSchema(BaseModel):
    square: str
    samples: int
    checked: int
    failures: list[str]
    ok: bool
    corners: dict[str, str] = {}


class CommutatorWitnessSchema(BaseModel):
    alpha: str
    alpha_inv: str
    sigma: str
    sigma_inv: str


class ModuleSchema(BaseModel):
    p: int
    m: int
    n: int
    delta: str
    y_layers: list[str]
    commutator_witness: CommutatorWitnessSchema


class FamilySchema(BaseModel):
    p: int
    m: int
    deltas: list[str]
    matrix: list[list[Verdict]]


class UnitSearchSchema(BaseModel):
    ring: str
    support_bound: int
    height_bound: int
    word_length: int
    candidates: int
    units: list[str]
    nontrivial: list[str]


class RunConfig(BaseModel):
    command: str
    p: Prime = 2
    m: int = Field(2, ge=2)
    n: int = Field(1, ge=1)
    n2: int = Field(1, ge=1)
    len_bound: int = Field(4, ge=1)
    support_bound: int = Field(2, ge=1)
    height_bound: int = Field(2, ge=1)
    samples: int = Field(200, ge=1)
    format: OutputFormat = "text"
    seed: int | None = None


class DeltaQuery(BaseModel):
    p: Prime
    m: int = Field(2, ge=2)
    n: int = Field(1, ge=1)


class CertifyQuery(DeltaQuery):
    n2: int = Field(1, ge=1)
    len_bound: int = Field(2, ge=0, le=6)


class FamilyQuery(BaseModel):
    p: Prime
    m: int = Field(2, ge=2)
    count: int = Field(3, ge=1, le=12)


class ExactnessQuery(BaseModel):
    p: Prime = 2
    m: int = Field(2, ge=0)
    samples: int = Field(50, ge=1, le=1000)
    seed: int = 0
    orders: str | None = None
    subgroup: str | None = None
