from typing import Annotated

from fastapi import APIRouter, HTTPException, Query, status

from stablyfree.certificates import (
    brute_force_schema,
    build_certificate,
    exactness_schema,
    family_schema,
    module_schema,
    verdict_schema,
    verify_certificate,
)
from stablyfree.construction import (
    SQUARES,
    DeltaSpec,
    agrees,
    brute_force_check,
    build_sigma_square,
    certify_distinct,
    family,
    trivialize,
)
from stablyfree.matrix_k1 import VerificationFailed
from stablyfree.milnor import MilnorSquare, UnsupportedSubgroup, check_exactness
from stablyfree.schemas import (
    CertificateSchema,
    CertifyQuery,
    CertifySchema,
    DeltaQuery,
    ExactnessQuery,
    ExactnessSchema,
    FamilyQuery,
    FamilySchema,
    ModuleSchema,
    VerificationSchema,
)
from stablyfree.utils import AlgebraError, error_response, logger, make_rng

squares_router = APIRouter(prefix="/squares", tags=["Squares"])
modules_router = APIRouter(prefix="/modules", tags=["Modules"])
certificates_router = APIRouter(prefix="/certificates", tags=["Certificates"])

invalid_square_resp = {
    status.HTTP_400_BAD_REQUEST: error_response(
        "The square or subgroup description is not valid.",
        ["Invalid square", "Unsupported subgroup"],
    )
}

rejected_resp = {
    status.HTTP_409_CONFLICT: error_response(
        "The certificate does not verify.", ["Certificate rejected"]
    )
}

invalid_square_err = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST, detail="Invalid square"
)

unsupported_subgroup_err = HTTPException(
    status_code=status.HTTP_400_BAD_REQUEST, detail="Unsupported subgroup"
)

rejected_err = HTTPException(
    status_code=status.HTTP_409_CONFLICT, detail="Certificate rejected"
)


def _square(which: str, data: ExactnessQuery) -> MilnorSquare:
    try:
        if which == "sigma":
            if data.orders is None or data.subgroup is None:
                raise invalid_square_err
            orders = [int(k) for k in data.orders.split(",")]
            generators = [
                [int(k) for k in part.split(",")] for part in data.subgroup.split(";")
            ]
            return build_sigma_square(orders, generators, data.m)
        if which not in SQUARES:
            raise invalid_square_err
        return SQUARES[which](data.p, data.m)
    except UnsupportedSubgroup:
        raise unsupported_subgroup_err
    except (AlgebraError, ValueError) as exc:
        logger.info("Rejected square %s: %s", which, exc)
        raise invalid_square_err


@squares_router.get(
    "/{which}/exactness",
    response_model=ExactnessSchema,
    status_code=status.HTTP_200_OK,
    responses=invalid_square_resp,
)
def get_exactness(which: str, data: Annotated[ExactnessQuery, Query()]):
    square = _square(which, data)
    report = check_exactness(square, data.samples, make_rng(data.seed))
    return exactness_schema(report, square)


@modules_router.get("/delta", response_model=ModuleSchema, status_code=status.HTTP_200_OK)
def get_delta(data: Annotated[DeltaQuery, Query()]):
    return module_schema(DeltaSpec(data.p, data.m, data.n))


@modules_router.get("/certify", response_model=CertifySchema, status_code=status.HTTP_200_OK)
def get_certify(data: Annotated[CertifyQuery, Query()]):
    verdict = certify_distinct(data.p, data.m, data.n, data.n2)
    report = brute_force_check(data.p, data.m, data.n, data.n2, data.len_bound)
    return CertifySchema(
        decision=verdict_schema(verdict),
        brute_force=brute_force_schema(report),
        consistent=agrees(verdict, report),
    )


@modules_router.get("/family", response_model=FamilySchema, status_code=status.HTTP_200_OK)
def get_family(data: Annotated[FamilyQuery, Query()]):
    return family_schema(family(data.p, data.m, data.count))


@certificates_router.get(
    "/trivialize", response_model=CertificateSchema, status_code=status.HTTP_200_OK
)
def get_trivialization(data: Annotated[DeltaQuery, Query()]):
    return build_certificate(trivialize(data.p, data.m, data.n))


@certificates_router.post(
    "/verify",
    response_model=VerificationSchema,
    status_code=status.HTTP_200_OK,
    responses=rejected_resp,
)
def post_verify(body: CertificateSchema):
    try:
        return verify_certificate(body)
    except (AlgebraError, VerificationFailed) as exc:
        logger.info("Rejected certificate: %s", exc)
        raise rejected_err
