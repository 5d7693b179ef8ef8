"""
Command-line surface.

Exit codes: 0 success, 1 usage or validation error, 2 verification failure,
3 disagreement between the decision procedure and the brute-force search.
"""

import logging
import os
from pathlib import Path
from typing import Annotated

import typer
import uvicorn
from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from stablyfree.certificates import (
    brute_force_schema,
    build_certificate,
    exactness_schema,
    family_schema,
    module_schema,
    square_from_schema,
    unit_search_schema,
    verdict_schema,
    verify_certificate,
)
from stablyfree.coeff_ring import CoeffRing
from stablyfree.construction import (
    SQUARES,
    DeltaSpec,
    InconsistentResult,
    agrees,
    brute_force_check,
    build_sigma_square,
    certify_distinct,
    delta,
    family,
    trivialize,
    unit_search,
)
from stablyfree.group_ring import GroupRing
from stablyfree.matrix_k1 import VerificationFailed
from stablyfree.milnor import MilnorSquare, check_exactness
from stablyfree.schemas import CertificateSchema, CertifySchema, RunConfig, SquareSchema
from stablyfree.utils import AlgebraError, logger, make_rng

EXIT_INVALID = 1
EXIT_VERIFICATION = 2
EXIT_INCONSISTENT = 3

app = typer.Typer(
    name="stablyfree",
    help="Stably free non-free modules over Z[G x F_m]: squares, delta_n, certificates.",
    no_args_is_help=True,
)

console = Console()
err_console = Console(stderr=True)

P = Annotated[int, typer.Option("--p", help="Prime p.")]
M = Annotated[int, typer.Option("--m", help="Rank of the free group.")]
N = Annotated[int, typer.Option("--n", help="Index n of delta_n.")]
Format = Annotated[str, typer.Option("--format", help="text or json.")]
Seed = Annotated[int | None, typer.Option("--seed", help="Seed for randomized checks.")]
Out = Annotated[Path | None, typer.Option("--out", help="Also write the JSON result here.")]


@app.callback()
def main(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")] = False,
):
    handler = RichHandler(console=err_console, show_path=False)
    logger.handlers[:] = [handler]
    logger.propagate = False
    if verbose:
        logger.setLevel(logging.DEBUG)


def _config(command: str, **values) -> RunConfig:
    try:
        return RunConfig(command=command, **values)
    except ValidationError as exc:
        for error in exc.errors():
            field = ".".join(str(part) for part in error["loc"])
            err_console.print(f"[red]Invalid {field}:[/red] {escape(error['msg'])}")
        raise typer.Exit(EXIT_INVALID)


def _fail(message: str, code: int):
    err_console.print(f"[red]{escape(message)}[/red]")
    raise typer.Exit(code)


def _emit(config: RunConfig, result: BaseModel, out: Path | None, text: Table | str):
    document = result.model_dump_json(indent=2)
    if out is not None:
        out.write_text(document)
        logger.info("Wrote %s", out)
    if config.format == "json":
        console.print_json(document)
    else:
        console.print(text, markup=False, highlight=False, soft_wrap=isinstance(text, str))


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        _fail(f"Expected comma separated integers, got {text!r}", EXIT_INVALID)


@app.command("check-square")
def check_square(
    p: P = 2,
    m: M = 2,
    which: Annotated[str, typer.Option(help="A, B, unit-lemma or sigma.")] = "A",
    orders: Annotated[str | None, typer.Option(help="Invariant factors of G, e.g. 2,2.")] = None,
    subgroup: Annotated[
        str | None, typer.Option(help="Generators of H, e.g. '1,0' or '2;4'.")
    ] = None,
    descriptor: Annotated[
        Path | None, typer.Option(help="Square descriptor JSON to check instead.")
    ] = None,
    samples: Annotated[int, typer.Option(help="Randomized samples.")] = 200,
    output_format: Format = "text",
    seed: Seed = None,
    out: Out = None,
):
    """Checks that a Milnor square is a fibre square on randomized samples."""
    config = _config("check-square", p=p, m=m, samples=samples, format=output_format, seed=seed)
    try:
        square = _load_square(config, which, orders, subgroup, descriptor)
    except (AlgebraError, ValueError) as exc:
        _fail(str(exc), EXIT_INVALID)
    report = check_exactness(square, config.samples, make_rng(config.seed))
    table = Table(title=f"Square {square.name}")
    table.add_column("corner")
    table.add_column("ring")
    for corner, ring in square.describe().items():
        table.add_row(corner, escape(ring))
    table.caption = f"{report.checked} reconstructions, {len(report.failures)} failures"
    _emit(config, exactness_schema(report, square), out, table)
    for failure in report.failures[:10]:
        err_console.print(f"[red]{escape(failure)}[/red]")
    if not report.ok:
        raise typer.Exit(EXIT_VERIFICATION)


def _load_square(
    config: RunConfig,
    which: str,
    orders: str | None,
    subgroup: str | None,
    descriptor: Path | None,
) -> MilnorSquare:
    if descriptor is not None:
        return square_from_schema(SquareSchema.model_validate_json(descriptor.read_text()))
    if which == "sigma":
        if orders is None or subgroup is None:
            raise ValueError("--which sigma needs --orders and --subgroup")
        generators = [_parse_ints(part) for part in subgroup.split(";")]
        return build_sigma_square(_parse_ints(orders), generators, config.m)
    if which not in SQUARES:
        raise ValueError(f"Unknown square {which!r}")
    return SQUARES[which](config.p, config.m)


@app.command("gen-module")
def gen_module(
    p: P = 2,
    m: M = 2,
    n: N = 1,
    output_format: Format = "json",
    out: Out = None,
):
    """
    delta_n with its y-adic layers and the commutator it comes from.

    JSON gives delta one term per word in shortlex order; text collects words that share a
    coefficient, as in 1 + (1 + x)*(t + s*t*s^-1).
    """
    config = _config("gen-module", p=p, m=m, n=n, format=output_format)
    spec = DeltaSpec(config.p, config.m, config.n)
    result = module_schema(spec)
    text = "\n".join(
        [f"delta_{n} = {delta(spec).format_grouped()}"]
        + [f"T_{k} = {layer}" for k, layer in enumerate(result.y_layers)]
    )
    _emit(config, result, out, text)


@app.command()
def certify(
    p: P = 2,
    m: M = 2,
    n: N = 1,
    n2: Annotated[int, typer.Option("--n2", help="Index of the second delta.")] = 2,
    len_bound: Annotated[
        int, typer.Option("--len-bound", help="Word length for the brute-force cross-check.")
    ] = 4,
    output_format: Format = "json",
    out: Out = None,
):
    """Decides whether delta_n and delta_n2 give the same class, with a brute-force check."""
    config = _config(
        "certify", p=p, m=m, n=n, n2=n2, len_bound=len_bound, format=output_format
    )
    try:
        verdict = certify_distinct(config.p, config.m, config.n, config.n2)
    except InconsistentResult as exc:
        _fail(str(exc), EXIT_INCONSISTENT)
    report = brute_force_check(config.p, config.m, config.n, config.n2, config.len_bound)
    consistent = agrees(verdict, report)
    result = CertifySchema(
        decision=verdict_schema(verdict),
        brute_force=brute_force_schema(report),
        consistent=consistent,
    )
    text = Table(title=f"delta_{n} vs delta_{n2} over F_{p}: {verdict.verdict}")
    text.add_column("layer")
    text.add_column("constraint")
    text.add_column("resolution")
    for step in verdict.trace:
        text.add_row(str(step.layer), escape(step.constraint), escape(step.resolution))
    text.caption = f"{report.words_checked} words, {len(report.hits)} brute-force hits"
    _emit(config, result, out, text)
    if not consistent:
        _fail("Decision procedure and brute force disagree", EXIT_INCONSISTENT)


@app.command("trivialize")
def trivialize_command(
    p: P = 2,
    m: M = 2,
    n: N = 1,
    output_format: Format = "json",
    out: Out = None,
):
    """Elementary-matrix certificate that diag(delta_n, 1) lifts to Z[C_p][F_m]."""
    config = _config("trivialize", p=p, m=m, n=n, format=output_format)
    try:
        result = trivialize(config.p, config.m, config.n)
    except VerificationFailed as exc:
        _fail(str(exc), EXIT_VERIFICATION)
    certificate = build_certificate(result)
    text = f"{len(certificate.factors)} elementary factors over {result.square.plus}"
    _emit(config, certificate, out, text)


@app.command("verify-certificate")
def verify_certificate_command(
    path: Annotated[Path, typer.Argument(help="Certificate written by trivialize.")],
    output_format: Format = "text",
):
    """Re-multiplies a certificate and checks its image."""
    config = _config("verify-certificate", format=output_format)
    try:
        certificate = CertificateSchema.model_validate_json(path.read_text())
    except (OSError, ValidationError) as exc:
        _fail(f"Cannot read certificate: {exc}", EXIT_INVALID)
    try:
        result = verify_certificate(certificate)
    except AlgebraError as exc:
        _fail(f"Certificate rejected: {exc}", EXIT_VERIFICATION)
    _emit(config, result, None, result.detail)


@app.command("family")
def family_command(
    p: P = 2,
    m: M = 2,
    n: Annotated[int, typer.Option("--n", help="Number of modules.")] = 3,
    output_format: Format = "json",
    out: Out = None,
):
    """delta_1 .. delta_N with the pairwise verdict matrix."""
    config = _config("family", p=p, m=m, n=n, format=output_format)
    try:
        result = family_schema(family(config.p, config.m, config.n))
    except InconsistentResult as exc:
        _fail(str(exc), EXIT_INCONSISTENT)
    table = Table(title=f"delta_1 .. delta_{n} over F_{p}")
    table.add_column("")
    for j in range(1, n + 1):
        table.add_column(str(j))
    for i, row in enumerate(result.matrix, start=1):
        table.add_row(str(i), *row)
    _emit(config, result, out, table)


@app.command("unit-search")
def unit_search_command(
    relation: Annotated[
        list[str] | None,
        typer.Option(help="Coefficient relation as name:polynomial, e.g. 'x:x^2+1'."),
    ] = None,
    characteristic: Annotated[int, typer.Option(help="Coefficient characteristic.")] = 0,
    local: Annotated[bool, typer.Option(help="Coefficients form a local F_p[C_p^k].")] = False,
    m: M = 2,
    rank: Annotated[int | None, typer.Option(help="Free-group rank, overrides --m.")] = None,
    support_bound: Annotated[int, typer.Option("--support-bound")] = 2,
    height_bound: Annotated[int, typer.Option("--height-bound")] = 2,
    word_length: Annotated[int, typer.Option(help="Length of candidate words.")] = 1,
    output_format: Format = "text",
    out: Out = None,
):
    """Bounded search for units of R[F_m], split into trivial and nontrivial ones."""
    config = _config(
        "unit-search",
        support_bound=support_bound,
        height_bound=height_bound,
        format=output_format,
    )
    try:
        variables, relations = [], []
        for item in relation or []:
            name, _, text = item.partition(":")
            variables.append(name.strip())
            relations.append(text)
        coefficients = CoeffRing.from_presentation(variables, relations, characteristic, local)
        ring = GroupRing(coefficients, m if rank is None else rank)
    except (AlgebraError, ValueError) as exc:
        _fail(str(exc), EXIT_INVALID)
    report = unit_search(ring, config.support_bound, config.height_bound, word_length)
    result = unit_search_schema(report)
    text = (
        f"{result.candidates} candidates over {result.ring}: {len(result.units)} units, "
        f"{len(result.nontrivial)} nontrivial: {', '.join(result.nontrivial) or 'none'}"
    )
    _emit(config, result, out, text)


@app.command()
def serve(
    host: Annotated[str | None, typer.Option(help="Bind address.")] = None,
    port: Annotated[int | None, typer.Option(help="Bind port.")] = None,
):
    """Runs the HTTP service."""
    uvicorn.run(
        "stablyfree.main:app",
        host=host or os.getenv("HOST", "127.0.0.1"),
        port=port or int(os.getenv("PORT", "8000")),
    )


if __name__ == "__main__":
    app()
