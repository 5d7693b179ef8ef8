"""
Square matrices over a GroupRing (rank 0 for plain coefficient matrices), elementary and
diagonal factors, Whitehead factorizations and reduction modulo a nilpotent ideal.

E(i, j; a) acting on the left adds a times row j to row i; indices are 1-based.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from functools import reduce

from stablyfree.coeff_ring import CoeffHom, CoeffRing, CoeffSection, NotAUnit
from stablyfree.group_ring import GrElem, GroupRing, apply_hom_gr, gr_unit_inverse
from stablyfree.utils import AlgebraError, logger


class VerificationFailed(AlgebraError):
    pass


class DiagonalizationFailed(AlgebraError):
    pass


@dataclass(frozen=True)
class RMatrix:
    ring: GroupRing
    rows: tuple[tuple[GrElem, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(row) for row in self.rows))
        n = len(self.rows)
        for row in self.rows:
            if len(row) != n:
                raise ValueError("Matrix must be square")
            for entry in row:
                if entry.ring != self.ring:
                    raise ValueError(f"Entry {entry} is not in {self.ring}")

    @classmethod
    def from_rows(cls, ring: GroupRing, rows: Sequence[Sequence["GrElem | int"]]) -> "RMatrix":
        return cls(
            ring,
            tuple(
                tuple(e if isinstance(e, GrElem) else ring.scalar(e) for e in row)
                for row in rows
            ),
        )

    @property
    def size(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> GrElem:
        """1-based."""
        return self.rows[i - 1][j - 1]

    def map(self, fn: Callable[[GrElem], GrElem], ring: GroupRing | None = None) -> "RMatrix":
        return RMatrix(ring or self.ring, tuple(tuple(fn(e) for e in row) for row in self.rows))

    def __mul__(self, other: "RMatrix") -> "RMatrix":
        return mat_mul(self, other)


def identity(ring: GroupRing, n: int) -> RMatrix:
    return RMatrix(
        ring,
        tuple(tuple(ring.one if i == j else ring.zero for j in range(n)) for i in range(n)),
    )


def mat_mul(a: RMatrix, b: RMatrix) -> RMatrix:
    if a.ring != b.ring or a.size != b.size:
        raise ValueError("Matrices do not multiply")
    columns = list(zip(*b.rows))
    rows = []
    for row in a.rows:
        new_row = []
        for column in columns:
            total = a.ring.zero
            for x, y in zip(row, column):
                if not (x.is_zero or y.is_zero):
                    total = total + x * y
            new_row.append(total)
        rows.append(tuple(new_row))
    return RMatrix(a.ring, tuple(rows))


def mat_eq(a: RMatrix, b: RMatrix) -> bool:
    return a == b


@dataclass(frozen=True)
class Elementary:
    i: int
    j: int
    coeff: GrElem

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("Elementary factor needs i != j")

    def matrix(self, n: int) -> RMatrix:
        base = identity(self.coeff.ring, n)
        rows = [list(row) for row in base.rows]
        rows[self.i - 1][self.j - 1] = self.coeff
        return RMatrix(base.ring, tuple(tuple(r) for r in rows))

    def inverse(self) -> "Elementary":
        return Elementary(self.i, self.j, -self.coeff)

    def map(self, fn: Callable[[GrElem], GrElem]) -> "Elementary":
        return Elementary(self.i, self.j, fn(self.coeff))


@dataclass(frozen=True)
class Diagonal:
    entries: tuple[GrElem, ...]
    inverses: tuple[GrElem, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "inverses", tuple(self.inverses))
        if len(self.entries) != len(self.inverses):
            raise ValueError("Every diagonal entry needs an inverse")
        for d, e in zip(self.entries, self.inverses):
            if not ((d * e).is_one and (e * d).is_one):
                raise VerificationFailed(f"{e} is not a two-sided inverse of {d}")

    @classmethod
    def of_units(cls, entries: Iterable[GrElem]) -> "Diagonal":
        entries = tuple(entries)
        return cls(entries, tuple(gr_unit_inverse(d) for d in entries))

    def matrix(self, n: int) -> RMatrix:
        if n != len(self.entries):
            raise ValueError(f"Diagonal factor has size {len(self.entries)}, not {n}")
        ring = self.entries[0].ring
        return RMatrix(
            ring,
            tuple(
                tuple(self.entries[i] if i == j else ring.zero for j in range(n))
                for i in range(n)
            ),
        )

    def inverse(self) -> "Diagonal":
        return Diagonal(self.inverses, self.entries)


Factor = Elementary | Diagonal


def conjugate_elementary(e: Elementary, diagonal: Diagonal) -> Elementary:
    """D^-1 * E(i, j; a) * D = E(i, j; d_i^-1 * a * d_j)."""
    return Elementary(
        e.i, e.j, diagonal.inverses[e.i - 1] * e.coeff * diagonal.entries[e.j - 1]
    )


@dataclass(frozen=True)
class FactorList:
    size: int
    factors: tuple[Factor, ...]
    product: RMatrix

    def evaluate(self) -> RMatrix:
        start = identity(self.product.ring, self.size)
        return reduce(lambda acc, f: acc * f.matrix(self.size), self.factors, start)

    def verify(self) -> "FactorList":
        """
        :raises VerificationFailed: if the factors do not multiply to the claimed product.
        """
        if self.product.size != self.size:
            raise VerificationFailed("Claimed product has the wrong size")
        if self.evaluate() != self.product:
            raise VerificationFailed("Product of factors differs from the claimed product")
        logger.debug("Verified %d factors of size %d", len(self.factors), self.size)
        return self

    @property
    def is_elementary(self) -> bool:
        return all(isinstance(f, Elementary) for f in self.factors)

    @classmethod
    def of(cls, ring: GroupRing, size: int, factors: Iterable[Factor]) -> "FactorList":
        """Multiplies the factors out and records the result as the claimed product."""
        factors = tuple(factors)
        fl = cls(size, factors, identity(ring, size))
        return cls(size, factors, fl.evaluate())


def _check_inverse(u: GrElem, u_inv: GrElem):
    if not ((u * u_inv).is_one and (u_inv * u).is_one):
        raise VerificationFailed(f"{u_inv} is not a two-sided inverse of {u}")


def whitehead_diag(u: GrElem, u_inv: GrElem) -> FactorList:
    """Six elementary factors with product diag(u, u^-1)."""
    _check_inverse(u, u_inv)
    ring = u.ring
    one = ring.one
    factors = (
        Elementary(1, 2, u),
        Elementary(2, 1, -u_inv),
        Elementary(1, 2, u),
        Elementary(1, 2, -one),
        Elementary(2, 1, one),
        Elementary(1, 2, -one),
    )
    claimed = Diagonal((u, u_inv), (u_inv, u)).matrix(2)
    return FactorList(2, factors, claimed).verify()


def commutator_diag(
    alpha: GrElem, alpha_inv: GrElem, beta: GrElem, beta_inv: GrElem
) -> FactorList:
    """
    diag(alpha*beta*alpha^-1*beta^-1, 1) as diag(alpha, alpha^-1) diag(beta, beta^-1)
    diag((beta*alpha)^-1, beta*alpha), each expanded by whitehead_diag.
    """
    _check_inverse(alpha, alpha_inv)
    _check_inverse(beta, beta_inv)
    parts = (
        whitehead_diag(alpha, alpha_inv),
        whitehead_diag(beta, beta_inv),
        whitehead_diag(alpha_inv * beta_inv, beta * alpha),
    )
    ring = alpha.ring
    commutator = alpha * beta * alpha_inv * beta_inv
    claimed = RMatrix(ring, ((commutator, ring.zero), (ring.zero, ring.one)))
    factors = tuple(f for part in parts for f in part.factors)
    return FactorList(2, factors, claimed).verify()


def lift_factors(fl: FactorList, section: CoeffSection) -> FactorList:
    """
    Lifts every elementary coefficient through the section of a surjective hom.

    :raises VerificationFailed: if the hom of the lifted product is not the original product.
    """
    if not fl.is_elementary:
        raise ValueError("Only elementary factor lists can be lifted")
    rank = fl.product.ring.rank
    source = GroupRing(section.hom.source, rank)

    def lift(a: GrElem) -> GrElem:
        return source.element({w: section(c) for w, c in a.terms})

    lifted = FactorList.of(source, fl.size, (f.map(lift) for f in fl.factors))
    image = lifted.product.map(lambda e: apply_hom_gr(section.hom, e), fl.product.ring)
    if image != fl.product:
        raise VerificationFailed("Lifted product does not map onto the original product")
    return lifted


def stabilize(alpha: RMatrix, k: int) -> RMatrix:
    """alpha (+) I_k."""
    ring, n = alpha.ring, alpha.size
    rows = [list(row) + [ring.zero] * k for row in alpha.rows]
    for i in range(k):
        rows.append([ring.zero] * (n + i) + [ring.one] + [ring.zero] * (k - i - 1))
    return RMatrix(ring, tuple(tuple(r) for r in rows))


Diagonalizer = Callable[[RMatrix], tuple[Diagonal, list[Elementary]]]


def gaussian_diagonalize(a: RMatrix) -> tuple[Diagonal, list[Elementary]]:
    """
    Writes an invertible matrix over a field as D * E_1 * .. * E_k.

    Gauss-Jordan with row additions only; a zero pivot is repaired by adding a lower row.

    :raises DiagonalizationFailed: if the matrix is singular or a pivot cannot be inverted.
    """
    ring, n = a.ring, a.size
    rows = [list(row) for row in a.rows]
    ops: list[Elementary] = []

    def add_row(target: int, source: int, factor: GrElem):
        ops.append(Elementary(target + 1, source + 1, factor))
        rows[target] = [x + factor * y for x, y in zip(rows[target], rows[source])]

    for k in range(n):
        if rows[k][k].is_zero:
            below = next((r for r in range(k + 1, n) if not rows[r][k].is_zero), None)
            if below is None:
                raise DiagonalizationFailed(f"Matrix is singular at column {k + 1}")
            add_row(k, below, ring.one)
        try:
            pivot_inv = gr_unit_inverse(rows[k][k])
        except NotAUnit as exc:
            raise DiagonalizationFailed(f"Pivot {rows[k][k]} is not invertible") from exc
        for r in range(n):
            if r != k and not rows[r][k].is_zero:
                add_row(r, k, -(rows[r][k] * pivot_inv))
    try:
        diagonal = Diagonal.of_units(rows[i][i] for i in range(n))
    except NotAUnit as exc:
        raise DiagonalizationFailed("Diagonal entry is not invertible") from exc
    # L_k..L_1 A = D, so A = D * prod(D^-1 L_i^-1 D)
    return diagonal, [conjugate_elementary(op.inverse(), diagonal) for op in ops]


@dataclass(frozen=True)
class NilpotentIdeal:
    """The kernel of ``projection``, assumed nilpotent, with a lift back from the quotient."""

    projection: CoeffHom

    @property
    def section(self) -> CoeffSection:
        return CoeffSection(self.projection)

    def project(self, a: RMatrix) -> RMatrix:
        quotient = GroupRing(self.projection.target, a.ring.rank)
        return a.map(lambda e: apply_hom_gr(self.projection, e), quotient)

    def lift(self, a: GrElem, ring: GroupRing) -> GrElem:
        section = self.section
        return ring.element({w: section(c) for w, c in a.terms})


def augmentation_ideal(ring: GroupRing) -> NilpotentIdeal:
    """The radical of a local F_p[G] coefficient ring: every variable goes to 1."""
    coefficients = ring.coefficients
    if not coefficients.local:
        raise DiagonalizationFailed(f"{coefficients} is not local")
    field = CoeffRing.integers(coefficients.characteristic)
    return NilpotentIdeal(CoeffHom.from_images(coefficients, field))


def _check_witness(a: RMatrix, witness: "RMatrix | FactorList | None"):
    n = a.size
    if witness is None:
        logger.warning("No invertibility witness supplied; relying on pivot inversion")
    elif isinstance(witness, FactorList):
        witness.verify()
        if witness.product != a:
            raise DiagonalizationFailed("Provenance factors do not multiply to the matrix")
    elif not (a * witness == identity(a.ring, n) == witness * a):
        raise DiagonalizationFailed("Witness is not a two-sided inverse")


def diagonal_reduce_nilpotent(
    a: RMatrix,
    ideal: NilpotentIdeal,
    diagonalizer: Diagonalizer = gaussian_diagonalize,
    witness: "RMatrix | FactorList | None" = None,
) -> FactorList:
    """
    Factors an invertible matrix as D * E_1 * .. * E_k given a factorization of its image
    modulo a nilpotent ideal.

    The image factorization is lifted to X = A * E^ * D^ which is congruent to the identity,
    so every diagonal pivot of X is a unit; clearing rows and columns from the last index
    down leaves a diagonal matrix, and all diagonal factors are moved to the front.

    :param a: The matrix to factor.
    :param ideal: The nilpotent ideal, given by its quotient map.
    :param diagonalizer: Factors the image of ``a`` in the quotient as D * prod(E).
    :param witness: Inverse matrix or provenance factorization of ``a``; verified when given.
    :raises DiagonalizationFailed: on a failed witness, quotient factorization or pivot.
    """
    _check_witness(a, witness)
    ring, n = a.ring, a.size
    quotient_diag, quotient_ops = diagonalizer(ideal.project(a))
    logger.debug("Quotient factorization with %d elementary factors", len(quotient_ops))

    # inverse of the quotient image is prod(E_l^-1 reversed) * D^-1
    lifted_ops = [op.map(lambda c: ideal.lift(c, ring)) for op in quotient_ops]
    try:
        lifted_diag = Diagonal.of_units(ideal.lift(d, ring) for d in quotient_diag.inverses)
    except NotAUnit as exc:
        raise DiagonalizationFailed("Lifted diagonal entry is not invertible") from exc
    x = a
    for op in reversed(lifted_ops):
        x = x * op.inverse().matrix(n)
    x = x * lifted_diag.matrix(n)
    image = ideal.project(x)
    if image != identity(image.ring, n):
        raise DiagonalizationFailed("Lifted factorization is not congruent to the identity")

    rows = [list(row) for row in x.rows]
    row_ops: list[Elementary] = []
    column_ops: list[Elementary] = []
    pivot_inverses: list[GrElem] = [ring.one] * n
    for k in reversed(range(n)):
        try:
            pivot_inv = gr_unit_inverse(rows[k][k])
        except NotAUnit as exc:
            raise DiagonalizationFailed(
                f"Pivot {rows[k][k]} is not invertible; the matrix is not invertible"
            ) from exc
        pivot_inverses[k] = pivot_inv
        for r in range(n):
            if r != k and not rows[r][k].is_zero:
                factor = -(rows[r][k] * pivot_inv)
                row_ops.append(Elementary(r + 1, k + 1, factor))
                rows[r] = [u + factor * v for u, v in zip(rows[r], rows[k])]
        for c in range(n):
            if c != k and not rows[k][c].is_zero:
                factor = -(pivot_inv * rows[k][c])
                column_ops.append(Elementary(k + 1, c + 1, factor))
                rows[k][c] = ring.zero
    reduced = Diagonal(tuple(rows[i][i] for i in range(n)), tuple(pivot_inverses))

    # X = prod(L^-1) * D' * prod(R^-1 reversed), A = X * D^^-1 * prod(E^)
    middle = [conjugate_elementary(op.inverse(), reduced) for op in row_ops]
    middle += [op.inverse() for op in reversed(column_ops)]
    front = reduced * lifted_diag.inverse()
    middle = [conjugate_elementary(op, lifted_diag.inverse()) for op in middle]
    result = FactorList(n, (front, *middle, *lifted_ops), a).verify()
    logger.info("Reduced a %dx%d matrix to %d factors", n, n, len(result.factors))
    return result
