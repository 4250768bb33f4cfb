"""Solvability certificates for equation systems over unitary-embeddable groups.

The pipeline classifies a presentation (the augmented equations, constants
deleted) by the cheapest available reason that equations with those shapes
are solvable over any Connes-embeddable (in particular, any residually
finite) group:

* ``Direct`` -- the exponent matrix has full row rank, so the classical
  degree argument of Gerstenhaber and Rothaus applies as-is.
* ``OneRelatorTorsionFree`` / ``OneRelatorTorsion`` -- a single equation
  whose quotient is a one-relator group; Lyndon's identity theorem gives an
  aspherical presentation complex (torsion-free case) or a covering whose
  second differential differs from an injective one by the factor ``r``.
* ``SmallCancellation`` -- metric small cancellation C'(lambda) with
  root-primitive relators; such presentation complexes are aspherical.
* ``Covering`` -- an explicit finite-index coset table whose covering
  complex has injective second differential.
* ``AssertedAspherical`` -- an external annotation (a literature citation)
  vouches for asphericality; the tool never infers this itself.
* ``Unknown`` -- none of the above; carries the exponent rank as evidence
  and a flag when a search budget was exhausted rather than completed.

Every certificate except ``Unknown`` can be re-verified from its embedded
evidence by :func:`verify_certificate`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coverings import BudgetExceeded, CosetTable, h2_trivial_covering, low_index_subgroups
from .presentation import Presentation, exponent_matrix, is_d2_injective, smith_normal_form
from .words import Word, cyclic_reduce, max_root, reduce

__all__ = [
    "Certificate",
    "CertifyOptions",
    "certify",
    "small_cancellation_check",
    "verify_certificate",
]

VARIANTS = (
    "Direct",
    "OneRelatorTorsionFree",
    "OneRelatorTorsion",
    "SmallCancellation",
    "Covering",
    "AssertedAspherical",
    "Unknown",
)


@dataclass(frozen=True)
class Certificate:
    """A machine-checkable reason a system of equations is solvable.

    Only the fields relevant to ``variant`` are populated; the rest stay
    ``None``.  ``Unknown`` is the absence of a certificate and records what
    was learned (exponent rank, whether a budget ran out) rather than a
    claim.
    """

    variant: str
    invariant_factors: tuple[int, ...] | None = None
    root: Word | None = None
    exponent: int | None = None
    lam: Fraction | None = None
    table: CosetTable | None = None
    citation: str | None = None
    exponent_rank: int | None = None
    budget_exhausted: bool = False

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown certificate variant {self.variant!r}")

    @property
    def is_certificate(self) -> bool:
        """True when a solvability reason was actually produced."""
        return self.variant != "Unknown"

    def summary(self) -> str:
        if self.variant == "Direct":
            return "Direct: exponent matrix has full row rank (invariant factors {})".format(
                list(self.invariant_factors or ())
            )
        if self.variant == "OneRelatorTorsionFree":
            return "OneRelatorTorsionFree: single relator is not a proper power"
        if self.variant == "OneRelatorTorsion":
            return f"OneRelatorTorsion: relator is a proper power with exponent {self.exponent}"
        if self.variant == "SmallCancellation":
            return f"SmallCancellation: C'({self.lam}) with root-primitive relators"
        if self.variant == "Covering":
            assert self.table is not None
            return f"Covering: index-{self.table.index} cover with injective second differential"
        if self.variant == "AssertedAspherical":
            return f"AssertedAspherical: annotated aspherical ({self.citation})"
        flags = " (budget exhausted)" if self.budget_exhausted else ""
        return f"Unknown: no certificate found{flags}; exponent rank {self.exponent_rank}"


@dataclass(frozen=True)
class CertifyOptions:
    """Budgets and annotations steering the certificate cascade.

    ``assertions`` carries externally supplied asphericality annotations
    (citation tags); ``disabled`` names cascade branches to skip, which
    exists so tests can exercise a later branch on input an earlier one
    would otherwise claim.
    """

    max_index: int = 5
    coset_budget: int = 500_000
    assertions: tuple[str, ...] = ()
    disabled: frozenset[str] = field(default_factory=frozenset)
    lam: Fraction = Fraction(1, 6)


def _symmetrized(relators: tuple[Word, ...]) -> list[Word]:
    """All cyclic rotations of every relator and its inverse, deduplicated."""
    out: dict[Word, None] = {}
    for r in relators:
        for base in (r, r.inverse()):
            letters = base.letters
            for s in range(len(letters)):
                out.setdefault(Word(letters[s:] + letters[:s]))
    return list(out)


def _common_prefix_length(a: Word, b: Word) -> int:
    n = 0
    for x, y in zip(a.letters, b.letters):
        if x != y:
            break
        n += 1
    return n


def small_cancellation_check(P: Presentation, lam: Fraction = Fraction(1, 6)) -> bool:
    """Exact metric small-cancellation test C'(``lam``) with a primitivity gate.

    Every relator must be root-primitive (not a proper power); a proper
    power fails immediately rather than raising, since that is a negative
    answer, not a malformed input.  A *piece* is the longest common prefix
    of two distinct elements of the symmetrized set (all rotations of all
    relators and their inverses); the condition demands every piece be
    shorter than ``lam`` times the length of each relator containing it.
    Comparisons use exact rational arithmetic.

    Raises ``ValueError`` when a relator is empty or not cyclically reduced.
    """
    if lam <= 0:
        raise ValueError("the small-cancellation parameter must be positive")
    for idx, r in enumerate(P.relators):
        if len(r) == 0:
            raise ValueError(f"relator {idx} is empty")
        if not r.is_cyclically_reduced():
            raise ValueError(f"relator {idx} is not cyclically reduced")
    for r in P.relators:
        _, power = max_root(r)
        if power != 1:
            return False
    elems = _symmetrized(P.relators)
    for a_idx, a in enumerate(elems):
        for b in elems[a_idx + 1 :]:
            piece = _common_prefix_length(a, b)
            if piece == 0:
                continue
            # a rotation has the length of its source relator, so the piece
            # lies inside relators of lengths len(a) and len(b)
            if Fraction(piece) >= lam * min(len(a), len(b)):
                return False
    return True


def _one_relator_root(relator: Word) -> tuple[Word, int]:
    """Primitive root of a single relator, conjugated back to position.

    Writes the cyclic core as ``z0^r`` and returns ``(c z0 c^-1, r)`` where
    ``c`` is the conjugator peeled off during cyclic reduction, so the
    relator itself is freely equal to the returned root raised to ``r``.
    """
    core, conj = cyclic_reduce(relator)
    z0, power = max_root(core)
    z = reduce(conj * z0 * conj.inverse())
    return z, power


def certify(P: Presentation, opts: CertifyOptions | None = None) -> Certificate:
    """Run the certificate cascade and return the first branch that fires.

    Branch order: full-rank exponent matrix, one-relator structure, metric
    small cancellation, finite-covering search, asserted asphericality,
    then ``Unknown``.  A search budget running out downgrades the covering
    branch to a flag on the ``Unknown`` result instead of raising.
    """
    opts = opts or CertifyOptions()
    budget_hit = False

    if "direct" not in opts.disabled and is_d2_injective(P):
        snf = smith_normal_form(exponent_matrix(P))
        return Certificate("Direct", invariant_factors=snf.invariant_factors)

    if "one_relator" not in opts.disabled and P.k == 1 and len(P.relators[0]) > 0:
        z, power = _one_relator_root(P.relators[0])
        if power == 1:
            return Certificate("OneRelatorTorsionFree", root=z, exponent=1)
        return Certificate("OneRelatorTorsion", root=z, exponent=power)

    if "small_cancellation" not in opts.disabled and P.k > 0:
        cores = tuple(cyclic_reduce(r)[0] for r in P.relators)
        if all(len(c) > 0 for c in cores):
            reduced = Presentation(P.n, cores)
            if small_cancellation_check(reduced, opts.lam):
                return Certificate("SmallCancellation", lam=opts.lam)

    if "covering" not in opts.disabled:
        try:
            tables = low_index_subgroups(P, opts.max_index, node_budget=opts.coset_budget)
        except BudgetExceeded:
            budget_hit = True
        else:
            for table in tables:
                if h2_trivial_covering(P, table):
                    return Certificate("Covering", table=table)

    if "asserted" not in opts.disabled and opts.assertions:
        return Certificate("AssertedAspherical", citation=opts.assertions[0])

    return Certificate(
        "Unknown",
        exponent_rank=exponent_matrix(P).rank(),
        budget_exhausted=budget_hit,
    )


def verify_certificate(P: Presentation, cert: Certificate) -> bool:
    """Re-check a certificate against the presentation from its evidence alone.

    Recomputes the defining condition of each variant -- matrix rank, root
    extraction, piece enumeration, covering homology -- rather than trusting
    the fields.  ``Unknown`` certifies nothing and never verifies;
    ``AssertedAspherical`` verifies exactly when the annotation is present,
    since the annotation *is* its evidence.
    """
    if cert.variant == "Direct":
        if not is_d2_injective(P):
            return False
        snf = smith_normal_form(exponent_matrix(P))
        return snf.invariant_factors == cert.invariant_factors

    if cert.variant in ("OneRelatorTorsionFree", "OneRelatorTorsion"):
        if P.k != 1 or len(P.relators[0]) == 0:
            return False
        z, power = _one_relator_root(P.relators[0])
        if cert.root != z or cert.exponent != power:
            return False
        return power == 1 if cert.variant == "OneRelatorTorsionFree" else power >= 2

    if cert.variant == "SmallCancellation":
        if cert.lam is None or P.k == 0:
            return False
        cores = tuple(cyclic_reduce(r)[0] for r in P.relators)
        if any(len(c) == 0 for c in cores):
            return False
        return small_cancellation_check(Presentation(P.n, cores), cert.lam)

    if cert.variant == "Covering":
        if cert.table is None:
            return False
        try:
            cert.table.validate(P)
        except ValueError:
            return False
        return h2_trivial_covering(P, cert.table)

    if cert.variant == "AssertedAspherical":
        return bool(cert.citation)

    return False
