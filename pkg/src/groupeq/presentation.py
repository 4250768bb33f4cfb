"""Finite presentations and the integral linear algebra behind them.

The second differential of the presentation complex of ``<x_1..x_n | r_1..r_k>``
abelianises to the k-by-n matrix of exponent sums.  Triviality of second
homology of the complex is equivalent to that matrix being injective over
``ZZ``, i.e. having rank ``k``; every rank decision here is made in exact
integer arithmetic (Python ints, no floating point anywhere).

Besides the presentation type this module carries a small exact matrix class,
Smith normal form with full transform tracking (``U A V = D``), and the five
solvability-preserving presentation moves: Nielsen transformations on the
relators and on the generators, adjoining a generator that occurs exactly
once in a new relation, inverting a relator, and conjugating a relator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .words import Word, exponent_sum, reduce, variable

__all__ = [
    "IntegerMatrix",
    "SmithDecomposition",
    "Presentation",
    "exponent_matrix",
    "smith_normal_form",
    "is_d2_injective",
    "TransformOp",
    "NielsenRelator",
    "NielsenGenerator",
    "AddGenerator",
    "InvertRelator",
    "ConjugateRelator",
    "transform",
]


@dataclass(frozen=True)
class IntegerMatrix:
    """A dense matrix of arbitrary-precision integers.

    Rows may be empty (a presentation with no relators has a 0-by-n exponent
    matrix), so the shape is stored explicitly.
    """

    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.entries) != self.rows:
            raise ValueError("row count does not match entries")
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError("ragged matrix rows")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntegerMatrix":
        rows = [tuple(int(v) for v in r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, tuple(rows))

    @classmethod
    def identity(cls, n: int) -> "IntegerMatrix":
        return cls(n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def zero(cls, rows: int, cols: int) -> "IntegerMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    def entry(self, i: int, j: int) -> int:
        return self.entries[i][j]

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix(
            self.cols, self.rows,
            tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)),
        )

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.entries for v in row)

    def __matmul__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if not isinstance(other, IntegerMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch: {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        ot = other.transpose().entries
        return IntegerMatrix(
            self.rows, other.cols,
            tuple(
                tuple(sum(a * b for a, b in zip(row, col)) for col in ot)
                for row in self.entries
            ),
        )

    def rank(self) -> int:
        """Rank over the rationals by fraction-free (Bareiss) elimination."""
        m = self.to_lists()
        r = 0
        prev = 1
        for c in range(self.cols):
            piv = next((i for i in range(r, self.rows) if m[i][c] != 0), None)
            if piv is None:
                continue
            m[r], m[piv] = m[piv], m[r]
            for i in range(r + 1, self.rows):
                for j in range(c + 1, self.cols):
                    m[i][j] = (m[i][j] * m[r][c] - m[i][c] * m[r][j]) // prev
                m[i][c] = 0
            prev = m[r][c]
            r += 1
            if r == self.rows:
                break
        return r

    def det(self) -> int:
        """Determinant by Bareiss elimination (square matrices only)."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        m = self.to_lists()
        sign = 1
        prev = 1
        for c in range(n - 1):
            piv = next((i for i in range(c, n) if m[i][c] != 0), None)
            if piv is None:
                return 0
            if piv != c:
                m[c], m[piv] = m[piv], m[c]
                sign = -sign
            for i in range(c + 1, n):
                for j in range(c + 1, n):
                    m[i][j] = (m[i][j] * m[c][c] - m[i][c] * m[c][j]) // prev
                m[i][c] = 0
            prev = m[c][c]
        return sign * m[n - 1][n - 1]


@dataclass(frozen=True)
class SmithDecomposition:
    """``U @ A @ V == D`` with ``U``, ``V`` unimodular and ``D`` diagonal,
    non-negative, each diagonal entry dividing the next."""

    U: IntegerMatrix
    D: IntegerMatrix
    V: IntegerMatrix
    invariant_factors: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)


def _swap_rows(m: list[list[int]], a: int, b: int) -> None:
    m[a], m[b] = m[b], m[a]


def _swap_cols(m: list[list[int]], a: int, b: int) -> None:
    for row in m:
        row[a], row[b] = row[b], row[a]


def _add_row(m: list[list[int]], dst: int, src: int, c: int) -> None:
    row_s = m[src]
    row_d = m[dst]
    for j in range(len(row_d)):
        row_d[j] += c * row_s[j]


def _add_col(m: list[list[int]], dst: int, src: int, c: int) -> None:
    for row in m:
        row[dst] += c * row[src]


def smith_normal_form(A: IntegerMatrix) -> SmithDecomposition:
    """Smith normal form with transform tracking.

    Pivots are chosen by minimal absolute value; rows and columns are cleared
    by Euclidean steps, and a divisibility sweep folds offending entries into
    the pivot row so the diagonal forms a divisor chain.  All row operations
    are mirrored on ``U`` and all column operations on ``V``, so
    ``U @ A @ V == D`` holds exactly on return.
    """
    R, C = A.rows, A.cols
    d = A.to_lists()
    u = IntegerMatrix.identity(R).to_lists()
    v = IntegerMatrix.identity(C).to_lists()

    t = 0
    while t < min(R, C):
        # Locate the submatrix entry of least non-zero magnitude.
        pivot = None
        best = None
        for i in range(t, R):
            for j in range(t, C):
                val = d[i][j]
                if val != 0 and (best is None or abs(val) < best):
                    best = abs(val)
                    pivot = (i, j)
        if pivot is None:
            break
        pi, pj = pivot
        if pi != t:
            _swap_rows(d, t, pi)
            _swap_rows(u, t, pi)
        if pj != t:
            _swap_cols(d, t, pj)
            _swap_cols(v, t, pj)

        while True:
            # Euclidean reduction of column t, then row t, against the pivot.
            dirty = False
            for i in range(t + 1, R):
                if d[i][t] != 0:
                    q = d[i][t] // d[t][t]
                    if q != 0:
                        _add_row(d, i, t, -q)
                        _add_row(u, i, t, -q)
                    if d[i][t] != 0:
                        _swap_rows(d, t, i)
                        _swap_rows(u, t, i)
                        dirty = True
            for j in range(t + 1, C):
                if d[t][j] != 0:
                    q = d[t][j] // d[t][t]
                    if q != 0:
                        _add_col(d, j, t, -q)
                        _add_col(v, j, t, -q)
                    if d[t][j] != 0:
                        _swap_cols(d, t, j)
                        _swap_cols(v, t, j)
                        dirty = True
            if dirty:
                continue
            # Divisor-chain sweep: fold any non-divisible entry into row t.
            p = d[t][t]
            offender = None
            for i in range(t + 1, R):
                for j in range(t + 1, C):
                    if d[i][j] % p != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            _add_row(d, t, offender, 1)
            _add_row(u, t, offender, 1)

        if d[t][t] < 0:
            d[t] = [-x for x in d[t]]
            u[t] = [-x for x in u[t]]
        t += 1

    factors = tuple(d[i][i] for i in range(min(R, C)) if d[i][i] != 0)
    return SmithDecomposition(
        U=IntegerMatrix.from_rows(u, R),
        D=IntegerMatrix.from_rows(d, C),
        V=IntegerMatrix.from_rows(v, C),
        invariant_factors=factors,
    )


@dataclass(frozen=True)
class Presentation:
    """``<x_1..x_n | r_1..r_k>`` with freely reduced variable-only relators.

    Empty relators are rejected unless ``allow_trivial`` is set; adjoining
    trivial relations is a legitimate move when relating presentations, but
    it is almost always an input error, so it is opt-in.
    """

    n: int
    relators: tuple[Word, ...]
    allow_trivial: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("a presentation needs at least one generator")
        if not isinstance(self.relators, tuple):
            object.__setattr__(self, "relators", tuple(self.relators))
        for idx, r in enumerate(self.relators):
            if not isinstance(r, Word):
                raise TypeError(f"relator {idx} is not a Word")
            if not r.variables_only():
                raise ValueError(f"relator {idx} contains constant letters")
            for l in r:
                if l.base > self.n:
                    raise ValueError(
                        f"relator {idx} uses x{l.base} but only {self.n} generators are declared"
                    )
            if not r.is_reduced():
                raise ValueError(f"relator {idx} is not freely reduced")
            if not r and not self.allow_trivial:
                raise ValueError(
                    f"relator {idx} is empty; pass allow_trivial=True if intended"
                )

    @property
    def k(self) -> int:
        return len(self.relators)


def exponent_matrix(P: Presentation) -> IntegerMatrix:
    """The k-by-n matrix with entry ``(j, i)`` the exponent sum of ``x_{i+1}``
    in relator ``j`` -- the abelianised second differential."""
    return IntegerMatrix.from_rows(
        [[exponent_sum(r, i) for i in range(1, P.n + 1)] for r in P.relators],
        cols=P.n,
    )


def is_d2_injective(P: Presentation) -> bool:
    """Whether the second differential of the presentation complex is
    injective, i.e. the exponent matrix has full row rank ``k``.

    Injectivity over ``ZZ`` coincides with injectivity over ``QQ`` for a
    single integer matrix, so this is a pure rank condition; more relators
    than generators can never be injective and short-circuits the
    computation.
    """
    if P.k > P.n:
        return False
    return smith_normal_form(exponent_matrix(P)).rank == P.k


# --- presentation moves -----------------------------------------------------


@dataclass(frozen=True)
class NielsenRelator:
    """Replace relator ``target`` by ``target * source^(+-1)`` (or the
    left-sided product), for distinct indices."""

    target: int
    source: int
    invert_source: bool = False
    on_left: bool = False


@dataclass(frozen=True)
class NielsenGenerator:
    """An elementary Nielsen automorphism applied to every relator.

    ``kind`` is ``"multiply"`` (``x_a -> x_a x_b^sign``), ``"invert"``
    (``x_a -> x_a^-1``) or ``"swap"`` (``x_a <-> x_b``).
    """

    kind: str
    a: int
    b: int | None = None
    sign: int = 1


@dataclass(frozen=True)
class AddGenerator:
    """Adjoin generator ``x_{n+1}`` together with one new relation in which
    the new generator occurs exactly once."""

    relation: Word


@dataclass(frozen=True)
class InvertRelator:
    index: int


@dataclass(frozen=True)
class ConjugateRelator:
    index: int
    by: Word


TransformOp = Union[NielsenRelator, NielsenGenerator, AddGenerator, InvertRelator, ConjugateRelator]


def _substitute(r: Word, images: dict[int, Word]) -> Word:
    out: list = []
    for l in r:
        img = images.get(l.base)
        if img is None:
            out.append(l)
        elif l.sign == 1:
            out.extend(img.letters)
        else:
            out.extend(img.inverse().letters)
    return reduce(out)


def transform(P: Presentation, op: TransformOp) -> Presentation:
    """Apply one of the five solvability-preserving moves.

    Each move leaves injectivity of the second differential unchanged: the
    exponent matrix transforms by a unimodular row operation (relator moves),
    a unimodular column operation (generator moves), or gains one row and one
    column meeting in ``+-1`` (adjoining a generator).
    """
    rels = list(P.relators)
    if isinstance(op, NielsenRelator):
        if op.target == op.source:
            raise ValueError("Nielsen relator move needs distinct indices")
        for idx in (op.target, op.source):
            if not 0 <= idx < len(rels):
                raise IndexError(f"relator index {idx} out of range")
        factor = rels[op.source]
        if op.invert_source:
            factor = factor.inverse()
        combined = factor * rels[op.target] if op.on_left else rels[op.target] * factor
        rels[op.target] = reduce(combined)
        return Presentation(P.n, tuple(rels), allow_trivial=True)

    if isinstance(op, NielsenGenerator):
        if not 1 <= op.a <= P.n:
            raise IndexError(f"generator index {op.a} out of range")
        if op.kind == "multiply":
            if op.b is None or op.b == op.a or not 1 <= op.b <= P.n:
                raise ValueError("multiply move needs a distinct second generator")
            if op.sign not in (1, -1):
                raise ValueError("sign must be +-1")
            images = {op.a: Word((variable(op.a), variable(op.b, op.sign)))}
        elif op.kind == "invert":
            images = {op.a: Word((variable(op.a, -1),))}
        elif op.kind == "swap":
            if op.b is None or op.b == op.a or not 1 <= op.b <= P.n:
                raise ValueError("swap move needs a distinct second generator")
            images = {op.a: Word((variable(op.b),)), op.b: Word((variable(op.a),))}
        else:
            raise ValueError(f"unknown Nielsen generator move {op.kind!r}")
        return Presentation(
            P.n, tuple(_substitute(r, images) for r in rels), allow_trivial=P.allow_trivial
        )

    if isinstance(op, AddGenerator):
        rel = reduce(op.relation)
        if not rel.variables_only():
            raise ValueError("new relation must be a variable word")
        new_var = P.n + 1
        occurrences = sum(1 for l in rel if l.base == new_var)
        if occurrences != 1:
            raise ValueError(
                f"new relation must mention x{new_var} exactly once, found {occurrences}"
            )
        for l in rel:
            if l.base > new_var:
                raise ValueError(f"relation uses x{l.base} beyond the new generator")
        return Presentation(new_var, tuple(rels) + (rel,), allow_trivial=P.allow_trivial)

    if isinstance(op, InvertRelator):
        if not 0 <= op.index < len(rels):
            raise IndexError(f"relator index {op.index} out of range")
        rels[op.index] = rels[op.index].inverse()
        return Presentation(P.n, tuple(rels), allow_trivial=P.allow_trivial)

    if isinstance(op, ConjugateRelator):
        if not 0 <= op.index < len(rels):
            raise IndexError(f"relator index {op.index} out of range")
        u = op.by
        if not u.variables_only():
            raise ValueError("conjugator must be a variable word")
        for l in u:
            if l.base > P.n:
                raise ValueError(f"conjugator uses x{l.base} beyond the generators")
        rels[op.index] = reduce(u * rels[op.index] * u.inverse())
        return Presentation(P.n, tuple(rels), allow_trivial=P.allow_trivial)

    raise TypeError(f"unknown transform op {op!r}")
