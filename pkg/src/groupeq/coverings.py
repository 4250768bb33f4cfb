"""Finite coverings of a presentation complex: coset actions, the lifted
chain complex, and the lifted equation system.

A finite covering of the presentation complex of ``P = <x_1..x_n | r_1..r_k>``
is encoded by a :class:`CosetTable`: a transitive right action of the
presented group on ``{0..N-1}`` under which every relator acts trivially.
The covering complex has ``N`` vertices, ``n*N`` edges ``(i, y)`` and ``k*N``
faces ``(j, y0)``; its differentials are integer block matrices assembled by
pushing the Fox derivatives of the relators through the action.

Two ways of producing tables are provided: Todd-Coxeter enumeration relative
to a subgroup given by generator words, and an exhaustive backtracking search
for all transitive actions up to a given degree (one representative per
conjugacy class).  Both are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .presentation import IntegerMatrix, Presentation
from .words import Letter, Word, augment, reduce

__all__ = [
    "BudgetExceeded",
    "CosetTable",
    "todd_coxeter",
    "low_index_subgroups",
    "covering_d2",
    "covering_d1",
    "h2_trivial_covering",
    "LiftedSystem",
    "lift_system",
]


class BudgetExceeded(RuntimeError):
    """An enumeration or search hit its configured budget.

    For Todd-Coxeter this signals a possibly-infinite coset space; for the
    low-index search, a tree too large for the node budget.
    """


@dataclass(frozen=True)
class CosetTable:
    """A transitive right action of a presented group on ``{0..index-1}``.

    ``action[i][y]`` is ``y . x_{i+1}``; each row is a permutation.  When the
    table came from enumerating cosets of a subgroup, the subgroup's
    generator words are kept (each fixes coset 0); tables found by the
    low-index search carry no generating set.
    """

    index: int
    action: tuple[tuple[int, ...], ...]
    subgroup_generators: tuple[Word, ...] = ()

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("a coset table needs at least one coset")
        for i, perm in enumerate(self.action):
            if sorted(perm) != list(range(self.index)):
                raise ValueError(f"generator {i + 1} does not act by a permutation")
        inverse = tuple(_invert_perm(p) for p in self.action)
        object.__setattr__(self, "_inverse_action", inverse)

    @property
    def n(self) -> int:
        return len(self.action)

    def act_letter(self, y: int, letter: Letter) -> int:
        if not letter.is_variable:
            raise ValueError("constants do not act on cosets")
        i = letter.base - 1
        if letter.sign == 1:
            return self.action[i][y]
        return self._inverse_action[i][y]  # type: ignore[attr-defined]

    def act_word(self, y: int, w: Word) -> int:
        for letter in w:
            y = self.act_letter(y, letter)
        return y

    def permutation_of(self, w: Word) -> tuple[int, ...]:
        return tuple(self.act_word(y, w) for y in range(self.index))

    def is_transitive(self) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            y = frontier.pop()
            for perm in self.action:
                z = perm[y]
                if z not in seen:
                    seen.add(z)
                    frontier.append(z)
            for perm in self._inverse_action:  # type: ignore[attr-defined]
                z = perm[y]
                if z not in seen:
                    seen.add(z)
                    frontier.append(z)
        return len(seen) == self.index

    def validate(self, P: Presentation) -> None:
        """Check this table is a covering datum for ``P``: right degree,
        transitive, relators acting trivially, subgroup generators fixing 0."""
        if self.n != P.n:
            raise ValueError(f"table has {self.n} generators, presentation has {P.n}")
        if not self.is_transitive():
            raise ValueError("action is not transitive")
        ident = tuple(range(self.index))
        for j, r in enumerate(P.relators):
            if self.permutation_of(r) != ident:
                raise ValueError(f"relator {j} does not act trivially")
        for w in self.subgroup_generators:
            if self.act_word(0, w) != 0:
                raise ValueError("a subgroup generator moves coset 0")


def _invert_perm(perm: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(perm)
    for src, dst in enumerate(perm):
        out[dst] = src
    return tuple(out)


# --- Todd-Coxeter ------------------------------------------------------------


def _word_to_slots(w: Word, n: int, what: str) -> list[int]:
    slots = []
    for l in w:
        if not l.is_variable:
            raise ValueError(f"{what} must be a variable word")
        if l.base > n:
            raise ValueError(f"{what} uses x{l.base} beyond the {n} generators")
        slots.append(2 * (l.base - 1) + (0 if l.sign == 1 else 1))
    return slots


def todd_coxeter(
    P: Presentation,
    subgroup_generators: Iterable[Word] = (),
    max_cosets: int = 10_000,
) -> CosetTable:
    """Enumerate the cosets of ``<subgroup_generators>`` in the presented
    group, HLT style: scan every relator (plus the cancellation relations
    ``x x^-1`` and ``x^-1 x``) at every live coset in a fixed order, defining
    cosets as scans require them and merging on coincidences via union-find.

    ``max_cosets`` bounds the number of coset *definitions*, dead ones
    included; exceeding it raises :class:`BudgetExceeded`, which is evidence
    of a large or infinite index, never of failure of the group to exist.
    The returned table is renumbered by breadth-first traversal from coset 0,
    so equal inputs give identical tables.
    """
    n = P.n
    sub = tuple(subgroup_generators)
    rel_paths = [_word_to_slots(r, n, "relator") for r in P.relators]
    # Cancellation relations force total, mutually inverse actions.
    for i in range(n):
        rel_paths.append([2 * i, 2 * i + 1])
        rel_paths.append([2 * i + 1, 2 * i])
    sub_paths = [_word_to_slots(w, n, "subgroup generator") for w in sub]

    parent: list[int] = []
    neighbors: list[list[int]] = []

    def find(c: int) -> int:
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    def new_coset() -> int:
        if len(parent) >= max_cosets:
            raise BudgetExceeded(
                f"coset enumeration exceeded {max_cosets} definitions"
            )
        parent.append(len(parent))
        neighbors.append([-1] * (2 * n))
        return len(parent) - 1

    def follow(c: int, slot: int) -> int:
        c = find(c)
        d = neighbors[c][slot]
        if d < 0:
            d = new_coset()
            neighbors[c][slot] = d
            neighbors[d][slot ^ 1] = c
        return find(d)

    def unify(a: int, b: int) -> None:
        stack = [(a, b)]
        while stack:
            x, y = stack.pop()
            x, y = find(x), find(y)
            if x == y:
                continue
            if y < x:
                x, y = y, x
            parent[y] = x
            for slot in range(2 * n):
                d = neighbors[y][slot]
                if d < 0:
                    continue
                e = neighbors[x][slot]
                if e < 0:
                    neighbors[x][slot] = d
                else:
                    stack.append((d, e))
        # re-anchor reverse pointers lazily: follow() always resolves with find()

    root = new_coset()
    for path in sub_paths:
        c = root
        for slot in path:
            c = follow(c, slot)
        unify(c, find(root))

    scanned = 0
    while scanned < len(parent):
        c = scanned
        scanned += 1
        if find(c) != c:
            continue
        for path in rel_paths:
            d = c
            for slot in path:
                d = follow(d, slot)
                if find(c) != c:
                    break  # c itself was merged away; rescan later copies
            else:
                unify(d, find(c))
                continue
            break

    # live cosets, renumbered by BFS from the root class
    live_root = find(root)
    order: dict[int, int] = {live_root: 0}
    queue = [live_root]
    head = 0
    while head < len(queue):
        y = queue[head]
        head += 1
        for slot in range(2 * n):
            d = neighbors[y][slot]
            assert d >= 0, "scanned coset with an undefined slot"
            d = find(d)
            if d not in order:
                order[d] = len(queue)
                queue.append(d)

    N = len(queue)
    action = tuple(
        tuple(order[find(neighbors[y][2 * i])] for y in queue) for i in range(n)
    )
    table = CosetTable(N, action, subgroup_generators=sub)
    table.validate(P)
    return table


# --- low-index search ---------------------------------------------------------


def _bfs_signature(
    fwd: Sequence[Sequence[int]], bwd: Sequence[Sequence[int]], m: int, base: int
) -> tuple[tuple[int, ...], ...]:
    order = {base: 0}
    queue = [base]
    head = 0
    while head < len(queue):
        y = queue[head]
        head += 1
        for table in fwd, bwd:
            for row in table:
                z = row[y]
                if z not in order:
                    order[z] = len(queue)
                    queue.append(z)
    return tuple(
        tuple(order[row[old]] for old in queue) for row in fwd
    )


def low_index_subgroups(
    P: Presentation, max_index: int, node_budget: int = 500_000
) -> list[CosetTable]:
    """All transitive actions of the presented group on at most ``max_index``
    points, one per conjugacy class of point stabilisers; the degree-1 action
    is always included.

    Backtracking over partial tables: the first undefined table slot (in
    coset-major order) is filled with every legal existing target and, while
    room remains, one fresh coset; after each choice, relator scans propagate
    forced entries until stable or contradictory.  Completed tables are
    reduced to a canonical base-point-minimal form, which both removes
    conjugate duplicates and fixes the output order.  ``node_budget`` caps
    decision nodes and raises :class:`BudgetExceeded` beyond it.
    """
    if max_index < 1:
        raise ValueError("max_index must be at least 1")
    n = P.n
    rels = [[(l.base - 1, l.sign) for l in r] for r in P.relators]

    fwd = [[-1] for _ in range(n)]
    bwd = [[-1] for _ in range(n)]
    m = 1
    trail: list[tuple[int, int, int]] = []
    decisions = 0
    found: dict[tuple[int, tuple[tuple[int, ...], ...]], None] = {}

    def assign(i: int, y: int, z: int) -> bool:
        if fwd[i][y] == z and bwd[i][z] == y:
            return True
        if fwd[i][y] != -1 or bwd[i][z] != -1:
            return False
        fwd[i][y] = z
        bwd[i][z] = y
        trail.append((i, y, z))
        return True

    def undo(mark: int) -> None:
        while len(trail) > mark:
            i, y, z = trail.pop()
            fwd[i][y] = -1
            bwd[i][z] = -1

    def scan_fixpoint() -> bool:
        changed = True
        while changed:
            changed = False
            for rel in rels:
                L = len(rel)
                for y in range(m):
                    # forward as far as defined
                    c = y
                    p = 0
                    while p < L:
                        i, s = rel[p]
                        nxt = fwd[i][c] if s == 1 else bwd[i][c]
                        if nxt == -1:
                            break
                        c = nxt
                        p += 1
                    if p == L:
                        if c != y:
                            return False
                        continue
                    # backward from the end towards p
                    d = y
                    q = L
                    while q - 1 > p:
                        i, s = rel[q - 1]
                        prv = bwd[i][d] if s == 1 else fwd[i][d]
                        if prv == -1:
                            break
                        d = prv
                        q -= 1
                    if q - 1 == p:
                        i, s = rel[p]
                        ok = assign(i, c, d) if s == 1 else assign(i, d, c)
                        if not ok:
                            return False
                        changed = True
        return True

    def first_hole() -> tuple[int, int] | None:
        for y in range(m):
            for i in range(n):
                if fwd[i][y] == -1:
                    return y, i
        return None

    def record() -> None:
        best = min(_bfs_signature(fwd, bwd, m, base) for base in range(m))
        found.setdefault((m, best))

    def dfs() -> None:
        nonlocal m, decisions
        mark = len(trail)
        if not scan_fixpoint():
            undo(mark)
            return
        hole = first_hole()
        if hole is None:
            record()
            undo(mark)
            return
        y, i = hole
        for z in range(m):
            if bwd[i][z] != -1:
                continue
            decisions += 1
            if decisions > node_budget:
                raise BudgetExceeded(f"low-index search exceeded {node_budget} nodes")
            inner = len(trail)
            assign(i, y, z)
            dfs()
            undo(inner)
        if m < max_index:
            decisions += 1
            if decisions > node_budget:
                raise BudgetExceeded(f"low-index search exceeded {node_budget} nodes")
            for row in fwd:
                row.append(-1)
            for row in bwd:
                row.append(-1)
            m += 1
            inner = len(trail)
            assign(i, y, m - 1)
            dfs()
            undo(inner)
            m -= 1
            for row in fwd:
                row.pop()
            for row in bwd:
                row.pop()
        undo(mark)

    dfs()
    tables = [
        CosetTable(deg, perms) for (deg, perms) in sorted(found.keys())
    ]
    for t in tables:
        t.validate(P)
    return tables


# --- covering chain complex ----------------------------------------------------


def covering_d2(P: Presentation, T: CosetTable) -> IntegerMatrix:
    """Second differential of the covering complex: a ``(k*N) x (n*N)``
    integer matrix whose ``(j, y0) x (i, y)`` entry sums, over the terms
    ``c * gamma`` of the Fox derivative ``d r_j / d x_i``, the coefficient
    ``c`` whenever ``y0 . gamma = y``.

    Each ``N x N`` block is the Fox derivative evaluated at the permutation
    representation, so its column sums reproduce the exponent matrix entry.
    """
    from .words import fox_derivative

    if T.n != P.n:
        raise ValueError("table and presentation disagree on generator count")
    N = T.index
    k = P.k
    rows = [[0] * (P.n * N) for _ in range(k * N)]
    for j, r in enumerate(P.relators):
        for i in range(1, P.n + 1):
            col0 = (i - 1) * N
            for gamma, c in fox_derivative(r, i).items():
                images = [T.act_word(y0, gamma) for y0 in range(N)]
                for y0, y in enumerate(images):
                    rows[j * N + y0][col0 + y] += c
    return IntegerMatrix.from_rows(rows, cols=P.n * N)


def covering_d1(P: Presentation, T: CosetTable) -> IntegerMatrix:
    """First differential: the ``(n*N) x N`` matrix sending edge ``(i, y)``
    to ``(y . x_i) - y``; block ``i`` is ``perm(x_i) - identity``."""
    if T.n != P.n:
        raise ValueError("table and presentation disagree on generator count")
    N = T.index
    rows = [[0] * N for _ in range(P.n * N)]
    for i in range(P.n):
        for y in range(N):
            row = rows[i * N + y]
            row[T.action[i][y]] += 1
            row[y] -= 1
    return IntegerMatrix.from_rows(rows, cols=N)


def h2_trivial_covering(P: Presentation, T: CosetTable) -> bool:
    """Whether the covering complex has trivial second homology, i.e. the
    covering second differential has full row rank ``k*N``."""
    d2 = covering_d2(P, T)
    return d2.rank() == P.k * T.index


# --- lifted systems --------------------------------------------------------------


@dataclass(frozen=True)
class LiftedSystem:
    """The system obtained by rewriting each equation once per coset.

    Unknown ``(i, y)`` stands for the component at coset ``y`` of the lifted
    variable ``x_i``; it is flattened to variable id ``(i-1)*N + y + 1`` in
    the lifted words.  ``equations`` maps ``(j, y0)`` -- equation ``j``
    traced from start coset ``y0`` -- to the lifted word.  Lifted words keep
    their spelling except that exactly adjacent inverse letter pairs cancel.
    """

    base_n: int
    index: int
    unknowns: tuple[tuple[int, int], ...]
    equations: Mapping[tuple[int, int], Word] = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return self.base_n * self.index

    def flat_id(self, i: int, y: int) -> int:
        if not (1 <= i <= self.base_n and 0 <= y < self.index):
            raise ValueError(f"no unknown ({i}, {y}) in this lift")
        return (i - 1) * self.index + y + 1

    def unknown_of_flat(self, v: int) -> tuple[int, int]:
        if not 1 <= v <= self.n_vars:
            raise ValueError(f"flat variable id {v} out of range")
        return (v - 1) // self.index + 1, (v - 1) % self.index

    def words_in_order(self) -> tuple[Word, ...]:
        return tuple(self.equations[key] for key in sorted(self.equations))


def lift_system(system, T: CosetTable) -> LiftedSystem:
    """Rewrite an equation system over the covering datum ``T``.

    Each equation ``w_j`` is traced from every start coset ``y0``: a positive
    variable letter ``x_i`` emits the unknown at the current coset and then
    advances the coset; an inverse letter first retreats, then emits the
    inverse of the unknown at the coset it arrived at; constants are emitted
    in place and do not move the coset.  The trace must return to ``y0``,
    which is guaranteed by the precondition that the augmentation of every
    equation acts trivially on ``T`` (checked; violations raise ValueError).
    """
    from .unitary import EquationSystem  # cycle-free: unitary imports only words

    if not isinstance(system, EquationSystem):
        raise TypeError("lift_system expects an EquationSystem")
    if T.n != system.n_vars:
        raise ValueError(
            f"table acts on {T.n} generators but the system has {system.n_vars} unknowns"
        )
    N = T.index
    ident = tuple(range(N))
    for j, w in enumerate(system.equations):
        if T.permutation_of(augment(w)) != ident:
            raise ValueError(
                f"equation {j}: augmentation does not act trivially on the table"
            )

    unknowns = tuple((i, y) for i in range(1, system.n_vars + 1) for y in range(N))
    lifted: dict[tuple[int, int], Word] = {}
    for j, w in enumerate(system.equations):
        for y0 in range(N):
            cur = y0
            out: list[Letter] = []

            def emit(letter: Letter) -> None:
                if out and out[-1] == letter.inverse():
                    out.pop()
                else:
                    out.append(letter)

            for l in w:
                if not l.is_variable:
                    emit(l)
                elif l.sign == 1:
                    emit(Letter((l.base - 1) * N + cur + 1))
                    cur = T.act_letter(cur, l)
                else:
                    cur = T.act_letter(cur, l)
                    emit(Letter((l.base - 1) * N + cur + 1, -1))
            assert cur == y0, "trace failed to close despite trivial augmentation"
            lifted[(j, y0)] = Word(tuple(out))
    return LiftedSystem(base_n=system.n_vars, index=N, unknowns=unknowns, equations=lifted)
