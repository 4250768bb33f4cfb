"""Shared test utilities: independent oracles and random instance generators.

Everything here is deliberately written against the *definitions*, not
against the library's algorithms, so disagreements are meaningful: rational
rank by Fraction Gaussian elimination, root extraction by divisor-period
search, exponent counts straight off the raw spelling.
"""

from __future__ import annotations

import random
from fractions import Fraction

from groupeq.words import Letter, Word, reduce
from groupeq.presentation import (
    AddGenerator,
    ConjugateRelator,
    IntegerMatrix,
    InvertRelator,
    NielsenGenerator,
    NielsenRelator,
    Presentation,
)


def rational_rank(rows: list[list[int]]) -> int:
    """Rank over QQ by plain Gaussian elimination with Fractions."""
    m = [[Fraction(v) for v in row] for row in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = 1 / m[rank][c]
        m[rank] = [x * inv for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[rank])]
        rank += 1
    return rank


def unimodular(M: IntegerMatrix) -> bool:
    return M.rows == M.cols and M.det() in (1, -1)


def letter_count_exponent(w: Word, i: int) -> int:
    """Exponent sum straight off the unreduced spelling."""
    total = 0
    for l in w:
        if l.base == i:
            total += 1 if l.sign == 1 else -1
    return total


def divisor_period_root(w: Word) -> tuple[Word, int]:
    """Root of a cyclically reduced word by testing every divisor period."""
    n = len(w.letters)
    for p in range(1, n + 1):
        if n % p != 0:
            continue
        if all(w.letters[j] == w.letters[j % p] for j in range(n)):
            return Word(w.letters[:p]), n // p
    raise AssertionError("unreachable: p = n always matches")


def brute_pieces_ok(relators: list[Word], lam: Fraction) -> bool:
    """Metric small-cancellation check by brute pairwise prefix comparison
    over the symmetrised relator set (rotations of relators and inverses)."""
    symmetrised: list[tuple[Letter, ...]] = []
    seen = set()
    for r in relators:
        for base in (r, r.inverse()):
            ls = base.letters
            for s in range(len(ls)):
                rot = ls[s:] + ls[:s]
                if rot not in seen:
                    seen.add(rot)
                    symmetrised.append(rot)
    for u in symmetrised:
        longest = 0
        for v in symmetrised:
            if u is v:
                continue
            lcp = 0
            for a, b in zip(u, v):
                if a != b:
                    break
                lcp += 1
            longest = max(longest, lcp)
        if Fraction(longest) >= lam * len(u):
            return False
    return True


def random_reduced_word(rng: random.Random, n: int, length: int) -> Word:
    """A uniformly-ish random freely reduced word of exactly ``length``."""
    letters: list[Letter] = []
    while len(letters) < length:
        l = Letter(rng.randint(1, n), rng.choice((1, -1)))
        if letters and letters[-1] == l.inverse():
            continue
        letters.append(l)
    return Word(tuple(letters))


def random_cyclically_reduced_word(rng: random.Random, n: int, length: int) -> Word:
    while True:
        w = random_reduced_word(rng, n, length)
        if w.is_cyclically_reduced():
            return w


def random_presentation(
    rng: random.Random,
    max_n: int = 4,
    max_k: int = 4,
    max_len: int = 12,
) -> Presentation:
    n = rng.randint(1, max_n)
    k = rng.randint(1, max_k)
    rels = tuple(random_reduced_word(rng, n, rng.randint(1, max_len)) for _ in range(k))
    return Presentation(n, rels)


def random_transform_op(rng: random.Random, P: Presentation):
    """One random instance of the five presentation moves, valid for P."""
    choices = ["nielsen_gen", "add_gen", "invert", "conjugate"]
    if P.k >= 2:
        choices.append("nielsen_rel")
    kind = rng.choice(choices)
    if kind == "nielsen_rel":
        t, s = rng.sample(range(P.k), 2)
        return NielsenRelator(
            t, s, invert_source=rng.random() < 0.5, on_left=rng.random() < 0.5
        )
    if kind == "nielsen_gen":
        if P.n == 1:
            return NielsenGenerator("invert", 1)
        sub = rng.choice(["multiply", "invert", "swap"])
        a = rng.randint(1, P.n)
        if sub == "invert":
            return NielsenGenerator("invert", a)
        b = rng.choice([x for x in range(1, P.n + 1) if x != a])
        if sub == "swap":
            return NielsenGenerator("swap", a, b)
        return NielsenGenerator("multiply", a, b, sign=rng.choice((1, -1)))
    if kind == "add_gen":
        new = P.n + 1
        body = random_reduced_word(rng, P.n, rng.randint(0, 4)) if P.n else Word()
        from groupeq.words import variable

        spot = rng.randint(0, len(body.letters))
        letters = body.letters[:spot] + (variable(new, rng.choice((1, -1))),) + body.letters[spot:]
        return AddGenerator(reduce(letters))
    if kind == "invert":
        return InvertRelator(rng.randrange(P.k))
    return ConjugateRelator(rng.randrange(P.k), random_reduced_word(rng, P.n, rng.randint(1, 3)))
