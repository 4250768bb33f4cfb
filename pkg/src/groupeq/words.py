"""Words in the free product of a free group with a constant alphabet.

Variables are numbered ``1..n``; constants are opaque strings.  A word is a
plain letter sequence and nothing reduces implicitly: several consumers (the
equation classes, the covering lifts) care about the spelling *before*
cancellation, so :func:`reduce` is an explicit operation.  Under free
reduction a constant letter cancels only against the adjacent inverse of the
same constant -- no relations between constants are ever applied.

The module also carries the small amount of group-ring calculus needed by
the covering differentials: :class:`GroupRingElement` is a finitely supported
integer combination of reduced variable words, and :func:`fox_derivative`
computes the free differential ``d(uv) = du + u.dv``, ``d(x)/dx = 1``,
``d(x^-1)/dx = -x^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Letter",
    "Word",
    "GroupRingElement",
    "variable",
    "constant",
    "word",
    "reduce",
    "augment",
    "exponent_sum",
    "cyclic_reduce",
    "max_root",
    "fox_derivative",
    "format_word",
]

#: A letter base: a 1-based variable index or a constant name.
Base = "int | str"


@dataclass(frozen=True)
class Letter:
    """A signed letter: a variable ``x_i`` (``base`` an int) or a named
    constant (``base`` a str), with ``sign`` in ``{+1, -1}``."""

    base: int | str
    sign: int = 1

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"letter sign must be +1 or -1, got {self.sign!r}")
        if isinstance(self.base, bool) or not isinstance(self.base, (int, str)):
            raise TypeError(f"letter base must be int or str, got {self.base!r}")
        if isinstance(self.base, int) and self.base < 1:
            raise ValueError(f"variable indices are 1-based, got {self.base}")
        if isinstance(self.base, str) and not self.base:
            raise ValueError("constant names must be non-empty")

    @property
    def is_variable(self) -> bool:
        return isinstance(self.base, int)

    def inverse(self) -> "Letter":
        return Letter(self.base, -self.sign)


def variable(i: int, sign: int = 1) -> Letter:
    """The letter ``x_i`` (or its inverse for ``sign=-1``)."""
    if not isinstance(i, int) or i < 1:
        raise ValueError(f"variable index must be a positive int, got {i!r}")
    return Letter(i, sign)


def constant(name: str, sign: int = 1) -> Letter:
    """A constant letter by name (or its inverse for ``sign=-1``)."""
    return Letter(str(name), sign)


@dataclass(frozen=True)
class Word:
    """An immutable letter sequence.

    Construction never reduces; use :func:`reduce` for the freely reduced
    form.  ``*`` concatenates verbatim, ``inverse`` reverses and flips signs,
    ``power`` repeats.  Words are hashable and usable as group-ring keys.
    """

    letters: tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.letters, tuple):
            object.__setattr__(self, "letters", tuple(self.letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        if not isinstance(other, Word):
            return NotImplemented
        return Word(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple(l.inverse() for l in reversed(self.letters)))

    def power(self, r: int) -> "Word":
        """The verbatim ``r``-fold repetition (inverted first if ``r < 0``)."""
        if r < 0:
            return self.inverse().power(-r)
        return Word(self.letters * r)

    def is_reduced(self) -> bool:
        return all(
            a != b.inverse() for a, b in zip(self.letters, self.letters[1:])
        )

    def is_cyclically_reduced(self) -> bool:
        if len(self.letters) >= 2 and self.letters[0] == self.letters[-1].inverse():
            return False
        return self.is_reduced()

    def variables_only(self) -> bool:
        return all(l.is_variable for l in self.letters)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Word[{format_word(self)}]"


def word(items: Iterable[int | str | Letter]) -> Word:
    """Build a word from a friendly spelling, without reducing.

    Integers denote signed variables (``-2`` is ``x_2^-1``); strings denote
    constants, with a trailing apostrophe for the inverse (``"g'"``).
    """
    letters = []
    for item in items:
        if isinstance(item, Letter):
            letters.append(item)
        elif isinstance(item, bool):
            raise TypeError(f"cannot interpret {item!r} as a letter")
        elif isinstance(item, int):
            if item == 0:
                raise ValueError("0 is not a signed variable index")
            letters.append(Letter(abs(item), 1 if item > 0 else -1))
        elif isinstance(item, str):
            if item.endswith("'"):
                letters.append(Letter(item[:-1], -1))
            else:
                letters.append(Letter(item, 1))
        else:
            raise TypeError(f"cannot interpret {item!r} as a letter")
    return Word(tuple(letters))


def _validate_alphabet(
    letters: Sequence[Letter],
    n_vars: int | None,
    constants: Iterable[str] | None,
) -> None:
    const_set = None if constants is None else set(constants)
    for pos, l in enumerate(letters):
        if l.is_variable:
            if n_vars is not None and l.base > n_vars:
                raise ValueError(
                    f"letter {pos}: variable x{l.base} outside declared range 1..{n_vars}"
                )
        elif const_set is not None and l.base not in const_set:
            raise ValueError(f"letter {pos}: unknown constant {l.base!r}")


def reduce(
    w: Word | Iterable[Letter],
    *,
    n_vars: int | None = None,
    constants: Iterable[str] | None = None,
) -> Word:
    """Freely reduce: cancel adjacent exactly-inverse letter pairs until none
    remain.  Optional alphabet bounds are validated before reducing."""
    letters = tuple(w.letters if isinstance(w, Word) else w)
    _validate_alphabet(letters, n_vars, constants)
    stack: list[Letter] = []
    for l in letters:
        if stack and stack[-1] == l.inverse():
            stack.pop()
        else:
            stack.append(l)
    return Word(tuple(stack))


def augment(w: Word) -> Word:
    """The augmentation: delete every constant letter, then reduce.

    This is the monoid homomorphism onto the free group on the variables that
    kills the constant alphabet; the result is always reduced and
    variable-only.
    """
    return reduce(l for l in w if l.is_variable)


def exponent_sum(w: Word, i: int) -> int:
    """Signed number of occurrences of variable ``i`` in the spelling of
    ``w`` (no reduction is applied first; reduction cannot change it)."""
    return sum(l.sign for l in w if l.base == i)


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Split ``w`` as ``conjugator * core * conjugator^-1`` with the core
    cyclically reduced.  The input is reduced first; returns (core,
    conjugator)."""
    letters = list(reduce(w).letters)
    prefix: list[Letter] = []
    while len(letters) >= 2 and letters[0] == letters[-1].inverse():
        prefix.append(letters[0])
        letters = letters[1:-1]
    return Word(tuple(letters)), Word(tuple(prefix))


def max_root(w: Word) -> tuple[Word, int]:
    """Write a cyclically reduced word as ``z^r`` with ``r`` maximal.

    Uses the failure function of the letter sequence: the smallest period
    ``p`` divides ``len(w)`` exactly when ``w`` is a proper power, and the
    corresponding prefix is the (unique) primitive root.  Raises on empty
    input, on constants, and on input that is not cyclically reduced.
    """
    letters = w.letters
    if not letters:
        raise ValueError("the empty word has no root decomposition")
    if not w.variables_only():
        raise ValueError("root extraction is defined for variable words only")
    if not w.is_cyclically_reduced():
        raise ValueError("root extraction requires a cyclically reduced word")
    n = len(letters)
    fail = [0] * n
    k = 0
    for q in range(1, n):
        while k > 0 and letters[q] != letters[k]:
            k = fail[k - 1]
        if letters[q] == letters[k]:
            k += 1
        fail[q] = k
    period = n - fail[n - 1]
    if period < n and n % period == 0:
        return Word(letters[:period]), n // period
    return w, 1


class GroupRingElement:
    """A finitely supported ``ZZ``-linear combination of reduced variable
    words (an element of the integral group ring of the free group).

    Instances are immutable; arithmetic returns fresh elements and zero
    coefficients are dropped.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, int] | Iterable[tuple[Word, int]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Word, int] = {}
        for w, c in items:
            if not isinstance(w, Word):
                raise TypeError(f"group-ring keys must be Words, got {w!r}")
            if not w.variables_only():
                raise ValueError("group-ring keys must be variable words")
            if not w.is_reduced():
                raise ValueError(f"group-ring key {w!r} is not reduced")
            acc[w] = acc.get(w, 0) + int(c)
        self._terms = {w: c for w, c in acc.items() if c != 0}

    @classmethod
    def zero(cls) -> "GroupRingElement":
        return cls()

    @classmethod
    def one(cls) -> "GroupRingElement":
        return cls({Word(): 1})

    def items(self) -> Iterable[tuple[Word, int]]:
        return self._terms.items()

    def coefficient(self, w: Word) -> int:
        return self._terms.get(w, 0)

    def coefficient_sum(self) -> int:
        """Image under the augmentation ring map (all words to 1)."""
        return sum(self._terms.values())

    def support_size(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other: "GroupRingElement") -> "GroupRingElement":
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        merged = dict(self._terms)
        for w, c in other._terms.items():
            merged[w] = merged.get(w, 0) + c
        return GroupRingElement(merged)

    def __neg__(self) -> "GroupRingElement":
        return GroupRingElement({w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "GroupRingElement") -> "GroupRingElement":
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return self + (-other)

    def scale(self, c: int) -> "GroupRingElement":
        return GroupRingElement({w: c * v for w, v in self._terms.items()})

    def left_mul(self, u: Word) -> "GroupRingElement":
        """Left multiplication by a variable word (keys are re-reduced)."""
        return GroupRingElement({reduce(u * w): c for w, c in self._terms.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if not self._terms:
            return "GroupRingElement(0)"
        parts = [f"{c}*[{format_word(w)}]" for w, c in self._terms.items()]
        return "GroupRingElement(" + " + ".join(parts) + ")"


def fox_derivative(w: Word, i: int) -> GroupRingElement:
    """The free (Fox) derivative of a variable word with respect to ``x_i``.

    Computed by one left-to-right pass: a positive occurrence of ``x_i``
    after prefix ``p`` contributes ``+p``, a negative occurrence contributes
    ``-p*x_i^-1``.  The coefficient sum of the result is the exponent sum of
    ``x_i``, which is the abelianisation of the derivative.
    """
    if not w.variables_only():
        raise ValueError("fox_derivative is defined for variable words only")
    if not isinstance(i, int) or i < 1:
        raise ValueError(f"variable index must be a positive int, got {i!r}")
    acc: dict[Word, int] = {}
    prefix: list[Letter] = []

    def _push(l: Letter) -> None:
        if prefix and prefix[-1] == l.inverse():
            prefix.pop()
        else:
            prefix.append(l)

    for l in w:
        if l.base == i and l.sign == 1:
            key = Word(tuple(prefix))
            acc[key] = acc.get(key, 0) + 1
            _push(l)
        elif l.base == i and l.sign == -1:
            _push(l)
            key = Word(tuple(prefix))
            acc[key] = acc.get(key, 0) - 1
        else:
            _push(l)
    return GroupRingElement(acc)


def format_word(w: Word, var_names: Sequence[str] | None = None) -> str:
    """Render a word in the surface syntax: letters separated by blanks,
    apostrophe for inverse.  Variables print as ``x<i>`` unless names are
    supplied (1-based)."""
    parts = []
    for l in w:
        if l.is_variable:
            name = var_names[l.base - 1] if var_names else f"x{l.base}"
        else:
            name = l.base
        parts.append(name if l.sign == 1 else name + "'")
    return " ".join(parts)
