"""Reduced words in the free group F_m and conjugation equations between them."""

from __future__ import annotations

import random
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from stablyfree.coeff_ring import ParseError

Letter = tuple[int, int]
Syllable = tuple[int, int]

ALIASES = {"s": 1, "t": 2}

_FACTOR = re.compile(r"^([A-Za-z]\w*)(?:\^\(?(-?\d+)\)?)?$")


def _inverse_letter(letter: Letter) -> Letter:
    return letter[0], -letter[1]


@dataclass(frozen=True)
class Word:
    # Always reduced; build through from_syllables / from_letters / generator.
    syllables: tuple[Syllable, ...] = ()

    @classmethod
    def from_syllables(cls, syllables: Iterable[Syllable]) -> "Word":
        stack: list[Syllable] = []
        for generator, exponent in syllables:
            if generator < 1:
                raise ValueError(f"Generator index {generator} must be positive")
            if not exponent:
                continue
            if stack and stack[-1][0] == generator:
                merged = stack[-1][1] + exponent
                stack.pop()
                if merged:
                    stack.append((generator, merged))
            else:
                stack.append((generator, exponent))
        return cls(tuple(stack))

    @classmethod
    def from_letters(cls, letters: Iterable[Letter]) -> "Word":
        return cls.from_syllables(letters)

    @classmethod
    def generator(cls, index: int, power: int = 1) -> "Word":
        return cls.from_syllables([(index, power)])

    def letters(self) -> list[Letter]:
        return [
            (g, 1 if e > 0 else -1) for g, e in self.syllables for _ in range(abs(e))
        ]

    @property
    def length(self) -> int:
        return sum(abs(e) for _, e in self.syllables)

    @property
    def is_identity(self) -> bool:
        return not self.syllables

    @property
    def rank_needed(self) -> int:
        return max((g for g, _ in self.syllables), default=0)

    def sort_key(self) -> tuple:
        return self.length, tuple(2 * g + (e < 0) for g, e in self.letters())

    def __lt__(self, other: "Word") -> bool:
        return self.sort_key() < other.sort_key()

    def __mul__(self, other: "Word") -> "Word":
        left = list(self.syllables)
        right = other.syllables
        i = 0
        while left and i < len(right) and left[-1][0] == right[i][0]:
            generator, exponent = left.pop()
            exponent += right[i][1]
            i += 1
            if exponent:
                left.append((generator, exponent))
                break
        return Word(tuple(left) + right[i:])

    def __invert__(self) -> "Word":
        return Word(tuple((g, -e) for g, e in reversed(self.syllables)))

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return (~self) ** -n
        result, base = Word(), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self, g: "Word") -> "Word":
        """self * g * self^-1"""
        return self * g * ~self


def word_mul(u: Word, v: Word) -> Word:
    return u * v


def word_inv(u: Word) -> Word:
    return ~u


def generator_name(index: int, rank: int) -> str:
    if rank == 2:
        return "st"[index - 1]
    return f"g{index}"


def format_word(word: Word, rank: int) -> str:
    if word.is_identity:
        return "1"
    return "*".join(
        generator_name(g, rank) if e == 1 else f"{generator_name(g, rank)}^{e}"
        for g, e in word.syllables
    )


def generator_index(name: str, rank: int) -> int:
    if name in ALIASES:
        index = ALIASES[name]
    elif name.startswith("g") and name[1:].isdigit():
        index = int(name[1:])
    else:
        raise ParseError(f"Unknown generator {name!r}")
    if not 1 <= index <= rank:
        raise ParseError(f"Generator {name!r} is outside F_{rank}")
    return index


def parse_word(text: str, rank: int) -> Word:
    text = text.replace(" ", "")
    if text in ("", "1"):
        return Word()
    syllables = []
    for factor in text.split("*"):
        match = _FACTOR.match(factor)
        if match is None:
            raise ParseError(f"Cannot parse word factor {factor!r}")
        name, exponent = match.groups()
        syllables.append((generator_index(name, rank), int(exponent or 1)))
    return Word.from_syllables(syllables)


def cyclically_reduce(u: Word) -> tuple[Word, Word]:
    """
    Returns (core, conjugator) with u = conjugator * core * conjugator^-1, core cyclically reduced.
    """
    letters = u.letters()
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == _inverse_letter(letters[j]):
        i += 1
        j -= 1
    return Word.from_letters(letters[i : j + 1]), Word.from_letters(letters[:i])


def primitive_root(core: Word) -> tuple[Word, int]:
    """The primitive root r and exponent k with core = r^k, for a cyclically reduced core."""
    letters = core.letters()
    size = len(letters)
    for d in range(1, size + 1):
        if size % d == 0 and letters == letters[:d] * (size // d):
            return Word.from_letters(letters[:d]), size // d
    return core, 1


def maximal_root(g: Word) -> Word:
    """Generator of the centralizer of a nontrivial g."""
    core, conjugator = cyclically_reduce(g)
    root, _ = primitive_root(core)
    return conjugator * root * ~conjugator


def power_exponent(x: Word, r: Word) -> int | None:
    """k with x = r^k, or None."""
    if r.is_identity:
        return 0 if x.is_identity else None
    core, conjugator = cyclically_reduce(r)
    y = ~conjugator * x * conjugator
    k, rest = divmod(y.length, core.length)
    if rest:
        return None
    for candidate in (k, -k):
        if core**candidate == y:
            return candidate
    return None


@dataclass(frozen=True)
class Conjugators:
    """
    The coset representative * <root>; an identity root means the single word representative.
    """

    representative: Word
    root: Word

    def contains(self, w: Word) -> bool:
        return power_exponent(~self.representative * w, self.root) is not None

    @property
    def is_singleton(self) -> bool:
        return self.root.is_identity

    def restrict(self, g: Word, target: Word) -> "Conjugators | None":
        """Solutions of w * g * w^-1 = target with w inside this coset."""
        w0, r = self.representative, self.root
        if r.is_identity:
            return self if w0.conjugate(g) == target else None
        tau = ~w0 * target * w0
        if r * g == g * r:
            return self if g == tau else None
        # at most one i works, and |r^i g r^-i| >= 2|i||core| - |g| - 2|core|
        core, conjugator = cyclically_reduce(r)
        g_core = ~conjugator * g * conjugator
        tau_core = ~conjugator * tau * conjugator
        bound = (tau_core.length + g_core.length) // core.length + 2
        for i in range(-bound, bound + 1):
            if (core**i).conjugate(g_core) == tau_core:
                return Conjugators(w0 * r**i, Word())
        return None

    def format(self, rank: int) -> str:
        if self.is_singleton:
            return format_word(self.representative, rank)
        return f"{format_word(self.representative, rank)}*<{format_word(self.root, rank)}>"


def solve_conjugation(g: Word, target: Word) -> Conjugators | None:
    """
    All w with w * g * w^-1 = target, as a coset w0 * <r> of the centralizer of g.

    :return: The coset, or None when target is not conjugate to g.
    """
    if g.is_identity:
        raise ValueError("g must be nontrivial")
    g_core, a = cyclically_reduce(g)
    h_core, b = cyclically_reduce(target)
    g_letters, h_letters = g_core.letters(), h_core.letters()
    if len(g_letters) != len(h_letters):
        return None
    for k in range(len(g_letters)):
        if h_letters == g_letters[k:] + g_letters[:k]:
            prefix = Word.from_letters(g_letters[:k])
            return Conjugators(b * ~prefix * ~a, maximal_root(g))
    return None


def words_of_length(rank: int, length: int) -> Iterator[Word]:
    """All reduced words of the given letter length, in shortlex order."""
    letters = [(g, sign) for g in range(1, rank + 1) for sign in (1, -1)]

    def extend(prefix: list[Letter]) -> Iterator[Word]:
        if len(prefix) == length:
            yield Word.from_letters(prefix)
            return
        for letter in letters:
            if prefix and letter == _inverse_letter(prefix[-1]):
                continue
            yield from extend(prefix + [letter])

    return extend([])


def words_up_to(rank: int, length: int) -> Iterator[Word]:
    for size in range(length + 1):
        yield from words_of_length(rank, size)


def random_word(rng: random.Random, rank: int, max_length: int) -> Word:
    if rank == 0:
        return Word()
    size = rng.randint(0, max_length)
    return Word.from_letters(
        (rng.randint(1, rank), rng.choice((1, -1))) for _ in range(size)
    )
