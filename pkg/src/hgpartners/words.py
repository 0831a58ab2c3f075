"""Words in the genus-two surface group.

Generators are the letters ``a b c d``; capitals denote inverses. The
defining relator is ``aBcDAbCd``. Words are plain strings, so slicing,
concatenation and hashing come for free.
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Iterator
from collections.abc import Sequence

from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import TrivialWord

logger = logging.getLogger(__name__)

GENERATORS = "abcd"
LETTERS = "abcdABCD"
RELATOR = "aBcDAbCd"

# Lexicographic order used for canonical rotations.
ORDER = {letter: i for i, letter in enumerate(LETTERS)}

# Pieces longer than half the relator are shortened by Dehn reduction.
DEHN_MIN = 5
# Pieces of length 3 and 4 are rewritten when searching a class.
SWAP_LENGTHS = (4, 3)
# Search slack above the shortest length seen.
CLASS_SLACK = 2


def invert_letter(letter: str) -> str:
    if letter.lower() == letter:
        return letter.upper()
    return letter.lower()


def formal_inverse(word: str) -> str:
    return "".join(invert_letter(g) for g in word[::-1])


def check_word(word: str) -> str:
    """Return the word unchanged after validating its letters.

    Raises:
        InvalidParameter: If a letter is not one of ``abcdABCD``.
    """
    bad = sorted(set(word) - set(LETTERS))
    if bad:
        msg = f"Invalid letters {''.join(bad)!r} in word {word!r}"
        raise InvalidParameter(msg)
    return word


def free_reduce(word: str) -> str:
    simp: list[str] = []
    for letter in word:
        if simp and letter == invert_letter(simp[-1]):
            simp.pop()
        else:
            simp.append(letter)
    return "".join(simp)


def cyclic_split(word: str) -> tuple[str, str]:
    """Split a freely reduced word as v + core + inverse(v).

    Returns:
        The pair (v, core) with core cyclically reduced.
    """
    i = 0
    while len(word) - 2 * i >= 2 and word[i] == invert_letter(
        word[len(word) - 1 - i]
    ):
        i += 1
    return word[:i], word[i : len(word) - i]


def cyclic_reduce(word: str) -> str:
    return cyclic_split(free_reduce(word))[1]


def rotations(word: str) -> Iterator[str]:
    for i in range(len(word)):
        yield word[i:] + word[:i]


def order_key(word: str) -> tuple[int, ...]:
    return tuple(ORDER[letter] for letter in word)


def least_rotation(word: str) -> str:
    if not word:
        return word
    return min(rotations(word), key=order_key)


def power(word: str, n: int) -> str:
    """Return word^n; negative exponents use the formal inverse."""
    if n < 0:
        return formal_inverse(word) * (-n)
    return word * n


def to_signed(word: str) -> list[tuple[int, int]]:
    """Signed generator indices: ``aB`` becomes [(0, 1), (1, -1)]."""
    check_word(word)
    return [
        (GENERATORS.index(g.lower()), 1 if g.islower() else -1) for g in word
    ]


def from_signed(letters: Sequence[Sequence[int]]) -> str:
    """Inverse of ``to_signed``.

    Raises:
        InvalidParameter: On an out-of-range index or exponent.
    """
    out = []
    for index, exponent in letters:
        if not 0 <= index < len(GENERATORS) or exponent not in (1, -1):
            msg = f"Invalid signed letter ({index}, {exponent})"
            raise InvalidParameter(msg)
        letter = GENERATORS[index]
        out.append(letter if exponent == 1 else letter.upper())
    return "".join(out)


def _relator_cycles(relator: str) -> list[str]:
    return [*rotations(relator), *rotations(formal_inverse(relator))]


@functools.cache
def dehn_pieces(relator: str = RELATOR) -> dict[str, str]:
    """Map each relator piece of length >= 5 to its shorter complement."""
    pieces = {}
    n = len(relator)
    for cycle in _relator_cycles(relator):
        for k in range(DEHN_MIN, n + 1):
            pieces[cycle[:k]] = formal_inverse(cycle[k:])
    return pieces


@functools.cache
def swap_pieces(relator: str = RELATOR) -> dict[str, str]:
    """Map each relator piece of length 3 or 4 to its complement."""
    pieces = {}
    for cycle in _relator_cycles(relator):
        for k in SWAP_LENGTHS:
            pieces[cycle[:k]] = formal_inverse(cycle[k:])
    return pieces


def reduce_word(word: str, relator: str = RELATOR) -> str:
    """Free reduction followed by Dehn reduction, to a fixpoint.

    The result represents the same group element.
    """
    pieces = dehn_pieces(relator)
    w = free_reduce(check_word(word))
    changed = True
    while changed:
        changed = False
        for k in range(len(relator), DEHN_MIN - 1, -1):
            for i in range(len(w) - k + 1):
                replacement = pieces.get(w[i : i + k])
                if replacement is not None:
                    w = free_reduce(w[:i] + replacement + w[i + k :])
                    changed = True
                    break
            if changed:
                break
    return w


def cyclic_dehn_reduce(word: str, relator: str = RELATOR) -> str:
    """Dehn reduction of the cyclic word; preserves the conjugacy class."""
    pieces = dehn_pieces(relator)
    w = cyclic_reduce(check_word(word))
    changed = True
    while changed and w:
        changed = False
        n = len(w)
        doubled = w + w
        for k in range(min(len(relator), n), DEHN_MIN - 1, -1):
            for i in range(n):
                replacement = pieces.get(doubled[i : i + k])
                if replacement is not None:
                    w = cyclic_reduce(replacement + doubled[i + k : i + n])
                    changed = True
                    break
            if changed:
                break
    return w


@functools.lru_cache(maxsize=65536)
def canonical_word(word: str, relator: str = RELATOR) -> str:
    """Canonical representative of the conjugacy class of a word.

    Searches cyclic words reachable by swapping relator pieces of length
    3 and 4 for their complements, followed by cyclic Dehn reduction,
    keeping only words at most two letters longer than the shortest seen.
    The result is the least rotation, under the order ``abcdABCD``, of
    the shortest word found.

    Raises:
        TrivialWord: If the word is conjugate to the identity.
    """
    start = cyclic_dehn_reduce(word, relator)
    if not start:
        msg = f"Word {word!r} reduces to the identity"
        raise TrivialWord(msg)
    swaps = swap_pieces(relator)
    seen = {least_rotation(start)}
    shortest = len(start)
    frontier = [start]
    while frontier:
        found = []
        for w in frontier:
            for rot in rotations(w):
                for k in SWAP_LENGTHS:
                    replacement = swaps.get(rot[:k])
                    if replacement is None:
                        continue
                    cand = cyclic_dehn_reduce(replacement + rot[k:], relator)
                    if not cand:
                        msg = f"Word {word!r} reduces to the identity"
                        raise TrivialWord(msg)
                    if len(cand) > shortest + CLASS_SLACK:
                        continue
                    key = least_rotation(cand)
                    if key in seen:
                        continue
                    seen.add(key)
                    shortest = min(shortest, len(cand))
                    found.append(cand)
        frontier = [w for w in found if len(w) <= shortest + CLASS_SLACK]
    best = min(
        (w for w in seen if len(w) == shortest), key=order_key
    )
    logger.debug(
        "Canonical word of %r is %r (%d states)", word, best, len(seen)
    )
    return best


def is_primitive_word(word: str) -> bool:
    """True iff the cyclic word is not a repetition of a proper prefix."""
    n = len(word)
    for p in range(1, n // 2 + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return False
    return True
