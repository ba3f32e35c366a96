"""Canonical element terms of the countable set X and the interning store.

X carries two unrelated algebraic structures: a free group (elements are
irreducible words over the promoted generator set S) and a dyadic vector
space (elements are finite coefficient functions over the promoted basis B).
The shared unit e is both the group identity and the vector zero; it is
always interned with the reserved id 0.

An element is stored exactly once, as one of four canonical term shapes:

* ``UNIT``                     -- e
* ``GenTerm(k)``               -- a primordial generator (the construction
                                  uses the single generator x = GenTerm(0))
* ``WordTerm(letters)``        -- an irreducible word of signed letters
* ``ComboTerm(coeffs)``        -- a formal dyadic combination of basis ids

Structural equality of canonical terms coincides with equality in X, so the
interning store is a bijection between ids and elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .scalars import DY_ONE, Dyadic


class AlgebraError(ValueError):
    pass


class InvalidLetterError(AlgebraError):
    """A word letter whose base is not a registered generator."""


class StageUnderflowError(AlgebraError):
    """Operand is not expressible as a word over the registered generators."""


class BasisUnderflowError(AlgebraError):
    """Operand of a linear combination is not a registered basis element."""


class CanonicalityError(AlgebraError):
    """Attempt to intern a term violating the canonical-form invariants."""


@dataclass(frozen=True)
class UnitTerm:
    def __repr__(self):
        return "e"


@dataclass(frozen=True)
class GenTerm:
    index: int

    def __repr__(self):
        return f"gen{self.index}" if self.index else "x"


@dataclass(frozen=True)
class WordTerm:
    # letters are (base_id, sign) with sign in {+1, -1}
    letters: tuple[tuple[int, int], ...]

    def __repr__(self):
        return "*".join(f"[{b}]" + ("" if s > 0 else "^-1") for b, s in self.letters)


@dataclass(frozen=True)
class ComboTerm:
    # coeffs are (basis_id, Dyadic), sorted by basis_id, all nonzero
    coeffs: tuple[tuple[int, Dyadic], ...]

    def __repr__(self):
        return " + ".join(f"{c}*[{b}]" for b, c in self.coeffs)


UNIT = UnitTerm()
ElementTerm = UnitTerm | GenTerm | WordTerm | ComboTerm

UNIT_ID = 0


class TermStore:
    """Interning store mapping canonical terms to stable integer ids.

    Single-writer during stage construction; once a stage is sealed all
    reads are pure. Ids are assigned in insertion order, so a fixed
    enumeration order yields bit-identical stores across runs.
    """

    def __init__(self):
        self._terms: list[ElementTerm] = [UNIT]
        self._index: dict[ElementTerm, int] = {UNIT: UNIT_ID}
        self._generators: set[int] = set()
        self._basis: set[int] = set()
        self._rank_memo: dict[int, int] = {UNIT_ID: 0}

    def __len__(self) -> int:
        return len(self._terms)

    def term(self, eid: int) -> ElementTerm:
        return self._terms[eid]

    def lookup(self, term: ElementTerm) -> Optional[int]:
        return self._index.get(term)

    def intern(self, term: ElementTerm) -> int:
        """Return the id of ``term``, assigning the next id if new. Idempotent."""
        found = self._index.get(term)
        if found is not None:
            return found
        self._check_canonical(term)
        eid = len(self._terms)
        self._terms.append(term)
        self._index[term] = eid
        return eid

    def register_generator(self, eid: int) -> None:
        self._generators.add(eid)

    def register_basis(self, eid: int) -> None:
        self._basis.add(eid)

    def is_generator(self, eid: int) -> bool:
        return eid in self._generators

    def is_basis(self, eid: int) -> bool:
        return eid in self._basis

    # -- canonical form ------------------------------------------------

    def _check_canonical(self, term: ElementTerm) -> None:
        if isinstance(term, (UnitTerm, GenTerm)):
            return
        if isinstance(term, WordTerm):
            w = term.letters
            if len(w) == 0:
                raise CanonicalityError("empty word must be the unit")
            if len(w) == 1 and w[0][1] == 1:
                raise CanonicalityError("length-1 positive word collapses to its base")
            for base, sign in w:
                if base == UNIT_ID:
                    raise CanonicalityError("unit letter in word")
                if sign not in (1, -1):
                    raise CanonicalityError(f"bad sign {sign}")
                if base not in self._generators:
                    raise InvalidLetterError(f"id {base} is not a registered generator")
            for (b1, s1), (b2, s2) in zip(w, w[1:]):
                if b1 == b2 and s1 == -s2:
                    raise CanonicalityError("adjacent cancelling letters")
            return
        if isinstance(term, ComboTerm):
            cs = term.coeffs
            if len(cs) == 0:
                raise CanonicalityError("empty combination collapses to the unit")
            if len(cs) == 1 and cs[0][1] == DY_ONE:
                raise CanonicalityError("singleton coefficient-1 combination collapses")
            prev = -1
            for b, c in cs:
                if b <= prev:
                    raise CanonicalityError("combination keys not strictly increasing")
                prev = b
                if not c:
                    raise CanonicalityError("zero coefficient in combination")
                if b not in self._basis:
                    raise BasisUnderflowError(f"id {b} is not a registered basis element")
            return
        raise CanonicalityError(f"unknown term {term!r}")

    # -- free-group structure -------------------------------------------

    def reduce_word(self, letters: Iterable[tuple[int, int]]) -> ElementTerm:
        """Fold a letter sequence to its unique irreducible form.

        Unit letters are deleted and adjacent mutually-inverse letters cancel;
        an empty result is the unit and a single positive letter collapses to
        its base element.
        """
        stack: list[tuple[int, int]] = []
        for base, sign in letters:
            if base == UNIT_ID:
                continue
            if base not in self._generators:
                raise InvalidLetterError(f"id {base} is not a registered generator")
            if stack and stack[-1][0] == base and stack[-1][1] == -sign:
                stack.pop()
            else:
                stack.append((base, sign))
        if not stack:
            return UNIT
        if len(stack) == 1 and stack[0][1] == 1:
            return self._terms[stack[0][0]]
        return WordTerm(tuple(stack))

    def word_of(self, eid: int) -> tuple[tuple[int, int], ...]:
        """Canonical letter sequence of a word-expressible element."""
        term = self._terms[eid]
        if isinstance(term, UnitTerm):
            return ()
        if isinstance(term, WordTerm):
            return term.letters
        # a generator or basis element used as a single positive letter
        if eid in self._generators:
            return ((eid, 1),)
        raise StageUnderflowError(
            f"id {eid} ({term!r}) is not a word over registered generators; "
            "promote its stage first"
        )

    def group_mul(self, a: int, b: int) -> ElementTerm:
        return self.reduce_word(self.word_of(a) + self.word_of(b))

    def group_inv(self, a: int) -> ElementTerm:
        return self.reduce_word(
            tuple((base, -sign) for base, sign in reversed(self.word_of(a)))
        )

    def mul_id(self, a: int, b: int) -> int:
        return self.intern(self.group_mul(a, b))

    def inv_id(self, a: int) -> int:
        return self.intern(self.group_inv(a))

    # -- vector-space structure ------------------------------------------

    def coeffs_of(self, eid: int) -> tuple[tuple[int, Dyadic], ...]:
        """Basis decomposition of a vector-expressible element."""
        term = self._terms[eid]
        if isinstance(term, UnitTerm):
            return ()
        if isinstance(term, ComboTerm):
            return term.coeffs
        if eid in self._basis:
            return ((eid, DY_ONE),)
        raise BasisUnderflowError(
            f"id {eid} ({term!r}) is not a registered basis element"
        )

    def lin_combine(self, parts: Sequence[tuple[Dyadic, int]]) -> ElementTerm:
        """Merge a formal dyadic combination of basis elements (unit = zero)."""
        acc: dict[int, Dyadic] = {}
        for coeff, eid in parts:
            if eid == UNIT_ID or not coeff:
                continue
            for b, c in self.coeffs_of(eid):
                cur = acc.get(b)
                nxt = coeff * c if cur is None else cur + coeff * c
                if nxt:
                    acc[b] = nxt
                elif cur is not None:
                    del acc[b]
        return self.combo_from_map(acc)

    def combo_from_map(self, coeffs: dict[int, Dyadic]) -> ElementTerm:
        items = tuple(sorted(((b, c) for b, c in coeffs.items() if c), key=lambda t: t[0]))
        if not items:
            return UNIT
        if len(items) == 1 and items[0][1] == DY_ONE:
            return self._terms[items[0][0]]
        return ComboTerm(items)

    def vector_fractions(self, eid: int, basis_order: dict[int, int], dim: int) -> tuple[Fraction, ...]:
        """Coefficients of a vector-expressible element over an ordered basis."""
        vec = [Fraction(0)] * dim
        for b, c in self.coeffs_of(eid):
            vec[basis_order[b]] = c.as_fraction()
        return tuple(vec)

    # -- rank -------------------------------------------------------------

    def convex_decomposition(self, eid: int) -> Optional[tuple[tuple[int, Dyadic], ...]]:
        """The unique basis decomposition of ``eid`` when it is a convex
        combination with support >= 2, strictly positive coefficients summing
        to 1; otherwise None. Linear independence of B makes this structural
        test equivalent to existence of any such decomposition."""
        term = self._terms[eid]
        if not isinstance(term, ComboTerm):
            return None
        if len(term.coeffs) < 2:
            return None
        total = Fraction(0)
        for _, c in term.coeffs:
            if c.num <= 0:
                return None
            total += c.as_fraction()
        if total != 1:
            return None
        return term.coeffs

    def inverse_convex_decomposition(self, eid: int) -> Optional[tuple[tuple[int, Dyadic], ...]]:
        """Convex decomposition of the group inverse of ``eid``, if any.

        Only a length-1 negative word can have a combination as its inverse,
        so no generator registration is needed to decide this structurally.
        """
        term = self._terms[eid]
        if isinstance(term, WordTerm) and len(term.letters) == 1:
            base, sign = term.letters[0]
            if sign == -1:
                return self.convex_decomposition(base)
        return None

    def rank(self, eid: int) -> int:
        """Stage-recursive rank: 0 unless the element or its inverse is a
        convex combination of basis elements, else 1 + max rank of the support."""
        memo = self._rank_memo
        found = memo.get(eid)
        if found is not None:
            return found
        dec = self.convex_decomposition(eid)
        if dec is None:
            dec = self.inverse_convex_decomposition(eid)
        if dec is None:
            memo[eid] = 0
            return 0
        r = 1 + max(self.rank(b) for b, _ in dec)
        memo[eid] = r
        return r
