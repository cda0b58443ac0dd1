"""Finite presentations, abelianization, and r.e. abelian groups.

Words are tuples of nonzero integers: ``g + 1`` for generator ``g`` and
``-(g + 1)`` for its inverse. In text, generators are the letters a, b, c, ...
and an inverse is the letter followed by ``'``, so ``ab'`` is a*b^-1.

Presentation text format::

    gens: 2
    aab'b'b'
"""

from __future__ import annotations

import itertools
import os
import string
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import CapExceeded, DomainError, EmbeddingRequired, InvalidPresentation, ShapeError

Word = tuple

LETTERS = string.ascii_lowercase


def free_reduce(word: Iterable[int]) -> Word:
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(word: Iterable[int]) -> Word:
    w = free_reduce(word)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == -w[j - 1]:
        i += 1
        j -= 1
    return w[i:j]


def is_cyclically_reduced(word: Word) -> bool:
    if any(a == -b for a, b in zip(word, word[1:])):
        return False
    return len(word) < 2 or word[0] != -word[-1]


def invert(word: Word) -> Word:
    return tuple(-x for x in reversed(word))


def gen_name(index: int) -> str:
    if index >= len(LETTERS):
        raise DomainError(f"the text format names at most {len(LETTERS)} generators")
    return LETTERS[index]


def format_word(word: Word) -> str:
    return "".join(gen_name(abs(x) - 1) + ("'" if x < 0 else "") for x in word)


def parse_word(text: str, n_gens: Optional[int] = None) -> Word:
    out = []
    for ch in text.strip():
        if ch == "'":
            if not out or out[-1] < 0:
                raise InvalidPresentation(f"stray ' in {text!r}")
            out[-1] = -out[-1]
        elif ch in LETTERS:
            g = LETTERS.index(ch)
            if n_gens is not None and g >= n_gens:
                raise InvalidPresentation(f"letter {ch!r} is not one of the {n_gens} generators")
            out.append(g + 1)
        elif not ch.isspace():
            raise InvalidPresentation(f"unexpected character {ch!r} in {text!r}")
    return tuple(out)


@dataclass(frozen=True)
class FinitePresentation:
    generators: tuple
    relators: tuple

    def __post_init__(self):
        gens = tuple(self.generators)
        if len(set(gens)) != len(gens):
            raise InvalidPresentation(f"duplicate generator names in {gens}")
        rels = []
        for r in self.relators:
            for x in r:
                if not isinstance(x, int) or x == 0 or abs(x) > len(gens):
                    raise InvalidPresentation(f"letter {x!r} does not name a generator")
            red = free_reduce(r)
            if not red:
                raise InvalidPresentation(f"relator {r!r} is empty after free reduction")
            rels.append(red)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relators", tuple(rels))

    @classmethod
    def standard(cls, n_gens: int, relators: Iterable[Word] = ()) -> "FinitePresentation":
        return cls(tuple(gen_name(i) if i < 26 else f"x{i}" for i in range(n_gens)), tuple(relators))

    @classmethod
    def parse(cls, text: str) -> "FinitePresentation":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
        if not lines or not lines[0].startswith("gens:"):
            raise InvalidPresentation("first line must be 'gens: k'")
        try:
            k = int(lines[0][len("gens:"):])
        except ValueError:
            raise InvalidPresentation(f"bad generator count in {lines[0]!r}") from None
        return cls.standard(k, [parse_word(ln, k) for ln in lines[1:]])

    @classmethod
    def load(cls, path) -> "FinitePresentation":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def text(self) -> str:
        return "\n".join([f"gens: {len(self.generators)}"] + [format_word(r) for r in self.relators]) + "\n"

    @property
    def n_gens(self) -> int:
        return len(self.generators)

    def __str__(self):
        rels = ", ".join(format_word(r) for r in self.relators)
        return f"<{', '.join(self.generators)} | {rels}>"


def presentation_length(p: FinitePresentation) -> int:
    """Number of generators plus the total length of the relators."""
    return p.n_gens + sum(len(r) for r in p.relators)


# --------------------------------------------------------------------------
# Smith normal form


Matrix = list  # list of rows of ints


@dataclass(frozen=True)
class SNFResult:
    D: list
    U: list
    V: list
    rank: int
    torsion: tuple

    @property
    def diagonal(self) -> list[int]:
        return [self.D[i][i] for i in range(min(len(self.D), len(self.D[0]) if self.D else 0))]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: Matrix, b: Matrix, inner: Optional[int] = None) -> Matrix:
    if inner is None:
        inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(a[i][t] * b[t][j] for t in range(inner)) for j in range(cols)] for i in range(len(a))]


def smith_normal_form(m: Sequence[Sequence[int]], n_cols: Optional[int] = None) -> SNFResult:
    """Diagonalize an integer matrix with unimodular U, V so that U*M*V = D.

    Pivot rule: the nonzero entry of least absolute value in the remaining
    block, ties broken by row then column. Diagonal entries come out
    nonnegative and each divides the next.

    ``n_cols`` gives the width of a matrix with no rows.
    """
    rows = len(m)
    cols = len(m[0]) if rows else (n_cols or 0)
    a = [[int(x) for x in row] for row in m]
    if any(len(row) != cols for row in a):
        raise ShapeError("ragged matrix")
    u = identity(rows)
    v = identity(cols)

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        a[dst] = [x + q * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x + q * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, q):
        for row in a:
            row[dst] += q * row[src]
        for row in v:
            row[dst] += q * row[src]

    t = 0
    while t < min(rows, cols):
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                x = a[i][j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = a[t][t]
            for i in range(t + 1, rows):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
            for j in range(t + 1, cols):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
            # leftover remainders are smaller than the pivot: take the least
            rest = [(abs(a[i][t]), i, t) for i in range(t + 1, rows) if a[i][t]]
            rest += [(abs(a[t][j]), t, j) for j in range(t + 1, cols) if a[t][j]]
            if rest:
                _, i, j = min(rest)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            bad = next(
                (i for i in range(t + 1, rows) for j in range(t + 1, cols) if a[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
        t += 1
    diag = [a[i][i] for i in range(min(rows, cols))]
    rank = sum(1 for d in diag if d)
    return SNFResult(a, u, v, rank, tuple(d for d in diag if d > 1))


def determinant(m: Matrix) -> int:
    """Exact integer determinant (Bareiss)."""
    n = len(m)
    if n == 0:
        return 1
    a = [list(row) for row in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


# --------------------------------------------------------------------------
# abelianization


def exponent_matrix(p: FinitePresentation) -> Matrix:
    """Rows are relators, columns generators, entries exponent sums."""
    rows = []
    for r in p.relators:
        row = [0] * p.n_gens
        for x in r:
            row[abs(x) - 1] += 1 if x > 0 else -1
        rows.append(row)
    return rows


def betti_one(p: FinitePresentation) -> tuple[int, tuple]:
    """First Betti number and torsion coefficients of the abelianization."""
    snf = smith_normal_form(exponent_matrix(p), n_cols=p.n_gens)
    return p.n_gens - snf.rank, snf.torsion


# --------------------------------------------------------------------------
# amalgamation and suspension


def _shift(word: Word, by: int) -> Word:
    return tuple(x + by if x > 0 else x - by for x in word)


def _check_words(p: FinitePresentation, words: Sequence[Word], what: str) -> None:
    for w in words:
        for x in w:
            if x == 0 or abs(x) > p.n_gens:
                raise InvalidPresentation(f"{what}: {w!r} uses a letter outside {p}")


def amalgamated_product(
    left: FinitePresentation,
    right: FinitePresentation,
    images_left: Sequence[Word],
    images_right: Sequence[Word],
) -> FinitePresentation:
    """``left *_H right`` where generator t of H maps to ``images_left[t]``
    and ``images_right[t]``. Empty image lists give the free product."""
    if len(images_left) != len(images_right):
        raise ShapeError(
            f"image lists differ in length ({len(images_left)} vs {len(images_right)})"
        )
    _check_words(left, images_left, "left image")
    _check_words(right, images_right, "right image")
    k = left.n_gens
    rels = list(left.relators) + [_shift(r, k) for r in right.relators]
    for a, b in zip(images_left, images_right):
        glue = free_reduce(tuple(a) + invert(_shift(tuple(b), k)))
        if glue:
            rels.append(glue)
    return FinitePresentation.standard(k + right.n_gens, rels)


def suspension(
    g: FinitePresentation, a: FinitePresentation, embedding: Optional[Sequence[Word]]
) -> FinitePresentation:
    """``A *_G A`` for G embedded in A by ``embedding`` (one word of A per
    generator of G). Whether A is acyclic is the caller's business."""
    if embedding is None or len(embedding) != g.n_gens:
        raise EmbeddingRequired(
            f"suspension needs an image in A for each of the {g.n_gens} generators of G"
        )
    return amalgamated_product(a, a, embedding, embedding)


def iterated_suspension(
    g: FinitePresentation,
    levels: Sequence[tuple],
    k: int,
) -> FinitePresentation:
    """Apply :func:`suspension` k times; ``levels[i]`` is ``(A_i, embedding_i)``
    embedding the i-th suspension into ``A_i``."""
    current = g
    for i in range(k):
        if i >= len(levels) or levels[i] is None:
            raise EmbeddingRequired(f"no acyclic group and embedding supplied for level {i + 1}")
        a, emb = levels[i]
        current = suspension(current, a, emb)
    return current


HIGMAN = FinitePresentation.standard(
    4,
    [
        parse_word("bab'a'a'"),
        parse_word("cbc'b'b'"),
        parse_word("dcd'c'c'"),
        parse_word("ada'd'd'"),
    ],
)
"""Higman's four-generator group, known to be acyclic (not checked here)."""


# --------------------------------------------------------------------------
# r.e. abelian groups from marker runs


@dataclass
class REAbelianPresentation:
    """Abelian generators x_1, x_2, ... with x_j killed once j is enumerated.

    ``kills`` lists (stage, j) in enumeration order.
    """

    kills: list = field(default_factory=list)
    stage: int = 0

    def killed_by(self, stage: int) -> set:
        return {j for s, j in self.kills if s <= stage}

    @classmethod
    def from_events(cls, events: Iterable, index_shift: int = 0, stage: int = 0) -> "REAbelianPresentation":
        kills = [(e[0], e[2] + index_shift) for e in events]
        last = max((s for s, _ in kills), default=0)
        return cls(kills, max(stage, last))


def re_abelian_from_markers(run) -> REAbelianPresentation:
    """Kill x_j exactly when cell j enters W. Zero-based runs without the
    fixed marker report cell 0, so their generators are shifted up by one."""
    shift = 1 if run.instance.cell_offset == 0 else 0
    return REAbelianPresentation.from_events(run.events, shift, run.stage)


@dataclass(frozen=True)
class StagedBettiEstimate:
    stage: int
    horizon: int
    value: int


def staged_betti(a: REAbelianPresentation, stage: int, horizon: int) -> StagedBettiEstimate:
    """Number of x_j with j <= horizon still alive at ``stage``.

    Non-increasing in the stage (kills accumulate), non-decreasing in the
    horizon.
    """
    if stage < 0 or horizon < 0:
        raise DomainError("stage and horizon must be >= 0")
    dead = a.killed_by(stage)
    return StagedBettiEstimate(stage, horizon, sum(1 for j in range(1, horizon + 1) if j not in dead))


# --------------------------------------------------------------------------
# census of short presentations


DEFAULT_CENSUS_CAP = 8


def _letter_key(x: int) -> int:
    return 2 * (abs(x) - 1) + (0 if x > 0 else 1)


def _word_key(w: Word) -> tuple:
    return (len(w), tuple(_letter_key(x) for x in w))


def _relator_set_key(rels: Sequence[Word]) -> tuple:
    return tuple(_word_key(r) for r in rels)


def _apply_signed_perm(word: Word, perm: Sequence[int], signs: Sequence[int]) -> Word:
    return tuple((perm[abs(x) - 1] + 1) * signs[abs(x) - 1] * (1 if x > 0 else -1) for x in word)


def _used(rels: Iterable[Word]) -> list[int]:
    return sorted({abs(x) - 1 for r in rels for x in r})


def canonical_relators(rels: Sequence[Word]) -> tuple:
    """Least relator multiset under renaming/inverting generators.

    Relators are cyclically reduced first; the multiset is sorted by length
    then letter order (a < a' < b < b' < ...). Only generators that occur
    are permuted, onto the first indices, which is where the least form puts
    them anyway.
    """
    rels = [cyclic_reduce(r) for r in rels]
    if any(not r for r in rels):
        raise InvalidPresentation("relator is trivial after cyclic reduction")
    used = _used(rels)
    u = len(used)
    compact = {g: i for i, g in enumerate(used)}
    rels = [tuple((compact[abs(x) - 1] + 1) * (1 if x > 0 else -1) for x in r) for r in rels]
    best = None
    for perm in itertools.permutations(range(u)):
        for signs in itertools.product((1, -1), repeat=u):
            cand = sorted((_apply_signed_perm(r, perm, signs) for r in rels), key=_word_key)
            key = _relator_set_key(cand)
            if best is None or key < best[0]:
                best = (key, tuple(cand))
    return best[1] if best else ()


def canonical_form(p: FinitePresentation) -> FinitePresentation:
    return FinitePresentation.standard(p.n_gens, canonical_relators(p.relators))


def _cyclic_words(n_gens: int, length: int):
    letters = [g + 1 for g in range(n_gens)] + [-(g + 1) for g in range(n_gens)]
    letters.sort(key=_letter_key)
    for w in itertools.product(letters, repeat=length):
        if is_cyclically_reduced(w):
            yield w


@dataclass
class PresentationCensus:
    max_length: int
    presentations: list

    @property
    def count(self) -> int:
        return len(self.presentations)


def census_cap() -> int:
    raw = os.environ.get("HIERARCH_CAP_CENSUS")
    return max(DEFAULT_CENSUS_CAP, int(raw)) if raw else DEFAULT_CENSUS_CAP


def enumerate_presentations(max_length: int) -> PresentationCensus:
    """All canonical presentations of length at most ``max_length``.

    Presentations count as equal up to renaming and inverting generators,
    reordering relators and cyclic reduction. Isomorphic groups with
    different presentations stay distinct. At least one generator is
    required. Listed by length, then generator count, then relator order.
    """
    cap = census_cap()
    if max_length > cap:
        raise CapExceeded(f"census length {max_length} exceeds the cap of {cap}")
    if max_length < 0:
        raise DomainError(f"length must be >= 0, got {max_length}")
    # canonical relator multisets by (total relator length, generators used)
    forms: dict[tuple[int, int], set] = {}
    for total in range(0, max_length):
        for u in range(0, min(total, max_length - total) + 1):
            forms[(total, u)] = _canonical_multisets(total, u)
    out = []
    for k in range(1, max_length + 1):
        for total in range(0, max_length - k + 1):
            for u in range(0, min(k, total) + 1):
                for rels in forms.get((total, u), ()):
                    out.append(FinitePresentation.standard(k, rels))
    out.sort(key=lambda p: (presentation_length(p), p.n_gens, _relator_set_key(p.relators)))
    return PresentationCensus(max_length, out)


def _canonical_multisets(total: int, u: int) -> set:
    """Canonical relator multisets of the given total length using exactly
    generators 0..u-1."""
    if total == 0:
        return {()} if u == 0 else set()
    words = [w for length in range(1, total + 1) for w in _cyclic_words(u, length)]
    words.sort(key=_word_key)
    found = set()

    def extend(start: int, remaining: int, chosen: list):
        if remaining == 0:
            if len(_used(chosen)) == u:
                found.add(canonical_relators(chosen))
            return
        for i in range(start, len(words)):
            w = words[i]
            if len(w) > remaining:
                continue
            chosen.append(w)
            extend(i, remaining - len(w), chosen)
            chosen.pop()

    extend(0, total, [])
    return found


def census_records(census: PresentationCensus) -> Iterable[dict]:
    for p in census.presentations:
        yield {
            "kind": "presentation",
            "schema": 1,
            "length": presentation_length(p),
            "gens": p.n_gens,
            "relators": [format_word(r) for r in p.relators],
        }
