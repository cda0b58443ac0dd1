"""Fixture builders and independent reference implementations for tests."""

import itertools
import random

from hierarch import arith, groups
from hierarch.markers import Sigma3Instance


def threshold_kernel(n0):
    """QQ(n, m, k) = (n >= n0), as a JSON fixture."""
    return {"type": "compare", "left": "n", "op": ">=", "right": n0, "eventually_constant": True}


def random_table_kernel(seed, n_box=4, m_box=4, k_box=3):
    """Seeded table kernel, constant (always true) outside the n/m box.

    Inside the box each (n, m) gets either no witness or a least witness
    threshold in 1..k_box.
    """
    rng = random.Random(seed)
    entries = {}
    for n in range(1, n_box + 1):
        for m in range(1, m_box + 1):
            entries[f"{n},{m}"] = None if rng.random() < 0.3 else rng.randint(1, k_box)
    return {
        "type": "table",
        "key": ["n", "m"],
        "witness": "k",
        "entries": entries,
        "default": True,
        "eventually_constant": True,
        "seed": seed,
        "box": [n_box + 1, m_box, k_box],
    }


def instance(spec, **kw):
    return Sigma3Instance(arith.kernel_from_json(spec), **kw)


def least_good_n(spec):
    """Least n for which every m in the box has a witness, read straight off
    the table (n_box + 1 when none does)."""
    if spec["type"] == "compare":
        return spec["right"]
    n_box = spec["box"][0] - 1
    m_box = spec["box"][1]
    for n in range(1, n_box + 1):
        if all(spec["entries"][f"{n},{m}"] is not None for m in range(1, m_box + 1)):
            return n
    return n_box + 1


def dovetail_times(inst, n, limit):
    """Halting times <= limit of M(n), by literally running the round-robin
    search on each input m = 1..limit."""
    times = set()
    for m in range(1, limit + 1):
        found = [False] * (m + 1)
        evaluations = 0
        k = 0
        while not all(found[1:]) and evaluations <= limit:
            k += 1
            for p in range(1, m + 1):
                if found[p]:
                    continue
                evaluations += 1
                if inst.evaluate(n, p, k):
                    found[p] = True
        if all(found[1:]) and evaluations <= limit:
            times.add(evaluations)
    return times


class CascadeOracle:
    """Markers kept as an explicit list of cells, moved one by one.

    When marker i fires, its cell goes into W and every marker above it
    steps into the cell of the marker just above; a fresh marker is appended
    on the next cell not in W so the list never runs short.
    """

    def __init__(self, inst, stages):
        self.inst = inst
        self.first = inst.first_index
        start = 1 if inst.dummy_marker else 0
        self.cells = list(range(start, start + stages + 2))  # cells[j] is marker first+j
        self.w = set()
        self.events = []
        self.stage = 0
        self.times = {n: dovetail_times(inst, n, stages) for n in range(self.first, stages + 1)}

    def step(self):
        s = self.stage + 1
        off = self.inst.cell_offset
        for marker in range(self.first, s + 1):
            if s in self.times[marker]:
                j = marker - self.first
                freed = self.cells[j]
                self.w.add(freed)
                self.events.append((s, marker, freed + off))
                del self.cells[j]
                nxt = self.cells[-1] + 1
                while nxt in self.w:
                    nxt += 1
                self.cells.append(nxt)
        self.stage = s

    def positions(self, count):
        return [c + self.inst.cell_offset for c in self.cells[:count]]


# census of presentations, by generate-and-canonicalize

LETTER_CHARS = "abcdefghijklmnop"


def letter_char(x):
    return LETTER_CHARS[2 * (abs(x) - 1) + (0 if x > 0 else 1)]


def oracle_key(word):
    return (len(word), "".join(letter_char(x) for x in word))


def words_up_to(k, length):
    letters = [s * g for g in range(1, k + 1) for s in (1, -1)]
    for n in range(1, length + 1):
        for w in itertools.product(letters, repeat=n):
            if groups.free_reduce(w) == w:
                yield w


def raw_presentations(max_length):
    for k in range(1, max_length + 1):
        budget = max_length - k
        words = list(words_up_to(k, budget))

        def tuples(remaining):
            yield ()
            for w in words:
                if len(w) <= remaining:
                    for rest in tuples(remaining - len(w)):
                        yield (w,) + rest

        for rels in tuples(budget):
            yield k, rels


def oracle_canonical(k, rels):
    rels = [groups.cyclic_reduce(r) for r in rels]
    best = None
    for perm in itertools.permutations(range(1, k + 1)):
        for signs in itertools.product((1, -1), repeat=k):
            moved = [tuple(signs[abs(x) - 1] * perm[abs(x) - 1] * (1 if x > 0 else -1) for x in r) for r in rels]
            cand = tuple(sorted(oracle_key(r) for r in moved))
            if best is None or cand < best:
                best = cand
    return k, best


def census_oracle(max_length):
    """Set of (generator count, sorted relator keys) over all raw
    presentations of length <= max_length."""
    return {oracle_canonical(k, rels) for k, rels in raw_presentations(max_length)}
