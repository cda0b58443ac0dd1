"""Two-symbol Turing machines: simulation, enumeration and busy-beaver search.

Machines start in state 1 on a blank two-sided tape with the head at cell 0.
HALT is a transition target outside the counted states, and the halting
transition itself counts as a step, so the 2-state record is 6 steps and
the 3-state record is 21.

Text format, one machine per line::

    2; 1,0 -> 1,R,2 | 1,1 -> 1,L,2 | 2,0 -> 1,L,1 | 2,1 -> 1,R,H
"""

from __future__ import annotations

import itertools
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .errors import CapExceeded, DomainError, MalformedMachine

HALT = 0
LEFT = "L"
RIGHT = "R"
DEFAULT_STATE_CAP = 4
CAP_ENV_VAR = "HIERARCH_CAP_STATES"


def state_cap() -> int:
    """Enumeration cap, raisable through ``HIERARCH_CAP_STATES``."""
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_STATE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise DomainError(f"{CAP_ENV_VAR} must be an integer, got {raw!r}") from None
    return max(cap, DEFAULT_STATE_CAP)


@dataclass(frozen=True, order=True)
class Transition:
    write: int
    move: str
    target: int  # HALT or a state index

    def __post_init__(self):
        if self.write not in (0, 1):
            raise MalformedMachine(f"write symbol must be 0 or 1, got {self.write!r}")
        if self.move not in (LEFT, RIGHT):
            raise MalformedMachine(f"move must be L or R, got {self.move!r}")

    def text(self) -> str:
        target = "H" if self.target == HALT else str(self.target)
        return f"{self.write},{self.move},{target}"


@dataclass(frozen=True)
class TMachine:
    """A total transition table; entry ``2*(state-1)+symbol`` is the rule for
    reading ``symbol`` in ``state``."""

    n_states: int
    table: tuple[Transition, ...]

    def __post_init__(self):
        if not isinstance(self.n_states, int) or self.n_states < 1:
            raise MalformedMachine(f"state count must be a positive integer, got {self.n_states!r}")
        if len(self.table) != 2 * self.n_states:
            raise MalformedMachine(
                f"expected {2 * self.n_states} transitions, got {len(self.table)}"
            )
        for i, tr in enumerate(self.table):
            if not isinstance(tr, Transition):
                raise MalformedMachine(f"missing transition for ({i // 2 + 1},{i % 2})")
            if tr.target != HALT and not 1 <= tr.target <= self.n_states:
                raise MalformedMachine(
                    f"transition ({i // 2 + 1},{i % 2}) targets unknown state {tr.target}"
                )

    @classmethod
    def from_mapping(cls, n_states: int, rules: dict) -> "TMachine":
        """Build from ``{(state, symbol): (write, move, target)}``; target may be ``"H"``."""
        table = []
        for state in range(1, n_states + 1):
            for symbol in (0, 1):
                if (state, symbol) not in rules:
                    raise MalformedMachine(f"missing transition for ({state},{symbol})")
                w, d, t = rules[(state, symbol)]
                table.append(Transition(int(w), d, HALT if t in ("H", HALT) else int(t)))
        extra = set(rules) - {(s, b) for s in range(1, n_states + 1) for b in (0, 1)}
        if extra:
            raise MalformedMachine(f"transitions for undeclared pairs: {sorted(extra)}")
        return cls(n_states, tuple(table))

    def rule(self, state: int, symbol: int) -> Transition:
        return self.table[2 * (state - 1) + symbol]

    def text(self) -> str:
        parts = [
            f"{i // 2 + 1},{i % 2} -> {tr.text()}" for i, tr in enumerate(self.table)
        ]
        return f"{self.n_states}; " + " | ".join(parts)

    def key(self) -> tuple:
        return (self.n_states,) + tuple(
            (tr.write, tr.move, tr.target) for tr in self.table
        )

    def __str__(self):
        return self.text()


_RULE_RE = re.compile(r"^\s*(\d+)\s*,\s*([01])\s*->\s*([01])\s*,\s*([LR])\s*,\s*(\d+|H)\s*$")


def parse_machine(text: str) -> TMachine:
    """Parse one line of the machine text format."""
    head, sep, body = text.strip().partition(";")
    if not sep:
        raise MalformedMachine(f"expected 'n_states; rules', got {text!r}")
    try:
        n_states = int(head)
    except ValueError:
        raise MalformedMachine(f"bad state count {head!r}") from None
    rules = {}
    for chunk in body.split("|"):
        if not chunk.strip():
            continue
        m = _RULE_RE.match(chunk)
        if not m:
            raise MalformedMachine(f"cannot parse transition {chunk.strip()!r}")
        s, b, w, d, t = m.groups()
        pair = (int(s), int(b))
        if pair in rules:
            raise MalformedMachine(f"duplicate transition for {pair}")
        rules[pair] = (int(w), d, t)
    return TMachine.from_mapping(n_states, rules)


def read_machines(path) -> list[TMachine]:
    with open(path, encoding="utf-8") as fh:
        return [parse_machine(line) for line in fh if line.strip() and not line.startswith("#")]


# --------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class Halted:
    steps: int
    ones_written: int


@dataclass(frozen=True)
class BudgetExhausted:
    budget: int


@dataclass(frozen=True)
class TapeSummary:
    """Visited interval ``[left, right]`` and its contents as a 0/1 string."""

    left: int
    right: int
    cells: str


@dataclass(frozen=True)
class RunResult:
    outcome: Union[Halted, BudgetExhausted]
    tape: TapeSummary

    @property
    def halted(self) -> bool:
        return isinstance(self.outcome, Halted)

    @property
    def steps(self) -> Optional[int]:
        return self.outcome.steps if self.halted else None


class Tape:
    """Growable two-sided binary tape that remembers the visited interval."""

    __slots__ = ("cells", "origin", "lo", "hi")

    def __init__(self):
        self.cells = bytearray(64)
        self.origin = 32
        self.lo = self.hi = 0

    def _grow(self, pos: int) -> None:
        idx = pos + self.origin
        if idx < 0:
            pad = max(len(self.cells), -idx)
            self.cells[0:0] = bytes(pad)
            self.origin += pad
        elif idx >= len(self.cells):
            self.cells.extend(bytes(max(len(self.cells), idx - len(self.cells) + 1)))

    def visit(self, pos: int) -> None:
        if pos < self.lo:
            self.lo = pos
        elif pos > self.hi:
            self.hi = pos
        idx = pos + self.origin
        if idx < 0 or idx >= len(self.cells):
            self._grow(pos)

    def __getitem__(self, pos: int) -> int:
        return self.cells[pos + self.origin]

    def __setitem__(self, pos: int, value: int) -> None:
        self.cells[pos + self.origin] = value

    def summary(self) -> TapeSummary:
        a, b = self.lo + self.origin, self.hi + self.origin
        return TapeSummary(self.lo, self.hi, "".join("1" if c else "0" for c in self.cells[a : b + 1]))

    def ones(self) -> int:
        return self.cells.count(1)


def run(machine: TMachine, budget: int) -> RunResult:
    """Run ``machine`` from the blank tape for at most ``budget`` steps."""
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    table = machine.table
    tape = Tape()
    head, state, steps = 0, 1, 0
    while steps < budget:
        tr = table[2 * (state - 1) + tape[head]]
        tape[head] = tr.write
        steps += 1
        if tr.target == HALT:
            return RunResult(Halted(steps, tape.ones()), tape.summary())
        head += 1 if tr.move == RIGHT else -1
        tape.visit(head)
        state = tr.target
    return RunResult(BudgetExhausted(budget), tape.summary())


# --------------------------------------------------------------------------
# non-halting detection
#
# Tables here are lists of (write, right?, target) triples with None marking
# an undefined entry, which counts as halting.


def _raw_table(machine: TMachine) -> list:
    return [
        None if tr.target == HALT else (tr.write, tr.move == RIGHT, tr.target)
        for tr in machine.table
    ]


def _detect_repetition(table: list, budget: int) -> bool:
    """True when the run provably never reaches an undefined entry.

    Two checks over the first ``budget`` steps, both on configurations:
    an exact repeat of (state, head, tape), and a repeat translated along
    the tape. For the translated case, two visits to a fresh right (left)
    edge in the same state are compared over the tape window the head
    actually scanned between them; if the windows agree the machine is
    periodic up to a shift and marches off forever.
    """
    width = 2 * budget + 3
    tape = bytearray(width)
    head = budget + 1
    state = 1
    seen = set()
    heads = [head]
    hi = lo = head
    right_marks: dict[int, list] = {}
    left_marks: dict[int, list] = {}
    for t in range(budget):
        config = (state, head, bytes(tape))
        if config in seen:
            return True
        seen.add(config)
        tr = table[2 * (state - 1) + tape[head]]
        if tr is None:
            return False
        tape[head] = tr[0]
        head += 1 if tr[1] else -1
        state = tr[2]
        heads.append(head)
        now = t + 1
        if head > hi:
            hi = head
            for t1, p1, snap in right_marks.get(state, ()):
                low = min(heads[t1 : now + 1])
                shift = head - p1
                if snap[low : p1 + 1] == tape[low + shift : head + 1]:
                    return True
            right_marks.setdefault(state, []).append((now, head, bytes(tape)))
        elif head < lo:
            lo = head
            for t1, p1, snap in left_marks.get(state, ()):
                high = max(heads[t1 : now + 1])
                shift = p1 - head
                if snap[p1 : high + 1] == tape[head : high - shift + 1]:
                    return True
            left_marks.setdefault(state, []).append((now, head, bytes(tape)))
    return False


def _left_dfas(n: int):
    """DFAs over {0,1} with states 0..n-1, start 0, 0 --0--> 0 (so leading
    blanks are invisible), states introduced in first-use order and all
    reachable. Table entry ``2*q+b`` is the successor of q on b."""
    table = [0] * (2 * n)

    def fill(i, used):
        if i == 2 * n:
            if used == n - 1:
                yield tuple(table)
            return
        if i // 2 > used:
            return
        for v in range(min(used + 1, n - 1) + 1):
            table[i] = v
            yield from fill(i + 1, max(used, v))

    yield from fill(1, 0)


def _nfa_step(nfa: list, mask: int, bit: int) -> int:
    out, i = 0, 0
    while mask:
        if mask & 1:
            out |= nfa[2 * i + bit]
        mask >>= 1
        i += 1
    return out


def _halt_reachable(table: list, dfa: tuple) -> bool:
    """Can some blank-started configuration reach an undefined entry, once
    left half-tapes are only known up to the DFA state they lead to?

    With the left side quotiented, the machine is a pushdown system whose
    stack is the head cell followed by the right half-tape. Control states
    are ``1 + q*n + (s-1)`` plus 0 for "halted". The automaton recognising
    configurations that can reach a halt is saturated rule by rule
    (backward reachability for pushdown systems), then queried on the start
    control with an all-blank stack of any length.
    """
    n = len(table) // 2
    nq = len(dfa) // 2
    rules = []
    for slot, e in enumerate(table):
        s, b = slot // 2 + 1, slot % 2
        for q in range(nq):
            p = 1 + q * n + (s - 1)
            if e is None:
                rules.append((p, b, 0, ()))
                continue
            w, right, t = e
            if right:
                rules.append((p, b, 1 + dfa[2 * q + w] * n + (t - 1), ()))
            else:
                for qc, dest in enumerate(dfa):
                    if dest == q:
                        q_prev, c = divmod(qc, 2)
                        rules.append((p, b, 1 + q_prev * n + (t - 1), (c, w)))
    nfa = [1, 1] + [0] * (2 * nq * n)
    grew = True
    while grew:
        grew = False
        for p, b, k, push in rules:
            mask = 1 << k
            for bit in push:
                mask = _nfa_step(nfa, mask, bit)
            merged = nfa[2 * p + b] | mask
            if merged != nfa[2 * p + b]:
                nfa[2 * p + b] = merged
                grew = True
    old, new = 0, 1 << 1
    while old != new:
        old, new = new, new | _nfa_step(nfa, new, 0)
    return bool(new & 1)


CTL_MAX_DFA_STATES = 4


def _closed_language(table: list, max_states: int = CTL_MAX_DFA_STATES) -> bool:
    for size in range(1, max_states + 1):
        for dfa in _left_dfas(size):
            if not _halt_reachable(table, dfa):
                return True
    return False


def _proves_nonhalting_raw(table: list, budget: int) -> bool:
    return _detect_repetition(table, budget) or _closed_language(table)


def proves_nonhalting(machine: TMachine, budget: int) -> bool:
    """Sound but incomplete: True only if ``machine`` never halts.

    Tries the repetition detector over ``budget`` steps, then looks for a
    closed tape language built from a small DFA on the left half-tape.
    """
    return _proves_nonhalting_raw(_raw_table(machine), budget)


# --------------------------------------------------------------------------
# enumeration


def _check_cap(n_states: int) -> None:
    cap = state_cap()
    if not isinstance(n_states, int) or n_states < 1:
        raise DomainError(f"state count must be >= 1, got {n_states!r}")
    if n_states > cap:
        raise CapExceeded(
            f"{n_states} states exceeds the enumeration cap of {cap} "
            f"(raise it with {CAP_ENV_VAR})"
        )


def _choices(n_states: int) -> list[Transition]:
    out = [Transition(w, d, t) for t in range(0, n_states + 1) for w in (0, 1) for d in (LEFT, RIGHT)]
    return out


def _relabel(machine_key: tuple, perm: dict, mirror: bool) -> tuple:
    n = machine_key[0]
    rows = machine_key[1:]
    inv = {v: k for k, v in perm.items()}
    out = []
    for new_state in range(1, n + 1):
        old_state = inv[new_state]
        for symbol in (0, 1):
            w, d, t = rows[2 * (old_state - 1) + symbol]
            if mirror:
                d = LEFT if d == RIGHT else RIGHT
            out.append((w, d, HALT if t == HALT else perm[t]))
    return (n,) + tuple(out)


def _order_key(key: tuple) -> tuple:
    # HALT sorts after every state so that tables naming low states win.
    return tuple((HALT_RANK if t == HALT else t, w, d) for (w, d, t) in key[1:])


HALT_RANK = 10**9


def _first_use_ok(key: tuple) -> bool:
    """Targets introduce states in increasing order while scanning the table
    row by row; a row whose state nobody has named yet introduces it."""
    used = 1
    rows = key[1:]
    for i, (_, _, t) in enumerate(rows):
        state = i // 2 + 1
        if i % 2 == 0 and state > used:
            if state != used + 1:
                return False
            used = state
        if t != HALT and t > used:
            if t != used + 1:
                return False
            used = t
    return True


def _relabelings(key: tuple):
    n = key[0]
    for rest in itertools.permutations(range(2, n + 1)):
        perm = {1: 1, **dict(zip(range(2, n + 1), rest))}
        for mirror in (False, True):
            yield _relabel(key, perm, mirror)


def canonical_key(machine: TMachine) -> tuple:
    """Least table, under ``_order_key``, among the relabelings (renaming
    states other than 1, mirroring L/R) that move right on the first rule and
    introduce states in first-use order."""
    best = None
    for cand in _relabelings(machine.key()):
        if cand[1][1] != RIGHT or not _first_use_ok(cand):
            continue
        if best is None or _order_key(cand) < _order_key(best):
            best = cand
    return best


def is_canonical(machine: TMachine) -> bool:
    return canonical_key(machine) == machine.key()


def enumerate_machines(n_states: int) -> Iterator[TMachine]:
    """Yield one machine per class under state renaming and mirroring.

    Tables are built row by row in first-use order with the first rule
    moving right. When every row's state was named before its row came up,
    that labeling is forced and the table is already canonical; otherwise
    some states are unreachable from state 1 and ``is_canonical`` picks the
    representative.
    """
    _check_cap(n_states)
    choices = _choices(n_states)
    slots = 2 * n_states

    def extend(prefix: list, used: int, ambiguous: bool):
        i = len(prefix)
        if i == slots:
            m = TMachine(n_states, tuple(prefix))
            if not ambiguous or is_canonical(m):
                yield m
            return
        state = i // 2 + 1
        if i % 2 == 0 and state > used:
            used, ambiguous = state, True
        for tr in choices:
            if i == 0 and tr.move != RIGHT:
                continue
            if tr.target > used + 1:
                continue
            prefix.append(tr)
            yield from extend(prefix, max(used, tr.target), ambiguous)
            prefix.pop()

    yield from extend([], 1, False)


# --------------------------------------------------------------------------
# busy-beaver search in tree normal form


@dataclass
class BusyBeaverRecord:
    n_states: int
    budget: int
    best_steps: int
    champions: list[TMachine]
    unresolved: int
    halting: int = 0
    proven_nonhalting: int = 0

    @property
    def exact(self) -> bool:
        return self.unresolved == 0

    def merge(self, other: "BusyBeaverRecord") -> "BusyBeaverRecord":
        if other.best_steps > self.best_steps:
            champs = list(other.champions)
        elif other.best_steps < self.best_steps:
            champs = list(self.champions)
        else:
            champs = self.champions + other.champions
        champs.sort(key=lambda m: _order_key(m.key()))
        return BusyBeaverRecord(
            self.n_states,
            self.budget,
            max(self.best_steps, other.best_steps),
            champs,
            self.unresolved + other.unresolved,
            self.halting + other.halting,
            self.proven_nonhalting + other.proven_nonhalting,
        )


_HALT_FILL = Transition(1, RIGHT, HALT)


def _total(n_states: int, table: list) -> TMachine:
    return TMachine(
        n_states,
        tuple(
            _HALT_FILL if e is None else Transition(e[0], RIGHT if e[1] else LEFT, e[2])
            for e in table
        ),
    )


class _Node:
    __slots__ = ("table", "used", "tape", "head", "state", "steps")

    def __init__(self, table, used, tape, head, state, steps):
        self.table = table
        self.used = used
        self.tape = tape
        self.head = head
        self.state = state
        self.steps = steps

    def child(self, slot: int, entry) -> "_Node":
        table = list(self.table)
        table[slot] = entry
        used = max(self.used, entry[2])
        return _Node(table, used, bytearray(self.tape), self.head, self.state, self.steps)


def _root(n_states: int, budget: int) -> _Node:
    width = 2 * budget + 3
    return _Node([None] * (2 * n_states), 1, bytearray(width), budget + 1, 1, 0)


def _advance(node: _Node, budget: int) -> Optional[int]:
    """Run ``node`` until it needs an undefined entry (returns its slot) or
    exhausts the budget (returns None)."""
    table, tape = node.table, node.tape
    head, state, steps = node.head, node.state, node.steps
    while steps < budget:
        slot = 2 * (state - 1) + tape[head]
        e = table[slot]
        if e is None:
            node.head, node.state, node.steps = head, state, steps
            return slot
        tape[head] = e[0]
        head += 1 if e[1] else -1
        state = e[2]
        steps += 1
    node.head, node.state, node.steps = head, state, steps
    return None


def _expansions(node: _Node, slot: int, n_states: int):
    first = node.steps == 0
    for target in range(1, min(node.used + 1, n_states) + 1):
        for write in (0, 1):
            for right in (True, False):
                if first and not right:
                    continue
                yield node.child(slot, (write, right, target))


def _explore(n_states: int, budget: int, stack: list) -> BusyBeaverRecord:
    rec = BusyBeaverRecord(n_states, budget, 0, [], 0)
    while stack:
        node = stack.pop()
        slot = _advance(node, budget)
        if slot is None:
            if _proves_nonhalting_raw(node.table, budget):
                rec.proven_nonhalting += 1
            else:
                rec.unresolved += 1
            continue
        halt_steps = node.steps + 1
        if halt_steps > budget:
            # halts, but only one step past the budget
            rec.unresolved += 1
        else:
            rec.halting += 1
            if halt_steps > rec.best_steps:
                rec.best_steps = halt_steps
                rec.champions = [_total(n_states, node.table)]
            elif halt_steps == rec.best_steps:
                rec.champions.append(_total(n_states, node.table))
        stack.extend(reversed(list(_expansions(node, slot, n_states))))
    rec.champions.sort(key=lambda m: _order_key(m.key()))
    return rec


def _frontier(n_states: int, budget: int, depth: int) -> list:
    """Subtree roots a few branchings below the root, in DFS order. Halting
    leaves met on the way come out as ``("halt", node)`` items."""
    level: list = [_root(n_states, budget)]
    for _ in range(depth):
        nxt: list = []
        for item in level:
            if isinstance(item, tuple):
                nxt.append(item)
                continue
            probe = _Node(list(item.table), item.used, bytearray(item.tape), item.head, item.state, item.steps)
            slot = _advance(probe, budget)
            if slot is None:
                nxt.append(item)
                continue
            nxt.append(("halt", probe))
            nxt.extend(_expansions(probe, slot, n_states))
        level = nxt
    return level


def _work(args) -> BusyBeaverRecord:
    n_states, budget, items = args
    rec = BusyBeaverRecord(n_states, budget, 0, [], 0)
    for item in items:
        if isinstance(item, tuple):
            # a halting leaf peeled off during frontier expansion
            node = item[1]
            halt_steps = node.steps + 1
            sub = BusyBeaverRecord(n_states, budget, 0, [], 0)
            if halt_steps > budget:
                sub.unresolved = 1
            else:
                sub.halting = 1
                sub.best_steps = halt_steps
                sub.champions = [_total(n_states, node.table)]
        else:
            sub = _explore(n_states, budget, [item])
        rec = rec.merge(sub)
    return rec


def busy_beaver_search(n_states: int, budget: int, workers: int = 1) -> BusyBeaverRecord:
    """Exhaustive search over ``n_states``-state machines in tree normal form.

    Every total machine behaves on the blank tape exactly like one leaf of
    the tree, so the maximum over leaves is the maximum over all machines.
    Leaves that neither halt within ``budget`` nor are proven non-halting
    by ``proves_nonhalting`` are counted in ``unresolved``.
    """
    _check_cap(n_states)
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")
    if workers == 1:
        return _explore(n_states, budget, [_root(n_states, budget)])
    items = _frontier(n_states, budget, depth=2)
    chunks = [items[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_work, [(n_states, budget, c) for c in chunks]))
    rec = BusyBeaverRecord(n_states, budget, 0, [], 0)
    for part in parts:
        rec = rec.merge(part)
    return rec
