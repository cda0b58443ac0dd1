"""Machines with a halting oracle.

An oracle machine is a two-symbol machine with a second, write-only query
tape. Ordinary rules may also write one symbol to the query tape and move
its head; a query rule spends one step asking the oracle about the word on
the query tape and branches to its yes- or no-successor. The query tape is
wiped and its head returned to cell 0 after each query.

The query word is the 8-bit ASCII encoding of a machine in the one-line
text format of :mod:`hierarch.tm`. Only two kinds of oracle exist here: a
finite table (for tests) and a step-budget approximation whose "yes" answers
are always correct. Genuine oracles for the halting problem cannot be
built, so anything layered on the approximation is approximate.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from . import tm
from .errors import DomainError, MalformedMachine, OracleIncomplete, Unsupported
from .tm import HALT, LEFT, RIGHT, BudgetExhausted, Halted, RunResult, Tape, TMachine


@dataclass(frozen=True)
class Act:
    write: int
    move: str
    target: int
    query_write: Optional[int] = None
    query_move: Optional[str] = None

    def __post_init__(self):
        if self.write not in (0, 1) or self.move not in (LEFT, RIGHT):
            raise MalformedMachine(f"bad rule {self!r}")
        if (self.query_write is None) != (self.query_move is None):
            raise MalformedMachine("query write and query move come together")
        if self.query_write is not None and (
            self.query_write not in (0, 1) or self.query_move not in (LEFT, RIGHT)
        ):
            raise MalformedMachine(f"bad query action {self!r}")

    def text(self) -> str:
        t = "H" if self.target == HALT else str(self.target)
        out = f"{self.write},{self.move},{t}"
        if self.query_write is not None:
            out += f"/{self.query_write},{self.query_move}"
        return out


@dataclass(frozen=True)
class Query:
    yes: int
    no: int

    def text(self) -> str:
        show = lambda t: "H" if t == HALT else str(t)
        return f"?,{show(self.yes)},{show(self.no)}"


Rule = Union[Act, Query]


@dataclass(frozen=True)
class OracleMachine:
    n_states: int
    table: tuple
    order: int = 2

    def __post_init__(self):
        if self.order < 2:
            raise MalformedMachine(f"oracle machines have order >= 2, got {self.order}")
        if len(self.table) != 2 * self.n_states:
            raise MalformedMachine(f"expected {2 * self.n_states} rules, got {len(self.table)}")
        for i, rule in enumerate(self.table):
            if not isinstance(rule, (Act, Query)):
                raise MalformedMachine(f"missing transition for ({i // 2 + 1},{i % 2})")
            targets = (rule.yes, rule.no) if isinstance(rule, Query) else (rule.target,)
            for t in targets:
                if t != HALT and not 1 <= t <= self.n_states:
                    raise MalformedMachine(f"rule ({i // 2 + 1},{i % 2}) targets unknown state {t}")

    @classmethod
    def from_machine(cls, machine: TMachine, order: int = 2) -> "OracleMachine":
        return cls(
            machine.n_states,
            tuple(Act(tr.write, tr.move, tr.target) for tr in machine.table),
            order,
        )

    def text(self) -> str:
        rules = " | ".join(
            f"{i // 2 + 1},{i % 2} -> {rule.text()}" for i, rule in enumerate(self.table)
        )
        return f"{self.n_states}^{self.order}; {rules}"


_ACT_RE = re.compile(
    r"^\s*(\d+)\s*,\s*([01])\s*->\s*([01])\s*,\s*([LR])\s*,\s*(\d+|H)\s*(?:/\s*([01])\s*,\s*([LR])\s*)?$"
)
_QUERY_RE = re.compile(r"^\s*(\d+)\s*,\s*([01])\s*->\s*\?\s*,\s*(\d+|H)\s*,\s*(\d+|H)\s*$")


def _target(tok: str) -> int:
    return HALT if tok == "H" else int(tok)


def parse_oracle_machine(text: str) -> OracleMachine:
    """Parse ``n^order; s,b -> w,D,t[/q,E] | s,b -> ?,yes,no | ...``.

    The ``^order`` suffix is optional (default 2); a plain machine line is
    accepted as an oracle-free oracle machine.
    """
    head, sep, body = text.strip().partition(";")
    if not sep:
        raise MalformedMachine(f"expected 'n_states; rules', got {text!r}")
    n_part, _, order_part = head.partition("^")
    try:
        n_states = int(n_part)
        order = int(order_part) if order_part else 2
    except ValueError:
        raise MalformedMachine(f"bad header {head!r}") from None
    rules = {}
    for chunk in body.split("|"):
        if not chunk.strip():
            continue
        m = _QUERY_RE.match(chunk)
        if m:
            s, b, yes, no = m.groups()
            rule: Rule = Query(_target(yes), _target(no))
        else:
            m = _ACT_RE.match(chunk)
            if not m:
                raise MalformedMachine(f"cannot parse transition {chunk.strip()!r}")
            s, b, w, d, t, qw, qd = m.groups()
            rule = Act(int(w), d, _target(t), None if qw is None else int(qw), qd)
        pair = (int(s), int(b))
        if pair in rules:
            raise MalformedMachine(f"duplicate transition for {pair}")
        rules[pair] = rule
    table = []
    for state in range(1, n_states + 1):
        for symbol in (0, 1):
            if (state, symbol) not in rules:
                raise MalformedMachine(f"missing transition for ({state},{symbol})")
            table.append(rules.pop((state, symbol)))
    if rules:
        raise MalformedMachine(f"transitions for undeclared pairs: {sorted(rules)}")
    return OracleMachine(n_states, tuple(table), order)


# --------------------------------------------------------------------------
# query encoding


def encode_query(text: str) -> list[int]:
    """8-bit big-endian ASCII bits of ``text``."""
    bits = []
    for byte in text.encode("ascii"):
        bits.extend((byte >> (7 - i)) & 1 for i in range(8))
    return bits


def decode_query(bits: list[int]) -> str:
    """Inverse of :func:`encode_query`; words that are not whole ASCII bytes
    come back as the raw bit string prefixed with ``bits:``."""
    if len(bits) % 8 == 0:
        raw = bytes(
            int("".join(map(str, bits[i : i + 8])), 2) for i in range(0, len(bits), 8)
        )
        if all(b < 128 for b in raw):
            return raw.decode("ascii")
    return "bits:" + "".join(map(str, bits))


def normalize_key(query: str) -> str:
    """Machine texts compare after re-serialization; anything else verbatim."""
    try:
        return tm.parse_machine(query).text()
    except MalformedMachine:
        return query


# --------------------------------------------------------------------------
# oracles


@dataclass(frozen=True)
class ExactTable:
    answers: dict


@dataclass(frozen=True)
class BudgetApprox:
    budget: int


@dataclass
class HaltingOracle:
    """An oracle plus the ordered log of every question it was asked.

    The log is mutable, so one oracle instance serves one run at a time.
    """

    kind: Union[ExactTable, BudgetApprox]
    transcript: list = field(default_factory=list)

    @classmethod
    def table(cls, answers: dict) -> "HaltingOracle":
        norm = {}
        for key, value in answers.items():
            if isinstance(value, str):
                if value.lower() not in ("yes", "no"):
                    raise DomainError(f"oracle answers are 'yes'/'no', got {value!r}")
                value = value.lower() == "yes"
            norm[normalize_key(key)] = bool(value)
        return cls(ExactTable(norm))

    @classmethod
    def load_table(cls, path) -> "HaltingOracle":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise DomainError(f"{path}: oracle table must be a JSON object")
        return cls.table(data)

    @property
    def approximate(self) -> bool:
        return isinstance(self.kind, BudgetApprox)

    def ask(self, query: str) -> bool:
        key = normalize_key(query)
        if isinstance(self.kind, ExactTable):
            if key not in self.kind.answers:
                raise OracleIncomplete(key)
            answer = self.kind.answers[key]
        else:
            answer = _halts_within(key, self.kind.budget)
        self.transcript.append((key, answer))
        return answer


def _halts_within(query: str, budget: int) -> bool:
    try:
        machine = tm.parse_machine(query)
    except MalformedMachine:
        return False
    return tm.run(machine, budget).halted


def approximate_oracle(order: int, budget: int) -> HaltingOracle:
    """Oracle answering "does this order-1 machine halt within ``budget`` steps".

    Only order 2 can be approximated this way: an order-k oracle for k > 2
    would have to decide halting of machines that themselves consult an
    uncomputable oracle.
    """
    if order > 2:
        raise Unsupported(
            f"order {order} oracles are uncomputable and have no budget approximation; "
            "only order 2 is supported"
        )
    if order < 2:
        raise DomainError(f"oracles serve machines of order >= 2, got {order}")
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    return HaltingOracle(BudgetApprox(budget))


# --------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class RelativizedRun:
    result: RunResult
    transcript: tuple
    approximate: bool


def run_relativized(machine: OracleMachine, oracle: HaltingOracle, budget: int) -> RelativizedRun:
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    first_entry = len(oracle.transcript)
    table = machine.table
    tape = Tape()
    qtape: dict[int, int] = {}
    qhead = 0
    head, state, steps = 0, 1, 0
    outcome = None
    while steps < budget:
        rule = table[2 * (state - 1) + tape[head]]
        steps += 1
        if isinstance(rule, Query):
            written = [qtape.get(i, 0) for i in range(max(qtape) + 1)] if qtape else []
            answer = oracle.ask(decode_query(written))
            qtape.clear()
            qhead = 0
            nxt = rule.yes if answer else rule.no
            if nxt == HALT:
                outcome = Halted(steps, tape.ones())
                break
            state = nxt
            continue
        tape[head] = rule.write
        if rule.query_write is not None:
            qtape[qhead] = rule.query_write
            qhead += 1 if rule.query_move == RIGHT else -1
            if qhead < 0:
                raise DomainError("query tape head moved left of cell 0")
        if rule.target == HALT:
            outcome = Halted(steps, tape.ones())
            break
        head += 1 if rule.move == RIGHT else -1
        tape.visit(head)
        state = rule.target
    if outcome is None:
        outcome = BudgetExhausted(budget)
    return RelativizedRun(
        RunResult(outcome, tape.summary()),
        tuple(oracle.transcript[first_entry:]),
        oracle.approximate,
    )


def query_machine(question: str, halt_on: bool = True, order: int = 2) -> OracleMachine:
    """A machine that spells ``question`` onto the query tape, asks once, and
    halts on answer ``halt_on``; on the other answer it runs right forever."""
    bits = encode_query(question)
    n = len(bits) + 2
    loop = len(bits) + 2
    table = []
    for i, bit in enumerate(bits, start=1):
        rule = Act(0, RIGHT, i + 1, bit, RIGHT)
        table += [rule, rule]
    q = Query(HALT, loop) if halt_on else Query(loop, HALT)
    table += [q, q]
    spin = Act(0, RIGHT, loop)
    table += [spin, spin]
    return OracleMachine(n, tuple(table), order)
