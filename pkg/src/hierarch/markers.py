"""Moving-markers enumeration of an r.e. set from a Sigma_3 predicate.

Given a kernel QQ(n, m, k), the semi-decider M(n) on input m looks, for
every p <= m, for some k with QQ(n, p, k), searching in rounds: round r tries
k = r for each p still lacking a witness. Its running time is the number of
kernel evaluations, so with w(p) the least witness for p the halting time
is ``w(1) + ... + w(m)``.

Cells of a tape carry markers. At stage s the markers i <= s are examined in
increasing order; marker i moves when s is the halting time of M(i) on some
input, freeing its cell, which is enumerated into W at once, while every
higher marker slides up one place. Markers are never stored: marker j always
sits on the j-th smallest cell not in W, and the code keeps only W.

If n0 is the least n with ``∀m ∃k QQ(n, m, k)``, markers below n0 eventually
stand still and marker n0 moves forever, so the complement of W ends up with
the cells of the markers below n0. An optional fixed marker on an extra cell
0 adds one more cell, making the count exactly n0; reported cells are then
shifted up by one so that W is a set of positive integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .arith import FORALL, EXISTS, Kernel, PrenexFormula, bounded_eval
from .errors import DomainError, KernelTimeout, UndeclaredKernel


@dataclass(frozen=True)
class Sigma3Instance:
    """``∃n ∀m ∃k QQ(n, m, k)``; ``family`` fixes an extra kernel argument ``l``."""

    kernel: Kernel
    zero_based: bool = False
    dummy_marker: bool = True
    family: Optional[int] = None

    def evaluate(self, n: int, m: int, k: int) -> bool:
        if self.family is None:
            return self.kernel(n=n, m=m, k=k)
        return self.kernel(n=n, m=m, k=k, l=self.family)

    @property
    def first_index(self) -> int:
        return 0 if self.zero_based else 1

    @property
    def cell_offset(self) -> int:
        """Added to internal cell numbers (which start at 0) when reporting."""
        return 0 if self.zero_based and not self.dummy_marker else 1

    def expected_cardinality(self, least_n: int) -> int:
        """What the complement should settle to when ``least_n`` is the least
        good n."""
        return least_n - self.first_index + (1 if self.dummy_marker else 0)


def mn_halting_time(instance: Sigma3Instance, n: int, m: int, cap: int) -> Optional[int]:
    """Run M(n) on input m, counting kernel evaluations; None if it has not
    halted after ``cap`` of them."""
    if cap < 1:
        raise DomainError(f"cap must be >= 1, got {cap}")
    if m < 1:
        raise DomainError(f"inputs are positive integers, got {m}")
    witnessed = [False] * (m + 1)
    remaining = m
    evaluations = 0
    k = 0
    while True:
        k += 1
        for p in range(1, m + 1):
            if witnessed[p]:
                continue
            if evaluations == cap:
                return None
            evaluations += 1
            if instance.evaluate(n, p, k):
                witnessed[p] = True
                remaining -= 1
                if remaining == 0:
                    return evaluations


class _Semidecider:
    """Halting times of one M(n), found lazily in increasing order.

    Halting times are the prefix sums of least witnesses, so they strictly
    increase with the input and the k-search for each p can be resumed
    when the run is extended.
    """

    __slots__ = ("instance", "n", "m", "total", "k_tried", "times")

    def __init__(self, instance: Sigma3Instance, n: int):
        self.instance = instance
        self.n = n
        self.m = 0  # inputs 1..m have known halting times
        self.total = 0  # halting time on input m
        self.k_tried = 0  # k-search progress for input m+1
        self.times: list[int] = []

    def next_time_upto(self, limit: int) -> Optional[int]:
        """Halting time on input m+1 if it is at most ``limit``."""
        p = self.m + 1
        while self.total + self.k_tried < limit:
            self.k_tried += 1
            if self.instance.evaluate(self.n, p, self.k_tried):
                self.m = p
                self.total += self.k_tried
                self.k_tried = 0
                self.times.append(self.total)
                return self.total
        return None


class _Fenwick:
    """Counts of taken cells with prefix sums and k-th-free-cell search."""

    def __init__(self, size: int = 64):
        self.size = size
        self.tree = [0] * (size + 1)
        self.taken: set[int] = set()

    def _grow(self, need: int) -> None:
        size = self.size
        while size < need:
            size *= 2
        self.size = size
        self.tree = [0] * (size + 1)
        for c in self.taken:
            self._add(c)

    def _add(self, cell: int) -> None:
        i = cell + 1
        while i <= self.size:
            self.tree[i] += 1
            i += i & -i

    def take(self, cell: int) -> None:
        if cell in self.taken:
            return
        if cell >= self.size:
            self.taken.add(cell)
            self._grow(cell + 1)
            return
        self.taken.add(cell)
        self._add(cell)

    def kth_free(self, k: int) -> int:
        """Cell of 0-based rank k among cells not taken."""
        if self.size - len(self.taken) <= k:
            self._grow(len(self.taken) + k + 1)
        pos, taken = 0, 0
        step = 1 << self.size.bit_length()
        while step:
            nxt = pos + step
            if nxt <= self.size and nxt - (taken + self.tree[nxt]) <= k:
                pos = nxt
                taken += self.tree[nxt]
            step >>= 1
        return pos


class Event(NamedTuple):
    stage: int
    marker: int
    freed_cell: int


@dataclass
class MarkerRun:
    instance: Sigma3Instance
    stage: int = 0
    events: list = field(default_factory=list)
    enumerated: set = field(default_factory=set)  # reported cells of W

    def __post_init__(self):
        self._cells = _Fenwick()
        if self.instance.dummy_marker:
            self._cells.take(0)
        self._deciders: dict[int, _Semidecider] = {}
        self._due: dict[int, Optional[int]] = {}

    def _marker_cell(self, marker: int) -> int:
        return self._cells.kth_free(marker - self.instance.first_index)

    def marker_positions(self, count: int) -> list[int]:
        """Reported cells of the first ``count`` markers."""
        off = self.instance.cell_offset
        return [self._marker_cell(self.instance.first_index + j) + off for j in range(count)]

    def _triggers(self, marker: int, s: int) -> bool:
        """Is s a halting time of M(marker)?"""
        dec = self._deciders.get(marker)
        if dec is None:
            dec = self._deciders[marker] = _Semidecider(self.instance, marker)
            self._due[marker] = None
        due = self._due[marker]
        while due is None or due < s:
            due = dec.next_time_upto(s)
            if due is None:
                self._due[marker] = None
                return False
        self._due[marker] = due
        return due == s

    def advance(self, stages: int = 1) -> "MarkerRun":
        inst = self.instance
        off = inst.cell_offset
        for _ in range(stages):
            s = self.stage + 1
            for marker in range(inst.first_index, s + 1):
                try:
                    fired = self._triggers(marker, s)
                except KernelTimeout as exc:
                    raise KernelTimeout(exc.point, exc.budget, stage=s, marker=marker) from None
                if fired:
                    cell = self._marker_cell(marker)
                    self._cells.take(cell)
                    self.enumerated.add(cell + off)
                    self.events.append(Event(s, marker, cell + off))
            self.stage = s
        return self

    def enumerated_by(self, stage: int) -> set:
        return {e.freed_cell for e in self.events if e.stage <= stage}


def run_markers(instance: Sigma3Instance, stages: int) -> MarkerRun:
    if stages < 1:
        raise DomainError(f"stages must be >= 1, got {stages}")
    return MarkerRun(instance).advance(stages)


@dataclass(frozen=True)
class Snapshot:
    cells: frozenset
    cardinality: int


def complement_snapshot(run: MarkerRun, horizon: int, stage: Optional[int] = None) -> Snapshot:
    """Cells ``c <= horizon`` not in W, at the current stage or an earlier one."""
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    low = 0 if run.instance.cell_offset == 0 else 1
    w = run.enumerated if stage is None or stage >= run.stage else run.enumerated_by(stage)
    cells = frozenset(c for c in range(low, horizon + 1) if c not in w)
    return Snapshot(cells, len(cells))


@dataclass(frozen=True)
class Stabilization:
    cardinality: int
    stage: int  # stage at which the horizon window last changed
    observed_until: int
    quiet_window: int


def stabilize(
    instance: Sigma3Instance,
    horizon: int,
    window: Optional[int] = None,
    max_stages: int = 20_000,
    run: Optional[MarkerRun] = None,
) -> Stabilization:
    """Advance until the complement below ``horizon`` has not changed for a
    quiet window of stages, by default ``max(64, 4 * current count)``.

    The result is what was observed. Convergence itself is undecidable, so
    a later change is never ruled out.
    """
    run = run or MarkerRun(instance)
    last_change = run.stage
    current = complement_snapshot(run, horizon).cardinality
    while run.stage < max_stages:
        quiet = window if window is not None else max(64, 4 * current)
        if run.stage - last_change >= quiet:
            return Stabilization(current, last_change, run.stage, quiet)
        before = len(run.events)
        run.advance(1)
        if any(e.freed_cell <= horizon for e in run.events[before:]):
            last_change = run.stage
            current = complement_snapshot(run, horizon).cardinality
    raise DomainError(f"no quiet window observed within {max_stages} stages")


def brute_force_min_n(instance: Sigma3Instance, box: tuple[int, int, int]) -> Optional[int]:
    """Least n in the box with ``∀m ∃k QQ(n, m, k)`` true on the box.

    Only sound for kernels declared eventually constant beyond the box.
    """
    if not instance.kernel.eventually_constant:
        raise UndeclaredKernel(
            "brute_force_min_n needs a kernel declared eventually constant beyond the box"
        )
    n_bound, m_bound, k_bound = box
    start = instance.first_index
    inner = Kernel(
        lambda n, m, k: instance.evaluate(n, m, k),
        eventually_constant=True,
        budget=1,
        name=instance.kernel.name,
    )
    for n in range(start, n_bound + 1):
        # m and k always range over positive integers
        body = PrenexFormula(((FORALL, "m"), (EXISTS, "k")), inner, ("n",), start=1)
        if bounded_eval(body, {"m": m_bound, "k": k_bound}, {"n": n}):
            return n
    return None
