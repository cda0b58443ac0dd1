"""Prenex arithmetic predicates over the positive integers.

A formula is a quantifier prefix over named variables plus a decidable
kernel, given as a Python callable. Kernels are evaluated under a step
budget: a plain function costs one step, and a generator function costs one
step per ``yield`` and returns its verdict with ``return``.

Variables range over 1, 2, 3, ... unless a formula is built with
``start=0``.
"""

from __future__ import annotations

import inspect
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from .errors import DomainError, KernelTimeout, NotQuantified, ShapeError

EXISTS = "E"
FORALL = "A"
_QUANT_ALIASES = {"E": EXISTS, "∃": EXISTS, "exists": EXISTS, "A": FORALL, "∀": FORALL, "forall": FORALL}

DEFAULT_KERNEL_BUDGET = 10_000


class Kernel:
    """A total decidable predicate with a per-evaluation step budget.

    ``eventually_constant`` is a promise by whoever built the kernel that
    its value no longer changes outside some finite box, which is what makes
    bounded evaluation exact. Oracles that depend on exactness refuse
    kernels without it.
    """

    def __init__(
        self,
        fn: Callable,
        eventually_constant: bool = False,
        budget: int = DEFAULT_KERNEL_BUDGET,
        name: str = "",
    ):
        self.fn = fn
        self.eventually_constant = eventually_constant
        self.budget = budget
        self.name = name or getattr(fn, "__name__", "kernel")
        self._stepped = inspect.isgeneratorfunction(fn)

    def steps(self, point: Mapping[str, int]):
        """Generator form: one yield per step, verdict as return value."""
        if self._stepped:
            return (yield from self.fn(**point))
        yield
        return self.fn(**point)

    def __call__(self, budget: Optional[int] = None, **point) -> bool:
        limit = self.budget if budget is None else budget
        gen = self.steps(point)
        used = 0
        try:
            while True:
                next(gen)
                used += 1
                if used > limit:
                    gen.close()
                    raise KernelTimeout(point, limit)
        except StopIteration as stop:
            return bool(stop.value)

    def __repr__(self):
        return f"Kernel({self.name})"


@dataclass(frozen=True)
class PrenexFormula:
    prefix: tuple  # ((quantifier, variable), ...)
    kernel: Kernel
    free_vars: tuple = ()
    start: int = 1

    def __post_init__(self):
        prefix = tuple((_QUANT_ALIASES.get(q, q), v) for q, v in self.prefix)
        for q, _ in prefix:
            if q not in (EXISTS, FORALL):
                raise DomainError(f"unknown quantifier {q!r}")
        names = [v for _, v in prefix] + list(self.free_vars)
        if len(set(names)) != len(names):
            raise DomainError(f"variable names must be unique, got {names}")
        if self.start not in (0, 1):
            raise DomainError(f"variables start at 0 or 1, got {self.start}")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "free_vars", tuple(self.free_vars))

    @property
    def variables(self) -> tuple:
        return tuple(v for _, v in self.prefix)

    def describe(self) -> str:
        sym = {EXISTS: "∃", FORALL: "∀"}
        return "".join(f"{sym[q]}{v}" for q, v in self.prefix) + f" {self.kernel.name}"


@dataclass(frozen=True)
class HierarchyClass:
    side: str  # "Sigma" | "Pi"
    level: int

    def __str__(self):
        return f"{self.side}_{self.level}"


def classify(f: PrenexFormula) -> HierarchyClass:
    if not f.prefix:
        raise NotQuantified("formula has an empty quantifier prefix")
    quants = [q for q, _ in f.prefix]
    alternations = sum(1 for a, b in zip(quants, quants[1:]) if a != b)
    side = "Sigma" if quants[0] == EXISTS else "Pi"
    return HierarchyClass(side, alternations + 1)


# --------------------------------------------------------------------------
# pairing


def pair(n1: int, n2: int) -> int:
    """(2*n1 - 1) * 2**(n2 - 1), a bijection from pairs of positive integers
    onto the positive integers."""
    if n1 < 1 or n2 < 1:
        raise DomainError(f"pair is defined on positive integers, got ({n1}, {n2})")
    return (2 * n1 - 1) << (n2 - 1)


def unpair(n: int) -> tuple[int, int]:
    if n < 1:
        raise DomainError(f"unpair is defined on positive integers, got {n}")
    twos = (n & -n).bit_length() - 1
    return ((n >> twos) + 1) // 2, twos + 1


def merge_leading_exists(f: PrenexFormula, name: str = "N") -> PrenexFormula:
    """Replace a leading ``∃a ∃b`` by a single ``∃N`` with ``(a, b) = unpair(N)``.

    The smallest witness N is at least the smallest witness a, because
    ``pair(a, b) >= a``.
    """
    if len(f.prefix) < 2 or f.prefix[0][0] != EXISTS or f.prefix[1][0] != EXISTS:
        raise ShapeError(f"expected a prefix starting with two existential blocks, got {f.describe()}")
    (_, a), (_, b) = f.prefix[:2]
    taken = set(f.variables) | set(f.free_vars)
    fresh = name
    while fresh in taken - {a, b}:
        fresh += "'"
    inner = f.kernel
    shift = f.start

    def merged(**point):
        code = point.pop(fresh)
        x, y = unpair(code + 1 - shift)
        point[a], point[b] = x - 1 + shift, y - 1 + shift
        return (yield from inner.steps(point))

    kernel = Kernel(
        merged,
        eventually_constant=inner.eventually_constant,
        budget=inner.budget,
        name=f"{inner.name}∘unpair({fresh})",
    )
    return PrenexFormula(((EXISTS, fresh),) + f.prefix[2:], kernel, f.free_vars, f.start)


# --------------------------------------------------------------------------
# bounded evaluation


def _domain(f: PrenexFormula, var: str, bounds: Mapping[str, int]) -> range:
    if var not in bounds:
        raise DomainError(f"no bound given for quantified variable {var!r}")
    bound = bounds[var]
    if bound < 1:
        raise DomainError(f"bound for {var!r} must be >= 1, got {bound}")
    return range(f.start, bound + 1)


def _eval_from(f: PrenexFormula, depth: int, bounds, point: dict) -> bool:
    if depth == len(f.prefix):
        return f.kernel(**point)
    q, var = f.prefix[depth]
    values = _domain(f, var, bounds)
    if q == EXISTS:
        for v in values:
            point[var] = v
            if _eval_from(f, depth + 1, bounds, point):
                return True
        return False
    for v in values:
        point[var] = v
        if not _eval_from(f, depth + 1, bounds, point):
            return False
    return True


def _check_free(f: PrenexFormula, assignment: Optional[Mapping[str, int]]) -> dict:
    point = dict(assignment or {})
    missing = [v for v in f.free_vars if v not in point]
    if missing:
        raise DomainError(f"free variables without values: {missing}")
    return point


def bounded_eval(
    f: PrenexFormula,
    bounds: Mapping[str, int],
    assignment: Optional[Mapping[str, int]] = None,
) -> bool:
    """Evaluate with every quantified variable restricted to ``start..bound``.

    Exact only when the kernel is constant outside the box; otherwise this
    is an approximation (``∀m ∃k k = m+1`` is false on any finite box).
    """
    return _eval_from(f, 0, bounds, _check_free(f, assignment))


def bounded_witness(
    f: PrenexFormula,
    bounds: Mapping[str, int],
    assignment: Optional[Mapping[str, int]] = None,
) -> Optional[int]:
    """Least value of the leading existential variable that makes the rest
    true on the box, or None."""
    if not f.prefix or f.prefix[0][0] != EXISTS:
        raise ShapeError("bounded_witness needs a leading existential quantifier")
    point = _check_free(f, assignment)
    var = f.prefix[0][1]
    for v in _domain(f, var, bounds):
        point[var] = v
        if _eval_from(f, 1, bounds, point):
            return v
    return None


# --------------------------------------------------------------------------
# limit evaluation


@dataclass(frozen=True)
class LimitValue:
    bit: int
    stabilized_for: int  # length of the final constant run, observed not proven


def limit_eval(g: Callable[[int, int], int], n: int, stages: int) -> LimitValue:
    """Read ``g(n, s)`` for s = 1..stages and report the last value together
    with how long it has been constant."""
    if stages < 1:
        raise DomainError(f"stages must be >= 1, got {stages}")
    last = None
    run = 0
    for s in range(1, stages + 1):
        bit = g(n, s)
        if bit not in (0, 1):
            raise DomainError(f"g({n}, {s}) = {bit!r} is not a bit")
        run = run + 1 if bit == last else 1
        last = bit
    return LimitValue(int(last), run)


# --------------------------------------------------------------------------
# JSON kernel fixtures


_OPS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _key(values: Iterable[int]) -> str:
    return ",".join(str(v) for v in values)


def _compile(spec: Mapping) -> Callable[[dict], bool]:
    kind = spec.get("type")
    if kind == "const":
        value = bool(spec["value"])
        return lambda env: value
    if kind == "compare":
        left, op, right = spec["left"], spec["op"], spec["right"]
        offset = int(spec.get("offset", 0))
        if op not in _OPS:
            raise DomainError(f"unknown comparison {op!r}")
        test = _OPS[op]
        if isinstance(right, str):
            return lambda env: test(env[left], env[right] + offset)
        return lambda env: test(env[left], int(right) + offset)
    if kind in ("and", "or"):
        parts = [_compile(s) for s in spec["args"]]
        if kind == "and":
            return lambda env: all(p(env) for p in parts)
        return lambda env: any(p(env) for p in parts)
    if kind == "not":
        inner = _compile(spec["arg"])
        return lambda env: not inner(env)
    if kind == "table":
        # Witness thresholds: entry null means no witness at that key,
        # entry t means the witness variable must be >= t.
        key_vars = list(spec["key"])
        wvar = spec["witness"]
        entries = {str(k).replace(" ", ""): v for k, v in spec.get("entries", {}).items()}
        default = bool(spec.get("default", False))

        def table(env):
            k = _key(env[v] for v in key_vars)
            if k not in entries:
                return default
            t = entries[k]
            return t is not None and env[wvar] >= t

        return table
    if kind == "support":
        vars_ = list(spec["vars"])
        hits = {_key(p) for p in spec.get("true", [])}
        misses = {_key(p) for p in spec.get("false", [])}
        default = bool(spec.get("default", False))

        def support(env):
            k = _key(env[v] for v in vars_)
            if k in hits:
                return True
            if k in misses:
                return False
            return default

        return support
    raise DomainError(f"unknown kernel type {kind!r}")


def kernel_from_json(spec: Mapping, budget: int = DEFAULT_KERNEL_BUDGET) -> Kernel:
    """Build a kernel from its JSON fixture (see README for the schema)."""
    fn = _compile(spec)

    def evaluate(**env):
        return fn(env)

    return Kernel(
        evaluate,
        eventually_constant=bool(spec.get("eventually_constant", False)),
        budget=budget,
        name=spec.get("name", spec.get("type", "kernel")),
    )


def formula_from_json(spec: Mapping) -> PrenexFormula:
    prefix = tuple((q, v) for q, v in spec.get("prefix", []))
    kernel_spec = spec["kernel"]
    kernel = kernel_from_json(kernel_spec, budget=int(spec.get("budget", DEFAULT_KERNEL_BUDGET)))
    return PrenexFormula(
        prefix,
        kernel,
        tuple(spec.get("free", ())),
        0 if spec.get("zero_based") else 1,
    )


def load_formula(path) -> PrenexFormula:
    with open(path, encoding="utf-8") as fh:
        return formula_from_json(json.load(fh))


def parse_assignments(text: str) -> dict:
    """``"a=5,b=5"`` -> ``{"a": 5, "b": 5}``."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"expected name=value, got {item!r}")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise DomainError(f"value for {name!r} is not an integer: {value!r}") from None
    return out
