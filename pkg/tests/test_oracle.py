import random

import pytest

from hierarch import oracle, tm
from hierarch.errors import DomainError, MalformedMachine, OracleIncomplete, Unsupported
from hierarch.oracle import Act, OracleMachine, Query

BB2 = "2; 1,0 -> 1,R,2 | 1,1 -> 1,L,2 | 2,0 -> 1,L,1 | 2,1 -> 1,R,H"
LOOPER = "1; 1,0 -> 1,R,1 | 1,1 -> 1,R,1"


def random_machine(rng, n):
    targets = [tm.HALT, *range(1, n + 1)]
    rules = {
        (s, b): (rng.randint(0, 1), rng.choice("LR"), rng.choice(targets))
        for s in range(1, n + 1)
        for b in (0, 1)
    }
    return tm.TMachine.from_mapping(n, rules)


def seeded_machines(count=50, seed=2024):
    rng = random.Random(seed)
    return [random_machine(rng, rng.randint(1, 4)) for _ in range(count)]


def test_encoding_round_trip():
    for text in (BB2, LOOPER, "", "A"):
        bits = oracle.encode_query(text)
        assert len(bits) == 8 * len(text)
        assert oracle.decode_query(bits) == text


def test_encoding_is_big_endian_ascii():
    assert oracle.encode_query("A") == [0, 1, 0, 0, 0, 0, 0, 1]


def test_non_byte_words_decode_as_raw_bits():
    assert oracle.decode_query([1, 0, 1]) == "bits:101"


def test_oracle_free_run_equals_plain_run_on_seeded_machines():
    for m in seeded_machines():
        for budget in (1, 7, 60):
            rel = oracle.run_relativized(OracleMachine.from_machine(m), oracle.approximate_oracle(2, 10), budget)
            assert rel.result == tm.run(m, budget)
            assert rel.transcript == ()


def test_budget_approximation_is_monotone_on_seeded_machines():
    budgets = (1, 2, 5, 10, 30, 100)
    for m in seeded_machines():
        answers = [oracle.approximate_oracle(2, b).ask(m.text()) for b in budgets]
        for lo, hi in zip(answers, answers[1:]):
            assert hi or not lo
        assert answers[-1] == tm.run(m, 100).halted


def test_query_machine_with_table_oracle():
    orc = oracle.HaltingOracle.table({BB2: "yes", LOOPER: "no"})
    yes = oracle.run_relativized(oracle.query_machine(BB2), orc, 10_000)
    assert yes.result.halted
    assert yes.transcript == ((BB2, True),)
    no = oracle.run_relativized(oracle.query_machine(LOOPER), orc, 2_000)
    assert not no.result.halted
    assert no.transcript == ((LOOPER, False),)
    assert not yes.approximate


def test_query_step_accounting():
    # one step per written bit, one for the query
    m = oracle.query_machine(BB2)
    res = oracle.run_relativized(m, oracle.HaltingOracle.table({BB2: True}), 10_000)
    assert res.result.steps == 8 * len(BB2) + 1


def test_query_keys_are_normalized():
    spaced = BB2.replace(" | ", "|").replace(" -> ", "->")
    orc = oracle.HaltingOracle.table({spaced: True})
    assert orc.ask(BB2)


def test_incomplete_table_raises():
    orc = oracle.HaltingOracle.table({})
    with pytest.raises(OracleIncomplete) as info:
        oracle.run_relativized(oracle.query_machine(BB2), orc, 10_000)
    assert info.value.query == BB2


def test_transcripts_are_deterministic():
    m = oracle.query_machine(BB2, halt_on=False)
    a = oracle.run_relativized(m, oracle.approximate_oracle(2, 3), 5_000)
    b = oracle.run_relativized(m, oracle.approximate_oracle(2, 3), 5_000)
    assert a == b
    assert a.approximate
    # BB2 needs 6 steps, so budget 3 says "no" and halt_on=False halts
    assert a.result.halted and a.transcript == ((BB2, False),)


def test_higher_order_oracle_unsupported():
    with pytest.raises(Unsupported):
        oracle.approximate_oracle(3, 100)
    with pytest.raises(DomainError):
        oracle.approximate_oracle(1, 100)


def test_text_round_trip():
    m = oracle.query_machine("1; 1,0 -> 1,R,H | 1,1 -> 1,R,H")
    assert oracle.parse_oracle_machine(m.text()) == m
    plain = oracle.parse_oracle_machine(BB2)
    assert plain == OracleMachine.from_machine(tm.parse_machine(BB2))


def test_malformed_oracle_machines():
    with pytest.raises(MalformedMachine):
        oracle.parse_oracle_machine("1^2; 1,0 -> ?,H,2 | 1,1 -> 1,R,H")
    with pytest.raises(MalformedMachine):
        oracle.parse_oracle_machine("1^2; 1,0 -> 1,R,H")
    with pytest.raises(MalformedMachine):
        Act(1, "R", 1, query_write=1)
    with pytest.raises(MalformedMachine):
        OracleMachine(1, (Query(0, 0), Act(1, "R", 0)), order=1)


def test_query_tape_cannot_move_left_of_origin():
    m = OracleMachine(1, (Act(1, "R", 1, 1, "L"), Act(1, "R", 1, 1, "L")))
    with pytest.raises(DomainError):
        oracle.run_relativized(m, oracle.approximate_oracle(2, 5), 10)
