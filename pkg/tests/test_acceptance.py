"""Acceptance suite: one test per criterion, each printed as a PASS/FAIL
line in the terminal summary (see conftest.py).

Run on its own with ``pytest tests/test_acceptance.py`` or
``python tests/test_acceptance.py``.
"""

import json
import random
import sys
import time
from pathlib import Path

import pytest

from hierarch import arith, cli, groups, markers, oracle, tm
from hierarch.groups import FinitePresentation, parse_word

from helpers import census_oracle, instance, least_good_n, oracle_key, random_table_kernel, threshold_kernel

crit = pytest.mark.criterion

BB_CASES = [(1, 10, 1), (2, 50, 6), (3, 200, 21)]
RANDOM_SEEDS = range(100)
HORIZON = 64


def fixtures():
    """The marker fixtures: the threshold family and the seeded tables."""
    out = [(f"geq{n0}", threshold_kernel(n0)) for n0 in range(1, 6)]
    out += [(f"table{seed}", random_table_kernel(seed)) for seed in RANDOM_SEEDS]
    return out


def check_marker_invariant(run, seen):
    """Marker positions equal the smallest cells missing from W."""
    inst = run.instance
    count = run.stage + 1
    positions = run.marker_positions(count)
    low = 0 if inst.cell_offset == 0 else 1 + (1 if inst.dummy_marker else 0)
    free = []
    c = low
    while len(free) < count:
        if c not in run.enumerated:
            free.append(c)
        c += 1
    assert positions == free, f"stage {run.stage}"
    seen.append(run.stage)


def stabilized_runs():
    """Stabilize every fixture with the fixed marker on and off, checking the
    marker invariant after every stage."""
    results = []
    for name, spec in fixtures():
        for dummy in (True, False):
            inst = instance(spec, dummy_marker=dummy)
            run = markers.MarkerRun(inst)
            checked = []
            advance = run.advance

            def stepping(stages=1, _advance=advance, _run=run, _checked=checked):
                for _ in range(stages):
                    _advance(1)
                    check_marker_invariant(_run, _checked)
                return _run

            run.advance = stepping
            result = markers.stabilize(inst, HORIZON, run=run)
            results.append((name, spec, dummy, run, result, checked))
    return results


@pytest.fixture(scope="module")
def marker_results():
    start = time.perf_counter()
    results = stabilized_runs()
    return results, time.perf_counter() - start


@crit(1, "busy-beaver values 1, 6, 21 with nothing unresolved, under 60 s")
def test_busy_beaver_exactness():
    start = time.perf_counter()
    for n, budget, expected in BB_CASES:
        rec = tm.busy_beaver_search(n, budget)
        assert rec.unresolved == 0
        assert rec.best_steps == expected
        for champ in rec.champions:
            assert tm.run(champ, budget).steps == expected
    assert time.perf_counter() - start < 60


@crit(2, "pair/unpair round trip on 1..10^5, pair(a, b) >= a on 300x300, under 1 s")
def test_pairing_bijection():
    start = time.perf_counter()
    for n in range(1, 100_001):
        a, b = arith.unpair(n)
        assert arith.pair(a, b) == n
    for a in range(1, 301):
        for b in range(1, 301):
            assert arith.pair(a, b) >= a
    assert time.perf_counter() - start < 1


@crit(3, "Smith normal form on 500 random matrices, exact, under 30 s")
def test_snf_soundness():
    rng = random.Random(20261019)
    start = time.perf_counter()
    for _ in range(500):
        rows, cols = rng.randint(1, 8), rng.randint(1, 8)
        m = [[rng.randint(-10, 10) for _ in range(cols)] for _ in range(rows)]
        res = groups.smith_normal_form(m)
        assert groups.matmul(groups.matmul(res.U, m), res.V) == res.D
        assert abs(groups.determinant(res.U)) == 1
        assert abs(groups.determinant(res.V)) == 1
        diag = res.diagonal
        assert all(res.D[i][j] == 0 for i in range(rows) for j in range(cols) if i != j)
        nonzero = [x for x in diag if x]
        assert diag[: len(nonzero)] == nonzero and all(x > 0 for x in nonzero)
        assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
    assert time.perf_counter() - start < 30


@crit(4, "first Betti numbers of the fixture groups")
def test_betti_one_fixtures():
    def pres(k, *words):
        return FinitePresentation.standard(k, [parse_word(w, k) for w in words])

    z = pres(1)
    suspension = groups.suspension(z, groups.HIGMAN, [parse_word("a")])
    cases = [
        (pres(2), 2),
        (pres(2, "aab'b'b'"), 1),
        (pres(4, "aba'b'cdc'd'"), 4),
        (groups.HIGMAN, 0),
        (suspension, 0),
    ]
    for p, b1 in cases:
        assert groups.betti_one(p)[0] == b1


@crit(5, "stabilized complement equals the brute-force least n (fixed marker on) and one less (off), under 120 s")
def test_complement_matches_least_n(marker_results):
    results, elapsed = marker_results
    assert len(results) == 2 * (5 + len(RANDOM_SEEDS))
    for name, spec, dummy, run, result, _ in results:
        if spec["type"] == "compare":
            box = (spec["right"] + 1, 3, 3)
        else:
            box = tuple(spec["box"])
        brute = markers.brute_force_min_n(run.instance, box)
        assert brute == least_good_n(spec), name
        assert result.cardinality == (brute if dummy else brute - 1), (name, dummy)
    assert elapsed < 120


@crit(6, "marker positions equal the order statistics of the complement at every stage")
def test_marker_invariant(marker_results):
    results, _ = marker_results
    for name, _, dummy, run, _, checked in results:
        assert checked == list(range(1, run.stage + 1)), (name, dummy)


@crit(7, "staged Betti estimate non-increasing in stage, non-decreasing in horizon")
def test_double_limit_shape(marker_results):
    results, _ = marker_results
    horizons = [0, 1, 2, 3, 4, 5, 6, 8, 12, 16, 24, 32, 48, 64]
    for name, _, dummy, run, _, _ in results:
        a = groups.re_abelian_from_markers(run)
        grid = [[groups.staged_betti(a, s, h).value for h in horizons] for s in range(run.stage + 1)]
        for row in grid:
            assert all(x <= y for x, y in zip(row, row[1:])), (name, dummy)
        for prev, row in zip(grid, grid[1:]):
            assert all(y <= x for x, y in zip(prev, row)), (name, dummy)
        assert grid[0] == horizons


@crit(8, "presentation census for N <= 4 matches the brute-force oracle, under 60 s")
def test_census_correctness():
    start = time.perf_counter()
    for n in range(1, 5):
        census = groups.enumerate_presentations(n)
        got = {(p.n_gens, tuple(sorted(oracle_key(r) for r in p.relators))) for p in census.presentations}
        assert census.count == len(got)
        assert got == census_oracle(n)
    assert time.perf_counter() - start < 60


@crit(9, "oracle runs are conservative on plain machines and budget answers are monotone (50 machines)")
def test_relativization_and_monotonicity():
    rng = random.Random(9)
    budgets = [1, 3, 10, 30, 100, 300]
    for _ in range(50):
        n = rng.randint(1, 4)
        rules = {
            (s, b): (rng.randint(0, 1), rng.choice("LR"), rng.choice(["H", *range(1, n + 1)]))
            for s in range(1, n + 1)
            for b in (0, 1)
        }
        m = tm.TMachine.from_mapping(n, rules)
        for budget in budgets:
            rel = oracle.run_relativized(
                oracle.OracleMachine.from_machine(m), oracle.approximate_oracle(2, 5), budget
            )
            assert rel.result == tm.run(m, budget)
        answers = [oracle.approximate_oracle(2, b).ask(m.text()) for b in budgets]
        assert all(later or not earlier for earlier, later in zip(answers, answers[1:]))


@crit(10, "every acceptance run replays byte-identically from its manifest")
def test_reproducibility(tmp_path, marker_results):
    results, _ = marker_results
    runs = []

    def record(name, *argv):
        out = tmp_path / f"{name}.jsonl"
        assert cli.main([*argv, "--out", str(out)]) == 0
        runs.append(Path(str(out) + ".manifest.json"))
        return out

    for n, budget, _ in BB_CASES:
        record(f"bb{n}", "bb", "search", "--states", str(n), "--budget", str(budget))

    texts = {
        "free2": "gens: 2\n",
        "trefoil": "gens: 2\naab'b'b'\n",
        "genus2": "gens: 4\naba'b'cdc'd'\n",
        "higman": groups.HIGMAN.text(),
        "z": "gens: 1\n",
    }
    for name, text in texts.items():
        (tmp_path / f"{name}.txt").write_text(text)
        record(f"b1_{name}", "pres", "b1", "--in", str(tmp_path / f"{name}.txt"))
    (tmp_path / "embed.json").write_text(json.dumps({"images": ["a"]}))
    record(
        "suspension", "pres", "suspend", "--g", str(tmp_path / "z.txt"),
        "--a", str(tmp_path / "higman.txt"), "--embed", str(tmp_path / "embed.json"),
    )
    record("census4", "pres", "census", "--max-length", "4")

    for name, spec, dummy, run, _, _ in results:
        kernel = tmp_path / f"{name}.json"
        kernel.write_text(json.dumps(spec, sort_keys=True))
        tag = f"{name}_{'on' if dummy else 'off'}"
        events = record(
            tag, "markers", "run", "--kernel", str(kernel), "--stages", str(run.stage),
            "--dummy", "on" if dummy else "off", "--horizon", str(HORIZON),
        )
        lines = [json.loads(x) for x in events.read_text().splitlines()]
        assert [(e["stage"], e["marker"], e["freed_cell"]) for e in lines if e["kind"] == "event"] == [
            tuple(e) for e in run.events
        ]
        record(
            f"betti_{tag}", "pres", "staged-betti", "--events", str(events),
            "--stage", str(run.stage), "--horizon", str(HORIZON),
        )

    for manifest in runs:
        replay = tmp_path / "replay" / manifest.name.replace(".manifest.json", "")
        replay.parent.mkdir(exist_ok=True)
        identical, _ = cli.replay_manifest(manifest, replay)
        assert identical, manifest.name
        original = json.loads(manifest.read_text())
        (old_out,) = original["outputs"]
        assert Path(old_out).read_bytes() == replay.read_bytes()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
