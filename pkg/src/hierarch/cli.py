"""Command-line entry point.

    hierarch tm run --machine FILE --budget N
    hierarch tm run-oracle --machine FILE --oracle table.json|approx:BUDGET --budget N
    hierarch bb search --states N --budget B --workers K --out report.jsonl
    hierarch hier classify --formula FILE
    hierarch hier eval --formula FILE --bounds a=5,b=5
    hierarch markers run --kernel FILE --stages N --dummy on|off --out events.jsonl
    hierarch pres b1 --in P.txt
    hierarch pres amalgam --left A.txt --right B.txt --images FILE
    hierarch pres suspend --g G.txt --a A.txt --embed FILE [--iterate k]
    hierarch pres census --max-length N --out census.jsonl
    hierarch pres staged-betti --events events.jsonl --stage s --horizon h
    hierarch replay --manifest FILE

Every command prints JSON lines (to ``--out`` or stdout), each carrying a
``kind`` and a ``schema`` version. With ``--out`` a manifest
``<out>.manifest.json`` is written next to the output. Exit status: 0 on
success, 1 on domain or file errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, arith, groups, markers, oracle, tm
from .errors import DomainError

SCHEMA = 1

# argparse destinations that name input files, for the manifest digests
_INPUT_ARGS = ("machine", "formula", "kernel", "input", "left", "right", "images", "g", "a", "embed", "events")


def _record(kind: str, **fields) -> dict:
    return {"kind": kind, "schema": SCHEMA, **fields}


def _dumps(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# subcommand bodies; each returns a list of records


def _tm_run(args):
    out = []
    for m in tm.read_machines(args.machine):
        res = tm.run(m, args.budget)
        out.append(_run_record(m.text(), res))
    return out


def _run_record(text, res: tm.RunResult, **extra):
    o = res.outcome
    if isinstance(o, tm.Halted):
        fields = dict(outcome="halted", steps=o.steps, ones_written=o.ones_written)
    else:
        fields = dict(outcome="budget_exhausted", budget=o.budget)
    tape = dict(left=res.tape.left, right=res.tape.right, cells=res.tape.cells)
    return _record("run", machine=text, tape=tape, **fields, **extra)


def _tm_run_oracle(args):
    spec = args.oracle
    if spec.startswith("approx:"):
        try:
            budget = int(spec[len("approx:"):])
        except ValueError:
            raise DomainError(f"bad oracle spec {spec!r}") from None
        orc = oracle.approximate_oracle(2, budget)
    else:
        orc = oracle.HaltingOracle.load_table(spec)
    out = []
    with open(args.machine, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    for line in lines:
        m = oracle.parse_oracle_machine(line)
        rel = oracle.run_relativized(m, orc, args.budget)
        for i, (q, a) in enumerate(rel.transcript):
            out.append(_record("oracle_query", index=i, query=q, answer="yes" if a else "no"))
        out.append(_run_record(m.text(), rel.result, approximate=rel.approximate))
    return out


def _bb_search(args):
    rec = tm.busy_beaver_search(args.states, args.budget, args.workers)
    return [
        _record(
            "busy_beaver",
            n_states=rec.n_states,
            budget=rec.budget,
            best_steps=rec.best_steps,
            exact=rec.exact,
            unresolved=rec.unresolved,
            halting=rec.halting,
            proven_nonhalting=rec.proven_nonhalting,
            champions=[c.text() for c in rec.champions],
        )
    ]


def _hier_classify(args):
    f = arith.load_formula(args.formula)
    c = arith.classify(f)
    return [_record("classification", formula=f.describe(), side=c.side, level=c.level, hclass=str(c))]


def _hier_eval(args):
    f = arith.load_formula(args.formula)
    bounds = arith.parse_assignments(args.bounds)
    assignment = arith.parse_assignments(args.assign) if args.assign else {}
    value = arith.bounded_eval(f, bounds, assignment)
    rec = _record("bounded_eval", formula=f.describe(), bounds=bounds, value=value)
    if f.prefix and f.prefix[0][0] == arith.EXISTS:
        rec["witness"] = arith.bounded_witness(f, bounds, assignment)
    return [rec]


def _load_kernel(path):
    data = _load_json(path)
    spec = data.get("kernel", data) if isinstance(data, dict) else None
    if not isinstance(spec, dict):
        raise DomainError(f"{path}: expected a kernel object")
    return arith.kernel_from_json(spec), spec


def _markers_run(args):
    kernel, spec = _load_kernel(args.kernel)
    inst = markers.Sigma3Instance(kernel, zero_based=args.zero_based, dummy_marker=args.dummy == "on")
    run = markers.run_markers(inst, args.stages)
    snap = markers.complement_snapshot(run, args.horizon)
    out = [
        _record(
            "marker_run",
            stages=args.stages,
            dummy_marker=inst.dummy_marker,
            zero_based=inst.zero_based,
            kernel=spec,
        )
    ]
    out += [_record("event", stage=e.stage, marker=e.marker, freed_cell=e.freed_cell) for e in run.events]
    out.append(
        _record(
            "snapshot",
            stage=run.stage,
            horizon=args.horizon,
            cells=sorted(snap.cells),
            cardinality=snap.cardinality,
        )
    )
    return out


def _pres_record(kind, p: groups.FinitePresentation, **extra):
    b1, torsion = groups.betti_one(p)
    return _record(
        kind,
        gens=p.n_gens,
        relators=[groups.format_word(r) for r in p.relators],
        length=groups.presentation_length(p),
        b1=b1,
        torsion=list(torsion),
        **extra,
    )


def _pres_b1(args):
    return [_pres_record("betti_one", groups.FinitePresentation.load(args.input))]


def _words(items, p):
    return [groups.parse_word(w, p.n_gens) for w in items]


def _pres_amalgam(args):
    left = groups.FinitePresentation.load(args.left)
    right = groups.FinitePresentation.load(args.right)
    images = _load_json(args.images)
    prod = groups.amalgamated_product(
        left, right, _words(images.get("left", []), left), _words(images.get("right", []), right)
    )
    return [_pres_record("amalgam", prod)]


def _pres_suspend(args):
    g = groups.FinitePresentation.load(args.g)
    a = groups.FinitePresentation.load(args.a)
    spec = _load_json(args.embed)
    base = Path(args.embed).parent
    if "levels" in spec:
        raw_levels = spec["levels"]
    else:
        raw_levels = [{"images": spec.get("images")}]
    levels = []
    for lvl in raw_levels:
        acyclic = groups.FinitePresentation.load(base / lvl["a"]) if lvl.get("a") else a
        images = lvl.get("images")
        levels.append(None if images is None else (acyclic, _words(images, acyclic)))
    out = []
    for level in range(1, args.iterate + 1):
        current = groups.iterated_suspension(g, levels, level)
        out.append(_pres_record("suspension", current, level=level))
    return out


def _pres_census(args):
    return list(groups.census_records(groups.enumerate_presentations(args.max_length)))


def _read_events(path):
    events, shift = [], 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("kind") == "marker_run" and rec.get("zero_based") and not rec.get("dummy_marker"):
                shift = 1
            elif rec.get("kind") == "event":
                events.append((rec["stage"], rec["marker"], rec["freed_cell"]))
    return events, shift


def _pres_staged_betti(args):
    events, shift = _read_events(args.events)
    a = groups.REAbelianPresentation.from_events(events, shift)
    est = groups.staged_betti(a, args.stage, args.horizon)
    return [_record("staged_betti", stage=est.stage, horizon=est.horizon, value=est.value)]


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hierarch", description="Busy beavers, Sigma_3 markers and Betti numbers.")
    p.add_argument("--version", action="version", version=f"hierarch {__version__}")
    sub = p.add_subparsers(dest="command", metavar="{tm,bb,hier,markers,pres,replay}")
    sub.required = True

    def with_out(sp):
        sp.add_argument("--out", help="write JSON lines here (and a manifest beside it)")
        return sp

    tm_p = sub.add_parser("tm", help="run machines").add_subparsers(dest="action", metavar="{run,run-oracle}")
    tm_p.required = True
    sp = with_out(tm_p.add_parser("run"))
    sp.add_argument("--machine", required=True)
    sp.add_argument("--budget", type=int, required=True)
    sp.set_defaults(func=_tm_run)
    sp = with_out(tm_p.add_parser("run-oracle"))
    sp.add_argument("--machine", required=True)
    sp.add_argument("--oracle", required=True, help="table.json or approx:BUDGET")
    sp.add_argument("--budget", type=int, required=True)
    sp.set_defaults(func=_tm_run_oracle)

    bb = sub.add_parser("bb", help="busy-beaver search").add_subparsers(dest="action", metavar="{search}")
    bb.required = True
    sp = with_out(bb.add_parser("search"))
    sp.add_argument("--states", type=int, required=True)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=_bb_search)

    hier = sub.add_parser("hier", help="prenex formulas").add_subparsers(dest="action", metavar="{classify,eval}")
    hier.required = True
    sp = with_out(hier.add_parser("classify"))
    sp.add_argument("--formula", required=True)
    sp.set_defaults(func=_hier_classify)
    sp = with_out(hier.add_parser("eval"))
    sp.add_argument("--formula", required=True)
    sp.add_argument("--bounds", required=True, help="a=5,b=5")
    sp.add_argument("--assign", help="values of free variables, x=1,y=2")
    sp.set_defaults(func=_hier_eval)

    mk = sub.add_parser("markers", help="moving-markers enumeration").add_subparsers(dest="action", metavar="{run}")
    mk.required = True
    sp = with_out(mk.add_parser("run"))
    sp.add_argument("--kernel", required=True)
    sp.add_argument("--stages", type=int, required=True)
    sp.add_argument("--dummy", choices=("on", "off"), default="on")
    sp.add_argument("--zero-based", action="store_true")
    sp.add_argument("--horizon", type=int, default=64)
    sp.set_defaults(func=_markers_run)

    pres = sub.add_parser("pres", help="finite presentations").add_subparsers(
        dest="action", metavar="{b1,amalgam,suspend,census,staged-betti}"
    )
    pres.required = True
    sp = with_out(pres.add_parser("b1"))
    sp.add_argument("--in", dest="input", required=True)
    sp.set_defaults(func=_pres_b1)
    sp = with_out(pres.add_parser("amalgam"))
    sp.add_argument("--left", required=True)
    sp.add_argument("--right", required=True)
    sp.add_argument("--images", required=True)
    sp.set_defaults(func=_pres_amalgam)
    sp = with_out(pres.add_parser("suspend"))
    sp.add_argument("--g", required=True)
    sp.add_argument("--a", required=True)
    sp.add_argument("--embed", required=True)
    sp.add_argument("--iterate", type=int, default=1)
    sp.set_defaults(func=_pres_suspend)
    sp = with_out(pres.add_parser("census"))
    sp.add_argument("--max-length", type=int, required=True)
    sp.set_defaults(func=_pres_census)
    sp = with_out(pres.add_parser("staged-betti"))
    sp.add_argument("--events", required=True)
    sp.add_argument("--stage", type=int, required=True)
    sp.add_argument("--horizon", type=int, required=True)
    sp.set_defaults(func=_pres_staged_betti)

    sp = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", help="where to write the replayed output (default: a temporary file)")
    sp.set_defaults(func=None)
    return p


def _manifest(argv, args, out_path) -> dict:
    params = {k: v for k, v in vars(args).items() if k != "func"}
    inputs = {}
    for name in _INPUT_ARGS:
        path = params.get(name)
        if isinstance(path, str) and os.path.isfile(path):
            inputs[path] = _sha256(path)
    if getattr(args, "oracle", None) and os.path.isfile(args.oracle):
        inputs[args.oracle] = _sha256(args.oracle)
    return _record(
        "manifest",
        tool="hierarch",
        version=__version__,
        command=[args.command, getattr(args, "action", None)],
        argv=list(argv),
        cwd=os.getcwd(),
        params=params,
        inputs=inputs,
        outputs={out_path: _sha256(out_path)},
    )


def _execute(argv, parser) -> int:
    args = parser.parse_args(argv)
    if args.command == "replay":
        return _replay(args)
    records = args.func(args)
    text = "".join(_dumps(r) + "\n" for r in records)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(_manifest(argv, args, args.out), fh, sort_keys=True, indent=2)
            fh.write("\n")
    else:
        sys.stdout.write(text)
    return 0


def _replace_out(argv, new_out):
    argv = list(argv)
    for i, tok in enumerate(argv):
        if tok == "--out" and i + 1 < len(argv):
            argv[i + 1] = new_out
            return argv
        if tok.startswith("--out="):
            argv[i] = "--out=" + new_out
            return argv
    return argv + ["--out", new_out]


def replay_manifest(manifest_path, out_path=None) -> tuple[bool, str]:
    """Re-run a manifest's command; returns (identical, path of new output)."""
    man = _load_json(manifest_path)
    if man.get("kind") != "manifest":
        raise DomainError(f"{manifest_path} is not a manifest")
    (old_out, digest), = man["outputs"].items()
    if out_path is None:
        fd, out_path = tempfile.mkstemp(suffix=".jsonl")
        os.close(fd)
    out_path = os.path.abspath(out_path)
    argv = _replace_out(man["argv"], out_path)
    with _chdir(man.get("cwd") or os.getcwd()):
        code = _execute(argv, build_parser())
    if code != 0:
        return False, out_path
    return _sha256(out_path) == digest, out_path


@contextlib.contextmanager
def _chdir(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def _replay(args) -> int:
    same, path = replay_manifest(args.manifest, args.out)
    if args.out is None:
        for leftover in (path, path + ".manifest.json"):
            with contextlib.suppress(FileNotFoundError):
                os.remove(leftover)
        path = None
    sys.stdout.write(_dumps(_record("replay", manifest=args.manifest, output=path, identical=same)) + "\n")
    return 0 if same else 1


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return _execute(argv, parser)
    except SystemExit as exc:  # argparse usage errors
        return exc.code if isinstance(exc.code, int) else 2
    except DomainError as exc:
        print(f"hierarch: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hierarch: error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"hierarch: error: bad input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
