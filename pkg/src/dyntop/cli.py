"""Command-line front end: ``dyntop construct | family | check | omega | report``.

Exit codes: 0 every verdict holds, 1 something fails, 2 only inconclusive
outcomes, 3 usage error, 4 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import checkers as ck
from .constructions import (
    a_sequence_prefix, alternating_partner, champernowne_point, fip_counterexample_point,
)
from .exceptions import DyntopError, FIPHoldsError, HorizonError, SchemaError
from .families import FamilySpec, builtin_family
from .limits import omega_T_approx, omega_approx, omega_approx_numeric
from .numeric import TorusSystem
from .symbolic import (
    OpenSet, Point, SymbolicSystem, load_sequence, n_family, parse_word, s_family,
    system_from_descriptor,
)
from .timeset import TimeSet

SCHEMA_TAG = ck.SCHEMA_TAG
EXIT_USAGE = 3
EXIT_INPUT = 4

SYMBOLIC_CHECKS = ("transitive", "totally-transitive", "weak-mixing", "mixing",
                   "transitive-compact", "multi-sensitive", "transitively-sensitive",
                   "sensitive-compact", "weak-disjoint", "ip", "li-yorke")
NUMERIC_CHECKS = ("transitive", "weak-mixing", "multi-sensitive")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- input helpers -----------------------------------------------------------------

def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_system(path: str, horizon: Optional[int]):
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: system descriptor must be a JSON object")
    if horizon is not None:
        doc = {**doc, "horizon": horizon}
    try:
        if "kind" in doc:
            return TorusSystem.from_descriptor(doc)
        return system_from_descriptor(doc, Path(path).parent)
    except (SchemaError, HorizonError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_family(ref: str, horizon: int, system=None) -> FamilySpec:
    """A family from a JSON file, a built-in name, or ``N:Lgen`` / ``S:resolution:Lgen``."""
    if ref.startswith(("N:", "S:")):
        if not isinstance(system, SymbolicSystem):
            raise UsageError(f"family {ref!r} needs a symbolic --system")
        parts = ref.split(":")
        try:
            nums = [int(p) for p in parts[1:]]
            if parts[0] == "N" and len(nums) == 1:
                return n_family(system, nums[0])
            if parts[0] == "S" and len(nums) == 2:
                return s_family(system, nums[0], nums[1])
        except ValueError as exc:
            raise UsageError(f"family {ref!r}: {exc}") from None
        raise UsageError(f"family {ref!r}: expected N:Lgen or S:resolution:Lgen")
    if not Path(ref).exists():
        try:
            return builtin_family(ref, horizon)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    doc = _read_json(ref)
    try:
        if isinstance(doc, dict) and "generators" in doc:
            return FamilySpec.from_dict(doc)
        return FamilySpec([TimeSet.from_dict(doc)])
    except SchemaError as exc:
        raise InputError(f"{ref}: {exc}") from None


def _merge_families(refs: Sequence[str], horizon: int) -> FamilySpec:
    fams = [load_family(r, horizon) for r in refs]
    H = fams[0].horizon
    if any(f.horizon != H for f in fams):
        raise InputError("families have different horizons")
    return FamilySpec([g for f in fams for g in f.generators])


def _check_horizon(fam: FamilySpec, system) -> None:
    if fam.horizon != system.horizon:
        raise InputError(f"family horizon {fam.horizon} != system horizon {system.horizon}")


def parse_point(form: str, system: SymbolicSystem, rng: np.random.Generator) -> Point:
    """``generating``, ``shift:i``, ``periodic:w``, ``champernowne:n``, ``random`` or a file."""
    need = system.point_length()
    try:
        if form == "generating":
            return system.generating_point()
        if form.startswith("shift:"):
            return system.shifted_point(int(form.split(":", 1)[1]))
        if form.startswith("periodic:"):
            return system.periodic_point(form.split(":", 1)[1])
        if form.startswith("champernowne:"):
            return champernowne_point(system.alphabet, int(form.split(":", 1)[1]), need)
        if form == "random":
            return system.random_point(rng)
    except (ValueError, DyntopError) as exc:
        raise UsageError(f"point {form!r}: {exc}") from None
    if not Path(form).exists():
        raise UsageError(f"point {form!r}: not a point form or an existing file")
    try:
        _, symbols = load_sequence(form)
        x = system.explicit_point(symbols)
    except (SchemaError, ValueError, DyntopError) as exc:
        raise InputError(f"{form}: {exc}") from None
    return x


def sample_points(system: SymbolicSystem, count: int, rng: np.random.Generator) -> list:
    if system.backend == "full":
        return [system.random_point(rng) for _ in range(count)]
    offsets = [0] + sorted(rng.choice(system.horizon, size=max(count - 1, 0), replace=False).tolist())
    return [system.shifted_point(int(i)) for i in offsets[:count]]


def _parse_box(text: str, system: TorusSystem):
    try:
        return system.box(*[int(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"box {text!r}: {exc}") from None


# -- output --------------------------------------------------------------------------

def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True)


def emit_verdicts(verdicts: list, fmt: str, out) -> None:
    if fmt == "json":
        for v in verdicts:
            out.write(v.to_json() + "\n")
    elif fmt == "csv":
        out.write(ck.verdicts_to_csv(verdicts))
    else:
        out.write(ck.verdicts_to_markdown(verdicts))
    for v in verdicts:
        if ck.MINIMALITY_NOTE in v.notes:
            sys.stderr.write(ck.MINIMALITY_NOTE + "\n")
            break


def emit_doc(doc: dict, fmt: str, out) -> None:
    doc = {"schema": SCHEMA_TAG, **doc}
    if fmt == "json":
        out.write(_dump(doc) + "\n")
        return
    rows = sorted(doc.items())
    if fmt == "csv":
        out.write("key,value\n")
        for k, v in rows:
            out.write(f"{k},{json.dumps(v, sort_keys=True)}\n")
    else:
        out.write("| key | value |\n|---|---|\n")
        for k, v in rows:
            out.write(f"| {k} | {json.dumps(v, sort_keys=True)} |\n")


# -- construct ------------------------------------------------------------------------

def _write_sequence(path: str, symbols: np.ndarray, alphabet: int, meta: dict) -> dict:
    out = Path(path)
    try:
        if alphabet <= 10:
            out.write_text("".join(map(str, symbols.tolist())) + "\n")
        else:
            out.write_text(_dump({"alphabet": alphabet, "symbols": symbols.tolist()}) + "\n")
        sidecar = out.with_name(out.name + ".json")
        doc = {"schema": SCHEMA_TAG, "alphabet": alphabet, **meta}
        sidecar.write_text(_dump(doc) + "\n")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return {"path": str(out), "sidecar": str(sidecar), "length": int(symbols.size), **meta}


def cmd_construct(args) -> int:
    what = args.what
    if what == "a-sequence":
        pre = a_sequence_prefix(args.stages, args.length)
        doc = _write_sequence(args.out, pre.symbols, 2,
                              {"construction": "a-sequence", "stages": args.stages, **pre.metadata()})
    elif what == "champernowne":
        x = champernowne_point(args.alphabet, args.max_len, args.length)
        doc = _write_sequence(args.out, x.symbols, args.alphabet,
                              {"construction": "champernowne", "max_len": args.max_len})
    elif what == "fip-counterexample":
        fam = _merge_families(args.sets, args.horizon or 1024)
        try:
            x = fip_counterexample_point(list(fam.generators))
        except FIPHoldsError as exc:
            sys.stderr.write(f"FIP: present at {exc.witness}\n")
            return 1
        doc = _write_sequence(args.out, x.symbols, len(fam.generators),
                              {"construction": "fip-counterexample"})
    else:
        doc = {"descriptor": _system_descriptor(args)}
        try:
            Path(args.out).write_text(_dump(doc["descriptor"]) + "\n")
        except OSError as exc:
            raise InputError(f"{args.out}: {exc.strerror}") from None
        doc["path"] = args.out
    emit_doc(doc, args.format, sys.stdout)
    return 0


def _system_descriptor(args) -> dict:
    H = args.horizon or 1024
    kind = args.kind
    try:
        if kind == "full":
            return SymbolicSystem.full_shift(args.alphabet, H, args.lmax).descriptor()
        if kind == "periodic":
            if not args.word:
                raise UsageError("periodic systems need --word")
            return SymbolicSystem.periodic(args.word, args.alphabet, H, args.lmax).descriptor()
        if kind == "orbit":
            if not args.source:
                raise UsageError("orbit systems need --source")
            return {"backend": "orbit", "alphabet": args.alphabet, "horizon": H,
                    "lmax": args.lmax, "source": args.source}
        seed = None if args.point is None else [float(v) for v in args.point.split(",")]
        return TorusSystem(kind, args.alpha, seed, args.horizon or 10_000, args.grid,
                           args.sample).descriptor()
    except (ValueError, HorizonError) as exc:
        raise UsageError(str(exc)) from None


# -- family ---------------------------------------------------------------------------

def cmd_family(args) -> int:
    H = args.horizon or 1024
    op = args.op
    fam = _merge_families(args.families, H)
    code = 0
    if op == "fip":
        n = fam.has_fip()
        msg = "FIP: absent" if n is None else f"FIP: present at {n}"
        sys.stderr.write(msg + "\n")
        doc = {"fip": n, "generators": len(fam.generators)}
        code = 0 if n is not None else 1
    elif op == "show":
        doc = fam.to_dict()
    elif op in ("member", "dual"):
        if args.set is None:
            raise UsageError(f"family {op} needs --set")
        S = _load_timeset(args.set)
        ok = fam.member(S) if op == "member" else fam.dual_member(S)
        doc = {op: bool(ok)}
        code = 0 if ok else 1
    elif op == "interaction":
        if len(args.families) != 2:
            raise UsageError("interaction needs exactly two families")
        a = load_family(args.families[0], H)
        b = load_family(args.families[1], H)
        doc = a.interaction(b).to_dict()
    elif op == "filter":
        ok = fam.is_filter()
        doc = {"filter": ok}
        code = 0 if ok else 1
    else:  # invariance
        if not 0 < args.imax < fam.horizon / 2:
            raise UsageError(f"--imax must be in (0, {fam.horizon / 2})")
        doc = {"plus_invariant": fam.plus_invariant_upto(args.imax),
               "minus_invariant": fam.minus_invariant_upto(args.imax), "imax": args.imax}
    emit_doc(doc, args.format, sys.stdout)
    return code


def _load_timeset(path: str) -> TimeSet:
    doc = _read_json(path)
    try:
        return TimeSet.from_dict(doc)
    except SchemaError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- check / report -----------------------------------------------------------------------

def _run_symbolic_check(name: str, system: SymbolicSystem, args, rng) -> ck.Verdict:
    L, th = args.L, args.threads
    if name == "transitive":
        return ck.check_transitive(system, L, threads=th)
    if name == "totally-transitive":
        return ck.check_totally_transitive(system, L, args.kmax, threads=th)
    if name == "weak-mixing":
        return ck.check_weak_mixing(system, L, threads=th)
    if name == "mixing":
        return ck.check_mixing(system, L, args.threshold, threads=th)
    if name == "multi-sensitive":
        return ck.check_multi_sensitive(system, args.k, args.resolution, L, threads=th)
    if name == "transitively-sensitive":
        return ck.check_transitively_sensitive(system, args.resolution, L, threads=th)
    points = ([parse_point(p, system, rng) for p in args.point] if args.point
              else sample_points(system, args.points, rng))
    Lgen = args.Lgen or L
    if name == "transitive-compact":
        return ck.check_transitive_compact(system, points, Lgen, L)
    if name == "sensitive-compact":
        return ck.check_sensitive_compact(system, points, args.resolution, Lgen, L)
    if name == "weak-disjoint":
        if not args.system2:
            raise UsageError("weak-disjoint needs --system2")
        other = load_system(args.system2, args.horizon or system.horizon)
        if not isinstance(other, SymbolicSystem):
            raise UsageError("weak-disjoint needs symbolic systems")
        return ck.check_weak_disjoint(system, other, L, points, threads=th)
    if name == "ip":
        opens = [OpenSet((parse_word(w),)) for w in (args.G, args.U, args.V)]
        return ck.check_ip(system, points[0], *opens, args.n)
    if name == "li-yorke":
        pairs = [(x, alternating_partner(x, system.alphabet)) for x in points]
        return ck.liyorke_scan(system, pairs, L, L)
    raise UsageError(f"unknown check {name!r}")


def _run_numeric_check(name: str, system: TorusSystem, args) -> ck.Verdict:
    if name not in NUMERIC_CHECKS:
        raise UsageError(f"check {name!r} is not available for torus systems")
    if name == "transitive":
        return ck.check_transitive_numeric(system)
    if name == "weak-mixing":
        return ck.check_weak_mixing_numeric(system, args.run_len)
    boxes = [_parse_box(b, system) for b in args.box] or system.boxes()[:3]
    return ck.check_multi_sensitive_numeric(system, boxes, args.delta)


def _run_check(name: str, system, args, rng) -> ck.Verdict:
    try:
        if isinstance(system, TorusSystem):
            return _run_numeric_check(name, system, args)
        return _run_symbolic_check(name, system, args, rng)
    except (ValueError, HorizonError) as exc:
        raise UsageError(f"{name}: {exc}") from None


def cmd_check(args) -> int:
    system = load_system(args.system, args.horizon)
    rng = np.random.default_rng(args.seed)
    verdicts = [_run_check(name, system, args, rng) for name in args.properties]
    emit_verdicts(verdicts, args.format, sys.stdout)
    return ck.combine_exit_code(verdicts)


REPORT_SYMBOLIC = ("transitive", "totally-transitive", "weak-mixing", "mixing",
                   "multi-sensitive", "transitively-sensitive")


def cmd_report(args) -> int:
    system = load_system(args.system, args.horizon)
    rng = np.random.default_rng(args.seed)
    names = NUMERIC_CHECKS if isinstance(system, TorusSystem) else REPORT_SYMBOLIC
    verdicts = [_run_check(name, system, args, rng) for name in names]
    emit_verdicts(verdicts, args.format, sys.stdout)
    return ck.combine_exit_code(verdicts)


# -- omega -------------------------------------------------------------------------------------

def cmd_omega(args) -> int:
    system = load_system(args.system, args.horizon)
    if isinstance(system, TorusSystem):
        if args.family is None:
            raise UsageError("torus omega needs --family")
        fam = load_family(args.family, system.horizon)
        _check_horizon(fam, system)
        approx = omega_approx_numeric(system, fam)
        notes = [ck.MINIMALITY_NOTE]
    else:
        rng = np.random.default_rng(args.seed)
        x = parse_point(args.point[0] if args.point else "generating", system, rng)
        try:
            if args.tail is not None or args.family is None:
                approx = omega_T_approx(system, x, args.L, args.tail)
            else:
                fam = load_family(args.family, system.horizon, system)
                _check_horizon(fam, system)
                approx = omega_approx(system, x, fam, args.L)
        except (ValueError, HorizonError) as exc:
            raise UsageError(str(exc)) from None
        notes = []
    doc = approx.to_dict()
    if notes:
        doc["notes"] = notes
    emit_doc(doc, args.format, sys.stdout)
    return 0


# -- parser ---------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # subcommands repeat the flags without defaults so they never mask top-level values
        q = _Parser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        q.add_argument("--horizon", type=int, default=d(None), help="override the horizon H")
        q.add_argument("--seed", type=int, default=d(0), help="seed for sampled scans")
        q.add_argument("--threads", type=int, default=d(1))
        q.add_argument("--format", choices=("json", "csv", "md"), default=d("json"))
        return q

    common = global_flags(True)
    p = _Parser(prog="dyntop", parents=[global_flags(False)],
                description="Finite-horizon checks for families of time sets and dynamical properties.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("construct", parents=[common], help="write sequences and system descriptors")
    c.add_argument("what", choices=("a-sequence", "champernowne", "fip-counterexample", "system"))
    c.add_argument("sets", nargs="*", help="time-set or family files (fip-counterexample)")
    c.add_argument("--stages", type=int, default=3)
    c.add_argument("--length", type=int)
    c.add_argument("--alphabet", type=int, default=2)
    c.add_argument("--max-len", type=int, default=8)
    c.add_argument("--kind", choices=("full", "periodic", "orbit", "rotation", "skew"), default="full")
    c.add_argument("--word")
    c.add_argument("--source")
    c.add_argument("--lmax", type=int, default=4)
    c.add_argument("--alpha", default="golden")
    c.add_argument("--point", help="torus seed point, comma separated")
    c.add_argument("--grid", type=int, default=10)
    c.add_argument("--sample", type=int, default=8)
    c.add_argument("--out", default="sequence.txt")
    c.set_defaults(func=cmd_construct)

    f = sub.add_parser("family", parents=[common], help="family calculus on time-set files")
    f.add_argument("op", choices=("fip", "show", "member", "dual", "interaction", "filter", "invariance"))
    f.add_argument("families", nargs="+", help="family files or built-in names")
    f.add_argument("--set", help="time-set file for member/dual")
    f.add_argument("--imax", type=int, default=1)
    f.set_defaults(func=cmd_family)

    def add_check_args(q):
        q.add_argument("--system", required=True)
        q.add_argument("--system2")
        q.add_argument("--L", type=int, default=2)
        q.add_argument("--Lgen", type=int)
        q.add_argument("--k", type=int, default=2)
        q.add_argument("--kmax", type=int, default=3)
        q.add_argument("--resolution", type=int, default=2)
        q.add_argument("--threshold", type=int)
        q.add_argument("--points", type=int, default=8, help="number of sampled points")
        q.add_argument("--point", action="append", help="explicit point (repeatable)")
        q.add_argument("--n", type=int, default=3)
        q.add_argument("--G", default="0")
        q.add_argument("--U", default="0")
        q.add_argument("--V", default="0")
        q.add_argument("--delta", type=float, default=0.25)
        q.add_argument("--box", action="append", default=[], help="grid box i[,j] (repeatable)")
        q.add_argument("--run-len", type=int, default=3)

    k = sub.add_parser("check", parents=[common], help="run property checkers")
    k.add_argument("properties", nargs="+", choices=SYMBOLIC_CHECKS)
    add_check_args(k)
    k.set_defaults(func=cmd_check)

    r = sub.add_parser("report", parents=[common], help="run the standard battery of checkers")
    add_check_args(r)
    r.set_defaults(func=cmd_report)

    o = sub.add_parser("omega", parents=[common], help="limit-set approximation for one point")
    o.add_argument("--system", required=True)
    o.add_argument("--family", help="family file, built-in name, N:Lgen or S:resolution:Lgen")
    o.add_argument("--point", action="append")
    o.add_argument("--L", type=int, default=2)
    o.add_argument("--tail", type=int, help="use the tail window of this length instead of a family")
    o.set_defaults(func=cmd_omega)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    if args.horizon is not None and args.horizon < 1:
        parser.error("--horizon must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"dyntop: error: {exc}\n")
        return EXIT_USAGE
    except InputError as exc:
        sys.stderr.write(f"dyntop: {exc}\n")
        return EXIT_INPUT
    except (HorizonError, DyntopError, ValueError) as exc:
        sys.stderr.write(f"dyntop: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
