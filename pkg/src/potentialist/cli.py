"""Command-line front end.

Exit codes: 0 valid / true / success, 1 countermodel / false (witness on
stdout), 2 usage or parse error, 3 inconclusive or cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import controls, kripke, multiverse, theories
from .formula import FormulaSyntaxError, parse_fo, parse_prop, render
from .kripke import CapExceeded, FrameProperty, Model

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: {message}")


def _common(suppress: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--cap", type=int, default=default, help="bound on every search")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="suppress diagnostics on stderr")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS if suppress else True,
                   help="JSON output (the default)")
    return p


def _csv(text: str) -> List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    parser = _Parser(prog="potentialist", parents=[_common(suppress=False)],
                     description="Modal logic engine and finite potentialist-system laboratory.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("decide", parents=[common], help="decide a formula in K, S4, S4.2 or S5")
    p.add_argument("--theory", required=True, choices=["k", "s4", "s4.2", "s5"])
    p.add_argument("--dot", action="store_true", help="print countermodels as Graphviz DOT")
    p.add_argument("formula")

    p = sub.add_parser("model-check", parents=[common], help="truth of a formula in a model file")
    p.add_argument("model")
    p.add_argument("world", nargs="?", help="omit to check every world")
    p.add_argument("formula")

    p = sub.add_parser("frame-check", parents=[common], help="frame properties and frame validity")
    p.add_argument("model")
    p.add_argument("--property", action="append", default=[],
                   choices=[fp.value for fp in FrameProperty])
    p.add_argument("--formula")

    p = sub.add_parser("frames-sweep", parents=[common],
                       help="correspondence sweep over frames: formula valid iff property holds")
    p.add_argument("--max-worlds", type=int, default=4)
    p.add_argument("--formula", default="<>[]p -> []<>p")
    p.add_argument("--property", default="directed", choices=[fp.value for fp in FrameProperty])
    p.add_argument("--within", default="reflexive,transitive",
                   help="comma-separated frame properties defining the swept class")

    p = sub.add_parser("fingerprint", parents=[common], help="axiom instances valid on a model")
    p.add_argument("model")
    p.add_argument("--pool", required=True)
    p.add_argument("--depth", type=int, default=1)

    ctl = sub.add_parser("controls", help="switches, buttons, dials and labeling witnesses")
    csub = ctl.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = csub.add_parser("classify", parents=[common])
    p.add_argument("model")
    p.add_argument("world")
    p.add_argument("statement")
    p = csub.add_parser("dial", parents=[common])
    p.add_argument("model")
    p.add_argument("--scope", help="comma-separated worlds (default: all)")
    p.add_argument("statements", nargs="+")
    p = csub.add_parser("independent", parents=[common])
    p.add_argument("model")
    p.add_argument("world", nargs="?")
    p.add_argument("--switches")
    p.add_argument("--buttons")
    p.add_argument("--dial", help="comma-separated dial statements (default: true)")
    p.add_argument("--scope")
    p = csub.add_parser("s5-witness", parents=[common])
    p.add_argument("model")
    p.add_argument("world")
    p.add_argument("--switches", required=True)
    p.add_argument("formula")
    p = csub.add_parser("s42-witness", parents=[common])
    p.add_argument("model")
    p.add_argument("world")
    p.add_argument("--buttons", required=True)
    p.add_argument("--dial", help="comma-separated dial statements (default: true)")
    p.add_argument("--scope")
    p.add_argument("formula")
    p = csub.add_parser("mp", parents=[common])
    p.add_argument("model")
    p.add_argument("world")
    p.add_argument("--pool", required=True)
    p.add_argument("--depth", type=int, default=1)

    mv = sub.add_parser("multiverse", help="the toy system of transitive HF sets")
    msub = mv.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = msub.add_parser("build", parents=[common])
    p.add_argument("--max-height", type=int, default=13)
    p.add_argument("--multipliers", default="2,3")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--out")
    p = msub.add_parser("corollary", parents=[common])
    p.add_argument("system")
    p.add_argument("corpus", nargs="?", help="one sentence per line; default: built-in corpus")
    p = msub.add_parser("account", parents=[common])
    p.add_argument("system")
    p = msub.add_parser("induce", parents=[common])
    p.add_argument("system")
    p.add_argument("--atoms", required=True, help="JSON file mapping atom -> statement spec")
    p.add_argument("--out")
    return parser


class _Out:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def emit(self, obj) -> None:
        sys.stdout.write(json.dumps(obj) + "\n")

    def text(self, s: str) -> None:
        sys.stdout.write(s if s.endswith("\n") else s + "\n")

    def note(self, msg: str) -> None:
        if not self.quiet:
            sys.stderr.write(msg + "\n")


def _load_model(path: str) -> Model:
    with open(path) as fh:
        return Model.from_json(json.load(fh))


def _dial(m: Model, text: Optional[str], scope: Optional[str]) -> controls.DialFamily:
    stmts = _csv(text) if text else ["true"]
    ws = _csv(scope) if scope else list(m.worlds)
    for w in ws:
        m.frame.index(w)
    return controls.DialFamily(tuple(parse_prop(s) for s in stmts), frozenset(ws))


def to_dot(model: Model, mark: Optional[str] = None) -> str:
    lines = ["digraph countermodel {"]
    for w in model.worlds:
        label = w + ("\\n" + ",".join(sorted(model.valuation[w])) if model.valuation[w] else "")
        shape = "doublecircle" if w == mark else "circle"
        lines.append(f'  "{w}" [label="{label}", shape={shape}];')
    fr = model.frame
    for a, b in sorted(fr.relation, key=lambda p: (fr.index(p[0]), fr.index(p[1]))):
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines)


def _cmd_decide(args, out: _Out) -> int:
    f = parse_prop(args.formula)
    t = theories.Theory.parse(args.theory)
    cap = args.cap if args.cap is not None else theories.DEFAULT_CAP
    v = theories.decide(f, t, cap)
    base = {"formula": render(f), "theory": t.value}
    if isinstance(v, theories.Valid):
        out.emit({**base, "verdict": "Valid", "searched_bound": v.searched_bound})
        return EXIT_OK
    if isinstance(v, theories.Countermodel):
        if args.dot:
            out.text(to_dot(v.model, v.world))
        else:
            out.emit({**base, "verdict": "Countermodel", "world": v.world, "model": v.model.to_json()})
        out.note(f"{render(f)} fails at {v.world} of a {v.model.frame.size}-world {t.value} model")
        return EXIT_FALSE
    out.emit({**base, "verdict": "Inconclusive", "cap": v.cap})
    return EXIT_INCONCLUSIVE


def _cmd_model_check(args, out: _Out) -> int:
    m = _load_model(args.model)
    f = parse_prop(args.formula)
    if args.world is None:
        c = kripke.valid_on_model(m, f)
        out.emit({"formula": render(f), "valid": c.ok, "failing_world": c.witness[0] if c.witness else None})
        return EXIT_OK if c else EXIT_FALSE
    ok = kripke.model_check(m, args.world, f)
    out.emit({"formula": render(f), "world": args.world, "holds": ok})
    return EXIT_OK if ok else EXIT_FALSE


def _cmd_frame_check(args, out: _Out) -> int:
    m = _load_model(args.model)
    fr = m.frame
    result = {"properties": {}}
    ok = True
    for name in args.property:
        c = kripke.frame_property(fr, FrameProperty(name))
        result["properties"][name] = {"holds": c.ok, "witness": list(c.witness) if c.witness else None}
        ok &= c.ok
    if args.formula:
        f = parse_prop(args.formula)
        c = kripke.valid_on_frame(fr, f, atom_cap=args.cap or kripke.DEFAULT_ATOM_CAP)
        entry = {"formula": render(f), "valid": c.ok}
        if not c.ok:
            val, w = c.witness
            entry["witness"] = {"world": w, "valuation": {x: sorted(v) for x, v in val.items()}}
        result["frame_validity"] = entry
        ok &= c.ok
    out.emit(result)
    return EXIT_OK if ok else EXIT_FALSE


def _cmd_frames_sweep(args, out: _Out) -> int:
    f = parse_prop(args.formula)
    prop = FrameProperty(args.property)
    within = {FrameProperty(x) for x in _csv(args.within)}
    cap = args.cap if args.cap is not None else kripke.DEFAULT_FRAME_CAP
    counts = []
    exceptions = []
    for n in range(1, args.max_worlds + 1):
        total = agree = 0
        for fr in kripke.enumerate_frames(n, within, cap=cap):
            total += 1
            valid = kripke.valid_on_frame(fr, f).ok
            has = kripke.frame_property(fr, prop).ok
            if valid == has:
                agree += 1
            else:
                exceptions.append({"worlds": n, "relation_mask": fr.relation_mask(),
                                   "formula_valid": valid, "property": has})
        counts.append({"worlds": n, "frames": total, "agree": agree})
    out.emit({"formula": render(f), "property": prop.value, "within": sorted(x.value for x in within),
              "sizes": counts, "exceptions": exceptions})
    return EXIT_OK if not exceptions else EXIT_FALSE


def _cmd_fingerprint(args, out: _Out) -> int:
    m = _load_model(args.model)
    rep = theories.logic_fingerprint(m, _csv(args.pool), args.depth)
    out.emit(theories.fingerprint_json(rep))
    return EXIT_OK


def _cmd_controls(args, out: _Out) -> int:
    m = _load_model(args.model)
    cap = args.cap if args.cap is not None else theories.DEFAULT_CAP
    if args.action == "classify":
        rep = controls.classify(m, args.world, parse_prop(args.statement))
        out.emit(rep.to_json())
        return EXIT_OK if rep.role != "neither" else EXIT_FALSE
    if args.action == "dial":
        scope = _csv(args.scope) if args.scope else None
        c = controls.is_dial(m, [parse_prop(s) for s in args.statements], scope)
        out.emit({"dial": c.ok, "violations": [{"world": w, "reason": r} for w, r in c.violations]})
        return EXIT_OK if c else EXIT_FALSE
    if args.action == "independent":
        if args.switches:
            if args.world is None:
                raise _Usage("switch independence needs a reference world")
            c = controls.independent_switches(m, args.world, [parse_prop(s) for s in _csv(args.switches)])
        elif args.buttons:
            c = controls.independent_buttons_dial(
                m, [parse_prop(b) for b in _csv(args.buttons)], _dial(m, args.dial, args.scope))
        else:
            raise _Usage("give --switches or --buttons")
        out.emit({"independent": c.ok, "violation": list(c.witness) if c.witness else None})
        return EXIT_OK if c else EXIT_FALSE
    if args.action == "s5-witness":
        r = controls.s5_cap_witness(m, args.world, [parse_prop(s) for s in _csv(args.switches)],
                                    parse_prop(args.formula), cap=cap)
        out.emit(r.to_json())
        return EXIT_OK
    if args.action == "s42-witness":
        r = controls.s42_cap_witness(m, args.world, [parse_prop(b) for b in _csv(args.buttons)],
                                     _dial(m, args.dial, args.scope), parse_prop(args.formula), cap=cap)
        out.emit(r.to_json())
        return EXIT_OK
    if args.action == "mp":
        c = controls.mp_check(m, args.world, _csv(args.pool), args.depth)
        out.emit({"mp": c.ok, "violation": c.witness[0] if c.witness else None})
        return EXIT_OK if c else EXIT_FALSE
    raise _Usage("missing controls action")


def _read_corpus(path: str):
    items = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                items.append((line, parse_fo(line)))
    return items


def _cmd_multiverse(args, out: _Out) -> int:
    if args.action == "build":
        s = multiverse.make_toy_system(args.max_height, [int(x) for x in _csv(args.multipliers)], args.K)
        data = s.to_json()
        if args.out:
            with open(args.out, "w") as fh:
                json.dump(data, fh)
            out.emit({"worlds": len(s), "top": s.top.id if s.top else None, "out": args.out})
        else:
            out.emit(data)
        return EXIT_OK
    s = multiverse.load_system(args.system)
    if args.action == "corollary":
        corpus = _read_corpus(args.corpus) if args.corpus else multiverse.standard_corpus()
        rep = multiverse.corollary_check(s, corpus)
        out.emit(rep.to_json())
        return EXIT_OK if rep.ok else EXIT_FALSE
    if args.action == "account":
        c = multiverse.account_check(s)
        out.emit({"account": c.ok, "violation": list(c.witness) if c.witness else None})
        return EXIT_OK if c else EXIT_FALSE
    if args.action == "induce":
        with open(args.atoms) as fh:
            spec = json.load(fh)
        if not isinstance(spec, dict) or not all(isinstance(v, str) for v in spec.values()):
            raise ValueError("atoms file must map atom names to statement specs")
        m = multiverse.induce_model(s, spec)
        if args.out:
            with open(args.out, "w") as fh:
                json.dump(m.to_json(), fh)
            out.emit({"worlds": len(m.worlds), "out": args.out})
        else:
            out.emit(m.to_json())
        return EXIT_OK
    raise _Usage("missing multiverse action")


_COMMANDS = {
    "decide": _cmd_decide,
    "model-check": _cmd_model_check,
    "frame-check": _cmd_frame_check,
    "frames-sweep": _cmd_frames_sweep,
    "fingerprint": _cmd_fingerprint,
    "controls": _cmd_controls,
    "multiverse": _cmd_multiverse,
}


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    quiet = False
    try:
        args = parser.parse_args(argv)
        quiet = bool(getattr(args, "quiet", False))
        out = _Out(quiet)
        if args.command is None:
            raise _Usage(parser.format_usage().strip())
        return _COMMANDS[args.command](args, out)
    except _Usage as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except CapExceeded as e:
        if not quiet:
            sys.stderr.write(f"cap exceeded: {e}\n")
        return EXIT_INCONCLUSIVE
    except controls.PreconditionError as e:
        if not quiet:
            sys.stderr.write(f"precondition failed: {e}\n")
        return EXIT_FALSE
    except FormulaSyntaxError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except (ValueError, KeyError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
