"""``fieldlint`` command line.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage,
parse and declaration errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__
from . import variational as V
from .dimensions import check_requirements
from .dsl import pretty, render
from .errors import FieldLintError
from .models import load_file
from .report import Check, Report
from .scenarios import Catalog

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _vary_target(model, text: str):
    """``phi``, ``conj(phi)`` or ``psibar`` -> (field name, conj)."""
    text = text.strip()
    if text.startswith("conj(") and text.endswith(")"):
        return text[5:-1].strip(), True
    if text.endswith("bar") and text[:-3] in model.fields and model.fields[text[:-3]].kind == "spinor":
        return text[:-3], True
    return text, False


def cmd_check(args) -> Report:
    model = load_file(args.file)
    rep = check_requirements(model)
    rep.id = f"check:{Path(args.file).name}"
    audit = V.charge_degree_audit(model, args.charge)
    for term, d in audit.degrees.items():
        if d > 0:
            rep.add(Check(f"charge degree: {term}", "info", d))
    rep.add(Check("mixed charge degrees", "info",
                  f"raised: {sorted(audit.interaction_degrees)}" if audit.mixed else "clear"))
    return rep


def cmd_eom(args) -> Report:
    model = load_file(args.file)
    name, conj = _vary_target(model, args.vary)
    eq = V.euler_lagrange(model, name, conj)
    rep = Report(f"eom:{Path(args.file).name}:{eq.varied}")
    rep.add(Check("equation", "info", eq.text()))
    rep.add(Check("equation (dsl)", "info", f"{render(eq.lhs)} = 0"))
    if eq.assumptions_used:
        rep.add(Check("before assumptions", "info", f"{render(eq.lhs_before_assumptions)} = 0"))
        rep.add(Check("assumptions used", "info", ", ".join(sorted(eq.assumptions_used))))
    return rep


def cmd_em_eq(args) -> Report:
    model = load_file(args.file)
    eq = V.derive_em_equation(model, args.potential)
    rep = Report(f"em-eq:{Path(args.file).name}")
    rep.add(Check("field equation", "info", eq.text()))
    rep.add(Check("field equation (dsl)", "info", f"{render(eq.lhs)} = 0"))
    return rep


def cmd_gauge(args) -> Report:
    model = load_file(args.file)
    eq = V.derive_em_equation(model, args.potential)
    rep = Report(f"gauge:{Path(args.file).name}")
    rep.add(Check("field equation", "info", eq.text()))
    rep.add(V.gauge_check(eq).check("gauge invariance under A_mu -> A_mu + d_mu(chi)"))
    return rep


def cmd_stress(args) -> Report:
    model = load_file(args.file)
    t = V.stress_energy(model, args.field, lower=args.lower)
    rep = Report(f"stress:{Path(args.file).name}:{args.field}")
    rep.add(Check("T_{mu nu}" if args.lower else "T^{mu nu}", "info", render(t)))
    rep.add(Check("pretty", "info", pretty(t)))
    return rep


def _emit(reports: list, args, many: bool) -> None:
    if args.format == "json":
        if many:
            payload = {"artifact_version": __version__, "ok": all(r.ok for r in reports),
                       "reports": [r.to_dict() for r in reports]}
        else:
            payload = reports[0].to_dict()
        print(json.dumps(payload, indent=2, ensure_ascii=False))
        return
    color = sys.stdout.isatty() and "NO_COLOR" not in os.environ
    print("\n\n".join(r.to_text(color) for r in reports))
    if many:
        passed = sum(r.ok for r in reports)
        print(f"\n{passed}/{len(reports)} scenarios passed")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--tolerance", type=float, default=None,
                        help="numeric equality tolerance (default 1e-12)")
    common.add_argument("--scenario-dir", type=Path, default=None,
                        help="directory with an extra manifest.json and .lagr models")

    p = argparse.ArgumentParser(prog="fieldlint", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="dimensions, scalar and charge-degree audits")
    s.add_argument("file")
    s.add_argument("--charge", default="e")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("eom", parents=[common], help="Euler-Lagrange equation for a field")
    s.add_argument("file")
    s.add_argument("--vary", required=True, help="field to vary: phi, conj(phi) or psibar")
    s.set_defaults(func=cmd_eom)

    s = sub.add_parser("em-eq", parents=[common], help="field equation from varying the potential")
    s.add_argument("file")
    s.add_argument("--potential", default=None)
    s.set_defaults(func=cmd_em_eq)

    s = sub.add_parser("gauge", parents=[common], help="gauge invariance of the field equation")
    s.add_argument("file")
    s.add_argument("--potential", default=None)
    s.set_defaults(func=cmd_gauge)

    s = sub.add_parser("stress", parents=[common], help="canonical stress-energy tensor")
    s.add_argument("file")
    s.add_argument("--field", required=True)
    s.add_argument("--lower", action="store_true", help="print T_{mu nu} instead of T^{mu nu}")
    s.set_defaults(func=cmd_stress)

    s = sub.add_parser("scenario", parents=[common], help="run catalog scenarios")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("id", nargs="?")
    g.add_argument("--all", action="store_true")
    g.add_argument("--list", action="store_true", help="print scenario ids")
    s.set_defaults(func=None)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "scenario":
            cat = Catalog(args.scenario_dir)
            if args.list:
                print("\n".join(cat.list()))
                return EXIT_OK
            if args.all:
                reports = cat.run_all(args.tolerance)
            else:
                reports = [cat.run(args.id, args.tolerance)]
            _emit(reports, args, many=args.all)
            return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL
        t0 = time.perf_counter()
        rep = args.func(args)
        rep.timing = time.perf_counter() - t0
    except (FieldLintError, OSError) as exc:
        print(f"fieldlint: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit([rep], args, many=False)
    return EXIT_OK if rep.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
