"""Command-line entry point: ``boxdim <subcommand> ...``.

Every subcommand prints a JSON summary on stdout (also written to
``--summary`` when given) and exits 0 on success, 1 when a verified verdict
is false, 2 on errors.  Rationals are written ``p/q`` or as integers.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import covers, dimsolve, extension, hirsch, quotients, separation
from .boxspace import assemble_box, box_dim_report, box_family, export_scale_graph
from .errors import BoxdimError, DomainError, PreconditionError
from .groups import (
    FreeAbelian,
    Heisenberg3,
    InfiniteDihedral,
    MarkedGroup,
    SemidirectZnZ,
    WreathLamp,
    make_family,
    parse_group_spec,
    parse_word,
    word_ball,
)
from .spaces import format_rational, parse_rational


class UsageError(BoxdimError):
    pass


# argument helpers


def _rational(text: str) -> Fraction:
    return parse_rational(text)


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def _group(args) -> MarkedGroup:
    if getattr(args, "group_file", None):
        with open(args.group_file, encoding="utf-8") as fh:
            groups = parse_group_spec(fh.read())
        if len(groups) != 1:
            raise UsageError("--group-file must hold exactly one group record")
        return groups[0]
    if not getattr(args, "group", None):
        raise UsageError("--group or --group-file is required")
    return MarkedGroup(make_family(args.group, args.params or []))


def _spec(G: MarkedGroup, level: list[int], reflection: int | None = None):
    fam = G.family
    if not level:
        raise UsageError("--level is required")
    if isinstance(fam, FreeAbelian):
        return quotients.congruence_spec(G, level[0] if len(level) == 1 and fam.n == 1 else (level * fam.n if len(level) == 1 else level))
    if isinstance(fam, (Heisenberg3, SemidirectZnZ)):
        return quotients.congruence_spec(G, level[0])
    if isinstance(fam, WreathLamp):
        return quotients.wreath_level_spec(G, level[0])
    if isinstance(fam, InfiniteDihedral):
        if reflection is None:
            return quotients.dihedral_rotation_spec(G, level[0])
        return quotients.dihedral_reflection_spec(G, level[0], reflection)
    raise UsageError(f"no built-in quotients for {fam!r}")


def _levels(args) -> list[list[int]]:
    return [[int(x) for x in part.split(",")] for part in args.levels.split(";")] if ";" in args.levels else [[x] for x in _ints(args.levels)]


def _space(args):
    if getattr(args, "space", None):
        with open(args.space, encoding="utf-8") as fh:
            return quotients.read_edge_list(fh.read())
    G = _group(args)
    return quotients.build_quotient(_spec(G, args.level, getattr(args, "reflection", None))).space


def _write(path, text):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    return x


# subcommands; each returns (summary dict, exit status)


def cmd_group_ball(args):
    G = _group(args)
    B = word_ball(G, G.identity(), args.R)
    lines = [f"{i} {p!r}" for i, p in enumerate(B.points)]
    _write(args.out, "\n".join(lines) + "\n")
    return {"group": repr(G.family), "R": _fmt(args.R), "size": len(B), "diameter": _fmt(B.diameter())}, 0


def cmd_quotient_build(args):
    G = _group(args)
    Q = quotients.build_quotient(_spec(G, args.level, args.reflection))
    extra = {}
    if Q.space.structure.get("kind") == "torus":
        extra["moduli"] = ",".join(map(str, Q.space.structure["moduli"]))
    text = Q.export_edges(extra_header=extra)
    _write(args.out, text)
    return {"label": Q.label, "index": Q.n, "diameter": _fmt(Q.space.diameter()), "out": args.out}, 0


def cmd_metric_dist(args):
    X = _space(args)
    if not (0 <= args.x < len(X) and 0 <= args.y < len(X)):
        raise DomainError(f"points must lie in 0..{len(X) - 1}")
    return {"x": args.x, "y": args.y, "distance": _fmt(X.distance(args.x, args.y))}, 0


def cmd_check(args):
    G = _group(args)
    sigma = [_spec(G, lv) for lv in _levels(args)]
    F = [parse_word(w, G.family) for w in args.F]
    if args.condition == "separating":
        rep = separation.is_separating(sigma, F)
    else:
        rep = separation.is_semi_conjugacy_separating(sigma, F, args.mode)
    out = rep.as_dict()
    return out, 0 if rep.verdict else 1


def cmd_radius(args):
    G = _group(args)
    Q = quotients.build_quotient(_spec(G, args.level, args.reflection))
    if args.kind == "inj":
        return {"label": Q.label, "collision_length": _fmt(separation.collision_length(Q)), "injectivity_radius": _fmt(separation.injectivity_radius(Q))}, 0
    if args.R is None:
        raise UsageError("radius iso needs --R")
    chk = separation.verify_isometry_lemma(Q, args.R)
    return {"label": Q.label, "R": _fmt(args.R), "holds": chk.holds, "vacuous": chk.vacuous}, 0 if chk.holds else 1


def cmd_dim(args):
    X = _space(args)
    R, S = args.R, args.S
    try:
        if args.mode == "exact":
            if args.shape == "coloring":
                w = dimsolve.exact_min_colors(X, R, S)
                cert = dimsolve.colors_to_cover(w, X)
            else:
                w = dimsolve.exact_min_multiplicity(X, R, S, args.shape)
                cert = w.certificate
            value, opt = w.value, w.optimality
        else:
            cert = covers.greedy_clique_cover(X, R, S)
            value, opt = covers.multiplicity(cert), dimsolve.UPPER
    except PreconditionError as exc:
        return {"space": X.label, "R": _fmt(R), "S": _fmt(S), "value": None, "reason": str(exc)}, 1
    chk = covers.check_cover(cert, R)
    _write(args.out, covers.write_cover(cert))
    return {
        "space": X.label,
        "R": _fmt(R),
        "S": _fmt(S),
        "shape": args.shape,
        "value": value,
        "optimality": opt,
        "certificate": {"multiplicity": chk.multiplicity, "bound": _fmt(chk.bound), "lebesgue_ok": chk.lebesgue_ok},
        "out": args.out,
    }, 0


def cmd_lift(args):
    G = _group(args)
    Q = quotients.build_quotient(_spec(G, args.level, args.reflection))
    with open(args.cover, encoding="utf-8") as fh:
        U = covers.read_cover(fh.read(), Q.space)
    R = args.R if args.R is not None else U.R
    if R is None:
        raise UsageError("the cover file has no R; pass --R")
    W = word_ball(G, G.identity(), args.window)
    lifted, _ = covers.lift_cover(G, Q, U, W, args.S, R)
    nominal = covers.nominal_points(W, G, args.window - 2 * args.S)
    base = covers.check_cover(U, R)
    up = covers.check_cover(lifted, R, restrict=nominal)
    _write(args.out, covers.write_cover(lifted))
    ok = base.multiplicity == up.multiplicity and base.bound == up.bound and up.lebesgue_ok
    return {
        "label": Q.label,
        "window": _fmt(args.window),
        "base": {"multiplicity": base.multiplicity, "bound": _fmt(base.bound)},
        "lifted": {"multiplicity": up.multiplicity, "bound": _fmt(up.bound), "lebesgue_on_nominal": up.lebesgue_ok, "members": len(lifted)},
        "preserved": ok,
    }, 0 if ok else 1


def cmd_key_lemma(args):
    G = _group(args)
    ext = extension.extension_for(G)
    H = _spec(G, args.level, args.reflection)
    rep = extension.verify_key_lemma(ext, H, args.R)
    out = rep.as_dict()
    _write(args.out, json.dumps(out, indent=2, default=str) + "\n")
    return out, 1 if rep.failed else 0


def cmd_hirsch(args):
    if args.tree:
        t = hirsch.parse_tree(args.tree)
    else:
        t = hirsch.canonical_tree(_group(args))
    return {"tree": hirsch.format_tree(t), "hirsch_length": _fmt(hirsch.hirsch_length(t))}, 0


def _box(args):
    G = _group(args)
    fam = box_family(G, [_spec(G, lv) for lv in _levels(args)])
    return fam


def cmd_box(args):
    fam = _box(args)
    lam = [parse_rational(x) for x in args.lam.split(",")] if args.lam else None
    if args.action == "assemble":
        b = assemble_box(fam, lam)
        X = b.materialize()
        return {"members": fam.labels, "lambda": [_fmt(x) for x in b.lam], "points": len(X), "diameter": _fmt(X.diameter())}, 0
    if args.action == "export":
        if args.R is None:
            raise UsageError("box export needs --R")
        b = assemble_box(fam, lam)
        text = export_scale_graph(b, args.R, args.out)
        return {"members": fam.labels, "R": _fmt(args.R), "edges": text.count("\n") - 1, "out": args.out}, 0
    scales = [parse_rational(x) for x in (args.scales or "").split(",") if x]
    if not scales:
        raise UsageError("box report needs --scales")
    rep = box_dim_report(fam, scales, args.S_max)
    out = rep.as_dict()
    _write(args.out, json.dumps(out, indent=2) + "\n")
    return out, 0


# parser


def _add_group(p):
    p.add_argument("--group", help="family name (z, free_abelian, heisenberg, dinf, lamp, semidirect, cyclic)")
    p.add_argument("--params", type=_ints, help="family parameters, comma separated")
    p.add_argument("--group-file", help="group record file (key = value lines)")


def _add_level(p, required=True):
    p.add_argument("--level", type=_ints, required=required, help="congruence level; comma list for per-axis moduli")
    p.add_argument("--reflection", type=int, help="dihedral: use <r^n, r^j s> with this j")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxdim", description="Box spaces, finite quotients and scale dimension.")
    ap.add_argument("--summary", help="also write the JSON summary here")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group").add_subparsers(dest="action", required=True)
    p = g.add_parser("ball", help="closed word ball around the identity")
    _add_group(p)
    p.add_argument("--R", type=_rational, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_group_ball)

    q = sub.add_parser("quotient").add_subparsers(dest="action", required=True)
    p = q.add_parser("build", help="Schreier edge list of a built-in quotient")
    _add_group(p)
    _add_level(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quotient_build)

    m = sub.add_parser("metric").add_subparsers(dest="action", required=True)
    p = m.add_parser("dist", help="quotient distance between two points")
    p.add_argument("--space", help="edge-list file")
    _add_group(p)
    _add_level(p, required=False)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.set_defaults(func=cmd_metric_dist)

    p = sub.add_parser("check", help="separation conditions for a family of congruence quotients")
    p.add_argument("condition", choices=["separating", "scs"])
    _add_group(p)
    p.add_argument("--levels", required=True, help="levels, comma separated (use ';' between per-axis lists)")
    p.add_argument("--mode", type=int, choices=[1, 2, 3], default=2)
    p.add_argument("--F", nargs="+", required=True, help="elements as words, e.g. x.y^-1")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("radius", help="injectivity radius or the isometry check")
    p.add_argument("kind", choices=["inj", "iso"])
    _add_group(p)
    _add_level(p)
    p.add_argument("--R", type=_rational)
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("dim-at-scale", help="least multiplicity at scale R with bound S")
    p.add_argument("--space", help="edge-list file")
    _add_group(p)
    _add_level(p, required=False)
    p.add_argument("--R", type=_rational, required=True)
    p.add_argument("--S", type=_rational, required=True)
    p.add_argument("--mode", choices=["exact", "greedy"], default="exact")
    p.add_argument("--shape", choices=["arcs", "all-subsets", "coloring"], default="all-subsets")
    p.add_argument("--out", help="certificate cover file")
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("lift-cover", help="lift a quotient cover to a window of the group")
    _add_group(p)
    _add_level(p)
    p.add_argument("--cover", required=True)
    p.add_argument("--S", type=_rational, required=True)
    p.add_argument("--R", type=_rational)
    p.add_argument("--window", type=_rational, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lift)

    v = sub.add_parser("verify").add_subparsers(dest="action", required=True)
    p = v.add_parser("key-lemma", help="check the extension lemma on one quotient")
    _add_group(p)
    _add_level(p)
    p.add_argument("--R", type=_rational, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_key_lemma)

    p = sub.add_parser("hirsch", help="Hirsch length of a tree or a built-in group")
    p.add_argument("--tree")
    _add_group(p)
    p.set_defaults(func=cmd_hirsch)

    p = sub.add_parser("box", help="box families")
    p.add_argument("action", choices=["assemble", "export", "report"])
    _add_group(p)
    p.add_argument("--levels", required=True)
    p.add_argument("--lambda", dest="lam", help="gap sequence, comma separated")
    p.add_argument("--R", type=_rational)
    p.add_argument("--scales", help="comma separated R values")
    p.add_argument("--S-max", dest="S_max", type=_rational)
    p.add_argument("--out")
    p.set_defaults(func=cmd_box)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        summary, status = args.func(args)
    except (BoxdimError, ValueError, OSError) as exc:
        summary, status = {"error": type(exc).__name__, "message": str(exc)}, 2
    text = json.dumps(summary, indent=2, sort_keys=True, default=str)
    print(text)
    _write(args.summary, text + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
