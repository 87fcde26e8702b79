"""Command-line interface.

Exit codes: 0 success or confirmation, 1 no extension exists (a witness is
reported), 2 usage error, 3 a verification campaign found counterexamples
or a construction hit a promised-search failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import construct, verify
from .certificates import (
    CertificateError,
    CycleCertificate,
    PathCertificate,
    certificate_from_dict,
    validate_cycle,
    validate_path,
)
from .cube import (
    Matching,
    Vertex,
    c_condition_report,
    parse_matching,
    spanned_directions,
)
from .enumeration import emit_dimacs, maximal_matchings, uncovered_classes
from .errors import ConjectureCounterexampleError, UnsupportedFallbackError

USAGE_ERROR = 2
NO_EXTENSION = 1
COUNTEREXAMPLE = 3


def _load_matching(path: str) -> Matching:
    return parse_matching(Path(path).read_text())


def _parse_vertex(s: str, dim: int) -> Vertex:
    if len(s) != dim or set(s) - {"0", "1"}:
        raise ValueError(f"{s!r} is not a {dim}-bit vertex string")
    return Vertex(dim, int(s, 2))


def _emit(data: dict) -> None:
    json.dump(data, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


def _cmd_check(args: argparse.Namespace) -> int:
    m = _load_matching(args.matching)
    u = _parse_vertex(args.u, m.dim)
    v = _parse_vertex(args.v, m.dim)
    report = c_condition_report(m, u, v)
    _emit({"schema": 1, "kind": "c_condition_report", "dim": m.dim, **report.to_dict()})
    return NO_EXTENSION if report.any else 0


def _cmd_extend_cycle(args: argparse.Namespace) -> int:
    m = _load_matching(args.matching)
    d = args.d if args.d is not None else max(len(spanned_directions(m)), 2)
    cert = construct.extend_to_cycle(m.dim, d, m)
    _emit(cert.to_dict())
    return 0


def _cmd_extend_path(args: argparse.Namespace) -> int:
    m = _load_matching(args.matching)
    u = _parse_vertex(args.u, m.dim)
    v = _parse_vertex(args.v, m.dim)
    d = args.d if args.d is not None else max(len(spanned_directions(m)), 5)
    cert = construct.extend_to_path(m.dim, d, m, u, v)
    if cert is None:
        report = c_condition_report(m, u, v)
        _emit(
            {
                "schema": 1,
                "kind": "no_extension",
                "dim": m.dim,
                "witness": report.to_dict(),
            }
        )
        return NO_EXTENSION
    _emit(cert.to_dict())
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.what == "cycle":
        report = verify.verify_cycle_conjecture(
            args.d, threads=args.threads, checkpoint=args.resume
        )
    elif args.what == "path":
        report = verify.verify_path_conjecture(
            args.d, threads=args.threads, checkpoint=args.resume
        )
    elif args.what == "necessity":
        report = verify.verify_necessity(args.n, args.budget)
    else:  # bqn
        witness = verify.bqn_counterexample(args.n)
        _emit(witness.to_dict())
        return 0
    _emit(report.to_dict(include_timing=not args.deterministic))
    return 0 if report.confirmed else COUNTEREXAMPLE


def _cmd_enum(args: argparse.Namespace) -> int:
    n = args.n
    if args.dimacs:
        forced = frozenset(_parse_vertex(s, n) for s in args.uncovered or [])
        text = emit_dimacs(n, forced_uncovered=forced)
        Path(args.dimacs).write_text(text)
        _emit({"schema": 1, "kind": "dimacs", "dim": n, "path": args.dimacs})
        return 0
    stream = None
    if args.stream:
        stream = open(args.stream, "w")

    def sink(m: Matching, orbit: int) -> None:
        if stream is not None:
            from .cube import format_matching

            stream.write(format_matching(m))
            stream.write(f"# orbit {orbit}\n\n")

    if args.uncovered is not None:
        required = frozenset(_parse_vertex(s, n) for s in args.uncovered)
        counts = maximal_matchings(n, required, sink)
        classes_used = 1
    else:
        total = 0
        classes = 0
        classes_used = 0
        for cls in uncovered_classes(n):
            c = maximal_matchings(n, cls.vertices, sink)
            classes += c.non_isomorphic
            total += c.with_duplicates
            classes_used += 1
        counts = type("C", (), {"non_isomorphic": classes, "with_duplicates": total})()
    if stream is not None:
        stream.close()
    _emit(
        {
            "schema": 1,
            "kind": "enumeration",
            "dim": n,
            "uncovered_classes": classes_used,
            "non_isomorphic": counts.non_isomorphic,
            "with_duplicates": counts.with_duplicates,
        }
    )
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    data = json.loads(Path(args.certificate).read_text())
    cert = certificate_from_dict(data)
    m = _load_matching(args.matching)
    try:
        if isinstance(cert, CycleCertificate):
            validate_cycle(cert, forced=m)
        else:
            validate_path(cert, forced=m)
    except CertificateError as exc:
        _emit({"schema": 1, "kind": "validation", "ok": False, "reason": str(exc)})
        return NO_EXTENSION
    _emit({"schema": 1, "kind": "validation", "ok": True})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hypermatch",
        description="Extend hypercube matchings spanning few directions into "
        "Hamilton cycles and paths, and reproduce the exhaustive "
        "small-dimension verification campaigns.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="report the path obstructions for an endpoint pair")
    c.add_argument("matching")
    c.add_argument("--u", required=True)
    c.add_argument("--v", required=True)
    c.set_defaults(func=_cmd_check)

    c = sub.add_parser("extend-cycle", help="extend a matching into a Hamilton cycle")
    c.add_argument("matching")
    c.add_argument("--d", type=int, default=None)
    c.set_defaults(func=_cmd_extend_cycle)

    c = sub.add_parser("extend-path", help="extend a matching into a Hamilton path")
    c.add_argument("matching")
    c.add_argument("--u", required=True)
    c.add_argument("--v", required=True)
    c.add_argument("--d", type=int, default=None)
    c.set_defaults(func=_cmd_extend_path)

    c = sub.add_parser("verify", help="run a verification campaign")
    vsub = c.add_subparsers(dest="what", required=True)
    vc = vsub.add_parser("cycle")
    vc.add_argument("--d", type=int, required=True)
    vc.add_argument("--threads", type=int, default=None)
    vc.add_argument("--resume", default=None, help="checkpoint file of completed classes")
    vc.add_argument("--deterministic", action="store_true", help="omit timings")
    vp = vsub.add_parser("path")
    vp.add_argument("--d", type=int, required=True)
    vp.add_argument("--threads", type=int, default=None)
    vp.add_argument("--resume", default=None, help="checkpoint file of completed classes")
    vp.add_argument("--deterministic", action="store_true")
    vn = vsub.add_parser("necessity")
    vn.add_argument("--n", type=int, required=True)
    vn.add_argument("--budget", type=int, default=60)
    vn.add_argument("--deterministic", action="store_true")
    vb = vsub.add_parser("bqn")
    vb.add_argument("--n", type=int, required=True)
    for vx in (vc, vp, vn, vb):
        vx.set_defaults(func=_cmd_verify)

    c = sub.add_parser("enum", help="enumerate maximal matchings up to isomorphism")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--uncovered", nargs="*", default=None, help="required uncovered vertices")
    c.add_argument("--dimacs", default=None, help="write the CNF encoding instead")
    c.add_argument("--stream", default=None, help="write class representatives to a file")
    c.set_defaults(func=_cmd_enum)

    c = sub.add_parser("validate", help="validate a certificate against a matching")
    c.add_argument("certificate")
    c.add_argument("matching")
    c.set_defaults(func=_cmd_validate)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, CertificateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except UnsupportedFallbackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ConjectureCounterexampleError as exc:
        print(f"counterexample artifact: {exc}", file=sys.stderr)
        return COUNTEREXAMPLE


if __name__ == "__main__":
    sys.exit(main())
