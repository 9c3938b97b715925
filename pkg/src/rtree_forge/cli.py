"""``rtree-forge`` command line.

Exit codes: 0 success, 1 a check failed, 2 bad input or usage.
Every report is JSON with sorted keys and carries the run manifest.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from ._rational import ceil_log2, format_rational, format_real, parse_rational
from .construct import (
    NotLipschitzError,
    build_compact_surjection,
    build_separable_surjection,
    build_star,
    depth_for_density,
    intrinsic_sample,
    verify_bundle,
)
from .metric import FiniteMetricSpace, MalformedMetricError, validate_metric
from .rtree import PointError, RTreePoint, RTreeSpace, tree_to_dot
from .spaces import DurationTooShortError, EmbeddedPolygonalSpace, SpaceError
from .wtree import TreeError, WeightedTree, certificate_residual, precompact_certificate

SEED_ENV = "RTREE_FORGE_SEED"


class InputError(Exception):
    """Anything that should end the run with exit code 2."""


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _rational(text: str, what: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise InputError(f"{what}: {exc}") from exc


def _positive(text: str, what: str = "--eps") -> Fraction:
    q = _rational(text, what)
    if q <= 0:
        raise InputError(f"{what} must be positive")
    return q


def resolve_seed(flag: int | None) -> int:
    if flag is not None:
        seed = flag
    else:
        raw = os.environ.get(SEED_ENV)
        try:
            seed = int(raw) if raw not in (None, "") else 0
        except ValueError:
            raise InputError(f"{SEED_ENV} must be an integer") from None
    if not 0 <= seed < 2 ** 64:
        raise InputError("seed must be a 64-bit unsigned integer")
    return seed


def _manifest(args, inputs: list[str], **extra) -> dict:
    m = {"command": args.command, "inputs": inputs, "version": __version__}
    if getattr(args, "out", None):
        m["out"] = args.out
    m.update({k: v for k, v in extra.items() if v is not None})
    return m


# -- input decoding ------------------------------------------------------------------


def _tree(data) -> WeightedTree:
    if not isinstance(data, dict) or not isinstance(data.get("parent"), list) or not isinstance(data.get("weight"), list):
        raise InputError('tree file needs "parent" and "weight" lists')
    for w in data["weight"]:
        try:
            parse_rational(w)
        except ValueError as exc:
            raise InputError(f"tree weight: {exc}") from exc
    return WeightedTree(data["parent"], data["weight"])


def _load_tree(path: str) -> WeightedTree:
    try:
        return _tree(_load_json(path))
    except TreeError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _space(data) -> EmbeddedPolygonalSpace:
    try:
        return EmbeddedPolygonalSpace.from_dict(data)
    except SpaceError as exc:
        raise InputError(str(exc)) from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"bad space description: {exc}") from exc


def _space_point(S: EmbeddedPolygonalSpace, data):
    try:
        return S.point_from_dict(data)
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise InputError(f"bad point {data!r}: {exc}") from exc


def parse_tree_point(R: RTreeSpace, text: str) -> RTreePoint:
    """``"node:offset"`` such as ``"2:3/2"``, ``"root"``, or a JSON object."""
    text = text.strip()
    try:
        if text == "root":
            return R.root_point
        if text.startswith("{"):
            return R.check(RTreePoint.from_dict(json.loads(text)))
        node, _, off = text.partition(":")
        if not _:
            raise InputError(f"point {text!r} is not of the form node:offset")
        return R.point(int(node), parse_rational(off))
    except (PointError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"bad point {text!r}: {exc}") from exc


# -- commands ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    data = _load_json(args.file)
    if not isinstance(data, dict):
        raise InputError("expected a JSON object")
    report: dict
    if "dist" in data:
        try:
            M = FiniteMetricSpace.from_dict(data)
        except MalformedMetricError as exc:
            raise InputError(str(exc)) from exc
        report = {"kind": "metric", **validate_metric(M).to_dict()}
    elif "parent" in data:
        try:
            _tree(data)
            report = {"kind": "tree", "valid": True, "violations": []}
        except TreeError as exc:
            report = {"kind": "tree", "valid": False, "violations": [str(exc)]}
    elif "vertices" in data:
        try:
            EmbeddedPolygonalSpace.from_dict(data)
            report = {"kind": "space", "valid": True, "violations": []}
        except SpaceError as exc:
            report = {"kind": "space", "valid": False, "violations": [str(exc)]}
        except (TypeError, KeyError, ValueError) as exc:
            raise InputError(f"bad space description: {exc}") from exc
    else:
        raise InputError('cannot tell the file kind: expected "dist", "parent" or "vertices"')
    report["manifest"] = _manifest(args, [args.file])
    _emit(_dump(report), args.out)
    return 0 if report["valid"] else 1


def cmd_rtree(args) -> int:
    R = RTreeSpace(_load_tree(args.tree))
    pts = [parse_tree_point(R, p) for p in args.points]
    need = {"dist": 2, "meet": 2, "geodesic": 2, "net": 0}[args.op]
    if len(pts) != need:
        raise InputError(f"{args.op} takes {need} points, got {len(pts)}")
    report: dict = {"op": args.op}
    if args.op == "dist":
        report["distance"] = format_rational(R.distance(*pts))
    elif args.op == "meet":
        report["meet"] = R.lex_meet(*pts).to_dict()
    elif args.op == "geodesic":
        g = R.geodesic(*pts)
        report.update(meet=g.meet.to_dict(), length=format_rational(g.length), ascent=format_rational(g.ascent))
        if args.at is not None:
            t = _rational(args.at, "--at")
            if not 0 <= t <= g.length:
                raise InputError(f"--at must lie in [0, {g.length}]")
            report["at"] = {"time": format_rational(t), "point": g(t).to_dict()}
    else:
        if args.eps is None:
            raise InputError("net needs --eps")
        eps = _positive(args.eps)
        report["eps"] = format_rational(eps)
        report["points"] = [p.to_dict() for p in R.epsilon_net_points(eps)]
    report["manifest"] = _manifest(args, [args.tree], points=list(args.points))
    _emit(_dump(report), args.out)
    return 0


def cmd_precompact(args) -> int:
    T = _load_tree(args.tree)
    eps = _positive(args.eps)
    F = precompact_certificate(T, eps)
    residual = certificate_residual(T, F)
    report = {"eps": format_rational(eps), "certificate": sorted(F), "residual": format_rational(residual),
              "holds": residual < eps, "manifest": _manifest(args, [args.tree])}
    _emit(_dump(report), args.out)
    return 0 if residual < eps else 1


def _depth(args, D: Fraction | None, scale) -> int:
    if args.depth is not None:
        if args.depth < 1:
            raise InputError("--depth must be at least 1")
        return args.depth
    if args.eps is None:
        raise InputError("need --depth or --eps")
    eps = _positive(args.eps)
    return max(1, scale(D, eps))


def _build(args, cfg: dict):
    if not isinstance(cfg, dict) or "space" not in cfg:
        raise InputError('construct config needs a "space" entry')
    S = _space(cfg["space"])
    if args.mode == "star":
        for key in ("x0", "targets", "durations"):
            if key not in cfg:
                raise InputError(f'star config needs "{key}"')
        x0 = _space_point(S, cfg["x0"])
        targets = [_space_point(S, p) for p in cfg["targets"]]
        durations = [_rational(d, "duration") for d in cfg["durations"]]
        return build_star(S, x0, targets, durations), None
    if args.mode == "compact":
        if "sample" not in cfg:
            raise InputError('compact config needs "sample"')
        M = intrinsic_sample(S, [_space_point(S, p) for p in cfg["sample"]])
        D = max((max(row) for row in M.matrix), default=Fraction(0))
        N = _depth(args, D, depth_for_density)
        return build_compact_surjection(S, M, N), N
    for key in ("domain", "f"):
        if key not in cfg:
            raise InputError(f'separable config needs "{key}"')
    try:
        Z = FiniteMetricSpace.from_dict(cfg["domain"])
    except MalformedMetricError as exc:
        raise InputError(f"domain: {exc}") from exc
    if not validate_metric(Z).ok:
        raise InputError("domain distances are not a metric")
    if len(cfg["f"]) != len(Z):
        raise InputError('"f" needs one point per domain point')
    f = {z: _space_point(S, p) for z, p in zip(Z.points, cfg["f"])}
    N = _depth(args, None, lambda _, eps: ceil_log2(Fraction(3) / eps))  # tail 3/2**N
    return build_separable_surjection(Z, f, S, N), N


def cmd_construct(args) -> int:
    seed = resolve_seed(args.seed)
    if args.samples < 0:
        raise InputError("--samples must be nonnegative")
    cfg = _load_json(args.config)
    manifest = _manifest(args, [args.config], mode=args.mode, seed=seed, samples=args.samples,
                         depth=args.depth, eps=args.eps)
    try:
        B, _ = _build(args, cfg)
    except NotLipschitzError as exc:
        report = {"passed": False, "error": "not_1_lipschitz",
                  "pair": [str(exc.pair[0]), str(exc.pair[1])],
                  "image_distance": format_real(exc.image_distance),
                  "domain_distance": format_rational(exc.domain_distance),
                  "message": str(exc), "manifest": manifest}
        sys.stdout.write(_dump(report))
        return 1
    except (DurationTooShortError, SpaceError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    cert = verify_bundle(B, pair_samples=args.samples, seed=seed)
    bundle = B.to_dict()
    bundle["manifest"] = manifest
    if args.out:
        Path(args.out).write_text(_dump(bundle))
    report = {"bundle": {"kind": B.kind, "nodes": len(B.tree), "truncation_depth": B.truncation_depth,
                         "tail_bound": format_rational(B.tail_bound),
                         "weights": [format_rational(w) for w in B.tree.weights]},
              "certificate": cert.to_dict(), "passed": cert.passed, "manifest": manifest}
    sys.stdout.write(_dump(report))
    return 0 if cert.passed else 1


def cmd_export(args) -> int:
    data = _load_json(args.file)
    labels = None
    if isinstance(data, dict) and "kind" in data and "tree" in data:
        tree_data = data["tree"]
        labels = data.get("labels")
    else:
        tree_data = data
    try:
        T = _tree(tree_data)
    except TreeError as exc:
        raise InputError(str(exc)) from exc
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(T)):
        raise InputError("bundle labels do not match the tree")
    if args.format == "dot":
        text = tree_to_dot(T, None if labels is None else [str(x) for x in labels])
    else:
        text = _dump(data)
    _emit(text, args.out)
    return 0


# -- argument parsing -------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rtree-forge", description="R-trees from weighted trees and Lipschitz surjections onto polygonal spaces.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a metric, tree or space file")
    v.add_argument("file")
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("rtree", help="distance, meet, geodesic or net on a tree file")
    r.add_argument("op", choices=["dist", "geodesic", "net", "meet"])
    r.add_argument("tree")
    r.add_argument("points", nargs="*", help='points as "node:offset" or "root"')
    r.add_argument("--eps")
    r.add_argument("--at", help="geodesic time to evaluate")
    r.add_argument("--out")
    r.set_defaults(func=cmd_rtree)

    c = sub.add_parser("precompact", help="certificate that all chains outside F weigh less than eps")
    c.add_argument("tree")
    c.add_argument("--eps", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_precompact)

    b = sub.add_parser("construct", help="build and verify a surjection bundle")
    b.add_argument("mode", choices=["star", "compact", "separable"])
    b.add_argument("config")
    b.add_argument("--depth", type=int)
    b.add_argument("--eps")
    b.add_argument("--seed", type=int)
    b.add_argument("--samples", type=int, default=10_000, help="sampled pairs for the Lipschitz check")
    b.add_argument("--out", help="write the bundle manifest here")
    b.set_defaults(func=cmd_construct)

    e = sub.add_parser("export", help="render a tree or bundle file")
    e.add_argument("file")
    e.add_argument("--format", choices=["dot", "json"], default="dot")
    e.add_argument("--out")
    e.set_defaults(func=cmd_export)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"rtree-forge: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
