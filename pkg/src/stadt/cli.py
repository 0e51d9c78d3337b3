"""Command-line interface.

One verb per invocation: validate, bundles, synth, state, eval, controls, or
serve.  All JSON output is deterministic (sorted keys, fixed child order) so
runs are golden-file testable.  Exit codes: 0 success, 1 domain error, 2
usage error.  Domain errors print ``code: message`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .attributes import ATTRIBUTE_DOMAINS, evaluate_attribute
from .bundle import bundle_to_dict, to_dot
from .defences import Category, Control, PlacementSlot, load_catalog, suggest_controls
from .errors import StadtError
from .model import load_model
from .session import Session
from .state import bootstrap, check_actor, dump
from .synthesis import tree_to_dict

MODEL_ENV_VAR = "STADT_MODEL"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stadt", description=__doc__)
    parser.add_argument("--model", help=f"model file (or ${MODEL_ENV_VAR})")
    parser.add_argument("--session", help="session file of attachment records")
    parser.add_argument("--controls", help="control definitions file (JSON array)")
    sub = parser.add_subparsers(dest="verb", required=True)

    sub.add_parser("validate", help="check the model and print violations")

    p = sub.add_parser("bundles", help="emit the bundle for an asset")
    p.add_argument("--asset", required=True)
    p.add_argument("--format", choices=["json", "dot"], default="json")

    p = sub.add_parser("synth", help="synthesize and evaluate an attack-defence tree")
    p.add_argument("--attacker", required=True)
    p.add_argument("--asset", required=True)
    p.add_argument("--format", choices=["json", "dot"], default="json")

    p = sub.add_parser("state", help="state inspection")
    p.add_argument("action", choices=["dump"])

    p = sub.add_parser("eval", help="attribute evaluation on a synthesized tree")
    p.add_argument("--attacker", required=True)
    p.add_argument("--asset", required=True)
    p.add_argument("--attribute", required=True, choices=sorted(ATTRIBUTE_DOMAINS))
    p.add_argument("--leaves", help="JSON file mapping term keys to numbers")

    p = sub.add_parser("controls", help="suggest, attach, or list controls")
    controls_sub = p.add_subparsers(dest="action", required=True)
    s = controls_sub.add_parser("suggest")
    s.add_argument("--element", required=True)
    s.add_argument("--category", required=True, choices=[c.value for c in Category])
    s.add_argument("--catalog", help="catalog file overriding the shipped one")
    s = controls_sub.add_parser("attach")
    s.add_argument("--control", required=True)
    s.add_argument("--slot", required=True, help="root:<n> | prev:<n>,<l> | perimeter:<p>")
    controls_sub.add_parser("list")

    p = sub.add_parser("serve", help="start the JSON API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")

    return parser


def _load_model_arg(args) -> "Model":
    path = args.model or os.environ.get(MODEL_ENV_VAR)
    if not path:
        raise UsageError("no model file given (--model or $" + MODEL_ENV_VAR + ")")
    with open(path, encoding="utf-8") as fh:
        return load_model(fh.read())


class UsageError(Exception):
    pass


def _load_session(args) -> Session:
    model = _load_model_arg(args)
    controls = []
    if args.controls:
        with open(args.controls, encoding="utf-8") as fh:
            controls = [Control.from_dict(raw) for raw in json.load(fh)]
    records = []
    if args.session and os.path.exists(args.session):
        with open(args.session, encoding="utf-8") as fh:
            records = json.load(fh)
    return Session.load(model, controls=controls, records=records)


def _emit_json(payload, out) -> None:
    json.dump(payload, out, indent=2, sort_keys=True)
    out.write("\n")


def run(argv: list[str], out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        return _dispatch(args, out)
    except UsageError as exc:
        err.write(f"usage-error: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        err.write(f"io-error: {exc}\n")
        return 1
    except StadtError as exc:
        err.write(f"{exc.code}: {exc.message}\n")
        return 1


def _dispatch(args, out) -> int:
    if args.verb == "validate":
        from .errors import ModelValidationError
        try:
            _load_model_arg(args)
        except ModelValidationError as exc:
            for violation in exc.violations:
                out.write(violation + "\n")
            return 1
        out.write("OK\n")
        return 0

    if args.verb == "bundles":
        session = _load_session(args)
        bundle = session.bundle(args.asset)
        if args.format == "dot":
            out.write(to_dot(bundle.root, title=f"bundle-{args.asset}"))
        else:
            _emit_json(bundle_to_dict(bundle), out)
        return 0

    if args.verb == "synth":
        session = _load_session(args)
        result = session.evaluate(args.attacker, args.asset)
        if args.format == "dot":
            out.write(to_dot(result.tree.root, title=f"tree-{args.asset}", values=result.values))
        else:
            _emit_json(tree_to_dict(result.tree, values=result.values, trace=result.trace), out)
        return 0

    if args.verb == "state":
        model = _load_model_arg(args)
        _emit_json(dump(model, bootstrap(model)), out)
        return 0

    if args.verb == "eval":
        session = _load_session(args)
        leaves = {}
        if args.leaves:
            with open(args.leaves, encoding="utf-8") as fh:
                leaves = json.load(fh)
        check_actor(session.model, args.attacker)
        result = session.evaluate(args.attacker, args.asset)
        domain = ATTRIBUTE_DOMAINS[args.attribute]
        values = evaluate_attribute(
            result.tree, domain, leaves, controls=session.controls, props=result.values,
        )
        by_term = {
            node.term.key(): values[node.id]
            for node in result.tree.root.walk()
        }
        root_key = result.tree.root.term.key()
        _emit_json(
            {
                "attribute": args.attribute,
                "root": _json_number(values[result.tree.root.id]),
                "rootTerm": root_key,
                "values": {k: _json_number(v) for k, v in sorted(by_term.items())},
            },
            out,
        )
        return 0

    if args.verb == "controls":
        return _dispatch_controls(args, out)

    if args.verb == "serve":
        import uvicorn

        from .service import create_app

        model = _load_model_arg(args)
        uvicorn.run(create_app(model), host=args.host, port=args.port)
        return 0

    raise UsageError(f"unknown verb {args.verb!r}")


def _dispatch_controls(args, out) -> int:
    if args.action == "suggest":
        model = _load_model_arg(args)
        catalog = load_catalog(args.catalog) if args.catalog else None
        names = suggest_controls(model, args.element, Category(args.category), catalog=catalog)
        _emit_json(names, out)
        return 0

    if args.action == "attach":
        session = _load_session(args)
        slot = PlacementSlot.parse(args.slot)
        attachment = session.attach(args.control, slot)
        if args.session:
            session.save_attachments(args.session)
        _emit_json(attachment.to_dict(), out)
        return 0

    if args.action == "list":
        session = _load_session(args)
        _emit_json(session.attachment_records(), out)
        return 0

    raise UsageError(f"unknown controls action {args.action!r}")


def _json_number(value: float):
    if value == float("inf"):
        return "inf"
    if value == float("-inf"):
        return "-inf"
    return value


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
