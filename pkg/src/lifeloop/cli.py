"""Command line front end: validate, compile, simulate, gen-trace, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import dsl
from .diagnostics import has_errors
from .engine import EngineConfig
from .replay import directives_to_text, replay, summary_lines
from .story import graph_to_dict
from .traces import (
    ConstantSpeed,
    Noise,
    PausePattern,
    PiecewiseSpeed,
    TraceProfile,
    gen_trace,
    read_trace,
    trace_to_text,
    write_trace,
)
from .util import sha12

CONFIG_ENV = "LIFELOOP_CONFIG"


def _load_config(path: str | None) -> EngineConfig:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return EngineConfig()
    return EngineConfig.from_file(path)


def _load_script(path: str) -> dsl.ScriptSource:
    if path == "canonical":
        return dsl.canonical_script()
    with open(path, "r", encoding="utf-8") as fh:
        return dsl.ScriptSource(fh.read(), origin=path)


def _compile_or_report(src: dsl.ScriptSource) -> tuple[dsl.CompileResult, int]:
    result = dsl.compile_source(src)
    for diag in result.diagnostics:
        print(diag.render(src.origin), file=sys.stderr)
    return result, (1 if has_errors(result.diagnostics) else 0)


def parse_profile(text: str) -> tuple[TraceProfile, bool]:
    """Profile spec string -> (profile, needs explicit duration).

    Formats: constant:<deg_s>, piecewise:<dur>x<deg_s>[,...],
    pauses:<base_deg_s>[:<at_deg>@<hold_s>[,...]], noise:<base_deg_s>,<amplitude_deg>
    """
    kind, _, rest = text.partition(":")
    try:
        if kind == "constant":
            return ConstantSpeed(float(rest)), True
        if kind == "piecewise":
            segments = []
            for part in rest.split(","):
                dur, _, speed = part.partition("x")
                segments.append((float(dur), float(speed)))
            return PiecewiseSpeed(tuple(segments)), False
        if kind == "pauses":
            base, _, pause_spec = rest.partition(":")
            pauses = []
            if pause_spec:
                for part in pause_spec.split(","):
                    at_deg, _, hold = part.partition("@")
                    pauses.append((float(at_deg), float(hold)))
            return PausePattern(float(base), tuple(pauses)), True
        if kind == "noise":
            base, _, amp = rest.partition(",")
            return Noise(float(base), float(amp)), True
    except ValueError as exc:
        raise ValueError(f"bad profile {text!r}: {exc}") from None
    raise ValueError(f"unknown profile kind {kind!r}")


def _cmd_validate(args) -> int:
    src = _load_script(args.script)
    _, code = _compile_or_report(src)
    return code


def _cmd_compile(args) -> int:
    src = _load_script(args.script)
    result, code = _compile_or_report(src)
    if code:
        return code
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(graph_to_dict(result.graph), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_simulate(args) -> int:
    src = _load_script(args.script)
    result, code = _compile_or_report(src)
    if code:
        return code
    config = _load_config(args.config)
    trace = read_trace(args.trace)
    directives, summary = replay(trace, result.graph, config)
    text = directives_to_text(
        directives,
        script_hash=sha12(src.text),
        config_hash=sha12(json.dumps(config.to_dict(), sort_keys=True)),
        trace_hash=sha12(trace_to_text(trace)),
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    for line in summary_lines(summary):
        print(line)
    return 0


def _cmd_gen_trace(args) -> int:
    try:
        profile, needs_duration = parse_profile(args.profile)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if needs_duration and args.duration is None:
        print("error: this profile requires --duration", file=sys.stderr)
        return 2
    trace = gen_trace(profile, args.duration, args.rate, args.seed)
    write_trace(trace, args.out)
    print(f"wrote {len(trace.samples)} samples to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    src = _load_script(args.script)
    result, code = _compile_or_report(src)
    if code:
        return code
    config = _load_config(args.config)
    from .bridge import serve

    serve(result.graph, config, host=args.host, port=args.port,
          script_hash=sha12(src.text))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lifeloop",
        description="Rotation-driven interactive narrative engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and compile a .story script")
    p.add_argument("script", help=".story path, or 'canonical' for the built-in script")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("compile", help="compile a script to a graph JSON file")
    p.add_argument("script")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("simulate", help="replay a trace and write directives")
    p.add_argument("--script", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("gen-trace", help="generate a deterministic sensor trace")
    p.add_argument("--profile", required=True)
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_trace)

    p = sub.add_parser("serve", help="run the realtime session service")
    p.add_argument("--script", default="canonical")
    p.add_argument("--port", type=int, default=7360)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
