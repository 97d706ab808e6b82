"""Story script DSL: parse, compile to a StoryGraph, serialize back.

Line-oriented blocks with braces. Keywords: story, scene, plot, segment, age,
frames, other, rejoin, ending, anchors, clue, on keep_walking/stop_walking.
Comments start with '#'. Angles and ages are integral; durations decimal.
The parser is total: it records diagnostics and recovers instead of raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, Severity, Span, has_errors
from .story import (
    Action,
    AgeAnchorTable,
    AngularSegment,
    BranchEdge,
    ClueBinding,
    ClueSpec,
    FrameBudget,
    FrameEntry,
    Guard,
    NarrativeNode,
    NodeKind,
    OtherEntry,
    StoryGraph,
    validate,
)

START_ID = "__start__"

_GUARDS = {"keep_walking": Guard.KEEP_WALKING,
           "stop_walking": Guard.STOP_WALKING,
           "always": Guard.ALWAYS}
_ACTIONS = {"age_change": Action.AGE_CHANGE, "walk": Action.WALK,
            "pause": Action.PAUSE, "wave_hands": Action.WAVE_HANDS}
_BINDINGS = {"per_user_identity": ClueBinding.PER_USER_IDENTITY,
             "fixed": ClueBinding.FIXED}


@dataclass(frozen=True)
class ScriptSource:
    text: str
    origin: str = "<inline>"


# -- AST ----------------------------------------------------------------------


@dataclass
class AstFrames:
    age: int
    action: Action
    lo: int
    hi: int
    span: Span


@dataclass
class AstGuardClause:
    guard: Guard
    target: str
    span: Span


@dataclass
class AstScene:
    name: str
    span: Span
    segment: tuple[int, int] | None = None
    age: int | None = None
    frames: list[AstFrames] = field(default_factory=list)
    guards: list[AstGuardClause] = field(default_factory=list)


@dataclass
class AstOther:
    name: str
    lo: int
    hi: int
    span: Span


@dataclass
class AstPlot:
    name: str
    span: Span
    others: list[AstOther] = field(default_factory=list)
    rejoin: str | None = None      # scene name or "lap_boundary"
    ending: bool = False


@dataclass
class AstStory:
    name: str
    span: Span
    rotation_degrees: int = 360
    nominal_rotation_s: float = 40.0
    anchors: list[tuple[int, int]] = field(default_factory=list)
    clue_entity: str = "shadow"
    clue_binding: ClueBinding = ClueBinding.PER_USER_IDENTITY


@dataclass
class ScriptAst:
    story: AstStory | None
    scenes: list[AstScene]
    plots: list[AstPlot]
    diagnostics: list[Diagnostic]


# -- tokenizer ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t]+)
      | (?P<comment>\#.*)
      | (?P<string>"[^"\n]*")
      | (?P<number>-?\d+(?:\.(?!\.)\d+)?)
      | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>->|\.\.|[{}:,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str          # string | number | word | op | eol
    value: str
    line: int
    col: int

    @property
    def end_col(self) -> int:
        return self.col + max(len(self.value), 1)

    def span(self) -> Span:
        return Span(self.line, self.col, self.line, self.end_col)


def _tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if not m:
                if line[pos] == '"':
                    diags.append(Diagnostic(Severity.ERROR, "SyntaxError",
                                            "unterminated string",
                                            Span(lineno, pos + 1, lineno, len(line) + 1)))
                    pos = len(line)
                    continue
                diags.append(Diagnostic(Severity.ERROR, "SyntaxError",
                                        f"unexpected character {line[pos]!r}",
                                        Span(lineno, pos + 1, lineno, pos + 2)))
                pos += 1
                continue
            kind = m.lastgroup
            if kind not in ("ws", "comment"):
                value = m.group()
                if kind == "string":
                    value = value[1:-1]
                tokens.append(Token(kind, value, lineno, pos + 1))
            pos = m.end()
        tokens.append(Token("eol", "", lineno, len(line) + 1))
    return tokens, diags


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, src: ScriptSource):
        self.src = src
        self.tokens, self.diags = _tokenize(src.text)
        self.pos = 0

    # token plumbing

    def _peek(self) -> Token | None:
        while self.pos < len(self.tokens) and self.tokens[self.pos].kind == "eol":
            self.pos += 1
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> Token | None:
        tok = self._peek()
        if tok is not None:
            self.pos += 1
        return tok

    def _error(self, code: str, message: str, span: Span) -> None:
        self.diags.append(Diagnostic(Severity.ERROR, code, message, span))

    def _warn(self, code: str, message: str, span: Span) -> None:
        self.diags.append(Diagnostic(Severity.WARNING, code, message, span))

    def _sync_line(self, line: int) -> None:
        """Skip the remainder of a statement after an error."""
        while self.pos < len(self.tokens):
            tok = self.tokens[self.pos]
            if tok.line > line or (tok.kind == "op" and tok.value == "}"):
                return
            self.pos += 1

    def _skip_block(self) -> None:
        """Consume a balanced brace block for unknown top-level sections."""
        depth = 0
        while True:
            tok = self._next()
            if tok is None:
                return
            if tok.kind == "op" and tok.value == "{":
                depth += 1
            elif tok.kind == "op" and tok.value == "}":
                depth -= 1
                if depth <= 0:
                    return
            elif depth == 0 and tok.kind == "word" and tok.value in ("story", "scene", "plot"):
                self.pos -= 1
                return

    def _expect(self, kind: str, value: str | None = None, what: str = "") -> Token | None:
        tok = self._peek()
        if tok is None or tok.kind != kind or (value is not None and tok.value != value):
            where = tok.span() if tok else Span(1, 1, 1, 1)
            got = f"{tok.kind} {tok.value!r}" if tok else "end of file"
            self._error("SyntaxError", f"expected {what or value or kind}, got {got}", where)
            return None
        return self._next()

    def _int(self, what: str) -> int | None:
        tok = self._expect("number", what=what)
        if tok is None:
            return None
        if "." in tok.value:
            self._error("SyntaxError", f"{what} must be an integer", tok.span())
            return None
        return int(tok.value)

    def _count(self) -> tuple[int, int] | None:
        lo = self._int("frame count")
        if lo is None:
            return None
        tok = self._peek()
        if tok and tok.kind == "op" and tok.value == "..":
            self._next()
            hi = self._int("frame count upper bound")
            if hi is None:
                return None
            return (lo, hi)
        return (lo, lo)

    # grammar

    def parse(self) -> ScriptAst:
        story: AstStory | None = None
        scenes: list[AstScene] = []
        plots: list[AstPlot] = []
        while True:
            tok = self._peek()
            if tok is None:
                break
            if tok.kind == "word" and tok.value == "story":
                block = self._story_block()
                if block:
                    if story is None:
                        story = block
                    else:
                        self._error("SyntaxError", "duplicate story header", block.span)
            elif tok.kind == "word" and tok.value == "scene":
                block = self._scene_block()
                if block:
                    scenes.append(block)
            elif tok.kind == "word" and tok.value == "plot":
                block = self._plot_block()
                if block:
                    plots.append(block)
            elif tok.kind == "word":
                self._warn("UnknownBlock", f"unknown block {tok.value!r} skipped", tok.span())
                self._next()
                self._skip_block()
            else:
                self._error("SyntaxError", f"expected a block keyword, got {tok.value!r}",
                            tok.span())
                self._next()
        if story is None:
            self.diags.append(Diagnostic(Severity.ERROR, "MissingStoryHeader",
                                         "missing story header", Span(1, 1, 1, 1)))
        return ScriptAst(story, scenes, plots, self.diags)

    def _block_header(self, keyword: str) -> tuple[str, Token] | None:
        kw = self._next()  # the block keyword
        name_tok = self._expect("string", what=f"{keyword} name")
        if name_tok is None:
            self._sync_line(kw.line)
            return None
        if self._expect("op", "{") is None:
            self._sync_line(name_tok.line)
            return None
        return name_tok.value, kw

    def _story_block(self) -> AstStory | None:
        header = self._block_header("story")
        if header is None:
            return None
        name, kw = header
        story = AstStory(name, kw.span())
        while True:
            tok = self._peek()
            if tok is None:
                self._error("SyntaxError", "unterminated story block", kw.span())
                break
            if tok.kind == "op" and tok.value == "}":
                end = self._next()
                story.span = Span(kw.line, kw.col, end.line, end.end_col)
                break
            if tok.kind != "word":
                self._error("SyntaxError", f"unexpected token {tok.value!r}", tok.span())
                self._next()
                self._sync_line(tok.line)
                continue
            self._next()
            if tok.value == "rotation_degrees":
                v = self._int("rotation degrees")
                if v is not None:
                    story.rotation_degrees = v
            elif tok.value == "nominal_rotation_s":
                num = self._expect("number", what="nominal rotation seconds")
                if num is not None:
                    story.nominal_rotation_s = float(num.value)
            elif tok.value == "anchors":
                self._anchor_list(story)
            elif tok.value == "clue":
                ent = self._expect("string", what="clue entity")
                bind = self._expect("word", what="clue binding")
                if ent and bind:
                    if bind.value not in _BINDINGS:
                        self._error("SyntaxError",
                                    f"unknown clue binding {bind.value!r}", bind.span())
                    else:
                        story.clue_entity = ent.value
                        story.clue_binding = _BINDINGS[bind.value]
            else:
                self._error("SyntaxError", f"unknown story statement {tok.value!r}",
                            tok.span())
                self._sync_line(tok.line)
        return story

    def _anchor_list(self, story: AstStory) -> None:
        if self._expect("op", "{") is None:
            return
        while True:
            deg = self._int("anchor angle")
            if deg is None:
                return
            if self._expect("op", ":") is None:
                return
            age = self._int("anchor age")
            if age is None:
                return
            story.anchors.append((deg, age))
            tok = self._peek()
            if tok and tok.kind == "op" and tok.value == ",":
                self._next()
                continue
            self._expect("op", "}")
            return

    def _scene_block(self) -> AstScene | None:
        header = self._block_header("scene")
        if header is None:
            return None
        name, kw = header
        scene = AstScene(name, kw.span())
        while True:
            tok = self._peek()
            if tok is None:
                self._error("SyntaxError", "unterminated scene block", kw.span())
                break
            if tok.kind == "op" and tok.value == "}":
                end = self._next()
                scene.span = Span(kw.line, kw.col, end.line, end.end_col)
                break
            if tok.kind != "word":
                self._error("SyntaxError", f"unexpected token {tok.value!r}", tok.span())
                self._next()
                self._sync_line(tok.line)
                continue
            self._next()
            if tok.value == "segment":
                a = self._int("segment start")
                b = self._int("segment end")
                if a is not None and b is not None:
                    scene.segment = (a, b)
            elif tok.value == "age":
                v = self._int("age label")
                if v is not None:
                    scene.age = v
            elif tok.value == "frames":
                age = self._int("frame age")
                act = self._expect("word", what="action name")
                if age is None or act is None:
                    self._sync_line(tok.line)
                    continue
                if act.value not in _ACTIONS:
                    self._error("UnknownAction", f"unknown action {act.value!r}", act.span())
                    self._sync_line(tok.line)
                    continue
                count = self._count()
                if count is not None:
                    end_col = self.tokens[self.pos - 1].end_col
                    scene.frames.append(AstFrames(age, _ACTIONS[act.value], *count,
                                                  Span(tok.line, tok.col, tok.line, end_col)))
            elif tok.value == "on":
                g = self._expect("word", what="guard name")
                if g is None:
                    self._sync_line(tok.line)
                    continue
                if g.value not in _GUARDS:
                    self._error("UnknownGuard", f"unknown guard {g.value!r}", g.span())
                    self._sync_line(tok.line)
                    continue
                if self._expect("op", "->") is None:
                    self._sync_line(tok.line)
                    continue
                target = self._expect("string", what="plot name")
                if target is not None:
                    scene.guards.append(AstGuardClause(
                        _GUARDS[g.value], target.value,
                        Span(tok.line, tok.col, target.line, target.end_col)))
            else:
                self._error("SyntaxError", f"unknown scene statement {tok.value!r}",
                            tok.span())
                self._sync_line(tok.line)
        return scene

    def _plot_block(self) -> AstPlot | None:
        header = self._block_header("plot")
        if header is None:
            return None
        name, kw = header
        plot = AstPlot(name, kw.span())
        while True:
            tok = self._peek()
            if tok is None:
                self._error("SyntaxError", "unterminated plot block", kw.span())
                break
            if tok.kind == "op" and tok.value == "}":
                end = self._next()
                plot.span = Span(kw.line, kw.col, end.line, end.end_col)
                break
            if tok.kind != "word":
                self._error("SyntaxError", f"unexpected token {tok.value!r}", tok.span())
                self._next()
                self._sync_line(tok.line)
                continue
            self._next()
            if tok.value == "other":
                nm = self._expect("string", what="character name")
                if nm is None:
                    self._sync_line(tok.line)
                    continue
                count = self._count()
                if count is not None:
                    end_col = self.tokens[self.pos - 1].end_col
                    plot.others.append(AstOther(nm.value, *count,
                                                Span(tok.line, tok.col, tok.line, end_col)))
            elif tok.value == "rejoin":
                tgt = self._peek()
                if tgt and tgt.kind == "word" and tgt.value == "lap_boundary":
                    self._next()
                    plot.rejoin = "lap_boundary"
                else:
                    tgt = self._expect("string", what="rejoin scene name or lap_boundary")
                    if tgt is not None:
                        plot.rejoin = tgt.value
            elif tok.value == "ending":
                plot.ending = True
            else:
                self._error("SyntaxError", f"unknown plot statement {tok.value!r}",
                            tok.span())
                self._sync_line(tok.line)
        return plot


def parse(src: ScriptSource | str) -> ScriptAst:
    """Parse script text to an AST; never raises, diagnostics ride along."""
    if isinstance(src, str):
        src = ScriptSource(src)
    return _Parser(src).parse()


# -- compilation ----------------------------------------------------------------


@dataclass
class CompileResult:
    graph: StoryGraph | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.graph is not None and not has_errors(self.diagnostics)


def _fold_age(scene: AstScene) -> int:
    if scene.frames:
        return max(f.age for f in scene.frames)
    return scene.age if scene.age is not None else 0


def compile_ast(ast: ScriptAst) -> CompileResult:
    """Resolve names, fold frame entries into budgets, build the StoryGraph."""
    diags = list(ast.diagnostics)
    if has_errors(diags) or ast.story is None:
        return CompileResult(None, diags)
    story = ast.story

    def err(code: str, message: str, span: Span) -> None:
        diags.append(Diagnostic(Severity.ERROR, code, message, span))

    for block in [*ast.scenes, *ast.plots]:
        if block.name == START_ID:
            err("ReservedName", f"{START_ID!r} is reserved", block.span)

    scene_names = {s.name for s in ast.scenes}
    plot_names = {p.name for p in ast.plots}

    anchors_pairs = story.anchors or [(0, 1), (360, 90)]
    try:
        anchors = AgeAnchorTable(tuple((float(d), float(a)) for d, a in anchors_pairs))
    except ValueError as exc:
        err("BadAnchors", str(exc), story.span)
        return CompileResult(None, diags)

    nodes: list[NarrativeNode] = []
    edges: list[BranchEdge] = []
    budget_items: dict[tuple[int, Action, str | None], tuple[int, int, Span]] = {}

    def fold(age: int, action: Action, name: str | None, lo: int, hi: int, span: Span) -> None:
        key = (age, action, name)
        prev = budget_items.get(key)
        if prev is not None and prev[:2] != (lo, hi):
            err("DuplicateFrames",
                f"conflicting frame counts for age {age} {action.value}"
                + (f" {name!r}" if name else ""), span)
            return
        budget_items[key] = (lo, hi, span)

    ordered_scenes = sorted(ast.scenes, key=lambda s: s.segment[0] if s.segment else 0)
    scene_of_plot: dict[str, AstScene] = {}
    for scene in ast.scenes:
        if scene.segment is None:
            err("MissingSegment", f"scene {scene.name!r} has no segment", scene.span)
            continue
        try:
            segment = AngularSegment(float(scene.segment[0]), float(scene.segment[1]))
        except ValueError as exc:
            err("BadSegment", str(exc), scene.span)
            continue
        entries = tuple(FrameEntry(f.age, f.action, f.lo, f.hi) for f in scene.frames)
        nodes.append(NarrativeNode(scene.name, NodeKind.SPINE_SCENE,
                                   age_label=scene.age, segment=segment, entries=entries))
        for f in scene.frames:
            fold(f.age, f.action, None, f.lo, f.hi, f.span)
        for clause in scene.guards:
            if clause.target not in plot_names:
                err("UnresolvedPlot",
                    f"scene {scene.name!r} branches to unknown plot {clause.target!r}",
                    clause.span)
                continue
            edges.append(BranchEdge(scene.name, clause.target, clause.guard))
            scene_of_plot.setdefault(clause.target, scene)

    for plot in ast.plots:
        kind = NodeKind.ENDING if plot.ending else NodeKind.BRANCH_PLOT
        others = tuple(OtherEntry(o.name, o.lo, o.hi) for o in plot.others)
        nodes.append(NarrativeNode(plot.name, kind, others=others))
        host = scene_of_plot.get(plot.name)
        host_age = _fold_age(host) if host is not None else 0
        for o in plot.others:
            fold(host_age, Action.OTHER, o.name, o.lo, o.hi, o.span)
        if plot.ending:
            if plot.rejoin is not None:
                err("UnresolvedPlot", f"ending {plot.name!r} must not rejoin", plot.span)
            continue
        if plot.rejoin is None:
            err("UnresolvedPlot", f"plot {plot.name!r} is missing a rejoin target", plot.span)
        elif plot.rejoin == "lap_boundary":
            edges.append(BranchEdge(plot.name, START_ID, Guard.ALWAYS))
        elif plot.rejoin in scene_names:
            edges.append(BranchEdge(plot.name, plot.rejoin, Guard.ALWAYS))
        else:
            err("UnresolvedPlot",
                f"plot {plot.name!r} rejoins unknown scene {plot.rejoin!r}", plot.span)

    if not ordered_scenes or ordered_scenes[0].segment is None:
        err("MissingScenes", "script declares no placed scenes", story.span)
        return CompileResult(None, diags)

    nodes.insert(0, NarrativeNode(START_ID, NodeKind.START))
    edges.insert(0, BranchEdge(START_ID, ordered_scenes[0].name, Guard.ALWAYS))

    if has_errors(diags):
        return CompileResult(None, diags)

    budgets = FrameBudget.from_items(
        (age, action, name, lo, hi)
        for (age, action, name), (lo, hi, _) in budget_items.items())
    graph = StoryGraph(
        name=story.name,
        nodes=tuple(nodes),
        edges=tuple(edges),
        anchors=anchors,
        budgets=budgets,
        clue=ClueSpec(story.clue_entity, story.clue_binding),
        rotation_degrees=float(story.rotation_degrees),
        nominal_rotation_s=story.nominal_rotation_s,
    )
    diags.extend(validate(graph))
    if has_errors(diags):
        return CompileResult(None, diags)
    return CompileResult(graph, diags)


def compile_source(src: ScriptSource | str) -> CompileResult:
    return compile_ast(parse(src))


# -- serialization ----------------------------------------------------------------


def _fmt_deg(x: float) -> str:
    if x != int(x):
        raise ValueError(f"DSL requires integral degrees, got {x}")
    return str(int(x))


def _fmt_count(lo: int, hi: int) -> str:
    return str(lo) if lo == hi else f"{lo}..{hi}"

_ACTION_ORDER = [Action.AGE_CHANGE, Action.WALK, Action.PAUSE, Action.WAVE_HANDS]


def serialize(graph: StoryGraph) -> ScriptSource:
    """Emit canonical script text; parse(serialize(g)) compiles back isomorphic."""
    out: list[str] = []
    anchors = ", ".join(f"{_fmt_deg(d)}:{_fmt_deg(a)}" for d, a in graph.anchors.anchors)
    out.append(f'story "{graph.name}" {{')
    out.append(f"  rotation_degrees {_fmt_deg(graph.rotation_degrees)}")
    out.append(f"  nominal_rotation_s {graph.nominal_rotation_s}")
    out.append(f"  anchors {{ {anchors} }}")
    out.append(f'  clue "{graph.clue.entity}" {graph.clue.binding.value}')
    out.append("}")

    emitted: list[str] = []
    for scene in graph.scenes_in_order():
        out.append("")
        out.append(f'scene "{scene.id}" {{')
        out.append(f"  segment {_fmt_deg(scene.segment.start_deg)} {_fmt_deg(scene.segment.end_deg)}")
        if scene.age_label is not None:
            out.append(f"  age {scene.age_label}")
        for entry in sorted(scene.entries, key=lambda e: (e.age, _ACTION_ORDER.index(e.action))):
            out.append(f"  frames {entry.age} {entry.action.value} {_fmt_count(entry.lo, entry.hi)}")
        guards = graph.guard_edges(scene.id)
        for guard in (Guard.KEEP_WALKING, Guard.STOP_WALKING):
            edge = guards.get(guard)
            if edge is not None:
                out.append(f'  on {guard.value} -> "{edge.dst}"')
                if edge.dst not in emitted:
                    emitted.append(edge.dst)
        out.append("}")

    for plot_id in emitted:
        plot = graph.node(plot_id)
        out.append("")
        out.append(f'plot "{plot.id}" {{')
        for o in plot.others:
            out.append(f'  other "{o.name}" {_fmt_count(o.lo, o.hi)}')
        if plot.kind is NodeKind.ENDING:
            out.append("  ending")
        else:
            target = graph.rejoin_target(plot.id)
            if target == START_ID:
                out.append("  rejoin lap_boundary")
            else:
                out.append(f'  rejoin "{target}"')
        out.append("}")

    return ScriptSource("\n".join(out) + "\n", origin="<serialized>")


# -- canonical fixture ------------------------------------------------------------

CANONICAL_SCRIPT = '''\
# Still Walking: one rotation of the screen walks a woman through her life.
story "still_walking" {
  rotation_degrees 360
  nominal_rotation_s 40.0
  anchors { 0:1, 72:4, 144:8, 216:18, 288:30, 360:90 }
  clue "shadow" per_user_identity
}

scene "infancy" {
  segment 0 90
  age 4
  frames 1 pause 4
  frames 4 age_change 30
  frames 4 walk 12
  frames 4 pause 4
  frames 4 wave_hands 12
  on keep_walking -> "catch_butterfly"
  on stop_walking -> "butterfly_flies_away"
}

scene "juvenile" {
  segment 90 180
  age 8
  frames 8 age_change 35
  frames 8 walk 35
  frames 8 pause 4
  frames 8 wave_hands 19
  on keep_walking -> "walk_with_classmate"
  on stop_walking -> "classmate_gone"
}

scene "youth" {
  segment 180 270
  age 18
  frames 18 age_change 34
  frames 18 walk 20
  frames 18 pause 4
  frames 18 wave_hands 20
  on keep_walking -> "chase_boy"
  on stop_walking -> "boy_b_appears"
}

scene "middle_old" {
  segment 270 360
  age 40
  frames 30 age_change 30
  frames 30 pause 4
  frames 30 wave_hands 24
  frames 90 age_change 66
  frames 90 walk 65
  frames 90 pause 4
  on keep_walking -> "become_daughter"
}

plot "catch_butterfly" {
  other "butterfly" 31
  rejoin "juvenile"
}

plot "butterfly_flies_away" {
  rejoin "juvenile"
}

plot "walk_with_classmate" {
  other "classmates" 10..35
  rejoin "youth"
}

plot "classmate_gone" {
  rejoin "youth"
}

plot "chase_boy" {
  other "boy_a" 20
  rejoin "middle_old"
}

plot "boy_b_appears" {
  other "boy_b" 22
  rejoin "middle_old"
}

plot "become_daughter" {
  other "baby" 4..60
  rejoin lap_boundary
}
'''


def canonical_script() -> ScriptSource:
    """The built-in four-scene life-circle script."""
    return ScriptSource(CANONICAL_SCRIPT, origin="<canonical>")


def canonical_graph() -> StoryGraph:
    result = compile_source(canonical_script())
    if result.graph is None:  # pragma: no cover - fixture must always compile
        raise RuntimeError("canonical script failed to compile")
    return result.graph


# -- graph isomorphism (round-trip oracle) -----------------------------------------


def canonical_form(graph: StoryGraph):
    """Structure-only form with node ids relabeled by BFS order from start.

    Two graphs are isomorphic in every way that matters to the runtime iff
    their canonical forms are equal.
    """
    start = graph.start_node()
    order: dict[str, int] = {}
    if start is not None:
        frontier = [start.id]
        order[start.id] = 0
        while frontier:
            nid = frontier.pop(0)
            for e in sorted(graph.out_edges(nid), key=lambda e: (e.guard.value, e.dst)):
                if e.dst not in order:
                    order[e.dst] = len(order)
                    frontier.append(e.dst)
    for n in sorted(graph.nodes, key=lambda n: n.id):
        if n.id not in order:
            order[n.id] = len(order)

    def node_form(n: NarrativeNode):
        seg = (n.segment.start_deg, n.segment.end_deg) if n.segment else None
        return (order[n.id], n.kind.value, n.age_label, seg,
                tuple(sorted((e.age, e.action.value, e.lo, e.hi) for e in n.entries)),
                tuple(sorted((o.name, o.lo, o.hi) for o in n.others)))

    return (
        graph.name,
        graph.rotation_degrees,
        graph.nominal_rotation_s,
        graph.anchors.anchors,
        graph.budgets.cells,
        (graph.clue.entity, graph.clue.binding.value),
        tuple(sorted(node_form(n) for n in graph.nodes)),
        tuple(sorted((order[e.src], order[e.dst], e.guard.value) for e in graph.edges)),
    )


def isomorphic(a: StoryGraph, b: StoryGraph) -> bool:
    return canonical_form(a) == canonical_form(b)
