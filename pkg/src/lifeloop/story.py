"""Narrative graph model for a rotation-driven circular story.

A story is a set of spine scenes laid out on angular segments of one full
rotation, plus branch plots hanging off each scene. Guards on the edges
(keep walking / stop walking) decide which plot a visitor sees; plots rejoin
the spine or end the story. One full rotation is a lap.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .diagnostics import Diagnostic, Severity


class NodeKind(Enum):
    START = "start"
    SPINE_SCENE = "spine_scene"
    BRANCH_PLOT = "branch_plot"
    ENDING = "ending"


class Guard(Enum):
    KEEP_WALKING = "keep_walking"
    STOP_WALKING = "stop_walking"
    ALWAYS = "always"


class Action(Enum):
    AGE_CHANGE = "age_change"
    WALK = "walk"
    PAUSE = "pause"
    WAVE_HANDS = "wave_hands"
    OTHER = "other"


class Structure(Enum):
    LINEAR = "linear"
    TREE = "tree"
    NETWORK = "network"
    CIRCULAR_NETWORK = "circular_network"


class ClueBinding(Enum):
    PER_USER_IDENTITY = "per_user_identity"
    FIXED = "fixed"


class MalformedGraphError(ValueError):
    """Graph refers to unknown ids or cannot be classified."""


class CycleWithoutProgressError(ValueError):
    """Path enumeration found a cycle that never reaches the lap boundary."""


@dataclass(frozen=True)
class AngularSegment:
    """Arc of the rotation owned by one spine scene, degrees, start < end."""

    start_deg: float
    end_deg: float

    def __post_init__(self) -> None:
        if not (0 <= self.start_deg < self.end_deg <= 360):
            raise ValueError(f"bad segment [{self.start_deg}, {self.end_deg})")

    @property
    def width(self) -> float:
        return self.end_deg - self.start_deg

    def contains(self, deg: float) -> bool:
        return self.start_deg <= deg < self.end_deg

    def progress(self, deg: float) -> float:
        return (deg - self.start_deg) / self.width


@dataclass(frozen=True)
class FrameEntry:
    """Frame count a scene declares for one (age, action) cell; lo..hi range."""

    age: int
    action: Action
    lo: int
    hi: int


@dataclass(frozen=True)
class OtherEntry:
    """Frames for a supporting character inside a branch plot."""

    name: str
    lo: int
    hi: int


@dataclass(frozen=True)
class NarrativeNode:
    id: str
    kind: NodeKind
    age_label: int | None = None
    segment: AngularSegment | None = None
    entries: tuple[FrameEntry, ...] = ()
    others: tuple[OtherEntry, ...] = ()


@dataclass(frozen=True)
class BranchEdge:
    src: str
    dst: str
    guard: Guard


@dataclass(frozen=True)
class AgeAnchorTable:
    """Angle-to-age interpolation anchors over one lap, (deg, years) pairs."""

    anchors: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        degs = [a for a, _ in self.anchors]
        ages = [y for _, y in self.anchors]
        if len(self.anchors) < 2:
            raise ValueError("need at least two anchors")
        if degs[0] != 0 or degs[-1] != 360:
            raise ValueError("anchors must span 0..360 degrees")
        if any(b <= a for a, b in zip(degs, degs[1:])):
            raise ValueError("anchor angles must be strictly increasing")
        if any(b <= a for a, b in zip(ages, ages[1:])):
            raise ValueError("anchor ages must be strictly increasing")

    @property
    def first_age(self) -> float:
        return self.anchors[0][1]


def age_at(anchors: AgeAnchorTable, cumulative_deg: float) -> float:
    """Piecewise-linear age for a cumulative rotation, wrapping every lap."""
    if cumulative_deg < 0:
        raise ValueError("cumulative_deg must be >= 0")
    d = cumulative_deg % 360.0
    degs = [a for a, _ in anchors.anchors]
    i = bisect.bisect_right(degs, d) - 1
    if i >= len(degs) - 1:
        i = len(degs) - 2
    (d0, y0), (d1, y1) = anchors.anchors[i], anchors.anchors[i + 1]
    return y0 + (d - d0) * (y1 - y0) / (d1 - d0)


class ZeroBudgetError(LookupError):
    """No frames are budgeted for the requested clip."""


@dataclass(frozen=True)
class FrameBudget:
    """Frame counts per (age, action) cell; supporting characters carry a name.

    Ranged cells keep lo..hi; scheduling uses hi, validation lower bounds use lo.
    Absent cells budget zero frames.
    """

    cells: tuple[tuple[tuple[int, str, str | None], tuple[int, int]], ...]

    @staticmethod
    def _key(age: int, action: Action, name: str | None) -> tuple[int, str, str | None]:
        return (age, action.value, name)

    @classmethod
    def from_items(
        cls, items: Iterable[tuple[int, Action, str | None, int, int]]
    ) -> "FrameBudget":
        cells = {}
        for age, action, name, lo, hi in items:
            cells[cls._key(age, action, name)] = (lo, hi)
        return cls(tuple(sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or ""))))

    def _lookup(self, age: int, action: Action, name: str | None) -> tuple[int, int]:
        key = self._key(age, action, name)
        for k, v in self.cells:
            if k == key:
                return v
        return (0, 0)

    def frame_range(self, age: int, action: Action, name: str | None = None) -> tuple[int, int]:
        return self._lookup(age, action, name)

    def frames(self, age: int, action: Action, name: str | None = None) -> int:
        """Scheduling count: max of the stored range, 0 when absent."""
        return self._lookup(age, action, name)[1]

    def frames_other(self, name: str) -> int:
        for (age, action, nm), (lo, hi) in self.cells:
            if action == Action.OTHER.value and nm == name:
                return hi
        return 0

    def ages(self) -> list[int]:
        return sorted({k[0] for k, _ in self.cells})


@dataclass(frozen=True)
class ClueSpec:
    """Story element that binds the visitor to the protagonist."""

    entity: str
    binding: ClueBinding


@dataclass(frozen=True)
class StoryGraph:
    name: str
    nodes: tuple[NarrativeNode, ...]
    edges: tuple[BranchEdge, ...]
    anchors: AgeAnchorTable
    budgets: FrameBudget
    clue: ClueSpec
    rotation_degrees: float = 360.0
    nominal_rotation_s: float = 40.0

    # -- lookup helpers ----------------------------------------------------

    def node(self, node_id: str) -> NarrativeNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise MalformedGraphError(f"unknown node id {node_id!r}")

    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}

    def start_node(self) -> NarrativeNode | None:
        starts = [n for n in self.nodes if n.kind is NodeKind.START]
        return starts[0] if len(starts) == 1 else None

    def scenes_in_order(self) -> list[NarrativeNode]:
        scenes = [n for n in self.nodes if n.kind is NodeKind.SPINE_SCENE and n.segment]
        return sorted(scenes, key=lambda n: n.segment.start_deg)

    def scene_at(self, deg: float) -> NarrativeNode | None:
        for n in self.scenes_in_order():
            if n.segment.contains(deg % 360.0):
                return n
        return None

    def plots(self) -> list[NarrativeNode]:
        return [n for n in self.nodes if n.kind in (NodeKind.BRANCH_PLOT, NodeKind.ENDING)]

    def out_edges(self, node_id: str) -> list[BranchEdge]:
        return [e for e in self.edges if e.src == node_id]

    def guard_edges(self, scene_id: str) -> dict[Guard, BranchEdge]:
        out = {}
        for e in self.out_edges(scene_id):
            if e.guard in (Guard.KEEP_WALKING, Guard.STOP_WALKING):
                out[e.guard] = e
        return out

    def rejoin_target(self, plot_id: str) -> str | None:
        for e in self.out_edges(plot_id):
            if e.guard is Guard.ALWAYS:
                return e.dst
        return None

    def nominal_speed(self) -> float:
        """Degrees per second of one lap at the nominal rotation time."""
        return self.rotation_degrees / self.nominal_rotation_s


# -- structural classification ---------------------------------------------


def _adjacency(nodes: Sequence[NarrativeNode], edges: Sequence[BranchEdge]):
    ids = [n.id for n in nodes]
    idset = set(ids)
    if len(ids) != len(idset):
        raise MalformedGraphError("duplicate node ids")
    succ: dict[str, list[str]] = {i: [] for i in ids}
    indeg = {i: 0 for i in ids}
    for e in edges:
        if e.src not in idset or e.dst not in idset:
            raise MalformedGraphError(f"dangling edge {e.src!r}->{e.dst!r}")
        succ[e.src].append(e.dst)
        indeg[e.dst] += 1
    return succ, indeg


def _has_cycle(succ: dict[str, list[str]]) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = dict.fromkeys(succ, WHITE)
    for root in succ:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GRAY:
                    return True
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return False


def _reaches(succ: dict[str, list[str]], src: str, dst: str) -> bool:
    """True when dst is reachable from src following at least one edge."""
    seen = set()
    frontier = list(succ[src])
    while frontier:
        n = frontier.pop()
        if n == dst:
            return True
        if n in seen:
            continue
        seen.add(n)
        frontier.extend(succ[n])
    return False


def _find_start(nodes: Sequence[NarrativeNode], indeg: dict[str, int]) -> str | None:
    starts = [n.id for n in nodes if n.kind is NodeKind.START]
    if len(starts) == 1:
        return starts[0]
    roots = [i for i, d in indeg.items() if d == 0]
    return roots[0] if len(roots) == 1 else None


def classify_structure(
    nodes: Sequence[NarrativeNode], edges: Sequence[BranchEdge]
) -> Structure:
    """Classify a node/edge set as linear, tree, network or circular network.

    Circular network requires a cycle passing through the start node; a cycle
    that avoids it has no lap boundary and is rejected as malformed.
    """
    if not nodes:
        raise MalformedGraphError("empty graph")
    succ, indeg = _adjacency(nodes, edges)
    outdeg = {i: len(s) for i, s in succ.items()}
    cyclic = _has_cycle(succ)

    if cyclic:
        start = _find_start(nodes, indeg)
        if start is not None and _reaches(succ, start, start):
            return Structure.CIRCULAR_NETWORK
        raise MalformedGraphError("cycle does not pass through the start node")

    if all(d <= 1 for d in indeg.values()) and all(d <= 1 for d in outdeg.values()):
        return Structure.LINEAR
    roots = [i for i, d in indeg.items() if d == 0]
    if len(roots) == 1 and all(d <= 1 for d in indeg.values()):
        return Structure.TREE
    if any(d >= 2 for d in indeg.values()):
        return Structure.NETWORK
    raise MalformedGraphError("acyclic graph with multiple roots and no merges")


def graph_structure(graph: StoryGraph) -> Structure:
    return classify_structure(graph.nodes, graph.edges)


# -- validation --------------------------------------------------------------


def _err(code: str, message: str, subject: str | None = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, subject=subject)


def validate(graph: StoryGraph) -> list[Diagnostic]:
    """Check every structural invariant; empty result means the graph is sound."""
    diags: list[Diagnostic] = []
    ids = [n.id for n in graph.nodes]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        diags.append(_err("DuplicateId", "node id is not unique", dup))
    idset = set(ids)

    for e in graph.edges:
        if e.src not in idset or e.dst not in idset:
            diags.append(_err("MalformedGraph", "edge references unknown node",
                              f"{e.src}->{e.dst}"))
    if any(d.code == "MalformedGraph" or d.code == "DuplicateId" for d in diags):
        return diags

    starts = [n for n in graph.nodes if n.kind is NodeKind.START]
    if len(starts) != 1:
        diags.append(_err("StartCount", f"expected exactly one start node, found {len(starts)}"))

    scenes = [n for n in graph.nodes if n.kind is NodeKind.SPINE_SCENE]
    for s in scenes:
        if s.segment is None:
            diags.append(_err("MissingSegment", "spine scene lacks an angular segment", s.id))
    placed = sorted((s for s in scenes if s.segment), key=lambda n: n.segment.start_deg)
    for a, b in zip(placed, placed[1:]):
        if b.segment.start_deg < a.segment.end_deg:
            diags.append(_err("SegmentOverlap",
                              f"segments of {a.id!r} and {b.id!r} overlap",
                              b.id))

    for s in scenes:
        guards = [e.guard for e in graph.out_edges(s.id)
                  if e.guard in (Guard.KEEP_WALKING, Guard.STOP_WALKING)]
        if guards.count(Guard.KEEP_WALKING) != 1:
            diags.append(_err("GuardConflict",
                              "scene must have exactly one keep_walking edge", s.id))
        if guards.count(Guard.STOP_WALKING) > 1:
            diags.append(_err("GuardConflict",
                              "scene has more than one stop_walking edge", s.id))

    for p in graph.plots():
        rejoins = [e for e in graph.out_edges(p.id) if e.guard is Guard.ALWAYS]
        if p.kind is NodeKind.ENDING:
            if rejoins:
                diags.append(_err("UnresolvedPlot", "ending must not rejoin", p.id))
            continue
        if len(rejoins) != 1:
            diags.append(_err("UnresolvedPlot",
                              "branch plot needs exactly one rejoin target", p.id))
            continue
        target = graph.node(rejoins[0].dst)
        if target.kind not in (NodeKind.SPINE_SCENE, NodeKind.START):
            diags.append(_err("UnresolvedPlot",
                              "rejoin target must be a spine scene or the lap boundary", p.id))

    if len(starts) == 1:
        succ, _ = _adjacency(graph.nodes, graph.edges)
        seen = {starts[0].id}
        frontier = [starts[0].id]
        while frontier:
            for nxt in succ[frontier.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        for n in graph.nodes:
            if n.id not in seen:
                diags.append(_err("Unreachable", "node is unreachable from start", n.id))

    for age in graph.budgets.ages():
        if graph.budgets.frames(age, Action.PAUSE) != 4:
            diags.append(_err("PauseBudget",
                              f"pause budget at age {age} must be 4 frames"))

    lo_bad = [k for k, (lo, hi) in graph.budgets.cells if lo < 0 or hi < lo]
    for key in lo_bad:
        diags.append(_err("BadBudget", f"frame range invalid for {key}"))

    return diags


def graph_to_dict(graph: StoryGraph) -> dict:
    """JSON-safe dump of a compiled graph (stable key order for diffing)."""
    return {
        "name": graph.name,
        "rotation_degrees": graph.rotation_degrees,
        "nominal_rotation_s": graph.nominal_rotation_s,
        "anchors": [[d, a] for d, a in graph.anchors.anchors],
        "clue": {"entity": graph.clue.entity, "binding": graph.clue.binding.value},
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "age_label": n.age_label,
                "segment": ([n.segment.start_deg, n.segment.end_deg]
                            if n.segment else None),
                "entries": [[e.age, e.action.value, e.lo, e.hi] for e in n.entries],
                "others": [[o.name, o.lo, o.hi] for o in n.others],
            }
            for n in graph.nodes
        ],
        "edges": [{"from": e.src, "to": e.dst, "guard": e.guard.value}
                  for e in graph.edges],
        "budgets": [{"age": k[0], "action": k[1], "name": k[2], "lo": lo, "hi": hi}
                    for k, (lo, hi) in graph.budgets.cells],
    }


# -- path enumeration --------------------------------------------------------

Path = tuple[tuple[str, str], ...]


def paths_enumerate(graph_or_nodes, edges: Sequence[BranchEdge] | None = None) -> list[Path]:
    """Every distinct lap-completing sequence of (scene id, guard) choices.

    A path completes when it returns to the start node (lap boundary) or hits
    a node with no outgoing edges. Cycles that avoid the start never complete
    a lap and raise CycleWithoutProgressError.
    """
    if edges is None:
        nodes = graph_or_nodes.nodes
        edges = graph_or_nodes.edges
    else:
        nodes = graph_or_nodes
    if not nodes:
        raise CycleWithoutProgressError("empty graph has no lap boundary")
    succ, indeg = _adjacency(nodes, edges)
    start = _find_start(nodes, indeg)
    if start is None:
        raise CycleWithoutProgressError("no start node to anchor the lap boundary")

    guard_order = {Guard.KEEP_WALKING: 0, Guard.STOP_WALKING: 1, Guard.ALWAYS: 2}
    out: dict[str, list[BranchEdge]] = {n.id: [] for n in nodes}
    for e in edges:
        out[e.src].append(e)
    for lst in out.values():
        lst.sort(key=lambda e: (guard_order[e.guard], e.dst))

    results: list[Path] = []

    def walk(node: str, visited: frozenset[str], path: Path) -> None:
        edges_here = out[node]
        if not edges_here:
            results.append(path)
            return
        for e in edges_here:
            step = path
            if e.guard in (Guard.KEEP_WALKING, Guard.STOP_WALKING):
                step = path + ((node, e.guard.value),)
            if e.dst == start:
                results.append(step)
                continue
            if e.dst in visited:
                raise CycleWithoutProgressError(
                    f"cycle through {e.dst!r} avoids the lap boundary")
            walk(e.dst, visited | {e.dst}, step)

    walk(start, frozenset({start}), ())
    return results
