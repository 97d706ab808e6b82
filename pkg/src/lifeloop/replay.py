"""Offline replay of a trace through the engine, plus the .directives format."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import CameraDirective, Engine, EngineConfig, FireEvent
from .story import StoryGraph
from .traces import Trace

DIRECTIVES_FORMAT = "lifeloop-directives/1"


@dataclass(frozen=True)
class LapRecord:
    index: int
    completed_t: float
    wall_time_s: float
    path: tuple[tuple[str, str], ...]  # (stage, guard) in fire order


@dataclass(frozen=True)
class ReplaySummary:
    laps: tuple[LapRecord, ...]
    fires: tuple[FireEvent, ...]
    dwell_s: tuple[tuple[str, float], ...]
    directive_count: int
    duration_s: float

    @property
    def lap_times(self) -> tuple[float, ...]:
        return tuple(lap.wall_time_s for lap in self.laps)

    @property
    def guards(self) -> tuple[str, ...]:
        return tuple(f.guard for f in self.fires)


def replay(trace: Trace, graph: StoryGraph,
           config: EngineConfig | None = None) -> tuple[list[CameraDirective], ReplaySummary]:
    """Step the engine through every sample; equals the live session fold."""
    engine = Engine(graph, config)
    state = engine.init()
    directives: list[CameraDirective] = []
    dwell: dict[str, float] = {s.id: 0.0 for s in graph.scenes_in_order()}
    for sample in trace.samples:
        prev_t = state.t
        state, emitted = engine.step(state, sample)
        directives.extend(emitted)
        dwell[state.stage_id] = dwell.get(state.stage_id, 0.0) + (sample.t - prev_t)

    laps = []
    prev_mark = 0.0
    for i, mark in enumerate(state.lap_marks):
        path = tuple((f.stage, f.guard) for f in state.fire_log if f.lap == i)
        laps.append(LapRecord(i, mark, mark - prev_mark, path))
        prev_mark = mark
    summary = ReplaySummary(
        laps=tuple(laps),
        fires=state.fire_log,
        dwell_s=tuple((s.id, dwell[s.id]) for s in graph.scenes_in_order()),
        directive_count=len(directives),
        duration_s=trace.duration_s,
    )
    return directives, summary


# -- directive file format ---------------------------------------------------------


def directives_to_text(directives: list[CameraDirective],
                       script_hash: str = "-", config_hash: str = "-",
                       trace_hash: str = "-") -> str:
    lines = [
        f"#format={DIRECTIVES_FORMAT}",
        f"#script_hash={script_hash}",
        f"#config_hash={config_hash}",
        f"#trace_hash={trace_hash}",
    ]
    lines.extend(d.to_line() for d in directives)
    return "\n".join(lines) + "\n"


def directives_from_text(text: str) -> list[CameraDirective]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        out.append(CameraDirective.from_line(line))
    return out


def write_directives(directives: list[CameraDirective], path: str, **hashes) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(directives_to_text(directives, **hashes))


def summary_lines(summary: ReplaySummary) -> list[str]:
    """Stable human-readable summary, one fact per line."""
    lines = [f"laps={len(summary.laps)}"]
    for lap in summary.laps:
        path = ",".join(f"{stage}:{guard}" for stage, guard in lap.path)
        lines.append(f"lap[{lap.index}] time={lap.wall_time_s:.3f} path={path}")
    dwell = " ".join(f"{stage}={secs:.3f}" for stage, secs in summary.dwell_s)
    lines.append(f"dwell {dwell}")
    lines.append(f"directives={summary.directive_count}")
    lines.append(f"duration={summary.duration_s:.3f}")
    return lines
