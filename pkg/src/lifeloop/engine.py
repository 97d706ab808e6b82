"""Deterministic stepped runtime for a compiled story graph.

Each behavior sample advances the engine: rotation moves the protagonist
along the spine, a detected pause inside the trigger window fires the
stop-walking branch, crossing a stage boundary fires keep-walking. Branch
plots play as wall-clock cutscenes during which rotation is buffered and
applied at rejoin. The directive stream is a pure function of
(graph, config, samples).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum

from . import behavior
from .behavior import (
    BehaviorSample,
    CameraAngle,
    CameraMovement,
    CameraShot,
    HorizontalAngle,
    MotionEstimator,
    MotionForm,
    MotionState,
    MovementKind,
    Moving,
    Paused,
    VerticalAngle,
    bind_clue,
    map_distance_to_shot,
    map_motion_to_camera,
    map_pose_to_angle,
    shortest_delta,
)
from .story import (
    Action,
    FrameBudget,
    Guard,
    NarrativeNode,
    StoryGraph,
    ZeroBudgetError,
    age_at,
)


class EngineError(Exception):
    pass


class NoSceneAtZeroError(EngineError):
    """The lap starts at 0 degrees; some scene must own that angle."""


class NonMonotonicTimeError(EngineError):
    pass


class UnknownPlotError(EngineError):
    pass


class ReversePolicy(Enum):
    SCRUB = "scrub"    # frame may scrub backward inside the stage
    FREEZE = "freeze"  # reverse rotation is ignored entirely


@dataclass(frozen=True)
class EngineConfig:
    pause_enter_deg_s: float = 2.0
    pause_exit_deg_s: float = 3.0
    pause_dwell_s: float = 1.0
    smoothing: float = 0.3
    trigger_window: float = 0.2
    reverse_policy: ReversePolicy = ReversePolicy.SCRUB
    budget_rule: str = "max"   # schedule against max or min of a frame range
    cutscene_fps: float = 12.0
    shot_bands: tuple[float, float, float] = behavior.DEFAULT_SHOT_BANDS
    frontal_max_deg: float = 30.0
    side_max_deg: float = 75.0
    push_slowly_factor: float = 3.0
    heartbeat_s: float = 5.0
    idle_timeout_s: float = 120.0

    def __post_init__(self) -> None:
        if not (0 < self.trigger_window < 1):
            raise ValueError("trigger_window must be in (0, 1)")
        for name in ("pause_enter_deg_s", "pause_exit_deg_s", "pause_dwell_s",
                     "smoothing", "cutscene_fps", "push_slowly_factor",
                     "heartbeat_s", "idle_timeout_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.budget_rule not in ("max", "min"):
            raise ValueError("budget_rule must be 'max' or 'min'")

    def to_dict(self) -> dict:
        return {
            "pause_enter_deg_s": self.pause_enter_deg_s,
            "pause_exit_deg_s": self.pause_exit_deg_s,
            "pause_dwell_s": self.pause_dwell_s,
            "smoothing": self.smoothing,
            "trigger_window": self.trigger_window,
            "reverse_policy": self.reverse_policy.value,
            "budget_rule": self.budget_rule,
            "cutscene_fps": self.cutscene_fps,
            "shot_bands": list(self.shot_bands),
            "frontal_max_deg": self.frontal_max_deg,
            "side_max_deg": self.side_max_deg,
            "push_slowly_factor": self.push_slowly_factor,
            "heartbeat_s": self.heartbeat_s,
            "idle_timeout_s": self.idle_timeout_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        kwargs = dict(data)
        if "reverse_policy" in kwargs:
            kwargs["reverse_policy"] = ReversePolicy(kwargs["reverse_policy"])
        if "shot_bands" in kwargs:
            kwargs["shot_bands"] = tuple(kwargs["shot_bands"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "EngineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class CameraDirective:
    """One render instruction for the client."""

    t: float
    clip: str
    frame: int
    shot: CameraShot
    angle: CameraAngle
    movement: CameraMovement
    form: MotionForm
    clue: str
    transition: str  # "None" | "MatchCut"

    def to_line(self) -> str:
        return ",".join([
            f"{self.t:.3f}",
            self.clip,
            str(self.frame),
            self.shot.value,
            self.shot.narrative_role,
            self.angle.vertical.value,
            self.angle.horizontal.value,
            self.movement.kind.value,
            f"{self.movement.speed_deg_s:.3f}",
            self.form.wire,
            self.clue,
            self.transition,
        ])

    @classmethod
    def from_line(cls, line: str) -> "CameraDirective":
        parts = line.rstrip("\n").split(",")
        if len(parts) != 12:
            raise ValueError(f"directive line needs 12 fields, got {len(parts)}")
        (t, clip, frame, shot, _role, vert, horiz, kind, speed,
         form, clue, transition) = parts
        return cls(
            t=float(t), clip=clip, frame=int(frame), shot=CameraShot(shot),
            angle=CameraAngle(VerticalAngle(vert), HorizontalAngle(horiz)),
            movement=CameraMovement(MovementKind(kind), float(speed)),
            form=MotionForm.from_wire(form), clue=clue, transition=transition)


@dataclass(frozen=True)
class FireEvent:
    lap: int
    stage: str
    guard: str
    plot: str
    t: float


@dataclass(frozen=True)
class EngineState:
    t: float
    cumulative_deg: float
    lap: int
    stage_id: str
    age: float
    local_progress: float
    mode: str                      # "spine" | "cutscene"
    plot_id: str | None
    cutscene_t: float
    buffer_deg: float
    motion: MotionState
    est: tuple                     # estimator internals
    fired: tuple[str, ...]         # stages decided this lap
    fire_log: tuple[FireEvent, ...]
    lap_marks: tuple[float, ...]   # wall time at each lap completion
    prev_clip: str | None = None
    prev_movement: str | None = None
    prev_form: str | None = None
    prev_user_moving: bool = False
    pending_guard: str | None = None


def schedule_frame(age: int, action: Action, local_progress: float,
                   budgets: FrameBudget, name: str | None = None,
                   budget_rule: str = "max") -> int:
    """Frame index for a clip position; raises ZeroBudgetError when absent."""
    lo, hi = budgets.frame_range(age, action, name)
    n = hi if budget_rule == "max" else lo
    if n <= 0:
        raise ZeroBudgetError(f"no frames for age {age} {action.value}")
    return _frame_index(local_progress, n)


def _frame_index(progress: float, n: int) -> int:
    return min(max(math.floor(progress * n), 0), n - 1)


# Snap tolerance for stage boundaries: telescoped per-sample deltas drift by
# ~1e-12 deg over a lap, so a sample meant to land on a boundary must still
# cross it. Far below any physical per-sample rotation.
_BOUNDARY_EPS = 1e-6


def montage_transition(prev: CameraDirective | None, nxt: CameraDirective,
                       prev_user_moving: bool, next_user_moving: bool) -> str:
    """Match-cut across a clip boundary when camera or user motion carries over."""
    if prev is None or prev.clip == nxt.clip:
        return "None"
    if prev.movement.kind == nxt.movement.kind and prev.form == nxt.form:
        return "MatchCut"
    if prev_user_moving and next_user_moving:
        return "MatchCut"
    return "None"


@dataclass(frozen=True)
class _PlotInfo:
    clips: tuple[tuple[str, int], ...]  # (clip id, frame count) in play order
    total_frames: int
    duration_s: float
    rejoin: str | None


class Engine:
    """Holds the compiled graph and config; all session state lives in EngineState."""

    def __init__(self, graph: StoryGraph, config: EngineConfig | None = None):
        self.graph = graph
        self.config = config or EngineConfig()
        self._scenes = graph.scenes_in_order()
        if not self._scenes or not self._scenes[0].segment.contains(0.0):
            raise NoSceneAtZeroError("no spine scene covers 0 degrees")
        edge = 0.0
        for scene in self._scenes:
            if scene.segment.start_deg != edge:
                raise EngineError(f"spine segments leave a gap before {scene.id!r}")
            edge = scene.segment.end_deg
        if edge != graph.rotation_degrees:
            raise EngineError("spine segments do not close the rotation")

        self._scene_by_id = {s.id: s for s in self._scenes}
        self._guards = {s.id: graph.guard_edges(s.id) for s in self._scenes}
        self._entries: dict[str, dict[Action, list[tuple[int, int]]]] = {}
        for scene in self._scenes:
            per_action: dict[Action, list[tuple[int, int]]] = {}
            for e in sorted(scene.entries, key=lambda e: e.age):
                n = e.hi if self.config.budget_rule == "max" else e.lo
                if n > 0:
                    per_action.setdefault(e.action, []).append((e.age, n))
            self._entries[scene.id] = per_action
        self._plots = {p.id: self._plot_info(p) for p in graph.plots()}

    def _host_scene(self, plot_id: str) -> NarrativeNode | None:
        for scene in self._scenes:
            for e in self._guards[scene.id].values():
                if e.dst == plot_id:
                    return scene
        return None

    def _plot_info(self, plot: NarrativeNode) -> _PlotInfo:
        host = self._host_scene(plot.id)
        if host is not None and host.entries:
            fold_age = max(e.age for e in host.entries)
        elif host is not None and host.age_label is not None:
            fold_age = host.age_label
        else:
            fold_age = 0
        pick = (lambda o: o.hi) if self.config.budget_rule == "max" else (lambda o: o.lo)
        clips = [(f"{plot.id}/other:{o.name}@{fold_age}", pick(o))
                 for o in plot.others if pick(o) > 0]
        if not clips:
            # a plot with no supporting character plays the protagonist's pause clip
            pause_n = self.graph.budgets.frames(fold_age, Action.PAUSE)
            if pause_n > 0:
                clips = [(f"{plot.id}/pause@{fold_age}", pause_n)]
        total = sum(n for _, n in clips)
        duration = total / self.config.cutscene_fps
        return _PlotInfo(tuple(clips), total, duration,
                         self.graph.rejoin_target(plot.id))

    # -- lifecycle ---------------------------------------------------------

    def init(self) -> EngineState:
        est = self._new_estimator()
        est.seed(0.0, 0.0, paused=True)
        stage = self._scenes[0]
        return EngineState(
            t=0.0, cumulative_deg=0.0, lap=0, stage_id=stage.id,
            age=self.graph.anchors.first_age, local_progress=0.0,
            mode="spine", plot_id=None, cutscene_t=0.0, buffer_deg=0.0,
            motion=Paused(0.0), est=self._dump_est(est),
            fired=(), fire_log=(), lap_marks=(),
        )

    def _new_estimator(self) -> MotionEstimator:
        return MotionEstimator(self.config.smoothing, self.config.pause_enter_deg_s,
                               self.config.pause_exit_deg_s, self.config.pause_dwell_s)

    @staticmethod
    def _dump_est(est: MotionEstimator) -> tuple:
        d = est.dump()
        return (d["t"], d["angle"], d["omega"], d["quiet_since"],
                d["paused"], d["paused_since"])

    def _load_est(self, data: tuple) -> MotionEstimator:
        est = self._new_estimator()
        est.load({"t": data[0], "angle": data[1], "omega": data[2],
                  "quiet_since": data[3], "paused": data[4], "paused_since": data[5]})
        return est

    # -- stepping ------------------------------------------------------------

    def step(self, state: EngineState,
             sample: BehaviorSample) -> tuple[EngineState, list[CameraDirective]]:
        if sample.t <= state.t:
            raise NonMonotonicTimeError(
                f"sample at t={sample.t} not after t={state.t}")
        est = self._load_est(state.est)
        prev_angle = state.est[1]
        delta = shortest_delta(sample.screen_angle, prev_angle)
        motion = est.update(sample.t, sample.screen_angle)
        dt = sample.t - state.t

        w = _Work(self, state, sample, motion)

        if state.mode == "cutscene":
            w.buffer += delta
            w.cutscene_t += dt
            info = self._plots[w.plot_id]
            if info.duration_s > 0 and w.cutscene_t < info.duration_s:
                w.emit_cutscene(w.cutscene_t / info.duration_s)
            else:
                if info.duration_s > 0:
                    w.emit_cutscene(1.0)
                w.rejoin()
        else:
            w.apply_rotation(delta)
            if w.mode == "spine":
                w.maybe_fire_stop()
        if w.mode == "spine":
            w.emit_spine()

        new_state = EngineState(
            t=sample.t,
            cumulative_deg=w.cum,
            lap=w.lap,
            stage_id=w.stage.id,
            age=age_at(self.graph.anchors, w.cum),
            local_progress=w.progress(),
            mode=w.mode,
            plot_id=w.plot_id,
            cutscene_t=w.cutscene_t,
            buffer_deg=w.buffer,
            motion=motion,
            est=self._dump_est(est),
            fired=tuple(sorted(w.fired)),
            fire_log=tuple(w.fire_log),
            lap_marks=tuple(w.lap_marks),
            prev_clip=w.prev_clip,
            prev_movement=w.prev_movement,
            prev_form=w.prev_form,
            prev_user_moving=w.prev_user_moving,
            pending_guard=w.pending_guard,
        )
        return new_state, w.directives

    def enter_cutscene(self, state: EngineState, plot_id: str) -> EngineState:
        """Switch to a branch cutscene without emitting directives."""
        if plot_id not in self._plots:
            raise UnknownPlotError(plot_id)
        return replace(state, mode="cutscene", plot_id=plot_id,
                       cutscene_t=0.0, buffer_deg=0.0)

    # -- snapshots -----------------------------------------------------------

    def snapshot(self, state: EngineState) -> dict:
        """Lossless JSON-safe record; restore() rebuilds an equal state."""
        if isinstance(state.motion, Moving):
            motion = {"kind": "moving", "omega": state.motion.omega_deg_s}
        else:
            motion = {"kind": "paused", "since": state.motion.since}
        return {
            "t": state.t, "cumulative_deg": state.cumulative_deg,
            "lap": state.lap, "stage_id": state.stage_id, "age": state.age,
            "local_progress": state.local_progress, "mode": state.mode,
            "plot_id": state.plot_id, "cutscene_t": state.cutscene_t,
            "buffer_deg": state.buffer_deg, "motion": motion,
            "est": list(state.est), "fired": list(state.fired),
            "fire_log": [[f.lap, f.stage, f.guard, f.plot, f.t]
                         for f in state.fire_log],
            "lap_marks": list(state.lap_marks),
            "prev_clip": state.prev_clip, "prev_movement": state.prev_movement,
            "prev_form": state.prev_form,
            "prev_user_moving": state.prev_user_moving,
            "pending_guard": state.pending_guard,
        }

    def restore(self, snap: dict) -> EngineState:
        m = snap["motion"]
        motion: MotionState = (Moving(m["omega"]) if m["kind"] == "moving"
                               else Paused(m["since"]))
        return EngineState(
            t=snap["t"], cumulative_deg=snap["cumulative_deg"], lap=snap["lap"],
            stage_id=snap["stage_id"], age=snap["age"],
            local_progress=snap["local_progress"], mode=snap["mode"],
            plot_id=snap["plot_id"], cutscene_t=snap["cutscene_t"],
            buffer_deg=snap["buffer_deg"], motion=motion,
            est=tuple(snap["est"]), fired=tuple(snap["fired"]),
            fire_log=tuple(FireEvent(*f) for f in snap["fire_log"]),
            lap_marks=tuple(snap["lap_marks"]),
            prev_clip=snap["prev_clip"], prev_movement=snap["prev_movement"],
            prev_form=snap["prev_form"],
            prev_user_moving=snap["prev_user_moving"],
            pending_guard=snap["pending_guard"],
        )

    # -- clip budgets (exposed for frame-safety checks) ---------------------

    def clip_budget(self, clip: str) -> int:
        """Frame count budgeted for a clip id as emitted in directives."""
        _node_id, rest = clip.split("/", 1)
        kind, _, age_s = rest.partition("@")
        age = int(age_s)
        if kind.startswith("other:"):
            return self.graph.budgets.frames(age, Action.OTHER, kind[6:])
        return self.graph.budgets.frames(age, Action(kind))


class _Work:
    """Mutable scratch for one step; collapsed back into EngineState at the end."""

    def __init__(self, engine: Engine, state: EngineState,
                 sample: BehaviorSample, motion: MotionState):
        self.e = engine
        self.sample = sample
        self.motion = motion
        self.moving_now = isinstance(motion, Moving)
        self.cum = state.cumulative_deg
        self.lap = state.lap
        self.stage = engine._scene_by_id[state.stage_id]
        self.mode = state.mode
        self.plot_id = state.plot_id
        self.cutscene_t = state.cutscene_t
        self.buffer = state.buffer_deg
        self.fired = set(state.fired)
        self.fire_log = list(state.fire_log)
        self.lap_marks = list(state.lap_marks)
        self.prev_clip = state.prev_clip
        self.prev_movement = state.prev_movement
        self.prev_form = state.prev_form
        self.prev_user_moving = state.prev_user_moving
        self.pending_guard: str | None = None
        self.directives: list[CameraDirective] = []

    # geometry helpers

    def _stage_floor(self) -> float:
        return self.lap * 360.0 + self.stage.segment.start_deg

    def _stage_ceil(self) -> float:
        return self.lap * 360.0 + self.stage.segment.end_deg

    def progress(self) -> float:
        return self.stage.segment.progress(self.cum - self.lap * 360.0)

    # rotation

    def apply_rotation(self, delta: float) -> None:
        if delta < 0:
            if self.e.config.reverse_policy is ReversePolicy.SCRUB:
                self.cum = max(self.cum + delta, self._stage_floor())
            return
        remaining = delta
        entered_midway: str | None = None
        while remaining > 0:
            room = self._stage_ceil() - self.cum
            if remaining < room - _BOUNDARY_EPS:
                self.cum += remaining
                break
            # about to cross this stage's end boundary
            if entered_midway == self.stage.id:
                self.emit_spine(progress_override=0.0)
            self.cum = self._stage_ceil()
            remaining = max(remaining - room, 0.0)
            crossing_lap = self.stage.segment.end_deg == 360.0
            stage_id = self.stage.id
            keep = None
            if stage_id not in self.fired:
                self.fired.add(stage_id)
                keep = self.e._guards[stage_id].get(Guard.KEEP_WALKING)
            fired_lap = self.lap
            if crossing_lap:
                self.lap_marks.append(self.sample.t)
                self.lap += 1
                self.fired.clear()
            self.stage = self.e.graph.scene_at(self.cum % 360.0)
            if keep is not None:
                self.fire_log.append(FireEvent(fired_lap, stage_id,
                                               Guard.KEEP_WALKING.value,
                                               keep.dst, self.sample.t))
                self.pending_guard = Guard.KEEP_WALKING.value
                self._enter_cutscene(keep.dst, buffered=remaining)
                return
            entered_midway = self.stage.id

    # branch firing

    def maybe_fire_stop(self) -> None:
        if not isinstance(self.motion, Paused):
            return
        if self.stage.id in self.fired:
            return
        if self.progress() < self.e.config.trigger_window:
            return
        stop = self.e._guards[self.stage.id].get(Guard.STOP_WALKING)
        if stop is None:
            return
        self.fired.add(self.stage.id)
        self.fire_log.append(FireEvent(self.lap, self.stage.id,
                                       Guard.STOP_WALKING.value, stop.dst,
                                       self.sample.t))
        self.pending_guard = Guard.STOP_WALKING.value
        self._enter_cutscene(stop.dst, buffered=0.0)

    def _enter_cutscene(self, plot_id: str, buffered: float) -> None:
        self.mode = "cutscene"
        self.plot_id = plot_id
        self.cutscene_t = 0.0
        self.buffer = buffered
        info = self.e._plots[plot_id]
        if info.duration_s <= 0:
            self.rejoin()
        else:
            self.emit_cutscene(0.0)

    def rejoin(self) -> None:
        """Resume the spine at the current angle plus any buffered rotation."""
        self.mode = "spine"
        self.plot_id = None
        self.cutscene_t = 0.0
        pending, self.buffer = self.buffer, 0.0
        self.apply_rotation(pending)

    # directive emission

    def _emit(self, clip: str, frame: int, in_cutscene: bool) -> None:
        cfg = self.e.config
        movement, form = map_motion_to_camera(self.motion, in_cutscene)
        shot = map_distance_to_shot(self.sample.user_distance, cfg.shot_bands)
        angle = map_pose_to_angle(self.sample.user_bearing, self.sample.user_facing,
                                  cfg.frontal_max_deg, cfg.side_max_deg)
        clue = bind_clue(self.sample.user_id, self.e.graph.clue)
        d = CameraDirective(
            t=self.sample.t, clip=clip, frame=frame, shot=shot, angle=angle,
            movement=movement, form=form, clue=clue, transition="None")
        if self.prev_clip is not None and self.prev_clip != clip:
            prev = replace(d, clip=self.prev_clip,
                           movement=CameraMovement(MovementKind(self.prev_movement)),
                           form=MotionForm.from_wire(self.prev_form))
            tag = montage_transition(prev, d, self.prev_user_moving, self.moving_now)
            if tag != "None":
                d = replace(d, transition=tag)
        self.directives.append(d)
        self.prev_clip = clip
        self.prev_movement = movement.kind.value
        self.prev_form = form.wire
        self.prev_user_moving = self.moving_now

    def emit_spine(self, progress_override: float | None = None) -> None:
        action = Action.PAUSE if isinstance(self.motion, Paused) else Action.WALK
        picked = self._pick_entry(action)
        if picked is None:
            return  # zero budget: no active content this step
        age_key, n = picked
        progress = self.progress() if progress_override is None else progress_override
        self._emit(f"{self.stage.id}/{action.value}@{age_key}",
                   _frame_index(progress, n), in_cutscene=False)

    def _pick_entry(self, action: Action) -> tuple[int, int] | None:
        """Nearest declared budget age for the current age; ties go lower."""
        candidates = self.e._entries[self.stage.id].get(action)
        if not candidates:
            return None
        age_now = age_at(self.e.graph.anchors, self.cum)
        return min(candidates, key=lambda c: (abs(c[0] - age_now), c[0]))

    def emit_cutscene(self, progress: float) -> None:
        info = self.e._plots[self.plot_id]
        if info.total_frames <= 0:
            return
        global_frame = _frame_index(progress, info.total_frames)
        offset = 0
        for clip, n in info.clips:
            if global_frame < offset + n:
                self._emit(clip, global_frame - offset, in_cutscene=True)
                return
            offset += n
