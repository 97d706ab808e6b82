import json
import random

import pytest

from lifeloop import dsl
from lifeloop.behavior import (
    BehaviorSample,
    CameraAngle,
    CameraMovement,
    CameraShot,
    HorizontalAngle,
    MimicryMode,
    MotionForm,
    MovementKind,
    Moving,
    Paused,
    VerticalAngle,
)
from lifeloop.engine import (
    CameraDirective,
    Engine,
    EngineConfig,
    NoSceneAtZeroError,
    NonMonotonicTimeError,
    ReversePolicy,
    UnknownPlotError,
    montage_transition,
    schedule_frame,
)
from lifeloop.story import Action, ZeroBudgetError
from lifeloop.traces import ConstantSpeed, Noise, PausePattern, PiecewiseSpeed, gen_trace


def run(engine, samples):
    """Fold samples through the engine collecting (state, directives) pairs."""
    state = engine.init()
    steps = []
    for s in samples:
        state, ds = engine.step(state, s)
        steps.append((state, ds))
    return state, steps


def all_directives(steps):
    return [d for _, ds in steps for d in ds]


def stage_sequence(steps):
    seq = []
    for state, _ in steps:
        if not seq or seq[-1] != state.stage_id:
            seq.append(state.stage_id)
    return seq


# -- init -------------------------------------------------------------------------


def test_init_starts_at_infancy_age_one(canonical_engine):
    state = canonical_engine.init()
    assert state.stage_id == "infancy"
    assert state.age == pytest.approx(1.0)
    assert state.cumulative_deg == 0.0
    assert state.lap == 0
    assert state.mode == "spine"
    assert state.motion == Paused(0.0)


def test_init_is_deterministic(canonical_engine):
    assert canonical_engine.init() == canonical_engine.init()


def test_graph_without_scene_at_zero_is_rejected():
    text = dsl.CANONICAL_SCRIPT.replace("segment 0 90", "segment 5 90", 1)
    graph = dsl.compile_source(text).graph
    assert graph is not None
    with pytest.raises(NoSceneAtZeroError):
        Engine(graph)


def test_non_monotonic_sample_rejected(canonical_engine):
    state = canonical_engine.init()
    state, _ = canonical_engine.step(state, BehaviorSample(0.05, 0.45))
    with pytest.raises(NonMonotonicTimeError):
        canonical_engine.step(state, BehaviorSample(0.05, 0.9))


# -- stepping through a lap ---------------------------------------------------------


def test_constant_push_walks_the_four_stages(canonical_graph):
    engine = Engine(canonical_graph)
    trace = gen_trace(ConstantSpeed(9.0), 40.0, 20.0)
    state, steps = run(engine, trace.samples)
    seq = stage_sequence(steps)
    assert seq[:4] == ["infancy", "juvenile", "youth", "middle_old"]
    assert state.lap_marks == (40.0,)
    assert [f.guard for f in state.fire_log] == ["keep_walking"] * 4
    assert [f.plot for f in state.fire_log] == [
        "catch_butterfly", "walk_with_classmate", "chase_boy", "become_daughter"]


def test_zero_motion_freezes_the_frame(canonical_engine):
    samples = [BehaviorSample(k * 0.05, 0.0) for k in range(1, 61)]
    _, steps = run(canonical_engine, samples)
    ds = all_directives(steps)
    assert len(ds) == 60
    assert {d.frame for d in ds} == {0}
    assert {d.clip for d in ds} == {"infancy/pause@1"}
    assert all(d.movement.kind is MovementKind.STATIC for d in ds)


def test_identical_streams_give_identical_directives(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((45.0, 3.0), (200.0, 2.0))), 40.0, 20.0)
    e1, e2 = Engine(canonical_graph), Engine(canonical_graph)
    s1, steps1 = run(e1, trace.samples)
    s2, steps2 = run(e2, trace.samples)
    assert s1 == s2
    assert [d.to_line() for d in all_directives(steps1)] == \
           [d.to_line() for d in all_directives(steps2)]


# -- branch resolution ---------------------------------------------------------------


def test_pause_mid_infancy_fires_stop_walking(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((45.0, 3.0),)), 40.0, 20.0)
    state, _ = run(Engine(canonical_graph), trace.samples)
    first = state.fire_log[0]
    assert (first.stage, first.guard, first.plot) == (
        "infancy", "stop_walking", "butterfly_flies_away")


def test_no_pause_fires_keep_walking(canonical_graph):
    trace = gen_trace(ConstantSpeed(9.0), 40.0, 20.0)
    state, _ = run(Engine(canonical_graph), trace.samples)
    first = state.fire_log[0]
    assert (first.stage, first.guard, first.plot) == (
        "infancy", "keep_walking", "catch_butterfly")


def test_pause_in_final_stage_is_inert(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((300.0, 5.0),)), 40.0, 20.0)
    state, _ = run(Engine(canonical_graph), trace.samples)
    fires = [(f.stage, f.guard) for f in state.fire_log]
    assert ("middle_old", "stop_walking") not in fires
    assert fires.count(("middle_old", "keep_walking")) == 1
    assert len(fires) == 4


def test_pause_before_trigger_window_does_not_fire(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((10.0, 3.0),)), 40.0, 20.0)
    state, _ = run(Engine(canonical_graph), trace.samples)
    first = state.fire_log[0]
    assert (first.stage, first.guard) == ("infancy", "keep_walking")


def test_at_most_one_fire_per_stage_per_lap(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((45.0, 3.0), (70.0, 3.0))), 40.0, 20.0)
    state, _ = run(Engine(canonical_graph), trace.samples)
    infancy = [f for f in state.fire_log if f.stage == "infancy" and f.lap == 0]
    assert len(infancy) == 1
    assert infancy[0].guard == "stop_walking"


def test_guards_reset_every_lap(canonical_graph):
    trace = gen_trace(ConstantSpeed(9.0), 80.0, 20.0)
    state, _ = run(Engine(canonical_graph), trace.samples)
    assert state.lap_marks == (40.0, 80.0)
    per_lap = {}
    for f in state.fire_log:
        per_lap.setdefault(f.lap, []).append(f.stage)
    assert per_lap[0] == per_lap[1] == [
        "infancy", "juvenile", "youth", "middle_old"]


# -- frame scheduling ----------------------------------------------------------------


def test_schedule_frame_examples(canonical_graph):
    b = canonical_graph.budgets
    assert schedule_frame(4, Action.WALK, 0.0, b) == 0
    assert schedule_frame(4, Action.WALK, 1.0, b) == 11
    assert schedule_frame(90, Action.AGE_CHANGE, 0.5, b) == 33


def test_schedule_frame_zero_budget(canonical_graph):
    with pytest.raises(ZeroBudgetError):
        schedule_frame(1, Action.WALK, 0.5, canonical_graph.budgets)


def test_frame_monotone_while_walking_a_stage(canonical_graph):
    trace = gen_trace(ConstantSpeed(9.0), 9.0, 20.0)  # stays inside infancy
    _, steps = run(Engine(canonical_graph), trace.samples)
    frames = [d.frame for d in all_directives(steps)]
    assert frames == sorted(frames)
    assert frames[-1] == 10  # 81 deg of 90 -> floor(0.9 * 12)


def test_budget_age_switches_inside_final_stage(canonical_graph):
    # age changes pick the nearer declared column: 30 until age 60, then 90
    trace = gen_trace(ConstantSpeed(9.0), 40.0, 20.0)
    _, steps = run(Engine(canonical_graph), trace.samples)
    pause_clips = {d.clip for d in all_directives(steps)
                   if d.clip.startswith("middle_old/pause")}
    assert pause_clips == set()  # never paused on this trace
    walk_clips = {d.clip for d in all_directives(steps)
                  if d.clip.startswith("middle_old/walk")}
    assert walk_clips == {"middle_old/walk@90"}  # walk only budgeted at 90


# -- cutscenes -----------------------------------------------------------------------


def test_stop_in_youth_plays_all_boy_b_frames(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((225.0, 5.0),)), 40.0, 20.0)
    state, steps = run(Engine(canonical_graph), trace.samples)
    cut = [d for d in all_directives(steps)
           if d.clip == "boy_b_appears/other:boy_b@18"]
    assert sorted({d.frame for d in cut}) == list(range(22))
    assert all(d.form.wire == "Spontaneity" for d in cut)
    assert all(d.movement.kind is MovementKind.STATIC for d in cut)


def test_cutscene_completion_rejoins_spine(canonical_graph):
    engine = Engine(canonical_graph)
    trace = gen_trace(PausePattern(9.0, ((45.0, 5.0),)), 40.0, 20.0)
    state = engine.init()
    modes = []
    for s in trace.samples:
        state, _ = engine.step(state, s)
        modes.append((state.t, state.mode, state.cumulative_deg))
    first_cut = next(i for i, m in enumerate(modes) if m[1] == "cutscene")
    after = next(m for m in modes[first_cut:] if m[1] == "spine")
    assert after[2] == pytest.approx(45.0, abs=0.5)  # rejoined where the user paused


def test_rotation_during_cutscene_buffers_and_applies_at_rejoin(canonical_graph):
    """Replay oracle: compare against a control trace that holds still during
    the cutscene; the rotated trace must come out ahead by exactly what it
    pushed while the cutscene played."""
    engine_a, engine_b = Engine(canonical_graph), Engine(canonical_graph)
    rate, speed = 20.0, 9.0
    fire_t = 10.0            # keep_walking fires when 90 deg is crossed
    duration = 31 / 12.0     # butterfly frames at the nominal cutscene rate
    hold_until = fire_t + duration + 0.2

    samples_a, samples_b = [], []
    angle_b = 90.0
    for k in range(1, round(25.0 * rate) + 1):
        t = k / rate
        samples_a.append(BehaviorSample(t, (speed * t) % 360.0))
        if t <= fire_t:
            angle_b = speed * t
        elif t > hold_until:
            angle_b += speed / rate
        samples_b.append(BehaviorSample(t, angle_b % 360.0))

    sa, steps_a = run(engine_a, samples_a)
    sb, steps_b = run(engine_b, samples_b)
    fire_a = next(f for f in sa.fire_log if f.guard == "keep_walking")
    fire_b = next(f for f in sb.fire_log if f.guard == "keep_walking")
    assert fire_a.t == fire_b.t == pytest.approx(fire_t, abs=0.051)

    def rejoin_index(steps):
        for i, (st, _) in enumerate(steps):
            if st.mode == "spine" and i and steps[i - 1][0].mode == "cutscene":
                return i
        raise AssertionError("no rejoin found")

    ia, ib = rejoin_index(steps_a), rejoin_index(steps_b)
    assert ia == ib
    cum_a, cum_b = steps_a[ia][0].cumulative_deg, steps_b[ib][0].cumulative_deg
    t_rejoin = steps_a[ia][0].t
    pushed_during_cutscene = speed * (t_rejoin - fire_a.t)
    assert cum_b == pytest.approx(90.0, abs=1e-6)
    assert cum_a - cum_b == pytest.approx(pushed_during_cutscene, abs=1e-6)


def test_empty_budget_plot_falls_back_to_pause_clip(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((45.0, 3.0),)), 40.0, 20.0)
    _, steps = run(Engine(canonical_graph), trace.samples)
    cut = [d for d in all_directives(steps)
           if d.clip.startswith("butterfly_flies_away/")]
    assert cut
    assert {d.clip for d in cut} == {"butterfly_flies_away/pause@4"}
    assert all(d.frame < 4 for d in cut)


def test_enter_cutscene_rejects_unknown_plot(canonical_engine):
    with pytest.raises(UnknownPlotError):
        canonical_engine.enter_cutscene(canonical_engine.init(), "no_such_plot")


def test_high_velocity_never_skips_a_stage(canonical_graph):
    trace = gen_trace(ConstantSpeed(50.0), 30.0, 20.0)
    state, steps = run(Engine(canonical_graph), trace.samples)
    seq = stage_sequence(steps)
    order = ["infancy", "juvenile", "youth", "middle_old"]
    for a, b in zip(seq, seq[1:]):
        assert order[(order.index(a) + 1) % 4] == b
    counts = {}
    for f in state.fire_log:
        counts[(f.lap, f.stage)] = counts.get((f.lap, f.stage), 0) + 1
    assert all(v == 1 for v in counts.values())


def test_pass_through_emits_intervening_stage(canonical_graph):
    engine = Engine(canonical_graph)
    state = engine.init()
    # creep into infancy, stop long enough to fire, then one huge push
    samples = [BehaviorSample(k * 0.05, min(45.0, 9.0 * k * 0.05)) for k in range(1, 201)]
    for s in samples:
        state, _ = engine.step(state, s)
    assert state.fire_log and state.fire_log[0].guard == "stop_walking"
    # wait out the stop cutscene
    t = state.t
    while state.mode == "cutscene":
        t += 0.05
        state, _ = engine.step(state, BehaviorSample(t, 45.0))
    state, ds = engine.step(state, BehaviorSample(t + 0.05, 185.0))
    clips = [d.clip for d in ds]
    assert clips[0].startswith("juvenile/walk")      # intervening stage shown
    assert clips[1].startswith("walk_with_classmate/")  # then its keep cutscene


# -- reverse rotation -----------------------------------------------------------------


def test_scrub_rewinds_frames_inside_the_stage(canonical_graph):
    engine = Engine(canonical_graph)
    state = engine.init()
    for k in range(1, 101):  # forward to 45 deg
        state, ds = engine.step(state, BehaviorSample(k * 0.05, 9.0 * k * 0.05))
    frame_fwd = ds[-1].frame
    state, _ = engine.step(state, BehaviorSample(5.05, 30.0))
    state, ds = engine.step(state, BehaviorSample(5.10, 30.0))
    assert state.cumulative_deg == pytest.approx(30.0)
    assert ds[-1].frame < frame_fwd


def test_scrub_never_crosses_stage_start_backwards(canonical_graph):
    engine = Engine(canonical_graph)
    state = engine.init()
    state, _ = engine.step(state, BehaviorSample(0.05, 10.0))
    state, _ = engine.step(state, BehaviorSample(0.10, 350.0))
    assert state.cumulative_deg == 0.0
    assert state.stage_id == "infancy"


def test_freeze_policy_ignores_reverse(canonical_graph):
    engine = Engine(canonical_graph, EngineConfig(reverse_policy=ReversePolicy.FREEZE))
    state = engine.init()
    state, _ = engine.step(state, BehaviorSample(0.05, 10.0))
    state, _ = engine.step(state, BehaviorSample(0.10, 5.0))
    assert state.cumulative_deg == pytest.approx(10.0)


# -- montage ---------------------------------------------------------------------------


def _directive(clip, movement, form, **kw):
    return CameraDirective(
        t=kw.get("t", 1.0), clip=clip, frame=0, shot=CameraShot.MEDIUM_SHOT,
        angle=CameraAngle(VerticalAngle.EYE_LEVEL, HorizontalAngle.FRONTAL),
        movement=movement, form=form, clue="shadow", transition="None")


def test_montage_same_clip_is_no_cut():
    d = _directive("a/walk@4", CameraMovement(MovementKind.FOLLOW, 9.0),
                   MotionForm(MimicryMode.BACKGROUND_SYNCHRONOUS))
    assert montage_transition(d, d, True, True) == "None"


def test_montage_shared_movement_match_cuts():
    a = _directive("a/walk@4", CameraMovement(MovementKind.FOLLOW, 9.0),
                   MotionForm(MimicryMode.BACKGROUND_SYNCHRONOUS))
    b = _directive("b/walk@8", CameraMovement(MovementKind.FOLLOW, 9.0),
                   MotionForm(MimicryMode.BACKGROUND_SYNCHRONOUS))
    assert montage_transition(a, b, True, True) == "MatchCut"


def test_montage_pause_into_cutscene_is_discontinuous():
    a = _directive("a/pause@4", CameraMovement(MovementKind.STATIC),
                   MotionForm(MimicryMode.OBJECT_STATIONARY))
    b = _directive("p/other:x@4", CameraMovement(MovementKind.STATIC),
                   MotionForm(None))
    assert montage_transition(a, b, False, False) == "None"


def test_montage_continuous_user_motion_match_cuts():
    a = _directive("a/walk@4", CameraMovement(MovementKind.FOLLOW, 9.0),
                   MotionForm(MimicryMode.BACKGROUND_SYNCHRONOUS))
    b = _directive("p/other:x@4", CameraMovement(MovementKind.STATIC),
                   MotionForm(None))
    assert montage_transition(a, b, True, True) == "MatchCut"


def test_lap_boundary_while_moving_match_cuts(canonical_graph):
    trace = gen_trace(ConstantSpeed(9.0), 40.0, 20.0)
    _, steps = run(Engine(canonical_graph), trace.samples)
    ds = all_directives(steps)
    boundary = next(d for d in ds if d.clip.startswith("become_daughter/"))
    assert boundary.transition == "MatchCut"


def test_stop_cutscene_entry_from_pause_has_no_match_cut(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((45.0, 3.0),)), 40.0, 20.0)
    _, steps = run(Engine(canonical_graph), trace.samples)
    ds = all_directives(steps)
    first_cut = next(d for d in ds if d.clip.startswith("butterfly_flies_away/"))
    assert first_cut.transition == "None"


def test_spine_to_spine_crossing_while_moving_match_cuts(canonical_graph):
    trace = gen_trace(PausePattern(9.0, ((45.0, 3.0),)), 40.0, 20.0)
    _, steps = run(Engine(canonical_graph), trace.samples)
    ds = all_directives(steps)
    first_juvenile = next(d for d in ds if d.clip.startswith("juvenile/walk"))
    assert first_juvenile.transition == "MatchCut"


# -- snapshots ---------------------------------------------------------------------


def test_snapshot_restore_split_replay(canonical_graph):
    engine = Engine(canonical_graph)
    trace = gen_trace(PausePattern(9.0, ((45.0, 3.0), (225.0, 4.0))), 40.0, 20.0)
    state, steps = run(engine, trace.samples)
    full = [d.to_line() for d in all_directives(steps)]

    for split in (1, 137, 400, len(trace.samples) - 1):
        st = engine.init()
        out = []
        for s in trace.samples[:split]:
            st, ds = engine.step(st, s)
            out.extend(ds)
        snap = json.loads(json.dumps(engine.snapshot(st)))
        st2 = engine.restore(snap)
        assert st2 == st
        for s in trace.samples[split:]:
            st2, ds = engine.step(st2, s)
            out.extend(ds)
        assert [d.to_line() for d in out] == full
        assert st2 == state


def test_snapshot_at_init_round_trips(canonical_engine):
    state = canonical_engine.init()
    assert canonical_engine.restore(canonical_engine.snapshot(state)) == state


def test_snapshot_is_pure(canonical_engine):
    state = canonical_engine.init()
    before = state
    canonical_engine.snapshot(state)
    assert state == before


# -- frame safety (mini fuzz; the full version lives in the acceptance suite) --------


def test_fuzzed_traces_respect_budgets(canonical_graph):
    engine = Engine(canonical_graph)
    rng = random.Random(1234)
    for _ in range(20):
        kind = rng.choice(["constant", "pauses", "noise", "piecewise"])
        if kind == "constant":
            profile = ConstantSpeed(rng.uniform(0, 60))
        elif kind == "pauses":
            profile = PausePattern(rng.uniform(3, 20), (
                (rng.uniform(0, 300), rng.uniform(0.5, 4)),))
        elif kind == "noise":
            profile = Noise(rng.uniform(0, 30), rng.uniform(0, 2))
        else:
            profile = PiecewiseSpeed(tuple(
                (rng.uniform(0.5, 3), rng.uniform(-20, 40)) for _ in range(4)))
        trace = gen_trace(profile, 8.0, 20.0, seed=rng.randrange(10**6))
        _, steps = run(engine, trace.samples)
        for d in all_directives(steps):
            budget = engine.clip_budget(d.clip)
            assert 0 <= d.frame < budget, (d.clip, d.frame, budget)
            if "/pause@" in d.clip:
                assert d.frame <= 3


def test_directive_line_round_trip(canonical_graph):
    trace = gen_trace(ConstantSpeed(9.0), 12.0, 20.0)
    _, steps = run(Engine(canonical_graph), trace.samples)
    for d in all_directives(steps)[:50]:
        assert CameraDirective.from_line(d.to_line()).to_line() == d.to_line()


def test_engine_config_round_trip():
    cfg = EngineConfig(pause_enter_deg_s=1.5, reverse_policy=ReversePolicy.FREEZE)
    assert EngineConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        EngineConfig(trigger_window=0.0)
    with pytest.raises(ValueError):
        EngineConfig(budget_rule="median")
