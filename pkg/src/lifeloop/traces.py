"""Sensor trace generation and the line-oriented .trace file format.

A trace is a fixed-rate stream of behavior samples. Generation is seeded and
reproducible; files are diffable text with `#key=value` headers so golden
traces can live in version control.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass

from .behavior import BehaviorSample


@dataclass(frozen=True)
class Trace:
    rate_hz: float
    samples: tuple[BehaviorSample, ...]
    script_hash: str = "-"
    config_hash: str = "-"

    def __post_init__(self) -> None:
        ts = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample times must be strictly increasing")
        if len(ts) >= 2 and self.rate_hz > 0:
            gap = statistics.median(b - a for a, b in zip(ts, ts[1:]))
            nominal = 1.0 / self.rate_hz
            if abs(gap - nominal) > 0.1 * nominal:
                raise ValueError(
                    f"header rate {self.rate_hz} Hz does not match median gap {gap:.4f} s")

    @property
    def duration_s(self) -> float:
        return self.samples[-1].t if self.samples else 0.0


# -- profiles -------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantSpeed:
    deg_s: float


@dataclass(frozen=True)
class PiecewiseSpeed:
    segments: tuple[tuple[float, float], ...]  # (duration_s, deg_s)


@dataclass(frozen=True)
class PausePattern:
    """Rotate at a base speed, holding still at given cumulative angles."""

    base_deg_s: float
    pauses: tuple[tuple[float, float], ...]  # (at_cumulative_deg, duration_s)


@dataclass(frozen=True)
class Noise:
    base_deg_s: float
    amplitude_deg: float


TraceProfile = ConstantSpeed | PiecewiseSpeed | PausePattern | Noise


def _build_timeline(
    profile: TraceProfile, duration_s: float | None
) -> tuple[list[tuple[float, float, float]], float]:
    """Piecewise-linear angle timeline: knots (t_start, angle_at_start, deg_s) + end time."""
    if isinstance(profile, (ConstantSpeed, Noise)):
        if duration_s is None:
            raise ValueError("this profile needs an explicit duration")
        speed = profile.deg_s if isinstance(profile, ConstantSpeed) else profile.base_deg_s
        return [(0.0, 0.0, speed)], duration_s
    if isinstance(profile, PiecewiseSpeed):
        knots = []
        t = angle = 0.0
        for dur, speed in profile.segments:
            knots.append((t, angle, speed))
            t += dur
            angle += speed * dur
        return knots, t
    # PausePattern: duration_s is the moving-time budget; holds extend the timeline
    if duration_s is None:
        raise ValueError("pause pattern needs an explicit moving duration")
    if profile.base_deg_s <= 0:
        raise ValueError("pause pattern needs a positive base speed")
    knots = []
    t = angle = 0.0
    moving_left = duration_s
    for at_deg, hold_s in sorted(profile.pauses):
        travel = (at_deg - angle) / profile.base_deg_s
        if travel < 0 or travel > moving_left:
            continue
        knots.append((t, angle, profile.base_deg_s))
        t += travel
        moving_left -= travel
        angle = at_deg
        knots.append((t, angle, 0.0))
        t += hold_s
    knots.append((t, angle, profile.base_deg_s))
    return knots, t + moving_left


def _angle_at(knots: list[tuple[float, float, float]], t: float) -> float:
    base_t, base_a, slope = knots[0]
    for kt, ka, ks in knots:
        if kt <= t:
            base_t, base_a, slope = kt, ka, ks
        else:
            break
    return base_a + slope * (t - base_t)


def gen_trace(profile: TraceProfile, duration_s: float | None = None,
              rate_hz: float = 20.0, seed: int = 0) -> Trace:
    """Deterministic trace for a motion profile; same seed, same samples."""
    if rate_hz <= 0:
        raise ValueError("rate must be positive")
    knots, total = _build_timeline(profile, duration_s)
    n = round(total * rate_hz)
    rng = random.Random(seed)
    samples = []
    for k in range(1, n + 1):
        t = k / rate_hz
        angle = _angle_at(knots, t)
        if isinstance(profile, Noise):
            angle += rng.uniform(-profile.amplitude_deg, profile.amplitude_deg)
        samples.append(BehaviorSample(t=t, screen_angle=angle % 360.0))
    return Trace(rate_hz=rate_hz, samples=tuple(samples))


# -- file format ------------------------------------------------------------------


def _fmt_opt(x: float | None) -> str:
    return "" if x is None else f"{x:.3f}"


def trace_to_text(trace: Trace) -> str:
    lines = [
        f"#rate_hz={trace.rate_hz:.3f}",
        f"#script_hash={trace.script_hash}",
        f"#config_hash={trace.config_hash}",
    ]
    for s in trace.samples:
        base = f"{s.t:.3f},{s.screen_angle:.3f}"
        if (s.user_distance is None and s.user_bearing is None
                and s.user_facing is None and s.user_id is None):
            lines.append(base)
        else:
            user = s.user_id or ""
            if "," in user or "\n" in user:
                raise ValueError("user_id may not contain commas or newlines")
            lines.append(",".join([base, _fmt_opt(s.user_distance),
                                   _fmt_opt(s.user_bearing), _fmt_opt(s.user_facing),
                                   user]))
    return "\n".join(lines) + "\n"


def trace_from_text(text: str) -> Trace:
    rate = 0.0
    script_hash = config_hash = "-"
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key == "rate_hz":
                rate = float(value)
            elif key == "script_hash":
                script_hash = value
            elif key == "config_hash":
                config_hash = value
            continue
        parts = line.split(",")
        if len(parts) not in (2, 6):
            raise ValueError(f"line {lineno}: expected 2 or 6 fields, got {len(parts)}")
        t, angle = float(parts[0]), float(parts[1])
        dist = bearing = facing = None
        user_id = None
        if len(parts) == 6:
            dist = float(parts[2]) if parts[2] else None
            bearing = float(parts[3]) if parts[3] else None
            facing = float(parts[4]) if parts[4] else None
            user_id = parts[5] or None
        samples.append(BehaviorSample(t=t, screen_angle=angle,
                                      user_distance=dist, user_bearing=bearing,
                                      user_facing=facing, user_id=user_id))
    return Trace(rate_hz=rate, samples=tuple(samples),
                 script_hash=script_hash, config_hash=config_hash)


def write_trace(trace: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace_to_text(trace))


def read_trace(path: str) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        return trace_from_text(fh.read())
