"""Line protocol for the microcontroller angle feed.

Wire format, one reading per line: ``A,<angle_centidegrees:int>,<millis:uint>``
terminated by LF (CRLF tolerated). Parsing is total: every input yields a
sample or a typed error, never an unexpected crash.
"""

from __future__ import annotations

import math
import re

from .behavior import BehaviorSample


class SerialLineError(ValueError):
    pass


class MalformedLineError(SerialLineError):
    pass


class AngleOutOfRangeError(SerialLineError):
    """Angle failed to normalize to [0, 360); unreachable for integer input,
    kept so callers can handle the whole error family uniformly."""


_LINE_RE = re.compile(r"\AA,(-?\d+),(\d+)\r?\n?\Z")


def parse_serial_line(line: str | bytes) -> BehaviorSample:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLineError(f"undecodable bytes: {exc}") from None
    m = _LINE_RE.match(line)
    if not m:
        raise MalformedLineError(f"bad serial line {line!r}")
    angle = (int(m.group(1)) / 100.0) % 360.0
    if not (math.isfinite(angle) and 0.0 <= angle < 360.0):
        raise AngleOutOfRangeError(f"angle {m.group(1)} centidegrees")
    return BehaviorSample(t=int(m.group(2)) / 1000.0, screen_angle=angle)
