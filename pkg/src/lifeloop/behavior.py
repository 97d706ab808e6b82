"""Map streamed visitor behavior onto camera language.

Five observed factors (distance, identity, location, direction, movement)
quantize into shot width, viewing angle, camera movement and the story clue.
Motion is estimated from the rotation angle stream with pause hysteresis so
a deliberate stop gates branch plots without chattering.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum

from .story import ClueBinding, ClueSpec


class NegativeDistanceError(ValueError):
    pass


class InsufficientSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class BehaviorSample:
    """One timestamped observation; only time and screen angle are mandatory."""

    t: float
    screen_angle: float
    user_distance: float | None = None
    user_bearing: float | None = None
    user_facing: float | None = None
    user_id: str | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError("sample time must be finite")
        if not math.isfinite(self.screen_angle):
            raise ValueError("screen angle must be finite")
        object.__setattr__(self, "screen_angle", self.screen_angle % 360.0)


class CameraShot(Enum):
    CLOSE_UP = "CloseUp"
    MEDIUM_SHOT = "MediumShot"
    FULL_SHOT = "FullShot"
    LONG_SHOT = "LongShot"

    @property
    def width_rank(self) -> int:
        return {"CloseUp": 0, "MediumShot": 1, "FullShot": 2, "LongShot": 3}[self.value]

    @property
    def narrative_role(self) -> str:
        if self is CameraShot.CLOSE_UP:
            return "DetailShot"
        if self is CameraShot.MEDIUM_SHOT:
            return "NarrativeShot"
        return "EnvironmentShot"


class VerticalAngle(Enum):
    EYE_LEVEL = "EyeLevel"
    LOW_ANGLE = "LowAngle"
    HIGH_ANGLE = "HighAngle"


class HorizontalAngle(Enum):
    FRONTAL = "Frontal"
    SIDE = "Side"
    CANTED = "Canted"


@dataclass(frozen=True)
class CameraAngle:
    vertical: VerticalAngle
    horizontal: HorizontalAngle


class MovementKind(Enum):
    ZOOM = "Zoom"
    PAN = "Pan"
    FOLLOW = "Follow"
    TILT = "Tilt"
    DOLLY = "Dolly"
    TRUCK = "Truck"
    PEDESTAL = "Pedestal"
    RACK_FOCUS = "RackFocus"
    STATIC = "Static"


@dataclass(frozen=True)
class CameraMovement:
    kind: MovementKind
    speed_deg_s: float = 0.0


class MimicryMode(Enum):
    OBJECT_STATIONARY = "ObjectStationary"
    BACKGROUND_SYNCHRONOUS = "BackgroundSynchronous"
    LINE_OF_SIGHT_MIMIC = "LineOfSightMimic"


@dataclass(frozen=True)
class MotionForm:
    """Either camera mimicry of the user/subject, or spontaneous camera motion."""

    mimicry: MimicryMode | None  # None means spontaneity

    @property
    def is_mimicry(self) -> bool:
        return self.mimicry is not None

    @property
    def wire(self) -> str:
        if self.mimicry is None:
            return "Spontaneity"
        return f"Mimicry:{self.mimicry.value}"

    @classmethod
    def from_wire(cls, wire: str) -> "MotionForm":
        if wire == "Spontaneity":
            return cls(None)
        return cls(MimicryMode(wire.removeprefix("Mimicry:")))


SPONTANEITY = MotionForm(None)


@dataclass(frozen=True)
class Moving:
    omega_deg_s: float


@dataclass(frozen=True)
class Paused:
    since: float


MotionState = Moving | Paused


def shortest_delta(angle: float, prev: float) -> float:
    """Signed degrees from prev to angle taking the short way around the seam."""
    return (angle - prev + 180.0) % 360.0 - 180.0


# -- factor mappings ------------------------------------------------------------

DEFAULT_SHOT_BANDS = (0.45, 1.2, 3.6)  # proxemic zone edges in meters


def map_distance_to_shot(
    distance_m: float | None,
    bands: tuple[float, float, float] = DEFAULT_SHOT_BANDS,
) -> CameraShot:
    """Closer visitor, tighter shot. Missing distance falls back to medium."""
    if distance_m is None:
        return CameraShot.MEDIUM_SHOT
    if distance_m < 0:
        raise NegativeDistanceError(f"distance {distance_m} m")
    close, medium, full = bands
    if distance_m < close:
        return CameraShot.CLOSE_UP
    if distance_m < medium:
        return CameraShot.MEDIUM_SHOT
    if distance_m < full:
        return CameraShot.FULL_SHOT
    return CameraShot.LONG_SHOT


def map_pose_to_angle(
    bearing_deg: float | None,
    facing_deg: float | None = None,
    frontal_max_deg: float = 30.0,
    side_max_deg: float = 75.0,
) -> CameraAngle:
    """Viewer bearing around the screen picks the horizontal viewing angle.

    The display sits at one height, so the vertical angle stays at eye level;
    facing is accepted for symmetry but does not change the angle.
    """
    del facing_deg
    if bearing_deg is None:
        return CameraAngle(VerticalAngle.EYE_LEVEL, HorizontalAngle.FRONTAL)
    off = abs(shortest_delta(bearing_deg % 360.0, 0.0))
    if off <= frontal_max_deg:
        horizontal = HorizontalAngle.FRONTAL
    elif off <= side_max_deg:
        horizontal = HorizontalAngle.SIDE
    else:
        horizontal = HorizontalAngle.CANTED
    return CameraAngle(VerticalAngle.EYE_LEVEL, horizontal)


def map_motion_to_camera(
    state: MotionState, in_branch_cutscene: bool
) -> tuple[CameraMovement, MotionForm]:
    """Rotation drives a follow shot; stopping parks the camera; cutscenes run free."""
    if in_branch_cutscene:
        return CameraMovement(MovementKind.STATIC), SPONTANEITY
    if isinstance(state, Moving):
        return (CameraMovement(MovementKind.FOLLOW, speed_deg_s=abs(state.omega_deg_s)),
                MotionForm(MimicryMode.BACKGROUND_SYNCHRONOUS))
    return CameraMovement(MovementKind.STATIC), MotionForm(MimicryMode.OBJECT_STATIONARY)


def bind_clue(user_id: str | None, spec: ClueSpec) -> str:
    """Stable clue entity id for a visitor; anonymous visitors share the default."""
    if spec.binding is ClueBinding.FIXED or user_id is None:
        return spec.entity
    digest = hashlib.sha256(user_id.encode("utf-8")).hexdigest()[:8]
    return f"{spec.entity}-{digest}"


# -- motion estimation ------------------------------------------------------------


class MotionEstimator:
    """Streaming angular-velocity estimate with pause detection.

    Velocity is an exponentially smoothed finite difference of the unwrapped
    angle. A pause is declared after the smoothed speed stays under the entry
    threshold for the dwell time, and released only above the exit threshold
    (hysteresis, exit > entry).
    """

    def __init__(
        self,
        smoothing: float = 0.3,
        pause_enter_deg_s: float = 2.0,
        pause_exit_deg_s: float = 3.0,
        pause_dwell_s: float = 1.0,
    ) -> None:
        if not (0 < smoothing <= 1):
            raise ValueError("smoothing factor must be in (0, 1]")
        self.smoothing = smoothing
        self.pause_enter = pause_enter_deg_s
        self.pause_exit = pause_exit_deg_s
        self.pause_dwell = pause_dwell_s
        self._t: float | None = None
        self._angle = 0.0
        self._omega: float | None = None
        self._quiet_since: float | None = None
        self._paused = False
        self._paused_since = 0.0

    def seed(self, t: float, angle: float, paused: bool = False) -> None:
        """Prime the stream at a known rest position (used by the engine)."""
        self._t = t
        self._angle = angle % 360.0
        self._omega = None
        self._quiet_since = t if paused else None
        self._paused = paused
        self._paused_since = t

    def state(self) -> MotionState:
        if self._paused:
            return Paused(self._paused_since)
        return Moving(self._omega if self._omega is not None else 0.0)

    def update(self, t: float, angle: float) -> MotionState:
        angle = angle % 360.0
        if self._t is None:
            self.seed(t, angle)
            return self.state()
        dt = t - self._t
        if dt <= 0:
            raise ValueError("samples must have strictly increasing time")
        raw = shortest_delta(angle, self._angle) / dt
        if self._omega is None:
            self._omega = raw
        else:
            self._omega = self.smoothing * raw + (1 - self.smoothing) * self._omega
        self._t = t
        self._angle = angle

        speed = abs(self._omega)
        if self._paused:
            if speed >= self.pause_exit:
                self._paused = False
                self._quiet_since = None
        else:
            if speed < self.pause_enter:
                if self._quiet_since is None:
                    self._quiet_since = t
                if t - self._quiet_since >= self.pause_dwell:
                    self._paused = True
                    self._paused_since = self._quiet_since
            else:
                self._quiet_since = None
        return self.state()

    # snapshot plumbing for the engine

    def dump(self) -> dict:
        return {
            "t": self._t, "angle": self._angle, "omega": self._omega,
            "quiet_since": self._quiet_since, "paused": self._paused,
            "paused_since": self._paused_since,
        }

    def load(self, data: dict) -> None:
        self._t = data["t"]
        self._angle = data["angle"]
        self._omega = data["omega"]
        self._quiet_since = data["quiet_since"]
        self._paused = data["paused"]
        self._paused_since = data["paused_since"]


def estimate_motion(window: list[BehaviorSample], **kwargs) -> MotionState:
    """Fold a sample window through a fresh estimator and return the end state."""
    if len(window) < 2:
        raise InsufficientSamplesError("need at least two samples")
    est = MotionEstimator(**kwargs)
    state: MotionState = Moving(0.0)
    for s in window:
        state = est.update(s.t, s.screen_angle)
    return state
